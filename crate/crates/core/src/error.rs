use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("{requested} qubits requested, at most {max} supported")]
    QubitLimit { requested: usize, max: usize },
    #[error("invalid Pauli label")]
    InvalidLabel,
    #[error("invalid lattice: {0}")]
    InvalidLattice(&'static str),
    #[error("{what} = {value} outside [{lo}, {hi}]")]
    OutOfRange { what: &'static str, value: f64, lo: f64, hi: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("exponent is not anti-Hermitian")]
    NotAntiHermitian,
    #[error("{what} on {n_qubits} qubits exceeds the cap of {cap}")]
    ResourceCap { what: &'static str, n_qubits: usize, cap: usize },
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
    #[error("eigensolver did not converge")]
    NoConvergence,
}

pub type Result<T> = core::result::Result<T, Error>;
