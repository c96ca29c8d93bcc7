//! Circuit intermediate representation.
//!
//! A circuit is a list of steps, each a list of factors in application
//! order: the first factor acts first on the state. Written operator
//! products read the other way round, so synthesis routines reverse them
//! when emitting.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::PauliSum;

/// Relative tolerance for the anti-Hermiticity check on `c * G`.
const UNITARITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GeneratorId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlockFamily {
    Zz,
    XxPlusYy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeneratorRole {
    /// The interpolated Hamiltonian `H(lambda)`.
    Hamiltonian,
    /// `C^(n)`; `n = 0` is `dH`.
    NestedCommutator(usize),
    /// A device-native analog Hamiltonian.
    Native(BlockFamily),
    /// Anything else, e.g. a full `H + H_CD` used as a reference.
    Other,
}

#[derive(Clone, Debug)]
pub struct Generator {
    pub label: String,
    pub role: GeneratorRole,
    pub op: PauliSum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn as_char(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }
}

/// `R_axis(angle) = exp(-i angle sigma_axis / 2)` on one site.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    pub site: usize,
    pub axis: Axis,
    pub angle: f64,
}

impl Rotation {
    pub fn new(site: usize, axis: Axis, angle: f64) -> Self {
        Rotation { site, axis, angle }
    }

    pub fn inverse(self) -> Self {
        Rotation { angle: -self.angle, ..self }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FactorKind {
    /// `exp(coeff * G)`.
    ExactExp { generator: GeneratorId, coeff: Complex64 },
    /// `exp(-i duration G)` for a native generator `G`.
    AnalogBlock { generator: GeneratorId, duration: f64 },
    /// Single-qubit rotations applied in list order.
    RotationLayer(Vec<Rotation>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    pub kind: FactorKind,
    /// Name of the rule that produced the factor.
    pub provenance: &'static str,
}

impl Factor {
    pub fn exact(generator: GeneratorId, coeff: Complex64, provenance: &'static str) -> Self {
        Factor { kind: FactorKind::ExactExp { generator, coeff }, provenance }
    }

    pub fn block(generator: GeneratorId, duration: f64, provenance: &'static str) -> Self {
        Factor { kind: FactorKind::AnalogBlock { generator, duration }, provenance }
    }

    pub fn rotations(rotations: Vec<Rotation>, provenance: &'static str) -> Self {
        Factor { kind: FactorKind::RotationLayer(rotations), provenance }
    }

    /// The factor whose unitary is the inverse of this one.
    pub fn inverse(&self) -> Self {
        let kind = match &self.kind {
            FactorKind::ExactExp { generator, coeff } => FactorKind::ExactExp { generator: *generator, coeff: -coeff },
            FactorKind::AnalogBlock { generator, duration } => {
                FactorKind::AnalogBlock { generator: *generator, duration: -duration }
            }
            FactorKind::RotationLayer(r) => FactorKind::RotationLayer(r.iter().rev().map(|x| x.inverse()).collect()),
        };
        Factor { kind, provenance: self.provenance }
    }
}

/// Reverse and invert a factor list.
pub fn inverse_sequence(factors: &[Factor]) -> Vec<Factor> {
    factors.iter().rev().map(Factor::inverse).collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    /// Exponentials of `H`.
    pub gamma_h: usize,
    /// Exponentials of `C^(n)`, keyed by `n`.
    pub gamma_c: BTreeMap<usize, usize>,
    pub analog_blocks: usize,
    pub rotation_layers: usize,
    pub other_exps: usize,
}

impl Counters {
    pub fn gamma_c(&self, n: usize) -> usize {
        self.gamma_c.get(&n).copied().unwrap_or(0)
    }

    pub fn total_factors(&self) -> usize {
        self.gamma_h + self.gamma_c.values().sum::<usize>() + self.analog_blocks + self.rotation_layers + self.other_exps
    }

    fn merge(&mut self, other: &Counters) {
        self.gamma_h += other.gamma_h;
        for (k, v) in &other.gamma_c {
            *self.gamma_c.entry(*k).or_insert(0) += v;
        }
        self.analog_blocks += other.analog_blocks;
        self.rotation_layers += other.rotation_layers;
        self.other_exps += other.other_exps;
    }
}

#[derive(Clone, Debug)]
pub struct CircuitIR {
    n_qubits: usize,
    generators: Vec<Generator>,
    steps: Vec<Vec<Factor>>,
    counters: Counters,
}

impl CircuitIR {
    pub fn new(n_qubits: usize) -> Self {
        CircuitIR { n_qubits, generators: Vec::new(), steps: Vec::new(), counters: Counters::default() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn add_generator(&mut self, label: impl Into<String>, role: GeneratorRole, op: PauliSum) -> Result<GeneratorId> {
        if op.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch { left: self.n_qubits, right: op.n_qubits() });
        }
        self.generators.push(Generator { label: label.into(), role, op });
        Ok(GeneratorId(self.generators.len() - 1))
    }

    pub fn generator(&self, id: GeneratorId) -> Option<&Generator> {
        self.generators.get(id.0)
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn steps(&self) -> &[Vec<Factor>] {
        &self.steps
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    /// Validate and append a step.
    pub fn push_step(&mut self, factors: Vec<Factor>) -> Result<()> {
        for f in &factors {
            self.validate(f)?;
        }
        let c = self.tally(&factors)?;
        self.counters.merge(&c);
        self.steps.push(factors);
        Ok(())
    }

    fn validate(&self, f: &Factor) -> Result<()> {
        match &f.kind {
            FactorKind::ExactExp { generator, coeff } => {
                let g = self.generator(*generator).ok_or(Error::InvalidArgument("unknown generator id"))?;
                check_antihermitian(&g.op, *coeff)
            }
            FactorKind::AnalogBlock { generator, duration } => {
                let g = self.generator(*generator).ok_or(Error::InvalidArgument("unknown generator id"))?;
                if !duration.is_finite() || !g.op.is_hermitian(UNITARITY_TOL * g.op.max_abs_coefficient().max(1.0)) {
                    return Err(Error::NotAntiHermitian);
                }
                Ok(())
            }
            FactorKind::RotationLayer(rs) => {
                if rs.iter().any(|r| r.site >= self.n_qubits || !r.angle.is_finite()) {
                    return Err(Error::InvalidArgument("rotation site out of range"));
                }
                Ok(())
            }
        }
    }

    /// Counters for a factor list against this circuit's generator table.
    pub fn tally(&self, factors: &[Factor]) -> Result<Counters> {
        let mut c = Counters::default();
        for f in factors {
            match &f.kind {
                FactorKind::ExactExp { generator, .. } => {
                    let g = self.generator(*generator).ok_or(Error::InvalidArgument("unknown generator id"))?;
                    match g.role {
                        GeneratorRole::Hamiltonian => c.gamma_h += 1,
                        GeneratorRole::NestedCommutator(n) => *c.gamma_c.entry(n).or_insert(0) += 1,
                        _ => c.other_exps += 1,
                    }
                }
                FactorKind::AnalogBlock { .. } => c.analog_blocks += 1,
                FactorKind::RotationLayer(_) => c.rotation_layers += 1,
            }
        }
        Ok(c)
    }

    /// Counters recomputed from the stored steps.
    pub fn recount(&self) -> Result<Counters> {
        let mut c = Counters::default();
        for s in &self.steps {
            c.merge(&self.tally(s)?);
        }
        Ok(c)
    }
}

/// `c * G` must be anti-Hermitian for `exp(c * G)` to be unitary.
pub fn check_antihermitian(g: &PauliSum, c: Complex64) -> Result<()> {
    let scale = g.max_abs_coefficient() * c.norm();
    let tol = UNITARITY_TOL * scale.max(1.0);
    if g.iter().all(|(_, a)| (a * c).re.abs() <= tol) {
        Ok(())
    } else {
        Err(Error::NotAntiHermitian)
    }
}
