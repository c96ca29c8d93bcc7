//! Lattices, model instances and the interpolation schedule.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::pauli::{PauliString, PauliSum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sublattice {
    A,
    B,
}

/// Nearest-neighbour bond, oriented so that `a` is on sublattice A.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
}

/// Open-boundary square lattice. Site `(r, c)` has index `r * cols + c`;
/// sublattice A holds the sites with `r + c` even.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSpec {
    pub rows: usize,
    pub cols: usize,
    pub edges: Vec<Edge>,
    pub sublattice: Vec<Sublattice>,
}

impl LatticeSpec {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidLattice("rows and cols must be positive"));
        }
        if rows * cols > crate::pauli::MAX_QUBITS {
            return Err(Error::QubitLimit { requested: rows * cols, max: crate::pauli::MAX_QUBITS });
        }
        let idx = |r: usize, c: usize| r * cols + c;
        let sublattice: Vec<Sublattice> = (0..rows * cols)
            .map(|s| if (s / cols + s % cols) % 2 == 0 { Sublattice::A } else { Sublattice::B })
            .collect();
        let orient = |u: usize, v: usize| {
            if sublattice[u] == Sublattice::A {
                Edge { a: u, b: v }
            } else {
                Edge { a: v, b: u }
            }
        };
        // row-major over sites, right bond before down bond
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push(orient(idx(r, c), idx(r, c + 1)));
                }
                if r + 1 < rows {
                    edges.push(orient(idx(r, c), idx(r + 1, c)));
                }
            }
        }
        Ok(LatticeSpec { rows, cols, edges, sublattice })
    }

    pub fn square(l: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::InvalidLattice("linear size must be at least 2"));
        }
        Self::new(l, l)
    }

    pub fn n_sites(&self) -> usize {
        self.rows * self.cols
    }

    pub fn sites_in(&self, s: Sublattice) -> impl Iterator<Item = usize> + '_ {
        self.sublattice.iter().enumerate().filter(move |(_, t)| **t == s).map(|(i, _)| i)
    }

    pub fn is_bipartite(&self) -> bool {
        self.edges
            .iter()
            .all(|e| self.sublattice[e.a] == Sublattice::A && self.sublattice[e.b] == Sublattice::B)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    IsingSpinGlass,
    Xxz,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Coupling scale `J`. Ising couplings are drawn from `[-|J|, |J|)`.
    pub j: f64,
    /// Field scale `h` (Ising only).
    pub h: f64,
    /// Anisotropy `Delta` (XXZ only).
    pub delta: f64,
    /// Draw XXZ couplings per edge from `[-|J|, |J|)` instead of using `J` on every bond.
    pub random_xxz_couplings: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams { j: 1.0, h: 1.0, delta: 0.5, random_xxz_couplings: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelInstance {
    pub kind: ModelKind,
    pub lattice: LatticeSpec,
    pub params: ModelParams,
    pub seed: u64,
    /// One coupling per entry of `lattice.edges`.
    pub couplings: Vec<f64>,
    /// One field per site; all zero for XXZ.
    pub fields: Vec<f64>,
    pub h0: PauliSum,
    pub h1: PauliSum,
}

/// Portable uniform stream: xoshiro256++ seeded through splitmix64, doubles
/// from the top 53 bits.
pub struct UniformStream(Xoshiro256PlusPlus);

impl UniformStream {
    pub fn new(seed: u64) -> Self {
        UniformStream(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    /// Uniform on `[0, 1)`.
    pub fn next_unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[-scale, scale)`.
    pub fn next_symmetric(&mut self, scale: f64) -> f64 {
        scale * (2.0 * self.next_unit() - 1.0)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Build an `l x l` instance. Ising couplings are drawn edge by edge in
/// lattice order, then fields site by site.
pub fn build_model(kind: ModelKind, l: usize, params: ModelParams, seed: u64) -> Result<ModelInstance> {
    let lattice = LatticeSpec::square(l)?;
    ModelInstance::on_lattice(kind, lattice, params, seed)
}

impl ModelInstance {
    pub fn on_lattice(kind: ModelKind, lattice: LatticeSpec, params: ModelParams, seed: u64) -> Result<Self> {
        if !lattice.is_bipartite() {
            return Err(Error::InvalidLattice("lattice is not bipartite"));
        }
        let mut rng = UniformStream::new(seed);
        let scale = params.j.abs();
        let (couplings, fields) = match kind {
            ModelKind::IsingSpinGlass => {
                let c: Vec<f64> = lattice.edges.iter().map(|_| rng.next_symmetric(scale)).collect();
                let f: Vec<f64> = (0..lattice.n_sites()).map(|_| rng.next_symmetric(params.h.abs())).collect();
                (c, f)
            }
            ModelKind::Xxz => {
                let c: Vec<f64> = if params.random_xxz_couplings {
                    lattice.edges.iter().map(|_| rng.next_symmetric(scale)).collect()
                } else {
                    lattice.edges.iter().map(|_| params.j).collect()
                };
                (c, alloc::vec![0.0; lattice.n_sites()])
            }
        };
        Self::from_couplings(kind, lattice, params, seed, couplings, fields)
    }

    /// Rebuild an instance from explicit coupling tables, e.g. after import.
    pub fn from_couplings(
        kind: ModelKind,
        lattice: LatticeSpec,
        params: ModelParams,
        seed: u64,
        couplings: Vec<f64>,
        fields: Vec<f64>,
    ) -> Result<Self> {
        let n = lattice.n_sites();
        if couplings.len() != lattice.edges.len() {
            return Err(Error::DimensionMismatch { left: lattice.edges.len(), right: couplings.len() });
        }
        if fields.len() != n {
            return Err(Error::DimensionMismatch { left: n, right: fields.len() });
        }
        let mut h0 = PauliSum::new(n)?;
        let mut h1 = PauliSum::new(n)?;
        match kind {
            ModelKind::IsingSpinGlass => {
                for s in 0..n {
                    h0.add_term(PauliString::single(n, s, 'X')?, re(-1.0))?;
                }
                for (e, &j) in lattice.edges.iter().zip(&couplings) {
                    h1.add_term(PauliString::from_sites(n, &[(e.a, 'Z'), (e.b, 'Z')])?, re(j))?;
                }
                for (s, &h) in fields.iter().enumerate() {
                    h1.add_term(PauliString::single(n, s, 'Z')?, re(h))?;
                }
            }
            ModelKind::Xxz => {
                for s in 0..n {
                    let sign = if lattice.sublattice[s] == Sublattice::A { -1.0 } else { 1.0 };
                    h0.add_term(PauliString::single(n, s, 'Z')?, re(sign))?;
                }
                for (e, &j) in lattice.edges.iter().zip(&couplings) {
                    for (op, w) in [('X', 1.0), ('Y', 1.0), ('Z', params.delta)] {
                        h1.add_term(PauliString::from_sites(n, &[(e.a, op), (e.b, op)])?, re(j * w))?;
                    }
                }
            }
        }
        h0.prune();
        h1.prune();
        Ok(ModelInstance { kind, lattice, params, seed, couplings, fields, h0, h1 })
    }

    pub fn n_qubits(&self) -> usize {
        self.lattice.n_sites()
    }

    /// `H = (1 - lambda) H0 + lambda H1` and `dH = H1 - H0`.
    pub fn interpolate(&self, lambda: f64) -> Result<(PauliSum, PauliSum)> {
        interpolate(&self.h0, &self.h1, lambda)
    }
}

pub fn interpolate(h0: &PauliSum, h1: &PauliSum, lambda: f64) -> Result<(PauliSum, PauliSum)> {
    if !(0.0..=1.0).contains(&lambda) || lambda.is_nan() {
        return Err(Error::OutOfRange { what: "lambda", value: lambda, lo: 0.0, hi: 1.0 });
    }
    let h = h0.linear_combination(re(1.0 - lambda), h1, re(lambda))?;
    let dh = h1.sub(h0)?;
    Ok((h, dh))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScheduleKind {
    /// `lambda(t) = sin^2((pi/2) sin^2(pi t / 2T))`.
    TrigSmooth,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule {
    pub total_time: f64,
    pub steps: usize,
    pub kind: ScheduleKind,
}

impl Schedule {
    pub fn new(total_time: f64, steps: usize) -> Result<Self> {
        if !(total_time > 0.0) || !total_time.is_finite() {
            return Err(Error::InvalidArgument("total time must be positive"));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("step count must be positive"));
        }
        Ok(Schedule { total_time, steps, kind: ScheduleKind::TrigSmooth })
    }

    pub fn dt(&self) -> f64 {
        self.total_time / self.steps as f64
    }

    /// Midpoint of step `m` (1-based): `(m - 1/2) dt`.
    pub fn midpoint(&self, m: usize) -> f64 {
        (m as f64 - 0.5) * self.dt()
    }

    /// `(lambda(t), dlambda/dt)`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        let big_t = self.total_time;
        if !(0.0..=big_t).contains(&t) {
            return Err(Error::OutOfRange { what: "t", value: t, lo: 0.0, hi: big_t });
        }
        let u = PI * t / (2.0 * big_t);
        let s = u.sin().powi(2);
        let lambda = (0.5 * PI * s).sin().powi(2);
        let ds = (PI / (2.0 * big_t)) * (2.0 * u).sin();
        let dlambda = 0.5 * PI * (PI * s).sin() * ds;
        Ok((lambda, dlambda))
    }
}
