//! Augmented analog blocks.
//!
//! An analog block evolves the register under a native two-body Hamiltonian
//! (`sum J_ab Z_a Z_b` or `sum J_ab (X_a X_b + Y_a Y_b)` over lattice bonds)
//! for a chosen duration. Conjugating it with single-qubit rotation layers
//! rotates the effective generator. The four constructions here cover the
//! adiabatic Hamiltonians and the first nested commutator of both models on
//! either hardware family.
//!
//! Rotations follow `R_a(t) = exp(-i t sigma_a / 2)`. `R G R^dag` for a layer
//! `R` is realized as `[R^dag] block [R]` in application order.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::agp::GeneratorSet;
use crate::circuit::{Axis, BlockFamily, CircuitIR, Factor, FactorKind, GeneratorId, GeneratorRole, Rotation};
use crate::error::{Error, Result};
use crate::model::{ModelInstance, ModelKind, Sublattice};
use crate::pauli::{PauliString, PauliSum};
use crate::pf::{nc_block, Ordering, StepGenerators};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Native block Hamiltonian on the model's bonds with the model's couplings.
pub fn native_op(model: &ModelInstance, family: BlockFamily) -> Result<PauliSum> {
    let n = model.n_qubits();
    let mut op = PauliSum::new(n)?;
    let paulis: &[char] = match family {
        BlockFamily::Zz => &['Z'],
        BlockFamily::XxPlusYy => &['X', 'Y'],
    };
    for (e, &j) in model.lattice.edges.iter().zip(&model.couplings) {
        for &p in paulis {
            op.add_term(PauliString::from_sites(n, &[(e.a, p), (e.b, p)])?, Complex64::new(j, 0.0))?;
        }
    }
    op.prune();
    Ok(op)
}

/// Whether the bare adiabatic Hamiltonian and `C^(1)` can be realized on
/// `family` with the algorithms below.
pub fn supported(kind: ModelKind, family: BlockFamily) -> bool {
    !matches!((kind, family), (ModelKind::Xxz, BlockFamily::Zz))
}

fn layer(model: &ModelInstance, sub: Option<Sublattice>, axis: Axis, angle: f64) -> Vec<Rotation> {
    (0..model.n_qubits())
        .filter(|&s| sub.is_none_or(|t| model.lattice.sublattice[s] == t))
        .map(|s| Rotation::new(s, axis, angle))
        .collect()
}

/// `R block R^dag` where `r` lists the rotations of `R` in application order.
fn conjugate(r: &[Rotation], block: Factor, out: &mut Vec<Factor>) {
    if r.is_empty() {
        out.push(block);
        return;
    }
    let inv: Vec<Rotation> = r.iter().rev().map(|x| x.inverse()).collect();
    out.push(Factor::rotations(inv, "aab-frame"));
    out.push(block);
    out.push(Factor::rotations(r.to_vec(), "aab-frame"));
}

/// Builds factor lists for one model on one hardware family. Generators for
/// the native blocks are registered once; per-term generators used by the
/// digital reference are registered on demand and shared across steps.
pub struct Synthesizer<'m> {
    model: &'m ModelInstance,
    family: BlockFamily,
    zz: GeneratorId,
    xxyy: GeneratorId,
    terms: BTreeMap<PauliString, GeneratorId>,
}

impl<'m> Synthesizer<'m> {
    pub fn new(ir: &mut CircuitIR, model: &'m ModelInstance, family: BlockFamily) -> Result<Self> {
        if !model.lattice.is_bipartite() {
            return Err(Error::InvalidLattice("lattice is not bipartite"));
        }
        let zz = ir.add_generator("AB_ZZ", GeneratorRole::Native(BlockFamily::Zz), native_op(model, BlockFamily::Zz)?)?;
        let xxyy = ir.add_generator(
            "AB_XXYY",
            GeneratorRole::Native(BlockFamily::XxPlusYy),
            native_op(model, BlockFamily::XxPlusYy)?,
        )?;
        Ok(Synthesizer { model, family, zz, xxyy, terms: BTreeMap::new() })
    }

    pub fn family(&self) -> BlockFamily {
        self.family
    }

    pub fn model(&self) -> &ModelInstance {
        self.model
    }

    pub fn native(&self, family: BlockFamily) -> GeneratorId {
        match family {
            BlockFamily::Zz => self.zz,
            BlockFamily::XxPlusYy => self.xxyy,
        }
    }

    /// Algorithm 1: `exp(-i (tau/2) sum J Y_a Z_b) exp(-i (tau/2) sum J Z_a Y_b)`
    /// (second factor acts first) from two conjugated ZZ blocks.
    pub fn alg1(&self, tau: f64) -> Vec<Factor> {
        let mut out = Vec::new();
        if tau == 0.0 {
            return out;
        }
        let zy = layer(self.model, Some(Sublattice::B), Axis::X, -FRAC_PI_2);
        let yz = layer(self.model, Some(Sublattice::A), Axis::X, -FRAC_PI_2);
        conjugate(&zy, Factor::block(self.zz, tau / 2.0, "alg1"), &mut out);
        conjugate(&yz, Factor::block(self.zz, tau / 2.0, "alg1"), &mut out);
        out
    }

    /// Algorithm 2: `exp(-i tau sum 4 J (Y_a X_b - X_a Y_b))`, exact.
    pub fn alg2(&self, tau: f64) -> Vec<Factor> {
        let mut out = Vec::new();
        if tau == 0.0 {
            return out;
        }
        let rb = layer(self.model, Some(Sublattice::B), Axis::Z, -FRAC_PI_2);
        conjugate(&rb, Factor::block(self.xxyy, 4.0 * tau, "alg2"), &mut out);
        out
    }

    /// Algorithm 3: `exp(-i tau sum s J Z_a Z_b)` from two conjugated XX+YY
    /// blocks, layer one `ZZ + YY` acting after layer two `ZZ - YY`. `s`
    /// rescales every coupling through the block duration.
    pub fn alg3(&self, s: f64, tau: f64) -> Vec<Factor> {
        let mut out = Vec::new();
        let d = s * tau / 2.0;
        if d == 0.0 {
            return out;
        }
        // R2: R_x(pi/2) then R_z(+pi/2) on A, R_z(-pi/2) on B
        let mut r2 = layer(self.model, None, Axis::X, FRAC_PI_2);
        for site in 0..self.model.n_qubits() {
            let sign = if self.model.lattice.sublattice[site] == Sublattice::A { 1.0 } else { -1.0 };
            r2.push(Rotation::new(site, Axis::Z, sign * FRAC_PI_2));
        }
        let r1 = layer(self.model, None, Axis::Y, FRAC_PI_2);
        conjugate(&r2, Factor::block(self.xxyy, d, "alg3"), &mut out);
        conjugate(&r1, Factor::block(self.xxyy, d, "alg3"), &mut out);
        out
    }

    /// Algorithm 4: `exp(-i tau sum J (Y_a Z_b + Z_a Y_b))`, exact.
    pub fn alg4(&self, tau: f64) -> Vec<Factor> {
        let mut out = Vec::new();
        if tau == 0.0 {
            return out;
        }
        let mut r = layer(self.model, Some(Sublattice::A), Axis::Y, -FRAC_PI_2);
        for site in self.model.lattice.sites_in(Sublattice::B) {
            r.push(Rotation::new(site, Axis::Z, FRAC_PI_2));
            r.push(Rotation::new(site, Axis::Y, FRAC_PI_2));
        }
        conjugate(&r, Factor::block(self.xxyy, tau, "alg4"), &mut out);
        out
    }

    fn field_layer(&self, axis: Axis, angle: impl Fn(usize) -> f64) -> Option<Factor> {
        let rs: Vec<Rotation> =
            (0..self.model.n_qubits()).map(|s| Rotation::new(s, axis, angle(s))).filter(|r| r.angle != 0.0).collect();
        if rs.is_empty() {
            None
        } else {
            Some(Factor::rotations(rs, "one-body"))
        }
    }

    /// `exp(-i tau H(lambda))` split into native groups: the two-body part,
    /// then the one-body rotation layers. XXZ puts the XX+YY block last.
    pub fn adiabatic(&self, lambda: f64, tau: f64) -> Result<Vec<Factor>> {
        let mut out = Vec::new();
        if tau == 0.0 {
            return Ok(out);
        }
        let m = self.model;
        match (m.kind, self.family) {
            (ModelKind::IsingSpinGlass, fam) => {
                if lambda != 0.0 {
                    match fam {
                        BlockFamily::Zz => out.push(Factor::block(self.zz, lambda * tau, "adiabatic")),
                        BlockFamily::XxPlusYy => out.extend(self.alg3(lambda, tau)),
                    }
                }
                out.extend(self.field_layer(Axis::Z, |s| 2.0 * lambda * tau * m.fields[s]));
                out.extend(self.field_layer(Axis::X, |_| -2.0 * (1.0 - lambda) * tau));
            }
            (ModelKind::Xxz, BlockFamily::XxPlusYy) => {
                out.extend(self.alg3(lambda * m.params.delta, tau));
                out.extend(self.field_layer(Axis::Z, |s| {
                    let sign = if m.lattice.sublattice[s] == Sublattice::A { -1.0 } else { 1.0 };
                    2.0 * tau * (1.0 - lambda) * sign
                }));
                if lambda != 0.0 {
                    out.push(Factor::block(self.xxyy, lambda * tau, "adiabatic"));
                }
            }
            (ModelKind::Xxz, BlockFamily::Zz) => return Err(Error::Unsupported("XXZ hopping on ZZ blocks")),
        }
        Ok(out)
    }

    /// `exp(s C^(1))` with `C^(1) = [H, dH]`, which does not depend on lambda
    /// for either model.
    pub fn c1_exp(&self, s: f64) -> Result<Vec<Factor>> {
        let mut out = Vec::new();
        if s == 0.0 {
            return Ok(out);
        }
        let m = self.model;
        match (m.kind, self.family) {
            // C1 = 2i (sum J (YZ + ZY) + sum h Y)
            (ModelKind::IsingSpinGlass, BlockFamily::Zz) => out.extend(self.alg1(-4.0 * s)),
            (ModelKind::IsingSpinGlass, BlockFamily::XxPlusYy) => out.extend(self.alg4(-2.0 * s)),
            // C1 = -4i sum J (YX - XY)
            (ModelKind::Xxz, BlockFamily::XxPlusYy) => return Ok(self.alg2(s)),
            (ModelKind::Xxz, BlockFamily::Zz) => return Err(Error::Unsupported("XXZ hopping on ZZ blocks")),
        }
        out.extend(self.field_layer(Axis::Y, |site| -4.0 * s * m.fields[site]));
        Ok(out)
    }

    fn term_id(&mut self, ir: &mut CircuitIR, p: PauliString) -> Result<GeneratorId> {
        if let Some(id) = self.terms.get(&p) {
            return Ok(*id);
        }
        let mut op = PauliSum::new(p.n_qubits())?;
        op.add_term(p, Complex64::new(1.0, 0.0))?;
        let label = op.to_labels().pop().map(|(l, _)| l).unwrap_or_default();
        let id = ir.add_generator(format!("P_{label}"), GeneratorRole::Other, op)?;
        self.terms.insert(p, id);
        Ok(id)
    }

    /// `exp(c G)` as one exact exponential per Pauli term, in canonical term
    /// order.
    pub fn digital_exp(&mut self, ir: &mut CircuitIR, g: &PauliSum, c: Complex64) -> Result<Vec<Factor>> {
        let mut out = Vec::with_capacity(g.len());
        for (p, a) in g.iter() {
            let coeff = *a * c;
            if coeff == Complex64::new(0.0, 0.0) {
                continue;
            }
            out.push(Factor::exact(self.term_id(ir, *p)?, coeff, "digital"));
        }
        Ok(out)
    }

    /// Digital counterpart of [`Synthesizer::adiabatic`]: the same groups,
    /// each split into per-term exponentials.
    pub fn digital_adiabatic(&mut self, ir: &mut CircuitIR, lambda: f64, tau: f64) -> Result<Vec<Factor>> {
        let (h, _) = self.model.interpolate(lambda)?;
        let c = Complex64::new(0.0, -tau);
        let mut out = Vec::new();
        match self.model.kind {
            ModelKind::IsingSpinGlass => {
                let two = h.filter(|p| p.weight() == 2);
                let z = h.filter(|p| p.weight() == 1 && p.is_diagonal());
                let x = h.filter(|p| !p.is_diagonal());
                for g in [two, z, x] {
                    out.extend(self.digital_exp(ir, &g, c)?);
                }
            }
            ModelKind::Xxz => {
                let diag = h.filter(|p| p.is_diagonal());
                let hop = h.filter(|p| !p.is_diagonal());
                for g in [diag, hop] {
                    out.extend(self.digital_exp(ir, &g, c)?);
                }
            }
        }
        Ok(out)
    }

    /// Per-term split of `exp(s C^(1))`.
    pub fn digital_c1_exp(&mut self, ir: &mut CircuitIR, s: f64) -> Result<Vec<Factor>> {
        let (h, dh) = self.model.interpolate(0.5)?;
        let c1 = h.commutator(&dh)?;
        let two = c1.filter(|p| p.weight() >= 2);
        let one = c1.filter(|p| p.weight() < 2);
        let mut out = self.digital_exp(ir, &two, Complex64::new(s, 0.0))?;
        out.extend(self.digital_exp(ir, &one, Complex64::new(s, 0.0))?);
        Ok(out)
    }

    /// One Trotter step of `H + H_CD^(l)` on hardware (or, with `digital`,
    /// its per-term reference). `U^(1)` comes straight from the `C^(1)`
    /// construction; `U^(3)` is expanded with nested group commutators down
    /// to `C^(1)` leaves, and every `H` or `C^(1)` exponential is then
    /// realized like the top-level ones. `l >= 3` would need `C^(2)` leaves
    /// and is rejected.
    pub fn step(
        &mut self,
        ir: &mut CircuitIR,
        set: &GeneratorSet,
        ids: &StepGenerators,
        dt: f64,
        ordering: Ordering,
        digital: bool,
    ) -> Result<Vec<Factor>> {
        if set.order > 2 {
            return Err(Error::Unsupported("analog-block synthesis beyond second order"));
        }
        let lambda = set.lambda;
        let mut cd = Vec::new();
        for k in (1..=set.order).rev() {
            let s = dt * set.lambda_dot * set.alpha[k - 1];
            if k == 1 {
                cd.extend(self.realize_c1(ir, s, digital)?);
                continue;
            }
            let mut pf = Vec::new();
            nc_block(ids, 2 * k - 1, s.signum(), s.abs().sqrt(), k, &mut pf)?;
            for f in pf {
                let FactorKind::ExactExp { generator, coeff } = f.kind else {
                    return Err(Error::InvalidArgument("expected exact exponentials from the product formula"));
                };
                let role = ir.generator(generator).map(|g| g.role).ok_or(Error::InvalidArgument("unknown generator id"))?;
                match role {
                    // exp(c H) = exp(-i tau H) with tau = i c
                    GeneratorRole::Hamiltonian => cd.extend(self.realize_h(ir, lambda, (I * coeff).re, digital)?),
                    GeneratorRole::NestedCommutator(1) => cd.extend(self.realize_c1(ir, coeff.re, digital)?),
                    _ => return Err(Error::Unsupported("leaf has no analog-block realization")),
                }
            }
        }
        let adiabatic = self.realize_h(ir, lambda, dt, digital)?;
        Ok(match ordering {
            Ordering::HFirst => cd.into_iter().chain(adiabatic).collect(),
            Ordering::CdFirst => adiabatic.into_iter().chain(cd).collect(),
        })
    }

    fn realize_h(&mut self, ir: &mut CircuitIR, lambda: f64, tau: f64, digital: bool) -> Result<Vec<Factor>> {
        if digital {
            self.digital_adiabatic(ir, lambda, tau)
        } else {
            self.adiabatic(lambda, tau)
        }
    }

    fn realize_c1(&mut self, ir: &mut CircuitIR, s: f64, digital: bool) -> Result<Vec<Factor>> {
        if digital {
            self.digital_c1_exp(ir, s)
        } else {
            self.c1_exp(s)
        }
    }
}

/// Analog blocks in a factor list.
pub fn count_blocks(factors: &[Factor]) -> usize {
    factors.iter().filter(|f| matches!(f.kind, FactorKind::AnalogBlock { .. })).count()
}

/// Blocks per realization of `exp(-i tau H)`.
pub fn blocks_h(kind: ModelKind, family: BlockFamily) -> Result<usize> {
    match (kind, family) {
        (ModelKind::IsingSpinGlass, BlockFamily::Zz) => Ok(1),
        (ModelKind::IsingSpinGlass, BlockFamily::XxPlusYy) => Ok(2),
        (ModelKind::Xxz, BlockFamily::XxPlusYy) => Ok(3),
        (ModelKind::Xxz, BlockFamily::Zz) => Err(Error::Unsupported("XXZ hopping on ZZ blocks")),
    }
}

/// Blocks per realization of `exp(s C^(n))`, `n >= 1`: direct for `n = 1`,
/// one group commutator over `H` and `C^(n-1)` above.
pub fn blocks_c(kind: ModelKind, family: BlockFamily, n: usize) -> Result<usize> {
    match n {
        0 => Err(Error::InvalidArgument("dH exponentials are not counted")),
        1 => match (kind, family) {
            (ModelKind::IsingSpinGlass, BlockFamily::Zz) => Ok(2),
            (ModelKind::IsingSpinGlass, BlockFamily::XxPlusYy) => Ok(1),
            (ModelKind::Xxz, BlockFamily::XxPlusYy) => Ok(1),
            (ModelKind::Xxz, BlockFamily::Zz) => Err(Error::Unsupported("XXZ hopping on ZZ blocks")),
        },
        _ => Ok(2 * blocks_h(kind, family)? + 2 * blocks_c(kind, family, n - 1)?),
    }
}

/// Blocks per Trotter step of `H + H_CD^(l)`: the adiabatic factor, `U^(1)`
/// directly, and each `U^(2k-1)` with `k >= 2` as `2(2^k - 1)` H factors
/// plus `2^k` leaves at `C^(k-1)`.
pub fn blocks_per_step(kind: ModelKind, family: BlockFamily, l: usize) -> Result<usize> {
    let mut total = blocks_h(kind, family)?;
    for k in 1..=l {
        total += if k == 1 {
            blocks_c(kind, family, 1)?
        } else {
            2 * ((1 << k) - 1) * blocks_h(kind, family)? + (1 << k) * blocks_c(kind, family, k - 1)?
        };
    }
    Ok(total)
}
