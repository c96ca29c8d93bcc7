//! Group-commutator product formulas for nested-commutator exponentials.
//!
//! Write `K^(n)` for the anti-Hermitian normalization of `C^(n)`: `C^(n)`
//! itself for odd `n`, `i C^(n)` for even `n` (so `K^(0) = i dH`). Then
//! `K^(n) = [-iH, K^(n-1)]` for odd `n` and `[iH, K^(n-1)]` for even `n`, and
//! the group commutator
//!
//! ```text
//! e^{yP} e^{yQ} e^{-yP} e^{-yQ} = e^{y^2 [P, Q]} + O(y^3)
//! ```
//!
//! turns `exp(sigma y^2 K^(n))` into exponentials of `H` and `K^(n-1)` at
//! scale `y`. The `K^(n-1)` factors are expanded again at scale `sqrt(y)`
//! until the requested depth is reached; the remaining leaves are exact
//! exponentials of `C^(n - depth)`.
//!
//! The slot order for each `(n, sign)` reproduces the written formulas for
//! `U^(1)` (both signs) and `U^(3)` (both signs), including the `H <-> dH`
//! swap for negative `U^(1)`.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::agp::GeneratorSet;
use crate::circuit::{CircuitIR, Factor, GeneratorId, GeneratorRole};
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Generator ids registered for one step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepGenerators {
    pub h: GeneratorId,
    /// `nc[n]` is `C^(n)`.
    pub nc: Vec<GeneratorId>,
}

impl StepGenerators {
    /// Register `H` and `C^(0) ..= C^(2l)` of `set`, labelled with `tag`.
    pub fn register(ir: &mut CircuitIR, set: &GeneratorSet, tag: &str) -> Result<Self> {
        let h = ir.add_generator(format!("H{tag}"), GeneratorRole::Hamiltonian, set.h.clone())?;
        let mut nc = Vec::with_capacity(set.nested.len());
        for (n, c) in set.nested.iter().enumerate() {
            nc.push(ir.add_generator(format!("C{n}{tag}"), GeneratorRole::NestedCommutator(n), c.clone())?);
        }
        Ok(StepGenerators { h, nc })
    }

    fn c(&self, n: usize) -> Result<GeneratorId> {
        self.nc.get(n).copied().ok_or(Error::InvalidArgument("nested commutator not registered"))
    }
}

/// How far each `U^(2k-1)` block is expanded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Expansion {
    /// One group commutator over `{H, C^(2k-2)}`.
    Flat,
    /// `k` levels, leaving exact `C^(k-1)` exponentials.
    Nested,
    /// `2k-1` levels, down to `dH`.
    Full,
}

impl Expansion {
    pub fn depth(self, k: usize) -> usize {
        match self {
            Expansion::Flat => 1,
            Expansion::Nested => k,
            Expansion::Full => 2 * k - 1,
        }
    }
}

/// Placement of the adiabatic factor relative to the CD factors. Names follow
/// the written product: `HFirst` is `e^{-i dt H} e^{-i dt H_CD}`, so the CD
/// factors act on the state first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ordering {
    HFirst,
    CdFirst,
}

/// Factors of `e^{xA} e^{xB} e^{-xA} e^{-xB}` in application order, where
/// each operand is `scale * G`.
pub fn group_commutator(a: (GeneratorId, Complex64), b: (GeneratorId, Complex64), x: f64) -> [Factor; 4] {
    let tag = "group-commutator";
    [
        Factor::exact(b.0, b.1 * -x, tag),
        Factor::exact(a.0, a.1 * -x, tag),
        Factor::exact(b.0, b.1 * x, tag),
        Factor::exact(a.0, a.1 * x, tag),
    ]
}

#[derive(Clone, Copy)]
enum Slot {
    /// `sign * iH`
    H(f64),
    /// `sign * K^(n-1)`
    K(f64),
}

fn slots(n: usize, sigma: f64) -> (Slot, Slot) {
    use Slot::{H, K};
    match (n % 2 == 1, n == 1, sigma > 0.0) {
        (true, true, true) => (H(-1.0), K(1.0)),
        (true, true, false) => (K(-1.0), H(1.0)),
        (true, false, true) => (H(-1.0), K(1.0)),
        (true, false, false) => (H(1.0), K(1.0)),
        (false, _, true) => (H(1.0), K(1.0)),
        (false, _, false) => (K(1.0), H(1.0)),
    }
}

/// Approximate `exp(sigma y^2 K^(n))` with `depth` levels of group
/// commutators, appending factors in application order.
pub fn nc_block(g: &StepGenerators, n: usize, sigma: f64, y: f64, depth: usize, out: &mut Vec<Factor>) -> Result<()> {
    if depth > n {
        return Err(Error::InvalidArgument("expansion depth exceeds commutator order"));
    }
    if y == 0.0 || sigma == 0.0 {
        return Ok(());
    }
    let sigma = sigma.signum();
    if depth == 0 {
        let unit = if n % 2 == 1 { ONE } else { I };
        out.push(Factor::exact(g.c(n)?, unit * (sigma * y * y), "gc-leaf"));
        return Ok(());
    }
    let (p, q) = slots(n, sigma);
    // written e^{yP} e^{yQ} e^{-yP} e^{-yQ}
    for (slot, sign) in [(q, -1.0), (p, -1.0), (q, 1.0), (p, 1.0)] {
        match slot {
            Slot::H(s) => out.push(Factor::exact(g.h, I * (s * sign * y), "gc-H")),
            Slot::K(s) => nc_block(g, n - 1, s * sign, y.sqrt(), depth - 1, out)?,
        }
    }
    Ok(())
}

/// `U^(2k-1) = exp(dt * lambda_dot * alpha_k * C^(2k-1))`.
pub fn synth_block(g: &StepGenerators, k: usize, dt: f64, lambda_dot: f64, alpha_k: f64, expansion: Expansion) -> Result<Vec<Factor>> {
    if k == 0 {
        return Err(Error::InvalidArgument("block index starts at 1"));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("time step must be positive"));
    }
    let s = dt * lambda_dot * alpha_k;
    let mut out = Vec::new();
    nc_block(g, 2 * k - 1, s.signum(), s.abs().sqrt(), expansion.depth(k), &mut out)?;
    Ok(out)
}

pub fn synth_u1(g: &StepGenerators, dt: f64, lambda_dot: f64, alpha1: f64) -> Result<Vec<Factor>> {
    synth_block(g, 1, dt, lambda_dot, alpha1, Expansion::Nested)
}

pub fn synth_u3(g: &StepGenerators, dt: f64, lambda_dot: f64, alpha2: f64, expansion: Expansion) -> Result<Vec<Factor>> {
    synth_block(g, 2, dt, lambda_dot, alpha2, expansion)
}

/// First-order product `U^(1) U^(3) ... U^(2l-1)` in application order.
pub fn synth_order_l(g: &StepGenerators, dt: f64, lambda_dot: f64, alpha: &[f64], expansion: Expansion) -> Result<Vec<Factor>> {
    if alpha.is_empty() {
        return Err(Error::InvalidArgument("AGP order must be at least 1"));
    }
    if g.nc.len() < 2 * alpha.len() {
        return Err(Error::DimensionMismatch { left: 2 * alpha.len(), right: g.nc.len() });
    }
    let mut out = Vec::new();
    for k in (1..=alpha.len()).rev() {
        out.extend(synth_block(g, k, dt, lambda_dot, alpha[k - 1], expansion)?);
    }
    Ok(out)
}

/// One Trotter step: the exact adiabatic factor plus the CD factors.
pub fn trotter_step(h: GeneratorId, dt: f64, cd: Vec<Factor>, ordering: Ordering) -> Vec<Factor> {
    let adiabatic = Factor::exact(h, Complex64::new(0.0, -dt), "adiabatic");
    let mut out = Vec::with_capacity(cd.len() + 1);
    match ordering {
        Ordering::HFirst => {
            out.extend(cd);
            out.push(adiabatic);
        }
        Ordering::CdFirst => {
            out.push(adiabatic);
            out.extend(cd);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::FactorKind;
    use crate::model::{build_model, ModelKind, ModelParams};

    fn setup(l: usize) -> (CircuitIR, StepGenerators) {
        let model = build_model(ModelKind::IsingSpinGlass, 2, ModelParams::default(), 3).unwrap();
        let (h, dh) = model.interpolate(0.5).unwrap();
        let set = GeneratorSet::with_alpha(h, dh, 0.5, 1.0, alloc::vec![1.0; l]).unwrap();
        let mut ir = CircuitIR::new(4);
        let g = StepGenerators::register(&mut ir, &set, "").unwrap();
        (ir, g)
    }

    #[test]
    fn gamma_counts() {
        for l in 1..=3 {
            let (mut ir, g) = setup(l);
            let f = synth_block(&g, l, 1e-3, 1.0, 0.7, Expansion::Nested).unwrap();
            let c = ir.tally(&f).unwrap();
            assert_eq!(c.gamma_h, 2 * ((1 << l) - 1), "l={l}");
            assert_eq!(c.gamma_c(l - 1), 1 << l);
            assert_eq!(c.total_factors(), c.gamma_h + (1 << l));
            ir.push_step(f).unwrap();
            assert_eq!(ir.recount().unwrap(), *ir.counters());
        }
    }

    #[test]
    fn u1_positive_matches_written_formula() {
        let (_, g) = setup(1);
        let x = (0.01f64 * 2.0 * 0.5).sqrt();
        let f = synth_u1(&g, 0.01, 2.0, 0.5).unwrap();
        // written e^{-ixH} e^{ix dH} e^{ixH} e^{-ix dH}
        let expect = [(g.nc[0], -x), (g.h, x), (g.nc[0], x), (g.h, -x)];
        for (fac, (id, c)) in f.iter().zip(expect) {
            assert_eq!(fac.kind, FactorKind::ExactExp { generator: id, coeff: Complex64::new(0.0, c) });
        }
    }

    #[test]
    fn u1_negative_swaps_roles() {
        let (_, g) = setup(1);
        let x = 0.1;
        let f = synth_u1(&g, 0.01, 1.0, -1.0).unwrap();
        // written e^{-ix dH} e^{ixH} e^{ix dH} e^{-ixH}
        let expect = [(g.h, -x), (g.nc[0], x), (g.h, x), (g.nc[0], -x)];
        for (fac, (id, c)) in f.iter().zip(expect) {
            match fac.kind {
                FactorKind::ExactExp { generator, coeff } => {
                    assert_eq!(generator, id);
                    assert!((coeff - Complex64::new(0.0, c)).norm() < 1e-15);
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn zero_rate_is_empty() {
        let (_, g) = setup(2);
        assert!(synth_u1(&g, 0.01, 0.0, 1.0).unwrap().is_empty());
        assert!(synth_u3(&g, 0.01, 1.0, 0.0, Expansion::Full).unwrap().is_empty());
    }

    #[test]
    fn full_expansion_counts() {
        let (ir, g) = setup(2);
        let f = synth_u3(&g, 1e-3, 1.0, 1.0, Expansion::Full).unwrap();
        let c = ir.tally(&f).unwrap();
        assert_eq!(c.gamma_h, 14);
        assert_eq!(c.gamma_c(0), 8);
        let f = synth_u3(&g, 1e-3, 1.0, 1.0, Expansion::Flat).unwrap();
        let c = ir.tally(&f).unwrap();
        assert_eq!((c.gamma_h, c.gamma_c(2)), (2, 2));
    }

    #[test]
    fn step_ordering() {
        let (_, g) = setup(1);
        let cd = synth_u1(&g, 0.01, 1.0, 1.0).unwrap();
        let a = trotter_step(g.h, 0.01, cd.clone(), Ordering::HFirst);
        assert_eq!(a.last().unwrap().provenance, "adiabatic");
        let b = trotter_step(g.h, 0.01, cd, Ordering::CdFirst);
        assert_eq!(b[0].provenance, "adiabatic");
        assert_eq!(trotter_step(g.h, 0.01, Vec::new(), Ordering::HFirst).len(), 1);
    }
}
