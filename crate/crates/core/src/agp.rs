//! Variational adiabatic gauge potential in the nested-commutator ansatz.
//!
//! With `C^(0) = dH` and `C^(n) = [H, C^(n-1)]`, the order-`l` ansatz is
//! `A = i sum_k alpha_k C^(2k-1)`. The action `S = <G, G>` with
//! `G = dH + sum_k alpha_k C^(2k)` is quadratic in `alpha`, so its minimum
//! solves `M alpha = -v` with `M_jk = <C^(2j), C^(2k)>` and `v_j = <C^(2j), dH>`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen_real;
use crate::model::ModelInstance;
use crate::pauli::{nested_commutators, PauliSum};

/// Pivots below this fraction of `trace(M)` switch to the minimum-norm solve.
pub const PIVOT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct AgpSolution {
    pub alpha: Vec<f64>,
    /// Set when `M` was numerically singular and the minimum-norm solution was used.
    pub rank_deficient: bool,
    /// `|M alpha + v| / |v|` (absolute when `v = 0`).
    pub residual: f64,
}

/// Solve for the order-`l` coefficients from precomputed `C^(0)..C^(2l)`.
pub fn solve_from_commutators(nested: &[PauliSum], l: usize) -> Result<AgpSolution> {
    if l == 0 {
        return Err(Error::InvalidArgument("AGP order must be at least 1"));
    }
    if nested.len() < 2 * l + 1 {
        return Err(Error::DimensionMismatch { left: 2 * l + 1, right: nested.len() });
    }
    let mut m = vec![0.0; l * l];
    let mut v = vec![0.0; l];
    for j in 0..l {
        for k in j..l {
            let x = nested[2 * j + 2].hs_inner(&nested[2 * k + 2])?.re;
            m[j * l + k] = x;
            m[k * l + j] = x;
        }
        v[j] = nested[2 * j + 2].hs_inner(&nested[0])?.re;
    }
    let rhs: Vec<f64> = v.iter().map(|x| -x).collect();
    let (alpha, rank_deficient) = match cholesky_solve(l, &m, &rhs) {
        Some(a) => (a, false),
        None => (min_norm_solve(l, &m, &rhs)?, true),
    };
    let mut r2 = 0.0;
    for j in 0..l {
        let row: f64 = (0..l).map(|k| m[j * l + k] * alpha[k]).sum();
        r2 += (row + v[j]).powi(2);
    }
    let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let residual = if vn > 0.0 { r2.sqrt() / vn } else { r2.sqrt() };
    Ok(AgpSolution { alpha, rank_deficient, residual })
}

pub fn agp_coefficients(h: &PauliSum, dh: &PauliSum, l: usize) -> Result<AgpSolution> {
    if l == 0 {
        return Err(Error::InvalidArgument("AGP order must be at least 1"));
    }
    let nested = nested_commutators(h, dh, 2 * l)?;
    solve_from_commutators(&nested, l)
}

/// `S(alpha) = <G, G>` for `G = dH + sum_k alpha_k C^(2k)`.
pub fn action(h: &PauliSum, dh: &PauliSum, alpha: &[f64]) -> Result<f64> {
    let nested = nested_commutators(h, dh, 2 * alpha.len())?;
    action_from_commutators(&nested, alpha)
}

pub fn action_from_commutators(nested: &[PauliSum], alpha: &[f64]) -> Result<f64> {
    if nested.len() < 2 * alpha.len() + 1 {
        return Err(Error::DimensionMismatch { left: 2 * alpha.len() + 1, right: nested.len() });
    }
    let mut g = nested[0].clone();
    for (k, a) in alpha.iter().enumerate() {
        g = g.linear_combination(Complex64::new(1.0, 0.0), &nested[2 * k + 2], Complex64::new(*a, 0.0))?;
    }
    Ok(g.hs_inner(&g)?.re)
}

fn cholesky_solve(n: usize, m: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let trace: f64 = (0..n).map(|i| m[i * n + i]).sum();
    if !(trace > 0.0) {
        return None;
    }
    let mut low = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = m[i * n + j] - (0..j).map(|k| low[i * n + k] * low[j * n + k]).sum::<f64>();
            if i == j {
                if s < PIVOT_TOL * trace {
                    return None;
                }
                low[i * n + i] = s.sqrt();
            } else {
                low[i * n + j] = s / low[j * n + j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - (0..i).map(|k| low[i * n + k] * y[k]).sum::<f64>()) / low[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (y[i] - (i + 1..n).map(|k| low[k * n + i] * x[k]).sum::<f64>()) / low[i * n + i];
    }
    Some(x)
}

fn min_norm_solve(n: usize, m: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let (values, vectors) = symmetric_eigen_real(n, m)?;
    let top = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut x = vec![0.0; n];
    if top == 0.0 {
        return Ok(x);
    }
    for (e, u) in values.iter().zip(&vectors) {
        if e.abs() <= PIVOT_TOL * top * n as f64 {
            continue;
        }
        let proj: f64 = u.iter().zip(b).map(|(a, c)| a * c).sum::<f64>() / e;
        for (xi, ui) in x.iter_mut().zip(u) {
            *xi += proj * ui;
        }
    }
    Ok(x)
}

/// Everything needed to build one step at fixed `lambda`.
#[derive(Clone, Debug)]
pub struct GeneratorSet {
    pub lambda: f64,
    pub lambda_dot: f64,
    pub order: usize,
    pub h: PauliSum,
    pub dh: PauliSum,
    /// `C^(0) ..= C^(2l)`.
    pub nested: Vec<PauliSum>,
    pub alpha: Vec<f64>,
    pub rank_deficient: bool,
    /// `A = i sum_k alpha_k C^(2k-1)`.
    pub agp: PauliSum,
    /// `lambda_dot * A`.
    pub h_cd: PauliSum,
}

impl GeneratorSet {
    /// Build with the variational coefficients.
    pub fn solve(h: PauliSum, dh: PauliSum, lambda: f64, lambda_dot: f64, l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidArgument("AGP order must be at least 1"));
        }
        let nested = nested_commutators(&h, &dh, 2 * l)?;
        let sol = solve_from_commutators(&nested, l)?;
        Self::assemble(h, dh, nested, lambda, lambda_dot, sol.alpha, sol.rank_deficient)
    }

    /// Build with prescribed coefficients, e.g. the unit values used for
    /// error-scaling sweeps.
    pub fn with_alpha(h: PauliSum, dh: PauliSum, lambda: f64, lambda_dot: f64, alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidArgument("AGP order must be at least 1"));
        }
        let nested = nested_commutators(&h, &dh, 2 * alpha.len())?;
        Self::assemble(h, dh, nested, lambda, lambda_dot, alpha, false)
    }

    fn assemble(
        h: PauliSum,
        dh: PauliSum,
        nested: Vec<PauliSum>,
        lambda: f64,
        lambda_dot: f64,
        alpha: Vec<f64>,
        rank_deficient: bool,
    ) -> Result<Self> {
        let mut agp = PauliSum::new(h.n_qubits())?;
        for (k, a) in alpha.iter().enumerate() {
            agp = agp.linear_combination(Complex64::new(1.0, 0.0), &nested[2 * k + 1], Complex64::new(0.0, *a))?;
        }
        let h_cd = agp.scaled(Complex64::new(lambda_dot, 0.0));
        Ok(GeneratorSet { lambda, lambda_dot, order: alpha.len(), h, dh, nested, alpha, rank_deficient, agp, h_cd })
    }

    /// `C^(n)` for `n <= 2l`.
    pub fn nc(&self, n: usize) -> &PauliSum {
        &self.nested[n]
    }

    /// `H + H_CD`.
    pub fn total(&self) -> Result<PauliSum> {
        self.h.add(&self.h_cd)
    }

    pub fn action(&self) -> Result<f64> {
        action_from_commutators(&self.nested, &self.alpha)
    }
}

pub fn build_generator_set(model: &ModelInstance, lambda: f64, lambda_dot: f64, l: usize) -> Result<GeneratorSet> {
    let (h, dh) = model.interpolate(lambda)?;
    GeneratorSet::solve(h, dh, lambda, lambda_dot, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, ModelKind, ModelParams};

    fn one_qubit(lambda: f64) -> (PauliSum, PauliSum) {
        let h = PauliSum::from_labels(1, [("X", Complex64::new(lambda - 1.0, 0.0)), ("Z", Complex64::new(lambda, 0.0))]).unwrap();
        let dh = PauliSum::from_labels(1, [("X", Complex64::new(1.0, 0.0)), ("Z", Complex64::new(1.0, 0.0))]).unwrap();
        (h, dh)
    }

    #[test]
    fn one_qubit_closed_form() {
        for lambda in [0.1, 0.5, 0.8] {
            let (h, dh) = one_qubit(lambda);
            let sol = agp_coefficients(&h, &dh, 1).unwrap();
            let expect = -1.0 / (4.0 * (lambda * lambda + (1.0 - lambda) * (1.0 - lambda)));
            assert!((sol.alpha[0] - expect).abs() < 1e-12);
            assert!(!sol.rank_deficient);
            // what remains of G commutes with H
            let nested = nested_commutators(&h, &dh, 2).unwrap();
            let g = nested[0].linear_combination(Complex64::new(1.0, 0.0), &nested[2], Complex64::new(sol.alpha[0], 0.0)).unwrap();
            assert!(h.commutator(&g).unwrap().is_empty());
        }
        let (h, dh) = one_qubit(0.5);
        let sol = agp_coefficients(&h, &dh, 1).unwrap();
        assert!(action(&h, &dh, &sol.alpha).unwrap() < 1e-20);
    }

    #[test]
    fn commuting_case_is_rank_deficient() {
        let h = PauliSum::from_labels(2, [("ZI", Complex64::new(1.0, 0.0))]).unwrap();
        let dh = PauliSum::from_labels(2, [("ZZ", Complex64::new(1.0, 0.0))]).unwrap();
        let sol = agp_coefficients(&h, &dh, 1).unwrap();
        assert_eq!(sol.alpha, vec![0.0]);
        assert!(sol.rank_deficient);
    }

    #[test]
    fn ising_first_order_structure() {
        let model = build_model(ModelKind::IsingSpinGlass, 3, ModelParams::default(), 7).unwrap();
        let g = build_generator_set(&model, 0.5, 1.0, 1).unwrap();
        let hist = g.agp.weight_histogram();
        assert_eq!(hist.get(&1), Some(&9));
        assert_eq!(hist.get(&2), Some(&24));
        assert!(g.agp.is_hermitian(1e-12));
        // A_1 = -2 alpha_1 (sum J (YZ + ZY) + sum h Y)
        let a1 = g.alpha[0];
        for (e, j) in model.lattice.edges.iter().zip(&model.couplings) {
            let p = crate::PauliString::from_sites(9, &[(e.a, 'Y'), (e.b, 'Z')]).unwrap();
            assert!((g.agp.coefficient(&p).re - (-2.0 * a1 * j)).abs() < 1e-12);
        }
    }

    #[test]
    fn order_monotone_and_action_decreases() {
        let model = build_model(ModelKind::IsingSpinGlass, 2, ModelParams::default(), 1).unwrap();
        let (h, dh) = model.interpolate(0.5).unwrap();
        let s0 = dh.hs_inner(&dh).unwrap().re;
        let s1 = action(&h, &dh, &agp_coefficients(&h, &dh, 1).unwrap().alpha).unwrap();
        let s2 = action(&h, &dh, &agp_coefficients(&h, &dh, 2).unwrap().alpha).unwrap();
        assert!(s1 < s0);
        assert!(s2 <= s1 + 1e-12);
    }

    #[test]
    fn zero_rate_gives_empty_cd() {
        let model = build_model(ModelKind::Xxz, 2, ModelParams { j: -1.0, ..ModelParams::default() }, 0).unwrap();
        let g = build_generator_set(&model, 0.5, 0.0, 1).unwrap();
        assert!(g.h_cd.is_empty());
    }
}
