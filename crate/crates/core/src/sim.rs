//! Exact simulation at desk scale.
//!
//! State vectors are evolved matrix-free: Pauli sums act term by term, and
//! exponentials of non-commuting sums go through a Lanczos exponential with
//! full reorthogonalization. Full unitaries are built only up to the matrix
//! cap (nine qubits by default) through Hermitian eigendecompositions.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::circuit::{check_antihermitian, Axis, CircuitIR, Factor, FactorKind, GeneratorId, Rotation};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, inner, tridiagonal_ql, vec_norm, DenseMatrix, HermitianEigen};
use crate::model::UniformStream;
use crate::pauli::{PauliString, PauliSum};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Eigenvalues within this distance of the minimum span the ground space.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    /// Largest register turned into a full matrix.
    pub matrix: usize,
    /// Largest register held as a state vector.
    pub state: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { matrix: 9, state: 12 }
    }
}

impl Caps {
    pub fn check_matrix(&self, n: usize) -> Result<()> {
        if n > self.matrix {
            return Err(Error::ResourceCap { what: "dense matrix", n_qubits: n, cap: self.matrix });
        }
        Ok(())
    }

    pub fn check_state(&self, n: usize) -> Result<()> {
        if n > self.state {
            return Err(Error::ResourceCap { what: "state vector", n_qubits: n, cap: self.state });
        }
        Ok(())
    }
}

/// Hermitian `K` and real `phi` with `exp(c G) = exp(-i phi K)`.
fn hermitian_form(g: &PauliSum, c: Complex64) -> Result<(PauliSum, f64)> {
    check_antihermitian(g, c)?;
    // c G = -i (i c G)
    let k = g.scaled(I * c);
    Ok((k, 1.0))
}

/// `exp(c G)` as a dense matrix.
pub fn unitary_of(g: &PauliSum, c: Complex64, cap: usize) -> Result<DenseMatrix> {
    let (k, phi) = hermitian_form(g, c)?;
    let n = g.n_qubits();
    if n > cap {
        return Err(Error::ResourceCap { what: "dense matrix", n_qubits: n, cap });
    }
    if k.is_empty() {
        return Ok(DenseMatrix::identity(1 << n));
    }
    let m = DenseMatrix::from_pauli_sum(&k, cap)?;
    Ok(hermitian_eigen(&m)?.exp_i(phi))
}

/// `|U - V|_F / sqrt(dim)`.
pub fn norm_error(u: &DenseMatrix, v: &DenseMatrix) -> Result<f64> {
    let d = u.sub(v)?;
    Ok(d.frobenius_norm() / (u.dim() as f64).sqrt())
}

/// Largest singular value of `U - V`.
pub fn spectral_error(u: &DenseMatrix, v: &DenseMatrix) -> Result<f64> {
    let d = u.sub(v)?;
    let g = d.adjoint_matmul(&d)?;
    let e = hermitian_eigen(&g)?;
    Ok(e.values.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

fn rotation_matrix(axis: Axis, angle: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (angle / 2.0).sin_cos();
    match axis {
        Axis::X => [[Complex64::new(c, 0.0), Complex64::new(0.0, -s)], [Complex64::new(0.0, -s), Complex64::new(c, 0.0)]],
        Axis::Y => [[Complex64::new(c, 0.0), Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), Complex64::new(c, 0.0)]],
        Axis::Z => [[Complex64::new(c, -s), ZERO], [ZERO, Complex64::new(c, s)]],
    }
}

/// Apply one rotation to a state vector.
pub fn apply_rotation(state: &mut [Complex64], r: Rotation) {
    let m = rotation_matrix(r.axis, r.angle);
    let bit = 1usize << r.site;
    for j in 0..state.len() {
        if j & bit == 0 {
            let a = state[j];
            let b = state[j | bit];
            state[j] = m[0][0] * a + m[0][1] * b;
            state[j | bit] = m[1][0] * a + m[1][1] * b;
        }
    }
}

/// Left-multiply a matrix by one rotation (acts on row indices).
pub fn apply_rotation_left(u: &mut DenseMatrix, r: Rotation) {
    let m = rotation_matrix(r.axis, r.angle);
    let dim = u.dim();
    let bit = 1usize << r.site;
    let data = u.as_mut_slice();
    for i in 0..dim {
        if i & bit == 0 {
            let (lo, hi) = data.split_at_mut((i | bit) * dim);
            let ra = &mut lo[i * dim..(i + 1) * dim];
            let rb = &mut hi[..dim];
            for (a, b) in ra.iter_mut().zip(rb.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = m[0][0] * x + m[0][1] * y;
                *b = m[1][0] * x + m[1][1] * y;
            }
        }
    }
}

/// `exp(-i phi P) = cos(phi) - i sin(phi) P` on a state.
fn apply_single_term(state: &mut [Complex64], p: &PauliString, phi: f64) {
    let (s, c) = phi.sin_cos();
    let mut out = vec![ZERO; state.len()];
    for (j, amp) in state.iter().enumerate() {
        let (ph, k) = p.apply_to_basis(j as u64);
        out[k as usize] += ph * *amp;
    }
    for (x, px) in state.iter_mut().zip(out) {
        *x = *x * c - I * s * px;
    }
}

fn diagonal_of(k: &PauliSum, dim: usize) -> Vec<f64> {
    let mut d = vec![0.0; dim];
    for (p, c) in k.iter() {
        let z = p.z_mask();
        for (j, dj) in d.iter_mut().enumerate() {
            if (j as u64 & z).count_ones() % 2 == 0 {
                *dj += c.re;
            } else {
                *dj -= c.re;
            }
        }
    }
    d
}

/// `state <- exp(c G) state`.
pub fn apply_exp(state: &mut Vec<Complex64>, g: &PauliSum, c: Complex64) -> Result<()> {
    let (k, _) = hermitian_form(g, c)?;
    apply_exp_hermitian(state, &k, 1.0)
}

/// `state <- exp(-i t K) state` for Hermitian `K`.
pub fn apply_exp_hermitian(state: &mut Vec<Complex64>, k: &PauliSum, t: f64) -> Result<()> {
    let dim = state.len();
    if dim != 1usize << k.n_qubits() {
        return Err(Error::DimensionMismatch { left: 1 << k.n_qubits(), right: dim });
    }
    if k.is_empty() || t == 0.0 {
        return Ok(());
    }
    if k.len() == 1 {
        let (p, c) = k.iter().next().expect("one term");
        apply_single_term(state, p, c.re * t);
        return Ok(());
    }
    if k.is_diagonal() {
        let d = diagonal_of(k, dim);
        for (x, dj) in state.iter_mut().zip(d) {
            *x *= Complex64::from_polar(1.0, -t * dj);
        }
        return Ok(());
    }
    if k.is_commuting() {
        for (p, c) in k.iter() {
            apply_single_term(state, p, c.re * t);
        }
        return Ok(());
    }
    krylov_exp(state, &|v: &[Complex64]| k.apply(v).expect("dimensions checked"), t)
}

const KRYLOV_MAX: usize = 40;
const KRYLOV_TOL: f64 = 1e-13;

/// `exp(-i t K) v` by Lanczos with full reorthogonalization, substepping
/// when the Krylov space does not converge.
pub fn krylov_exp(state: &mut Vec<Complex64>, apply: &dyn Fn(&[Complex64]) -> Vec<Complex64>, t: f64) -> Result<()> {
    let mut remaining = t;
    let mut tau = t;
    let mut halvings = 0;
    while remaining.abs() > 0.0 {
        if tau.abs() > remaining.abs() {
            tau = remaining;
        }
        if krylov_step(state, apply, tau)? {
            remaining -= tau;
        } else {
            tau *= 0.5;
            halvings += 1;
            if halvings > 60 {
                return Err(Error::NoConvergence);
            }
        }
    }
    Ok(())
}

fn small_exp(alphas: &[f64], betas: &[f64], tau: f64) -> Result<Vec<Complex64>> {
    let m = alphas.len();
    let mut d = alphas.to_vec();
    let mut off = vec![0.0; m];
    off[..m - 1].copy_from_slice(&betas[..m - 1]);
    let z = tridiagonal_ql(&mut d, &mut off)?;
    // z column-major: column k is eigenvector k
    let mut r = vec![ZERO; m];
    for k in 0..m {
        let w = Complex64::from_polar(1.0, -tau * d[k]) * z[k * m];
        for (i, ri) in r.iter_mut().enumerate() {
            *ri += w * z[k * m + i];
        }
    }
    Ok(r)
}

fn krylov_step(state: &mut Vec<Complex64>, apply: &dyn Fn(&[Complex64]) -> Vec<Complex64>, tau: f64) -> Result<bool> {
    let beta0 = vec_norm(state);
    if beta0 == 0.0 {
        return Ok(true);
    }
    let mut basis: Vec<Vec<Complex64>> = vec![state.iter().map(|x| x / beta0).collect()];
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    for j in 0..KRYLOV_MAX {
        let mut w = apply(&basis[j]);
        let a = inner(&basis[j], &w).re;
        for (wi, vi) in w.iter_mut().zip(&basis[j]) {
            *wi -= vi * a;
        }
        if j > 0 {
            let b = betas[j - 1];
            for (wi, vi) in w.iter_mut().zip(&basis[j - 1]) {
                *wi -= vi * b;
            }
        }
        for v in &basis {
            let h = inner(v, &w);
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= vi * h;
            }
        }
        alphas.push(a);
        let b = vec_norm(&w);
        betas.push(b);
        let r = small_exp(&alphas, &betas, tau)?;
        let err = b * r[j].norm();
        let scale = alphas.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        if err < KRYLOV_TOL || b < 1e-14 * scale {
            for x in state.iter_mut() {
                *x = ZERO;
            }
            for (v, c) in basis.iter().zip(&r) {
                let c = c * beta0;
                for (x, vi) in state.iter_mut().zip(v) {
                    *x += vi * c;
                }
            }
            return Ok(true);
        }
        basis.push(w.iter().map(|x| x / b).collect());
    }
    Ok(false)
}

/// Apply a factor list (application order) to a state.
pub fn apply_factors(ir: &CircuitIR, factors: &[Factor], state: &mut Vec<Complex64>) -> Result<()> {
    for f in factors {
        match &f.kind {
            FactorKind::ExactExp { generator, coeff } => {
                let g = ir.generator(*generator).ok_or(Error::InvalidArgument("unknown generator id"))?;
                apply_exp(state, &g.op, *coeff)?;
            }
            FactorKind::AnalogBlock { generator, duration } => {
                let g = ir.generator(*generator).ok_or(Error::InvalidArgument("unknown generator id"))?;
                apply_exp_hermitian(state, &g.op, *duration)?;
            }
            FactorKind::RotationLayer(rs) => {
                for r in rs {
                    apply_rotation(state, *r);
                }
            }
        }
    }
    Ok(())
}

/// Dense products of factor lists, caching one eigendecomposition per
/// generator. Generator ids are only meaningful for circuits built the same
/// way, which is how sweeps reuse a warmed cache across time steps.
pub struct DenseEvaluator {
    cap: usize,
    cache: BTreeMap<GeneratorId, (HermitianEigen, Complex64)>,
}

impl DenseEvaluator {
    pub fn new(cap: usize) -> Self {
        DenseEvaluator { cap, cache: BTreeMap::new() }
    }

    /// Unitary of a factor list in application order.
    pub fn unitary(&mut self, ir: &CircuitIR, factors: &[Factor]) -> Result<DenseMatrix> {
        self.warm(ir, factors)?;
        self.unitary_warm(ir, factors)
    }

    /// Diagonalize every generator of `factors` that needs it.
    pub fn warm(&mut self, ir: &CircuitIR, factors: &[Factor]) -> Result<()> {
        for f in factors {
            let id = match &f.kind {
                FactorKind::ExactExp { generator, .. } | FactorKind::AnalogBlock { generator, .. } => *generator,
                FactorKind::RotationLayer(_) => continue,
            };
            if self.cache.contains_key(&id) {
                continue;
            }
            let g = ir.generator(id).ok_or(Error::InvalidArgument("unknown generator id"))?;
            if g.op.is_empty() || g.op.is_diagonal() || g.op.len() == 1 {
                continue;
            }
            let herm_g = g.op.is_hermitian(1e-12 * g.op.max_abs_coefficient().max(1.0));
            let base = if herm_g { Complex64::new(1.0, 0.0) } else { I };
            let m = DenseMatrix::from_pauli_sum(&g.op.scaled(base), self.cap)?;
            self.cache.insert(id, (hermitian_eigen(&m)?, base));
        }
        Ok(())
    }

    /// Like [`DenseEvaluator::unitary`] but read-only; every generator must
    /// already be warm.
    pub fn unitary_warm(&self, ir: &CircuitIR, factors: &[Factor]) -> Result<DenseMatrix> {
        let n = ir.n_qubits();
        if n > self.cap {
            return Err(Error::ResourceCap { what: "dense matrix", n_qubits: n, cap: self.cap });
        }
        let mut u = DenseMatrix::identity(1 << n);
        for f in factors {
            self.apply_left(ir, f, &mut u)?;
        }
        Ok(u)
    }

    /// `u <- F u`.
    pub fn apply_left(&self, ir: &CircuitIR, f: &Factor, u: &mut DenseMatrix) -> Result<()> {
        let (id, k_scale) = match &f.kind {
            FactorKind::RotationLayer(rs) => {
                for r in rs {
                    apply_rotation_left(u, *r);
                }
                return Ok(());
            }
            FactorKind::ExactExp { generator, coeff } => (*generator, I * *coeff),
            FactorKind::AnalogBlock { generator, duration } => (*generator, Complex64::new(*duration, 0.0)),
        };
        let g = ir.generator(id).ok_or(Error::InvalidArgument("unknown generator id"))?;
        check_antihermitian(&g.op, -I * k_scale)?;
        // exp(-i K) with K = k_scale * G Hermitian
        let k = g.op.scaled(k_scale);
        if k.is_empty() {
            return Ok(());
        }
        if k.is_diagonal() {
            let d = diagonal_of(&k, u.dim());
            let ph: Vec<Complex64> = d.iter().map(|x| Complex64::from_polar(1.0, -x)).collect();
            u.scale_rows(&ph);
            return Ok(());
        }
        if k.len() == 1 {
            let (p, c) = k.iter().next().expect("one term");
            let (s, cs) = c.re.sin_cos();
            let dim = u.dim();
            let mut out = u.clone();
            for v in out.as_mut_slice() {
                *v *= cs;
            }
            for j in 0..dim {
                let (ph, i) = p.apply_to_basis(j as u64);
                let w = -I * s * ph;
                let src = u.row(j);
                let dst = &mut out.as_mut_slice()[i as usize * dim..(i as usize + 1) * dim];
                for (d, x) in dst.iter_mut().zip(src) {
                    *d += w * x;
                }
            }
            *u = out;
            return Ok(());
        }
        let (eig, base) = self.cache.get(&id).ok_or(Error::InvalidArgument("generator not warmed"))?;
        let e = eig.exp_i((k_scale / base).re);
        *u = e.matmul(u)?;
        Ok(())
    }
}

pub fn basis_state(n_qubits: usize, index: usize) -> Vec<Complex64> {
    let mut v = vec![ZERO; 1 << n_qubits];
    v[index] = Complex64::new(1.0, 0.0);
    v
}

/// Lowest eigenvalue and an orthonormal basis of the ground space.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    pub basis: Vec<Vec<Complex64>>,
}

impl GroundState {
    /// Squared norm of the projection of `state` onto the ground space.
    pub fn fidelity(&self, state: &[Complex64]) -> f64 {
        self.basis.iter().map(|b| inner(b, state).norm_sqr()).sum()
    }

    pub fn degeneracy(&self) -> usize {
        self.basis.len()
    }
}

pub fn ground_state(h: &PauliSum, caps: Caps) -> Result<GroundState> {
    let n = h.n_qubits();
    caps.check_state(n)?;
    if !h.is_hermitian(1e-12 * h.max_abs_coefficient().max(1.0)) {
        return Err(Error::InvalidArgument("Hamiltonian is not Hermitian"));
    }
    let dim = 1usize << n;
    if h.is_diagonal() {
        let d = diagonal_of(h, dim);
        let e0 = d.iter().copied().fold(f64::INFINITY, f64::min);
        let basis = d
            .iter()
            .enumerate()
            .filter(|(_, x)| **x - e0 <= DEGENERACY_TOL)
            .map(|(j, _)| basis_state(n, j))
            .collect();
        return Ok(GroundState { energy: e0, basis });
    }
    if n <= caps.matrix {
        let m = DenseMatrix::from_pauli_sum(h, caps.matrix)?;
        let e = hermitian_eigen(&m)?;
        let e0 = e.values[0];
        let basis = (0..dim).take_while(|&j| e.values[j] - e0 <= DEGENERACY_TOL).map(|j| e.vectors.column(j)).collect();
        return Ok(GroundState { energy: e0, basis });
    }
    lanczos_ground(h)
}

/// Restarted Lanczos for the lowest eigenpair of registers above the matrix
/// cap. Only one vector is returned.
fn lanczos_ground(h: &PauliSum) -> Result<GroundState> {
    let n = h.n_qubits();
    let dim = 1usize << n;
    let mut rng = UniformStream::new(0x5eed);
    let mut v: Vec<Complex64> = (0..dim).map(|_| Complex64::new(rng.next_symmetric(1.0), rng.next_symmetric(1.0))).collect();
    let norm = vec_norm(&v);
    v.iter_mut().for_each(|x| *x /= norm);
    let scale = h.one_norm().max(1.0);
    for _restart in 0..50 {
        let m = 80.min(dim);
        let mut basis: Vec<Vec<Complex64>> = vec![v.clone()];
        let mut alphas = Vec::new();
        let mut betas = Vec::new();
        for j in 0..m {
            let mut w = h.apply(&basis[j])?;
            for vb in &basis {
                let c = inner(vb, &w);
                for (wi, vi) in w.iter_mut().zip(vb) {
                    *wi -= vi * c;
                }
            }
            alphas.push(inner(&basis[j], &h.apply(&basis[j])?).re);
            let b = vec_norm(&w);
            if j + 1 == m || b < 1e-12 * scale {
                break;
            }
            betas.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
        let k = alphas.len();
        let mut d = alphas.clone();
        let mut off = vec![0.0; k];
        off[..betas.len().min(k - 1)].copy_from_slice(&betas[..betas.len().min(k - 1)]);
        let z = tridiagonal_ql(&mut d, &mut off)?;
        let (imin, _) = d.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, x)| if *x < acc.1 { (i, *x) } else { acc });
        let mut ritz = vec![ZERO; dim];
        for (b, c) in basis.iter().zip(&z[imin * k..(imin + 1) * k]) {
            for (r, x) in ritz.iter_mut().zip(b) {
                *r += x * *c;
            }
        }
        let nr = vec_norm(&ritz);
        ritz.iter_mut().for_each(|x| *x /= nr);
        let hv = h.apply(&ritz)?;
        let e = inner(&ritz, &hv).re;
        let res: f64 = hv.iter().zip(&ritz).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt();
        if res <= 1e-10 * scale {
            return Ok(GroundState { energy: e, basis: vec![ritz] });
        }
        v = ritz;
    }
    Err(Error::NoConvergence)
}

/// `sum_a <Z_a>`.
pub fn magnetization(state: &[Complex64]) -> f64 {
    let n = state.len().trailing_zeros() as usize;
    let mut m = 0.0;
    for (j, a) in state.iter().enumerate() {
        let ones = (j as u64).count_ones() as f64;
        m += a.norm_sqr() * (n as f64 - 2.0 * ones);
    }
    m
}

/// Seeded multinomial draw from `|psi|^2`, keyed by basis index.
pub fn sample_bitstrings(state: &[Complex64], shots: usize, seed: u64) -> Result<BTreeMap<usize, usize>> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shot count must be positive"));
    }
    let mut cdf = Vec::with_capacity(state.len());
    let mut acc = 0.0;
    for a in state {
        acc += a.norm_sqr();
        cdf.push(acc);
    }
    let total = acc;
    let mut rng = UniformStream::new(seed);
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let u = rng.next_unit() * total;
        let j = cdf.partition_point(|c| *c <= u).min(state.len() - 1);
        *counts.entry(j).or_insert(0) += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GeneratorRole;
    use crate::model::{build_model, ModelKind, ModelParams};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn unitary_of_single_z() {
        let z = PauliSum::from_labels(1, [("Z", c(1.0, 0.0))]).unwrap();
        let u = unitary_of(&z, c(0.0, -core::f64::consts::FRAC_PI_2), 9).unwrap();
        assert!((u.get(0, 0) - c(0.0, -1.0)).norm() < 1e-14);
        assert!((u.get(1, 1) - c(0.0, 1.0)).norm() < 1e-14);
        assert!(unitary_of(&z, c(1.0, 0.0), 9).is_err());
    }

    #[test]
    fn norm_error_examples() {
        let i = DenseMatrix::identity(4);
        let mut m = DenseMatrix::identity(4);
        m.as_mut_slice().iter_mut().for_each(|x| *x = -*x);
        assert_eq!(norm_error(&i, &i).unwrap(), 0.0);
        assert!((norm_error(&i, &m).unwrap() - 2.0).abs() < 1e-14);
        assert!((spectral_error(&i, &m).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn krylov_matches_dense() {
        let model = build_model(ModelKind::IsingSpinGlass, 2, ModelParams::default(), 4).unwrap();
        let (h, _) = model.interpolate(0.4).unwrap();
        let u = unitary_of(&h, c(0.0, -0.7), 9).unwrap();
        let mut psi: Vec<Complex64> = (0..16).map(|j| c((j as f64).sin(), (j as f64 * 0.3).cos())).collect();
        let nrm = vec_norm(&psi);
        psi.iter_mut().for_each(|x| *x /= nrm);
        let expect = u.mat_vec(&psi);
        let mut got = psi.clone();
        apply_exp(&mut got, &h, c(0.0, -0.7)).unwrap();
        let d: f64 = got.iter().zip(&expect).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(d < 1e-12, "{d}");
        // long times force substepping
        let u = unitary_of(&h, c(0.0, -25.0), 9).unwrap();
        let expect = u.mat_vec(&psi);
        let mut got = psi;
        apply_exp(&mut got, &h, c(0.0, -25.0)).unwrap();
        let d: f64 = got.iter().zip(&expect).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(d < 1e-10, "{d}");
    }

    #[test]
    fn evaluator_fast_paths_match_eigen() {
        let mut ir = CircuitIR::new(2);
        let a = ir.add_generator("a", GeneratorRole::Other, PauliSum::from_labels(2, [("XY", c(0.7, 0.0))]).unwrap()).unwrap();
        let b = ir.add_generator("b", GeneratorRole::Other, PauliSum::from_labels(2, [("ZI", c(0.3, 0.0)), ("ZZ", c(-0.4, 0.0))]).unwrap()).unwrap();
        let g = ir.add_generator("g", GeneratorRole::Other, PauliSum::from_labels(2, [("XI", c(0.0, 0.5)), ("ZY", c(0.0, -0.2))]).unwrap()).unwrap();
        let fs = alloc::vec![
            Factor::exact(a, c(0.0, -0.3), "t"),
            Factor::exact(b, c(0.0, 0.9), "t"),
            Factor::exact(g, c(0.4, 0.0), "t"),
            Factor::rotations(alloc::vec![Rotation::new(1, Axis::Y, 0.3)], "t"),
        ];
        let mut ev = DenseEvaluator::new(9);
        let u = ev.unitary(&ir, &fs).unwrap();
        let mut expect = DenseMatrix::identity(4);
        for (id, cf) in [(a, c(0.0, -0.3)), (b, c(0.0, 0.9)), (g, c(0.4, 0.0))] {
            expect = unitary_of(&ir.generator(id).unwrap().op, cf, 9).unwrap().matmul(&expect).unwrap();
        }
        let ry = PauliSum::from_labels(2, [("IY", c(1.0, 0.0))]).unwrap();
        expect = unitary_of(&ry, c(0.0, -0.15), 9).unwrap().matmul(&expect).unwrap();
        assert!(norm_error(&u, &expect).unwrap() < 1e-13);
        // state path agrees with the matrix path
        let mut psi = basis_state(2, 1);
        apply_factors(&ir, &fs, &mut psi).unwrap();
        let col = u.column(1);
        let d: f64 = psi.iter().zip(&col).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        assert!(d < 1e-13);
    }

    #[test]
    fn ground_states() {
        let hx = PauliSum::from_labels(2, [("XI", c(-1.0, 0.0)), ("IX", c(-1.0, 0.0))]).unwrap();
        let gs = ground_state(&hx, Caps::default()).unwrap();
        assert!((gs.energy + 2.0).abs() < 1e-12);
        assert_eq!(gs.degeneracy(), 1);
        assert!((gs.fidelity(&[c(0.5, 0.0); 4]) - 1.0).abs() < 1e-12);
        let model = build_model(ModelKind::Xxz, 3, ModelParams { j: -1.0, ..ModelParams::default() }, 0).unwrap();
        let gs = ground_state(&model.h0, Caps::default()).unwrap();
        assert_eq!(gs.degeneracy(), 1);
        assert!((magnetization(&gs.basis[0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lanczos_path() {
        let model = build_model(ModelKind::IsingSpinGlass, 2, ModelParams::default(), 2).unwrap();
        let (h, _) = model.interpolate(0.3).unwrap();
        let dense = ground_state(&h, Caps::default()).unwrap();
        let lz = lanczos_ground(&h).unwrap();
        assert!((dense.energy - lz.energy).abs() < 1e-10);
    }

    #[test]
    fn sampling() {
        let counts = sample_bitstrings(&basis_state(3, 0), 100, 1).unwrap();
        assert_eq!(counts.get(&0), Some(&100));
        let plus = [c(core::f64::consts::FRAC_1_SQRT_2, 0.0); 2];
        let counts = sample_bitstrings(&plus, 20000, 7).unwrap();
        let f = counts[&0] as f64 / 20000.0;
        assert!((f - 0.5).abs() < 3.0 * (0.25f64 / 20000.0).sqrt());
        assert_eq!(counts, sample_bitstrings(&plus, 20000, 7).unwrap());
    }
}
