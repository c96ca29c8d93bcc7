//! Dense complex matrices and Hermitian eigensolvers.
//!
//! Matrices are row-major. Products go through `matrixmultiply::zgemm`.
//! Two eigensolvers are provided: Householder tridiagonalization followed by
//! implicit QL (used for anything sizeable) and cyclic Jacobi, which is slow
//! but simple enough to serve as an independent check.

use alloc::vec;
use alloc::vec::Vec;

use matrixmultiply::CGemmOption;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::PauliSum;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest register densified into a full matrix unless a caller raises it.
pub const DEFAULT_MATRIX_CAP: usize = 9;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        DenseMatrix { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_vec(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { left: dim * dim, right: data.len() });
        }
        Ok(DenseMatrix { dim, data })
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = *d;
        }
        m
    }

    /// Full matrix of a Pauli sum, refusing registers above `cap` qubits.
    pub fn from_pauli_sum(op: &PauliSum, cap: usize) -> Result<Self> {
        let n = op.n_qubits();
        if n > cap {
            return Err(Error::ResourceCap { what: "dense matrix", n_qubits: n, cap });
        }
        let dim = 1usize << n;
        let mut m = Self::zeros(dim);
        for (p, c) in op.iter() {
            for j in 0..dim {
                let (ph, i) = p.apply_to_basis(j as u64);
                m.data[i as usize * dim + j] += ph * *c;
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.dim).map(|i| self.get(i, j)).collect()
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        self.check(rhs)?;
        let mut out = Self::zeros(self.dim);
        gemm(self.dim, &self.data, false, &rhs.data, false, &mut out.data);
        Ok(out)
    }

    /// `self^dagger * rhs` without forming the adjoint.
    pub fn adjoint_matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        self.check(rhs)?;
        let mut out = Self::zeros(self.dim);
        gemm(self.dim, &self.data, true, &rhs.data, false, &mut out.data);
        Ok(out)
    }

    /// `self * rhs^dagger` without forming the adjoint.
    pub fn matmul_adjoint(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        self.check(rhs)?;
        let mut out = Self::zeros(self.dim);
        gemm(self.dim, &self.data, false, &rhs.data, true, &mut out.data);
        Ok(out)
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        self.check(rhs)?;
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Ok(DenseMatrix { dim: self.dim, data })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Multiply row `i` by `factors[i]` (left multiplication by a diagonal).
    pub fn scale_rows(&mut self, factors: &[Complex64]) {
        let n = self.dim;
        for (i, f) in factors.iter().enumerate() {
            for v in &mut self.data[i * n..(i + 1) * n] {
                *v *= *f;
            }
        }
    }

    /// Multiply column `j` by `factors[j]` (right multiplication by a diagonal).
    pub fn scale_columns(&mut self, factors: &[Complex64]) {
        let n = self.dim;
        for i in 0..n {
            for (v, f) in self.data[i * n..(i + 1) * n].iter_mut().zip(factors) {
                *v *= *f;
            }
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.dim;
        (0..n).all(|i| (i..n).all(|j| (self.get(i, j) - self.get(j, i).conj()).norm() <= tol))
    }

    /// Largest entry of `self^dagger self - I`.
    pub fn unitarity_defect(&self) -> f64 {
        let mut g = self.adjoint_matmul(self).expect("square");
        for i in 0..self.dim {
            g.data[i * self.dim + i] -= ONE;
        }
        g.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn mat_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        (0..n).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    fn check(&self, rhs: &DenseMatrix) -> Result<()> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: rhs.dim });
        }
        Ok(())
    }
}

/// `c = op(a) * op(b)` for square row-major `n x n` buffers, where `op` is
/// the conjugate transpose when the flag is set.
fn gemm(n: usize, a: &[Complex64], a_adj: bool, b: &[Complex64], b_adj: bool, c: &mut [Complex64]) {
    let conj = |m: &[Complex64]| m.iter().map(|v| v.conj()).collect::<Vec<_>>();
    let a_buf;
    let b_buf;
    let (a, rsa, csa) = if a_adj {
        a_buf = conj(a);
        (&a_buf[..], 1, n as isize)
    } else {
        (a, n as isize, 1)
    };
    let (b, rsb, csb) = if b_adj {
        b_buf = conj(b);
        (&b_buf[..], 1, n as isize)
    } else {
        (b, n as isize, 1)
    };
    // SAFETY: Complex64 is repr(C) with two f64 fields, so it has the layout
    // of [f64; 2]; all three buffers hold n*n elements and do not alias.
    unsafe {
        matrixmultiply::zgemm(
            CGemmOption::Standard,
            CGemmOption::Standard,
            n,
            n,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            rsa,
            csa,
            b.as_ptr() as *const [f64; 2],
            rsb,
            csb,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            n as isize,
            1,
        );
    }
}

/// Eigenpairs of a Hermitian matrix: ascending values, vectors as columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl HermitianEigen {
    /// `exp(-i theta A) = V diag(exp(-i theta e)) V^dagger`.
    pub fn exp_i(&self, theta: f64) -> DenseMatrix {
        let phases: Vec<Complex64> = self.values.iter().map(|e| Complex64::from_polar(1.0, -theta * e)).collect();
        let mut scaled = self.vectors.clone();
        scaled.scale_columns(&phases);
        scaled.matmul_adjoint(&self.vectors).expect("square")
    }

    /// Largest residual `|A v - e v|` over all pairs.
    pub fn max_residual(&self, a: &DenseMatrix) -> f64 {
        let av = a.matmul(&self.vectors).expect("square");
        let n = a.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            let r: f64 = (0..n).map(|i| (av.get(i, j) - self.vectors.get(i, j) * self.values[j]).norm_sqr()).sum();
            worst = worst.max(r.sqrt());
        }
        worst
    }
}

/// Householder reduction to real tridiagonal form, then implicit QL.
pub fn hermitian_eigen(a: &DenseMatrix) -> Result<HermitianEigen> {
    let n = a.dim();
    if n == 0 {
        return Ok(HermitianEigen { values: Vec::new(), vectors: DenseMatrix::zeros(0) });
    }
    if n == 1 {
        return Ok(HermitianEigen { values: vec![a.get(0, 0).re], vectors: DenseMatrix::identity(1) });
    }
    let mut w = a.data.clone();
    let mut reflectors: Vec<Option<Vec<Complex64>>> = Vec::with_capacity(n.saturating_sub(2));
    let mut sub = vec![ZERO; n - 1];
    let mut p = vec![ZERO; n];
    for k in 0..n - 2 {
        let m = n - k - 1;
        let x: Vec<Complex64> = (k + 1..n).map(|i| w[i * n + k]).collect();
        let tail: f64 = x[1..].iter().map(|c| c.norm_sqr()).sum();
        if tail == 0.0 {
            sub[k] = x[0];
            reflectors.push(None);
            continue;
        }
        let xnorm = (tail + x[0].norm_sqr()).sqrt();
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in v.iter_mut() {
            *c /= vnorm;
        }
        // p = B v on the trailing block
        for (r, pr) in p[..m].iter_mut().enumerate() {
            let row = &w[(k + 1 + r) * n + k + 1..(k + 1 + r) * n + n];
            *pr = row.iter().zip(&v).map(|(b, vv)| b * vv).sum();
        }
        let vp: Complex64 = v.iter().zip(&p[..m]).map(|(a, b)| a.conj() * b).sum();
        // w = 2p - 2 (v^dagger p) v ; B -= v w^dagger + w v^dagger
        let wv: Vec<Complex64> = (0..m).map(|r| p[r] * 2.0 - v[r] * (vp * 2.0)).collect();
        for r in 0..m {
            let vr = v[r];
            let wr = wv[r];
            let row = &mut w[(k + 1 + r) * n + k + 1..(k + 1 + r) * n + n];
            for (c, bc) in row.iter_mut().enumerate() {
                *bc -= vr * wv[c].conj() + wr * v[c].conj();
            }
        }
        for i in k + 1..n {
            w[i * n + k] = ZERO;
            w[k * n + i] = ZERO;
        }
        w[(k + 1) * n + k] = alpha;
        w[k * n + k + 1] = alpha.conj();
        sub[k] = alpha;
        reflectors.push(Some(v));
    }
    sub[n - 2] = w[(n - 1) * n + n - 2];
    let mut diag: Vec<f64> = (0..n).map(|i| w[i * n + i].re).collect();

    // Q = H_0 H_1 ... ; columns later scaled by the phases that make the
    // subdiagonal real and nonnegative.
    let mut q = DenseMatrix::identity(n);
    for (k, refl) in reflectors.iter().enumerate().rev() {
        let Some(v) = refl else { continue };
        // Q <- H_k Q, acting on rows k+1..n
        let m = v.len();
        let mut s = vec![ZERO; n];
        for r in 0..m {
            let vc = v[r].conj();
            let row = q.row(k + 1 + r);
            for (sj, qj) in s.iter_mut().zip(row) {
                *sj += vc * qj;
            }
        }
        for r in 0..m {
            let vr = v[r] * 2.0;
            let row = &mut q.data[(k + 1 + r) * n..(k + 2 + r) * n];
            for (qj, sj) in row.iter_mut().zip(&s) {
                *qj -= vr * sj;
            }
        }
    }
    let mut phases = vec![ONE; n];
    let mut off = vec![0.0; n];
    for k in 0..n - 1 {
        let mag = sub[k].norm();
        off[k] = mag;
        phases[k + 1] = if mag > 0.0 { phases[k] * (sub[k] / mag) } else { phases[k] };
    }
    q.scale_columns(&phases);

    let z = tridiagonal_ql(&mut diag, &mut off)?;
    // eigenvectors = (Q D) Z, with Z real and column-major
    let mut zc = DenseMatrix::zeros(n);
    for col in 0..n {
        for row in 0..n {
            zc.data[row * n + col] = Complex64::new(z[col * n + row], 0.0);
        }
    }
    let vectors = q.matmul(&zc)?;
    sort_pairs(diag, vectors)
}

fn sort_pairs(values: Vec<f64>, vectors: DenseMatrix) -> Result<HermitianEigen> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(core::cmp::Ordering::Equal));
    let mut out = DenseMatrix::zeros(n);
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            out.data[i * n + new_j] = vectors.data[i * n + old_j];
        }
    }
    Ok(HermitianEigen { values: order.iter().map(|&j| values[j]).collect(), vectors: out })
}

/// Implicit-shift QL on a real symmetric tridiagonal matrix. `diag` is
/// overwritten with eigenvalues (unsorted); `off[i]` couples `i` and `i+1`
/// and is destroyed. Returns the eigenvector matrix, column-major.
pub fn tridiagonal_ql(diag: &mut [f64], off: &mut [f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    if n < 2 {
        return Ok(z);
    }
    off[n - 1] = 0.0;
    // absolute floor so that blocks with zero diagonal still split
    let anorm = diag.iter().zip(off.iter()).map(|(d, e)| d.abs() + e.abs()).fold(0.0, f64::max);
    let floor = f64::EPSILON * f64::EPSILON * anorm;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd || off[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 200 {
                return Err(Error::NoConvergence);
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            let mut shift = diag[l] - off[l] / (g + if g >= 0.0 { r.abs() } else { -r.abs() });
            // exceptional shift: spectra symmetric about d[l] (zero diagonal,
            // bipartite hopping) can make the Wilkinson shift stall
            if iter % 10 == 0 {
                shift = diag[l] + 0.75 * off[l].abs();
            }
            g = diag[m] - shift;
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                let (lo, hi) = z.split_at_mut((i + 1) * n);
                let zi = &mut lo[i * n..];
                let zi1 = &mut hi[..n];
                for k in 0..n {
                    let f = zi1[k];
                    zi1[k] = s * zi[k] + c * f;
                    zi[k] = c * zi[k] - s * f;
                }
            }
            if underflow {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(z)
}

/// Cyclic complex Jacobi. Stops once the off-diagonal Frobenius mass falls
/// below `1e-13` of the total, or after 100 sweeps.
pub fn jacobi_eigen(a: &DenseMatrix) -> Result<HermitianEigen> {
    let n = a.dim();
    let mut m = a.data.clone();
    let mut v = DenseMatrix::identity(n);
    let total = a.frobenius_norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-13 * total {
            let values = (0..n).map(|i| m[i * n + i].re).collect();
            return sort_pairs(values, v);
        }
        for p in 0..n {
            for q in p + 1..n {
                let beta = m[p * n + q];
                let b = beta.norm();
                if b <= 1e-300 {
                    continue;
                }
                let alpha = m[p * n + p].re;
                let gamma = m[q * n + q].re;
                let ph = beta / b; // e^{i phi}
                let zeta = (gamma - alpha) / (2.0 * b);
                let t = if zeta >= 0.0 { 1.0 } else { -1.0 } / (zeta.abs() + (zeta * zeta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // U = diag(1, e^{-i phi}) [[c, s], [-s, c]]
                let u_pp = Complex64::new(c, 0.0);
                let u_pq = Complex64::new(s, 0.0);
                let u_qp = -ph.conj() * s;
                let u_qq = ph.conj() * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = akp * u_pp + akq * u_qp;
                    m[k * n + q] = akp * u_pq + akq * u_qq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = u_pp.conj() * apk + u_qp.conj() * aqk;
                    m[q * n + k] = u_pq.conj() * apk + u_qq.conj() * aqk;
                }
                m[p * n + q] = ZERO;
                m[q * n + p] = ZERO;
                m[p * n + p] = Complex64::new(m[p * n + p].re, 0.0);
                m[q * n + q] = Complex64::new(m[q * n + q].re, 0.0);
                for k in 0..n {
                    let vkp = v.data[k * n + p];
                    let vkq = v.data[k * n + q];
                    v.data[k * n + p] = vkp * u_pp + vkq * u_qp;
                    v.data[k * n + q] = vkp * u_pq + vkq * u_qq;
                }
            }
        }
    }
    Err(Error::NoConvergence)
}

/// Eigenpairs of a real symmetric matrix given row-major, via Jacobi.
pub fn symmetric_eigen_real(n: usize, a: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch { left: n * n, right: a.len() });
    }
    let m = DenseMatrix::from_vec(n, a.iter().map(|&x| Complex64::new(x, 0.0)).collect())?;
    let e = jacobi_eigen(&m)?;
    let vecs = (0..n).map(|j| (0..n).map(|i| e.vectors.get(i, j).re).collect()).collect();
    Ok((e.values, vecs))
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    #[test]
    fn zero_diagonal_hopping() {
        use crate::model::{build_model, ModelKind, ModelParams};
        let m = build_model(ModelKind::Xxz, 3, ModelParams::default(), 7).unwrap();
        let op = crate::aab::native_op(&m, crate::circuit::BlockFamily::XxPlusYy).unwrap();
        let a = DenseMatrix::from_pauli_sum(&op, 9).unwrap();
        let e = hermitian_eigen(&a).unwrap();
        assert!(e.max_residual(&a) < 1e-10 * 16.0);
    }

    use super::*;
    use crate::model::UniformStream;

    fn random_hermitian(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = UniformStream::new(seed);
        let mut m = DenseMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, Complex64::new(rng.next_symmetric(1.0), 0.0));
            for j in i + 1..n {
                let v = Complex64::new(rng.next_symmetric(1.0), rng.next_symmetric(1.0));
                m.set(i, j, v);
                m.set(j, i, v.conj());
            }
        }
        m
    }

    #[test]
    fn householder_ql_residuals() {
        for (n, seed) in [(2, 1), (3, 2), (7, 3), (40, 4), (64, 5)] {
            let a = random_hermitian(n, seed);
            let e = hermitian_eigen(&a).unwrap();
            assert!(e.max_residual(&a) < 1e-11 * a.frobenius_norm(), "n={n}");
            assert!(e.vectors.unitarity_defect() < 1e-12);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn jacobi_agrees_with_householder() {
        let a = random_hermitian(24, 9);
        let e1 = hermitian_eigen(&a).unwrap();
        let e2 = jacobi_eigen(&a).unwrap();
        for (x, y) in e1.values.iter().zip(&e2.values) {
            assert!((x - y).abs() < 1e-11);
        }
        assert!(e2.max_residual(&a) < 1e-11 * a.frobenius_norm());
    }

    #[test]
    fn degenerate_spectrum() {
        let a = DenseMatrix::from_diagonal(&[ONE, ONE, Complex64::new(-2.0, 0.0), ONE]);
        let e = hermitian_eigen(&a).unwrap();
        assert_eq!(e.values, vec![-2.0, 1.0, 1.0, 1.0]);
        let e = jacobi_eigen(&a).unwrap();
        assert_eq!(e.values, vec![-2.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn gemm_variants() {
        let a = random_hermitian(5, 11);
        let mut b = random_hermitian(5, 12);
        b.set(0, 3, Complex64::new(0.3, 0.7));
        let ab = a.matmul(&b).unwrap();
        let naive = |x: &DenseMatrix, y: &DenseMatrix| {
            let mut o = DenseMatrix::zeros(5);
            for i in 0..5 {
                for j in 0..5 {
                    o.set(i, j, (0..5).map(|k| x.get(i, k) * y.get(k, j)).sum());
                }
            }
            o
        };
        assert!(ab.sub(&naive(&a, &b)).unwrap().frobenius_norm() < 1e-13);
        let adb = b.adjoint_matmul(&a).unwrap();
        assert!(adb.sub(&naive(&b.adjoint(), &a)).unwrap().frobenius_norm() < 1e-13);
        let abd = a.matmul_adjoint(&b).unwrap();
        assert!(abd.sub(&naive(&a, &b.adjoint())).unwrap().frobenius_norm() < 1e-13);
    }

    #[test]
    fn pauli_densify_cap() {
        let s = PauliSum::new(10).unwrap();
        assert!(matches!(DenseMatrix::from_pauli_sum(&s, 9), Err(Error::ResourceCap { .. })));
    }
}
