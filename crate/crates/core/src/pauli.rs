//! Pauli strings in symplectic form and sums of them with complex coefficients.
//!
//! A string on `n` qubits is stored as two bit masks. Site `i` carries
//!
//! | x bit | z bit | operator |
//! |-------|-------|----------|
//! | 0     | 0     | I        |
//! | 1     | 0     | X        |
//! | 0     | 1     | Z        |
//! | 1     | 1     | Y        |
//!
//! Strings carry no phase. As a matrix, the string with masks `(x, z)` is
//! `i^{|x & z|} X^x Z^z` (the `Z` part acts first), which makes every site
//! with both bits set equal to `Y = [[0, -i], [i, 0]]`. All multiplication
//! phases below follow from that one identity.
//!
//! Qubit `i` is bit `i` of a computational basis index, and character `i` of
//! a label such as `"XZIY"`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest supported register. Masks are single 64-bit words.
pub const MAX_QUBITS: usize = 64;

/// Coefficients whose magnitude falls below this (relative to the largest
/// coefficient of the sum, floored at one) are dropped.
pub const PRUNE_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// One of the four phases `{1, i, -1, -i}`, stored as the power of `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    /// `i^k` for any integer `k`.
    pub fn from_power(k: i64) -> Phase {
        Phase(k.rem_euclid(4) as u8)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl core::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// A phase-free Pauli string. Ordering is lexicographic on `(z, x)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    z: u64,
    x: u64,
    n: u32,
}

fn mask_for(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl PauliString {
    pub fn new(n_qubits: usize, x_mask: u64, z_mask: u64) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::QubitLimit { requested: n_qubits, max: MAX_QUBITS });
        }
        let m = mask_for(n_qubits);
        if x_mask & !m != 0 || z_mask & !m != 0 {
            return Err(Error::InvalidArgument("mask has bits beyond n_qubits"));
        }
        Ok(PauliString { z: z_mask, x: x_mask, n: n_qubits as u32 })
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, 0, 0)
    }

    /// Single-site operator `op` (one of `'X'`, `'Y'`, `'Z'`, `'I'`) on `site`.
    pub fn single(n_qubits: usize, site: usize, op: char) -> Result<Self> {
        Self::from_sites(n_qubits, &[(site, op)])
    }

    /// Product of single-site operators on distinct sites.
    pub fn from_sites(n_qubits: usize, sites: &[(usize, char)]) -> Result<Self> {
        let mut x = 0u64;
        let mut z = 0u64;
        for &(site, op) in sites {
            if site >= n_qubits {
                return Err(Error::InvalidArgument("site index out of range"));
            }
            let bit = 1u64 << site;
            if (x | z) & bit != 0 {
                return Err(Error::InvalidArgument("repeated site in Pauli product"));
            }
            match op {
                'I' => {}
                'X' => x |= bit,
                'Z' => z |= bit,
                'Y' => {
                    x |= bit;
                    z |= bit
                }
                _ => return Err(Error::InvalidLabel),
            }
        }
        Self::new(n_qubits, x, z)
    }

    pub fn n_qubits(&self) -> usize {
        self.n as usize
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Only `I` and `Z` factors.
    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    /// Number of `Y` sites; the string equals `i^{y_count} X^x Z^z`.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn site(&self, i: usize) -> char {
        let bit = 1u64 << i;
        match (self.x & bit != 0, self.z & bit != 0) {
            (false, false) => 'I',
            (true, false) => 'X',
            (false, true) => 'Z',
            (true, true) => 'Y',
        }
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let s = (self.x & other.z).count_ones() + (self.z & other.x).count_ones();
        s % 2 == 0
    }

    fn check_dims(&self, other: &PauliString) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { left: self.n as usize, right: other.n as usize });
        }
        Ok(())
    }

    /// `self * other = phase * result`.
    pub fn multiply(&self, other: &PauliString) -> Result<(Phase, PauliString)> {
        self.check_dims(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &PauliString) -> (Phase, PauliString) {
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        // X^a Z^b X^c Z^d = (-1)^{|b & c|} X^{a^c} Z^{b^d}
        let k = self.y_count() as i64 + other.y_count() as i64 - (x & z).count_ones() as i64
            + 2 * (self.z & other.x).count_ones() as i64;
        (Phase::from_power(k), PauliString { z, x, n: self.n })
    }

    /// Action on a basis state: `P |j> = phase * |j ^ x>`.
    #[inline]
    pub fn apply_to_basis(&self, j: u64) -> (Complex64, u64) {
        let sign = if (j & self.z).count_ones() % 2 == 0 { 0 } else { 2 };
        let ph = Phase::from_power(self.y_count() as i64 + sign);
        (ph.to_complex(), j ^ self.x)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n_qubits() {
            write!(f, "{}", self.site(i))?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let n = s.chars().count();
        let mut sites = Vec::with_capacity(n);
        for (i, c) in s.chars().enumerate() {
            sites.push((i, c));
        }
        Self::from_sites(n, &sites)
    }
}

/// Sum of Pauli strings with complex coefficients, kept in canonical order.
#[derive(Clone, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl fmt::Debug for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (p, c) in &self.terms {
            m.entry(&alloc::format!("{p}"), c);
        }
        m.finish()
    }
}

impl PauliSum {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::QubitLimit { requested: n_qubits, max: MAX_QUBITS });
        }
        Ok(PauliSum { n: n_qubits, terms: BTreeMap::new() })
    }

    /// Build from `(label, coefficient)` pairs; repeated labels accumulate.
    pub fn from_labels<'a, I>(n_qubits: usize, items: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, Complex64)>,
    {
        let mut s = Self::new(n_qubits)?;
        for (label, c) in items {
            let p: PauliString = label.parse()?;
            s.add_term(p, c)?;
        }
        s.prune();
        Ok(s)
    }

    pub fn from_terms<I>(n_qubits: usize, items: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, Complex64)>,
    {
        let mut s = Self::new(n_qubits)?;
        for (p, c) in items {
            s.add_term(p, c)?;
        }
        s.prune();
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, p: &PauliString) -> Complex64 {
        self.terms.get(p).copied().unwrap_or(ZERO)
    }

    fn check_dims(&self, other: &PauliSum) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { left: self.n, right: other.n });
        }
        Ok(())
    }

    /// Accumulate `c * p` without pruning.
    pub fn add_term(&mut self, p: PauliString, c: Complex64) -> Result<()> {
        if p.n_qubits() != self.n {
            return Err(Error::DimensionMismatch { left: self.n, right: p.n_qubits() });
        }
        *self.terms.entry(p).or_insert(ZERO) += c;
        Ok(())
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drop coefficients below `PRUNE_TOL * max(1, max |c|)`.
    pub fn prune(&mut self) {
        let tol = PRUNE_TOL * self.max_abs_coefficient().max(1.0);
        self.terms.retain(|_, c| c.norm() >= tol);
    }

    pub fn scaled(&self, s: Complex64) -> PauliSum {
        let mut out = PauliSum {
            n: self.n,
            terms: self.terms.iter().map(|(p, c)| (*p, *c * s)).collect(),
        };
        out.prune();
        out
    }

    /// `a * self + b * other`.
    pub fn linear_combination(&self, a: Complex64, other: &PauliSum, b: Complex64) -> Result<PauliSum> {
        self.check_dims(other)?;
        let mut out = PauliSum { n: self.n, terms: BTreeMap::new() };
        for (p, c) in &self.terms {
            *out.terms.entry(*p).or_insert(ZERO) += *c * a;
        }
        for (p, c) in &other.terms {
            *out.terms.entry(*p).or_insert(ZERO) += *c * b;
        }
        out.prune();
        Ok(out)
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        self.linear_combination(Complex64::new(1.0, 0.0), other, Complex64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &PauliSum) -> Result<PauliSum> {
        self.linear_combination(Complex64::new(1.0, 0.0), other, Complex64::new(-1.0, 0.0))
    }

    /// Matrix product `self * other`.
    pub fn product(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_dims(other)?;
        let mut out = PauliSum { n: self.n, terms: BTreeMap::new() };
        for (p, a) in &self.terms {
            for (q, b) in &other.terms {
                let (ph, r) = p.mul_unchecked(q);
                *out.terms.entry(r).or_insert(ZERO) += ph.to_complex() * *a * *b;
            }
        }
        out.prune();
        Ok(out)
    }

    /// `[self, other] = self*other - other*self`. Only anticommuting pairs
    /// contribute, each with twice the product.
    pub fn commutator(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_dims(other)?;
        let mut out = PauliSum { n: self.n, terms: BTreeMap::new() };
        for (p, a) in &self.terms {
            for (q, b) in &other.terms {
                if p.commutes_with(q) {
                    continue;
                }
                let (ph, r) = p.mul_unchecked(q);
                *out.terms.entry(r).or_insert(ZERO) += ph.to_complex() * *a * *b * 2.0;
            }
        }
        out.prune();
        Ok(out)
    }

    /// Hermitian conjugate.
    pub fn adjoint(&self) -> PauliSum {
        PauliSum { n: self.n, terms: self.terms.iter().map(|(p, c)| (*p, c.conj())).collect() }
    }

    /// Every coefficient real to within `tol`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    /// Every coefficient purely imaginary to within `tol`.
    pub fn is_antihermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.re.abs() <= tol)
    }

    /// All terms are products of `I` and `Z`.
    pub fn is_diagonal(&self) -> bool {
        self.terms.keys().all(|p| p.is_diagonal())
    }

    /// Whether every pair of strings in the sum commutes.
    pub fn is_commuting(&self) -> bool {
        let keys: Vec<&PauliString> = self.terms.keys().collect();
        for (i, p) in keys.iter().enumerate() {
            for q in &keys[i + 1..] {
                if !p.commutes_with(q) {
                    return false;
                }
            }
        }
        true
    }

    /// Sum of coefficient magnitudes, an upper bound on the operator norm.
    pub fn one_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    /// Normalized Hilbert-Schmidt inner product `Tr(A^dagger B) / 2^N`.
    pub fn hs_inner(&self, other: &PauliSum) -> Result<Complex64> {
        self.check_dims(other)?;
        let (small, large, flip) = if self.len() <= other.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut acc = ZERO;
        for (p, a) in &small.terms {
            if let Some(b) = large.terms.get(p) {
                acc += if flip { b.conj() * *a } else { a.conj() * *b };
            }
        }
        Ok(acc)
    }

    /// Term counts keyed by operator weight. The identity counts at weight 0.
    pub fn weight_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for p in self.terms.keys() {
            *h.entry(p.weight()).or_insert(0) += 1;
        }
        h
    }

    /// Restriction to terms whose strings satisfy `keep`.
    pub fn filter<F: Fn(&PauliString) -> bool>(&self, keep: F) -> PauliSum {
        PauliSum {
            n: self.n,
            terms: self.terms.iter().filter(|(p, _)| keep(p)).map(|(p, c)| (*p, *c)).collect(),
        }
    }

    /// `out += self * input` on a state vector of length `2^n`.
    pub fn apply_add(&self, input: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let dim = 1usize.checked_shl(self.n as u32).filter(|_| self.n < 31).ok_or(Error::ResourceCap {
            what: "state vector",
            n_qubits: self.n,
            cap: 30,
        })?;
        if input.len() != dim || out.len() != dim {
            return Err(Error::DimensionMismatch { left: dim, right: input.len().min(out.len()) });
        }
        for (p, c) in &self.terms {
            let base = Phase::from_power(p.y_count() as i64).to_complex() * *c;
            let x = p.x as usize;
            let z = p.z;
            for (j, amp) in input.iter().enumerate() {
                let v = if (j as u64 & z).count_ones() % 2 == 0 { base } else { -base };
                out[j ^ x] += v * *amp;
            }
        }
        Ok(())
    }

    /// `self * input` as a fresh vector.
    pub fn apply(&self, input: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = alloc::vec![ZERO; input.len()];
        self.apply_add(input, &mut out)?;
        Ok(out)
    }

    /// Label strings and coefficients in canonical order.
    pub fn to_labels(&self) -> Vec<(String, Complex64)> {
        self.terms.iter().map(|(p, c)| (alloc::format!("{p}"), *c)).collect()
    }
}

/// `C^(0) = dh`, `C^(k) = [h, C^(k-1)]`.
pub fn nested_commutator(h: &PauliSum, dh: &PauliSum, n: usize) -> Result<PauliSum> {
    h.check_dims(dh)?;
    let mut c = dh.clone();
    for _ in 0..n {
        c = h.commutator(&c)?;
    }
    Ok(c)
}

/// The whole chain `[C^(0), C^(1), ..., C^(n)]`.
pub fn nested_commutators(h: &PauliSum, dh: &PauliSum, n: usize) -> Result<Vec<PauliSum>> {
    h.check_dims(dh)?;
    let mut out = Vec::with_capacity(n + 1);
    out.push(dh.clone());
    for k in 1..=n {
        let next = h.commutator(&out[k - 1])?;
        out.push(next);
    }
    Ok(out)
}
