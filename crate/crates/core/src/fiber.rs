//! The graded model fiber `Λ^{0,•}(ℂⁿ)* ⊗ ℂ^rank` and dense exact maps on it.
//!
//! Basis order: subsets `S ⊆ {1..n}` in binary-counter order (bit `l−1`
//! stands for `w̄^l`), then the bundle index `e`. Index of `(S, e)` is
//! `mask(S)·rank + e`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{GaussianRational, PiLaurent};

/// Shape of the fiber: `n` complex directions and bundle rank.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiberSpace {
    pub n: usize,
    pub rank: usize,
}

/// Basis label `w̄^S ⊗ e` with 1-based entries in `subset` and 0-based `e`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FiberBasisIndex {
    pub subset: Vec<usize>,
    pub e: usize,
}

impl fmt::Display for FiberBasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.subset.is_empty() {
            write!(f, "1⊗e{}", self.e + 1)
        } else {
            let s: Vec<String> = self.subset.iter().map(|l| format!("w̄{l}")).collect();
            write!(f, "{}⊗e{}", s.join("∧"), self.e + 1)
        }
    }
}

impl FiberSpace {
    pub fn new(n: usize, rank: usize) -> Self {
        Self { n, rank }
    }

    pub fn dim(&self) -> usize {
        (1usize << self.n) * self.rank
    }

    pub fn mask_of(&self, idx: usize) -> usize {
        idx / self.rank
    }

    pub fn e_of(&self, idx: usize) -> usize {
        idx % self.rank
    }

    pub fn index(&self, mask: usize, e: usize) -> usize {
        mask * self.rank + e
    }

    /// Form degree of basis vector `idx`.
    pub fn degree(&self, idx: usize) -> usize {
        self.mask_of(idx).count_ones() as usize
    }

    pub fn basis(&self) -> Vec<FiberBasisIndex> {
        (0..self.dim())
            .map(|idx| {
                let mask = self.mask_of(idx);
                let subset = (0..self.n).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect();
                FiberBasisIndex { subset, e: self.e_of(idx) }
            })
            .collect()
    }

    fn check_mode(&self, l: usize) -> Result<()> {
        if l >= self.n {
            return Err(Error::IndexOutOfRange { what: "mode", index: l, bound: self.n });
        }
        Ok(())
    }

    /// `w̄^{l+1} ∧ ·` (0-based `l`), identity on the bundle factor.
    pub fn wedge(&self, l: usize) -> Result<FiberMap> {
        self.check_mode(l)?;
        let mut m = FiberMap::zero(self.dim());
        for mask in 0..(1usize << self.n) {
            if mask >> l & 1 == 1 {
                continue;
            }
            let below = (mask & ((1 << l) - 1)).count_ones();
            let sign = if below.is_multiple_of(2) { 1 } else { -1 };
            for e in 0..self.rank {
                m.set(self.index(mask | 1 << l, e), self.index(mask, e), PiLaurent::from_int(sign));
            }
        }
        Ok(m)
    }

    /// Interior product with `w̄_{l+1}`: the adjoint of [`Self::wedge`].
    pub fn contraction(&self, l: usize) -> Result<FiberMap> {
        Ok(self.wedge(l)?.adjoint())
    }

    /// `I_j`: orthogonal projector onto form degree `j`.
    pub fn degree_projector(&self, j: usize) -> FiberMap {
        let mut m = FiberMap::zero(self.dim());
        for idx in (0..self.dim()).filter(|&i| self.degree(i) == j) {
            m.set(idx, idx, PiLaurent::one());
        }
        m
    }

    /// `𝒩`: multiplication by the form degree.
    pub fn number_operator(&self) -> FiberMap {
        let mut m = FiberMap::zero(self.dim());
        for idx in 0..self.dim() {
            m.set(idx, idx, PiLaurent::from_int(self.degree(idx) as i64));
        }
        m
    }

    /// `Id_Λ ⊗ a` for a `rank × rank` block `a`.
    pub fn bundle_map(&self, a: &[Vec<GaussianRational>]) -> FiberMap {
        let mut m = FiberMap::zero(self.dim());
        for mask in 0..(1usize << self.n) {
            for (e, row) in a.iter().enumerate() {
                for (f, c) in row.iter().enumerate() {
                    m.set(self.index(mask, e), self.index(mask, f), PiLaurent::constant(c.clone()));
                }
            }
        }
        m
    }

    /// `form ⊗ a`: tensor of a form-part map (acting on the `Λ` factor only, i.e.
    /// block-diagonal in `e` with identical blocks) with a bundle block `a`.
    pub fn tensor(&self, form: &FiberMap, a: &[Vec<GaussianRational>]) -> FiberMap {
        let mut m = FiberMap::zero(self.dim());
        let forms = 1usize << self.n;
        for r in 0..forms {
            for c in 0..forms {
                let x = form.get(self.index(r, 0), self.index(c, 0));
                if x.is_zero() {
                    continue;
                }
                for (e, row) in a.iter().enumerate() {
                    for (f, v) in row.iter().enumerate() {
                        if !v.is_zero() {
                            m.set(self.index(r, e), self.index(c, f), x.scale(v));
                        }
                    }
                }
            }
        }
        m
    }

    /// Keeps the rows of form degree `d`.
    pub fn row_block(&self, m: &FiberMap, d: usize) -> FiberMap {
        let dim = self.dim();
        let mut out = FiberMap::zero(dim);
        for r in (0..dim).filter(|&r| self.degree(r) == d) {
            for c in 0..dim {
                let v = m.get(r, c);
                if !v.is_zero() {
                    out.set(r, c, v.clone());
                }
            }
        }
        out
    }

    /// Form degrees of the nonzero rows of `m`.
    pub fn row_degrees(&self, m: &FiberMap) -> Vec<usize> {
        let mut seen = vec![false; self.n + 1];
        for r in 0..self.dim() {
            if (0..self.dim()).any(|c| !m.get(r, c).is_zero()) {
                seen[self.degree(r)] = true;
            }
        }
        (0..=self.n).filter(|&d| seen[d]).collect()
    }

    /// The common degree shift `deg(row) − deg(col)` of all nonzero entries, if
    /// homogeneous. The zero map reports `Some(0)`.
    pub fn degree_shift(&self, m: &FiberMap) -> Option<i32> {
        let mut shift = None;
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                if m.get(r, c).is_zero() {
                    continue;
                }
                let s = self.degree(r) as i32 - self.degree(c) as i32;
                match shift {
                    None => shift = Some(s),
                    Some(t) if t != s => return None,
                    _ => {}
                }
            }
        }
        Some(shift.unwrap_or(0))
    }
}

/// Dense square matrix over [`PiLaurent`], row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FiberMap {
    dim: usize,
    entries: Vec<PiLaurent>,
}

impl FiberMap {
    pub fn zero(dim: usize) -> Self {
        Self { dim, entries: vec![PiLaurent::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zero(dim);
        for i in 0..dim {
            m.set(i, i, PiLaurent::one());
        }
        m
    }

    pub fn scalar(dim: usize, c: &PiLaurent) -> Self {
        let mut m = Self::zero(dim);
        for i in 0..dim {
            m.set(i, i, c.clone());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<PiLaurent>>) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "fiber map must be square");
        Self { dim, entries: rows.into_iter().flatten().collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> &PiLaurent {
        &self.entries[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: PiLaurent) {
        self.entries[r * self.dim + c] = v;
    }

    pub fn rows(&self) -> Vec<Vec<PiLaurent>> {
        self.entries.chunks(self.dim).map(<[PiLaurent]>::to_vec).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(PiLaurent::is_zero)
    }

    /// Conjugate transpose in the orthonormal basis.
    pub fn adjoint(&self) -> Self {
        let mut m = Self::zero(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                let v = self.get(c, r);
                if !v.is_zero() {
                    m.set(r, c, v.conj());
                }
            }
        }
        m
    }

    pub fn scale(&self, c: &PiLaurent) -> Self {
        if c.is_zero() {
            return Self::zero(self.dim);
        }
        Self { dim: self.dim, entries: self.entries.iter().map(|x| x * c).collect() }
    }

    pub fn trace(&self) -> PiLaurent {
        let mut t = PiLaurent::zero();
        for i in 0..self.dim {
            t += self.get(i, i);
        }
        t
    }

    /// `Σ |m_rc|²` computed as `tr(M† M)`.
    pub fn frobenius_sqr(&self) -> PiLaurent {
        let mut t = PiLaurent::zero();
        for x in &self.entries {
            t += &(&x.conj() * x);
        }
        t
    }

    pub fn add_assign(&mut self, o: &FiberMap) {
        assert_eq!(self.dim, o.dim);
        for (a, b) in self.entries.iter_mut().zip(&o.entries) {
            if !b.is_zero() {
                *a += b;
            }
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::identity(self.dim);
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Entrywise floating shadow, row-major.
    pub fn eval(&self, pi: f64) -> Vec<num_complex::Complex64> {
        self.entries.iter().map(|x| x.eval(pi)).collect()
    }
}

impl std::ops::Add<&FiberMap> for &FiberMap {
    type Output = FiberMap;
    fn add(self, o: &FiberMap) -> FiberMap {
        let mut out = self.clone();
        out.add_assign(o);
        out
    }
}

impl std::ops::Sub<&FiberMap> for &FiberMap {
    type Output = FiberMap;
    fn sub(self, o: &FiberMap) -> FiberMap {
        let mut out = self.clone();
        out.add_assign(&-o);
        out
    }
}

impl std::ops::Neg for &FiberMap {
    type Output = FiberMap;
    fn neg(self) -> FiberMap {
        FiberMap { dim: self.dim, entries: self.entries.iter().map(|x| -x).collect() }
    }
}

impl std::ops::Mul<&FiberMap> for &FiberMap {
    type Output = FiberMap;
    fn mul(self, o: &FiberMap) -> FiberMap {
        assert_eq!(self.dim, o.dim);
        let d = self.dim;
        let mut out = FiberMap::zero(d);
        for r in 0..d {
            for k in 0..d {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..d {
                    let b = o.get(k, c);
                    if !b.is_zero() {
                        out.entries[r * d + c] += &(a * b);
                    }
                }
            }
        }
        out
    }
}

impl Serialize for FiberMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiberMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<PiLaurent>>::deserialize(d)?;
        if rows.iter().any(|r| r.len() != rows.len()) {
            return Err(serde::de::Error::custom("fiber map must be square"));
        }
        Ok(FiberMap::from_rows(rows))
    }
}

impl fmt::Display for FiberMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.entries.chunks(self.dim) {
            let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn basis_vec(sp: &FiberSpace, mask: usize) -> usize {
        sp.index(mask, 0)
    }

    #[test]
    fn wedge_sign_convention() {
        let sp = FiberSpace::new(2, 1);
        let w1 = sp.wedge(0).unwrap();
        // w̄¹ ∧ w̄² = +w̄¹∧w̄²
        assert_eq!(*w1.get(basis_vec(&sp, 0b11), basis_vec(&sp, 0b10)), PiLaurent::one());
        let w2 = sp.wedge(1).unwrap();
        // w̄² ∧ w̄¹ = −w̄¹∧w̄²
        assert_eq!(*w2.get(basis_vec(&sp, 0b11), basis_vec(&sp, 0b01)), PiLaurent::from_int(-1));
        let c1 = sp.contraction(0).unwrap();
        assert_eq!(*c1.get(basis_vec(&sp, 0b10), basis_vec(&sp, 0b11)), PiLaurent::one());
        assert!(sp.wedge(2).is_err());
    }

    #[test]
    fn projectors_resolve_identity_and_count_degree() {
        for (n, rank) in [(1, 1), (2, 2), (3, 1), (4, 1)] {
            let sp = FiberSpace::new(n, rank);
            let mut sum = FiberMap::zero(sp.dim());
            for j in 0..=n {
                sum.add_assign(&sp.degree_projector(j));
            }
            assert_eq!(sum, FiberMap::identity(sp.dim()));
            let mut num = FiberMap::zero(sp.dim());
            for l in 0..n {
                num.add_assign(&(&sp.wedge(l).unwrap() * &sp.contraction(l).unwrap()));
            }
            assert_eq!(num, sp.number_operator());
        }
    }

    #[test]
    fn canonical_anticommutation() {
        for n in 1..=4 {
            let sp = FiberSpace::new(n, 2);
            for l in 0..n {
                let w = sp.wedge(l).unwrap();
                assert!((&w * &w).is_zero());
                for m in 0..n {
                    let c = sp.contraction(m).unwrap();
                    let ac = &(&w * &c) + &(&c * &w);
                    let expect =
                        if l == m { FiberMap::identity(sp.dim()) } else { FiberMap::zero(sp.dim()) };
                    assert_eq!(ac, expect, "l={l} m={m}");
                }
            }
        }
    }

    #[test]
    fn degree_shift_is_detected() {
        let sp = FiberSpace::new(3, 1);
        let w = &sp.wedge(0).unwrap() * &sp.wedge(2).unwrap();
        assert_eq!(sp.degree_shift(&w), Some(2));
        assert_eq!(sp.degree_shift(&w.adjoint()), Some(-2));
        let mixed = &w + &FiberMap::identity(sp.dim());
        assert_eq!(sp.degree_shift(&mixed), None);
        for j in 0..=3 {
            for k in 0..=3 {
                if j != k + 2 {
                    let p = &(&sp.degree_projector(j) * &w) * &sp.degree_projector(k);
                    assert!(p.is_zero());
                }
            }
        }
    }

    fn small_map(dim: usize) -> impl Strategy<Value = FiberMap> {
        prop::collection::vec((-5i64..=5, -5i64..=5, -2i32..=2), dim * dim).prop_map(move |v| {
            let rows = v
                .chunks(dim)
                .map(|r| {
                    r.iter()
                        .map(|&(a, b, e)| {
                            PiLaurent::monomial(
                                GaussianRational::new(crate::scalar::rat(a, 1), crate::scalar::rat(b, 1)),
                                e,
                            )
                        })
                        .collect()
                })
                .collect();
            FiberMap::from_rows(rows)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn adjoint_is_involution_and_reverses_products(a in small_map(4), b in small_map(4)) {
            prop_assert_eq!(a.adjoint().adjoint(), a.clone());
            prop_assert_eq!((&a * &b).adjoint(), &b.adjoint() * &a.adjoint());
        }
    }
}
