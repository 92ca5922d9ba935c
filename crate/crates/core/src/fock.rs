//! Kernel states `Σ b^α z^β z̄'^γ 𝒫(Z,Z') ⊗ F` and the ladder algebra acting on them.
//!
//! `𝒫(Z,Z') = exp(−π/2 (|z|² + |z'|² − 2 z·z̄'))`. Every state is kept in the
//! canonical order (creation operators `b` leftmost, then `z`, then the
//! parameter `z̄'`), and every monomial is an eigenvector of
//! `ℒ₀ = Σ b_i b_i⁺ + 4π𝒩` on each form-degree block of its coefficient.
//!
//! Each stored term also carries a pole multiset: the term stands for
//! `F / ∏(λ − 4πk)^{m_k}`. Resolvent insertions only ever append poles, so the
//! `λ`-dependence stays factored until the residue is taken.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::fiber::{FiberMap, FiberSpace};
use crate::scalar::{GaussianRational, PiLaurent, Poles};

/// Largest supported number of complex directions.
pub const MAX_MODES: usize = 6;

type Exps = [u8; MAX_MODES];

fn exps_total(e: &Exps) -> usize {
    e.iter().map(|&x| x as usize).sum()
}

fn exps_fmt(e: &Exps, n: usize) -> String {
    let parts: Vec<String> = e[..n].iter().map(u8::to_string).collect();
    format!("({})", parts.join(","))
}


/// Exponent triple `(α, β, γ)` of `b^α z^β z̄'^γ 𝒫`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub alpha: Exps,
    pub beta: Exps,
    pub gamma: Exps,
}

impl Monomial {
    /// `𝒫` itself.
    pub fn vacuum() -> Self {
        Self::default()
    }

    /// Builds from slices (0-padded to [`MAX_MODES`]).
    pub fn new(alpha: &[u8], beta: &[u8], gamma: &[u8]) -> Self {
        let mut m = Self::default();
        m.alpha[..alpha.len()].copy_from_slice(alpha);
        m.beta[..beta.len()].copy_from_slice(beta);
        m.gamma[..gamma.len()].copy_from_slice(gamma);
        m
    }

    pub fn alpha_len(&self) -> usize {
        exps_total(&self.alpha)
    }

    pub fn has_parameter(&self) -> bool {
        self.gamma.iter().any(|&g| g > 0)
    }

    pub fn label(&self, n: usize) -> String {
        format!(
            "b^{} z^{} zbar'^{}",
            exps_fmt(&self.alpha, n),
            exps_fmt(&self.beta, n),
            exps_fmt(&self.gamma, n)
        )
    }
}

/// Function-part generators (0-based mode index). Fiber maps enter through
/// [`OperatorExpr::fiber`] since they commute with all of these.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Generator {
    /// `b_i = −2∂_{z_i} + π z̄_i`
    B(usize),
    /// `b_i⁺ = 2∂_{z̄_i} + π z_i`
    BPlus(usize),
    /// multiplication by `z_i`
    Z(usize),
    /// multiplication by `z̄_i`
    ZBar(usize),
    /// `∂_{z_i} = (π z̄_i − b_i)/2`
    Dz(usize),
    /// `∂_{z̄_i} = (b_i⁺ − π z_i)/2`
    DzBar(usize),
}

impl Generator {
    pub fn mode(self) -> usize {
        match self {
            Self::B(i) | Self::BPlus(i) | Self::Z(i) | Self::ZBar(i) | Self::Dz(i) | Self::DzBar(i) => i,
        }
    }

    /// Formal `L²` adjoint with its sign: `(∂_z)* = −∂_z̄`.
    pub fn adjoint(self) -> (Self, bool) {
        match self {
            Self::B(i) => (Self::BPlus(i), false),
            Self::BPlus(i) => (Self::B(i), false),
            Self::Z(i) => (Self::ZBar(i), false),
            Self::ZBar(i) => (Self::Z(i), false),
            Self::Dz(i) => (Self::DzBar(i), true),
            Self::DzBar(i) => (Self::Dz(i), true),
        }
    }

    /// Rewrites `self · (b^α z^β z̄'^γ 𝒫)` into canonical monomials.
    pub fn act(self, m: &Monomial) -> Vec<(Monomial, PiLaurent)> {
        let mut out = Vec::with_capacity(3);
        match self {
            Self::B(i) => {
                let mut r = *m;
                r.alpha[i] += 1;
                out.push((r, PiLaurent::one()));
            }
            Self::BPlus(i) => {
                // b⁺ b^α = b^α b⁺ + 4πα_i b^{α−e_i}, and b⁺(z^β z̄'^γ 𝒫) = 0.
                if m.alpha[i] > 0 {
                    let mut r = *m;
                    r.alpha[i] -= 1;
                    out.push((r, PiLaurent::rational(4 * m.alpha[i] as i64, 1, 1)));
                }
            }
            Self::Z(i) => {
                // z b^α = b^α z + 2α_i b^{α−e_i}
                let mut r = *m;
                r.beta[i] += 1;
                out.push((r, PiLaurent::one()));
                if m.alpha[i] > 0 {
                    let mut r = *m;
                    r.alpha[i] -= 1;
                    out.push((r, PiLaurent::from_int(2 * m.alpha[i] as i64)));
                }
            }
            Self::ZBar(i) => {
                // z̄ commutes with b; z̄ z^β z̄'^γ 𝒫 = (1/2π) b z^β z̄'^γ 𝒫
                //   + (β_i/π) z^{β−e_i} z̄'^γ 𝒫 + z^β z̄'^{γ+e_i} 𝒫
                let mut r = *m;
                r.alpha[i] += 1;
                out.push((r, PiLaurent::rational(1, 2, -1)));
                if m.beta[i] > 0 {
                    let mut r = *m;
                    r.beta[i] -= 1;
                    out.push((r, PiLaurent::rational(m.beta[i] as i64, 1, -1)));
                }
                let mut r = *m;
                r.gamma[i] += 1;
                out.push((r, PiLaurent::one()));
            }
            Self::Dz(i) => {
                for (r, c) in Self::ZBar(i).act(m) {
                    out.push((r, c.shift_pi(1).scale(&GaussianRational::ratio(1, 2))));
                }
                for (r, c) in Self::B(i).act(m) {
                    out.push((r, c.scale(&GaussianRational::ratio(-1, 2))));
                }
            }
            Self::DzBar(i) => {
                for (r, c) in Self::BPlus(i).act(m) {
                    out.push((r, c.scale(&GaussianRational::ratio(1, 2))));
                }
                for (r, c) in Self::Z(i).act(m) {
                    out.push((r, c.shift_pi(1).scale(&GaussianRational::ratio(-1, 2))));
                }
            }
        }
        out
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::B(i) => write!(f, "b{}", i + 1),
            Self::BPlus(i) => write!(f, "b+{}", i + 1),
            Self::Z(i) => write!(f, "z{}", i + 1),
            Self::ZBar(i) => write!(f, "zbar{}", i + 1),
            Self::Dz(i) => write!(f, "d/dz{}", i + 1),
            Self::DzBar(i) => write!(f, "d/dzbar{}", i + 1),
        }
    }
}

/// Applies a word (leftmost generator acts last) to one monomial.
pub fn apply_word(word: &[Generator], m: &Monomial) -> BTreeMap<Monomial, PiLaurent> {
    let mut cur: BTreeMap<Monomial, PiLaurent> = BTreeMap::new();
    cur.insert(*m, PiLaurent::one());
    for g in word.iter().rev() {
        let mut next: BTreeMap<Monomial, PiLaurent> = BTreeMap::new();
        for (mono, c) in &cur {
            for (r, d) in g.act(mono) {
                let slot = next.entry(r).or_default();
                *slot += &(c * &d);
            }
        }
        next.retain(|_, c| !c.is_zero());
        cur = next;
    }
    cur
}

/// Fiber coefficient `s·Id + M` of a word. Keeping the scalar part apart
/// avoids dense products for the many curvature terms that are multiples
/// of the identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coefficient {
    pub scalar: PiLaurent,
    pub map: Option<FiberMap>,
}

impl Coefficient {
    pub fn scalar(s: PiLaurent) -> Self {
        Self { scalar: s, map: None }
    }

    pub fn map(m: FiberMap) -> Self {
        Self { scalar: PiLaurent::zero(), map: Some(m) }
    }

    pub fn is_zero(&self) -> bool {
        self.scalar.is_zero() && self.map.as_ref().is_none_or(FiberMap::is_zero)
    }

    fn add_assign(&mut self, o: &Coefficient) {
        self.scalar += &o.scalar;
        if let Some(m) = &o.map {
            match &mut self.map {
                Some(x) => x.add_assign(m),
                None => self.map = Some(m.clone()),
            }
        }
    }

    fn scaled(&self, c: &PiLaurent) -> Self {
        Self { scalar: &self.scalar * c, map: self.map.as_ref().map(|m| m.scale(c)) }
    }

    fn mul(&self, o: &Coefficient) -> Self {
        let scalar = &self.scalar * &o.scalar;
        let map = match (&self.map, &o.map) {
            (None, None) => None,
            (Some(a), None) => Some(a.scale(&o.scalar)),
            (None, Some(b)) => Some(b.scale(&self.scalar)),
            (Some(a), Some(b)) => {
                let mut m = a * b;
                m.add_assign(&a.scale(&o.scalar));
                m.add_assign(&b.scale(&self.scalar));
                Some(m)
            }
        };
        Self { scalar, map }
    }

    fn adjoint(&self) -> Self {
        Self { scalar: self.scalar.conj(), map: self.map.as_ref().map(FiberMap::adjoint) }
    }

    /// `(s·Id + M)·F`.
    pub fn apply(&self, f: &FiberMap) -> FiberMap {
        let mut out = f.scale(&self.scalar);
        if let Some(m) = &self.map {
            out.add_assign(&(m * f));
        }
        out
    }

    /// As a dense map.
    pub fn to_map(&self, dim: usize) -> FiberMap {
        let mut out = FiberMap::scalar(dim, &self.scalar);
        if let Some(m) = &self.map {
            out.add_assign(m);
        }
        out
    }
}

/// Noncommutative polynomial `Σ_w C_w ⊗ w` in the generators with fiber
/// coefficients. Words are keyed by their generator sequence.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OperatorExpr {
    words: BTreeMap<Vec<Generator>, Coefficient>,
}

impl OperatorExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::word(PiLaurent::one(), Vec::new())
    }

    pub fn generator(g: Generator) -> Self {
        Self::word(PiLaurent::one(), vec![g])
    }

    /// `c · g₁ g₂ ⋯`.
    pub fn word(c: PiLaurent, gens: Vec<Generator>) -> Self {
        let mut out = Self::zero();
        out.add_word(gens, Coefficient::scalar(c));
        out
    }

    /// `M ⊗ g₁ g₂ ⋯`.
    pub fn fiber_word(m: FiberMap, gens: Vec<Generator>) -> Self {
        let mut out = Self::zero();
        out.add_word(gens, Coefficient::map(m));
        out
    }

    /// The constant fiber map `M`.
    pub fn fiber(m: FiberMap) -> Self {
        Self::fiber_word(m, Vec::new())
    }

    pub fn add_word(&mut self, gens: Vec<Generator>, c: Coefficient) {
        if c.is_zero() {
            return;
        }
        let slot = self
            .words
            .entry(gens.clone())
            .or_insert_with(|| Coefficient::scalar(PiLaurent::zero()));
        slot.add_assign(&c);
        if slot.is_zero() {
            self.words.remove(&gens);
        }
    }

    pub fn words(&self) -> impl Iterator<Item = (&Vec<Generator>, &Coefficient)> {
        self.words.iter()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn add(&self, o: &OperatorExpr) -> Self {
        let mut out = self.clone();
        for (w, c) in &o.words {
            out.add_word(w.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &PiLaurent) -> Self {
        let mut out = Self::zero();
        for (w, k) in &self.words {
            out.add_word(w.clone(), k.scaled(c));
        }
        out
    }

    /// Operator product `self ∘ o` (apply `o` first).
    pub fn compose(&self, o: &OperatorExpr) -> Self {
        let mut out = Self::zero();
        for (wa, ca) in &self.words {
            for (wb, cb) in &o.words {
                let mut w = wa.clone();
                w.extend_from_slice(wb);
                out.add_word(w, ca.mul(cb));
            }
        }
        out
    }

    /// Formal adjoint: reversed words, `b ↔ b⁺`, `z ↔ z̄`, `∂_z ↦ −∂_z̄`,
    /// conjugate-transposed coefficients.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for (w, c) in &self.words {
            let mut flips = 0;
            let gens: Vec<Generator> = w
                .iter()
                .rev()
                .map(|g| {
                    let (h, neg) = g.adjoint();
                    flips += neg as u32;
                    h
                })
                .collect();
            let mut k = c.adjoint();
            if flips % 2 == 1 {
                k = k.scaled(&PiLaurent::from_int(-1));
            }
            out.add_word(gens, k);
        }
        out
    }

    /// Exact equality of the operators' action on every monomial of the given
    /// states is what tests use; this is structural equality of words.
    pub fn structurally_eq(&self, o: &OperatorExpr) -> bool {
        self == o
    }
}

impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.words.is_empty() {
            return write!(f, "0");
        }
        for (w, c) in &self.words {
            let gens: Vec<String> = w.iter().map(ToString::to_string).collect();
            let map = if c.map.is_some() { " + M" } else { "" };
            writeln!(f, "({}{map}) {}", c.scalar, gens.join(" "))?;
        }
        Ok(())
    }
}

/// How `(λ − ℒ₀)⁻¹ P^{N⊥}` is inserted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResolventMode {
    /// Attach the pole `(λ − 4π(|α|+d))⁻¹`.
    SymbolicLambda,
    /// Specialize at `λ = 0`: multiply by `−1/(4π(|α|+d))`.
    AtZero,
}

/// Sum `Σ_poles F_poles / ∏(λ−4πk)^{m_k}` of fiber maps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LambdaFiberMap {
    dim: usize,
    parts: BTreeMap<Poles, FiberMap>,
}

impl LambdaFiberMap {
    pub fn zero(dim: usize) -> Self {
        Self { dim, parts: BTreeMap::new() }
    }

    pub fn constant(m: FiberMap) -> Self {
        let mut out = Self::zero(m.dim());
        out.add(Poles::none(), &m);
        out
    }

    pub fn add(&mut self, poles: Poles, m: &FiberMap) {
        if m.is_zero() {
            return;
        }
        let dim = self.dim;
        let slot = self.parts.entry(poles.clone()).or_insert_with(|| FiberMap::zero(dim));
        slot.add_assign(m);
        if slot.is_zero() {
            self.parts.remove(&poles);
        }
    }

    pub fn add_all(&mut self, o: &LambdaFiberMap) {
        for (p, m) in &o.parts {
            self.add(p.clone(), m);
        }
    }

    pub fn parts(&self) -> impl Iterator<Item = (&Poles, &FiberMap)> {
        self.parts.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    /// The map when no `λ`-dependence is present.
    pub fn as_constant(&self) -> Option<FiberMap> {
        match self.parts.len() {
            0 => Some(FiberMap::zero(self.dim)),
            1 => self.parts.get(&Poles::none()).cloned(),
            _ => None,
        }
    }

    /// Conjugate transpose; rejects `λ`-dependent input.
    pub fn adjoint(&self) -> Result<FiberMap> {
        self.as_constant().map(|m| m.adjoint()).ok_or(Error::LambdaDependent)
    }

    /// `(1/2πi)∮_{|λ|=1}` applied entrywise: the `λ⁻¹` coefficient at the origin.
    pub fn residue(&self) -> FiberMap {
        let mut out = FiberMap::zero(self.dim);
        for (p, m) in &self.parts {
            let r = p.residue_at_origin();
            if !r.is_zero() {
                out.add_assign(&m.scale(&r));
            }
        }
        out
    }

    /// Entrywise rational functions.
    pub fn entries(&self) -> Vec<Vec<crate::scalar::LambdaRational>> {
        use crate::scalar::LambdaRational;
        let mut out = vec![vec![LambdaRational::zero(); self.dim]; self.dim];
        for (p, m) in &self.parts {
            let f = LambdaRational::from_poles(p.clone());
            for (r, row) in out.iter_mut().enumerate() {
                for (c, cell) in row.iter_mut().enumerate() {
                    let v = m.get(r, c);
                    if !v.is_zero() {
                        *cell = &*cell + &f.scale(v);
                    }
                }
            }
        }
        out
    }
}

/// Polynomial in `(z, z̄, z̄')` times `𝒫`, keyed by the three exponent vectors.
type Poly = BTreeMap<(Exps, Exps, Exps), PiLaurent>;

/// Expands `b^α z^β z̄'^γ 𝒫` into `q(z, z̄, z̄') 𝒫` using
/// `b_i(q𝒫) = (−2∂_{z_i}q + 2π(z̄_i − z̄'_i)q)𝒫`.
pub fn expand_polynomial(m: &Monomial, n: usize) -> BTreeMap<(Vec<u8>, Vec<u8>, Vec<u8>), PiLaurent> {
    expand(m, n)
        .into_iter()
        .map(|((a, b, c), v)| ((a[..n].to_vec(), b[..n].to_vec(), c[..n].to_vec()), v))
        .collect()
}

fn expand(m: &Monomial, n: usize) -> Poly {
    let mut p: Poly = BTreeMap::new();
    p.insert((m.beta, [0; MAX_MODES], m.gamma), PiLaurent::one());
    for i in 0..n {
        for _ in 0..m.alpha[i] {
            let mut next: Poly = BTreeMap::new();
            for ((z, zb, zp), c) in &p {
                if z[i] > 0 {
                    let mut k = *z;
                    k[i] -= 1;
                    *next.entry((k, *zb, *zp)).or_default() += &c.scale(&GaussianRational::from_int(-2 * z[i] as i64));
                }
                let mut kb = *zb;
                kb[i] += 1;
                *next.entry((*z, kb, *zp)).or_default() += &c.shift_pi(1).scale(&GaussianRational::from_int(2));
                let mut kp = *zp;
                kp[i] += 1;
                *next.entry((*z, *zb, kp)).or_default() += &c.shift_pi(1).scale(&GaussianRational::from_int(-2));
            }
            next.retain(|_, c| !c.is_zero());
            p = next;
        }
    }
    p
}

/// `∫_{ℂⁿ} z^β z̄^γ e^{−π|z|²} dZ = δ_{βγ} β!/π^{|β|}`.
pub fn gaussian_moment(beta: &[u8], gamma: &[u8]) -> PiLaurent {
    if beta != gamma {
        return PiLaurent::zero();
    }
    let num: BigInt = beta.iter().flat_map(|&b| 1..=u32::from(b)).map(BigInt::from).product();
    let total: i32 = beta.iter().map(|&b| b as i32).sum();
    PiLaurent::monomial(GaussianRational::from_rat(BigRational::from_integer(num)), -total)
}

/// Canonical kernel state. See the module documentation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelState {
    space: FiberSpace,
    terms: BTreeMap<(Monomial, Poles), FiberMap>,
}

impl KernelState {
    pub fn zero(space: FiberSpace) -> Self {
        assert!(space.n <= MAX_MODES, "at most {MAX_MODES} modes supported");
        Self { space, terms: BTreeMap::new() }
    }

    /// `𝒫 ⊗ F`.
    pub fn vacuum(space: FiberSpace, f: FiberMap) -> Self {
        Self::monomial(space, Monomial::vacuum(), f)
    }

    pub fn monomial(space: FiberSpace, m: Monomial, f: FiberMap) -> Self {
        let mut s = Self::zero(space);
        s.add_term(m, Poles::none(), f);
        s
    }

    pub fn space(&self) -> FiberSpace {
        self.space
    }

    pub fn n(&self) -> usize {
        self.space.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Poles, &FiberMap)> {
        self.terms.iter().map(|((m, p), f)| (m, p, f))
    }

    /// Coefficient of `mono` with no poles attached.
    pub fn coefficient(&self, mono: &Monomial) -> FiberMap {
        self.terms
            .get(&(*mono, Poles::none()))
            .cloned()
            .unwrap_or_else(|| FiberMap::zero(self.space.dim()))
    }

    pub fn add_term(&mut self, m: Monomial, poles: Poles, f: FiberMap) {
        if f.is_zero() {
            return;
        }
        let key = (m, poles);
        match self.terms.get_mut(&key) {
            Some(x) => {
                x.add_assign(&f);
                if x.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, f);
            }
        }
    }

    pub fn add(&self, o: &KernelState) -> Self {
        let mut out = self.clone();
        for ((m, p), f) in &o.terms {
            out.add_term(*m, p.clone(), f.clone());
        }
        out
    }

    pub fn sub(&self, o: &KernelState) -> Self {
        self.add(&o.scale(&PiLaurent::from_int(-1)))
    }

    pub fn scale(&self, c: &PiLaurent) -> Self {
        let mut out = Self::zero(self.space);
        for ((m, p), f) in &self.terms {
            out.add_term(*m, p.clone(), f.scale(c));
        }
        out
    }

    /// Left-multiplies every coefficient by `M`.
    pub fn apply_fiber(&self, m: &FiberMap) -> Self {
        let mut out = Self::zero(self.space);
        for ((mono, p), f) in &self.terms {
            out.add_term(*mono, p.clone(), m * f);
        }
        out
    }

    /// Multiplies by the parameter `z̄'_i`.
    pub fn mul_parameter(&self, i: usize) -> Self {
        let mut out = Self::zero(self.space);
        for ((m, p), f) in &self.terms {
            let mut r = *m;
            r.gamma[i] += 1;
            out.add_term(r, p.clone(), f.clone());
        }
        out
    }

    pub fn apply_generator(&self, g: Generator) -> Self {
        self.apply(&OperatorExpr::generator(g))
    }

    /// Applies an operator expression.
    pub fn apply(&self, op: &OperatorExpr) -> Self {
        let mut by_mono: BTreeMap<Monomial, Vec<(&Poles, &FiberMap)>> = BTreeMap::new();
        for ((m, p), f) in &self.terms {
            by_mono.entry(*m).or_default().push((p, f));
        }
        let mut out = Self::zero(self.space);
        for (mono, entries) in by_mono {
            let mut transfer: BTreeMap<Monomial, Coefficient> = BTreeMap::new();
            for (word, coeff) in op.words() {
                for (r, c) in apply_word(word, &mono) {
                    let slot = transfer.entry(r).or_insert_with(|| Coefficient::scalar(PiLaurent::zero()));
                    slot.add_assign(&coeff.scaled(&c));
                }
            }
            for (r, t) in transfer {
                if t.is_zero() {
                    continue;
                }
                for (p, f) in &entries {
                    out.add_term(r, (*p).clone(), t.apply(f));
                }
            }
        }
        out
    }

    fn for_each_block(&self, mut visit: impl FnMut(&Monomial, &Poles, usize, FiberMap)) {
        for ((m, p), f) in &self.terms {
            for d in self.space.row_degrees(f) {
                visit(m, p, d, self.space.row_block(f, d));
            }
        }
    }

    /// `ℒ₀`: scales the degree-`d` block of each monomial by `4π(|α|+d)`.
    pub fn apply_l0(&self) -> Self {
        let mut out = Self::zero(self.space);
        self.for_each_block(|m, p, d, block| {
            let k = (m.alpha_len() + d) as i64;
            out.add_term(*m, p.clone(), block.scale(&PiLaurent::rational(4 * k, 1, 1)));
        });
        out
    }

    /// `(λ − ℒ₀)⁻¹ P^{N⊥}`.
    pub fn resolvent_nperp(&self, mode: ResolventMode) -> Self {
        let mut out = Self::zero(self.space);
        self.for_each_block(|m, p, d, block| {
            let k = m.alpha_len() + d;
            if k == 0 {
                return;
            }
            match mode {
                ResolventMode::SymbolicLambda => out.add_term(*m, p.with(k as u32), block),
                ResolventMode::AtZero => {
                    out.add_term(*m, p.clone(), block.scale(&PiLaurent::rational(-1, 4 * k as i64, -1)))
                }
            }
        });
        out
    }

    /// Alias of [`Self::resolvent_nperp`] matching the two-mode interface.
    pub fn apply_resolvent(&self, mode: ResolventMode) -> Self {
        self.resolvent_nperp(mode)
    }

    /// `λ⁻¹ P^N`.
    pub fn proj_n_over_lambda(&self) -> Self {
        let mut out = Self::zero(self.space);
        for ((m, p), f) in &self.terms {
            if m.alpha_len() == 0 {
                out.add_term(*m, p.with(0), self.space.row_block(f, 0));
            }
        }
        out
    }

    /// `P^N`: keeps `|α| = 0`, form-degree 0 rows.
    pub fn project_n(&self) -> Self {
        let mut out = Self::zero(self.space);
        for ((m, p), f) in &self.terms {
            if m.alpha_len() == 0 {
                out.add_term(*m, p.clone(), self.space.row_block(f, 0));
            }
        }
        out
    }

    /// Restriction to the form-degree-`d` rows (`I_d ·`).
    pub fn project_degree(&self, d: usize) -> Self {
        let mut out = Self::zero(self.space);
        for ((m, p), f) in &self.terms {
            out.add_term(*m, p.clone(), self.space.row_block(f, d));
        }
        out
    }

    /// Drops every monomial carrying `z̄'`: the state's restriction to `Z' = 0`.
    pub fn at_parameter_origin(&self) -> Self {
        let mut out = Self::zero(self.space);
        for ((m, p), f) in &self.terms {
            if !m.has_parameter() {
                out.add_term(*m, p.clone(), f.clone());
            }
        }
        out
    }

    /// Kernel value at `Z = Z' = 0`.
    pub fn eval_at_origin(&self) -> LambdaFiberMap {
        let n = self.n();
        let mut out = LambdaFiberMap::zero(self.space.dim());
        for ((m, p), f) in &self.terms {
            if m.has_parameter() || exps_total(&m.beta) != m.alpha_len() {
                continue;
            }
            let c = expand(m, n).remove(&([0; MAX_MODES], [0; MAX_MODES], [0; MAX_MODES])).unwrap_or_default();
            if !c.is_zero() {
                out.add(p.clone(), &f.scale(&c));
            }
        }
        out
    }

    /// `Z ↦ 0` keeping the parameter: returns `Σ c_γ z̄'^γ` coefficients
    /// (times `𝒫(0,Z') = e^{−π|z'|²/2}`).
    pub fn eval_first_at_origin(&self) -> BTreeMap<(Vec<u8>, Poles), FiberMap> {
        let n = self.n();
        let mut out: BTreeMap<(Vec<u8>, Poles), FiberMap> = BTreeMap::new();
        for ((m, p), f) in &self.terms {
            for ((z, zb, zp), c) in expand(m, n) {
                if exps_total(&z) + exps_total(&zb) > 0 {
                    continue;
                }
                let key = (zp[..n].to_vec(), p.clone());
                let dim = self.space.dim();
                out.entry(key).or_insert_with(|| FiberMap::zero(dim)).add_assign(&f.scale(&c));
            }
        }
        out.retain(|_, f| !f.is_zero());
        out
    }

    /// Kernel of the adjoint operator's action at parameter origin.
    ///
    /// If `self` is the kernel `K(Z,Z')` of `X^†(λ)·(𝒫⊗I₀)`, the returned
    /// state is the kernel `(X P^N)(W, 0)` as a function of `W`: first variable
    /// at the origin, conjugate, swap roles (`z̄' ↦ z`). `λ` is formal and
    /// fixed by conjugation.
    pub fn mirror(&self) -> Self {
        let mut out = Self::zero(self.space);
        for ((gamma, p), f) in self.eval_first_at_origin() {
            let mut m = Monomial::vacuum();
            m.beta[..gamma.len()].copy_from_slice(&gamma);
            out.add_term(m, p, f.adjoint());
        }
        out
    }

    /// `⟨s₁, s₂⟩ = Σ tr(F₁† F₂) ∫ conj(f₁) f₂` over `Z ∈ ℂⁿ` at `Z' = 0`;
    /// conjugate-linear in the first slot.
    pub fn inner_product(&self, o: &KernelState) -> Result<PiLaurent> {
        for s in [self, o] {
            if s.terms.keys().any(|(m, p)| m.has_parameter() || !p.is_empty()) {
                return Err(Error::ParameterDependent);
            }
        }
        let n = self.n();
        let mut total = PiLaurent::zero();
        for ((m1, _), f1) in &self.terms {
            // move b^{α₁} across as (b⁺)^{α₁}
            let mut word = Vec::new();
            for i in 0..n {
                word.extend(std::iter::repeat_n(Generator::BPlus(i), m1.alpha[i] as usize));
            }
            let f1a = f1.adjoint();
            for ((m2, _), f2) in &o.terms {
                let tr = (&f1a * f2).trace();
                if tr.is_zero() {
                    continue;
                }
                let mut start = *m2;
                start.gamma = [0; MAX_MODES];
                for (r, c) in apply_word(&word, &start) {
                    if r.alpha_len() > 0 {
                        continue;
                    }
                    let mom = gaussian_moment(&r.beta[..n], &m1.beta[..n]);
                    if !mom.is_zero() {
                        total += &(&(&c * &mom) * &tr);
                    }
                }
            }
        }
        Ok(total)
    }

    /// Deterministic dump, one monomial per line, `b^α z^β zbar'^γ :: M<k>`,
    /// followed by the referenced matrices.
    pub fn debug_dump(&self) -> String {
        let n = self.n();
        let mut out = String::new();
        let mut mats: Vec<&FiberMap> = Vec::new();
        for ((m, p), f) in &self.terms {
            let k = match mats.iter().position(|x| *x == f) {
                Some(k) => k,
                None => {
                    mats.push(f);
                    mats.len() - 1
                }
            };
            let poles = if p.is_empty() { String::new() } else { format!(" {p}") };
            let _ = writeln!(out, "{}{poles} :: M{k}", m.label(n));
        }
        for (k, f) in mats.iter().enumerate() {
            let _ = write!(out, "M{k} =\n{f}");
        }
        out
    }
}

/// `(A ∘ B)(0,0) = ∫ A(0,W) B(W,0) dW`.
///
/// `left` is a general state `A(Z,Z')`; `right` is read at parameter origin
/// as the function `W ↦ B(W,0)`. Poles of the two sides multiply.
pub fn compose_at_origin(left: &KernelState, right: &KernelState) -> LambdaFiberMap {
    let n = left.n();
    let dim = left.space.dim();
    let zero = [0u8; MAX_MODES];
    // A(0,W) = Σ a_δ w̄^δ 𝒫(0,W)
    let mut a_parts: Vec<(Exps, Poles, FiberMap)> = Vec::new();
    for ((m, p), f) in &left.terms {
        for ((z, zb, zp), c) in expand(m, n) {
            if z == zero && zb == zero {
                a_parts.push((zp, p.clone(), f.scale(&c)));
            }
        }
    }
    // B(W,0) = Σ b_{μν} w^μ w̄^ν 𝒫(W,0)
    let mut b_parts: Vec<(Exps, Exps, Poles, FiberMap)> = Vec::new();
    for ((m, p), f) in &right.terms {
        for ((z, zb, zp), c) in expand(m, n) {
            if zp == zero {
                b_parts.push((z, zb, p.clone(), f.scale(&c)));
            }
        }
    }
    let mut out = LambdaFiberMap::zero(dim);
    for (delta, pa, fa) in &a_parts {
        for (mu, nu, pb, fb) in &b_parts {
            let mut bar = [0u8; MAX_MODES];
            for i in 0..n {
                bar[i] = delta[i] + nu[i];
            }
            let mom = gaussian_moment(&mu[..n], &bar[..n]);
            if mom.is_zero() {
                continue;
            }
            out.add(pa.merged(pb), &(fa * fb).scale(&mom));
        }
    }
    out
}

impl fmt::Display for KernelState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.debug_dump())
    }
}
