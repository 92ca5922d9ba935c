//! Exact scalars: Gaussian rationals, Laurent polynomials in a formal `π`,
//! and rational functions of the contour variable `λ` whose poles sit on
//! the lattice `4πℕ`.
//!
//! `π` is never evaluated here. Floating-point shadows (`eval`) exist only
//! so the numeric oracle and the tests can compare against quadrature.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Builds an exact rational `p/q`.
pub fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Formats a rational as `"p/q"` (or `"p"` for integers).
pub fn rat_to_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"p/q"` or `"p"` into a reduced rational.
pub fn parse_rat(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let p: BigInt = p.parse().map_err(|_| format!("bad numerator in {s:?}"))?;
    let q: BigInt = q.parse().map_err(|_| format!("bad denominator in {s:?}"))?;
    if q.is_zero() {
        return Err(format!("zero denominator in {s:?}"));
    }
    Ok(BigRational::new(p, q))
}

fn rat_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

// ---------------------------------------------------------------------------
// GaussianRational
// ---------------------------------------------------------------------------

/// Element `re + i·im` of `ℚ(i)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GaussianRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussianRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Self { re, im }
    }

    pub fn zero() -> Self {
        Self::new(BigRational::zero(), BigRational::zero())
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        Self::new(BigRational::zero(), BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Self::new(BigRational::from_integer(n.into()), BigRational::zero())
    }

    pub fn from_rat(r: BigRational) -> Self {
        Self::new(r, BigRational::zero())
    }

    /// `p/q` as a real Gaussian rational.
    pub fn ratio(p: i64, q: i64) -> Self {
        Self::from_rat(rat(p, q))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), -self.im.clone())
    }

    /// `|z|²` as a rational.
    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let d = self.norm_sqr();
        Some(Self::new(&self.re / &d, -&self.im / &d))
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        Self::new(&self.re * r, &self.im * r)
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(rat_f64(&self.re), rat_f64(&self.im))
    }
}

impl Default for GaussianRational {
    fn default() -> Self {
        Self::zero()
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", rat_to_string(&self.re)),
            (true, false) => write!(f, "{}i", rat_to_string(&self.im)),
            (false, false) => {
                let sign = if self.im.is_negative() { "-" } else { "+" };
                write!(f, "({} {} {}i)", rat_to_string(&self.re), sign, rat_to_string(&self.im.abs()))
            }
        }
    }
}

impl Add<&GaussianRational> for &GaussianRational {
    type Output = GaussianRational;
    fn add(self, o: &GaussianRational) -> GaussianRational {
        GaussianRational::new(&self.re + &o.re, &self.im + &o.im)
    }
}

impl Sub<&GaussianRational> for &GaussianRational {
    type Output = GaussianRational;
    fn sub(self, o: &GaussianRational) -> GaussianRational {
        GaussianRational::new(&self.re - &o.re, &self.im - &o.im)
    }
}

impl Mul<&GaussianRational> for &GaussianRational {
    type Output = GaussianRational;
    fn mul(self, o: &GaussianRational) -> GaussianRational {
        GaussianRational::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
}

impl Neg for &GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational::new(-self.re.clone(), -self.im.clone())
    }
}

impl AddAssign<&GaussianRational> for GaussianRational {
    fn add_assign(&mut self, o: &GaussianRational) {
        self.re += &o.re;
        self.im += &o.im;
    }
}

impl Serialize for GaussianRational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [rat_to_string(&self.re), rat_to_string(&self.im)].serialize(s)
    }
}

impl<'de> Deserialize<'de> for GaussianRational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Pair([serde_json::Value; 2]),
            Single(serde_json::Value),
        }
        fn part<E: serde::de::Error>(v: &serde_json::Value) -> Result<BigRational, E> {
            match v {
                serde_json::Value::String(s) => parse_rat(s).map_err(E::custom),
                serde_json::Value::Number(n) => n
                    .as_i64()
                    .map(|k| BigRational::from_integer(k.into()))
                    .ok_or_else(|| E::custom("non-integer number; use a \"p/q\" string")),
                _ => Err(E::custom("expected \"p/q\" string or integer")),
            }
        }
        match Repr::deserialize(d)? {
            Repr::Pair([re, im]) => Ok(Self::new(part(&re)?, part(&im)?)),
            Repr::Single(v) => Ok(Self::from_rat(part(&v)?)),
        }
    }
}

// ---------------------------------------------------------------------------
// PiLaurent
// ---------------------------------------------------------------------------

/// Finite sum `Σ c_m π^m` with `c_m ∈ ℚ(i)` and `m ∈ ℤ`. No zero coefficients
/// are stored, so structural equality is exact equality.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PiLaurent {
    terms: BTreeMap<i32, GaussianRational>,
}

impl PiLaurent {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(GaussianRational::one())
    }

    pub fn constant(c: GaussianRational) -> Self {
        Self::monomial(c, 0)
    }

    /// `c·π^exp`.
    pub fn monomial(c: GaussianRational, exp: i32) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exp, c);
        }
        Self { terms }
    }

    /// `(p/q)·π^exp`.
    pub fn rational(p: i64, q: i64, exp: i32) -> Self {
        Self::monomial(GaussianRational::ratio(p, q), exp)
    }

    pub fn from_int(n: i64) -> Self {
        Self::rational(n, 1, 0)
    }

    pub fn pi_pow(exp: i32) -> Self {
        Self::monomial(GaussianRational::one(), exp)
    }

    pub fn i() -> Self {
        Self::constant(GaussianRational::i())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &GaussianRational)> {
        self.terms.iter().map(|(&e, c)| (e, c))
    }

    /// Coefficient of `π^exp`.
    pub fn coeff(&self, exp: i32) -> GaussianRational {
        self.terms.get(&exp).cloned().unwrap_or_default()
    }

    /// The single `(c, exp)` pair when this is a nonzero monomial.
    pub fn as_monomial(&self) -> Option<(&GaussianRational, i32)> {
        if self.terms.len() == 1 {
            self.terms.iter().next().map(|(&e, c)| (c, e))
        } else {
            None
        }
    }

    pub fn conj(&self) -> Self {
        Self { terms: self.terms.iter().map(|(&e, c)| (e, c.conj())).collect() }
    }

    pub fn scale(&self, c: &GaussianRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { terms: self.terms.iter().map(|(&e, v)| (e, v * c)).collect() }
    }

    pub fn scale_rat(&self, r: &BigRational) -> Self {
        self.scale(&GaussianRational::from_rat(r.clone()))
    }

    /// Multiplies by `π^k`.
    pub fn shift_pi(&self, k: i32) -> Self {
        Self { terms: self.terms.iter().map(|(&e, c)| (e + k, c.clone())).collect() }
    }

    /// Inverse of a nonzero monomial; general inverses do not exist in the ring.
    pub fn inv_monomial(&self) -> Option<Self> {
        let (c, e) = self.as_monomial()?;
        Some(Self::monomial(c.inv()?, -e))
    }

    pub fn add_term(&mut self, exp: i32, c: &GaussianRational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(exp).or_insert_with(GaussianRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&exp);
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Floating-point shadow with `π ↦ pi`.
    pub fn eval(&self, pi: f64) -> Complex64 {
        self.terms.iter().map(|(&e, c)| c.to_complex() * pi.powi(e)).sum()
    }
}

impl fmt::Display for PiLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (&e, c)) in self.terms.iter().enumerate() {
            if idx > 0 {
                write!(f, " + ")?;
            }
            match e {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}·π")?,
                _ => write!(f, "{c}·π^{e}")?,
            }
        }
        Ok(())
    }
}

impl From<GaussianRational> for PiLaurent {
    fn from(c: GaussianRational) -> Self {
        Self::constant(c)
    }
}

impl Add<&PiLaurent> for &PiLaurent {
    type Output = PiLaurent;
    fn add(self, o: &PiLaurent) -> PiLaurent {
        let mut out = self.clone();
        out += o;
        out
    }
}

impl Sub<&PiLaurent> for &PiLaurent {
    type Output = PiLaurent;
    fn sub(self, o: &PiLaurent) -> PiLaurent {
        let mut out = self.clone();
        out -= o;
        out
    }
}

impl Mul<&PiLaurent> for &PiLaurent {
    type Output = PiLaurent;
    fn mul(self, o: &PiLaurent) -> PiLaurent {
        let mut out = PiLaurent::zero();
        for (&ea, ca) in &self.terms {
            for (&eb, cb) in &o.terms {
                out.add_term(ea + eb, &(ca * cb));
            }
        }
        out
    }
}

impl Neg for &PiLaurent {
    type Output = PiLaurent;
    fn neg(self) -> PiLaurent {
        PiLaurent { terms: self.terms.iter().map(|(&e, c)| (e, -c)).collect() }
    }
}

impl AddAssign<&PiLaurent> for PiLaurent {
    fn add_assign(&mut self, o: &PiLaurent) {
        for (&e, c) in &o.terms {
            self.add_term(e, c);
        }
    }
}

impl SubAssign<&PiLaurent> for PiLaurent {
    fn sub_assign(&mut self, o: &PiLaurent) {
        for (&e, c) in &o.terms {
            self.add_term(e, &-c);
        }
    }
}

macro_rules! forward_owned {
    ($t:ty, $($tr:ident $m:ident),*) => {$(
        impl $tr<$t> for $t {
            type Output = $t;
            fn $m(self, o: $t) -> $t { (&self).$m(&o) }
        }
        impl $tr<&$t> for $t {
            type Output = $t;
            fn $m(self, o: &$t) -> $t { (&self).$m(o) }
        }
    )*};
}
forward_owned!(PiLaurent, Add add, Sub sub, Mul mul);
forward_owned!(GaussianRational, Add add, Sub sub, Mul mul);

impl Neg for PiLaurent {
    type Output = PiLaurent;
    fn neg(self) -> PiLaurent {
        -&self
    }
}

impl Neg for GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        -&self
    }
}

#[derive(Serialize, Deserialize)]
struct PiTerm {
    pi_exp: i32,
    coeff: GaussianRational,
}

impl Serialize for PiLaurent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<PiTerm> =
            self.terms.iter().map(|(&pi_exp, c)| PiTerm { pi_exp, coeff: c.clone() }).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PiLaurent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<PiTerm>::deserialize(d)?;
        let mut out = PiLaurent::zero();
        for t in v {
            out.add_term(t.pi_exp, &t.coeff);
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Pole multisets and LambdaRational
// ---------------------------------------------------------------------------

/// Denominator `∏_k (λ − 4πk)^{m_k}` stored as `k ↦ m_k`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Poles(BTreeMap<u32, u32>);

impl Poles {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn single(k: u32) -> Self {
        let mut p = Self::default();
        p.insert(k, 1);
        p
    }

    pub fn insert(&mut self, k: u32, mult: u32) {
        if mult > 0 {
            *self.0.entry(k).or_insert(0) += mult;
        }
    }

    pub fn with(&self, k: u32) -> Self {
        let mut p = self.clone();
        p.insert(k, 1);
        p
    }

    pub fn merged(&self, o: &Poles) -> Self {
        let mut p = self.clone();
        for (&k, &m) in &o.0 {
            p.insert(k, m);
        }
        p
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mult(&self, k: u32) -> u32 {
        self.0.get(&k).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.0.iter().map(|(&k, &m)| (k, m))
    }

    /// Coefficient of `λ⁻¹` in the Laurent expansion at `0` of `1/∏(λ−4πk)^{m_k}`.
    pub fn residue_at_origin(&self) -> PiLaurent {
        LambdaRational::from_poles(self.clone()).residue_at_origin()
    }
}

impl fmt::Display for Poles {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(&k, &m)| {
                let base = if k == 0 { "λ".to_string() } else { format!("(λ-{}π)", 4 * k) };
                if m == 1 {
                    base
                } else {
                    format!("{base}^{m}")
                }
            })
            .collect();
        write!(f, "1/[{}]", parts.join(""))
    }
}

#[derive(Serialize, Deserialize)]
struct PoleEntry {
    k: u32,
    mult: u32,
}

impl Serialize for Poles {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<PoleEntry> = self.0.iter().map(|(&k, &mult)| PoleEntry { k, mult }).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Poles {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<PoleEntry>::deserialize(d)?;
        let mut p = Poles::none();
        for e in v {
            p.insert(e.k, e.mult);
        }
        Ok(p)
    }
}

/// Rational function `N(λ) / ∏_k (λ − 4πk)^{m_k}` with `N ∈ ℚ(i)[π^{±1}][λ]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct LambdaRational {
    /// Coefficients of `N`, lowest power of `λ` first; no trailing zeros.
    numerator: Vec<PiLaurent>,
    poles: Poles,
}

impl LambdaRational {
    pub fn zero() -> Self {
        Self { numerator: Vec::new(), poles: Poles::none() }
    }

    pub fn constant(c: PiLaurent) -> Self {
        Self::new(vec![c], Poles::none())
    }

    /// The variable `λ` itself.
    pub fn lambda() -> Self {
        Self::new(vec![PiLaurent::zero(), PiLaurent::one()], Poles::none())
    }

    /// `1/∏(λ−4πk)^{m_k}`.
    pub fn from_poles(poles: Poles) -> Self {
        Self::new(vec![PiLaurent::one()], poles)
    }

    /// `(λ − 4πk)⁻¹`.
    pub fn simple_pole(k: u32) -> Self {
        Self::from_poles(Poles::single(k))
    }

    /// Builds and normalizes: cancels common factors `(λ − 4πk)`.
    pub fn new(numerator: Vec<PiLaurent>, poles: Poles) -> Self {
        let mut out = Self { numerator, poles };
        out.normalize();
        out
    }

    pub fn numerator(&self) -> &[PiLaurent] {
        &self.numerator
    }

    pub fn poles(&self) -> &Poles {
        &self.poles
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_empty()
    }

    /// True when no `λ`-dependence remains.
    pub fn as_constant(&self) -> Option<PiLaurent> {
        match self.numerator.len() {
            0 => Some(PiLaurent::zero()),
            1 if self.poles.is_empty() => Some(self.numerator[0].clone()),
            _ => None,
        }
    }

    fn trim(v: &mut Vec<PiLaurent>) {
        while v.last().is_some_and(PiLaurent::is_zero) {
            v.pop();
        }
    }

    fn root(k: u32) -> PiLaurent {
        PiLaurent::rational(4 * k as i64, 1, 1)
    }

    fn eval_poly(p: &[PiLaurent], x: &PiLaurent) -> PiLaurent {
        let mut acc = PiLaurent::zero();
        for c in p.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    /// Synthetic division by `(λ − a)`; caller guarantees `a` is a root.
    fn deflate(p: &[PiLaurent], a: &PiLaurent) -> Vec<PiLaurent> {
        let d = p.len() - 1;
        let mut q = vec![PiLaurent::zero(); d];
        let mut carry = PiLaurent::zero();
        for i in (1..=d).rev() {
            carry = &p[i] + &(&carry * a);
            q[i - 1] = carry.clone();
        }
        q
    }

    fn normalize(&mut self) {
        Self::trim(&mut self.numerator);
        if self.numerator.is_empty() {
            self.poles = Poles::none();
            return;
        }
        let keys: Vec<u32> = self.poles.0.keys().copied().collect();
        for k in keys {
            let a = Self::root(k);
            while self.poles.mult(k) > 0
                && self.numerator.len() > 1
                && Self::eval_poly(&self.numerator, &a).is_zero()
            {
                self.numerator = Self::deflate(&self.numerator, &a);
                let m = self.poles.0.get_mut(&k).unwrap();
                *m -= 1;
                if *m == 0 {
                    self.poles.0.remove(&k);
                }
            }
        }
    }

    fn poly_mul(a: &[PiLaurent], b: &[PiLaurent]) -> Vec<PiLaurent> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![PiLaurent::zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += &(x * y);
            }
        }
        out
    }

    /// `(λ − 4πk)^m` as a polynomial.
    fn factor_pow(k: u32, m: u32) -> Vec<PiLaurent> {
        let lin = vec![-&Self::root(k), PiLaurent::one()];
        let mut out = vec![PiLaurent::one()];
        for _ in 0..m {
            out = Self::poly_mul(&out, &lin);
        }
        out
    }

    /// Numerator rewritten over the denominator `target ⊇ self.poles`.
    fn lift(&self, target: &Poles) -> Vec<PiLaurent> {
        let mut num = self.numerator.clone();
        for (k, m) in target.iter() {
            let extra = m - self.poles.mult(k);
            if extra > 0 {
                num = Self::poly_mul(&num, &Self::factor_pow(k, extra));
            }
        }
        num
    }

    pub fn conj(&self) -> Self {
        Self {
            numerator: self.numerator.iter().map(PiLaurent::conj).collect(),
            poles: self.poles.clone(),
        }
    }

    pub fn scale(&self, c: &PiLaurent) -> Self {
        Self::new(self.numerator.iter().map(|x| x * c).collect(), self.poles.clone())
    }

    /// Coefficient of `λ⁻¹` in the Laurent expansion at `λ = 0`.
    ///
    /// Poles at `4πk`, `k ≥ 1`, are expanded as geometric series in `λ/(4πk)`;
    /// only the pole at the origin contributes to the integral over `|λ| = 1`.
    pub fn residue_at_origin(&self) -> PiLaurent {
        let m0 = self.poles.mult(0) as usize;
        if m0 == 0 || self.numerator.is_empty() {
            return PiLaurent::zero();
        }
        // Taylor series of g(λ) = N(λ)/∏_{k≥1}(λ−4πk)^{m_k} up to λ^{m0−1}.
        let order = m0;
        let mut series: Vec<PiLaurent> =
            (0..order).map(|i| self.numerator.get(i).cloned().unwrap_or_default()).collect();
        for (k, m) in self.poles.iter().filter(|&(k, _)| k > 0) {
            // (λ − a)^{−m} = (−1)^m a^{−m} Σ_t C(m+t−1, t) (λ/a)^t
            let a_inv = Self::root(k).inv_monomial().expect("nonzero pole");
            let sign = if m % 2 == 0 { PiLaurent::one() } else { PiLaurent::from_int(-1) };
            let lead = &sign * &a_inv.pow(m);
            let mut factor = Vec::with_capacity(order);
            let mut binom = BigInt::one();
            for t in 0..order {
                if t > 0 {
                    binom = binom * BigInt::from(m as usize + t - 1) / BigInt::from(t);
                }
                let c = GaussianRational::from_rat(BigRational::from_integer(binom.clone()));
                factor.push((&lead * &a_inv.pow(t as u32)).scale(&c));
            }
            let mut next = vec![PiLaurent::zero(); order];
            for (i, x) in series.iter().enumerate() {
                for (j, y) in factor.iter().enumerate().take(order - i) {
                    next[i + j] += &(x * y);
                }
            }
            series = next;
        }
        series.pop().unwrap_or_default()
    }

    /// Floating-point value at `λ` with `π ↦ pi`.
    pub fn eval(&self, lambda: Complex64, pi: f64) -> Complex64 {
        let mut num = Complex64::new(0.0, 0.0);
        for c in self.numerator.iter().rev() {
            num = num * lambda + c.eval(pi);
        }
        let mut den = Complex64::new(1.0, 0.0);
        for (k, m) in self.poles.iter() {
            den *= (lambda - 4.0 * pi * k as f64).powu(m);
        }
        num / den
    }
}

impl From<PiLaurent> for LambdaRational {
    fn from(c: PiLaurent) -> Self {
        Self::constant(c)
    }
}

impl Add<&LambdaRational> for &LambdaRational {
    type Output = LambdaRational;
    fn add(self, o: &LambdaRational) -> LambdaRational {
        let mut target = self.poles.clone();
        for (k, m) in o.poles.iter() {
            let have = target.mult(k);
            if m > have {
                target.insert(k, m - have);
            }
        }
        let a = self.lift(&target);
        let b = o.lift(&target);
        let len = a.len().max(b.len());
        let num = (0..len)
            .map(|i| {
                let x = a.get(i).cloned().unwrap_or_default();
                let y = b.get(i).cloned().unwrap_or_default();
                &x + &y
            })
            .collect();
        LambdaRational::new(num, target)
    }
}

impl Mul<&LambdaRational> for &LambdaRational {
    type Output = LambdaRational;
    fn mul(self, o: &LambdaRational) -> LambdaRational {
        LambdaRational::new(
            LambdaRational::poly_mul(&self.numerator, &o.numerator),
            self.poles.merged(&o.poles),
        )
    }
}

impl Neg for &LambdaRational {
    type Output = LambdaRational;
    fn neg(self) -> LambdaRational {
        LambdaRational { numerator: self.numerator.iter().map(|c| -c).collect(), poles: self.poles.clone() }
    }
}

impl Sub<&LambdaRational> for &LambdaRational {
    type Output = LambdaRational;
    fn sub(self, o: &LambdaRational) -> LambdaRational {
        self + &(-o)
    }
}

forward_owned!(LambdaRational, Add add, Sub sub, Mul mul);

impl fmt::Display for LambdaRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .numerator
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match i {
                0 => format!("({c})"),
                1 => format!("({c})λ"),
                _ => format!("({c})λ^{i}"),
            })
            .collect();
        let num = if parts.is_empty() { "0".to_string() } else { parts.join(" + ") };
        if self.poles.is_empty() {
            write!(f, "{num}")
        } else {
            write!(f, "[{num}]·{}", self.poles)
        }
    }
}

impl<'de> Deserialize<'de> for LambdaRational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            numerator: Vec<PiLaurent>,
            poles: Poles,
        }
        let r = Repr::deserialize(d).map_err(D::Error::custom)?;
        Ok(LambdaRational::new(r.numerator, r.poles))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gr(a: i64, b: i64) -> GaussianRational {
        GaussianRational::new(rat(a, 1), rat(b, 1))
    }

    #[test]
    fn inverse_powers_of_pi_cancel() {
        let a = PiLaurent::rational(1, 2, -1);
        let b = PiLaurent::rational(2, 1, 1);
        assert_eq!(&a * &b, PiLaurent::one());
    }

    #[test]
    fn conjugation_flips_i_only() {
        let x = PiLaurent::monomial(GaussianRational::i(), 1);
        assert_eq!(x.conj(), PiLaurent::monomial(-GaussianRational::i(), 1));
    }

    #[test]
    fn common_denominator_sum() {
        let f = &LambdaRational::simple_pole(1) + &LambdaRational::simple_pole(0);
        let mut both = Poles::single(0);
        both.insert(1, 1);
        let expect =
            LambdaRational::new(vec![PiLaurent::rational(-4, 1, 1), PiLaurent::from_int(2)], both);
        assert_eq!(f, expect);
        let lhs = f.eval(Complex64::new(1.0, 0.0), 1.0);
        assert!((lhs - Complex64::new(2.0 / 3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn residue_examples() {
        assert_eq!(LambdaRational::simple_pole(0).residue_at_origin(), PiLaurent::one());
        let mut p = Poles::single(0);
        p.insert(1, 1);
        assert_eq!(p.residue_at_origin(), PiLaurent::rational(-1, 4, -1));
        let mut p = Poles::none();
        p.insert(0, 2);
        p.insert(1, 1);
        assert_eq!(p.residue_at_origin(), PiLaurent::rational(-1, 16, -2));
    }

    #[test]
    fn normalization_cancels_shared_roots() {
        // (λ − 4π)/((λ − 4π)λ) = 1/λ
        let num = vec![PiLaurent::rational(-4, 1, 1), PiLaurent::one()];
        let mut p = Poles::single(0);
        p.insert(1, 1);
        assert_eq!(LambdaRational::new(num, p), LambdaRational::simple_pole(0));
        let prod = &LambdaRational::lambda() * &LambdaRational::simple_pole(0);
        assert_eq!(prod, LambdaRational::constant(PiLaurent::one()));
    }

    #[test]
    fn rational_string_round_trip() {
        let g = GaussianRational::new(rat(-3, 6), rat(7, 1));
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"["-1/2","7"]"#);
        let back: GaussianRational = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        let f = &LambdaRational::simple_pole(2) * &LambdaRational::constant(PiLaurent::rational(1, 3, -1));
        let json = serde_json::to_string(&f).unwrap();
        let back: LambdaRational = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
    }

    fn small_gr() -> impl Strategy<Value = GaussianRational> {
        (-9i64..=9, 1i64..=9, -9i64..=9, 1i64..=9)
            .prop_map(|(a, b, c, d)| GaussianRational::new(rat(a, b), rat(c, d)))
    }

    fn small_pl() -> impl Strategy<Value = PiLaurent> {
        prop::collection::vec((-3i32..=3, small_gr()), 0..4).prop_map(|v| {
            let mut p = PiLaurent::zero();
            for (e, c) in v {
                p.add_term(e, &c);
            }
            p
        })
    }

    fn small_poles() -> impl Strategy<Value = Poles> {
        prop::collection::vec((0u32..4, 1u32..3), 0..3).prop_map(|v| {
            let mut p = Poles::none();
            for (k, m) in v {
                p.insert(k, m);
            }
            p
        })
    }

    fn small_lr() -> impl Strategy<Value = LambdaRational> {
        (prop::collection::vec(small_pl(), 0..3), small_poles())
            .prop_map(|(n, p)| LambdaRational::new(n, p))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn pi_laurent_ring_axioms(a in small_pl(), b in small_pl(), c in small_pl()) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert!((&a - &a).is_zero());
            prop_assert_eq!((&a * &b).conj(), &a.conj() * &b.conj());
        }

        #[test]
        fn lambda_rational_ring_axioms(a in small_lr(), b in small_lr(), c in small_lr()) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        }

        #[test]
        fn residue_is_linear(f in small_lr(), g in small_lr(), a in small_pl(), b in small_pl()) {
            let lhs = (&f.scale(&a) + &g.scale(&b)).residue_at_origin();
            let rhs = &(&f.residue_at_origin() * &a) + &(&g.residue_at_origin() * &b);
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn no_pole_at_origin_means_no_residue(n in prop::collection::vec(small_pl(), 0..3), p in small_poles()) {
            let mut q = Poles::none();
            for (k, m) in p.iter().filter(|&(k, _)| k > 0) { q.insert(k, m); }
            prop_assert!(LambdaRational::new(n, q).residue_at_origin().is_zero());
        }

        #[test]
        fn residue_matches_contour_quadrature(f in small_lr()) {
            let pi = std::f64::consts::PI;
            let exact = f.residue_at_origin().eval(pi);
            let m = 256;
            let mut sum = Complex64::new(0.0, 0.0);
            for t in 0..m {
                let lam = Complex64::from_polar(1.0, 2.0 * pi * t as f64 / m as f64);
                sum += f.eval(lam, pi) * lam;
            }
            let quad = sum / m as f64;
            let scale = 1.0f64.max(exact.norm());
            prop_assert!((quad - exact).norm() <= 1e-8 * scale, "{} vs {}", quad, exact);
        }
    }

    #[test]
    fn gaussian_rational_display() {
        assert_eq!(gr(1, -2).to_string(), "(1 - 2i)");
        assert_eq!(GaussianRational::ratio(3, 4).to_string(), "3/4");
    }
}
