//! Closed-form blocks evaluated directly from curvature data.
//!
//! Everything here is written against the Taylor tensors (`∂/∂z_i`,
//! `∂/∂z̄_i` parameterization). The `∇`/`Δ` form of the same expressions is
//! available through [`statement_view`], using
//! `∂𝓡/∂z̄_i = ∇_{w̄_i}𝓡/√2`, `∂𝓡/∂z_i = ∇_{w_i}𝓡/√2` and
//! `Σ_i ∂²𝓡/∂z_i∂z̄_i = Δ𝓡/4`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fiber::{FiberMap, FiberSpace};
use crate::geometry::CurvatureData;
use crate::scalar::{GaussianRational, PiLaurent};

fn factorial(k: usize) -> BigInt {
    (1..=k as u64).fold(BigInt::one(), |a, b| a * b)
}

fn big_rational(num: BigInt, den: BigInt) -> BigRational {
    BigRational::new(num, den)
}

fn pi_term(r: BigRational, pi_exp: i32) -> PiLaurent {
    PiLaurent::monomial(GaussianRational::from_rat(r), pi_exp)
}

/// `C_j(k) = (4π)^{−j} / (2^k k! ∏_{s=k+1}^{j}(2s+1))`.
pub fn c_jk(j: usize, k: usize) -> Result<PiLaurent> {
    if k > j {
        return Err(Error::ConstantRange { j, k });
    }
    let odd: BigInt = ((k + 1)..=j).fold(BigInt::one(), |a, s| a * BigInt::from(2 * s + 1));
    let den = BigInt::from(4).pow(j as u32) * BigInt::from(2).pow(k as u32) * factorial(k) * odd;
    Ok(pi_term(big_rational(BigInt::one(), den), -(j as i32)))
}

fn c(j: usize, k: usize) -> PiLaurent {
    c_jk(j, k).expect("k ≤ j by construction")
}

/// `∏_{s=a}^{b} (1 + 1/(2s))`, empty product 1.
fn half_step_product(a: usize, b: usize) -> BigRational {
    (a..=b).fold(BigRational::one(), |acc, s| acc * big_rational(BigInt::from(2 * s + 1), BigInt::from(2 * s)))
}

/// Shared pieces: `𝓡`, its powers, `I_{2j}`, the Taylor maps.
struct Parts {
    space: FiberSpace,
    j: usize,
    powers: Vec<FiberMap>,
    rj_adj: FiberMap,
    proj: FiberMap,
    e: Vec<FiberMap>,
    d: Vec<FiberMap>,
    h: FiberMap,
}

impl Parts {
    fn new(j: usize, data: &CurvatureData) -> Self {
        let space = data.space();
        let r = data.curvature_02();
        let mut powers = vec![FiberMap::identity(space.dim())];
        for _ in 0..j + 1 {
            let next = &r * powers.last().expect("nonempty");
            powers.push(next);
        }
        Self {
            space,
            j,
            rj_adj: powers[j].adjoint(),
            proj: space.degree_projector(2 * j),
            e: (0..data.n).map(|i| data.d_curv_zbar(i)).collect(),
            d: (0..data.n).map(|i| data.d_curv_z(i)).collect(),
            h: data.laplacian_part(),
            powers,
        }
    }

    fn pw(&self, k: usize) -> &FiberMap {
        &self.powers[k]
    }

    /// `I_{2j} · m · I_{2j}`.
    fn sandwich(&self, m: &FiberMap) -> FiberMap {
        &(&self.proj * m) * &self.proj
    }

    fn zero(&self) -> FiberMap {
        FiberMap::zero(self.space.dim())
    }
}

/// The leading block `C_j(j)² I_{2j} 𝓡^j (𝓡^j)* I_{2j}`.
pub fn thm1_block(j: usize, data: &CurvatureData) -> FiberMap {
    let p = Parts::new(j, data);
    let cj = c(j, j);
    p.sandwich(&(p.pw(j) * &p.rj_adj)).scale(&(&cj * &cj))
}

/// `‖𝓡^j‖²` for the orthonormal basis `w̄^I ⊗ e_a`, computed from the
/// coefficients of `𝓡^j` as an `End(E)`-valued `2j`-form.
pub fn curvature_power_norm_sqr(j: usize, data: &CurvatureData) -> PiLaurent {
    let n = data.n;
    let rank = data.rank;
    // form coefficients keyed by sorted mask: rank×rank matrices
    type Coeffs = std::collections::BTreeMap<usize, Vec<Vec<GaussianRational>>>;
    let identity: Vec<Vec<GaussianRational>> = (0..rank)
        .map(|a| (0..rank).map(|b| if a == b { GaussianRational::one() } else { GaussianRational::zero() }).collect())
        .collect();
    let mut cur: Coeffs = Coeffs::new();
    cur.insert(0, identity);
    for _ in 0..j {
        let mut next = Coeffs::new();
        for l in 0..n {
            for m in 0..n {
                let a = data.re_anti.get(&[l, m]);
                if a.iter().flatten().all(GaussianRational::is_zero) || l == m {
                    continue;
                }
                for (&mask, mat) in &cur {
                    if mask & (1 << l) != 0 || mask & (1 << m) != 0 {
                        continue;
                    }
                    // w̄^l ∧ w̄^m ∧ w̄^{mask}: sign from moving l then m into sorted order
                    let below = |bits: usize, x: usize| (bits & ((1 << x) - 1)).count_ones();
                    let after_m = mask | (1 << m);
                    let sign = if (below(mask, m) + below(after_m, l)) % 2 == 0 { 1 } else { -1 };
                    let new_mask = after_m | (1 << l);
                    let prod: Vec<Vec<GaussianRational>> = (0..rank)
                        .map(|r| {
                            (0..rank)
                                .map(|c| {
                                    let mut s = GaussianRational::zero();
                                    for t in 0..rank {
                                        s += &(&a[r][t] * &mat[t][c]);
                                    }
                                    if sign < 0 {
                                        -&s
                                    } else {
                                        s
                                    }
                                })
                                .collect()
                        })
                        .collect();
                    let slot = next.entry(new_mask).or_insert_with(|| vec![vec![GaussianRational::zero(); rank]; rank]);
                    for r in 0..rank {
                        for c in 0..rank {
                            slot[r][c] += &prod[r][c];
                        }
                    }
                }
            }
        }
        cur = next;
    }
    let mut total = BigRational::zero();
    for mat in cur.values() {
        for x in mat.iter().flatten() {
            total += x.norm_sqr();
        }
    }
    pi_term(total, 0)
}

/// The six-term decomposition of `I_{2j} 𝒃_{2j+1} I_{2j}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClosedFormBundle {
    pub j: usize,
    pub leading: FiberMap,
    pub t_ia: FiberMap,
    pub t_ib: FiberMap,
    pub t_iia: FiberMap,
    /// Scalar-curvature and `R^E_Λ` term with the bundle factor placed between
    /// `𝓡^j` and `(𝓡^j)*`.
    pub t_iii: FiberMap,
    /// The same term with the bundle factor kept at the position where the
    /// zeroth-order operator acts (`𝓡^{j−k} · 𝓡^k`), symmetrized. Equal to
    /// `t_iii` whenever `R^E_Λ` commutes with `𝓡`, in particular for rank 1.
    pub t_iii_ordered: FiberMap,
}

impl ClosedFormBundle {
    pub fn family_i(&self) -> FiberMap {
        &(&self.t_ia + &self.t_ia.adjoint()) + &self.t_ib
    }

    pub fn family_ii(&self) -> FiberMap {
        &self.t_iia + &self.t_iia.adjoint()
    }

    pub fn family_iii(&self) -> FiberMap {
        self.t_iii.clone()
    }

    pub fn family_iii_ordered(&self) -> FiberMap {
        self.t_iii_ordered.clone()
    }

    /// `T_Ia + T_Ia* + T_Ib + T_IIa + T_IIa* + T_III`.
    pub fn total(&self) -> FiberMap {
        &(&self.family_i() + &self.family_ii()) + &self.family_iii()
    }

    /// Total with the signs `(s_I, s_II, s_III)` applied per family.
    pub fn signed_total(&self, signs: [i64; 3], ordered_iii: bool) -> FiberMap {
        let iii = if ordered_iii { self.family_iii_ordered() } else { self.family_iii() };
        let mut out = self.family_i().scale(&PiLaurent::from_int(signs[0]));
        out.add_assign(&self.family_ii().scale(&PiLaurent::from_int(signs[1])));
        out.add_assign(&iii.scale(&PiLaurent::from_int(signs[2])));
        out
    }
}

fn t_ib(p: &Parts) -> FiberMap {
    let j = p.j;
    let mut out = p.zero();
    if j == 0 {
        return out;
    }
    for e in &p.e {
        let mut x = p.zero();
        for k in 0..j {
            let w = &(p.pw(j - k - 1) * e) * p.pw(k);
            x.add_assign(&w.scale(&(&c(j, j) - &c(j, k))));
        }
        out.add_assign(&(&x * &x.adjoint()));
    }
    p.sandwich(&out).scale(&PiLaurent::pi_pow(-1))
}

fn t_ia(p: &Parts) -> FiberMap {
    let j = p.j;
    let mut inner = p.zero();
    if j < 2 {
        return inner;
    }
    for (e, d) in p.e.iter().zip(&p.d) {
        for q in 0..=(j - 2) {
            let lead = p.pw(j - q - 2);
            for m in 0..=q {
                let ed = &(&(&(lead * e) * p.pw(q - m)) * d) * p.pw(m);
                inner.add_assign(&ed.scale(&(&c(j, j) - &c(j, q + 1))));
                let factor = half_step_product(q + 2, j) - BigRational::one();
                let de = &(&(&(lead * d) * p.pw(q - m)) * e) * p.pw(m);
                inner.add_assign(&de.scale(&c(j, m).scale_rat(&factor)));
            }
        }
    }
    p.sandwich(&(&inner * &p.rj_adj)).scale(&c(j, j).shift_pi(-1))
}

fn t_iia(p: &Parts) -> FiberMap {
    let j = p.j;
    let mut inner = p.zero();
    if j == 0 {
        return inner;
    }
    for k in 0..j {
        let w = &(p.pw(j - k - 1) * &p.h) * p.pw(k);
        inner.add_assign(&w.scale(&(&c(j, j) - &c(j, k))));
    }
    p.sandwich(&(&inner * &p.rj_adj)).scale(&c(j, j).shift_pi(-1))
}

/// `C_j(k)/(2π(2k+1))`.
fn iii_weight(j: usize, k: usize) -> PiLaurent {
    c(j, k).shift_pi(-1).scale_rat(&big_rational(BigInt::one(), BigInt::from(2 * (2 * k + 1))))
}

fn t_iii(p: &Parts, data: &CurvatureData) -> (FiberMap, FiberMap) {
    let j = p.j;
    let rx = PiLaurent::constant(data.scalar_curvature());
    let s = p.space.bundle_map(&data.re_trace());
    let third = big_rational(BigInt::one(), BigInt::from(3));
    let sixth = big_rational(BigInt::one(), BigInt::from(6));
    let half = big_rational(BigInt::one(), BigInt::from(2));
    let next = c(j + 1, j + 1);
    // symmetric placement
    let mut mid = p.zero();
    for k in 0..=j {
        let w = iii_weight(j, k);
        let scal = &(&next - &w).scale_rat(&third) * &rx;
        mid.add_assign(&FiberMap::scalar(p.space.dim(), &scal));
        mid.add_assign(&s.scale(&-&w));
    }
    let sym = p.sandwich(&(&(p.pw(j) * &mid) * &p.rj_adj)).scale(&c(j, j));
    // ordered placement: X + X*, X = Σ_k 𝓡^{j−k}[…]𝓡^k (𝓡^j)*
    let mut x = p.zero();
    for k in 0..=j {
        let w = iii_weight(j, k);
        let scal = &(&next - &w).scale_rat(&sixth) * &rx;
        let mut m = FiberMap::scalar(p.space.dim(), &scal);
        m.add_assign(&s.scale(&-&w.scale_rat(&half)));
        x.add_assign(&(&(p.pw(j - k) * &m) * p.pw(k)));
    }
    let x = p.sandwich(&(&x * &p.rj_adj)).scale(&c(j, j));
    let ordered = &x + &x.adjoint();
    (sym, ordered)
}

/// Evaluates every closed-form term at order `j`.
pub fn thm2_bundle(j: usize, data: &CurvatureData) -> ClosedFormBundle {
    let p = Parts::new(j, data);
    let (t3, t3o) = t_iii(&p, data);
    let cj = c(j, j);
    ClosedFormBundle {
        j,
        leading: p.sandwich(&(p.pw(j) * &p.rj_adj)).scale(&(&cj * &cj)),
        t_ia: t_ia(&p),
        t_ib: t_ib(&p),
        t_iia: t_iia(&p),
        t_iii: t3,
        t_iii_ordered: t3o,
    }
}

/// The `∇`/`Δ` parameterization.
///
/// Every `∇`-term is bilinear in `∇𝓡`, so the two `1/√2` factors combine
/// into the rational `∇∇ = 2·∂∂`; `Δ𝓡` is `4 Σ_i ∂²𝓡/∂z_i∂z̄_i`.
#[derive(Clone, Debug)]
pub struct StatementDictionary {
    /// Factor relating a product of two `∇` derivatives to the `∂` product.
    pub grad_pair: BigRational,
    /// `Δ𝓡` as a fiber map.
    pub laplacian: FiberMap,
}

impl StatementDictionary {
    pub fn from_data(data: &CurvatureData) -> Self {
        Self {
            grad_pair: big_rational(BigInt::from(2), BigInt::one()),
            laplacian: data.laplacian_part().scale(&PiLaurent::from_int(4)),
        }
    }
}

/// `T_Ia`, `T_Ib`, `T_IIa` written with `∇`/`Δ` prefactors `C_j(j)/2π`,
/// `1/2π` and `C_j(j)/4π`.
pub fn statement_view(j: usize, data: &CurvatureData) -> (FiberMap, FiberMap, FiberMap) {
    let dict = StatementDictionary::from_data(data);
    let p = Parts::new(j, data);
    // ∂-bilinear pieces with unit prefactor, then the statement prefactors
    let unit_ia = t_ia(&p).scale(&c(j, j).shift_pi(-1).inv_monomial().unwrap_or_else(PiLaurent::zero));
    let unit_ib = t_ib(&p).scale(&PiLaurent::pi_pow(1));
    let half_pi = PiLaurent::rational(1, 2, -1);
    let ia = unit_ia.scale_rat_pi(&dict.grad_pair, &(&c(j, j) * &half_pi));
    let ib = unit_ib.scale_rat_pi(&dict.grad_pair, &half_pi);
    let mut inner = p.zero();
    for k in 0..j {
        let w = &(p.pw(j - k - 1) * &dict.laplacian) * p.pw(k);
        inner.add_assign(&w.scale(&(&c(j, j) - &c(j, k))));
    }
    let iia = p.sandwich(&(&inner * &p.rj_adj)).scale(&(&c(j, j) * &PiLaurent::rational(1, 4, -1)));
    (ia, ib, iia)
}

trait ScaleRatPi {
    fn scale_rat_pi(&self, r: &BigRational, c: &PiLaurent) -> FiberMap;
}

impl ScaleRatPi for FiberMap {
    fn scale_rat_pi(&self, r: &BigRational, c: &PiLaurent) -> FiberMap {
        self.scale(&c.scale_rat(r))
    }
}

/// Terms of `128π³ I₂𝒃₃I₂` as displayed for `j = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct J1Display {
    /// `(1/9) I₂ (∇_{w̄_i}𝓡)(∇_{w̄_i}𝓡)* I₂`.
    pub gradient: FiberMap,
    /// `(1/6) I₂ (Δ𝓡 𝓡* + 𝓡* Δ𝓡) I₂`, read literally.
    pub laplacian_printed: FiberMap,
    /// `(1/6) I₂ (Δ𝓡 𝓡* + 𝓡 (Δ𝓡)*) I₂`: the self-adjoint pairing.
    pub laplacian_adjoint_pair: FiberMap,
    /// `−I₂ 𝓡 [r^X/4 + R^E_Λ] 𝓡* I₂`, read literally.
    pub curvature_printed: FiberMap,
    /// `−I₂ 𝓡 [r^X/4 + √−1 R^E_Λ] 𝓡* I₂`.
    pub curvature_with_i: FiberMap,
}

impl J1Display {
    pub fn total_printed(&self) -> FiberMap {
        &(&self.gradient + &self.laplacian_printed) + &self.curvature_printed
    }

    pub fn total_corrected(&self) -> FiberMap {
        &(&self.gradient + &self.laplacian_adjoint_pair) + &self.curvature_with_i
    }
}

/// Builds the `j = 1` display directly from the tensors.
pub fn j1_display(data: &CurvatureData) -> J1Display {
    let dict = StatementDictionary::from_data(data);
    let sp = data.space();
    let i2 = sp.degree_projector(2);
    let sand = |m: &FiberMap| &(&i2 * m) * &i2;
    let r = data.curvature_02();
    let ra = r.adjoint();
    let mut grad = FiberMap::zero(sp.dim());
    for i in 0..data.n {
        let e = data.d_curv_zbar(i);
        grad.add_assign(&(&e * &e.adjoint()));
    }
    let gradient = sand(&grad).scale(&PiLaurent::constant(GaussianRational::from_rat(
        dict.grad_pair.clone() * big_rational(BigInt::one(), BigInt::from(9)),
    )));
    let lap = &dict.laplacian;
    let sixth = PiLaurent::rational(1, 6, 0);
    let laplacian_printed = sand(&(&(lap * &ra) + &(&ra * lap))).scale(&sixth);
    let laplacian_adjoint_pair = sand(&(&(lap * &ra) + &(&r * &lap.adjoint()))).scale(&sixth);
    let quarter_r = FiberMap::scalar(sp.dim(), &PiLaurent::constant(data.scalar_curvature()).scale(&GaussianRational::ratio(1, 4)));
    let rel = data.re_lambda();
    let i_rel = rel.scale(&PiLaurent::i());
    let minus = PiLaurent::from_int(-1);
    let curvature_printed = sand(&(&(&r * &(&quarter_r + &rel)) * &ra)).scale(&minus);
    let curvature_with_i = sand(&(&(&r * &(&quarter_r + &i_rel)) * &ra)).scale(&minus);
    J1Display { gradient, laplacian_printed, laplacian_adjoint_pair, curvature_printed, curvature_with_i }
}

/// One row of the intermediate constant table.
#[derive(Clone, Debug, Serialize)]
pub struct ConstantRow {
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub c1: PiLaurent,
    pub c2: PiLaurent,
    pub c3: PiLaurent,
    pub c4: PiLaurent,
    pub c5: PiLaurent,
    pub c6: PiLaurent,
    /// Whether `C³ = C_j(j)`, `C⁴ = C_j(k+ℓ+1)`, `C⁵ = C_j(ℓ)` and
    /// `C⁶ = C_j(ℓ)∏_{s=k+ℓ+2}^{j}(1+1/2s)` all hold.
    pub identities_hold: bool,
}

/// `C¹_{k,ℓ} = (4π)^{−(k+ℓ+1)} / (2^{k+ℓ+1}(k+ℓ+1)!)`.
pub fn c1(k: usize, l: usize) -> PiLaurent {
    let m = k + l + 1;
    let den = BigInt::from(4).pow(m as u32) * BigInt::from(2).pow(m as u32) * factorial(m);
    pi_term(big_rational(BigInt::one(), den), -(m as i32))
}

/// `C²_{k,ℓ} = (4π)^{−(k+ℓ+1)} / (2^ℓ ℓ! ∏_{s=ℓ+1}^{k+ℓ+1}(2s+1))`.
pub fn c2(k: usize, l: usize) -> PiLaurent {
    let m = k + l + 1;
    let odd: BigInt = ((l + 1)..=m).fold(BigInt::one(), |a, s| a * BigInt::from(2 * s + 1));
    let den = BigInt::from(4).pow(m as u32) * BigInt::from(2).pow(l as u32) * factorial(l) * odd;
    pi_term(big_rational(BigInt::one(), den), -(m as i32))
}

/// Builds `C³…C⁶` from `C¹`, `C²` for all `k + ℓ ≤ j − 2` and checks the
/// identities against `C_j(·)`.
pub fn constant_table(j: usize) -> Vec<ConstantRow> {
    let mut rows = Vec::new();
    if j < 2 {
        return rows;
    }
    for k in 0..=(j - 2) {
        for l in 0..=(j - 2 - k) {
            let m = k + l + 1;
            let tail = PiLaurent::rational(1, 4_i64.pow((j - m) as u32), -((j - m) as i32));
            let even: BigInt = ((m + 1)..=j).fold(BigInt::one(), |a, s| a * BigInt::from(2 * s));
            let odd: BigInt = ((m + 1)..=j).fold(BigInt::one(), |a, s| a * BigInt::from(2 * s + 1));
            let inv_even = big_rational(BigInt::one(), even);
            let inv_odd = big_rational(BigInt::one(), odd);
            let (a1, a2) = (c1(k, l), c2(k, l));
            let c3 = (&a1 * &tail).scale_rat(&inv_even);
            let c4 = (&a1 * &tail).scale_rat(&inv_odd);
            let c5 = (&a2 * &tail).scale_rat(&inv_odd);
            let c6 = (&a2 * &tail).scale_rat(&inv_even);
            let identities_hold = c3 == c(j, j)
                && c4 == c(j, m)
                && c5 == c(j, l)
                && c6 == c(j, l).scale_rat(&half_step_product(m + 1, j));
            rows.push(ConstantRow { j, k, l, c1: a1, c2: a2, c3, c4, c5, c6, identities_hold });
        }
    }
    rows
}
