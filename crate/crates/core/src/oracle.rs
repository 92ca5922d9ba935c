//! Floating-point referee for the exact engine.
//!
//! Each complex mode carries the explicit functions `b^a z^b 𝒫` written as
//! polynomials in `(z, z̄)` times `e^{−π|z|²/2}`. Their norms come from the
//! exact Gaussian moments, their values at the origin are read off the
//! polynomials, and the generators become matrices by Galerkin projection
//! with Gauss–Hermite moments. On the resulting orthonormal truncated basis
//! `ℒ₀` is diagonal, so the resolvent series `Σ R 𝒪 R ⋯ 𝒪 R` can be summed
//! at each node of a trapezoid rule on `|λ| = 1` and integrated numerically.
//! Nothing here uses the symbolic rewrite rules or the residue bookkeeping.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::engine::{check_available, enumerate_terms, prune_structural, required_operators};
use crate::error::{Error, Result};
use crate::fiber::FiberSpace;
use crate::fock::{gaussian_moment, Generator, OperatorExpr};
use crate::geometry::{CurvatureData, ModelOperators};

/// Default number of trapezoid nodes on `|λ| = 1`.
pub const CONTOUR_POINTS: usize = 256;

/// Orders with at least one provided component.
const ORDERS: [usize; 3] = [2, 3, 4];

// ---------------------------------------------------------------------------
// Gauss–Hermite quadrature
// ---------------------------------------------------------------------------

/// Orthonormal Hermite values `ψ_0(t), …, ψ_{q}(t)` for the weight `e^{−t²}`.
fn hermite_orthonormal(q: usize, t: f64) -> Vec<f64> {
    let mut psi = vec![0.0; q + 1];
    psi[0] = PI.powf(-0.25);
    if q >= 1 {
        psi[1] = 2f64.sqrt() * t * psi[0];
    }
    for k in 1..q {
        let kf = k as f64;
        psi[k + 1] = (2.0 / (kf + 1.0)).sqrt() * t * psi[k] - (kf / (kf + 1.0)).sqrt() * psi[k - 1];
    }
    psi
}

/// Nodes and weights of the `q`-point rule for `∫ f(t) e^{−t²} dt`.
///
/// Nodes come from the Jacobi matrix (Golub–Welsch) and are polished by
/// Newton steps; weights use the Christoffel sum, which keeps the tail
/// weights relatively accurate.
pub fn hermite_rule(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q > 0, "quadrature order must be positive");
    let jacobi = DMatrix::from_fn(q, q, |r, c| if r + 1 == c || c + 1 == r { ((r.max(c)) as f64 / 2.0).sqrt() } else { 0.0 });
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);
    let mut weights = Vec::with_capacity(q);
    for t in nodes.iter_mut() {
        for _ in 0..3 {
            let psi = hermite_orthonormal(q, *t);
            let deriv = (2.0 * q as f64).sqrt() * psi[q - 1];
            if deriv != 0.0 {
                *t -= psi[q] / deriv;
            }
        }
        let psi = hermite_orthonormal(q, *t);
        weights.push(1.0 / psi[..q].iter().map(|p| p * p).sum::<f64>());
    }
    (nodes, weights)
}

/// One-mode table `M[m][k] = ∫_ℂ z^m z̄^k e^{−π|z|²}` for `m, k ≤ deg`.
fn moment_table(deg: usize, quad_order: usize) -> Vec<Vec<Complex64>> {
    let (t, w) = hermite_rule(quad_order);
    let s = PI.sqrt();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); deg + 1]; deg + 1];
    for (x, wx) in t.iter().zip(&w) {
        for (y, wy) in t.iter().zip(&w) {
            let z = Complex64::new(x / s, y / s);
            let weight = wx * wy / PI;
            let mut zm = Complex64::new(weight, 0.0);
            for row in out.iter_mut() {
                let mut term = zm;
                for slot in row.iter_mut() {
                    *slot += term;
                    term *= z.conj();
                }
                zm *= z;
            }
        }
    }
    out
}

/// Tensor Gauss–Hermite value of `∫_{ℂⁿ} z^β z̄^γ e^{−π|z|²}`.
pub fn quadrature_moment(beta: &[u8], gamma: &[u8], quad_order: usize) -> f64 {
    assert_eq!(beta.len(), gamma.len(), "multi-index lengths differ");
    let deg = beta.iter().chain(gamma).copied().max().unwrap_or(0) as usize;
    let table = moment_table(deg, quad_order);
    let mut out = Complex64::new(1.0, 0.0);
    for (&b, &g) in beta.iter().zip(gamma) {
        out *= table[b as usize][g as usize];
    }
    out.re
}

// ---------------------------------------------------------------------------
// One complex mode
// ---------------------------------------------------------------------------

/// Polynomial in `(z, z̄)` keyed by exponents; the Gaussian factor is implicit.
type Poly = BTreeMap<(usize, usize), f64>;

fn poly_add(p: &mut Poly, key: (usize, usize), c: f64) {
    if c != 0.0 {
        *p.entry(key).or_insert(0.0) += c;
    }
}

/// Action of a generator on `p·e^{−π|z|²/2}`, returned as the new `p`.
fn act_on_poly(kind: usize, p: &Poly) -> Poly {
    let mut out = Poly::new();
    for (&(m, k), &c) in p {
        let dz = |out: &mut Poly, s: f64| {
            if m > 0 {
                poly_add(out, (m - 1, k), s * c * m as f64);
            }
        };
        let dzbar = |out: &mut Poly, s: f64| {
            if k > 0 {
                poly_add(out, (m, k - 1), s * c * k as f64);
            }
        };
        match kind {
            // b = −2∂_z + π z̄
            0 => {
                dz(&mut out, -2.0);
                poly_add(&mut out, (m, k + 1), 2.0 * PI * c);
            }
            // b⁺ = 2∂_z̄ + π z
            1 => dzbar(&mut out, 2.0),
            2 => poly_add(&mut out, (m + 1, k), c),
            3 => poly_add(&mut out, (m, k + 1), c),
            4 => {
                dz(&mut out, 1.0);
                poly_add(&mut out, (m, k + 1), -0.5 * PI * c);
            }
            _ => {
                dzbar(&mut out, 1.0);
                poly_add(&mut out, (m + 1, k), -0.5 * PI * c);
            }
        }
    }
    out.retain(|_, c| *c != 0.0);
    out
}

fn generator_kind(g: Generator) -> (usize, usize) {
    match g {
        Generator::B(i) => (0, i),
        Generator::BPlus(i) => (1, i),
        Generator::Z(i) => (2, i),
        Generator::ZBar(i) => (3, i),
        Generator::Dz(i) => (4, i),
        Generator::DzBar(i) => (5, i),
    }
}

/// `⟨p, q⟩` against a moment table.
fn poly_inner(p: &Poly, q: &Poly, table: &[Vec<Complex64>]) -> Complex64 {
    let mut out = Complex64::new(0.0, 0.0);
    for (&(a, b), &cp) in p {
        for (&(c, d), &cq) in q {
            // conj(z^a z̄^b) z^c z̄^d = z^{b+c} z̄^{a+d}
            if b + c == a + d {
                out += table[b + c][a + d] * (cp * cq);
            }
        }
    }
    out
}

/// Explicit basis and Galerkin generator matrices for one complex mode.
#[derive(Clone, Debug)]
struct ModeTable {
    b_max: usize,
    /// `φ_{ab}(0)` of the normalized functions, index `a·(b_max+1) + b`.
    origin: Vec<f64>,
    /// Per generator kind, per column: `(row, value)` in the orthonormal basis.
    gens: Vec<Vec<Vec<(usize, f64)>>>,
    /// Largest relative Galerkin residual over interior columns.
    closure_defect: f64,
    /// Largest deviation of the quadrature Gram matrix from the identity.
    gram_defect: f64,
}

impl ModeTable {
    fn build(a_max: usize, b_max: usize, quad_order: usize) -> Result<Self> {
        let side = b_max + 1;
        let size = (a_max + 1) * side;
        let idx = |a: usize, b: usize| a * side + b;

        let mut polys = vec![Poly::new(); size];
        for b in 0..=b_max {
            polys[idx(0, b)].insert((b, 0), 1.0);
            for a in 1..=a_max {
                polys[idx(a, b)] = act_on_poly(0, &polys[idx(a - 1, b)]);
            }
        }
        let deg = 2 * (a_max + b_max) + 2;
        let exact: Vec<Vec<Complex64>> = (0..=deg)
            .map(|m| {
                (0..=deg)
                    .map(|k| {
                        let v = if m == k { gaussian_moment(&[m as u8], &[m as u8]).eval(PI).re } else { 0.0 };
                        Complex64::new(v, 0.0)
                    })
                    .collect()
            })
            .collect();
        let quad = moment_table(deg, quad_order);

        let norms: Vec<f64> = polys.iter().map(|p| poly_inner(p, p, &exact).re.sqrt()).collect();
        if norms.iter().any(|n| !n.is_finite() || *n <= 0.0) {
            return Err(Error::Numeric("degenerate Gram matrix".into()));
        }
        let charge = |a: usize, b: usize| b as i64 - a as i64;
        let mut by_charge: HashMap<i64, Vec<usize>> = HashMap::new();
        for a in 0..=a_max {
            for b in 0..=b_max {
                by_charge.entry(charge(a, b)).or_default().push(idx(a, b));
            }
        }

        let mut gram_defect: f64 = 0.0;
        for u in 0..size {
            for v in 0..size {
                let g = poly_inner(&polys[u], &polys[v], &quad) / (norms[u] * norms[v]);
                let target = if u == v { 1.0 } else { 0.0 };
                gram_defect = gram_defect.max((g - target).norm());
            }
        }
        if gram_defect > 1e-8 {
            return Err(Error::Numeric(format!("ill-conditioned Gram matrix (defect {gram_defect:.2e})")));
        }

        let origin: Vec<f64> = polys.iter().zip(&norms).map(|(p, n)| p.get(&(0, 0)).copied().unwrap_or(0.0) / n).collect();

        let mut gens = vec![vec![Vec::new(); size]; 6];
        let mut closure_defect: f64 = 0.0;
        for (kind, cols) in gens.iter_mut().enumerate() {
            for a in 0..=a_max {
                for b in 0..=b_max {
                    let v = idx(a, b);
                    let q = act_on_poly(kind, &polys[v]);
                    let Some(&(m0, k0)) = q.keys().next() else { continue };
                    let qq = poly_inner(&q, &q, &exact).re;
                    let mut captured = 0.0;
                    for &u in by_charge.get(&(m0 as i64 - k0 as i64)).map(Vec::as_slice).unwrap_or(&[]) {
                        let x = poly_inner(&polys[u], &q, &quad).re / (norms[u] * norms[v]);
                        if x.abs() > 1e-12 * (qq.sqrt() / norms[v]).max(1.0) {
                            cols[v].push((u, x));
                            captured += x * x;
                        }
                    }
                    if a < a_max && b < b_max && qq > 0.0 {
                        let rel = (qq / (norms[v] * norms[v]) - captured).abs() / (qq / (norms[v] * norms[v]));
                        closure_defect = closure_defect.max(rel);
                    }
                }
            }
        }
        Ok(Self { b_max, origin, gens, closure_defect, gram_defect })
    }

    fn index(&self, a: u8, b: u8) -> usize {
        a as usize * (self.b_max + 1) + b as usize
    }
}

// ---------------------------------------------------------------------------
// Truncated space
// ---------------------------------------------------------------------------

/// Truncation limits: `|α| ≤ alpha`, `|β| ≤ beta`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cutoffs {
    pub alpha: usize,
    pub beta: usize,
}

impl Cutoffs {
    pub fn new(alpha: usize, beta: usize) -> Self {
        Self { alpha, beta }
    }
}

fn multi_indices(n: usize, max: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::new();
        for v in &out {
            let used: usize = v.iter().map(|&x| x as usize).sum();
            for x in 0..=(max - used) {
                let mut w = v.clone();
                w.push(x as u8);
                next.push(w);
            }
        }
        out = next;
    }
    out
}

/// Sparse real matrix stored by columns.
type SparseCols = Vec<Vec<(usize, f64)>>;

/// Orthonormal truncated basis `{b^α z^β 𝒫}` tensored with the fiber.
#[derive(Clone, Debug)]
pub struct TruncatedSpace {
    pub n: usize,
    pub rank: usize,
    pub cutoffs: Cutoffs,
    /// Function part of the basis, `(α, β)`; the full basis is this list
    /// crossed with the fiber basis, fiber index fastest.
    pub basis: Vec<(Vec<u8>, Vec<u8>)>,
    fiber: FiberSpace,
    lookup: HashMap<(Vec<u8>, Vec<u8>), usize>,
    mode: ModeTable,
    /// Generator matrices on the function part, keyed by `(kind, mode)`.
    gens: HashMap<(usize, usize), SparseCols>,
    /// Diagonal of the truncated `Σ b_i b_i⁺`.
    l0_function: Vec<f64>,
}

impl TruncatedSpace {
    pub fn new(n: usize, rank: usize, cutoffs: Cutoffs, quad_order: usize) -> Result<Self> {
        let mode = ModeTable::build(cutoffs.alpha, cutoffs.beta, quad_order)?;
        let mut basis = Vec::new();
        for a in multi_indices(n, cutoffs.alpha) {
            for b in multi_indices(n, cutoffs.beta) {
                basis.push((a.clone(), b));
            }
        }
        let lookup: HashMap<_, _> = basis.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        let mut space = Self {
            n,
            rank,
            cutoffs,
            basis,
            fiber: FiberSpace::new(n, rank),
            lookup,
            mode,
            gens: HashMap::new(),
            l0_function: Vec::new(),
        };
        for kind in 0..6 {
            for i in 0..n {
                let m = space.lift(kind, i);
                space.gens.insert((kind, i), m);
            }
        }
        space.l0_function = space.assemble_l0()?;
        Ok(space)
    }

    pub fn fiber(&self) -> FiberSpace {
        self.fiber
    }

    /// Number of function-part basis vectors.
    pub fn function_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn dim(&self) -> usize {
        self.basis.len() * self.fiber.dim()
    }

    /// Largest relative Galerkin residual of a generator on interior one-mode
    /// basis functions; zero when the basis is closed under the generators.
    pub fn closure_defect(&self) -> f64 {
        self.mode.closure_defect
    }

    /// Largest deviation of the quadrature Gram matrix from the identity.
    pub fn gram_defect(&self) -> f64 {
        self.mode.gram_defect
    }

    /// Values `φ_u(0)` of the orthonormal function basis.
    pub fn origin_values(&self) -> Vec<f64> {
        self.basis
            .iter()
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| self.mode.origin[self.mode.index(x, y)]).product())
            .collect()
    }

    fn lift(&self, kind: usize, i: usize) -> SparseCols {
        let table = &self.mode.gens[kind];
        self.basis
            .iter()
            .map(|(a, b)| {
                let mut col = Vec::new();
                for &(u, x) in &table[self.mode.index(a[i], b[i])] {
                    let (na, nb) = ((u / (self.mode.b_max + 1)) as u8, (u % (self.mode.b_max + 1)) as u8);
                    let (mut a2, mut b2) = (a.clone(), b.clone());
                    a2[i] = na;
                    b2[i] = nb;
                    if let Some(&row) = self.lookup.get(&(a2, b2)) {
                        col.push((row, x));
                    }
                }
                col
            })
            .collect()
    }

    fn apply_function(&self, kind: usize, i: usize, x: &HashMap<usize, f64>) -> HashMap<usize, f64> {
        let cols = &self.gens[&(kind, i)];
        let mut out: HashMap<usize, f64> = HashMap::new();
        for (&v, &c) in x {
            for &(u, m) in &cols[v] {
                *out.entry(u).or_insert(0.0) += c * m;
            }
        }
        out
    }

    /// Builds `Σ_i b_i b_i⁺` from the generator matrices and checks that it is
    /// diagonal in the basis.
    fn assemble_l0(&self) -> Result<Vec<f64>> {
        let mut diag = vec![0.0; self.function_dim()];
        let mut off: f64 = 0.0;
        for v in 0..self.function_dim() {
            let mut total: HashMap<usize, f64> = HashMap::new();
            for i in 0..self.n {
                let unit = HashMap::from([(v, 1.0)]);
                let y = self.apply_function(0, i, &self.apply_function(1, i, &unit));
                for (u, c) in y {
                    *total.entry(u).or_insert(0.0) += c;
                }
            }
            for (u, c) in total {
                if u == v {
                    diag[v] = c;
                } else {
                    off = off.max(c.abs());
                }
            }
        }
        let scale = diag.iter().copied().fold(1.0, f64::max);
        if off > 1e-8 * scale {
            return Err(Error::Numeric(format!("truncated ℒ₀ is not diagonal (off-diagonal {off:.2e})")));
        }
        Ok(diag)
    }

    /// Eigenvalues of the truncated `ℒ₀ = Σ b_i b_i⁺ + 4π·(form degree)`,
    /// obtained by diagonalizing the one-mode matrix densely.
    pub fn l0_spectrum(&self) -> Vec<f64> {
        let size = self.mode.gens[0].len();
        let mut dense = DMatrix::<f64>::zeros(size, size);
        for v in 0..size {
            for &(w, x) in &self.mode.gens[1][v] {
                for &(u, y) in &self.mode.gens[0][w] {
                    dense[(u, v)] += y * x;
                }
            }
        }
        let sym = (&dense + dense.transpose()) * 0.5;
        let one_mode: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
        let mut sums = vec![0.0];
        for _ in 0..self.n {
            sums = sums.iter().flat_map(|s| one_mode.iter().map(move |e| s + e)).collect();
        }
        let degrees: Vec<usize> = (0..self.fiber.dim()).map(|f| self.fiber.degree(f)).collect();
        let mut out: Vec<f64> = sums.iter().flat_map(|s| degrees.iter().map(move |&d| s + 4.0 * PI * d as f64)).collect();
        out.sort_by(f64::total_cmp);
        out
    }

    /// Largest distance of the truncated spectrum from `4π·ℕ`.
    pub fn spectrum_defect(&self) -> f64 {
        self.l0_spectrum()
            .iter()
            .map(|e| {
                let k = (e / (4.0 * PI)).round().max(0.0);
                (e - 4.0 * PI * k).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Diagonal of the full `ℒ₀` on `(function, fiber)` pairs.
    fn l0_diagonal(&self) -> Vec<f64> {
        let fd = self.fiber.dim();
        let mut out = Vec::with_capacity(self.dim());
        for &l in &self.l0_function {
            for f in 0..fd {
                out.push(l + 4.0 * PI * self.fiber.degree(f) as f64);
            }
        }
        out
    }

    /// Galerkin matrix of an operator expression on the full truncated space.
    pub fn assemble(&self, op: &OperatorExpr) -> BlockOperator {
        let fd = self.fiber.dim();
        let words: Vec<(Vec<(usize, usize)>, Vec<Complex64>)> = op
            .words()
            .map(|(w, c)| (w.iter().map(|&g| generator_kind(g)).collect(), c.to_map(fd).eval(PI)))
            .collect();
        let cols = (0..self.function_dim())
            .map(|v| {
                let mut acc: BTreeMap<usize, Vec<Complex64>> = BTreeMap::new();
                for (word, coef) in &words {
                    let mut x = HashMap::from([(v, 1.0)]);
                    for &(kind, i) in word.iter().rev() {
                        x = self.apply_function(kind, i, &x);
                        if x.is_empty() {
                            break;
                        }
                    }
                    for (u, c) in x {
                        if c == 0.0 {
                            continue;
                        }
                        let blk = acc.entry(u).or_insert_with(|| vec![Complex64::new(0.0, 0.0); fd * fd]);
                        for (s, t) in blk.iter_mut().zip(coef) {
                            *s += t * c;
                        }
                    }
                }
                acc.into_iter().filter(|(_, b)| b.iter().any(|z| z.norm() > 0.0)).collect()
            })
            .collect();
        BlockOperator { fiber_dim: fd, cols }
    }
}

/// Operator on `function ⊗ fiber` with dense fiber blocks, stored by
/// function-part columns.
#[derive(Clone, Debug)]
pub struct BlockOperator {
    fiber_dim: usize,
    cols: Vec<Vec<(usize, Vec<Complex64>)>>,
}

impl BlockOperator {
    pub fn nnz_blocks(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    /// `y += A x` for a state laid out function-major, fiber fastest.
    fn apply_add(&self, x: &[Complex64], y: &mut [Complex64]) {
        let fd = self.fiber_dim;
        for (v, col) in self.cols.iter().enumerate() {
            let xv = &x[v * fd..(v + 1) * fd];
            if xv.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                continue;
            }
            for (u, blk) in col {
                let yu = &mut y[u * fd..(u + 1) * fd];
                for (r, out) in yu.iter_mut().enumerate() {
                    let row = &blk[r * fd..(r + 1) * fd];
                    *out += row.iter().zip(xv).map(|(a, b)| a * b).sum::<Complex64>();
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Contour integral
// ---------------------------------------------------------------------------

/// Numerical block `I_{2j} 𝒃_r I_{2j}` on a prepared truncated space.
///
/// Orders without provided components contribute nothing; the caller is
/// expected to have checked that the target block does not need them.
pub fn numeric_block_on(
    space: &TruncatedSpace,
    ops: &ModelOperators,
    j: usize,
    r: usize,
    contour_points: usize,
) -> DMatrix<Complex64> {
    let fd = space.fiber.dim();
    let fdim = space.function_dim();
    let summed: HashMap<usize, BlockOperator> = ORDERS
        .iter()
        .filter(|&&k| k <= 2 * r)
        .map(|&k| {
            let mut total = OperatorExpr::zero();
            for s in [-2, 0, 2] {
                if let Some(o) = ops.get(k, s) {
                    total = total.add(o);
                }
            }
            (k, space.assemble(&total))
        })
        .collect();
    let l0 = space.l0_diagonal();
    let origin = space.origin_values();
    let cols: Vec<usize> = (0..fd).filter(|&f| space.fiber.degree(f) == 2 * j).collect();

    let node = |m: usize| -> DMatrix<Complex64> {
        let lambda = Complex64::from_polar(1.0, 2.0 * PI * m as f64 / contour_points as f64);
        let resolve = |x: &mut Vec<Complex64>| {
            for (z, mu) in x.iter_mut().zip(&l0) {
                *z /= lambda - mu;
            }
        };
        let mut out = DMatrix::<Complex64>::zeros(fd, fd);
        for &c in &cols {
            let mut seed = vec![Complex64::new(0.0, 0.0); fdim * fd];
            for (u, &phi) in origin.iter().enumerate() {
                seed[u * fd + c] = Complex64::new(phi, 0.0);
            }
            // G_s = R Σ_k 𝒪_k G_{s−k}, G_0 = R·seed
            let mut g: Vec<Vec<Complex64>> = Vec::with_capacity(2 * r + 1);
            resolve(&mut seed);
            g.push(seed);
            for s in 1..=2 * r {
                let mut next = vec![Complex64::new(0.0, 0.0); fdim * fd];
                for (&k, op) in &summed {
                    if k <= s {
                        op.apply_add(&g[s - k], &mut next);
                    }
                }
                resolve(&mut next);
                g.push(next);
            }
            let last = &g[2 * r];
            for &row in &cols {
                let val: Complex64 = origin.iter().enumerate().map(|(u, &phi)| last[u * fd + row] * phi).sum();
                out[(row, c)] += val * lambda / contour_points as f64;
            }
        }
        out
    };
    (0..contour_points).into_par_iter().map(node).reduce(|| DMatrix::zeros(fd, fd), |a, b| a + b)
}

/// Numerical block `I_{2j} 𝒃_r I_{2j}` for curvature data.
pub fn numeric_block(j: usize, r: usize, data: &CurvatureData, cutoffs: Cutoffs, quad_order: usize) -> Result<DMatrix<Complex64>> {
    let terms = prune_structural(j, &enumerate_terms(r));
    check_available(&required_operators(j, data.n, &terms))?;
    let space = TruncatedSpace::new(data.n, data.rank, cutoffs, quad_order)?;
    let ops = ModelOperators::build(data);
    Ok(numeric_block_on(&space, &ops, j, r, CONTOUR_POINTS))
}

/// Max-norm differences between blocks at successive cutoffs.
pub fn convergence(
    j: usize,
    r: usize,
    data: &CurvatureData,
    ladder: &[Cutoffs],
    quad_order: usize,
) -> Result<Vec<f64>> {
    let blocks = ladder.iter().map(|&c| numeric_block(j, r, data, c, quad_order)).collect::<Result<Vec<_>>>()?;
    Ok(blocks.windows(2).map(|w| max_abs(&(&w[1] - &w[0]))).collect())
}

pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Floating shadow of an exact fiber map.
pub fn to_complex_matrix(m: &crate::fiber::FiberMap) -> DMatrix<Complex64> {
    let d = m.dim();
    DMatrix::from_row_slice(d, d, &m.eval(PI))
}

/// `‖a − b‖_max / max(‖b‖_max, floor)`.
pub fn relative_error(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>, floor: f64) -> f64 {
    max_abs(&(a - b)) / max_abs(b).max(floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::coefficient_block;
    use crate::geometry::RandomSpec;

    #[test]
    fn hermite_rule_integrates_polynomials() {
        let (t, w) = hermite_rule(12);
        let total: f64 = w.iter().sum();
        assert!((total - PI.sqrt()).abs() < 1e-13);
        let second: f64 = t.iter().zip(&w).map(|(x, w)| x * x * w).sum();
        assert!((second - PI.sqrt() / 2.0).abs() < 1e-13);
    }

    #[test]
    fn moment_examples() {
        assert!((quadrature_moment(&[1], &[1], 8) - 1.0 / PI).abs() < 1e-12);
        assert!(quadrature_moment(&[1], &[0], 8).abs() < 1e-12);
        assert!((quadrature_moment(&[2], &[2], 8) - 2.0 / (PI * PI)).abs() < 1e-10);
    }

    #[test]
    fn moments_match_exact_values() {
        for b1 in 0..=4u8 {
            for b2 in 0..=(4 - b1) {
                for g1 in 0..=4u8 {
                    for g2 in 0..=(4 - g1) {
                        let exact = gaussian_moment(&[b1, b2], &[g1, g2]).eval(PI).re;
                        let quad = quadrature_moment(&[b1, b2], &[g1, g2], 10);
                        assert!((exact - quad).abs() < 1e-10, "{b1}{b2}/{g1}{g2}");
                    }
                }
            }
        }
    }

    #[test]
    fn truncated_basis_is_orthonormal_and_closed() {
        let s = TruncatedSpace::new(2, 1, Cutoffs::new(4, 4), 30).unwrap();
        assert!(s.gram_defect() < 1e-10);
        assert!(s.closure_defect() < 1e-10);
        assert!(s.spectrum_defect() < 1e-8);
        // b₁z₁𝒫 = 2|1,1⟩ in the normalized basis, value −2 at the origin
        let origin = s.origin_values();
        let idx = s.basis.iter().position(|(a, b)| a == &vec![1, 0] && b == &vec![1, 0]).unwrap();
        assert!((origin[idx] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zeroth_block_is_ground_projector() {
        let d = CurvatureData::random(RandomSpec { n: 2, rank: 1, density: 0.5 }, 3);
        let block = numeric_block(0, 0, &d, Cutoffs::new(2, 2), 20).unwrap();
        let mut expect = DMatrix::<Complex64>::zeros(4, 4);
        expect[(0, 0)] = Complex64::new(1.0, 0.0);
        assert!(max_abs(&(&block - &expect)) < 1e-10);
    }

    #[test]
    fn leading_block_against_exact_engine() {
        let json = r#"{"schema_version":1,"n":2,"rank":1,
            "RE_anti":[{"index":[1,2],"matrix":[[["1","0"]]]}]}"#;
        let d = CurvatureData::from_json(json, false).unwrap();
        let exact = to_complex_matrix(&coefficient_block(1, 2, &d).unwrap().block);
        let numeric = numeric_block(1, 2, &d, Cutoffs::new(4, 4), 30).unwrap();
        assert!(max_abs(&(&numeric - &exact)) < 1e-8, "{numeric} vs {exact}");
    }

    #[test]
    fn first_coefficient_sign_at_j0() {
        let d = CurvatureData::random(RandomSpec { n: 2, rank: 1, density: 0.6 }, 11);
        let exact = to_complex_matrix(&coefficient_block(0, 1, &d).unwrap().block);
        let numeric = numeric_block(0, 1, &d, Cutoffs::new(4, 4), 30).unwrap();
        assert!(relative_error(&numeric, &exact, 1e-12) < 1e-6, "{numeric} vs {exact}");
    }

    #[test]
    fn second_coefficient_against_exact_engine() {
        for (rank, seed) in [(1, 5), (2, 9)] {
            let d = CurvatureData::random(RandomSpec { n: 2, rank, density: 0.6 }, seed);
            let exact = to_complex_matrix(&coefficient_block(1, 3, &d).unwrap().block);
            assert!(max_abs(&exact) > 1e-6);
            let numeric = numeric_block(1, 3, &d, Cutoffs::new(3, 3), 30).unwrap();
            assert!(relative_error(&numeric, &exact, 1e-12) < 1e-6, "rank {rank}");
        }
    }

    #[test]
    fn refinement_converges() {
        let d = CurvatureData::random(RandomSpec { n: 2, rank: 1, density: 0.6 }, 5);
        let ladder: Vec<Cutoffs> = (1..=4).map(|c| Cutoffs::new(c, c)).collect();
        let diffs = convergence(1, 3, &d, &ladder, 30).unwrap();
        assert!(diffs[0] > 1e-6);
        assert!(diffs[1..].iter().all(|&x| x < 1e-10));
    }

    #[test]
    fn unavailable_components_are_refused() {
        let d = CurvatureData::random(RandomSpec { n: 2, rank: 1, density: 0.6 }, 1);
        assert!(matches!(numeric_block(0, 2, &d, Cutoffs::new(2, 2), 20), Err(Error::UnavailableOperator { .. })));
    }
}
