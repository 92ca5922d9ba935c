//! Curvature input at the base point and the model operators built from it.
//!
//! Tensor conventions (0-based in this API, 1-based in JSON):
//! - `re_mixed[k][l] = R^E(w_k, w̄_l)`, `re_anti[l][m] = R^E(w̄_l, w̄_m)`,
//!   `re_hol[l][m] = R^E(w_l, w_m)`, each a `rank × rank` block;
//! - `dr02_z[i][l][m] = ∂_{z_i} R^E(w̄_l, w̄_m)(0)`, likewise `dr02_zbar`, and
//!   the second derivatives `d2r02_zz[i][j][l][m]` etc.;
//! - `rtx[k][m][l][q] = R_{k m̄ l q̄} = ⟨R^{TX}(∂_k, ∂̄_m)∂_l, ∂̄_q⟩`.
//!
//! Since `w = √2 ∂`, `R^E(∂_a, ∂̄_b) = re_mixed[a][b]/2` and so on.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::{FiberMap, FiberSpace};
use crate::fock::{Coefficient, Generator, OperatorExpr};
use crate::scalar::{rat, GaussianRational, PiLaurent};

/// `rank × rank` matrix over `ℚ(i)`.
pub type Block = Vec<Vec<GaussianRational>>;

pub const SCHEMA_VERSION: u32 = 1;

fn zero_block(rank: usize) -> Block {
    vec![vec![GaussianRational::zero(); rank]; rank]
}

fn block_is_zero(b: &Block) -> bool {
    b.iter().flatten().all(GaussianRational::is_zero)
}

fn block_neg(b: &Block) -> Block {
    b.iter().map(|r| r.iter().map(|x| -x).collect()).collect()
}

fn block_adjoint(b: &Block) -> Block {
    let n = b.len();
    (0..n).map(|r| (0..n).map(|c| b[c][r].conj()).collect()).collect()
}

fn block_scale(b: &Block, c: &GaussianRational) -> Block {
    b.iter().map(|r| r.iter().map(|x| x * c).collect()).collect()
}

fn block_add(a: &Block, b: &Block) -> Block {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect()).collect()
}

/// Dense tensor of blocks with a fixed shape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockTensor {
    shape: Vec<usize>,
    data: Vec<Block>,
}

impl BlockTensor {
    pub fn zeros(shape: &[usize], rank: usize) -> Self {
        let len = shape.iter().product();
        Self { shape: shape.to_vec(), data: vec![zero_block(rank); len] }
    }

    fn offset(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.shape.len());
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &s)| {
            assert!(i < s, "tensor index out of range");
            acc * s + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> &Block {
        &self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], b: Block) {
        let o = self.offset(idx);
        self.data[o] = b;
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// All index tuples in row-major order.
    pub fn indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for &s in &self.shape {
            out = out.into_iter().flat_map(|p| (0..s).map(move |i| [p.clone(), vec![i]].concat())).collect();
        }
        out
    }

    pub fn scale(&self, c: &GaussianRational) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|b| block_scale(b, c)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(block_is_zero)
    }
}

/// Exact curvature data at the base point. See the module docs for layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurvatureData {
    pub n: usize,
    pub rank: usize,
    pub re_mixed: BlockTensor,
    pub re_anti: BlockTensor,
    pub re_hol: BlockTensor,
    pub dr02_z: BlockTensor,
    pub dr02_zbar: BlockTensor,
    pub d2r02_zz: BlockTensor,
    pub d2r02_zzbar: BlockTensor,
    pub d2r02_zbarzbar: BlockTensor,
    /// Flat `n⁴` array of `R_{k m̄ l q̄}`.
    rtx: Vec<GaussianRational>,
}

impl CurvatureData {
    pub fn zero(n: usize, rank: usize) -> Self {
        Self {
            n,
            rank,
            re_mixed: BlockTensor::zeros(&[n, n], rank),
            re_anti: BlockTensor::zeros(&[n, n], rank),
            re_hol: BlockTensor::zeros(&[n, n], rank),
            dr02_z: BlockTensor::zeros(&[n, n, n], rank),
            dr02_zbar: BlockTensor::zeros(&[n, n, n], rank),
            d2r02_zz: BlockTensor::zeros(&[n, n, n, n], rank),
            d2r02_zzbar: BlockTensor::zeros(&[n, n, n, n], rank),
            d2r02_zbarzbar: BlockTensor::zeros(&[n, n, n, n], rank),
            rtx: vec![GaussianRational::zero(); n.pow(4)],
        }
    }

    pub fn space(&self) -> FiberSpace {
        FiberSpace::new(self.n, self.rank)
    }

    fn rtx_offset(&self, k: usize, m: usize, l: usize, q: usize) -> usize {
        ((k * self.n + m) * self.n + l) * self.n + q
    }

    /// `R_{k m̄ l q̄}`.
    pub fn rtx(&self, k: usize, m: usize, l: usize, q: usize) -> &GaussianRational {
        &self.rtx[self.rtx_offset(k, m, l, q)]
    }

    pub fn set_rtx(&mut self, k: usize, m: usize, l: usize, q: usize, v: GaussianRational) {
        let o = self.rtx_offset(k, m, l, q);
        self.rtx[o] = v;
    }

    /// Sets `R_{k m̄ l q̄}` and every image under the curvature symmetries.
    pub fn set_rtx_orbit(&mut self, k: usize, m: usize, l: usize, q: usize, v: GaussianRational) {
        for ((a, b, c, d), conj) in rtx_orbit(k, m, l, q) {
            self.set_rtx(a, b, c, d, if conj { v.conj() } else { v.clone() });
        }
    }

    /// The tensor table by name, as used in JSON and violation messages.
    fn tensors(&self) -> [(&'static str, &BlockTensor); 8] {
        [
            ("RE_mixed", &self.re_mixed),
            ("RE_anti", &self.re_anti),
            ("RE_hol", &self.re_hol),
            ("dR02_z", &self.dr02_z),
            ("dR02_zbar", &self.dr02_zbar),
            ("d2R02_zz", &self.d2r02_zz),
            ("d2R02_zzbar", &self.d2r02_zzbar),
            ("d2R02_zbarzbar", &self.d2r02_zbarzbar),
        ]
    }

    fn tensor_mut(&mut self, name: &str) -> Option<&mut BlockTensor> {
        Some(match name {
            "RE_mixed" => &mut self.re_mixed,
            "RE_anti" => &mut self.re_anti,
            "RE_hol" => &mut self.re_hol,
            "dR02_z" => &mut self.dr02_z,
            "dR02_zbar" => &mut self.dr02_zbar,
            "d2R02_zz" => &mut self.d2r02_zz,
            "d2R02_zzbar" => &mut self.d2r02_zzbar,
            "d2R02_zbarzbar" => &mut self.d2r02_zbarzbar,
            _ => return None,
        })
    }

    /// Lists every symmetry violation; empty iff the data is valid.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        let n = self.n;
        let fmt1 = |idx: &[usize]| {
            let s: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
            format!("({})", s.join(","))
        };
        for (name, t) in [("RE_anti", &self.re_anti), ("RE_hol", &self.re_hol)] {
            for l in 0..n {
                for m in l..n {
                    if *t.get(&[l, m]) != block_neg(t.get(&[m, l])) {
                        v.push(format!("{name}: antisymmetry {}", fmt1(&[l, m])));
                    }
                }
            }
        }
        for l in 0..n {
            for m in 0..n {
                if *self.re_hol.get(&[l, m]) != block_neg(&block_adjoint(self.re_anti.get(&[l, m]))) {
                    v.push(format!("RE_hol: reality against RE_anti {}", fmt1(&[l, m])));
                }
            }
        }
        for k in 0..n {
            for l in k..n {
                if block_adjoint(self.re_mixed.get(&[k, l])) != *self.re_mixed.get(&[l, k]) {
                    v.push(format!("RE_mixed: hermiticity {}", fmt1(&[k, l])));
                }
            }
        }
        for (name, t) in [("dR02_z", &self.dr02_z), ("dR02_zbar", &self.dr02_zbar)] {
            for i in 0..n {
                for l in 0..n {
                    for m in l..n {
                        if *t.get(&[i, l, m]) != block_neg(t.get(&[i, m, l])) {
                            v.push(format!("{name}: antisymmetry {}", fmt1(&[i, l, m])));
                        }
                    }
                }
            }
        }
        for (name, t, sym) in [
            ("d2R02_zz", &self.d2r02_zz, true),
            ("d2R02_zzbar", &self.d2r02_zzbar, false),
            ("d2R02_zbarzbar", &self.d2r02_zbarzbar, true),
        ] {
            for i in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        for m in 0..n {
                            if l <= m && *t.get(&[i, j, l, m]) != block_neg(t.get(&[i, j, m, l])) {
                                v.push(format!("{name}: antisymmetry {}", fmt1(&[i, j, l, m])));
                            }
                            if sym && i < j && t.get(&[i, j, l, m]) != t.get(&[j, i, l, m]) {
                                v.push(format!("{name}: symmetry in derivatives {}", fmt1(&[i, j, l, m])));
                            }
                        }
                    }
                }
            }
        }
        for k in 0..n {
            for m in 0..n {
                for l in 0..n {
                    for q in 0..n {
                        let x = self.rtx(k, m, l, q);
                        for ((a, b, c, d), conj) in rtx_orbit(k, m, l, q) {
                            let y = self.rtx(a, b, c, d);
                            let ok = if conj { *y == x.conj() } else { y == x };
                            if !ok {
                                v.push(format!(
                                    "RTX: symmetry {} vs {}",
                                    fmt1(&[k, m, l, q]),
                                    fmt1(&[a, b, c, d])
                                ));
                                break;
                            }
                        }
                    }
                }
            }
        }
        v
    }

    /// `r^X = 8 Σ R_{m m̄ q q̄}`.
    pub fn scalar_curvature(&self) -> GaussianRational {
        let mut s = GaussianRational::zero();
        for m in 0..self.n {
            for q in 0..self.n {
                s += self.rtx(m, m, q, q);
            }
        }
        s.scale(&rat(8, 1))
    }

    /// `R^det(w_l, w̄_m) = Σ_k ⟨R^{TX}(w_l, w̄_m) w_k, w̄_k⟩ = 4 Σ_k R_{l m̄ k k̄}`.
    pub fn rdet_mixed(&self, l: usize, m: usize) -> GaussianRational {
        let mut s = GaussianRational::zero();
        for k in 0..self.n {
            s += self.rtx(l, m, k, k);
        }
        s.scale(&rat(4, 1))
    }

    /// Checks `r^X = 2 Σ_j R^det(w_j, w̄_j)`.
    pub fn check_scalar_curvature(&self) -> Result<()> {
        let mut tr = GaussianRational::zero();
        for j in 0..self.n {
            tr += &self.rdet_mixed(j, j);
        }
        let lhs = self.scalar_curvature();
        if lhs != tr.scale(&rat(2, 1)) {
            return Err(Error::Consistency(format!("r^X = {lhs} but 2 tr R^det = {}", tr.scale(&rat(2, 1)))));
        }
        Ok(())
    }

    /// `Σ_j R^E(w_j, w̄_j)` as a bundle block.
    pub fn re_trace(&self) -> Block {
        let mut s = zero_block(self.rank);
        for j in 0..self.n {
            s = block_add(&s, self.re_mixed.get(&[j, j]));
        }
        s
    }

    /// `R^E_Λ = −i Σ_j R^E(w_j, w̄_j)`, acting as `Id_Λ ⊗ R^E_Λ`.
    pub fn re_lambda(&self) -> FiberMap {
        let b = block_scale(&self.re_trace(), &-GaussianRational::i());
        self.space().bundle_map(&b)
    }

    /// `Σ_{l,m} (w̄^l ∧ w̄^m ∧) ⊗ t[prefix.., l, m]`.
    pub fn two_form(&self, t: &BlockTensor, prefix: &[usize]) -> FiberMap {
        let sp = self.space();
        let mut out = FiberMap::zero(sp.dim());
        for l in 0..self.n {
            for m in 0..self.n {
                let idx = [prefix, &[l, m]].concat();
                let b = t.get(&idx);
                if block_is_zero(b) {
                    continue;
                }
                let form = &sp.wedge(l).expect("mode") * &sp.wedge(m).expect("mode");
                out.add_assign(&sp.tensor(&form, b));
            }
        }
        out
    }

    /// `𝓡 = Σ R^E(w̄_l, w̄_m) w̄^l ∧ w̄^m ∧`.
    pub fn curvature_02(&self) -> FiberMap {
        self.two_form(&self.re_anti, &[])
    }

    /// `∂𝓡/∂z_i(0)`.
    pub fn d_curv_z(&self, i: usize) -> FiberMap {
        self.two_form(&self.dr02_z, &[i])
    }

    /// `∂𝓡/∂z̄_i(0)`.
    pub fn d_curv_zbar(&self, i: usize) -> FiberMap {
        self.two_form(&self.dr02_zbar, &[i])
    }

    /// `∂²𝓡/∂z_i∂z̄_j(0)`.
    pub fn dd_curv_zzbar(&self, i: usize, j: usize) -> FiberMap {
        self.two_form(&self.d2r02_zzbar, &[i, j])
    }

    /// `Σ_i ∂²𝓡/∂z_i∂z̄_i(0)`.
    pub fn laplacian_part(&self) -> FiberMap {
        let mut out = FiberMap::zero(self.space().dim());
        for i in 0..self.n {
            out.add_assign(&self.dd_curv_zzbar(i, i));
        }
        out
    }

    /// Multiplies the curvature tensors by the given factors. Used for scaling tests.
    pub fn with_scaled_anti(&self, c: &GaussianRational) -> Self {
        let mut out = self.clone();
        out.re_anti = self.re_anti.scale(c);
        out.re_hol = self.re_hol.scale(&c.conj());
        out
    }
}

/// Images of `(k, m, l, q)` under `k ↔ l`, `m ↔ q` and reality
/// `R_{k m̄ l q̄}* = R_{m k̄ q l̄}`; the flag marks conjugation.
pub fn rtx_orbit(k: usize, m: usize, l: usize, q: usize) -> Vec<((usize, usize, usize, usize), bool)> {
    let mut out = Vec::with_capacity(8);
    for &(a, b, c, d) in &[(k, m, l, q), (l, m, k, q), (k, q, l, m), (l, q, k, m)] {
        out.push(((a, b, c, d), false));
        out.push(((b, a, d, c), true));
    }
    out
}

// ---------------------------------------------------------------------------
// JSON schema
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize, Clone, Debug)]
struct BlockEntry {
    index: Vec<usize>,
    matrix: Block,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
struct ScalarEntry {
    index: Vec<usize>,
    value: GaussianRational,
}

#[derive(Serialize, Deserialize, Clone, Debug, Default)]
struct CurvatureJson {
    schema_version: u32,
    n: usize,
    rank: usize,
    #[serde(rename = "RE_mixed", default)]
    re_mixed: Vec<BlockEntry>,
    #[serde(rename = "RE_anti", default)]
    re_anti: Vec<BlockEntry>,
    #[serde(rename = "RE_hol", default)]
    re_hol: Vec<BlockEntry>,
    #[serde(rename = "dR02_z", default)]
    dr02_z: Vec<BlockEntry>,
    #[serde(rename = "dR02_zbar", default)]
    dr02_zbar: Vec<BlockEntry>,
    #[serde(rename = "d2R02_zz", default)]
    d2r02_zz: Vec<BlockEntry>,
    #[serde(rename = "d2R02_zzbar", default)]
    d2r02_zzbar: Vec<BlockEntry>,
    #[serde(rename = "d2R02_zbarzbar", default)]
    d2r02_zbarzbar: Vec<BlockEntry>,
    #[serde(rename = "RTX", default)]
    rtx: Vec<ScalarEntry>,
}

impl CurvatureData {
    /// Parses the JSON input format.
    ///
    /// Entries are sparse lists `{"index": [..1-based..], "matrix": [[[re, im], ..], ..]}`
    /// (`"value"` for `RTX`). With `strict = false`, missing entries are
    /// completed from the declared symmetries (antisymmetry in the form
    /// indices, hermiticity of `RE_mixed`, symmetry of `zz`/`z̄z̄` derivatives,
    /// the `RTX` orbit, and `RE_hol = −RE_anti†` when `RE_hol` is absent);
    /// explicitly given entries are never overwritten. Either way the result
    /// must validate.
    pub fn from_json(text: &str, strict: bool) -> Result<Self> {
        let j: CurvatureJson = serde_json::from_str(text)?;
        if j.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(j.schema_version));
        }
        if j.n == 0 || j.n > crate::fock::MAX_MODES || j.rank == 0 {
            return Err(Error::InvalidData(format!("unsupported n = {}, rank = {}", j.n, j.rank)));
        }
        let (n, rank) = (j.n, j.rank);
        let mut d = CurvatureData::zero(n, rank);
        let mut given: BTreeMap<&'static str, Vec<Vec<usize>>> = BTreeMap::new();
        let lists: [(&'static str, &Vec<BlockEntry>); 8] = [
            ("RE_mixed", &j.re_mixed),
            ("RE_anti", &j.re_anti),
            ("RE_hol", &j.re_hol),
            ("dR02_z", &j.dr02_z),
            ("dR02_zbar", &j.dr02_zbar),
            ("d2R02_zz", &j.d2r02_zz),
            ("d2R02_zzbar", &j.d2r02_zzbar),
            ("d2R02_zbarzbar", &j.d2r02_zbarzbar),
        ];
        for (name, entries) in lists {
            let t = d.tensor_mut(name).expect("known tensor");
            let arity = t.shape().len();
            for e in entries {
                if e.index.len() != arity || e.index.iter().any(|&i| i == 0 || i > n) {
                    return Err(Error::InvalidData(format!("{name}: bad index {:?}", e.index)));
                }
                if e.matrix.len() != rank || e.matrix.iter().any(|r| r.len() != rank) {
                    return Err(Error::InvalidData(format!("{name}: block at {:?} is not {rank}x{rank}", e.index)));
                }
                let idx: Vec<usize> = e.index.iter().map(|i| i - 1).collect();
                t.set(&idx, e.matrix.clone());
                given.entry(name).or_default().push(idx);
            }
        }
        let mut rtx_given = Vec::new();
        for e in &j.rtx {
            if e.index.len() != 4 || e.index.iter().any(|&i| i == 0 || i > n) {
                return Err(Error::InvalidData(format!("RTX: bad index {:?}", e.index)));
            }
            let i: Vec<usize> = e.index.iter().map(|i| i - 1).collect();
            d.set_rtx(i[0], i[1], i[2], i[3], e.value.clone());
            rtx_given.push((i[0], i[1], i[2], i[3]));
        }
        if !strict {
            d.complete(&given, &rtx_given, j.re_hol.is_empty());
        }
        let v = d.validate();
        if !v.is_empty() {
            return Err(Error::Symmetry(v));
        }
        d.check_scalar_curvature()?;
        Ok(d)
    }

    fn complete(
        &mut self,
        given: &BTreeMap<&'static str, Vec<Vec<usize>>>,
        rtx_given: &[(usize, usize, usize, usize)],
        derive_hol: bool,
    ) {
        let explicit = |name: &str, idx: &[usize]| given.get(name).is_some_and(|v| v.iter().any(|g| g == idx));
        // form-index antisymmetry and derivative symmetry
        for (name, sym_deriv) in [
            ("RE_anti", false),
            ("RE_hol", false),
            ("dR02_z", false),
            ("dR02_zbar", false),
            ("d2R02_zz", true),
            ("d2R02_zzbar", false),
            ("d2R02_zbarzbar", true),
        ] {
            let Some(list) = given.get(name) else { continue };
            let t = self.tensor_mut(name).expect("known tensor");
            for idx in list.clone() {
                let b = t.get(&idx).clone();
                let a = idx.len();
                let mut images = vec![(idx.clone(), b.clone())];
                if sym_deriv {
                    let mut s = idx.clone();
                    s.swap(0, 1);
                    images.push((s, b.clone()));
                }
                for (im, blk) in images.clone() {
                    let mut s = im.clone();
                    s.swap(a - 2, a - 1);
                    images.push((s, block_neg(&blk)));
                }
                for (im, blk) in images {
                    if !explicit(name, &im) {
                        t.set(&im, blk);
                    }
                }
            }
        }
        if let Some(list) = given.get("RE_mixed") {
            for idx in list.clone() {
                let swapped = vec![idx[1], idx[0]];
                if !explicit("RE_mixed", &swapped) {
                    let b = block_adjoint(self.re_mixed.get(&idx));
                    self.re_mixed.set(&swapped, b);
                }
            }
        }
        if derive_hol {
            for l in 0..self.n {
                for m in 0..self.n {
                    let b = block_neg(&block_adjoint(self.re_anti.get(&[l, m])));
                    self.re_hol.set(&[l, m], b);
                }
            }
        }
        for &(k, m, l, q) in rtx_given {
            let v = self.rtx(k, m, l, q).clone();
            for ((a, b, c, dd), conj) in rtx_orbit(k, m, l, q) {
                if !rtx_given.contains(&(a, b, c, dd)) {
                    self.set_rtx(a, b, c, dd, if conj { v.conj() } else { v.clone() });
                }
            }
        }
    }

    /// Serializes in the sparse input format (nonzero entries only).
    pub fn to_json(&self) -> String {
        let mut j = CurvatureJson { schema_version: SCHEMA_VERSION, n: self.n, rank: self.rank, ..Default::default() };
        let dump = |t: &BlockTensor| -> Vec<BlockEntry> {
            t.indices()
                .into_iter()
                .filter(|i| !block_is_zero(t.get(i)))
                .map(|i| BlockEntry { matrix: t.get(&i).clone(), index: i.iter().map(|x| x + 1).collect() })
                .collect()
        };
        for (name, t) in self.tensors() {
            let v = dump(t);
            match name {
                "RE_mixed" => j.re_mixed = v,
                "RE_anti" => j.re_anti = v,
                "RE_hol" => j.re_hol = v,
                "dR02_z" => j.dr02_z = v,
                "dR02_zbar" => j.dr02_zbar = v,
                "d2R02_zz" => j.d2r02_zz = v,
                "d2R02_zzbar" => j.d2r02_zzbar = v,
                _ => j.d2r02_zbarzbar = v,
            }
        }
        let n = self.n;
        for k in 0..n {
            for m in 0..n {
                for l in 0..n {
                    for q in 0..n {
                        let v = self.rtx(k, m, l, q);
                        if !v.is_zero() {
                            j.rtx.push(ScalarEntry { index: vec![k + 1, m + 1, l + 1, q + 1], value: v.clone() });
                        }
                    }
                }
            }
        }
        serde_json::to_string_pretty(&j).expect("serializable")
    }
}

// ---------------------------------------------------------------------------
// Random symmetry-valid data
// ---------------------------------------------------------------------------

/// Options for [`CurvatureData::random`].
#[derive(Clone, Copy, Debug)]
pub struct RandomSpec {
    pub n: usize,
    pub rank: usize,
    /// Probability that a free entry is nonzero.
    pub density: f64,
}

fn small_rational(rng: &mut ChaCha8Rng) -> num_rational::BigRational {
    rat(rng.gen_range(-9..=9), rng.gen_range(1..=9))
}

fn small_complex(rng: &mut ChaCha8Rng, density: f64) -> GaussianRational {
    if !rng.gen_bool(density) {
        return GaussianRational::zero();
    }
    GaussianRational::new(small_rational(rng), small_rational(rng))
}

fn random_block(rng: &mut ChaCha8Rng, rank: usize, density: f64) -> Block {
    (0..rank).map(|_| (0..rank).map(|_| small_complex(rng, density)).collect()).collect()
}

impl CurvatureData {
    /// Draws symmetry-valid data with entries `p/q`, `|p| ≤ 9`, `1 ≤ q ≤ 9`.
    pub fn random(spec: RandomSpec, seed: u64) -> Self {
        let RandomSpec { n, rank, density } = spec;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut d = CurvatureData::zero(n, rank);
        for l in 0..n {
            for m in (l + 1)..n {
                let b = random_block(&mut rng, rank, density);
                d.re_anti.set(&[m, l], block_neg(&b));
                d.re_anti.set(&[l, m], b);
            }
        }
        for l in 0..n {
            for m in 0..n {
                let b = block_neg(&block_adjoint(d.re_anti.get(&[l, m])));
                d.re_hol.set(&[l, m], b);
            }
        }
        for k in 0..n {
            for l in k..n {
                let mut b = random_block(&mut rng, rank, density);
                if k == l {
                    b = block_scale(&block_add(&b, &block_adjoint(&b)), &GaussianRational::ratio(1, 2));
                }
                d.re_mixed.set(&[l, k], block_adjoint(&b));
                d.re_mixed.set(&[k, l], b);
            }
        }
        for t in [&mut d.dr02_z, &mut d.dr02_zbar] {
            for i in 0..n {
                for l in 0..n {
                    for m in (l + 1)..n {
                        let b = random_block(&mut rng, rank, density);
                        t.set(&[i, m, l], block_neg(&b));
                        t.set(&[i, l, m], b);
                    }
                }
            }
        }
        for (t, sym) in [(&mut d.d2r02_zz, true), (&mut d.d2r02_zzbar, false), (&mut d.d2r02_zbarzbar, true)] {
            for i in 0..n {
                for j in 0..n {
                    if sym && j < i {
                        continue;
                    }
                    for l in 0..n {
                        for m in (l + 1)..n {
                            let b = random_block(&mut rng, rank, density);
                            t.set(&[i, j, m, l], block_neg(&b));
                            t.set(&[i, j, l, m], b.clone());
                            if sym {
                                t.set(&[j, i, m, l], block_neg(&b));
                                t.set(&[j, i, l, m], b);
                            }
                        }
                    }
                }
            }
        }
        let mut done = vec![false; n.pow(4)];
        for k in 0..n {
            for m in 0..n {
                for l in 0..n {
                    for q in 0..n {
                        if done[d.rtx_offset(k, m, l, q)] {
                            continue;
                        }
                        let orbit = rtx_orbit(k, m, l, q);
                        let mut v = small_complex(&mut rng, density);
                        if orbit.iter().any(|&(idx, conj)| conj && idx == (k, m, l, q)) {
                            v = GaussianRational::from_rat(v.re);
                        }
                        for ((a, b, c, e), conj) in orbit {
                            let o = d.rtx_offset(a, b, c, e);
                            done[o] = true;
                            d.rtx[o] = if conj { v.conj() } else { v.clone() };
                        }
                    }
                }
            }
        }
        d
    }
}

// ---------------------------------------------------------------------------
// Model operators
// ---------------------------------------------------------------------------

/// The operator components available to the engine.
#[derive(Clone, Debug)]
pub struct ModelOperators {
    pub space: FiberSpace,
    pub o2_zero: OperatorExpr,
    pub o2_plus: OperatorExpr,
    pub o2_minus: OperatorExpr,
    pub o3_plus: OperatorExpr,
    pub o3_minus: OperatorExpr,
    pub o4_plus: OperatorExpr,
    pub o4_minus: OperatorExpr,
}

impl ModelOperators {
    pub fn build(data: &CurvatureData) -> Self {
        let o2_plus = build_o2_plus(data);
        let o3_plus = build_o3_plus(data);
        let o4_plus = build_o4_plus(data);
        Self {
            space: data.space(),
            o2_zero: build_o2_zero(data),
            o2_minus: o2_plus.adjoint(),
            o2_plus,
            o3_minus: o3_plus.adjoint(),
            o3_plus,
            o4_minus: o4_plus.adjoint(),
            o4_plus,
        }
    }

    /// Component `𝒪_order^{shift}`, if provided.
    pub fn get(&self, order: usize, shift: i32) -> Option<&OperatorExpr> {
        match (order, shift) {
            (2, 0) => Some(&self.o2_zero),
            (2, 2) => Some(&self.o2_plus),
            (2, -2) => Some(&self.o2_minus),
            (3, 2) => Some(&self.o3_plus),
            (3, -2) => Some(&self.o3_minus),
            (4, 2) => Some(&self.o4_plus),
            (4, -2) => Some(&self.o4_minus),
            _ => None,
        }
    }

    pub fn is_available(order: usize, shift: i32) -> bool {
        matches!((order, shift), (2, 0) | (2, 2) | (2, -2) | (3, 2) | (3, -2) | (4, 2) | (4, -2))
    }
}

/// `𝒪₂^{+2} = 𝓡`.
pub fn build_o2_plus(data: &CurvatureData) -> OperatorExpr {
    OperatorExpr::fiber(data.curvature_02())
}

/// `𝒪₃^{+2} = z_i ∂𝓡/∂z_i(0) + z̄_i ∂𝓡/∂z̄_i(0)`.
pub fn build_o3_plus(data: &CurvatureData) -> OperatorExpr {
    let mut op = OperatorExpr::zero();
    for i in 0..data.n {
        op.add_word(vec![Generator::Z(i)], Coefficient::map(data.d_curv_z(i)));
        op.add_word(vec![Generator::ZBar(i)], Coefficient::map(data.d_curv_zbar(i)));
    }
    op
}

/// `𝒪₄^{+2} = ½ z_i z_j ∂²𝓡/∂z_i∂z_j + z_i z̄_j ∂²𝓡/∂z_i∂z̄_j + ½ z̄_i z̄_j ∂²𝓡/∂z̄_i∂z̄_j`.
pub fn build_o4_plus(data: &CurvatureData) -> OperatorExpr {
    let half = PiLaurent::rational(1, 2, 0);
    let mut op = OperatorExpr::zero();
    for i in 0..data.n {
        for j in 0..data.n {
            let zz = data.two_form(&data.d2r02_zz, &[i, j]).scale(&half);
            op.add_word(vec![Generator::Z(i), Generator::Z(j)], Coefficient::map(zz));
            op.add_word(vec![Generator::Z(i), Generator::ZBar(j)], Coefficient::map(data.dd_curv_zzbar(i, j)));
            let bb = data.two_form(&data.d2r02_zbarzbar, &[i, j]).scale(&half);
            op.add_word(vec![Generator::ZBar(i), Generator::ZBar(j)], Coefficient::map(bb));
        }
    }
    op
}

/// `𝒪₂⁰` written in ladder generators.
///
/// The real-frame sums are converted with
/// `Σ_i X(e_i)Y(e_i) = 2 Σ_a [X(∂_a)Y(∂̄_a) + X(∂̄_a)Y(∂_a)]`,
/// `∇_{0,∂_a} = −b_a/2` and `∇_{0,∂̄_a} = b_a⁺/2`. Only `(1,1)`-type
/// components of `R^{TX}` are present (Kähler).
pub fn build_o2_zero(data: &CurvatureData) -> OperatorExpr {
    use Generator::{BPlus, Z, ZBar, B};
    let n = data.n;
    let sp = data.space();
    let r = |k, m, l, q| PiLaurent::constant(data.rtx(k, m, l, q).clone());
    let mut op = OperatorExpr::zero();
    let third = PiLaurent::rational(1, 3, 0);
    let two_thirds = PiLaurent::rational(2, 3, 0);
    let pi_third = PiLaurent::rational(-1, 3, 1);
    let add = |op: &mut OperatorExpr, c: PiLaurent, w: Vec<Generator>| {
        if !c.is_zero() {
            op.add_word(w, Coefficient::scalar(c));
        }
    };
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for l in 0..n {
                    // (1/3)⟨R(Z,e_i)Z,e_j⟩∇_i∇_j
                    add(&mut op, &third * &r(a, c, b, l), vec![ZBar(c), ZBar(l), BPlus(a), BPlus(b)]);
                    add(&mut op, &third * &r(a, c, l, b), vec![ZBar(c), Z(l), BPlus(a), B(b)]);
                    add(&mut op, &third * &r(c, a, b, l), vec![Z(c), ZBar(l), B(a), BPlus(b)]);
                    add(&mut op, &third * &r(c, a, l, b), vec![Z(c), Z(l), B(a), B(b)]);
                }
            }
        }
    }
    // (1/3)⟨R(Z,e_k)e_k, e_j⟩∇_j
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                add(&mut op, &two_thirds * &r(a, c, b, a), vec![ZBar(c), BPlus(b)]);
                add(&mut op, -&(&two_thirds * &r(c, a, a, b)), vec![Z(c), B(b)]);
            }
        }
    }
    // (π/3)⟨R(z,z̄)Z, e_j⟩∇_j
    for b in 0..n {
        for c in 0..n {
            for dd in 0..n {
                for l in 0..n {
                    add(&mut op, &pi_third * &r(c, dd, b, l), vec![Z(c), ZBar(dd), ZBar(l), BPlus(b)]);
                    add(&mut op, &pi_third * &r(c, dd, l, b), vec![Z(c), Z(l), ZBar(dd), B(b)]);
                }
            }
        }
    }
    // −R^E(Z,e_j)∇_j = Σ_b [−R^E(Z,∂_b) b_b⁺ + R^E(Z,∂̄_b) b_b]
    let half = GaussianRational::ratio(1, 2);
    for b in 0..n {
        for c in 0..n {
            let e_dd = block_scale(data.re_hol.get(&[c, b]), &half); // R^E(∂_c, ∂_b)
            let e_bd = block_scale(data.re_mixed.get(&[b, c]), &-&half); // R^E(∂̄_c, ∂_b)
            let e_dbb = block_scale(data.re_mixed.get(&[c, b]), &half); // R^E(∂_c, ∂̄_b)
            let e_bb = block_scale(data.re_anti.get(&[c, b]), &half); // R^E(∂̄_c, ∂̄_b)
            for (blk, sign, w) in [
                (e_dd, -1, vec![Z(c), BPlus(b)]),
                (e_bd, -1, vec![ZBar(c), BPlus(b)]),
                (e_dbb, 1, vec![Z(c), B(b)]),
                (e_bb, 1, vec![ZBar(c), B(b)]),
            ] {
                if block_is_zero(&blk) {
                    continue;
                }
                let m = sp.bundle_map(&blk).scale(&PiLaurent::from_int(sign));
                op.add_word(w, Coefficient::map(m));
            }
        }
    }
    // potential −R^E(w_j, w̄_j) − r^X/6
    let pot = sp.bundle_map(&block_neg(&data.re_trace()));
    op.add_word(Vec::new(), Coefficient::map(pot));
    let rx = PiLaurent::constant(data.scalar_curvature()).scale(&GaussianRational::ratio(-1, 6));
    add(&mut op, rx, Vec::new());
    op
}
