//! Resolvent-series terms, degree pruning and exact evaluation of the
//! diagonal blocks `I_{2j} 𝒃_r I_{2j}`.
//!
//! A term is `R_0 𝒪_{r_1} R_1 ⋯ 𝒪_{r_k} R_k`, where each slot `R_i` is
//! either `λ⁻¹P^N` or `(λ−ℒ₀)⁻¹P^{N⊥}`, and its contribution is the residue at
//! `λ = 0` of the kernel at the origin. Each `𝒪_r` splits into parts shifting
//! the form degree by `−2, 0, +2`; a term is evaluated as the sum over shift
//! assignments whose degree path is admissible.
//!
//! Evaluation splits at the rightmost `N` slot `s₀`. The factors right of
//! `s₀` are applied through their adjoints to `𝒫⊗I₀` and mirrored, the
//! factors left of `s₀` are applied directly, and the result is read at
//! `Z = Z' = 0`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::closed_forms::{thm1_block, thm2_bundle, ClosedFormBundle};
use crate::error::{Error, Result};
use crate::fiber::{FiberMap, FiberSpace};
use crate::fock::{compose_at_origin, KernelState, LambdaFiberMap, OperatorExpr, ResolventMode};
use crate::geometry::{CurvatureData, ModelOperators};
use crate::scalar::PiLaurent;

/// Signs of the engine's family sums `I, II, III` relative to the closed
/// forms. Family III carries one more `N⊥` slot than I and II, and each
/// `N⊥` slot evaluates to `−ℒ₀⁻¹` at `λ = 0`. The numeric contour integral
/// reproduces the engine blocks with these signs.
pub const FAMILY_SIGNS: [i64; 3] = [1, 1, -1];

/// Channel of a resolvent slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Slot {
    /// `λ⁻¹ P^N`.
    N,
    /// `(λ − ℒ₀)⁻¹ P^{N⊥}`.
    NPerp,
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Slot::N => "N",
            Slot::NPerp => "N⊥",
        })
    }
}

/// One summand of the resolvent series.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TermDescriptor {
    /// Orders `(r_1, …, r_k)`, each at least 2.
    pub orders: Vec<usize>,
    /// Slot channels, `k + 1` of them.
    pub eta: Vec<Slot>,
}

impl TermDescriptor {
    pub fn new(orders: Vec<usize>, eta: Vec<Slot>) -> Result<Self> {
        if eta.len() != orders.len() + 1 || orders.iter().any(|&r| r < 2) {
            return Err(Error::InvalidData(format!("malformed term {orders:?} / {eta:?}")));
        }
        Ok(Self { orders, eta })
    }

    pub fn k(&self) -> usize {
        self.orders.len()
    }

    /// Slots carrying `P^N`.
    pub fn n_slots(&self) -> Vec<usize> {
        self.eta.iter().enumerate().filter(|(_, s)| **s == Slot::N).map(|(i, _)| i).collect()
    }

    pub fn rightmost_n(&self) -> Option<usize> {
        self.n_slots().last().copied()
    }
}

impl fmt::Display for TermDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r: Vec<String> = self.orders.iter().map(ToString::to_string).collect();
        let e: Vec<String> = self.eta.iter().map(ToString::to_string).collect();
        write!(f, "r=({}) η=({})", r.join(","), e.join(","))
    }
}

/// Compositions of `total` into parts `≥ 2`, in lexicographic order.
pub fn compositions(total: usize) -> Vec<Vec<usize>> {
    if total == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 2..=total {
        let rest = total - first;
        if rest == 1 {
            continue;
        }
        for mut tail in compositions(rest) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

/// All terms of `𝓕_{2r}`: compositions of `2r` into parts `≥ 2`, crossed with
/// every slot channel vector. For `r = 0` the bare resolvent only has its `N`
/// channel inside the contour, so the single term carries `η = (N)`.
pub fn enumerate_terms(r: usize) -> Vec<TermDescriptor> {
    if r == 0 {
        return vec![TermDescriptor { orders: vec![], eta: vec![Slot::N] }];
    }
    let mut out = Vec::new();
    for orders in compositions(2 * r) {
        let k = orders.len();
        for bits in 0..(1u32 << (k + 1)) {
            let eta = (0..=k).map(|i| if bits >> (k - i) & 1 == 1 { Slot::NPerp } else { Slot::N }).collect();
            out.push(TermDescriptor { orders: orders.clone(), eta });
        }
    }
    out
}

/// Keeps terms that can contribute to the degree-`2j` block: some slot is `N`,
/// and every `N` slot has at least `j` operators on each side (each operator
/// moves the form degree by at most 2 and `N` sits in degree 0).
pub fn prune_structural(j: usize, terms: &[TermDescriptor]) -> Vec<TermDescriptor> {
    terms
        .iter()
        .filter(|t| {
            let ns = t.n_slots();
            !ns.is_empty() && ns.iter().all(|&i0| i0 >= j && t.k() - i0 >= j)
        })
        .cloned()
        .collect()
}

/// Degree shifts `(s_1, …, s_k)` with `deg_k = 2j`, `deg_{i−1} = deg_i + s_i`,
/// `deg_0 = 2j`, all degrees in `[0, n]` and degree 0 at every `N` slot.
pub fn shift_assignments(desc: &TermDescriptor, j: usize, n: usize) -> Vec<Vec<i32>> {
    let k = desc.k();
    let target = 2 * j as i32;
    let mut out = Vec::new();
    let mut shifts = vec![0i32; k];
    fn rec(
        desc: &TermDescriptor,
        i: usize,
        deg: i32,
        target: i32,
        n: i32,
        shifts: &mut Vec<i32>,
        out: &mut Vec<Vec<i32>>,
    ) {
        // `deg` is the degree at slot `i`
        if desc.eta[i] == Slot::N && deg != 0 {
            return;
        }
        if i == 0 {
            if deg == target {
                out.push(shifts.clone());
            }
            return;
        }
        for s in [-2, 0, 2] {
            let next = deg + s;
            if (0..=n).contains(&next) && (next - target).abs() <= 2 * (i as i32 - 1) {
                shifts[i - 1] = s;
                rec(desc, i - 1, next, target, n, shifts, out);
            }
        }
    }
    if target <= n as i32 {
        rec(desc, k, target, target, n as i32, &mut shifts, &mut out);
    }
    out
}

/// The `(order, shift)` components a set of terms needs at block `2j`.
pub fn required_operators(j: usize, n: usize, terms: &[TermDescriptor]) -> BTreeSet<(usize, i32)> {
    let mut need = BTreeSet::new();
    for t in terms {
        for a in shift_assignments(t, j, n) {
            for (r, s) in t.orders.iter().zip(&a) {
                need.insert((*r, *s));
            }
        }
    }
    need
}

/// Fails with the first unavailable component, if any.
pub fn check_available(need: &BTreeSet<(usize, i32)>) -> Result<()> {
    for &(order, shift) in need {
        if !ModelOperators::is_available(order, shift) {
            return Err(Error::UnavailableOperator { order, shift });
        }
    }
    Ok(())
}

fn component(ops: &ModelOperators, order: usize, shift: i32) -> Result<&OperatorExpr> {
    ops.get(order, shift).ok_or(Error::UnavailableOperator { order, shift })
}

fn apply_slot(st: &KernelState, slot: Slot) -> KernelState {
    match slot {
        Slot::N => st.proj_n_over_lambda(),
        Slot::NPerp => st.resolvent_nperp(ResolventMode::SymbolicLambda),
    }
}

/// `(P^N · Rt · I_{2j})(W, 0)` for the factors right of slot `s0`.
fn right_half(desc: &TermDescriptor, shifts: &[i32], s0: usize, j: usize, ops: &ModelOperators) -> Result<KernelState> {
    let sp = ops.space;
    let mut st = KernelState::vacuum(sp, sp.degree_projector(0));
    for i in s0..desc.k() {
        let op = component(ops, desc.orders[i], shifts[i])?;
        st = st.apply(&op.adjoint());
        st = apply_slot(&st, desc.eta[i + 1]);
    }
    Ok(st.project_degree(2 * j).mirror())
}

/// `(I_{2j} · L · λ⁻¹P^N)` applied to `state` for the factors left of `s0`.
fn left_half(
    desc: &TermDescriptor,
    shifts: &[i32],
    s0: usize,
    j: usize,
    ops: &ModelOperators,
    state: KernelState,
    keep_parameter: bool,
) -> Result<KernelState> {
    let mut st = state.proj_n_over_lambda();
    for i in (0..s0).rev() {
        let op = component(ops, desc.orders[i], shifts[i])?;
        st = st.apply(op);
        if !keep_parameter {
            st = st.at_parameter_origin();
        }
        st = apply_slot(&st, desc.eta[i]);
    }
    Ok(st.project_degree(2 * j))
}

/// Kernel value at the origin before the residue, single-pass route.
fn term_kernel(desc: &TermDescriptor, shifts: &[i32], j: usize, ops: &ModelOperators) -> Result<LambdaFiberMap> {
    let Some(s0) = desc.rightmost_n() else {
        return Ok(LambdaFiberMap::zero(ops.space.dim()));
    };
    let right = right_half(desc, shifts, s0, j, ops)?;
    let left = left_half(desc, shifts, s0, j, ops, right, false)?;
    Ok(left.eval_at_origin())
}

/// Kernel value at the origin before the residue via `A·A*` at slot `s₀`.
fn term_kernel_split(desc: &TermDescriptor, shifts: &[i32], j: usize, ops: &ModelOperators) -> Result<LambdaFiberMap> {
    let sp = ops.space;
    let Some(s0) = desc.rightmost_n() else {
        return Ok(LambdaFiberMap::zero(sp.dim()));
    };
    let right = right_half(desc, shifts, s0, j, ops)?;
    let seed = KernelState::vacuum(sp, sp.degree_projector(0));
    let left = left_half(desc, shifts, s0, j, ops, seed, true)?;
    Ok(compose_at_origin(&left, &right))
}

fn sum_over_shifts(
    desc: &TermDescriptor,
    j: usize,
    ops: &ModelOperators,
    kernel: impl Fn(&TermDescriptor, &[i32], usize, &ModelOperators) -> Result<LambdaFiberMap>,
) -> Result<FiberMap> {
    let sp = ops.space;
    let mut out = FiberMap::zero(sp.dim());
    if desc.rightmost_n().is_none() {
        return Ok(out);
    }
    for shifts in shift_assignments(desc, j, sp.n) {
        out.add_assign(&kernel(desc, &shifts, j, ops)?.residue());
    }
    Ok(out)
}

/// Exact block contribution of one term to `I_{2j} 𝒃_r I_{2j}`.
pub fn evaluate_term(desc: &TermDescriptor, j: usize, ops: &ModelOperators) -> Result<FiberMap> {
    sum_over_shifts(desc, j, ops, term_kernel)
}

/// The same contribution computed as `∫ A(0,W) B(W,0) dW` split at the
/// rightmost `N` slot.
pub fn evaluate_term_split(desc: &TermDescriptor, j: usize, ops: &ModelOperators) -> Result<FiberMap> {
    sum_over_shifts(desc, j, ops, term_kernel_split)
}

/// Pre-residue kernel of one shift assignment, as rational functions of `λ`.
pub fn term_lambda_kernel(desc: &TermDescriptor, shifts: &[i32], j: usize, ops: &ModelOperators) -> Result<LambdaFiberMap> {
    term_kernel(desc, shifts, j, ops)
}

/// Contribution labels for the block `I_{2j} 𝒃_{2j+1} I_{2j}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Label {
    Ia,
    Ib,
    Ic,
    IIa,
    IIb,
    IIIa,
    IIIb,
    Unclassified,
}

impl Label {
    pub fn family(self) -> Option<Family> {
        Some(match self {
            Label::Ia | Label::Ib | Label::Ic => Family::I,
            Label::IIa | Label::IIb => Family::II,
            Label::IIIa | Label::IIIb => Family::III,
            Label::Unclassified => return None,
        })
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Family {
    I,
    II,
    III,
}

/// Classifies a term at `r = 2j + 1` by where its `𝒪₃`/`𝒪₄` factors sit
/// relative to the rightmost `N` slot (operators with index below it are on
/// the left).
pub fn classify(desc: &TermDescriptor, j: usize) -> Label {
    let Some(s0) = desc.rightmost_n() else { return Label::Unclassified };
    let pos: Vec<(usize, usize)> = desc.orders.iter().copied().enumerate().filter(|(_, r)| *r != 2).collect();
    let left = |i: usize| i < s0;
    match pos.as_slice() {
        [(a, 3), (b, 3)] => match (left(*a), left(*b)) {
            (true, true) => Label::Ia,
            (false, false) => Label::Ic,
            _ => Label::Ib,
        },
        [(a, 4)] => {
            if left(*a) {
                Label::IIa
            } else {
                Label::IIb
            }
        }
        [] if s0 == j + 1 => Label::IIIa,
        [] if s0 == j => Label::IIIb,
        _ => Label::Unclassified,
    }
}

/// Outcome of comparing an engine family sum with its closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SignMatch {
    Plus,
    Minus,
    BothZero,
    Mismatch,
}

impl SignMatch {
    pub fn compare(engine: &FiberMap, closed: &FiberMap) -> Self {
        if engine.is_zero() && closed.is_zero() {
            SignMatch::BothZero
        } else if engine == closed {
            SignMatch::Plus
        } else if *engine == -closed {
            SignMatch::Minus
        } else {
            SignMatch::Mismatch
        }
    }

    /// Whether this outcome is consistent with the sign `s`.
    pub fn admits(self, s: i64) -> bool {
        match self {
            SignMatch::Plus => s == 1,
            SignMatch::Minus => s == -1,
            SignMatch::BothZero => true,
            SignMatch::Mismatch => false,
        }
    }
}

/// A term's exact contribution.
#[derive(Clone, Debug, Serialize)]
pub struct TermContribution {
    pub descriptor: TermDescriptor,
    pub label: Option<Label>,
    pub shift_assignments: Vec<Vec<i32>>,
    pub block: FiberMap,
}

/// Family-level comparison at `r = 2j + 1`.
#[derive(Clone, Debug, Serialize)]
pub struct FamilyComparison {
    pub engine_i: FiberMap,
    pub engine_ii: FiberMap,
    pub engine_iii: FiberMap,
    pub sign_i: SignMatch,
    pub sign_ii: SignMatch,
    /// Against the closed form with `R^E_Λ` between `𝓡^j` and `(𝓡^j)*`.
    pub sign_iii: SignMatch,
    /// Against the closed form with `R^E_Λ` at the zeroth-order operator's position.
    pub sign_iii_ordered: SignMatch,
    /// Per-label comparisons: `Ia ↔ T_Ia`, `Ic ↔ T_Ia*`, `Ib ↔ T_Ib`,
    /// `IIa ↔ T_IIa`, `IIb ↔ T_IIa*`.
    pub labels: BTreeMap<Label, SignMatch>,
}

/// Result of a block evaluation.
#[derive(Clone, Debug, Serialize)]
pub struct CoefficientReport {
    pub j: usize,
    pub r: usize,
    pub enumerated: usize,
    pub retained: usize,
    pub contributions: Vec<TermContribution>,
    pub block: FiberMap,
    pub closed_form: Option<FiberMap>,
    pub families: Option<FamilyComparison>,
    pub verdict: String,
}

impl CoefficientReport {
    pub fn label_sum(&self, label: Label) -> FiberMap {
        let mut out = FiberMap::zero(self.block.dim());
        for c in self.contributions.iter().filter(|c| c.label == Some(label)) {
            out.add_assign(&c.block);
        }
        out
    }

    pub fn family_sum(&self, family: Family) -> FiberMap {
        let mut out = FiberMap::zero(self.block.dim());
        for c in &self.contributions {
            if c.label.and_then(Label::family) == Some(family) {
                out.add_assign(&c.block);
            }
        }
        out
    }
}

/// Evaluates every retained term in parallel and sums exactly.
pub fn evaluate_terms(j: usize, terms: &[TermDescriptor], ops: &ModelOperators) -> Result<Vec<TermContribution>> {
    let n = ops.space.n;
    check_available(&required_operators(j, n, terms))?;
    terms
        .par_iter()
        .map(|t| {
            Ok(TermContribution {
                descriptor: t.clone(),
                label: None,
                shift_assignments: shift_assignments(t, j, n),
                block: evaluate_term(t, j, ops)?,
            })
        })
        .collect()
}

/// `I_{2j} 𝒃_r I_{2j}` from the resolvent series, with the closed-form
/// comparison where one exists (`r = 2j` and `r = 2j + 1`).
pub fn coefficient_block(j: usize, r: usize, data: &CurvatureData) -> Result<CoefficientReport> {
    let ops = ModelOperators::build(data);
    coefficient_block_with(j, r, data, &ops)
}

pub fn coefficient_block_with(j: usize, r: usize, data: &CurvatureData, ops: &ModelOperators) -> Result<CoefficientReport> {
    let space: FiberSpace = data.space();
    let all = enumerate_terms(r);
    let kept = prune_structural(j, &all);
    let mut contributions = evaluate_terms(j, &kept, ops)?;
    let mut block = FiberMap::zero(space.dim());
    for c in &mut contributions {
        if r == 2 * j + 1 {
            c.label = Some(classify(&c.descriptor, j));
        }
        block.add_assign(&c.block);
    }
    let mut report = CoefficientReport {
        j,
        r,
        enumerated: all.len(),
        retained: kept.len(),
        contributions,
        block,
        closed_form: None,
        families: None,
        verdict: String::new(),
    };
    if 2 * j > space.n {
        report.verdict = "empty degree block".into();
    } else if kept.is_empty() {
        report.verdict = "vanishes structurally".into();
    } else if r == 2 * j {
        let cf = thm1_block(j, data);
        report.verdict = if cf == report.block { "matches leading block" } else { "mismatch with leading block" }.into();
        report.closed_form = Some(cf);
    } else if r == 2 * j + 1 {
        let bundle = thm2_bundle(j, data);
        let fam = compare_families(&report, &bundle);
        report.verdict = family_verdict(&fam);
        report.closed_form = Some(bundle.total());
        report.families = Some(fam);
    } else {
        report.verdict = "no closed form".into();
    }
    Ok(report)
}

/// Compares engine family sums against the closed forms.
pub fn compare_families(report: &CoefficientReport, bundle: &ClosedFormBundle) -> FamilyComparison {
    let engine_i = report.family_sum(Family::I);
    let engine_ii = report.family_sum(Family::II);
    let engine_iii = report.family_sum(Family::III);
    let mut labels = BTreeMap::new();
    labels.insert(Label::Ia, SignMatch::compare(&report.label_sum(Label::Ia), &bundle.t_ia));
    labels.insert(Label::Ic, SignMatch::compare(&report.label_sum(Label::Ic), &bundle.t_ia.adjoint()));
    labels.insert(Label::Ib, SignMatch::compare(&report.label_sum(Label::Ib), &bundle.t_ib));
    labels.insert(Label::IIa, SignMatch::compare(&report.label_sum(Label::IIa), &bundle.t_iia));
    labels.insert(Label::IIb, SignMatch::compare(&report.label_sum(Label::IIb), &bundle.t_iia.adjoint()));
    FamilyComparison {
        sign_i: SignMatch::compare(&engine_i, &bundle.family_i()),
        sign_ii: SignMatch::compare(&engine_ii, &bundle.family_ii()),
        sign_iii: SignMatch::compare(&engine_iii, &bundle.family_iii()),
        sign_iii_ordered: SignMatch::compare(&engine_iii, &bundle.family_iii_ordered()),
        engine_i,
        engine_ii,
        engine_iii,
        labels,
    }
}

fn family_verdict(f: &FamilyComparison) -> String {
    let name = |s: SignMatch| match s {
        SignMatch::Plus => "+",
        SignMatch::Minus => "−",
        SignMatch::BothZero => "0",
        SignMatch::Mismatch => "mismatch",
    };
    format!(
        "families I:{} II:{} III:{} (ordered III:{})",
        name(f.sign_i),
        name(f.sign_ii),
        name(f.sign_iii),
        name(f.sign_iii_ordered)
    )
}

/// `(−1)^{#N⊥}`: the sign each term acquires relative to writing every
/// `N⊥` slot as `+ℒ₀⁻¹` instead of its value `−ℒ₀⁻¹` at `λ = 0`.
pub fn nperp_parity(desc: &TermDescriptor) -> i64 {
    if desc.eta.iter().filter(|s| **s == Slot::NPerp).count() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Convenience: the scalar `4π`-free residue of a pure pole product.
pub fn pole_residue(poles: &crate::scalar::Poles) -> PiLaurent {
    poles.residue_at_origin()
}
