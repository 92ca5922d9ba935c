//! Machine-readable and human-readable coefficient reports.
//!
//! Matrices are written row-major in the fiber basis order of
//! [`FiberSpace::basis`]; exact entries are lists of `{pi_exp, coeff}` terms
//! with `coeff = [re, im]` as rational strings.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::closed_forms::thm2_bundle;
use crate::engine::{CoefficientReport, SignMatch, FAMILY_SIGNS};
use crate::fiber::{FiberMap, FiberSpace};
use crate::geometry::CurvatureData;
use crate::oracle::Cutoffs;
use crate::scalar::{GaussianRational, PiLaurent};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One retained term.
#[derive(Clone, Debug, Serialize)]
pub struct DescriptorEntry {
    pub term: String,
    pub orders: Vec<usize>,
    pub eta: Vec<String>,
    pub label: Option<String>,
    pub shift_assignments: Vec<Vec<i32>>,
    pub block: FiberMap,
}

/// Family-sign bookkeeping at `r = 2j + 1`.
#[derive(Clone, Debug, Serialize)]
pub struct SignFlag {
    /// Recorded convention `[I, II, III]`.
    pub convention: [i64; 3],
    pub family_i: SignMatch,
    pub family_ii: SignMatch,
    pub family_iii: SignMatch,
    pub family_iii_ordered: SignMatch,
    pub labels: Vec<(String, SignMatch)>,
    /// Whether the comparison used the ordered `R^E_Λ` placement in family III.
    pub ordered_iii: bool,
}

/// Numeric cross-check attached to a report.
#[derive(Clone, Debug, Serialize)]
pub struct OracleEntry {
    pub cutoffs: [usize; 2],
    pub quad_order: usize,
    pub contour_points: usize,
    /// `[re, im]` pairs, row-major.
    pub block: Vec<Vec<[f64; 2]>>,
    pub relative_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Report for one `(j, r)` block.
#[derive(Clone, Debug, Serialize)]
pub struct BlockReport {
    pub schema_version: u32,
    pub j: usize,
    pub r: usize,
    pub n: usize,
    pub rank: usize,
    pub fiber_basis: Vec<String>,
    pub enumerated: usize,
    pub retained: usize,
    pub descriptors: Vec<DescriptorEntry>,
    pub block: FiberMap,
    pub closed_form: Option<FiberMap>,
    #[serde(rename = "match")]
    pub matches: bool,
    pub sign_flag: Option<SignFlag>,
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleEntry>,
}

impl BlockReport {
    /// Builds the report. At `r = 2j + 1` the closed form is the signed total
    /// under [`FAMILY_SIGNS`], with family III in the printed or the ordered
    /// placement.
    pub fn new(report: &CoefficientReport, data: &CurvatureData, ordered_iii: bool) -> Self {
        let space: FiberSpace = data.space();
        let descriptors = report
            .contributions
            .iter()
            .map(|c| DescriptorEntry {
                term: c.descriptor.to_string(),
                orders: c.descriptor.orders.clone(),
                eta: c.descriptor.eta.iter().map(ToString::to_string).collect(),
                label: c.label.map(|l| format!("{l:?}")),
                shift_assignments: c.shift_assignments.clone(),
                block: c.block.clone(),
            })
            .collect();
        let mut closed_form = report.closed_form.clone();
        let mut sign_flag = None;
        let matches = if let Some(f) = &report.families {
            let cf = thm2_bundle(report.j, data).signed_total(FAMILY_SIGNS, ordered_iii);
            let ok = cf == report.block;
            closed_form = Some(cf);
            sign_flag = Some(SignFlag {
                convention: FAMILY_SIGNS,
                family_i: f.sign_i,
                family_ii: f.sign_ii,
                family_iii: f.sign_iii,
                family_iii_ordered: f.sign_iii_ordered,
                labels: f.labels.iter().map(|(l, s)| (format!("{l:?}"), *s)).collect(),
                ordered_iii,
            });
            ok
        } else {
            // without a closed form there is nothing to disagree with
            closed_form.as_ref().is_none_or(|cf| *cf == report.block)
        };
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            j: report.j,
            r: report.r,
            n: space.n,
            rank: space.rank,
            fiber_basis: space.basis().iter().map(ToString::to_string).collect(),
            enumerated: report.enumerated,
            retained: report.retained,
            descriptors,
            block: report.block.clone(),
            closed_form,
            matches,
            sign_flag,
            verdict: report.verdict.clone(),
            oracle: None,
        }
    }

    pub fn attach_oracle(
        &mut self,
        numeric: &DMatrix<Complex64>,
        cutoffs: Cutoffs,
        quad_order: usize,
        contour_points: usize,
        tolerance: f64,
    ) {
        let exact = crate::oracle::to_complex_matrix(&self.block);
        let err = crate::oracle::relative_error(numeric, &exact, 1e-12);
        let block = (0..numeric.nrows()).map(|r| (0..numeric.ncols()).map(|c| [numeric[(r, c)].re, numeric[(r, c)].im]).collect()).collect();
        self.oracle = Some(OracleEntry {
            cutoffs: [cutoffs.alpha, cutoffs.beta],
            quad_order,
            contour_points,
            block,
            relative_error: err,
            tolerance,
            pass: err <= tolerance,
        });
    }

    /// Overall pass: exact match and, when present, oracle agreement.
    pub fn pass(&self) -> bool {
        self.matches && self.oracle.as_ref().is_none_or(|o| o.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "block j={} r={} (n={}, rank={})", self.j, self.r, self.n, self.rank);
        let _ = writeln!(s, "terms: {} enumerated, {} retained", self.enumerated, self.retained);
        for d in &self.descriptors {
            let label = d.label.as_deref().map(|l| format!(" [{l}]")).unwrap_or_default();
            let _ = writeln!(s, "  {}{}{}", d.term, label, if d.block.is_zero() { " = 0" } else { "" });
        }
        let _ = writeln!(s, "fiber basis: {}", self.fiber_basis.join(", "));
        let _ = writeln!(s, "engine block:\n{}", indent(&self.block.to_string()));
        if let Some(cf) = &self.closed_form {
            let _ = writeln!(s, "closed form:\n{}", indent(&cf.to_string()));
        }
        if let Some(f) = &self.sign_flag {
            let _ = writeln!(
                s,
                "family signs vs closed forms: I {:?}, II {:?}, III {:?}, III (ordered) {:?}; convention {:?}{}",
                f.family_i,
                f.family_ii,
                f.family_iii,
                f.family_iii_ordered,
                f.convention,
                if f.ordered_iii { ", ordered III" } else { "" }
            );
            for (l, m) in &f.labels {
                let _ = writeln!(s, "  {l}: {m:?}");
            }
        }
        if let Some(o) = &self.oracle {
            let _ = writeln!(
                s,
                "oracle: cutoffs {:?}, {} nodes, relative error {:.3e} (tolerance {:.0e}) {}",
                o.cutoffs,
                o.contour_points,
                o.relative_error,
                o.tolerance,
                if o.pass { "ok" } else { "FAILED" }
            );
        }
        let _ = writeln!(s, "verdict: {}", self.verdict);
        let _ = writeln!(s, "match: {}", self.matches);
        s
    }

    pub fn to_latex(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "% block j={} r={} n={} rank={}", self.j, self.r, self.n, self.rank);
        let _ = writeln!(s, "I_{{{}}} \\boldsymbol{{b}}_{{{}}} I_{{{}}} = {}", 2 * self.j, self.r, 2 * self.j, latex_matrix(&self.block));
        if let Some(cf) = &self.closed_form {
            let _ = writeln!(s, "% closed form\n{}", latex_matrix(cf));
        }
        s
    }
}

fn indent(t: &str) -> String {
    t.lines().map(|l| format!("  {l}")).collect::<Vec<_>>().join("\n")
}

fn latex_rational(r: &num_rational::BigRational) -> String {
    if r.denom() == &num_bigint::BigInt::from(1) {
        r.numer().to_string()
    } else {
        let sign = if r.numer() < &num_bigint::BigInt::from(0) { "-" } else { "" };
        let num = r.numer().magnitude();
        format!("{sign}\\frac{{{num}}}{{{}}}", r.denom())
    }
}

fn latex_gaussian(c: &GaussianRational) -> String {
    use num_traits::Zero;
    match (c.re.is_zero(), c.im.is_zero()) {
        (_, true) => latex_rational(&c.re),
        (true, false) => format!("{}\\,i", latex_rational(&c.im)),
        (false, false) => format!("\\left({} + {}\\,i\\right)", latex_rational(&c.re), latex_rational(&c.im)),
    }
}

/// `ℚ(i)[π^{±1}]` element in LaTeX.
pub fn latex_scalar(x: &PiLaurent) -> String {
    if x.is_zero() {
        return "0".into();
    }
    let parts: Vec<String> = x
        .terms()
        .map(|(e, c)| {
            let coeff = latex_gaussian(c);
            match e {
                0 => coeff,
                1 => format!("{coeff}\\,\\pi"),
                _ => format!("{coeff}\\,\\pi^{{{e}}}"),
            }
        })
        .collect();
    parts.join(" + ").replace("+ -", "- ")
}

/// A fiber map as a LaTeX `pmatrix`.
pub fn latex_matrix(m: &FiberMap) -> String {
    let rows: Vec<String> = m.rows().iter().map(|r| r.iter().map(latex_scalar).collect::<Vec<_>>().join(" & ")).collect();
    format!("\\begin{{pmatrix}} {} \\end{{pmatrix}}", rows.join(" \\\\ "))
}
