//! `bergman`: batch front-end for the exact coefficient engine.
//!
//! Reads curvature data (or draws it from a seed), evaluates diagonal blocks
//! of the expansion coefficients, compares them with the closed forms and
//! optionally with the numeric oracle. Exit codes: 0 pass, 1 mismatch,
//! 2 invalid input, 3 unavailable operator.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use bergman_core::closed_forms::{c_jk, curvature_power_norm_sqr};
use bergman_core::engine::{coefficient_block, enumerate_terms, prune_structural};
use bergman_core::geometry::{CurvatureData, RandomSpec};
use bergman_core::oracle::{numeric_block, Cutoffs, CONTOUR_POINTS};
use bergman_core::report::BlockReport;
use bergman_core::Error;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "bergman", version, about = "Exact diagonal blocks of Bergman kernel expansion coefficients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Evaluate the block I_{2j} b_r I_{2j} and compare with any closed form.
    Compute,
    /// Check the leading block r = 2j against its closed form and trace identity.
    VerifyThm1,
    /// Check the block r = 2j + 1 against the signed closed-form families.
    VerifyThm2,
    /// List the resolvent-series terms for r, and those retained for j.
    Enumerate,
    /// Compare the exact block with the numeric contour integral.
    Oracle,
}

#[derive(Args, Debug)]
struct Opts {
    /// Form-degree index of the block (block degree 2j).
    #[arg(long, global = true, default_value_t = 1)]
    j: usize,
    /// Coefficient order; defaults to 2j for verify-thm1 and 2j+1 for verify-thm2.
    #[arg(long, global = true)]
    r: Option<usize>,
    /// Curvature data JSON; random data is drawn from --seed when absent.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Write the JSON report here.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Reject inputs that rely on symmetry completion.
    #[arg(long, global = true)]
    strict: bool,
    /// Attach the numeric contour-integral cross-check.
    #[arg(long, global = true)]
    with_oracle: bool,
    /// Seed for random curvature data.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Complex dimension of random data.
    #[arg(long, global = true, default_value_t = 2)]
    n: usize,
    /// Bundle rank of random data.
    #[arg(long, global = true, default_value_t = 1)]
    rank: usize,
    /// Probability that a free entry of random data is nonzero.
    #[arg(long, global = true, default_value_t = 0.5)]
    density: f64,
    /// Also print the blocks as LaTeX.
    #[arg(long, global = true)]
    latex: bool,
    /// Compare family III with the bundle curvature at the zeroth-order operator's position.
    #[arg(long, global = true)]
    ordered_iii: bool,
    /// Oracle truncation |α| ≤ A, |β| ≤ A.
    #[arg(long, global = true, default_value_t = 3)]
    cutoff: usize,
    /// Gauss–Hermite order for the oracle.
    #[arg(long, global = true, default_value_t = 30)]
    quad_order: usize,
    /// Relative tolerance for the oracle comparison.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tolerance: f64,
    /// Write the curvature data actually used (useful with random data).
    #[arg(long, global = true)]
    dump_input: Option<PathBuf>,
}

/// Outcome of a run before it becomes an exit code.
enum Outcome {
    Pass,
    Mismatch,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::UnavailableOperator { .. } => 3,
        Error::InvalidData(_)
        | Error::Symmetry(_)
        | Error::Schema(_)
        | Error::Json(_)
        | Error::Io(_)
        | Error::IndexOutOfRange { .. }
        | Error::ShapeMismatch(_)
        | Error::ConstantRange { .. } => 2,
        _ => 1,
    }
}

fn load(opts: &Opts) -> Result<CurvatureData, Error> {
    let data = match &opts.input {
        Some(p) => CurvatureData::from_json(&fs::read_to_string(p)?, opts.strict)?,
        None => {
            if opts.n == 0 || opts.n > 6 || opts.rank == 0 {
                return Err(Error::InvalidData(format!("unsupported n = {}, rank = {}", opts.n, opts.rank)));
            }
            CurvatureData::random(RandomSpec { n: opts.n, rank: opts.rank, density: opts.density }, opts.seed)
        }
    };
    if let Some(p) = &opts.dump_input {
        fs::write(p, data.to_json())?;
    }
    Ok(data)
}

fn emit(opts: &Opts, text: &str, json: &str, latex: Option<String>) -> Result<(), Error> {
    print!("{text}");
    if let (true, Some(l)) = (opts.latex, latex) {
        println!("{l}");
    }
    if let Some(p) = &opts.output {
        fs::write(p, json)?;
    }
    Ok(())
}

fn block_run(cmd: Command, opts: &Opts) -> Result<Outcome, Error> {
    let data = load(opts)?;
    let j = opts.j;
    let r = match (cmd, opts.r) {
        (Command::VerifyThm1, None) => 2 * j,
        (Command::VerifyThm2, None) => 2 * j + 1,
        (_, Some(r)) => r,
        (_, None) => return Err(Error::InvalidData("--r is required for this command".into())),
    };
    if cmd == Command::VerifyThm1 && r != 2 * j {
        return Err(Error::InvalidData(format!("verify-thm1 needs r = 2j = {}", 2 * j)));
    }
    if cmd == Command::VerifyThm2 && r != 2 * j + 1 {
        return Err(Error::InvalidData(format!("verify-thm2 needs r = 2j + 1 = {}", 2 * j + 1)));
    }
    let coefficient = coefficient_block(j, r, &data)?;
    let mut report = BlockReport::new(&coefficient, &data, opts.ordered_iii);
    let mut extra = String::new();
    if cmd == Command::VerifyThm1 && 2 * j <= data.n {
        let lhs = report.block.trace();
        let c = c_jk(j, j)?;
        let rhs = &(&c * &c) * &curvature_power_norm_sqr(j, &data);
        let ok = lhs == rhs;
        extra.push_str(&format!("trace identity: tr = {lhs}, C(j,j)²‖𝓡^j‖² = {rhs} {}\n", if ok { "ok" } else { "MISMATCH" }));
        report.matches &= ok;
    }
    if opts.with_oracle || cmd == Command::Oracle {
        let cut = Cutoffs::new(opts.cutoff, opts.cutoff);
        let numeric = numeric_block(j, r, &data, cut, opts.quad_order)?;
        report.attach_oracle(&numeric, cut, opts.quad_order, CONTOUR_POINTS, opts.tolerance);
    }
    let pass = if cmd == Command::Oracle { report.oracle.as_ref().is_some_and(|o| o.pass) } else { report.pass() };
    let text = format!("{}{extra}{}\n", report.to_text(), if pass { "PASS" } else { "FAIL" });
    emit(opts, &text, &report.to_json(), Some(report.to_latex()))?;
    Ok(if pass { Outcome::Pass } else { Outcome::Mismatch })
}

#[derive(Serialize)]
struct EnumerationReport {
    r: usize,
    j: usize,
    enumerated: Vec<String>,
    retained: Vec<String>,
}

fn enumerate_run(opts: &Opts) -> Result<Outcome, Error> {
    let r = opts.r.ok_or_else(|| Error::InvalidData("--r is required for enumerate".into()))?;
    let all = enumerate_terms(r);
    let kept = prune_structural(opts.j, &all);
    let rep = EnumerationReport {
        r,
        j: opts.j,
        enumerated: all.iter().map(ToString::to_string).collect(),
        retained: kept.iter().map(ToString::to_string).collect(),
    };
    let mut text = format!("r={r}: {} descriptors\n", all.len());
    for t in &rep.enumerated {
        text.push_str(&format!("  {t}\n"));
    }
    text.push_str(&format!("retained for j={}: {}\n", opts.j, kept.len()));
    for t in &rep.retained {
        text.push_str(&format!("  {t}\n"));
    }
    let json = serde_json::to_string_pretty(&rep)?;
    emit(opts, &text, &json, None)?;
    Ok(Outcome::Pass)
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    match cli.command {
        Command::Enumerate => enumerate_run(&cli.opts),
        cmd => block_run(cmd, &cli.opts),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Mismatch) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
