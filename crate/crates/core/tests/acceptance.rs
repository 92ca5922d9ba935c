//! Acceptance suite: one status line per criterion.
//!
//! Runs without the libtest harness so the status lines always reach the
//! terminal. Each criterion reports `PASS`, `PARTIAL` or `FAIL`. `PARTIAL`
//! marks a check that holds only under a documented reading (for example a
//! corrected typo), with the literal reading's outcome printed alongside. The
//! process exits non-zero on any `FAIL`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use bergman_core::closed_forms::{c_jk, curvature_power_norm_sqr, j1_display, thm1_block, thm2_bundle};
use bergman_core::engine::{
    coefficient_block, enumerate_terms, evaluate_term, evaluate_term_split, prune_structural, SignMatch, FAMILY_SIGNS,
};
use bergman_core::fiber::FiberMap;
use bergman_core::fock::{compose_at_origin, gaussian_moment, Generator, KernelState, Monomial, OperatorExpr};
use bergman_core::geometry::{build_o2_zero, CurvatureData, ModelOperators, RandomSpec};
use bergman_core::oracle::{
    max_abs, numeric_block, quadrature_moment, relative_error, to_complex_matrix, Cutoffs, TruncatedSpace,
};
use bergman_core::scalar::{GaussianRational, PiLaurent};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Partial,
    Fail,
}

impl Status {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Partial => "PARTIAL",
            Status::Fail => "FAIL",
        }
    }
}

struct Outcome {
    status: Status,
    detail: String,
}

fn outcome(status: Status, detail: impl Into<String>) -> Outcome {
    Outcome { status, detail: detail.into() }
}

fn draw(n: usize, rank: usize, density: f64, seed: u64) -> CurvatureData {
    CurvatureData::random(RandomSpec { n, rank, density }, seed)
}

fn secs(d: Duration) -> String {
    format!("{:.3}s", d.as_secs_f64())
}

/// 1. Blocks below the leading order vanish by pruning alone.
fn vanishing() -> Outcome {
    let mut ok = true;
    let mut worst = Duration::ZERO;
    let mut cases = 0;
    for seed in 0..20u64 {
        let n = 2 + (seed % 2) as usize;
        let rank = 1 + ((seed / 2) % 2) as usize;
        let d = draw(n, rank, 0.6, 1000 + seed);
        for r in [0, 1] {
            let t = Instant::now();
            let rep = match coefficient_block(1, r, &d) {
                Ok(rep) => rep,
                Err(_) => return outcome(Status::Fail, format!("engine error at seed {seed}, r={r}")),
            };
            worst = worst.max(t.elapsed());
            ok &= rep.block.is_zero() && rep.retained == 0;
            cases += 1;
        }
    }
    ok &= worst < Duration::from_secs(1);
    outcome(Status::from_bool(ok), format!("{cases} cases, all zero with no retained term, slowest {}", secs(worst)))
}

/// Draws shared by criteria 2 and 10.
fn leading_draws() -> Vec<(usize, CurvatureData)> {
    let mut out = Vec::new();
    for (j, n) in [(1, 2), (1, 3), (2, 4)] {
        for seed in 0..10u64 {
            let rank = if j == 1 { 1 + (seed % 2) as usize } else { 1 };
            out.push((j, draw(n, rank, 0.6, 2000 + 100 * n as u64 + seed)));
        }
    }
    out
}

/// 2. Leading block equals `C(j,j)² I_{2j} 𝓡^j (𝓡^j)* I_{2j}`.
fn leading_block(draws: &[(usize, CurvatureData)]) -> (Outcome, Vec<FiberMap>) {
    let mut ok = true;
    let mut nonzero = 0;
    let mut slowest = [Duration::ZERO; 3];
    let mut blocks = Vec::new();
    for (j, d) in draws {
        let t = Instant::now();
        let rep = match coefficient_block(*j, 2 * j, d) {
            Ok(rep) => rep,
            Err(e) => return (outcome(Status::Fail, format!("engine error: {e}")), blocks),
        };
        let slot = if *j == 2 { 2 } else { d.n - 2 };
        slowest[slot] = slowest[slot].max(t.elapsed());
        ok &= rep.block == thm1_block(*j, d);
        nonzero += usize::from(!rep.block.is_zero());
        blocks.push(rep.block);
    }
    ok &= slowest[0] < Duration::from_secs(10) && slowest[1] < Duration::from_secs(10);
    ok &= slowest[2] < Duration::from_secs(300);
    let detail = format!(
        "{} draws exact ({nonzero} nonzero); slowest (1,2) {} (1,3) {} (2,4) {}",
        draws.len(),
        secs(slowest[0]),
        secs(slowest[1]),
        secs(slowest[2])
    );
    (outcome(Status::from_bool(ok), detail), blocks)
}

/// 3. `b₀ = I₀`.
fn zeroth_coefficient() -> Outcome {
    let mut ok = true;
    for seed in 0..6u64 {
        let d = draw(2 + (seed % 2) as usize, 1 + (seed % 3 == 0) as usize, 0.6, 3000 + seed);
        match coefficient_block(0, 0, &d) {
            Ok(rep) => ok &= rep.block == d.space().degree_projector(0),
            Err(_) => ok = false,
        }
    }
    outcome(Status::from_bool(ok), "6 draws, block equals I₀")
}

fn agrees(m: SignMatch, sign: i64) -> bool {
    matches!((m, sign), (SignMatch::BothZero, _) | (SignMatch::Plus, 1) | (SignMatch::Minus, -1))
}

fn sign_text(s: i64) -> &'static str {
    if s > 0 {
        "+"
    } else {
        "−"
    }
}

/// 4. Second coefficient against the signed closed-form families and the oracle.
fn second_coefficient() -> Outcome {
    let mut ok = true;
    let mut active = [0usize; 3];
    let mut slowest = Duration::ZERO;
    for seed in 0..10u64 {
        let d = draw(2 + (seed % 2) as usize, 1, 0.6, 4000 + seed);
        let t = Instant::now();
        let rep = match coefficient_block(1, 3, &d) {
            Ok(rep) => rep,
            Err(e) => return outcome(Status::Fail, format!("engine error: {e}")),
        };
        slowest = slowest.max(t.elapsed());
        let Some(f) = rep.families.as_ref() else { return outcome(Status::Fail, "no family comparison") };
        for (k, m) in [f.sign_i, f.sign_ii, f.sign_iii].into_iter().enumerate() {
            ok &= agrees(m, FAMILY_SIGNS[k]);
            active[k] += usize::from(m != SignMatch::BothZero);
        }
        ok &= rep.block == thm2_bundle(1, &d).signed_total(FAMILY_SIGNS, false);
    }
    ok &= slowest < Duration::from_secs(120);

    // The oracle fixes the signs independently of the closed forms.
    let mut worst_err: f64 = 0.0;
    let mut oracle_nonzero = [0usize; 2];
    for (slot, (j, r)) in [(0, 1), (1, 3)].into_iter().enumerate() {
        for seed in 0..3u64 {
            let d = draw(2, 1, 0.7, 4100 + seed);
            let numeric = match numeric_block(j, r, &d, Cutoffs::new(3, 3), 30) {
                Ok(m) => m,
                Err(e) => return outcome(Status::Fail, format!("oracle error: {e}")),
            };
            let closed = to_complex_matrix(&thm2_bundle(j, &d).signed_total(FAMILY_SIGNS, false));
            worst_err = worst_err.max(relative_error(&numeric, &closed, 1e-12));
            oracle_nonzero[slot] += usize::from(max_abs(&closed) > 1e-8);
        }
    }
    ok &= worst_err < 1e-6 && oracle_nonzero.iter().all(|&c| c > 0);

    // Rank ≥ 2: the printed placement of `R^E_Λ` in family III against the
    // placement at the zeroth-order operator's position.
    let mut printed_ok = 0;
    let mut ordered_ok = 0;
    let rank_two = 4;
    let mut rank_two_oracle = f64::INFINITY;
    for seed in 0..rank_two as u64 {
        let d = draw(2, 2, 0.7, seed);
        let Ok(rep) = coefficient_block(1, 3, &d) else { return outcome(Status::Fail, "engine error at rank 2") };
        let b = thm2_bundle(1, &d);
        printed_ok += usize::from(rep.block == b.signed_total(FAMILY_SIGNS, false));
        ordered_ok += usize::from(rep.block == b.signed_total(FAMILY_SIGNS, true));
        if seed == 3 {
            let Ok(numeric) = numeric_block(1, 3, &d, Cutoffs::new(3, 3), 30) else {
                return outcome(Status::Fail, "oracle error at rank 2");
            };
            rank_two_oracle = relative_error(&numeric, &to_complex_matrix(&b.signed_total(FAMILY_SIGNS, true)), 1e-12);
        }
    }
    ok &= rank_two_oracle < 1e-6;
    let status = match (ok, ordered_ok == rank_two, printed_ok == rank_two) {
        (false, _, _) | (true, false, _) => Status::Fail,
        (true, true, true) => Status::Pass,
        (true, true, false) => Status::Partial,
    };
    let detail = format!(
        "rank 1: 10 draws exact with signs I:{} II:{} III:{} (active in {}/{}/{} draws), slowest {}; \
         oracle at (0,1),(1,3) n=2 max rel err {worst_err:.1e} over {}+{} nonzero of 3+3 draws; \
         rank 2: printed III placement {printed_ok}/{rank_two}, ordered placement {ordered_ok}/{rank_two} (oracle rel err {rank_two_oracle:.1e})",
        sign_text(FAMILY_SIGNS[0]),
        sign_text(FAMILY_SIGNS[1]),
        sign_text(FAMILY_SIGNS[2]),
        active[0],
        active[1],
        active[2],
        secs(slowest),
        oracle_nonzero[0],
        oracle_nonzero[1]
    );
    outcome(status, detail)
}

/// 5. `128π³ I₂𝒃₃I₂` against the `j = 1` display, term by term.
fn j1_display_terms() -> Outcome {
    let scale = PiLaurent::rational(128, 1, 3);
    let signed = |m: &FiberMap, s: i64| m.scale(&PiLaurent::from_int(s));
    let mut corrected = true;
    let mut literal = true;
    for seed in 0..6u64 {
        let d = draw(3, 1, 0.7, 5000 + seed);
        let Ok(rep) = coefficient_block(1, 3, &d) else { return outcome(Status::Fail, "engine error") };
        let Some(f) = rep.families.as_ref() else { return outcome(Status::Fail, "no family comparison") };
        let disp = j1_display(&d);
        let i = signed(&f.engine_i.scale(&scale), FAMILY_SIGNS[0]);
        let ii = signed(&f.engine_ii.scale(&scale), FAMILY_SIGNS[1]);
        let iii = signed(&f.engine_iii.scale(&scale), FAMILY_SIGNS[2]);
        corrected &= i == disp.gradient && ii == disp.laplacian_adjoint_pair && iii == disp.curvature_with_i;
        literal &= i == disp.gradient && ii == disp.laplacian_printed && iii == disp.curvature_printed;
    }
    let status = match (corrected, literal) {
        (_, true) => Status::Pass,
        (true, false) => Status::Partial,
        (false, false) => Status::Fail,
    };
    outcome(
        status,
        format!(
            "6 draws at rank 1 (rank ≥ 2 carries the III placement of criterion 4); corrected reading (√−1 R^E_Λ, 𝓡(Δ𝓡)*) {}; literal reading {}",
            if corrected { "exact" } else { "differs" },
            if literal { "exact" } else { "differs" }
        ),
    )
}

fn scale_block(b: &[Vec<GaussianRational>], c: &GaussianRational) -> Vec<Vec<GaussianRational>> {
    b.iter().map(|row| row.iter().map(|x| x * c).collect()).collect()
}

/// The four pieces `a, b, c, d` of `𝒪₂⁰𝒫`, rebuilt from the tensors.
fn o20p_parts(d: &CurvatureData) -> [KernelState; 4] {
    use Generator::{B, Z};
    let sp = d.space();
    let n = d.n;
    let vac = KernelState::vacuum(sp, FiberMap::identity(sp.dim()));
    let r = |k, m, l, q| PiLaurent::constant(d.rtx(k, m, l, q).clone());
    let mut a = OperatorExpr::zero();
    let mut b = OperatorExpr::zero();
    let mut dd = OperatorExpr::zero();
    let mut c = KernelState::zero(sp);
    for m in 0..n {
        let mut cm = OperatorExpr::zero();
        for q in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let x = r(k, m, l, q);
                    if !x.is_zero() {
                        a = a.add(&OperatorExpr::word(&PiLaurent::rational(1, 6, 0) * &x, vec![B(m), B(q), Z(k), Z(l)]));
                        cm = cm.add(&OperatorExpr::word(&PiLaurent::rational(-1, 3, 1) * &x, vec![B(q), Z(k), Z(l)]));
                    }
                }
            }
        }
        c = c.add(&vac.mul_parameter(m).apply(&cm));
    }
    for q in 0..n {
        for l in 0..n {
            for k in 0..n {
                let x = r(l, k, k, q);
                if !x.is_zero() {
                    b = b.add(&OperatorExpr::word(&PiLaurent::rational(4, 3, 0) * &x, vec![B(q), Z(l)]));
                }
            }
            let e = scale_block(d.re_mixed.get(&[l, q]), &GaussianRational::ratio(1, 2));
            dd = dd.add(&OperatorExpr::fiber_word(sp.bundle_map(&e), vec![B(q), Z(l)]));
        }
    }
    [vac.apply(&a), vac.apply(&b), c, vac.apply(&dd)]
}

/// `½ Σ R^E(w̄_c, w̄_b) b_b z̄'_c 𝒫`, present when the bundle is not holomorphic.
fn anti_parameter_term(d: &CurvatureData) -> KernelState {
    let sp = d.space();
    let vac = KernelState::vacuum(sp, FiberMap::identity(sp.dim()));
    let mut out = KernelState::zero(sp);
    for b in 0..d.n {
        for c in 0..d.n {
            let e = scale_block(d.re_anti.get(&[c, b]), &GaussianRational::ratio(1, 2));
            out = out.add(&vac.mul_parameter(c).apply_generator(Generator::B(b)).apply_fiber(&sp.bundle_map(&e)));
        }
    }
    out
}

/// 6. `𝒪₂⁰𝒫`, the kernel values of its pieces, and `P^N 𝒪₂⁰ P^N = 0`.
fn intermediate_lemmas() -> Outcome {
    let mut literal_general = true;
    let mut literal_holomorphic = true;
    let mut with_extra = true;
    let mut diagonal = true;
    let mut values = true;
    let mut ground = true;
    let mut extra_seen = false;
    for seed in 0..6u64 {
        for (n, rank) in [(1, 1), (2, 1), (2, 2), (3, 1)] {
            let d = draw(n, rank, 0.7, 6000 + seed);
            let sp = d.space();
            let id = FiberMap::identity(sp.dim());
            let vac = KernelState::vacuum(sp, id.clone());

            let lhs = vac.apply(&build_o2_zero(&d));
            let [a, b, c, dd] = o20p_parts(&d);
            let rhs = a.add(&b).add(&c).add(&dd);
            let extra = anti_parameter_term(&d);
            extra_seen |= !extra.is_zero();
            literal_general &= lhs == rhs;
            with_extra &= lhs == rhs.add(&extra);
            diagonal &= lhs.at_parameter_origin() == rhs.at_parameter_origin();
            diagonal &= lhs.eval_first_at_origin() == rhs.eval_first_at_origin();

            let hol = d.with_scaled_anti(&GaussianRational::zero());
            let [ha, hb, hc, hd] = o20p_parts(&hol);
            literal_holomorphic &= vac.apply(&build_o2_zero(&hol)) == ha.add(&hb).add(&hc).add(&hd);

            let at = |s: &KernelState| -> Vec<(Vec<u8>, FiberMap)> {
                s.eval_first_at_origin().into_iter().map(|((g, _), f)| (g, f)).collect()
            };
            let only = |f: FiberMap| if f.is_zero() { vec![] } else { vec![(vec![0u8; n], f)] };
            let rx = PiLaurent::constant(d.scalar_curvature());
            let trace = d.re_trace();
            let minus_trace = scale_block(&trace, &GaussianRational::from_int(-1));
            values &= at(&a) == only(id.scale(&rx.scale(&GaussianRational::ratio(1, 6))));
            values &= at(&b) == only(id.scale(&rx.scale(&GaussianRational::ratio(-1, 3))));
            values &= at(&c).is_empty();
            values &= at(&dd) == only(sp.bundle_map(&minus_trace));

            let ground_state = KernelState::vacuum(sp, sp.degree_projector(0));
            let s = ground_state.apply(&build_o2_zero(&d)).project_n();
            ground &= compose_at_origin(&ground_state, &s).is_zero();
        }
    }
    let lemmas = values && ground && literal_holomorphic && with_extra && diagonal;
    let status = match (lemmas, literal_general) {
        (true, true) => Status::Pass,
        (true, false) => Status::Partial,
        (false, _) => Status::Fail,
    };
    let detail = format!(
        "24 draws; a/b/c/d values {}, P^N𝒪₂⁰P^N=0 {}; 𝒪₂⁰𝒫 = (a+b+c+d)𝒫 for holomorphic bundles {}, \
         for general data {} (extra term ½ΣR^E(w̄_c,w̄_b) b_b z̄'_c 𝒫 {}, equal at Z'=0 and at (0,Z) {})",
        yes(values),
        yes(ground),
        yes(literal_holomorphic),
        yes(literal_general),
        if with_extra && extra_seen { "accounts for the difference" } else { "not confirmed" },
        yes(diagonal)
    );
    outcome(status, detail)
}

fn yes(b: bool) -> &'static str {
    if b {
        "exact"
    } else {
        "differs"
    }
}

fn random_monomial(rng: &mut ChaCha8Rng, n: usize) -> Monomial {
    let mut v = [vec![0u8; n], vec![0u8; n], vec![0u8; n]];
    for part in &mut v {
        for x in part.iter_mut() {
            *x = rng.gen_range(0..3);
        }
    }
    Monomial::new(&v[0], &v[1], &v[2])
}

/// 7. Commutators, `ℒ = Σ b_i b_i⁺`, eigenvalues and the kernel identities.
fn ccr_suite() -> Outcome {
    use Generator::{BPlus, Z, ZBar, B};
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7000);
    let mut checks: Vec<bool> = Vec::new();
    let pi = |k: i64| PiLaurent::rational(k, 1, 1);
    while checks.len() < 1000 {
        let n = rng.gen_range(1..=3);
        let sp = bergman_core::fiber::FiberSpace::new(n, 1);
        let deg = rng.gen_range(0..=n);
        let f = sp.degree_projector(deg);
        let m = random_monomial(&mut rng, n);
        let s = KernelState::monomial(sp, m, f.clone());
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        let delta = i64::from(i == j);
        let comm = |x: Generator, y: Generator| {
            s.apply(&OperatorExpr::generator(y)).apply(&OperatorExpr::generator(x))
                .sub(&s.apply(&OperatorExpr::generator(x)).apply(&OperatorExpr::generator(y)))
        };
        checks.push(comm(B(i), BPlus(j)) == s.scale(&pi(-4 * delta)));
        checks.push(comm(B(i), B(j)).is_zero());
        checks.push(comm(BPlus(i), BPlus(j)).is_zero());
        checks.push(comm(Z(i), B(j)) == s.scale(&PiLaurent::from_int(2 * delta)));
        checks.push(comm(BPlus(i), ZBar(j)) == s.scale(&PiLaurent::from_int(2 * delta)));
        checks.push(comm(ZBar(i), B(j)).is_zero());

        let mut number = OperatorExpr::zero();
        for k in 0..n {
            number = number.add(&OperatorExpr::word(PiLaurent::one(), vec![B(k), BPlus(k)]));
        }
        let l0 = s.apply(&number).add(&s.scale(&pi(4 * deg as i64)));
        checks.push(l0 == s.apply_l0());
        checks.push(l0 == s.scale(&pi(4 * (m.alpha_len() + deg) as i64)));

        let gamma: Vec<u8> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let p = KernelState::monomial(sp, Monomial::new(&vec![0; n], &vec![0; n], &gamma), f.clone());
        checks.push(p.apply_generator(BPlus(i)).is_zero());
        let lowered = p.apply_generator(ZBar(i)).sub(&p.mul_parameter(i)).scale(&pi(2));
        checks.push(p.apply_generator(B(i)) == lowered);
    }
    let elapsed = t.elapsed();
    let count = checks.len();
    let failures = checks.iter().filter(|ok| !**ok).count();
    let ok = failures == 0 && elapsed < Duration::from_secs(10);
    outcome(Status::from_bool(ok), format!("{count} exact assertions, {failures} failed, {}", secs(elapsed)))
}

/// 8. Exact moments against quadrature, truncated `ℒ₀` spectrum.
fn moments_and_spectrum() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut multi = Vec::new();
    for b1 in 0..=4u8 {
        for b2 in 0..=(4 - b1) {
            multi.push(vec![b1, b2]);
        }
    }
    for beta in &multi {
        for gamma in &multi {
            for n in [1, 2] {
                if n == 1 && (beta[1] > 0 || gamma[1] > 0) {
                    continue;
                }
                let exact = gaussian_moment(&beta[..n], &gamma[..n]).eval(PI).re;
                let quad = quadrature_moment(&beta[..n], &gamma[..n], 12);
                worst = worst.max((exact - quad).abs());
                count += 1;
            }
        }
    }
    let mut spec: f64 = 0.0;
    for (n, rank, cut) in [(1, 1, 6), (2, 1, 4), (2, 2, 3)] {
        match TruncatedSpace::new(n, rank, Cutoffs::new(cut, cut), 30) {
            Ok(s) => spec = spec.max(s.spectrum_defect()),
            Err(e) => return outcome(Status::Fail, format!("oracle error: {e}")),
        }
    }
    let ok = worst < 1e-10 && spec < 1e-8;
    outcome(Status::from_bool(ok), format!("{count} moments, max abs err {worst:.1e}; ℒ₀ spectrum defect {spec:.1e}"))
}

/// 9. Split evaluation `A·A*` against the single-pass route.
fn split_route() -> Outcome {
    let mut ok = true;
    let mut compared = 0;
    let mut nonzero = 0;
    for (j, n, rank) in [(0, 2, 2), (1, 2, 2), (1, 3, 1), (2, 4, 1)] {
        for seed in 0..2u64 {
            let d = draw(n, rank, 0.6, 9000 + seed);
            let ops = ModelOperators::build(&d);
            for t in prune_structural(j, &enumerate_terms(2 * j)) {
                match (evaluate_term(&t, j, &ops), evaluate_term_split(&t, j, &ops)) {
                    (Ok(a), Ok(b)) => {
                        ok &= a == b;
                        nonzero += usize::from(!a.is_zero());
                    }
                    _ => ok = false,
                }
                compared += 1;
            }
        }
    }
    outcome(Status::from_bool(ok && nonzero > 0), format!("{compared} retained terms equal ({nonzero} nonzero)"))
}

/// 10. `tr(leading block) = C(j,j)² ‖𝓡^j‖²`.
fn trace_identity(draws: &[(usize, CurvatureData)], blocks: &[FiberMap]) -> Outcome {
    if blocks.len() != draws.len() {
        return outcome(Status::Fail, "leading blocks unavailable");
    }
    let mut ok = true;
    for ((j, d), block) in draws.iter().zip(blocks) {
        let Ok(c) = c_jk(*j, *j) else { return outcome(Status::Fail, "constant out of range") };
        ok &= block.trace() == &(&c * &c) * &curvature_power_norm_sqr(*j, d);
    }
    outcome(Status::from_bool(ok), format!("{} draws exact", draws.len()))
}

fn main() -> ExitCode {
    let draws = leading_draws();
    let (second, blocks) = leading_block(&draws);
    let results = [
        ("vanishing below leading order", vanishing()),
        ("leading block", second),
        ("zeroth coefficient", zeroth_coefficient()),
        ("second coefficient", second_coefficient()),
        ("j=1 display", j1_display_terms()),
        ("intermediate lemmas", intermediate_lemmas()),
        ("CCR property suite", ccr_suite()),
        ("moments and spectrum", moments_and_spectrum()),
        ("A·A* split route", split_route()),
        ("trace identity", trace_identity(&draws, &blocks)),
    ];
    let mut failed = false;
    for (k, (name, o)) in results.iter().enumerate() {
        println!("criterion {:>2} {:<8} {name}: {}", k + 1, o.status.tag(), o.detail);
        failed |= o.status == Status::Fail;
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
