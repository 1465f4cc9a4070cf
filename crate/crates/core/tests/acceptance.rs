//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Oracles here are computed directly from coordinates and never go
//! through the algebra implementations they judge.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::Value;

use nbanach::algebra::{
    anchor_scaling_audit, multiplicativity_audit, Algebra, InstanceNNorm, NormVariant, OperatorAlgebra,
    PointwiseAlgebra, SeriesAlgebra,
};
use nbanach::axioms::{check_n_norm_axioms, GramNNorm};
use nbanach::element::Element;
use nbanach::functionals::{
    algebra_exponential, character_search, default_grid, eval_functional, exponential_check, gkz_converse_check,
    gkz_forward_check, BLinearFunctional,
};
use nbanach::harness::{run_suite, RunConfig};
use nbanach::invertibility::{
    bound_sweep, neumann_inverse, openness_check, perturbation_bound_check, perturbation_slope, resolvent_inverse,
    scale_to_norm, slope_decade, tdz_scan, BoundCheck, TdzOutcome, TdzParams, DEFAULT_MAX_TERMS,
};
use nbanach::nnorm::cauchy_schwarz_sweep;
use nbanach::report::{CheckReport, Outcome};
use nbanach::sampling::{random_real, random_scalar, random_unit_interval, substream};
use nbanach::scalar::{ArithmeticMode, CRat, Scalar, C64};

const SEED: u64 = 42;

type Verdict = Result<String, String>;

fn require(report: &CheckReport, what: &str) -> Result<(), String> {
    if report.passed() {
        Ok(())
    } else {
        Err(format!("{what}: {:?}", report.outcome))
    }
}

fn c1_axioms() -> Verdict {
    let samples = 500;
    let tol = 1e-9;
    let mut runs = 0;
    for (dim, n) in [(2, 2), (3, 2), (3, 3), (4, 2), (4, 3), (4, 4), (5, 3), (6, 2), (6, 4)] {
        let norm = GramNNorm { dim, n, tol };
        require(&check_n_norm_axioms::<C64, _>(&norm, samples, SEED, tol), &format!("gram dim={dim} n={n}"))?;
        runs += 1;
    }
    for variant in [NormVariant::Eq21MaxProduct, NormVariant::L1Corrected] {
        for (degree, n) in [(2, 2), (4, 3), (8, 2), (8, 3)] {
            let inst = SeriesAlgebra::<C64>::new(degree, n, variant).map_err(|e| e.to_string())?;
            let norm = InstanceNNorm { inst: &inst, radius: 1.0 };
            require(&check_n_norm_axioms(&norm, samples, SEED, tol), &inst.describe())?;
            runs += 1;
        }
    }
    for (m, n) in [(3, 2), (4, 3), (6, 4)] {
        let inst = PointwiseAlgebra::<C64>::new(m, n).map_err(|e| e.to_string())?;
        let norm = InstanceNNorm { inst: &inst, radius: 1.0 };
        require(&check_n_norm_axioms(&norm, samples, SEED, tol), &inst.describe())?;
        runs += 1;
    }
    Ok(format!("{runs} norms x {samples} samples, N1-N4 hold"))
}

fn c2_cauchy_schwarz() -> Verdict {
    let mut worst = f64::INFINITY;
    for (dim, n) in [(3, 2), (4, 3), (6, 4)] {
        let r = cauchy_schwarz_sweep::<C64>(dim, n, 1000, SEED, 1e-9);
        require(&r, &format!("dim={dim} n={n}"))?;
        worst = worst.min(r.metric_f64("min_gap").unwrap_or(f64::NAN));
    }
    Ok(format!("3 x 1000 samples, min gap {worst:.3e}"))
}

fn contraction<A: Algebra<C64>>(inst: &A, rng: &mut nbanach::sampling::SampleRng, q_max: f64) -> Option<A::Elem> {
    let x = inst.random_element(rng, 1.0);
    let q = random_unit_interval(rng).max(1.0 / 64.0) * q_max;
    scale_to_norm(inst, &x, q)
}

fn c3_neumann() -> Verdict {
    let p = PointwiseAlgebra::<C64>::new(4, 3).map_err(|e| e.to_string())?;
    let o = OperatorAlgebra::<C64>::new(4, 3).map_err(|e| e.to_string())?;
    let mut rng = substream(SEED, "acceptance_neumann");
    let mut worst_oracle: f64 = 0.0;
    let mut worst_slack = f64::NEG_INFINITY;
    let mut count = 0;
    while count < 200 {
        let Some(x) = contraction(&p, &mut rng, 0.9) else { continue };
        let r = neumann_inverse(&x, &p, 1e-10, DEFAULT_MAX_TERMS).map_err(|e| e.to_string())?;
        worst_slack = worst_slack.max(r.residual.max(r.residual_left) - r.tail_bound);
        if r.residual > r.tail_bound + 1e-9 || r.residual_left > r.tail_bound + 1e-9 {
            return Err(format!("pointwise residual {} over tail {}", r.residual, r.tail_bound));
        }
        for (xi, yi) in x.coords.iter().zip(&r.approx_inverse.coords) {
            let oracle = Complex64::new(1.0, 0.0) / (Complex64::new(1.0, 0.0) - xi);
            worst_oracle = worst_oracle.max((oracle - yi).norm());
        }
        count += 1;
    }
    if worst_oracle > 1e-8 {
        return Err(format!("reciprocal oracle deviation {worst_oracle:.3e}"));
    }
    let mut ops = 0;
    while ops < 200 {
        let Some(x) = contraction(&o, &mut rng, 0.9) else { continue };
        let r = neumann_inverse(&x, &o, 1e-10, DEFAULT_MAX_TERMS).map_err(|e| e.to_string())?;
        worst_slack = worst_slack.max(r.residual.max(r.residual_left) - r.tail_bound);
        if r.residual > r.tail_bound + 1e-9 || r.residual_left > r.tail_bound + 1e-9 {
            return Err(format!("operator residual {} over tail {}", r.residual, r.tail_bound));
        }
        ops += 1;
    }
    Ok(format!(
        "200 pointwise + 200 operator, max residual - tail {worst_slack:.3e}, oracle deviation {worst_oracle:.3e}"
    ))
}

fn c4_resolvent() -> Verdict {
    let p = PointwiseAlgebra::<C64>::new(4, 3).map_err(|e| e.to_string())?;
    let mut rng = substream(SEED, "acceptance_resolvent");
    let mut worst: f64 = 0.0;
    let mut count = 0;
    while count < 100 {
        let lambda: C64 = random_scalar(&mut rng, 2.0);
        if lambda.norm() < 0.25 {
            continue;
        }
        let q = random_unit_interval(&mut rng).max(1.0 / 64.0) * 0.9;
        let raw = p.random_element(&mut rng, 1.0);
        let Some(x) = scale_to_norm(&p, &raw, q * lambda.norm()) else { continue };
        let r = resolvent_inverse(&lambda, &x, &p, 1e-11, DEFAULT_MAX_TERMS).map_err(|e| e.to_string())?;
        for (xi, yi) in x.coords.iter().zip(&r.approx_inverse.coords) {
            let oracle = Complex64::new(1.0, 0.0) / (lambda - xi);
            worst = worst.max((oracle - yi).norm());
        }
        count += 1;
    }
    if worst > 1e-8 {
        return Err(format!("oracle deviation {worst:.3e}"));
    }
    Ok(format!("100 (lambda, x), max deviation from 1/(lambda - x_i) {worst:.3e}"))
}

fn c5_openness() -> Verdict {
    let mut lines = Vec::new();
    for (name, r) in [
        ("pointwise", openness_check(&PointwiseAlgebra::<C64>::new(4, 3).unwrap(), 50, 100, SEED, 1e-9)),
        (
            "series l1",
            openness_check(&SeriesAlgebra::<C64>::new(6, 2, NormVariant::L1Corrected).unwrap(), 50, 100, SEED, 1e-9),
        ),
    ] {
        require(&r, name)?;
        let checked = r.metric_f64("perturbations_checked").unwrap_or(0.0);
        if checked < 5000.0 {
            return Err(format!("{name}: only {checked} perturbations checked"));
        }
        lines.push(format!("{name} {checked}"));
    }
    Ok(format!("50 x 100 perturbations all invertible ({})", lines.join(", ")))
}

fn bound_line<A: Algebra<C64>>(inst: &A, which: BoundCheck) -> Result<(f64, f64), String> {
    let r = bound_sweep(inst, which, 1000, SEED, 1e-9);
    require(&r, &inst.describe())?;
    let checked = r.metric_f64("pairs_checked").unwrap_or(0.0);
    if checked < 1000.0 {
        return Err(format!("{}: only {checked} pairs checked", inst.describe()));
    }
    Ok((checked, r.metric_f64("max_lhs_over_rhs").unwrap_or(f64::NAN)))
}

fn c6_continuity() -> Verdict {
    let (n1, r1) = bound_line(&PointwiseAlgebra::<C64>::new(4, 3).unwrap(), BoundCheck::Continuity)?;
    let (n2, r2) = bound_line(
        &SeriesAlgebra::<C64>::new(6, 2, NormVariant::L1Corrected).unwrap(),
        BoundCheck::Continuity,
    )?;
    Ok(format!("{n1} pointwise + {n2} series pairs, max lhs/rhs {:.3}", r1.max(r2)))
}

fn c7_perturbation() -> Verdict {
    let p = PointwiseAlgebra::<C64>::new(3, 2).unwrap();
    let (n1, r1) = bound_line(&p, BoundCheck::Perturbation)?;
    let (n2, r2) = bound_line(
        &SeriesAlgebra::<C64>::new(6, 2, NormVariant::L1Corrected).unwrap(),
        BoundCheck::Perturbation,
    )?;
    // Scalar family x = e, h = (eps, 0, 0): remainder eps^2 / (1 + eps).
    let e = p.unit();
    let h = p.element(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
    for eps in slope_decade() {
        let r = perturbation_bound_check(&e, &h.scale(&C64::new(eps, 0.0)), &p, 1e-12);
        let lhs = r.metric_f64("lhs").ok_or("missing lhs")?;
        let oracle = eps * eps / (1.0 + eps);
        if (lhs - oracle).abs() > 1e-12 {
            return Err(format!("eps {eps}: lhs {lhs} vs oracle {oracle}"));
        }
    }
    let slope = perturbation_slope(&e, &h, &slope_decade(), &p).map_err(|e| e.to_string())?;
    if (slope - 2.0).abs() > 0.1 {
        return Err(format!("log-log slope {slope}"));
    }
    Ok(format!(
        "{n1} + {n2} pairs, max lhs/rhs {:.3}; slope over eps in [0.01, 0.1] = {slope:.4}",
        r1.max(r2)
    ))
}

fn singular_by_oracle(kind: &str, coords: &[C64]) -> bool {
    match kind {
        "pointwise" => coords.iter().any(|c| c.norm() == 0.0),
        "series" => coords[0].norm() == 0.0,
        _ => {
            let d = (coords.len() as f64).sqrt() as usize;
            let m = DMatrix::from_row_slice(d, d, coords);
            let sv = m.singular_values();
            sv.min() <= 1e-9 * sv.max().max(1.0)
        }
    }
}

fn tdz_sweep_on<A: Algebra<C64>>(inst: &A, kind: &str, salt: u64) -> Result<(usize, usize), String> {
    let mut rng = substream(SEED ^ salt, "acceptance_tdz");
    let (mut witnesses, mut violations) = (0, 0);
    for i in 0..200 {
        let z = if i % 2 == 0 {
            inst.singular_sample(&mut rng, 1.0).ok_or("no singular sample")?
        } else {
            inst.random_element(&mut rng, 1.0)
        };
        let params = TdzParams {
            seed: SEED + i as u64,
            ..TdzParams::default()
        };
        if let TdzOutcome::Witness(w) = tdz_scan(&z, inst, params) {
            witnesses += 1;
            if !singular_by_oracle(kind, &w.z.coords()) {
                violations += 1;
            }
        }
    }
    if violations > 0 {
        return Err(format!("{kind}: {violations} witnesses on invertible elements"));
    }
    Ok((witnesses, violations))
}

fn c8_tdz() -> Verdict {
    let (wp, _) = tdz_sweep_on(&PointwiseAlgebra::<C64>::new(4, 3).unwrap(), "pointwise", 1)?;
    let (ws, _) = tdz_sweep_on(
        &SeriesAlgebra::<C64>::new(6, 2, NormVariant::L1Corrected).unwrap(),
        "series",
        2,
    )?;
    let (wo, _) = tdz_sweep_on(&OperatorAlgebra::<C64>::new(3, 2).unwrap(), "operator", 3)?;
    if wp == 0 || ws == 0 || wo == 0 {
        return Err(format!("sweep produced no witnesses ({wp}, {ws}, {wo})"));
    }
    Ok(format!(
        "3 x 200 elements, witnesses {wp}/{ws}/{wo} (pointwise/series/operator), 0 invertible"
    ))
}

fn c9_gkz_forward() -> Verdict {
    let mut overall: f64 = 0.0;
    let mut chars = 0;
    for m in 2..=6 {
        let inst = PointwiseAlgebra::<C64>::new(m, 2).unwrap();
        for j in 0..m {
            let t = BLinearFunctional::projection(m, j);
            let r = gkz_forward_check(&t, &inst, 10_000, SEED + j as u64, 1e-12);
            require(&r, &format!("m={m} j={j}"))?;
            let max = r.metric_f64("max_abs_t").ok_or("missing max_abs_t")?;
            if max >= 1.0 {
                return Err(format!("m={m} j={j}: max |T(x)| = {max}"));
            }
            overall = overall.max(max);
            chars += 1;
        }
    }
    Ok(format!("{chars} characters x 10^4 samples, max |T(x)| = {overall:.6}"))
}

fn c10_gkz_converse() -> Verdict {
    let inst = PointwiseAlgebra::<CRat>::new(4, 2).unwrap();
    let grid = default_grid::<CRat>();
    let r = character_search(&inst, &grid, SEED, 0.0);
    require(&r, "character search")?;
    let candidates = r.metrics["candidates"].as_u64().unwrap_or(0);
    if candidates < 10_000 {
        return Err(format!("only {candidates} candidates"));
    }
    if r.metrics["projections_found"] != serde_json::json!([0, 1, 2, 3]) {
        return Err(format!("survivors {:?}", r.metrics["projections_found"]));
    }
    // Independent count: T(e) = sum c_j = 1 with one nonzero coefficient
    // forces that coefficient to be 1, giving exactly m survivors.
    if r.metrics["survivors"] != serde_json::json!(4) {
        return Err(format!("expected 4 survivors, got {}", r.metrics["survivors"]));
    }
    let half = CRat::from_ratio(1, 2);
    let avg = BLinearFunctional::projection(4, 0)
        .add(&BLinearFunctional::projection(4, 1))
        .scale(&half);
    let c = gkz_converse_check(&avg, &inst, 50, SEED, 0.0);
    let Outcome::HypothesisViolated { witness, .. } = &c.outcome else {
        return Err(format!("averaged character: {:?}", c.outcome));
    };
    let coords: Vec<CRat> = serde_json::from_value::<Vec<nbanach::scalar::ScalarJson>>(witness["x"].clone())
        .map_err(|e| e.to_string())?
        .iter()
        .map(|s| s.to_scalar().unwrap())
        .collect();
    if coords.iter().any(Scalar::is_zero) || !(coords[0].clone() + coords[1].clone()).is_zero() {
        return Err(format!("witness {witness} is not an invertible zero of the average"));
    }
    let tx = eval_functional(&avg, &inst.from_coords(coords).unwrap()).unwrap();
    Ok(format!(
        "{candidates} candidates, survivors = the 4 projections; averaged character vanishes at invertible x (T(x) = {})",
        tx.re
    ))
}

fn c11_exponential() -> Verdict {
    let p = PointwiseAlgebra::<C64>::new(4, 3).unwrap();
    require(&exponential_check(&p, 100, SEED, 1e-9), "pointwise")?;
    require(
        &exponential_check(&SeriesAlgebra::<C64>::new(6, 2, NormVariant::L1Corrected).unwrap(), 100, SEED, 1e-9),
        "series l1",
    )?;
    require(&exponential_check(&OperatorAlgebra::<C64>::new(3, 2).unwrap(), 100, SEED, 1e-9), "operator")?;
    // Coordinatewise oracle exp(lambda a_i).
    let mut rng = substream(SEED, "acceptance_exp");
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let a = p.random_element(&mut rng, 1.0);
        let lambda = C64::new(random_real(&mut rng, 1.4), random_real(&mut rng, 1.4));
        let l = algebra_exponential(&a, &lambda, &p, 1e-12).map_err(|e| e.to_string())?;
        for (ai, li) in a.coords.iter().zip(&l.value.coords) {
            worst = worst.max(((lambda * ai).exp() - li).norm());
        }
    }
    if worst > 1e-9 {
        return Err(format!("exp oracle deviation {worst:.3e}"));
    }
    Ok(format!(
        "pointwise/series/operator x 100 samples within 1e-9; oracle deviation {worst:.3e}"
    ))
}

fn c12_audits() -> Verdict {
    let eq21 = SeriesAlgebra::<CRat>::new(8, 2, NormVariant::Eq21MaxProduct).unwrap();
    let r = multiplicativity_audit(&eq21, 100, SEED, 1e-9);
    let Outcome::Fail { counterexample, .. } = &r.outcome else {
        return Err(format!("eq21 audit did not fail: {:?}", r.outcome));
    };
    let (lhs, rhs) = (counterexample["lhs"].as_f64(), counterexample["rhs"].as_f64());
    if counterexample["pair"] != "one_plus_t_squared" || lhs != Some(2.0) || rhs != Some(1.0) {
        return Err(format!("unexpected counterexample {counterexample}"));
    }
    let mut scaled = Vec::new();
    for (name, s) in [
        ("eq21", anchor_scaling_audit(&eq21, 50, SEED, 1e-9)),
        ("sup", anchor_scaling_audit(&PointwiseAlgebra::<CRat>::new(3, 2).unwrap(), 50, SEED, 1e-9)),
    ] {
        let Outcome::Fail { counterexample, .. } = &s.outcome else {
            return Err(format!("{name} scaling audit did not fail"));
        };
        if counterexample["t"] != Value::from(0.25) || counterexample["unit_norm"] != Value::from(0.25) {
            return Err(format!("{name} scaling counterexample {counterexample}"));
        }
        scaled.push(name);
    }
    let l1 = SeriesAlgebra::<C64>::new(8, 2, NormVariant::L1Corrected).unwrap();
    let r = multiplicativity_audit(&l1, 1000, SEED, 1e-9);
    require(&r, "l1 audit")?;
    Ok(format!(
        "eq21 (1+t)(1+t): lhs 2 vs rhs 1; unit norm 1/4 at t = 1/4 ({}); l1 passes {} pairs",
        scaled.join(", "),
        r.metrics["pairs_checked"]
    ))
}

fn c13_determinism() -> Verdict {
    let mut cfg = RunConfig::default_pointwise();
    cfg.seed = SEED;
    cfg.samples = 20;
    cfg.arithmetic_mode = ArithmeticMode::Exact;
    let a = run_suite(&cfg);
    let b = run_suite(&cfg);
    let (ja, jb) = (a.to_json_string(), b.to_json_string());
    if ja != jb {
        return Err("exact-mode reports differ".into());
    }
    Ok(format!(
        "{} checks, {} bytes, identical; {} pass",
        a.checks.len(),
        ja.len(),
        a.summary.pass
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 13] = [
        ("n-norm axioms", c1_axioms),
        ("Cauchy-Schwarz", c2_cauchy_schwarz),
        ("Neumann soundness", c3_neumann),
        ("resolvent", c4_resolvent),
        ("open group", c5_openness),
        ("inversion continuity", c6_continuity),
        ("perturbation theorem", c7_perturbation),
        ("Z inside S", c8_tdz),
        ("GKZ forward", c9_gkz_forward),
        ("GKZ converse", c10_gkz_converse),
        ("exponential identities", c11_exponential),
        ("audit findings", c12_audits),
        ("determinism", c13_determinism),
    ];
    let mut failed = 0;
    let start = Instant::now();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let verdict = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of 13 criteria pass in {:.1}s",
        13 - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
