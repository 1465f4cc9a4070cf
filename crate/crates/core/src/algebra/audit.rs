//! Audits of the algebra-level inequalities.
//!
//! `multiplicativity_audit` judges `||xy, A|| <= ||x, A|| ||y, A||` and
//! `||e, A|| = 1` on the instance's admissible anchors. What happens to both
//! once the anchors are rescaled is reported alongside, and on its own by
//! `anchor_scaling_audit`.

use serde_json::{json, Value};

use super::{Algebra, AlgebraKind};
use crate::element::{tuple_dependent, Element};
use crate::report::CheckReport;
use crate::sampling::{random_scalar, substream};
use crate::scalar::Scalar;

/// Version tag of the fixed adversarial pair library.
pub const ADVERSARIAL_LIBRARY_VERSION: u32 = 1;

pub const ANCHOR_SCALES: [f64; 4] = [0.25, 0.5, 2.0, 4.0];

fn coords_with<S: Scalar>(dim: usize, f: impl Fn(usize) -> Option<S>) -> Vec<S> {
    (0..dim).map(|j| f(j).unwrap_or_else(S::zero)).collect()
}

/// The versioned adversarial library: `(1 + t, 1 + t)` (first two coordinates
/// set), an alternating-sign pair, the unit against itself, and a pair nearly
/// dependent on the first anchor. Pairs the instance rejects are skipped.
pub fn adversarial_pairs<S: Scalar, A: Algebra<S>>(inst: &A) -> Vec<(String, A::Elem, A::Elem)> {
    let dim = inst.zero().dim();
    let mut out = Vec::new();
    let mut push = |label: &str, x: Vec<S>, y: Vec<S>| {
        if let (Ok(x), Ok(y)) = (inst.from_coords(x), inst.from_coords(y)) {
            out.push((label.to_string(), x, y));
        }
    };
    let one_plus_t = coords_with(dim, |j| (j < 2).then(S::one));
    push("one_plus_t_squared", one_plus_t.clone(), one_plus_t);
    let alternating = coords_with(dim, |j| Some(if j % 2 == 0 { S::one() } else { -S::one() }));
    let ones = vec![S::one(); dim];
    push("alternating_times_ones", alternating.clone(), ones);
    push("alternating_squared", alternating.clone(), alternating);
    push("unit_squared", inst.unit().coords(), inst.unit().coords());
    if let Some(anchors) = inst.anchor_elements() {
        let nudge = S::from_ratio(1, 1 << 20);
        let near = anchors[0].coords();
        let near: Vec<S> = near
            .iter()
            .enumerate()
            .map(|(j, c)| if j == 0 { c.clone() + nudge.clone() } else { c.clone() })
            .collect();
        push("near_dependent", near.clone(), near);
    }
    out
}

struct Violation {
    lhs: f64,
    rhs: f64,
    x: Value,
    y: Value,
}

/// Largest excess of `||xy|| - ||x|| ||y||` and the first violation.
fn scan_pairs<S: Scalar, A: Algebra<S>>(
    inst: &A,
    pairs: &[(String, A::Elem, A::Elem)],
    tol: f64,
) -> Result<(f64, Option<(String, Violation)>), String> {
    let mut max_excess = f64::NEG_INFINITY;
    let mut first = None;
    for (label, x, y) in pairs {
        let xy = inst.mul(x, y).map_err(|e| e.to_string())?;
        let lhs = inst.norm(&xy);
        let rhs = inst.norm(x) * inst.norm(y);
        max_excess = max_excess.max(lhs - rhs);
        if lhs > rhs + tol * (1.0 + rhs) && first.is_none() {
            first = Some((
                label.clone(),
                Violation {
                    lhs,
                    rhs,
                    x: x.to_json(),
                    y: y.to_json(),
                },
            ));
        }
    }
    Ok((max_excess, first))
}

fn sampled_pairs<S: Scalar, A: Algebra<S>>(inst: &A, samples: usize, seed: u64) -> Vec<(String, A::Elem, A::Elem)> {
    let mut rng = substream(seed, "multiplicativity");
    (0..samples)
        .map(|i| {
            let x = inst.random_element(&mut rng, 1.0);
            let y = inst.random_element(&mut rng, 1.0);
            (format!("sample_{i}"), x, y)
        })
        .collect()
}

/// Searches adversarial and sampled pairs for `||xy, A|| > ||x, A|| ||y, A||`
/// and checks `||e, A|| = 1`, then repeats both under anchor scaling.
pub fn multiplicativity_audit<S: Scalar, A: Algebra<S>>(inst: &A, samples: usize, seed: u64, tol: f64) -> CheckReport {
    let mut report = CheckReport::new("multiplicativity_audit", Some(seed), samples, tol);
    report.metric("instance", inst.describe());
    report.metric("adversarial_library_version", ADVERSARIAL_LIBRARY_VERSION);

    let unit_norm = inst.norm(&inst.unit());
    report.metric("unit_norm", unit_norm);
    if (unit_norm - 1.0).abs() > tol {
        report.fail(
            "unit-norm condition fails on the admissible anchors",
            json!({ "unit": inst.unit().to_json(), "unit_norm": unit_norm }),
        );
    }

    let mut pairs = adversarial_pairs(inst);
    let adversarial = pairs.len();
    pairs.extend(sampled_pairs(inst, samples, seed));
    match scan_pairs(inst, &pairs, tol) {
        Ok((max_excess, first)) => {
            report.metric("pairs_checked", pairs.len());
            report.metric("adversarial_pairs", adversarial);
            report.metric("max_excess", max_excess);
            if let Some((label, v)) = first {
                report.fail(
                    "multiplicative inequality fails",
                    json!({ "pair": label, "x": v.x, "y": v.y, "lhs": v.lhs, "rhs": v.rhs }),
                );
            }
        }
        Err(e) => {
            report.error(e);
            return report;
        }
    }

    let scaling = anchor_scaling_rows(inst, samples.min(200), seed, tol);
    for row in &scaling {
        if row["unit_norm_holds"] == json!(false) || row["inequality_holds"] == json!(false) {
            report.warnings.push(format!(
                "anchors scaled by t = {}: unit norm {}, inequality {}",
                row["t"],
                if row["unit_norm_holds"] == json!(true) { "holds" } else { "fails" },
                if row["inequality_holds"] == json!(true) { "holds" } else { "fails" },
            ));
        }
    }
    report.metric("anchor_scaling", Value::Array(scaling));
    report
}

fn anchor_scaling_rows<S: Scalar, A: Algebra<S>>(inst: &A, samples: usize, seed: u64, tol: f64) -> Vec<Value> {
    let mut pairs = adversarial_pairs(inst);
    pairs.extend(sampled_pairs(inst, samples, seed));
    ANCHOR_SCALES
        .iter()
        .map(|&t| {
            let scaled = inst.with_scaled_anchors(t);
            let unit_norm = scaled.norm(&scaled.unit());
            let (max_excess, first) = scan_pairs(&scaled, &pairs, tol).unwrap_or((f64::NAN, None));
            json!({
                "t": t,
                "unit_norm": unit_norm,
                "unit_norm_holds": (unit_norm - 1.0).abs() <= tol,
                "inequality_holds": first.is_none() && !max_excess.is_nan(),
                "max_excess": max_excess,
                "first_violation": first.map(|(label, v)| json!({
                    "pair": label, "x": v.x, "y": v.y, "lhs": v.lhs, "rhs": v.rhs })),
            })
        })
        .collect()
}

/// Rescales the anchors by each `t` in [`ANCHOR_SCALES`] and fails at the
/// first scale where `||e, A|| = 1` or the multiplicative inequality breaks.
pub fn anchor_scaling_audit<S: Scalar, A: Algebra<S>>(inst: &A, samples: usize, seed: u64, tol: f64) -> CheckReport {
    let mut report = CheckReport::new("anchor_scaling_audit", Some(seed), samples, tol);
    report.metric("instance", inst.describe());
    let rows = anchor_scaling_rows(inst, samples, seed, tol);
    for row in &rows {
        if row["unit_norm_holds"] == json!(false) {
            report.fail(
                "unit-norm condition fails under anchor scaling",
                json!({ "t": row["t"], "unit_norm": row["unit_norm"] }),
            );
        }
        if row["inequality_holds"] == json!(false) {
            report.fail(
                "multiplicative inequality fails under anchor scaling",
                json!({ "t": row["t"], "violation": row["first_violation"] }),
            );
        }
    }
    if inst.kind() == AlgebraKind::Operator {
        report
            .warnings
            .push("the Gram-induced b-norm does not depend on anchor scale".into());
    }
    report.metric("scales", Value::Array(rows));
    report
}

/// N4 in the first slot with one summand inside the anchor span, on the
/// literal tuple n-norm: `||x + y, A|| <= ||x, A|| + ||y, A||` where
/// `x = a2` (so `||x, A|| = 0`) and `y` is a small independent element.
pub fn dependent_summand_probe<S: Scalar, A: Algebra<S>>(inst: &A, seed: u64, tol: f64) -> CheckReport {
    let mut report = CheckReport::new("dependent_summand_probe", Some(seed), 0, tol);
    report.metric("instance", inst.describe());
    let Some(anchors) = inst.anchor_elements() else {
        report.error(format!("{} has no anchors in its own element type", inst.describe()));
        return report;
    };
    let a_refs: Vec<&A::Elem> = anchors.iter().collect();
    let eval = |first: &A::Elem| -> Option<f64> {
        let mut t = vec![first];
        t.extend(a_refs.iter().copied());
        inst.tuple_norm(&t)
    };
    let x = anchors[0].clone();
    let mut rng = substream(seed, "dependent_summand");
    let small = S::from_ratio(1, 8);
    let mut checked = 0;
    let candidates = inst.basis().into_iter().chain((0..8).map(|_| {
        let e = inst.random_element(&mut rng, 1.0);
        e.scale(&random_scalar::<S>(&mut rng, 1.0))
    }));
    for b in candidates {
        let y = b.scale(&small);
        let mut t = vec![&y];
        t.extend(a_refs.iter().copied());
        if tuple_dependent(&t, 1e-9) {
            continue;
        }
        let sum = x.add(&y);
        let (Some(lhs), Some(nx), Some(ny)) = (eval(&sum), eval(&x), eval(&y)) else {
            report.error(format!("{} has no tuple n-norm", inst.describe()));
            return report;
        };
        checked += 1;
        let rhs = nx + ny;
        if lhs > rhs + tol * (1.0 + rhs) {
            report.fail(
                "N4 fails when one summand lies in the anchor span",
                json!({ "axiom": "N4", "x": x.to_json(), "y": y.to_json(),
                        "lhs": lhs, "norm_x": nx, "norm_y": ny }),
            );
        }
    }
    report.metric("pairs_checked", checked);
    report.samples = checked;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{NormVariant, OperatorAlgebra, PointwiseAlgebra, SeriesAlgebra, TruncatedSeries, Unitization};
    use crate::report::Outcome;
    use crate::scalar::{CRat, C64};

    fn t_squared_anchor(d: usize) -> Vec<Vec<C64>> {
        vec![TruncatedSeries::<C64>::monomial(2, d).coeffs]
    }

    #[test]
    fn eq21_reproduces_one_plus_t_violation() {
        let inst = SeriesAlgebra::with_anchors(8, t_squared_anchor(8), NormVariant::Eq21MaxProduct, true).unwrap();
        let r = multiplicativity_audit(&inst, 50, 1, 1e-9);
        match &r.outcome {
            Outcome::Fail { counterexample, .. } => {
                assert_eq!(counterexample["pair"], "one_plus_t_squared");
                assert_eq!(counterexample["lhs"], 2.0);
                assert_eq!(counterexample["rhs"], 1.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn l1_passes() {
        let inst = SeriesAlgebra::<C64>::new(8, 2, NormVariant::L1Corrected).unwrap();
        let r = multiplicativity_audit(&inst, 300, 2, 1e-9);
        assert!(r.passed(), "{:?}", r.outcome);
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn sup_scaling_breaks_unit_norm_at_quarter() {
        let inst = PointwiseAlgebra::<CRat>::new(3, 2).unwrap();
        let r = anchor_scaling_audit(&inst, 20, 3, 1e-9);
        match &r.outcome {
            Outcome::Fail { counterexample, .. } => {
                assert_eq!(counterexample["t"], 0.25);
                assert_eq!(counterexample["unit_norm"], 0.25);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pointwise_and_unitization_pass_on_admissible_anchors() {
        let p = PointwiseAlgebra::<C64>::new(4, 3).unwrap();
        assert!(multiplicativity_audit(&p, 200, 4, 1e-9).passed());
        let u = Unitization::new(p);
        assert!(multiplicativity_audit(&u, 200, 4, 1e-9).passed());
        let o = OperatorAlgebra::<C64>::new(3, 2).unwrap();
        assert!(multiplicativity_audit(&o, 100, 4, 1e-9).passed());
    }

    #[test]
    fn dependent_summand_breaks_max_product_but_not_nothing() {
        let s = SeriesAlgebra::<CRat>::new(4, 2, NormVariant::Eq21MaxProduct).unwrap();
        assert!(dependent_summand_probe(&s, 1, 1e-9).is_fail());
        let p = PointwiseAlgebra::<CRat>::new(3, 2).unwrap();
        assert!(dependent_summand_probe(&p, 1, 1e-9).is_fail());
        let o = OperatorAlgebra::<C64>::new(3, 2).unwrap();
        assert!(matches!(dependent_summand_probe(&o, 1, 1e-9).outcome, Outcome::Error { .. }));
    }
}
