//! Neumann-series inversion with certified tails, the resolvent series, the
//! open-group radius, inversion continuity and perturbation bounds, and
//! topological divisors of zero.
//!
//! All norms are `Algebra::norm`, read on the instance's admissible anchors.
//! The tail bounds use `||x^j|| <= ||x||^j`, so they are only as sound as the
//! instance is submultiplicative; the multiplicativity audit says which ones are.

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::algebra::{Algebra, AlgebraError, AlgebraKind, Side};
use crate::element::Element;
use crate::report::CheckReport;
use crate::sampling::{random_scalar, random_unit_interval, substream};
use crate::scalar::Scalar;

pub const DEFAULT_MAX_TERMS: usize = 1_000_000;
pub const DEFAULT_TDZ_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_TDZ_STEPS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvertError {
    #[error("hypothesis violated: {reason}")]
    Hypothesis { reason: String, value: f64 },
    #[error("element is not invertible: {0}")]
    NotInvertible(String),
    #[error("element is invertible, expected a non-invertible one")]
    Invertible,
    #[error("approach element {index} is not invertible")]
    ApproachNotInvertible { index: usize },
    #[error("approach distances do not decrease at index {index}")]
    NonDecreasingApproach { index: usize },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// A partial Neumann sum and its certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannResult<E> {
    pub approx_inverse: E,
    /// Highest power `k` in `e + x + .. + x^k`.
    pub terms_used: usize,
    /// `||x, A||` of the series generator.
    pub contraction_q: f64,
    /// `q^(k+1) / (1 - q)`.
    pub tail_bound: f64,
    /// `||(target) * approx - e, A||`.
    pub residual: f64,
    /// `||approx * (target) - e, A||`.
    pub residual_left: f64,
    /// Some product in the sum lost terms to the series degree cap.
    pub truncated: bool,
}

impl<E> NeumannResult<E> {
    pub fn to_json<S: Scalar>(&self) -> Value
    where
        E: Element<S>,
    {
        json!({
            "approx_inverse": self.approx_inverse.to_json(),
            "terms_used": self.terms_used,
            "contraction_q": self.contraction_q,
            "tail_bound": self.tail_bound,
            "residual": self.residual,
            "residual_left": self.residual_left,
            "truncated": self.truncated,
        })
    }
}

/// Default term cap: the degree cap for series, [`DEFAULT_MAX_TERMS`] otherwise.
pub fn default_max_terms<S: Scalar, A: Algebra<S>>(inst: &A) -> usize {
    match inst.kind() {
        AlgebraKind::TruncatedSeries => inst.zero().dim() - 1,
        _ => DEFAULT_MAX_TERMS,
    }
}

/// Smallest `k` with `q^(k+1) / (1 - q) <= tol`, capped at `max_terms`.
pub fn terms_needed(q: f64, tol: f64, max_terms: usize) -> usize {
    if q == 0.0 {
        return 0;
    }
    let mut k = 0;
    let mut qk1 = q;
    while qk1 / (1.0 - q) > tol && k < max_terms {
        k += 1;
        qk1 *= q;
    }
    k
}

fn sub_unit<S: Scalar, A: Algebra<S>>(inst: &A, x: &A::Elem) -> A::Elem {
    x.sub(&inst.unit())
}

/// Partial sum of `sum_j g^j` for a generator with `||g|| = q < 1`; the
/// residuals are measured against `target`, which must equal `e - g` up to a
/// scalar `c` (`target = c (e - g)`, the sum scaled by `1 / c`).
fn neumann_core<S: Scalar, A: Algebra<S>>(
    inst: &A,
    generator: &A::Elem,
    target: &A::Elem,
    scale: &S,
    q: f64,
    tol: f64,
    max_terms: usize,
) -> Result<NeumannResult<A::Elem>, InvertError> {
    let k = terms_needed(q, tol, max_terms);
    let mut power = inst.unit();
    let mut sum = inst.unit();
    let mut truncated = false;
    for _ in 0..k {
        power = inst.mul(&power, generator)?;
        truncated |= power.is_truncated();
        sum = sum.add(&power);
    }
    let approx = sum.scale(scale);
    let right = inst.mul(target, &approx)?;
    let left = inst.mul(&approx, target)?;
    truncated |= right.is_truncated() || left.is_truncated();
    Ok(NeumannResult {
        terms_used: k,
        contraction_q: q,
        tail_bound: if q == 0.0 { 0.0 } else { q.powi(k as i32 + 1) / (1.0 - q) },
        residual: inst.norm(&sub_unit(inst, &right)),
        residual_left: inst.norm(&sub_unit(inst, &left)),
        truncated,
        approx_inverse: approx,
    })
}

fn contraction_gate(q: f64, what: &str) -> Result<(), InvertError> {
    if q.is_finite() && q < 1.0 {
        Ok(())
    } else {
        Err(InvertError::Hypothesis {
            reason: format!("{what} must be below 1, got {q}"),
            value: q,
        })
    }
}

/// `(e - x)^-1 ~ e + x + .. + x^k` for `||x, A|| < 1`.
pub fn neumann_inverse<S: Scalar, A: Algebra<S>>(
    x: &A::Elem,
    inst: &A,
    tol: f64,
    max_terms: usize,
) -> Result<NeumannResult<A::Elem>, InvertError> {
    inst.check_shape(x)?;
    let q = inst.norm(x);
    contraction_gate(q, "||x, A||")?;
    let target = inst.unit().sub(x);
    neumann_core(inst, x, &target, &S::one(), q, tol, max_terms)
}

/// `x^-1 ~ e + (e - x) + .. + (e - x)^k` for `||e - x, A|| < 1`.
pub fn near_identity_inverse<S: Scalar, A: Algebra<S>>(
    x: &A::Elem,
    inst: &A,
    tol: f64,
    max_terms: usize,
) -> Result<NeumannResult<A::Elem>, InvertError> {
    inst.check_shape(x)?;
    let generator = inst.unit().sub(x);
    let q = inst.norm(&generator);
    contraction_gate(q, "||e - x, A||")?;
    neumann_core(inst, &generator, x, &S::one(), q, tol, max_terms)
}

/// `(lambda e - x)^-1 ~ sum_{j=1}^{k+1} lambda^-j x^(j-1)` for
/// `||x, A|| < |lambda|`. The contraction is `q = ||x, A|| / |lambda|`; the
/// distance to the true resolvent is at most `tail_bound / |lambda|`.
pub fn resolvent_inverse<S: Scalar, A: Algebra<S>>(
    lambda: &S,
    x: &A::Elem,
    inst: &A,
    tol: f64,
    max_terms: usize,
) -> Result<NeumannResult<A::Elem>, InvertError> {
    inst.check_shape(x)?;
    let modulus = lambda.abs();
    let nx = inst.norm(x);
    if !(nx < modulus) {
        return Err(InvertError::Hypothesis {
            reason: format!("||x, A|| = {nx} must be below |lambda| = {modulus}"),
            value: nx,
        });
    }
    let inv_lambda = S::one() / lambda.clone();
    let generator = x.scale(&inv_lambda);
    let target = inst.unit().scale(lambda).sub(x);
    neumann_core(inst, &generator, &target, &inv_lambda, nx / modulus, tol, max_terms)
}

/// Exact inverse or the instance's reason for its absence.
pub fn inverse_of<S: Scalar, A: Algebra<S>>(x: &A::Elem, inst: &A) -> Result<A::Elem, InvertError> {
    inst.check_shape(x)?;
    inst.exact_inverse(x)
        .ok_or_else(|| InvertError::NotInvertible(inst.noninvertibility_reason(x)))
}

/// `1 / ||x0^-1, A||`.
pub fn invertibility_radius<S: Scalar, A: Algebra<S>>(x0: &A::Elem, inst: &A) -> Result<f64, InvertError> {
    let inv = inverse_of(x0, inst)?;
    Ok(1.0 / inst.norm(&inv))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict<E> {
    /// `residual = ||x x^-1 - e, A||`.
    Invertible { inverse: E, residual: f64 },
    NonInvertible { witness: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementClass<E> {
    pub element: E,
    pub verdict: Verdict<E>,
}

impl<E> ElementClass<E> {
    pub fn is_invertible(&self) -> bool {
        matches!(self.verdict, Verdict::Invertible { .. })
    }
}

/// Instance-exact membership in G or S.
pub fn classify_element<S: Scalar, A: Algebra<S>>(x: &A::Elem, inst: &A) -> ElementClass<A::Elem> {
    let verdict = match inst.exact_inverse(x) {
        Some(inverse) => {
            let residual = inst
                .mul(x, &inverse)
                .map(|p| inst.norm(&sub_unit(inst, &p)))
                .unwrap_or(f64::INFINITY);
            Verdict::Invertible { inverse, residual }
        }
        None => Verdict::NonInvertible {
            witness: inst.noninvertibility_reason(x),
        },
    };
    ElementClass {
        element: x.clone(),
        verdict,
    }
}

/// Scales `x` by a dyadic factor so `||x, A||` lands at or just below
/// `target`. Dyadic factors keep exact-mode numbers small.
pub fn scale_to_norm<S: Scalar, A: Algebra<S>>(inst: &A, x: &A::Elem, target: f64) -> Option<A::Elem> {
    let nx = inst.norm(x);
    if !(nx > 0.0) || !nx.is_finite() {
        return None;
    }
    let factor = (target / nx * f64::from(1 << 20)).floor() / f64::from(1 << 20);
    Some(x.scale(&S::from_real(factor)))
}

fn sample_invertible<S: Scalar, A: Algebra<S>>(
    inst: &A,
    rng: &mut crate::sampling::SampleRng,
) -> Option<(A::Elem, A::Elem)> {
    for _ in 0..64 {
        let x = inst.random_element(rng, 1.0);
        if let Some(inv) = inst.exact_inverse(&x) {
            if inst.norm(&inv).is_finite() && inst.norm(&inv) > 0.0 {
                return Some((x, inv));
            }
        }
    }
    None
}

/// Random `h` with `||h, A||` uniform-ish in `(0, bound * frac_max)`.
fn sample_perturbation<S: Scalar, A: Algebra<S>>(
    inst: &A,
    rng: &mut crate::sampling::SampleRng,
    bound: f64,
    frac_max: f64,
) -> Option<A::Elem> {
    let u = random_unit_interval(rng).max(1.0 / 1024.0) * frac_max;
    let h = inst.random_element(rng, 1.0);
    scale_to_norm(inst, &h, bound * u)
}

/// Neumann soundness over `samples` random generators with `||x|| <= q_max`:
/// residual and both-sided residual within `tail_bound + tol`, and the sum
/// within `tail_bound + tol` of the exact inverse of `e - x`.
pub fn neumann_sweep<S: Scalar, A: Algebra<S>>(inst: &A, samples: usize, seed: u64, q_max: f64, tol: f64) -> CheckReport {
    let mut report = CheckReport::new("neumann_series", Some(seed), samples, tol);
    let mut rng = substream(seed, "neumann");
    let max_terms = default_max_terms(inst);
    let mut worst_slack = f64::NEG_INFINITY;
    let mut max_terms_used = 0;
    let mut truncated = 0;
    for _ in 0..samples {
        let u = random_unit_interval(&mut rng).max(1.0 / 1024.0);
        let raw = inst.random_element(&mut rng, 1.0);
        let Some(x) = scale_to_norm(inst, &raw, q_max * u) else { continue };
        let res = match neumann_inverse(&x, inst, tol, max_terms) {
            Ok(r) => r,
            Err(e) => {
                report.error(e.to_string());
                return report;
            }
        };
        max_terms_used = max_terms_used.max(res.terms_used);
        truncated += usize::from(res.truncated);
        let bound = res.tail_bound + tol;
        let oracle_gap = inst
            .exact_inverse(&inst.unit().sub(&x))
            .map(|inv| inst.norm(&inv.sub(&res.approx_inverse)));
        let worst = res.residual.max(res.residual_left).max(oracle_gap.unwrap_or(0.0));
        worst_slack = worst_slack.max(worst - bound);
        if res.residual > bound || res.residual_left > bound {
            report.fail(
                "Neumann residual exceeds the tail bound",
                json!({ "x": x.to_json(), "result": res.to_json() }),
            );
        }
        match oracle_gap {
            None => report.fail(
                "e - x is not invertible although ||x|| < 1",
                json!({ "x": x.to_json() }),
            ),
            Some(g) if g > bound => report.fail(
                "partial sum is farther from the inverse than the tail bound",
                json!({ "x": x.to_json(), "gap": g, "result": res.to_json() }),
            ),
            _ => {}
        }
    }
    report.metric("max_terms_used", max_terms_used);
    report.metric("truncated_results", truncated);
    report.metric("worst_excess_over_bound", worst_slack);
    report
}

/// Resolvent series against the exact inverse of `lambda e - x` for random
/// `(lambda, x)` with `||x|| / |lambda| <= q_max`.
pub fn resolvent_sweep<S: Scalar, A: Algebra<S>>(inst: &A, samples: usize, seed: u64, q_max: f64, tol: f64) -> CheckReport {
    let mut report = CheckReport::new("resolvent_series", Some(seed), samples, tol);
    let mut rng = substream(seed, "resolvent");
    let max_terms = default_max_terms(inst);
    let mut max_gap: f64 = 0.0;
    for _ in 0..samples {
        let lambda: S = random_scalar(&mut rng, 2.0);
        if lambda.abs() < 1.0 / 64.0 {
            continue;
        }
        let u = random_unit_interval(&mut rng).max(1.0 / 1024.0);
        let raw = inst.random_element(&mut rng, 1.0);
        let Some(x) = scale_to_norm(inst, &raw, q_max * u * lambda.abs()) else { continue };
        let res = match resolvent_inverse(&lambda, &x, inst, tol, max_terms) {
            Ok(r) => r,
            Err(e) => {
                report.error(e.to_string());
                return report;
            }
        };
        let target = inst.unit().scale(&lambda).sub(&x);
        let Some(oracle) = inst.exact_inverse(&target) else {
            report.fail(
                "lambda e - x is not invertible inside the resolvent disc",
                json!({ "lambda": lambda.to_json(), "x": x.to_json() }),
            );
            continue;
        };
        let gap = inst.norm(&oracle.sub(&res.approx_inverse));
        max_gap = max_gap.max(gap);
        let bound = res.tail_bound / lambda.abs() + tol;
        if gap > bound || res.residual > res.tail_bound + tol {
            report.fail(
                "resolvent partial sum misses the certified bound",
                json!({ "lambda": lambda.to_json(), "x": x.to_json(), "gap": gap, "result": res.to_json() }),
            );
        }
    }
    report.metric("max_gap", max_gap);
    report
}

/// Openness of G: for each sampled invertible `x0`, perturbations `h` with
/// `||h|| < r(x0)` must leave `x0 + h` invertible, and the factorization
/// generator `e - x0^-1 (x0 + h)` must have norm below 1.
pub fn openness_check<S: Scalar, A: Algebra<S>>(
    inst: &A,
    centers: usize,
    perturbations: usize,
    seed: u64,
    tol: f64,
) -> CheckReport {
    let mut report = CheckReport::new("open_group", Some(seed), centers * perturbations, tol);
    let mut rng = substream(seed, "openness");
    let mut checked = 0;
    let mut max_generator: f64 = 0.0;
    for _ in 0..centers {
        let Some((x0, inv)) = sample_invertible(inst, &mut rng) else { continue };
        let r = 1.0 / inst.norm(&inv);
        for _ in 0..perturbations {
            let Some(h) = sample_perturbation(inst, &mut rng, r, 0.999) else { continue };
            let x = x0.add(&h);
            checked += 1;
            let generator = match inst.mul(&inv, &x) {
                Ok(p) => inst.unit().sub(&p),
                Err(e) => {
                    report.error(e.to_string());
                    return report;
                }
            };
            let g = inst.norm(&generator);
            max_generator = max_generator.max(g);
            if !classify_element(&x, inst).is_invertible() || g >= 1.0 {
                report.fail(
                    "perturbation inside the invertibility radius left G",
                    json!({ "x0": x0.to_json(), "h": h.to_json(), "radius": r,
                            "h_norm": inst.norm(&h), "generator_norm": g }),
                );
            }
        }
    }
    report.metric("perturbations_checked", checked);
    report.metric("max_generator_norm", max_generator);
    report
}

fn hypothesis_gate(report: &mut CheckReport, lhs: f64, bound: f64, what: &str) -> bool {
    if lhs < bound {
        return true;
    }
    report.hypothesis_violated(
        format!("{what}: {lhs} is not below {bound}"),
        json!({ "value": lhs, "bound": bound }),
    );
    false
}

/// `||x^-1 - x0^-1|| <= 2 ||x0^-1||^2 ||x - x0||` under
/// `||x - x0|| < 1 / (2 ||x0^-1||)`.
pub fn inversion_continuity_check<S: Scalar, A: Algebra<S>>(
    x0: &A::Elem,
    x: &A::Elem,
    inst: &A,
    tol: f64,
) -> CheckReport {
    let mut report = CheckReport::new("inversion_continuity", None, 1, tol);
    let inv0 = match inverse_of(x0, inst) {
        Ok(v) => v,
        Err(e) => {
            report.hypothesis_violated(e.to_string(), json!({ "x0": x0.to_json() }));
            return report;
        }
    };
    let n_inv0 = inst.norm(&inv0);
    let dist = inst.norm(&x.sub(x0));
    if !hypothesis_gate(&mut report, dist, 1.0 / (2.0 * n_inv0), "||x - x0||") {
        return report;
    }
    let Some(inv) = inst.exact_inverse(x) else {
        report.fail("x is not invertible inside the continuity ball", json!({ "x0": x0.to_json(), "x": x.to_json() }));
        return report;
    };
    let lhs = inst.norm(&inv.sub(&inv0));
    let rhs = 2.0 * n_inv0 * n_inv0 * dist;
    report.metric("lhs", lhs);
    report.metric("rhs", rhs);
    if lhs > rhs + tol {
        report.fail(
            "inversion continuity bound fails",
            json!({ "x0": x0.to_json(), "x": x.to_json(), "lhs": lhs, "rhs": rhs }),
        );
    }
    report
}

/// `||(x+h)^-1 - x^-1 + x^-1 h x^-1|| <= 2 ||x^-1||^3 ||h||^2` under
/// `||h|| < 1 / (2 ||x^-1||)`.
pub fn perturbation_bound_check<S: Scalar, A: Algebra<S>>(x: &A::Elem, h: &A::Elem, inst: &A, tol: f64) -> CheckReport {
    let mut report = CheckReport::new("perturbation_bound", None, 1, tol);
    let inv = match inverse_of(x, inst) {
        Ok(v) => v,
        Err(e) => {
            report.hypothesis_violated(e.to_string(), json!({ "x": x.to_json() }));
            return report;
        }
    };
    let n_inv = inst.norm(&inv);
    let nh = inst.norm(h);
    if !hypothesis_gate(&mut report, nh, 1.0 / (2.0 * n_inv), "||h||") {
        return report;
    }
    let Some(inv_xh) = inst.exact_inverse(&x.add(h)) else {
        report.fail("x + h is not invertible", json!({ "x": x.to_json(), "h": h.to_json() }));
        return report;
    };
    let lhs = match inst.mul(&inv, h).and_then(|p| inst.mul(&p, &inv)) {
        Ok(xhx) => inst.norm(&inv_xh.sub(&inv).add(&xhx)),
        Err(e) => {
            report.error(e.to_string());
            return report;
        }
    };
    let rhs = 2.0 * n_inv.powi(3) * nh * nh;
    report.metric("lhs", lhs);
    report.metric("rhs", rhs);
    report.metric("h_norm", nh);
    if lhs > rhs + tol {
        report.fail(
            "perturbation bound fails",
            json!({ "x": x.to_json(), "h": h.to_json(), "lhs": lhs, "rhs": rhs }),
        );
    }
    report
}

/// Which bound a sweep exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundCheck {
    Continuity,
    Perturbation,
}

/// Runs one of the two bound checks on `samples` admissible random pairs.
pub fn bound_sweep<S: Scalar, A: Algebra<S>>(
    inst: &A,
    which: BoundCheck,
    samples: usize,
    seed: u64,
    tol: f64,
) -> CheckReport {
    let name = match which {
        BoundCheck::Continuity => "inversion_continuity",
        BoundCheck::Perturbation => "perturbation_bound",
    };
    let mut report = CheckReport::new(name, Some(seed), samples, tol);
    let mut rng = substream(seed, name);
    let mut max_ratio: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..samples {
        let Some((x0, inv)) = sample_invertible(inst, &mut rng) else { continue };
        let gate = 1.0 / (2.0 * inst.norm(&inv));
        let Some(h) = sample_perturbation(inst, &mut rng, gate, 0.999) else { continue };
        let single = match which {
            BoundCheck::Continuity => inversion_continuity_check(&x0, &x0.add(&h), inst, tol),
            BoundCheck::Perturbation => perturbation_bound_check(&x0, &h, inst, tol),
        };
        checked += 1;
        if let (Some(l), Some(r)) = (single.metric_f64("lhs"), single.metric_f64("rhs")) {
            if r > 0.0 {
                max_ratio = max_ratio.max(l / r);
            }
        }
        if !single.passed() {
            report.outcome = single.outcome;
            break;
        }
    }
    report.metric("pairs_checked", checked);
    report.metric("max_lhs_over_rhs", max_ratio);
    report
}

/// Least-squares slope of `log lhs` against `log eps` for the perturbation
/// `x + eps h`.
pub fn perturbation_slope<S: Scalar, A: Algebra<S>>(
    x: &A::Elem,
    h: &A::Elem,
    eps: &[f64],
    inst: &A,
) -> Result<f64, InvertError> {
    let inv = inverse_of(x, inst)?;
    let mut pts = Vec::with_capacity(eps.len());
    for &e in eps {
        let he = h.scale(&S::from_real(e));
        let inv_xh = inverse_of(&x.add(&he), inst)?;
        let xhx = inst.mul(&inst.mul(&inv, &he)?, &inv)?;
        let lhs = inst.norm(&inv_xh.sub(&inv).add(&xhx));
        pts.push((e.ln(), lhs.ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Eleven log-spaced points covering the decade `[0.01, 0.1]`.
pub fn slope_decade() -> Vec<f64> {
    (0..=10).map(|i| 10f64.powf(-2.0 + f64::from(i) / 10.0)).collect()
}

/// Per-pair log-log slope of the second-order remainder over [`slope_decade`],
/// with `||h, A|| = 1 / (2 ||x^-1, A||)`. Every slope must lie in
/// `2 +- slope_tol`. Pairs whose quadratic term `x^-1 h x^-1 h x^-1` vanishes
/// have no quadratic regime and are skipped.
pub fn slope_sweep<S: Scalar, A: Algebra<S>>(inst: &A, samples: usize, seed: u64, slope_tol: f64) -> CheckReport {
    let mut report = CheckReport::new("perturbation_slope", Some(seed), samples, slope_tol);
    let mut rng = substream(seed, "perturbation_slope");
    let eps = slope_decade();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut checked, mut skipped) = (0usize, 0usize);
    for _ in 0..samples {
        let Some((x, inv)) = sample_invertible(inst, &mut rng) else { continue };
        let ni = inst.norm(&inv);
        let raw = inst.random_element(&mut rng, 1.0);
        let Some(h) = scale_to_norm(inst, &raw, 1.0 / (2.0 * ni)) else { continue };
        let quad = inst
            .mul(&inv, &h)
            .and_then(|ih| inst.mul(&ih, &ih))
            .and_then(|q| inst.mul(&q, &inv))
            .map(|q| inst.norm(&q));
        match quad {
            Ok(q) if q > 1e-6 * ni.powi(3) * inst.norm(&h).powi(2) => {}
            Ok(_) => {
                skipped += 1;
                continue;
            }
            Err(e) => {
                report.error(e.to_string());
                return report;
            }
        }
        match perturbation_slope(&x, &h, &eps, inst) {
            Ok(slope) => {
                checked += 1;
                lo = lo.min(slope);
                hi = hi.max(slope);
                if (slope - 2.0).abs() > slope_tol {
                    report.fail(
                        "remainder slope is not quadratic",
                        json!({ "x": x.to_json(), "h": h.to_json(), "slope": slope }),
                    );
                }
            }
            Err(e) => {
                report.error(e.to_string());
                return report;
            }
        }
    }
    report.metric("pairs_checked", checked);
    report.metric("pairs_skipped", skipped);
    report.metric("min_slope", lo);
    report.metric("max_slope", hi);
    report
}

/// `(xy)^-1 = y^-1 x^-1` and `(a x)^-1 = a^-1 x^-1` on sampled invertibles.
/// Deviations are relative to `max(1, ||expected, A||)`: inverses of series
/// with a small constant term have huge coefficients.
pub fn group_check<S: Scalar, A: Algebra<S>>(inst: &A, samples: usize, seed: u64, tol: f64) -> CheckReport {
    let mut report = CheckReport::new("group_of_invertibles", Some(seed), samples, tol);
    let mut rng = substream(seed, "group");
    let mut max_dev: f64 = 0.0;
    for _ in 0..samples {
        let (Some((x, xi)), Some((y, yi))) = (sample_invertible(inst, &mut rng), sample_invertible(inst, &mut rng))
        else {
            continue;
        };
        let alpha: S = random_scalar(&mut rng, 2.0);
        let step = || -> Result<(f64, f64), AlgebraError> {
            let xy = inst.mul(&x, &y)?;
            let expected = inst.mul(&yi, &xi)?;
            let prod_dev = match inst.exact_inverse(&xy) {
                Some(inv) => inst.norm(&inv.sub(&expected)) / inst.norm(&expected).max(1.0),
                None => f64::INFINITY,
            };
            let scalar_dev = if alpha.is_zero() {
                0.0
            } else {
                match inst.exact_inverse(&x.scale(&alpha)) {
                    Some(inv) => {
                        let expected = xi.scale(&(S::one() / alpha.clone()));
                        inst.norm(&inv.sub(&expected)) / inst.norm(&expected).max(1.0)
                    }
                    None => f64::INFINITY,
                }
            };
            Ok((prod_dev, scalar_dev))
        };
        match step() {
            Ok((p, s)) => {
                max_dev = max_dev.max(p).max(s);
                if p > tol || s > tol {
                    report.fail(
                        "inverse of a product or scalar multiple is off",
                        json!({ "x": x.to_json(), "y": y.to_json(), "alpha": alpha.to_json(),
                                "product_deviation": p, "scalar_deviation": s }),
                    );
                }
            }
            Err(e) => {
                report.error(e.to_string());
                return report;
            }
        }
    }
    report.metric("max_deviation", max_dev);
    report
}

/// A finite certificate that `z` is a topological divisor of zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TdzWitness<E> {
    pub z: E,
    pub sequence: Vec<E>,
    /// `||z z_k, A||` (left) or `||z_k z, A||` (right).
    pub decay: Vec<f64>,
    pub side: Side,
    /// Declared threshold the decay crossed; `None` for prefix certificates.
    pub threshold: Option<f64>,
}

impl<E> TdzWitness<E> {
    pub fn to_json<S: Scalar>(&self) -> Value
    where
        E: Element<S>,
    {
        json!({
            "z": self.z.to_json(),
            "sequence": self.sequence.iter().map(Element::to_json).collect::<Vec<_>>(),
            "decay": self.decay,
            "side": self.side,
            "threshold": self.threshold,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TdzOutcome<E> {
    Witness(TdzWitness<E>),
    /// Nothing found within the step budget. This is not a proof that `z` is
    /// no topological divisor of zero.
    NoWitness { min_decay: f64, steps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TdzParams {
    pub k_max: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for TdzParams {
    fn default() -> Self {
        TdzParams {
            k_max: DEFAULT_TDZ_STEPS,
            threshold: DEFAULT_TDZ_THRESHOLD,
            seed: 0,
        }
    }
}

fn side_product<S: Scalar, A: Algebra<S>>(inst: &A, z: &A::Elem, w: &A::Elem, side: Side) -> Result<A::Elem, AlgebraError> {
    match side {
        Side::Left => inst.mul(z, w),
        Side::Right => inst.mul(w, z),
    }
}

fn normalized<S: Scalar, A: Algebra<S>>(inst: &A, x: &A::Elem) -> Option<A::Elem> {
    let nx = inst.norm(x);
    (nx > 0.0 && nx.is_finite()).then(|| x.scale(&S::from_real(1.0 / nx)))
}

/// Builds `z_k = (w + 2^-k g) / ||w + 2^-k g||` from the instance's
/// annihilator candidate `w` and a seeded generic direction `g`, stopping at
/// the first `k` whose product with `z` drops below the threshold.
pub fn tdz_scan<S: Scalar, A: Algebra<S>>(z: &A::Elem, inst: &A, params: TdzParams) -> TdzOutcome<A::Elem> {
    let Some((w, side)) = inst.annihilator_candidate(z) else {
        return TdzOutcome::NoWitness {
            min_decay: f64::INFINITY,
            steps: 0,
        };
    };
    let mut rng = substream(params.seed, "tdz");
    let g = inst.random_element(&mut rng, 1.0);
    let mut sequence = Vec::new();
    let mut decay = Vec::new();
    let mut min_decay = f64::INFINITY;
    for k in 0..params.k_max {
        let step = S::from_real((-(k as f64)).exp2());
        let Some(zk) = normalized(inst, &w.add(&g.scale(&step))) else { continue };
        let Ok(p) = side_product(inst, z, &zk, side) else { break };
        let d = inst.norm(&p);
        min_decay = min_decay.min(d);
        sequence.push(zk);
        decay.push(d);
        if d < params.threshold {
            return TdzOutcome::Witness(TdzWitness {
                z: z.clone(),
                sequence,
                decay,
                side,
                threshold: Some(params.threshold),
            });
        }
    }
    TdzOutcome::NoWitness {
        min_decay,
        steps: decay.len(),
    }
}

/// For non-invertible `x` approached by invertible `s_k`, the sequence
/// `x_k = s_k^-1 / ||s_k^-1||` with the decay of `||x x_k||` along the prefix.
pub fn boundary_tdz_witness<S: Scalar, A: Algebra<S>>(
    x: &A::Elem,
    approach: &[A::Elem],
    inst: &A,
    tol: f64,
) -> Result<TdzWitness<A::Elem>, InvertError> {
    if inst.exact_inverse(x).is_some() {
        return Err(InvertError::Invertible);
    }
    let mut last_dist = f64::INFINITY;
    let mut sequence = Vec::with_capacity(approach.len());
    let mut decay = Vec::with_capacity(approach.len());
    for (index, s) in approach.iter().enumerate() {
        let dist = inst.norm(&s.sub(x));
        if !(dist < last_dist) {
            return Err(InvertError::NonDecreasingApproach { index });
        }
        last_dist = dist;
        let inv = inst
            .exact_inverse(s)
            .ok_or(InvertError::ApproachNotInvertible { index })?;
        let xk = normalized(inst, &inv).ok_or(InvertError::ApproachNotInvertible { index })?;
        let unit_dev = (inst.norm(&xk) - 1.0).abs();
        if unit_dev > tol.max(1e-12) {
            return Err(InvertError::Hypothesis {
                reason: format!("x_{index} has norm off 1 by {unit_dev}"),
                value: unit_dev,
            });
        }
        decay.push(inst.norm(&inst.mul(x, &xk)?));
        sequence.push(xk);
    }
    if let (Some(first), Some(last)) = (decay.first(), decay.last()) {
        if decay.len() > 1 && !(last < first) {
            return Err(InvertError::Hypothesis {
                reason: "||x x_k|| does not decay along the approach".into(),
                value: *last,
            });
        }
    }
    Ok(TdzWitness {
        z: x.clone(),
        sequence,
        decay,
        side: Side::Left,
        threshold: None,
    })
}

/// Z inside S: scans `samples` elements (every other one forced singular) and
/// cross-classifies each witness.
pub fn tdz_sweep<S: Scalar, A: Algebra<S>>(inst: &A, samples: usize, params: TdzParams, tol: f64) -> CheckReport {
    let mut report = CheckReport::new("tdz_in_noninvertible", Some(params.seed), samples, tol);
    report.warnings.push("a missing witness is not a proof that none exists".into());
    let mut rng = substream(params.seed, "tdz_sweep");
    let mut witnesses = 0;
    let mut no_witness = 0;
    for i in 0..samples {
        let z = if i % 2 == 1 {
            inst.singular_sample(&mut rng, 1.0)
                .unwrap_or_else(|| inst.random_element(&mut rng, 1.0))
        } else {
            inst.random_element(&mut rng, 1.0)
        };
        let p = TdzParams {
            seed: params.seed.wrapping_add(i as u64),
            ..params
        };
        match tdz_scan(&z, inst, p) {
            TdzOutcome::Witness(w) => {
                witnesses += 1;
                let unit_dev = w.sequence.iter().map(|e| (inst.norm(e) - 1.0).abs()).fold(0.0, f64::max);
                if unit_dev > 1e-9 {
                    report.fail("witness sequence leaves the unit sphere", json!({ "z": z.to_json(), "deviation": unit_dev }));
                }
                if classify_element(&z, inst).is_invertible() {
                    report.fail(
                        "topological divisor of zero classified invertible",
                        json!({ "witness": w.to_json() }),
                    );
                }
            }
            TdzOutcome::NoWitness { .. } => no_witness += 1,
        }
    }
    report.metric("witnesses", witnesses);
    report.metric("no_witness", no_witness);
    report
}
