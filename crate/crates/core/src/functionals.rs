//! b-linear functionals on an algebra instance, complex b-homomorphisms and
//! both directions of the GKZ-type characterization.
//!
//! A functional is a dense coefficient vector over the instance basis,
//! `T(x) = sum_j c_j x_j`. Its anchor slots are pinned to the instance's own
//! admissible anchors; other slot arguments are not modeled.
//!
//! The converse direction is never proved here. On finite-dimensional
//! commutative instances it is verified exhaustively instead: the product is
//! bilinear, so multiplicativity on all basis pairs is multiplicativity.

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::algebra::{Algebra, AlgebraError, AlgebraKind, NormVariant};
use crate::element::{scalars_to_json, Element};
use crate::invertibility::{classify_element, scale_to_norm};
use crate::report::CheckReport;
use crate::sampling::{random_scalar, random_unit_interval, substream, SampleRng};
use crate::scalar::Scalar;

pub const DEFAULT_EXP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctionalError {
    #[error("functional has {found} coefficients, instance dimension is {expected}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("exponential series does not reach the tolerance within {0} terms")]
    NoConvergence(usize),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BLinearFunctional<S: Scalar> {
    pub coeffs: Vec<S>,
    /// Declared `M` with `|T(x)| <= M ||x, A||`.
    pub bound: Option<f64>,
}

impl<S: Scalar> BLinearFunctional<S> {
    pub fn new(coeffs: Vec<S>) -> Self {
        BLinearFunctional { coeffs, bound: None }
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    /// The `j`-th coordinate functional on a space of dimension `dim`.
    pub fn projection(dim: usize, j: usize) -> Self {
        Self::new((0..dim).map(|i| if i == j { S::one() } else { S::zero() }).collect())
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(vec![S::zero(); dim])
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.clone() + b.clone()).collect())
    }

    pub fn scale(&self, s: &S) -> Self {
        Self::new(self.coeffs.iter().map(|c| s.clone() * c.clone()).collect())
    }

    /// Exact test on the basis: `T(b_j) = c_j`.
    pub fn is_identically_zero(&self) -> bool {
        self.coeffs.iter().all(Scalar::is_zero)
    }

    /// Index `j` when this is exactly the `j`-th coordinate functional.
    pub fn as_projection(&self) -> Option<usize> {
        let mut nonzero = self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero());
        let (j, c) = nonzero.next()?;
        (nonzero.next().is_none() && *c == S::one()).then_some(j)
    }

    pub fn to_json(&self) -> Value {
        json!({ "coeffs": scalars_to_json(&self.coeffs), "bound": self.bound })
    }
}

pub fn eval_functional<S: Scalar, E: Element<S>>(t: &BLinearFunctional<S>, x: &E) -> Result<S, FunctionalError> {
    let coords = x.coords();
    if coords.len() != t.coeffs.len() {
        return Err(FunctionalError::ShapeMismatch {
            expected: coords.len(),
            found: t.coeffs.len(),
        });
    }
    Ok(t.coeffs
        .iter()
        .zip(coords)
        .fold(S::zero(), |acc, (c, x)| acc + c.clone() * x))
}

fn check_dim<S: Scalar, A: Algebra<S>>(t: &BLinearFunctional<S>, inst: &A) -> Result<(), FunctionalError> {
    let dim = inst.zero().dim();
    if dim == t.coeffs.len() {
        Ok(())
    } else {
        Err(FunctionalError::ShapeMismatch {
            expected: dim,
            found: t.coeffs.len(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalNorm {
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
}

/// `sup { |T(x)| : ||x, A|| <= 1 }`.
///
/// Closed forms where `||x, A||` is a scaled coordinate norm: for the
/// max-abs norms (pointwise, Eq. (2.1) series) `s ||x||_inf` has dual
/// `||c||_1 / s`, and the l1 series norm `s ||x||_1` has dual `||c||_inf / s`,
/// with `s = ||e, A||`. Elsewhere: the best sampled ratio as lower bound and
/// no finite upper bound.
pub fn functional_norm<S: Scalar, A: Algebra<S>>(
    t: &BLinearFunctional<S>,
    inst: &A,
    budget: usize,
    seed: u64,
) -> Result<FunctionalNorm, FunctionalError> {
    check_dim(t, inst)?;
    let l1: f64 = t.coeffs.iter().map(Scalar::abs).sum();
    let linf = t.coeffs.iter().map(Scalar::abs).fold(0.0, f64::max);
    let s = inst.norm(&inst.unit());
    let closed = match (inst.kind(), inst.variant()) {
        (AlgebraKind::Pointwise, _) | (AlgebraKind::TruncatedSeries, NormVariant::Eq21MaxProduct) => Some(l1 / s),
        (AlgebraKind::TruncatedSeries, NormVariant::L1Corrected) => Some(linf / s),
        _ => None,
    };
    if let Some(v) = closed {
        return Ok(FunctionalNorm {
            lower: v,
            upper: v,
            exact: true,
        });
    }
    if t.is_identically_zero() {
        return Ok(FunctionalNorm {
            lower: 0.0,
            upper: 0.0,
            exact: true,
        });
    }
    let mut rng = substream(seed, "functional_norm");
    let mut best: f64 = 0.0;
    let probes = inst.basis().into_iter().chain((0..budget).map(|_| inst.random_element(&mut rng, 1.0)));
    for x in probes {
        let nx = inst.norm(&x);
        if nx > 0.0 && nx.is_finite() {
            best = best.max(eval_functional(t, &x)?.abs() / nx);
        }
    }
    Ok(FunctionalNorm {
        lower: best,
        upper: f64::INFINITY,
        exact: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomomorphismVerdict<S: Scalar> {
    pub multiplicative: bool,
    pub unit_value: S,
    pub nonzero_on_invertibles: bool,
    /// A multiplicative functional that is 0 on the basis; the lemma excludes it.
    pub identically_zero: bool,
    pub counterexample: Option<Value>,
}

impl<S: Scalar> HomomorphismVerdict<S> {
    /// Multiplicative and not identically zero.
    pub fn is_homomorphism(&self) -> bool {
        self.multiplicative && !self.identically_zero
    }

    pub fn to_json(&self) -> Value {
        json!({
            "multiplicative": self.multiplicative,
            "unit_value": self.unit_value.to_json(),
            "nonzero_on_invertibles": self.nonzero_on_invertibles,
            "identically_zero": self.identically_zero,
            "counterexample": self.counterexample,
        })
    }
}

fn mult_defect<S: Scalar, A: Algebra<S>>(
    t: &BLinearFunctional<S>,
    inst: &A,
    x: &A::Elem,
    y: &A::Elem,
) -> Result<(S, S, S), FunctionalError> {
    let xy = inst.mul(x, y)?;
    Ok((eval_functional(t, &xy)?, eval_functional(t, x)?, eval_functional(t, y)?))
}

fn sample_invertible<S: Scalar, A: Algebra<S>>(inst: &A, rng: &mut SampleRng) -> Option<(A::Elem, A::Elem)> {
    (0..64).find_map(|_| {
        let x = inst.random_element(rng, 1.0);
        inst.exact_inverse(&x).map(|inv| (x, inv))
    })
}

/// Multiplicativity on every basis pair (exhaustive) and on `samples` random
/// pairs; `T(e)`; and `T != 0` on sampled invertibles.
pub fn is_b_homomorphism<S: Scalar, A: Algebra<S>>(
    t: &BLinearFunctional<S>,
    inst: &A,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<HomomorphismVerdict<S>, FunctionalError> {
    check_dim(t, inst)?;
    let basis = inst.basis();
    let mut counterexample = None;
    'outer: for bi in &basis {
        for bj in &basis {
            let (txy, tx, ty) = mult_defect(t, inst, bi, bj)?;
            if !(txy.clone() - tx.clone() * ty.clone()).is_negligible(tol) {
                counterexample = Some(json!({
                    "x": bi.to_json(), "y": bj.to_json(),
                    "t_xy": txy.to_json(), "t_x_t_y": (tx * ty).to_json() }));
                break 'outer;
            }
        }
    }
    let mut rng = substream(seed, "homomorphism");
    if counterexample.is_none() {
        for _ in 0..samples {
            let x = inst.random_element(&mut rng, 1.0);
            let y = inst.random_element(&mut rng, 1.0);
            let (txy, tx, ty) = mult_defect(t, inst, &x, &y)?;
            let scale = 1.0 + (tx.clone() * ty.clone()).abs();
            if (txy.clone() - tx.clone() * ty.clone()).abs() > tol * scale {
                counterexample = Some(json!({
                    "x": x.to_json(), "y": y.to_json(),
                    "t_xy": txy.to_json(), "t_x_t_y": (tx * ty).to_json() }));
                break;
            }
        }
    }
    let mut nonzero_on_invertibles = true;
    for _ in 0..samples.max(1) {
        if let Some((x, _)) = sample_invertible(inst, &mut rng) {
            if eval_functional(t, &x)?.is_negligible(tol) {
                nonzero_on_invertibles = false;
                break;
            }
        }
    }
    Ok(HomomorphismVerdict {
        multiplicative: counterexample.is_none(),
        unit_value: eval_functional(t, &inst.unit())?,
        nonzero_on_invertibles,
        identically_zero: t.is_identically_zero(),
        counterexample,
    })
}

fn precondition_failed(report: &mut CheckReport, verdict: &HomomorphismVerdict<impl Scalar>) -> bool {
    if verdict.identically_zero {
        report.hypothesis_violated("precondition: functional is identically zero", verdict.to_json());
        return true;
    }
    if !verdict.multiplicative {
        report.hypothesis_violated("precondition: functional is not multiplicative", verdict.to_json());
        return true;
    }
    false
}

/// For a nonzero multiplicative `T`: `T(e) = 1`, `T(x) != 0` and
/// `T(x) T(x^-1) = 1` on sampled invertibles.
pub fn homomorphism_lemma_check<S: Scalar, A: Algebra<S>>(
    t: &BLinearFunctional<S>,
    inst: &A,
    samples: usize,
    seed: u64,
    tol: f64,
) -> CheckReport {
    let mut report = CheckReport::new("homomorphism_lemma", Some(seed), samples, tol);
    let verdict = match is_b_homomorphism(t, inst, samples, seed, tol) {
        Ok(v) => v,
        Err(e) => {
            report.error(e.to_string());
            return report;
        }
    };
    if precondition_failed(&mut report, &verdict) {
        return report;
    }
    let te = verdict.unit_value.clone();
    report.metric("unit_value", te.to_json());
    if !(te.clone() - S::one()).is_negligible(tol) {
        report.fail("T(e) != 1", json!({ "unit_value": te.to_json() }));
    }
    let mut rng = substream(seed, "lemma");
    let mut max_dev: f64 = 0.0;
    for _ in 0..samples {
        let Some((x, inv)) = sample_invertible(inst, &mut rng) else { continue };
        let (Ok(tx), Ok(tinv)) = (eval_functional(t, &x), eval_functional(t, &inv)) else {
            report.error("shape mismatch");
            return report;
        };
        if tx.is_negligible(tol) {
            report.fail("T vanishes at an invertible element", json!({ "x": x.to_json() }));
        }
        let dev = (tx.clone() * tinv.clone() - S::one()).abs();
        max_dev = max_dev.max(dev);
        if dev > tol {
            report.fail(
                "T(x) T(x^-1) != 1",
                json!({ "x": x.to_json(), "t_x": tx.to_json(), "t_x_inv": tinv.to_json() }),
            );
        }
    }
    report.metric("max_inverse_product_deviation", max_dev);
    report
}

/// Random `x` with `||x, A|| < 1`, including the zero element.
fn sub_unit_ball<S: Scalar, A: Algebra<S>>(inst: &A, rng: &mut SampleRng, i: usize) -> Option<A::Elem> {
    if i == 0 {
        return Some(inst.zero());
    }
    // Half the samples sit in the outer shell to push towards the supremum.
    let u = if i % 2 == 0 {
        random_unit_interval(rng)
    } else {
        1.0 - random_unit_interval(rng) / 64.0
    };
    let x = inst.random_element(rng, 1.0);
    scale_to_norm(inst, &x, u * (1.0 - 1.0 / f64::from(1 << 20)))
}

/// `|T(x)| < 1` whenever `||x, A|| < 1`, for a complex b-homomorphism `T`.
pub fn gkz_forward_check<S: Scalar, A: Algebra<S>>(
    t: &BLinearFunctional<S>,
    inst: &A,
    samples: usize,
    seed: u64,
    tol: f64,
) -> CheckReport {
    let mut report = CheckReport::new("gkz_forward", Some(seed), samples, tol);
    let verdict = match is_b_homomorphism(t, inst, 8, seed, tol) {
        Ok(v) => v,
        Err(e) => {
            report.error(e.to_string());
            return report;
        }
    };
    if precondition_failed(&mut report, &verdict) {
        return report;
    }
    let mut rng = substream(seed, "gkz_forward");
    let mut max_t: f64 = 0.0;
    let mut max_ratio: f64 = 0.0;
    for i in 0..samples {
        let Some(x) = sub_unit_ball(inst, &mut rng, i) else { continue };
        let nx = inst.norm(&x);
        if nx >= 1.0 {
            continue;
        }
        let tx = match eval_functional(t, &x) {
            Ok(v) => v.abs(),
            Err(e) => {
                report.error(e.to_string());
                return report;
            }
        };
        max_t = max_t.max(tx);
        if nx > 0.0 {
            max_ratio = max_ratio.max(tx / nx);
        }
        if tx >= 1.0 {
            report.fail(
                "|T(x)| >= 1 inside the unit ball",
                json!({ "x": x.to_json(), "norm": nx, "abs_t": tx }),
            );
        }
    }
    report.metric("max_abs_t", max_t);
    report.metric("max_abs_t_over_norm", max_ratio);
    report
}

/// An invertible `z` with `T(z) = 0`, if one is found.
///
/// Pointwise instances decide it exactly: `T` vanishes somewhere on the
/// invertibles iff it has two or more nonzero coefficients. Elsewhere `z` is
/// searched on lines `x + s y` (from `e` along each basis element, then
/// through sampled invertibles), solving
/// `T(x) + s T(y) = 0` for `s`.
pub fn vanishing_invertible<S: Scalar, A: Algebra<S>>(
    t: &BLinearFunctional<S>,
    inst: &A,
    tries: usize,
    seed: u64,
    tol: f64,
) -> Result<Option<A::Elem>, FunctionalError> {
    check_dim(t, inst)?;
    if inst.kind() == AlgebraKind::Pointwise {
        let nz: Vec<usize> = (0..t.coeffs.len()).filter(|&j| !t.coeffs[j].is_zero()).collect();
        if nz.len() < 2 {
            return Ok(None);
        }
        let (j1, j2) = (nz[0], nz[1]);
        for second in [S::one(), S::from_ratio(2, 1)] {
            let mut coords = vec![S::one(); t.coeffs.len()];
            coords[j2] = second;
            let rest = (0..coords.len())
                .filter(|&j| j != j1)
                .fold(S::zero(), |acc, j| acc + t.coeffs[j].clone() * coords[j].clone());
            coords[j1] = -rest / t.coeffs[j1].clone();
            if !coords[j1].is_zero() {
                return Ok(Some(inst.from_coords(coords)?));
            }
        }
        return Ok(None);
    }
    if t.is_identically_zero() {
        return Ok(Some(inst.unit()));
    }
    let mut rng = substream(seed, "vanishing_invertible");
    let mut lines: Vec<(A::Elem, A::Elem)> = inst.basis().into_iter().map(|b| (inst.unit(), b)).collect();
    for _ in 0..tries {
        if let (Some((x, _)), Some((y, _))) = (sample_invertible(inst, &mut rng), sample_invertible(inst, &mut rng)) {
            lines.push((x, y));
        }
    }
    for (x, y) in lines {
        if inst.exact_inverse(&x).is_none() {
            continue;
        }
        let (tx, ty) = (eval_functional(t, &x)?, eval_functional(t, &y)?);
        if tx.is_negligible(tol) {
            return Ok(Some(x));
        }
        if ty.is_negligible(tol) {
            continue;
        }
        let z = x.add(&y.scale(&(-tx / ty)));
        if eval_functional(t, &z)?.is_negligible(tol) && inst.exact_inverse(&z).is_some() {
            return Ok(Some(z));
        }
    }
    Ok(None)
}

/// Converse direction. Hypotheses: `T` bounded, `T(e) = 1`, `T` nonvanishing
/// on invertibles. When they fail the outcome is `hypothesis_violated` with a
/// witness. When they hold, `T` must be multiplicative on all basis pairs,
/// satisfy `T(x^2) = T(x)^2`, `T(xy + yx) = 2 T(x) T(y)` and `|T(x)| <= ||x, A||`.
pub fn gkz_converse_check<S: Scalar, A: Algebra<S>>(
    t: &BLinearFunctional<S>,
    inst: &A,
    samples: usize,
    seed: u64,
    tol: f64,
) -> CheckReport {
    let mut report = CheckReport::new("gkz_converse", Some(seed), samples, tol);
    if let Err(e) = converse_inner(t, inst, samples, seed, tol, &mut report) {
        report.error(e.to_string());
    }
    report
}

fn converse_inner<S: Scalar, A: Algebra<S>>(
    t: &BLinearFunctional<S>,
    inst: &A,
    samples: usize,
    seed: u64,
    tol: f64,
    report: &mut CheckReport,
) -> Result<(), FunctionalError> {
    let norm = functional_norm(t, inst, samples, seed)?;
    let bound = t.bound.unwrap_or(norm.upper);
    report.metric("functional_norm", norm);
    if !bound.is_finite() {
        report.hypothesis_violated("T is not known to be bounded", t.to_json());
        return Ok(());
    }
    let te = eval_functional(t, &inst.unit())?;
    if !(te.clone() - S::one()).is_negligible(tol) {
        report.hypothesis_violated(
            "T(e) != 1",
            json!({ "functional": t.to_json(), "unit_value": te.to_json() }),
        );
        return Ok(());
    }
    if let Some(z) = vanishing_invertible(t, inst, samples.max(16), seed, tol)? {
        report.hypothesis_violated(
            "T vanishes at an invertible element",
            json!({ "functional": t.to_json(), "x": z.to_json(),
                    "t_x": eval_functional(t, &z)?.to_json() }),
        );
        return Ok(());
    }
    let verdict = is_b_homomorphism(t, inst, samples, seed, tol)?;
    if let Some(c) = verdict.counterexample.clone() {
        report.fail("hypotheses hold but T is not multiplicative", c);
    }
    let basis = inst.basis();
    for bi in &basis {
        for bj in &basis {
            let sym = inst.mul(bi, bj)?.add(&inst.mul(bj, bi)?);
            let lhs = eval_functional(t, &sym)?;
            let rhs = S::from_ratio(2, 1) * eval_functional(t, bi)? * eval_functional(t, bj)?;
            if !(lhs.clone() - rhs.clone()).is_negligible(tol) {
                report.fail(
                    "T(xy + yx) != 2 T(x) T(y)",
                    json!({ "x": bi.to_json(), "y": bj.to_json(), "lhs": lhs.to_json(), "rhs": rhs.to_json() }),
                );
            }
        }
    }
    let mut rng = substream(seed, "gkz_converse");
    let mut max_ratio: f64 = 0.0;
    for _ in 0..samples {
        let x = inst.random_element(&mut rng, 1.0);
        let tx = eval_functional(t, &x)?;
        let sq = eval_functional(t, &inst.mul(&x, &x)?)?;
        if (sq.clone() - tx.clone() * tx.clone()).abs() > tol * (1.0 + tx.abs_sq().abs()) {
            report.fail(
                "T(x^2) != T(x)^2",
                json!({ "x": x.to_json(), "t_x2": sq.to_json(), "t_x": tx.to_json() }),
            );
        }
        let nx = inst.norm(&x);
        if nx > 0.0 {
            max_ratio = max_ratio.max(tx.abs() / nx);
        }
        if tx.abs() > nx * (1.0 + tol) + tol {
            report.fail(
                "|T(x)| exceeds ||x, A||",
                json!({ "x": x.to_json(), "abs_t": tx.abs(), "norm": nx }),
            );
        }
    }
    report.metric("max_abs_t_over_norm", max_ratio);
    Ok(())
}

/// Default grid of coefficient values for the character search.
pub fn default_grid<S: Scalar>() -> Vec<S> {
    vec![
        S::zero(),
        S::one(),
        -S::one(),
        S::from_ratio(1, 2),
        S::from_ratio(2, 1),
        S::i(),
        -S::i(),
        S::one() + S::i(),
        S::from_ratio(1, 3),
        S::from_ratio(-1, 2),
    ]
}

/// Enumerates every functional with coefficients from `grid`, keeps those
/// meeting the converse hypotheses (`T(e) = 1`, no invertible zero), and
/// checks each survivor is multiplicative on all basis pairs and is a
/// coordinate projection, and that every projection survives.
pub fn character_search<S: Scalar, A: Algebra<S>>(inst: &A, grid: &[S], seed: u64, tol: f64) -> CheckReport {
    let dim = inst.zero().dim();
    let total = grid.len().pow(dim as u32);
    let mut report = CheckReport::new("character_search", Some(seed), total, tol);
    let mut survivors = Vec::new();
    let mut idx = vec![0usize; dim];
    let unit = inst.unit();
    for _ in 0..total {
        let t = BLinearFunctional::new(idx.iter().map(|&i| grid[i].clone()).collect());
        // Odometer increment.
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < grid.len() {
                break;
            }
            *slot = 0;
        }
        let Ok(te) = eval_functional(&t, &unit) else { continue };
        if !(te - S::one()).is_negligible(tol) {
            continue;
        }
        match vanishing_invertible(&t, inst, 16, seed, tol) {
            Ok(None) => {}
            Ok(Some(_)) => continue,
            Err(e) => {
                report.error(e.to_string());
                return report;
            }
        }
        match is_b_homomorphism(&t, inst, 0, seed, tol) {
            Ok(v) if v.multiplicative => {}
            Ok(v) => report.fail(
                "functional meets the hypotheses but is not multiplicative",
                json!({ "functional": t.to_json(), "counterexample": v.counterexample }),
            ),
            Err(e) => {
                report.error(e.to_string());
                return report;
            }
        }
        if t.as_projection().is_none() {
            report.fail("character is not a coordinate projection", t.to_json());
        }
        survivors.push(t);
    }
    let mut found: Vec<usize> = survivors.iter().filter_map(BLinearFunctional::as_projection).collect();
    found.sort_unstable();
    if inst.kind() == AlgebraKind::Pointwise && found != (0..dim).collect::<Vec<_>>() {
        report.fail("projections missing from the surviving set", json!({ "found": found }));
    }
    report.metric("candidates", total);
    report.metric("survivors", survivors.len());
    report.metric("projections_found", found);
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exponential<E> {
    pub value: E,
    /// Highest power in the partial sum.
    pub terms_used: usize,
    /// Certified bound on the omitted tail.
    pub tail_bound: f64,
    pub truncated: bool,
}

/// Smallest `k` with `r^(k+1) / (k+1)! / (1 - r/(k+2)) <= tol`.
pub fn exp_terms(r: f64, tol: f64, cap: usize) -> Option<(usize, f64)> {
    let mut term = r; // r^(k+1)/(k+1)! at k = 0
    for k in 0..cap {
        let ratio = r / (k as f64 + 2.0);
        if ratio < 1.0 {
            let tail = term / (1.0 - ratio);
            if tail <= tol {
                return Some((k, tail));
            }
        }
        term *= r / (k as f64 + 2.0);
    }
    None
}

/// `L(lambda) = sum_j lambda^j / j! a^j`, truncated once the factorial tail
/// bound drops below `tol`.
pub fn algebra_exponential<S: Scalar, A: Algebra<S>>(
    a: &A::Elem,
    lambda: &S,
    inst: &A,
    tol: f64,
) -> Result<Exponential<A::Elem>, FunctionalError> {
    inst.check_shape(a)?;
    let r = lambda.abs() * inst.norm(a);
    if r == 0.0 {
        return Ok(Exponential {
            value: inst.unit(),
            terms_used: 0,
            tail_bound: 0.0,
            truncated: false,
        });
    }
    let (k, tail) = exp_terms(r, tol, 10_000).ok_or(FunctionalError::NoConvergence(10_000))?;
    let mut sum = inst.unit();
    let mut term = inst.unit();
    let mut truncated = false;
    for j in 1..=k {
        let c = lambda.clone() / S::from_ratio(j as i64, 1);
        term = inst.mul(&term, a)?.scale(&c);
        truncated |= term.is_truncated();
        sum = sum.add(&term);
    }
    Ok(Exponential {
        value: sum,
        terms_used: k,
        tail_bound: tail,
        truncated,
    })
}

/// `L(lambda + mu) = L(lambda) L(mu)`, `L(lambda) L(-lambda) = e` and
/// invertibility of `L(lambda)` over sampled `(a, lambda, mu)`,
/// `|lambda|, |mu| <= 2`.
pub fn exponential_check<S: Scalar, A: Algebra<S>>(inst: &A, samples: usize, seed: u64, tol: f64) -> CheckReport {
    let mut report = CheckReport::new("exponential_identities", Some(seed), samples, tol);
    let mut rng = substream(seed, "exponential");
    let mut max_dev: f64 = 0.0;
    for _ in 0..samples {
        let raw = inst.random_element(&mut rng, 1.0);
        let Some(a) = scale_to_norm(inst, &raw, 1.0) else { continue };
        let lambda: S = random_scalar(&mut rng, 2.0_f64.sqrt());
        let mu: S = random_scalar(&mut rng, 2.0_f64.sqrt());
        let run = || -> Result<(f64, f64, bool), FunctionalError> {
            let l = algebra_exponential(&a, &lambda, inst, DEFAULT_EXP_TOL)?;
            let m = algebra_exponential(&a, &mu, inst, DEFAULT_EXP_TOL)?;
            let lm = algebra_exponential(&a, &(lambda.clone() + mu.clone()), inst, DEFAULT_EXP_TOL)?;
            let neg = algebra_exponential(&a, &(-lambda.clone()), inst, DEFAULT_EXP_TOL)?;
            let prod = inst.mul(&l.value, &m.value)?;
            let dev_sum = inst.norm(&lm.value.sub(&prod));
            let dev_inv = inst.norm(&inst.mul(&l.value, &neg.value)?.sub(&inst.unit()));
            Ok((dev_sum, dev_inv, classify_element(&l.value, inst).is_invertible()))
        };
        match run() {
            Ok((ds, di, inv)) => {
                max_dev = max_dev.max(ds).max(di);
                if ds > tol || di > tol || !inv {
                    report.fail(
                        "exponential identity fails",
                        json!({ "a": a.to_json(), "lambda": lambda.to_json(), "mu": mu.to_json(),
                                "sum_deviation": ds, "inverse_deviation": di, "invertible": inv }),
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
