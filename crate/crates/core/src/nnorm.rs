//! Finite-dimensional n-inner-product spaces and the Gram-determinant n-norm.
//!
//! The standard n-inner product of `x, y` against anchors `a2..an` is the
//! determinant of the matrix of Hermitian inner products
//!
//! ```text
//! | <x,y>   <x,a2>   ...  <x,an>  |
//! | <a2,y>  <a2,a2>  ...  <a2,an> |
//! |  ...                          |
//! | <an,y>  <an,a2>  ...  <an,an> |
//! ```
//!
//! and its diagonal square root `||x, a2, .., an||` is the volume of the
//! parallelepiped spanned by the tuple. It vanishes exactly on dependent tuples.

use std::cmp::Ordering;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::element::{scalars_to_json, Element};
use crate::linalg::{determinant, hermitian_inner};
use crate::report::CheckReport;
use crate::sampling::{random_vec, substream};
use crate::scalar::Scalar;

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NNormError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension {dim} is below n = {n}")]
    DimensionTooSmall { dim: usize, n: usize },
    #[error("an n-norm needs n >= 2 (got {0})")]
    TooFewSlots(usize),
    #[error("Gram determinant {value:e} is negative beyond tolerance (scale {scale:e})")]
    NegativeGram { value: f64, scale: f64 },
    #[error("empty sequence")]
    EmptySequence,
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("anchors are linearly dependent")]
    DependentAnchors,
}

/// Coordinates of a point of C^d.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector<S: Scalar>(pub Vec<S>);

impl<S: Scalar> Vector<S> {
    pub fn new(coords: Vec<S>) -> Self {
        Vector(coords)
    }

    pub fn from_f64(values: &[f64]) -> Self {
        Vector(values.iter().map(|&v| S::from_real(v)).collect())
    }

    /// The i-th standard basis vector of C^dim.
    pub fn basis(dim: usize, i: usize) -> Self {
        Vector((0..dim).map(|j| if i == j { S::one() } else { S::zero() }).collect())
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }
}

impl<S: Scalar> Element<S> for Vector<S> {
    fn coords(&self) -> Vec<S> {
        self.0.clone()
    }
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn add(&self, other: &Self) -> Self {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a.clone() + b.clone()).collect())
    }
    fn scale(&self, a: &S) -> Self {
        Vector(self.0.iter().map(|z| a.clone() * z.clone()).collect())
    }
    fn zero_like(&self) -> Self {
        Vector(vec![S::zero(); self.0.len()])
    }
    fn to_json(&self) -> Value {
        scalars_to_json(&self.0)
    }
}

/// The fixed elements occupying slots 2..n of every evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorTuple<E> {
    anchors: Vec<E>,
    normalized: bool,
}

impl<E> AnchorTuple<E> {
    pub fn n(&self) -> usize {
        self.anchors.len() + 1
    }

    pub fn anchors(&self) -> &[E] {
        &self.anchors
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn iter(&self) -> std::slice::Iter<'_, E> {
        self.anchors.iter()
    }
}

impl<E: Clone> AnchorTuple<E> {
    /// Builds a tuple from already-checked parts. `normalized` is the caller's
    /// claim that each anchor has instance magnitude 1.
    pub fn from_parts(anchors: Vec<E>, normalized: bool) -> Self {
        AnchorTuple { anchors, normalized }
    }

    pub fn map<F, T>(&self, f: F) -> AnchorTuple<T>
    where
        F: FnMut(&E) -> T,
    {
        AnchorTuple {
            anchors: self.anchors.iter().map(f).collect(),
            normalized: false,
        }
    }
}

impl<S: Scalar> AnchorTuple<Vector<S>> {
    /// Anchors for the Gram n-norm on C^d. All must share one dimension and the
    /// tuple needs at least one anchor.
    pub fn new(anchors: Vec<Vector<S>>) -> Result<Self, NNormError> {
        let first = anchors.first().ok_or(NNormError::TooFewSlots(1))?;
        let dim = first.dim();
        if let Some(bad) = anchors.iter().find(|a| a.dim() != dim) {
            return Err(NNormError::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(AnchorTuple {
            anchors,
            normalized: false,
        })
    }

    /// Rescales each anchor to unit Euclidean length.
    pub fn normalized(mut self) -> Self {
        for a in &mut self.anchors {
            let len = a.0.iter().map(|z| z.abs().powi(2)).sum::<f64>().sqrt();
            if len > 0.0 {
                *a = a.scale(&S::from_real(1.0 / len));
            }
        }
        self.normalized = true;
        self
    }

    pub fn dim(&self) -> usize {
        self.anchors[0].dim()
    }

    fn check_operand(&self, v: &Vector<S>) -> Result<(), NNormError> {
        let dim = self.dim();
        if v.dim() != dim {
            return Err(NNormError::DimensionMismatch {
                expected: dim,
                found: v.dim(),
            });
        }
        if dim < self.n() {
            return Err(NNormError::DimensionTooSmall { dim, n: self.n() });
        }
        Ok(())
    }
}

/// Hermitian positive semidefinite matrix of pairwise inner products.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix<S: Scalar> {
    pub entries: Vec<Vec<S>>,
}

impl<S: Scalar> GramMatrix<S> {
    /// `entries[i][j] = <left_i, right_j>`.
    pub fn cross(left: &[&Vector<S>], right: &[&Vector<S>]) -> Self {
        let entries = left
            .iter()
            .map(|u| right.iter().map(|v| hermitian_inner(&u.0, &v.0)).collect())
            .collect();
        GramMatrix { entries }
    }

    pub fn of(tuple: &[&Vector<S>]) -> Self {
        Self::cross(tuple, tuple)
    }

    pub fn determinant(&self) -> S {
        determinant(&self.entries)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.entries.len();
        (0..n).all(|i| {
            (0..n).all(|j| (self.entries[i][j].clone() - self.entries[j][i].conj()).is_negligible(tol))
        })
    }

    /// Product of the diagonal: Hadamard's bound on the determinant.
    pub fn hadamard_scale(&self) -> f64 {
        (0..self.entries.len())
            .map(|i| self.entries[i][i].re_f64().abs())
            .product()
    }
}

/// The standard n-inner product `<x, y | a2, .., an>`.
pub fn standard_n_inner<S: Scalar>(
    x: &Vector<S>,
    y: &Vector<S>,
    anchors: &AnchorTuple<Vector<S>>,
) -> Result<S, NNormError> {
    anchors.check_operand(x)?;
    anchors.check_operand(y)?;
    let mut left = vec![x];
    left.extend(anchors.iter());
    let mut right = vec![y];
    right.extend(anchors.iter());
    Ok(GramMatrix::cross(&left, &right).determinant())
}

/// Value of a Gram n-norm together with the clamp flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GramNorm {
    pub value: f64,
    /// Set when a slightly negative determinant (rounding) was clamped to zero.
    pub clamped: bool,
}

/// Gram n-norm of an arbitrary full tuple `(x1, .., xn)`.
///
/// In approximate mode a determinant with `|det| <= tol * prod ||v_i||^2` is
/// read as a dependent tuple and yields exactly 0; a negative determinant in
/// that band sets `clamped`, one beyond it is an error.
pub fn gram_tuple_norm<S: Scalar>(tuple: &[&Vector<S>], tol: f64) -> Result<GramNorm, NNormError> {
    let gram = GramMatrix::of(tuple);
    let det_exact = gram.determinant();
    let det = det_exact.re_f64();
    if S::is_exact() {
        return Ok(GramNorm {
            value: det.max(0.0).sqrt(),
            clamped: false,
        });
    }
    let scale = gram.hadamard_scale();
    if det.abs() <= tol * scale {
        return Ok(GramNorm {
            value: 0.0,
            clamped: det < 0.0,
        });
    }
    if det < 0.0 {
        return Err(NNormError::NegativeGram { value: det, scale });
    }
    Ok(GramNorm {
        value: det.sqrt(),
        clamped: false,
    })
}

/// `||x1, a2, .., an||` with the clamp flag exposed.
pub fn gram_n_norm_flagged<S: Scalar>(
    x1: &Vector<S>,
    anchors: &AnchorTuple<Vector<S>>,
    tol: f64,
) -> Result<GramNorm, NNormError> {
    anchors.check_operand(x1)?;
    let mut tuple = vec![x1];
    tuple.extend(anchors.iter());
    gram_tuple_norm(&tuple, tol)
}

pub fn gram_n_norm<S: Scalar>(x1: &Vector<S>, anchors: &AnchorTuple<Vector<S>>) -> Result<f64, NNormError> {
    gram_n_norm_flagged(x1, anchors, DEFAULT_TOL).map(|g| g.value)
}

/// Dependence of a vector tuple by the Gram test: exactly zero in exact mode,
/// `det <= tol * prod ||v_i||^2` otherwise.
pub fn gram_dependent<S: Scalar>(tuple: &[&Vector<S>], tol: f64) -> bool {
    let gram = GramMatrix::of(tuple);
    let det = gram.determinant();
    if S::is_exact() {
        return det.is_zero();
    }
    det.re_f64().abs() <= tol * gram.hadamard_scale()
}

/// `||x,A|| * ||y,A|| - |<x,y|A>|`, nonnegative up to rounding.
pub fn cauchy_schwarz_gap<S: Scalar>(
    x: &Vector<S>,
    y: &Vector<S>,
    anchors: &AnchorTuple<Vector<S>>,
) -> Result<f64, NNormError> {
    let nx = gram_n_norm(x, anchors)?;
    let ny = gram_n_norm(y, anchors)?;
    let inner = standard_n_inner(x, y, anchors)?;
    Ok(nx * ny - inner.abs())
}

/// `cauchy_schwarz_gap >= -tol` over `samples` seeded `(x, y, anchors)` in
/// C^dim with `n - 1` anchors; dependent anchor draws are skipped.
pub fn cauchy_schwarz_sweep<S: Scalar>(dim: usize, n: usize, samples: usize, seed: u64, tol: f64) -> CheckReport {
    let mut report = CheckReport::new("cauchy_schwarz", Some(seed), samples, tol);
    let mut rng = substream(seed, "cauchy_schwarz");
    let mut min_gap = f64::INFINITY;
    let mut skipped = 0usize;
    for _ in 0..samples {
        let anchors: Vec<Vector<S>> = (1..n).map(|_| Vector(random_vec(&mut rng, dim, 1.0))).collect();
        let x = Vector(random_vec(&mut rng, dim, 1.0));
        let y = Vector(random_vec(&mut rng, dim, 1.0));
        let refs: Vec<&Vector<S>> = anchors.iter().collect();
        if gram_dependent(&refs, DEFAULT_TOL) {
            skipped += 1;
            continue;
        }
        let tuple = match AnchorTuple::new(anchors) {
            Ok(t) => t,
            Err(e) => {
                report.error(e.to_string());
                return report;
            }
        };
        match cauchy_schwarz_gap(&x, &y, &tuple) {
            Ok(gap) => {
                min_gap = min_gap.min(gap);
                if gap < -tol {
                    let anchors: Vec<Value> = tuple.iter().map(Element::to_json).collect();
                    report.fail(
                        "|<x,y|A>| exceeds ||x,A|| ||y,A||",
                        json!({ "x": x.to_json(), "y": y.to_json(), "anchors": anchors, "gap": gap }),
                    );
                }
            }
            Err(e) => {
                report.error(e.to_string());
                return report;
            }
        }
    }
    report.metric("min_gap", min_gap);
    report.metric("skipped_dependent_anchors", skipped);
    report
}

/// Finite-prefix convergence test: the last distance `||seq[k] - x, A||` must
/// be at most `tol`, and the distances over the second half of the prefix
/// must trend down (each step may rise by at most `tol`).
pub fn sequence_converges<S: Scalar>(
    seq: &[Vector<S>],
    x: &Vector<S>,
    anchors: &AnchorTuple<Vector<S>>,
    tol: f64,
) -> Result<bool, NNormError> {
    if seq.is_empty() {
        return Err(NNormError::EmptySequence);
    }
    let distances = seq
        .iter()
        .map(|s| gram_n_norm(&s.sub(x), anchors))
        .collect::<Result<Vec<_>, _>>()?;
    let tail = &distances[distances.len() / 2..];
    let last = *tail.last().expect("nonempty");
    let monotone = tail.windows(2).all(|w| w[1] <= w[0] + tol);
    Ok(last <= tol && monotone && last <= tail[0] + tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BallPosition {
    /// Strictly inside the open ball.
    InsideOpen,
    /// Within `tol` of the sphere but not certifiably on it (approximate mode).
    OnBoundary,
    /// On the sphere: in the closed ball, not in the open one.
    InsideClosedOnly,
    Outside,
}

/// Classifies `p` against the balls of radius `radius` centred at `center`.
/// Exact mode compares the squared distance with `radius^2` without rounding.
pub fn ball_membership<S: Scalar>(
    center: &Vector<S>,
    radius: f64,
    anchors: &AnchorTuple<Vector<S>>,
    p: &Vector<S>,
    tol: f64,
) -> Result<BallPosition, NNormError> {
    if radius.is_nan() || radius <= 0.0 {
        return Err(NNormError::NonPositiveRadius(radius));
    }
    let diff = p.sub(center);
    if S::is_exact() {
        anchors.check_operand(&diff)?;
        let mut tuple = vec![&diff];
        tuple.extend(anchors.iter());
        let dist_sq = GramMatrix::of(&tuple).determinant();
        let r = S::from_real(radius);
        return Ok(match dist_sq.real_cmp(&(r.clone() * r)) {
            Ordering::Less => BallPosition::InsideOpen,
            Ordering::Equal => BallPosition::InsideClosedOnly,
            Ordering::Greater => BallPosition::Outside,
        });
    }
    let d = gram_n_norm_flagged(&diff, anchors, tol)?.value;
    Ok(if d == radius {
        BallPosition::InsideClosedOnly
    } else if (d - radius).abs() <= tol * (1.0 + radius) {
        BallPosition::OnBoundary
    } else if d < radius {
        BallPosition::InsideOpen
    } else {
        BallPosition::Outside
    })
}
