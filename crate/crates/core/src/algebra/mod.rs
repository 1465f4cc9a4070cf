//! Concrete n-Banach algebra instances.
//!
//! Every instance carries a fixed *admissible* anchor tuple: anchors rescaled
//! so their instance magnitude is 1. Algebra-level quantities (`||x, A||` in
//! Neumann bounds, invertibility radii, functional norms) are read on those
//! anchors through [`Algebra::norm`]. For the max-product and l1 families
//! the literal n-norm drops to 0 whenever `x` falls in the span of the
//! anchors; [`Algebra::norm`] is its unique continuous extension (the product
//! formula without the dependence clause), which agrees with the literal value
//! on every tuple where `x` is independent of the anchors.

use std::fmt::Debug;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::element::Element;
use crate::sampling::SampleRng;
use crate::scalar::Scalar;

pub mod audit;
pub mod operator;
pub mod pointwise;
pub mod series;
pub mod unitization;

pub use audit::{anchor_scaling_audit, dependent_summand_probe, multiplicativity_audit};
pub use operator::{operator_b_norm, OperatorAlgebra, OperatorBNorm, OperatorElement};
pub use pointwise::{PointwiseAlgebra, PointwiseElement};
pub use series::{SeriesAlgebra, TruncatedSeries};
pub use unitization::{Unitization, UnitizationElement};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },
    #[error("anchors are linearly dependent")]
    DependentAnchors,
    #[error("invalid instance: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgebraKind {
    TruncatedSeries,
    Pointwise,
    Operator,
    Unitization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormVariant {
    /// Product of max-abs coefficients over the tuple.
    Eq21MaxProduct,
    /// Product of coefficient l1 norms; submultiplicative under convolution.
    L1Corrected,
    /// Max-product pattern on coordinates.
    SupCoordinate,
    /// b-norm induced by the Gram n-norm on C^d.
    GramInduced,
    /// Base n-norm of vector parts plus |product of scalar parts|.
    UnitizationSum,
}

/// Which side the annihilating sequence multiplies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `z * z_k -> 0`
    Left,
    /// `z_k * z -> 0`
    Right,
}

pub trait Algebra<S: Scalar>: Debug + Send + Sync {
    type Elem: Element<S>;

    fn kind(&self) -> AlgebraKind;
    fn variant(&self) -> NormVariant;
    fn describe(&self) -> String;
    /// Number of slots of the n-norm.
    fn n(&self) -> usize;

    fn zero(&self) -> Self::Elem;
    fn unit(&self) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem, AlgebraError>;
    fn is_commutative(&self) -> bool;

    /// `||x, a2, .., an||` on the instance anchors (continuous extension).
    fn norm(&self, x: &Self::Elem) -> f64;

    /// The literal n-norm of a full tuple, where the instance defines one.
    fn tuple_norm(&self, _tuple: &[&Self::Elem]) -> Option<f64> {
        None
    }

    /// Exact classification rule: `Some(inverse)` iff `x` is invertible.
    fn exact_inverse(&self, x: &Self::Elem) -> Option<Self::Elem>;

    /// Human-readable reason `x` is not invertible.
    fn noninvertibility_reason(&self, x: &Self::Elem) -> String;

    /// Coordinate basis, ordered as [`Element::coords`].
    fn basis(&self) -> Vec<Self::Elem>;
    fn from_coords(&self, coords: Vec<S>) -> Result<Self::Elem, AlgebraError>;
    fn random_element(&self, rng: &mut SampleRng, radius: f64) -> Self::Elem;

    /// An element `w != 0` that `z` (nearly) annihilates, for the
    /// topological-divisor-of-zero scan.
    fn annihilator_candidate(&self, _z: &Self::Elem) -> Option<(Self::Elem, Side)> {
        None
    }

    /// Anchors as elements of the algebra, when the norm pins them there.
    fn anchor_elements(&self) -> Option<Vec<Self::Elem>> {
        None
    }

    /// A random non-invertible element: `x b` for the first admissible
    /// non-invertible basis element `b`.
    fn singular_sample(&self, rng: &mut SampleRng, radius: f64) -> Option<Self::Elem> {
        let b = self
            .basis()
            .into_iter()
            .filter(|b| self.from_coords(b.coords()).is_ok())
            .find(|b| self.exact_inverse(b).is_none())?;
        let x = self.random_element(rng, radius);
        self.mul(&x, &b).ok()
    }

    /// Fixed tuples probing N1 in both directions.
    fn n1_probes(&self) -> Vec<Vec<Self::Elem>> {
        Vec::new()
    }

    /// Same instance with every anchor multiplied by `t`.
    fn with_scaled_anchors(&self, t: f64) -> Self
    where
        Self: Sized;

    fn check_shape(&self, x: &Self::Elem) -> Result<(), AlgebraError> {
        let expected = self.zero().dim();
        if x.dim() == expected {
            Ok(())
        } else {
            Err(AlgebraError::ShapeMismatch {
                expected: format!("{expected} coordinates"),
                found: format!("{} coordinates", x.dim()),
            })
        }
    }

    /// `x^k` with `x^0 = e`.
    fn power(&self, x: &Self::Elem, k: usize) -> Result<Self::Elem, AlgebraError> {
        let mut acc = self.unit();
        for _ in 0..k {
            acc = self.mul(&acc, x)?;
        }
        Ok(acc)
    }
}

/// Checked product, validating both operands first.
pub fn alg_mul<S: Scalar, A: Algebra<S>>(u: &A::Elem, v: &A::Elem, inst: &A) -> Result<A::Elem, AlgebraError> {
    inst.check_shape(u)?;
    inst.check_shape(v)?;
    inst.mul(u, v)
}

/// Default admissible anchors on a coordinate space of dimension `dim`:
/// anchor `i` (1-based) has coordinates `((j + 1) / dim)^i`, so each has
/// max-abs 1, and together with `e` and every coordinate vector they stay
/// linearly independent (Vandermonde structure).
pub fn default_anchor_coords<S: Scalar>(dim: usize, n: usize) -> Vec<Vec<S>> {
    (1..n)
        .map(|i| {
            (0..dim)
                .map(|j| {
                    let num = ((j + 1) as i64).pow(i as u32);
                    let den = (dim as i64).pow(i as u32);
                    S::from_ratio(num, den)
                })
                .collect()
        })
        .collect()
}

/// Adapter exposing an instance's literal tuple n-norm to the axiom checker.
pub struct InstanceNNorm<'a, A> {
    pub inst: &'a A,
    pub radius: f64,
}

impl<S: Scalar, A: Algebra<S>> crate::axioms::NNorm<S> for InstanceNNorm<'_, A> {
    type Elem = A::Elem;

    fn name(&self) -> String {
        self.inst.describe()
    }
    fn n(&self) -> usize {
        self.inst.n()
    }
    fn eval(&self, tuple: &[&A::Elem]) -> Result<f64, String> {
        self.inst
            .tuple_norm(tuple)
            .ok_or_else(|| format!("{} has no tuple n-norm", self.inst.describe()))
    }
    fn sample(&self, rng: &mut SampleRng) -> A::Elem {
        self.inst.random_element(rng, self.radius)
    }
    fn adversarial_tuples(&self) -> Vec<Vec<A::Elem>> {
        self.inst.n1_probes()
    }
}

/// Product of `f(e)` over tuple members, or 0 if the tuple is dependent.
pub(crate) fn max_product_tuple_norm<S: Scalar, E: Element<S>>(
    tuple: &[&E],
    tol: f64,
    magnitude: impl Fn(&E) -> f64,
) -> f64 {
    if crate::element::tuple_dependent(tuple, tol) {
        0.0
    } else {
        tuple.iter().map(|e| magnitude(e)).product()
    }
}

pub(crate) fn l1(coords: &[impl Scalar]) -> f64 {
    coords.iter().map(Scalar::abs).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::CRat;

    #[test]
    fn default_anchors_are_admissible() {
        let a = default_anchor_coords::<CRat>(4, 3);
        assert_eq!(a.len(), 2);
        for anchor in &a {
            let max = anchor.iter().map(Scalar::abs).fold(0.0, f64::max);
            assert_eq!(max, 1.0);
        }
        // Independent of e and of every coordinate vector.
        for j in 0..4 {
            let mut rows = a.clone();
            rows.push((0..4).map(|k| if k == j { CRat::one() } else { CRat::zero() }).collect());
            assert!(!crate::linalg::rows_dependent(&rows, 0.0));
        }
        let mut rows = a.clone();
        rows.push(vec![CRat::one(); 4]);
        assert!(!crate::linalg::rows_dependent(&rows, 0.0));
    }
}
