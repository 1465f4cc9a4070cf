use std::fmt::Debug;

use serde_json::Value;

use crate::scalar::Scalar;

/// A point of a finite-dimensional complex vector space with a fixed coordinate
/// representation. Linear dependence of tuples is decided on [`Element::coords`].
pub trait Element<S: Scalar>: Clone + Debug + PartialEq + Send + Sync {
    /// Flattened coordinates in a fixed basis.
    fn coords(&self) -> Vec<S>;
    fn dim(&self) -> usize;
    fn add(&self, other: &Self) -> Self;
    fn scale(&self, a: &S) -> Self;
    fn zero_like(&self) -> Self;
    fn to_json(&self) -> Value;

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-S::one()))
    }

    fn is_zero(&self) -> bool {
        self.coords().iter().all(Scalar::is_zero)
    }

    /// Set when a product on the way to this element dropped nonzero terms.
    fn is_truncated(&self) -> bool {
        false
    }

    /// Largest coordinate modulus.
    fn max_abs(&self) -> f64 {
        self.coords().iter().map(Scalar::abs).fold(0.0, f64::max)
    }
}

pub fn scalars_to_json<S: Scalar>(values: &[S]) -> Value {
    serde_json::to_value(values.iter().map(Scalar::to_json).collect::<Vec<_>>())
        .expect("scalar serialization is infallible")
}

/// Linear dependence of a tuple of elements.
pub fn tuple_dependent<S: Scalar, E: Element<S>>(tuple: &[&E], tol: f64) -> bool {
    let rows: Vec<Vec<S>> = tuple.iter().map(|e| e.coords()).collect();
    crate::linalg::rows_dependent(&rows, tol)
}
