//! Coordinatewise algebra C^m. Its characters are exactly the coordinate
//! projections, which makes it the brute-force ground for the invertibility
//! and homomorphism oracles.

use serde_json::Value;

use super::{default_anchor_coords, max_product_tuple_norm, Algebra, AlgebraError, AlgebraKind, NormVariant, Side};
use crate::element::{scalars_to_json, tuple_dependent, Element};
use crate::nnorm::AnchorTuple;
use crate::sampling::{random_vec, SampleRng};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseElement<S: Scalar> {
    pub coords: Vec<S>,
}

impl<S: Scalar> PointwiseElement<S> {
    pub fn new(coords: Vec<S>) -> Self {
        PointwiseElement { coords }
    }

    pub fn from_f64(values: &[f64]) -> Self {
        PointwiseElement::new(values.iter().map(|&v| S::from_real(v)).collect())
    }
}

impl<S: Scalar> Element<S> for PointwiseElement<S> {
    fn coords(&self) -> Vec<S> {
        self.coords.clone()
    }
    fn dim(&self) -> usize {
        self.coords.len()
    }
    fn add(&self, other: &Self) -> Self {
        PointwiseElement::new(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        )
    }
    fn scale(&self, a: &S) -> Self {
        PointwiseElement::new(self.coords.iter().map(|z| a.clone() * z.clone()).collect())
    }
    fn zero_like(&self) -> Self {
        PointwiseElement::new(vec![S::zero(); self.coords.len()])
    }
    fn to_json(&self) -> Value {
        scalars_to_json(&self.coords)
    }
}

#[derive(Debug, Clone)]
pub struct PointwiseAlgebra<S: Scalar> {
    m: usize,
    anchors: AnchorTuple<PointwiseElement<S>>,
    anchor_scale: f64,
    tol: f64,
}

impl<S: Scalar> PointwiseAlgebra<S> {
    /// C^m with the default admissible anchors for an n-norm.
    pub fn new(m: usize, n: usize) -> Result<Self, AlgebraError> {
        Self::with_anchors(m, default_anchor_coords(m, n), true)
    }

    /// Custom anchors; `normalize` rescales each to max-abs 1.
    pub fn with_anchors(m: usize, anchors: Vec<Vec<S>>, normalize: bool) -> Result<Self, AlgebraError> {
        let n = anchors.len() + 1;
        if n < 2 {
            return Err(AlgebraError::Invalid("need at least one anchor (n >= 2)".into()));
        }
        if m < n {
            return Err(AlgebraError::Invalid(format!("dimension {m} is below n = {n}")));
        }
        let mut elems = Vec::with_capacity(anchors.len());
        for a in anchors {
            if a.len() != m {
                return Err(AlgebraError::ShapeMismatch {
                    expected: format!("{m} coordinates"),
                    found: format!("{} coordinates", a.len()),
                });
            }
            elems.push(PointwiseElement::new(a));
        }
        if normalize {
            elems = elems.into_iter().map(normalize_max_abs).collect();
        }
        let refs: Vec<&PointwiseElement<S>> = elems.iter().collect();
        if tuple_dependent(&refs, 1e-9) {
            return Err(AlgebraError::DependentAnchors);
        }
        let anchor_scale = elems.iter().map(Element::max_abs).product();
        let normalized = normalize || elems.iter().all(|a| (a.max_abs() - 1.0).abs() < 1e-12);
        Ok(PointwiseAlgebra {
            m,
            anchors: AnchorTuple::from_parts(elems, normalized),
            anchor_scale,
            tol: 1e-12,
        })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn anchors(&self) -> &AnchorTuple<PointwiseElement<S>> {
        &self.anchors
    }

    pub fn element(&self, coords: Vec<S>) -> PointwiseElement<S> {
        PointwiseElement::new(coords)
    }
}

/// Divides by the largest coordinate modulus (exactly, when that coordinate
/// is real or imaginary).
pub(crate) fn normalize_max_abs<S: Scalar, E: Element<S>>(e: E) -> E {
    let coords = e.coords();
    let Some(top) = coords
        .iter()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .filter(|z| !z.is_zero())
    else {
        return e;
    };
    e.scale(&(S::one() / top.abs_scalar()))
}

/// `sup_n_norm`: product of max-abs coordinates for independent tuples.
pub fn sup_n_norm<S: Scalar>(x1: &PointwiseElement<S>, anchors: &AnchorTuple<PointwiseElement<S>>) -> f64 {
    let mut tuple = vec![x1];
    tuple.extend(anchors.iter());
    max_product_tuple_norm(&tuple, 1e-9, Element::max_abs)
}

impl<S: Scalar> Algebra<S> for PointwiseAlgebra<S> {
    type Elem = PointwiseElement<S>;

    fn kind(&self) -> AlgebraKind {
        AlgebraKind::Pointwise
    }
    fn variant(&self) -> NormVariant {
        NormVariant::SupCoordinate
    }
    fn describe(&self) -> String {
        format!("pointwise(C^{}, n={}, sup_coordinate)", self.m, self.n())
    }
    fn n(&self) -> usize {
        self.anchors.n()
    }
    fn zero(&self) -> Self::Elem {
        PointwiseElement::new(vec![S::zero(); self.m])
    }
    fn unit(&self) -> Self::Elem {
        PointwiseElement::new(vec![S::one(); self.m])
    }
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem, AlgebraError> {
        self.check_shape(a)?;
        self.check_shape(b)?;
        Ok(PointwiseElement::new(
            a.coords
                .iter()
                .zip(&b.coords)
                .map(|(x, y)| x.clone() * y.clone())
                .collect(),
        ))
    }
    fn is_commutative(&self) -> bool {
        true
    }
    fn norm(&self, x: &Self::Elem) -> f64 {
        x.max_abs() * self.anchor_scale
    }
    fn tuple_norm(&self, tuple: &[&Self::Elem]) -> Option<f64> {
        Some(max_product_tuple_norm(tuple, 1e-9, Element::max_abs))
    }
    fn exact_inverse(&self, x: &Self::Elem) -> Option<Self::Elem> {
        if x.coords.iter().any(|z| z.is_negligible(self.tol)) {
            return None;
        }
        Some(PointwiseElement::new(
            x.coords.iter().map(|z| S::one() / z.clone()).collect(),
        ))
    }
    fn noninvertibility_reason(&self, x: &Self::Elem) -> String {
        match x.coords.iter().position(|z| z.is_negligible(self.tol)) {
            Some(j) => format!("coordinate {j} is zero"),
            None => "invertible".into(),
        }
    }
    fn basis(&self) -> Vec<Self::Elem> {
        (0..self.m)
            .map(|i| PointwiseElement::new((0..self.m).map(|j| if i == j { S::one() } else { S::zero() }).collect()))
            .collect()
    }
    fn from_coords(&self, coords: Vec<S>) -> Result<Self::Elem, AlgebraError> {
        let e = PointwiseElement::new(coords);
        self.check_shape(&e)?;
        Ok(e)
    }
    fn random_element(&self, rng: &mut SampleRng, radius: f64) -> Self::Elem {
        PointwiseElement::new(random_vec(rng, self.m, radius))
    }
    fn annihilator_candidate(&self, z: &Self::Elem) -> Option<(Self::Elem, Side)> {
        let j = z
            .coords
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(j, _)| j)?;
        Some((self.basis().swap_remove(j), Side::Left))
    }
    fn anchor_elements(&self) -> Option<Vec<Self::Elem>> {
        Some(self.anchors.anchors().to_vec())
    }
    fn with_scaled_anchors(&self, t: f64) -> Self {
        let factor = S::from_real(t);
        let anchors: Vec<_> = self.anchors.iter().map(|a| a.scale(&factor)).collect();
        let anchor_scale = anchors.iter().map(Element::max_abs).product();
        PointwiseAlgebra {
            m: self.m,
            anchors: AnchorTuple::from_parts(anchors, t == 1.0 && self.anchors.is_normalized()),
            anchor_scale,
            tol: self.tol,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{CRat, C64};

    #[test]
    fn product_is_coordinatewise() {
        let alg = PointwiseAlgebra::<C64>::new(3, 2).unwrap();
        let p = alg
            .mul(&PointwiseElement::from_f64(&[1.0, 2.0, 3.0]), &PointwiseElement::from_f64(&[4.0, 5.0, 6.0]))
            .unwrap();
        assert_eq!(p, PointwiseElement::from_f64(&[4.0, 10.0, 18.0]));
        let bad = PointwiseElement::from_f64(&[1.0, 2.0]);
        assert!(matches!(alg.mul(&bad, &alg.unit()), Err(AlgebraError::ShapeMismatch { .. })));
    }

    #[test]
    fn sup_norm_examples() {
        let alg = PointwiseAlgebra::<CRat>::new(3, 3).unwrap();
        let x = PointwiseElement::new(vec![CRat::from_ratio(1, 2), CRat::from_ratio(1, 4), CRat::from_ratio(1, 10)]);
        assert_eq!(sup_n_norm(&x, alg.anchors()), 0.5);
        assert_eq!(sup_n_norm(&alg.unit(), alg.anchors()), 1.0);
        assert_eq!(alg.norm(&x), 0.5);
        let dep = alg.anchors().anchors()[0].scale(&CRat::from_ratio(3, 1));
        assert_eq!(sup_n_norm(&dep, alg.anchors()), 0.0);
    }

    #[test]
    fn custom_anchors_are_normalized_and_checked() {
        let alg = PointwiseAlgebra::<CRat>::with_anchors(
            3,
            vec![vec![CRat::from_ratio(0, 1), CRat::from_ratio(4, 1), CRat::from_ratio(-2, 1)]],
            true,
        )
        .unwrap();
        assert_eq!(alg.anchors().anchors()[0].max_abs(), 1.0);
        assert!(alg.anchors().is_normalized());
        let dep = PointwiseAlgebra::<CRat>::with_anchors(
            3,
            vec![
                vec![CRat::from_ratio(1, 1), CRat::from_ratio(0, 1), CRat::from_ratio(0, 1)],
                vec![CRat::from_ratio(2, 1), CRat::from_ratio(0, 1), CRat::from_ratio(0, 1)],
            ],
            true,
        );
        assert_eq!(dep.unwrap_err(), AlgebraError::DependentAnchors);
        assert!(PointwiseAlgebra::<C64>::new(2, 3).is_err());
    }

    #[test]
    fn inverse_rule() {
        let alg = PointwiseAlgebra::<CRat>::new(3, 2).unwrap();
        let x = PointwiseElement::new(vec![CRat::from_ratio(1, 1), CRat::from_ratio(2, 1), CRat::from_ratio(3, 1)]);
        let inv = alg.exact_inverse(&x).unwrap();
        assert_eq!(inv.coords[2], CRat::from_ratio(1, 3));
        let z = PointwiseElement::new(vec![CRat::zero(), CRat::one(), CRat::one()]);
        assert!(alg.exact_inverse(&z).is_none());
        assert_eq!(alg.noninvertibility_reason(&z), "coordinate 0 is zero");
    }
}
