//! Adjunction of an identity: pairs `(x, a)` over a base algebra with
//! `(x, a)(y, b) = (xy + ay + bx, ab)` and unit `(0, 1)`.
//!
//! The n-norm of a pair tuple is the base n-norm of the vector parts plus
//! `|c1 c2 .. cn|`, and 0 for a dependent pair tuple. Anchors are pairs
//! `(a_i, 1)` built from the base anchors, so the algebra-level norm reads
//! `||(x, a)|| = ||x, A||_base + |a|`.
//!
//! Taken literally the formula also vanishes on some *independent* pair
//! tuples: `((0, 1), (x2, 0), .., (xn, 0))` has dependent vector parts and a
//! zero scalar product. [`Algebra::n1_probes`] exposes that tuple so the axiom
//! checker reports it.

use serde_json::{json, Value};

use super::{Algebra, AlgebraError, AlgebraKind, NormVariant, Side};
use crate::element::{tuple_dependent, Element};
use crate::sampling::{random_scalar, SampleRng};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct UnitizationElement<S: Scalar, E> {
    pub x: E,
    pub a: S,
}

impl<S: Scalar, E: Element<S>> UnitizationElement<S, E> {
    pub fn new(x: E, a: S) -> Self {
        UnitizationElement { x, a }
    }
}

impl<S: Scalar, E: Element<S>> Element<S> for UnitizationElement<S, E> {
    fn coords(&self) -> Vec<S> {
        let mut c = self.x.coords();
        c.push(self.a.clone());
        c
    }
    fn dim(&self) -> usize {
        self.x.dim() + 1
    }
    fn add(&self, other: &Self) -> Self {
        UnitizationElement::new(self.x.add(&other.x), self.a.clone() + other.a.clone())
    }
    fn scale(&self, s: &S) -> Self {
        UnitizationElement::new(self.x.scale(s), s.clone() * self.a.clone())
    }
    fn zero_like(&self) -> Self {
        UnitizationElement::new(self.x.zero_like(), S::zero())
    }
    fn is_truncated(&self) -> bool {
        self.x.is_truncated()
    }
    fn to_json(&self) -> Value {
        json!({ "x": self.x.to_json(), "a": self.a.to_json() })
    }
}

#[derive(Debug, Clone)]
pub struct Unitization<S: Scalar, A: Algebra<S>> {
    base: A,
    /// Scalar parts of the anchor pairs.
    anchor_scalars: Vec<S>,
}

type Pair<S, A> = UnitizationElement<S, <A as Algebra<S>>::Elem>;

/// The displayed product, with the base product supplied by `base`.
pub fn unitize_mul<S: Scalar, A: Algebra<S>>(
    base: &A,
    p: &Pair<S, A>,
    q: &Pair<S, A>,
) -> Result<Pair<S, A>, AlgebraError> {
    let xy = base.mul(&p.x, &q.x)?;
    let x = xy.add(&q.x.scale(&p.a)).add(&p.x.scale(&q.a));
    Ok(UnitizationElement::new(x, p.a.clone() * q.a.clone()))
}

/// Literal n-norm of a pair tuple over `base`.
pub fn unitization_n_norm<S: Scalar, A: Algebra<S>>(base: &A, tuple: &[&Pair<S, A>]) -> Option<f64> {
    if tuple_dependent(tuple, 1e-9) {
        return Some(0.0);
    }
    let parts: Vec<&A::Elem> = tuple.iter().map(|p| &p.x).collect();
    let scalar = tuple.iter().fold(S::one(), |acc, p| acc * p.a.clone());
    Some(base.tuple_norm(&parts)? + scalar.abs())
}

impl<S: Scalar, A: Algebra<S>> Unitization<S, A> {
    pub fn new(base: A) -> Self {
        let k = base.n() - 1;
        Unitization {
            base,
            anchor_scalars: vec![S::one(); k],
        }
    }

    pub fn base(&self) -> &A {
        &self.base
    }

    pub fn pair(&self, x: A::Elem, a: S) -> Pair<S, A> {
        UnitizationElement::new(x, a)
    }

    fn scalar_scale(&self) -> f64 {
        self.anchor_scalars.iter().map(Scalar::abs).product()
    }

    fn split(&self, coords: Vec<S>) -> Result<(Vec<S>, S), AlgebraError> {
        let mut coords = coords;
        let a = coords.pop().ok_or_else(|| AlgebraError::ShapeMismatch {
            expected: "at least one coordinate".into(),
            found: "none".into(),
        })?;
        Ok((coords, a))
    }
}

impl<S: Scalar, A: Algebra<S>> Algebra<S> for Unitization<S, A> {
    type Elem = Pair<S, A>;

    fn kind(&self) -> AlgebraKind {
        AlgebraKind::Unitization
    }
    fn variant(&self) -> NormVariant {
        NormVariant::UnitizationSum
    }
    fn describe(&self) -> String {
        format!("unitization({})", self.base.describe())
    }
    fn n(&self) -> usize {
        self.base.n()
    }
    fn zero(&self) -> Self::Elem {
        UnitizationElement::new(self.base.zero(), S::zero())
    }
    fn unit(&self) -> Self::Elem {
        UnitizationElement::new(self.base.zero(), S::one())
    }
    fn mul(&self, p: &Self::Elem, q: &Self::Elem) -> Result<Self::Elem, AlgebraError> {
        unitize_mul(&self.base, p, q)
    }
    fn is_commutative(&self) -> bool {
        self.base.is_commutative()
    }
    fn norm(&self, p: &Self::Elem) -> f64 {
        self.base.norm(&p.x) + p.a.abs() * self.scalar_scale()
    }
    fn tuple_norm(&self, tuple: &[&Self::Elem]) -> Option<f64> {
        unitization_n_norm(&self.base, tuple)
    }
    /// The base is unital, so `(x, a) -> (x + ae, a)` is an isomorphism onto
    /// the product algebra and `(x, a)^-1 = (-(x + ae)^-1 x / a, 1 / a)`.
    fn exact_inverse(&self, p: &Self::Elem) -> Option<Self::Elem> {
        if p.a.is_zero() {
            return None;
        }
        let shifted = p.x.add(&self.base.unit().scale(&p.a));
        let inv = self.base.exact_inverse(&shifted)?;
        let prod = self.base.mul(&inv, &p.x).ok()?;
        let inv_a = S::one() / p.a.clone();
        Some(UnitizationElement::new(prod.scale(&(-inv_a.clone())), inv_a))
    }
    fn noninvertibility_reason(&self, p: &Self::Elem) -> String {
        if p.a.is_zero() {
            return "scalar part is zero".into();
        }
        let shifted = p.x.add(&self.base.unit().scale(&p.a));
        match self.base.exact_inverse(&shifted) {
            Some(_) => "invertible".into(),
            None => format!("x + ae is not invertible: {}", self.base.noninvertibility_reason(&shifted)),
        }
    }
    fn basis(&self) -> Vec<Self::Elem> {
        let mut out: Vec<Self::Elem> = self
            .base
            .basis()
            .into_iter()
            .map(|b| UnitizationElement::new(b, S::zero()))
            .collect();
        out.push(self.unit());
        out
    }
    fn from_coords(&self, coords: Vec<S>) -> Result<Self::Elem, AlgebraError> {
        let (x, a) = self.split(coords)?;
        Ok(UnitizationElement::new(self.base.from_coords(x)?, a))
    }
    fn random_element(&self, rng: &mut SampleRng, radius: f64) -> Self::Elem {
        let x = self.base.random_element(rng, radius);
        UnitizationElement::new(x, random_scalar(rng, radius))
    }
    fn annihilator_candidate(&self, z: &Self::Elem) -> Option<(Self::Elem, Side)> {
        if z.a.is_zero() {
            // (x, 0)(-e, 1) = (-x + x, 0)
            let w = UnitizationElement::new(self.base.unit().scale(&-S::one()), S::one());
            return Some((w, Side::Left));
        }
        let shifted = z.x.add(&self.base.unit().scale(&z.a));
        let (w, side) = self.base.annihilator_candidate(&shifted)?;
        Some((UnitizationElement::new(w, S::zero()), side))
    }
    fn n1_probes(&self) -> Vec<Vec<Self::Elem>> {
        let Some(anchors) = self.base.anchor_elements() else {
            return Vec::new();
        };
        let mut probe = vec![self.unit()];
        probe.extend(anchors.into_iter().map(|x| UnitizationElement::new(x, S::zero())));
        vec![probe]
    }
    fn anchor_elements(&self) -> Option<Vec<Self::Elem>> {
        let xs = self.base.anchor_elements()?;
        Some(xs.into_iter().zip(&self.anchor_scalars).map(|(x, b)| UnitizationElement::new(x, b.clone())).collect())
    }
    fn with_scaled_anchors(&self, t: f64) -> Self {
        let factor = S::from_real(t);
        Unitization {
            base: self.base.with_scaled_anchors(t),
            anchor_scalars: self.anchor_scalars.iter().map(|b| b.clone() * factor.clone()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::pointwise::{PointwiseAlgebra, PointwiseElement};
    use crate::scalar::{CRat, C64};

    fn pe(v: &[f64]) -> PointwiseElement<C64> {
        PointwiseElement::from_f64(v)
    }

    #[test]
    fn displayed_product() {
        let u = Unitization::new(PointwiseAlgebra::<C64>::new(2, 2).unwrap());
        let p = u.pair(pe(&[1.0, 0.0]), C64::new(2.0, 0.0));
        let q = u.pair(pe(&[0.0, 1.0]), C64::new(3.0, 0.0));
        let r = u.mul(&p, &q).unwrap();
        assert_eq!(r, u.pair(pe(&[3.0, 2.0]), C64::new(6.0, 0.0)));
        assert_eq!(u.mul(&p, &u.unit()).unwrap(), p);
        assert_eq!(u.mul(&u.unit(), &p).unwrap(), p);
        let theta = u.zero();
        assert_eq!(u.mul(&theta, &q).unwrap(), theta);
    }

    #[test]
    fn unit_has_norm_one_and_inverse_roundtrips() {
        let u = Unitization::new(PointwiseAlgebra::<CRat>::new(3, 2).unwrap());
        assert_eq!(u.norm(&u.unit()), 1.0);
        let p = u.pair(
            PointwiseElement::new(vec![CRat::from_ratio(1, 1), CRat::from_ratio(-1, 2), CRat::from_ratio(3, 1)]),
            CRat::from_ratio(2, 1),
        );
        let inv = u.exact_inverse(&p).unwrap();
        assert_eq!(u.mul(&p, &inv).unwrap(), u.unit());
        assert_eq!(u.mul(&inv, &p).unwrap(), u.unit());
        // x + ae = (3, 3/2, 5) is invertible; make it singular.
        let q = u.pair(
            PointwiseElement::new(vec![CRat::from_ratio(-2, 1), CRat::zero(), CRat::zero()]),
            CRat::from_ratio(2, 1),
        );
        assert!(u.exact_inverse(&q).is_none());
        let (w, side) = u.annihilator_candidate(&q).unwrap();
        let prod = match side {
            Side::Left => u.mul(&q, &w).unwrap(),
            Side::Right => u.mul(&w, &q).unwrap(),
        };
        assert!(prod.is_zero());
        assert!(!w.is_zero());
    }

    #[test]
    fn literal_norm_on_probe_is_zero() {
        let u = Unitization::new(PointwiseAlgebra::<CRat>::new(3, 3).unwrap());
        let probe = &u.n1_probes()[0];
        let refs: Vec<_> = probe.iter().collect();
        assert!(!tuple_dependent(&refs, 0.0));
        assert_eq!(u.tuple_norm(&refs), Some(0.0));
    }

    #[test]
    fn base_independent_tuple_with_zero_scalars() {
        let base = PointwiseAlgebra::<C64>::new(3, 2).unwrap();
        let u = Unitization::new(base.clone());
        let x = pe(&[0.5, 0.25, 0.0]);
        let a2 = base.anchors().anchors()[0].clone();
        let p1 = u.pair(x.clone(), C64::new(0.0, 0.0));
        let p2 = u.pair(a2.clone(), C64::new(0.0, 0.0));
        let expect = base.tuple_norm(&[&x, &a2]).unwrap();
        assert_eq!(u.tuple_norm(&[&p1, &p2]), Some(expect));
    }

    #[test]
    fn submultiplicative_on_sample() {
        let u = Unitization::new(PointwiseAlgebra::<C64>::new(4, 3).unwrap());
        let mut r = crate::sampling::rng(5);
        for _ in 0..50 {
            let p = u.random_element(&mut r, 2.0);
            let q = u.random_element(&mut r, 2.0);
            let lhs = u.norm(&u.mul(&p, &q).unwrap());
            assert!(lhs <= u.norm(&p) * u.norm(&q) * (1.0 + 1e-12));
        }
    }
}
