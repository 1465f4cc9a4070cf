//! Polynomials as power series truncated at a fixed degree `D`.
//!
//! The product is the Cauchy convolution `c_k = a_0 b_k + ... + a_k b_0`
//! for `k <= D`; anything above degree `D` is discarded and, when nonzero,
//! raises the element's truncation flag. Two n-norms are offered: the
//! max-product of coefficient moduli, which is *not* submultiplicative, and
//! the product of coefficient l1 norms, which is.

use serde_json::{json, Value};

use super::{default_anchor_coords, l1, max_product_tuple_norm, Algebra, AlgebraError, AlgebraKind, NormVariant, Side};
use crate::element::{scalars_to_json, tuple_dependent, Element};
use crate::nnorm::AnchorTuple;
use crate::sampling::{random_vec, SampleRng};
use crate::scalar::Scalar;

pub const DEFAULT_DEGREE: usize = 32;

#[derive(Debug, Clone)]
pub struct TruncatedSeries<S: Scalar> {
    /// Coefficient of `t^j` at index `j`; length `D + 1`.
    pub coeffs: Vec<S>,
    /// Set once any product on the way here dropped a nonzero term.
    pub truncated: bool,
}

impl<S: Scalar> PartialEq for TruncatedSeries<S> {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs
    }
}

impl<S: Scalar> TruncatedSeries<S> {
    pub fn new(coeffs: Vec<S>) -> Self {
        TruncatedSeries {
            coeffs,
            truncated: false,
        }
    }

    /// Pads `low` (lowest degree first) with zeros up to degree `degree`.
    pub fn from_f64(low: &[f64], degree: usize) -> Self {
        let mut coeffs: Vec<S> = low.iter().map(|&c| S::from_real(c)).collect();
        coeffs.resize(degree + 1, S::zero());
        TruncatedSeries::new(coeffs)
    }

    pub fn monomial(k: usize, degree: usize) -> Self {
        let mut coeffs = vec![S::zero(); degree + 1];
        coeffs[k] = S::one();
        TruncatedSeries::new(coeffs)
    }

    pub fn degree_cap(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Index of the first nonzero coefficient.
    pub fn valuation(&self, tol: f64) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_negligible(tol))
    }
}

impl<S: Scalar> Element<S> for TruncatedSeries<S> {
    fn coords(&self) -> Vec<S> {
        self.coeffs.clone()
    }
    fn dim(&self) -> usize {
        self.coeffs.len()
    }
    fn add(&self, other: &Self) -> Self {
        TruncatedSeries {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
            truncated: self.truncated || other.truncated,
        }
    }
    fn scale(&self, a: &S) -> Self {
        TruncatedSeries {
            coeffs: self.coeffs.iter().map(|z| a.clone() * z.clone()).collect(),
            truncated: self.truncated,
        }
    }
    fn zero_like(&self) -> Self {
        TruncatedSeries::new(vec![S::zero(); self.coeffs.len()])
    }
    fn is_truncated(&self) -> bool {
        self.truncated
    }
    fn to_json(&self) -> Value {
        if self.truncated {
            json!({ "coeffs": scalars_to_json(&self.coeffs), "truncated": true })
        } else {
            scalars_to_json(&self.coeffs)
        }
    }
}

/// Truncated Cauchy product; the flag reports a dropped nonzero term.
pub fn convolve<S: Scalar>(a: &[S], b: &[S]) -> (Vec<S>, bool) {
    let len = a.len();
    let mut out = vec![S::zero(); len];
    let mut dropped = false;
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            if bj.is_zero() {
                continue;
            }
            let term = ai.clone() * bj.clone();
            if i + j < len {
                out[i + j] = out[i + j].clone() + term;
            } else {
                dropped = true;
            }
        }
    }
    // A dropped term may still cancel with another dropped term; recheck the
    // discarded band exactly.
    if dropped {
        dropped = (len..2 * len - 1).any(|k| {
            let lo = k.saturating_sub(len - 1);
            let s = (lo..len).filter(|&i| k - i < len).fold(S::zero(), |acc, i| acc + a[i].clone() * b[k - i].clone());
            !s.is_zero()
        });
    }
    (out, dropped)
}

#[derive(Debug, Clone)]
pub struct SeriesAlgebra<S: Scalar> {
    degree: usize,
    variant: NormVariant,
    anchors: AnchorTuple<TruncatedSeries<S>>,
    anchor_scale: f64,
    tol: f64,
}

impl<S: Scalar> SeriesAlgebra<S> {
    /// Degree cap `degree`, default admissible anchors for an n-norm.
    pub fn new(degree: usize, n: usize, variant: NormVariant) -> Result<Self, AlgebraError> {
        Self::with_anchors(degree, default_anchor_coords(degree + 1, n), variant, true)
    }

    pub fn with_anchors(
        degree: usize,
        anchors: Vec<Vec<S>>,
        variant: NormVariant,
        normalize: bool,
    ) -> Result<Self, AlgebraError> {
        if !matches!(variant, NormVariant::Eq21MaxProduct | NormVariant::L1Corrected) {
            return Err(AlgebraError::Invalid(format!("{variant:?} is not a series norm")));
        }
        let n = anchors.len() + 1;
        if n < 2 {
            return Err(AlgebraError::Invalid("need at least one anchor (n >= 2)".into()));
        }
        if degree + 1 < n {
            return Err(AlgebraError::Invalid(format!(
                "degree cap {degree} gives dimension {} below n = {n}",
                degree + 1
            )));
        }
        let mut elems = Vec::new();
        for mut a in anchors {
            if a.len() > degree + 1 {
                return Err(AlgebraError::ShapeMismatch {
                    expected: format!("at most {} coefficients", degree + 1),
                    found: format!("{} coefficients", a.len()),
                });
            }
            a.resize(degree + 1, S::zero());
            elems.push(TruncatedSeries::new(a));
        }
        if normalize {
            elems = elems
                .into_iter()
                .map(|e| match variant {
                    NormVariant::L1Corrected => normalize_l1(e),
                    _ => super::pointwise::normalize_max_abs(e),
                })
                .collect();
        }
        let refs: Vec<&TruncatedSeries<S>> = elems.iter().collect();
        if tuple_dependent(&refs, 1e-9) {
            return Err(AlgebraError::DependentAnchors);
        }
        let mut alg = SeriesAlgebra {
            degree,
            variant,
            anchors: AnchorTuple::from_parts(elems, normalize),
            anchor_scale: 1.0,
            tol: 1e-12,
        };
        alg.anchor_scale = alg.anchors.iter().map(|a| alg.magnitude(a)).product();
        Ok(alg)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn anchors(&self) -> &AnchorTuple<TruncatedSeries<S>> {
        &self.anchors
    }

    /// Per-element factor of the n-norm product.
    pub fn magnitude(&self, e: &TruncatedSeries<S>) -> f64 {
        match self.variant {
            NormVariant::L1Corrected => l1(&e.coeffs),
            _ => e.max_abs(),
        }
    }

    pub fn series(&self, low: &[f64]) -> TruncatedSeries<S> {
        TruncatedSeries::from_f64(low, self.degree)
    }
}

fn normalize_l1<S: Scalar>(e: TruncatedSeries<S>) -> TruncatedSeries<S> {
    let coeffs = &e.coeffs;
    let real_or_imag = coeffs.iter().all(|c| c.abs_scalar().abs() == c.abs());
    let total = if S::is_exact() && real_or_imag {
        coeffs.iter().fold(S::zero(), |acc, c| acc + c.abs_scalar())
    } else {
        S::from_real(l1(coeffs))
    };
    if total.is_zero() {
        return e;
    }
    e.scale(&(S::one() / total))
}

/// Eq. (2.1)-style n-norm: product of max-abs coefficients over an
/// independent tuple, 0 for a dependent one.
pub fn eq21_n_norm<S: Scalar>(x1: &TruncatedSeries<S>, anchors: &AnchorTuple<TruncatedSeries<S>>) -> f64 {
    let mut tuple = vec![x1];
    tuple.extend(anchors.iter());
    max_product_tuple_norm(&tuple, 1e-9, Element::max_abs)
}

/// Product of coefficient l1 norms over an independent tuple, 0 otherwise.
pub fn l1_n_norm<S: Scalar>(x1: &TruncatedSeries<S>, anchors: &AnchorTuple<TruncatedSeries<S>>) -> f64 {
    let mut tuple = vec![x1];
    tuple.extend(anchors.iter());
    max_product_tuple_norm(&tuple, 1e-9, |e: &TruncatedSeries<S>| l1(&e.coeffs))
}

impl<S: Scalar> Algebra<S> for SeriesAlgebra<S> {
    type Elem = TruncatedSeries<S>;

    fn kind(&self) -> AlgebraKind {
        AlgebraKind::TruncatedSeries
    }
    fn variant(&self) -> NormVariant {
        self.variant
    }
    fn describe(&self) -> String {
        let v = match self.variant {
            NormVariant::L1Corrected => "l1_corrected",
            _ => "eq21_max_product",
        };
        format!("truncated_series(D={}, n={}, {v})", self.degree, self.n())
    }
    fn n(&self) -> usize {
        self.anchors.n()
    }
    fn zero(&self) -> Self::Elem {
        TruncatedSeries::new(vec![S::zero(); self.degree + 1])
    }
    fn unit(&self) -> Self::Elem {
        TruncatedSeries::monomial(0, self.degree)
    }
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem, AlgebraError> {
        self.check_shape(a)?;
        self.check_shape(b)?;
        let (coeffs, dropped) = convolve(&a.coeffs, &b.coeffs);
        Ok(TruncatedSeries {
            coeffs,
            truncated: dropped || a.truncated || b.truncated,
        })
    }
    fn is_commutative(&self) -> bool {
        true
    }
    fn norm(&self, x: &Self::Elem) -> f64 {
        self.magnitude(x) * self.anchor_scale
    }
    fn tuple_norm(&self, tuple: &[&Self::Elem]) -> Option<f64> {
        Some(max_product_tuple_norm(tuple, 1e-9, |e| self.magnitude(e)))
    }
    fn exact_inverse(&self, x: &Self::Elem) -> Option<Self::Elem> {
        let c0 = x.coeffs[0].clone();
        if c0.is_negligible(self.tol) {
            return None;
        }
        // b_0 = 1/c_0, b_k = -(c_1 b_{k-1} + ... + c_k b_0) / c_0
        let mut inv: Vec<S> = Vec::with_capacity(self.degree + 1);
        inv.push(S::one() / c0.clone());
        for k in 1..=self.degree {
            let s = (1..=k).fold(S::zero(), |acc, j| acc + x.coeffs[j].clone() * inv[k - j].clone());
            inv.push(-s / c0.clone());
        }
        Some(TruncatedSeries::new(inv))
    }
    fn noninvertibility_reason(&self, x: &Self::Elem) -> String {
        if x.coeffs[0].is_negligible(self.tol) {
            "constant term is zero".into()
        } else {
            "invertible".into()
        }
    }
    fn basis(&self) -> Vec<Self::Elem> {
        (0..=self.degree).map(|k| TruncatedSeries::monomial(k, self.degree)).collect()
    }
    fn from_coords(&self, coords: Vec<S>) -> Result<Self::Elem, AlgebraError> {
        let e = TruncatedSeries::new(coords);
        self.check_shape(&e)?;
        Ok(e)
    }
    fn random_element(&self, rng: &mut SampleRng, radius: f64) -> Self::Elem {
        // Random polynomials of low degree keep products inside the cap.
        let d = (self.degree / 4).max(1);
        let mut coeffs = random_vec(rng, d + 1, radius);
        coeffs.resize(self.degree + 1, S::zero());
        TruncatedSeries::new(coeffs)
    }
    fn annihilator_candidate(&self, z: &Self::Elem) -> Option<(Self::Elem, Side)> {
        // z = t^v u with u invertible, so t^(D+1-v) is killed by truncation.
        let v = z.valuation(self.tol).unwrap_or(0);
        let k = if v == 0 { self.degree } else { self.degree + 1 - v };
        Some((TruncatedSeries::monomial(k, self.degree), Side::Left))
    }
    fn anchor_elements(&self) -> Option<Vec<Self::Elem>> {
        Some(self.anchors.anchors().to_vec())
    }
    fn with_scaled_anchors(&self, t: f64) -> Self {
        let factor = S::from_real(t);
        let anchors: Vec<_> = self.anchors.iter().map(|a| a.scale(&factor)).collect();
        let mut alg = SeriesAlgebra {
            degree: self.degree,
            variant: self.variant,
            anchors: AnchorTuple::from_parts(anchors, t == 1.0 && self.anchors.is_normalized()),
            anchor_scale: 1.0,
            tol: self.tol,
        };
        alg.anchor_scale = alg.anchors.iter().map(|a| alg.magnitude(a)).product();
        alg
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{CRat, C64};

    fn anchors_of(list: &[&[f64]], degree: usize) -> Vec<Vec<C64>> {
        list.iter()
            .map(|a| TruncatedSeries::<C64>::from_f64(a, degree).coeffs)
            .collect()
    }

    /// Independent oracle: schoolbook product without truncation.
    fn full_product(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    #[test]
    fn square_of_one_plus_t() {
        let alg = SeriesAlgebra::<C64>::new(4, 2, NormVariant::Eq21MaxProduct).unwrap();
        let x = alg.series(&[1.0, 1.0]);
        let p = alg.mul(&x, &x).unwrap();
        let oracle = full_product(&[1.0, 1.0], &[1.0, 1.0]);
        assert_eq!(p, alg.series(&oracle));
        assert!(!p.truncated);
    }

    #[test]
    fn truncation_is_flagged() {
        let alg = SeriesAlgebra::<CRat>::new(3, 2, NormVariant::L1Corrected).unwrap();
        let t2 = TruncatedSeries::monomial(2, 3);
        let p = alg.mul(&t2, &t2).unwrap();
        assert!(p.is_zero());
        assert!(p.truncated);
        let q = alg.mul(&TruncatedSeries::monomial(1, 3), &t2).unwrap();
        assert!(!q.truncated);
    }

    #[test]
    fn eq21_examples() {
        let d = 4;
        let a = SeriesAlgebra::<C64>::with_anchors(d, anchors_of(&[&[0.0, 0.0, 1.0]], d), NormVariant::Eq21MaxProduct, true)
            .unwrap();
        assert_eq!(eq21_n_norm(&a.series(&[1.0, 2.0]), a.anchors()), 2.0);
        let b = SeriesAlgebra::<C64>::with_anchors(d, anchors_of(&[&[0.0, 1.0]], d), NormVariant::Eq21MaxProduct, true)
            .unwrap();
        assert_eq!(eq21_n_norm(&b.series(&[0.0, 2.0]), b.anchors()), 0.0);
        let c = SeriesAlgebra::<C64>::with_anchors(
            d,
            anchors_of(&[&[0.0, 1.0], &[0.0, 0.0, 1.0]], d),
            NormVariant::Eq21MaxProduct,
            true,
        )
        .unwrap();
        assert_eq!(eq21_n_norm(&c.series(&[3.0]), c.anchors()), 3.0);
    }

    #[test]
    fn l1_examples() {
        let d = 4;
        let a = SeriesAlgebra::<C64>::with_anchors(d, anchors_of(&[&[0.0, 0.0, 1.0]], d), NormVariant::L1Corrected, true)
            .unwrap();
        let x = a.series(&[1.0, 1.0]);
        assert_eq!(l1_n_norm(&x, a.anchors()), 2.0);
        let sq = a.mul(&x, &x).unwrap();
        assert_eq!(l1_n_norm(&sq, a.anchors()), 4.0);
        assert!(l1_n_norm(&sq, a.anchors()) <= l1_n_norm(&x, a.anchors()).powi(2));
        assert_eq!(l1_n_norm(&a.anchors().anchors()[0].scale(&C64::new(2.0, 0.0)), a.anchors()), 0.0);
    }

    #[test]
    fn inverse_of_one_plus_t_alternates() {
        let alg = SeriesAlgebra::<CRat>::new(8, 2, NormVariant::L1Corrected).unwrap();
        let x = TruncatedSeries::new({
            let mut c = vec![CRat::zero(); 9];
            c[0] = CRat::one();
            c[1] = CRat::one();
            c
        });
        let inv = alg.exact_inverse(&x).unwrap();
        for (k, c) in inv.coeffs.iter().enumerate() {
            let expect = if k % 2 == 0 { CRat::one() } else { -CRat::one() };
            assert_eq!(*c, expect);
        }
        assert_eq!(alg.mul(&x, &inv).unwrap(), alg.unit());
        assert!(alg.exact_inverse(&TruncatedSeries::monomial(1, 8)).is_none());
    }

    #[test]
    fn rejects_foreign_variant() {
        assert!(SeriesAlgebra::<C64>::new(4, 2, NormVariant::SupCoordinate).is_err());
    }
}
