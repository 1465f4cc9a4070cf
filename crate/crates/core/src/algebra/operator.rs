//! b-bounded operators on C^d with the Gram n-norm.
//!
//! For anchors `A = (b2, .., bn)` the Gram n-norm factors as
//! `||x, A|| = dist(x, span A) * vol(A)`, so the volume cancels in
//! `||Tx, A|| / ||x, A||`. The ratio stays bounded exactly when `T` maps
//! `span A` into itself, and then the supremum is the spectral norm of the
//! compression `Q* T Q`, where `Q` is an orthonormal basis of the orthogonal
//! complement `W` of `span A`. This holds for any independent anchors.
//!
//! The b-norm is a seminorm on the invariant operators: anything mapping all of
//! `C^d` into `span A` has norm 0. Compression `T -> T_WW` is an algebra
//! homomorphism, so products and Neumann residuals measured in it stay sound.

use serde::Serialize;
use serde_json::Value;

use super::{Algebra, AlgebraError, AlgebraKind, NormVariant, Side};
use crate::element::{scalars_to_json, Element};
use crate::linalg::{self, Rows};
use crate::nnorm::{gram_n_norm, AnchorTuple, Vector};
use crate::sampling::{random_scalar, random_vec, rng, SampleRng};
use crate::scalar::{Scalar, C64};

pub const DEFAULT_SAMPLE_BUDGET: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorElement<S: Scalar> {
    pub d: usize,
    /// Row-major entries, `d * d` of them.
    pub entries: Vec<S>,
}

impl<S: Scalar> OperatorElement<S> {
    pub fn from_rows(rows: &Rows<S>) -> Self {
        OperatorElement {
            d: rows.len(),
            entries: rows.iter().flatten().cloned().collect(),
        }
    }

    pub fn from_f64(rows: &[&[f64]]) -> Self {
        let rows: Rows<S> = rows.iter().map(|r| r.iter().map(|&v| S::from_real(v)).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn identity(d: usize) -> Self {
        Self::diagonal(&vec![S::one(); d])
    }

    pub fn diagonal(diag: &[S]) -> Self {
        let d = diag.len();
        let mut entries = vec![S::zero(); d * d];
        for (i, v) in diag.iter().enumerate() {
            entries[i * d + i] = v.clone();
        }
        OperatorElement { d, entries }
    }

    pub fn rows(&self) -> Rows<S> {
        self.entries.chunks(self.d).map(<[S]>::to_vec).collect()
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.entries[i * self.d + j]
    }

    pub fn apply(&self, x: &[S]) -> Vec<S> {
        self.entries
            .chunks(self.d)
            .map(|row| row.iter().zip(x).fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone()))
            .collect()
    }
}

impl<S: Scalar> Element<S> for OperatorElement<S> {
    fn coords(&self) -> Vec<S> {
        self.entries.clone()
    }
    fn dim(&self) -> usize {
        self.entries.len()
    }
    fn add(&self, other: &Self) -> Self {
        OperatorElement {
            d: self.d,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        }
    }
    fn scale(&self, a: &S) -> Self {
        OperatorElement {
            d: self.d,
            entries: self.entries.iter().map(|z| a.clone() * z.clone()).collect(),
        }
    }
    fn zero_like(&self) -> Self {
        OperatorElement {
            d: self.d,
            entries: vec![S::zero(); self.entries.len()],
        }
    }
    fn to_json(&self) -> Value {
        Value::Array(self.entries.chunks(self.d).map(scalars_to_json).collect())
    }
}

fn matmul<S: Scalar>(a: &Rows<S>, b: &Rows<S>) -> Rows<S> {
    let n = a.len();
    let k = b.len();
    let m = b.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..k).fold(S::zero(), |acc, l| acc + a[i][l].clone() * b[l][j].clone()))
                .collect()
        })
        .collect()
}

/// Outcome of a b-norm evaluation. `exact` means `lower == upper` is the
/// analytic value; otherwise `lower` is a sampled ratio actually attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatorBNorm {
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
}

/// Orthonormal basis of the orthogonal complement of `span A`.
fn complement_basis<S: Scalar>(anchors: &AnchorTuple<Vector<S>>) -> Vec<Vec<C64>> {
    let d = anchors.dim();
    let mut vectors: Vec<Vec<C64>> = anchors.iter().map(|a| a.0.iter().map(Scalar::to_c64).collect()).collect();
    let k = vectors.len();
    vectors.extend((0..d).map(|i| (0..d).map(|j| C64::from_real(f64::from(u8::from(i == j)))).collect()));
    let basis = linalg::orthonormal_basis(&vectors, 1e-10);
    basis[k..].to_vec()
}

/// True when `T` maps `span A` into itself.
///
/// Exact mode decides by rank. Floating point measures the component of each
/// `T a_i` orthogonal to `span A`, relative to `||T||_F ||a_i||`, so rounding
/// accumulated over long products does not read as leaving the span. The
/// scale is floored at 1 so near-zero residuals are not judged on noise alone.
pub fn leaves_span_invariant<S: Scalar>(t: &OperatorElement<S>, anchors: &AnchorTuple<Vector<S>>, tol: f64) -> bool {
    if S::is_exact() {
        let base: Rows<S> = anchors.iter().map(|a| a.0.clone()).collect();
        return anchors.iter().all(|a| {
            let image = t.apply(&a.0);
            if image.iter().all(Scalar::is_zero) {
                return true;
            }
            let mut rows = base.clone();
            rows.push(image);
            linalg::rows_dependent(&rows, 0.0)
        });
    }
    span_leak(t, anchors, &complement_basis(anchors)) <= tol
}

/// `max_i ||P_perp T a_i|| / (max(||T||_F, 1) ||a_i||)`.
fn span_leak<S: Scalar>(t: &OperatorElement<S>, anchors: &AnchorTuple<Vector<S>>, complement: &[Vec<C64>]) -> f64 {
    let frob = t.entries.iter().map(|z| z.abs().powi(2)).sum::<f64>().sqrt();
    if frob == 0.0 {
        return 0.0;
    }
    anchors
        .iter()
        .map(|a| {
            let image: Vec<C64> = t.apply(&a.0).iter().map(Scalar::to_c64).collect();
            let out = complement
                .iter()
                .map(|q| q.iter().zip(&image).map(|(u, v)| u.conj() * v).sum::<C64>().norm_sqr())
                .sum::<f64>()
                .sqrt();
            let len = a.0.iter().map(|z| z.abs().powi(2)).sum::<f64>().sqrt();
            out / (frob.max(1.0) * len)
        })
        .fold(0.0, f64::max)
}

fn compression_norm<S: Scalar>(t: &OperatorElement<S>, q: &[Vec<C64>]) -> f64 {
    let k = q.len();
    let tc: Vec<C64> = t.entries.iter().map(Scalar::to_c64).collect();
    let d = t.d;
    let tq: Vec<Vec<C64>> = q
        .iter()
        .map(|col| (0..d).map(|i| (0..d).map(|j| tc[i * d + j] * col[j]).sum()).collect())
        .collect();
    let m = nalgebra::DMatrix::from_fn(k, k, |i, j| {
        q[i].iter().zip(&tq[j]).map(|(a, b)| a.conj() * b).sum::<C64>()
    });
    linalg::spectral_norm(&m)
}

/// Largest sampled ratio `||Tx, A|| / ||x, A||` over `budget` seeded points.
pub fn sampled_b_norm<S: Scalar>(
    t: &OperatorElement<S>,
    anchors: &AnchorTuple<Vector<S>>,
    budget: usize,
    seed: u64,
) -> f64 {
    let mut r = rng(seed);
    let mut best: f64 = 0.0;
    for _ in 0..budget {
        let x = Vector(random_vec::<S>(&mut r, t.d, 1.0));
        let Ok(den) = gram_n_norm(&x, anchors) else { continue };
        if den <= 1e-9 {
            continue;
        }
        let Ok(num) = gram_n_norm(&Vector(t.apply(&x.0)), anchors) else {
            continue;
        };
        best = best.max(num / den);
    }
    best
}

/// `sup { ||Tx, A|| : ||x, A|| <= 1 }`.
///
/// Exact for operators leaving `span A` invariant. For any other operator the
/// supremum is infinite; the report carries the largest sampled ratio as
/// `lower` and `upper = inf`.
pub fn operator_b_norm<S: Scalar>(
    t: &OperatorElement<S>,
    anchors: &AnchorTuple<Vector<S>>,
    budget: usize,
    seed: u64,
) -> Result<OperatorBNorm, AlgebraError> {
    let d = anchors.dim();
    if t.d != d {
        return Err(AlgebraError::ShapeMismatch {
            expected: format!("{d}x{d} operator"),
            found: format!("{0}x{0} operator", t.d),
        });
    }
    let rows: Rows<S> = anchors.iter().map(|a| a.0.clone()).collect();
    if linalg::rows_dependent(&rows, 1e-9) {
        return Err(AlgebraError::DependentAnchors);
    }
    if leaves_span_invariant(t, anchors, 1e-9) {
        let v = compression_norm(t, &complement_basis(anchors));
        return Ok(OperatorBNorm {
            lower: v,
            upper: v,
            exact: true,
        });
    }
    Ok(OperatorBNorm {
        lower: sampled_b_norm(t, anchors, budget, seed),
        upper: f64::INFINITY,
        exact: false,
    })
}

#[derive(Debug, Clone)]
pub struct OperatorAlgebra<S: Scalar> {
    d: usize,
    anchors: AnchorTuple<Vector<S>>,
    complement: Vec<Vec<C64>>,
    /// Columns: anchors, then standard basis vectors completing them.
    adapted: Rows<S>,
    adapted_inv: Rows<S>,
    tol: f64,
}

impl<S: Scalar> OperatorAlgebra<S> {
    pub fn new(d: usize, n: usize) -> Result<Self, AlgebraError> {
        Self::with_anchors(d, super::default_anchor_coords(d, n), true)
    }

    /// `normalize` rescales each anchor to unit Euclidean length.
    pub fn with_anchors(d: usize, anchors: Vec<Vec<S>>, normalize: bool) -> Result<Self, AlgebraError> {
        let n = anchors.len() + 1;
        if n < 2 {
            return Err(AlgebraError::Invalid("need at least one anchor (n >= 2)".into()));
        }
        if d < n {
            return Err(AlgebraError::Invalid(format!("dimension {d} is below n = {n}")));
        }
        if let Some(bad) = anchors.iter().find(|a| a.len() != d) {
            return Err(AlgebraError::ShapeMismatch {
                expected: format!("{d} coordinates"),
                found: format!("{} coordinates", bad.len()),
            });
        }
        if linalg::rows_dependent(&anchors, 1e-9) {
            return Err(AlgebraError::DependentAnchors);
        }
        let tuple = AnchorTuple::new(anchors.into_iter().map(Vector).collect())
            .map_err(|e| AlgebraError::Invalid(e.to_string()))?;
        let tuple = if normalize { tuple.normalized() } else { tuple };
        Ok(Self::build(d, tuple))
    }

    fn build(d: usize, anchors: AnchorTuple<Vector<S>>) -> Self {
        let mut cols: Rows<S> = anchors.iter().map(|a| a.0.clone()).collect();
        for j in 0..d {
            if cols.len() == d {
                break;
            }
            let mut trial = cols.clone();
            trial.push((0..d).map(|i| if i == j { S::one() } else { S::zero() }).collect());
            if !linalg::rows_dependent(&trial, 1e-9) {
                cols = trial;
            }
        }
        let adapted: Rows<S> = (0..d).map(|r| (0..d).map(|c| cols[c][r].clone()).collect()).collect();
        let adapted_inv = linalg::inverse(&adapted, 1e-12).expect("adapted basis is independent");
        OperatorAlgebra {
            d,
            complement: complement_basis(&anchors),
            anchors,
            adapted,
            adapted_inv,
            tol: 1e-12,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn anchors(&self) -> &AnchorTuple<Vector<S>> {
        &self.anchors
    }

    pub fn is_b_bounded(&self, t: &OperatorElement<S>) -> bool {
        if S::is_exact() {
            leaves_span_invariant(t, &self.anchors, 0.0)
        } else {
            span_leak(t, &self.anchors, &self.complement) <= 1e-9
        }
    }

    /// `T` written in the adapted basis.
    fn in_adapted_basis(&self, t: &OperatorElement<S>) -> Rows<S> {
        matmul(&matmul(&self.adapted_inv, &t.rows()), &self.adapted)
    }

    fn from_adapted(&self, m: &Rows<S>) -> OperatorElement<S> {
        OperatorElement::from_rows(&matmul(&matmul(&self.adapted, m), &self.adapted_inv))
    }
}

impl<S: Scalar> Algebra<S> for OperatorAlgebra<S> {
    type Elem = OperatorElement<S>;

    fn kind(&self) -> AlgebraKind {
        AlgebraKind::Operator
    }
    fn variant(&self) -> NormVariant {
        NormVariant::GramInduced
    }
    fn describe(&self) -> String {
        format!("operator(C^{}, n={}, gram_induced)", self.d, self.n())
    }
    fn n(&self) -> usize {
        self.anchors.n()
    }
    fn zero(&self) -> Self::Elem {
        OperatorElement {
            d: self.d,
            entries: vec![S::zero(); self.d * self.d],
        }
    }
    fn unit(&self) -> Self::Elem {
        OperatorElement::identity(self.d)
    }
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem, AlgebraError> {
        self.check_shape(a)?;
        self.check_shape(b)?;
        Ok(OperatorElement::from_rows(&matmul(&a.rows(), &b.rows())))
    }
    fn is_commutative(&self) -> bool {
        false
    }
    /// The b-norm; infinite off the b-bounded operators.
    fn norm(&self, x: &Self::Elem) -> f64 {
        if !self.is_b_bounded(x) {
            return f64::INFINITY;
        }
        compression_norm(x, &self.complement)
    }
    fn exact_inverse(&self, x: &Self::Elem) -> Option<Self::Elem> {
        linalg::inverse(&x.rows(), self.tol).map(|r| OperatorElement::from_rows(&r))
    }
    fn noninvertibility_reason(&self, x: &Self::Elem) -> String {
        match linalg::kernel_vector(&x.rows(), self.tol) {
            Some(v) => format!("singular matrix, kernel vector {}", scalars_to_json(&v)),
            None => "invertible".into(),
        }
    }
    fn basis(&self) -> Vec<Self::Elem> {
        let d = self.d;
        (0..d * d)
            .map(|k| {
                let mut e = self.zero();
                e.entries[k] = S::one();
                e
            })
            .collect()
    }
    fn from_coords(&self, coords: Vec<S>) -> Result<Self::Elem, AlgebraError> {
        let e = OperatorElement { d: self.d, entries: coords };
        self.check_shape(&e)?;
        if !self.is_b_bounded(&e) {
            return Err(AlgebraError::Invalid("operator does not leave the anchor span invariant".into()));
        }
        Ok(e)
    }
    /// `B M B^-1` with `M` block upper triangular in the adapted basis, so the
    /// result always leaves `span A` invariant.
    fn random_element(&self, rng: &mut SampleRng, radius: f64) -> Self::Elem {
        let k = self.n() - 1;
        let d = self.d;
        let mut m: Rows<S> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| if i >= k && j < k { S::zero() } else { random_scalar(rng, radius) })
                    .collect()
            })
            .collect();
        // Keep the block on span A below the quotient block: ||M11|| <= s_min(M22)
        // <= rho(M22) <= ||T, A||, so series that converge in the seminorm also
        // converge as matrices.
        let block = |lo: usize, hi: usize| {
            let rows: Rows<S> = (lo..hi).map(|i| (lo..hi).map(|j| m[i][j].clone()).collect()).collect();
            linalg::to_dmatrix(&rows)
        };
        let top = linalg::spectral_norm(&block(0, k));
        let floor = block(k, d).singular_values().min();
        if top > floor {
            let factor = S::from_real((floor / top * f64::from(1 << 20)).floor() / f64::from(1 << 20));
            for row in m.iter_mut().take(k) {
                for z in row.iter_mut().take(k) {
                    *z = z.clone() * factor.clone();
                }
            }
        }
        self.from_adapted(&m)
    }
    /// A random b-bounded operator whose quotient block has a zero column.
    fn singular_sample(&self, rng: &mut SampleRng, radius: f64) -> Option<Self::Elem> {
        let k = self.n() - 1;
        let t = self.random_element(rng, radius);
        let mut m = self.in_adapted_basis(&t);
        for row in m.iter_mut() {
            row[k] = S::zero();
        }
        Some(self.from_adapted(&m))
    }
    /// `v w^T` with `w` killing `span A` and `v` spanning the kernel of `T`
    /// on the quotient by `span A`; then `T v w^T` has b-norm 0.
    fn annihilator_candidate(&self, z: &Self::Elem) -> Option<(Self::Elem, Side)> {
        let k = self.n() - 1;
        let d = self.d;
        let m = self.in_adapted_basis(z);
        let block: Rows<S> = (k..d).map(|i| (k..d).map(|j| m[i][j].clone()).collect()).collect();
        let y = linalg::kernel_vector(&block, 1e-9)?;
        let v: Vec<S> = (0..d)
            .map(|r| (0..d - k).fold(S::zero(), |acc, c| acc + self.adapted[r][k + c].clone() * y[c].clone()))
            .collect();
        let mut rows: Rows<S> = self.anchors.iter().map(|a| a.0.clone()).collect();
        rows.resize(d, vec![S::zero(); d]);
        let w = linalg::kernel_vector(&rows, 1e-12)?;
        let entries = (0..d)
            .flat_map(|r| w.iter().map(|wc| v[r].clone() * wc.clone()).collect::<Vec<_>>())
            .collect();
        Some((OperatorElement { d, entries }, Side::Left))
    }
    fn with_scaled_anchors(&self, t: f64) -> Self {
        let factor = S::from_real(t);
        let scaled: Vec<Vector<S>> = self.anchors.iter().map(|a| a.scale(&factor)).collect();
        let normalized = t == 1.0 && self.anchors.is_normalized();
        Self::build(self.d, AnchorTuple::from_parts(scaled, normalized))
    }
}
