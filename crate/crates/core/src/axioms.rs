//! Executable n-norm axioms.
//!
//! For seeded random tuples the checker verifies
//!
//! * N1: a tuple made dependent (one slot replaced by a combination of the
//!   others, or by zero) evaluates to 0, and an independent sample does not;
//! * N2: the value is invariant under permutations of the full tuple;
//! * N3: `||a x1, x2, .., xn|| = |a| ||x1, .., xn||`;
//! * N4: `||x + y, x2, .., xn|| <= ||x, x2, ..|| + ||y, x2, ..||`.
//!
//! Failures are data: the first counterexample lands in the report.

use serde_json::{json, Value};

use crate::element::{tuple_dependent, Element};
use crate::nnorm::{gram_tuple_norm, Vector};
use crate::report::CheckReport;
use crate::sampling::{random_index, random_scalar, random_vec, rng, SampleRng};
use crate::scalar::Scalar;

/// Anything evaluated on full n-tuples.
pub trait NNorm<S: Scalar> {
    type Elem: Element<S>;

    fn name(&self) -> String;
    fn n(&self) -> usize;
    fn eval(&self, tuple: &[&Self::Elem]) -> Result<f64, String>;
    fn sample(&self, rng: &mut SampleRng) -> Self::Elem;

    /// Tolerance for rank decisions on sampled tuples.
    fn rank_tol(&self) -> f64 {
        1e-9
    }

    /// Fixed probes for N1 in both directions (value 0 iff dependent).
    fn adversarial_tuples(&self) -> Vec<Vec<Self::Elem>> {
        Vec::new()
    }
}

/// The Gram-determinant n-norm on C^dim.
#[derive(Debug, Clone, Copy)]
pub struct GramNNorm {
    pub dim: usize,
    pub n: usize,
    pub tol: f64,
}

impl<S: Scalar> NNorm<S> for GramNNorm {
    type Elem = Vector<S>;

    fn name(&self) -> String {
        format!("gram(dim={}, n={})", self.dim, self.n)
    }
    fn n(&self) -> usize {
        self.n
    }
    fn eval(&self, tuple: &[&Vector<S>]) -> Result<f64, String> {
        gram_tuple_norm(tuple, self.tol)
            .map(|g| g.value)
            .map_err(|e| e.to_string())
    }
    fn sample(&self, rng: &mut SampleRng) -> Vector<S> {
        Vector(random_vec(rng, self.dim, 1.0))
    }
}

fn tuple_json<S: Scalar, E: Element<S>>(tuple: &[&E]) -> Value {
    Value::Array(tuple.iter().map(|e| e.to_json()).collect())
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn shuffled(rng: &mut SampleRng, n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = random_index(rng, i + 1);
        idx.swap(i, j);
    }
    idx
}

#[derive(Default)]
struct Tally {
    n1: usize,
    n2: usize,
    n3: usize,
    n4: usize,
    max_n2_dev: f64,
    max_n3_dev: f64,
    max_n4_excess: f64,
}

/// Runs N1-N4 on `samples` seeded tuples of `norm`.
pub fn check_n_norm_axioms<S: Scalar, N: NNorm<S>>(norm: &N, samples: usize, seed: u64, tol: f64) -> CheckReport {
    let mut report = CheckReport::new("n_norm_axioms", Some(seed), samples, tol);
    report.metric("norm", norm.name());
    let mut rng = rng(seed);
    let n = norm.n();
    let all_perms = if n <= 4 { Some(permutations(n)) } else { None };
    let mut tally = Tally {
        max_n4_excess: f64::NEG_INFINITY,
        ..Tally::default()
    };

    macro_rules! eval {
        ($tuple:expr) => {
            match norm.eval($tuple) {
                Ok(v) => v,
                Err(e) => {
                    report.error(format!("evaluation failed: {e}"));
                    return report;
                }
            }
        };
    }

    for _ in 0..samples {
        let owned: Vec<N::Elem> = (0..n).map(|_| norm.sample(&mut rng)).collect();
        let tuple: Vec<&N::Elem> = owned.iter().collect();
        let value = eval!(&tuple);

        // N1, independent direction.
        if !tuple_dependent(&tuple, norm.rank_tol()) && value <= 0.0 {
            report.fail(
                "N1: independent tuple has zero n-norm",
                json!({ "axiom": "N1", "tuple": tuple_json(&tuple), "value": value }),
            );
        }
        // N1, dependent direction: slot i becomes a combination of the rest.
        let slot = random_index(&mut rng, n);
        let mut combo = owned[(slot + 1) % n].zero_like();
        for (j, e) in owned.iter().enumerate() {
            if j != slot {
                combo = combo.add(&e.scale(&random_scalar::<S>(&mut rng, 1.0)));
            }
        }
        let mut dep: Vec<&N::Elem> = tuple.clone();
        dep[slot] = &combo;
        let dep_value = eval!(&dep);
        if dep_value > tol {
            report.fail(
                "N1: dependent tuple has nonzero n-norm",
                json!({ "axiom": "N1", "tuple": tuple_json(&dep), "value": dep_value }),
            );
        }
        let zero = owned[0].zero_like();
        let mut with_zero = tuple.clone();
        with_zero[slot] = &zero;
        let zero_value = eval!(&with_zero);
        if zero_value > tol {
            report.fail(
                "N1: tuple containing zero has nonzero n-norm",
                json!({ "axiom": "N1", "tuple": tuple_json(&with_zero), "value": zero_value }),
            );
        }
        tally.n1 += 3;

        // N2
        let perms: Vec<Vec<usize>> = match &all_perms {
            Some(p) => p.clone(),
            None => (0..24).map(|_| shuffled(&mut rng, n)).collect(),
        };
        for p in perms {
            let permuted: Vec<&N::Elem> = p.iter().map(|&i| tuple[i]).collect();
            let pv = eval!(&permuted);
            let dev = (pv - value).abs();
            tally.max_n2_dev = tally.max_n2_dev.max(dev);
            if dev > tol * (1.0 + value) {
                report.fail(
                    "N2: value changes under permutation",
                    json!({ "axiom": "N2", "tuple": tuple_json(&tuple), "permutation": p,
                            "value": value, "permuted_value": pv }),
                );
            }
            tally.n2 += 1;
        }

        // N3
        let alpha: S = random_scalar(&mut rng, 2.0);
        let slot = random_index(&mut rng, n);
        let scaled = owned[slot].scale(&alpha);
        let mut st = tuple.clone();
        st[slot] = &scaled;
        let sv = eval!(&st);
        let expected = alpha.abs() * value;
        let dev = (sv - expected).abs();
        tally.max_n3_dev = tally.max_n3_dev.max(dev);
        if dev > tol * (1.0 + expected) {
            report.fail(
                "N3: not absolutely homogeneous",
                json!({ "axiom": "N3", "tuple": tuple_json(&tuple), "slot": slot,
                        "alpha": alpha.to_json(), "value": sv, "expected": expected }),
            );
        }
        tally.n3 += 1;

        // N4
        let y = norm.sample(&mut rng);
        let sum = owned[0].add(&y);
        let mut t_sum = tuple.clone();
        t_sum[0] = &sum;
        let mut t_y = tuple.clone();
        t_y[0] = &y;
        let lhs = eval!(&t_sum);
        let rhs = value + eval!(&t_y);
        tally.max_n4_excess = tally.max_n4_excess.max(lhs - rhs);
        if lhs > rhs + tol * (1.0 + rhs) {
            report.fail(
                "N4: triangle inequality fails in the first slot",
                json!({ "axiom": "N4", "tuple": tuple_json(&tuple), "y": y.to_json(),
                        "lhs": lhs, "rhs": rhs }),
            );
        }
        tally.n4 += 1;
    }

    for probe in norm.adversarial_tuples() {
        let tuple: Vec<&N::Elem> = probe.iter().collect();
        let value = eval!(&tuple);
        let dependent = tuple_dependent(&tuple, norm.rank_tol());
        if dependent && value > tol {
            report.fail(
                "N1: dependent probe has nonzero n-norm",
                json!({ "axiom": "N1", "tuple": tuple_json(&tuple), "value": value }),
            );
        } else if !dependent && value <= tol {
            report.fail(
                "N1: independent probe has zero n-norm",
                json!({ "axiom": "N1", "tuple": tuple_json(&tuple), "value": value }),
            );
        }
        tally.n1 += 1;
    }

    report.metric("n1_checks", tally.n1);
    report.metric("n2_checks", tally.n2);
    report.metric("n3_checks", tally.n3);
    report.metric("n4_checks", tally.n4);
    report.metric("max_n2_deviation", tally.max_n2_dev);
    report.metric("max_n3_deviation", tally.max_n3_dev);
    report.metric("max_n4_excess", tally.max_n4_excess);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{CRat, C64};

    #[test]
    fn gram_norm_passes() {
        let norm = GramNNorm { dim: 4, n: 3, tol: 1e-9 };
        let r = check_n_norm_axioms::<C64, _>(&norm, 200, 3, 1e-9);
        assert!(r.passed(), "{:?}", r.outcome);
        assert_eq!(r.metrics["n2_checks"], json!(200 * 6));
    }

    #[test]
    fn gram_norm_passes_exact() {
        let norm = GramNNorm { dim: 3, n: 2, tol: 0.0 };
        let r = check_n_norm_axioms::<CRat, _>(&norm, 30, 5, 1e-9);
        assert!(r.passed(), "{:?}", r.outcome);
    }

    /// Replaces the volume by the largest coordinate of the first slot: not
    /// subadditive in any useful sense and not permutation-invariant.
    struct Broken;

    impl NNorm<C64> for Broken {
        type Elem = Vector<C64>;
        fn name(&self) -> String {
            "broken".into()
        }
        fn n(&self) -> usize {
            2
        }
        fn eval(&self, t: &[&Vector<C64>]) -> Result<f64, String> {
            let g = gram_tuple_norm(t, 1e-9).map_err(|e| e.to_string())?.value;
            Ok(g.max(t[0].max_abs()))
        }
        fn sample(&self, rng: &mut SampleRng) -> Vector<C64> {
            Vector(random_vec(rng, 3, 1.0))
        }
    }

    #[test]
    fn broken_norm_fails_with_counterexample() {
        let r = check_n_norm_axioms(&Broken, 50, 1, 1e-9);
        assert!(r.is_fail());
        match &r.outcome {
            crate::report::Outcome::Fail { counterexample, .. } => {
                assert!(counterexample.get("axiom").is_some());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(permutations(1), vec![vec![0]]);
    }
}
