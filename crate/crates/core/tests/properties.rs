use proptest::prelude::*;

use nbanach::algebra::{Algebra, NormVariant, OperatorAlgebra, PointwiseAlgebra, SeriesAlgebra, TruncatedSeries};
use nbanach::element::Element;
use nbanach::functionals::{eval_functional, BLinearFunctional};
use nbanach::harness::{parse_config, run_suite, CheckName, CheckSpec, RunConfig};
use nbanach::invertibility::{neumann_inverse, DEFAULT_MAX_TERMS};
use nbanach::nnorm::{gram_n_norm, AnchorTuple, Vector};
use nbanach::sampling::rng;
use nbanach::scalar::{ArithmeticMode, CRat, Scalar, C64};

fn cvec(len: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| C64::new(re, im)), len)
}

fn rat_vec(len: usize) -> impl Strategy<Value = Vec<CRat>> {
    prop::collection::vec((-8i64..8, -8i64..8, 1i64..5), len)
        .prop_map(|v| v.into_iter().map(|(a, b, d)| CRat::from_ratio(a, d) + CRat::i() * CRat::from_ratio(b, d)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gram_norm_is_homogeneous(x in cvec(4), a in cvec(4), b in cvec(4), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let anchors = AnchorTuple::new(vec![Vector(a), Vector(b)]).unwrap();
        let alpha = C64::new(re, im);
        let lhs = gram_n_norm(&Vector(x.clone()).scale(&alpha), &anchors).unwrap();
        let rhs = alpha.norm() * gram_n_norm(&Vector(x), &anchors).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs));
    }

    #[test]
    fn gram_norm_is_subadditive(x in cvec(5), y in cvec(5), a in cvec(5), b in cvec(5)) {
        let anchors = AnchorTuple::new(vec![Vector(a), Vector(b)]).unwrap();
        let sum = gram_n_norm(&Vector(x.clone()).add(&Vector(y.clone())), &anchors).unwrap();
        let parts = gram_n_norm(&Vector(x), &anchors).unwrap() + gram_n_norm(&Vector(y), &anchors).unwrap();
        prop_assert!(sum <= parts + 1e-9);
    }

    #[test]
    fn series_product_is_commutative_and_associative(x in rat_vec(5), y in rat_vec(5), z in rat_vec(5)) {
        let alg = SeriesAlgebra::<CRat>::new(4, 2, NormVariant::L1Corrected).unwrap();
        let (x, y, z) = (TruncatedSeries::new(x), TruncatedSeries::new(y), TruncatedSeries::new(z));
        prop_assert_eq!(alg.mul(&x, &y).unwrap(), alg.mul(&y, &x).unwrap());
        let left = alg.mul(&alg.mul(&x, &y).unwrap(), &z).unwrap();
        let right = alg.mul(&x, &alg.mul(&y, &z).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn series_inverse_is_exact(x in rat_vec(6)) {
        let alg = SeriesAlgebra::<CRat>::new(5, 2, NormVariant::L1Corrected).unwrap();
        let x = TruncatedSeries::new(x);
        match alg.exact_inverse(&x) {
            Some(inv) => prop_assert_eq!(alg.mul(&x, &inv).unwrap(), alg.unit()),
            None => prop_assert!(x.coeffs[0].is_zero()),
        }
    }

    #[test]
    fn l1_norm_is_submultiplicative(x in rat_vec(7), y in rat_vec(7)) {
        let alg = SeriesAlgebra::<CRat>::new(6, 3, NormVariant::L1Corrected).unwrap();
        let (x, y) = (TruncatedSeries::new(x), TruncatedSeries::new(y));
        let lhs = alg.norm(&alg.mul(&x, &y).unwrap());
        prop_assert!(lhs <= alg.norm(&x) * alg.norm(&y) * (1.0 + 1e-12));
    }

    #[test]
    fn operator_seminorm_is_submultiplicative(seed in any::<u64>()) {
        let alg = OperatorAlgebra::<C64>::new(4, 3).unwrap();
        let mut r = rng(seed);
        let (s, t) = (alg.random_element(&mut r, 1.0), alg.random_element(&mut r, 1.0));
        let st = alg.mul(&s, &t).unwrap();
        prop_assert!(alg.is_b_bounded(&st));
        prop_assert!(alg.norm(&st) <= alg.norm(&s) * alg.norm(&t) * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn neumann_residual_within_tail(x in cvec(4), q in 0.05f64..0.9) {
        let alg = PointwiseAlgebra::<C64>::new(4, 3).unwrap();
        let x = alg.element(x);
        let nx = alg.norm(&x);
        prop_assume!(nx > 1e-6);
        let x = x.scale(&C64::new(q / nx, 0.0));
        let r = neumann_inverse(&x, &alg, 1e-10, DEFAULT_MAX_TERMS).unwrap();
        prop_assert!(r.residual <= r.tail_bound + 1e-9);
        prop_assert!(r.residual_left <= r.tail_bound + 1e-9);
    }

    #[test]
    fn projections_are_multiplicative(x in rat_vec(4), y in rat_vec(4), j in 0usize..4) {
        let alg = PointwiseAlgebra::<CRat>::new(4, 2).unwrap();
        let t = BLinearFunctional::projection(4, j);
        let (x, y) = (alg.element(x), alg.element(y));
        let lhs = eval_functional(&t, &alg.mul(&x, &y).unwrap()).unwrap();
        prop_assert_eq!(lhs, eval_functional(&t, &x).unwrap() * eval_functional(&t, &y).unwrap());
    }

    #[test]
    fn unregistered_check_names_are_rejected(name in "[a-z_]{1,16}") {
        prop_assume!(CheckName::parse(&name).is_none());
        let text = format!(r#"{{"instance": {{"kind": "pointwise", "dim": 3, "n": 2}}, "checks": ["{name}"]}}"#);
        let err = parse_config(&text).unwrap_err().to_string();
        let quoted = format!("`{name}`");
        prop_assert!(err.contains(&quoted));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn exact_runs_are_reproducible(seed in any::<u64>()) {
        let mut cfg = RunConfig::default_pointwise();
        cfg.seed = seed;
        cfg.samples = 4;
        cfg.arithmetic_mode = ArithmeticMode::Exact;
        cfg.checks = vec![CheckSpec::new(CheckName::GroupLaws), CheckSpec::new(CheckName::MultiplicativityAudit)];
        prop_assert_eq!(run_suite(&cfg).to_json_string(), run_suite(&cfg).to_json_string());
    }
}
