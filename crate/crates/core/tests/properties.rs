use proptest::prelude::*;

use chebcent::directsum::block_project;
use chebcent::domain::{ball_intersection, ConstraintSet};
use chebcent::p1::{check_containment, P1Instance};
use chebcent::solver::{radius, Settings};
use chebcent::space::{distance, farthest_radius, hausdorff_finite, NormSpec, Point, PointSet};

fn norms() -> impl Strategy<Value = NormSpec> {
    prop_oneof![
        Just(NormSpec::max(2).unwrap()),
        (1.2f64..6.0).prop_map(|p| NormSpec::p(p, 2).unwrap()),
        Just(NormSpec::direct_sum(vec![NormSpec::max(1).unwrap(), NormSpec::max(1).unwrap()]).unwrap()),
    ]
}

fn coord() -> impl Strategy<Value = f64> {
    -3.0f64..3.0
}

fn vec2() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(coord(), 2)
}

fn set2(max_len: usize) -> impl Strategy<Value = PointSet> {
    prop::collection::vec(vec2(), 1..=max_len)
        .prop_map(|rows| PointSet::new(rows.into_iter().map(|r| Point::new(r).unwrap()).collect()).unwrap())
}

fn max2() -> NormSpec {
    NormSpec::max(2).unwrap()
}

fn box_set(half: f64) -> ConstraintSet {
    ConstraintSet::HPolytope {
        g: vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]],
        h: vec![half; 4],
    }
}

proptest! {
    #[test]
    fn distance_is_a_metric(n in norms(), x in vec2(), y in vec2(), z in vec2()) {
        let d = |a: &[f64], b: &[f64]| distance(&n, a, b).unwrap();
        prop_assert_eq!(d(&x, &x), 0.0);
        prop_assert!((d(&x, &y) - d(&y, &x)).abs() <= 1e-12);
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-9);
    }

    #[test]
    fn sum_distance_is_blockwise_max(x in vec2(), y in vec2()) {
        let m1 = NormSpec::max(1).unwrap();
        let n = NormSpec::direct_sum(vec![NormSpec::p(2.0, 1).unwrap(), m1]).unwrap();
        let expect = (x[0] - y[0]).abs().max((x[1] - y[1]).abs());
        prop_assert!((distance(&n, &x, &y).unwrap() - expect).abs() <= 1e-12);
    }

    #[test]
    fn farthest_radius_is_hausdorff_lipschitz(n in norms(), v in vec2(), a in set2(5), b in set2(5)) {
        let ra = farthest_radius(&n, &v, &a).unwrap();
        let rb = farthest_radius(&n, &v, &b).unwrap();
        prop_assert!((ra - rb).abs() <= hausdorff_finite(&n, &a, &b).unwrap() + 1e-9);
    }

    #[test]
    fn block_projection_contracts(x in vec2(), y in vec2()) {
        let n = NormSpec::direct_sum(vec![NormSpec::max(1).unwrap(), NormSpec::max(1).unwrap()]).unwrap();
        let a = PointSet::from_rows(&[&x]).unwrap();
        let b = PointSet::from_rows(&[&y]).unwrap();
        let whole = hausdorff_finite(&n, &a, &b).unwrap();
        for i in 1..=2 {
            let m = NormSpec::max(1).unwrap();
            let pa = block_project(&n, &a, i).unwrap();
            let pb = block_project(&n, &b, i).unwrap();
            prop_assert!(hausdorff_finite(&m, &pa, &pb).unwrap() <= whole + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ball_intersection_grows_with_alpha(f in set2(4), extra in 0.0f64..2.0, x in vec2()) {
        let n = max2();
        let r = f.diameter(&n);
        let small = ball_intersection(&n, &f, r, &ConstraintSet::WholeSpace).unwrap();
        let large = ball_intersection(&n, &f, r + extra, &ConstraintSet::WholeSpace).unwrap();
        let inside_small = small.polytope().is_some_and(|p| p.contains(&x, 1e-9));
        let inside_large = large.polytope().is_some_and(|p| p.contains(&x, 1e-9));
        prop_assert!(!inside_small || inside_large);
    }

    #[test]
    fn shrinking_the_constraint_never_lowers_the_radius(f in set2(4), half in 0.1f64..4.0) {
        let s = Settings::default();
        let n = max2();
        let outer = radius(&n, &ConstraintSet::WholeSpace, &f, &s).unwrap();
        let inner = radius(&n, &box_set(half), &f, &s).unwrap();
        let tighter = radius(&n, &box_set(half / 2.0), &f, &s).unwrap();
        prop_assert!(outer <= inner + 1e-9);
        prop_assert!(inner <= tighter + 1e-9);
    }

    #[test]
    fn s_curve_is_nondecreasing_and_starts_at_zero(f in set2(4), d in 0.0f64..0.5) {
        let s = Settings::default();
        let p1 = P1Instance::new(&max2(), &ConstraintSet::WholeSpace, &f, &s).unwrap();
        prop_assert!(p1.s_value(0.0, &s).unwrap().value <= 1e-9);
        let lo = p1.s_value(d, &s).unwrap().value;
        let hi = p1.s_value(2.0 * d + 0.01, &s).unwrap().value;
        prop_assert!(lo <= hi + 1e-9);
    }

    #[test]
    fn containment_agrees_with_s(f in set2(4), d in 0.001f64..0.5, eps in 0.01f64..1.0) {
        let s = Settings::default();
        let n = max2();
        let sv = P1Instance::new(&n, &ConstraintSet::WholeSpace, &f, &s).unwrap().s_value(d, &s).unwrap().value;
        let holds = check_containment(&n, &ConstraintSet::WholeSpace, &f, d, eps, &s).unwrap().holds();
        // Away from the boundary the two must agree.
        if (sv - eps).abs() > 1e-7 {
            prop_assert_eq!(holds, sv < eps, "S = {}, eps = {}", sv, eps);
        }
    }

    #[test]
    fn radius_scales_with_the_instance(f in set2(4), lambda in 0.2f64..5.0, half in 0.5f64..3.0) {
        let s = Settings::default();
        let n = max2();
        let base = radius(&n, &box_set(half), &f, &s).unwrap();
        let scaled = radius(&n, &box_set(half * lambda), &f.scaled(lambda), &s).unwrap();
        prop_assert!((scaled - lambda * base).abs() <= 1e-8 * (1.0 + scaled));
    }
}
