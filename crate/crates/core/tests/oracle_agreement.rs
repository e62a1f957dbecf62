use chebcent::corpus::{oracle_gate, s_value_corpus, PIN_H};
use chebcent::oracle::{grid_radius_center, grid_s_value};
use chebcent::p1::s_value;
use chebcent::par::Execution;
use chebcent::solver::{solve, Settings};

#[test]
fn solver_matches_live_grid_scan() {
    let settings = Settings::default();
    for c in oracle_gate() {
        let f = c.point_set();
        let g = grid_radius_center(&c.norm, &c.constraint, &f, PIN_H, Execution::Parallel).unwrap();
        let s = solve(&c.norm, &c.constraint, &f, &settings).unwrap();
        assert!(
            (g.radius - s.radius).abs() <= g.bound,
            "{}: grid {} solver {}",
            c.id,
            g.radius,
            s.radius
        );
    }
}

#[test]
fn halving_the_step_keeps_agreement_within_the_halved_bound() {
    let settings = Settings::default();
    for c in oracle_gate() {
        let f = c.point_set();
        let s = solve(&c.norm, &c.constraint, &f, &settings).unwrap();
        let coarse = grid_radius_center(&c.norm, &c.constraint, &f, 0.02, Execution::Parallel).unwrap();
        let fine = grid_radius_center(&c.norm, &c.constraint, &f, 0.01, Execution::Parallel).unwrap();
        assert!((fine.bound - coarse.bound / 2.0).abs() < 1e-15);
        assert!((coarse.radius - s.radius).abs() <= coarse.bound, "{}", c.id);
        assert!((fine.radius - s.radius).abs() <= fine.bound, "{}", c.id);
    }
}

#[test]
fn exact_s_matches_grid_scan() {
    let settings = Settings::default();
    for c in s_value_corpus() {
        let f = c.point_set();
        for &d in &c.deltas {
            let g = grid_s_value(&c.norm, &c.constraint, &f, d, PIN_H, Execution::Parallel).unwrap();
            let e = s_value(&c.norm, &c.constraint, &f, d, &settings).unwrap();
            assert!(
                (g.value - e.value).abs() <= g.bound,
                "{} at {d}: grid {} exact {}",
                c.id,
                g.value,
                e.value
            );
        }
    }
}

#[test]
fn grid_scan_is_schedule_independent() {
    let c = &oracle_gate()[1];
    let f = c.point_set();
    let a = grid_radius_center(&c.norm, &c.constraint, &f, 0.01, Execution::Sequential).unwrap();
    let b = grid_radius_center(&c.norm, &c.constraint, &f, 0.01, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}
