use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use chebcent::continuity::continuity_modulus;
use chebcent::domain::{ConstraintSet, Polytope};
use chebcent::oracle::grid_radius_center;
use chebcent::par::Execution;
use chebcent::solver::Settings;
use chebcent::space::{NormSpec, PointSet};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn triangle() -> PointSet {
    PointSet::from_rows(&[&[0.0, 0.0], &[2.0, 0.3], &[0.4, 1.7]]).unwrap()
}

fn oracle_scan(c: &mut Criterion) {
    let mut g = c.benchmark_group("oracle_scan");
    g.sample_size(10);
    let n = NormSpec::p(3.0, 2).unwrap();
    let f = triangle();
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, "h=0.01"), |b| {
            b.iter(|| grid_radius_center(&n, &ConstraintSet::WholeSpace, &f, 0.01, exec).unwrap())
        });
    }
    g.finish();
}

fn continuity_trials(c: &mut Criterion) {
    let mut g = c.benchmark_group("continuity_trials");
    g.sample_size(10);
    let n = NormSpec::max(2).unwrap();
    let f = triangle();
    let deltas = [0.01, 0.05, 0.1, 0.2];
    for (name, exec) in MODES {
        let s = Settings { exec, ..Settings::default() };
        g.bench_function(BenchmarkId::new(name, "4x50"), |b| {
            b.iter(|| continuity_modulus(&n, &ConstraintSet::WholeSpace, &f, &deltas, 50, 7, &s).unwrap())
        });
    }
    g.finish();
}

// A slightly tilted 6-cube: 12 facets, 64 vertices, 924 candidate bases.
fn cube(dim: usize) -> Polytope {
    let mut ineq = Vec::new();
    for i in 0..dim {
        for sign in [1.0, -1.0] {
            let mut a = vec![0.0; dim];
            a[i] = sign;
            a[(i + 1) % dim] = 0.1 * sign;
            ineq.push((a, 1.0 + 0.01 * i as f64));
        }
    }
    Polytope::new(dim, ineq, vec![])
}

fn vertex_enumeration(c: &mut Criterion) {
    let mut g = c.benchmark_group("vertex_enumeration");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, "cube6"), |b| {
            b.iter(|| cube(6).vertices_with(exec).unwrap().len())
        });
    }
    g.finish();
}

criterion_group!(benches, oracle_scan, continuity_trials, vertex_enumeration);
criterion_main!(benches);
