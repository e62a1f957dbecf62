//! The fixed desk-scale instances whose oracle values are pinned to disk.
//!
//! `radius` entries gate the solvers (|solver − oracle| ≤ h·c(n));
//! `s_value` entries gate the exact S(F, δ) against the grid scan.

use crate::domain::ConstraintSet;
use crate::error::Result;
use crate::io::{PinnedEntry, PinnedFile, FORMAT_VERSION};
use crate::oracle::{grid_radius_center, grid_s_value};
use crate::par::{self, Execution};
use crate::space::{NormSpec, PointSet};

/// Grid step used for every pinned value.
pub const PIN_H: f64 = 0.005;

#[derive(Debug, Clone)]
pub struct CorpusInstance {
    pub id: &'static str,
    pub norm: NormSpec,
    pub constraint: ConstraintSet,
    pub points: Vec<Vec<f64>>,
    /// S(F, δ) is pinned at these δ (empty for radius-only instances).
    pub deltas: Vec<f64>,
}

impl CorpusInstance {
    pub fn point_set(&self) -> PointSet {
        PointSet::new(
            self.points
                .iter()
                .map(|p| crate::space::Point::new(p.clone()).expect("finite corpus"))
                .collect(),
        )
        .expect("non-empty corpus")
    }
}

fn inst(
    id: &'static str,
    norm: NormSpec,
    constraint: ConstraintSet,
    points: &[&[f64]],
) -> CorpusInstance {
    CorpusInstance {
        id,
        norm,
        constraint,
        points: points.iter().map(|p| p.to_vec()).collect(),
        deltas: Vec::new(),
    }
}

fn max(d: usize) -> NormSpec {
    NormSpec::max(d).expect("valid")
}

fn lp(p: f64, d: usize) -> NormSpec {
    NormSpec::p(p, d).expect("valid")
}

fn sum(blocks: Vec<NormSpec>) -> NormSpec {
    NormSpec::direct_sum(blocks).expect("valid")
}

fn plane(a: Vec<f64>, c: f64) -> ConstraintSet {
    ConstraintSet::AffineSubspace {
        a: vec![a],
        c: vec![c],
    }
}

/// Twenty instances of dimension ≤ 3 covering every norm and set kind.
pub fn oracle_gate() -> Vec<CorpusInstance> {
    use ConstraintSet::WholeSpace as W;
    vec![
        inst("max2-pair", max(2), W, &[&[1.0, 0.0], &[-1.0, 0.0]]),
        inst("max2-triangle", max(2), W, &[&[0.0, 0.0], &[2.0, 0.0], &[0.0, 2.0]]),
        inst("max1-pair", max(1), W, &[&[1.0], &[-1.0]]),
        inst("max2-line", max(2), plane(vec![0.0, 1.0], 1.0), &[&[0.0, 0.0]]),
        inst("l2-pair", lp(2.0, 2), W, &[&[1.0, 0.0], &[-1.0, 0.0]]),
        inst("l2-line", lp(2.0, 2), plane(vec![0.0, 1.0], 1.0), &[&[0.0, 0.0]]),
        inst("l4-three", lp(4.0, 2), W, &[&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0]]),
        inst("l1.5-corner", lp(1.5, 2), W, &[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]),
        inst(
            "max2-box",
            max(2),
            ConstraintSet::boxed(&[0.0, 0.0], &[0.5, 0.5]),
            &[&[0.2, 0.1], &[0.9, 0.8], &[0.1, 0.7]],
        ),
        inst(
            "max3-box",
            max(3),
            ConstraintSet::boxed(&[0.0, 0.0, 0.0], &[0.6, 0.6, 0.6]),
            &[&[0.0, 0.0, 0.0], &[0.6, 0.2, 0.4], &[0.3, 0.5, 0.1]],
        ),
        inst(
            "l2-3d-subspace-ball",
            lp(2.0, 3),
            ConstraintSet::subspace_ball(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], 0.5),
            &[&[0.5, 0.0, 0.0], &[-0.5, 0.0, 0.0], &[0.0, 0.4, 0.3]],
        ),
        inst(
            "sum-max1-l2",
            sum(vec![max(1), lp(2.0, 2)]),
            ConstraintSet::BlockProduct {
                blocks: vec![
                    ConstraintSet::boxed(&[-0.5], &[0.5]),
                    ConstraintSet::ball(2, 0.6),
                ],
            },
            &[&[0.3, 0.2, 0.1], &[-0.4, -0.3, 0.2], &[0.1, 0.4, -0.5]],
        ),
        inst(
            "max2-simplex",
            max(2),
            ConstraintSet::HPolytope {
                g: vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 1.0]],
                h: vec![0.0, 0.0, 1.0],
            },
            &[&[1.0, 1.0], &[2.0, 0.0]],
        ),
        inst(
            "max2-diagonal-ball",
            max(2),
            ConstraintSet::subspace_ball(vec![vec![1.0, 1.0]], 1.0),
            &[&[1.0, 0.0], &[0.0, -1.0], &[2.0, 2.0]],
        ),
        inst("l2-disk", lp(2.0, 2), ConstraintSet::ball(2, 1.0), &[&[2.0, 0.0]]),
        inst("l3-line", lp(3.0, 1), W, &[&[0.3], &[-0.9]]),
        inst("sum-max1-max1", sum(vec![max(1), max(1)]), W, &[&[1.0, 0.0], &[-1.0, 2.0]]),
        inst(
            "sum-l2-l2",
            sum(vec![lp(2.0, 1), lp(2.0, 1)]),
            W,
            &[&[0.5, 0.2], &[-0.5, -0.3]],
        ),
        inst(
            "max3-plane",
            max(3),
            plane(vec![1.0, 1.0, 1.0], 1.0),
            &[&[0.2, 0.3, 0.5], &[0.4, 0.4, 0.2], &[0.1, 0.6, 0.3]],
        ),
        inst(
            "l2-3d-box",
            lp(2.0, 3),
            ConstraintSet::boxed(&[0.0, 0.0, 0.0], &[0.3, 0.3, 0.3]),
            &[&[0.1, 0.2, 0.0], &[0.4, -0.1, 0.2], &[0.0, 0.0, 0.5]],
        ),
    ]
}

/// Two-dimensional max-norm instances with S(F, δ) pinned at a few δ.
pub fn s_value_corpus() -> Vec<CorpusInstance> {
    use ConstraintSet::WholeSpace as W;
    let deltas = vec![0.05, 0.1, 0.3];
    let mut out = vec![
        inst("s-max2-pair", max(2), W, &[&[1.0, 0.0], &[-1.0, 0.0]]),
        inst("s-max2-triangle", max(2), W, &[&[0.0, 0.0], &[2.0, 0.0], &[0.0, 2.0]]),
        inst(
            "s-max2-box",
            max(2),
            ConstraintSet::boxed(&[0.0, 0.0], &[0.5, 0.5]),
            &[&[0.2, 0.1], &[0.9, 0.8], &[0.1, 0.7]],
        ),
        inst(
            "s-sum-unequal",
            sum(vec![max(1), max(1)]),
            W,
            &[&[0.5, 0.0], &[-0.5, 2.0]],
        ),
    ];
    for i in &mut out {
        i.deltas = deltas.clone();
    }
    out
}

/// Runs the grid oracle on the whole corpus.
pub fn pin_derived(exec: Execution) -> Result<PinnedFile> {
    let mut entries = Vec::new();
    for c in oracle_gate() {
        let f = c.point_set();
        let g = grid_radius_center(&c.norm, &c.constraint, &f, PIN_H, exec)?;
        let d = c.norm.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in &g.centers {
            for i in 0..d {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        entries.push(PinnedEntry {
            id: c.id.to_string(),
            quantity: "radius".into(),
            norm: c.norm.clone(),
            constraint: c.constraint.clone(),
            points: c.points.clone(),
            delta: None,
            h: PIN_H,
            c_n: g.c_n,
            value: g.radius,
            center_box: Some([lo, hi]),
        });
    }
    for c in s_value_corpus() {
        let f = c.point_set();
        let vals = par::try_map_range(Execution::Sequential, c.deltas.len(), |k| {
            grid_s_value(&c.norm, &c.constraint, &f, c.deltas[k], PIN_H, exec)
        })?;
        for (k, s) in vals.into_iter().enumerate() {
            entries.push(PinnedEntry {
                id: format!("{}@{}", c.id, c.deltas[k]),
                quantity: "s_value".into(),
                norm: c.norm.clone(),
                constraint: c.constraint.clone(),
                points: c.points.clone(),
                delta: Some(c.deltas[k]),
                h: PIN_H,
                c_n: s.c_n,
                value: s.value,
                center_box: None,
            });
        }
    }
    Ok(PinnedFile {
        version: FORMAT_VERSION,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_valid_and_small() {
        let g = oracle_gate();
        assert_eq!(g.len(), 20);
        for c in g.iter().chain(&s_value_corpus()) {
            assert!(c.norm.dim() <= 3, "{}", c.id);
            c.constraint.validate(&c.norm).unwrap();
            assert_eq!(c.point_set().dim(), c.norm.dim());
        }
        let mut ids: Vec<_> = g.iter().map(|c| c.id).collect();
        ids.dedup();
        assert_eq!(ids.len(), 20);
    }
}
