//! Brute-force ground truth at dimension ≤ 3: scan a grid of step ≤ h over V
//! intersected with a box that provably contains every relevant point.
//!
//! Since ‖·‖_∞ ≤ ‖·‖ for every supported norm, a point v with
//! r(v, F) ≤ R satisfies max_b b_i − R ≤ v_i ≤ min_b b_i + R. R is taken as
//! r(x₀, F) + δ for a feasible x₀. With equality constraints the grid lives
//! in orthonormal coordinates on the affine hull.

use serde::Serialize;

use crate::domain::{Compiled, ConstraintSet};
use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{affine_chart, AffineChart};
use crate::lp::{LinearProgram, LpOutcome};
use crate::par::{self, Execution};
use crate::space::{farthest_radius_unchecked, NormSpec, Point, PointSet};

pub const MAX_ORACLE_DIM: usize = 3;
pub const MAX_GRID_POINTS: u64 = 100_000_000;
const CHUNK: usize = 1 << 14;

struct Grid {
    chart: AffineChart,
    lo: Vec<f64>,
    step: Vec<f64>,
    counts: Vec<usize>,
    total: usize,
}

impl Grid {
    fn coords(&self, mut idx: usize) -> Vec<f64> {
        let mut y = vec![0.0; self.counts.len()];
        for (j, &c) in self.counts.iter().enumerate() {
            y[j] = self.lo[j] + (idx % c) as f64 * self.step[j];
            idx /= c;
        }
        y
    }
}

fn feasible_point(v: &Compiled) -> Result<Vec<f64>> {
    let d = v.dim;
    let mut x = if v.eq.is_empty() && v.ineq.is_empty() {
        vec![0.0; d]
    } else {
        let mut lp = LinearProgram::new(d);
        v.push_linear(&mut lp, 0);
        match lp.solve()? {
            LpOutcome::Optimal(s) => s.x,
            _ => return Err(Error::Internal("constraint set has no feasible point".into())),
        }
    };
    // Ball constraints come from subspace balls, which contain the origin.
    for b in &v.balls {
        x[b.offset..b.offset + b.len].iter_mut().for_each(|c| *c = 0.0);
    }
    if !v.contains(&x, 1e-9) {
        return Err(Error::Capability(
            "oracle could not find a feasible starting point".into(),
        ));
    }
    Ok(x)
}

/// Per-coordinate bounds of V's linear part, tightened by ball leaves.
fn set_bounds(v: &Compiled) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = v.dim;
    let mut lo = vec![f64::NEG_INFINITY; d];
    let mut hi = vec![f64::INFINITY; d];
    if !(v.eq.is_empty() && v.ineq.is_empty()) {
        for i in 0..d {
            for sign in [1.0, -1.0] {
                let mut lp = LinearProgram::new(d);
                let mut c = vec![0.0; d];
                c[i] = sign;
                lp.set_objective(c);
                v.push_linear(&mut lp, 0);
                if let LpOutcome::Optimal(s) = lp.solve()? {
                    if sign > 0.0 {
                        lo[i] = s.value;
                    } else {
                        hi[i] = -s.value;
                    }
                }
            }
        }
    }
    for b in &v.balls {
        for i in b.offset..b.offset + b.len {
            lo[i] = lo[i].max(-b.radius);
            hi[i] = hi[i].min(b.radius);
        }
    }
    Ok((lo, hi))
}

fn plan(n: &NormSpec, v: &Compiled, f: &PointSet, reach: f64, h: f64) -> Result<Grid> {
    let d = n.dim();
    if d > MAX_ORACLE_DIM {
        return Err(Error::Capability(format!(
            "grid oracle supports dimension <= {MAX_ORACLE_DIM}, got {d}"
        )));
    }
    if !(h > 0.0) {
        return Err(Error::Domain(format!("grid step must be positive, got {h}")));
    }
    let x0 = feasible_point(v)?;
    let r = farthest_radius_unchecked(n, &x0, f) + reach;
    let (vlo, vhi) = set_bounds(v)?;
    let mut lo = vec![0.0; d];
    let mut hi = vec![0.0; d];
    for i in 0..d {
        let top = f.iter().map(|b| b[i]).fold(f64::NEG_INFINITY, f64::max);
        let bot = f.iter().map(|b| b[i]).fold(f64::INFINITY, f64::min);
        lo[i] = (top - r).max(vlo[i]);
        hi[i] = (bot + r).min(vhi[i]);
        if hi[i] < lo[i] {
            // Only rounding can get here: x₀ itself lies in the box.
            lo[i] = x0[i];
            hi[i] = x0[i];
        }
    }
    let chart = affine_chart(
        &v.eq.iter().map(|(a, _)| a.clone()).collect::<Vec<_>>(),
        &v.eq.iter().map(|(_, b)| *b).collect::<Vec<_>>(),
        d,
        1e-10,
    )
    .ok_or_else(|| Error::Internal("inconsistent equality constraints".into()))?;
    // Range of each chart coordinate y_j = d_j · (x − origin) over the box.
    let k = chart.dim();
    let mut ylo = vec![0.0; k];
    let mut yhi = vec![0.0; k];
    for (j, dir) in chart.directions.iter().enumerate() {
        for i in 0..d {
            let (a, b) = (dir[i] * (lo[i] - chart.origin[i]), dir[i] * (hi[i] - chart.origin[i]));
            ylo[j] += a.min(b);
            yhi[j] += a.max(b);
        }
    }
    let mut counts = Vec::with_capacity(k);
    let mut step = Vec::with_capacity(k);
    let mut total: u64 = 1;
    for j in 0..k {
        let w = yhi[j] - ylo[j];
        let intervals = (w / h).ceil().max(0.0);
        if intervals > MAX_GRID_POINTS as f64 {
            return Err(too_large());
        }
        let intervals = intervals as u64;
        counts.push(intervals as usize + 1);
        step.push(if intervals == 0 { 0.0 } else { w / intervals as f64 });
        total = total.saturating_mul(intervals + 1);
    }
    if total > MAX_GRID_POINTS {
        return Err(too_large());
    }
    Ok(Grid {
        chart,
        lo: ylo,
        step,
        counts,
        total: total as usize,
    })
}

fn too_large() -> Error {
    Error::Capability(format!(
        "grid exceeds {MAX_GRID_POINTS} points; use a coarser step"
    ))
}

/// Scans the grid and returns (x, r(x, F)) for feasible points passing `keep`.
fn scan<K>(
    n: &NormSpec,
    v: &Compiled,
    f: &PointSet,
    g: &Grid,
    exec: Execution,
    keep: K,
) -> Vec<(Vec<f64>, f64)>
where
    K: Fn(f64) -> bool + Sync,
{
    let chunks = g.total.div_ceil(CHUNK);
    par::map_range(exec, chunks, |c| {
        let mut out = Vec::new();
        for idx in c * CHUNK..((c + 1) * CHUNK).min(g.total) {
            let x = g.chart.embed(&g.coords(idx));
            if !v.contains(&x, 1e-9) {
                continue;
            }
            let r = farthest_radius_unchecked(n, &x, f);
            if keep(r) {
                out.push((x, r));
            }
        }
        out
    })
    .into_iter()
    .flatten()
    .collect()
}

fn min_radius(n: &NormSpec, v: &Compiled, f: &PointSet, g: &Grid, exec: Execution) -> Result<(f64, usize)> {
    let chunks = g.total.div_ceil(CHUNK);
    let parts = par::map_range(exec, chunks, |c| {
        let mut best = f64::INFINITY;
        let mut feasible = 0usize;
        for idx in c * CHUNK..((c + 1) * CHUNK).min(g.total) {
            let x = g.chart.embed(&g.coords(idx));
            if v.contains(&x, 1e-9) {
                feasible += 1;
                best = best.min(farthest_radius_unchecked(n, &x, f));
            }
        }
        (best, feasible)
    });
    let best = parts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let feasible = parts.iter().map(|p| p.1).sum();
    if feasible == 0 {
        return Err(Error::Capability(
            "no grid point is feasible; V is thinner than the grid step".into(),
        ));
    }
    Ok((best, feasible))
}

fn inputs(n: &NormSpec, v: &ConstraintSet, f: &PointSet) -> Result<Compiled> {
    if f.dim() != n.dim() {
        return Err(dim_mismatch(n.dim(), f.dim()));
    }
    v.compile(n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRadius {
    pub radius: f64,
    pub h: f64,
    /// Equivalence constant of the norm against the max-norm.
    pub c_n: f64,
    /// h·c(n).
    pub bound: f64,
    pub scanned: usize,
    pub feasible: usize,
    /// Grid points with r(v, F) ≤ radius + bound.
    pub centers: Vec<Point>,
}

pub fn grid_radius_center(
    n: &NormSpec,
    v: &ConstraintSet,
    f: &PointSet,
    h: f64,
    exec: Execution,
) -> Result<GridRadius> {
    let compiled = inputs(n, v, f)?;
    let g = plan(n, &compiled, f, 0.0, h)?;
    let c_n = n.max_equivalence_constant();
    let (radius, feasible) = min_radius(n, &compiled, f, &g, exec)?;
    let bound = h * c_n;
    let centers = scan(n, &compiled, f, &g, exec, |r| r <= radius + bound)
        .into_iter()
        .map(|(x, _)| Point::from_vec_unchecked(x))
        .collect();
    Ok(GridRadius {
        radius,
        h,
        c_n,
        bound,
        scanned: g.total,
        feasible,
        centers,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridS {
    pub delta: f64,
    pub value: f64,
    pub radius: f64,
    pub h: f64,
    pub c_n: f64,
    /// 2h·c(n).
    pub bound: f64,
    pub center_samples: usize,
    pub enlargement_samples: usize,
}

/// Nearest-point queries under the ambient norm. Boxes are pruned with the
/// max-norm gap, a lower bound for every supported norm.
struct KdTree<'a> {
    n: &'a NormSpec,
    pts: Vec<Vec<f64>>,
    nodes: Vec<Node>,
}

struct Node {
    lo: Vec<f64>,
    hi: Vec<f64>,
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
}

const LEAF: usize = 16;

impl<'a> KdTree<'a> {
    fn new(n: &'a NormSpec, mut pts: Vec<Vec<f64>>) -> Self {
        let mut nodes = Vec::new();
        if !pts.is_empty() {
            let len = pts.len();
            Self::build(&mut pts, 0, len, &mut nodes);
        }
        KdTree { n, pts, nodes }
    }

    fn build(pts: &mut [Vec<f64>], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
        let d = pts[start].len();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in &pts[start..end] {
            for i in 0..d {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        let id = nodes.len();
        nodes.push(Node {
            lo: lo.clone(),
            hi: hi.clone(),
            start,
            end,
            children: None,
        });
        if end - start > LEAF {
            let axis = (0..d)
                .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
                .unwrap_or(0);
            let mid = (start + end) / 2;
            pts[start..end].select_nth_unstable_by(mid - start, |a, b| a[axis].total_cmp(&b[axis]));
            let l = Self::build(pts, start, mid, nodes);
            let r = Self::build(pts, mid, end, nodes);
            nodes[id].children = Some((l, r));
        }
        id
    }

    fn gap(node: &Node, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, &v)| (node.lo[i] - v).max(v - node.hi[i]).max(0.0))
            .fold(0.0, f64::max)
    }

    fn nearest(&self, x: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if Self::gap(node, x) >= best {
                continue;
            }
            match node.children {
                None => {
                    for p in &self.pts[node.start..node.end] {
                        best = best.min(self.n.norm_diff(x, p));
                    }
                }
                Some((l, r)) => {
                    let (gl, gr) = (Self::gap(&self.nodes[l], x), Self::gap(&self.nodes[r], x));
                    // Nearer child last so it is popped first.
                    if gl <= gr {
                        stack.push(r);
                        stack.push(l);
                    } else {
                        stack.push(l);
                        stack.push(r);
                    }
                }
            }
        }
        best
    }
}

pub fn grid_s_value(
    n: &NormSpec,
    v: &ConstraintSet,
    f: &PointSet,
    delta: f64,
    h: f64,
    exec: Execution,
) -> Result<GridS> {
    if !(delta >= 0.0) {
        return Err(Error::Domain(format!("delta must be non-negative, got {delta}")));
    }
    let compiled = inputs(n, v, f)?;
    let g = plan(n, &compiled, f, delta, h)?;
    let c_n = n.max_equivalence_constant();
    let (radius, _) = min_radius(n, &compiled, f, &g, exec)?;
    let band = h * c_n;
    let level = radius + delta;
    let pts = scan(n, &compiled, f, &g, exec, |r| r <= level.max(radius + band));
    let centers: Vec<Vec<f64>> = pts
        .iter()
        .filter(|p| p.1 <= radius + band)
        .map(|p| p.0.clone())
        .collect();
    let enlarged: Vec<&(Vec<f64>, f64)> = pts.iter().filter(|p| p.1 <= level).collect();
    let tree = KdTree::new(n, centers);
    let dists = par::map_slice(exec, &enlarged, |p| tree.nearest(&p.0));
    let value = dists.into_iter().fold(0.0, f64::max);
    Ok(GridS {
        delta,
        value,
        radius,
        h,
        c_n,
        bound: 2.0 * h * c_n,
        center_samples: tree.pts.len(),
        enlargement_samples: enlarged.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(rows: &[&[f64]]) -> PointSet {
        PointSet::from_rows(rows).unwrap()
    }

    #[test]
    fn radius_examples() {
        let e = Execution::default();
        let n = NormSpec::max(2).unwrap();
        let g = grid_radius_center(&n, &ConstraintSet::WholeSpace, &ps(&[&[1.0, 0.0], &[-1.0, 0.0]]), 0.01, e)
            .unwrap();
        assert!((0.99..=1.01).contains(&g.radius));
        assert!(!g.centers.is_empty());

        let single = ps(&[&[0.3, 0.7]]);
        let g = grid_radius_center(&n, &ConstraintSet::boxed(&[0.0, 0.0], &[1.0, 1.0]), &single, 0.01, e)
            .unwrap();
        assert!(g.radius <= g.bound);

        let line = ConstraintSet::AffineSubspace {
            a: vec![vec![0.0, 1.0]],
            c: vec![1.0],
        };
        let g = grid_radius_center(&n, &line, &ps(&[&[0.0, 0.0]]), 0.01, e).unwrap();
        assert!((g.radius - 1.0).abs() <= g.bound);
    }

    #[test]
    fn s_value_example() {
        let n = NormSpec::max(1).unwrap();
        let s = grid_s_value(&n, &ConstraintSet::WholeSpace, &ps(&[&[1.0], &[-1.0]]), 0.2, 0.001, Execution::default())
            .unwrap();
        assert!((s.value - 0.2).abs() <= 0.002, "{}", s.value);
        let s = grid_s_value(&n, &ConstraintSet::WholeSpace, &ps(&[&[1.0], &[-1.0]]), 0.0, 0.001, Execution::default())
            .unwrap();
        assert!(s.value <= s.bound);
    }

    #[test]
    fn capability_limits() {
        let e = Execution::Sequential;
        let n4 = NormSpec::max(4).unwrap();
        assert!(matches!(
            grid_radius_center(&n4, &ConstraintSet::WholeSpace, &ps(&[&[0.0; 4]]), 0.1, e),
            Err(Error::Capability(_))
        ));
        let n = NormSpec::max(3).unwrap();
        assert!(matches!(
            grid_radius_center(&n, &ConstraintSet::WholeSpace, &ps(&[&[0.0; 3], &[10.0; 3]]), 1e-3, e),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let n = NormSpec::p(2.0, 2).unwrap();
        let f = ps(&[&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0]]);
        let a = grid_radius_center(&n, &ConstraintSet::WholeSpace, &f, 0.02, Execution::Sequential).unwrap();
        let b = grid_radius_center(&n, &ConstraintSet::WholeSpace, &f, 0.02, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
