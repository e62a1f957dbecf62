//! Log-barrier interior-point method for
//!
//! ```text
//! minimize  t   subject to   ‖v − b‖ ≤ t  (b ∈ F),   v ∈ V
//! ```
//!
//! where the norm is any [`NormSpec`] (max over leaf norms) and V is a
//! [`Compiled`] set. Equalities are eliminated through an affine chart, so the
//! Newton systems live in the relative interior of V. On the central path the
//! duality gap equals m/τ for m inequality constraints, which gives the
//! certificate reported with every solution.

use nalgebra::{DMatrix, DVector};

use crate::domain::Compiled;
use crate::error::{Error, Result};
use crate::linalg::{affine_chart, dot, AffineChart};
use crate::space::{farthest_radius_unchecked, NormSpec, Point, PointSet};

/// Total Newton-step budget per solve.
pub const NEWTON_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierSolution {
    pub point: Point,
    /// r(point, F), evaluated directly.
    pub radius: f64,
    /// Certified upper bound on `radius − rad_V(F)`.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
enum Cons {
    /// a0 + ay·y + at·s − b ≤ 0
    Lin { a0: f64, ay: Vec<f64>, at: f64, b: f64 },
    /// ‖c0 + M y‖_p + at·s − rhs ≤ 0
    Norm {
        c0: Vec<f64>,
        m: Vec<Vec<f64>>,
        p: f64,
        at: f64,
        rhs: f64,
    },
}

impl Cons {
    fn with_epigraph(self, at: f64) -> Cons {
        match self {
            Cons::Lin { a0, ay, b, .. } => Cons::Lin { a0, ay, at, b },
            Cons::Norm { c0, m, p, rhs, .. } => Cons::Norm { c0, m, p, at, rhs },
        }
    }

    fn value(&self, y: &[f64], s: f64) -> f64 {
        match self {
            Cons::Lin { a0, ay, at, b } => a0 + dot(ay, y) + at * s - b,
            Cons::Norm { c0, m, p, at, rhs } => {
                let x = affine(c0, m, y);
                crate::space::p_norm(&x, *p) + at * s - rhs
            }
        }
    }

    /// Value, gradient (over y then s) and Hessian of the constraint.
    fn derivatives(&self, y: &[f64], s: f64, k: usize) -> (f64, Vec<f64>, Option<DMatrix<f64>>) {
        match self {
            Cons::Lin { a0, ay, at, b } => {
                let mut g = ay.clone();
                g.push(*at);
                (a0 + dot(ay, y) + at * s - b, g, None)
            }
            Cons::Norm { c0, m, p, at, rhs } => {
                let x = affine(c0, m, y);
                let n = crate::space::p_norm(&x, *p);
                let value = n + at * s - rhs;
                let mut g = vec![0.0; k + 1];
                g[k] = *at;
                let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                if n <= 1e-14 * (1.0 + scale) || n == 0.0 {
                    return (value, g, None);
                }
                let gx: Vec<f64> = x
                    .iter()
                    .map(|xi| xi.signum() * (xi.abs() / n).powf(p - 1.0))
                    .collect();
                let floor = 1e-12;
                let diag: Vec<f64> = x
                    .iter()
                    .map(|xi| (xi.abs() / n).max(floor).powf(p - 2.0))
                    .collect();
                let len = x.len();
                let mut hx = DMatrix::<f64>::zeros(len, len);
                for i in 0..len {
                    for j in 0..len {
                        let d = if i == j { diag[i] } else { 0.0 };
                        hx[(i, j)] = (p - 1.0) / n * (d - gx[i] * gx[j]);
                    }
                }
                let mm = DMatrix::from_fn(len, k, |i, j| m[i][j]);
                let gy = mm.transpose() * DVector::from_column_slice(&gx);
                g[..k].copy_from_slice(gy.as_slice());
                let hy = mm.transpose() * hx * &mm;
                let mut h = DMatrix::<f64>::zeros(k + 1, k + 1);
                h.view_mut((0, 0), (k, k)).copy_from(&hy);
                (value, g, Some(h))
            }
        }
    }
}

fn affine(c0: &[f64], m: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    c0.iter()
        .zip(m)
        .map(|(c, row)| c + dot(row, y))
        .collect()
}

struct Problem {
    k: usize,
    cons: Vec<Cons>,
}

struct Iterate {
    y: Vec<f64>,
    s: f64,
    newton_steps: usize,
    tau: f64,
    converged: bool,
}

impl Problem {
    fn max_value(&self, y: &[f64], s: f64) -> f64 {
        self.cons
            .iter()
            .map(|c| c.value(y, s))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn barrier(&self, y: &[f64], s: f64, tau: f64) -> f64 {
        let mut phi = tau * s;
        for c in &self.cons {
            let v = c.value(y, s);
            if v >= 0.0 || !v.is_finite() {
                return f64::INFINITY;
            }
            phi -= (-v).ln();
        }
        phi
    }

    /// Minimizes `s` from a strictly feasible start. `stop` is consulted
    /// after each centering step with (s, m/τ).
    fn solve(
        &self,
        y0: Vec<f64>,
        s0: f64,
        gap_tol: f64,
        budget: usize,
        stop: impl Fn(f64, f64) -> bool,
    ) -> Result<Iterate> {
        let k = self.k;
        let m = self.cons.len().max(1) as f64;
        let mut y = y0;
        let mut s = s0;
        if self.max_value(&y, s) >= 0.0 {
            return Err(Error::Internal("barrier start is not strictly feasible".into()));
        }
        let mut tau = (m / (1.0 + s.abs())).max(1e-3);
        let mu = 8.0;
        let mut steps = 0usize;
        loop {
            // Centering.
            for _ in 0..200 {
                if steps >= budget {
                    return Ok(Iterate {
                        y,
                        s,
                        newton_steps: steps,
                        tau,
                        converged: false,
                    });
                }
                steps += 1;
                let mut grad = vec![0.0; k + 1];
                grad[k] = tau;
                let mut hess = DMatrix::<f64>::zeros(k + 1, k + 1);
                for c in &self.cons {
                    let (v, g, h) = c.derivatives(&y, s, k);
                    let w = -1.0 / v;
                    for i in 0..=k {
                        grad[i] += w * g[i];
                        for j in 0..=k {
                            hess[(i, j)] += w * w * g[i] * g[j];
                        }
                    }
                    if let Some(h) = h {
                        hess += h * w;
                    }
                }
                let gv = DVector::from_vec(grad.clone());
                let Some(step) = newton_direction(&hess, &gv) else {
                    break;
                };
                let decrement = -gv.dot(&step);
                if decrement.abs() <= 1e-18 || decrement / 2.0 <= 1e-11 {
                    break;
                }
                let phi0 = self.barrier(&y, s, tau);
                let mut alpha = 1.0;
                let mut accepted = false;
                for _ in 0..60 {
                    let ny: Vec<f64> = y.iter().zip(step.iter()).map(|(a, d)| a + alpha * d).collect();
                    let ns = s + alpha * step[k];
                    let phi = self.barrier(&ny, ns, tau);
                    if phi.is_finite() && phi <= phi0 - 0.25 * alpha * decrement {
                        y = ny;
                        s = ns;
                        accepted = true;
                        break;
                    }
                    alpha *= 0.5;
                }
                if !accepted {
                    break;
                }
            }
            let bound = m / tau;
            if bound <= gap_tol || stop(s, bound) {
                return Ok(Iterate {
                    y,
                    s,
                    newton_steps: steps,
                    tau,
                    converged: true,
                });
            }
            tau *= mu;
        }
    }
}

fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let n = h.nrows();
    let trace = (0..n).map(|i| h[(i, i)].abs()).sum::<f64>().max(1e-300);
    let mut ridge = 0.0;
    for _ in 0..12 {
        let mut hr = h.clone();
        for i in 0..n {
            hr[(i, i)] += ridge;
        }
        if let Some(ch) = hr.cholesky() {
            let d = ch.solve(&(-g));
            if d.iter().all(|v| v.is_finite()) {
                return Some(d);
            }
        }
        ridge = if ridge == 0.0 { 1e-14 * trace } else { ridge * 100.0 };
    }
    None
}

fn linear_in_chart(chart: &AffineChart, a: &[f64], b: f64) -> Cons {
    Cons::Lin {
        a0: dot(a, &chart.origin),
        ay: chart.directions.iter().map(|d| dot(d, a)).collect(),
        at: 0.0,
        b,
    }
}

fn norm_in_chart(chart: &AffineChart, offset: usize, len: usize, p: f64, shift: &[f64], rhs: f64) -> Cons {
    Cons::Norm {
        c0: (0..len).map(|i| chart.origin[offset + i] - shift[i]).collect(),
        m: (0..len)
            .map(|i| chart.directions.iter().map(|d| d[offset + i]).collect())
            .collect(),
        p,
        at: 0.0,
        rhs,
    }
}

/// Detects inequality rows that hold with equality on all of V's linear part
/// and moves them to the equalities, so that the remainder has a relative
/// interior.
fn promote_implicit_equalities(v: &Compiled) -> Result<Compiled> {
    use crate::lp::{LinearProgram, LpOutcome};
    let mut out = v.clone();
    let mut i = 0;
    while i < out.ineq.len() {
        let (a, b) = out.ineq[i].clone();
        let mut lp = LinearProgram::new(v.dim);
        lp.set_objective(a.clone());
        let linear = Compiled {
            balls: Vec::new(),
            ..out.clone()
        };
        linear.push_linear(&mut lp, 0);
        let pinned = match lp.solve()? {
            LpOutcome::Optimal(s) => s.value >= b - 1e-10 * (1.0 + b.abs()),
            LpOutcome::Infeasible => {
                return Err(Error::Internal("constraint set is empty".into()));
            }
            LpOutcome::Unbounded => false,
        };
        if pinned {
            out.ineq.remove(i);
            out.eq.push((a, b));
        } else {
            i += 1;
        }
    }
    Ok(out)
}

/// Computes an (approximate) restricted center of `f` over `v` together with
/// a certified optimality gap ≤ `tol` on convergence.
pub fn minimize_radius(n: &NormSpec, v: &Compiled, f: &PointSet, tol: f64) -> Result<BarrierSolution> {
    let d = n.dim();
    if f.dim() != d || v.dim != d {
        return Err(crate::error::dim_mismatch(d, f.dim()));
    }
    let v = if v.ineq.is_empty() {
        v.clone()
    } else {
        promote_implicit_equalities(v)?
    };
    let chart = affine_chart(
        &v.eq.iter().map(|(a, _)| a.clone()).collect::<Vec<_>>(),
        &v.eq.iter().map(|(_, b)| *b).collect::<Vec<_>>(),
        d,
        1e-10,
    )
    .ok_or_else(|| Error::Internal("inconsistent equality constraints".into()))?;
    let k = chart.dim();

    let mut v_cons: Vec<Cons> = v
        .ineq
        .iter()
        .map(|(a, b)| linear_in_chart(&chart, a, *b))
        .collect();
    for ball in &v.balls {
        let zero = vec![0.0; ball.len];
        v_cons.push(norm_in_chart(&chart, ball.offset, ball.len, ball.p, &zero, ball.radius));
    }

    // Start at the chart coordinates of the mean of F.
    let mean: Vec<f64> = (0..d)
        .map(|i| f.iter().map(|b| b[i]).sum::<f64>() / f.len() as f64)
        .collect();
    let mut y = chart.coordinates(&mean);
    let mut steps = 0usize;

    if !v_cons.is_empty() {
        let phase1 = Problem {
            k,
            cons: v_cons
                .iter()
                .cloned()
                .map(|c| c.with_epigraph(-1.0))
                .chain(std::iter::once(Cons::Lin {
                    a0: 0.0,
                    ay: vec![0.0; k],
                    at: -1.0,
                    b: 1.0,
                }))
                .collect(),
        };
        let worst = v_cons
            .iter()
            .map(|c| c.value(&y, 0.0))
            .fold(f64::NEG_INFINITY, f64::max);
        if worst >= 0.0 {
            let s0 = worst.max(0.0) + 1.0;
            let it = phase1.solve(y.clone(), s0, 1e-9, NEWTON_CAP, |s, bound| {
                s < 0.0 && bound < 0.5 * s.abs()
            })?;
            steps += it.newton_steps;
            if it.s >= 0.0 {
                return Err(Error::Internal(
                    "constraint set has no relative interior point".into(),
                ));
            }
            y = it.y;
        }
    }

    let mut cons = v_cons;
    for b in f.iter() {
        for leaf in n.leaves() {
            if leaf.is_box() {
                for i in leaf.offset..leaf.offset + leaf.len {
                    let mut e = vec![0.0; d];
                    e[i] = 1.0;
                    cons.push(linear_in_chart(&chart, &e, b[i]).with_epigraph(-1.0));
                    e[i] = -1.0;
                    cons.push(linear_in_chart(&chart, &e, -b[i]).with_epigraph(-1.0));
                }
            } else if let crate::space::LeafKind::P(p) = leaf.kind {
                let shift = &b[leaf.offset..leaf.offset + leaf.len];
                cons.push(norm_in_chart(&chart, leaf.offset, leaf.len, p, shift, 0.0).with_epigraph(-1.0));
            }
        }
    }
    let problem = Problem { k, cons };
    let x0 = chart.embed(&y);
    let t0 = farthest_radius_unchecked(n, &x0, f) * 1.1 + 1.0;
    let gap_tol = (0.5 * tol).max(1e-13);
    let it = problem.solve(y, t0, gap_tol, NEWTON_CAP.saturating_sub(steps), |_, _| false)?;
    steps += it.newton_steps;
    let x = chart.embed(&it.y);
    let radius = farthest_radius_unchecked(n, &x, f);
    let m = problem.cons.len() as f64;
    let lower = it.s - m / it.tau;
    let gap = (radius - lower).max(0.0);
    Ok(BarrierSolution {
        point: Point::new(x).map_err(|_| Error::Internal("non-finite barrier iterate".into()))?,
        radius,
        gap,
        iterations: steps,
        converged: it.converged && gap <= tol.max(1e-12),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ConstraintSet;
    use approx::assert_abs_diff_eq;

    fn solve(n: &NormSpec, v: &ConstraintSet, rows: &[&[f64]]) -> BarrierSolution {
        let f = PointSet::from_rows(rows).unwrap();
        minimize_radius(n, &v.compile(n).unwrap(), &f, 1e-10).unwrap()
    }

    #[test]
    fn euclidean_two_points() {
        let n = NormSpec::p(2.0, 2).unwrap();
        let s = solve(&n, &ConstraintSet::WholeSpace, &[&[1.0, 0.0], &[-1.0, 0.0]]);
        assert!(s.converged);
        assert_abs_diff_eq!(s.radius, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.point[0], 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(s.point[1], 0.0, epsilon = 1e-6);
    }

    #[test]
    fn projection_onto_line() {
        let n = NormSpec::p(2.0, 2).unwrap();
        let v = ConstraintSet::AffineSubspace {
            a: vec![vec![0.0, 1.0]],
            c: vec![1.0],
        };
        let s = solve(&n, &v, &[&[0.0, 0.0]]);
        assert_abs_diff_eq!(s.radius, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.point[0], 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(s.point[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn max_norm_matches_lp_value() {
        let n = NormSpec::max(2).unwrap();
        let s = solve(&n, &ConstraintSet::WholeSpace, &[&[0.0, 0.0], &[2.0, 0.0], &[0.0, 2.0]]);
        assert_abs_diff_eq!(s.radius, 1.0, epsilon = 1e-9);
        assert!(s.gap <= 1e-9);
    }

    #[test]
    fn nearest_point_of_disk() {
        let n = NormSpec::p(2.0, 2).unwrap();
        let s = solve(&n, &ConstraintSet::ball(2, 1.0), &[&[2.0, 0.0]]);
        assert_abs_diff_eq!(s.radius, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.point[0], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn pinched_polytope_uses_implicit_equality() {
        let n = NormSpec::p(2.0, 2).unwrap();
        let v = ConstraintSet::HPolytope {
            g: vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]],
            h: vec![0.5, -0.5, 1.0, 1.0],
        };
        let s = solve(&n, &v, &[&[0.0, 0.0]]);
        assert_abs_diff_eq!(s.radius, 0.5, epsilon = 1e-9);
    }
}
