//! Constraint sets V and H-polytopes.
//!
//! A [`ConstraintSet`] is compiled against the ambient norm into a
//! [`Compiled`] system of linear equalities, linear inequalities and (for
//! non-box leaves) ℓ_p ball constraints. A set is polyhedral exactly when no
//! ball constraint survives compilation.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{complement_basis, dot, norm2, solve_square};
use crate::lp::{LinearProgram, LpOutcome};
use crate::par::{self, Execution};
use crate::space::{LeafKind, NormSpec, Point, PointSet};

/// Largest ambient dimension for which vertices are enumerated.
pub const MAX_VERTEX_DIM: usize = 8;
/// Row-subset budget for exhaustive vertex enumeration.
pub const MAX_VERTEX_COMBINATIONS: u64 = 4_000_000;
/// Vertices closer than this (coordinatewise) are identified.
pub const VERTEX_DEDUP_TOL: f64 = 1e-9;

const FEAS_TOL: f64 = 1e-9;

/// A non-empty closed convex feasible set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintSet {
    WholeSpace,
    /// Solution set of `a · x = c`.
    AffineSubspace { a: Vec<Vec<f64>>, c: Vec<f64> },
    /// Solution set of `g · x ≤ h`.
    HPolytope { g: Vec<Vec<f64>>, h: Vec<f64> },
    /// λ·B_Y with Y the span of `basis` and B_Y measured in the ambient norm.
    SubspaceBall { basis: Vec<Vec<f64>>, lambda: f64 },
    /// V₁ × … × V_k aligned with the top-level blocks of a direct-sum norm.
    BlockProduct { blocks: Vec<ConstraintSet> },
}

/// ‖x[offset..offset+len]‖_p ≤ radius.
#[derive(Debug, Clone, PartialEq)]
pub struct BallConstraint {
    pub offset: usize,
    pub len: usize,
    pub p: f64,
    pub radius: f64,
}

/// Flattened description of a constraint set in ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Compiled {
    pub dim: usize,
    pub eq: Vec<(Vec<f64>, f64)>,
    pub ineq: Vec<(Vec<f64>, f64)>,
    pub balls: Vec<BallConstraint>,
}

impl Compiled {
    fn whole(dim: usize) -> Self {
        Compiled {
            dim,
            eq: Vec::new(),
            ineq: Vec::new(),
            balls: Vec::new(),
        }
    }

    pub fn is_polyhedral(&self) -> bool {
        self.balls.is_empty()
    }

    fn embed(&mut self, other: Compiled, offset: usize) {
        let lift = |row: Vec<f64>| {
            let mut r = vec![0.0; self.dim];
            r[offset..offset + row.len()].copy_from_slice(&row);
            r
        };
        for (a, b) in other.eq {
            let r = lift(a);
            self.eq.push((r, b));
        }
        for (a, b) in other.ineq {
            let r = lift(a);
            self.ineq.push((r, b));
        }
        for mut ball in other.balls {
            ball.offset += offset;
            self.balls.push(ball);
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.eq
            .iter()
            .all(|(a, b)| (dot(a, x) - b).abs() <= tol * (1.0 + norm2(a)))
            && self
                .ineq
                .iter()
                .all(|(a, b)| dot(a, x) - b <= tol * (1.0 + norm2(a)))
            && self.balls.iter().all(|ball| {
                crate::space::p_norm(&x[ball.offset..ball.offset + ball.len], ball.p)
                    <= ball.radius + tol
            })
    }

    /// Appends the linear part to `lp`, with the point occupying variables
    /// `offset..offset+dim`.
    pub(crate) fn push_linear(&self, lp: &mut LinearProgram, offset: usize) {
        let n = lp.num_vars();
        let lift = |a: &[f64]| {
            let mut r = vec![0.0; n];
            r[offset..offset + a.len()].copy_from_slice(a);
            r
        };
        for (a, b) in &self.eq {
            lp.eq(lift(a), *b);
        }
        for (a, b) in &self.ineq {
            lp.le(lift(a), *b);
        }
    }

    pub fn to_polytope(&self) -> Result<Polytope> {
        if !self.is_polyhedral() {
            return Err(Error::Precondition(
                "constraint set is not polyhedral under this norm".into(),
            ));
        }
        Ok(Polytope::new(self.dim, self.ineq.clone(), self.eq.clone()))
    }
}

impl ConstraintSet {
    /// The box/ball `{x : ‖x‖ ≤ radius}` restricted to a subspace.
    pub fn subspace_ball(basis: Vec<Vec<f64>>, lambda: f64) -> Self {
        ConstraintSet::SubspaceBall { basis, lambda }
    }

    /// Closed ball of radius `lambda` about the origin in the ambient norm.
    pub fn ball(dim: usize, lambda: f64) -> Self {
        let basis = (0..dim)
            .map(|i| {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                e
            })
            .collect();
        ConstraintSet::SubspaceBall { basis, lambda }
    }

    /// The axis-aligned box `[lo, hi]` as an H-polytope.
    pub fn boxed(lo: &[f64], hi: &[f64]) -> Self {
        let d = lo.len();
        let mut g = Vec::new();
        let mut h = Vec::new();
        for i in 0..d {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            g.push(e.clone());
            h.push(hi[i]);
            e[i] = -1.0;
            g.push(e);
            h.push(-lo[i]);
        }
        ConstraintSet::HPolytope { g, h }
    }

    /// Compiles the set under `n` into linear and ball constraints.
    pub fn compile(&self, n: &NormSpec) -> Result<Compiled> {
        let d = n.dim();
        let check_rows = |rows: &[Vec<f64>], rhs: Option<&[f64]>| -> Result<()> {
            for r in rows {
                if r.len() != d {
                    return Err(dim_mismatch(d, r.len()));
                }
                if r.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Instance("non-finite constraint coefficient".into()));
                }
            }
            if let Some(rhs) = rhs {
                if rhs.len() != rows.len() {
                    return Err(Error::Instance(format!(
                        "{} constraint rows but {} right-hand sides",
                        rows.len(),
                        rhs.len()
                    )));
                }
                if rhs.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Instance("non-finite right-hand side".into()));
                }
            }
            Ok(())
        };
        match self {
            ConstraintSet::WholeSpace => Ok(Compiled::whole(d)),
            ConstraintSet::AffineSubspace { a, c } => {
                check_rows(a, Some(c))?;
                let mut out = Compiled::whole(d);
                out.eq = a.iter().cloned().zip(c.iter().cloned()).collect();
                Ok(out)
            }
            ConstraintSet::HPolytope { g, h } => {
                check_rows(g, Some(h))?;
                let mut out = Compiled::whole(d);
                out.ineq = g.iter().cloned().zip(h.iter().cloned()).collect();
                Ok(out)
            }
            ConstraintSet::SubspaceBall { basis, lambda } => {
                check_rows(basis, None)?;
                if !(lambda.is_finite() && *lambda > 0.0) {
                    return Err(Error::Instance(format!(
                        "ball radius must be positive, got {lambda}"
                    )));
                }
                let mut out = Compiled::whole(d);
                out.eq = complement_basis(basis, d, 1e-10)
                    .into_iter()
                    .map(|r| (r, 0.0))
                    .collect();
                for leaf in n.leaves() {
                    if leaf.is_box() {
                        for i in leaf.offset..leaf.offset + leaf.len {
                            let mut e = vec![0.0; d];
                            e[i] = 1.0;
                            out.ineq.push((e.clone(), *lambda));
                            e[i] = -1.0;
                            out.ineq.push((e, *lambda));
                        }
                    } else if let LeafKind::P(p) = leaf.kind {
                        out.balls.push(BallConstraint {
                            offset: leaf.offset,
                            len: leaf.len,
                            p,
                            radius: *lambda,
                        });
                    }
                }
                Ok(out)
            }
            ConstraintSet::BlockProduct { blocks } => {
                let norms = n.blocks().ok_or_else(|| {
                    Error::Instance("block product constraint needs a direct-sum norm".into())
                })?;
                if norms.len() != blocks.len() {
                    return Err(Error::Instance(format!(
                        "block product has {} factors but the norm has {} blocks",
                        blocks.len(),
                        norms.len()
                    )));
                }
                let mut out = Compiled::whole(d);
                let mut offset = 0;
                for (v, bn) in blocks.iter().zip(norms) {
                    let c = v.compile(bn)?;
                    out.embed(c, offset);
                    offset += bn.dim();
                }
                Ok(out)
            }
        }
    }

    /// Compiles and checks non-emptiness (LP for the linear part; ball
    /// constraints are centered at the origin, which must satisfy the rest).
    pub fn validate(&self, n: &NormSpec) -> Result<Compiled> {
        let c = self.compile(n)?;
        let mut lp = LinearProgram::new(c.dim);
        c.push_linear(&mut lp, 0);
        if !c.balls.is_empty() {
            for ball in &c.balls {
                for i in ball.offset..ball.offset + ball.len {
                    let mut e = vec![0.0; c.dim];
                    e[i] = 1.0;
                    lp.le(e.clone(), ball.radius / (ball.len as f64).powf(1.0 / ball.p));
                    e[i] = -1.0;
                    lp.le(e, ball.radius / (ball.len as f64).powf(1.0 / ball.p));
                }
            }
        }
        match lp.solve()? {
            LpOutcome::Infeasible => Err(Error::Instance("constraint set is empty".into())),
            _ => Ok(c),
        }
    }

    pub fn is_polyhedral(&self, n: &NormSpec) -> Result<bool> {
        Ok(self.compile(n)?.is_polyhedral())
    }

    /// Image under x ↦ s·x (s > 0).
    pub fn scaled(&self, s: f64) -> ConstraintSet {
        match self {
            ConstraintSet::WholeSpace => ConstraintSet::WholeSpace,
            ConstraintSet::AffineSubspace { a, c } => ConstraintSet::AffineSubspace {
                a: a.clone(),
                c: c.iter().map(|v| v * s).collect(),
            },
            ConstraintSet::HPolytope { g, h } => ConstraintSet::HPolytope {
                g: g.clone(),
                h: h.iter().map(|v| v * s).collect(),
            },
            ConstraintSet::SubspaceBall { basis, lambda } => ConstraintSet::SubspaceBall {
                basis: basis.clone(),
                lambda: lambda * s,
            },
            ConstraintSet::BlockProduct { blocks } => ConstraintSet::BlockProduct {
                blocks: blocks.iter().map(|b| b.scaled(s)).collect(),
            },
        }
    }
}

/// Membership of `x` in `V` up to `tol`.
pub fn contains(n: &NormSpec, v: &ConstraintSet, x: &[f64], tol: f64) -> Result<bool> {
    if x.len() != n.dim() {
        return Err(dim_mismatch(n.dim(), x.len()));
    }
    Ok(v.compile(n)?.contains(x, tol))
}

/// Distance from `x` to the set, together with how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct SetDistance {
    pub value: f64,
    pub nearest: Point,
    /// Certified optimality gap (0 for the exact LP path).
    pub gap: f64,
    pub exact: bool,
}

/// d(x, V) = inf_{v∈V} ‖x − v‖. Exact LP for the max-norm family over a
/// polyhedral V, interior-point otherwise.
pub fn distance_to_set(n: &NormSpec, x: &[f64], v: &ConstraintSet, tol: f64) -> Result<SetDistance> {
    if x.len() != n.dim() {
        return Err(dim_mismatch(n.dim(), x.len()));
    }
    let compiled = v.compile(n)?;
    if n.is_max_family() && compiled.is_polyhedral() {
        let (value, nearest) = max_norm_distance_lp(x, |lp| compiled.push_linear(lp, 0))?;
        return Ok(SetDistance {
            value,
            nearest,
            gap: 0.0,
            exact: true,
        });
    }
    let f = PointSet::new(vec![Point::new(x.to_vec())?])?;
    let sol = crate::barrier::minimize_radius(n, &compiled, &f, tol)?;
    Ok(SetDistance {
        value: sol.radius,
        nearest: sol.point,
        gap: sol.gap,
        exact: false,
    })
}

/// Solves min ‖x − v‖_∞ with `v` constrained by `add` (variables 0..d; the
/// epigraph variable is index d).
fn max_norm_distance_lp(
    x: &[f64],
    add: impl FnOnce(&mut LinearProgram),
) -> Result<(f64, Point)> {
    let d = x.len();
    let mut lp = LinearProgram::new(d + 1);
    let mut c = vec![0.0; d + 1];
    c[d] = 1.0;
    lp.set_objective(c);
    for i in 0..d {
        let mut r = vec![0.0; d + 1];
        r[i] = -1.0;
        r[d] = -1.0;
        lp.le(r.clone(), -x[i]);
        r[i] = 1.0;
        lp.le(r, x[i]);
    }
    add(&mut lp);
    match lp.solve()? {
        LpOutcome::Optimal(s) => {
            let nearest = Point::from_vec_unchecked(s.x[..d].to_vec());
            Ok((s.value.max(0.0), nearest))
        }
        LpOutcome::Infeasible => Err(Error::Internal("distance LP infeasible: empty set".into())),
        LpOutcome::Unbounded => Err(Error::Internal("distance LP unbounded".into())),
    }
}

/// A row `a · x ≤ b` (or `= b`) with ‖a‖₂ = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// An H-polytope `{x : A x ≤ b, E x = e}` with a write-once vertex cache.
#[derive(Debug, Clone)]
pub struct Polytope {
    dim: usize,
    ineq: Vec<Halfspace>,
    eq: Vec<Halfspace>,
    vertices: OnceLock<std::result::Result<Vec<Point>, Error>>,
}

fn normalize(a: &[f64], b: f64) -> Option<Halfspace> {
    let n = norm2(a);
    if n < 1e-14 {
        return None;
    }
    Some(Halfspace {
        normal: a.iter().map(|v| v / n).collect(),
        offset: b / n,
    })
}

fn same_direction(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn opposite_direction(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x + y).abs() <= tol)
}

impl Polytope {
    /// Builds the polytope, normalizing rows, merging parallel duplicates and
    /// turning opposite pairs that pinch to a hyperplane into equalities.
    pub fn new(dim: usize, ineq: Vec<(Vec<f64>, f64)>, eq: Vec<(Vec<f64>, f64)>) -> Self {
        let mut infeasible_zero_row = false;
        let mut rows: Vec<Halfspace> = Vec::new();
        for (a, b) in ineq {
            match normalize(&a, b) {
                Some(h) => {
                    if let Some(existing) = rows
                        .iter_mut()
                        .find(|r| same_direction(&r.normal, &h.normal, 1e-12))
                    {
                        existing.offset = existing.offset.min(h.offset);
                    } else {
                        rows.push(h);
                    }
                }
                None => infeasible_zero_row |= b < -FEAS_TOL,
            }
        }
        let mut eqs: Vec<Halfspace> = Vec::new();
        for (a, b) in eq {
            match normalize(&a, b) {
                Some(h) => eqs.push(h),
                None => infeasible_zero_row |= b.abs() > FEAS_TOL,
            }
        }
        // Opposite pairs a·x ≤ b, −a·x ≤ b′ with b + b′ ≈ 0 pin a·x = b.
        let mut keep = vec![true; rows.len()];
        for i in 0..rows.len() {
            if !keep[i] {
                continue;
            }
            for j in i + 1..rows.len() {
                if keep[j]
                    && opposite_direction(&rows[i].normal, &rows[j].normal, 1e-12)
                    && (rows[i].offset + rows[j].offset).abs() <= FEAS_TOL
                {
                    eqs.push(Halfspace {
                        normal: rows[i].normal.clone(),
                        offset: 0.5 * (rows[i].offset - rows[j].offset),
                    });
                    keep[i] = false;
                    keep[j] = false;
                    break;
                }
            }
        }
        let mut ineq: Vec<Halfspace> = rows
            .into_iter()
            .zip(keep)
            .filter_map(|(r, k)| k.then_some(r))
            .collect();
        if infeasible_zero_row {
            // 0 ≤ −1 keeps the polytope empty in every downstream LP.
            ineq.push(Halfspace {
                normal: vec![0.0; dim],
                offset: -1.0,
            });
        }
        Polytope {
            dim,
            ineq,
            eq: eqs,
            vertices: OnceLock::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inequalities(&self) -> &[Halfspace] {
        &self.ineq
    }

    pub fn equalities(&self) -> &[Halfspace] {
        &self.eq
    }

    pub(crate) fn push_rows(&self, lp: &mut LinearProgram, offset: usize) {
        let n = lp.num_vars();
        let lift = |a: &[f64]| {
            let mut r = vec![0.0; n];
            r[offset..offset + a.len()].copy_from_slice(a);
            r
        };
        for h in &self.eq {
            lp.eq(lift(&h.normal), h.offset);
        }
        for h in &self.ineq {
            lp.le(lift(&h.normal), h.offset);
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.eq
            .iter()
            .all(|h| (dot(&h.normal, x) - h.offset).abs() <= tol)
            && self.ineq.iter().all(|h| dot(&h.normal, x) - h.offset <= tol)
    }

    pub fn is_empty(&self) -> Result<bool> {
        let mut lp = LinearProgram::new(self.dim);
        self.push_rows(&mut lp, 0);
        Ok(matches!(lp.solve()?, LpOutcome::Infeasible))
    }

    /// Maximizes `c · x` over the polytope.
    pub fn maximize(&self, c: &[f64]) -> Result<LpOutcome> {
        let mut lp = LinearProgram::new(self.dim);
        lp.set_objective(c.iter().map(|v| -v).collect());
        self.push_rows(&mut lp, 0);
        Ok(match lp.solve()? {
            LpOutcome::Optimal(mut s) => {
                s.value = -s.value;
                LpOutcome::Optimal(s)
            }
            other => other,
        })
    }

    pub fn is_bounded(&self) -> Result<bool> {
        // Recession cone {d : A d ≤ 0, E d = 0} must be {0}.
        for i in 0..self.dim {
            for sign in [1.0, -1.0] {
                let mut lp = LinearProgram::new(self.dim);
                let mut c = vec![0.0; self.dim];
                c[i] = -sign;
                lp.set_objective(c);
                for h in &self.eq {
                    lp.eq(h.normal.clone(), 0.0);
                }
                for h in &self.ineq {
                    lp.le(h.normal.clone(), 0.0);
                }
                for j in 0..self.dim {
                    let mut e = vec![0.0; self.dim];
                    e[j] = 1.0;
                    lp.le(e.clone(), 1.0);
                    e[j] = -1.0;
                    lp.le(e, 1.0);
                }
                match lp.solve()? {
                    LpOutcome::Optimal(s) if -s.value > 1e-9 => return Ok(false),
                    LpOutcome::Optimal(_) => {}
                    _ => return Err(Error::Internal("recession LP failed".into())),
                }
            }
        }
        Ok(true)
    }

    /// Whether inequality row `i` can be dropped without changing the set.
    pub fn is_redundant(&self, i: usize) -> Result<bool> {
        let mut others = self.clone_without_cache();
        let row = others.ineq.remove(i);
        match others.maximize(&row.normal)? {
            LpOutcome::Optimal(s) => Ok(s.value <= row.offset + FEAS_TOL),
            LpOutcome::Infeasible => Ok(true),
            LpOutcome::Unbounded => Ok(false),
        }
    }

    fn clone_without_cache(&self) -> Polytope {
        Polytope {
            dim: self.dim,
            ineq: self.ineq.clone(),
            eq: self.eq.clone(),
            vertices: OnceLock::new(),
        }
    }

    /// Copy with redundant inequality rows removed (checked one at a time).
    pub fn irredundant(&self) -> Result<Polytope> {
        let mut p = self.clone_without_cache();
        let mut i = 0;
        while i < p.ineq.len() {
            if p.is_redundant(i)? {
                p.ineq.remove(i);
            } else {
                i += 1;
            }
        }
        Ok(p)
    }

    /// All vertices, lexicographically sorted. Empty list for an empty polytope.
    pub fn vertices(&self) -> Result<&[Point]> {
        self.vertices_with(Execution::default())
    }

    pub fn vertices_with(&self, exec: Execution) -> Result<&[Point]> {
        self.vertices
            .get_or_init(|| self.enumerate_vertices(exec))
            .as_deref()
            .map_err(Clone::clone)
    }

    fn enumerate_vertices(&self, exec: Execution) -> std::result::Result<Vec<Point>, Error> {
        if self.dim > MAX_VERTEX_DIM {
            return Err(Error::Capability(format!(
                "vertex enumeration limited to dim <= {MAX_VERTEX_DIM}, got {}",
                self.dim
            )));
        }
        if self.is_empty()? {
            return Ok(Vec::new());
        }
        if !self.is_bounded()? {
            return Err(Error::Precondition(
                "vertex enumeration requires a bounded polytope".into(),
            ));
        }
        let reduced = self.irredundant()?;
        // Independent equality rows.
        let mut eq_rows: Vec<&Halfspace> = Vec::new();
        for h in &reduced.eq {
            let mut trial: Vec<Vec<f64>> = eq_rows.iter().map(|r| r.normal.clone()).collect();
            trial.push(h.normal.clone());
            if crate::linalg::row_space_basis(&trial, self.dim, 1e-9).len() == trial.len() {
                eq_rows.push(h);
            }
        }
        let k = self.dim.saturating_sub(eq_rows.len());
        let m = reduced.ineq.len();
        if binomial(m as u64, k as u64) > MAX_VERTEX_COMBINATIONS {
            return Err(Error::Capability(format!(
                "vertex enumeration over C({m}, {k}) row subsets exceeds the budget"
            )));
        }
        let subsets = combinations(m, k);
        let candidates = par::map_slice(exec, &subsets, |subset| {
            let mut rows: Vec<&[f64]> = eq_rows.iter().map(|h| h.normal.as_slice()).collect();
            let mut rhs: Vec<f64> = eq_rows.iter().map(|h| h.offset).collect();
            for &i in subset {
                rows.push(&reduced.ineq[i].normal);
                rhs.push(reduced.ineq[i].offset);
            }
            let x = solve_square(&rows, &rhs, 1e-9)?;
            reduced.contains(&x, FEAS_TOL).then_some(x)
        });
        let mut pts: Vec<Vec<f64>> = candidates.into_iter().flatten().collect();
        pts.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut out: Vec<Point> = Vec::new();
        for p in pts {
            let p = Point::from_vec_unchecked(p);
            if !out
                .iter()
                .any(|q| q.max_abs_diff(&p) <= VERTEX_DEDUP_TOL)
            {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// Cartesian product, with `self` on the leading coordinates.
    pub fn product(&self, other: &Polytope) -> Polytope {
        let dim = self.dim + other.dim;
        let lift = |h: &Halfspace, offset: usize| {
            let mut r = vec![0.0; dim];
            r[offset..offset + h.normal.len()].copy_from_slice(&h.normal);
            (r, h.offset)
        };
        let ineq = self
            .ineq
            .iter()
            .map(|h| lift(h, 0))
            .chain(other.ineq.iter().map(|h| lift(h, self.dim)))
            .collect();
        let eq = self
            .eq
            .iter()
            .map(|h| lift(h, 0))
            .chain(other.eq.iter().map(|h| lift(h, self.dim)))
            .collect();
        Polytope::new(dim, ineq, eq)
    }

    /// Image under x ↦ s·x (s > 0).
    pub fn scaled(&self, s: f64) -> Polytope {
        let rows = |v: &[Halfspace]| {
            v.iter()
                .map(|h| (h.normal.clone(), h.offset * s))
                .collect::<Vec<_>>()
        };
        Polytope::new(self.dim, rows(&self.ineq), rows(&self.eq))
    }

    /// Max-norm distance from `x` to the polytope (exact LP).
    pub fn max_norm_distance(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(dim_mismatch(self.dim, x.len()));
        }
        Ok(max_norm_distance_lp(x, |lp| self.push_rows(lp, 0))?.0)
    }

    /// sup_{v∈self} d_∞(v, other), attained at a vertex of `self`.
    pub fn max_norm_deviation(&self, other: &Polytope, exec: Execution) -> Result<f64> {
        let verts = self.vertices_with(exec)?;
        if verts.is_empty() {
            return Ok(0.0);
        }
        if other.is_empty()? {
            return Ok(f64::INFINITY);
        }
        let ds = par::map_slice(exec, verts, |v| other.max_norm_distance(v));
        ds.into_iter()
            .try_fold(0.0f64, |m, d| Ok(m.max(d?)))
    }

    /// Exact Hausdorff distance in the max-norm family.
    pub fn max_norm_hausdorff(&self, other: &Polytope, exec: Execution) -> Result<f64> {
        Ok(self
            .max_norm_deviation(other, exec)?
            .max(other.max_norm_deviation(self, exec)?))
    }

    /// Max-norm diameter of the vertex set.
    pub fn max_norm_diameter(&self) -> Result<f64> {
        let v = self.vertices()?;
        let mut d = 0.0f64;
        for (i, a) in v.iter().enumerate() {
            for b in &v[i + 1..] {
                d = d.max(a.max_abs_diff(b));
            }
        }
        Ok(d)
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u64 = 1;
    for i in 0..k {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Result of intersecting balls with V: either empty or a polytope.
#[derive(Debug, Clone)]
pub enum Region {
    Empty,
    Polytope(Polytope),
}

impl Region {
    pub fn polytope(&self) -> Option<&Polytope> {
        match self {
            Region::Polytope(p) => Some(p),
            Region::Empty => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Region::Empty)
    }
}

/// H-representation of `{v ∈ V : ‖v − z‖ ≤ α for all z ∈ F}` in the max-norm
/// family; each ball contributes 2·dim rows before parallel rows are merged.
pub fn ball_intersection(
    n: &NormSpec,
    f: &PointSet,
    alpha: f64,
    v: &ConstraintSet,
) -> Result<Region> {
    let compiled = v.compile(n)?;
    ball_intersection_compiled(n, f, alpha, &compiled)
}

pub(crate) fn ball_intersection_compiled(
    n: &NormSpec,
    f: &PointSet,
    alpha: f64,
    compiled: &Compiled,
) -> Result<Region> {
    if !n.is_max_family() {
        return Err(Error::Precondition(
            "ball intersections are polytopes only in the max-norm family".into(),
        ));
    }
    if !compiled.is_polyhedral() {
        return Err(Error::Precondition("constraint set must be polyhedral".into()));
    }
    let d = n.dim();
    if f.dim() != d {
        return Err(dim_mismatch(d, f.dim()));
    }
    if alpha < 0.0 {
        return Ok(Region::Empty);
    }
    let mut ineq = compiled.ineq.clone();
    for z in f.iter() {
        for i in 0..d {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            ineq.push((e.clone(), z[i] + alpha));
            e[i] = -1.0;
            ineq.push((e, -z[i] + alpha));
        }
    }
    let p = Polytope::new(d, ineq, compiled.eq.clone());
    if p.is_empty()? {
        Ok(Region::Empty)
    } else {
        Ok(Region::Polytope(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn max(d: usize) -> NormSpec {
        NormSpec::max(d).unwrap()
    }

    fn ps(rows: &[&[f64]]) -> PointSet {
        PointSet::from_rows(rows).unwrap()
    }

    fn assert_vertices(p: &Polytope, expected: &[&[f64]]) {
        let v = p.vertices().unwrap();
        assert_eq!(v.len(), expected.len(), "vertices: {v:?}");
        for e in expected {
            assert!(
                v.iter().any(|x| x.iter().zip(e.iter()).all(|(a, b)| (a - b).abs() < 1e-9)),
                "missing vertex {e:?} in {v:?}"
            );
        }
    }

    #[test]
    fn contains_examples() {
        let n = max(2);
        assert!(contains(&n, &ConstraintSet::WholeSpace, &[1e6, -3.0], 1e-9).unwrap());
        let line = ConstraintSet::AffineSubspace {
            a: vec![vec![1.0, 1.0]],
            c: vec![0.0],
        };
        assert!(contains(&n, &line, &[1.0, -1.0], 1e-9).unwrap());
        let ball = ConstraintSet::subspace_ball(vec![vec![1.0, 0.0]], 1.0);
        assert!(!contains(&n, &ball, &[1.5, 0.0], 1e-9).unwrap());
        assert!(contains(&n, &ball, &[0.5, 0.0], 1e-9).unwrap());
        assert!(!contains(&n, &ball, &[0.5, 0.1], 1e-9).unwrap());
    }

    #[test]
    fn distance_examples() {
        let n = max(2);
        let line = ConstraintSet::AffineSubspace {
            a: vec![vec![1.0, 0.0]],
            c: vec![0.0],
        };
        let d = distance_to_set(&n, &[2.0, 0.0], &line, 1e-9).unwrap();
        assert_abs_diff_eq!(d.value, 2.0, epsilon = 1e-9);
        assert!(d.exact);
        // Nearest point of {x1 ≤ 1, x2 ≤ 1} to (2,2) in max-norm is (1,1).
        let q = ConstraintSet::HPolytope {
            g: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            h: vec![1.0, 1.0],
        };
        let d = distance_to_set(&n, &[2.0, 2.0], &q, 1e-9).unwrap();
        assert_abs_diff_eq!(d.value, 1.0, epsilon = 1e-9);
        let e2 = NormSpec::p(2.0, 2).unwrap();
        let d = distance_to_set(&e2, &[2.0, 0.0], &line, 1e-10).unwrap();
        assert_abs_diff_eq!(d.value, 2.0, epsilon = 1e-7);
        assert!(!d.exact);
    }

    #[test]
    fn vertices_examples() {
        let sq = ConstraintSet::boxed(&[-1.0, -1.0], &[1.0, 1.0])
            .compile(&max(2))
            .unwrap()
            .to_polytope()
            .unwrap();
        assert_vertices(&sq, &[&[1.0, 1.0], &[1.0, -1.0], &[-1.0, 1.0], &[-1.0, -1.0]]);

        let simplex = Polytope::new(
            2,
            vec![
                (vec![-1.0, 0.0], 0.0),
                (vec![0.0, -1.0], 0.0),
                (vec![1.0, 1.0], 1.0),
            ],
            vec![],
        );
        assert_vertices(&simplex, &[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);

        // {x1 = 0, |x2| ≤ 1} written purely with inequalities.
        let seg = Polytope::new(
            2,
            vec![
                (vec![1.0, 0.0], 0.0),
                (vec![-1.0, 0.0], 0.0),
                (vec![0.0, 1.0], 1.0),
                (vec![0.0, -1.0], 1.0),
            ],
            vec![],
        );
        assert_vertices(&seg, &[&[0.0, 1.0], &[0.0, -1.0]]);
    }

    #[test]
    fn vertex_errors() {
        let half = Polytope::new(2, vec![(vec![1.0, 0.0], 0.0)], vec![]);
        assert!(matches!(half.vertices(), Err(Error::Precondition(_))));
        let d = MAX_VERTEX_DIM + 1;
        let big = ConstraintSet::boxed(&vec![0.0; d], &vec![1.0; d])
            .compile(&max(d))
            .unwrap()
            .to_polytope()
            .unwrap();
        assert!(matches!(big.vertices(), Err(Error::Capability(_))));
        let empty = Polytope::new(1, vec![(vec![1.0], 0.0), (vec![-1.0], -1.0)], vec![]);
        assert!(empty.vertices().unwrap().is_empty());
    }

    #[test]
    fn ball_intersection_examples() {
        let n = max(2);
        let f = ps(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        let r = ball_intersection(&n, &f, 1.0, &ConstraintSet::WholeSpace).unwrap();
        assert_vertices(r.polytope().unwrap(), &[&[0.0, 1.0], &[0.0, -1.0]]);

        let r = ball_intersection(&n, &ps(&[&[0.0, 0.0]]), 1.0, &ConstraintSet::WholeSpace)
            .unwrap();
        assert_vertices(
            r.polytope().unwrap(),
            &[&[1.0, 1.0], &[1.0, -1.0], &[-1.0, 1.0], &[-1.0, -1.0]],
        );

        // [b−1.5, b+1.5] over b = ±1 gives [−0.5, 0.5]; V pins x2 = 0.
        let v = ConstraintSet::AffineSubspace {
            a: vec![vec![0.0, 1.0]],
            c: vec![0.0],
        };
        let r = ball_intersection(&n, &f, 1.5, &v).unwrap();
        assert_vertices(r.polytope().unwrap(), &[&[-0.5, 0.0], &[0.5, 0.0]]);

        let r = ball_intersection(&n, &f, 0.9, &ConstraintSet::WholeSpace).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn subspace_ball_compiles_to_box_and_equalities() {
        let c = ConstraintSet::subspace_ball(vec![vec![1.0, 1.0]], 2.0)
            .compile(&max(2))
            .unwrap();
        assert_eq!(c.eq.len(), 1);
        assert_eq!(c.ineq.len(), 4);
        let p = c.to_polytope().unwrap();
        assert_vertices(&p, &[&[2.0, 2.0], &[-2.0, -2.0]]);
        let e = NormSpec::p(2.0, 2).unwrap();
        let c = ConstraintSet::ball(2, 1.0).compile(&e).unwrap();
        assert!(!c.is_polyhedral());
    }

    #[test]
    fn block_product_needs_matching_blocks() {
        let n = NormSpec::direct_sum(vec![max(1), max(1)]).unwrap();
        let v = ConstraintSet::BlockProduct {
            blocks: vec![ConstraintSet::WholeSpace],
        };
        assert!(v.compile(&n).is_err());
        let v = ConstraintSet::BlockProduct {
            blocks: vec![ConstraintSet::WholeSpace, ConstraintSet::ball(1, 1.0)],
        };
        let c = v.compile(&n).unwrap();
        assert_eq!(c.ineq.len(), 2);
        assert!(c.ineq.iter().all(|(a, _)| a[0] == 0.0));
    }

    #[test]
    fn empty_set_is_rejected() {
        let v = ConstraintSet::HPolytope {
            g: vec![vec![1.0], vec![-1.0]],
            h: vec![0.0, -1.0],
        };
        assert!(v.validate(&max(1)).is_err());
    }

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(4, 0), vec![Vec::<usize>::new()]);
        assert_eq!(binomial(60, 6), 50_063_860);
    }
}
