//! Restricted Chebyshev radius rad_V(F), center set cent_V(F) and enlargement
//! sets cent_V(F, δ).
//!
//! Two paths:
//! * exact: max-norm family over polyhedral V, one LP for the radius and the
//!   full optimal set as a polytope;
//! * iterative: any norm, log-barrier interior point with a certified gap.
//!
//! [`amir_iterate`] runs the truncated-step construction for ℓ∞-sums of ℓ_p
//! blocks and records the per-step quantities it guarantees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::barrier::{minimize_radius, BarrierSolution};
use crate::domain::{ball_intersection_compiled, Compiled, ConstraintSet, Polytope, Region};
use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::affine_chart;
use crate::lp::{LinearProgram, LpOutcome};
use crate::par::Execution;
use crate::space::{convexity_modulus, farthest_radius_unchecked, LeafKind, NormSpec, Point, PointSet};

/// Run-level knobs shared by the solvers and probes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    /// Comparison tolerance and default target gap for iterative solves.
    pub tol: f64,
    pub exec: Execution,
    /// Seed for every sampling step.
    pub seed: u64,
    /// Number of samples drawn when a set can only be sampled.
    pub samples: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            tol: 1e-9,
            exec: Execution::default(),
            seed: 0,
            samples: 256,
        }
    }
}

#[derive(Debug, Clone)]
pub enum CenterSet {
    SinglePoint(Point),
    PolytopeSet(Polytope),
    Sample(Vec<Point>),
}

impl CenterSet {
    pub fn polytope(&self) -> Option<&Polytope> {
        match self {
            CenterSet::PolytopeSet(p) => Some(p),
            _ => None,
        }
    }

    /// Representative points: the point, the polytope's vertices, or the sample.
    pub fn points(&self) -> Result<Vec<Point>> {
        match self {
            CenterSet::SinglePoint(p) => Ok(vec![p.clone()]),
            CenterSet::PolytopeSet(p) => Ok(p.vertices()?.to_vec()),
            CenterSet::Sample(s) => Ok(s.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "path", rename_all = "snake_case")]
pub enum SolveStatus {
    Exact,
    Iterative {
        tol: f64,
        iterations: usize,
        gap: f64,
        converged: bool,
    },
    Sampled {
        count: usize,
    },
}

impl SolveStatus {
    pub fn path_name(&self) -> &'static str {
        match self {
            SolveStatus::Exact => "exact",
            SolveStatus::Iterative { .. } => "iterative",
            SolveStatus::Sampled { .. } => "sampled",
        }
    }
}

/// One step of the truncated-step construction, measured in the problem
/// normalized to unit radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmirStep {
    pub n: usize,
    /// ‖f_{n+1} − f_n‖.
    pub step_norm: f64,
    /// r(f_{n+1}, B) in the original scale.
    pub radius: f64,
    /// δ′(ε₀ / 2^{n+1}).
    pub modulus: f64,
    /// Number of blocks where the step toward g was truncated.
    pub truncated_blocks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmirTrace {
    pub eps0: f64,
    /// rad_V(B) used for normalization.
    pub scale: f64,
    /// r(f_0, B) in the original scale.
    pub seed_radius: f64,
    /// δ′(ε₀).
    pub seed_modulus: f64,
    pub steps: Vec<AmirStep>,
}

impl AmirTrace {
    /// Index of the first step with ‖f_{n+1} − f_n‖ > 2ε₀/2ⁿ + slack or
    /// r(f_{n+1}, B) > R(1 + δ′(ε₀/2^{n+1})) + slack. `usize::MAX` flags the seed.
    pub fn first_violation(&self, slack: f64) -> Option<usize> {
        if self.seed_radius > self.scale * (1.0 + self.seed_modulus) + slack {
            return Some(usize::MAX);
        }
        self.steps
            .iter()
            .find(|s| {
                s.step_norm > 2.0 * self.eps0 * 0.5f64.powi(s.n as i32) + slack
                    || s.radius > self.scale * (1.0 + s.modulus) + slack
            })
            .map(|s| s.n)
    }
}

#[derive(Debug, Clone)]
pub struct CenterSolution {
    pub radius: f64,
    pub center_set: CenterSet,
    pub status: SolveStatus,
    pub trace: Option<AmirTrace>,
}

impl CenterSolution {
    /// A single center point: the point itself, the first vertex, or the first sample.
    pub fn representative(&self) -> Result<Point> {
        match &self.center_set {
            CenterSet::SinglePoint(p) => Ok(p.clone()),
            CenterSet::PolytopeSet(p) => p
                .vertices()?
                .first()
                .cloned()
                .ok_or_else(|| Error::Internal("empty center polytope".into())),
            CenterSet::Sample(s) => s
                .first()
                .cloned()
                .ok_or_else(|| Error::Internal("empty center sample".into())),
        }
    }
}

fn check_dims(n: &NormSpec, f: &PointSet) -> Result<()> {
    if f.dim() != n.dim() {
        return Err(dim_mismatch(n.dim(), f.dim()));
    }
    Ok(())
}

/// Exact radius by LP: minimize t subject to −t ≤ (v − b)_i ≤ t and v ∈ V.
pub(crate) fn polyhedral_radius(n: &NormSpec, v: &Compiled, f: &PointSet) -> Result<(f64, Point)> {
    let d = n.dim();
    let mut lp = LinearProgram::new(d + 1);
    let mut c = vec![0.0; d + 1];
    c[d] = 1.0;
    lp.set_objective(c);
    for b in f.iter() {
        for i in 0..d {
            let mut r = vec![0.0; d + 1];
            r[i] = 1.0;
            r[d] = -1.0;
            lp.le(r.clone(), b[i]);
            r[i] = -1.0;
            lp.le(r, -b[i]);
        }
    }
    v.push_linear(&mut lp, 0);
    match lp.solve()? {
        LpOutcome::Optimal(s) => Ok((s.value, Point::from_vec_unchecked(s.x[..d].to_vec()))),
        LpOutcome::Infeasible => Err(Error::Internal("radius LP infeasible: V is empty".into())),
        LpOutcome::Unbounded => Err(Error::Internal("radius LP unbounded".into())),
    }
}

/// The exact center polytope at a computed radius. The LP radius can sit a
/// rounding error below the true value, so the set is rebuilt with a
/// vanishing slack if the first attempt comes out empty.
pub(crate) fn polytope_at_radius(
    n: &NormSpec,
    v: &Compiled,
    f: &PointSet,
    radius: f64,
) -> Result<Polytope> {
    for slack in [0.0, 1e-12, 1e-10] {
        if let Region::Polytope(p) =
            ball_intersection_compiled(n, f, radius + slack * (1.0 + radius), v)?
        {
            return Ok(p);
        }
    }
    Err(Error::Internal("center polytope is empty at the optimal radius".into()))
}

/// Exact radius and full center set for the max-norm family over polyhedral V.
pub fn solve_polyhedral(n: &NormSpec, v: &ConstraintSet, f: &PointSet) -> Result<CenterSolution> {
    check_dims(n, f)?;
    let compiled = v.compile(n)?;
    solve_polyhedral_compiled(n, &compiled, f)
}

pub(crate) fn solve_polyhedral_compiled(
    n: &NormSpec,
    v: &Compiled,
    f: &PointSet,
) -> Result<CenterSolution> {
    if !n.is_max_family() || !v.is_polyhedral() {
        return Err(Error::Precondition(
            "exact path needs a max-family norm and a polyhedral constraint set".into(),
        ));
    }
    let (radius, _) = polyhedral_radius(n, v, f)?;
    let radius = radius.max(0.0);
    let poly = polytope_at_radius(n, v, f, radius)?;
    Ok(CenterSolution {
        radius,
        center_set: CenterSet::PolytopeSet(poly),
        status: SolveStatus::Exact,
        trace: None,
    })
}

fn iterative_solution(sol: BarrierSolution, tol: f64) -> CenterSolution {
    CenterSolution {
        radius: sol.radius,
        center_set: CenterSet::SinglePoint(sol.point),
        status: SolveStatus::Iterative {
            tol,
            iterations: sol.iterations,
            gap: sol.gap,
            converged: sol.converged,
        },
        trace: None,
    }
}

/// Restricted center for norms whose leaves are ℓ_p (1 < p < ∞), by the
/// interior-point method; the gap in the status is a certified bound.
pub fn solve_uniformly_convex(
    n: &NormSpec,
    v: &ConstraintSet,
    f: &PointSet,
    tol: f64,
) -> Result<CenterSolution> {
    check_dims(n, f)?;
    if n
        .leaves()
        .iter()
        .any(|l| matches!(l.kind, LeafKind::Max) && l.len > 1)
    {
        return Err(Error::Precondition(
            "uniformly convex path needs every leaf norm to be an l_p norm".into(),
        ));
    }
    let compiled = v.compile(n)?;
    Ok(iterative_solution(minimize_radius(n, &compiled, f, tol)?, tol))
}

/// Dispatches to the exact path when available and to the interior-point
/// path otherwise.
pub fn solve(n: &NormSpec, v: &ConstraintSet, f: &PointSet, settings: &Settings) -> Result<CenterSolution> {
    check_dims(n, f)?;
    let compiled = v.compile(n)?;
    solve_compiled(n, &compiled, f, settings)
}

pub(crate) fn solve_compiled(
    n: &NormSpec,
    v: &Compiled,
    f: &PointSet,
    settings: &Settings,
) -> Result<CenterSolution> {
    if n.is_max_family() && v.is_polyhedral() {
        solve_polyhedral_compiled(n, v, f)
    } else {
        Ok(iterative_solution(
            minimize_radius(n, v, f, settings.tol)?,
            settings.tol,
        ))
    }
}

/// rad_V(F) by whichever path applies.
pub fn radius(n: &NormSpec, v: &ConstraintSet, f: &PointSet, settings: &Settings) -> Result<f64> {
    check_dims(n, f)?;
    let compiled = v.compile(n)?;
    if n.is_max_family() && compiled.is_polyhedral() {
        Ok(polyhedral_radius(n, &compiled, f)?.0.max(0.0))
    } else {
        Ok(minimize_radius(n, &compiled, f, settings.tol)?.radius)
    }
}

/// cent_V(F, δ) = {v ∈ V : r(v, F) ≤ rad_V(F) + δ}.
#[derive(Debug, Clone)]
pub struct Enlargement {
    pub radius: f64,
    pub delta: f64,
    pub set: CenterSet,
    pub status: SolveStatus,
}

pub fn enlargement(
    n: &NormSpec,
    v: &ConstraintSet,
    f: &PointSet,
    delta: f64,
    settings: &Settings,
) -> Result<Enlargement> {
    check_dims(n, f)?;
    if !(delta >= 0.0) {
        return Err(Error::Domain(format!("delta must be non-negative, got {delta}")));
    }
    let compiled = v.compile(n)?;
    if n.is_max_family() && compiled.is_polyhedral() {
        let sol = solve_polyhedral_compiled(n, &compiled, f)?;
        let set = if delta == 0.0 {
            sol.center_set
        } else {
            CenterSet::PolytopeSet(polytope_at_radius(n, &compiled, f, sol.radius + delta)?)
        };
        return Ok(Enlargement {
            radius: sol.radius,
            delta,
            set,
            status: SolveStatus::Exact,
        });
    }
    let sol = minimize_radius(n, &compiled, f, settings.tol)?;
    let sample = sample_sublevel_boundary(n, &compiled, f, &sol.point, sol.radius + delta, settings)?;
    let count = sample.len();
    Ok(Enlargement {
        radius: sol.radius,
        delta,
        set: CenterSet::Sample(sample),
        status: SolveStatus::Sampled { count },
    })
}

/// Samples the boundary of `{v ∈ V : r(v, F) ≤ level}` along random rays
/// from an interior point `center` (bisection per ray). The center itself is
/// the first sample.
pub(crate) fn sample_sublevel_boundary(
    n: &NormSpec,
    v: &Compiled,
    f: &PointSet,
    center: &Point,
    level: f64,
    settings: &Settings,
) -> Result<Vec<Point>> {
    let d = n.dim();
    let chart = affine_chart(
        &v.eq.iter().map(|(a, _)| a.clone()).collect::<Vec<_>>(),
        &v.eq.iter().map(|(_, b)| *b).collect::<Vec<_>>(),
        d,
        1e-10,
    )
    .ok_or_else(|| Error::Internal("inconsistent equality constraints".into()))?;
    let mut out = vec![center.clone()];
    if chart.dim() == 0 {
        return Ok(out);
    }
    let inside = |x: &[f64]| {
        v.contains(x, 1e-12) && farthest_radius_unchecked(n, x, f) <= level
    };
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let reach = 2.0 * level + 1.0;
    for _ in 0..settings.samples {
        let dir: Vec<f64> = (0..chart.dim())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut u = vec![0.0; d];
        for (c, row) in dir.iter().zip(&chart.directions) {
            for (ui, ri) in u.iter_mut().zip(row) {
                *ui += c * ri;
            }
        }
        let un = n.norm(&u);
        if un == 0.0 {
            continue;
        }
        let at = |s: f64| -> Vec<f64> { center.iter().zip(&u).map(|(c, ui)| c + s * ui / un).collect() };
        let (mut lo, mut hi) = (0.0, reach);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if inside(&at(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(Point::from_vec_unchecked(at(lo)));
    }
    Ok(out)
}

/// Runs the truncated-step construction on V = λ·B (a ball of the ℓ∞-sum of
/// ℓ_p blocks), normalized so that rad = 1:
///
/// f_{n+1}(t) = f_n(t) + α(t)(g(t) − f_n(t)),  α(t) = min(1, 2ε_n / ‖g(t) − f_n(t)‖)
///
/// with ε_n = ε₀/2ⁿ and g any point with r(g, B) ≤ 1 + δ′(ε_{n+1}). Stops once
/// δ′(ε_n) < `tol`.
pub fn amir_iterate(
    n: &NormSpec,
    b: &PointSet,
    eps0: f64,
    v: &ConstraintSet,
    tol: f64,
) -> Result<CenterSolution> {
    check_dims(n, b)?;
    let p = common_exponent(n)?;
    let lambda = match v {
        ConstraintSet::SubspaceBall { basis, lambda }
            if crate::linalg::row_space_basis(basis, n.dim(), 1e-10).len() == n.dim() =>
        {
            *lambda
        }
        _ => {
            return Err(Error::Precondition(
                "construction runs on a full-dimensional ball of the product norm".into(),
            ))
        }
    };
    if !(eps0 > 0.0) {
        return Err(Error::Domain(format!("eps0 must be positive, got {eps0}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tol must be positive, got {tol}")));
    }
    let modulus = |e: f64| convexity_modulus(p, e.min(2.0));

    let compiled = v.compile(n)?;
    let base = minimize_radius(n, &compiled, b, (1e-3 * tol).max(1e-13))?;
    let scale = base.radius;
    if !(scale > 1e-12) {
        return Err(Error::Precondition(
            "restricted radius must be positive for the normalized construction".into(),
        ));
    }
    let bs = b.scaled(1.0 / scale);
    let vs = ConstraintSet::ball(n.dim(), lambda / scale).compile(n)?;

    // A point with r(·, B/R) ≤ 1 + target, from a coarse solve first.
    let mut total_iterations = base.iterations;
    let mut near_center = |target: f64| -> Result<Point> {
        let mut t = (0.5 * target).max(1e-13);
        for _ in 0..4 {
            let s = minimize_radius(n, &vs, &bs, t)?;
            total_iterations += s.iterations;
            if s.radius <= 1.0 + target {
                return Ok(s.point);
            }
            t = (t * 0.01).max(1e-13);
        }
        Err(Error::Internal(format!(
            "could not reach radius 1 + {target:e} in the normalized problem"
        )))
    };

    let seed_modulus = modulus(eps0)?;
    let mut f = near_center(seed_modulus)?;
    let seed_radius = farthest_radius_unchecked(n, &f, &bs) * scale;
    let mut steps = Vec::new();
    let mut eps = eps0;
    let mut k = 0usize;
    while modulus(eps)? >= tol {
        if k >= 200 {
            return Err(Error::Internal("construction did not terminate".into()));
        }
        let next_modulus = modulus(eps / 2.0)?;
        let g = near_center(next_modulus)?;
        let mut next = f.to_vec();
        let mut truncated = 0;
        for leaf in n.leaves() {
            let dist = leaf.norm_diff(&g, &f);
            let alpha = if dist <= 2.0 * eps {
                1.0
            } else {
                truncated += 1;
                2.0 * eps / dist
            };
            for i in leaf.offset..leaf.offset + leaf.len {
                next[i] = f[i] + alpha * (g[i] - f[i]);
            }
        }
        let next = Point::from_vec_unchecked(next);
        steps.push(AmirStep {
            n: k,
            step_norm: n.norm_diff(&next, &f),
            radius: farthest_radius_unchecked(n, &next, &bs) * scale,
            modulus: next_modulus,
            truncated_blocks: truncated,
        });
        f = next;
        eps /= 2.0;
        k += 1;
    }
    let center = f.scaled(scale);
    let radius = farthest_radius_unchecked(n, &center, b);
    Ok(CenterSolution {
        radius,
        center_set: CenterSet::SinglePoint(center),
        status: SolveStatus::Iterative {
            tol,
            iterations: total_iterations,
            gap: (radius - (scale - base.gap)).max(0.0),
            converged: true,
        },
        trace: Some(AmirTrace {
            eps0,
            scale,
            seed_radius,
            seed_modulus,
            steps,
        }),
    })
}

fn common_exponent(n: &NormSpec) -> Result<f64> {
    let mut p = None;
    for leaf in n.leaves() {
        let q = match leaf.kind {
            LeafKind::P(q) => q,
            LeafKind::Max => {
                return Err(Error::Precondition(
                    "construction needs l_p blocks with a common exponent".into(),
                ))
            }
        };
        match p {
            None => p = Some(q),
            Some(prev) if prev != q => {
                return Err(Error::Precondition(
                    "construction needs l_p blocks with a common exponent".into(),
                ))
            }
            _ => {}
        }
    }
    p.ok_or_else(|| Error::Instance("norm has no blocks".into()))
}
