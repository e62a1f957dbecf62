//! S(F, δ) = sup{ d(v, cent_V(F)) : v ∈ V, r(v, F) ≤ rad_V(F) + δ }, its
//! curves over δ, and the containment cent_V(F, δ) ⊆ cent_V(F) + ε·B_X.
//!
//! In the max-norm polyhedral case S is exact: d(·, cent) is convex, so its
//! maximum over the enlargement polytope is attained at a vertex. Everywhere
//! else the value is a sampled lower bound.

use serde::Serialize;

use crate::domain::{Compiled, ConstraintSet, Polytope};
use crate::error::{dim_mismatch, Error, Result};
use crate::par;
use crate::solver::{
    polyhedral_radius, polytope_at_radius, sample_sublevel_boundary, Settings,
};
use crate::barrier::minimize_radius;
use crate::space::{NormSpec, Point, PointSet};

/// Number of levels in the geometric grid used by [`estimate_delta`].
pub const DELTA_LEVELS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "path", rename_all = "snake_case")]
pub enum SPath {
    Exact,
    Sampled { count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SValue {
    pub delta: f64,
    pub value: f64,
    #[serde(flatten)]
    pub path: SPath,
    /// The enlargement point farthest from the center set.
    pub witness: Point,
}

/// Precomputed pieces shared by every δ for one instance.
pub struct P1Instance {
    norm: NormSpec,
    v: Compiled,
    f: PointSet,
    radius: f64,
    center: Centers,
}

enum Centers {
    Polytope(Polytope),
    Point(Point),
}

impl P1Instance {
    pub fn new(n: &NormSpec, v: &ConstraintSet, f: &PointSet, settings: &Settings) -> Result<Self> {
        if f.dim() != n.dim() {
            return Err(dim_mismatch(n.dim(), f.dim()));
        }
        let compiled = v.compile(n)?;
        let (radius, center) = if n.is_max_family() && compiled.is_polyhedral() {
            let r = polyhedral_radius(n, &compiled, f)?.0.max(0.0);
            (r, Centers::Polytope(polytope_at_radius(n, &compiled, f, r)?))
        } else {
            let s = minimize_radius(n, &compiled, f, settings.tol)?;
            (s.radius, Centers::Point(s.point))
        };
        Ok(P1Instance {
            norm: n.clone(),
            v: compiled,
            f: f.clone(),
            radius,
            center,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.center, Centers::Polytope(_))
    }

    fn distance_to_center(&self, x: &[f64]) -> Result<f64> {
        match &self.center {
            Centers::Polytope(p) => p.max_norm_distance(x),
            Centers::Point(c) => Ok(self.norm.norm_diff(x, c)),
        }
    }

    fn center_point(&self) -> Result<Point> {
        match &self.center {
            Centers::Polytope(p) => p
                .vertices()
                .ok()
                .and_then(|v| v.first().cloned())
                .map(Ok)
                .unwrap_or_else(|| {
                    // Too large to enumerate: any feasible point of the set works.
                    let n = p.dim();
                    match p.maximize(&vec![0.0; n])? {
                        crate::lp::LpOutcome::Optimal(s) => Ok(Point::from_vec_unchecked(s.x)),
                        _ => Err(Error::Internal("center polytope has no feasible point".into())),
                    }
                }),
            Centers::Point(c) => Ok(c.clone()),
        }
    }

    /// Candidate points of cent_V(F, δ) and whether they are its full vertex set.
    fn enlargement_candidates(&self, delta: f64, settings: &Settings) -> Result<(Vec<Point>, SPath)> {
        if let Centers::Polytope(_) = self.center {
            let p = polytope_at_radius(&self.norm, &self.v, &self.f, self.radius + delta)?;
            match p.vertices_with(par::Execution::Sequential) {
                Ok(v) => return Ok((v.to_vec(), SPath::Exact)),
                Err(Error::Capability(_)) => {}
                Err(e) => return Err(e),
            }
        }
        let c = self.center_point()?;
        let pts = sample_sublevel_boundary(
            &self.norm,
            &self.v,
            &self.f,
            &c,
            self.radius + delta,
            settings,
        )?;
        let count = pts.len();
        Ok((pts, SPath::Sampled { count }))
    }

    pub fn s_value(&self, delta: f64, settings: &Settings) -> Result<SValue> {
        if !(delta >= 0.0) {
            return Err(Error::Domain(format!("delta must be non-negative, got {delta}")));
        }
        let (cands, path) = self.enlargement_candidates(delta, settings)?;
        let mut best: Option<(f64, Point)> = None;
        for p in cands {
            let d = self.distance_to_center(&p)?;
            // Ties go to the later candidate (lexicographically larger vertex).
            if best.as_ref().is_none_or(|(b, _)| d >= *b) {
                best = Some((d, p));
            }
        }
        let (value, witness) =
            best.ok_or_else(|| Error::Internal("enlargement set has no candidates".into()))?;
        Ok(SValue {
            delta,
            value: value.max(0.0),
            path,
            witness,
        })
    }

    pub fn curve(&self, deltas: &[f64], settings: &Settings) -> Result<P1Curve> {
        let points = par::try_map_range(settings.exec, deltas.len(), |i| {
            self.s_value(deltas[i], settings)
        })?;
        Ok(P1Curve::from_points(points, settings.tol))
    }
}

pub fn s_value(
    n: &NormSpec,
    v: &ConstraintSet,
    f: &PointSet,
    delta: f64,
    settings: &Settings,
) -> Result<SValue> {
    P1Instance::new(n, v, f, settings)?.s_value(delta, settings)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct P1Curve {
    pub points: Vec<SValue>,
    /// S nondecreasing in δ (within tol).
    pub monotone: bool,
    /// Every point on the curve is exact.
    pub exact: bool,
}

impl P1Curve {
    fn from_points(points: Vec<SValue>, tol: f64) -> Self {
        let monotone = points
            .windows(2)
            .all(|w| w[1].delta < w[0].delta || w[1].value + tol >= w[0].value);
        let exact = points.iter().all(|p| p.path == SPath::Exact);
        P1Curve {
            points,
            monotone,
            exact,
        }
    }

    /// (δ, S) pairs in curve order.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.delta, p.value)).collect()
    }
}

pub fn s_curve(
    n: &NormSpec,
    v: &ConstraintSet,
    f: &PointSet,
    deltas: &[f64],
    settings: &Settings,
) -> Result<P1Curve> {
    P1Instance::new(n, v, f, settings)?.curve(deltas, settings)
}

/// δ grid `{0} ∪ {base·2^{−k} : k = levels−1, …, 0}` in increasing order.
pub fn geometric_deltas(base: f64, levels: usize) -> Vec<f64> {
    let mut out = vec![0.0];
    out.extend((0..levels).rev().map(|k| base * 0.5f64.powi(k as i32)));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaEstimate {
    pub eps: f64,
    /// Largest grid value with S(F, δ) < ε; 0 when none qualifies.
    pub delta: f64,
    /// S(F, δ) at the returned δ (the certificate).
    pub s_at_delta: f64,
    pub certified: bool,
    pub exact: bool,
    pub levels_tried: usize,
}

impl P1Instance {
    /// Scans ε·2^{−k}, k = 0, 1, …, and returns the first (largest) δ with S < ε.
    pub fn estimate_delta(&self, eps: f64, settings: &Settings) -> Result<DeltaEstimate> {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("eps must be positive, got {eps}")));
        }
        let mut exact = true;
        for k in 0..DELTA_LEVELS {
            let delta = eps * 0.5f64.powi(k as i32);
            let s = self.s_value(delta, settings)?;
            exact &= s.path == SPath::Exact;
            if s.value < eps {
                return Ok(DeltaEstimate {
                    eps,
                    delta,
                    s_at_delta: s.value,
                    certified: true,
                    exact,
                    levels_tried: k + 1,
                });
            }
        }
        Ok(DeltaEstimate {
            eps,
            delta: 0.0,
            s_at_delta: 0.0,
            certified: false,
            exact,
            levels_tried: DELTA_LEVELS,
        })
    }

    pub fn check_containment(&self, delta: f64, eps: f64, settings: &Settings) -> Result<Containment> {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("eps must be positive, got {eps}")));
        }
        let s = self.s_value(delta, settings)?;
        Ok(if s.value <= eps {
            Containment::Holds { s_value: s.value }
        } else {
            Containment::Violated {
                witness: s.witness,
                distance: s.value,
            }
        })
    }
}

pub fn estimate_delta(
    n: &NormSpec,
    v: &ConstraintSet,
    f: &PointSet,
    eps: f64,
    settings: &Settings,
) -> Result<DeltaEstimate> {
    P1Instance::new(n, v, f, settings)?.estimate_delta(eps, settings)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Containment {
    Holds { s_value: f64 },
    /// A vertex of cent_V(F, δ) farther than ε from cent_V(F).
    Violated { witness: Point, distance: f64 },
}

impl Containment {
    pub fn holds(&self) -> bool {
        matches!(self, Containment::Holds { .. })
    }
}

pub fn check_containment(
    n: &NormSpec,
    v: &ConstraintSet,
    f: &PointSet,
    delta: f64,
    eps: f64,
    settings: &Settings,
) -> Result<Containment> {
    P1Instance::new(n, v, f, settings)?.check_containment(delta, eps, settings)
}
