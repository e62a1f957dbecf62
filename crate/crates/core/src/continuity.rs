//! Empirical semicontinuity of F ↦ cent_V(F) on the exact polyhedral path,
//! the quantitative ball-intersection stability check, and the λ·B_Y scaling
//! correspondences.
//!
//! Trial `i` of a run with seed `s` draws from ChaCha8 seeded with `s` on
//! stream `i`, so results do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::domain::{ball_intersection_compiled, Compiled, ConstraintSet, Polytope, Region};
use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::complement_basis;
use crate::par::{self, Execution};
use crate::solver::{polyhedral_radius, polytope_at_radius, Settings};
use crate::space::{hausdorff_finite, NormSpec, Point, PointSet};

fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn perturb_with(n: &NormSpec, f: &PointSet, delta: f64, rng: &mut ChaCha8Rng) -> Result<PointSet> {
    if !(delta >= 0.0) {
        return Err(Error::Domain(format!("delta must be non-negative, got {delta}")));
    }
    let d = f.dim();
    let mut out = Vec::with_capacity(f.len());
    for p in f.iter() {
        let dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let len = n.norm(&dir);
        let rho: f64 = delta * rng.random::<f64>();
        let q: Vec<f64> = if len > 0.0 {
            p.iter().zip(&dir).map(|(x, u)| x + rho * u / len).collect()
        } else {
            p.to_vec()
        };
        out.push(Point::new(q)?);
    }
    PointSet::new(out)
}

/// Moves every point of F by a vector of norm < δ: uniform radius in [0, δ)
/// along a Gaussian direction normalized in the ambient norm.
pub fn perturb(n: &NormSpec, f: &PointSet, delta: f64, seed: u64) -> Result<PointSet> {
    if f.dim() != n.dim() {
        return Err(dim_mismatch(n.dim(), f.dim()));
    }
    perturb_with(n, f, delta, &mut trial_rng(seed, 0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuityRecord {
    pub delta: f64,
    pub trial: usize,
    pub seed: u64,
    /// d_H(F, F′).
    pub dh_f: f64,
    /// d_H(cent(F), cent(F′)).
    pub dh_cent: f64,
    /// sup over cent(F) of the distance to cent(F′).
    pub lower_dev: f64,
    /// sup over cent(F′) of the distance to cent(F).
    pub upper_dev: f64,
}

fn exact_inputs(n: &NormSpec, v: &ConstraintSet, f: &PointSet) -> Result<Compiled> {
    if f.dim() != n.dim() {
        return Err(dim_mismatch(n.dim(), f.dim()));
    }
    let c = v.compile(n)?;
    if !n.is_max_family() || !c.is_polyhedral() {
        return Err(Error::Precondition(
            "continuity probing needs exact center sets: max-family norm, polyhedral set".into(),
        ));
    }
    Ok(c)
}

fn center_polytope(n: &NormSpec, v: &Compiled, f: &PointSet) -> Result<Polytope> {
    let r = polyhedral_radius(n, v, f)?.0.max(0.0);
    polytope_at_radius(n, v, f, r)
}

pub fn continuity_modulus(
    n: &NormSpec,
    v: &ConstraintSet,
    f: &PointSet,
    deltas: &[f64],
    trials: usize,
    seed: u64,
    settings: &Settings,
) -> Result<Vec<ContinuityRecord>> {
    let compiled = exact_inputs(n, v, f)?;
    let base = center_polytope(n, &compiled, f)?;
    base.vertices()?;
    par::try_map_range(settings.exec, deltas.len() * trials, |idx| {
        let delta = deltas[idx / trials];
        let trial = idx % trials;
        let mut rng = trial_rng(seed, idx as u64);
        let g = perturb_with(n, f, delta, &mut rng)?;
        let cent = center_polytope(n, &compiled, &g)?;
        let lower_dev = base.max_norm_deviation(&cent, Execution::Sequential)?;
        let upper_dev = cent.max_norm_deviation(&base, Execution::Sequential)?;
        Ok(ContinuityRecord {
            delta,
            trial,
            seed,
            dh_f: hausdorff_finite(n, f, &g)?,
            dh_cent: lower_dev.max(upper_dev),
            lower_dev,
            upper_dev,
        })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzEstimate {
    /// max d_H(cent, cent′) / d_H(F, F′) over the usable records.
    pub value: f64,
    pub used: usize,
    pub skipped: usize,
}

/// Ratios with d_H(F, F′) below 1e−12 are skipped.
pub fn lipschitz_from_records(records: &[ContinuityRecord]) -> LipschitzEstimate {
    let mut value = 0.0f64;
    let mut used = 0;
    for r in records {
        if r.dh_f >= 1e-12 {
            value = value.max(r.dh_cent / r.dh_f);
            used += 1;
        }
    }
    LipschitzEstimate {
        value,
        used,
        skipped: records.len() - used,
    }
}

pub fn lipschitz_estimate(
    n: &NormSpec,
    v: &ConstraintSet,
    f: &PointSet,
    deltas: &[f64],
    trials: usize,
    seed: u64,
    settings: &Settings,
) -> Result<LipschitzEstimate> {
    Ok(lipschitz_from_records(&continuity_modulus(
        n, v, f, deltas, trials, seed, settings,
    )?))
}

/// γ = (α − R_F)/2, L = α + R_F + 2, δ = min{1, γ/2, γε/(2L)}.
pub fn lemma34_constants(r_f: f64, alpha: f64, eps: f64) -> (f64, f64, f64) {
    let gamma = (alpha - r_f) / 2.0;
    let l = alpha + r_f + 2.0;
    let delta = 1.0f64.min(gamma / 2.0).min(gamma * eps / (2.0 * l));
    (gamma, l, delta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma34Report {
    pub r_f: f64,
    pub alpha: f64,
    pub eps: f64,
    pub gamma: f64,
    pub l: f64,
    pub delta: f64,
    pub trials: usize,
    /// Largest d_H between ⋂B[z, α] ∩ V and ⋂B[z′, β] ∩ V over the trials.
    pub measured: f64,
    pub failures: usize,
    pub verified: bool,
    /// First trial that reached `measured`.
    pub worst_trial: Option<usize>,
}

/// Over random (F′, β) with d_H(F, F′) < δ and |α − β| < δ, measures the
/// exact Hausdorff distance between the two ball intersections.
#[allow(clippy::too_many_arguments)]
pub fn lemma34_check(
    n: &NormSpec,
    v: &ConstraintSet,
    f: &PointSet,
    alpha: f64,
    eps: f64,
    trials: usize,
    seed: u64,
    settings: &Settings,
) -> Result<Lemma34Report> {
    let compiled = exact_inputs(n, v, f)?;
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let r_f = polyhedral_radius(n, &compiled, f)?.0.max(0.0);
    if !(alpha > r_f) {
        return Err(Error::Precondition(format!(
            "alpha = {alpha} must exceed rad_V(F) = {r_f}"
        )));
    }
    let (gamma, l, delta) = lemma34_constants(r_f, alpha, eps);
    let base = intersection(n, f, alpha, &compiled)?;
    base.vertices()?;
    let measured = par::try_map_range(settings.exec, trials, |t| {
        let mut rng = trial_rng(seed, t as u64);
        let g = perturb_with(n, f, delta, &mut rng)?;
        let shift = loop {
            let s: f64 = rng.random_range(-1.0..1.0);
            if s > -1.0 {
                break s;
            }
        };
        let q = intersection(n, &g, alpha + delta * shift, &compiled)?;
        base.max_norm_hausdorff(&q, Execution::Sequential)
    })?;
    let mut worst = None;
    let mut max = 0.0f64;
    for (t, &m) in measured.iter().enumerate() {
        if worst.is_none() || m > max {
            max = m;
            worst = Some(t);
        }
    }
    let failures = measured.iter().filter(|&&m| !(m < eps)).count();
    Ok(Lemma34Report {
        r_f,
        alpha,
        eps,
        gamma,
        l,
        delta,
        trials,
        measured: max,
        failures,
        verified: failures == 0,
        worst_trial: worst,
    })
}

fn intersection(n: &NormSpec, f: &PointSet, alpha: f64, v: &Compiled) -> Result<Polytope> {
    match ball_intersection_compiled(n, f, alpha, v)? {
        Region::Polytope(p) => Ok(p),
        Region::Empty => Err(Error::Internal(
            "ball intersection empty above the restricted radius".into(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub lambda: f64,
    /// rad_{λB_Y}(F).
    pub radius_scaled: f64,
    /// λ · rad_{B_Y}(F/λ).
    pub radius_unit: f64,
    /// Hausdorff distance (coordinate max) between the vertex sets of
    /// cent_{λB_Y}(F) and λ·cent_{B_Y}(F/λ), together with the radius gap.
    pub correspondence_error: f64,
    pub correspondence_holds: bool,
    /// sup‖b‖ + rad_Y(F).
    pub threshold: f64,
    pub saturation_applicable: bool,
    /// Vertex-set distance between cent_Y(F) and cent_{λB_Y}(F).
    pub saturation_error: f64,
    /// Whether the sets agree; only asserted when applicable.
    pub saturation_holds: bool,
    /// max |d_H(cent) at F − λ·d_H(cent) at F/λ| over matching trials.
    pub record_discrepancy: f64,
    pub records: usize,
}

impl ScalingReport {
    /// The checks that the hypotheses guarantee all passed.
    pub fn passed(&self, tol: f64) -> bool {
        self.correspondence_holds
            && (!self.saturation_applicable || self.saturation_holds)
            && self.record_discrepancy <= tol.max(1e-7)
    }
}

fn vertex_set_distance(a: &[Point], b: &[Point]) -> f64 {
    let one = |x: &[Point], y: &[Point]| {
        x.iter()
            .map(|p| y.iter().map(|q| p.max_abs_diff(q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

#[allow(clippy::too_many_arguments)]
pub fn scaling_transfer_check(
    n: &NormSpec,
    basis: &[Vec<f64>],
    lambda: f64,
    f: &PointSet,
    deltas: &[f64],
    trials: usize,
    seed: u64,
    settings: &Settings,
) -> Result<ScalingReport> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    let scaled_set = ConstraintSet::SubspaceBall {
        basis: basis.to_vec(),
        lambda,
    };
    let unit_set = ConstraintSet::SubspaceBall {
        basis: basis.to_vec(),
        lambda: 1.0,
    };
    let vs = exact_inputs(n, &scaled_set, f)?;
    let vu = exact_inputs(n, &unit_set, f)?;
    let fu = f.scaled(1.0 / lambda);

    let radius_scaled = polyhedral_radius(n, &vs, f)?.0.max(0.0);
    let radius_unit = lambda * polyhedral_radius(n, &vu, &fu)?.0.max(0.0);
    let cs = polytope_at_radius(n, &vs, f, radius_scaled)?;
    let cu = polytope_at_radius(n, &vu, &fu, radius_unit / lambda)?;
    let lifted: Vec<Point> = cu.vertices()?.iter().map(|p| p.scaled(lambda)).collect();
    let correspondence_error =
        vertex_set_distance(cs.vertices()?, &lifted).max((radius_scaled - radius_unit).abs());

    let rows = complement_basis(basis, n.dim(), 1e-10);
    let y = ConstraintSet::AffineSubspace {
        c: vec![0.0; rows.len()],
        a: rows,
    };
    let vy = y.compile(n)?;
    let rad_y = polyhedral_radius(n, &vy, f)?.0.max(0.0);
    let threshold = f.max_norm(n) + rad_y;
    let cy = polytope_at_radius(n, &vy, f, rad_y)?;
    let saturation_error = vertex_set_distance(cy.vertices()?, cs.vertices()?);

    let unit_deltas: Vec<f64> = deltas.iter().map(|d| d / lambda).collect();
    let rs = continuity_modulus(n, &scaled_set, f, deltas, trials, seed, settings)?;
    let ru = continuity_modulus(n, &unit_set, &fu, &unit_deltas, trials, seed, settings)?;
    let record_discrepancy = rs
        .iter()
        .zip(&ru)
        .map(|(a, b)| (a.dh_cent - lambda * b.dh_cent).abs())
        .fold(0.0, f64::max);

    let tol = settings.tol;
    Ok(ScalingReport {
        lambda,
        radius_scaled,
        radius_unit,
        correspondence_error,
        correspondence_holds: correspondence_error <= tol,
        threshold,
        saturation_applicable: lambda > threshold,
        saturation_error,
        saturation_holds: saturation_error <= tol,
        record_discrepancy,
        records: rs.len(),
    })
}
