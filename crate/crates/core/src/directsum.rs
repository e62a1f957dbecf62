//! Two-block ℓ∞-direct sums X = X₁ ⊕∞ X₂ with V = V₁ × V₂, and the
//! M-summand variant X = Y ⊕∞ W with Z ⊆ Y.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::domain::{ball_intersection_compiled, contains, Compiled, ConstraintSet, Polytope, Region};
use crate::error::{dim_mismatch, Error, Result};
use crate::lp::{LinearProgram, LpOutcome};
use crate::solver::{
    sample_sublevel_boundary, solve_compiled, CenterSet, CenterSolution, Settings, SolveStatus,
};
use crate::space::{farthest_radius_unchecked, NormSpec, Point, PointSet};

/// Radii closer than this are treated as equal when picking the center formula.
pub const TIE_BAND: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DirectSumInstance {
    pub norm: NormSpec,
    pub v: ConstraintSet,
    pub b: PointSet,
}

fn two_blocks(norm: &NormSpec) -> Result<(&NormSpec, &NormSpec)> {
    match norm.blocks() {
        Some([a, b]) => Ok((a, b)),
        _ => Err(Error::Instance(
            "expected a direct-sum norm with exactly two blocks".into(),
        )),
    }
}

impl DirectSumInstance {
    pub fn new(norm: NormSpec, v: ConstraintSet, b: PointSet) -> Result<Self> {
        if b.dim() != norm.dim() {
            return Err(dim_mismatch(norm.dim(), b.dim()));
        }
        let inst = DirectSumInstance { norm, v, b };
        let (n1, n2) = inst.block_norms()?;
        let (v1, v2) = inst.block_sets()?;
        v1.validate(n1)?;
        v2.validate(n2)?;
        Ok(inst)
    }

    pub fn block_norms(&self) -> Result<(&NormSpec, &NormSpec)> {
        two_blocks(&self.norm)
    }

    /// (V₁, V₂); the whole space splits into two whole spaces.
    pub fn block_sets(&self) -> Result<(ConstraintSet, ConstraintSet)> {
        match &self.v {
            ConstraintSet::WholeSpace => Ok((ConstraintSet::WholeSpace, ConstraintSet::WholeSpace)),
            ConstraintSet::BlockProduct { blocks } if blocks.len() == 2 => {
                Ok((blocks[0].clone(), blocks[1].clone()))
            }
            _ => Err(Error::Instance(
                "constraint set must be a two-block product (or the whole space)".into(),
            )),
        }
    }

    pub fn projections(&self) -> Result<(PointSet, PointSet)> {
        Ok((block_project(&self.norm, &self.b, 1)?, block_project(&self.norm, &self.b, 2)?))
    }
}

/// B(i): coordinate projection of B onto block i ∈ {1, 2}.
pub fn block_project(norm: &NormSpec, b: &PointSet, i: usize) -> Result<PointSet> {
    let (n1, _) = two_blocks(norm)?;
    if b.dim() != norm.dim() {
        return Err(dim_mismatch(norm.dim(), b.dim()));
    }
    let range = match i {
        1 => 0..n1.dim(),
        2 => n1.dim()..norm.dim(),
        _ => return Err(Error::Domain(format!("block index must be 1 or 2, got {i}"))),
    };
    PointSet::new(
        b.iter()
            .map(|p| Point::from_vec_unchecked(p[range.clone()].to_vec()))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectSumRadius {
    pub r1: f64,
    pub r2: f64,
    pub rad: f64,
    /// Points at which r(v, B) = max(r(v₁, B(1)), r(v₂, B(2))) was checked.
    pub certified_samples: usize,
    pub certificate_error: f64,
}

pub fn radius_directsum(inst: &DirectSumInstance, settings: &Settings) -> Result<DirectSumRadius> {
    let (n1, n2) = inst.block_norms()?;
    let (v1, v2) = inst.block_sets()?;
    let (b1, b2) = inst.projections()?;
    let r1 = block_solution(n1, &v1.compile(n1)?, &b1, settings)?.radius;
    let r2 = block_solution(n2, &v2.compile(n2)?, &b2, settings)?.radius;

    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let d = inst.norm.dim();
    let d1 = n1.dim();
    let scale = 1.0 + inst.b.diameter(&inst.norm);
    let mut err = 0.0f64;
    for k in 0..settings.samples {
        let base = &inst.b.points()[k % inst.b.len()];
        let v: Vec<f64> = (0..d)
            .map(|i| {
                let z: f64 = StandardNormal.sample(&mut rng);
                base[i] + scale * z
            })
            .collect();
        let whole = farthest_radius_unchecked(&inst.norm, &v, &inst.b);
        let split = farthest_radius_unchecked(n1, &v[..d1], &b1)
            .max(farthest_radius_unchecked(n2, &v[d1..], &b2));
        err = err.max((whole - split).abs());
    }
    Ok(DirectSumRadius {
        r1,
        r2,
        rad: r1.max(r2),
        certified_samples: settings.samples,
        certificate_error: err,
    })
}

fn block_solution(
    n: &NormSpec,
    v: &Compiled,
    b: &PointSet,
    settings: &Settings,
) -> Result<CenterSolution> {
    solve_compiled(n, v, b, settings)
}

/// Which branch of the three-case center formula applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterCase {
    Equal,
    FirstSmaller,
    SecondSmaller,
}

#[derive(Debug, Clone)]
pub struct DirectSumCenters {
    pub r1: f64,
    pub r2: f64,
    pub case: CenterCase,
    pub solution: CenterSolution,
}

/// One block's factor in the center formula: its own center set if its
/// radius is the larger one, otherwise the sublevel set at the other radius.
fn block_factor(
    n: &NormSpec,
    v: &Compiled,
    b: &PointSet,
    own: &CenterSolution,
    level: Option<f64>,
    settings: &Settings,
) -> Result<CenterSet> {
    let Some(level) = level else {
        return Ok(own.center_set.clone());
    };
    if n.is_max_family() && v.is_polyhedral() {
        return match ball_intersection_compiled(n, b, level, v)? {
            Region::Polytope(p) => Ok(CenterSet::PolytopeSet(p)),
            Region::Empty => Err(Error::Internal(
                "sublevel set at the larger radius is empty".into(),
            )),
        };
    }
    let c = own.representative()?;
    Ok(CenterSet::Sample(sample_sublevel_boundary(n, v, b, &c, level, settings)?))
}

fn combine(a: &CenterSet, b: &CenterSet) -> Result<CenterSet> {
    Ok(match (a, b) {
        (CenterSet::PolytopeSet(p), CenterSet::PolytopeSet(q)) => CenterSet::PolytopeSet(p.product(q)),
        (CenterSet::SinglePoint(x), CenterSet::SinglePoint(y)) => {
            CenterSet::SinglePoint(Point::from_vec_unchecked([x.coords(), y.coords()].concat()))
        }
        _ => {
            let (xs, ys) = (a.points()?, b.points()?);
            CenterSet::Sample(
                xs.iter()
                    .flat_map(|x| {
                        ys.iter()
                            .map(move |y| Point::from_vec_unchecked([x.coords(), y.coords()].concat()))
                    })
                    .collect(),
            )
        }
    })
}

fn combined_status(a: SolveStatus, b: SolveStatus, set: &CenterSet) -> SolveStatus {
    if let CenterSet::Sample(s) = set {
        return SolveStatus::Sampled { count: s.len() };
    }
    match (a, b) {
        (SolveStatus::Exact, SolveStatus::Exact) => SolveStatus::Exact,
        (
            SolveStatus::Iterative { gap: g1, .. },
            s2 @ SolveStatus::Iterative { gap: g2, .. },
        ) if g2 >= g1 => s2,
        (s @ SolveStatus::Iterative { .. }, _) => s,
        (_, s) => s,
    }
}

/// Center set by the three-case formula:
/// r₁ = r₂ → cent₁ × cent₂; r₁ < r₂ → (⋂ B[b₁, r₂] ∩ V₁) × cent₂; and symmetrically.
pub fn center_directsum(inst: &DirectSumInstance, settings: &Settings) -> Result<DirectSumCenters> {
    let (n1, n2) = inst.block_norms()?;
    let (v1, v2) = inst.block_sets()?;
    let (v1, v2) = (v1.compile(n1)?, v2.compile(n2)?);
    let (b1, b2) = inst.projections()?;
    let s1 = block_solution(n1, &v1, &b1, settings)?;
    let s2 = block_solution(n2, &v2, &b2, settings)?;
    let (r1, r2) = (s1.radius, s2.radius);
    let case = if (r1 - r2).abs() <= TIE_BAND {
        CenterCase::Equal
    } else if r1 < r2 {
        CenterCase::FirstSmaller
    } else {
        CenterCase::SecondSmaller
    };
    let (l1, l2) = match case {
        CenterCase::Equal => (None, None),
        CenterCase::FirstSmaller => (Some(r2), None),
        CenterCase::SecondSmaller => (None, Some(r1)),
    };
    let f1 = block_factor(n1, &v1, &b1, &s1, l1, settings)?;
    let f2 = block_factor(n2, &v2, &b2, &s2, l2, settings)?;
    let set = combine(&f1, &f2)?;
    let status = combined_status(s1.status, s2.status, &set);
    Ok(DirectSumCenters {
        r1,
        r2,
        case,
        solution: CenterSolution {
            radius: r1.max(r2),
            center_set: set,
            status,
            trace: None,
        },
    })
}

/// Pairs B₁ with B₂ = {±r₁·e} in X₂ (e a unit vector) so that both block
/// radii agree; B = B₁ × B₂.
pub fn build_matched_product(
    b1: &PointSet,
    n1: &NormSpec,
    v1: &ConstraintSet,
    v2: &ConstraintSet,
    n2: &NormSpec,
    settings: &Settings,
) -> Result<DirectSumInstance> {
    if b1.dim() != n1.dim() {
        return Err(dim_mismatch(n1.dim(), b1.dim()));
    }
    let c2 = v2.validate(n2)?;
    if !contains(n2, v2, &vec![0.0; n2.dim()], 1e-12)? {
        return Err(Error::Precondition(
            "second constraint set must contain the origin".into(),
        ));
    }
    if is_origin_only(&c2)? {
        return Err(Error::Precondition(
            "second constraint set is {0}; the matched construction needs a non-trivial set".into(),
        ));
    }
    let r1 = block_solution(n1, &v1.compile(n1)?, b1, settings)?.radius;
    let mut e = vec![0.0; n2.dim()];
    e[0] = 1.0;
    let unit = n2.norm(&e);
    let plus: Vec<f64> = e.iter().map(|x| r1 * x / unit).collect();
    let minus: Vec<f64> = plus.iter().map(|x| -x).collect();
    let b2 = [plus, minus];
    let mut pts = Vec::with_capacity(2 * b1.len());
    for p in b1.iter() {
        for q in &b2 {
            pts.push(Point::new([p.coords(), q.as_slice()].concat())?);
        }
    }
    DirectSumInstance::new(
        NormSpec::direct_sum(vec![n1.clone(), n2.clone()])?,
        ConstraintSet::BlockProduct {
            blocks: vec![v1.clone(), v2.clone()],
        },
        PointSet::new(pts)?,
    )
}

/// True when the linear part pins every coordinate to 0.
fn is_origin_only(c: &Compiled) -> Result<bool> {
    for i in 0..c.dim {
        for sign in [1.0, -1.0] {
            let mut lp = LinearProgram::new(c.dim);
            let mut obj = vec![0.0; c.dim];
            obj[i] = -sign;
            lp.set_objective(obj);
            c.push_linear(&mut lp, 0);
            match lp.solve()? {
                LpOutcome::Optimal(s) if -s.value <= 1e-12 => {}
                _ => return Ok(false),
            }
        }
    }
    // A ball of positive radius cannot pin anything the linear part leaves free.
    Ok(true)
}

/// X = Y ⊕∞ W; Z is a constraint set in Y-coordinates, so V = Z × {0}.
#[derive(Debug, Clone, PartialEq)]
pub struct MSummandInstance {
    pub norm: NormSpec,
    pub z: ConstraintSet,
    pub b: PointSet,
}

impl MSummandInstance {
    pub fn new(y: NormSpec, w: NormSpec, z: ConstraintSet, b: PointSet) -> Result<Self> {
        let norm = NormSpec::direct_sum(vec![y, w])?;
        if b.dim() != norm.dim() {
            return Err(dim_mismatch(norm.dim(), b.dim()));
        }
        let (ny, _) = two_blocks(&norm)?;
        z.validate(ny)?;
        Ok(MSummandInstance { norm, z, b })
    }

    pub fn y_norm(&self) -> &NormSpec {
        two_blocks(&self.norm).expect("validated").0
    }

    pub fn w_norm(&self) -> &NormSpec {
        two_blocks(&self.norm).expect("validated").1
    }

    /// Z × {0} as a constraint set on the whole space.
    pub fn full_space_set(&self) -> ConstraintSet {
        let dw = self.w_norm().dim();
        ConstraintSet::BlockProduct {
            blocks: vec![
                self.z.clone(),
                ConstraintSet::AffineSubspace {
                    a: (0..dw)
                        .map(|i| {
                            let mut r = vec![0.0; dw];
                            r[i] = 1.0;
                            r
                        })
                        .collect(),
                    c: vec![0.0; dw],
                },
            ],
        }
    }

    /// The Y-block instance (Y, Z, B(1)).
    pub fn y_block(&self) -> Result<PointSet> {
        block_project(&self.norm, &self.b, 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MSummandCase {
    /// sup‖w‖ ≤ rad_Z(B(1)): cent_Z(B) = cent_Z(B(1)).
    Inherited,
    /// sup‖w‖ > rad_Z(B(1)): cent_Z(B) = ⋂ B[y, R] ∩ Z with R = sup‖w‖.
    Saturated,
}

#[derive(Debug, Clone)]
pub struct MSummandSolution {
    pub rad_y: f64,
    pub sup_w: f64,
    pub case: MSummandCase,
    /// Centers in full-space coordinates (W part zero).
    pub solution: CenterSolution,
}

pub fn msummand_solve(inst: &MSummandInstance, settings: &Settings) -> Result<MSummandSolution> {
    let ny = inst.y_norm();
    let nw = inst.w_norm();
    let z = inst.z.compile(ny)?;
    let b1 = inst.y_block()?;
    let dy = ny.dim();
    let sup_w = inst
        .b
        .iter()
        .map(|p| nw.norm(&p[dy..]))
        .fold(0.0, f64::max);
    let own = block_solution(ny, &z, &b1, settings)?;
    let rad_y = own.radius;
    let (case, level) = if sup_w <= rad_y {
        (MSummandCase::Inherited, None)
    } else {
        (MSummandCase::Saturated, Some(sup_w))
    };
    let set = block_factor(ny, &z, &b1, &own, level, settings)?;
    let dw = nw.dim();
    let lifted = match set {
        CenterSet::PolytopeSet(p) => {
            let zero = Polytope::new(
                dw,
                Vec::new(),
                (0..dw)
                    .map(|i| {
                        let mut r = vec![0.0; dw];
                        r[i] = 1.0;
                        (r, 0.0)
                    })
                    .collect(),
            );
            CenterSet::PolytopeSet(p.product(&zero))
        }
        CenterSet::SinglePoint(x) => CenterSet::SinglePoint(pad(&x, dw)),
        CenterSet::Sample(s) => CenterSet::Sample(s.iter().map(|x| pad(x, dw)).collect()),
    };
    let status = match &lifted {
        CenterSet::Sample(s) => SolveStatus::Sampled { count: s.len() },
        _ => own.status,
    };
    Ok(MSummandSolution {
        rad_y,
        sup_w,
        case,
        solution: CenterSolution {
            radius: rad_y.max(sup_w),
            center_set: lifted,
            status,
            trace: None,
        },
    })
}

fn pad(x: &Point, extra: usize) -> Point {
    let mut v = x.to_vec();
    v.resize(v.len() + extra, 0.0);
    Point::from_vec_unchecked(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::solve;
    use approx::assert_abs_diff_eq;

    fn ps(rows: &[&[f64]]) -> PointSet {
        PointSet::from_rows(rows).unwrap()
    }

    fn max_sum(d1: usize, d2: usize) -> NormSpec {
        NormSpec::direct_sum(vec![NormSpec::max(d1).unwrap(), NormSpec::max(d2).unwrap()]).unwrap()
    }

    fn inst(rows: &[&[f64]]) -> DirectSumInstance {
        DirectSumInstance::new(max_sum(1, 1), ConstraintSet::WholeSpace, ps(rows)).unwrap()
    }

    #[test]
    fn projections() {
        let n = max_sum(2, 1);
        let b = ps(&[&[1.0, 0.0, 5.0]]);
        assert_eq!(block_project(&n, &b, 1).unwrap(), ps(&[&[1.0, 0.0]]));
        assert_eq!(block_project(&n, &b, 2).unwrap(), ps(&[&[5.0]]));
        let n = max_sum(1, 1);
        let b = ps(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(block_project(&n, &b, 1).unwrap(), ps(&[&[1.0], &[3.0]]));
        assert_eq!(block_project(&n, &b, 2).unwrap(), ps(&[&[2.0], &[4.0]]));
        assert!(block_project(&n, &b, 3).is_err());
    }

    #[test]
    fn radius_examples() {
        let s = Settings::default();
        let r = radius_directsum(&inst(&[&[1.0, 0.0], &[-1.0, 2.0]]), &s).unwrap();
        assert_abs_diff_eq!(r.r1, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.r2, 1.0, epsilon = 1e-12);
        assert_eq!(r.certificate_error, 0.0);
        let r = radius_directsum(&inst(&[&[0.5, 0.0], &[-0.5, 2.0]]), &s).unwrap();
        assert_abs_diff_eq!(r.r1, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.rad, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn center_examples() {
        let s = Settings::default();
        let c = center_directsum(&inst(&[&[1.0, 0.0], &[-1.0, 2.0]]), &s).unwrap();
        assert_eq!(c.case, CenterCase::Equal);
        let v = c.solution.center_set.points().unwrap();
        assert_eq!(v.len(), 1);
        assert!(v[0].max_abs_diff(&Point::new(vec![0.0, 1.0]).unwrap()) < 1e-9);

        let c = center_directsum(&inst(&[&[0.5, 0.0], &[-0.5, 2.0]]), &s).unwrap();
        assert_eq!(c.case, CenterCase::FirstSmaller);
        let v = c.solution.center_set.points().unwrap();
        assert_eq!(v.len(), 2);
        assert!(v[0].max_abs_diff(&Point::new(vec![-0.5, 1.0]).unwrap()) < 1e-9);
        assert!(v[1].max_abs_diff(&Point::new(vec![0.5, 1.0]).unwrap()) < 1e-9);

        let full = solve(&max_sum(1, 1), &ConstraintSet::WholeSpace, &ps(&[&[0.5, 0.0], &[-0.5, 2.0]]), &s)
            .unwrap();
        assert_eq!(full.center_set.points().unwrap().len(), 2);
    }

    #[test]
    fn p_norm_blocks_use_iterative_path() {
        let n = NormSpec::direct_sum(vec![NormSpec::p(2.0, 2).unwrap(), NormSpec::p(2.0, 1).unwrap()])
            .unwrap();
        let i = DirectSumInstance::new(
            n,
            ConstraintSet::WholeSpace,
            ps(&[&[1.0, 0.0, 0.0], &[-1.0, 0.0, 4.0]]),
        )
        .unwrap();
        let c = center_directsum(&i, &Settings { samples: 16, ..Settings::default() }).unwrap();
        assert_eq!(c.case, CenterCase::FirstSmaller);
        assert_abs_diff_eq!(c.solution.radius, 2.0, epsilon = 1e-8);
        assert!(matches!(c.solution.status, SolveStatus::Sampled { count: 17 }));
        for p in c.solution.center_set.points().unwrap() {
            assert!(farthest_radius_unchecked(&i.norm, &p, &i.b) <= 2.0 + 1e-8);
        }
    }

    #[test]
    fn matched_product() {
        let s = Settings::default();
        let n1 = NormSpec::max(1).unwrap();
        let i = build_matched_product(
            &ps(&[&[1.0], &[-1.0]]),
            &n1,
            &ConstraintSet::WholeSpace,
            &ConstraintSet::WholeSpace,
            &n1,
            &s,
        )
        .unwrap();
        let (_, b2) = i.projections().unwrap();
        assert_eq!(b2, ps(&[&[1.0], &[-1.0]]));
        let r = radius_directsum(&i, &s).unwrap();
        assert_abs_diff_eq!(r.r1, r.r2, epsilon = 1e-9);

        let i = build_matched_product(
            &ps(&[&[0.0], &[1.0]]),
            &n1,
            &ConstraintSet::WholeSpace,
            &ConstraintSet::WholeSpace,
            &n1,
            &s,
        )
        .unwrap();
        assert_eq!(i.projections().unwrap().1, ps(&[&[0.5], &[-0.5]]));

        let origin = ConstraintSet::AffineSubspace {
            a: vec![vec![1.0]],
            c: vec![0.0],
        };
        assert!(build_matched_product(&ps(&[&[1.0]]), &n1, &ConstraintSet::WholeSpace, &origin, &n1, &s)
            .is_err());
        let away = ConstraintSet::boxed(&[1.0], &[2.0]);
        assert!(build_matched_product(&ps(&[&[1.0]]), &n1, &ConstraintSet::WholeSpace, &away, &n1, &s)
            .is_err());
    }

    fn msum(rows: &[&[f64]], z: ConstraintSet) -> MSummandInstance {
        MSummandInstance::new(NormSpec::max(1).unwrap(), NormSpec::max(1).unwrap(), z, ps(rows)).unwrap()
    }

    #[test]
    fn msummand_examples() {
        let s = Settings::default();
        let m = msummand_solve(&msum(&[&[0.0, 0.5], &[2.0, -0.5]], ConstraintSet::WholeSpace), &s).unwrap();
        assert_eq!(m.case, MSummandCase::Inherited);
        assert_abs_diff_eq!(m.solution.radius, 1.0, epsilon = 1e-12);
        let v = m.solution.center_set.points().unwrap();
        assert_eq!(v.len(), 1);
        assert!(v[0].max_abs_diff(&Point::new(vec![1.0, 0.0]).unwrap()) < 1e-9);

        let inst = msum(&[&[0.0, 2.0], &[1.0, -2.0]], ConstraintSet::WholeSpace);
        let m = msummand_solve(&inst, &s).unwrap();
        assert_eq!(m.case, MSummandCase::Saturated);
        assert_abs_diff_eq!(m.solution.radius, 2.0, epsilon = 1e-12);
        let v = m.solution.center_set.points().unwrap();
        assert!(v[0].max_abs_diff(&Point::new(vec![-1.0, 0.0]).unwrap()) < 1e-9);
        assert!(v[1].max_abs_diff(&Point::new(vec![2.0, 0.0]).unwrap()) < 1e-9);
        let full = solve(&inst.norm, &inst.full_space_set(), &inst.b, &s).unwrap();
        assert_abs_diff_eq!(full.radius, m.solution.radius, epsilon = 1e-9);

        let origin = ConstraintSet::AffineSubspace {
            a: vec![vec![1.0]],
            c: vec![0.0],
        };
        let m = msummand_solve(&msum(&[&[3.0, 1.0], &[-1.0, 0.5]], origin), &s).unwrap();
        assert_abs_diff_eq!(m.solution.radius, 3.0, epsilon = 1e-12);
    }
}
