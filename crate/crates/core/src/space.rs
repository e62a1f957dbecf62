//! Norms, points and finite point sets, plus the metric primitives everything
//! else is built from: farthest-point radius, finite Hausdorff distance and
//! the modulus of uniform convexity of ℓ_p.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};

/// Points closer than this (coordinatewise) are merged when a [`PointSet`] is built.
pub const DEDUP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormKind {
    Max,
    P { p: f64 },
    DirectSum { blocks: Vec<NormSpec> },
}

/// A norm on ℝ^dim: the max-norm, an ℓ_p norm, or the ℓ∞-direct sum of
/// block norms (the max of the block norms).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNorm", into = "RawNorm")]
pub struct NormSpec {
    kind: NormKind,
    dim: usize,
    #[serde(skip)]
    leaves: Vec<Leaf>,
}

#[derive(Serialize, Deserialize)]
struct RawNorm {
    #[serde(flatten)]
    kind: NormKind,
    dim: usize,
}

impl TryFrom<RawNorm> for NormSpec {
    type Error = Error;
    fn try_from(raw: RawNorm) -> Result<Self> {
        NormSpec::build(raw.kind, raw.dim)
    }
}

impl From<NormSpec> for RawNorm {
    fn from(n: NormSpec) -> Self {
        RawNorm {
            kind: n.kind,
            dim: n.dim,
        }
    }
}

/// Kind of a leaf block after flattening nested direct sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LeafKind {
    Max,
    P(f64),
}

/// A contiguous coordinate block carrying a non-sum norm. The ambient norm is
/// the max over leaves of the leaf norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leaf {
    pub offset: usize,
    pub len: usize,
    pub kind: LeafKind,
}

impl Leaf {
    /// A leaf whose unit ball is a box: the max-norm, or any ℓ_p on one coordinate.
    pub fn is_box(&self) -> bool {
        matches!(self.kind, LeafKind::Max) || self.len == 1
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        let s = &x[self.offset..self.offset + self.len];
        match self.kind {
            _ if self.len == 1 => s[0].abs(),
            LeafKind::Max => max_abs(s),
            LeafKind::P(p) => p_norm(s, p),
        }
    }

    pub fn norm_diff(&self, x: &[f64], y: &[f64]) -> f64 {
        let r = self.offset..self.offset + self.len;
        match self.kind {
            _ if self.len == 1 => (x[self.offset] - y[self.offset]).abs(),
            LeafKind::Max => x[r.clone()]
                .iter()
                .zip(&y[r])
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())),
            LeafKind::P(p) => {
                let d: Vec<f64> = x[r.clone()].iter().zip(&y[r]).map(|(a, b)| a - b).collect();
                p_norm(&d, p)
            }
        }
    }
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub(crate) fn p_norm(x: &[f64], p: f64) -> f64 {
    let m = max_abs(x);
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = x.iter().map(|v| (v.abs() / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}

impl NormSpec {
    pub fn max(dim: usize) -> Result<Self> {
        Self::build(NormKind::Max, dim)
    }

    pub fn p(p: f64, dim: usize) -> Result<Self> {
        Self::build(NormKind::P { p }, dim)
    }

    pub fn direct_sum(blocks: Vec<NormSpec>) -> Result<Self> {
        let dim = blocks.iter().map(|b| b.dim).sum();
        Self::build(NormKind::DirectSum { blocks }, dim)
    }

    fn build(kind: NormKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Instance("norm dimension must be positive".into()));
        }
        match &kind {
            NormKind::Max => {}
            NormKind::P { p } => {
                if !(p.is_finite() && *p > 1.0) {
                    return Err(Error::Instance(format!(
                        "p-norm exponent must lie strictly in (1, inf), got {p}"
                    )));
                }
            }
            NormKind::DirectSum { blocks } => {
                if blocks.is_empty() {
                    return Err(Error::Instance("direct sum needs at least one block".into()));
                }
                let total: usize = blocks.iter().map(|b| b.dim).sum();
                if total != dim {
                    return Err(Error::Instance(format!(
                        "direct sum block dims sum to {total}, declared dim is {dim}"
                    )));
                }
            }
        }
        let mut leaves = Vec::new();
        collect_leaves(&kind, dim, 0, &mut leaves);
        Ok(NormSpec { kind, dim, leaves })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    /// Top-level blocks of a direct sum (`None` for a non-sum norm).
    pub fn blocks(&self) -> Option<&[NormSpec]> {
        match &self.kind {
            NormKind::DirectSum { blocks } => Some(blocks),
            _ => None,
        }
    }

    /// True when the unit ball is a box, i.e. the norm coincides with the
    /// max-norm on ℝ^dim. This is the family handled by the exact LP path.
    pub fn is_max_family(&self) -> bool {
        self.leaves.iter().all(Leaf::is_box)
    }

    /// Smallest c with ‖x‖ ≤ c·‖x‖_∞.
    pub fn max_equivalence_constant(&self) -> f64 {
        self.leaves
            .iter()
            .map(|l| match l.kind {
                LeafKind::P(p) if l.len > 1 => (l.len as f64).powf(1.0 / p),
                _ => 1.0,
            })
            .fold(1.0, f64::max)
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        self.leaves.iter().fold(0.0f64, |m, l| m.max(l.norm(x)))
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(dim_mismatch(self.dim, x.len()));
        }
        Ok(())
    }
}

fn collect_leaves(kind: &NormKind, dim: usize, offset: usize, out: &mut Vec<Leaf>) {
    match kind {
        NormKind::Max => out.push(Leaf {
            offset,
            len: dim,
            kind: LeafKind::Max,
        }),
        NormKind::P { p } => out.push(Leaf {
            offset,
            len: dim,
            kind: LeafKind::P(*p),
        }),
        NormKind::DirectSum { blocks } => {
            let mut off = offset;
            for b in blocks {
                collect_leaves(&b.kind, b.dim, off, out);
                off += b.dim;
            }
        }
    }
}

/// A point of ℝ^d with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Instance("point coordinates must be finite".into()));
        }
        Ok(Point(coords))
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Point(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn scaled(&self, s: f64) -> Point {
        Point(self.0.iter().map(|v| v * s).collect())
    }

    pub fn max_abs_diff(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Non-empty finite set of points of a common dimension. Near-duplicates are
/// merged on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct PointSet(Vec<Point>);

impl TryFrom<Vec<Point>> for PointSet {
    type Error = Error;
    fn try_from(v: Vec<Point>) -> Result<Self> {
        PointSet::new(v)
    }
}

impl From<PointSet> for Vec<Point> {
    fn from(s: PointSet) -> Self {
        s.0
    }
}

impl PointSet {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::Instance("point set must be non-empty".into()));
        };
        let dim = first.dim();
        if dim == 0 {
            return Err(Error::Instance("points must have positive dimension".into()));
        }
        let mut kept: Vec<Point> = Vec::with_capacity(points.len());
        for p in points {
            if p.dim() != dim {
                return Err(dim_mismatch(dim, p.dim()));
            }
            if !kept.iter().any(|q| q.max_abs_diff(&p) <= DEDUP_TOL) {
                kept.push(p);
            }
        }
        Ok(PointSet(kept))
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(
            rows.iter()
                .map(|r| Point::new(r.to_vec()))
                .collect::<Result<_>>()?,
        )
    }

    pub fn dim(&self) -> usize {
        self.0[0].dim()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[Point] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.0.iter()
    }

    pub fn scaled(&self, s: f64) -> PointSet {
        let pts = self.0.iter().map(|p| p.scaled(s)).collect();
        if s == 0.0 {
            PointSet::new(pts).expect("scaling preserves dimension")
        } else {
            PointSet(pts)
        }
    }

    pub fn diameter(&self, n: &NormSpec) -> f64 {
        let mut d = 0.0f64;
        for (i, a) in self.0.iter().enumerate() {
            for b in &self.0[i + 1..] {
                d = d.max(n.norm_diff(a, b));
            }
        }
        d
    }

    /// Largest norm of a member, `sup_{b∈B} ‖b‖`.
    pub fn max_norm(&self, n: &NormSpec) -> f64 {
        self.0.iter().fold(0.0f64, |m, p| m.max(n.norm(p)))
    }
}

impl NormSpec {
    pub(crate) fn norm_diff(&self, x: &[f64], y: &[f64]) -> f64 {
        self.leaves
            .iter()
            .fold(0.0f64, |m, l| m.max(l.norm_diff(x, y)))
    }
}

/// ‖x − y‖ under `n`.
pub fn distance(n: &NormSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    n.check(x)?;
    n.check(y)?;
    Ok(n.norm_diff(x, y))
}

/// r(v, F) = max_{b∈F} ‖v − b‖.
pub fn farthest_radius(n: &NormSpec, v: &[f64], f: &PointSet) -> Result<f64> {
    n.check(v)?;
    n.check(f.points()[0].coords())?;
    Ok(farthest_radius_unchecked(n, v, f))
}

pub(crate) fn farthest_radius_unchecked(n: &NormSpec, v: &[f64], f: &PointSet) -> f64 {
    f.iter().fold(0.0f64, |m, b| m.max(n.norm_diff(v, b)))
}

/// max_{a∈A} min_{b∈B} ‖a − b‖.
pub fn deviation(n: &NormSpec, a: &PointSet, b: &PointSet) -> f64 {
    a.iter()
        .map(|x| b.iter().map(|y| n.norm_diff(x, y)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Hausdorff distance between two finite sets.
pub fn hausdorff_finite(n: &NormSpec, a: &PointSet, b: &PointSet) -> Result<f64> {
    n.check(a.points()[0].coords())?;
    n.check(b.points()[0].coords())?;
    Ok(deviation(n, a, b).max(deviation(n, b, a)))
}

/// Lower bound δ′(ε) ∈ (0, ε/2] on the modulus of convexity of ℓ_p:
/// whenever ‖x‖ = ‖y‖ = 1 and ‖x − y‖ ≥ ε, ‖(x + y)/2‖ ≤ 1 − δ′(ε).
///
/// For p ≥ 2 this is the exact Clarkson modulus 1 − (1 − (ε/2)^p)^{1/p}; for
/// 1 < p < 2 the conservative bound (p − 1)ε²/8.
pub fn convexity_modulus(p: f64, eps: f64) -> Result<f64> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::Domain(format!("p must lie in (1, inf), got {p}")));
    }
    if !(eps > 0.0 && eps <= 2.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 2], got {eps}")));
    }
    let raw = if p >= 2.0 {
        // 1 − (1 − u)^{1/p} computed without cancellation for tiny u.
        let u = (eps / 2.0).powf(p);
        -((-u).ln_1p() / p).exp_m1()
    } else {
        (p - 1.0) * eps * eps / 8.0
    };
    Ok(raw.min(eps / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ps(rows: &[&[f64]]) -> PointSet {
        PointSet::from_rows(rows).unwrap()
    }

    #[test]
    fn distance_examples() {
        let max2 = NormSpec::max(2).unwrap();
        assert_eq!(distance(&max2, &[1.0, 0.0], &[0.0, -2.0]).unwrap(), 2.0);
        let e2 = NormSpec::p(2.0, 2).unwrap();
        assert_abs_diff_eq!(distance(&e2, &[3.0, 4.0], &[0.0, 0.0]).unwrap(), 5.0);
        let sum = NormSpec::direct_sum(vec![NormSpec::max(1).unwrap(), NormSpec::max(1).unwrap()])
            .unwrap();
        assert_eq!(distance(&sum, &[1.0, 0.0], &[-1.0, 2.0]).unwrap(), 2.0);
    }

    #[test]
    fn dimension_mismatch_is_instance_error() {
        let n = NormSpec::max(2).unwrap();
        assert!(matches!(
            distance(&n, &[1.0], &[0.0, 0.0]),
            Err(Error::Instance(_))
        ));
    }

    #[test]
    fn norm_spec_validation() {
        assert!(NormSpec::p(1.0, 2).is_err());
        assert!(NormSpec::p(f64::INFINITY, 2).is_err());
        assert!(NormSpec::max(0).is_err());
        let bad: std::result::Result<NormSpec, _> = serde_json::from_str(
            r#"{"kind":"direct_sum","dim":3,"blocks":[{"kind":"max","dim":1},{"kind":"max","dim":1}]}"#,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn farthest_radius_examples() {
        let max2 = NormSpec::max(2).unwrap();
        let f = ps(&[&[1.0, 0.0], &[0.0, -2.0]]);
        assert_eq!(farthest_radius(&max2, &[0.0, 0.0], &f).unwrap(), 2.0);
        let e2 = NormSpec::p(2.0, 2).unwrap();
        let f = ps(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        assert_eq!(farthest_radius(&e2, &[0.0, 0.0], &f).unwrap(), 1.0);
        // ‖(0,1)−(1,0)‖∞ = 1, ‖(0,1)−(−1,2)‖∞ = 1.
        let f = ps(&[&[1.0, 0.0], &[-1.0, 2.0]]);
        assert_eq!(farthest_radius(&max2, &[0.0, 1.0], &f).unwrap(), 1.0);
    }

    #[test]
    fn hausdorff_examples() {
        let max2 = NormSpec::max(2).unwrap();
        let a = ps(&[&[0.0, 0.0]]);
        let b = ps(&[&[1.0, 0.0]]);
        assert_eq!(hausdorff_finite(&max2, &a, &b).unwrap(), 1.0);
        assert_eq!(hausdorff_finite(&max2, &a, &a).unwrap(), 0.0);
        // deviations: A→B = 1 (both points at distance 1), B→A = 1.
        let a = ps(&[&[0.0, 0.0], &[2.0, 0.0]]);
        assert_eq!(hausdorff_finite(&max2, &a, &b).unwrap(), 1.0);
    }

    #[test]
    fn point_set_dedups() {
        let s = ps(&[&[1.0, 2.0], &[1.0 + 1e-13, 2.0], &[3.0, 2.0]]);
        assert_eq!(s.len(), 2);
        assert!(PointSet::new(vec![]).is_err());
        assert!(Point::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn convexity_modulus_examples() {
        // 1 − √(1 − 1/4) = 0.1339745962155614
        assert_abs_diff_eq!(
            convexity_modulus(2.0, 1.0).unwrap(),
            1.0 - (0.75f64).sqrt(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(convexity_modulus(2.0, 2.0).unwrap(), 1.0, epsilon = 1e-15);
        // 1 − (15/16)^{1/4}
        let v = convexity_modulus(4.0, 1.0).unwrap();
        assert_abs_diff_eq!(v, 0.016005, epsilon = 1e-6);
        assert_abs_diff_eq!(convexity_modulus(1.5, 1.0).unwrap(), 0.0625, epsilon = 1e-15);
        assert!(matches!(convexity_modulus(2.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(convexity_modulus(2.0, 2.5), Err(Error::Domain(_))));
        assert!(matches!(convexity_modulus(1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn max_equivalence_constant() {
        assert_eq!(NormSpec::max(3).unwrap().max_equivalence_constant(), 1.0);
        assert_abs_diff_eq!(
            NormSpec::p(2.0, 4).unwrap().max_equivalence_constant(),
            2.0,
            epsilon = 1e-15
        );
        assert!(NormSpec::direct_sum(vec![
            NormSpec::p(3.0, 1).unwrap(),
            NormSpec::max(2).unwrap()
        ])
        .unwrap()
        .is_max_family());
    }
}
