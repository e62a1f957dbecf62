use serde_json::{json, Value};

use chebcent::continuity::{
    continuity_modulus, lemma34_check, lipschitz_from_records, scaling_transfer_check,
};
use chebcent::corpus::{pin_derived as rescan_corpus, PIN_H};
use chebcent::directsum::{
    center_directsum, msummand_solve, radius_directsum, DirectSumInstance, MSummandCase,
    MSummandInstance,
};
use chebcent::domain::ConstraintSet;
use chebcent::io::{
    curve_csv, parse_deltas, parse_instance, to_csv, to_json_pretty, CsvCell, InstanceFile,
    PinnedEntry, PinnedFile, FORMAT_VERSION,
};
use chebcent::oracle::{grid_radius_center, grid_s_value};
use chebcent::p1::{Containment, P1Instance};
use chebcent::par::Execution;
use chebcent::solver::{amir_iterate, solve as solve_centers, CenterSet, Settings, SolveStatus};
use chebcent::space::{farthest_radius, hausdorff_finite, NormSpec, Point, PointSet};

use crate::{output, Failure, Opts};

pub const DEFAULT_TOL: f64 = 1e-9;
const VERTEX_MATCH_TOL: f64 = 1e-7;
const CURVE_MATCH_TOL: f64 = 1e-7;
const PINNED_ENV: &str = "CHEBY_PINNED";

pub struct Outcome {
    pub report: Value,
    /// Extra files (name, contents) written next to the report.
    pub files: Vec<(String, String)>,
    pub verified: bool,
}

pub struct Ctx {
    pub file: InstanceFile,
    pub points: PointSet,
    pub settings: Settings,
}

impl Ctx {
    pub fn load(opts: &Opts) -> Result<Ctx, Failure> {
        let path = opts
            .instance
            .as_ref()
            .ok_or_else(|| Failure::Usage("--instance is required for this task".into()))?;
        let file = parse_instance(path).map_err(Failure::Schema)?;
        let points = file.point_set()?;
        let tol = opts.tol.or(file.params.tol).unwrap_or(DEFAULT_TOL);
        let seed = opts.seed.or(file.params.seed).unwrap_or(0);
        Ok(Ctx {
            settings: settings(opts, tol, seed)?,
            file,
            points,
        })
    }

    fn norm(&self) -> &NormSpec {
        &self.file.norm
    }

    fn v(&self) -> &ConstraintSet {
        &self.file.constraint
    }

    fn tol(&self) -> f64 {
        self.settings.tol
    }

    fn eps(&self, opts: &Opts) -> Option<f64> {
        opts.eps.or(self.file.params.eps)
    }

    fn trials(&self, opts: &Opts, default: usize) -> usize {
        opts.trials.or(self.file.params.trials).unwrap_or(default)
    }

    fn deltas(&self, opts: &Opts, base: f64, default: &str) -> Result<Vec<f64>, Failure> {
        Ok(match (&opts.deltas, &self.file.params.deltas) {
            (Some(s), _) => parse_deltas(s, base)?,
            (None, Some(d)) => d.resolve(base)?,
            (None, None) => parse_deltas(default, base)?,
        })
    }

    fn report(&self, task: &str, path: &str, verified: bool, results: Value, witness: Value) -> Value {
        json!({
            "format_version": FORMAT_VERSION,
            "task": task,
            "instance": self.file.name,
            "instance_digest": self.file.digest(),
            "seed": self.settings.seed,
            "tol": self.settings.tol,
            "path": path,
            "verified": verified,
            "results": results,
            "witness": witness,
        })
    }
}

fn settings(opts: &Opts, tol: f64, seed: u64) -> Result<Settings, Failure> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Failure::Usage(format!("tolerance must be positive, got {tol}")));
    }
    Ok(Settings {
        tol,
        exec: if opts.jobs == Some(1) {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
        seed,
        ..Settings::default()
    })
}

fn required(v: Option<f64>, what: &str) -> Result<f64, Failure> {
    v.ok_or_else(|| Failure::Usage(format!("--{what} (or params.{what}) is required for this task")))
}

fn points_json(pts: &[Point]) -> Value {
    Value::Array(pts.iter().map(|p| json!(p.coords())).collect())
}

fn centers_json(set: &CenterSet) -> Result<Value, Failure> {
    Ok(match set {
        CenterSet::SinglePoint(p) => json!({"kind": "single_point", "points": [p.coords()]}),
        CenterSet::PolytopeSet(poly) => json!({
            "kind": "polytope",
            "inequalities": poly.inequalities().len(),
            "equalities": poly.equalities().len(),
            "points": points_json(poly.vertices()?),
        }),
        CenterSet::Sample(s) => json!({"kind": "sample", "points": points_json(s)}),
    })
}

fn status_gap(s: &SolveStatus) -> f64 {
    match s {
        SolveStatus::Iterative { gap, .. } => *gap,
        _ => 0.0,
    }
}

/// Coordinate-max Hausdorff distance between two finite point lists.
fn vertex_distance(a: &[Point], b: &[Point]) -> Result<f64, Failure> {
    let d = a.first().map_or(1, |p| p.dim());
    let max = NormSpec::max(d)?;
    Ok(hausdorff_finite(&max, &PointSet::new(a.to_vec())?, &PointSet::new(b.to_vec())?)?)
}

fn bounding_box(pts: &[Point]) -> Value {
    let Some(first) = pts.first() else {
        return Value::Null;
    };
    let mut lo = first.to_vec();
    let mut hi = first.to_vec();
    for p in pts {
        for i in 0..p.dim() {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    json!([lo, hi])
}

pub fn solve(ctx: &Ctx, opts: &Opts) -> Result<Outcome, Failure> {
    if let Some(eps0) = opts.eps0.or(ctx.file.params.eps0) {
        return amir(ctx, eps0);
    }
    let (n, v, f) = (ctx.norm(), ctx.v(), &ctx.points);
    let sol = solve_centers(n, v, f, &ctx.settings)?;
    let compiled = v.compile(n)?;
    let slack = (ctx.tol() + status_gap(&sol.status)) * (1.0 + sol.radius);
    let mut max_excess = f64::NEG_INFINITY;
    let mut witness = Value::Null;
    for c in sol.center_set.points()? {
        let r = farthest_radius(n, &c, f)?;
        max_excess = max_excess.max(r - sol.radius);
        let inside = compiled.contains(&c, ctx.tol());
        if witness.is_null() && (r - sol.radius > slack || !inside) {
            witness = json!({"center": c.coords(), "farthest_radius": r, "in_constraint_set": inside});
        }
    }
    let half_diameter = f.diameter(n) / 2.0;
    if witness.is_null() && sol.radius + slack < half_diameter {
        witness = json!({"radius": sol.radius, "half_diameter": half_diameter});
    }
    let verified = witness.is_null();
    let results = json!({
        "radius": sol.radius,
        "status": sol.status,
        "centers": centers_json(&sol.center_set)?,
        "checks": {
            "max_radius_excess": max_excess,
            "half_diameter": half_diameter,
        },
    });
    Ok(Outcome {
        report: ctx.report("solve", sol.status.path_name(), verified, results, witness),
        files: Vec::new(),
        verified,
    })
}

fn amir(ctx: &Ctx, eps0: f64) -> Result<Outcome, Failure> {
    let (n, v, f) = (ctx.norm(), ctx.v(), &ctx.points);
    let sol = amir_iterate(n, f, eps0, v, ctx.tol())?;
    let reference = solve_centers(n, v, f, &ctx.settings)?;
    let trace = sol.trace.as_ref().expect("construction records a trace");
    let gap = (sol.radius - reference.radius).abs();
    let violation = trace.first_violation(1e-9);
    let witness = match violation {
        Some(usize::MAX) => json!({"step": "seed", "radius": trace.seed_radius}),
        Some(k) => json!({"step": k, "record": trace.steps[k]}),
        None if gap > 1e-6 => json!({"radius": sol.radius, "reference_radius": reference.radius}),
        None => Value::Null,
    };
    let verified = witness.is_null();
    let results = json!({
        "radius": sol.radius,
        "reference_radius": reference.radius,
        "radius_gap": gap,
        "status": sol.status,
        "centers": centers_json(&sol.center_set)?,
        "trace": trace,
    });
    Ok(Outcome {
        report: ctx.report("solve", sol.status.path_name(), verified, results, witness),
        files: Vec::new(),
        verified,
    })
}

pub fn decompose(ctx: &Ctx, opts: &Opts) -> Result<Outcome, Failure> {
    if ctx.file.params.z.is_some() {
        return msummand(ctx, opts);
    }
    let inst = DirectSumInstance::new(ctx.norm().clone(), ctx.v().clone(), ctx.points.clone())?;
    let s = &ctx.settings;
    let rad = radius_directsum(&inst, s)?;
    let cent = center_directsum(&inst, s)?;
    let full = solve_centers(ctx.norm(), ctx.v(), &ctx.points, s)?;
    let (n1, n2) = inst.block_norms()?;
    let (v1, v2) = inst.block_sets()?;
    let (b1, b2) = inst.projections()?;
    let c1 = solve_centers(n1, &v1, &b1, s)?;
    let c2 = solve_centers(n2, &v2, &b2, s)?;

    let gaps = status_gap(&full.status) + status_gap(&c1.status) + status_gap(&c2.status);
    let slack = (ctx.tol() + gaps) * (1.0 + full.radius);
    let radius_gap = (rad.rad - full.radius).abs();
    let mut witness = Value::Null;
    if radius_gap > slack {
        witness = json!({"kind": "radius_mismatch", "block_formula": rad.rad, "full_space": full.radius});
    }

    let both_exact = full.center_set.polytope().is_some() && cent.solution.center_set.polytope().is_some();
    let vertex_gap = if both_exact {
        let d = vertex_distance(&cent.solution.center_set.points()?, &full.center_set.points()?)?;
        if witness.is_null() && d > VERTEX_MATCH_TOL {
            witness = json!({"kind": "vertex_mismatch", "distance": d});
        }
        Some(d)
    } else {
        None
    };

    let compiled = ctx.v().compile(ctx.norm())?;
    let mut product_excess = f64::NEG_INFINITY;
    for p in &c1.center_set.points()? {
        for q in &c2.center_set.points()? {
            let x = Point::new([p.coords(), q.coords()].concat())?;
            let r = farthest_radius(ctx.norm(), &x, &ctx.points)?;
            product_excess = product_excess.max(r - full.radius);
            if witness.is_null() && (r - full.radius > slack || !compiled.contains(&x, ctx.tol())) {
                witness = json!({"kind": "product_point_outside", "point": x.coords(), "farthest_radius": r});
            }
        }
    }

    let verified = witness.is_null();
    let results = json!({
        "r1": rad.r1,
        "r2": rad.r2,
        "radius": rad.rad,
        "full_space_radius": full.radius,
        "radius_gap": radius_gap,
        "certified_samples": rad.certified_samples,
        "certificate_error": rad.certificate_error,
        "case": cent.case,
        "centers": centers_json(&cent.solution.center_set)?,
        "vertex_gap": vertex_gap,
        "product_excess": product_excess,
    });
    Ok(Outcome {
        report: ctx.report("decompose", full.status.path_name(), verified, results, witness),
        files: Vec::new(),
        verified,
    })
}

fn msummand(ctx: &Ctx, opts: &Opts) -> Result<Outcome, Failure> {
    let blocks = ctx
        .norm()
        .blocks()
        .filter(|b| b.len() == 2)
        .ok_or_else(|| chebcent::Error::Instance("params.z needs a two-block direct-sum norm".into()))?;
    let z = ctx.file.params.z.clone().expect("checked by caller");
    let inst = MSummandInstance::new(blocks[0].clone(), blocks[1].clone(), z, ctx.points.clone())?;
    let s = &ctx.settings;
    let sol = msummand_solve(&inst, s)?;
    let full_set = inst.full_space_set();
    let full = solve_centers(&inst.norm, &full_set, &inst.b, s)?;
    let radius_gap = (sol.solution.radius - full.radius).abs();
    let slack = (ctx.tol() + status_gap(&full.status) + status_gap(&sol.solution.status)) * (1.0 + full.radius);
    let mut witness = Value::Null;
    if radius_gap > slack {
        witness = json!({"kind": "radius_mismatch", "msummand": sol.solution.radius, "full_space": full.radius});
    }
    let vertex_gap = if full.center_set.polytope().is_some() && sol.solution.center_set.polytope().is_some() {
        let d = vertex_distance(&sol.solution.center_set.points()?, &full.center_set.points()?)?;
        if witness.is_null() && d > VERTEX_MATCH_TOL {
            witness = json!({"kind": "vertex_mismatch", "distance": d});
        }
        Some(d)
    } else {
        None
    };

    // With the W part dominated, S(F, δ) of the instance and of its Y-block agree.
    let mut curve_gap = Value::Null;
    if sol.case == MSummandCase::Inherited {
        let whole = P1Instance::new(&inst.norm, &full_set, &inst.b, s)?;
        let yb = inst.y_block()?;
        let block = P1Instance::new(inst.y_norm(), &inst.z, &yb, s)?;
        if whole.is_exact() && block.is_exact() {
            let deltas = ctx.deltas(opts, ctx.eps(opts).unwrap_or(1.0), "geometric:8")?;
            let mut worst = 0.0f64;
            for &d in &deltas {
                let a = whole.s_value(d, s)?.value;
                let b = block.s_value(d, s)?.value;
                worst = worst.max((a - b).abs());
                if witness.is_null() && (a - b).abs() > CURVE_MATCH_TOL {
                    witness = json!({"kind": "curve_mismatch", "delta": d, "s_full": a, "s_block": b});
                }
            }
            curve_gap = json!(worst);
        }
    }

    let verified = witness.is_null();
    let results = json!({
        "rad_y": sol.rad_y,
        "sup_w": sol.sup_w,
        "case": sol.case,
        "radius": sol.solution.radius,
        "full_space_radius": full.radius,
        "radius_gap": radius_gap,
        "centers": centers_json(&sol.solution.center_set)?,
        "vertex_gap": vertex_gap,
        "curve_gap": curve_gap,
    });
    Ok(Outcome {
        report: ctx.report("decompose", sol.solution.status.path_name(), verified, results, witness),
        files: Vec::new(),
        verified,
    })
}

pub fn verify_p1(ctx: &Ctx, opts: &Opts) -> Result<Outcome, Failure> {
    let eps = required(ctx.eps(opts), "eps")?;
    let s = &ctx.settings;
    let deltas = ctx.deltas(opts, eps, "geometric:20")?;
    let p1 = P1Instance::new(ctx.norm(), ctx.v(), &ctx.points, s)?;
    let curve = p1.curve(&deltas, s)?;
    let est = p1.estimate_delta(eps, s)?;

    let mut witness = Value::Null;
    // Sampled values are lower bounds, so only exact curves are held to monotonicity.
    if curve.exact && !curve.monotone {
        let w = curve
            .points
            .windows(2)
            .find(|w| w[1].value + ctx.tol() < w[0].value)
            .map(|w| json!({"kind": "not_monotone", "delta": [w[0].delta, w[1].delta], "s_value": [w[0].value, w[1].value]}));
        witness = w.unwrap_or(Value::Null);
    }
    let s0 = curve.points.iter().find(|p| p.delta == 0.0).map(|p| p.value);
    if witness.is_null() {
        if let Some(v) = s0.filter(|&v| v > ctx.tol()) {
            witness = json!({"kind": "s_at_zero", "s_value": v});
        }
    }
    let containment = if est.certified {
        let c = p1.check_containment(est.delta, eps, s)?;
        if let (true, Containment::Violated { witness: w, distance }) = (witness.is_null(), &c) {
            witness = json!({"kind": "containment", "delta": est.delta, "point": w.coords(), "distance": distance});
        }
        json!(c)
    } else {
        if witness.is_null() && p1.is_exact() {
            witness = json!({"kind": "no_certified_delta", "eps": eps, "levels_tried": est.levels_tried});
        }
        Value::Null
    };

    let verified = witness.is_null();
    let results = json!({
        "eps": eps,
        "radius": p1.radius(),
        "monotone": curve.monotone,
        "exact": curve.exact,
        "s_at_zero": s0,
        "delta_estimate": est,
        "containment": containment,
        "curve": curve.points,
    });
    let path = if curve.exact { "exact" } else { "sampled" };
    Ok(Outcome {
        report: ctx.report("verify-p1", path, verified, results, witness),
        files: vec![("p1_curve.csv".into(), curve_csv(&curve.pairs()))],
        verified,
    })
}

pub fn probe_continuity(ctx: &Ctx, opts: &Opts) -> Result<Outcome, Failure> {
    let s = &ctx.settings;
    let trials = ctx.trials(opts, 20);
    let eps = ctx.eps(opts);
    let mut deltas = ctx.deltas(opts, eps.unwrap_or(0.1), "geometric:4")?;

    // With ε given, perturbations of size δ*/2 must keep the upper deviation
    // within ε + 2δ*.
    let mut bound = None;
    let mut estimate = Value::Null;
    if let Some(eps) = eps {
        let p1 = P1Instance::new(ctx.norm(), ctx.v(), &ctx.points, s)?;
        let est = p1.estimate_delta(eps, s)?;
        if est.certified {
            let half = est.delta / 2.0;
            if !deltas.contains(&half) {
                deltas.push(half);
                deltas.sort_by(f64::total_cmp);
            }
            bound = Some((half, eps + 2.0 * est.delta + 1e-7));
        }
        estimate = json!(est);
    }

    let records = continuity_modulus(ctx.norm(), ctx.v(), &ctx.points, &deltas, trials, s.seed, s)?;
    let mut witness = Value::Null;
    if let Some((half, b)) = bound {
        if let Some(r) = records.iter().find(|r| r.delta <= half && r.upper_dev > b) {
            witness = json!({"kind": "upper_deviation", "bound": b, "record": r});
        }
    }
    let lipschitz = lipschitz_from_records(&records);
    let per_delta: Vec<Value> = deltas
        .iter()
        .map(|&d| {
            let rs = records.iter().filter(|r| r.delta == d);
            let (mut dh, mut lo, mut up) = (0.0f64, 0.0f64, 0.0f64);
            for r in rs {
                dh = dh.max(r.dh_cent);
                lo = lo.max(r.lower_dev);
                up = up.max(r.upper_dev);
            }
            json!({"delta": d, "max_dH_cent": dh, "max_lower_dev": lo, "max_upper_dev": up})
        })
        .collect();

    let rows: Vec<Vec<CsvCell>> = records
        .iter()
        .map(|r| {
            vec![
                CsvCell::Float(r.delta),
                CsvCell::Float(r.dh_f),
                CsvCell::Float(r.dh_cent),
                CsvCell::Float(r.lower_dev),
                CsvCell::Float(r.upper_dev),
                CsvCell::Int(r.seed),
            ]
        })
        .collect();
    let csv = to_csv(&["delta", "dH_F", "dH_cent", "lower_dev", "upper_dev", "seed"], &rows);

    let verified = witness.is_null();
    let results = json!({
        "trials": trials,
        "deltas": deltas,
        "lipschitz_estimate": lipschitz,
        "per_delta": per_delta,
        "delta_estimate": estimate,
        "deviation_bound": bound.map(|(half, b)| json!({"delta": half, "bound": b})),
    });
    Ok(Outcome {
        report: ctx.report("probe-continuity", "exact", verified, results, witness),
        files: vec![("continuity.csv".into(), csv)],
        verified,
    })
}

pub fn lemma34(ctx: &Ctx, opts: &Opts) -> Result<Outcome, Failure> {
    let alpha = required(opts.alpha.or(ctx.file.params.alpha), "alpha")?;
    let eps = required(ctx.eps(opts), "eps")?;
    let trials = ctx.trials(opts, 100);
    let s = &ctx.settings;
    let r = lemma34_check(ctx.norm(), ctx.v(), &ctx.points, alpha, eps, trials, s.seed, s)?;
    let witness = if r.verified {
        Value::Null
    } else {
        json!({"trial": r.worst_trial, "measured": r.measured, "eps": eps})
    };
    Ok(Outcome {
        report: ctx.report("lemma34", "exact", r.verified, json!(r), witness),
        files: Vec::new(),
        verified: r.verified,
    })
}

pub fn scale_check(ctx: &Ctx, opts: &Opts) -> Result<Outcome, Failure> {
    let d = ctx.norm().dim();
    let basis = ctx.file.params.basis.clone().unwrap_or_else(|| {
        (0..d)
            .map(|i| {
                let mut e = vec![0.0; d];
                e[i] = 1.0;
                e
            })
            .collect()
    });
    let lambdas = match opts.lambda.or(ctx.file.params.lambda) {
        Some(l) => vec![l],
        None => vec![0.5, 1.0, 3.0, 10.0],
    };
    let deltas = ctx.deltas(opts, ctx.eps(opts).unwrap_or(0.1), "geometric:3")?;
    let trials = ctx.trials(opts, 10);
    let s = &ctx.settings;
    let mut reports = Vec::new();
    let mut witness = Value::Null;
    for &l in &lambdas {
        let r = scaling_transfer_check(ctx.norm(), &basis, l, &ctx.points, &deltas, trials, s.seed, s)?;
        if witness.is_null() && !r.passed(ctx.tol()) {
            witness = json!(r);
        }
        reports.push(r);
    }
    let verified = witness.is_null();
    let results = json!({"deltas": deltas, "trials": trials, "lambdas": reports});
    Ok(Outcome {
        report: ctx.report("scale-check", "exact", verified, results, witness),
        files: Vec::new(),
        verified,
    })
}

fn load_pinned() -> Result<Option<PinnedFile>, Failure> {
    match std::env::var_os(PINNED_ENV) {
        Some(p) if !p.is_empty() => Ok(Some(PinnedFile::load(p.as_ref())?)),
        _ => Ok(None),
    }
}

fn find_pinned<'a>(
    pinned: Option<&'a PinnedFile>,
    ctx: &Ctx,
    quantity: &str,
    delta: Option<f64>,
    h: f64,
) -> Option<&'a PinnedEntry> {
    pinned?.entries.iter().find(|e| {
        e.quantity == quantity
            && e.h == h
            && e.delta == delta
            && &e.norm == ctx.norm()
            && &e.constraint == ctx.v()
            && e.points == ctx.file.points
    })
}

pub fn oracle(ctx: &Ctx, opts: &Opts) -> Result<Outcome, Failure> {
    let h = opts.grid_h.or(ctx.file.params.grid_h).unwrap_or(0.01);
    let s = &ctx.settings;
    let pinned = load_pinned()?;
    let sol = solve_centers(ctx.norm(), ctx.v(), &ctx.points, s)?;
    let mut witness = Value::Null;

    let radius = match find_pinned(pinned.as_ref(), ctx, "radius", None, h) {
        Some(e) => json!({
            "source": "pinned",
            "id": e.id,
            "value": e.value,
            "bound": e.h * e.c_n,
            "center_box": e.center_box,
        }),
        None => {
            let g = grid_radius_center(ctx.norm(), ctx.v(), &ctx.points, h, s.exec)?;
            json!({
                "source": "grid",
                "value": g.radius,
                "bound": g.bound,
                "scanned": g.scanned,
                "feasible": g.feasible,
                "center_samples": g.centers.len(),
                "center_box": bounding_box(&g.centers),
            })
        }
    };
    let grid_r = radius["value"].as_f64().unwrap_or(f64::NAN);
    let bound = radius["bound"].as_f64().unwrap_or(f64::NAN);
    let gap = (grid_r - sol.radius).abs();
    if !(gap <= bound) {
        witness = json!({"kind": "radius", "grid": grid_r, "solver": sol.radius, "bound": bound});
    }

    let mut s_values = Vec::new();
    if opts.deltas.is_some() || ctx.file.params.deltas.is_some() {
        let deltas = ctx.deltas(opts, ctx.eps(opts).unwrap_or(1.0), "")?;
        let p1 = P1Instance::new(ctx.norm(), ctx.v(), &ctx.points, s)?;
        for d in deltas {
            let (source, value, bound) = match find_pinned(pinned.as_ref(), ctx, "s_value", Some(d), h) {
                Some(e) => ("pinned", e.value, 2.0 * e.h * e.c_n),
                None => {
                    let g = grid_s_value(ctx.norm(), ctx.v(), &ctx.points, d, h, s.exec)?;
                    ("grid", g.value, g.bound)
                }
            };
            let exact = p1.s_value(d, s)?;
            let gap = (exact.value - value).abs();
            if witness.is_null() && p1.is_exact() && !(gap <= bound) {
                witness = json!({"kind": "s_value", "delta": d, "grid": value, "exact": exact.value, "bound": bound});
            }
            s_values.push(json!({
                "delta": d,
                "source": source,
                "value": value,
                "bound": bound,
                "solver_value": exact.value,
                "solver_path": exact.path,
                "gap": gap,
            }));
        }
    }

    let verified = witness.is_null();
    let results = json!({
        "h": h,
        "c_n": ctx.norm().max_equivalence_constant(),
        "radius": radius,
        "solver_radius": sol.radius,
        "solver_status": sol.status,
        "radius_gap": gap,
        "s_values": s_values,
    });
    Ok(Outcome {
        report: ctx.report("oracle", sol.status.path_name(), verified, results, witness),
        files: Vec::new(),
        verified,
    })
}

/// Checks one pinned entry against the solvers; returns |solver − pinned| and its bound.
pub fn check_pinned(e: &PinnedEntry, settings: &Settings) -> Result<(f64, f64), Failure> {
    let f = e.point_set()?;
    match (e.quantity.as_str(), e.delta) {
        ("radius", None) => {
            let r = solve_centers(&e.norm, &e.constraint, &f, settings)?.radius;
            Ok(((r - e.value).abs(), e.h * e.c_n))
        }
        ("s_value", Some(d)) => {
            let v = chebcent::p1::s_value(&e.norm, &e.constraint, &f, d, settings)?.value;
            Ok(((v - e.value).abs(), 2.0 * e.h * e.c_n))
        }
        _ => Err(chebcent::Error::Instance(format!("pinned entry {} is malformed", e.id)).into()),
    }
}

pub fn pin_derived(opts: &Opts) -> Result<Outcome, Failure> {
    let s = settings(opts, opts.tol.unwrap_or(DEFAULT_TOL), opts.seed.unwrap_or(0))?;
    let pinned = rescan_corpus(s.exec)?;
    let target = match std::env::var_os(PINNED_ENV) {
        Some(p) if !p.is_empty() => std::path::PathBuf::from(p),
        _ => opts.out.join("pinned_oracle.json"),
    };
    output::write_atomic_path(&target, &to_json_pretty(&pinned))?;

    let mut witness = Value::Null;
    let mut checks = Vec::new();
    for e in &pinned.entries {
        let (gap, bound) = check_pinned(e, &s)?;
        if witness.is_null() && !(gap <= bound) {
            witness = json!({"id": e.id, "gap": gap, "bound": bound});
        }
        checks.push(json!({"id": e.id, "quantity": e.quantity, "value": e.value, "gap": gap, "bound": bound}));
    }
    let verified = witness.is_null();
    let report = json!({
        "format_version": FORMAT_VERSION,
        "task": "pin-derived",
        "instance": Value::Null,
        "instance_digest": Value::Null,
        "seed": s.seed,
        "tol": s.tol,
        "path": "grid",
        "verified": verified,
        "results": {"h": PIN_H, "entries": checks},
        "witness": witness,
    });
    Ok(Outcome {
        report,
        files: Vec::new(),
        verified,
    })
}
