//! Instance files, deterministic JSON/CSV emission and the pinned
//! oracle-values file.
//!
//! Every float is written with 17 significant digits (`{:.16e}`), which
//! round-trips any f64 exactly; objects keep insertion order.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::ConstraintSet;
use crate::error::Error;
use crate::space::{NormSpec, Point, PointSet};

pub const FORMAT_VERSION: u32 = 1;

/// Task parameters; command-line flags take precedence over these.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<DeltaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Starting ε for the truncated-step construction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps0: Option<f64>,
    /// Spanning vectors of Y for the scaling checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<Vec<f64>>>,
    /// Z ⊆ Y (in Y-coordinates): turns `decompose` into the M-summand solve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<ConstraintSet>,
}

/// Either an explicit list or `"geometric:K"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaSpec {
    List(Vec<f64>),
    Text(String),
}

impl DeltaSpec {
    /// Resolves to an increasing list. `geometric:K` expands to
    /// `{0} ∪ {base·2^{−k} : k < K}`.
    pub fn resolve(&self, base: f64) -> Result<Vec<f64>, Error> {
        match self {
            DeltaSpec::List(v) => {
                if v.is_empty() || v.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
                    return Err(Error::Instance(
                        "deltas must be a non-empty list of non-negative numbers".into(),
                    ));
                }
                let mut v = v.clone();
                v.sort_by(f64::total_cmp);
                Ok(v)
            }
            DeltaSpec::Text(s) => parse_deltas(s, base),
        }
    }
}

pub fn parse_deltas(s: &str, base: f64) -> Result<Vec<f64>, Error> {
    if let Some(k) = s.strip_prefix("geometric:") {
        let k: usize = k
            .trim()
            .parse()
            .map_err(|_| Error::Instance(format!("bad geometric level count in {s:?}")))?;
        if k == 0 || k > 60 {
            return Err(Error::Instance("geometric level count must be in 1..=60".into()));
        }
        return Ok(crate::p1::geometric_deltas(base, k));
    }
    let v: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    DeltaSpec::List(v.map_err(|_| Error::Instance(format!("cannot parse deltas {s:?}")))?).resolve(base)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub norm: NormSpec,
    #[serde(default = "whole_space")]
    pub constraint: ConstraintSet,
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub params: Params,
}

fn whole_space() -> ConstraintSet {
    ConstraintSet::WholeSpace
}

impl InstanceFile {
    pub fn point_set(&self) -> Result<PointSet, Error> {
        PointSet::new(
            self.points
                .iter()
                .map(|p| Point::new(p.clone()))
                .collect::<Result<_, _>>()?,
        )
    }

    /// sha256 over the canonical serialization.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(to_json_compact(self).as_bytes());
        format!("sha256:{}", hex::encode(h.finalize()))
    }
}

/// A single schema problem: JSON path plus, for syntax and type errors, the
/// position in the file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemaError {
    pub path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(l) => write!(f, "{} (line {l}): {}", self.path, self.message),
            None => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> SchemaError {
    SchemaError {
        path: path.into(),
        line: None,
        column: None,
        message: message.into(),
    }
}

pub fn parse_instance_str(text: &str) -> Result<InstanceFile, Vec<SchemaError>> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let inst: InstanceFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        vec![SchemaError {
            path: if path == "." { "$".into() } else { path },
            line: Some(inner.line()),
            column: Some(inner.column()),
            message: inner.to_string(),
        }]
    })?;
    let errors = validate(&inst);
    if errors.is_empty() {
        Ok(inst)
    } else {
        Err(errors)
    }
}

pub fn parse_instance(path: &Path) -> Result<InstanceFile, Vec<SchemaError>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![schema("$", format!("cannot read {}: {e}", path.display()))])?;
    parse_instance_str(&text)
}

fn validate(inst: &InstanceFile) -> Vec<SchemaError> {
    let mut errors = Vec::new();
    if inst.version != FORMAT_VERSION {
        errors.push(schema(
            "version",
            format!("unsupported version {}, expected {FORMAT_VERSION}", inst.version),
        ));
    }
    let d = inst.norm.dim();
    if inst.points.is_empty() {
        errors.push(schema("points", "at least one point is required"));
    }
    for (i, p) in inst.points.iter().enumerate() {
        if p.len() != d {
            errors.push(schema(
                format!("points[{i}]"),
                format!("expected {d} coordinates to match the norm, got {}", p.len()),
            ));
        } else if p.iter().any(|x| !x.is_finite()) {
            errors.push(schema(format!("points[{i}]"), "coordinates must be finite"));
        }
    }
    if let Err(e) = inst.constraint.validate(&inst.norm) {
        errors.push(schema("constraint", e.to_string()));
    }
    if let Some(z) = &inst.params.z {
        match inst.norm.blocks() {
            Some([y, _]) => {
                if let Err(e) = z.validate(y) {
                    errors.push(schema("params.z", e.to_string()));
                }
            }
            _ => errors.push(schema(
                "params.z",
                "an M-summand instance needs a two-block direct-sum norm",
            )),
        }
    }
    if let Some(b) = &inst.params.basis {
        for (i, row) in b.iter().enumerate() {
            if row.len() != d {
                errors.push(schema(
                    format!("params.basis[{i}]"),
                    format!("expected {d} coordinates, got {}", row.len()),
                ));
            }
        }
    }
    errors
}

/// Formats a float with 17 significant digits; −0 is written as 0.
pub fn fmt_f64(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

/// Pretty printer that writes floats with 17 significant digits.
struct Fixed17 {
    inner: serde_json::ser::PrettyFormatter<'static>,
    pretty: bool,
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                if self.pretty {
                    self.inner.$name(w $(, $arg)*)
                } else {
                    serde_json::ser::CompactFormatter.$name(w $(, $arg)*)
                }
            }
        )*
    };
}

impl serde_json::ser::Formatter for Fixed17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(fmt_f64(v).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(v))
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        end_object_key(),
        begin_object_value(),
        end_object_value(),
    );
}

fn to_json_with<T: Serialize + ?Sized>(value: &T, pretty: bool) -> String {
    let mut out = Vec::new();
    let fmt = Fixed17 {
        inner: serde_json::ser::PrettyFormatter::with_indent(b"  "),
        pretty,
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut out, fmt);
    value
        .serialize(&mut ser)
        .expect("serializing to memory cannot fail");
    let mut s = String::from_utf8(out).expect("serde_json emits UTF-8");
    if pretty {
        s.push('\n');
    }
    s
}

/// Pretty JSON with stable field order and 17-digit floats, newline-terminated.
pub fn to_json_pretty<T: Serialize + ?Sized>(value: &T) -> String {
    to_json_with(value, true)
}

pub fn to_json_compact<T: Serialize + ?Sized>(value: &T) -> String {
    to_json_with(value, false)
}

/// Two-or-more column CSV with a header row; floats at 17 significant digits.
pub fn to_csv(header: &[&str], rows: &[Vec<CsvCell>]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row.iter().map(CsvCell::render))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CsvCell {
    Float(f64),
    Int(u64),
}

impl CsvCell {
    fn render(&self) -> String {
        match self {
            CsvCell::Float(v) => fmt_f64(*v),
            CsvCell::Int(v) => v.to_string(),
        }
    }
}

/// The P₁ curve as `delta,s_value`.
pub fn curve_csv(pairs: &[(f64, f64)]) -> String {
    let rows: Vec<Vec<CsvCell>> = pairs
        .iter()
        .map(|&(d, s)| vec![CsvCell::Float(d), CsvCell::Float(s)])
        .collect();
    to_csv(&["delta", "s_value"], &rows)
}

/// One oracle result frozen for later comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinnedEntry {
    pub id: String,
    /// `radius` or `s_value`.
    pub quantity: String,
    pub norm: NormSpec,
    pub constraint: ConstraintSet,
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub h: f64,
    pub c_n: f64,
    pub value: f64,
    /// Coordinatewise bounding box of the grid center samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_box: Option<[Vec<f64>; 2]>,
}

impl PinnedEntry {
    pub fn point_set(&self) -> Result<PointSet, Error> {
        PointSet::new(
            self.points
                .iter()
                .map(|p| Point::new(p.clone()))
                .collect::<Result<_, _>>()?,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinnedFile {
    pub version: u32,
    pub entries: Vec<PinnedEntry>,
}

impl PinnedFile {
    pub fn load(path: &Path) -> Result<PinnedFile, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Instance(format!("cannot read {}: {e}", path.display())))?;
        let f: PinnedFile = serde_json::from_str(&text)
            .map_err(|e| Error::Instance(format!("{}: {e}", path.display())))?;
        if f.version != FORMAT_VERSION {
            return Err(Error::Instance(format!(
                "{}: unsupported pinned-file version {}",
                path.display(),
                f.version
            )));
        }
        Ok(f)
    }

    pub fn get(&self, id: &str) -> Option<&PinnedEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"version": 1, "norm": {"kind": "max", "dim": 2}, "points": [[1, 0]]}"#;

    #[test]
    fn parses_minimal_file() {
        let i = parse_instance_str(MINIMAL).unwrap();
        assert_eq!(i.constraint, ConstraintSet::WholeSpace);
        assert_eq!(i.point_set().unwrap().len(), 1);
    }

    #[test]
    fn reports_dimension_errors_with_paths() {
        let text = r#"{"version": 1, "norm": {"kind": "direct_sum", "blocks": [{"kind": "max", "dim": 1}, {"kind": "max", "dim": 2}], "dim": 3},
            "points": [[1, 2, 3], [1, 2]]}"#;
        let e = parse_instance_str(text).unwrap_err();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].path, "points[1]");
    }

    #[test]
    fn unknown_norm_kind_names_the_field() {
        let text = "{\"version\": 1,\n \"norm\": {\"kind\": \"taxicab\", \"dim\": 2},\n \"points\": [[0, 0]]}";
        let e = parse_instance_str(text).unwrap_err();
        assert!(e[0].path.starts_with("norm"), "{:?}", e);
        assert!(e[0].message.contains("taxicab"));
        assert_eq!(e[0].line, Some(2));
    }

    #[test]
    fn version_is_required() {
        let e = parse_instance_str(r#"{"norm": {"kind": "max", "dim": 1}, "points": [[0]]}"#).unwrap_err();
        assert!(e[0].message.contains("version"));
    }

    #[test]
    fn floats_use_17_digits_and_round_trip() {
        let v = serde_json::json!({"b": 0.1, "a": [1.0, -2.5e-300], "n": 3});
        let s = to_json_pretty(&v);
        assert!(s.contains("1.0000000000000001e-1"));
        assert!(s.find("\"b\"").unwrap() < s.find("\"a\"").unwrap());
        assert_eq!(s, to_json_pretty(&v));
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn instance_round_trips_and_digest_is_stable() {
        let i = parse_instance_str(MINIMAL).unwrap();
        let again = parse_instance_str(&to_json_pretty(&i)).unwrap();
        assert_eq!(i, again);
        assert_eq!(i.digest(), again.digest());
        assert!(i.digest().starts_with("sha256:"));
    }

    #[test]
    fn curve_header() {
        let s = curve_csv(&[(0.0, 0.0), (0.5, 0.25)]);
        assert!(s.starts_with("delta,s_value\n"));
        assert_eq!(s.lines().count(), 3);
    }

    #[test]
    fn delta_specs() {
        assert_eq!(parse_deltas("geometric:3", 1.0).unwrap(), vec![0.0, 0.25, 0.5, 1.0]);
        assert_eq!(parse_deltas("0.2, 0.1", 1.0).unwrap(), vec![0.1, 0.2]);
        assert!(parse_deltas("geometric:x", 1.0).is_err());
        assert!(parse_deltas("-1", 1.0).is_err());
    }
}
