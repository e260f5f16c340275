//! The scene text format.
//!
//! ```text
//! [scene]
//! name = "sphere4"
//! dimension = 4
//! signature = "riemannian"        # or "p,q"
//! coordinates = "x1, x2, x3, x4"
//!
//! [metric]
//! g_11 = "4/(1+r2)^2"             # i <= j, omitted entries are 0
//!
//! [einstein_scales]
//! scale_1 = "1"
//!
//! [samples]
//! point_1 = "0, 1/2, 0, 0"
//! positive_1 = "1-r2"             # must be > 0 at every sample
//! seed = 1
//! count = 3
//! ```
//!
//! Files are TOML, so comments and either quoting style work. `r2` expands to
//! the sum of squared coordinates.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;
use toml::{Table, Value};
use tractor_core::expr::{default_coords, parse_with_r2};
use tractor_core::jets::Rational;
use tractor_core::riemann::{ChartMetric, Signature};
use tractor_core::scenes::SceneSpec;
use tractor_core::Expr;

#[derive(Debug, Error)]
pub enum SceneFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("not valid TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("[{section}] {key}: {message}")]
    Field {
        section: &'static str,
        key: String,
        message: String,
    },
    #[error("missing section [{0}]")]
    MissingSection(&'static str),
    #[error(transparent)]
    Scene(#[from] tractor_core::Error),
}

fn field(section: &'static str, key: &str, message: impl Into<String>) -> SceneFileError {
    SceneFileError::Field {
        section,
        key: key.to_string(),
        message: message.into(),
    }
}

fn section<'a>(doc: &'a Table, name: &'static str) -> Result<Option<&'a Table>, SceneFileError> {
    match doc.get(name) {
        None => Ok(None),
        Some(Value::Table(t)) => Ok(Some(t)),
        Some(_) => Err(field(name, "", "expected a section")),
    }
}

fn string<'a>(sec: &'static str, key: &str, v: &'a Value) -> Result<&'a str, SceneFileError> {
    v.as_str()
        .ok_or_else(|| field(sec, key, "expected a quoted string"))
}

/// A comma list given either as one string or as an array.
fn list(sec: &'static str, key: &str, v: &Value) -> Result<Vec<String>, SceneFileError> {
    match v {
        Value::String(s) => Ok(s
            .split(',')
            .map(|p| p.trim().to_string())
            .filter(|p| !p.is_empty())
            .collect()),
        Value::Array(items) => items
            .iter()
            .map(|i| match i {
                Value::String(s) => Ok(s.trim().to_string()),
                Value::Integer(k) => Ok(k.to_string()),
                _ => Err(field(sec, key, "list entries must be strings or integers")),
            })
            .collect(),
        Value::Integer(k) => Ok(vec![k.to_string()]),
        _ => Err(field(sec, key, "expected a comma list")),
    }
}

fn unsigned(sec: &'static str, key: &str, v: &Value) -> Result<u64, SceneFileError> {
    v.as_integer()
        .and_then(|k| u64::try_from(k).ok())
        .ok_or_else(|| field(sec, key, "expected a non-negative integer"))
}

/// `name_k` keys in numeric order of `k`.
fn numbered<'a>(
    sec: &'static str,
    table: &'a Table,
    prefix: &str,
) -> Result<Vec<(String, &'a Value)>, SceneFileError> {
    let mut out = BTreeMap::new();
    for (k, v) in table {
        if let Some(rest) = k.strip_prefix(prefix).and_then(|r| r.strip_prefix('_')) {
            let idx: u64 = rest
                .parse()
                .map_err(|_| field(sec, k, "expected a numeric suffix"))?;
            out.insert(idx, (k.clone(), v));
        }
    }
    Ok(out.into_values().collect())
}

fn rational(sec: &'static str, key: &str, text: &str) -> Result<Rational, SceneFileError> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    compact
        .parse::<Rational>()
        .map_err(|e| field(sec, key, format!("`{text}` is not an exact rational ({e})")))
}

fn parse_signature(text: &str, n: usize) -> Result<Signature, SceneFileError> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("riemannian") {
        return Ok(Signature::riemannian(n));
    }
    let bad = || {
        field(
            "scene",
            "signature",
            format!("expected \"riemannian\" or \"p,q\", got `{t}`"),
        )
    };
    let (p, q) = t.split_once(',').ok_or_else(bad)?;
    let p: usize = p.trim().parse().map_err(|_| bad())?;
    let q: usize = q.trim().parse().map_err(|_| bad())?;
    if p + q != n {
        return Err(field(
            "scene",
            "signature",
            format!("{p}+{q} does not match dimension {n}"),
        ));
    }
    Ok(Signature {
        positive: p,
        negative: q,
    })
}

fn expr(
    sec: &'static str,
    key: &str,
    v: &Value,
    coords: &[String],
) -> Result<Expr, SceneFileError> {
    let text = match v {
        Value::Integer(k) => k.to_string(),
        _ => string(sec, key, v)?.to_string(),
    };
    parse_with_r2(&text, coords).map_err(|e| field(sec, key, e.to_string()))
}

/// Parses a scene file and validates its explicit sample points.
pub fn parse_scene(text: &str) -> Result<SceneSpec, SceneFileError> {
    let doc: Table = text.parse()?;
    let scene = section(&doc, "scene")?.ok_or(SceneFileError::MissingSection("scene"))?;
    let name = scene
        .get("name")
        .map(|v| string("scene", "name", v))
        .transpose()?
        .unwrap_or("unnamed")
        .to_string();
    let dim_v = scene
        .get("dimension")
        .ok_or_else(|| field("scene", "dimension", "required"))?;
    let n = unsigned("scene", "dimension", dim_v)? as usize;
    if n < 3 {
        return Err(field("scene", "dimension", "dimension must be at least 3"));
    }
    let coords = match scene.get("coordinates") {
        Some(v) => list("scene", "coordinates", v)?,
        None => default_coords(n),
    };
    if coords.len() != n {
        return Err(field(
            "scene",
            "coordinates",
            format!("{} names for dimension {n}", coords.len()),
        ));
    }
    let signature = match scene.get("signature") {
        Some(v) => parse_signature(string("scene", "signature", v)?, n)?,
        None => Signature::riemannian(n),
    };
    let notes = scene
        .get("notes")
        .map(|v| string("scene", "notes", v))
        .transpose()?
        .unwrap_or("")
        .to_string();

    let metric = section(&doc, "metric")?.ok_or(SceneFileError::MissingSection("metric"))?;
    let mut g = vec![vec![Expr::int(0); n]; n];
    for (key, v) in metric {
        let idx = key
            .strip_prefix("g_")
            .filter(|r| r.len() == 2)
            .and_then(|r| {
                let mut it = r.chars().map(|c| c.to_digit(10));
                Some((it.next()?? as usize, it.next()?? as usize))
            })
            .ok_or_else(|| {
                field(
                    "metric",
                    key,
                    "expected a key g_ij with digits 1 <= i <= j <= n",
                )
            })?;
        let (i, j) = idx;
        if i == 0 || i > j || j > n {
            return Err(field(
                "metric",
                key,
                format!("indices must satisfy 1 <= i <= j <= {n}"),
            ));
        }
        let e = expr("metric", key, v, &coords)?;
        g[i - 1][j - 1] = e.clone();
        g[j - 1][i - 1] = e;
    }
    let chart = ChartMetric::new(coords.clone(), g, signature)?;

    let mut einstein_scales = Vec::new();
    if let Some(t) = section(&doc, "einstein_scales")? {
        for (key, v) in numbered("einstein_scales", t, "scale")? {
            einstein_scales.push(expr("einstein_scales", &key, v, &coords)?);
        }
    }

    let mut sample_points = Vec::new();
    let mut require_positive = Vec::new();
    let mut sample_seed = None;
    let mut sample_count = None;
    if let Some(t) = section(&doc, "samples")? {
        for (key, v) in numbered("samples", t, "point")? {
            let parts = list("samples", &key, v)?;
            if parts.len() != n {
                return Err(field(
                    "samples",
                    &key,
                    format!("{} coordinates for dimension {n}", parts.len()),
                ));
            }
            let p = parts
                .iter()
                .map(|s| rational("samples", &key, s))
                .collect::<Result<Vec<_>, _>>()?;
            sample_points.push(p);
        }
        for (key, v) in numbered("samples", t, "positive")? {
            require_positive.push(expr("samples", &key, v, &coords)?);
        }
        if let Some(v) = t.get("seed") {
            sample_seed = Some(unsigned("samples", "seed", v)?);
        }
        if let Some(v) = t.get("count") {
            let c = unsigned("samples", "count", v)? as usize;
            if c == 0 {
                return Err(field("samples", "count", "must be at least 1"));
            }
            sample_count = Some(c);
        }
    }

    let spec = SceneSpec {
        name,
        metric: chart,
        einstein_scales,
        require_positive,
        sample_points,
        sample_seed,
        sample_count,
        notes,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn load_scene(path: &Path) -> Result<SceneSpec, SceneFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| SceneFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scene(&text)
}

fn quoted(s: &str) -> String {
    Value::String(s.to_string()).to_string()
}

/// Writes a scene in the text format; [`parse_scene`] reads it back to an
/// equal [`SceneSpec`].
pub fn write_scene(spec: &SceneSpec) -> String {
    let coords = spec.coords();
    let n = spec.dim();
    let sig = spec.metric.signature();
    let mut out = String::new();
    let _ = writeln!(out, "[scene]");
    let _ = writeln!(out, "name = {}", quoted(&spec.name));
    let _ = writeln!(out, "dimension = {n}");
    if sig.is_riemannian() {
        let _ = writeln!(out, "signature = \"riemannian\"");
    } else {
        let _ = writeln!(out, "signature = \"{},{}\"", sig.positive, sig.negative);
    }
    let _ = writeln!(out, "coordinates = {}", quoted(&coords.join(", ")));
    if !spec.notes.is_empty() {
        let _ = writeln!(out, "notes = {}", quoted(&spec.notes));
    }
    let _ = writeln!(out, "\n[metric]");
    for i in 0..n {
        for j in i..n {
            let e = spec.metric.component(i, j);
            if !e.is_literal_zero() {
                let _ = writeln!(
                    out,
                    "g_{}{} = {}",
                    i + 1,
                    j + 1,
                    quoted(&e.display(coords).to_string())
                );
            }
        }
    }
    if !spec.einstein_scales.is_empty() {
        let _ = writeln!(out, "\n[einstein_scales]");
        for (k, s) in spec.einstein_scales.iter().enumerate() {
            let _ = writeln!(
                out,
                "scale_{} = {}",
                k + 1,
                quoted(&s.display(coords).to_string())
            );
        }
    }
    let has_samples = !spec.sample_points.is_empty()
        || !spec.require_positive.is_empty()
        || spec.sample_seed.is_some()
        || spec.sample_count.is_some();
    if has_samples {
        let _ = writeln!(out, "\n[samples]");
        for (k, p) in spec.sample_points.iter().enumerate() {
            let text: Vec<String> = p.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "point_{} = {}", k + 1, quoted(&text.join(", ")));
        }
        for (k, e) in spec.require_positive.iter().enumerate() {
            let _ = writeln!(
                out,
                "positive_{} = {}",
                k + 1,
                quoted(&e.display(coords).to_string())
            );
        }
        if let Some(s) = spec.sample_seed {
            let _ = writeln!(out, "seed = {s}");
        }
        if let Some(c) = spec.sample_count {
            let _ = writeln!(out, "count = {c}");
        }
    }
    out
}
