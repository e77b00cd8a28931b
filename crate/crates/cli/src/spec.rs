//! Problem files: JSON input describing the chart, the bivectors, an optional
//! candidate `R`, the sample set, tolerances and flags.

use std::fs;
use std::path::Path;

use poisson_recursion::expr::Chart;
use poisson_recursion::fields::FieldError;
use poisson_recursion::{BivectorField, ParseError, ScalarExpr, TensorField11, Tolerances};
use serde::Deserialize;
use thiserror::Error;

use crate::sampling::{self, Ball, SampleSet};

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{entry}: {source}")]
    Expression {
        entry: String,
        #[source]
        source: ParseError,
    },
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },
}

impl SpecError {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        SpecError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    dim: usize,
    coords: Vec<String>,
    w: Vec<RawEntry>,
    w_prime: Option<Vec<RawEntry>>,
    #[serde(rename = "R")]
    r: Option<Vec<Vec<String>>>,
    samples: RawSamples,
    tolerances: Option<RawTolerances>,
    flags: Option<RawFlags>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    i: usize,
    j: usize,
    expr: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawSamples {
    pub mode: String,
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(rename = "box")]
    pub bounds: Option<Vec<[f64; 2]>>,
    pub counts: Option<Vec<usize>>,
    pub count: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub exclude_balls: Vec<Ball>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    rank: Option<f64>,
    subspace: Option<f64>,
    residual: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawFlags {
    #[serde(default)]
    skip_singular_samples: bool,
}

/// A validated problem file.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub chart: Chart,
    pub w: BivectorField,
    /// Absent in the file means `w' = w`.
    pub w_prime: BivectorField,
    pub w_prime_given: bool,
    pub r: Option<TensorField11>,
    pub samples: SampleSet,
    pub tolerances: Tolerances,
    pub skip_singular_samples: bool,
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        self.chart.dim()
    }
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<ProblemSpec, SpecError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| SpecError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_spec(&text)
}

pub fn parse_spec(text: &str) -> Result<ProblemSpec, SpecError> {
    let raw: RawSpec = serde_json::from_str(text).map_err(|e| SpecError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    if raw.dim == 0 {
        return Err(SpecError::validation("dim", "must be positive"));
    }
    if raw.coords.len() != raw.dim {
        return Err(SpecError::validation(
            "coords",
            format!("{} names given for dim {}", raw.coords.len(), raw.dim),
        ));
    }
    let chart = Chart::new(raw.coords.iter().cloned()).map_err(|e| SpecError::validation("coords", e.to_string()))?;

    let w = bivector(&chart, &raw.w, "w")?;
    let w_prime_given = raw.w_prime.is_some();
    let w_prime = match &raw.w_prime {
        Some(entries) => bivector(&chart, entries, "w_prime")?,
        None => w.clone(),
    };
    let r = raw.r.as_ref().map(|rows| tensor(&chart, rows)).transpose()?;

    let mut tolerances = Tolerances::default();
    if let Some(t) = raw.tolerances {
        for (name, value, slot) in [
            ("rank", t.rank, &mut tolerances.rank),
            ("subspace", t.subspace, &mut tolerances.subspace),
            ("residual", t.residual, &mut tolerances.residual),
        ] {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    return Err(SpecError::validation(
                        format!("tolerances.{name}"),
                        "must be a positive finite number",
                    ));
                }
                *slot = v;
            }
        }
    }

    let samples = sampling::generate(&raw.samples, raw.dim)?;
    let flags = raw.flags.unwrap_or_default();

    Ok(ProblemSpec {
        chart,
        w,
        w_prime,
        w_prime_given,
        r,
        samples,
        tolerances,
        skip_singular_samples: flags.skip_singular_samples,
    })
}

fn bivector(chart: &Chart, entries: &[RawEntry], name: &str) -> Result<BivectorField, SpecError> {
    let n = chart.dim();
    let mut field = BivectorField::zero(chart);
    for e in entries {
        let entry = format!("{name}[{}][{}]", e.i, e.j);
        if !(1 <= e.i && e.i < e.j && e.j <= n) {
            return Err(SpecError::validation(
                entry,
                format!("indices must satisfy 1 <= i < j <= {n}"),
            ));
        }
        let expr = ScalarExpr::parse(&e.expr, chart).map_err(|source| SpecError::Expression {
            entry: entry.clone(),
            source,
        })?;
        field.set(e.i - 1, e.j - 1, expr).map_err(|err| match err {
            FieldError::DuplicateEntry { .. } => SpecError::validation(entry, "entry listed more than once"),
            other => SpecError::validation(entry, other.to_string()),
        })?;
    }
    Ok(field)
}

fn tensor(chart: &Chart, rows: &[Vec<String>]) -> Result<TensorField11, SpecError> {
    TensorField11::from_rows(chart, rows).map_err(|e| match e {
        FieldError::Parse { entry, source } => SpecError::Expression { entry, source },
        other => SpecError::validation("R", other.to_string()),
    })
}
