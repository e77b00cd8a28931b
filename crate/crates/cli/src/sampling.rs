//! Sample point generation.
//!
//! * `explicit`: the listed points, validated against the optional box and
//!   the exclusion balls.
//! * `grid`: `counts[d]` equally spaced values per axis, endpoints included
//!   (a single value sits at the interval midpoint), enumerated in row-major
//!   order (last coordinate fastest). Grid points inside an exclusion ball are
//!   dropped.
//! * `random`: SplitMix64 seeded with `seed`; each candidate draws its
//!   coordinates in order as `lo + (hi − lo)·u`, and candidates inside an
//!   exclusion ball are redrawn.
//!
//! A point is inside a ball when its Euclidean distance to the center is at
//! most the radius.

use poisson_recursion::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::spec::{RawSamples, SpecError};

/// Redraw budget per requested random sample.
const MAX_DRAWS_PER_SAMPLE: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    Explicit,
    Grid,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, p: &[f64]) -> bool {
        let d2: f64 = self.center.iter().zip(p).map(|(c, x)| (x - c) * (x - c)).sum();
        d2 <= self.radius * self.radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub mode: SampleMode,
    pub points: Vec<Vec<f64>>,
    pub seed: Option<u64>,
    pub exclude_balls: Vec<Ball>,
}

fn check_box(bounds: &[[f64; 2]], dim: usize) -> Result<(), SpecError> {
    if bounds.len() != dim {
        return Err(SpecError::validation(
            "samples.box",
            format!("{} intervals given for dim {dim}", bounds.len()),
        ));
    }
    for (d, [lo, hi]) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(SpecError::validation(
                format!("samples.box[{d}]"),
                "interval must be finite with lo <= hi",
            ));
        }
    }
    Ok(())
}

fn in_box(bounds: &[[f64; 2]], p: &[f64]) -> bool {
    bounds.iter().zip(p).all(|([lo, hi], x)| lo <= x && x <= hi)
}

pub(crate) fn generate(raw: &RawSamples, dim: usize) -> Result<SampleSet, SpecError> {
    for (b, ball) in raw.exclude_balls.iter().enumerate() {
        if ball.center.len() != dim || !(ball.radius.is_finite() && ball.radius > 0.0) {
            return Err(SpecError::validation(
                format!("samples.exclude_balls[{b}]"),
                format!("needs a center of length {dim} and a positive radius"),
            ));
        }
    }
    let excluded = |p: &[f64]| raw.exclude_balls.iter().any(|b| b.contains(p));
    let require = |name: &str, present: bool| {
        if present {
            Ok(())
        } else {
            Err(SpecError::validation(
                format!("samples.{name}"),
                format!("required in {} mode", raw.mode),
            ))
        }
    };
    let forbid = |name: &str, present: bool| {
        if present {
            Err(SpecError::validation(
                format!("samples.{name}"),
                format!("not used in {} mode", raw.mode),
            ))
        } else {
            Ok(())
        }
    };

    let (mode, points) = match raw.mode.as_str() {
        "explicit" => {
            require("points", raw.points.is_some())?;
            forbid("counts", raw.counts.is_some())?;
            forbid("count", raw.count.is_some())?;
            forbid("seed", raw.seed.is_some())?;
            if let Some(b) = &raw.bounds {
                check_box(b, dim)?;
            }
            let points = raw.points.clone().unwrap_or_default();
            for (k, p) in points.iter().enumerate() {
                let field = format!("samples.points[{k}]");
                if p.len() != dim {
                    return Err(SpecError::validation(field, format!("expected {dim} coordinates")));
                }
                if p.iter().any(|x| !x.is_finite()) {
                    return Err(SpecError::validation(field, "coordinates must be finite"));
                }
                if raw.bounds.as_ref().is_some_and(|b| !in_box(b, p)) {
                    return Err(SpecError::validation(field, "point lies outside the box"));
                }
                if excluded(p) {
                    return Err(SpecError::validation(field, "point lies inside an exclusion ball"));
                }
            }
            (SampleMode::Explicit, points)
        }
        "grid" => {
            require("box", raw.bounds.is_some())?;
            require("counts", raw.counts.is_some())?;
            forbid("points", raw.points.is_some())?;
            forbid("count", raw.count.is_some())?;
            forbid("seed", raw.seed.is_some())?;
            let bounds = raw.bounds.as_ref().unwrap();
            let counts = raw.counts.as_ref().unwrap();
            check_box(bounds, dim)?;
            if counts.len() != dim || counts.contains(&0) {
                return Err(SpecError::validation(
                    "samples.counts",
                    format!("need {dim} positive counts"),
                ));
            }
            let axes: Vec<Vec<f64>> = bounds
                .iter()
                .zip(counts)
                .map(|(&[lo, hi], &c)| {
                    if c == 1 {
                        vec![0.5 * (lo + hi)]
                    } else {
                        (0..c).map(|t| lo + (hi - lo) * t as f64 / (c - 1) as f64).collect()
                    }
                })
                .collect();
            let total: usize = counts.iter().product();
            let mut points = Vec::with_capacity(total);
            let mut idx = vec![0usize; dim];
            for _ in 0..total {
                let p: Vec<f64> = idx.iter().enumerate().map(|(d, &i)| axes[d][i]).collect();
                if !excluded(&p) {
                    points.push(p);
                }
                for d in (0..dim).rev() {
                    idx[d] += 1;
                    if idx[d] < counts[d] {
                        break;
                    }
                    idx[d] = 0;
                }
            }
            (SampleMode::Grid, points)
        }
        "random" => {
            require("box", raw.bounds.is_some())?;
            require("count", raw.count.is_some())?;
            require("seed", raw.seed.is_some())?;
            forbid("points", raw.points.is_some())?;
            forbid("counts", raw.counts.is_some())?;
            let bounds = raw.bounds.as_ref().unwrap();
            check_box(bounds, dim)?;
            let count = raw.count.unwrap();
            let mut rng = SplitMix64::new(raw.seed.unwrap());
            let mut points = Vec::with_capacity(count);
            let mut draws = 0usize;
            while points.len() < count {
                if draws >= count.saturating_mul(MAX_DRAWS_PER_SAMPLE) {
                    return Err(SpecError::validation(
                        "samples.exclude_balls",
                        "exclusion balls cover (almost) the whole box",
                    ));
                }
                draws += 1;
                let p: Vec<f64> = bounds.iter().map(|&[lo, hi]| rng.uniform(lo, hi)).collect();
                if !excluded(&p) {
                    points.push(p);
                }
            }
            (SampleMode::Random, points)
        }
        other => {
            return Err(SpecError::validation(
                "samples.mode",
                format!("unknown mode {other:?}; expected explicit, grid or random"),
            ))
        }
    };

    if points.is_empty() {
        return Err(SpecError::validation("samples", "no sample points"));
    }
    Ok(SampleSet {
        mode,
        points,
        seed: raw.seed,
        exclude_balls: raw.exclude_balls.clone(),
    })
}
