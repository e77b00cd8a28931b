//! The four subcommands. Per-sample work runs on a rayon pool; results are
//! always collected in sample order.

use poisson_recursion::recursion::{
    build_leaf, build_r_point, check_point, effective_samples, verify_symbolic_point, BuildError, ExistenceReport,
    RecursionPointResult,
};
use rayon::prelude::*;
use rayon::ThreadPool;
use thiserror::Error;

use crate::report::{
    BuildPointOut, BuildReport, CheckReport, ExistenceOut, Header, LeafPointOut, LeafwiseReport, SampleCheckOut,
    SkippedOut, VerifyPointOut, VerifyReport, EXIT_INPUT, EXIT_REFUSED,
};
use crate::spec::{ProblemSpec, SpecError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("{0}")]
    Build(#[from] BuildError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// A singular leaf restriction is a mathematical failure; everything else
    /// is an input problem.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Build(BuildError::Singular { .. }) => EXIT_REFUSED,
            _ => EXIT_INPUT,
        }
    }
}

fn pool_map<T, U, F>(pool: &ThreadPool, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    pool.install(|| items.par_iter().map(f).collect())
}

pub fn thread_pool(jobs: usize) -> Result<ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} worker threads: {e}")))
}

/// Existence decision over the effective sample set.
fn decide(spec: &ProblemSpec, pool: &ThreadPool) -> Result<(ExistenceReport, bool), CliError> {
    let (samples, globally_valid) = effective_samples(&spec.w, &spec.w_prime, &spec.samples.points);
    let outcomes = pool_map(pool, samples, |p| {
        check_point(&spec.w, &spec.w_prime, p, &spec.tolerances)
    });
    let existence = ExistenceReport::from_outcomes(outcomes, samples, &spec.tolerances, spec.skip_singular_samples)?;
    Ok((existence, globally_valid))
}

/// Builds `R` at every accepted sample, keeping the sample index.
fn build_points(
    spec: &ProblemSpec,
    existence: &ExistenceReport,
    pool: &ThreadPool,
) -> Result<Vec<(usize, RecursionPointResult)>, CliError> {
    let built = pool_map(pool, &existence.checks, |(index, check)| {
        build_leaf(&spec.w, &spec.w_prime, &check.point, &spec.tolerances).map(|leaf| (*index, build_r_point(&leaf)))
    });
    Ok(built.into_iter().collect::<Result<Vec<_>, _>>()?)
}

pub fn run_check(spec: &ProblemSpec, pool: &ThreadPool) -> Result<CheckReport, CliError> {
    let (existence, globally_valid) = decide(spec, pool)?;
    Ok(CheckReport {
        header: Header::new("check", spec),
        existence: ExistenceOut::new(&existence, globally_valid),
        samples: existence
            .checks
            .iter()
            .map(|(i, c)| SampleCheckOut::new(*i, c))
            .collect(),
    })
}

pub fn run_build(spec: &ProblemSpec, pool: &ThreadPool) -> Result<BuildReport, CliError> {
    let (existence, globally_valid) = decide(spec, pool)?;
    let header = Header::new("build", spec);
    let summary = ExistenceOut::new(&existence, globally_valid);
    if !existence.verdict.is_success() {
        return Ok(BuildReport {
            header,
            existence: summary,
            max_residual_p0: None,
            max_residual_p11: None,
            results: None,
        });
    }
    let points = build_points(spec, &existence, pool)?;
    let max_p0 = points
        .iter()
        .map(|(_, p)| p.residual_p0.max(p.residual_p0_star))
        .fold(0.0, f64::max);
    let max_p11 = points.iter().map(|(_, p)| p.residual_p11).fold(0.0, f64::max);
    Ok(BuildReport {
        header,
        existence: summary,
        max_residual_p0: Some(max_p0),
        max_residual_p11: Some(max_p11),
        results: Some(points.iter().map(|(i, p)| BuildPointOut::new(*i, p)).collect()),
    })
}

pub fn run_verify(spec: &ProblemSpec, pool: &ThreadPool) -> Result<VerifyReport, CliError> {
    let r = spec
        .r
        .as_ref()
        .ok_or_else(|| CliError::Usage("verify needs a candidate \"R\" in the problem file".into()))?;
    let tol = spec.tolerances.residual;
    let outcomes = pool_map(pool, &spec.samples.points, |p| {
        verify_symbolic_point(&spec.w, &spec.w_prime, r, p, tol)
    });
    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    for (index, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(v) => samples.push(VerifyPointOut {
                index,
                point: v.point,
                residual_p0: v.residual_p0,
                torsion_max: v.torsion_max.unwrap_or(0.0),
                passed: v.passed,
            }),
            Err(e) if spec.skip_singular_samples && e.is_domain() => skipped.push(SkippedOut {
                index,
                point: spec.samples.points[index].clone(),
                reason: e.to_string(),
            }),
            Err(e) => return Err(e.into()),
        }
    }
    if samples.is_empty() {
        return Err(BuildError::NoSamples.into());
    }
    Ok(VerifyReport {
        header: Header::new("verify", spec),
        passed: samples.iter().all(|s| s.passed),
        max_residual_p0: samples.iter().map(|s| s.residual_p0).fold(0.0, f64::max),
        max_torsion: samples.iter().map(|s| s.torsion_max).fold(0.0, f64::max),
        skipped,
        samples,
    })
}

pub fn run_leafwise(spec: &ProblemSpec, pool: &ThreadPool) -> Result<LeafwiseReport, CliError> {
    let (existence, globally_valid) = decide(spec, pool)?;
    let header = Header::new("leafwise", spec);
    let summary = ExistenceOut::new(&existence, globally_valid);
    let results = if existence.verdict.is_success() {
        let points = build_points(spec, &existence, pool)?;
        Some(points.iter().map(|(i, p)| LeafPointOut::new(*i, p)).collect())
    } else {
        None
    };
    Ok(LeafwiseReport {
        header,
        existence: summary,
        results,
    })
}
