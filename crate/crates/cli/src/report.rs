//! Serializable report shapes. The schema lives in `docs/report.schema.json`.

use poisson_recursion::recursion::{ExistenceReport, RecursionPointResult};
use poisson_recursion::{Matrix, PointCheck};
use serde::Serialize;

use crate::sampling::{Ball, SampleMode};
use crate::spec::ProblemSpec;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_REFUSED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.to_rows()
}

#[derive(Debug, Clone, Serialize)]
pub struct TolerancesOut {
    pub rank: f64,
    pub subspace: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SamplingOut {
    pub mode: SampleMode,
    pub count: usize,
    pub seed: Option<u64>,
    pub exclude_balls: Vec<Ball>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlagsOut {
    pub skip_singular_samples: bool,
}

/// Echo of the inputs every report starts with.
#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub command: &'static str,
    pub dim: usize,
    pub coords: Vec<String>,
    pub w_prime_given: bool,
    pub tolerances: TolerancesOut,
    pub sampling: SamplingOut,
    pub flags: FlagsOut,
}

impl Header {
    pub fn new(command: &'static str, spec: &ProblemSpec) -> Self {
        Header {
            command,
            dim: spec.dim(),
            coords: spec.chart.names().to_vec(),
            w_prime_given: spec.w_prime_given,
            tolerances: TolerancesOut {
                rank: spec.tolerances.rank,
                subspace: spec.tolerances.subspace,
                residual: spec.tolerances.residual,
            },
            sampling: SamplingOut {
                mode: spec.samples.mode,
                count: spec.samples.points.len(),
                seed: spec.samples.seed,
                exclude_balls: spec.samples.exclude_balls.clone(),
            },
            flags: FlagsOut {
                skip_singular_samples: spec.skip_singular_samples,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FailureOut {
    pub index: usize,
    pub point: Vec<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SkippedOut {
    pub index: usize,
    pub point: Vec<f64>,
    pub reason: String,
}

/// Aggregate decision shared by check, build and leafwise.
#[derive(Debug, Clone, Serialize)]
pub struct ExistenceOut {
    pub verdict: &'static str,
    pub globally_valid: bool,
    pub common_rank: Option<usize>,
    pub rank_constant: bool,
    pub ranks_match: bool,
    pub distributions_coincide: bool,
    pub max_jacobi_w: f64,
    pub max_jacobi_w_prime: f64,
    pub max_subspace_defect: f64,
    pub failure: Option<FailureOut>,
    pub skipped: Vec<SkippedOut>,
}

impl ExistenceOut {
    pub fn new(e: &ExistenceReport, globally_valid: bool) -> Self {
        ExistenceOut {
            verdict: e.verdict.as_str(),
            globally_valid: globally_valid && e.verdict.is_success(),
            common_rank: e.common_rank,
            rank_constant: e.rank_constant,
            ranks_match: e.ranks_match,
            distributions_coincide: e.distributions_coincide,
            max_jacobi_w: e.max_jacobi_w,
            max_jacobi_w_prime: e.max_jacobi_w_prime,
            max_subspace_defect: e.max_subspace_defect,
            failure: e.failure.as_ref().map(|f| FailureOut {
                index: f.index,
                point: f.point.clone(),
                detail: f.detail.clone(),
            }),
            skipped: e
                .skipped
                .iter()
                .map(|s| SkippedOut {
                    index: s.index,
                    point: s.point.clone(),
                    reason: s.reason.clone(),
                })
                .collect(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.verdict == "EXISTS_CONSTRUCTED" {
            EXIT_PASS
        } else {
            EXIT_REFUSED
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleCheckOut {
    pub index: usize,
    pub point: Vec<f64>,
    pub jacobi_w: f64,
    pub jacobi_w_prime: f64,
    pub rank_w: usize,
    pub rank_w_prime: usize,
    pub subspace_defect: f64,
}

impl SampleCheckOut {
    pub fn new(index: usize, c: &PointCheck) -> Self {
        SampleCheckOut {
            index,
            point: c.point.clone(),
            jacobi_w: c.jacobi_w,
            jacobi_w_prime: c.jacobi_w_prime,
            rank_w: c.rank_w,
            rank_w_prime: c.rank_w_prime,
            subspace_defect: c.subspace_defect,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    #[serde(flatten)]
    pub header: Header,
    #[serde(flatten)]
    pub existence: ExistenceOut,
    pub samples: Vec<SampleCheckOut>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BuildPointOut {
    pub index: usize,
    pub point: Vec<f64>,
    #[serde(rename = "B")]
    pub basis: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
    #[serde(rename = "R_star")]
    pub r_star: Vec<Vec<f64>>,
    #[serde(rename = "R_leaf")]
    pub r_leaf: Vec<Vec<f64>>,
    #[serde(rename = "R_star_leaf")]
    pub r_star_leaf: Vec<Vec<f64>>,
    pub residual_p0: f64,
    pub residual_p0_star: f64,
    pub residual_p11: f64,
    pub condition: f64,
    pub duality_defect: f64,
    pub complement_defect: f64,
}

impl BuildPointOut {
    pub fn new(index: usize, p: &RecursionPointResult) -> Self {
        BuildPointOut {
            index,
            point: p.point.clone(),
            basis: rows(&p.basis),
            r: rows(&p.r),
            r_star: rows(&p.r_star),
            r_leaf: rows(&p.r_leaf),
            r_star_leaf: rows(&p.r_star_leaf),
            residual_p0: p.residual_p0,
            residual_p0_star: p.residual_p0_star,
            residual_p11: p.residual_p11,
            condition: p.condition,
            duality_defect: p.duality_defect,
            complement_defect: p.complement_defect,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BuildReport {
    #[serde(flatten)]
    pub header: Header,
    #[serde(flatten)]
    pub existence: ExistenceOut,
    /// Absent on refusal.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_residual_p0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_residual_p11: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub results: Option<Vec<BuildPointOut>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyPointOut {
    pub index: usize,
    pub point: Vec<f64>,
    pub residual_p0: f64,
    pub torsion_max: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    #[serde(flatten)]
    pub header: Header,
    pub passed: bool,
    pub max_residual_p0: f64,
    /// Reported only; vanishing torsion is sufficient, not necessary.
    pub max_torsion: f64,
    pub skipped: Vec<SkippedOut>,
    pub samples: Vec<VerifyPointOut>,
}

impl VerifyReport {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_PASS
        } else {
            EXIT_REFUSED
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LeafPointOut {
    pub index: usize,
    pub point: Vec<f64>,
    #[serde(rename = "B")]
    pub basis: Vec<Vec<f64>>,
    pub omega_leaf: Vec<Vec<f64>>,
    pub omega_leaf_prime: Vec<Vec<f64>>,
    pub inverse_residual: f64,
    pub inverse_residual_prime: f64,
    pub condition: f64,
    pub condition_prime: f64,
}

impl LeafPointOut {
    pub fn new(index: usize, p: &RecursionPointResult) -> Self {
        LeafPointOut {
            index,
            point: p.point.clone(),
            basis: rows(&p.basis),
            omega_leaf: rows(&p.omega_leaf),
            omega_leaf_prime: rows(&p.omega_leaf_prime),
            inverse_residual: p.omega_residual,
            inverse_residual_prime: p.omega_prime_residual,
            condition: p.condition,
            condition_prime: p.condition_prime,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LeafwiseReport {
    #[serde(flatten)]
    pub header: Header,
    #[serde(flatten)]
    pub existence: ExistenceOut,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub results: Option<Vec<LeafPointOut>>,
}
