//! Existence decision and pointwise construction of recursion operators.
//!
//! For regular Poisson bivectors `w`, `w'` on a chart, a type-(1,1) tensor `R`
//! with `W' = R·W = W·S` (where `S` is the matrix of `R*` on covector
//! components) exists iff both have the same constant rank and the same
//! column space at every point. Both conditions are certified on a finite
//! sample set only; nothing is claimed between samples.
//!
//! At an accepted point with orthonormal leaf basis `B` (n×k):
//!
//! ```text
//! M   = BᵀWB,  M' = BᵀW'B          (leaf restrictions, k×k, invertible)
//! R_F = M'M⁻¹, R*_F = M⁻¹M'
//! R   = B R_F Bᵀ + (I − BBᵀ)
//! R*  = B R*_F Bᵀ + (I − BBᵀ)
//! Ω_F = M⁻¹,  Ω'_F = M'⁻¹          (leafwise symplectic matrices, B-basis)
//! ```
//!
//! The complement `I − BBᵀ` is the Euclidean splitting. Because `M`, `M'`
//! are antisymmetric, `R* = Rᵀ` for this splitting. `R_F` is independent of
//! the splitting; `R` is not.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::expr::DomainError;
use crate::fields::{jacobi_residual_from, BivectorField, TensorField11};
use crate::linalg::{column_space, invert, subspace_equal, Matrix, SingularMatrix, Subspace};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative pivot threshold for rank decisions.
    pub rank: f64,
    /// Maximum subspace defect for two distributions to count as equal.
    pub subspace: f64,
    /// Maximum Jacobi and recursion-identity residual.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank: 1e-9,
            subspace: 1e-8,
            residual: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    ExistsConstructed,
    RefusedRankMismatch,
    RefusedRankNotConstant,
    RefusedDistributionMismatch,
    FailedJacobi,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::ExistsConstructed => "EXISTS_CONSTRUCTED",
            Verdict::RefusedRankMismatch => "REFUSED_RANK_MISMATCH",
            Verdict::RefusedRankNotConstant => "REFUSED_RANK_NOT_CONSTANT",
            Verdict::RefusedDistributionMismatch => "REFUSED_DISTRIBUTION_MISMATCH",
            Verdict::FailedJacobi => "FAILED_JACOBI",
        }
    }

    pub fn is_success(self) -> bool {
        self == Verdict::ExistsConstructed
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which input field an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldRole {
    W,
    WPrime,
    R,
}

impl FieldRole {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldRole::W => "w",
            FieldRole::WPrime => "w_prime",
            FieldRole::R => "R",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BuildError {
    Domain {
        field: FieldRole,
        point: Vec<f64>,
        source: DomainError,
    },
    Singular {
        field: FieldRole,
        point: Vec<f64>,
        source: SingularMatrix,
    },
    /// An antisymmetric matrix came out with odd numerical rank; the rank
    /// tolerance does not suit the data.
    OddRank {
        field: FieldRole,
        point: Vec<f64>,
        rank: usize,
    },
    ChartMismatch,
    NoSamples,
}

impl BuildError {
    /// Evaluation failures may be skipped on request; everything else is fatal.
    pub fn is_domain(&self) -> bool {
        matches!(self, BuildError::Domain { .. })
    }
}

impl fmt::Display for BuildError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuildError::Domain { field, point, source } => {
                write!(f, "evaluating {} at {point:?}: {source}", field.as_str())
            }
            BuildError::Singular { field, point, source } => write!(
                f,
                "leaf restriction of {} at {point:?} is not invertible ({source}); rank dropped between tolerances",
                field.as_str()
            ),
            BuildError::OddRank { field, point, rank } => write!(
                f,
                "{} has odd numerical rank {rank} at {point:?}; adjust the rank tolerance",
                field.as_str()
            ),
            BuildError::ChartMismatch => write!(f, "fields are defined on different charts"),
            BuildError::NoSamples => write!(f, "no usable sample points"),
        }
    }
}

impl core::error::Error for BuildError {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            BuildError::Domain { source, .. } => Some(source),
            BuildError::Singular { source, .. } => Some(source),
            _ => None,
        }
    }
}

fn eval_field(field: &BivectorField, role: FieldRole, point: &[f64]) -> Result<Matrix, BuildError> {
    field.eval(point).map_err(|source| BuildError::Domain {
        field: role,
        point: point.to_vec(),
        source,
    })
}

fn even_rank_space(w: &Matrix, role: FieldRole, point: &[f64], tol_rank: f64) -> Result<Subspace, BuildError> {
    let s = column_space(w, tol_rank);
    if !s.rank().is_multiple_of(2) {
        return Err(BuildError::OddRank {
            field: role,
            point: point.to_vec(),
            rank: s.rank(),
        });
    }
    Ok(s)
}

/// Diagnostics for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCheck {
    pub point: Vec<f64>,
    pub jacobi_w: f64,
    pub jacobi_w_prime: f64,
    pub rank_w: usize,
    pub rank_w_prime: usize,
    /// `‖(I − P')·P‖₂` between the column spaces of `W` and `W'`.
    pub subspace_defect: f64,
    pub distributions_coincide: bool,
}

pub fn check_point(
    w: &BivectorField,
    w_prime: &BivectorField,
    point: &[f64],
    tols: &Tolerances,
) -> Result<PointCheck, BuildError> {
    if w.chart() != w_prime.chart() {
        return Err(BuildError::ChartMismatch);
    }
    let derivs = |field: &BivectorField, role| {
        field.eval_with_derivatives(point).map_err(|source| BuildError::Domain {
            field: role,
            point: point.to_vec(),
            source,
        })
    };
    let (wm, dw) = derivs(w, FieldRole::W)?;
    let (wpm, dwp) = derivs(w_prime, FieldRole::WPrime)?;
    let s = even_rank_space(&wm, FieldRole::W, point, tols.rank)?;
    let sp = even_rank_space(&wpm, FieldRole::WPrime, point, tols.rank)?;
    let cmp = subspace_equal(&s, &sp, tols.subspace).expect("same chart");
    Ok(PointCheck {
        point: point.to_vec(),
        jacobi_w: jacobi_residual_from(&wm, &dw),
        jacobi_w_prime: jacobi_residual_from(&wpm, &dwp),
        rank_w: s.rank(),
        rank_w_prime: sp.rank(),
        subspace_defect: cmp.defect,
        distributions_coincide: cmp.equal,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedSample {
    pub index: usize,
    pub point: Vec<f64>,
    pub reason: String,
}

/// Where the verdict was decided, when it is a refusal.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    /// Index into the original sample list.
    pub index: usize,
    pub point: Vec<f64>,
    pub detail: String,
}

/// Aggregate of the per-sample checks; the verdict is relative to the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ExistenceReport {
    /// `(sample index, check)` in sample order.
    pub checks: Vec<(usize, PointCheck)>,
    pub skipped: Vec<SkippedSample>,
    pub common_rank: Option<usize>,
    pub rank_constant: bool,
    pub ranks_match: bool,
    pub distributions_coincide: bool,
    pub max_jacobi_w: f64,
    pub max_jacobi_w_prime: f64,
    pub max_subspace_defect: f64,
    pub failure: Option<Failure>,
    pub verdict: Verdict,
}

impl ExistenceReport {
    /// Aggregates per-sample outcomes given in sample order. With
    /// `skip_singular`, evaluation failures become skipped samples instead of
    /// errors.
    pub fn from_outcomes(
        outcomes: Vec<Result<PointCheck, BuildError>>,
        points: &[Vec<f64>],
        tols: &Tolerances,
        skip_singular: bool,
    ) -> Result<Self, BuildError> {
        let mut checks = Vec::new();
        let mut skipped = Vec::new();
        for (index, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(c) => checks.push((index, c)),
                Err(e) if skip_singular && e.is_domain() => skipped.push(SkippedSample {
                    index,
                    point: points[index].clone(),
                    reason: e.to_string(),
                }),
                Err(e) => return Err(e),
            }
        }
        if checks.is_empty() {
            return Err(BuildError::NoSamples);
        }

        let max_of = |f: fn(&PointCheck) -> f64| checks.iter().map(|(_, c)| f(c)).fold(0.0, f64::max);
        let max_jacobi_w = max_of(|c| c.jacobi_w);
        let max_jacobi_w_prime = max_of(|c| c.jacobi_w_prime);
        let max_subspace_defect = max_of(|c| c.subspace_defect);

        let first_rank = checks[0].1.rank_w;
        let ranks_match = checks.iter().all(|(_, c)| c.rank_w == c.rank_w_prime);
        let rank_constant = checks
            .iter()
            .all(|(_, c)| c.rank_w == first_rank && c.rank_w_prime == checks[0].1.rank_w_prime);
        let distributions_coincide = checks.iter().all(|(_, c)| c.distributions_coincide);

        let fail = |index: usize, c: &PointCheck, detail: String| Failure {
            index,
            point: c.point.clone(),
            detail,
        };
        let jacobi_bad = checks.iter().find_map(|(i, c)| {
            if c.jacobi_w > tols.residual {
                Some(fail(
                    *i,
                    c,
                    alloc::format!("w violates Jacobi: residual {:e}", c.jacobi_w),
                ))
            } else if c.jacobi_w_prime > tols.residual {
                Some(fail(
                    *i,
                    c,
                    alloc::format!("w_prime violates Jacobi: residual {:e}", c.jacobi_w_prime),
                ))
            } else {
                None
            }
        });

        let (verdict, failure) = if let Some(f) = jacobi_bad {
            (Verdict::FailedJacobi, Some(f))
        } else if !ranks_match {
            let (i, c) = checks.iter().find(|(_, c)| c.rank_w != c.rank_w_prime).unwrap();
            let detail = alloc::format!("rank(w) = {} but rank(w_prime) = {}", c.rank_w, c.rank_w_prime);
            (Verdict::RefusedRankMismatch, Some(fail(*i, c, detail)))
        } else if !rank_constant {
            let (i, c) = checks.iter().find(|(_, c)| c.rank_w != first_rank).unwrap();
            let detail = alloc::format!("rank {} differs from rank {} at the first sample", c.rank_w, first_rank);
            (Verdict::RefusedRankNotConstant, Some(fail(*i, c, detail)))
        } else if !distributions_coincide {
            let (i, c) = checks
                .iter()
                .max_by(|a, b| a.1.subspace_defect.total_cmp(&b.1.subspace_defect))
                .unwrap();
            let detail = alloc::format!("characteristic distributions differ: defect {:e}", c.subspace_defect);
            (Verdict::RefusedDistributionMismatch, Some(fail(*i, c, detail)))
        } else {
            (Verdict::ExistsConstructed, None)
        };

        Ok(ExistenceReport {
            common_rank: (ranks_match && rank_constant).then_some(first_rank),
            checks,
            skipped,
            rank_constant,
            ranks_match,
            distributions_coincide,
            max_jacobi_w,
            max_jacobi_w_prime,
            max_subspace_defect,
            failure,
            verdict,
        })
    }
}

/// Runs [`check_point`] at every sample, in order.
pub fn decide_existence(
    w: &BivectorField,
    w_prime: &BivectorField,
    samples: &[Vec<f64>],
    tols: &Tolerances,
    skip_singular: bool,
) -> Result<ExistenceReport, BuildError> {
    if samples.is_empty() {
        return Err(BuildError::NoSamples);
    }
    let outcomes = samples.iter().map(|p| check_point(w, w_prime, p, tols)).collect();
    ExistenceReport::from_outcomes(outcomes, samples, tols, skip_singular)
}

/// When both bivectors have constant coefficients one sample decides
/// everything, and the result holds on the whole chart.
pub fn effective_samples<'a>(
    w: &BivectorField,
    w_prime: &BivectorField,
    samples: &'a [Vec<f64>],
) -> (&'a [Vec<f64>], bool) {
    if w.is_constant() && w_prime.is_constant() && !samples.is_empty() {
        (&samples[..1], true)
    } else {
        (samples, false)
    }
}

/// Both bivectors restricted to the characteristic subspace at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafData {
    pub point: Vec<f64>,
    pub w: Matrix,
    pub w_prime: Matrix,
    /// Orthonormal basis of the column space of `W` (n×k).
    pub basis: Matrix,
    /// `BᵀWB`.
    pub m: Matrix,
    /// `BᵀW'B`.
    pub m_prime: Matrix,
    pub m_inv: Matrix,
    pub m_prime_inv: Matrix,
    pub condition: f64,
    pub condition_prime: f64,
}

impl LeafData {
    pub fn from_matrices(point: &[f64], w: Matrix, w_prime: Matrix, tol_rank: f64) -> Result<Self, BuildError> {
        let space = even_rank_space(&w, FieldRole::W, point, tol_rank)?;
        Self::with_basis(point, w, w_prime, space.basis().clone())
    }

    /// Uses the given orthonormal `basis` of the characteristic subspace.
    pub fn with_basis(point: &[f64], w: Matrix, w_prime: Matrix, basis: Matrix) -> Result<Self, BuildError> {
        let bt = basis.transpose();
        let m = bt.matmul(&w).matmul(&basis);
        let m_prime = bt.matmul(&w_prime).matmul(&basis);
        let k = basis.cols();
        let inverse = |mat: &Matrix, role| {
            if k == 0 {
                return Ok((Matrix::zeros(0, 0), 1.0));
            }
            invert(mat)
                .map(|inv| (inv.inverse, inv.condition_estimate))
                .map_err(|source| BuildError::Singular {
                    field: role,
                    point: point.to_vec(),
                    source,
                })
        };
        let (m_inv, condition) = inverse(&m, FieldRole::W)?;
        let (m_prime_inv, condition_prime) = inverse(&m_prime, FieldRole::WPrime)?;
        Ok(LeafData {
            point: point.to_vec(),
            w,
            w_prime,
            basis,
            m,
            m_prime,
            m_inv,
            m_prime_inv,
            condition,
            condition_prime,
        })
    }

    pub fn rank(&self) -> usize {
        self.basis.cols()
    }
}

pub fn build_leaf(
    w: &BivectorField,
    w_prime: &BivectorField,
    point: &[f64],
    tols: &Tolerances,
) -> Result<LeafData, BuildError> {
    let wm = eval_field(w, FieldRole::W, point)?;
    let wpm = eval_field(w_prime, FieldRole::WPrime, point)?;
    LeafData::from_matrices(point, wm, wpm, tols.rank)
}

/// `R` and `R*` at one point, with their identity residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursionPointResult {
    pub point: Vec<f64>,
    pub basis: Matrix,
    pub r: Matrix,
    pub r_star: Matrix,
    pub r_leaf: Matrix,
    pub r_star_leaf: Matrix,
    /// `‖R·W − W'‖_max`.
    pub residual_p0: f64,
    /// `‖W·R* − W'‖_max`.
    pub residual_p0_star: f64,
    /// `max(‖R_F·M − M'‖_max, ‖M·R*_F − M'‖_max)`.
    pub residual_p11: f64,
    pub omega_leaf: Matrix,
    pub omega_leaf_prime: Matrix,
    /// `‖M·Ω_F − I‖_max`.
    pub omega_residual: f64,
    /// `‖M'·Ω'_F − I‖_max`.
    pub omega_prime_residual: f64,
    pub condition: f64,
    pub condition_prime: f64,
    /// `‖R* − Rᵀ‖_max`.
    pub duality_defect: f64,
    /// `‖(R − I)(I − BBᵀ)‖_max`.
    pub complement_defect: f64,
}

/// Extends a leaf operator by the identity on the orthogonal complement:
/// `B·A·Bᵀ + (I − BBᵀ)`.
fn extend(basis: &Matrix, leaf_op: &Matrix) -> Matrix {
    let n = basis.rows();
    let bt = basis.transpose();
    let projector = basis.matmul(&bt);
    basis
        .matmul(leaf_op)
        .matmul(&bt)
        .add(&Matrix::identity(n).sub(&projector))
}

pub fn build_r_point(leaf: &LeafData) -> RecursionPointResult {
    let n = leaf.basis.rows();
    let k = leaf.rank();
    let r_leaf = leaf.m_prime.matmul(&leaf.m_inv);
    let r_star_leaf = leaf.m_inv.matmul(&leaf.m_prime);
    let r = extend(&leaf.basis, &r_leaf);
    let r_star = extend(&leaf.basis, &r_star_leaf);

    let residual_p0 = r.matmul(&leaf.w).max_abs_diff(&leaf.w_prime);
    let residual_p0_star = leaf.w.matmul(&r_star).max_abs_diff(&leaf.w_prime);
    let residual_p11 = r_leaf
        .matmul(&leaf.m)
        .max_abs_diff(&leaf.m_prime)
        .max(leaf.m.matmul(&r_star_leaf).max_abs_diff(&leaf.m_prime));
    let id_k = Matrix::identity(k);
    let id_n = Matrix::identity(n);
    let complement = id_n.sub(&leaf.basis.matmul(&leaf.basis.transpose()));

    RecursionPointResult {
        point: leaf.point.clone(),
        basis: leaf.basis.clone(),
        residual_p0,
        residual_p0_star,
        residual_p11,
        omega_residual: leaf.m.matmul(&leaf.m_inv).max_abs_diff(&id_k),
        omega_prime_residual: leaf.m_prime.matmul(&leaf.m_prime_inv).max_abs_diff(&id_k),
        omega_leaf: leaf.m_inv.clone(),
        omega_leaf_prime: leaf.m_prime_inv.clone(),
        condition: leaf.condition,
        condition_prime: leaf.condition_prime,
        duality_defect: r_star.max_abs_diff(&r.transpose()),
        complement_defect: r.sub(&id_n).matmul(&complement).max_abs(),
        r,
        r_star,
        r_leaf,
        r_star_leaf,
    }
}

/// `R(z)` from the builder, as a matrix field (e.g. for numerical torsion).
pub fn recursion_operator_at(
    w: &BivectorField,
    w_prime: &BivectorField,
    point: &[f64],
    tols: &Tolerances,
) -> Result<Matrix, BuildError> {
    Ok(build_r_point(&build_leaf(w, w_prime, point, tols)?).r)
}

/// Outcome of the full decide-then-build pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursionReport {
    pub existence: ExistenceReport,
    /// Empty unless the verdict is [`Verdict::ExistsConstructed`].
    pub points: Vec<RecursionPointResult>,
    /// Both bivectors have constant coefficients, so one point covers the chart.
    pub globally_valid: bool,
    pub max_residual_p0: f64,
    pub max_residual_p11: f64,
}

impl RecursionReport {
    pub fn verdict(&self) -> Verdict {
        self.existence.verdict
    }

    /// Combines an existence report with the per-point builds of its accepted samples.
    pub fn assemble(existence: ExistenceReport, points: Vec<RecursionPointResult>, globally_valid: bool) -> Self {
        let max_residual_p0 = points
            .iter()
            .map(|p| p.residual_p0.max(p.residual_p0_star))
            .fold(0.0, f64::max);
        let max_residual_p11 = points.iter().map(|p| p.residual_p11).fold(0.0, f64::max);
        RecursionReport {
            existence,
            points,
            globally_valid,
            max_residual_p0,
            max_residual_p11,
        }
    }
}

/// Decides existence on the samples and, on success, builds `R` at each
/// accepted sample.
pub fn build_recursion(
    w: &BivectorField,
    w_prime: &BivectorField,
    samples: &[Vec<f64>],
    tols: &Tolerances,
    skip_singular: bool,
) -> Result<RecursionReport, BuildError> {
    let (samples, globally_valid) = effective_samples(w, w_prime, samples);
    let existence = decide_existence(w, w_prime, samples, tols, skip_singular)?;
    let mut points = Vec::new();
    if existence.verdict.is_success() {
        for (_, c) in &existence.checks {
            points.push(build_r_point(&build_leaf(w, w_prime, &c.point, tols)?));
        }
    }
    Ok(RecursionReport::assemble(existence, points, globally_valid))
}

/// Residuals of `W' = R·W = W·S` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyPoint {
    pub point: Vec<f64>,
    /// `‖R·W − W'‖_max`.
    pub residual_p0: f64,
    /// `‖W·S − W'‖_max`, when `R*` is known.
    pub residual_p0_star: Option<f64>,
    /// Max-abs Nijenhuis torsion of a symbolic `R`. Informational only.
    pub torsion_max: Option<f64>,
    pub passed: bool,
}

/// Checks a user-supplied symbolic `R` at one point and reports its torsion.
pub fn verify_symbolic_point(
    w: &BivectorField,
    w_prime: &BivectorField,
    r: &TensorField11,
    point: &[f64],
    tol_residual: f64,
) -> Result<VerifyPoint, BuildError> {
    if w.chart() != w_prime.chart() || w.chart() != r.chart() {
        return Err(BuildError::ChartMismatch);
    }
    let wm = eval_field(w, FieldRole::W, point)?;
    let wpm = eval_field(w_prime, FieldRole::WPrime, point)?;
    let to_err = |source| BuildError::Domain {
        field: FieldRole::R,
        point: point.to_vec(),
        source,
    };
    let (rm, dr) = r.eval_with_derivatives(point).map_err(to_err)?;
    let torsion = crate::fields::Torsion::from_derivatives(&rm, &dr);
    let residual_p0 = rm.matmul(&wm).max_abs_diff(&wpm);
    Ok(VerifyPoint {
        point: point.to_vec(),
        residual_p0,
        residual_p0_star: None,
        torsion_max: Some(torsion.max_abs()),
        passed: residual_p0 <= tol_residual,
    })
}

pub fn verify_symbolic(
    w: &BivectorField,
    w_prime: &BivectorField,
    r: &TensorField11,
    samples: &[Vec<f64>],
    tol_residual: f64,
) -> Result<Vec<VerifyPoint>, BuildError> {
    samples
        .iter()
        .map(|p| verify_symbolic_point(w, w_prime, r, p, tol_residual))
        .collect()
}

/// Re-evaluates `w`, `w'` at each built point and checks both equalities.
pub fn verify_built(
    w: &BivectorField,
    w_prime: &BivectorField,
    results: &[RecursionPointResult],
    tol_residual: f64,
) -> Result<Vec<VerifyPoint>, BuildError> {
    results
        .iter()
        .map(|res| {
            let wm = eval_field(w, FieldRole::W, &res.point)?;
            let wpm = eval_field(w_prime, FieldRole::WPrime, &res.point)?;
            let n = wm.rows();
            if res.r.rows() != n || res.r.cols() != n {
                return Err(BuildError::ChartMismatch);
            }
            let residual_p0 = res.r.matmul(&wm).max_abs_diff(&wpm);
            let residual_star = wm.matmul(&res.r_star).max_abs_diff(&wpm);
            Ok(VerifyPoint {
                point: res.point.clone(),
                residual_p0,
                residual_p0_star: Some(residual_star),
                torsion_max: None,
                passed: residual_p0 <= tol_residual && residual_star <= tol_residual,
            })
        })
        .collect()
}

/// Haar-distributed orthogonal k×k matrix: Gram–Schmidt on a Gaussian matrix
/// with the column signs fixed by the diagonal of the triangular factor.
pub fn random_orthogonal(k: usize, rng: &mut SplitMix64) -> Matrix {
    loop {
        let g = Matrix::from_fn(k, k, |_, _| rng.normal());
        let mut q = g.clone();
        let mut ok = true;
        for j in 0..k {
            for _ in 0..2 {
                for p in 0..j {
                    let c: f64 = (0..k).map(|i| q[(i, p)] * q[(i, j)]).sum();
                    for i in 0..k {
                        q[(i, j)] -= c * q[(i, p)];
                    }
                }
            }
            let nrm = libm::sqrt((0..k).map(|i| q[(i, j)] * q[(i, j)]).sum());
            if nrm < 1e-8 {
                ok = false;
                break;
            }
            for i in 0..k {
                q[(i, j)] /= nrm;
            }
        }
        if ok {
            return q;
        }
    }
}

/// Rotates the leaf basis `B → B·Q` by random orthogonal `Q` and rebuilds.
/// Returns the worst of `‖Q·R_F'·Qᵀ − R_F‖_max` and `‖R' − R‖_max` over
/// `trials` rotations; zero when `k = 0`.
pub fn splitting_independence_check(leaf: &LeafData, trials: usize, seed: u64) -> f64 {
    assert!(trials >= 1, "at least one trial");
    let k = leaf.rank();
    if k == 0 {
        return 0.0;
    }
    let reference = build_r_point(leaf);
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0_f64;
    for _ in 0..trials {
        let q = random_orthogonal(k, &mut rng);
        let rotated_basis = leaf.basis.matmul(&q);
        let rotated = match LeafData::with_basis(&leaf.point, leaf.w.clone(), leaf.w_prime.clone(), rotated_basis) {
            Ok(l) => build_r_point(&l),
            Err(_) => return f64::INFINITY,
        };
        let conjugated = q.matmul(&rotated.r_leaf).matmul(&q.transpose());
        worst = worst
            .max(conjugated.max_abs_diff(&reference.r_leaf))
            .max(rotated.r.max_abs_diff(&reference.r));
    }
    worst
}
