//! Bivector and type-(1,1) tensor fields on a chart, evaluated pointwise.
//!
//! # Sign convention
//!
//! The sharp map is `(w♯α)^i = Σ_j w^{ij} α_j`, with no leading minus. Using
//! `α ↦ −w⌊α` instead flips the sign of both `w♯` and `w'♯`; the leaf operator
//! `R_F = w'♯_F ∘ (w♯_F)⁻¹` picks up the factor `(−1)·(−1)⁻¹ = 1` and is
//! unchanged, and so is the recursion identity `w'♯ = R∘w♯ = w♯∘R*`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dual::Dual;
use crate::expr::{Chart, DomainError, ParseError, ScalarExpr};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldError {
    /// Bivector entries must satisfy `i < j < n`.
    InvalidIndex {
        i: usize,
        j: usize,
        dim: usize,
    },
    DuplicateEntry {
        i: usize,
        j: usize,
    },
    Shape {
        rows: usize,
        cols: usize,
        dim: usize,
    },
    ChartMismatch,
    Parse {
        entry: String,
        source: ParseError,
    },
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldError::InvalidIndex { i, j, dim } => {
                write!(
                    f,
                    "entry ({i}, {j}) is not strictly upper triangular in dimension {dim}"
                )
            }
            FieldError::DuplicateEntry { i, j } => write!(f, "entry ({i}, {j}) given twice"),
            FieldError::Shape { rows, cols, dim } => {
                write!(f, "expected a {dim}x{dim} array, got {rows}x{cols}")
            }
            FieldError::ChartMismatch => write!(f, "expression belongs to a different chart"),
            FieldError::Parse { entry, source } => write!(f, "{entry}: {source}"),
        }
    }
}

impl core::error::Error for FieldError {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            FieldError::Parse { source, .. } => Some(source),
            _ => None,
        }
    }
}

/// An antisymmetric contravariant 2-tensor `w^{ij}(z)`.
///
/// Only the strict upper triangle is stored; `w^{ji} = −w^{ij}` and
/// `w^{ii} = 0` hold structurally.
#[derive(Debug, Clone, PartialEq)]
pub struct BivectorField {
    chart: Chart,
    upper: Vec<(usize, usize, ScalarExpr)>,
}

impl BivectorField {
    pub fn zero(chart: &Chart) -> Self {
        BivectorField {
            chart: chart.clone(),
            upper: Vec::new(),
        }
    }

    /// Entries are `(i, j, expr)` with zero-based `i < j`; unlisted entries are zero.
    pub fn from_upper<'a, I>(chart: &Chart, entries: I) -> Result<Self, FieldError>
    where
        I: IntoIterator<Item = (usize, usize, &'a str)>,
    {
        let mut field = BivectorField::zero(chart);
        for (i, j, text) in entries {
            let expr = ScalarExpr::parse(text, chart).map_err(|source| FieldError::Parse {
                entry: alloc::format!("w[{}][{}]", i + 1, j + 1),
                source,
            })?;
            field.set(i, j, expr)?;
        }
        Ok(field)
    }

    pub fn set(&mut self, i: usize, j: usize, expr: ScalarExpr) -> Result<(), FieldError> {
        let dim = self.chart.dim();
        if !(i < j && j < dim) {
            return Err(FieldError::InvalidIndex { i, j, dim });
        }
        if expr.chart() != &self.chart {
            return Err(FieldError::ChartMismatch);
        }
        if self.upper.iter().any(|(a, b, _)| (*a, *b) == (i, j)) {
            return Err(FieldError::DuplicateEntry { i, j });
        }
        self.upper.push((i, j, expr));
        Ok(())
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &ScalarExpr)> {
        self.upper.iter().map(|(i, j, e)| (*i, *j, e))
    }

    /// No entry depends on the coordinates.
    pub fn is_constant(&self) -> bool {
        self.upper.iter().all(|(_, _, e)| e.is_constant())
    }

    /// `c·w` for a scalar function `c`.
    pub fn scaled(&self, factor: &ScalarExpr) -> Result<Self, FieldError> {
        if factor.chart() != &self.chart {
            return Err(FieldError::ChartMismatch);
        }
        let mut out = BivectorField::zero(&self.chart);
        for (i, j, e) in &self.upper {
            let text = alloc::format!("({factor}) * ({e})");
            let expr = ScalarExpr::parse(&text, &self.chart).map_err(|source| FieldError::Parse {
                entry: alloc::format!("w[{}][{}]", i + 1, j + 1),
                source,
            })?;
            out.set(*i, *j, expr)?;
        }
        Ok(out)
    }

    /// `W(z)`, exactly antisymmetric.
    pub fn eval(&self, point: &[f64]) -> Result<Matrix, DomainError> {
        let n = self.dim();
        let mut w = Matrix::zeros(n, n);
        for (i, j, e) in &self.upper {
            let v = e.eval(point)?;
            w[(*i, *j)] = v;
            w[(*j, *i)] = -v;
        }
        Ok(w)
    }

    /// `W(z)` and `∂_l W(z)` for every coordinate `l`.
    pub fn eval_with_derivatives(&self, point: &[f64]) -> Result<(Matrix, Vec<Matrix>), DomainError> {
        let n = self.dim();
        let w = self.eval(point)?;
        let mut dw = vec![Matrix::zeros(n, n); n];
        let mut inputs: Vec<Dual> = point.iter().map(|&p| Dual::constant(p)).collect();
        for (l, dl) in dw.iter_mut().enumerate() {
            inputs[l].eps = 1.0;
            for (i, j, e) in &self.upper {
                let d = e.eval_with(&inputs)?.eps;
                dl[(*i, *j)] = d;
                dl[(*j, *i)] = -d;
            }
            inputs[l].eps = 0.0;
        }
        Ok((w, dw))
    }

    /// `(w♯α)^i = Σ_j w^{ij}(z) α_j`.
    pub fn sharp(&self, point: &[f64], alpha: &[f64]) -> Result<Vec<f64>, DomainError> {
        Ok(self.eval(point)?.matvec(alpha))
    }

    /// Max over `i < j < k` of the cyclic Schouten sum
    /// `J^{ijk} = Σ_l (w^{il}∂_l w^{jk} + w^{jl}∂_l w^{ki} + w^{kl}∂_l w^{ij})`.
    /// Zero exactly when the Jacobi identity holds at `z`.
    pub fn jacobi_residual(&self, point: &[f64]) -> Result<f64, DomainError> {
        let (w, dw) = self.eval_with_derivatives(point)?;
        Ok(jacobi_residual_from(&w, &dw))
    }
}

/// Jacobi residual from a bivector matrix and its partial derivatives.
pub fn jacobi_residual_from(w: &Matrix, dw: &[Matrix]) -> f64 {
    let n = w.rows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let mut s = 0.0;
                for (l, d) in dw.iter().enumerate() {
                    s += w[(i, l)] * d[(j, k)] + w[(j, l)] * d[(k, i)] + w[(k, l)] * d[(i, j)];
                }
                worst = worst.max(libm::fabs(s));
            }
        }
    }
    worst
}

/// A type-(1,1) tensor `R^i_j(z)`; row index is the upper (output) index.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField11 {
    chart: Chart,
    entries: Vec<ScalarExpr>,
}

impl TensorField11 {
    /// `rows[i][j]` is the expression for `R^i_j`.
    pub fn from_rows<S: AsRef<str>>(chart: &Chart, rows: &[Vec<S>]) -> Result<Self, FieldError> {
        let n = chart.dim();
        let cols = rows.iter().map(Vec::len).find(|&c| c != n).unwrap_or(n);
        if rows.len() != n || cols != n {
            return Err(FieldError::Shape {
                rows: rows.len(),
                cols,
                dim: n,
            });
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            for (j, text) in row.iter().enumerate() {
                let e = ScalarExpr::parse(text.as_ref(), chart).map_err(|source| FieldError::Parse {
                    entry: alloc::format!("R[{}][{}]", i + 1, j + 1),
                    source,
                })?;
                entries.push(e);
            }
        }
        Ok(TensorField11 {
            chart: chart.clone(),
            entries,
        })
    }

    pub fn identity(chart: &Chart) -> Self {
        let n = chart.dim();
        let rows: Vec<Vec<&str>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { "1" } else { "0" }).collect())
            .collect();
        TensorField11::from_rows(chart, &rows).expect("identity parses")
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarExpr {
        &self.entries[i * self.dim() + j]
    }

    pub fn eval(&self, point: &[f64]) -> Result<Matrix, DomainError> {
        let n = self.dim();
        let mut r = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                r[(i, j)] = self.entry(i, j).eval(point)?;
            }
        }
        Ok(r)
    }

    pub fn eval_with_derivatives(&self, point: &[f64]) -> Result<(Matrix, Vec<Matrix>), DomainError> {
        let n = self.dim();
        let r = self.eval(point)?;
        let mut dr = vec![Matrix::zeros(n, n); n];
        let mut inputs: Vec<Dual> = point.iter().map(|&p| Dual::constant(p)).collect();
        for (l, dl) in dr.iter_mut().enumerate() {
            inputs[l].eps = 1.0;
            for i in 0..n {
                for j in 0..n {
                    dl[(i, j)] = self.entry(i, j).eval_with(&inputs)?.eps;
                }
            }
            inputs[l].eps = 0.0;
        }
        Ok((r, dr))
    }

    /// Nijenhuis torsion with exact (dual-number) derivatives.
    pub fn nijenhuis_torsion(&self, point: &[f64]) -> Result<Torsion, DomainError> {
        let (r, dr) = self.eval_with_derivatives(point)?;
        Ok(Torsion::from_derivatives(&r, &dr))
    }
}

/// `N^k_{ij}`, antisymmetric in the lower pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Torsion {
    dim: usize,
    data: Vec<f64>,
}

impl Torsion {
    /// `N^k_{ij} = R^l_i ∂_l R^k_j − R^l_j ∂_l R^k_i − R^k_l ∂_i R^l_j + R^k_l ∂_j R^l_i`,
    /// where `dr[l]` holds `∂_l R`.
    pub fn from_derivatives(r: &Matrix, dr: &[Matrix]) -> Self {
        let n = r.rows();
        assert_eq!(dr.len(), n, "one derivative matrix per coordinate");
        let mut t = Torsion {
            dim: n,
            data: vec![0.0; n * n * n],
        };
        for k in 0..n {
            for i in 0..n {
                for j in i + 1..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += r[(l, i)] * dr[l][(k, j)] - r[(l, j)] * dr[l][(k, i)] - r[(k, l)] * dr[i][(l, j)]
                            + r[(k, l)] * dr[j][(l, i)];
                    }
                    t.data[(k * n + i) * n + j] = s;
                    t.data[(k * n + j) * n + i] = -s;
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Zero-based `N^k_{ij}`.
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| f64::max(m, libm::fabs(*a)))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Nijenhuis torsion of a pointwise matrix field, with central differences of
/// step `h` for the derivatives.
pub fn nijenhuis_torsion_numeric<F, E>(field: F, point: &[f64], h: f64) -> Result<Torsion, E>
where
    F: Fn(&[f64]) -> Result<Matrix, E>,
{
    assert!(h > 0.0, "step must be positive");
    let r = field(point)?;
    let n = point.len();
    let mut dr = Vec::with_capacity(n);
    let mut shifted = point.to_vec();
    for l in 0..n {
        shifted[l] = point[l] + h;
        let plus = field(&shifted)?;
        shifted[l] = point[l] - h;
        let minus = field(&shifted)?;
        shifted[l] = point[l];
        dr.push(plus.sub(&minus).scale(0.5 / h));
    }
    Ok(Torsion::from_derivatives(&r, &dr))
}
