//! Small dense real linear algebra evaluated at a single point.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Matrix::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(l, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "vector dimension");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    fn zip_with(&self, rhs: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Largest absolute entry; 0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| f64::max(m, libm::fabs(*a)))
    }

    /// `max |self − rhs|` entrywise.
    pub fn max_abs_diff(&self, rhs: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        self.data
            .iter()
            .zip(&rhs.data)
            .fold(0.0, |m, (a, b)| f64::max(m, libm::fabs(a - b)))
    }

    /// Spectral norm, from the largest eigenvalue of `AᵀA`.
    pub fn norm2(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        let gram = self.transpose().matmul(self);
        let lambda = symmetric_eigenvalues(&gram).into_iter().fold(0.0, f64::max);
        libm::sqrt(lambda)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(a: &Matrix) -> Vec<f64> {
    assert!(a.is_square());
    let n = a.rows();
    let mut m = a.clone();
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        let diag: f64 = (0..n).map(|i| m[(i, i)] * m[(i, i)]).sum();
        if off <= f64::EPSILON * f64::EPSILON * diag || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = libm::copysign(1.0, theta) / (libm::fabs(theta) + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = c * apk - s * aqk;
                    m[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| m[(i, i)]).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// A linear subspace of ℝⁿ given by an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: Matrix,
    tol_used: f64,
}

impl Subspace {
    /// Panics unless the columns are orthonormal to 1e-12.
    pub fn from_orthonormal(basis: Matrix, tol_used: f64) -> Self {
        let s = Subspace { basis, tol_used };
        assert!(s.orthonormality_defect() <= 1e-12, "basis is not orthonormal");
        s
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn rank(&self) -> usize {
        self.basis.cols()
    }

    pub fn tol_used(&self) -> f64 {
        self.tol_used
    }

    /// `P = B·Bᵀ`.
    pub fn projector(&self) -> Matrix {
        self.basis.matmul(&self.basis.transpose())
    }

    /// `‖BᵀB − I‖_max`.
    pub fn orthonormality_defect(&self) -> f64 {
        self.basis
            .transpose()
            .matmul(&self.basis)
            .max_abs_diff(&Matrix::identity(self.rank()))
    }
}

/// Orthonormal basis of the column space of `m`.
///
/// Modified Gram–Schmidt with column pivoting: at each step the remaining
/// column with the largest residual norm is taken (ties go to the lowest
/// index) and accepted iff that norm exceeds `tol_rank · max_j ‖m_j‖`.
/// Every accepted direction is orthogonalised twice against the basis.
pub fn column_space(m: &Matrix, tol_rank: f64) -> Subspace {
    assert!(tol_rank > 0.0, "tol_rank must be positive");
    let n = m.rows();
    let mut residuals: Vec<Vec<f64>> = (0..m.cols()).map(|j| m.column(j)).collect();
    let max_norm = residuals.iter().map(|c| norm(c)).fold(0.0, f64::max);
    let threshold = tol_rank * max_norm;
    let mut used = vec![false; residuals.len()];
    let mut basis: Vec<Vec<f64>> = Vec::new();

    while basis.len() < n && max_norm > 0.0 {
        let mut best: Option<(usize, f64)> = None;
        for (j, r) in residuals.iter().enumerate() {
            if used[j] {
                continue;
            }
            let nr = norm(r);
            if best.is_none_or(|(_, b)| nr > b) {
                best = Some((j, nr));
            }
        }
        let Some((j, nr)) = best else { break };
        if nr <= threshold {
            break;
        }
        used[j] = true;
        let mut q = residuals[j].clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &q);
                for (qi, bi) in q.iter_mut().zip(b) {
                    *qi -= c * bi;
                }
            }
        }
        let nq = norm(&q);
        q.iter_mut().for_each(|x| *x /= nq);
        for (k, r) in residuals.iter_mut().enumerate() {
            if used[k] {
                continue;
            }
            let c = dot(&q, r);
            for (ri, qi) in r.iter_mut().zip(&q) {
                *ri -= c * qi;
            }
        }
        basis.push(q);
    }

    let k = basis.len();
    let b = Matrix::from_fn(n, k, |i, j| basis[j][i]);
    Subspace::from_orthonormal(b, tol_rank)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AmbientMismatch {
    pub left: usize,
    pub right: usize,
}

impl fmt::Display for AmbientMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ambient dimensions differ: {} vs {}", self.left, self.right)
    }
}

impl core::error::Error for AmbientMismatch {}

/// Outcome of comparing two subspaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubspaceComparison {
    pub equal: bool,
    /// `‖(I − P₂)·P₁‖₂`, the sine of the largest principal angle.
    pub defect: f64,
}

/// Equal iff the ranks agree and the defect is at most `tol_sub`.
pub fn subspace_equal(s1: &Subspace, s2: &Subspace, tol_sub: f64) -> Result<SubspaceComparison, AmbientMismatch> {
    if s1.ambient_dim() != s2.ambient_dim() {
        return Err(AmbientMismatch {
            left: s1.ambient_dim(),
            right: s2.ambient_dim(),
        });
    }
    // ‖(I − P₂)B₁B₁ᵀ‖₂ = ‖(I − P₂)B₁‖₂ since B₁ has orthonormal columns.
    let b1 = s1.basis();
    let b2 = s2.basis();
    let residual = b1.sub(&b2.matmul(&b2.transpose().matmul(b1)));
    let defect = residual.norm2();
    Ok(SubspaceComparison {
        equal: s1.rank() == s2.rank() && defect <= tol_sub,
        defect,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularMatrix {
    /// Elimination step at which the pivot fell below threshold.
    pub step: usize,
    pub pivot: f64,
}

impl fmt::Display for SingularMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "singular matrix: pivot {:e} at step {}", self.pivot, self.step)
    }
}

impl core::error::Error for SingularMatrix {}

/// Inverse together with `max pivot / min pivot`.
#[derive(Debug, Clone, PartialEq)]
pub struct Inverse {
    pub inverse: Matrix,
    pub condition_estimate: f64,
}

/// Gauss–Jordan elimination with partial pivoting. A pivot smaller than
/// `1e-13 · max|M|` is treated as zero.
pub fn invert(m: &Matrix) -> Result<Inverse, SingularMatrix> {
    assert!(m.is_square(), "invert needs a square matrix");
    let k = m.rows();
    assert!(k >= 1, "invert needs k >= 1");
    let threshold = 1e-13 * m.max_abs();
    let mut a = m.clone();
    let mut inv = Matrix::identity(k);
    let mut max_pivot = 0.0_f64;
    let mut min_pivot = f64::INFINITY;

    for col in 0..k {
        let (p, pivot) = (col..k)
            .map(|r| (r, libm::fabs(a[(r, col)])))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot < threshold || pivot == 0.0 {
            return Err(SingularMatrix { step: col, pivot });
        }
        max_pivot = max_pivot.max(pivot);
        min_pivot = min_pivot.min(pivot);
        if p != col {
            for j in 0..k {
                a.data.swap(p * k + j, col * k + j);
                inv.data.swap(p * k + j, col * k + j);
            }
        }
        let d = a[(col, col)];
        for j in 0..k {
            a[(col, j)] /= d;
            inv[(col, j)] /= d;
        }
        for r in 0..k {
            if r == col {
                continue;
            }
            let f = a[(r, col)];
            if f == 0.0 {
                continue;
            }
            for j in 0..k {
                a[(r, j)] -= f * a[(col, j)];
                inv[(r, j)] -= f * inv[(col, j)];
            }
        }
    }
    Ok(Inverse {
        inverse: inv,
        condition_estimate: max_pivot / min_pivot,
    })
}
