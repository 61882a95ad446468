//! Dense symmetric matrices and the spectral primitives built on them.
//!
//! Every matrix that flows through the solvers (iterates, targets, dual
//! images `G + A*y`, certificates) is a [`SymmetricMatrix`]. Symmetry is
//! enforced on construction by averaging with the transpose so that
//! downstream eigensolvers always see exactly symmetric storage.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Dense symmetric `n x n` matrix, `n >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    data: DMatrix<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "matrix order must be positive");
        Self {
            data: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 1, "matrix order must be positive");
        Self {
            data: DMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[(i, i)] = d;
        }
        m
    }

    /// Builds a symmetric matrix from a square dense matrix as `(M + M^T) / 2`.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidArgument("matrix order must be positive".into()));
        }
        Ok(Self::symmetrized(m))
    }

    /// Row-major constructor; rows must form a square array.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidArgument("matrix order must be positive".into()));
        }
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: r.len(),
                });
            }
        }
        Ok(Self::symmetrized(DMatrix::from_fn(n, n, |i, j| rows[i][j])))
    }

    pub(crate) fn symmetrized(mut m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                let v = (m[(i, j)] + m[(j, i)]) * 0.5;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self { data: m }
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[(i, j)] = value;
        self.data[(j, i)] = value;
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn trace(&self) -> f64 {
        self.data.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            data: &self.data * alpha,
        }
    }

    /// `self + alpha * I`
    pub fn shifted(&self, alpha: f64) -> Self {
        let mut data = self.data.clone();
        for i in 0..self.n() {
            data[(i, i)] += alpha;
        }
        Self { data }
    }

    /// `self + alpha * other`
    pub fn add_scaled(&self, alpha: f64, other: &SymmetricMatrix) -> Self {
        debug_assert_eq!(self.n(), other.n());
        Self {
            data: &self.data + &other.data * alpha,
        }
    }

    /// Smallest eigenvalue (convenience for PSD checks).
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let eig = eig_sym(self)?;
        Ok(*eig.eigenvalues.last().expect("n >= 1"))
    }

    /// Largest eigenvalue.
    pub fn max_eigenvalue(&self) -> Result<f64> {
        let eig = eig_sym(self)?;
        Ok(eig.eigenvalues[0])
    }

    pub(crate) fn dot_unchecked(&self, other: &SymmetricMatrix) -> f64 {
        self.data.dot(&other.data)
    }
}

impl Add for &SymmetricMatrix {
    type Output = SymmetricMatrix;
    fn add(self, rhs: &SymmetricMatrix) -> SymmetricMatrix {
        assert_eq!(self.n(), rhs.n(), "dimension mismatch");
        SymmetricMatrix {
            data: &self.data + &rhs.data,
        }
    }
}

impl Sub for &SymmetricMatrix {
    type Output = SymmetricMatrix;
    fn sub(self, rhs: &SymmetricMatrix) -> SymmetricMatrix {
        assert_eq!(self.n(), rhs.n(), "dimension mismatch");
        SymmetricMatrix {
            data: &self.data - &rhs.data,
        }
    }
}

impl Mul<f64> for &SymmetricMatrix {
    type Output = SymmetricMatrix;
    fn mul(self, rhs: f64) -> SymmetricMatrix {
        self.scaled(rhs)
    }
}

/// Frobenius inner product `trace(A^T B)`.
pub fn frobenius_inner(a: &SymmetricMatrix, b: &SymmetricMatrix) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            found: b.n(),
        });
    }
    Ok(a.dot_unchecked(b))
}

/// Spectral decomposition `M = P diag(eigenvalues) P^T`.
///
/// Eigenvalues are sorted in descending order; ties keep the order the
/// underlying solver produced them in.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal columns, paired with `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `P diag(f(lambda)) P^T`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymmetricMatrix {
        let n = self.n();
        let mut scaled = self.eigenvectors.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let s = f(lam);
            scaled.column_mut(j).scale_mut(s);
        }
        let data = &scaled * self.eigenvectors.transpose();
        debug_assert_eq!(data.nrows(), n);
        SymmetricMatrix::symmetrized(data)
    }

    /// `sum_{j < k} w_j p_j p_j^T` over the leading `k` eigenpairs.
    pub(crate) fn reconstruct_leading(&self, k: usize, weight: impl Fn(f64) -> f64) -> SymmetricMatrix {
        let n = self.n();
        if k == 0 {
            return SymmetricMatrix::zeros(n);
        }
        let lead = self.eigenvectors.columns(0, k);
        let mut scaled = lead.clone_owned();
        for j in 0..k {
            let s = weight(self.eigenvalues[j]);
            scaled.column_mut(j).scale_mut(s);
        }
        SymmetricMatrix::symmetrized(&scaled * lead.transpose())
    }
}

const EIG_MAX_SWEEPS: usize = 10_000;

/// Symmetric eigendecomposition with eigenvalues in descending order.
pub fn eig_sym(m: &SymmetricMatrix) -> Result<EigenDecomposition> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let eig = SymmetricEigen::try_new(m.data.clone(), f64::EPSILON, EIG_MAX_SWEEPS)
        .ok_or(Error::EigenFailure)?;
    let n = m.n();
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort: ties keep solver order
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Projection onto the PSD cone: negative eigenvalues are zeroed.
pub fn psd_project(m: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    let eig = eig_sym(m)?;
    let k = eig.eigenvalues.iter().take_while(|&&l| l > 0.0).count();
    Ok(eig.reconstruct_leading(k, |l| l))
}

/// Clamps every eigenvalue into `[lo, hi]`, keeping eigenvectors.
pub fn clamp_spectrum(m: &SymmetricMatrix, lo: f64, hi: f64) -> Result<SymmetricMatrix> {
    if lo > hi || lo.is_nan() || hi.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "spectral bounds out of order: lo = {lo}, hi = {hi}"
        )));
    }
    let eig = eig_sym(m)?;
    Ok(eig.reconstruct_with(|l| l.clamp(lo, hi)))
}

/// Number of eigenvalues strictly above `threshold`.
pub fn rank_above(m: &SymmetricMatrix, threshold: f64) -> Result<usize> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "rank threshold must be positive, got {threshold}"
        )));
    }
    let eig = eig_sym(m)?;
    Ok(eig.eigenvalues.iter().filter(|&&l| l > threshold).count())
}
