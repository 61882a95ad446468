//! The affine constraint map `A(X) = b` and its adjoint.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::symmat::SymmetricMatrix;

/// Sparse symmetric coefficient matrix stored as upper-triangle triples
/// `(row, col, value)` with `row <= col`. Off-diagonal entries stand for both
/// `(row, col)` and `(col, row)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    /// Triples with `row > col` are flipped into the upper triangle.
    /// Duplicate positions and out-of-range indices are rejected.
    pub fn new(n: usize, entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        let mut out = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            if r >= n || c >= n {
                return Err(Error::InvalidArgument(format!(
                    "coefficient index ({r}, {c}) out of range for order {n}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite);
            }
            let (r, c) = if r <= c { (r, c) } else { (c, r) };
            if !seen.insert((r, c)) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate coefficient entry ({r}, {c})"
                )));
            }
            out.push((r, c, v));
        }
        Ok(Self { entries: out })
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// `<A_i, X>`, counting off-diagonal entries twice.
    pub fn inner(&self, x: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(r, c, v)| {
                if r == c {
                    v * x[(r, r)]
                } else {
                    2.0 * v * x[(r, c)]
                }
            })
            .sum()
    }

    pub fn to_dense(&self, n: usize) -> SymmetricMatrix {
        let mut m = SymmetricMatrix::zeros(n);
        for &(r, c, v) in &self.entries {
            m.set(r, c, v);
        }
        m
    }
}

/// Constraint system `<A_i, X> = b_i`, `i = 0..m`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineOperator {
    n: usize,
    coeffs: Vec<SparseSym>,
    rhs: DVector<f64>,
}

impl AffineOperator {
    pub fn new(n: usize, coeffs: Vec<SparseSym>, rhs: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("matrix order must be positive".into()));
        }
        if coeffs.len() != rhs.len() {
            return Err(Error::DimensionMismatch {
                expected: coeffs.len(),
                found: rhs.len(),
            });
        }
        for a in &coeffs {
            if let Some(&(r, c, _)) = a.entries.iter().find(|&&(r, c, _)| r >= n || c >= n) {
                return Err(Error::InvalidArgument(format!(
                    "coefficient index ({r}, {c}) out of range for order {n}"
                )));
            }
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            n,
            coeffs,
            rhs: DVector::from_vec(rhs),
        })
    }

    /// Builds an operator from raw triples, one list per constraint.
    pub fn from_triples(n: usize, triples: Vec<Vec<(usize, usize, f64)>>, rhs: Vec<f64>) -> Result<Self> {
        let coeffs = triples
            .into_iter()
            .map(|t| SparseSym::new(n, t))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, coeffs, rhs)
    }

    /// No constraints: the feasible set is the whole PSD cone.
    pub fn unconstrained(n: usize) -> Self {
        Self::new(n, Vec::new(), Vec::new()).expect("n > 0")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[SparseSym] {
        &self.coeffs
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    /// `A(X)`, component `i` equal to `<A_i, X>`.
    pub fn apply(&self, x: &SymmetricMatrix) -> Result<DVector<f64>> {
        if x.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.n(),
            });
        }
        Ok(self.apply_dense(x.as_matrix()))
    }

    pub(crate) fn apply_dense(&self, x: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(self.m(), self.coeffs.iter().map(|a| a.inner(x)))
    }

    /// `A*(y) = sum_i y_i A_i`.
    pub fn adjoint(&self, y: &DVector<f64>) -> Result<SymmetricMatrix> {
        if y.len() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                found: y.len(),
            });
        }
        let mut out = SymmetricMatrix::zeros(self.n);
        self.add_adjoint_into(y, &mut out);
        Ok(out)
    }

    /// `target += A*(y)`; `y.len()` must equal `m`.
    pub(crate) fn add_adjoint_into(&self, y: &DVector<f64>, target: &mut SymmetricMatrix) {
        debug_assert_eq!(y.len(), self.m());
        for (a, &yi) in self.coeffs.iter().zip(y.iter()) {
            if yi == 0.0 {
                continue;
            }
            for &(r, c, v) in &a.entries {
                let cur = target.get(r, c);
                target.set(r, c, cur + yi * v);
            }
        }
    }

    /// `||A(X) - b||_inf`.
    pub fn residual_inf(&self, x: &SymmetricMatrix) -> Result<f64> {
        let ax = self.apply(x)?;
        Ok((ax - &self.rhs).amax())
    }

    /// Returns a copy with a different right-hand side.
    pub fn with_rhs(&self, rhs: Vec<f64>) -> Result<Self> {
        Self::new(self.n, self.coeffs.clone(), rhs)
    }
}
