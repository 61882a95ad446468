//! Solution-quality measurements: the rank certificate, prox fixed-point
//! residuals of the penalty problem, and the eigenpair property that KKT
//! points of the penalty problem satisfy.

use nalgebra::DMatrix;

use crate::affine::AffineOperator;
use crate::error::Result;
use crate::palm::PalmConfig;
use crate::prox_u::prox_u_solve;
use crate::prox_x::prox_x_solve;
use crate::symmat::{eig_sym, rank_above, SymmetricMatrix};

/// Projector onto the eigenvectors of `X` with eigenvalue `<= zero_threshold`,
/// so that `n - trace(U)` is the thresholded rank of `X`.
pub fn certificate_u(x: &SymmetricMatrix, zero_threshold: f64) -> Result<SymmetricMatrix> {
    let eig = eig_sym(x)?;
    let n = x.n();
    let k = eig.eigenvalues.iter().filter(|&&l| l > zero_threshold).count();
    if k == n {
        return Ok(SymmetricMatrix::zeros(n));
    }
    let null = eig.eigenvectors.columns(k, n - k);
    Ok(SymmetricMatrix::symmetrized(null * null.transpose()))
}

/// Fixed-point residuals `(||X - X+||_F, ||U - U+||_F)` of the two prox maps
/// with unit weights:
///
/// ```text
/// X+ = prox of f at X - rho U,      U+ = prox of g at U - rho X
/// ```
///
/// Both vanish exactly at stationary points of the penalty problem.
pub fn stationarity_residuals(
    x: &SymmetricMatrix,
    u: &SymmetricMatrix,
    op: &AffineOperator,
    config: &PalmConfig,
) -> Result<(f64, f64)> {
    let x_target = x.add_scaled(-config.rho, u);
    let x_plus = prox_x_solve(&x_target, op, 1.0, config.rho_x, &config.prox_params, None)?;
    let u_target = u.add_scaled(-config.rho, x);
    let u_plus = prox_u_solve(&u_target, 1.0)?;
    Ok(((x - &x_plus.x).frobenius_norm(), (u - &u_plus).frobenius_norm()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenClass {
    AtOne,
    AtZero,
    Interior,
}

impl EigenClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            EigenClass::AtOne => "at_one",
            EigenClass::AtZero => "at_zero",
            EigenClass::Interior => "interior",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "at_one" => Some(EigenClass::AtOne),
            "at_zero" => Some(EigenClass::AtZero),
            "interior" => Some(EigenClass::Interior),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenpairCheck {
    pub sigma: f64,
    /// `v^T X v` for the computed unit eigenvector.
    pub vxv: f64,
    pub class: EigenClass,
    pub satisfied: bool,
}

/// Checks, for each eigenpair `(sigma, v)` of `U`:
/// `sigma = 1  =>  v^T X v <= 1/rho`,
/// `sigma = 0  =>  v^T X v >= 1/rho`,
/// `0 < sigma < 1  =>  v^T X v = 1/rho`.
///
/// Eigenvalues within `tol` of each other are grouped and the condition is
/// tested on the whole eigenspace (extreme eigenvalues of `X` compressed to
/// it), so the verdict does not depend on the basis the eigensolver picks.
pub fn eigenpair_property_check(
    x: &SymmetricMatrix,
    u: &SymmetricMatrix,
    rho: f64,
    tol: f64,
) -> Result<Vec<EigenpairCheck>> {
    let eig = eig_sym(u)?;
    let n = u.n();
    let inv_rho = 1.0 / rho;
    let p = &eig.eigenvectors;
    let xm = x.as_matrix();

    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eig.eigenvalues[end - 1] - eig.eigenvalues[end] <= tol {
            end += 1;
        }
        let cluster = &eig.eigenvalues[start..end];
        let sigma_mean = cluster.iter().sum::<f64>() / cluster.len() as f64;
        let class = if (sigma_mean - 1.0).abs() <= tol {
            EigenClass::AtOne
        } else if sigma_mean.abs() <= tol {
            EigenClass::AtZero
        } else {
            EigenClass::Interior
        };

        let basis = p.columns(start, end - start);
        let compressed: DMatrix<f64> = basis.transpose() * xm * basis;
        let cluster = eig_sym(&SymmetricMatrix::symmetrized(compressed))?;
        let hi = cluster.eigenvalues[0];
        let lo = *cluster.eigenvalues.last().expect("nonempty cluster");
        let satisfied = match class {
            EigenClass::AtOne => hi <= inv_rho + tol,
            EigenClass::AtZero => lo >= inv_rho - tol,
            EigenClass::Interior => (hi - inv_rho).abs() <= tol && (lo - inv_rho).abs() <= tol,
        };

        for j in start..end {
            let v = p.column(j);
            let vxv = (v.transpose() * xm * v)[(0, 0)];
            out.push(EigenpairCheck {
                sigma: eig.eigenvalues[j],
                vxv,
                class,
                satisfied,
            });
        }
        start = end;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub complementarity: f64,
    pub rank_x: usize,
    pub trace_u: f64,
    pub stat_res_x: f64,
    pub stat_res_u: f64,
    pub eigenpairs: Vec<EigenpairCheck>,
}

impl DiagnosticsReport {
    pub fn eigenpairs_satisfied(&self) -> bool {
        self.eigenpairs.iter().all(|e| e.satisfied)
    }
}

/// Eigenvalue classification tolerance used by [`diagnose`].
pub const DEFAULT_EIGEN_TOL: f64 = 1e-6;

pub fn diagnose(
    x: &SymmetricMatrix,
    u: &SymmetricMatrix,
    op: &AffineOperator,
    config: &PalmConfig,
) -> Result<DiagnosticsReport> {
    let (stat_res_x, stat_res_u) = stationarity_residuals(x, u, op, config)?;
    Ok(DiagnosticsReport {
        complementarity: x.dot_unchecked(u),
        rank_x: rank_above(x, config.rank_threshold)?,
        trace_u: u.trace(),
        stat_res_x,
        stat_res_u,
        eigenpairs: eigenpair_property_check(x, u, config.rho, DEFAULT_EIGEN_TOL)?,
    })
}
