//! Convex trace-minimization baseline.
//!
//! For PSD matrices the nuclear norm is the trace, so the convex relaxation of
//! rank minimization is `min trace(X)` over `{A(X) = b, X psd}`. Adding a small
//! Tikhonov term gives `min trace(X) + mu/2 ||X||^2 = min mu/2 ||X + I/mu||^2 + const`,
//! i.e. the projection of `-I/mu` onto the constraint set, which reuses the
//! semismooth Newton projection of the X-update. This is a stand-in for a
//! general-purpose SDP solver and is not meant to reach high accuracy on the
//! unregularized problem.

use std::time::Instant;

use crate::affine::AffineOperator;
use crate::diagnostics::certificate_u;
use crate::error::{Error, Result};
use crate::palm::{SolveReport, SolveStatus, TraceRow};
use crate::prox_x::{project_onto_constraints, ProxXParams, ProxXSolution};
use crate::symmat::{rank_above, SymmetricMatrix};

pub const DEFAULT_MU: f64 = 1e-2;

pub fn trace_min_solve(op: &AffineOperator, mu: f64, params: &ProxXParams) -> Result<ProxXSolution> {
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
    }
    let target = SymmetricMatrix::identity(op.n()).scaled(-1.0 / mu);
    project_onto_constraints(&target, op, params, None)
}

/// Runs the baseline and packages it like a PALM run with a single trace row.
///
/// `f_rho` holds `trace(X)`; `U` is the rank certificate of the solution.
pub fn baseline_report(
    op: &AffineOperator,
    mu: f64,
    params: &ProxXParams,
    rank_threshold: f64,
) -> Result<SolveReport> {
    let started = Instant::now();
    let (sol, status, failure) = match trace_min_solve(op, mu, params) {
        Ok(sol) => (sol, SolveStatus::Converged, None),
        Err(e @ Error::Infeasible { .. }) => return Err(e),
        Err(Error::NonConvergence { best, iterations, grad_norm }) => {
            let msg = format!("semismooth Newton did not converge ({iterations} iterations, |grad| = {grad_norm:e})");
            (*best, SolveStatus::SubproblemFailure, Some(msg))
        }
        Err(e) => return Err(e),
    };
    let u = certificate_u(&sol.x, rank_threshold)?;
    let row = TraceRow {
        iter: 0,
        f_rho: sol.x.trace(),
        comp: sol.x.dot_unchecked(&u),
        rank_x: rank_above(&sol.x, rank_threshold)?,
        trace_u: u.trace(),
        newton_iters: sol.stats.newton_iters,
        cg_iters: sol.stats.cg_iters,
        elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    Ok(SolveReport {
        max_prox_grad_norm: sol.stats.grad_norm,
        x_final: sol.x,
        u_final: u,
        trace: vec![row],
        status,
        failure,
        rho_final: 0.0,
        diagnostics: None,
    })
}
