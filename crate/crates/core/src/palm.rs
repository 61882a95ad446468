//! PALM and Fast PALM on the penalty problem
//!
//! ```text
//! minimize  n - <I, U> + rho <X, U> + rho_x/2 ||X||_F^2
//! s.t.      A(X) = b,  X psd,  0 <= U <= I
//! ```
//!
//! with blocks `f(X) = rho_x/2 ||X||^2 + indicator`, `g(U) = n - <I, U> + indicator`
//! and coupling `H(X, U) = rho <X, U>`.

use std::time::Instant;

use log::{debug, info};
use nalgebra::DVector;

use crate::affine::AffineOperator;
use crate::diagnostics::{diagnose, DiagnosticsReport};
use crate::error::{Error, Result};
use crate::prox_u::prox_u_solve;
use crate::prox_x::{project_onto_constraints, prox_x_solve, ProxXParams, ProxXStats};
use crate::symmat::{rank_above, SymmetricMatrix};

/// Number of consecutive iterations a stopping test must hold.
pub const STABLE_WINDOW: usize = 5;

/// Where the U-step evaluates `grad_U H = rho X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UGradientPoint {
    /// Gauss-Seidel: the freshly computed `X^{k+1}`.
    #[default]
    Updated,
    /// Jacobi-style: the previous `X^k`.
    Previous,
}

/// When continuation raises the penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RhoSchedule {
    /// Only after the run settles with `<X, U> > tol_comp`.
    #[default]
    OnSettle,
    /// After every step, so `rho` grows geometrically from a small start.
    EveryIteration,
}

/// Penalty continuation `rho <- min(rho_max, factor * rho)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Continuation {
    pub rho_max: f64,
    pub factor: f64,
    pub schedule: RhoSchedule,
}

impl Continuation {
    pub fn on_settle(rho_max: f64, factor: f64) -> Self {
        Self { rho_max, factor, schedule: RhoSchedule::OnSettle }
    }

    pub fn every_iteration(rho_max: f64, factor: f64) -> Self {
        Self { rho_max, factor, schedule: RhoSchedule::EveryIteration }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PalmConfig {
    pub rho: f64,
    pub rho_x: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub momentum: bool,
    pub max_iters: usize,
    pub tol_obj: f64,
    pub tol_comp: f64,
    pub continuation: Option<Continuation>,
    pub prox_params: ProxXParams,
    pub rank_threshold: f64,
    pub u_gradient: UGradientPoint,
}

impl Default for PalmConfig {
    fn default() -> Self {
        Self {
            rho: 10.0,
            rho_x: 1e-4,
            gamma1: 1.1,
            gamma2: 1.1,
            momentum: false,
            max_iters: 200,
            tol_obj: 1e-8,
            tol_comp: 1e-6,
            continuation: None,
            prox_params: ProxXParams::default(),
            rank_threshold: 0.01,
            u_gradient: UGradientPoint::Updated,
        }
    }
}

impl PalmConfig {
    pub fn fast() -> Self {
        Self {
            momentum: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidArgument(what));
        if !(self.rho > 0.0) {
            return bad(format!("rho must be positive, got {}", self.rho));
        }
        if !(self.rho_x >= 0.0) {
            return bad(format!("rho_x must be nonnegative, got {}", self.rho_x));
        }
        if !(self.gamma1 > 1.0 && self.gamma2 > 1.0) {
            return bad(format!(
                "step factors must exceed 1, got gamma1 = {}, gamma2 = {}",
                self.gamma1, self.gamma2
            ));
        }
        if !(self.tol_obj > 0.0 && self.tol_comp > 0.0 && self.rank_threshold > 0.0) {
            return bad("tolerances and rank threshold must be positive".into());
        }
        if let Some(c) = self.continuation {
            if !(c.factor > 1.0 && c.rho_max >= self.rho) {
                return bad(format!(
                    "continuation needs factor > 1 and rho_max >= rho, got {c:?}"
                ));
            }
        }
        self.prox_params.validate()
    }
}

/// `f_rho(X, U) = n - trace(U) + rho <X, U> + rho_x/2 ||X||^2`.
///
/// Panics if `X` and `U` differ in order.
pub fn objective(x: &SymmetricMatrix, u: &SymmetricMatrix, rho: f64, rho_x: f64) -> f64 {
    assert_eq!(x.n(), u.n(), "dimension mismatch");
    let n = x.n() as f64;
    n - u.trace() + rho * x.dot_unchecked(u) + 0.5 * rho_x * x.dot_unchecked(x)
}

/// Extrapolation weight for step `k` (1-based): `max(0, (k - 2) / (k + 1))`.
pub fn momentum_beta(k: usize) -> f64 {
    let k = k as f64;
    ((k - 2.0) / (k + 1.0)).max(0.0)
}

#[derive(Debug, Clone)]
pub struct PalmState {
    /// Completed steps.
    pub k: usize,
    pub x: SymmetricMatrix,
    pub u: SymmetricMatrix,
    pub x_prev: SymmetricMatrix,
    pub u_prev: SymmetricMatrix,
    pub y_warm: DVector<f64>,
    /// Current penalty parameter (changes only under continuation).
    pub rho: f64,
    pub c_k: f64,
    pub d_k: f64,
    /// Extrapolation weight used by the last step.
    pub beta: f64,
    pub last_prox: ProxXStats,
}

impl PalmState {
    pub fn new(x: SymmetricMatrix, u: SymmetricMatrix, y_warm: DVector<f64>, config: &PalmConfig) -> Self {
        Self {
            k: 0,
            x_prev: x.clone(),
            u_prev: u.clone(),
            x,
            u,
            y_warm,
            rho: config.rho,
            c_k: config.gamma1 * config.rho,
            d_k: config.gamma2 * config.rho,
            beta: 0.0,
            last_prox: ProxXStats::default(),
        }
    }

    pub fn objective(&self, rho_x: f64) -> f64 {
        objective(&self.x, &self.u, self.rho, rho_x)
    }
}

/// One PALM iteration: X-step on the linearized coupling, then U-step.
///
/// Both partial gradients of `H` have modulus `rho`, so the prox weights are
/// `c_k = gamma1 rho` and `d_k = gamma2 rho`.
pub fn palm_step(state: &PalmState, op: &AffineOperator, config: &PalmConfig) -> Result<PalmState> {
    if state.x.n() != op.n() || state.u.n() != op.n() {
        return Err(Error::DimensionMismatch {
            expected: op.n(),
            found: state.x.n(),
        });
    }
    let k = state.k + 1;
    let beta = if config.momentum { momentum_beta(k) } else { 0.0 };
    let rho = state.rho;
    let c_k = config.gamma1 * rho;
    let d_k = config.gamma2 * rho;

    let mut x_tilde = state.x.add_scaled(-rho / c_k, &state.u);
    if beta != 0.0 {
        x_tilde = x_tilde.add_scaled(beta, &(&state.x - &state.x_prev));
    }
    let sol = prox_x_solve(
        &x_tilde,
        op,
        c_k,
        config.rho_x,
        &config.prox_params,
        Some(&state.y_warm),
    )?;

    let x_grad = match config.u_gradient {
        UGradientPoint::Updated => &sol.x,
        UGradientPoint::Previous => &state.x,
    };
    let mut u_tilde = state.u.add_scaled(-rho / d_k, x_grad);
    if beta != 0.0 {
        u_tilde = u_tilde.add_scaled(beta, &(&state.u - &state.u_prev));
    }
    let u = prox_u_solve(&u_tilde, d_k)?;

    Ok(PalmState {
        k,
        x_prev: state.x.clone(),
        u_prev: state.u.clone(),
        x: sol.x,
        u,
        y_warm: sol.y,
        rho,
        c_k,
        d_k,
        beta,
        last_prox: sol.stats,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub f_rho: f64,
    pub comp: f64,
    pub rank_x: usize,
    pub trace_u: f64,
    pub newton_iters: usize,
    pub cg_iters: usize,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    /// The X-subproblem reported an empty feasible set.
    Infeasible,
    /// The X-subproblem failed to converge or its line search stalled.
    SubproblemFailure,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIters => "max_iters",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::SubproblemFailure => "subproblem_failure",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x_final: SymmetricMatrix,
    pub u_final: SymmetricMatrix,
    /// Row 0 is the initial point, with the work of the starting projection
    /// when one was computed; one more row per completed step.
    pub trace: Vec<TraceRow>,
    pub status: SolveStatus,
    /// Message of the subproblem error that ended the run, if any.
    pub failure: Option<String>,
    pub rho_final: f64,
    /// Largest dual-gradient norm at which any X-subproblem returned.
    pub max_prox_grad_norm: f64,
    pub diagnostics: Option<DiagnosticsReport>,
}

impl SolveReport {
    pub fn iterations(&self) -> usize {
        self.trace.len().saturating_sub(1)
    }

    pub fn final_row(&self) -> &TraceRow {
        self.trace.last().expect("trace always holds the initial row")
    }

    pub fn total_newton_iters(&self) -> usize {
        self.trace.iter().map(|r| r.newton_iters).sum()
    }
}

/// Default starting point: the projection of zero onto the constraint set,
/// and `U = 0`.
pub fn default_start(op: &AffineOperator, config: &PalmConfig) -> Result<(SymmetricMatrix, DVector<f64>)> {
    let sol = project_onto_constraints(&SymmetricMatrix::zeros(op.n()), op, &config.prox_params, None)?;
    Ok((sol.x, sol.y))
}

fn trace_row(state: &PalmState, config: &PalmConfig, started: Instant) -> Result<TraceRow> {
    Ok(TraceRow {
        iter: state.k,
        f_rho: state.objective(config.rho_x),
        comp: state.x.dot_unchecked(&state.u),
        rank_x: rank_above(&state.x, config.rank_threshold)?,
        trace_u: state.u.trace(),
        newton_iters: state.last_prox.newton_iters,
        cg_iters: state.last_prox.cg_iters,
        elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// Runs PALM (or Fast PALM when `config.momentum`) from `(x0, u0)`.
///
/// Stops when the objective changes by at most `tol_obj` for
/// [`STABLE_WINDOW`] consecutive steps, when `<X, U> <= tol_comp` with the
/// rank of `X` and the trace of `U` unchanged over the same window, or after
/// `max_iters` steps.
/// With on-settle continuation, a stop with `<X, U> > tol_comp` raises `rho`
/// instead, until `rho_max` is reached. With per-iteration continuation no
/// stop is taken before `rho` reaches `rho_max`.
pub fn solve(
    op: &AffineOperator,
    config: &PalmConfig,
    x0: Option<SymmetricMatrix>,
    u0: Option<SymmetricMatrix>,
) -> Result<SolveReport> {
    config.validate()?;
    let started = Instant::now();
    let n = op.n();
    let (x0, y0, start_stats) = match x0 {
        Some(x) => {
            if x.n() != n {
                return Err(Error::DimensionMismatch { expected: n, found: x.n() });
            }
            (x, DVector::zeros(op.m()), ProxXStats::default())
        }
        None => {
            let sol = project_onto_constraints(&SymmetricMatrix::zeros(n), op, &config.prox_params, None)?;
            (sol.x, sol.y, sol.stats)
        }
    };
    let u0 = u0.unwrap_or_else(|| SymmetricMatrix::zeros(n));
    if u0.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: u0.n() });
    }

    let mut max_grad = start_stats.grad_norm;
    let mut state = PalmState::new(x0, u0, y0, config);
    state.last_prox = start_stats;
    let mut trace = vec![trace_row(&state, config, started)?];
    let mut status = SolveStatus::MaxIters;
    let mut failure = None;
    let mut obj_stable = 0usize;

    while state.k < config.max_iters {
        let next = match palm_step(&state, op, config) {
            Ok(s) => s,
            Err(e @ Error::Infeasible { .. }) => {
                status = SolveStatus::Infeasible;
                failure = Some(e.to_string());
                break;
            }
            Err(e @ (Error::NonConvergence { .. } | Error::Stall { .. })) => {
                status = SolveStatus::SubproblemFailure;
                failure = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        state = next;
        max_grad = max_grad.max(state.last_prox.grad_norm);
        let ramping = match config.continuation {
            Some(c) if c.schedule == RhoSchedule::EveryIteration && state.rho < c.rho_max => {
                state.rho = (state.rho * c.factor).min(c.rho_max);
                true
            }
            _ => false,
        };
        let row = trace_row(&state, config, started)?;
        let prev = trace.last().expect("nonempty");
        if (row.f_rho - prev.f_rho).abs() <= config.tol_obj {
            obj_stable += 1;
        } else {
            obj_stable = 0;
        }
        debug!(
            "iter {:4} f {:.10e} comp {:.3e} rank {} tr(U) {:.4} newton {} cg {}",
            row.iter, row.f_rho, row.comp, row.rank_x, row.trace_u, row.newton_iters, row.cg_iters
        );
        trace.push(row);

        let comp_settled = trace.len() > STABLE_WINDOW && {
            let tail = &trace[trace.len() - STABLE_WINDOW..];
            tail.iter().all(|r| {
                r.comp <= config.tol_comp
                    && r.rank_x == tail[0].rank_x
                    && (r.trace_u - tail[0].trace_u).abs() <= config.tol_obj
            })
        };
        let settled = !ramping && (obj_stable >= STABLE_WINDOW || comp_settled);
        if settled {
            let comp = trace.last().expect("nonempty").comp;
            match config.continuation {
                Some(c) if comp > config.tol_comp && state.rho < c.rho_max => {
                    state.rho = (state.rho * c.factor).min(c.rho_max);
                    obj_stable = 0;
                    debug!("continuation: rho -> {}", state.rho);
                }
                _ => {
                    status = SolveStatus::Converged;
                    break;
                }
            }
        }
    }

    let diagnostics = match status {
        SolveStatus::Converged | SolveStatus::MaxIters => {
            let cfg = PalmConfig {
                rho: state.rho,
                ..config.clone()
            };
            diagnose(&state.x, &state.u, op, &cfg).ok()
        }
        _ => None,
    };
    let report = SolveReport {
        x_final: state.x,
        u_final: state.u,
        trace,
        status,
        failure,
        rho_final: state.rho,
        max_prox_grad_norm: max_grad,
        diagnostics,
    };
    let last = report.final_row();
    info!(
        "{} after {} iterations: f {:.6} rank {} comp {:.3e}",
        report.status.as_str(),
        report.iterations(),
        last.f_rho,
        last.rank_x,
        last.comp
    );
    Ok(report)
}
