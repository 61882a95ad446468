//! X-update: projection onto `{X : A(X) = b, X psd}`.
//!
//! The projection of a target `G` is computed through the unconstrained dual
//!
//! ```text
//! theta(y) = 1/2 ||(G + A*y)_+||_F^2 - b^T y,   grad theta(y) = A((G + A*y)_+) - b
//! ```
//!
//! minimized by a semismooth Newton method. Each Newton direction solves
//! `(V_y + eps I) d = -grad theta(y)` approximately with matrix-free conjugate
//! gradients, where `V_y h = A(P (M_y o (P^T A*h P)) P^T)` is an element of the
//! generalized Jacobian of `y -> A((G + A*y)_+)`. Steps are globalized by an
//! Armijo backtracking search. The primal solution is `X* = (G + A*y*)_+`.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};

use crate::affine::AffineOperator;
use crate::error::{Error, Result};
use crate::symmat::{eig_sym, EigenDecomposition, SymmetricMatrix};

/// Dual iterates beyond this norm are taken as evidence of an empty feasible set.
pub const DUAL_DIVERGENCE_NORM: f64 = 1e12;

/// Maximum number of step halvings in one Armijo search.
pub const MAX_BACKTRACKS: usize = 50;

/// Relative threshold separating zero eigenvalues from positive/negative ones.
const ZERO_EIG_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ProxXParams {
    /// Stop when `||grad theta|| <= newton_tol`.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    /// Upper bound `eta` of the CG forcing term `eta_k = min(eta, ||grad||^0.5)`.
    pub cg_tol_factor: f64,
    /// `None` means `5 m`.
    pub max_cg_iters: Option<usize>,
    pub armijo_sigma: f64,
    pub backtrack_rho: f64,
    /// Base of the Jacobian regularization `eps = jacobian_eps (1 + ||grad||)`.
    pub jacobian_eps: f64,
}

impl Default for ProxXParams {
    fn default() -> Self {
        Self {
            newton_tol: 1e-8,
            max_newton_iters: 200,
            cg_tol_factor: 0.1,
            max_cg_iters: None,
            armijo_sigma: 1e-4,
            backtrack_rho: 0.5,
            jacobian_eps: 1e-8,
        }
    }
}

impl ProxXParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if !(self.newton_tol > 0.0) {
            return bad("newton_tol must be positive");
        }
        if self.max_newton_iters == 0 {
            return bad("max_newton_iters must be positive");
        }
        if !(self.cg_tol_factor > 0.0 && self.cg_tol_factor < 1.0) {
            return bad("cg_tol_factor must lie in (0, 1)");
        }
        if self.max_cg_iters == Some(0) {
            return bad("max_cg_iters must be positive");
        }
        if !(self.armijo_sigma > 0.0 && self.armijo_sigma < 0.5) {
            return bad("armijo_sigma must lie in (0, 0.5)");
        }
        if !(self.backtrack_rho > 0.0 && self.backtrack_rho < 1.0) {
            return bad("backtrack_rho must lie in (0, 1)");
        }
        if !(self.jacobian_eps > 0.0) {
            return bad("jacobian_eps must be positive");
        }
        Ok(())
    }

    fn cg_cap(&self, m: usize) -> usize {
        self.max_cg_iters.unwrap_or(5 * m).max(1)
    }
}

/// Dual point `y` together with the spectral data of `G + A*y`.
///
/// Eigenvalues are sorted descending, so the index sets are contiguous:
/// `alpha` (positive), `beta` (zero), `gamma` (negative).
#[derive(Debug, Clone)]
pub struct DualState {
    pub y: DVector<f64>,
    pub decomposition: EigenDecomposition,
    pub alpha: Range<usize>,
    pub beta: Range<usize>,
    pub gamma: Range<usize>,
}

impl DualState {
    pub fn new(g: &SymmetricMatrix, op: &AffineOperator, y: DVector<f64>) -> Result<Self> {
        check_dims(g, op, &y)?;
        let mut shifted = g.clone();
        op.add_adjoint_into(&y, &mut shifted);
        let decomposition = eig_sym(&shifted)?;
        let lam = &decomposition.eigenvalues;
        let n = lam.len();
        let scale = lam.iter().fold(1.0f64, |acc, l| acc.max(l.abs()));
        let tol = ZERO_EIG_REL * scale;
        let n_pos = lam.iter().take_while(|&&l| l > tol).count();
        let n_nonneg = lam.iter().take_while(|&&l| l >= -tol).count();
        Ok(Self {
            y,
            decomposition,
            alpha: 0..n_pos,
            beta: n_pos..n_nonneg,
            gamma: n_nonneg..n,
        })
    }

    /// Count of strictly positive eigenvalues (may exceed `alpha.len()`).
    fn n_positive(&self) -> usize {
        self.decomposition
            .eigenvalues
            .iter()
            .take_while(|&&l| l > 0.0)
            .count()
    }

    /// `(G + A*y)_+`.
    pub fn projected(&self) -> SymmetricMatrix {
        self.decomposition.reconstruct_leading(self.n_positive(), |l| l)
    }

    pub fn theta(&self, op: &AffineOperator) -> f64 {
        let k = self.n_positive();
        let sq: f64 = self.decomposition.eigenvalues[..k].iter().map(|l| l * l).sum();
        0.5 * sq - op.rhs().dot(&self.y)
    }

    /// `A((G + A*y)_+) - b`, evaluated from the positive eigenpairs without
    /// forming the projected matrix.
    pub fn grad(&self, op: &AffineOperator) -> DVector<f64> {
        let k = self.n_positive();
        let p = &self.decomposition.eigenvectors;
        let lam = &self.decomposition.eigenvalues;
        let entry = |r: usize, c: usize| -> f64 { (0..k).map(|a| lam[a] * p[(r, a)] * p[(c, a)]).sum() };
        let vals = op.coeffs().iter().map(|a| {
            a.entries()
                .iter()
                .map(|&(r, c, v)| if r == c { v * entry(r, r) } else { 2.0 * v * entry(r, c) })
                .sum::<f64>()
        });
        DVector::from_iterator(op.m(), vals) - op.rhs()
    }
}

fn check_dims(g: &SymmetricMatrix, op: &AffineOperator, y: &DVector<f64>) -> Result<()> {
    if g.n() != op.n() {
        return Err(Error::DimensionMismatch {
            expected: op.n(),
            found: g.n(),
        });
    }
    if y.len() != op.m() {
        return Err(Error::DimensionMismatch {
            expected: op.m(),
            found: y.len(),
        });
    }
    Ok(())
}

/// Dual objective `theta(y)`.
pub fn theta(g: &SymmetricMatrix, op: &AffineOperator, y: &DVector<f64>) -> Result<f64> {
    Ok(DualState::new(g, op, y.clone())?.theta(op))
}

/// Dual gradient `A((G + A*y)_+) - b`.
pub fn grad_theta(g: &SymmetricMatrix, op: &AffineOperator, y: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(DualState::new(g, op, y.clone())?.grad(op))
}

/// `(V_y + eps I) h`.
///
/// `M_y` is one on the `(alpha, alpha)` and `(alpha, beta)` blocks,
/// `lambda_i / (lambda_i - lambda_j)` on `(alpha, gamma)`, and zero on the rest,
/// so only the columns indexed by `alpha` of `P^T (A*h) P` are ever needed and the
/// cost is `O(n^2 |alpha|)`.
pub fn vy_apply(state: &DualState, op: &AffineOperator, h: &DVector<f64>, eps: f64) -> Result<DVector<f64>> {
    if h.len() != op.m() {
        return Err(Error::DimensionMismatch {
            expected: op.m(),
            found: h.len(),
        });
    }
    if state.decomposition.n() != op.n() {
        return Err(Error::DimensionMismatch {
            expected: op.n(),
            found: state.decomposition.n(),
        });
    }
    Ok(vy_apply_unchecked(state, op, h, eps))
}

fn vy_apply_unchecked(state: &DualState, op: &AffineOperator, h: &DVector<f64>, eps: f64) -> DVector<f64> {
    let k = state.alpha.len();
    let mut out = h * eps;
    if k == 0 || op.m() == 0 {
        return out;
    }
    let n = op.n();
    let p = &state.decomposition.eigenvectors;
    let lam = &state.decomposition.eigenvalues;
    let pa = p.columns(0, k);

    // S P_alpha with S = A*h, accumulated straight from the sparse triples
    let mut spa = DMatrix::<f64>::zeros(n, k);
    for (a, &hi) in op.coeffs().iter().zip(h.iter()) {
        if hi == 0.0 {
            continue;
        }
        for &(r, c, v) in a.entries() {
            let w = hi * v;
            for col in 0..k {
                spa[(r, col)] += w * pa[(c, col)];
            }
            if r != c {
                for col in 0..k {
                    spa[(c, col)] += w * pa[(r, col)];
                }
            }
        }
    }

    // columns alpha of P^T S P, masked by M_y
    let mut hc = p.transpose() * &spa;
    for i in state.gamma.clone() {
        for a in 0..k {
            hc[(i, a)] *= lam[a] / (lam[a] - lam[i]);
        }
    }

    // P H P^T = Z' P_a^T + P_a Z'^T with Z' = P Hc - 1/2 P_a Hc[alpha, :]
    let mut z = p * &hc;
    let corr = pa * hc.rows(0, k);
    z -= corr * 0.5;

    for (i, a) in op.coeffs().iter().enumerate() {
        let mut acc = 0.0;
        for &(r, c, v) in a.entries() {
            let mut rij = 0.0;
            for col in 0..k {
                rij += z[(r, col)] * pa[(c, col)] + pa[(r, col)] * z[(c, col)];
            }
            acc += if r == c { v * rij } else { 2.0 * v * rij };
        }
        out[i] += acc;
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProxXStats {
    pub newton_iters: usize,
    pub cg_iters: usize,
    pub backtracks: usize,
    /// Newton steps whose CG solve hit the iteration cap before reaching
    /// the forcing tolerance (a symptom of redundant constraints).
    pub cg_stalls: usize,
    /// `||grad theta||` at the returned dual point.
    pub grad_norm: f64,
    /// Dual objective at the start and after every accepted Newton step.
    pub thetas: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ProxXSolution {
    pub x: SymmetricMatrix,
    pub y: DVector<f64>,
    pub stats: ProxXStats,
}

struct CgOutcome {
    x: DVector<f64>,
    iters: usize,
    converged: bool,
}

fn conjugate_gradient(
    apply: impl Fn(&DVector<f64>) -> DVector<f64>,
    rhs: &DVector<f64>,
    tol: f64,
    max_iters: usize,
) -> CgOutcome {
    let mut x = DVector::zeros(rhs.len());
    let mut r = rhs.clone();
    let mut rr = r.dot(&r);
    if rr.sqrt() <= tol {
        return CgOutcome { x, iters: 0, converged: true };
    }
    let mut p = r.clone();
    for it in 1..=max_iters {
        let ap = apply(&p);
        let pap = p.dot(&ap);
        if !(pap > 0.0) {
            return CgOutcome { x, iters: it, converged: false };
        }
        let step = rr / pap;
        x.axpy(step, &p, 1.0);
        r.axpy(-step, &ap, 1.0);
        let rr_next = r.dot(&r);
        if rr_next.sqrt() <= tol {
            return CgOutcome { x, iters: it, converged: true };
        }
        p *= rr_next / rr;
        p += &r;
        rr = rr_next;
    }
    CgOutcome {
        x,
        iters: max_iters,
        converged: false,
    }
}

/// Projects `g` onto `{A(X) = b, X psd}` by semismooth Newton on the dual.
pub fn project_onto_constraints(
    g: &SymmetricMatrix,
    op: &AffineOperator,
    params: &ProxXParams,
    y_warm: Option<&DVector<f64>>,
) -> Result<ProxXSolution> {
    params.validate()?;
    if !g.is_finite() {
        return Err(Error::NonFinite);
    }
    let m = op.m();
    let y0 = match y_warm {
        Some(y) if y.len() == m => y.clone(),
        Some(y) => {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: y.len(),
            })
        }
        None => DVector::zeros(m),
    };
    let mut state = DualState::new(g, op, y0)?;
    let mut stats = ProxXStats::default();
    if m == 0 {
        return Ok(ProxXSolution {
            x: state.projected(),
            y: state.y,
            stats,
        });
    }

    let cg_cap = params.cg_cap(m);
    let mut grad = state.grad(op);
    let mut gnorm = grad.norm();
    let mut theta_val = state.theta(op);
    let mut best = (gnorm, state.y.clone());
    stats.thetas.push(theta_val);

    loop {
        if gnorm <= params.newton_tol {
            stats.grad_norm = gnorm;
            return Ok(ProxXSolution {
                x: state.projected(),
                y: state.y,
                stats,
            });
        }
        if stats.newton_iters >= params.max_newton_iters {
            let best_state = DualState::new(g, op, best.1)?;
            stats.grad_norm = best.0;
            return Err(Error::NonConvergence {
                iterations: stats.newton_iters,
                grad_norm: best.0,
                best: Box::new(ProxXSolution {
                    x: best_state.projected(),
                    y: best_state.y,
                    stats,
                }),
            });
        }

        let eps = params.jacobian_eps * (1.0 + gnorm);
        let eta = params.cg_tol_factor.min(gnorm.sqrt());
        let cg = conjugate_gradient(
            |h| vy_apply_unchecked(&state, op, h, eps),
            &(-&grad),
            eta * gnorm,
            cg_cap,
        );
        stats.cg_iters += cg.iters;
        if !cg.converged {
            stats.cg_stalls += 1;
        }
        let mut dir = cg.x;
        let mut slope = grad.dot(&dir);
        if !(slope < 0.0) {
            dir = -&grad;
            slope = -gnorm * gnorm;
        }

        // Armijo: theta(y + t d) - theta(y) <= sigma t grad^T d, with a
        // round-off allowance once the decrease is below machine resolution
        let allowance = 1e-13 * theta_val.abs().max(1.0);
        let mut t = 1.0;
        let mut accepted = None;
        for bt in 0..=MAX_BACKTRACKS {
            let trial_y = &state.y + &dir * t;
            let trial = DualState::new(g, op, trial_y)?;
            let trial_theta = trial.theta(op);
            if trial_theta - theta_val <= params.armijo_sigma * t * slope + allowance {
                stats.backtracks += bt;
                accepted = Some((trial, trial_theta));
                break;
            }
            t *= params.backtrack_rho;
        }
        // With an empty positive eigenspace V_y vanishes and the model is
        // linear along d; keep doubling so an unbounded dual escapes quickly
        if let Some((trial, trial_theta)) = accepted.as_ref().filter(|_| t == 1.0 && state.alpha.is_empty()) {
            let (mut best_t, mut best_trial, mut best_theta) = (t, trial.clone(), *trial_theta);
            while best_trial.alpha.is_empty() && best_trial.y.norm() <= DUAL_DIVERGENCE_NORM {
                let t2 = 2.0 * best_t;
                let cand = DualState::new(g, op, &state.y + &dir * t2)?;
                let cand_theta = cand.theta(op);
                if cand_theta - theta_val > params.armijo_sigma * t2 * slope + allowance || cand_theta >= best_theta {
                    break;
                }
                (best_t, best_trial, best_theta) = (t2, cand, cand_theta);
            }
            accepted = Some((best_trial, best_theta));
        }
        let Some((next, next_theta)) = accepted else {
            return Err(Error::Stall {
                backtracks: MAX_BACKTRACKS,
                grad_norm: gnorm,
            });
        };

        stats.newton_iters += 1;
        log::trace!(
            "newton {}: |grad| {:.3e}, cg {}, step {:.3e}, theta {:.6e}",
            stats.newton_iters,
            gnorm,
            cg.iters,
            t,
            next_theta
        );
        state = next;
        theta_val = next_theta;
        stats.thetas.push(theta_val);
        let ynorm = state.y.norm();
        if !(ynorm <= DUAL_DIVERGENCE_NORM) {
            return Err(Error::Infeasible { dual_norm: ynorm });
        }
        grad = state.grad(op);
        gnorm = grad.norm();
        if gnorm < best.0 {
            best = (gnorm, state.y.clone());
        }
    }
}

/// Solves `min rho_x ||X||^2 + c_k ||X - X_tilde||^2` over `{A(X) = b, X psd}`,
/// which is the projection of `G = c_k / (c_k + rho_x) X_tilde`.
pub fn prox_x_solve(
    x_tilde: &SymmetricMatrix,
    op: &AffineOperator,
    c_k: f64,
    rho_x: f64,
    params: &ProxXParams,
    y_warm: Option<&DVector<f64>>,
) -> Result<ProxXSolution> {
    if !(c_k > 0.0) {
        return Err(Error::InvalidArgument(format!("prox weight c_k must be positive, got {c_k}")));
    }
    if !(rho_x >= 0.0) {
        return Err(Error::InvalidArgument(format!("rho_x must be nonnegative, got {rho_x}")));
    }
    if x_tilde.n() != op.n() {
        return Err(Error::DimensionMismatch {
            expected: op.n(),
            found: x_tilde.n(),
        });
    }
    let g = x_tilde.scaled(c_k / (c_k + rho_x));
    project_onto_constraints(&g, op, params, y_warm)
}
