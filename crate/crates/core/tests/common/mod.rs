//! Reference solvers for the integration tests. They use nalgebra directly
//! and share no code path with the crate's projection routines.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdcmpcc::{AffineOperator, SparseSym, SymmetricMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_dense_sym(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-scale..scale));
    (&a + a.transpose()) * 0.5
}

pub fn random_sym(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> SymmetricMatrix {
    SymmetricMatrix::from_matrix(random_dense_sym(rng, n, scale)).unwrap()
}

/// `B B^T` with `B` of size `n x k`.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0));
    &b * b.transpose()
}

/// Dense random constraints with right-hand side taken at a random
/// positive definite point, so the feasible set has nonempty interior.
pub fn random_feasible_op(rng: &mut ChaCha8Rng, n: usize, m: usize) -> (AffineOperator, DMatrix<f64>) {
    let x = random_psd(rng, n, n) + DMatrix::identity(n, n) * 0.1;
    let mut coeffs = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for _ in 0..m {
        let a = random_dense_sym(rng, n, 1.0);
        let mut entries = Vec::new();
        for i in 0..n {
            for j in i..n {
                entries.push((i, j, a[(i, j)]));
            }
        }
        rhs.push(a.component_mul(&x).sum());
        coeffs.push(SparseSym::new(n, entries).unwrap());
    }
    (AffineOperator::new(n, coeffs, rhs).unwrap(), x)
}

fn dense_coeffs(op: &AffineOperator) -> Vec<DMatrix<f64>> {
    let n = op.n();
    op.coeffs()
        .iter()
        .map(|a| {
            let mut d = DMatrix::zeros(n, n);
            for &(i, j, v) in a.entries() {
                d[(i, j)] = v;
                d[(j, i)] = v;
            }
            d
        })
        .collect()
}

pub fn eig_clamp(m: &DMatrix<f64>, lo: f64, hi: f64) -> DMatrix<f64> {
    let e = SymmetricEigen::new((m + m.transpose()) * 0.5);
    let d = e.eigenvalues.map(|v| v.clamp(lo, hi));
    &e.eigenvectors * DMatrix::from_diagonal(&d) * e.eigenvectors.transpose()
}

pub fn psd_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    eig_clamp(m, 0.0, f64::INFINITY)
}

/// Orthogonal projection onto the affine set `{A(X) = b}`.
pub struct AffineProjector {
    coeffs: Vec<DMatrix<f64>>,
    gram: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    rhs: DVector<f64>,
}

impl AffineProjector {
    pub fn new(op: &AffineOperator) -> Self {
        let coeffs = dense_coeffs(op);
        let m = coeffs.len();
        let gram = DMatrix::from_fn(m, m, |i, j| coeffs[i].component_mul(&coeffs[j]).sum());
        Self {
            gram: gram.cholesky().expect("independent constraints"),
            coeffs,
            rhs: op.rhs().clone(),
        }
    }

    pub fn residual(&self, x: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.coeffs.len(),
            self.coeffs.iter().zip(self.rhs.iter()).map(|(a, b)| a.component_mul(x).sum() - b),
        )
    }

    pub fn project(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let w = self.gram.solve(&self.residual(x));
        let mut out = x.clone();
        for (a, wi) in self.coeffs.iter().zip(w.iter()) {
            out -= a * *wi;
        }
        out
    }
}

/// Dykstra's alternating projections onto `{A(X) = b}` and the PSD cone.
/// Returns the limit and the number of sweeps.
pub fn dykstra_projection(g: &DMatrix<f64>, op: &AffineOperator, tol: f64, max_sweeps: usize) -> (DMatrix<f64>, usize) {
    let affine = AffineProjector::new(op);
    let n = g.nrows();
    let mut x = g.clone();
    let mut p = DMatrix::zeros(n, n);
    let mut q = DMatrix::zeros(n, n);
    for sweep in 1..=max_sweeps {
        let y = affine.project(&(&x + &p));
        p = &x + &p - &y;
        let next = psd_part(&(&y + &q));
        q = &y + &q - &next;
        let change = (&next - &x).norm();
        x = next;
        if change <= tol && affine.residual(&x).amax() <= tol {
            return (x, sweep);
        }
    }
    (x, max_sweeps)
}

/// Projected gradient on `-trace(U) + d/2 ||U - U_tilde||^2` over
/// `0 <= U <= I`, with the box projection itself done by Dykstra between
/// the two semidefinite constraints.
pub fn box_prox_oracle(u_tilde: &DMatrix<f64>, d: f64, tol: f64) -> DMatrix<f64> {
    let n = u_tilde.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let project_box = |z: &DMatrix<f64>| {
        let mut x = z.clone();
        let mut p = DMatrix::zeros(n, n);
        let mut q = DMatrix::zeros(n, n);
        for _ in 0..100_000 {
            let y = psd_part(&(&x + &p));
            p = &x + &p - &y;
            let next = &eye - psd_part(&(&eye - (&y + &q)));
            q = &y + &q - &next;
            let change = (&next - &x).norm();
            x = next;
            if change <= tol {
                break;
            }
        }
        x
    };
    let step = 1.0 / d;
    let mut u = DMatrix::zeros(n, n);
    for _ in 0..1000 {
        let grad = -&eye + (&u - u_tilde) * d;
        let next = project_box(&(&u - grad * step));
        let change = (&next - &u).norm();
        u = next;
        if change <= tol {
            break;
        }
    }
    u
}

pub fn frob_dist(a: &SymmetricMatrix, b: &DMatrix<f64>) -> f64 {
    (a.as_matrix() - b).norm()
}
