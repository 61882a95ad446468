//! Closed-form U-update.
//!
//! `argmin_U  n - <I, U> + d/2 ||U - U_tilde||^2  s.t.  0 <= U <= I`
//! is the projection of `U_tilde + I/d` onto the spectral box, i.e. its
//! eigenvalues clamped into `[0, 1]`.

use crate::error::{Error, Result};
use crate::symmat::{clamp_spectrum, SymmetricMatrix};

pub fn prox_u_solve(u_tilde: &SymmetricMatrix, d_k: f64) -> Result<SymmetricMatrix> {
    if !(d_k > 0.0) {
        return Err(Error::InvalidArgument(format!("prox weight d_k must be positive, got {d_k}")));
    }
    clamp_spectrum(&u_tilde.shifted(1.0 / d_k), 0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmat::eig_sym;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let u = prox_u_solve(&SymmetricMatrix::zeros(3), 1.0).unwrap();
        assert!((&u - &SymmetricMatrix::identity(3)).frobenius_norm() < 1e-14);

        let u = prox_u_solve(&SymmetricMatrix::identity(4).scaled(-2.0), 1.0).unwrap();
        assert!(u.frobenius_norm() < 1e-14);

        let u = prox_u_solve(&SymmetricMatrix::from_diagonal(&[0.2, 0.9]), 10.0).unwrap();
        assert!((&u - &SymmetricMatrix::from_diagonal(&[0.3, 1.0])).frobenius_norm() < 1e-14);
    }

    #[test]
    fn rejects_nonpositive_weight() {
        let z = SymmetricMatrix::zeros(2);
        assert!(prox_u_solve(&z, 0.0).is_err());
        assert!(prox_u_solve(&z, -1.0).is_err());
    }

    fn sym4() -> impl Strategy<Value = SymmetricMatrix> {
        prop::collection::vec(-2.0f64..2.0, 16)
            .prop_map(|v| SymmetricMatrix::from_matrix(DMatrix::from_vec(4, 4, v)).unwrap())
    }

    proptest! {
        #[test]
        fn output_in_box_with_predicted_trace(ut in sym4(), d in 0.1f64..20.0) {
            let u = prox_u_solve(&ut, d).unwrap();
            let e = eig_sym(&u).unwrap();
            prop_assert!(e.eigenvalues[0] <= 1.0 + 1e-10);
            prop_assert!(*e.eigenvalues.last().unwrap() >= -1e-10);
            let predicted: f64 = eig_sym(&ut).unwrap().eigenvalues.iter()
                .map(|s| (s + 1.0 / d).clamp(0.0, 1.0)).sum();
            prop_assert!((u.trace() - predicted).abs() <= 1e-10);
        }

        #[test]
        fn complement_form_agrees(ut in sym4(), d in 0.1f64..20.0) {
            let target = ut.shifted(1.0 / d);
            let e = eig_sym(&target).unwrap();
            // U = I - sum_i (1 - sigma_i) v_i v_i^T
            let deficit = e.reconstruct_with(|s| 1.0 - s.clamp(0.0, 1.0));
            let complement = &SymmetricMatrix::identity(4) - &deficit;
            let u = prox_u_solve(&ut, d).unwrap();
            prop_assert!((&u - &complement).frobenius_norm() <= 1e-12);
        }
    }
}
