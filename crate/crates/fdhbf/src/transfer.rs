//! Transfer block: a phase-shifter-pair matrix between the baseband and the
//! RF stage that cuts the RF-chain count down to the stream count.
//!
//! Each entry of `T` is the sum of two unit phasors, so `|T(m,n)| ∈ [0, 2]`.
//! Choosing `T = (2 / max|B|) B` puts every entry in range and makes the
//! reduced baseband matrix reconstruct `B` exactly.

use crate::error::{Error, Result};
use crate::linalg::{pinv, CMat};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct TransferDecomposition<T: Real> {
    pub t: CMat<T>,
    /// `S x S`.
    pub b_red: CMat<T>,
}

fn scaled_copy<T: Real>(b: &CMat<T>) -> Result<CMat<T>> {
    let max = b.iter().fold(T::zero(), |m, z| m.max(z.norm_sqr().sqrt()));
    if max <= T::zero() {
        return Err(Error::ZeroMatrix("transfer block input"));
    }
    Ok(b.scale(T::lit(2.0) / max))
}

/// Least-squares `X` minimizing `‖A X - B‖` for full-column-rank `A`, via
/// QR; `None` when `A` is rank deficient.
fn qr_least_squares<T: Real>(a: &CMat<T>, b: &CMat<T>) -> Option<CMat<T>> {
    if a.nrows() < a.ncols() {
        return None;
    }
    let qr = a.clone().qr();
    let (q, r) = (qr.q(), qr.r());
    let tol = T::lit(1e-12)
        * r.diagonal()
            .iter()
            .fold(T::zero(), |m, z| m.max(z.norm_sqr().sqrt()));
    if r.diagonal().iter().any(|z| z.norm_sqr().sqrt() <= tol) {
        return None;
    }
    r.solve_upper_triangular(&(q.adjoint() * b))
}

/// `B_t = T B_red` with `B_red = (TᴴT)^{-1} Tᴴ B_t`.
pub fn decompose_precoder<T: Real>(b_t: &CMat<T>) -> Result<TransferDecomposition<T>> {
    let t = scaled_copy(b_t)?;
    let b_red = match qr_least_squares(&t, b_t) {
        Some(x) => x,
        None => pinv(&t)? * b_t,
    };
    Ok(TransferDecomposition { t, b_red })
}

/// `B_r = B_red T` with `B_red = B_r Tᴴ (T Tᴴ)^{-1}`.
pub fn decompose_combiner<T: Real>(b_r: &CMat<T>) -> Result<TransferDecomposition<T>> {
    let t = scaled_copy(b_r)?;
    // Tᴴ B_redᴴ = B_rᴴ in the least-squares sense
    let b_red = match qr_least_squares(&t.adjoint(), &b_r.adjoint()) {
        Some(x) => x.adjoint(),
        None => b_r * pinv(&t)?,
    };
    Ok(TransferDecomposition { t, b_red })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::solve_hpd;
    use num_complex::Complex;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cmat(r: usize, c: usize, seed: u64) -> CMat<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(r, c, |_, _| {
            Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn closed_form_example() {
        let b = CMat::from_column_slice(2, 1, &[Complex::new(1.0, 0.0), Complex::new(0.0, 0.5)]);
        let d = decompose_precoder(&b).unwrap();
        assert!((d.t[(0, 0)] - Complex::new(2.0, 0.0)).norm() < 1e-15);
        assert!((d.t[(1, 0)] - Complex::new(0.0, 1.0)).norm() < 1e-15);
        assert!((d.b_red[(0, 0)] - Complex::new(0.5, 0.0)).norm() < 1e-15);
        assert!((&d.t * &d.b_red - &b).norm() < 1e-15);
    }

    #[test]
    fn equal_modulus_gives_full_pairs() {
        let b = CMat::from_fn(4, 2, |i, j| Complex::from_polar(0.3, (i * 3 + j) as f64));
        let d = decompose_precoder(&b).unwrap();
        assert!(d
            .t
            .iter()
            .all(|z| (z.norm_sqr().sqrt() - 2.0).abs() < 1e-12));
    }

    #[test]
    fn matches_normal_equations() {
        let b = random_cmat(6, 3, 9);
        let d = decompose_precoder(&b).unwrap();
        let th = d.t.adjoint();
        let x = solve_hpd(&(&th * &d.t), &(&th * &b)).unwrap();
        assert!((x - &d.b_red).norm() < 1e-10);
    }

    #[test]
    fn zero_input_rejected() {
        assert!(decompose_precoder(&CMat::<f64>::zeros(3, 2)).is_err());
        assert!(decompose_combiner(&CMat::<f64>::zeros(1, 4)).is_err());
    }

    #[test]
    fn row_vector_combiner() {
        let b = CMat::from_row_slice(
            1,
            3,
            &[
                Complex::new(0.5, 0.5),
                Complex::new(-1.0, 0.0),
                Complex::new(0.0, 0.25),
            ],
        );
        let d = decompose_combiner(&b).unwrap();
        assert_eq!(d.b_red.shape(), (1, 1));
        assert!((&d.b_red * &d.t - &b).norm() < 1e-14);
        assert!((d.t[(0, 1)].norm() - 2.0f64).abs() < 1e-14);
    }

    #[test]
    fn rank_deficient_uses_fallback() {
        let col = random_cmat(5, 1, 3);
        let b = CMat::from_fn(5, 2, |i, _| col[i]);
        let d = decompose_precoder(&b).unwrap();
        assert!((&d.t * &d.b_red - &b).norm() < 1e-10);
    }

    proptest! {
        #[test]
        fn reconstruction(seed in 0u64..1000, n in 1usize..12, s in 1usize..5) {
            prop_assume!(s <= n);
            let b = random_cmat(n, s, seed);
            let p = decompose_precoder(&b).unwrap();
            prop_assert!((&p.t * &p.b_red - &b).norm() < 1e-10);
            prop_assert!(p.t.iter().all(|z| z.norm_sqr().sqrt() <= 2.0 + 1e-12));
            let r = b.adjoint();
            let c = decompose_combiner(&r).unwrap();
            prop_assert!((&c.b_red * &c.t - &r).norm() < 1e-10);
            prop_assert!(c.t.iter().all(|z| z.norm_sqr().sqrt() <= 2.0 + 1e-12));
        }
    }
}
