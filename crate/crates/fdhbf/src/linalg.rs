//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{dims, Error, Result};
use crate::scalar::Real;

pub type CMat<T> = DMatrix<Complex<T>>;

/// `(A + Aᴴ) / 2`.
pub fn hermitian_part<T: Real>(a: &CMat<T>) -> CMat<T> {
    (a + a.adjoint()).unscale(T::lit(2.0))
}

/// `log2 det(A)` for Hermitian positive-definite `A` via Cholesky.
pub fn log2_det_hpd<T: Real>(a: &CMat<T>) -> Result<T> {
    let chol = hermitian_part(a)
        .cholesky()
        .ok_or(Error::Singular("log-det"))?;
    let l = chol.l_dirty();
    let mut acc = T::zero();
    for i in 0..l.nrows() {
        acc += l[(i, i)].re.ln();
    }
    Ok(acc * T::lit(2.0) / T::lit(std::f64::consts::LN_2))
}

/// Solves `A X = B` for Hermitian positive-definite `A`.
pub fn solve_hpd<T: Real>(a: &CMat<T>, b: &CMat<T>) -> Result<CMat<T>> {
    let chol = hermitian_part(a)
        .cholesky()
        .ok_or(Error::Singular("Hermitian solve"))?;
    Ok(chol.solve(b))
}

/// Thin SVD `A = U diag(s) Vᴴ` with nonincreasing singular values and a
/// canonical phase: the largest-magnitude entry of each right singular
/// vector is real-positive, and the paired left vector is rotated to match.
#[derive(Debug, Clone)]
pub struct Svd<T: Real> {
    pub u: CMat<T>,
    pub s: DVector<T>,
    pub v: CMat<T>,
}

impl<T: Real> Svd<T> {
    pub fn new(a: &CMat<T>) -> Result<Self> {
        let k = a.nrows().min(a.ncols());
        if k == 0 {
            return Err(Error::ZeroMatrix("SVD of empty matrix"));
        }
        let svd = a.clone().svd(true, true);
        let u0 = svd.u.ok_or(Error::Singular("SVD did not converge"))?;
        let vt0 = svd.v_t.ok_or(Error::Singular("SVD did not converge"))?;
        let s0 = svd.singular_values;

        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| {
            s0[j]
                .partial_cmp(&s0[i])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(i.cmp(&j))
        });

        let mut u = CMat::zeros(a.nrows(), k);
        let mut v = CMat::zeros(a.ncols(), k);
        let mut s = DVector::zeros(k);
        for (dst, &src) in order.iter().enumerate() {
            s[dst] = s0[src];
            v.column_mut(dst).copy_from(&vt0.row(src).adjoint());
            u.column_mut(dst).copy_from(&u0.column(src));
        }
        Ok(Self::canonical(u, s, v))
    }

    /// Thin SVD of `A B` without forming the product: with `A = Q_a R_a`
    /// and `Bᴴ = Q_b R_b`, only the small core `R_a R_bᴴ` is decomposed.
    /// Cheap when the inner dimension is much smaller than the outer ones.
    pub fn of_product(a: &CMat<T>, b: &CMat<T>) -> Result<Self> {
        if a.ncols() != b.nrows() {
            return Err(Error::DimensionMismatch {
                context: "SVD of product",
                expected: format!("inner dimension {}", a.ncols()),
                found: dims(b.nrows(), b.ncols()),
            });
        }
        if a.ncols() > a.nrows() || a.ncols() > b.ncols() {
            return Self::new(&(a * b));
        }
        let qa = a.clone().qr();
        let qb = b.adjoint().qr();
        let core = qa.r() * qb.r().adjoint();
        let inner = Self::new(&core)?;
        Ok(Self::canonical(qa.q() * inner.u, inner.s, qb.q() * inner.v))
    }

    /// Rotates each singular pair so the largest-magnitude entry of the
    /// right vector is real-positive.
    fn canonical(mut u: CMat<T>, s: DVector<T>, mut v: CMat<T>) -> Self {
        for j in 0..v.ncols() {
            let (mut best, mut best_mag) = (0, T::zero());
            for (i, z) in v.column(j).iter().enumerate() {
                let m = z.norm_sqr().sqrt();
                if m > best_mag {
                    best = i;
                    best_mag = m;
                }
            }
            if best_mag > T::zero() {
                let phase = v[(best, j)].conj().unscale(best_mag);
                for z in v.column_mut(j).iter_mut() {
                    *z *= phase;
                }
                for z in u.column_mut(j).iter_mut() {
                    *z *= phase;
                }
            }
        }
        Self { u, s, v }
    }

    /// Numerical rank with relative tolerance `1e-12 * s_max`.
    pub fn rank(&self) -> usize {
        let smax = self.s[0];
        if smax <= T::zero() {
            return 0;
        }
        let tol = smax * T::lit(1e-12);
        self.s.iter().filter(|&&x| x > tol).count()
    }
}

/// Minimum-norm least-squares pseudo-inverse via the canonical SVD.
pub fn pinv<T: Real>(a: &CMat<T>) -> Result<CMat<T>> {
    let svd = Svd::new(a)?;
    let r = svd.rank();
    let mut out = CMat::zeros(a.ncols(), a.nrows());
    for i in 0..r {
        let vi = svd.v.column(i);
        let ui = svd.u.column(i);
        out += (vi * ui.adjoint()).unscale(svd.s[i]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_cmat(r: usize, c: usize, seed: u64) -> CMat<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(r, c, |_, _| {
            Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn svd_reconstructs_sorted_canonical() {
        let a = random_cmat(7, 4, 1);
        let svd = Svd::new(&a).unwrap();
        for i in 1..4 {
            assert!(svd.s[i - 1] >= svd.s[i]);
        }
        let s = DMatrix::from_diagonal(&svd.s.map(|x| Complex::new(x, 0.0)));
        let rec = &svd.u * s * svd.v.adjoint();
        assert!((rec - &a).norm() < 1e-12);
        for j in 0..4 {
            let col = svd.v.column(j);
            let best = col.iter().map(|z| z.norm_sqr().sqrt()).fold(0.0, f64::max);
            let z = col
                .iter()
                .find(|z| (z.norm_sqr().sqrt() - best).abs() < 1e-15)
                .unwrap();
            assert!(z.im.abs() < 1e-14 && z.re > 0.0);
        }
        assert_eq!(svd.rank(), 4);
    }

    #[test]
    fn product_svd_matches_dense() {
        let a = random_cmat(30, 4, 11);
        let b = random_cmat(4, 25, 12);
        let p = &a * &b;
        let fast = Svd::of_product(&a, &b).unwrap();
        let dense = Svd::new(&p).unwrap();
        assert_eq!(fast.s.len(), 4);
        for i in 0..4 {
            assert_relative_eq!(fast.s[i], dense.s[i], max_relative = 1e-12);
            // same canonical phase, so the vectors agree entrywise
            assert!((fast.v.column(i) - dense.v.column(i)).norm() < 1e-9);
            assert!((fast.u.column(i) - dense.u.column(i)).norm() < 1e-9);
        }
        let s = DMatrix::from_diagonal(&fast.s.map(|x| Complex::new(x, 0.0)));
        assert!((&fast.u * s * fast.v.adjoint() - &p).norm() < 1e-12 * p.norm());
        // wide inner dimension falls back to the dense path
        assert_eq!(
            Svd::of_product(&random_cmat(3, 5, 13), &random_cmat(5, 6, 14))
                .unwrap()
                .s
                .len(),
            3
        );
    }

    #[test]
    fn log_det_matches_eigen() {
        let b = random_cmat(5, 5, 2);
        let a = &b * b.adjoint() + CMat::identity(5, 5);
        let eig = hermitian_part(&a).symmetric_eigen();
        let expect: f64 = eig.eigenvalues.iter().map(|x| x.log2()).sum();
        assert_relative_eq!(log2_det_hpd(&a).unwrap(), expect, epsilon = 1e-12);
        assert!(log2_det_hpd(&CMat::<f64>::zeros(3, 3)).is_err());
    }

    #[test]
    fn pinv_of_rank_deficient() {
        let a = random_cmat(6, 2, 3);
        let b = &a * random_cmat(2, 5, 4);
        let p = pinv(&b).unwrap();
        assert!((&b * &p * &b - &b).norm() < 1e-10);
    }

    proptest! {
        #[test]
        fn hpd_solve_is_inverse(seed in 0u64..500, n in 1usize..7) {
            let b = random_cmat(n, n, seed);
            let a = &b * b.adjoint() + CMat::identity(n, n).scale(0.5);
            let rhs = random_cmat(n, 2, seed + 1);
            let x = solve_hpd(&a, &rhs).unwrap();
            prop_assert!((&a * x - rhs).norm() < 1e-10);
        }
    }
}
