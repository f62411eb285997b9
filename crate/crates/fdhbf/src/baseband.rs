//! Baseband stage: SVD precoding with water-filling, SVD combining, the
//! angular-support SI covariance estimate and the semi-blind MMSE combiner.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;

use crate::array::{Side, UraGeometry};
use crate::error::{dims, Error, Result};
use crate::linalg::{solve_hpd, CMat, Svd};
use crate::scalar::Real;
use crate::support::AngularSupport;

/// `F_r H F_t`.
pub fn effective_channel<T: Real>(f_r: &CMat<T>, h: &CMat<T>, f_t: &CMat<T>) -> Result<CMat<T>> {
    if f_r.ncols() != h.nrows() || h.ncols() != f_t.nrows() {
        return Err(Error::DimensionMismatch {
            context: "effective channel",
            expected: format!(
                "{}x{} · {}x{}",
                f_r.ncols(),
                f_t.nrows(),
                f_r.ncols(),
                f_t.nrows()
            ),
            found: dims(h.nrows(), h.ncols()),
        });
    }
    Ok(f_r * (h * f_t))
}

/// Water-filling over the given singular values:
/// `P_n = (μ - noise / (p_t σ_n²))⁺` with `Σ P_n = p_t`, μ by bisection.
pub fn waterfill<T: Real>(singular_values: &[T], p_t: T, noise_var: T) -> Result<Vec<T>> {
    if singular_values.is_empty() {
        return Err(Error::InvalidArgument(
            "water-filling needs at least one value".into(),
        ));
    }
    if singular_values.iter().all(|s| *s <= T::zero()) {
        return Err(Error::ZeroSingularValues);
    }
    let inf = T::max_value().unwrap();
    let floors: Vec<T> = singular_values
        .iter()
        .map(|&s| {
            if s > T::zero() {
                noise_var / (p_t * s * s)
            } else {
                inf
            }
        })
        .collect();
    let total = |mu: T| {
        floors
            .iter()
            .fold(T::zero(), |acc, &f| acc + (mu - f).max(T::zero()))
    };

    let base = floors.iter().copied().fold(inf, T::min);
    let (mut lo, mut hi) = (base, base + p_t);
    let tol = T::lit(1e-12) * p_t;
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        let got = total(mid);
        if (got - p_t).abs() <= tol {
            lo = mid;
            hi = mid;
            break;
        }
        if got > p_t {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mu = (lo + hi) * T::lit(0.5);
    let mut alloc: Vec<T> = floors.iter().map(|&f| (mu - f).max(T::zero())).collect();
    // remove the last bisection residue from the active streams
    let active = alloc.iter().filter(|p| **p > T::zero()).count();
    if active > 0 {
        let fix = (p_t - alloc.iter().copied().fold(T::zero(), |a, b| a + b))
            / T::from_usize_lossy(active);
        for p in alloc.iter_mut().filter(|p| **p > T::zero()) {
            *p += fix;
        }
    }
    Ok(alloc)
}

#[derive(Debug, Clone)]
pub struct BbPrecoder<T: Real> {
    /// `Nt x S`.
    pub b_t: CMat<T>,
    pub allocation: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombinerMethod {
    Svd,
    Smmse,
}

#[derive(Debug, Clone)]
pub struct BbCombiner<T: Real> {
    /// `S x Nr`.
    pub b_r: CMat<T>,
    pub method: CombinerMethod,
}

/// SVD precoder `V₁ P^{1/2}` and combiner `U₁ᴴ` from one factorization.
pub fn svd_design<T: Real>(
    eff: &CMat<T>,
    p_t: T,
    noise_var: T,
    streams: usize,
) -> Result<(BbPrecoder<T>, BbCombiner<T>)> {
    svd_design_from(&Svd::new(eff)?, p_t, noise_var, streams)
}

/// [`svd_design`] on an existing factorization of the effective channel.
pub fn svd_design_from<T: Real>(
    svd: &Svd<T>,
    p_t: T,
    noise_var: T,
    streams: usize,
) -> Result<(BbPrecoder<T>, BbCombiner<T>)> {
    let rank = svd.rank();
    if streams == 0 || rank < streams {
        return Err(Error::RankDeficient { rank, streams });
    }
    let sv: Vec<T> = svd.s.iter().take(streams).copied().collect();
    let alloc = waterfill(&sv, p_t, noise_var)?;
    let mut b_t = svd.v.columns(0, streams).into_owned();
    for (j, p) in alloc.iter().enumerate() {
        let w = p.sqrt();
        for z in b_t.column_mut(j).iter_mut() {
            *z = z.scale(w);
        }
    }
    let b_r = svd.u.columns(0, streams).adjoint();
    Ok((
        BbPrecoder {
            b_t,
            allocation: alloc,
        },
        BbCombiner {
            b_r,
            method: CombinerMethod::Svd,
        },
    ))
}

pub fn svd_precoder<T: Real>(
    eff: &CMat<T>,
    p_t: T,
    noise_var: T,
    streams: usize,
) -> Result<BbPrecoder<T>> {
    svd_design(eff, p_t, noise_var, streams).map(|d| d.0)
}

pub fn svd_combiner<T: Real>(eff: &CMat<T>, streams: usize) -> Result<BbCombiner<T>> {
    // power allocation does not influence U₁
    svd_design(eff, T::one(), T::one(), streams).map(|d| d.1)
}

#[derive(Debug, Clone)]
pub struct SiCovarianceEstimate<T: Real> {
    /// `Nr x Nr` Hermitian PSD.
    pub w_hat: CMat<T>,
    pub synthetic_path_count: usize,
    pub tau_hat: T,
}

/// Semi-blind SI covariance: synthetic phase matrices drawn inside the SI
/// supports replace the unknown SI channel, with every path gain replaced
/// by `τ̂^{-η} / √L̂`:
/// `Ŵ = K Kᴴ / (τ̂^{2η} L̂)`, `K = F_r Φ̂_r Φ̂_t F_t B_t`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_si_covariance<T: Real, R: Rng + ?Sized>(
    f_t: &CMat<T>,
    f_r: &CMat<T>,
    b_t: &CMat<T>,
    tx_geom: &UraGeometry<T>,
    rx_geom: &UraGeometry<T>,
    si_aod: &AngularSupport<T>,
    si_aoa: &AngularSupport<T>,
    synthetic_path_count: usize,
    tau_hat: T,
    eta: T,
    rng: &mut R,
) -> Result<SiCovarianceEstimate<T>> {
    if si_aod.is_empty() || si_aoa.is_empty() {
        return Err(Error::EmptySupport);
    }
    if synthetic_path_count == 0 {
        return Err(Error::NoPaths);
    }
    let mut dep = Vec::with_capacity(synthetic_path_count);
    let mut arr = Vec::with_capacity(synthetic_path_count);
    for _ in 0..synthetic_path_count {
        dep.push(si_aod.sample(rng).ok_or(Error::EmptySupport)?);
        arr.push(si_aoa.sample(rng).ok_or(Error::EmptySupport)?);
    }
    let phi_t = tx_geom.phase_matrix(&dep, Side::Transmit)?;
    let phi_r = rx_geom.phase_matrix(&arr, Side::Receive)?;
    let k = (f_r * phi_r) * ((phi_t * f_t) * b_t);
    let scale = tau_hat.powf(T::lit(2.0) * eta) * T::from_usize_lossy(synthetic_path_count);
    let w_hat = (&k * k.adjoint()).unscale(scale);
    Ok(SiCovarianceEstimate {
        w_hat: crate::linalg::hermitian_part(&w_hat),
        synthetic_path_count,
        tau_hat,
    })
}

/// `ℋ B_t B_tᴴ ℋᴴ + Ŵ + σ² I`.
fn mmse_inner<T: Real>(eff: &CMat<T>, b_t: &CMat<T>, w_hat: &CMat<T>, noise_var: T) -> CMat<T> {
    let hb = eff * b_t;
    let n = eff.nrows();
    &hb * hb.adjoint() + w_hat + DMatrix::<Complex<T>>::identity(n, n).scale(noise_var)
}

/// `B_r = B_tᴴ ℋᴴ (ℋ B_t B_tᴴ ℋᴴ + Ŵ + σ² I)^{-1}`.
pub fn smmse_combiner<T: Real>(
    eff: &CMat<T>,
    b_t: &CMat<T>,
    w_hat: &CMat<T>,
    noise_var: T,
) -> Result<BbCombiner<T>> {
    if w_hat.shape() != (eff.nrows(), eff.nrows()) {
        return Err(Error::DimensionMismatch {
            context: "S-MMSE covariance",
            expected: dims(eff.nrows(), eff.nrows()),
            found: dims(w_hat.nrows(), w_hat.ncols()),
        });
    }
    let a = mmse_inner(eff, b_t, w_hat, noise_var);
    let x = solve_hpd(&a, &(eff * b_t)).map_err(|_| Error::Singular("S-MMSE inner matrix"))?;
    Ok(BbCombiner {
        b_r: x.adjoint(),
        method: CombinerMethod::Smmse,
    })
}

/// Approximate MSE `tr(B_r A B_rᴴ - B_r ℋ B_t - B_tᴴ ℋᴴ B_rᴴ + I)`.
pub fn mse_approx<T: Real>(
    eff: &CMat<T>,
    b_t: &CMat<T>,
    b_r: &CMat<T>,
    w_hat: &CMat<T>,
    noise_var: T,
) -> T {
    let a = mmse_inner(eff, b_t, w_hat, noise_var);
    let cross = b_r * eff * b_t;
    let quad = b_r * a * b_r.adjoint();
    quad.trace().re - cross.trace().re * T::lit(2.0) + T::from_usize_lossy(b_t.ncols())
}

/// Each row divided by its 2-norm.
pub fn normalize_combiner_rows<T: Real>(b_r: &CMat<T>) -> Result<CMat<T>> {
    let mut out = b_r.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        let n = row.norm();
        if n <= T::zero() {
            return Err(Error::ZeroRow(i));
        }
        row.unscale_mut(n);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_cmat(r: usize, c: usize, seed: u64) -> CMat<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(r, c, |_, _| {
            Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn naive_triple(a: &CMat<f64>, b: &CMat<f64>, c: &CMat<f64>) -> CMat<f64> {
        let mut out = CMat::zeros(a.nrows(), c.ncols());
        for i in 0..a.nrows() {
            for j in 0..c.ncols() {
                for k in 0..a.ncols() {
                    for l in 0..b.ncols() {
                        out[(i, j)] += a[(i, k)] * b[(k, l)] * c[(l, j)];
                    }
                }
            }
        }
        out
    }

    #[test]
    fn effective_channel_cases() {
        let h = random_cmat(8, 8, 1);
        let id = CMat::identity(8, 8);
        assert_eq!(effective_channel(&id, &h, &id).unwrap(), h);
        assert_eq!(
            effective_channel(&id, &CMat::zeros(8, 8), &id)
                .unwrap()
                .norm(),
            0.0
        );
        let (fr, ft) = (random_cmat(8, 8, 2), random_cmat(8, 8, 3));
        let naive = naive_triple(&fr, &h, &ft);
        assert!((effective_channel(&fr, &h, &ft).unwrap() - &naive).norm() < 1e-12 * naive.norm());
        assert!(effective_channel(&random_cmat(3, 7, 4), &h, &ft).is_err());
    }

    #[test]
    fn waterfill_examples() {
        let eq = waterfill(&[2.0, 2.0, 2.0], 3.0, 0.5).unwrap();
        for p in eq {
            assert_relative_eq!(p, 1.0, epsilon = 1e-12);
        }
        assert_relative_eq!(
            waterfill(&[0.3], 7.0, 1.0).unwrap()[0],
            7.0,
            epsilon = 1e-12
        );
        let p = waterfill(&[1.0, 0.1f64.sqrt()], 1.0, 0.1).unwrap();
        assert_relative_eq!(p[0], 0.95, epsilon = 1e-9);
        assert_relative_eq!(p[1], 0.05, epsilon = 1e-9);
        assert_eq!(
            waterfill(&[0.0, 0.0], 1.0, 1.0),
            Err(Error::ZeroSingularValues)
        );
    }

    /// Grid search over μ: the level whose allocation sums closest to p_t.
    fn grid_oracle(sv: &[f64], p_t: f64, noise: f64) -> Vec<f64> {
        let floors: Vec<f64> = sv.iter().map(|s| noise / (p_t * s * s)).collect();
        let lo = floors.iter().cloned().fold(f64::INFINITY, f64::min);
        let sum = |mu: f64| floors.iter().map(|f| (mu - f).max(0.0)).sum::<f64>();
        let (mut a, mut b) = (lo, lo + p_t);
        // successive grid refinement, 101 points per level
        for _ in 0..12 {
            let pts: Vec<f64> = (0..=100).map(|i| a + (b - a) * i as f64 / 100.0).collect();
            let i = pts
                .iter()
                .position(|&m| sum(m) >= p_t)
                .unwrap_or(100)
                .max(1);
            a = pts[i - 1];
            b = pts[i];
        }
        let mu = 0.5 * (a + b);
        floors.iter().map(|f| (mu - f).max(0.0)).collect()
    }

    #[test]
    fn waterfill_vs_grid_oracle() {
        let p = waterfill(&[1.0, 0.1f64.sqrt()], 1.0, 0.1).unwrap();
        let q = grid_oracle(&[1.0, 0.1f64.sqrt()], 1.0, 0.1);
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn waterfill_matches_grid(mut sv in proptest::collection::vec(0.01f64..10.0, 1..6), p_t in 0.1f64..10.0, noise in 0.01f64..5.0) {
            sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let p = waterfill(&sv, p_t, noise).unwrap();
            let q = grid_oracle(&sv, p_t, noise);
            prop_assert!((p.iter().sum::<f64>() - p_t).abs() < 1e-9 * p_t.max(1.0));
            for i in 0..sv.len() {
                prop_assert!((p[i] - q[i]).abs() < 1e-9 * p_t.max(1.0));
                if i > 0 { prop_assert!(p[i] <= p[i - 1] + 1e-12); }
            }
        }

        #[test]
        fn svd_design_properties(seed in 0u64..1000, s in 1usize..5) {
            let eff = random_cmat(6, 5, seed);
            let (pre, comb) = svd_design(&eff, 2.0, 0.1, s).unwrap();
            let bt = &pre.b_t;
            prop_assert!(((bt * bt.adjoint()).trace().re - 2.0).abs() < 1e-9);
            let d = &comb.b_r * &eff * bt;
            let sv = Svd::new(&eff).unwrap();
            for k in 0..s {
                for q in 0..s {
                    if k != q {
                        prop_assert!(d[(k, q)].norm() < 1e-10);
                    }
                }
                prop_assert!((d[(k, k)].re - sv.s[k] * pre.allocation[k].sqrt()).abs() < 1e-10);
            }
            let rr = &comb.b_r * comb.b_r.adjoint();
            prop_assert!((rr - CMat::identity(s, s)).norm() < 1e-10);
        }

        #[test]
        fn smmse_is_stationary_and_dominates(seed in 0u64..500) {
            let eff = random_cmat(6, 4, seed);
            let (pre, svd_comb) = svd_design(&eff, 1.0, 0.2, 3).unwrap();
            let g = random_cmat(6, 6, seed + 7);
            let w = (&g * g.adjoint()).scale(0.1);
            let sm = smmse_combiner(&eff, &pre.b_t, &w, 0.2).unwrap();
            let a = mmse_inner(&eff, &pre.b_t, &w, 0.2);
            let grad = (&sm.b_r * a - pre.b_t.adjoint() * eff.adjoint()) * Complex::new(2.0, 0.0);
            prop_assert!(grad.norm() < 1e-8);
            let m1 = mse_approx(&eff, &pre.b_t, &sm.b_r, &w, 0.2);
            let m2 = mse_approx(&eff, &pre.b_t, &svd_comb.b_r, &w, 0.2);
            prop_assert!(m1 <= m2 + 1e-12);
        }
    }

    #[test]
    fn diagonal_channel() {
        let eff = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex::new(2.0, 0.0),
            Complex::new(1.0, 0.0),
        ]));
        let (pre, comb) = svd_design(&eff, 1.0, 0.01, 2).unwrap();
        let id = CMat::<f64>::identity(2, 2);
        let p: Vec<f64> = pre.allocation.clone();
        let scaled = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex::new(p[0].sqrt(), 0.0),
            Complex::new(p[1].sqrt(), 0.0),
        ]));
        assert!((&pre.b_t - scaled).norm() < 1e-12);
        assert!((comb.b_r - id).norm() < 1e-12);
        let one = svd_precoder(&eff, 1.0, 0.01, 1).unwrap();
        assert!((one.b_t[(0, 0)].re - 1.0).abs() < 1e-12 && one.b_t[(1, 0)].norm() < 1e-12);
    }

    #[test]
    fn rank_deficiency_reported() {
        let a = random_cmat(5, 1, 9);
        let eff = &a * random_cmat(1, 4, 10);
        assert!(matches!(
            svd_design(&eff, 1.0, 0.1, 2),
            Err(Error::RankDeficient {
                rank: 1,
                streams: 2
            })
        ));
    }

    /// Gradient descent on the quadratic MSE with exact line search.
    fn gd_oracle(eff: &CMat<f64>, bt: &CMat<f64>, w: &CMat<f64>, noise: f64) -> CMat<f64> {
        let a = mmse_inner(eff, bt, w, noise);
        let c = bt.adjoint() * eff.adjoint();
        let mut x = CMat::zeros(bt.ncols(), eff.nrows());
        for _ in 0..500 {
            let g = &x * &a - &c;
            let gn = g.norm_squared();
            if gn < 1e-30 {
                break;
            }
            let curv = (&g * &a * g.adjoint()).trace().re;
            x -= g * Complex::new(gn / curv, 0.0);
        }
        x
    }

    #[test]
    fn smmse_matches_gradient_descent() {
        let eff = random_cmat(6, 5, 21);
        let (pre, _) = svd_design(&eff, 1.0, 0.3, 4).unwrap();
        let g = random_cmat(6, 6, 22);
        let w = (&g * g.adjoint()).scale(0.05);
        let closed = smmse_combiner(&eff, &pre.b_t, &w, 0.3).unwrap().b_r;
        let gd = gd_oracle(&eff, &pre.b_t, &w, 0.3);
        assert!((&closed - &gd).norm() < 1e-6);
        let d =
            mse_approx(&eff, &pre.b_t, &closed, &w, 0.3) - mse_approx(&eff, &pre.b_t, &gd, &w, 0.3);
        assert!(d.abs() < 1e-8);
    }

    #[test]
    fn smmse_limits() {
        let eff = random_cmat(4, 4, 31);
        let (pre, _) = svd_design(&eff, 1.0, 0.1, 4).unwrap();
        let zero = CMat::zeros(4, 4);
        // matched filter for large noise
        let big = 1e8;
        let mf = (pre.b_t.adjoint() * eff.adjoint()).unscale(big);
        let b = smmse_combiner(&eff, &pre.b_t, &zero, big).unwrap().b_r;
        assert!((&b - &mf).norm() < 1e-6 * mf.norm());
        // zero forcing for vanishing noise
        let b = smmse_combiner(&eff, &pre.b_t, &zero, 1e-9).unwrap().b_r;
        assert!((b * &eff * &pre.b_t - CMat::identity(4, 4)).norm() < 1e-6);
    }

    #[test]
    fn row_normalization() {
        let b = random_cmat(3, 5, 41);
        let n = normalize_combiner_rows(&b).unwrap();
        for r in n.row_iter() {
            assert!((r.norm() - 1.0).abs() < 1e-14);
        }
        let mut s = n.clone();
        s.row_mut(1).scale_mut(5.0);
        assert!((normalize_combiner_rows(&s).unwrap() - &n).norm() < 1e-14);
        let mut z = b.clone();
        z.row_mut(2).fill(Complex::new(0.0, 0.0));
        assert_eq!(normalize_combiner_rows(&z), Err(Error::ZeroRow(2)));
    }

    #[test]
    fn covariance_estimate_shape_and_scaling() {
        use crate::rf::from_pairs;
        use crate::support::SupportRect;
        let g = UraGeometry::<f64>::square(8).unwrap();
        let cells = g.angle_grid();
        let f = from_pairs(
            &g,
            &g,
            vec![cells[3].pair, cells[17].pair],
            vec![cells[9].pair, cells[40].pair, cells[41].pair],
        );
        let sup = AngularSupport::new(vec![SupportRect::new((30.0, 50.0), (140.0, 160.0))]);
        let bt = random_cmat(2, 2, 51);
        let est = |b: &CMat<f64>| {
            estimate_si_covariance(
                &f.f_t,
                &f.f_r,
                b,
                &g,
                &g,
                &sup,
                &sup,
                100,
                10.0,
                3.76,
                &mut ChaCha8Rng::seed_from_u64(1),
            )
            .unwrap()
            .w_hat
        };
        let w = est(&bt);
        assert_eq!(w.shape(), (3, 3));
        assert!((&w - w.adjoint()).norm() < 1e-10 * w.norm().max(1e-300));
        let eig = w.clone().symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&e| e >= -1e-10 * w.norm()));
        let w3 = est(&(bt.clone() * Complex::new(3.0, 0.0)));
        assert!((w3 - w.scale(9.0)).norm() < 1e-10 * w.norm() * 9.0);
        assert_eq!(est(&CMat::zeros(2, 2)).norm(), 0.0);
    }
}
