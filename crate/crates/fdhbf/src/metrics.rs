//! Link metrics: per-stream power split, SI-plus-noise covariance,
//! full/half-duplex rates, hardware counts and energy efficiency.
//!
//! Powers are linear milliwatts throughout; dB conversions happen at the
//! boundary only.

use crate::error::{dims, Error, Result};
use crate::linalg::{hermitian_part, log2_det_hpd, CMat};
use crate::scalar::Real;

pub fn dbm_to_mw<T: Real>(dbm: T) -> T {
    T::lit(10.0).powf(dbm / T::lit(10.0))
}

pub fn mw_to_dbm<T: Real>(mw: T) -> T {
    T::lit(10.0) * mw.log10()
}

pub fn to_db<T: Real>(ratio: T) -> T {
    T::lit(10.0) * ratio.log10()
}

/// Thermal noise: PSD in dBm/Hz over a bandwidth in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel<T> {
    pub psd_dbm_per_hz: T,
    pub bandwidth_hz: T,
}

impl<T: Real> Default for NoiseModel<T> {
    fn default() -> Self {
        Self {
            psd_dbm_per_hz: T::lit(-174.0),
            bandwidth_hz: T::lit(1e7),
        }
    }
}

impl<T: Real> NoiseModel<T> {
    pub fn noise_dbm(&self) -> T {
        self.psd_dbm_per_hz + T::lit(10.0) * self.bandwidth_hz.log10()
    }

    pub fn noise_var_mw(&self) -> T {
        dbm_to_mw(self.noise_dbm())
    }
}

/// Power terms of one combined data stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamPowers<T> {
    pub intended: T,
    pub isi: T,
    pub si: T,
    pub noise: T,
}

/// Per-stream intended, inter-stream, SI and noise power. `b_t_si` is the
/// precoder of the co-located transmitter that leaks into this receiver.
/// Rows of `b_r` must have unit norm.
pub fn per_stream_powers<T: Real>(
    eff_intended: &CMat<T>,
    eff_si: &CMat<T>,
    b_t: &CMat<T>,
    b_t_si: &CMat<T>,
    b_r: &CMat<T>,
    noise_var: T,
) -> Result<Vec<StreamPowers<T>>> {
    for (i, row) in b_r.row_iter().enumerate() {
        let n = row.norm();
        if (n - T::one()).abs() > T::lit(1e-9) {
            return Err(Error::UnnormalizedCombiner {
                row: i,
                norm: n.as_f64(),
            });
        }
    }
    if b_r.ncols() != eff_intended.nrows() || b_r.ncols() != eff_si.nrows() {
        return Err(Error::DimensionMismatch {
            context: "per-stream powers",
            expected: format!("combiner width {}", eff_intended.nrows()),
            found: dims(b_r.nrows(), b_r.ncols()),
        });
    }
    let g = b_r * eff_intended * b_t;
    let s = b_r * eff_si * b_t_si;
    Ok((0..b_r.nrows())
        .map(|k| {
            let mut isi = T::zero();
            for q in 0..g.ncols() {
                if q != k {
                    isi += g[(k, q)].norm_sqr();
                }
            }
            StreamPowers {
                intended: if k < g.ncols() {
                    g[(k, k)].norm_sqr()
                } else {
                    T::zero()
                },
                isi,
                si: s.row(k).norm_squared(),
                noise: noise_var,
            }
        })
        .collect())
}

/// `C = B_r ℋ_SI B Bᴴ ℋ_SIᴴ B_rᴴ + σ² B_r F_r F_rᴴ B_rᴴ`.
pub fn interference_noise_covariance<T: Real>(
    b_r: &CMat<T>,
    eff_si: &CMat<T>,
    b_t_si: &CMat<T>,
    f_r: &CMat<T>,
    noise_var: T,
) -> Result<CMat<T>> {
    if b_r.ncols() != eff_si.nrows()
        || eff_si.ncols() != b_t_si.nrows()
        || f_r.nrows() != b_r.ncols()
    {
        return Err(Error::DimensionMismatch {
            context: "interference covariance",
            expected: format!("combiner width {}", eff_si.nrows()),
            found: dims(b_r.nrows(), b_r.ncols()),
        });
    }
    let x = b_r * eff_si * b_t_si;
    let y = b_r * f_r;
    Ok(hermitian_part(
        &(&x * x.adjoint() + (&y * y.adjoint()).scale(noise_var)),
    ))
}

/// Noise-only covariance for the half-duplex benchmark.
pub fn noise_covariance<T: Real>(b_r: &CMat<T>, f_r: &CMat<T>, noise_var: T) -> CMat<T> {
    let y = b_r * f_r;
    hermitian_part(&(&y * y.adjoint()).scale(noise_var))
}

/// Square-root factor `F = [B_r ℋ_SI B, σ B_r F_r]` with `C = F Fᴴ`; the SI
/// block is omitted when `si` is `None`.
pub fn interference_noise_factor<T: Real>(
    b_r: &CMat<T>,
    si: Option<(&CMat<T>, &CMat<T>)>,
    f_r: &CMat<T>,
    noise_var: T,
) -> Result<CMat<T>> {
    if f_r.nrows() != b_r.ncols() {
        return Err(Error::DimensionMismatch {
            context: "interference factor",
            expected: format!("combiner width {}", f_r.nrows()),
            found: dims(b_r.nrows(), b_r.ncols()),
        });
    }
    let y = (b_r * f_r).scale(noise_var.sqrt());
    let Some((eff_si, b_t_si)) = si else {
        return Ok(y);
    };
    if b_r.ncols() != eff_si.nrows() || eff_si.ncols() != b_t_si.nrows() {
        return Err(Error::DimensionMismatch {
            context: "interference factor",
            expected: format!("combiner width {}", eff_si.nrows()),
            found: dims(b_r.nrows(), b_r.ncols()),
        });
    }
    let x = b_r * eff_si * b_t_si;
    let mut f = CMat::zeros(b_r.nrows(), x.ncols() + y.ncols());
    f.columns_mut(0, x.ncols()).copy_from(&x);
    f.columns_mut(x.ncols(), y.ncols()).copy_from(&y);
    Ok(f)
}

/// `log2 det(F Fᴴ)` from the QR factorization of `Fᴴ`.
fn log2_det_gram<T: Real>(f: &CMat<T>) -> Result<T> {
    if f.ncols() < f.nrows() {
        return Err(Error::Singular("rank-deficient covariance factor"));
    }
    let r = f.adjoint().qr().r();
    let mut acc = T::zero();
    for i in 0..r.nrows() {
        let d = r[(i, i)].norm_sqr();
        if d <= T::zero() {
            return Err(Error::Singular("rank-deficient covariance factor"));
        }
        acc += d.ln();
    }
    Ok(acc / T::lit(std::f64::consts::LN_2))
}

/// Same rate as [`achievable_rate_fd`] with `C` given by its square-root
/// factor. Works on `F` rather than `F Fᴴ`, so strongly suppressed SI
/// does not square the condition number.
pub fn achievable_rate_factored<T: Real>(
    eff: &CMat<T>,
    b_t: &CMat<T>,
    b_r: &CMat<T>,
    c_factor: &CMat<T>,
) -> Result<T> {
    let g = b_r * eff * b_t;
    if c_factor.nrows() != g.nrows() {
        return Err(Error::DimensionMismatch {
            context: "rate covariance factor",
            expected: format!("{} rows", g.nrows()),
            found: dims(c_factor.nrows(), c_factor.ncols()),
        });
    }
    let mut full = CMat::zeros(g.nrows(), c_factor.ncols() + g.ncols());
    full.columns_mut(0, c_factor.ncols()).copy_from(c_factor);
    full.columns_mut(c_factor.ncols(), g.ncols()).copy_from(&g);
    Ok((log2_det_gram(&full)? - log2_det_gram(c_factor)?).max(T::zero()))
}

/// `log2 det(I + C^{-1} B_r ℋ B_t B_tᴴ ℋᴴ B_rᴴ)`, evaluated in whitened
/// form `log2 det(I + Xᴴ X)` with `X = L^{-1} B_r ℋ B_t` and `C = L Lᴴ`.
pub fn achievable_rate_fd<T: Real>(
    eff: &CMat<T>,
    b_t: &CMat<T>,
    b_r: &CMat<T>,
    c_tot: &CMat<T>,
) -> Result<T> {
    let g = b_r * eff * b_t;
    if c_tot.shape() != (g.nrows(), g.nrows()) {
        return Err(Error::DimensionMismatch {
            context: "rate covariance",
            expected: dims(g.nrows(), g.nrows()),
            found: dims(c_tot.nrows(), c_tot.ncols()),
        });
    }
    let chol = hermitian_part(c_tot)
        .cholesky()
        .ok_or(Error::Singular("interference covariance"))?;
    let x = chol
        .l_dirty()
        .solve_lower_triangular(&g)
        .ok_or(Error::Singular("interference covariance"))?;
    let k = g.ncols();
    let m = CMat::identity(k, k) + x.adjoint() * x;
    Ok(log2_det_hpd(&m)?.max(T::zero()))
}

/// Half-duplex total: each direction gets half the time.
pub fn achievable_rate_hd<T: Real>(rate_node1: T, rate_node2: T) -> T {
    (rate_node1 + rate_node2) * T::lit(0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    Fdpc,
    AbjhpcPlain,
    AbjhpcTransfer,
}

/// Array sizes, selected beam counts and stream counts of one node.
/// `s_tx` streams leave this node; `s_rx` streams arrive at it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NodeDims {
    pub m_t: usize,
    pub m_r: usize,
    pub n_t: usize,
    pub n_r: usize,
    pub s_tx: usize,
    pub s_rx: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardwareBudget<T> {
    pub n_rf: usize,
    pub n_ps: usize,
    pub p_rf_w: T,
    pub p_ps_w: T,
}

impl<T: Real> HardwareBudget<T> {
    /// Circuit power in watts.
    pub fn circuit_w(&self) -> T {
        T::from_usize_lossy(self.n_rf) * self.p_rf_w + T::from_usize_lossy(self.n_ps) * self.p_ps_w
    }
}

pub fn hardware_budget<T: Real>(
    arch: Architecture,
    nodes: &[NodeDims],
    p_rf_w: T,
    p_ps_w: T,
) -> HardwareBudget<T> {
    let (n_rf, n_ps) = nodes.iter().fold((0, 0), |(rf, ps), d| match arch {
        Architecture::Fdpc => (rf + d.m_t + d.m_r, ps),
        Architecture::AbjhpcPlain => (rf + d.n_t + d.n_r, ps + d.n_t * d.m_t + d.n_r * d.m_r),
        Architecture::AbjhpcTransfer => (
            rf + 2 * d.s_tx,
            ps + d.n_t * (d.m_t + 2 * d.s_tx) + d.n_r * (d.m_r + 2 * d.s_rx),
        ),
    });
    HardwareBudget {
        n_rf,
        n_ps,
        p_rf_w,
        p_ps_w,
    }
}

/// `R / (2 P_T + N_RF P_RF + N_PS P_PS)` in bits/s/Hz per watt.
pub fn energy_efficiency<T: Real>(
    rate_total: T,
    p_t_w: T,
    budget: &HardwareBudget<T>,
) -> Result<T> {
    let denom = T::lit(2.0) * p_t_w + budget.circuit_w();
    if denom <= T::zero() {
        return Err(Error::ZeroDenominator);
    }
    Ok(rate_total / denom)
}

/// Everything measured for one direction of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionMetrics<T> {
    pub streams: Vec<StreamPowers<T>>,
    pub rate: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkMetrics<T> {
    /// Direction received at node 1, then at node 2.
    pub node1: DirectionMetrics<T>,
    pub node2: DirectionMetrics<T>,
    pub rate_total: T,
    pub energy_efficiency: Option<T>,
}
