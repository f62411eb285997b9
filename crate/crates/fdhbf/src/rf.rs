//! RF stage: quantized beam selection over angular supports and assembly of
//! the constant-modulus analog precoder/combiner.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;

use crate::array::{AnglePair, GridCell, Side, UraGeometry};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::scalar::Real;
use crate::support::{clamp_unit, uniform_in, AngularSupport};

/// How a grid cell is tested against cover and exclusion supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionRule {
    /// Cell meets the cover and is disjoint from the exclusion.
    #[default]
    Strict,
    /// Some point of the cell is inside the cover and outside the exclusion.
    Literal,
}

/// Grid cells selected by `rule`, in grid order.
pub fn select_angle_pairs<T: Real>(
    grid: &[GridCell<T>],
    cover: &AngularSupport<T>,
    exclude: &AngularSupport<T>,
    rule: SelectionRule,
) -> Result<Vec<GridCell<T>>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty angle grid".into()));
    }
    let picked: Vec<_> = grid
        .iter()
        .filter(|c| match rule {
            SelectionRule::Strict => cover.intersects_cell(c) && !exclude.intersects_cell(c),
            SelectionRule::Literal => literal_hit(c, cover, exclude),
        })
        .copied()
        .collect();
    if picked.is_empty() {
        return Err(Error::NoFeasibleBeams);
    }
    Ok(picked)
}

fn literal_hit<T: Real>(
    c: &GridCell<T>,
    cover: &AngularSupport<T>,
    exclude: &AngularSupport<T>,
) -> bool {
    if !cover.intersects_cell(c) {
        return false;
    }
    if !exclude.intersects_cell(c) {
        return true;
    }
    const N: usize = 33;
    let step = T::one() / T::from_usize_lossy(N - 1);
    (0..N).any(|i| {
        (0..N).any(|j| {
            let p = AnglePair::new(
                c.x.0 + (c.x.1 - c.x.0) * step * T::from_usize_lossy(i),
                c.y.0 + (c.y.1 - c.y.0) * step * T::from_usize_lossy(j),
            );
            cover.contains(&p) && !exclude.contains(&p)
        })
    })
}

/// Analog precoder `F_t` (`Mt x Nt`) and combiner `F_r` (`Nr x Mr`) of one
/// link direction.
#[derive(Debug, Clone)]
pub struct RfBeamformerPair<T: Real> {
    pub f_t: CMat<T>,
    pub f_r: CMat<T>,
    pub tx_pairs: Vec<AnglePair<T>>,
    pub rx_pairs: Vec<AnglePair<T>>,
}

impl<T: Real> RfBeamformerPair<T> {
    pub fn n_t(&self) -> usize {
        self.f_t.ncols()
    }

    pub fn n_r(&self) -> usize {
        self.f_r.nrows()
    }
}

/// Transmit beams cover the intended departure support while avoiding the
/// SI departure support; receive beams do the same on the arrival side.
#[allow(clippy::too_many_arguments)]
pub fn build_rf_beamformers<T: Real>(
    tx_geom: &UraGeometry<T>,
    rx_geom: &UraGeometry<T>,
    intended_aod: &AngularSupport<T>,
    intended_aoa: &AngularSupport<T>,
    si_aod: &AngularSupport<T>,
    si_aoa: &AngularSupport<T>,
    rule: SelectionRule,
) -> Result<RfBeamformerPair<T>> {
    let tx_cells = select_angle_pairs(&tx_geom.angle_grid(), intended_aod, si_aod, rule)?;
    let rx_cells = select_angle_pairs(&rx_geom.angle_grid(), intended_aoa, si_aoa, rule)?;
    Ok(from_pairs(
        tx_geom,
        rx_geom,
        tx_cells.iter().map(|c| c.pair).collect(),
        rx_cells.iter().map(|c| c.pair).collect(),
    ))
}

/// Steering columns for `F_t`, conjugated steering rows for `F_r`.
pub fn from_pairs<T: Real>(
    tx_geom: &UraGeometry<T>,
    rx_geom: &UraGeometry<T>,
    tx_pairs: Vec<AnglePair<T>>,
    rx_pairs: Vec<AnglePair<T>>,
) -> RfBeamformerPair<T> {
    let mut f_t = DMatrix::zeros(tx_geom.len(), tx_pairs.len());
    for (j, p) in tx_pairs.iter().enumerate() {
        f_t.column_mut(j)
            .copy_from(&tx_geom.steering(p, Side::Transmit));
    }
    let mut f_r = DMatrix::zeros(rx_pairs.len(), rx_geom.len());
    for (i, p) in rx_pairs.iter().enumerate() {
        f_r.row_mut(i)
            .tr_copy_from(&rx_geom.steering(p, Side::Receive));
    }
    RfBeamformerPair {
        f_t,
        f_r,
        tx_pairs,
        rx_pairs,
    }
}

/// Fully digital special case: identity RF matrices.
pub fn identity_beamformers<T: Real>(
    tx_geom: &UraGeometry<T>,
    rx_geom: &UraGeometry<T>,
) -> RfBeamformerPair<T> {
    RfBeamformerPair {
        f_t: DMatrix::identity(tx_geom.len(), tx_geom.len()),
        f_r: DMatrix::identity(rx_geom.len(), rx_geom.len()),
        tx_pairs: Vec::new(),
        rx_pairs: Vec::new(),
    }
}

/// Estimated coefficients `γ + Δγ`, with `Δγx ~ U[-1/Mx, 1/Mx]` and
/// `Δγy ~ U[-1/My, 1/My]`, clamped to `[-1, 1]`.
pub fn perturb_support_coefficients<T: Real, R: Rng + ?Sized>(
    pair: &AnglePair<T>,
    geom: &UraGeometry<T>,
    rng: &mut R,
) -> AnglePair<T> {
    let ex = T::one() / T::from_usize_lossy(geom.mx);
    let ey = T::one() / T::from_usize_lossy(geom.my);
    AnglePair::new(
        clamp_unit(pair.gamma_x + uniform_in(rng, (-ex, ex))),
        clamp_unit(pair.gamma_y + uniform_in(rng, (-ey, ey))),
    )
}

/// Design-side estimate of a support: each rectangle is displaced rigidly
/// in coefficient space by the estimation error of its center direction.
pub fn perturb_support<T: Real, R: Rng + ?Sized>(
    support: &AngularSupport<T>,
    geom: &UraGeometry<T>,
    rng: &mut R,
) -> AngularSupport<T> {
    let rects = support
        .rects
        .iter()
        .map(|r| {
            let c = r.center();
            let shifted = AnglePair::new(c.gamma_x + r.shift.gamma_x, c.gamma_y + r.shift.gamma_y);
            let est = perturb_support_coefficients(&shifted, geom, rng);
            let mut out = *r;
            out.shift = AnglePair::new(est.gamma_x - c.gamma_x, est.gamma_y - c.gamma_y);
            out
        })
        .collect();
    AngularSupport::new(rects)
}

/// Maximum deviation of `|F(i,j)|` from `modulus` over all entries.
pub fn modulus_deviation<T: Real>(f: &CMat<T>, modulus: T) -> T {
    f.iter().fold(T::zero(), |m, z| {
        m.max((z.norm_sqr().sqrt() - modulus).abs())
    })
}

/// Deviation of `FᴴF` (or `FFᴴ` when `rows` is true) from identity.
pub fn unitary_deviation<T: Real>(f: &CMat<T>, rows: bool) -> T {
    let g = if rows {
        f * f.adjoint()
    } else {
        f.adjoint() * f
    };
    let n = g.nrows();
    (g - DMatrix::<Complex<T>>::identity(n, n)).norm()
}
