//! Geometric cluster channels (intended and far-field SI), the spherical-wave
//! near-field SI channel between co-located arrays, and angular supports.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::array::{deg_to_rad, AnglePair, Side, UraGeometry};
use crate::error::{dims, Error, Result};
use crate::linalg::CMat;
use crate::scalar::{cis, Real};
use crate::support::{uniform_in, AngularSupport, SupportRect};

/// Mean direction and spread of one end of a cluster. Degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSpread<T> {
    pub mean_elevation: T,
    pub mean_azimuth: T,
    pub spread_elevation: T,
    pub spread_azimuth: T,
}

impl<T: Real> AngleSpread<T> {
    pub fn new(mean_elevation: T, mean_azimuth: T, spread_elevation: T, spread_azimuth: T) -> Self {
        Self {
            mean_elevation,
            mean_azimuth,
            spread_elevation,
            spread_azimuth,
        }
    }

    pub fn elevation_interval(&self) -> (T, T) {
        (
            self.mean_elevation - self.spread_elevation,
            self.mean_elevation + self.spread_elevation,
        )
    }

    pub fn azimuth_interval(&self) -> (T, T) {
        (
            self.mean_azimuth - self.spread_azimuth,
            self.mean_azimuth + self.spread_azimuth,
        )
    }

    pub fn rect(&self) -> SupportRect<T> {
        SupportRect::new(self.elevation_interval(), self.azimuth_interval())
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.elevation_interval();
        if self.spread_elevation < T::zero() || self.spread_azimuth < T::zero() {
            return Err(Error::InvalidArgument("negative angle spread".into()));
        }
        if lo < T::zero() || hi > T::lit(90.0) {
            return Err(Error::InvalidArgument(format!(
                "elevation interval [{}, {}] leaves [0, 90] degrees",
                lo.as_f64(),
                hi.as_f64()
            )));
        }
        Ok(())
    }
}

/// A scattering cluster seen from both ends of the link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterSpec<T> {
    pub departure: AngleSpread<T>,
    pub arrival: AngleSpread<T>,
    pub paths: usize,
    /// Path distance range in meters.
    pub distance: (T, T),
}

impl<T: Real> ClusterSpec<T> {
    pub fn validate(&self) -> Result<()> {
        self.departure.validate()?;
        self.arrival.validate()?;
        if !(self.distance.0 > T::zero() && self.distance.0 <= self.distance.1) {
            return Err(Error::InvalidArgument(
                "distance range must satisfy 0 < min <= max".into(),
            ));
        }
        Ok(())
    }
}

/// Departure-side support: one rectangle per cluster.
pub fn departure_support<T: Real>(clusters: &[ClusterSpec<T>]) -> AngularSupport<T> {
    AngularSupport::new(clusters.iter().map(|c| c.departure.rect()).collect())
}

/// Arrival-side support: one rectangle per cluster.
pub fn arrival_support<T: Real>(clusters: &[ClusterSpec<T>]) -> AngularSupport<T> {
    AngularSupport::new(clusters.iter().map(|c| c.arrival.rect()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRecord<T> {
    pub gain: Complex<T>,
    pub distance: T,
    pub departure: AnglePair<T>,
    pub arrival: AnglePair<T>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathSet<T> {
    pub paths: Vec<PathRecord<T>>,
}

impl<T: Real> PathSet<T> {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// Draws every path of every cluster: angles and distances uniform in their
/// intervals, gains i.i.d. CN(0, 1/L) over the total path count L.
pub fn sample_paths<T: Real, R: Rng + ?Sized>(
    clusters: &[ClusterSpec<T>],
    rng: &mut R,
) -> Result<PathSet<T>> {
    let total: usize = clusters.iter().map(|c| c.paths).sum();
    if total == 0 {
        return Err(Error::NoPaths);
    }
    let sd = (0.5 / total as f64).sqrt();
    let mut paths = Vec::with_capacity(total);
    for c in clusters {
        for _ in 0..c.paths {
            let dep = AnglePair::from_degrees(
                uniform_in(rng, c.departure.elevation_interval()),
                uniform_in(rng, c.departure.azimuth_interval()),
            );
            let arr = AnglePair::from_degrees(
                uniform_in(rng, c.arrival.elevation_interval()),
                uniform_in(rng, c.arrival.azimuth_interval()),
            );
            let distance = uniform_in(rng, c.distance);
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            paths.push(PathRecord {
                gain: Complex::new(T::lit(re * sd), T::lit(im * sd)),
                distance,
                departure: dep,
                arrival: arr,
            });
        }
    }
    Ok(PathSet { paths })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Intended,
    SiNearField,
    SiFarField,
    SiComposite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T> {
    /// `Mr x Mt` channel matrix.
    pub matrix: DMatrix<Complex<T>>,
    pub paths: Option<PathSet<T>>,
    pub kind: ChannelKind,
}

/// Rank-`L` factors `(Φ_r diag(τ^{-η} g), Φ_t)` of a geometric channel.
pub fn geometric_factors<T: Real>(
    tx: &UraGeometry<T>,
    rx: &UraGeometry<T>,
    paths: &PathSet<T>,
    eta: T,
) -> Result<(CMat<T>, CMat<T>)> {
    if paths.is_empty() {
        return Err(Error::NoPaths);
    }
    let dep: Vec<_> = paths.paths.iter().map(|p| p.departure).collect();
    let arr: Vec<_> = paths.paths.iter().map(|p| p.arrival).collect();
    let phi_t = tx.phase_matrix(&dep, Side::Transmit)?;
    let mut phi_r = rx.phase_matrix(&arr, Side::Receive)?;
    for (l, p) in paths.paths.iter().enumerate() {
        let w = p.gain * p.distance.powf(-eta);
        for z in phi_r.column_mut(l).iter_mut() {
            *z *= w;
        }
    }
    Ok((phi_r, phi_t))
}

/// `H = Φ_r diag(τ^{-η} g) Φ_t`.
fn geometric_channel<T: Real>(
    tx: &UraGeometry<T>,
    rx: &UraGeometry<T>,
    paths: &PathSet<T>,
    eta: T,
) -> Result<DMatrix<Complex<T>>> {
    let (left, right) = geometric_factors(tx, rx, paths, eta)?;
    Ok(left * right)
}

/// Intended channel from a transmit array to a remote receive array.
pub fn intended_channel<T: Real>(
    tx: &UraGeometry<T>,
    rx: &UraGeometry<T>,
    paths: &PathSet<T>,
    eta: T,
) -> Result<ChannelRealization<T>> {
    Ok(ChannelRealization {
        matrix: geometric_channel(tx, rx, paths, eta)?,
        paths: Some(paths.clone()),
        kind: ChannelKind::Intended,
    })
}

/// Reflected SI channel; same construction as [`intended_channel`].
pub fn far_field_si_channel<T: Real>(
    tx: &UraGeometry<T>,
    rx: &UraGeometry<T>,
    paths: &PathSet<T>,
    eta: T,
) -> Result<ChannelRealization<T>> {
    Ok(ChannelRealization {
        matrix: geometric_channel(tx, rx, paths, eta)?,
        paths: Some(paths.clone()),
        kind: ChannelKind::SiFarField,
    })
}

/// Relative placement of the transmit and receive arrays of one node.
/// Distances in wavelengths, rotation in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuplexPlacement<T> {
    pub d1: T,
    pub d2: T,
    pub theta_rot: T,
}

impl<T: Real> Default for DuplexPlacement<T> {
    fn default() -> Self {
        Self {
            d1: T::lit(2.0),
            d2: T::zero(),
            theta_rot: T::zero(),
        }
    }
}

/// Spherical-wave SI channel between co-located arrays, scaled so that
/// `‖H‖_F² = 10^{-isolation_db/10}`.
pub fn near_field_si_channel<T: Real>(
    tx: &UraGeometry<T>,
    rx: &UraGeometry<T>,
    placement: &DuplexPlacement<T>,
    isolation_db: T,
) -> Result<ChannelRealization<T>> {
    if placement.d1 < T::zero() || placement.d2 < T::zero() {
        return Err(Error::InvalidArgument(
            "placement offsets must be nonnegative".into(),
        ));
    }
    let rot = deg_to_rad(placement.theta_rot);
    let (sin_r, cos_r) = (rot.sin(), rot.cos());
    let mut h = DMatrix::zeros(rx.len(), tx.len());
    let two_pi = T::two_pi();
    for u in 0..rx.mx {
        for v in 0..rx.my {
            let row = u * rx.my + v;
            let uu = T::from_usize_lossy(u);
            let vv = T::from_usize_lossy(v);
            for m in 0..tx.mx {
                for n in 0..tx.my {
                    let col = m * tx.my + n;
                    let mm = T::from_usize_lossy(m);
                    let nn = T::from_usize_lossy(n);
                    let a = uu * rx.spacing * sin_r + placement.d2;
                    let b = mm * tx.spacing + uu * rx.spacing * cos_r + placement.d1;
                    let c = nn * tx.spacing - vv * rx.spacing;
                    let delta = (a * a + b * b + c * c).sqrt();
                    if delta <= T::zero() {
                        return Err(Error::CoincidentElements);
                    }
                    h[(row, col)] = cis(-two_pi * delta).unscale(delta);
                }
            }
        }
    }
    let norm = h.norm();
    let kappa = T::lit(10.0).powf(-isolation_db / T::lit(20.0)) / norm;
    h.scale_mut(kappa);
    Ok(ChannelRealization {
        matrix: h,
        paths: None,
        kind: ChannelKind::SiNearField,
    })
}

/// `H_SI = H_LoS + H_NLoS`.
pub fn composite_si_channel<T: Real>(
    near: &ChannelRealization<T>,
    far: &ChannelRealization<T>,
) -> Result<ChannelRealization<T>> {
    if near.matrix.shape() != far.matrix.shape() {
        return Err(Error::DimensionMismatch {
            context: "composite SI channel",
            expected: dims(near.matrix.nrows(), near.matrix.ncols()),
            found: dims(far.matrix.nrows(), far.matrix.ncols()),
        });
    }
    Ok(ChannelRealization {
        matrix: &near.matrix + &far.matrix,
        paths: far.paths.clone(),
        kind: ChannelKind::SiComposite,
    })
}
