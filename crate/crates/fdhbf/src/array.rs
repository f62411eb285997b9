//! Uniform rectangular arrays: phase responses, steering vectors and the
//! orthogonal quantized angle grid used as the RF beam codebook.
//!
//! Element ordering is fixed globally: the x-axis index is the outer (slow)
//! index and the y-axis index the inner one, so element `(mx, my)` sits at
//! flat position `mx * My + my`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cis, Real};

/// Rectangular antenna array: `mx` by `my` elements, spacing in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UraGeometry<T> {
    pub mx: usize,
    pub my: usize,
    pub spacing: T,
}

impl<T: Real> UraGeometry<T> {
    pub fn new(mx: usize, my: usize, spacing: T) -> Result<Self> {
        if mx == 0 || my == 0 {
            return Err(Error::InvalidArgument(format!(
                "array dimensions must be positive, got {mx}x{my}"
            )));
        }
        if spacing < T::zero() || (mx * my > 1 && spacing <= T::zero()) {
            return Err(Error::InvalidArgument(
                "element spacing must be positive for multi-element arrays".into(),
            ));
        }
        Ok(Self { mx, my, spacing })
    }

    /// Square `n x n` array with half-wavelength spacing.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n, T::lit(0.5))
    }

    /// Total element count.
    #[inline]
    pub fn len(&self) -> usize {
        self.mx * self.my
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Phase response vector: Kronecker product of the x progression and
    /// the y progression. Every element has unit modulus, the first is 1.
    pub fn phase_response(&self, pair: &AnglePair<T>) -> DVector<Complex<T>> {
        let two_pi_d = T::two_pi() * self.spacing;
        let x: Vec<Complex<T>> = (0..self.mx)
            .map(|m| cis(two_pi_d * T::from_usize_lossy(m) * pair.gamma_x))
            .collect();
        let y: Vec<Complex<T>> = (0..self.my)
            .map(|n| cis(two_pi_d * T::from_usize_lossy(n) * pair.gamma_y))
            .collect();
        DVector::from_fn(self.len(), |i, _| x[i / self.my] * y[i % self.my])
    }

    /// Unit-norm steering vector. The receive side is conjugated.
    pub fn steering(&self, pair: &AnglePair<T>, side: Side) -> DVector<Complex<T>> {
        let scale = T::one() / T::from_usize_lossy(self.len()).sqrt();
        let v = self.phase_response(pair);
        match side {
            Side::Transmit => v.map(|z| z.scale(scale)),
            Side::Receive => v.map(|z| z.conj().scale(scale)),
        }
    }

    /// Phase response matrix over a set of path angle pairs.
    ///
    /// Transmit side: `L x M`, row `l` is the conjugate transpose of the
    /// phase vector of pair `l`. Receive side: `M x L`, column `l` is the
    /// phase vector itself.
    pub fn phase_matrix(&self, pairs: &[AnglePair<T>], side: Side) -> Result<DMatrix<Complex<T>>> {
        if pairs.is_empty() {
            return Err(Error::NoPaths);
        }
        let m = self.len();
        let mut out = match side {
            Side::Transmit => DMatrix::zeros(pairs.len(), m),
            Side::Receive => DMatrix::zeros(m, pairs.len()),
        };
        for (l, p) in pairs.iter().enumerate() {
            let v = self.phase_response(p);
            match side {
                Side::Transmit => out.row_mut(l).tr_copy_from(&v.map(|z| z.conj())),
                Side::Receive => out.column_mut(l).copy_from(&v),
            }
        }
        Ok(out)
    }

    /// The `mx * my` orthogonal quantized angle pairs, row-major in `(k, n)`.
    pub fn angle_grid(&self) -> Vec<GridCell<T>> {
        let mx = T::from_usize_lossy(self.mx);
        let my = T::from_usize_lossy(self.my);
        let hx = T::one() / mx;
        let hy = T::one() / my;
        let mut cells = Vec::with_capacity(self.len());
        for k in 0..self.mx {
            let lx = -T::one() + T::from_usize_lossy(2 * k + 1) / mx;
            for n in 0..self.my {
                let ly = -T::one() + T::from_usize_lossy(2 * n + 1) / my;
                cells.push(GridCell {
                    k,
                    n,
                    pair: AnglePair::new(lx, ly),
                    x: (lx - hx, lx + hx),
                    y: (ly - hy, ly + hy),
                });
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Transmit,
    Receive,
}

/// Direction cosines `(γx, γy) = sinθ (cosψ, sinψ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnglePair<T> {
    pub gamma_x: T,
    pub gamma_y: T,
}

impl<T: Real> AnglePair<T> {
    pub fn new(gamma_x: T, gamma_y: T) -> Self {
        Self { gamma_x, gamma_y }
    }

    /// From elevation `theta` and azimuth `psi` in radians.
    pub fn from_angles(theta: T, psi: T) -> Self {
        let s = theta.sin();
        Self::new(s * psi.cos(), s * psi.sin())
    }

    pub fn from_degrees(theta_deg: T, psi_deg: T) -> Self {
        Self::from_angles(deg_to_rad(theta_deg), deg_to_rad(psi_deg))
    }

    /// Radius `sqrt(γx² + γy²)`; above 1 the pair is not physical.
    pub fn radius(&self) -> T {
        self.gamma_x.hypot(self.gamma_y)
    }
}

/// One quantized angle pair together with its cell in coefficient space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell<T> {
    pub k: usize,
    pub n: usize,
    pub pair: AnglePair<T>,
    pub x: (T, T),
    pub y: (T, T),
}

pub(crate) fn deg_to_rad<T: Real>(x: T) -> T {
    x * T::pi() / T::lit(180.0)
}

pub(crate) fn rad_to_deg<T: Real>(x: T) -> T {
    x * T::lit(180.0) / T::pi()
}
