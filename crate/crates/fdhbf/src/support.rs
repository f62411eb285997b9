//! Angular supports: unions of elevation/azimuth rectangles, mapped into
//! direction-cosine space for membership and grid-cell intersection tests.
//!
//! In coefficient space a rectangle `[θlo, θhi] x [ψlo, ψhi]` becomes an
//! annular sector with radii `sin θlo..sin θhi`. A rectangle may also carry
//! a rigid coefficient-space shift, which is how imprecise angle estimates
//! are represented on the design side.

use rand::Rng;

use crate::array::{deg_to_rad, rad_to_deg, AnglePair, GridCell};
use crate::scalar::Real;

/// One cluster's angular region. Angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportRect<T> {
    pub elevation: (T, T),
    pub azimuth: (T, T),
    /// Offset added to every coefficient pair of the region.
    pub shift: AnglePair<T>,
}

impl<T: Real> SupportRect<T> {
    pub fn new(elevation: (T, T), azimuth: (T, T)) -> Self {
        Self {
            elevation,
            azimuth,
            shift: AnglePair::new(T::zero(), T::zero()),
        }
    }

    /// Coefficient pair of the rectangle's center direction, before shifting.
    pub fn center(&self) -> AnglePair<T> {
        let half = T::lit(0.5);
        AnglePair::from_degrees(
            (self.elevation.0 + self.elevation.1) * half,
            (self.azimuth.0 + self.azimuth.1) * half,
        )
    }

    fn span(&self) -> T {
        self.azimuth.1 - self.azimuth.0
    }

    pub fn contains(&self, pair: &AnglePair<T>) -> bool {
        let tol = T::lit(1e-9);
        let q = AnglePair::new(
            pair.gamma_x - self.shift.gamma_x,
            pair.gamma_y - self.shift.gamma_y,
        );
        let r = q.radius();
        if r > T::one() + T::lit(1e-12) {
            return false;
        }
        let theta = rad_to_deg(r.min(T::one()).asin());
        if theta < self.elevation.0 - tol || theta > self.elevation.1 + tol {
            return false;
        }
        if r <= T::lit(1e-15) {
            // zenith: every azimuth
            return true;
        }
        azimuth_in(rad_to_deg(q.gamma_y.atan2(q.gamma_x)), self.azimuth, tol)
    }

    /// Closed-set intersection test between the (shifted) sector and a
    /// grid cell. Exact up to a 1e-12 tolerance: the cell is clipped to the
    /// azimuth wedge and the radius range of the resulting convex polygon is
    /// compared against the elevation band.
    pub fn intersects_cell(&self, cell: &GridCell<T>) -> bool {
        let eps = T::lit(1e-12);
        let (x0, x1) = (cell.x.0 - self.shift.gamma_x, cell.x.1 - self.shift.gamma_x);
        let (y0, y1) = (cell.y.0 - self.shift.gamma_y, cell.y.1 - self.shift.gamma_y);
        let rect = vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1)];
        let r_lo = deg_to_rad(self.elevation.0.max(T::zero())).sin();
        let r_hi = deg_to_rad(self.elevation.1.min(T::lit(90.0))).sin();
        let origin_in_rect = x0 <= eps && x1 >= -eps && y0 <= eps && y1 >= -eps;

        let band_hit = |poly: &[(T, T)]| -> bool {
            if poly.is_empty() {
                return false;
            }
            let r_max = poly.iter().fold(T::zero(), |m, p| m.max(p.0.hypot(p.1)));
            let r_min = if origin_in_rect {
                T::zero()
            } else {
                min_dist_to_origin(poly)
            };
            r_min <= r_hi + eps && r_max >= r_lo - eps
        };

        let span = self.span();
        if span >= T::lit(360.0) {
            return band_hit(&rect);
        }
        // Convex wedges no wider than 90 degrees.
        let pieces = (span / T::lit(90.0)).ceil().to_usize().unwrap_or(1).max(1);
        let step = span / T::from_usize_lossy(pieces);
        (0..pieces).any(|i| {
            let a = deg_to_rad(self.azimuth.0 + step * T::from_usize_lossy(i));
            let b = deg_to_rad(self.azimuth.0 + step * T::from_usize_lossy(i + 1));
            let mid = (a + b) * T::lit(0.5);
            let (ua, ub, um) = (
                (a.cos(), a.sin()),
                (b.cos(), b.sin()),
                (mid.cos(), mid.sin()),
            );
            // cross(ua, p) >= 0, cross(p, ub) >= 0, dot(um, p) >= 0
            let mut poly = clip(&rect, (-ua.1, ua.0), eps);
            poly = clip(&poly, (ub.1, -ub.0), eps);
            poly = clip(&poly, um, eps);
            band_hit(&poly)
        })
    }

    /// Draws a direction uniformly in the angle rectangle and maps it to
    /// (shifted) coefficients, clamped to `[-1, 1]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> AnglePair<T> {
        let theta = uniform_in(rng, self.elevation);
        let psi = uniform_in(rng, self.azimuth);
        let p = AnglePair::from_degrees(theta, psi);
        AnglePair::new(
            clamp_unit(p.gamma_x + self.shift.gamma_x),
            clamp_unit(p.gamma_y + self.shift.gamma_y),
        )
    }
}

/// Union of support rectangles.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularSupport<T> {
    pub rects: Vec<SupportRect<T>>,
}

impl<T: Real> AngularSupport<T> {
    pub fn new(rects: Vec<SupportRect<T>>) -> Self {
        Self { rects }
    }

    pub fn empty() -> Self {
        Self { rects: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    pub fn contains(&self, pair: &AnglePair<T>) -> bool {
        self.rects.iter().any(|r| r.contains(pair))
    }

    pub fn intersects_cell(&self, cell: &GridCell<T>) -> bool {
        self.rects.iter().any(|r| r.intersects_cell(cell))
    }

    /// Uniform rectangle choice, then a uniform direction inside it.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<AnglePair<T>> {
        if self.rects.is_empty() {
            return None;
        }
        let i = rng.random_range(0..self.rects.len());
        Some(self.rects[i].sample(rng))
    }
}

pub(crate) fn uniform_in<T: Real, R: Rng + ?Sized>(rng: &mut R, (lo, hi): (T, T)) -> T {
    let u: f64 = rng.random();
    lo + (hi - lo) * T::lit(u)
}

pub(crate) fn clamp_unit<T: Real>(x: T) -> T {
    x.max(-T::one()).min(T::one())
}

fn azimuth_in<T: Real>(psi: T, (lo, hi): (T, T), tol: T) -> bool {
    let full = T::lit(360.0);
    let span = hi - lo;
    if span >= full - tol {
        return true;
    }
    let mut d = (psi - lo) % full;
    if d < T::zero() {
        d += full;
    }
    d <= span + tol || d >= full - tol
}

/// Sutherland-Hodgman clip against `n . p >= -eps`.
fn clip<T: Real>(poly: &[(T, T)], n: (T, T), eps: T) -> Vec<(T, T)> {
    let f = |p: &(T, T)| n.0 * p.0 + n.1 * p.1 + eps;
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let cur = poly[i];
        let nxt = poly[(i + 1) % poly.len()];
        let (fc, fnx) = (f(&cur), f(&nxt));
        if fc >= T::zero() {
            out.push(cur);
        }
        if (fc >= T::zero()) != (fnx >= T::zero()) {
            let t = fc / (fc - fnx);
            out.push((cur.0 + (nxt.0 - cur.0) * t, cur.1 + (nxt.1 - cur.1) * t));
        }
    }
    out
}

fn min_dist_to_origin<T: Real>(poly: &[(T, T)]) -> T {
    if poly.len() == 1 {
        return poly[0].0.hypot(poly[0].1);
    }
    let mut best = T::max_value().unwrap();
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        let len2 = dx * dx + dy * dy;
        let t = if len2 > T::zero() {
            (-(a.0 * dx + a.1 * dy) / len2).max(T::zero()).min(T::one())
        } else {
            T::zero()
        };
        let (px, py) = (a.0 + dx * t, a.1 + dy * t);
        best = best.min(px.hypot(py));
    }
    best
}
