//! Full-duplex mmWave massive-MIMO link simulation with angular-based joint
//! hybrid precoding and combining.
//!
//! The RF stage picks orthogonal grid beams that cover the intended angular
//! support and stay clear of the self-interference support; the baseband
//! stage runs SVD precoding with water-filling and either an SVD or a
//! semi-blind MMSE combiner. Everything is generic over the real scalar
//! (`f32` or `f64`); the `*64` aliases fix it to `f64`.

pub mod array;
pub mod baseband;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod rf;
mod scalar;
pub mod support;
pub mod transfer;

pub use error::{Error, Result};
pub use scalar::{cis, Real};

pub use num_complex::Complex;

pub type CMat<T> = linalg::CMat<T>;

pub type C64 = Complex<f64>;
pub type CMat64 = CMat<f64>;
pub type Ura64 = array::UraGeometry<f64>;
pub type AnglePair64 = array::AnglePair<f64>;
pub type ClusterSpec64 = channel::ClusterSpec<f64>;
pub type AngularSupport64 = support::AngularSupport<f64>;
pub type RfBeamformerPair64 = rf::RfBeamformerPair<f64>;
