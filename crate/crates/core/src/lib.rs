//! Simulated RAW reconstruction.
//!
//! A parametric camera pipeline and its analytic inverse act as a teacher that turns sRGB
//! images into RAW-domain targets. A 12-parameter affine color matrix is then fitted to
//! imitate the teacher, giving a very cheap sRGB → RAW converter.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases below fix the
//! common `f64` instantiations.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod imaging;
pub mod isp;
pub mod lccm;
pub mod metrics;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use imaging::{BayerPattern, BayerRaw, Channel, Histogram, ImageBuffer, RgbImage};
pub use isp::IspParams;
pub use lccm::{ColorMatrix, FitConfig, FitReport, ImagePair};
pub use metrics::QualityReport;
pub use scalar::Scalar;

pub type RgbImageF64 = RgbImage<f64>;
pub type RgbImageF32 = RgbImage<f32>;
pub type BayerRawF64 = BayerRaw<f64>;
pub type BayerRawF32 = BayerRaw<f32>;
pub type ColorMatrixF64 = ColorMatrix<f64>;
pub type ColorMatrixF32 = ColorMatrix<f32>;
pub type IspParamsF64 = IspParams<f64>;
pub type IspParamsF32 = IspParams<f32>;
pub type FitConfigF64 = FitConfig<f64>;
pub type FitReportF64 = FitReport<f64>;
pub type ImagePairF64 = ImagePair<f64>;
