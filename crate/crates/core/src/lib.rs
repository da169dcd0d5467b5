//! Pansharpening toolkit.
//!
//! Fuses a low-resolution multispectral cube with a high-resolution panchromatic
//! band using classical component-substitution and high-pass methods, evaluates
//! the result under the reduced-resolution (Wald) protocol, and provides the
//! spectral / perceptual / Gram-matrix losses used to regularise learned fusion,
//! each with an analytic gradient and a finite-difference check.

pub mod error;
pub mod features;
pub mod fusion;
pub mod losses;
pub mod metrics;
pub mod raster;
pub mod resample;

pub use error::{Error, ErrorKind, Result};
pub use features::{ConvLayer, ConvStackSpec, Extractor, FeatureMap};
pub use fusion::{FusionInput, FusionMethod, LowResPanMode};
pub use metrics::MetricReport;
pub use raster::{Patch, PatchSet, Raster};
