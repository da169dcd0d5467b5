//! Losses and regularizers for fusion networks, as pure functions of rasters.
//!
//! Differentiable losses (see [`DifferentiableLoss`]) carry an analytic
//! gradient with respect to the fused image; [`finite_difference_gradient`]
//! is the independent check.

mod adversarial;
mod gradient;
mod gram;
mod pixel;
mod spectral;

use std::fmt;
use std::str::FromStr;

pub use adversarial::{discriminator_loss, generator_loss};
pub use gradient::{
    finite_difference_gradient, loss_gradient, max_relative_error, DifferentiableLoss,
};
pub use gram::{
    gm_perceptual_loss, gm_reconstruction_loss, gram_matrix, perceptual_loss, GramMatrix,
};
pub use pixel::{pixel_loss, PixelMode};
pub use spectral::{sam_loss, total_sam_loss, SAM_LOSS_EPS};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamMode {
    /// Mean over pixels of `1 − cos(angle)`.
    #[default]
    Cosine,
    /// `1 − Σf·t / (Σf² · Σt² + ε)` over the whole image, unnormalized.
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiscMode {
    /// `1 − log D(fake) + log D(real)`.
    #[default]
    AsPrinted,
    /// Binary cross-entropy, `−log(1 − D(fake)) − log D(real)`.
    Bce,
}

/// Weights and mode flags for the composite generator objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    /// Adversarial weight.
    pub alpha: f64,
    /// L1 reconstruction weight.
    pub beta: f64,
    /// Weight of the generator loss in the combined objective.
    pub eta1: f64,
    /// Weight of the regularizer in the combined objective.
    pub eta2: f64,
    pub sam_mode: SamMode,
    pub disc_mode: DiscMode,
}

impl Default for LossSpec {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            eta1: 1.0,
            eta2: 1.0,
            sam_mode: SamMode::default(),
            disc_mode: DiscMode::default(),
        }
    }
}

impl LossSpec {
    pub fn validate(&self) -> Result<()> {
        if ![self.alpha, self.beta, self.eta1, self.eta2]
            .iter()
            .all(|w| w.is_finite())
        {
            return Err(Error::InvalidArgument("loss weights must be finite".into()));
        }
        if self.eta1 < 0.0 || self.eta2 < 0.0 {
            return Err(Error::InvalidArgument(
                "combination weights must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// `η₁ · base + η₂ · regularizer`.
pub fn combined_loss(base: f64, regularizer: f64, spec: &LossSpec) -> f64 {
    spec.eta1 * base + spec.eta2 * regularizer
}

/// Loss names accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossId {
    L1,
    Mse,
    Sam,
    SamPrinted,
    TotalSam,
    Perceptual,
    GmPerceptual,
    GmReconstruction,
    GenAdv,
    Disc,
}

impl LossId {
    pub const ALL: [LossId; 10] = [
        LossId::L1,
        LossId::Mse,
        LossId::Sam,
        LossId::SamPrinted,
        LossId::TotalSam,
        LossId::Perceptual,
        LossId::GmPerceptual,
        LossId::GmReconstruction,
        LossId::GenAdv,
        LossId::Disc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossId::L1 => "l1",
            LossId::Mse => "mse",
            LossId::Sam => "sam",
            LossId::SamPrinted => "sam-printed",
            LossId::TotalSam => "total-sam",
            LossId::Perceptual => "perceptual",
            LossId::GmPerceptual => "gm-perceptual",
            LossId::GmReconstruction => "gm-reconstruction",
            LossId::GenAdv => "gen-adv",
            LossId::Disc => "disc",
        }
    }
}

impl fmt::Display for LossId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown loss {s:?}")))
    }
}
