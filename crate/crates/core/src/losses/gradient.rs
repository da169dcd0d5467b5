use super::gram::{
    gm_perceptual_loss, gm_reconstruction_gradient, gm_reconstruction_loss,
    perceptual_identity_gradient, perceptual_loss,
};
use super::pixel::{pixel_loss, PixelMode};
use super::spectral::{sam_loss, sam_loss_gradient, total_sam_loss, total_sam_loss_gradient};
use super::SamMode;
use crate::error::{Error, Result};
use crate::features::Extractor;
use crate::raster::Raster;

/// A scalar loss of the fused image, with its fixed context.
#[derive(Debug, Clone, Copy)]
pub enum DifferentiableLoss<'a> {
    L1 {
        reference: &'a Raster,
    },
    Mse {
        reference: &'a Raster,
    },
    Sam {
        target: &'a Raster,
        mode: SamMode,
    },
    TotalSam {
        reference: &'a Raster,
        lrms: &'a Raster,
        ratio: usize,
        mode: SamMode,
    },
    GmReconstruction {
        reference: &'a Raster,
    },
    Perceptual {
        reference: &'a Raster,
        extractor: &'a Extractor,
    },
    GmPerceptual {
        reference: &'a Raster,
        extractor: &'a Extractor,
    },
}

impl DifferentiableLoss<'_> {
    pub fn value(&self, fused: &Raster) -> Result<f64> {
        match *self {
            Self::L1 { reference } => pixel_loss(fused, reference, PixelMode::L1),
            Self::Mse { reference } => pixel_loss(fused, reference, PixelMode::Mse),
            Self::Sam { target, mode } => sam_loss(fused, target, mode),
            Self::TotalSam {
                reference,
                lrms,
                ratio,
                mode,
            } => total_sam_loss(fused, reference, lrms, ratio, mode),
            Self::GmReconstruction { reference } => gm_reconstruction_loss(fused, reference),
            Self::Perceptual {
                reference,
                extractor,
            } => perceptual_loss(fused, reference, extractor),
            Self::GmPerceptual {
                reference,
                extractor,
            } => gm_perceptual_loss(fused, reference, extractor),
        }
    }

    /// Analytic `∂loss/∂fused`. Losses through a convolutional extractor have
    /// no analytic gradient; use [`finite_difference_gradient`] for those.
    pub fn gradient(&self, fused: &Raster) -> Result<Raster> {
        match *self {
            Self::L1 { reference } => {
                let n = fused.len() as f64;
                // sign(0) = 0
                fused.zip_map(reference, |a, b| {
                    let d = a - b;
                    if d > 0.0 {
                        1.0 / n
                    } else if d < 0.0 {
                        -1.0 / n
                    } else {
                        0.0
                    }
                })
            }
            Self::Mse { reference } => {
                let n = fused.len() as f64;
                fused.zip_map(reference, |a, b| 2.0 * (a - b) / n)
            }
            Self::Sam { target, mode } => sam_loss_gradient(fused, target, mode),
            Self::TotalSam {
                reference,
                lrms,
                ratio,
                mode,
            } => total_sam_loss_gradient(fused, reference, lrms, ratio, mode),
            Self::GmReconstruction { reference } => gm_reconstruction_gradient(fused, reference),
            Self::Perceptual {
                reference,
                extractor,
            } => {
                require_identity(extractor, "perceptual")?;
                perceptual_identity_gradient(fused, reference)
            }
            Self::GmPerceptual {
                reference,
                extractor,
            } => {
                require_identity(extractor, "gm-perceptual")?;
                gm_reconstruction_gradient(fused, reference)
            }
        }
    }
}

fn require_identity(extractor: &Extractor, name: &str) -> Result<()> {
    if extractor.is_identity() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "analytic gradient of {name} loss through a convolutional extractor"
        )))
    }
}

pub fn loss_gradient(loss: &DifferentiableLoss<'_>, fused: &Raster) -> Result<Raster> {
    loss.gradient(fused)
}

/// Central differences `(L(x + h·e_i) − L(x − h·e_i)) / 2h` for every element.
/// Costs two loss evaluations per element; meant for small rasters.
pub fn finite_difference_gradient<F>(loss: F, fused: &Raster, h: f64) -> Result<Raster>
where
    F: Fn(&Raster) -> Result<f64>,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let mut probe = fused.clone();
    let mut grad = Vec::with_capacity(fused.len());
    for i in 0..fused.len() {
        let x = fused.data()[i];
        probe.data_mut()[i] = x + h;
        let plus = loss(&probe)?;
        probe.data_mut()[i] = x - h;
        let minus = loss(&probe)?;
        probe.data_mut()[i] = x;
        grad.push((plus - minus) / (2.0 * h));
    }
    Raster::new(fused.width(), fused.height(), fused.bands(), grad)
}

/// `max_i |a_i − b_i| / (|a_i| + |b_i| + 1e-8)`.
pub fn max_relative_error(a: &Raster, b: &Raster) -> f64 {
    assert!(a.same_shape(b), "gradient shapes differ");
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs() / (x.abs() + y.abs() + 1e-8))
        .fold(0.0, f64::max)
}
