//! Classical pansharpening baselines.
//!
//! Component substitution (GIHS, Brovey, PCA, Gram-Schmidt) and high-pass
//! injection (HPF). Every method upsamples the MS cube to the PAN grid first
//! and clips its output to `[0, 1]`.

mod gs;
mod pca;

use std::fmt;
use std::str::FromStr;

pub use gs::{estimate_mmse_weights, fuse_gs, LowResPanMode};
pub use pca::{fuse_pca, PcaTransform};

use crate::error::{shape_err, Error, Result};
use crate::raster::Raster;
use crate::resample::{box_blur, histogram_match, upsample};

/// Guard for the Brovey intensity division.
pub const BROVEY_EPS: f64 = 1e-12;

/// A validated (LRMS, PAN) pair with `pan = ratio × lrms` in each dimension.
#[derive(Debug, Clone)]
pub struct FusionInput {
    lrms: Raster,
    pan: Raster,
    ratio: usize,
}

impl FusionInput {
    pub fn new(lrms: Raster, pan: Raster, ratio: usize) -> Result<Self> {
        if ratio == 0 {
            return Err(Error::InvalidArgument("ratio must be at least 1".into()));
        }
        if pan.bands() != 1 {
            return Err(shape_err!("pan has {} bands, expected 1", pan.bands()));
        }
        if pan.width() != ratio * lrms.width() || pan.height() != ratio * lrms.height() {
            return Err(shape_err!(
                "pan {}x{} is not {ratio}x lrms {}x{}",
                pan.width(),
                pan.height(),
                lrms.width(),
                lrms.height()
            ));
        }
        Ok(Self { lrms, pan, ratio })
    }

    /// Infers the ratio from the two sizes.
    pub fn infer(lrms: Raster, pan: Raster) -> Result<Self> {
        let ratio = pan.width() / lrms.width();
        if ratio == 0 || !pan.width().is_multiple_of(lrms.width()) {
            return Err(shape_err!(
                "pan width {} is not a multiple of lrms width {}",
                pan.width(),
                lrms.width()
            ));
        }
        Self::new(lrms, pan, ratio)
    }

    pub fn lrms(&self) -> &Raster {
        &self.lrms
    }

    pub fn pan(&self) -> &Raster {
        &self.pan
    }

    pub fn ratio(&self) -> usize {
        self.ratio
    }

    /// The MS cube interpolated onto the PAN grid.
    pub fn upsampled_ms(&self) -> Result<Raster> {
        upsample(&self.lrms, self.ratio)
    }
}

/// Equal-weight band mean, as a single-band raster.
pub fn band_mean(ms: &Raster) -> Raster {
    let n = ms.bands() as f64;
    let data = ms.pixels().map(|p| p.iter().sum::<f64>() / n).collect();
    Raster::from_parts(ms.width(), ms.height(), 1, data)
}

/// Adds `gain[b] · detail` to each band and clips.
pub(crate) fn inject(ms: &Raster, detail: &[f64], gains: &[f64]) -> Raster {
    debug_assert_eq!(detail.len(), ms.pixel_count());
    debug_assert_eq!(gains.len(), ms.bands());
    let bands = ms.bands();
    let data = ms
        .data()
        .iter()
        .enumerate()
        .map(|(i, v)| (v + gains[i % bands] * detail[i / bands]).clamp(0.0, 1.0))
        .collect();
    Raster::from_parts(ms.width(), ms.height(), bands, data)
}

/// Generalized IHS: `F_b = M̃_b + (P' − I)` with `I` the band mean and `P'` the
/// PAN matched to `I`.
pub fn fuse_gihs(input: &FusionInput) -> Result<Raster> {
    if input.lrms.bands() < 3 {
        return Err(Error::InvalidArgument(format!(
            "GIHS needs at least 3 bands, got {}",
            input.lrms.bands()
        )));
    }
    let ms = input.upsampled_ms()?;
    let intensity = band_mean(&ms);
    let matched = histogram_match(&input.pan, &intensity)?;
    let detail: Vec<f64> = matched
        .data()
        .iter()
        .zip(intensity.data())
        .map(|(p, i)| p - i)
        .collect();
    Ok(inject(&ms, &detail, &vec![1.0; ms.bands()]))
}

/// Brovey: `F_b = M̃_b · P' / (I + ε)`.
pub fn fuse_brovey(input: &FusionInput) -> Result<Raster> {
    let ms = input.upsampled_ms()?;
    let intensity = band_mean(&ms);
    let matched = histogram_match(&input.pan, &intensity)?;
    let bands = ms.bands();
    let mut data = Vec::with_capacity(ms.len());
    for ((px, p), i) in ms.pixels().zip(matched.data()).zip(intensity.data()) {
        let scale = p / (i + BROVEY_EPS);
        data.extend(px.iter().map(|v| (v * scale).clamp(0.0, 1.0)));
    }
    Ok(Raster::from_parts(ms.width(), ms.height(), bands, data))
}

/// Side of the HPF box filter for a given ratio.
pub fn hpf_kernel_size(ratio: usize) -> usize {
    2 * ratio + 1
}

/// High-pass filter injection: `F_b = M̃_b + (P − box(P))`.
pub fn fuse_hpf(input: &FusionInput) -> Result<Raster> {
    let ms = input.upsampled_ms()?;
    let low = box_blur(&input.pan, hpf_kernel_size(input.ratio))?;
    let detail: Vec<f64> = input
        .pan
        .data()
        .iter()
        .zip(low.data())
        .map(|(p, l)| p - l)
        .collect();
    Ok(inject(&ms, &detail, &vec![1.0; ms.bands()]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionMethod {
    Gihs,
    Brovey,
    Pca,
    Gs(LowResPanMode),
    Hpf,
}

impl FusionMethod {
    /// The five baselines reported side by side.
    pub const TABLE: [FusionMethod; 5] = [
        FusionMethod::Gihs,
        FusionMethod::Brovey,
        FusionMethod::Pca,
        FusionMethod::Gs(LowResPanMode::WeightedMean),
        FusionMethod::Hpf,
    ];

    pub fn fuse(self, input: &FusionInput) -> Result<Raster> {
        match self {
            FusionMethod::Gihs => fuse_gihs(input),
            FusionMethod::Brovey => fuse_brovey(input),
            FusionMethod::Pca => fuse_pca(input),
            FusionMethod::Gs(mode) => fuse_gs(input, mode),
            FusionMethod::Hpf => fuse_hpf(input),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FusionMethod::Gihs => "gihs",
            FusionMethod::Brovey => "brovey",
            FusionMethod::Pca => "pca",
            FusionMethod::Gs(LowResPanMode::WeightedMean) => "gs",
            FusionMethod::Gs(LowResPanMode::BlurDecimate) => "gs-blur",
            FusionMethod::Gs(LowResPanMode::Mmse) => "gs-mmse",
            FusionMethod::Hpf => "hpf",
        }
    }
}

impl fmt::Display for FusionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FusionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gihs" => FusionMethod::Gihs,
            "brovey" => FusionMethod::Brovey,
            "pca" => FusionMethod::Pca,
            "gs" => FusionMethod::Gs(LowResPanMode::WeightedMean),
            "gs-blur" => FusionMethod::Gs(LowResPanMode::BlurDecimate),
            "gs-mmse" => FusionMethod::Gs(LowResPanMode::Mmse),
            "hpf" => FusionMethod::Hpf,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown fusion method {other:?}"
                )))
            }
        })
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::raster::synth_scene;
    use crate::resample::downsample_antialias;

    /// `(lrms, M̃, hrms, pan)` from a synthetic scene degraded by `ratio`.
    pub fn scene(
        size: usize,
        bands: usize,
        ratio: usize,
        seed: u64,
    ) -> (Raster, Raster, Raster, Raster) {
        let (hrms, pan) = synth_scene(size, size, bands, seed, &vec![1.0; bands]).unwrap();
        let lrms = downsample_antialias(&hrms, ratio).unwrap();
        let up = upsample(&lrms, ratio).unwrap();
        (lrms, up, hrms, pan)
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::scene;
    use super::*;

    fn in_unit_range(r: &Raster) -> bool {
        r.data().iter().all(|v| (0.0..=1.0).contains(v))
    }

    #[test]
    fn fusion_input_validates_geometry() {
        let ms = Raster::filled(8, 8, 4, 0.5).unwrap();
        assert!(FusionInput::new(ms.clone(), Raster::filled(32, 32, 1, 0.5).unwrap(), 4).is_ok());
        assert!(matches!(
            FusionInput::new(ms.clone(), Raster::filled(32, 30, 1, 0.5).unwrap(), 4),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            FusionInput::new(ms.clone(), Raster::filled(32, 32, 2, 0.5).unwrap(), 4),
            Err(Error::Shape(_))
        ));
        let inferred = FusionInput::infer(ms, Raster::filled(16, 16, 1, 0.5).unwrap()).unwrap();
        assert_eq!(inferred.ratio(), 2);
    }

    #[test]
    fn gihs_pixel_injection_with_clip() {
        let ms = Raster::new(1, 1, 4, vec![0.2, 0.4, 0.6, 0.8]).unwrap();
        let out = inject(&ms, &[1.0 - 0.5], &[1.0; 4]);
        let expected = [0.7, 0.9, 1.0, 1.0];
        for (a, b) in out.data().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn gihs_exact_recovery_when_pan_is_intensity() {
        let (lrms, up, _, _) = scene(64, 4, 4, 1);
        let pan = band_mean(&up);
        let out = fuse_gihs(&FusionInput::new(lrms, pan, 4).unwrap()).unwrap();
        assert!(out.max_abs_diff(&up) < 1e-6);
    }

    #[test]
    fn gihs_constant_scene_stays_constant() {
        let lrms = Raster::filled(8, 8, 4, 0.3).unwrap();
        let pan = Raster::from_fn(32, 32, 1, |x, y, _| ((x + y) % 5) as f64 / 5.0).unwrap();
        let out = fuse_gihs(&FusionInput::new(lrms, pan, 4).unwrap()).unwrap();
        assert!(out.data().iter().all(|v| (v - 0.3).abs() < 1e-12));
    }

    #[test]
    fn gihs_needs_three_bands() {
        let lrms = Raster::filled(4, 4, 2, 0.3).unwrap();
        let pan = Raster::filled(8, 8, 1, 0.3).unwrap();
        assert!(fuse_gihs(&FusionInput::new(lrms, pan, 2).unwrap()).is_err());
    }

    #[test]
    fn brovey_pixel_scaling() {
        // M̃ = (0.1, 0.2, 0.3, 0.4), I = 0.25, P' = 0.5 → factor 2.
        let px = [0.1, 0.2, 0.3, 0.4];
        let scale = 0.5 / (0.25 + BROVEY_EPS);
        let got: Vec<f64> = px.iter().map(|v| (v * scale).clamp(0.0, 1.0)).collect();
        for (a, b) in got.iter().zip([0.2, 0.4, 0.6, 0.8]) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn brovey_recovery_and_band_ratios() {
        let (lrms, up, _, pan) = scene(64, 4, 4, 2);
        let exact =
            fuse_brovey(&FusionInput::new(lrms.clone(), band_mean(&up), 4).unwrap()).unwrap();
        assert!(exact.max_abs_diff(&up) < 1e-6);

        let out = fuse_brovey(&FusionInput::new(lrms, pan, 4).unwrap()).unwrap();
        assert!(in_unit_range(&out));
        for (f, m) in out.pixels().zip(up.pixels()) {
            if f.iter().any(|&v| v >= 1.0) || m[3] <= 1e-6 {
                continue;
            }
            for b in 0..3 {
                assert!((f[b] / f[3] - m[b] / m[3]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn hpf_constant_pan_is_identity() {
        let (lrms, up, _, _) = scene(64, 4, 4, 3);
        let pan = Raster::filled(64, 64, 1, 0.45).unwrap();
        let out = fuse_hpf(&FusionInput::new(lrms, pan, 4).unwrap()).unwrap();
        assert!(out.max_abs_diff(&up) < 1e-12);
    }

    #[test]
    fn hpf_detail_is_nearly_zero_mean() {
        let (_, _, _, pan) = scene(64, 4, 4, 4);
        assert_eq!(hpf_kernel_size(4), 9);
        let low = box_blur(&pan, hpf_kernel_size(4)).unwrap();
        let mean_detail = pan
            .data()
            .iter()
            .zip(low.data())
            .map(|(p, l)| p - l)
            .sum::<f64>()
            / pan.len() as f64;
        assert!(mean_detail.abs() < 1e-3, "{mean_detail}");
    }

    #[test]
    fn all_methods_shape_range_determinism() {
        let (lrms, _, _, pan) = scene(64, 4, 4, 5);
        let input = FusionInput::new(lrms, pan, 4).unwrap();
        for method in FusionMethod::TABLE.into_iter().chain([
            FusionMethod::Gs(LowResPanMode::Mmse),
            FusionMethod::Gs(LowResPanMode::BlurDecimate),
        ]) {
            let a = method.fuse(&input).unwrap();
            let b = method.fuse(&input).unwrap();
            assert_eq!(a.shape_string(), "64x64x4", "{method}");
            assert!(in_unit_range(&a), "{method}");
            assert_eq!(a, b, "{method}");
            assert_eq!(method.name().parse::<FusionMethod>().unwrap(), method);
        }
        assert!("ihs".parse::<FusionMethod>().is_err());
    }
}
