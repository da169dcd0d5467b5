//! Gram-Schmidt substitution in injection-gain form:
//! `F_b = M̃_b + g_b · (P' − I_L)` with `g_b = cov(M̃_b, I_L) / var(I_L)`.

use nalgebra::{DMatrix, DVector};

use super::{band_mean, inject, FusionInput};
use crate::error::{shape_err, Error, Result};
use crate::raster::Raster;
use crate::resample::{downsample_antialias, histogram_match, upsample, FLAT_STD};

/// How the low-resolution PAN surrogate `I_L` is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LowResPanMode {
    /// Equal-weight mean of the upsampled MS bands.
    #[default]
    WeightedMean,
    /// PAN blurred and decimated by the ratio, then re-upsampled.
    BlurDecimate,
    /// Band weights fitted by least squares against the degraded PAN.
    Mmse,
}

/// Minimum singular-value ratio accepted by the least-squares fit.
const RANK_TOL: f64 = 1e-10;

/// Least-squares weights `w = argmin ‖P_L − Σ w_b·lrms_b‖²`, where `P_L` is
/// the PAN degraded to the MS grid. Unconstrained, no intercept.
pub fn estimate_mmse_weights(lrms: &Raster, pan: &Raster, ratio: usize) -> Result<Vec<f64>> {
    let pan_low = downsample_antialias(pan, ratio)?;
    if !pan_low.same_dims(lrms) {
        return Err(shape_err!(
            "degraded pan {} does not match lrms {}",
            pan_low.shape_string(),
            lrms.shape_string()
        ));
    }
    let bands = lrms.bands();
    let design = DMatrix::from_row_slice(lrms.pixel_count(), bands, lrms.data());
    let target = DVector::from_column_slice(pan_low.data());
    let svd = design.svd(true, true);
    let sv = &svd.singular_values;
    let (max, min) = (sv.max(), sv.min());
    if max <= 0.0 || min <= RANK_TOL * max {
        return Err(Error::Degenerate(format!(
            "MMSE band-weight system is rank deficient (singular values {max:e} .. {min:e})"
        )));
    }
    let w = svd
        .solve(&target, 0.0)
        .map_err(|e| Error::Degenerate(format!("least-squares solve failed: {e}")))?;
    Ok(w.iter().copied().collect())
}

fn low_res_pan(input: &FusionInput, ms: &Raster, mode: LowResPanMode) -> Result<Raster> {
    match mode {
        LowResPanMode::WeightedMean => Ok(band_mean(ms)),
        LowResPanMode::BlurDecimate => {
            let low = downsample_antialias(input.pan(), input.ratio())?;
            upsample(&low, input.ratio())
        }
        LowResPanMode::Mmse => {
            let w = estimate_mmse_weights(input.lrms(), input.pan(), input.ratio())?;
            let data = ms
                .pixels()
                .map(|p| p.iter().zip(&w).map(|(v, w)| v * w).sum())
                .collect();
            Raster::new(ms.width(), ms.height(), 1, data)
        }
    }
}

pub fn fuse_gs(input: &FusionInput, mode: LowResPanMode) -> Result<Raster> {
    let ms = input.upsampled_ms()?;
    let intensity = low_res_pan(input, &ms, mode)?;
    let gains = injection_gains(&ms, &intensity)?;
    let matched = histogram_match(input.pan(), &intensity)?;
    let detail: Vec<f64> = matched
        .data()
        .iter()
        .zip(intensity.data())
        .map(|(p, i)| p - i)
        .collect();
    Ok(inject(&ms, &detail, &gains))
}

/// `g_b = cov(ms_b, intensity) / var(intensity)`.
pub(crate) fn injection_gains(ms: &Raster, intensity: &Raster) -> Result<Vec<f64>> {
    let n = ms.pixel_count() as f64;
    let i = intensity.data();
    let mu_i = i.iter().sum::<f64>() / n;
    let var_i = i.iter().map(|v| (v - mu_i) * (v - mu_i)).sum::<f64>() / n;
    if var_i.sqrt() < FLAT_STD {
        return Err(Error::Degenerate(
            "low-resolution pan surrogate has zero variance".into(),
        ));
    }
    let bands = ms.bands();
    let mut means = vec![0.0; bands];
    for p in ms.pixels() {
        for (m, v) in means.iter_mut().zip(p) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut cov = vec![0.0; bands];
    for (p, iv) in ms.pixels().zip(i) {
        let di = iv - mu_i;
        for b in 0..bands {
            cov[b] += (p[b] - means[b]) * di;
        }
    }
    Ok(cov.into_iter().map(|c| c / n / var_i).collect())
}
