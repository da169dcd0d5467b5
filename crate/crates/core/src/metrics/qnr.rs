use super::qindex::uiqi_values;
use crate::error::{shape_err, Result};
use crate::raster::Raster;
use crate::resample::downsample_antialias;

/// Smallest tile used on the reduced-resolution pair.
pub const QNR_MIN_LOW_BLOCK: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qnr {
    pub qnr: f64,
    pub d_lambda: f64,
    pub d_s: f64,
}

/// No-reference quality with exponents α = β = p = q = 1.
///
/// `D_λ` compares inter-band Q indices of the fused image with those of the
/// MS input; `D_s` compares each band's Q against the PAN at both scales.
pub fn metric_qnr(
    fused: &Raster,
    lrms: &Raster,
    pan: &Raster,
    ratio: usize,
    block: usize,
) -> Result<Qnr> {
    if pan.bands() != 1 || !fused.same_dims(pan) {
        return Err(shape_err!(
            "pan {} must be single-band with the size of fused {}",
            pan.shape_string(),
            fused.shape_string()
        ));
    }
    if fused.bands() != lrms.bands()
        || ratio == 0
        || lrms.width() * ratio != fused.width()
        || lrms.height() * ratio != fused.height()
    {
        return Err(shape_err!(
            "lrms {} is not fused {} reduced by {ratio}",
            lrms.shape_string(),
            fused.shape_string()
        ));
    }
    let pan_low = downsample_antialias(pan, ratio)?;
    let (fw, fh) = (fused.width(), fused.height());
    let (lw, lh) = (lrms.width(), lrms.height());
    let low_block = (block / ratio).max(QNR_MIN_LOW_BLOCK).min(lw.min(lh));

    let bands = fused.bands();
    let f: Vec<Vec<f64>> = (0..bands).map(|b| fused.band_values(b)).collect();
    let m: Vec<Vec<f64>> = (0..bands).map(|b| lrms.band_values(b)).collect();

    let mut d_lambda = 0.0;
    if bands > 1 {
        for i in 0..bands {
            for j in 0..bands {
                if i == j {
                    continue;
                }
                let qf = uiqi_values(&f[i], &f[j], fw, fh, block)?;
                let qm = uiqi_values(&m[i], &m[j], lw, lh, low_block)?;
                d_lambda += (qf - qm).abs();
            }
        }
        d_lambda /= (bands * (bands - 1)) as f64;
    }

    let mut d_s = 0.0;
    for b in 0..bands {
        let qf = uiqi_values(&f[b], pan.data(), fw, fh, block)?;
        let qm = uiqi_values(&m[b], pan_low.data(), lw, lh, low_block)?;
        d_s += (qf - qm).abs();
    }
    d_s /= bands as f64;

    let d_lambda = d_lambda.clamp(0.0, 1.0);
    let d_s = d_s.clamp(0.0, 1.0);
    Ok(Qnr {
        qnr: (1.0 - d_lambda) * (1.0 - d_s),
        d_lambda,
        d_s,
    })
}
