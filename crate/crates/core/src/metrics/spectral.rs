use crate::error::{Error, Result};
use crate::raster::Raster;

/// Norm guard for spectral angles.
pub const SAM_EPS: f64 = 1e-12;

/// Mean per-pixel spectral angle in radians. Pixels where either spectrum has
/// norm below [`SAM_EPS`] count as zero angle.
pub fn metric_sam(fused: &Raster, reference: &Raster) -> Result<f64> {
    fused.ensure_same_shape(reference, "SAM")?;
    if fused.bands() < 2 {
        return Err(Error::InvalidArgument(
            "spectral angle needs at least 2 bands".into(),
        ));
    }
    let mut total = 0.0;
    for (f, g) in fused.pixels().zip(reference.pixels()) {
        total += spectral_angle(f, g);
    }
    Ok(total / fused.pixel_count() as f64)
}

// atan2 of the cross and dot magnitudes instead of acos of the cosine, which
// loses about 1e-8 rad near zero. |a|²|b|² − (a·b)² comes from the Lagrange
// identity so identical spectra give exactly 0.
fn spectral_angle(f: &[f64], g: &[f64]) -> f64 {
    let (mut dot, mut nf, mut ng) = (0.0, 0.0, 0.0);
    for (a, b) in f.iter().zip(g) {
        dot += a * b;
        nf += a * a;
        ng += b * b;
    }
    if nf.sqrt() < SAM_EPS || ng.sqrt() < SAM_EPS {
        return 0.0;
    }
    let mut cross = 0.0;
    for i in 0..f.len() {
        for j in i + 1..f.len() {
            let c = f[i] * g[j] - f[j] * g[i];
            cross += c * c;
        }
    }
    cross.sqrt().atan2(dot)
}

/// `100 / ratio · sqrt(mean_b RMSE_b² / μ_b²)` with `μ_b` the reference band mean.
pub fn metric_ergas(fused: &Raster, reference: &Raster, ratio: usize) -> Result<f64> {
    fused.ensure_same_shape(reference, "ERGAS")?;
    if ratio == 0 {
        return Err(Error::InvalidArgument("ratio must be at least 1".into()));
    }
    let bands = fused.bands();
    let n = fused.pixel_count() as f64;
    let mut sq_err = vec![0.0; bands];
    let mut sums = vec![0.0; bands];
    for (f, g) in fused.pixels().zip(reference.pixels()) {
        for b in 0..bands {
            let d = f[b] - g[b];
            sq_err[b] += d * d;
            sums[b] += g[b];
        }
    }
    let mut acc = 0.0;
    for b in 0..bands {
        let mu = sums[b] / n;
        if mu.abs() < 1e-12 {
            return Err(Error::Degenerate(format!(
                "reference band {b} has zero mean"
            )));
        }
        acc += (sq_err[b] / n) / (mu * mu);
    }
    Ok(100.0 / ratio as f64 * (acc / bands as f64).sqrt())
}
