use crate::error::{shape_err, Result};
use crate::raster::Raster;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
/// Dynamic range of normalized reflectance.
pub const SSIM_RANGE: f64 = 1.0;
pub const SSIM_C1: f64 = (0.01 * SSIM_RANGE) * (0.01 * SSIM_RANGE);
pub const SSIM_C2: f64 = (0.03 * SSIM_RANGE) * (0.03 * SSIM_RANGE);

fn window() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as isize;
    let mut k: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable Gaussian filter over the valid region only.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (ow, oh) = (w + 1 - n, h + 1 - n);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            tmp[y * ow + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * src[y * w + x + i])
                .sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * tmp[(y + i) * ow + x])
                .sum();
        }
    }
    out
}

fn ssim_band(a: &[f64], b: &[f64], w: usize, h: usize, k: &[f64]) -> f64 {
    let mu_a = filter_valid(a, w, h, k);
    let mu_b = filter_valid(b, w, h, k);
    let aa: Vec<f64> = a.iter().map(|v| v * v).collect();
    let bb: Vec<f64> = b.iter().map(|v| v * v).collect();
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let e_aa = filter_valid(&aa, w, h, k);
    let e_bb = filter_valid(&bb, w, h, k);
    let e_ab = filter_valid(&ab, w, h, k);
    let mut acc = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = e_aa[i] - ma * ma;
        let vb = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        acc += ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
            / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2));
    }
    acc / mu_a.len() as f64
}

/// Mean structural similarity, Gaussian window 11×11 (σ = 1.5) over the valid
/// region, averaged over bands.
pub fn metric_ssim(fused: &Raster, reference: &Raster) -> Result<f64> {
    fused.ensure_same_shape(reference, "SSIM")?;
    let (w, h) = (fused.width(), fused.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(shape_err!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"
        ));
    }
    if fused == reference {
        return Ok(1.0);
    }
    let k = window();
    let mut total = 0.0;
    for b in 0..fused.bands() {
        total += ssim_band(&fused.band_values(b), &reference.band_values(b), w, h, &k);
    }
    Ok(total / fused.bands() as f64)
}
