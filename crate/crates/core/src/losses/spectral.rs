use super::SamMode;
use crate::error::{shape_err, Error, Result};
use crate::raster::Raster;
use crate::resample::{downsample_antialias, downsample_antialias_adjoint};

pub const SAM_LOSS_EPS: f64 = 1e-12;

fn check(fused: &Raster, target: &Raster) -> Result<()> {
    fused.ensure_same_shape(target, "SAM loss")?;
    if fused.bands() < 2 {
        return Err(Error::InvalidArgument(
            "SAM loss needs at least 2 bands".into(),
        ));
    }
    Ok(())
}

pub fn sam_loss(fused: &Raster, target: &Raster, mode: SamMode) -> Result<f64> {
    check(fused, target)?;
    Ok(match mode {
        SamMode::Cosine => {
            let mut total = 0.0;
            for (f, t) in fused.pixels().zip(target.pixels()) {
                let (dot, nf, nt) = dot_norms(f, t);
                total += 1.0 - dot / (nf * nt + SAM_LOSS_EPS);
            }
            total / fused.pixel_count() as f64
        }
        SamMode::AsPrinted => {
            let (s, a, b) = global_sums(fused, target);
            1.0 - s / (a * b + SAM_LOSS_EPS)
        }
    })
}

fn dot_norms(f: &[f64], t: &[f64]) -> (f64, f64, f64) {
    let (mut dot, mut ff, mut tt) = (0.0, 0.0, 0.0);
    for (a, b) in f.iter().zip(t) {
        dot += a * b;
        ff += a * a;
        tt += b * b;
    }
    (dot, ff.sqrt(), tt.sqrt())
}

/// `(Σ f·t, Σ f², Σ t²)` over every element.
fn global_sums(fused: &Raster, target: &Raster) -> (f64, f64, f64) {
    let (mut s, mut a, mut b) = (0.0, 0.0, 0.0);
    for (f, t) in fused.data().iter().zip(target.data()) {
        s += f * t;
        a += f * f;
        b += t * t;
    }
    (s, a, b)
}

pub(crate) fn sam_loss_gradient(fused: &Raster, target: &Raster, mode: SamMode) -> Result<Raster> {
    check(fused, target)?;
    let bands = fused.bands();
    let mut grad = Vec::with_capacity(fused.len());
    match mode {
        SamMode::Cosine => {
            let scale = -1.0 / fused.pixel_count() as f64;
            for (f, t) in fused.pixels().zip(target.pixels()) {
                let (dot, nf, nt) = dot_norms(f, t);
                let d = nf * nt + SAM_LOSS_EPS;
                // ∂/∂f [dot / (‖f‖‖t‖ + ε)]; the ‖f‖ term vanishes at f = 0.
                let radial = if nf > 0.0 {
                    dot * nt / (nf * d * d)
                } else {
                    0.0
                };
                for b in 0..bands {
                    grad.push(scale * (t[b] / d - radial * f[b]));
                }
            }
        }
        SamMode::AsPrinted => {
            let (s, a, b) = global_sums(fused, target);
            let d = a * b + SAM_LOSS_EPS;
            for (f, t) in fused.data().iter().zip(target.data()) {
                grad.push(-(t * d - s * 2.0 * f * b) / (d * d));
            }
        }
    }
    Raster::new(fused.width(), fused.height(), bands, grad)
}

fn check_total(fused: &Raster, reference: &Raster, lrms: &Raster, ratio: usize) -> Result<()> {
    fused.ensure_same_shape(reference, "total SAM loss")?;
    if ratio == 0
        || lrms.bands() != fused.bands()
        || lrms.width() * ratio != fused.width()
        || lrms.height() * ratio != fused.height()
    {
        return Err(shape_err!(
            "lrms {} is not fused {} reduced by {ratio}",
            lrms.shape_string(),
            fused.shape_string()
        ));
    }
    Ok(())
}

/// Equal-weight SAM loss at full resolution (against the reference) and at
/// reduced resolution (degraded fused image against the LRMS input).
pub fn total_sam_loss(
    fused: &Raster,
    reference: &Raster,
    lrms: &Raster,
    ratio: usize,
    mode: SamMode,
) -> Result<f64> {
    check_total(fused, reference, lrms, ratio)?;
    let full = sam_loss(fused, reference, mode)?;
    let low = sam_loss(&downsample_antialias(fused, ratio)?, lrms, mode)?;
    Ok(0.5 * full + 0.5 * low)
}

pub(crate) fn total_sam_loss_gradient(
    fused: &Raster,
    reference: &Raster,
    lrms: &Raster,
    ratio: usize,
    mode: SamMode,
) -> Result<Raster> {
    check_total(fused, reference, lrms, ratio)?;
    let full = sam_loss_gradient(fused, reference, mode)?;
    let low = sam_loss_gradient(&downsample_antialias(fused, ratio)?, lrms, mode)?;
    let back = downsample_antialias_adjoint(&low, fused.width(), fused.height(), ratio)?;
    full.zip_map(&back, |a, b| 0.5 * a + 0.5 * b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(seed: usize) -> Raster {
        Raster::from_fn(8, 8, 4, |x, y, b| {
            0.2 + 0.6 * (((x * 7 + y * 3 + b * 5 + seed) % 17) as f64 / 17.0)
        })
        .unwrap()
    }

    #[test]
    fn cosine_identity_and_orthogonal() {
        let x = sample(1);
        assert!(sam_loss(&x, &x, SamMode::Cosine).unwrap().abs() < 1e-12);
        let f = Raster::new(1, 1, 4, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let t = Raster::new(1, 1, 4, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((sam_loss(&f, &t, SamMode::Cosine).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_scale_invariant() {
        let (f, t) = (sample(2), sample(3));
        let base = sam_loss(&f, &t, SamMode::Cosine).unwrap();
        let scaled = sam_loss(&f.map(|v| 3.7 * v), &t, SamMode::Cosine).unwrap();
        assert!((base - scaled).abs() < 1e-9);
    }

    #[test]
    fn as_printed_follows_global_formula() {
        let (f, t) = (sample(4), sample(5));
        let s: f64 = f.data().iter().zip(t.data()).map(|(a, b)| a * b).sum();
        let a: f64 = f.data().iter().map(|v| v * v).sum();
        let b: f64 = t.data().iter().map(|v| v * v).sum();
        let expected = 1.0 - s / (a * b + SAM_LOSS_EPS);
        assert!((sam_loss(&f, &t, SamMode::AsPrinted).unwrap() - expected).abs() < 1e-15);
        // Not zero at identity.
        assert!(sam_loss(&f, &f, SamMode::AsPrinted).unwrap().abs() > 1e-3);
    }

    #[test]
    fn total_is_half_and_half() {
        let fused = Raster::from_fn(16, 16, 4, |x, y, b| {
            0.3 + 0.02 * ((x + 2 * y + b) % 9) as f64
        })
        .unwrap();
        let reference = fused.map(|v| v * 0.9 + 0.05);
        let lrms =
            Raster::from_fn(4, 4, 4, |x, y, b| 0.4 + 0.05 * ((x * y + b) % 3) as f64).unwrap();
        let got = total_sam_loss(&fused, &reference, &lrms, 4, SamMode::Cosine).unwrap();
        let t1 = sam_loss(&fused, &reference, SamMode::Cosine).unwrap();
        let t2 = sam_loss(
            &downsample_antialias(&fused, 4).unwrap(),
            &lrms,
            SamMode::Cosine,
        )
        .unwrap();
        assert!((got - 0.5 * (t1 + t2)).abs() < 1e-15);

        let consistent = downsample_antialias(&fused, 4).unwrap();
        assert!(total_sam_loss(&fused, &fused, &consistent, 4, SamMode::Cosine).unwrap() < 1e-9);
        assert!(total_sam_loss(&fused, &fused, &consistent, 2, SamMode::Cosine).is_err());
    }

    #[test]
    fn cosine_gradient_vanishes_at_identity() {
        let x = sample(6);
        let g = sam_loss_gradient(&x, &x, SamMode::Cosine).unwrap();
        assert!(g.data().iter().all(|v| v.abs() < 1e-9));
    }
}
