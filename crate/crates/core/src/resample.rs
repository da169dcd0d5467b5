//! Resampling shared by the fusion methods and the reduced-resolution protocol.
//!
//! Every filter here is separable and built as a 1-D tap table with borders
//! already folded in by half-sample symmetric reflection
//! (`… 1 0 | 0 1 2 … n-1 | n-1 n-2 …`), so the forward operator and its
//! adjoint share one definition.

use crate::error::{shape_err, Error, Result};
use crate::raster::Raster;

/// Half-sample symmetric reflection of `i` into `0..n`. Valid for any offset.
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

/// 1-D linear operator: `out[o] = Σ weight · in[index]` over `taps[o]`.
#[derive(Debug, Clone)]
pub(crate) struct Taps1d {
    input_len: usize,
    taps: Vec<Vec<(usize, f64)>>,
}

impl Taps1d {
    /// Correlates with `kernel` (centered, odd length) at `out_len` positions
    /// `center(o)`, reflecting out-of-range reads.
    fn from_kernel(
        kernel: &[f64],
        input_len: usize,
        out_len: usize,
        center: impl Fn(usize) -> isize,
    ) -> Self {
        let radius = (kernel.len() / 2) as isize;
        let taps = (0..out_len)
            .map(|o| {
                let c = center(o);
                let mut row: Vec<(usize, f64)> = Vec::with_capacity(kernel.len());
                for (k, &w) in kernel.iter().enumerate() {
                    let j = reflect(c + k as isize - radius, input_len);
                    match row.iter_mut().find(|(idx, _)| *idx == j) {
                        Some(entry) => entry.1 += w,
                        None => row.push((j, w)),
                    }
                }
                row
            })
            .collect();
        Self { input_len, taps }
    }

    fn out_len(&self) -> usize {
        self.taps.len()
    }

    /// Applies the operator along x (`axis_x = true`) or y of every band.
    fn apply(&self, x: &Raster, axis_x: bool) -> Raster {
        let (w, h, bands) = (x.width(), x.height(), x.bands());
        let (ow, oh) = if axis_x {
            debug_assert_eq!(w, self.input_len);
            (self.out_len(), h)
        } else {
            debug_assert_eq!(h, self.input_len);
            (w, self.out_len())
        };
        let src = x.data();
        let mut out = vec![0.0; ow * oh * bands];
        for oy in 0..oh {
            for ox in 0..ow {
                let dst = (oy * ow + ox) * bands;
                let row = if axis_x {
                    &self.taps[ox]
                } else {
                    &self.taps[oy]
                };
                for &(j, wt) in row {
                    let s = if axis_x {
                        (oy * w + j) * bands
                    } else {
                        (j * w + ox) * bands
                    };
                    for b in 0..bands {
                        out[dst + b] += wt * src[s + b];
                    }
                }
            }
        }
        Raster::from_parts(ow, oh, bands, out)
    }

    /// Transpose of [`Self::apply`]: scatters `y` back onto the input grid.
    fn apply_adjoint(&self, y: &Raster, axis_x: bool) -> Raster {
        let (ow, oh, bands) = (y.width(), y.height(), y.bands());
        let (w, h) = if axis_x {
            (self.input_len, oh)
        } else {
            (ow, self.input_len)
        };
        let src = y.data();
        let mut out = vec![0.0; w * h * bands];
        for oy in 0..oh {
            for ox in 0..ow {
                let s = (oy * ow + ox) * bands;
                let row = if axis_x {
                    &self.taps[ox]
                } else {
                    &self.taps[oy]
                };
                for &(j, wt) in row {
                    let dst = if axis_x {
                        (oy * w + j) * bands
                    } else {
                        (j * w + ox) * bands
                    };
                    for b in 0..bands {
                        out[dst + b] += wt * src[s + b];
                    }
                }
            }
        }
        Raster::from_parts(w, h, bands, out)
    }
}

/// Normalized Gaussian taps for the anti-alias filter: σ = ratio/2, radius 2·ratio.
pub fn antialias_kernel(ratio: usize) -> Vec<f64> {
    let sigma = ratio as f64 / 2.0;
    let radius = 2 * ratio as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

fn check_ratio(ratio: usize) -> Result<()> {
    if ratio == 0 {
        Err(Error::InvalidArgument("ratio must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn blur_decimate_ops(width: usize, height: usize, ratio: usize) -> Result<(Taps1d, Taps1d)> {
    check_ratio(ratio)?;
    if !width.is_multiple_of(ratio) || !height.is_multiple_of(ratio) {
        return Err(shape_err!(
            "{width}x{height} is not divisible by ratio {ratio}"
        ));
    }
    let kernel = antialias_kernel(ratio);
    let center = |o: usize| (o * ratio) as isize;
    Ok((
        Taps1d::from_kernel(&kernel, width, width / ratio, center),
        Taps1d::from_kernel(&kernel, height, height / ratio, center),
    ))
}

/// Gaussian low-pass followed by decimation at stride `ratio`, sampling input
/// pixels `0, ratio, 2·ratio, …`.
pub fn downsample_antialias(x: &Raster, ratio: usize) -> Result<Raster> {
    let (ox, oy) = blur_decimate_ops(x.width(), x.height(), ratio)?;
    Ok(oy.apply(&ox.apply(x, true), false))
}

/// Adjoint of [`downsample_antialias`] for an input of `width × height`:
/// zero-upsample then correlate with the same kernel.
pub fn downsample_antialias_adjoint(
    grad: &Raster,
    width: usize,
    height: usize,
    ratio: usize,
) -> Result<Raster> {
    let (ox, oy) = blur_decimate_ops(width, height, ratio)?;
    if grad.width() != ox.out_len() || grad.height() != oy.out_len() {
        return Err(shape_err!(
            "adjoint input {} does not match {width}x{height}/{ratio}",
            grad.shape_string()
        ));
    }
    Ok(ox.apply_adjoint(&oy.apply_adjoint(grad, false), true))
}

/// Catmull-Rom cubic convolution weight (a = −0.5).
fn cubic_weight(d: f64) -> f64 {
    const A: f64 = -0.5;
    let d = d.abs();
    if d <= 1.0 {
        (A + 2.0) * d * d * d - (A + 3.0) * d * d + 1.0
    } else if d < 2.0 {
        A * d * d * d - 5.0 * A * d * d + 8.0 * A * d - 4.0 * A
    } else {
        0.0
    }
}

fn bicubic_op(input_len: usize, ratio: usize) -> Taps1d {
    let taps = (0..input_len * ratio)
        .map(|o| {
            let base = (o / ratio) as isize;
            let t = (o % ratio) as f64 / ratio as f64;
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(4);
            for k in -1..=2isize {
                let w = cubic_weight(t - k as f64);
                if w == 0.0 {
                    continue;
                }
                let j = reflect(base + k, input_len);
                match row.iter_mut().find(|(idx, _)| *idx == j) {
                    Some(entry) => entry.1 += w,
                    None => row.push((j, w)),
                }
            }
            row
        })
        .collect();
    Taps1d { input_len, taps }
}

/// Bicubic upsampling by `ratio`; fine pixel `x` samples coarse coordinate
/// `x / ratio`, matching the decimation phase of [`downsample_antialias`].
/// Output is clipped to `[0, 1]`.
pub fn upsample(x: &Raster, ratio: usize) -> Result<Raster> {
    check_ratio(ratio)?;
    if ratio == 1 {
        return Ok(x.clip(0.0, 1.0));
    }
    let ox = bicubic_op(x.width(), ratio);
    let oy = bicubic_op(x.height(), ratio);
    Ok(oy.apply(&ox.apply(x, true), false).clip(0.0, 1.0))
}

/// `size × size` mean filter with reflected borders; `size` must be odd.
pub fn box_blur(x: &Raster, size: usize) -> Result<Raster> {
    if size == 0 || size.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "box size {size} must be odd"
        )));
    }
    let kernel = vec![1.0 / size as f64; size];
    let ox = Taps1d::from_kernel(&kernel, x.width(), x.width(), |o| o as isize);
    let oy = Taps1d::from_kernel(&kernel, x.height(), x.height(), |o| o as isize);
    Ok(oy.apply(&ox.apply(x, true), false))
}

/// Output of the reduced-resolution protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct WaldTriplet {
    pub lrms: Raster,
    pub lrpan: Raster,
    pub reference: Raster,
}

/// Degrades a co-registered `(hrms, pan)` pair by `ratio` so that a fusion of
/// the degraded pair can be scored against the untouched `hrms`.
pub fn wald_degrade(hrms: &Raster, pan: &Raster, ratio: usize) -> Result<WaldTriplet> {
    if ratio < 2 {
        return Err(Error::InvalidArgument(format!(
            "reduced-resolution ratio must be at least 2, got {ratio}"
        )));
    }
    if pan.bands() != 1 {
        return Err(shape_err!("pan has {} bands, expected 1", pan.bands()));
    }
    if !pan.same_dims(hrms) {
        return Err(shape_err!(
            "pan {} and hrms {} differ in size",
            pan.shape_string(),
            hrms.shape_string()
        ));
    }
    Ok(WaldTriplet {
        lrms: downsample_antialias(hrms, ratio)?,
        lrpan: downsample_antialias(pan, ratio)?,
        reference: hrms.clone(),
    })
}

pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Below this standard deviation a band is treated as constant.
pub(crate) const FLAT_STD: f64 = 1e-12;

/// Affine moment matching: rescales `src` to the mean and standard deviation
/// of `target`. A constant `src` is an error unless `target` is constant too,
/// in which case the result is the target mean everywhere.
pub fn histogram_match(src: &Raster, target: &Raster) -> Result<Raster> {
    if src.bands() != 1 || target.bands() != 1 {
        return Err(shape_err!(
            "histogram matching needs single-band rasters, got {} and {}",
            src.shape_string(),
            target.shape_string()
        ));
    }
    let (mu_s, sd_s) = mean_std(src.data());
    let (mu_t, sd_t) = mean_std(target.data());
    if sd_s < FLAT_STD {
        if sd_t < FLAT_STD {
            return Ok(src.map(|_| mu_t));
        }
        return Err(Error::Degenerate(
            "histogram matching a constant source".into(),
        ));
    }
    let gain = sd_t / sd_s;
    Ok(src.map(|v| (v - mu_s) * gain + mu_t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern(w: usize, h: usize, b: usize) -> Raster {
        Raster::from_fn(w, h, b, |x, y, k| {
            0.5 + 0.3 * ((x as f64 * 0.7 + k as f64).sin() * (y as f64 * 0.4).cos())
        })
        .unwrap()
    }

    /// Direct 2-D Gaussian convolution at every pixel with reflected borders.
    fn brute_blur(x: &Raster, ratio: usize) -> Raster {
        let sigma = ratio as f64 / 2.0;
        let r = 2 * ratio as isize;
        let mut norm = 0.0;
        for dy in -r..=r {
            for dx in -r..=r {
                norm += (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
            }
        }
        Raster::from_fn(x.width(), x.height(), x.bands(), |px, py, b| {
            let mut acc = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let w = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
                    let sx = reflect(px as isize + dx, x.width());
                    let sy = reflect(py as isize + dy, x.height());
                    acc += w * x.get(sx, sy, b);
                }
            }
            acc / norm
        })
        .unwrap()
    }

    #[test]
    fn reflection_is_half_sample_symmetric() {
        let got: Vec<usize> = (-3..7).map(|i| reflect(i, 3)).collect();
        assert_eq!(got, vec![2, 1, 0, 0, 1, 2, 2, 1, 0, 0]);
        assert_eq!(reflect(-5, 1), 0);
    }

    #[test]
    fn kernel_is_normalized() {
        for r in 1..6 {
            let k = antialias_kernel(r);
            assert_eq!(k.len(), 4 * r + 1);
            assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn downsample_preserves_constants() {
        for ratio in [1, 2, 3, 4] {
            let x = Raster::filled(12, 24, 3, 0.37).unwrap();
            let y = downsample_antialias(&x, ratio).unwrap();
            assert_eq!((y.width(), y.height()), (12 / ratio, 24 / ratio));
            assert!(y.data().iter().all(|v| (v - 0.37).abs() < 1e-9));
        }
    }

    #[test]
    fn ratio_one_is_plain_gaussian_filter() {
        let x = pattern(9, 7, 2);
        let got = downsample_antialias(&x, 1).unwrap();
        assert!(got.max_abs_diff(&brute_blur(&x, 1)) < 1e-12);
    }

    #[test]
    fn impulse_matches_convolve_then_decimate() {
        let x =
            Raster::from_fn(8, 8, 1, |x, y, _| if (x, y) == (3, 5) { 1.0 } else { 0.0 }).unwrap();
        let got = downsample_antialias(&x, 4).unwrap();
        let full = brute_blur(&x, 4);
        assert_eq!((got.width(), got.height()), (2, 2));
        for oy in 0..2 {
            for ox in 0..2 {
                assert!((got.get(ox, oy, 0) - full.get(4 * ox, 4 * oy, 0)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn downsample_rejects_bad_args() {
        let x = pattern(10, 8, 1);
        assert!(matches!(downsample_antialias(&x, 4), Err(Error::Shape(_))));
        assert!(matches!(
            downsample_antialias(&x, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn adjoint_satisfies_inner_product_identity() {
        let x = pattern(12, 8, 2);
        let y = Raster::from_fn(3, 2, 2, |a, b, c| (a * 3 + b * 5 + c) as f64 * 0.1 - 0.4).unwrap();
        let ax = downsample_antialias(&x, 4).unwrap();
        let aty = downsample_antialias_adjoint(&y, 12, 8, 4).unwrap();
        let lhs: f64 = ax.data().iter().zip(y.data()).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.data().iter().zip(aty.data()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn upsample_basics() {
        let c = Raster::filled(5, 4, 2, 0.42).unwrap();
        let up = upsample(&c, 3).unwrap();
        assert_eq!((up.width(), up.height()), (15, 12));
        assert!(up.data().iter().all(|v| (v - 0.42).abs() < 1e-12));

        let x = pattern(6, 5, 3);
        assert_eq!(upsample(&x, 1).unwrap(), x);
        assert!(upsample(&x, 0).is_err());
    }

    #[test]
    fn upsample_reproduces_linear_ramps_away_from_borders() {
        let ratio = 4;
        let x =
            Raster::from_fn(16, 12, 1, |x, y, _| 0.1 + 0.03 * x as f64 + 0.02 * y as f64).unwrap();
        let up = upsample(&x, ratio).unwrap();
        for fy in ratio..(12 - 2) * ratio {
            for fx in ratio..(16 - 2) * ratio {
                let sx = fx as f64 / ratio as f64;
                let sy = fy as f64 / ratio as f64;
                let expected = 0.1 + 0.03 * sx + 0.02 * sy;
                assert!((up.get(fx, fy, 0) - expected).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn upsample_interpolates_through_samples_and_clips() {
        let x = pattern(7, 6, 1);
        let up = upsample(&x, 2).unwrap();
        for y in 0..6 {
            for xx in 0..7 {
                assert!((up.get(2 * xx, 2 * y, 0) - x.get(xx, y, 0)).abs() < 1e-12);
            }
        }
        let spiky = Raster::from_fn(6, 6, 1, |x, _, _| if x % 2 == 0 { 0.0 } else { 1.0 }).unwrap();
        let up = upsample(&spiky, 4).unwrap();
        assert!(up.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn box_blur_is_local_mean() {
        let x = pattern(10, 10, 1);
        let b = box_blur(&x, 3).unwrap();
        let mut acc = 0.0;
        for dy in 0..3 {
            for dx in 0..3 {
                acc += x.get(4 + dx, 5 + dy, 0);
            }
        }
        assert!((b.get(5, 6, 0) - acc / 9.0).abs() < 1e-14);
        assert!(box_blur(&x, 4).is_err());
    }

    #[test]
    fn wald_degrade_shapes_and_passthrough() {
        let hrms = pattern(256, 256, 4);
        let pan = pattern(256, 256, 1);
        let t = wald_degrade(&hrms, &pan, 4).unwrap();
        assert_eq!(t.lrms.shape_string(), "64x64x4");
        assert_eq!(t.lrpan.shape_string(), "64x64x1");
        assert_eq!(t.reference, hrms);
        assert_eq!(t.lrms, downsample_antialias(&hrms, 4).unwrap());
        assert_eq!(t.lrpan, downsample_antialias(&pan, 4).unwrap());

        let c = wald_degrade(
            &Raster::filled(16, 16, 2, 0.3).unwrap(),
            &Raster::filled(16, 16, 1, 0.6).unwrap(),
            2,
        )
        .unwrap();
        assert!(c.lrms.data().iter().all(|v| (v - 0.3).abs() < 1e-12));
        assert!(c.lrpan.data().iter().all(|v| (v - 0.6).abs() < 1e-12));

        assert!(matches!(
            wald_degrade(&hrms, &pattern(128, 128, 1), 4),
            Err(Error::Shape(_))
        ));
        assert!(wald_degrade(&hrms, &pan, 1).is_err());
    }

    #[test]
    fn histogram_match_moments() {
        let src = Raster::from_fn(20, 20, 1, |x, y, _| {
            0.5 + 0.1 * ((x * 31 + y * 17) % 11) as f64 / 5.0 - 0.1
        })
        .unwrap();
        let (m, s) = mean_std(src.data());
        let src = src.map(|v| 0.5 + (v - m) * 0.1 / s);
        let target = src.map(|v| 0.2 + (v - 0.5) * 0.5);
        let out = histogram_match(&src, &target).unwrap();
        let (mo, so) = mean_std(out.data());
        assert!((mo - 0.2).abs() < 1e-9);
        assert!((so - 0.05).abs() < 1e-9);

        let same = histogram_match(&src, &src).unwrap();
        assert!(same.max_abs_diff(&src) < 1e-12);

        let flat = Raster::filled(20, 20, 1, 0.4).unwrap();
        assert!(matches!(
            histogram_match(&flat, &target),
            Err(Error::Degenerate(_))
        ));
        let both_flat = histogram_match(&flat, &Raster::filled(20, 20, 1, 0.7).unwrap()).unwrap();
        assert!(both_flat.data().iter().all(|v| (v - 0.7).abs() < 1e-12));
    }
}
