//! Universal image quality index and its quaternion extension to four bands.
//!
//! Both are evaluated on distinct `block × block` tiles (partial tiles at the
//! right/bottom edge are ignored) and averaged. A tile whose variance or mean
//! denominator falls below [`DEGENERATE`] is skipped; if every tile is skipped
//! the index is 1 for identical inputs and 0 otherwise.

use std::ops::{Add, Mul, Sub};

use crate::error::{shape_err, Error, Result};
use crate::raster::Raster;

pub const DEGENERATE: f64 = 1e-12;

fn check_block(w: usize, h: usize, block: usize) -> Result<()> {
    if block == 0 {
        return Err(Error::InvalidArgument("block must be positive".into()));
    }
    if block > w.min(h) {
        return Err(shape_err!("block {block} larger than image {w}x{h}"));
    }
    Ok(())
}

/// Visits each tile as the list of its pixel indices in row-major order.
fn for_each_tile(w: usize, h: usize, block: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = Vec::with_capacity(block * block);
    for ty in 0..h / block {
        for tx in 0..w / block {
            idx.clear();
            for y in ty * block..(ty + 1) * block {
                for x in tx * block..(tx + 1) * block {
                    idx.push(y * w + x);
                }
            }
            f(&idx);
        }
    }
}

/// Q index of one pair of equally sized sample sets, or `None` if degenerate.
pub(crate) fn q_of(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut va, mut vb, mut cab) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        va += dx * dx;
        vb += dy * dy;
        cab += dx * dy;
    }
    let (va, vb, cab) = (va / n, vb / n, cab / n);
    let contrast = va + vb;
    let lum = ma * ma + mb * mb;
    if contrast < DEGENERATE || lum < DEGENERATE {
        return None;
    }
    Some(4.0 * cab * ma * mb / (contrast * lum))
}

fn average_or_fallback(sum: f64, count: usize, identical: bool) -> f64 {
    if count > 0 {
        sum / count as f64
    } else if identical {
        1.0
    } else {
        0.0
    }
}

/// Universal image quality index of two single-band rasters.
pub fn metric_uiqi(a: &Raster, b: &Raster, block: usize) -> Result<f64> {
    a.ensure_same_shape(b, "UIQI")?;
    if a.bands() != 1 {
        return Err(shape_err!(
            "UIQI expects single-band rasters, got {}",
            a.bands()
        ));
    }
    uiqi_values(a.data(), b.data(), a.width(), a.height(), block)
}

pub(crate) fn uiqi_values(a: &[f64], b: &[f64], w: usize, h: usize, block: usize) -> Result<f64> {
    check_block(w, h, block)?;
    let (mut sum, mut count) = (0.0, 0usize);
    let mut ta = Vec::with_capacity(block * block);
    let mut tb = Vec::with_capacity(block * block);
    for_each_tile(w, h, block, |idx| {
        ta.clear();
        tb.clear();
        ta.extend(idx.iter().map(|&i| a[i]));
        tb.extend(idx.iter().map(|&i| b[i]));
        if let Some(q) = q_of(&ta, &tb) {
            sum += q;
            count += 1;
        }
    });
    Ok(average_or_fallback(sum, count, a == b))
}

/// Band-averaged UIQI, exposed alongside Q4 for comparison.
pub fn metric_uiqi_mean(fused: &Raster, reference: &Raster, block: usize) -> Result<f64> {
    fused.ensure_same_shape(reference, "UIQI")?;
    let mut acc = 0.0;
    for b in 0..fused.bands() {
        acc += uiqi_values(
            &fused.band_values(b),
            &reference.band_values(b),
            fused.width(),
            fused.height(),
            block,
        )?;
    }
    Ok(acc / fused.bands() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            w: v[0],
            x: v[1],
            y: v[2],
            z: v[3],
        }
    }

    pub fn conj(self) -> Self {
        Self {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    pub fn norm_sqr(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn scale(self, s: f64) -> Self {
        Self {
            w: self.w * s,
            x: self.x * s,
            y: self.y * s,
            z: self.z * s,
        }
    }
}

impl Add for Quaternion {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            w: self.w + o.w,
            x: self.x + o.x,
            y: self.y + o.y,
            z: self.z + o.z,
        }
    }
}

impl Sub for Quaternion {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self {
            w: self.w - o.w,
            x: self.x - o.x,
            y: self.y - o.y,
            z: self.z - o.z,
        }
    }
}

impl Mul for Quaternion {
    type Output = Self;
    // Hamilton product.
    fn mul(self, o: Self) -> Self {
        Self {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }
}

/// Q4 of one tile, or `None` if degenerate.
pub(crate) fn q4_of(z1: &[Quaternion], z2: &[Quaternion]) -> Option<f64> {
    let n = z1.len() as f64;
    let mu1 = z1
        .iter()
        .fold(Quaternion::default(), |a, &q| a + q)
        .scale(1.0 / n);
    let mu2 = z2
        .iter()
        .fold(Quaternion::default(), |a, &q| a + q)
        .scale(1.0 / n);
    let (mut v1, mut v2) = (0.0, 0.0);
    let mut cov = Quaternion::default();
    for (&a, &b) in z1.iter().zip(z2) {
        let (da, db) = (a - mu1, b - mu2);
        v1 += da.norm_sqr();
        v2 += db.norm_sqr();
        cov = cov + da * db.conj();
    }
    let (v1, v2) = (v1 / n, v2 / n);
    let cov_mod = cov.scale(1.0 / n).norm_sqr().sqrt();
    let (m1, m2) = (mu1.norm_sqr(), mu2.norm_sqr());
    let contrast = v1 + v2;
    let lum = m1 + m2;
    if contrast < DEGENERATE || lum < DEGENERATE {
        return None;
    }
    // |σ12|/(σ1σ2) · 2σ1σ2/(σ1²+σ2²) · 2|μ1||μ2|/(|μ1|²+|μ2|²)
    Some(4.0 * cov_mod * (m1 * m2).sqrt() / (contrast * lum))
}

/// Quaternion quality index of two 4-band rasters.
pub fn metric_q4(fused: &Raster, reference: &Raster, block: usize) -> Result<f64> {
    fused.ensure_same_shape(reference, "Q4")?;
    if fused.bands() != 4 {
        return Err(Error::InvalidArgument(format!(
            "Q4 needs exactly 4 bands, got {}",
            fused.bands()
        )));
    }
    let (w, h) = (fused.width(), fused.height());
    check_block(w, h, block)?;
    let q1: Vec<Quaternion> = fused.pixels().map(Quaternion::from_slice).collect();
    let q2: Vec<Quaternion> = reference.pixels().map(Quaternion::from_slice).collect();
    let (mut sum, mut count) = (0.0, 0usize);
    let mut t1 = Vec::with_capacity(block * block);
    let mut t2 = Vec::with_capacity(block * block);
    for_each_tile(w, h, block, |idx| {
        t1.clear();
        t2.clear();
        t1.extend(idx.iter().map(|&i| q1[i]));
        t2.extend(idx.iter().map(|&i| q2[i]));
        if let Some(q) = q4_of(&t1, &t2) {
            sum += q;
            count += 1;
        }
    });
    Ok(average_or_fallback(sum, count, fused == reference))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(w: usize, h: usize, b: usize, seed: u64) -> Raster {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Raster::from_fn(w, h, b, |_, _, _| rng.gen_range(0.1..0.9)).unwrap()
    }

    /// Whole-image Q by the textbook formula, for single-tile comparisons.
    fn brute_q(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let va = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / n;
        let vb = b.iter().map(|x| (x - mb).powi(2)).sum::<f64>() / n;
        let cab = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - ma) * (y - mb))
            .sum::<f64>()
            / n;
        4.0 * cab * ma * mb / ((va + vb) * (ma * ma + mb * mb))
    }

    #[test]
    fn uiqi_self_is_one() {
        let a = noise(16, 16, 1, 1);
        assert!((metric_uiqi(&a, &a, 8).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uiqi_anticorrelated_about_common_mean_is_minus_one() {
        // a = c + s, b = c − s with zero-mean s: equal means, equal variances,
        // correlation −1.
        let s = noise(8, 8, 1, 2);
        let m = s.mean();
        let a = s.map(|v| 0.5 + (v - m));
        let b = s.map(|v| 0.5 - (v - m));
        assert!((metric_uiqi(&a, &b, 8).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn uiqi_luminance_shift_penalized() {
        let a = noise(8, 8, 1, 3);
        let b = a.map(|v| v + 0.1);
        let q = metric_uiqi(&a, &b, 8).unwrap();
        assert!(q < 1.0);
        assert!((q - brute_q(a.data(), b.data())).abs() < 1e-12);
    }

    #[test]
    fn uiqi_symmetric_and_block_checked() {
        let a = noise(12, 12, 1, 4);
        let b = noise(12, 12, 1, 5);
        let ab = metric_uiqi(&a, &b, 4).unwrap();
        let ba = metric_uiqi(&b, &a, 4).unwrap();
        assert!((ab - ba).abs() < 1e-15);
        assert!(matches!(metric_uiqi(&a, &b, 13), Err(Error::Shape(_))));
    }

    #[test]
    fn uiqi_degenerate_fallback() {
        let c = Raster::filled(8, 8, 1, 0.3).unwrap();
        let d = Raster::filled(8, 8, 1, 0.6).unwrap();
        assert_eq!(metric_uiqi(&c, &c, 4).unwrap(), 1.0);
        assert_eq!(metric_uiqi(&c, &d, 4).unwrap(), 0.0);
    }

    #[test]
    fn quaternion_product_rules() {
        let i = Quaternion {
            w: 0.0,
            x: 1.0,
            y: 0.0,
            z: 0.0,
        };
        let j = Quaternion {
            w: 0.0,
            x: 0.0,
            y: 1.0,
            z: 0.0,
        };
        let k = Quaternion {
            w: 0.0,
            x: 0.0,
            y: 0.0,
            z: 1.0,
        };
        assert_eq!(i * j, k);
        assert_eq!(j * i, k.scale(-1.0));
        assert_eq!(
            i * i,
            Quaternion {
                w: -1.0,
                ..Default::default()
            }
        );
        let q = Quaternion {
            w: 1.0,
            x: 2.0,
            y: 3.0,
            z: 4.0,
        };
        assert_eq!(
            q * q.conj(),
            Quaternion {
                w: 30.0,
                ..Default::default()
            }
        );
    }

    #[test]
    fn q4_self_is_one() {
        let a = noise(32, 32, 4, 6);
        assert!((metric_q4(&a, &a, 16).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn q4_drops_when_a_band_is_replaced() {
        let a = noise(32, 32, 4, 7);
        let other = noise(32, 32, 1, 8);
        let b = Raster::from_fn(32, 32, 4, |x, y, k| {
            if k == 2 {
                other.get(x, y, 0)
            } else {
                a.get(x, y, k)
            }
        })
        .unwrap();
        let q = metric_q4(&b, &a, 32).unwrap();
        assert!(q < metric_q4(&a, &a, 32).unwrap() - 1e-3);
    }

    #[test]
    fn q4_penalizes_gain() {
        let a = noise(16, 16, 4, 9);
        let b = a.map(|v| 1.5 * v);
        let q = metric_q4(&b, &a, 16).unwrap();
        // Correlation term stays 1, contrast and mean terms are 2·1.5/(1+1.5²).
        let expected = (3.0 / 3.25) * (3.0 / 3.25);
        assert!((q - expected).abs() < 1e-12, "{q}");
    }

    #[test]
    fn q4_needs_four_bands() {
        let a = noise(8, 8, 3, 10);
        assert!(metric_q4(&a, &a, 8).is_err());
    }
}
