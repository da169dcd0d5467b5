//! Seeded synthetic multispectral scenes.
//!
//! Each scene is a per-band linear gradient plus a set of soft-edged ellipses.
//! Ellipse geometry is shared between bands and amplitudes are per band, so the
//! bands are correlated but not collinear. The PAN band is the normalized
//! weighted band sum of the clipped cube.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Raster;
use crate::error::{Error, Result};

const MIN_DIM: usize = 8;
/// Edge softness of the ellipses, in pixels.
const EDGE_PX: f64 = 1.5;

struct Ellipse {
    cx: f64,
    cy: f64,
    semi_a: f64,
    semi_b: f64,
    cos_t: f64,
    sin_t: f64,
    amplitude: Vec<f64>,
}

impl Ellipse {
    /// Soft membership in [0, 1].
    fn weight(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.cx;
        let dy = y - self.cy;
        let u = (dx * self.cos_t + dy * self.sin_t) / self.semi_a;
        let v = (-dx * self.sin_t + dy * self.cos_t) / self.semi_b;
        let rho = (u * u + v * v).sqrt();
        let scale = 0.5 * (self.semi_a + self.semi_b) / EDGE_PX;
        let z = (rho - 1.0) * scale;
        if z > 40.0 {
            0.0
        } else {
            1.0 / (1.0 + z.exp())
        }
    }
}

/// Generates `(hrms, pan)` deterministically from `seed`.
pub fn synth_scene(
    width: usize,
    height: usize,
    bands: usize,
    seed: u64,
    pan_weights: &[f64],
) -> Result<(Raster, Raster)> {
    if width < MIN_DIM || height < MIN_DIM {
        return Err(Error::InvalidArgument(format!(
            "scene must be at least {MIN_DIM}x{MIN_DIM}, got {width}x{height}"
        )));
    }
    if bands == 0 {
        return Err(Error::InvalidArgument(
            "scene needs at least one band".into(),
        ));
    }
    validate_weights(pan_weights, bands)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gradients: Vec<[f64; 3]> = (0..bands)
        .map(|_| {
            [
                rng.gen_range(0.15..0.45),
                rng.gen_range(-0.15..0.15),
                rng.gen_range(-0.15..0.15),
            ]
        })
        .collect();

    let count = (8 + width * height / 2048).min(64);
    let short = width.min(height) as f64;
    let ellipses: Vec<Ellipse> = (0..count)
        .map(|_| {
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            Ellipse {
                cx: rng.gen_range(0.0..width as f64),
                cy: rng.gen_range(0.0..height as f64),
                semi_a: rng.gen_range(0.04..0.25) * short,
                semi_b: rng.gen_range(0.04..0.25) * short,
                cos_t: theta.cos(),
                sin_t: theta.sin(),
                amplitude: (0..bands).map(|_| rng.gen_range(-0.2..0.35)).collect(),
            }
        })
        .collect();

    let mut data = vec![0.0; width * height * bands];
    let mut memberships = vec![0.0; ellipses.len()];
    for y in 0..height {
        let fy = y as f64 / height as f64;
        for x in 0..width {
            let fx = x as f64 / width as f64;
            for (m, e) in memberships.iter_mut().zip(&ellipses) {
                *m = e.weight(x as f64, y as f64);
            }
            let base = (y * width + x) * bands;
            for (b, g) in gradients.iter().enumerate() {
                let mut v = g[0] + g[1] * fx + g[2] * fy;
                for (m, e) in memberships.iter().zip(&ellipses) {
                    v += m * e.amplitude[b];
                }
                data[base + b] = v.clamp(0.0, 1.0);
            }
        }
    }
    let hrms = Raster::new(width, height, bands, data)?;
    let pan = weighted_band_sum(&hrms, pan_weights)?;
    Ok((hrms, pan))
}

fn validate_weights(weights: &[f64], bands: usize) -> Result<()> {
    if weights.len() != bands {
        return Err(Error::InvalidArgument(format!(
            "{} pan weights for {bands} bands",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidArgument(
            "pan weights must be finite and non-negative".into(),
        ));
    }
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidArgument("pan weights sum to zero".into()));
    }
    Ok(())
}

/// `pan(x,y) = Σ w_b·ms_b(x,y) / Σ w_b`.
pub(crate) fn weighted_band_sum(ms: &Raster, weights: &[f64]) -> Result<Raster> {
    validate_weights(weights, ms.bands())?;
    let total: f64 = weights.iter().sum();
    let data = ms
        .pixels()
        .map(|p| p.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total)
        .collect();
    Raster::new(ms.width(), ms.height(), 1, data)
}
