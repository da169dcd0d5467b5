//! Feature extractors for perceptual losses.
//!
//! Either the identity, or a stack of strided convolutions with leaky-ReLU
//! loaded from a CSW weights file. Inference only: no dropout, no batch state.

mod csw;

pub use csw::{load_conv_stack, write_conv_stack, CSW_MAGIC};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{shape_err, Error, Result};
use crate::raster::Raster;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub out_channels: usize,
    pub in_channels: usize,
    /// Side of the square kernel; odd.
    pub kernel_size: usize,
    pub stride: usize,
    pub leaky_slope: f64,
    /// Row-major `[out][in][ky][kx]`.
    pub weights: Vec<f32>,
    pub biases: Vec<f32>,
}

impl ConvLayer {
    #[inline]
    fn weight(&self, o: usize, i: usize, ky: usize, kx: usize) -> f64 {
        let k = self.kernel_size;
        self.weights[((o * self.in_channels + i) * k + ky) * k + kx] as f64
    }

    pub fn output_dims(&self, width: usize, height: usize) -> (usize, usize) {
        (width.div_ceil(self.stride), height.div_ceil(self.stride))
    }

    /// Cross-correlation with zero padding `k/2`, then bias and leaky-ReLU.
    pub fn forward(&self, x: &Raster) -> Result<Raster> {
        if x.bands() != self.in_channels {
            return Err(shape_err!(
                "layer expects {} channels, got {}",
                self.in_channels,
                x.bands()
            ));
        }
        let (w, h) = (x.width(), x.height());
        let (ow, oh) = self.output_dims(w, h);
        let pad = (self.kernel_size / 2) as isize;
        let k = self.kernel_size;
        let mut out = Vec::with_capacity(ow * oh * self.out_channels);
        for oy in 0..oh {
            for ox in 0..ow {
                for o in 0..self.out_channels {
                    let mut acc = self.biases[o] as f64;
                    for ky in 0..k {
                        let sy = (oy * self.stride) as isize + ky as isize - pad;
                        if sy < 0 || sy >= h as isize {
                            continue;
                        }
                        for kx in 0..k {
                            let sx = (ox * self.stride) as isize + kx as isize - pad;
                            if sx < 0 || sx >= w as isize {
                                continue;
                            }
                            let px = x.pixel(sx as usize, sy as usize);
                            for (i, v) in px.iter().enumerate() {
                                acc += self.weight(o, i, ky, kx) * v;
                            }
                        }
                    }
                    out.push(if acc >= 0.0 {
                        acc
                    } else {
                        self.leaky_slope * acc
                    });
                }
            }
        }
        Raster::new(ow, oh, self.out_channels, out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvStackSpec {
    pub bands: usize,
    pub layers: Vec<ConvLayer>,
}

impl ConvStackSpec {
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Header("conv stack has no layers".into()));
        }
        let mut channels = self.bands;
        for (n, l) in self.layers.iter().enumerate() {
            if l.in_channels != channels {
                return Err(shape_err!(
                    "layer {n} takes {} channels but receives {channels}",
                    l.in_channels
                ));
            }
            if l.out_channels == 0 || l.kernel_size % 2 == 0 || l.stride == 0 {
                return Err(shape_err!(
                    "layer {n}: out={} k={} stride={} (need out≥1, odd k, stride≥1)",
                    l.out_channels,
                    l.kernel_size,
                    l.stride
                ));
            }
            let expected = l.out_channels * l.in_channels * l.kernel_size * l.kernel_size;
            if l.weights.len() != expected || l.biases.len() != l.out_channels {
                return Err(shape_err!(
                    "layer {n}: {} weights / {} biases, expected {expected} / {}",
                    l.weights.len(),
                    l.biases.len(),
                    l.out_channels
                ));
            }
            if !l.leaky_slope.is_finite() {
                return Err(Error::NonFinite { index: n });
            }
            if let Some(i) = l
                .weights
                .iter()
                .chain(&l.biases)
                .position(|v| !v.is_finite())
            {
                return Err(Error::NonFinite { index: i });
            }
            channels = l.out_channels;
        }
        Ok(())
    }

    pub fn out_channels(&self) -> usize {
        self.layers.last().map_or(self.bands, |l| l.out_channels)
    }

    pub fn output_dims(&self, width: usize, height: usize) -> (usize, usize) {
        self.layers
            .iter()
            .fold((width, height), |(w, h), l| l.output_dims(w, h))
    }

    /// Seeded random stack, `layers` given as `(out_channels, kernel, stride, slope)`.
    /// Weights are uniform in `±1/sqrt(fan_in)`.
    pub fn random(
        bands: usize,
        layers: &[(usize, usize, usize, f64)],
        seed: u64,
        with_bias: bool,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut in_ch = bands;
        let layers = layers
            .iter()
            .map(|&(out, k, stride, slope)| {
                let bound = 1.0 / ((in_ch * k * k) as f32).sqrt();
                let weights = (0..out * in_ch * k * k)
                    .map(|_| rng.gen_range(-bound..bound))
                    .collect();
                let biases = (0..out)
                    .map(|_| {
                        if with_bias {
                            rng.gen_range(-0.1..0.1)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let layer = ConvLayer {
                    out_channels: out,
                    in_channels: in_ch,
                    kernel_size: k,
                    stride,
                    leaky_slope: slope,
                    weights,
                    biases,
                };
                in_ch = out;
                layer
            })
            .collect();
        Self { bands, layers }
    }
}

/// Feature channels over a (possibly reduced) spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap(Raster);

impl FeatureMap {
    pub fn channels(&self) -> usize {
        self.0.bands()
    }

    pub fn as_raster(&self) -> &Raster {
        &self.0
    }

    pub fn into_raster(self) -> Raster {
        self.0
    }
}

impl From<Raster> for FeatureMap {
    fn from(r: Raster) -> Self {
        FeatureMap(r)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Extractor {
    #[default]
    Identity,
    ConvStack(ConvStackSpec),
}

impl Extractor {
    pub fn is_identity(&self) -> bool {
        matches!(self, Extractor::Identity)
    }
}

pub fn extract_features(x: &Raster, extractor: &Extractor) -> Result<FeatureMap> {
    match extractor {
        Extractor::Identity => Ok(FeatureMap(x.clone())),
        Extractor::ConvStack(spec) => {
            if x.bands() != spec.bands {
                return Err(shape_err!(
                    "extractor expects {} bands, got {}",
                    spec.bands,
                    x.bands()
                ));
            }
            let mut cur = x.clone();
            for layer in &spec.layers {
                cur = layer.forward(&cur)?;
            }
            Ok(FeatureMap(cur))
        }
    }
}
