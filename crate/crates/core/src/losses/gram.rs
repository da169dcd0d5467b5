use crate::error::Result;
use crate::features::{extract_features, Extractor, FeatureMap};
use crate::raster::Raster;

/// Channel inner-product matrix `FᵀF / n` of a feature map flattened to
/// `n × C` (pixels by channels). Multiply by [`Self::pixel_count`] to recover
/// the unnormalized product.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    channels: usize,
    pixel_count: usize,
    data: Vec<f64>,
}

impl GramMatrix {
    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.pixel_count
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.channels + j]
    }

    /// Row-major `C × C` entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn unnormalized(&self) -> Vec<f64> {
        let n = self.pixel_count as f64;
        self.data.iter().map(|v| v * n).collect()
    }

    /// Frobenius norm of `self − other`.
    pub fn distance(&self, other: &GramMatrix) -> f64 {
        assert_eq!(
            self.channels, other.channels,
            "gram matrices differ in size"
        );
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

pub fn gram_matrix(features: &FeatureMap) -> GramMatrix {
    let r = features.as_raster();
    let c = r.bands();
    let mut data = vec![0.0; c * c];
    for p in r.pixels() {
        for i in 0..c {
            for j in i..c {
                data[i * c + j] += p[i] * p[j];
            }
        }
    }
    let n = r.pixel_count() as f64;
    for i in 0..c {
        for j in i..c {
            let v = data[i * c + j] / n;
            data[i * c + j] = v;
            data[j * c + i] = v;
        }
    }
    GramMatrix {
        channels: c,
        pixel_count: r.pixel_count(),
        data,
    }
}

/// Distance between the Gram matrices of the images themselves (bands as channels).
pub fn gm_reconstruction_loss(fused: &Raster, reference: &Raster) -> Result<f64> {
    fused.ensure_same_shape(reference, "Gram reconstruction loss")?;
    let gf = gram_matrix(&FeatureMap::from(fused.clone()));
    let gr = gram_matrix(&FeatureMap::from(reference.clone()));
    Ok(gf.distance(&gr))
}

/// Distance between the Gram matrices of the extracted features.
pub fn gm_perceptual_loss(
    fused: &Raster,
    reference: &Raster,
    extractor: &Extractor,
) -> Result<f64> {
    fused.ensure_same_shape(reference, "Gram perceptual loss")?;
    let gf = gram_matrix(&extract_features(fused, extractor)?);
    let gr = gram_matrix(&extract_features(reference, extractor)?);
    Ok(gf.distance(&gr))
}

/// Euclidean norm of the feature difference.
pub fn perceptual_loss(fused: &Raster, reference: &Raster, extractor: &Extractor) -> Result<f64> {
    fused.ensure_same_shape(reference, "perceptual loss")?;
    let uf = extract_features(fused, extractor)?;
    let ur = extract_features(reference, extractor)?;
    Ok(uf
        .as_raster()
        .data()
        .iter()
        .zip(ur.as_raster().data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// `∂‖G(F) − G(R)‖_F / ∂F = 2·F·Δ / (n·L)`, zero where the loss is zero.
pub(crate) fn gm_reconstruction_gradient(fused: &Raster, reference: &Raster) -> Result<Raster> {
    fused.ensure_same_shape(reference, "Gram reconstruction loss")?;
    let gf = gram_matrix(&FeatureMap::from(fused.clone()));
    let gr = gram_matrix(&FeatureMap::from(reference.clone()));
    let loss = gf.distance(&gr);
    let c = fused.bands();
    if loss == 0.0 {
        return Raster::filled(fused.width(), fused.height(), c, 0.0);
    }
    let delta: Vec<f64> = gf.data.iter().zip(&gr.data).map(|(a, b)| a - b).collect();
    let scale = 2.0 / (fused.pixel_count() as f64 * loss);
    let mut grad = Vec::with_capacity(fused.len());
    for p in fused.pixels() {
        for e in 0..c {
            let acc: f64 = (0..c).map(|d| p[d] * delta[d * c + e]).sum();
            grad.push(scale * acc);
        }
    }
    Raster::new(fused.width(), fused.height(), c, grad)
}

/// Gradient of `‖fused − reference‖₂`, zero where the loss is zero.
pub(crate) fn perceptual_identity_gradient(fused: &Raster, reference: &Raster) -> Result<Raster> {
    let diff = fused.zip_map(reference, |a, b| a - b)?;
    let norm = diff.data().iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(diff);
    }
    Ok(diff.map(|v| v / norm))
}
