use nalgebra::{DMatrix, SymmetricEigen};

use super::FusionInput;
use crate::error::{shape_err, Error, Result};
use crate::raster::Raster;
use crate::resample::histogram_match;

/// Relative eigenvalue floor below which the band covariance is singular.
const SINGULAR_RATIO: f64 = 1e-12;

/// Principal-component basis of a band set.
///
/// Components are ordered by descending eigenvalue and each loading vector is
/// signed so that its entries sum to a non-negative value.
#[derive(Debug, Clone)]
pub struct PcaTransform {
    means: Vec<f64>,
    /// `loadings[b * bands + k]` = weight of band `b` in component `k`.
    loadings: Vec<f64>,
    eigenvalues: Vec<f64>,
}

impl PcaTransform {
    pub fn fit(ms: &Raster) -> Result<Self> {
        let bands = ms.bands();
        let n = ms.pixel_count() as f64;
        let mut means = vec![0.0; bands];
        for p in ms.pixels() {
            for (m, v) in means.iter_mut().zip(p) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);

        let mut cov = DMatrix::<f64>::zeros(bands, bands);
        for p in ms.pixels() {
            for i in 0..bands {
                let di = p[i] - means[i];
                for j in i..bands {
                    cov[(i, j)] += di * (p[j] - means[j]);
                }
            }
        }
        for i in 0..bands {
            for j in i..bands {
                let v = cov[(i, j)] / n;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }

        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..bands).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let largest = eigenvalues[0];
        let smallest = eigenvalues[bands - 1];
        if largest <= 0.0 || smallest <= SINGULAR_RATIO * largest {
            return Err(Error::Degenerate(format!(
                "band covariance is singular (eigenvalues {largest:e} .. {smallest:e})"
            )));
        }

        let mut loadings = vec![0.0; bands * bands];
        for (k, &src) in order.iter().enumerate() {
            let column = eig.eigenvectors.column(src);
            let sign = if column.sum() < 0.0 { -1.0 } else { 1.0 };
            for b in 0..bands {
                loadings[b * bands + k] = sign * column[b];
            }
        }
        Ok(Self {
            means,
            loadings,
            eigenvalues,
        })
    }

    pub fn bands(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Loading vector of component `k`.
    pub fn component(&self, k: usize) -> Vec<f64> {
        let bands = self.bands();
        (0..bands).map(|b| self.loadings[b * bands + k]).collect()
    }

    /// Projects centered pixels onto the components; band `k` of the output is
    /// component `k`.
    #[allow(clippy::needless_range_loop)]
    pub fn forward(&self, ms: &Raster) -> Result<Raster> {
        let bands = self.bands();
        if ms.bands() != bands {
            return Err(shape_err!(
                "PCA fitted on {bands} bands, got {}",
                ms.bands()
            ));
        }
        let mut data = Vec::with_capacity(ms.len());
        for p in ms.pixels() {
            for k in 0..bands {
                let mut acc = 0.0;
                for b in 0..bands {
                    acc += self.loadings[b * bands + k] * (p[b] - self.means[b]);
                }
                data.push(acc);
            }
        }
        Raster::new(ms.width(), ms.height(), bands, data)
    }

    #[allow(clippy::needless_range_loop)]
    pub fn inverse(&self, pcs: &Raster) -> Result<Raster> {
        let bands = self.bands();
        if pcs.bands() != bands {
            return Err(shape_err!(
                "PCA fitted on {bands} bands, got {}",
                pcs.bands()
            ));
        }
        let mut data = Vec::with_capacity(pcs.len());
        for p in pcs.pixels() {
            for b in 0..bands {
                let mut acc = self.means[b];
                for k in 0..bands {
                    acc += self.loadings[b * bands + k] * p[k];
                }
                data.push(acc);
            }
        }
        Raster::new(pcs.width(), pcs.height(), bands, data)
    }
}

/// PCA substitution: the first component is replaced by the PAN matched to it.
pub fn fuse_pca(input: &FusionInput) -> Result<Raster> {
    let ms = input.upsampled_ms()?;
    let pca = PcaTransform::fit(&ms)?;
    let pcs = pca.forward(&ms)?;
    let pc1 = pcs.band(0);
    let matched = histogram_match(input.pan(), &pc1)?;
    let bands = pcs.bands();
    let mut data = pcs.into_data();
    for (i, v) in matched.data().iter().enumerate() {
        data[i * bands] = *v;
    }
    let substituted = Raster::new(ms.width(), ms.height(), bands, data)?;
    Ok(pca.inverse(&substituted)?.clip(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::super::test_support::scene;
    use super::*;

    #[test]
    fn two_band_closed_form_basis() {
        // Four pixels a·√3·u + b·v with u = (1,1)/√2, v = (1,-1)/√2, a,b = ±1:
        // covariance [[2,1],[1,2]], eigenpairs (3, u) and (1, v).
        let u = [1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
        let v = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt()];
        let mut data = Vec::new();
        for (a, b) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            for k in 0..2 {
                data.push(5.0 + a * 3f64.sqrt() * u[k] + b * v[k]);
            }
        }
        let ms = Raster::new(2, 2, 2, data).unwrap();
        let pca = PcaTransform::fit(&ms).unwrap();
        assert!((pca.eigenvalues()[0] - 3.0).abs() < 1e-12);
        assert!((pca.eigenvalues()[1] - 1.0).abs() < 1e-12);
        let pc1 = pca.component(0);
        assert!((pc1[0] - u[0]).abs() < 1e-12 && (pc1[1] - u[1]).abs() < 1e-12);
        let pc2 = pca.component(1);
        assert!((pc2[0].abs() - v[0]).abs() < 1e-12);
        assert!((pc2[0] + pc2[1]).abs() < 1e-12);
    }

    #[test]
    fn round_trip_without_substitution() {
        let (_, up, _, _) = scene(64, 4, 4, 9);
        let pca = PcaTransform::fit(&up).unwrap();
        let back = pca.inverse(&pca.forward(&up).unwrap()).unwrap();
        assert!(back.max_abs_diff(&up) < 1e-9);
    }

    #[test]
    fn substituting_pc1_with_itself_recovers_ms() {
        let (lrms, up, _, _) = scene(64, 4, 4, 10);
        let pc1 = PcaTransform::fit(&up)
            .unwrap()
            .forward(&up)
            .unwrap()
            .band(0);
        let out = fuse_pca(&FusionInput::new(lrms, pc1, 4).unwrap()).unwrap();
        assert!(out.max_abs_diff(&up) < 1e-6);
    }

    #[test]
    fn first_loading_sums_non_negative() {
        let (_, up, _, _) = scene(32, 4, 2, 12);
        let pca = PcaTransform::fit(&up).unwrap();
        for k in 0..4 {
            assert!(pca.component(k).iter().sum::<f64>() >= 0.0);
        }
        let ev = pca.eigenvalues();
        assert!(ev.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn constant_scene_is_degenerate() {
        let lrms = Raster::filled(8, 8, 4, 0.5).unwrap();
        let pan = Raster::from_fn(32, 32, 1, |x, _, _| x as f64 / 32.0).unwrap();
        assert!(matches!(
            fuse_pca(&FusionInput::new(lrms, pan, 4).unwrap()),
            Err(Error::Degenerate(_))
        ));
    }
}
