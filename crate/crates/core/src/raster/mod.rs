//! Image cube type shared by every stage of the pipeline.
//!
//! A [`Raster`] is `height × width × bands` of finite `f64`, stored row-major and
//! band-interleaved by pixel: element `(x, y, b)` lives at
//! `(y * width + x) * bands + b`.

mod msr;
mod patch;
mod synth;

pub use msr::{read_raster, write_raster, MSR_MAGIC};
pub use patch::{patchify, Patch, PatchSet};
pub use synth::synth_scene;

use crate::error::{shape_err, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    bands: usize,
    data: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, bands: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || bands == 0 {
            return Err(Error::InvalidArgument(format!(
                "raster dimensions must be positive, got {width}x{height}x{bands}"
            )));
        }
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(bands))
            .ok_or_else(|| Error::InvalidArgument("raster dimensions overflow".into()))?;
        if data.len() != expected {
            return Err(shape_err!(
                "data length {} does not match {width}x{height}x{bands}",
                data.len()
            ));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            width,
            height,
            bands,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, bands: usize, value: f64) -> Result<Self> {
        Self::new(width, height, bands, vec![value; width * height * bands])
    }

    /// Builds a raster by evaluating `f(x, y, band)` for every element.
    pub fn from_fn(
        width: usize,
        height: usize,
        bands: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * bands);
        for y in 0..height {
            for x in 0..width {
                for b in 0..bands {
                    data.push(f(x, y, b));
                }
            }
        }
        Self::new(width, height, bands, data)
    }

    /// Stacks equally sized single-band rasters into one cube.
    pub fn from_bands(bands: &[Raster]) -> Result<Self> {
        let first = bands
            .first()
            .ok_or_else(|| Error::InvalidArgument("no bands to stack".into()))?;
        for (i, b) in bands.iter().enumerate() {
            if b.bands != 1 || !b.same_dims(first) {
                return Err(shape_err!(
                    "band {i} is {}, expected {}x{}x1",
                    b.shape_string(),
                    first.width,
                    first.height
                ));
            }
        }
        let n = bands.len();
        let mut data = vec![0.0; first.pixel_count() * n];
        for (b, band) in bands.iter().enumerate() {
            for (p, v) in band.data.iter().enumerate() {
                data[p * n + b] = *v;
            }
        }
        Self::new(first.width, first.height, n, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, band: usize) -> usize {
        (y * self.width + x) * self.bands + band
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, band: usize) -> f64 {
        self.data[self.index(x, y, band)]
    }

    /// Spectrum of the pixel at `(x, y)`.
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let start = self.index(x, y, 0);
        &self.data[start..start + self.bands]
    }

    /// Iterates pixel spectra in row-major order.
    pub fn pixels(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.bands)
    }

    /// Copies one band out as a single-band raster.
    pub fn band(&self, band: usize) -> Raster {
        assert!(band < self.bands, "band {band} out of range");
        let data = self.pixels().map(|p| p[band]).collect();
        Raster {
            width: self.width,
            height: self.height,
            bands: 1,
            data,
        }
    }

    /// Copies one band out as a plain vector in row-major order.
    pub fn band_values(&self, band: usize) -> Vec<f64> {
        self.pixels().map(|p| p[band]).collect()
    }

    pub fn split_bands(&self) -> Vec<Raster> {
        (0..self.bands).map(|b| self.band(b)).collect()
    }

    pub fn same_dims(&self, other: &Raster) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn same_shape(&self, other: &Raster) -> bool {
        self.same_dims(other) && self.bands == other.bands
    }

    pub fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.width, self.height, self.bands)
    }

    pub(crate) fn ensure_same_shape(&self, other: &Raster, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(shape_err!(
                "{what}: {} vs {}",
                self.shape_string(),
                other.shape_string()
            ))
        }
    }

    /// Applies `f` elementwise. Panics if `f` produces a non-finite value.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Raster {
        let data: Vec<f64> = self.data.iter().map(|&v| f(v)).collect();
        assert!(
            data.iter().all(|v| v.is_finite()),
            "map produced non-finite value"
        );
        Raster::from_parts(self.width, self.height, self.bands, data)
    }

    /// Elementwise combination of two same-shape rasters.
    pub fn zip_map(&self, other: &Raster, mut f: impl FnMut(f64, f64) -> f64) -> Result<Raster> {
        self.ensure_same_shape(other, "zip_map")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Raster::new(self.width, self.height, self.bands, data)
    }

    pub fn clip(&self, lo: f64, hi: f64) -> Raster {
        self.map(|v| v.clamp(lo, hi))
    }

    /// Copies the `w × h` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Raster> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(shape_err!(
                "crop {w}x{h}+{x0}+{y0} outside {}",
                self.shape_string()
            ));
        }
        let mut data = Vec::with_capacity(w * h * self.bands);
        for y in y0..y0 + h {
            let start = self.index(x0, y, 0);
            data.extend_from_slice(&self.data[start..start + w * self.bands]);
        }
        Raster::new(w, h, self.bands, data)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn max_abs_diff(&self, other: &Raster) -> f64 {
        assert!(self.same_shape(other), "max_abs_diff on mismatched shapes");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Internal constructor for data already known to satisfy the invariants.
    pub(crate) fn from_parts(width: usize, height: usize, bands: usize, data: Vec<f64>) -> Raster {
        debug_assert_eq!(data.len(), width * height * bands);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Raster {
            width,
            height,
            bands,
            data,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_construction() {
        assert!(matches!(
            Raster::new(0, 2, 1, vec![]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            Raster::new(2, 2, 1, vec![0.0; 3]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            Raster::new(1, 1, 2, vec![0.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn layout_is_band_interleaved_by_pixel() {
        let r = Raster::from_fn(3, 2, 2, |x, y, b| (100 * y + 10 * x + b) as f64).unwrap();
        assert_eq!(r.data()[..4], [0.0, 1.0, 10.0, 11.0]);
        assert_eq!(r.get(2, 1, 1), 121.0);
        assert_eq!(r.pixel(1, 1), &[110.0, 111.0]);
        let b1 = r.band(1);
        assert_eq!(b1.data(), &[1.0, 11.0, 21.0, 101.0, 111.0, 121.0]);
        assert_eq!(Raster::from_bands(&r.split_bands()).unwrap(), r);
    }

    #[test]
    fn crop_takes_exact_window() {
        let r = Raster::from_fn(4, 4, 1, |x, y, _| (y * 4 + x) as f64).unwrap();
        let c = r.crop(1, 2, 2, 2).unwrap();
        assert_eq!(c.data(), &[9.0, 10.0, 13.0, 14.0]);
        assert!(r.crop(3, 3, 2, 1).is_err());
    }
}
