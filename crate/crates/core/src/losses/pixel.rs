use crate::error::Result;
use crate::raster::Raster;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelMode {
    L1,
    Mse,
}

/// Mean absolute (`L1`) or mean squared (`Mse`) difference over all elements.
pub fn pixel_loss(a: &Raster, b: &Raster, mode: PixelMode) -> Result<f64> {
    a.ensure_same_shape(b, "pixel loss")?;
    let diffs = a.data().iter().zip(b.data()).map(|(x, y)| x - y);
    let total: f64 = match mode {
        PixelMode::L1 => diffs.map(f64::abs).sum(),
        PixelMode::Mse => diffs.map(|d| d * d).sum(),
    };
    Ok(total / a.len() as f64)
}
