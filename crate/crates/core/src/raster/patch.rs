use super::Raster;
use crate::error::{shape_err, Error, Result};
use crate::resample::downsample_antialias;

/// One co-registered tile. `reference` is only present after
/// [`PatchSet::wald_degrade`].
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub lrms: Raster,
    pub pan: Raster,
    pub reference: Option<Raster>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    pub patches: Vec<Patch>,
    pub ratio: usize,
}

/// Cuts an (MS, PAN) pair into non-overlapping tiles of `patch × patch` PAN
/// pixels. Partial tiles on the right and bottom edges are dropped.
pub fn patchify(ms: &Raster, pan: &Raster, patch: usize, ratio: usize) -> Result<PatchSet> {
    if ratio == 0 {
        return Err(Error::InvalidArgument("ratio must be at least 1".into()));
    }
    if patch == 0 || !patch.is_multiple_of(ratio) {
        return Err(Error::InvalidArgument(format!(
            "patch size {patch} is not a positive multiple of ratio {ratio}"
        )));
    }
    if pan.bands() != 1 {
        return Err(shape_err!("pan has {} bands, expected 1", pan.bands()));
    }
    if pan.width() != ratio * ms.width() || pan.height() != ratio * ms.height() {
        return Err(shape_err!(
            "pan {}x{} is not {ratio}x ms {}x{}",
            pan.width(),
            pan.height(),
            ms.width(),
            ms.height()
        ));
    }
    let ms_patch = patch / ratio;
    let mut patches = Vec::new();
    for ty in 0..pan.height() / patch {
        for tx in 0..pan.width() / patch {
            patches.push(Patch {
                lrms: ms.crop(tx * ms_patch, ty * ms_patch, ms_patch, ms_patch)?,
                pan: pan.crop(tx * patch, ty * patch, patch, patch)?,
                reference: None,
            });
        }
    }
    Ok(PatchSet { patches, ratio })
}

impl PatchSet {
    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    /// Applies the reduced-resolution protocol to every tile: the original MS
    /// tile becomes the reference and both inputs are degraded by `ratio`.
    pub fn wald_degrade(&self) -> Result<PatchSet> {
        let patches = self
            .patches
            .iter()
            .map(|p| {
                Ok(Patch {
                    lrms: downsample_antialias(&p.lrms, self.ratio)?,
                    pan: downsample_antialias(&p.pan, self.ratio)?,
                    reference: Some(p.lrms.clone()),
                })
            })
            .collect::<Result<_>>()?;
        Ok(PatchSet {
            patches,
            ratio: self.ratio,
        })
    }
}
