//! Quality metrics for fused products and the per-method report row.

mod qindex;
mod qnr;
mod spectral;
mod ssim;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use qindex::{metric_q4, metric_uiqi, metric_uiqi_mean};
pub use qnr::{metric_qnr, Qnr};
pub use spectral::{metric_ergas, metric_sam, SAM_EPS};
pub use ssim::{metric_ssim, SSIM_C1, SSIM_C2};

use crate::error::Result;
use crate::raster::Raster;

pub const DEFAULT_Q4_BLOCK: usize = 32;
pub const DEFAULT_QNR_BLOCK: usize = 32;

pub const CSV_HEADER: &str = "method,ssim,sam,ergas,q4,qnr";

/// One row of the method comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub method: String,
    pub ssim: f64,
    pub sam: f64,
    pub ergas: f64,
    pub q4: f64,
    pub qnr: f64,
}

impl MetricReport {
    /// Metric values in column order.
    pub fn values(&self) -> [(&'static str, f64); 5] {
        [
            ("ssim", self.ssim),
            ("sam", self.sam),
            ("ergas", self.ergas),
            ("q4", self.q4),
            ("qnr", self.qnr),
        ]
    }

    /// Whether every value lies in its admissible range.
    pub fn in_range(&self) -> bool {
        (-1.0..=1.0).contains(&self.ssim)
            && (0.0..=std::f64::consts::PI).contains(&self.sam)
            && self.ergas >= 0.0
            && (-1.0..=1.0).contains(&self.q4)
            && (0.0..=1.0).contains(&self.qnr)
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.method, self.ssim, self.sam, self.ergas, self.q4, self.qnr
        )
    }
}

pub fn write_csv<W: Write>(mut out: W, rows: &[MetricReport]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

pub fn to_json(rows: &[MetricReport]) -> String {
    serde_json::to_string_pretty(rows).expect("reports always serialize")
}

/// Computes the full row for one fused product. Tile sizes are the defaults,
/// clamped to the image size.
pub fn build_report(
    method: &str,
    fused: &Raster,
    reference: &Raster,
    lrms: &Raster,
    pan: &Raster,
    ratio: usize,
) -> Result<MetricReport> {
    let side = fused.width().min(fused.height());
    Ok(MetricReport {
        method: method.to_string(),
        ssim: metric_ssim(fused, reference)?,
        sam: metric_sam(fused, reference)?,
        ergas: metric_ergas(fused, reference, ratio)?,
        q4: metric_q4(fused, reference, DEFAULT_Q4_BLOCK.min(side))?,
        qnr: metric_qnr(fused, lrms, pan, ratio, DEFAULT_QNR_BLOCK.min(side))?.qnr,
    })
}
