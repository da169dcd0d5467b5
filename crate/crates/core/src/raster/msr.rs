//! MSR raster container: `"MSR1"`, a little-endian `u32` header length, a JSON
//! header, then the payload as little-endian `f64` in memory order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Raster;
use crate::error::{Error, Result};

pub const MSR_MAGIC: [u8; 4] = *b"MSR1";

#[derive(Debug, Serialize, Deserialize)]
struct MsrHeader {
    width: usize,
    height: usize,
    bands: usize,
    dtype: String,
}

pub(crate) fn encode(raster: &Raster) -> Vec<u8> {
    let header = MsrHeader {
        width: raster.width(),
        height: raster.height(),
        bands: raster.bands(),
        dtype: "f64".into(),
    };
    let json = serde_json::to_vec(&header).expect("header serialization cannot fail");
    let mut out = Vec::with_capacity(8 + json.len() + raster.len() * 8);
    out.extend_from_slice(&MSR_MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for v in raster.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub(crate) fn decode(bytes: &[u8]) -> Result<Raster> {
    if bytes.len() < 4 || bytes[..4] != MSR_MAGIC {
        return Err(Error::BadMagic {
            expected: MSR_MAGIC,
            found: bytes[..bytes.len().min(4)].to_vec(),
        });
    }
    if bytes.len() < 8 {
        return Err(Error::Header("file ends inside the header length".into()));
    }
    let header_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let body = &bytes[8..];
    if body.len() < header_len {
        return Err(Error::Header(format!(
            "header length {header_len} exceeds remaining {} bytes",
            body.len()
        )));
    }
    let header: MsrHeader =
        serde_json::from_slice(&body[..header_len]).map_err(|e| Error::Header(e.to_string()))?;
    if header.dtype != "f64" {
        return Err(Error::Header(format!(
            "unsupported dtype {:?}",
            header.dtype
        )));
    }
    if header.width == 0 || header.height == 0 || header.bands == 0 {
        return Err(Error::Header("zero dimension in header".into()));
    }
    let payload = &body[header_len..];
    let expected = header
        .width
        .checked_mul(header.height)
        .and_then(|n| n.checked_mul(header.bands))
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Header("dimensions overflow".into()))?;
    if payload.len() != expected {
        return Err(Error::PayloadSize {
            expected,
            actual: payload.len(),
        });
    }
    let data: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Raster::new(header.width, header.height, header.bands, data)
}

pub fn read_raster(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub fn write_raster(raster: &Raster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(raster)).map_err(|e| Error::io(path, e))
}
