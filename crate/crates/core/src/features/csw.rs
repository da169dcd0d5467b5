//! CSW weights container: `"CSW1"`, little-endian `u32` header length, JSON
//! header, then per layer `out·in·k·k` weights followed by `out` biases, all
//! little-endian `f32`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ConvLayer, ConvStackSpec};
use crate::error::{Error, Result};

pub const CSW_MAGIC: [u8; 4] = *b"CSW1";

#[derive(Serialize, Deserialize)]
struct Header {
    bands: usize,
    layers: Vec<LayerHeader>,
}

#[derive(Serialize, Deserialize)]
struct LayerHeader {
    out: usize,
    #[serde(rename = "in")]
    inp: usize,
    k: usize,
    stride: usize,
    slope: f64,
}

pub(crate) fn encode(spec: &ConvStackSpec) -> Result<Vec<u8>> {
    spec.validate()?;
    let header = Header {
        bands: spec.bands,
        layers: spec
            .layers
            .iter()
            .map(|l| LayerHeader {
                out: l.out_channels,
                inp: l.in_channels,
                k: l.kernel_size,
                stride: l.stride,
                slope: l.leaky_slope,
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).expect("header serialization cannot fail");
    let mut out = CSW_MAGIC.to_vec();
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for l in &spec.layers {
        for v in l.weights.iter().chain(&l.biases) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub(crate) fn decode(bytes: &[u8]) -> Result<ConvStackSpec> {
    if bytes.len() < 4 || bytes[..4] != CSW_MAGIC {
        return Err(Error::BadMagic {
            expected: CSW_MAGIC,
            found: bytes[..bytes.len().min(4)].to_vec(),
        });
    }
    if bytes.len() < 8 {
        return Err(Error::Header("file ends inside the header length".into()));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let body = &bytes[8..];
    if body.len() < n {
        return Err(Error::Header(format!("header length {n} exceeds file")));
    }
    let header: Header =
        serde_json::from_slice(&body[..n]).map_err(|e| Error::Header(e.to_string()))?;
    let mut floats = body[n..].chunks_exact(4);
    let payload_floats = (body.len() - n) / 4;
    let needed: usize = header
        .layers
        .iter()
        .map(|l| l.out * l.inp * l.k * l.k + l.out)
        .sum();
    if !(body.len() - n).is_multiple_of(4) || payload_floats != needed {
        return Err(Error::PayloadSize {
            expected: needed * 4,
            actual: body.len() - n,
        });
    }
    let mut take = |count: usize| -> Vec<f32> {
        (&mut floats)
            .take(count)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect()
    };
    let layers = header
        .layers
        .iter()
        .map(|l| {
            let weights = take(l.out * l.inp * l.k * l.k);
            let biases = take(l.out);
            ConvLayer {
                out_channels: l.out,
                in_channels: l.inp,
                kernel_size: l.k,
                stride: l.stride,
                leaky_slope: l.slope,
                weights,
                biases,
            }
        })
        .collect();
    let spec = ConvStackSpec {
        bands: header.bands,
        layers,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn load_conv_stack(path: impl AsRef<Path>) -> Result<ConvStackSpec> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub fn write_conv_stack(spec: &ConvStackSpec, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(spec)?).map_err(|e| Error::io(path, e))
}
