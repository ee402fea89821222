//! `SEMW` weights file.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "SEMW" | version: u32 = 1 | layer count: u32
//! per layer: kind: u8 (0 conv, 1 tconv) | activation: u8 (0 none, 1 relu, 2 sigmoid)
//!            out_c, in_c, h_K, w_K: u32 | stride: u32
//!            weights: f32 * (out_c*in_c*h_K*w_K) | bias: f32 * out_c
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use super::layer::{Activation, ConvLayerSpec, LayerKind, LayerState};
use super::model::Sequential;
use crate::{Error, Result};

pub const WEIGHTS_MAGIC: &[u8; 4] = b"SEMW";
pub const WEIGHTS_VERSION: u32 = 1;

pub fn write_weights<W: Write>(model: &Sequential<f32>, mut out: W) -> Result<()> {
    if !model.all_finite() {
        return Err(Error::Numeric("refusing to save non-finite weights".into()));
    }
    out.write_all(WEIGHTS_MAGIC)?;
    out.write_all(&WEIGHTS_VERSION.to_le_bytes())?;
    out.write_all(&(model.layers.len() as u32).to_le_bytes())?;
    for layer in &model.layers {
        out.write_all(&[layer.spec.kind.tag(), layer.spec.activation.tag()])?;
        for d in layer.weight_shape() {
            out.write_all(&(d as u32).to_le_bytes())?;
        }
        out.write_all(&(layer.spec.stride as u32).to_le_bytes())?;
        for v in layer.weights.iter().chain(&layer.bias) {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn save_weights(model: &Sequential<f32>, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_weights(model, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::format(
                self.pos as u64,
                format!("truncated while reading {what}"),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f32s(&mut self, n: usize, what: &str) -> Result<Vec<f32>> {
        let len = n
            .checked_mul(4)
            .ok_or_else(|| Error::format(self.pos as u64, format!("{what} count overflows")))?;
        let b = self.take(len, what)?;
        Ok(b
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }
}

pub fn read_weights(bytes: &[u8]) -> Result<Sequential<f32>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != WEIGHTS_MAGIC {
        return Err(Error::format(0, "bad magic, expected SEMW"));
    }
    let version = r.u32("version")?;
    if version != WEIGHTS_VERSION {
        return Err(Error::format(4, format!("unsupported version {version}")));
    }
    let count = r.u32("layer count")?;
    let mut layers = Vec::new();
    for i in 0..count {
        let at = r.pos as u64;
        let kind = LayerKind::from_tag(r.u8("kind tag")?)
            .ok_or_else(|| Error::format(at, format!("layer {i}: unknown kind tag")))?;
        let activation = Activation::from_tag(r.u8("activation tag")?)
            .ok_or_else(|| Error::format(at + 1, format!("layer {i}: unknown activation tag")))?;
        let out_c = r.u32("out_c")? as usize;
        let in_c = r.u32("in_c")? as usize;
        let kh = r.u32("h_K")? as usize;
        let kw = r.u32("w_K")? as usize;
        let stride = r.u32("stride")? as usize;
        let spec = ConvLayerSpec {
            filters: out_c,
            kernel_h: kh,
            kernel_w: kw,
            stride,
            kind,
            activation,
        };
        if spec.validate().is_err() || in_c == 0 {
            return Err(Error::format(at, format!("layer {i}: zero dimension")));
        }
        let n = out_c
            .checked_mul(in_c)
            .and_then(|v| v.checked_mul(kh))
            .and_then(|v| v.checked_mul(kw))
            .ok_or_else(|| Error::format(at, format!("layer {i}: dimensions overflow")))?;
        let weights = r.f32s(n, "weights")?;
        let bias = r.f32s(out_c, "bias")?;
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::format(at, format!("layer {i}: non-finite parameter")));
        }
        layers.push(LayerState::with_params(spec, in_c, weights, bias)?);
    }
    if r.pos != bytes.len() {
        return Err(Error::format(r.pos as u64, "trailing bytes after last layer"));
    }
    Sequential::new(layers).map_err(|e| Error::format(12, e.to_string()))
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<Sequential<f32>> {
    read_weights(&fs::read(path)?)
}
