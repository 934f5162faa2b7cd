//! Binary checkpoint format.
//!
//! Little-endian throughout:
//!
//! ```text
//! magic    "PRCK"
//! version  u32
//! count    u32                      number of layers (3)
//! per layer:
//!   kernel, in_channels, out_channels   u32 each
//!   weight   kernel² · in · out  f64
//!   bias     out                 f64
//! ```

use std::path::Path;

use super::{ConvLayer, ModelParams};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"PRCK";

pub fn encode_checkpoint(params: &ModelParams) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&3u32.to_le_bytes());
    for layer in params.layers() {
        for dim in [layer.kernel, layer.in_channels, layer.out_channels] {
            out.extend_from_slice(&(dim as u32).to_le_bytes());
        }
        for v in layer.weight.iter().chain(&layer.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    origin: &'a str,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.buf.len() {
            return Err(self.err(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n * 8)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn err(&self, msg: String) -> Error {
        Error::Parse {
            path: self.origin.to_string(),
            line: 0,
            msg,
        }
    }
}

pub fn decode_checkpoint(buf: &[u8], origin: &str) -> Result<ModelParams> {
    let mut r = Reader { buf, pos: 0, origin };
    if r.take(4)? != MAGIC {
        return Err(r.err("not a checkpoint file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(r.err(format!("unsupported checkpoint version {version}")));
    }
    if r.u32()? != 3 {
        return Err(r.err("expected 3 layers".into()));
    }
    let mut layers = Vec::with_capacity(3);
    for _ in 0..3 {
        let kernel = r.u32()? as usize;
        let cin = r.u32()? as usize;
        let cout = r.u32()? as usize;
        if kernel % 2 == 0 || kernel > 15 || cin == 0 || cout == 0 || cin > 4096 || cout > 4096 {
            return Err(r.err(format!("implausible layer shape {kernel}x{kernel}x{cin}x{cout}")));
        }
        let weight = r.f64s(kernel * kernel * cin * cout)?;
        let bias = r.f64s(cout)?;
        layers.push(ConvLayer {
            kernel,
            in_channels: cin,
            out_channels: cout,
            weight,
            bias,
        });
    }
    if r.pos != buf.len() {
        return Err(r.err(format!("{} trailing bytes", buf.len() - r.pos)));
    }
    let head = layers.pop().unwrap();
    let conv2 = layers.pop().unwrap();
    let conv1 = layers.pop().unwrap();
    if conv1.out_channels != conv2.in_channels || conv2.out_channels != head.in_channels || head.kernel != 1 {
        return Err(r.err("layer shapes do not chain".into()));
    }
    Ok(ModelParams { conv1, conv2, head })
}

pub fn save_checkpoint(params: &ModelParams, path: &Path) -> Result<()> {
    std::fs::write(path, encode_checkpoint(params)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&buf, &path.display().to_string())
}
