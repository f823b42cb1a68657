//! Parameter checkpoints.
//!
//! Layout: 5-byte magic (`KGAW1` or `CGRW1`), little-endian `u32` scalar
//! count, then that many little-endian `f64` values in the order of
//! [`Architecture::layout`](super::Architecture::layout): encoder kernel,
//! encoder bias, W_z, U_z, b_z, W_r, U_r, b_r, W_h, U_h, b_h, decoder kernel,
//! decoder bias.

use std::io::{Read, Write};
use std::path::Path;

use super::{Architecture, Model};
use crate::error::{Error, Result};

pub fn magic(arch: Architecture) -> &'static [u8; 5] {
    match arch {
        Architecture::Kga => b"KGAW1",
        Architecture::ConvGru => b"CGRW1",
    }
}

pub fn write_checkpoint<W: Write>(model: &Model, mut sink: W) -> Result<()> {
    let values = model.params().flatten();
    let mut bytes = Vec::with_capacity(9 + 8 * values.len());
    bytes.extend_from_slice(magic(model.arch()));
    bytes.extend_from_slice(&(values.len() as u32).to_le_bytes());
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    sink.write_all(&bytes)?;
    sink.flush()?;
    Ok(())
}

/// Reads either checkpoint kind; the magic selects the architecture.
pub fn read_checkpoint<R: Read>(mut source: R) -> Result<Model> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let bad = |offset: usize, reason: String| Error::Format {
        format: "checkpoint",
        offset: offset as u64,
        reason,
    };
    if bytes.len() < 9 {
        return Err(bad(bytes.len(), "truncated header".into()));
    }
    let arch = [Architecture::Kga, Architecture::ConvGru]
        .into_iter()
        .find(|&a| &bytes[..5] == magic(a))
        .ok_or_else(|| {
            bad(
                0,
                format!("bad magic {:?}", String::from_utf8_lossy(&bytes[..5])),
            )
        })?;
    let count = u32::from_le_bytes(bytes[5..9].try_into().expect("4 bytes")) as usize;
    let expected = Model::zeros(arch).count_params();
    if count != expected {
        return Err(bad(
            5,
            format!("{arch} checkpoint holds {count} values, expected {expected}"),
        ));
    }
    let payload = &bytes[9..];
    if payload.len() != 8 * count {
        return Err(bad(
            bytes.len().min(9 + 8 * count),
            format!("payload is {} bytes, expected {}", payload.len(), 8 * count),
        ));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(bad(9 + 8 * k, "non-finite parameter".into()));
    }
    Model::from_flat(arch, &values)
}

pub fn save_checkpoint(model: &Model, path: &Path) -> Result<()> {
    let mut bytes = Vec::new();
    write_checkpoint(model, &mut bytes)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Model> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&bytes[..])
}
