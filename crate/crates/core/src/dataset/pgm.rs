//! Binary portable graymaps (P5, maxval 255).

use std::fs;
use std::path::{Path, PathBuf};

use super::SequenceRecord;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pgm {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<u8>,
}

/// Maps `[0, 1]` linearly onto `0..=255`, rounding half up.
pub fn quantize(value: f64) -> u8 {
    (value.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

pub fn write_pgm(path: &Path, image: &Pgm) -> Result<()> {
    let mut bytes = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    bytes.extend_from_slice(&image.pixels);
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_pgm(path: &Path) -> Result<Pgm> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |offset: usize, reason: &str| Error::Format {
        format: "PGM",
        offset: offset as u64,
        reason: reason.to_string(),
    };
    // Header: magic, width, height, maxval separated by single whitespace runs.
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad(pos, "truncated header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" {
        return Err(bad(0, "not a P5 graymap"));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| bad(0, "non-numeric header field"))
    };
    let (width, height, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
    if maxval != 255 {
        return Err(bad(0, "maxval must be 255"));
    }
    if bytes.len() < pos || bytes.len() - pos != width * height {
        return Err(bad(bytes.len(), "payload length does not match extent"));
    }
    Ok(Pgm {
        height,
        width,
        pixels: bytes[pos..].to_vec(),
    })
}

pub(crate) fn frame_path(dir: &Path, t: usize, channel: &str) -> PathBuf {
    dir.join(format!("frame_{t:05}_{channel}.pgm"))
}

/// Writes `frame_{t:05}_measurement.pgm` and `frame_{t:05}_truth.pgm` per frame.
pub fn export_frames(record: &SequenceRecord, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (height, width) = record.extent();
    let mut written = Vec::new();
    for (t, pair) in record.frames().iter().enumerate() {
        for (channel, frame) in [("measurement", &pair.measurement), ("truth", &pair.truth)] {
            let path = frame_path(dir, t, channel);
            let pixels = frame.cells().iter().map(|&c| c * 255).collect();
            write_pgm(
                &path,
                &Pgm {
                    height,
                    width,
                    pixels,
                },
            )?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Writes one image of `[0, 1]` values as `frame_{t:05}_{channel}.pgm`.
pub fn export_planes(
    dir: &Path,
    t: usize,
    channel: &str,
    height: usize,
    width: usize,
    values: &[f64],
) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = frame_path(dir, t, channel);
    let pixels = values.iter().map(|&v| quantize(v)).collect();
    write_pgm(
        &path,
        &Pgm {
            height,
            width,
            pixels,
        },
    )?;
    Ok(path)
}
