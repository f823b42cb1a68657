//! Object tracks as CSV (`frame,object_id,x,y,radius`), e.g. pedestrians
//! (radius 2) and vehicles (radius 3) prepared from a surveillance dataset.

use std::io::{Read, Write};

use super::{group_by_frame, SequenceRecord};
use crate::error::{Error, Result};
use crate::grid::Object;
use crate::noise::NoiseConfig;

pub const TRACK_HEADER: [&str; 5] = ["frame", "object_id", "x", "y", "radius"];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackRow {
    pub frame_index: u64,
    pub object_id: i64,
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

impl TrackRow {
    pub fn object(&self) -> Object {
        Object {
            x: self.x,
            y: self.y,
            radius: self.radius,
        }
    }
}

fn row_error(row: usize, reason: impl Into<String>) -> Error {
    Error::TrackRow {
        row,
        reason: reason.into(),
    }
}

/// Parses track rows. Row numbers in errors count data rows from 1.
pub fn read_tracks<R: Read>(source: R) -> Result<Vec<TrackRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let header = reader
        .headers()
        .map_err(|e| row_error(0, e.to_string()))?
        .clone();
    if header.iter().ne(TRACK_HEADER) {
        return Err(row_error(
            0,
            format!(
                "expected header {}, got {}",
                TRACK_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut rows = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let row = n + 1;
        let record = record.map_err(|e| row_error(row, e.to_string()))?;
        let field = |k: usize| record.get(k).unwrap_or_default();
        let num = |k: usize| -> Result<f64> {
            field(k)
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    row_error(
                        row,
                        format!("{} `{}` is not a finite number", TRACK_HEADER[k], field(k)),
                    )
                })
        };
        let parsed = TrackRow {
            frame_index: field(0).parse().map_err(|_| {
                row_error(
                    row,
                    format!("frame `{}` is not a non-negative integer", field(0)),
                )
            })?,
            object_id: field(1).parse().map_err(|_| {
                row_error(row, format!("object_id `{}` is not an integer", field(1)))
            })?,
            x: num(2)?,
            y: num(3)?,
            radius: num(4)?,
        };
        if !(parsed.radius > 0.0) {
            return Err(row_error(
                row,
                format!("radius {} must be positive", parsed.radius),
            ));
        }
        rows.push(parsed);
    }
    Ok(rows)
}

pub fn write_tracks<W: Write>(rows: &[TrackRow], sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    let io = |e: csv::Error| Error::Stream(std::io::Error::other(e));
    writer.write_record(TRACK_HEADER).map_err(io)?;
    for r in rows {
        writer
            .write_record([
                r.frame_index.to_string(),
                r.object_id.to_string(),
                format!("{:?}", r.x),
                format!("{:?}", r.y),
                format!("{:?}", r.radius),
            ])
            .map_err(io)?;
    }
    writer.flush()?;
    Ok(())
}

/// Rasterizes tracks into measurement/truth pairs under `noise`.
///
/// `frames` fixes the sequence length; when `None` it is one past the last
/// frame index present.
pub fn tracks_to_sequence(
    rows: &[TrackRow],
    height: usize,
    width: usize,
    frames: Option<usize>,
    noise: &NoiseConfig,
    fps: u16,
) -> Result<SequenceRecord> {
    for (n, pair) in rows.windows(2).enumerate() {
        if pair[1].frame_index < pair[0].frame_index {
            return Err(row_error(
                n + 2,
                format!(
                    "frame {} follows frame {}; rows must be sorted by frame",
                    pair[1].frame_index, pair[0].frame_index
                ),
            ));
        }
    }
    for (n, r) in rows.iter().enumerate() {
        if !(0.0..width as f64).contains(&r.x) || !(0.0..height as f64).contains(&r.y) {
            return Err(row_error(
                n + 1,
                format!("position ({}, {}) outside {width}x{height} world", r.x, r.y),
            ));
        }
        if !(r.radius > 0.0) {
            return Err(row_error(n + 1, "radius must be positive"));
        }
    }
    let needed = rows.last().map_or(0, |r| r.frame_index as usize + 1);
    let frames = match frames {
        Some(f) if f < needed => {
            return Err(row_error(
                rows.len(),
                format!("frame {} beyond declared {f} frames", needed - 1),
            ))
        }
        Some(f) => f,
        None => needed,
    };
    let objects = group_by_frame(rows, frames);
    SequenceRecord::from_objects(&objects, height, width, fps, noise)
}
