//! Sequence records and their file formats.
//!
//! * OGSQ1: paired measurement/truth binary frames ([`write_ogsq`], [`read_ogsq`]).
//! * Track CSV `frame,object_id,x,y,radius` for external object tracks.
//! * PGM (P5) snapshots for inspection.

mod ogsq;
mod pgm;
mod tracks;

use std::collections::BTreeMap;

pub use ogsq::{load_ogsq, read_ogsq, save_ogsq, write_ogsq, OGSQ_HEADER_LEN, OGSQ_MAGIC};
pub use pgm::{export_frames, export_planes, quantize, read_pgm, write_pgm, Pgm};
pub use tracks::{read_tracks, tracks_to_sequence, write_tracks, TrackRow};

use crate::boids::{self, WorldConfig};
use crate::error::{Error, Result};
use crate::grid::{GridFrame, Object};
use crate::noise::{corrupt_frame, NoiseConfig};
use crate::rng::{derive_key, tag};

pub const DEFAULT_FPS: u16 = 30;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FramePair {
    pub measurement: GridFrame,
    pub truth: GridFrame,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SequenceRecord {
    height: usize,
    width: usize,
    fps: u16,
    frames: Vec<FramePair>,
}

impl SequenceRecord {
    pub fn new(height: usize, width: usize, fps: u16, frames: Vec<FramePair>) -> Result<Self> {
        if height == 0
            || width == 0
            || height > usize::from(u16::MAX)
            || width > usize::from(u16::MAX)
        {
            return Err(Error::InvalidConfig(format!(
                "record extent {height}x{width} outside 1..=65535"
            )));
        }
        for (t, pair) in frames.iter().enumerate() {
            for frame in [&pair.measurement, &pair.truth] {
                if frame.extent() != (height, width) {
                    return Err(Error::ShapeMismatch {
                        op: "sequence_record",
                        expected: vec![t, height, width],
                        got: vec![t, frame.height(), frame.width()],
                    });
                }
            }
        }
        Ok(Self {
            height,
            width,
            fps,
            frames,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn extent(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn fps(&self) -> u16 {
        self.fps
    }

    pub fn frames(&self) -> &[FramePair] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn measurements(&self) -> impl Iterator<Item = &GridFrame> {
        self.frames.iter().map(|p| &p.measurement)
    }

    pub fn truths(&self) -> impl Iterator<Item = &GridFrame> {
        self.frames.iter().map(|p| &p.truth)
    }

    /// Frames `start..start + len` as a new record.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.frames.len() {
            return Err(Error::InvalidConfig(format!(
                "window {start}..{} exceeds {} frames",
                start + len,
                self.frames.len()
            )));
        }
        Self::new(
            self.height,
            self.width,
            self.fps,
            self.frames[start..start + len].to_vec(),
        )
    }

    /// Same truth frames, measurements regenerated from `objects` under `noise`.
    pub fn from_objects(
        objects: &[Vec<Object>],
        height: usize,
        width: usize,
        fps: u16,
        noise: &NoiseConfig,
    ) -> Result<Self> {
        noise.validate()?;
        let frames = objects
            .iter()
            .enumerate()
            .map(|(t, objs)| {
                let (measurement, truth) = corrupt_frame(objs, noise, t as u64, height, width);
                FramePair { measurement, truth }
            })
            .collect();
        Self::new(height, width, fps, frames)
    }
}

/// Object sets per frame of a simulated Boids scene.
pub fn simulate_objects(world: &WorldConfig, frames: usize) -> Result<Vec<Vec<Object>>> {
    Ok(boids::simulate(world, frames)?
        .into_iter()
        .map(|agents| agents.iter().map(boids::Agent::object).collect())
        .collect())
}

/// Simulated scene, corrupted frame by frame.
pub fn synthesize(
    world: &WorldConfig,
    noise: &NoiseConfig,
    frames: usize,
) -> Result<SequenceRecord> {
    let objects = simulate_objects(world, frames)?;
    SequenceRecord::from_objects(&objects, world.height, world.width, DEFAULT_FPS, noise)
}

/// Groups per-frame object sets by frame index; frames without rows are empty.
pub(crate) fn group_by_frame(rows: &[TrackRow], frames: usize) -> Vec<Vec<Object>> {
    let mut grouped: BTreeMap<u64, Vec<Object>> = BTreeMap::new();
    for row in rows {
        grouped
            .entry(row.frame_index)
            .or_default()
            .push(row.object());
    }
    (0..frames as u64)
        .map(|t| grouped.remove(&t).unwrap_or_default())
        .collect()
}

/// One simulated scene: clean object tracks plus their corrupted record.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub objects: Vec<Vec<Object>>,
    pub record: SequenceRecord,
}

impl Scene {
    /// The same tracks corrupted under another noise setting.
    pub fn recorrupt(&self, noise: &NoiseConfig) -> Result<SequenceRecord> {
        SequenceRecord::from_objects(
            &self.objects,
            self.record.height(),
            self.record.width(),
            self.record.fps(),
            noise,
        )
    }
}

/// `n` independent scenes. Scene `i` uses world and noise seeds derived from
/// the configured seeds and `i`.
pub fn synthesize_scenes(
    world: &WorldConfig,
    noise: &NoiseConfig,
    n: usize,
    frames: usize,
) -> Result<Vec<Scene>> {
    (0..n as u64)
        .map(|i| {
            let world_i = WorldConfig {
                seed: derive_key(world.seed, &[tag::SEQUENCE, i]),
                ..world.clone()
            };
            let noise_i = NoiseConfig {
                seed: derive_key(noise.seed, &[tag::SEQUENCE, i]),
                ..noise.clone()
            };
            let objects = simulate_objects(&world_i, frames)?;
            let record = SequenceRecord::from_objects(
                &objects,
                world.height,
                world.width,
                DEFAULT_FPS,
                &noise_i,
            )?;
            Ok(Scene { objects, record })
        })
        .collect()
}

/// Track rows for per-frame object sets; object ids are positions within a frame.
pub fn objects_to_tracks(objects: &[Vec<Object>]) -> Vec<TrackRow> {
    objects
        .iter()
        .enumerate()
        .flat_map(|(t, frame)| {
            frame.iter().enumerate().map(move |(id, o)| TrackRow {
                frame_index: t as u64,
                object_id: id as i64,
                x: o.x,
                y: o.y,
                radius: o.radius,
            })
        })
        .collect()
}

/// Per-frame object sets for frames `0..frames`, in row order within a frame.
pub fn tracks_to_objects(rows: &[TrackRow], frames: usize) -> Vec<Vec<Object>> {
    group_by_frame(rows, frames)
}
