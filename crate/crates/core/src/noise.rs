//! Measurement corruption: objects go missing (packet loss, latency) or are
//! reported at a displaced position (sensor inaccuracy).

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{rasterize_objects, GridFrame, Object, ObjectSet};
use crate::rng::{stream, tag};

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseConfig {
    pub miss_rate: f64,
    pub shift_rate: f64,
    /// Largest per-axis displacement of a shifted object, in cells.
    pub max_shift: i32,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            miss_rate: 0.8,
            shift_rate: 0.1,
            max_shift: 2,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    pub fn noiseless(seed: u64) -> Self {
        Self {
            miss_rate: 0.0,
            shift_rate: 0.0,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, rate) in [
            ("miss_rate", self.miss_rate),
            ("shift_rate", self.shift_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in [0, 1], got {rate}"
                )));
            }
        }
        if self.max_shift < 1 {
            return Err(Error::InvalidConfig(format!(
                "max_shift must be at least 1, got {}",
                self.max_shift
            )));
        }
        Ok(())
    }

    fn is_missed(&self, frame_index: u64, object_index: usize) -> bool {
        let mut rng = stream(self.seed, &[tag::MISS, frame_index, object_index as u64]);
        rng.gen::<f64>() < self.miss_rate
    }

    /// Displacement applied to an object, or `None` when it is not shifted.
    pub fn shift_offset(&self, frame_index: u64, object_index: usize) -> Option<(i32, i32)> {
        let mut rng = stream(self.seed, &[tag::SHIFT, frame_index, object_index as u64]);
        if rng.gen::<f64>() >= self.shift_rate {
            return None;
        }
        // Uniform over the (2m+1)^2 - 1 non-zero offsets; equivalent to
        // redrawing whenever (0, 0) comes up.
        let side = 2 * self.max_shift + 1;
        let mut k = rng.gen_range(0..side * side - 1);
        if k >= (side * side) / 2 {
            k += 1;
        }
        Some((k % side - self.max_shift, k / side - self.max_shift))
    }
}

/// Drops each object independently with probability `miss_rate`.
pub fn apply_miss(objects: &[Object], config: &NoiseConfig, frame_index: u64) -> ObjectSet {
    objects
        .iter()
        .enumerate()
        .filter(|&(k, _)| !config.is_missed(frame_index, k))
        .map(|(_, o)| *o)
        .collect()
}

fn shifted(obj: &Object, offset: Option<(i32, i32)>, height: usize, width: usize) -> Object {
    match offset {
        None => *obj,
        Some((dx, dy)) => Object {
            x: (obj.x + f64::from(dx)).clamp(0.0, (width as f64).next_down()),
            y: (obj.y + f64::from(dy)).clamp(0.0, (height as f64).next_down()),
            radius: obj.radius,
        },
    }
}

/// Displaces each object with probability `shift_rate` by a non-zero integer
/// offset of at most `max_shift` per axis, clamped to the world.
pub fn apply_shift(
    objects: &[Object],
    config: &NoiseConfig,
    frame_index: u64,
    height: usize,
    width: usize,
) -> ObjectSet {
    objects
        .iter()
        .enumerate()
        .map(|(k, o)| shifted(o, config.shift_offset(frame_index, k), height, width))
        .collect()
}

/// Returns `(measurement, truth)`. Misses are applied before shifts; a
/// surviving object keeps its original index for the shift draw.
pub fn corrupt_frame(
    objects: &[Object],
    config: &NoiseConfig,
    frame_index: u64,
    height: usize,
    width: usize,
) -> (GridFrame, GridFrame) {
    let truth = rasterize_objects(objects, height, width);
    let measured: ObjectSet = objects
        .iter()
        .enumerate()
        .filter(|&(k, _)| !config.is_missed(frame_index, k))
        .map(|(k, o)| shifted(o, config.shift_offset(frame_index, k), height, width))
        .collect();
    (rasterize_objects(&measured, height, width), truth)
}
