//! Run configuration: a line-based `key = value` file plus dotted-key overrides.
//!
//! ```text
//! # comments and blank lines are ignored
//! world.n_agents = 10
//! noise.miss_rate = 0.8
//! train.max_epochs = 200
//! ```
//!
//! Unknown keys and malformed values are errors. [`RunConfig::to_text`]
//! writes every key in a fixed order and parses back to the same values.

use std::path::Path;

use crate::boids::WorldConfig;
use crate::error::{Error, Result};
use crate::evaluation::BenchOptions;
use crate::model::Architecture;
use crate::noise::NoiseConfig;
use crate::training::TrainConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct GenerateConfig {
    pub n_sequences: usize,
    pub frames: usize,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            n_sequences: 40,
            frames: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub arch: Architecture,
    /// Seed of the fresh initialisation training starts from.
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            arch: Architecture::Kga,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    /// Seed of the per-condition corruption.
    pub seed: u64,
    /// Adds a zero-noise control row.
    pub control: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            control: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub world: WorldConfig,
    pub noise: NoiseConfig,
    pub generate: GenerateConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub bench: BenchOptions,
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::InvalidConfig(format!(
            "invalid value {value:?} for {key}"
        ))),
    }
}

impl RunConfig {
    pub const KEYS: [&'static str; 31] = [
        "world.width",
        "world.height",
        "world.n_agents",
        "world.radius",
        "world.separation_radius",
        "world.separation_gain",
        "world.max_turn",
        "world.speed",
        "world.seed",
        "noise.miss_rate",
        "noise.shift_rate",
        "noise.max_shift",
        "noise.seed",
        "generate.n_sequences",
        "generate.frames",
        "model.arch",
        "model.seed",
        "train.learning_rate",
        "train.unroll_length",
        "train.batch",
        "train.max_epochs",
        "train.steps_per_epoch",
        "train.patience",
        "train.min_delta",
        "train.validation_fraction",
        "train.seed",
        "eval.seed",
        "eval.control",
        "bench.warmup",
        "bench.frames",
        "seed",
    ];

    /// Sets one dotted key. `seed` sets every component seed at once.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "world.width" => self.world.width = parse(key, value)?,
            "world.height" => self.world.height = parse(key, value)?,
            "world.n_agents" => self.world.n_agents = parse(key, value)?,
            "world.radius" => self.world.radius = parse(key, value)?,
            "world.separation_radius" => self.world.separation_radius = parse(key, value)?,
            "world.separation_gain" => self.world.separation_gain = parse(key, value)?,
            "world.max_turn" => self.world.max_turn = parse(key, value)?,
            "world.speed" => self.world.speed = parse(key, value)?,
            "world.seed" => self.world.seed = parse(key, value)?,
            "noise.miss_rate" => self.noise.miss_rate = parse(key, value)?,
            "noise.shift_rate" => self.noise.shift_rate = parse(key, value)?,
            "noise.max_shift" => self.noise.max_shift = parse(key, value)?,
            "noise.seed" => self.noise.seed = parse(key, value)?,
            "generate.n_sequences" => self.generate.n_sequences = parse(key, value)?,
            "generate.frames" => self.generate.frames = parse(key, value)?,
            "model.arch" => self.model.arch = parse(key, value)?,
            "model.seed" => self.model.seed = parse(key, value)?,
            "train.learning_rate" => self.train.learning_rate = parse(key, value)?,
            "train.unroll_length" => self.train.unroll_length = parse(key, value)?,
            "train.batch" => self.train.batch = parse(key, value)?,
            "train.max_epochs" => self.train.max_epochs = parse(key, value)?,
            "train.steps_per_epoch" => self.train.steps_per_epoch = parse(key, value)?,
            "train.patience" => self.train.patience = parse(key, value)?,
            "train.min_delta" => self.train.min_delta = parse(key, value)?,
            "train.validation_fraction" => self.train.validation_fraction = parse(key, value)?,
            "train.seed" => self.train.seed = parse(key, value)?,
            "eval.seed" => self.eval.seed = parse(key, value)?,
            "eval.control" => self.eval.control = parse_bool(key, value)?,
            "bench.warmup" => self.bench.warmup = parse(key, value)?,
            "bench.frames" => self.bench.frames = parse(key, value)?,
            "seed" => {
                let seed: u64 = parse(key, value)?;
                self.world.seed = seed;
                self.noise.seed = seed;
                self.model.seed = seed;
                self.train.seed = seed;
                self.eval.seed = seed;
            }
            _ => return Err(Error::InvalidConfig(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!("override {assignment:?} is not key=value"))
        })?;
        self.set(key.trim(), value)
    }

    /// Applies every assignment in `text` on top of the current values.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key = value", n + 1))
            })?;
            self.set(key.trim(), value).map_err(|e| match e {
                Error::InvalidConfig(m) => Error::InvalidConfig(format!("line {}: {m}", n + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut config = Self::default();
        config.merge_text(text)?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Every key except the `seed` shorthand, in [`Self::KEYS`] order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let w = &self.world;
        let n = &self.noise;
        let t = &self.train;
        vec![
            ("world.width", w.width.to_string()),
            ("world.height", w.height.to_string()),
            ("world.n_agents", w.n_agents.to_string()),
            ("world.radius", format!("{:?}", w.radius)),
            (
                "world.separation_radius",
                format!("{:?}", w.separation_radius),
            ),
            ("world.separation_gain", format!("{:?}", w.separation_gain)),
            ("world.max_turn", format!("{:?}", w.max_turn)),
            ("world.speed", format!("{:?}", w.speed)),
            ("world.seed", w.seed.to_string()),
            ("noise.miss_rate", format!("{:?}", n.miss_rate)),
            ("noise.shift_rate", format!("{:?}", n.shift_rate)),
            ("noise.max_shift", n.max_shift.to_string()),
            ("noise.seed", n.seed.to_string()),
            (
                "generate.n_sequences",
                self.generate.n_sequences.to_string(),
            ),
            ("generate.frames", self.generate.frames.to_string()),
            ("model.arch", self.model.arch.name().to_ascii_lowercase()),
            ("model.seed", self.model.seed.to_string()),
            ("train.learning_rate", format!("{:?}", t.learning_rate)),
            ("train.unroll_length", t.unroll_length.to_string()),
            ("train.batch", t.batch.to_string()),
            ("train.max_epochs", t.max_epochs.to_string()),
            ("train.steps_per_epoch", t.steps_per_epoch.to_string()),
            ("train.patience", t.patience.to_string()),
            ("train.min_delta", format!("{:?}", t.min_delta)),
            (
                "train.validation_fraction",
                format!("{:?}", t.validation_fraction),
            ),
            ("train.seed", t.seed.to_string()),
            ("eval.seed", self.eval.seed.to_string()),
            ("eval.control", self.eval.control.to_string()),
            ("bench.warmup", self.bench.warmup.to_string()),
            ("bench.frames", self.bench.frames.to_string()),
        ]
    }

    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        self.noise.validate()?;
        self.train.validate()?;
        if self.generate.n_sequences == 0 || self.generate.frames < 2 {
            return Err(Error::InvalidConfig(
                "generate needs at least one sequence of at least 2 frames".into(),
            ));
        }
        if self.bench.frames == 0 {
            return Err(Error::InvalidConfig("bench.frames must be positive".into()));
        }
        Ok(())
    }
}
