//! Noise-condition comparison table, naive baselines and latency benchmark.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

use crate::dataset::{FramePair, Scene, SequenceRecord};
use crate::error::{Error, Result};
use crate::grid::GridFrame;
use crate::model::{initial_state, step, Architecture, Model};
use crate::noise::NoiseConfig;
use crate::numerics::BCE_EPSILON;
use crate::rng::{derive_key, tag};
use crate::training::{evaluate, evaluate_with};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    /// Measurements equal truth; a control row.
    ZeroNoise,
    MissOnly,
    ShiftOnly,
    Both,
}

impl Condition {
    pub const TABLE: [Condition; 3] = [Condition::MissOnly, Condition::ShiftOnly, Condition::Both];

    pub fn name(self) -> &'static str {
        match self {
            Condition::ZeroNoise => "zero-noise",
            Condition::MissOnly => "miss-only",
            Condition::ShiftOnly => "shift-only",
            Condition::Both => "both",
        }
    }

    /// Corruption for this condition with the default miss and shift rates.
    pub fn noise(self, seed: u64) -> NoiseConfig {
        let base = NoiseConfig {
            seed,
            ..NoiseConfig::default()
        };
        match self {
            Condition::ZeroNoise => NoiseConfig::noiseless(seed),
            Condition::MissOnly => NoiseConfig {
                shift_rate: 0.0,
                ..base
            },
            Condition::ShiftOnly => NoiseConfig {
                miss_rate: 0.0,
                ..base
            },
            Condition::Both => base,
        }
    }

    /// Published synthetic-data BCE as `(ConvGRU, KGA)`.
    pub fn published_reference(self) -> Option<(f64, f64)> {
        match self {
            Condition::ZeroNoise => None,
            Condition::MissOnly => Some((0.3265, 0.3306)),
            Condition::ShiftOnly => Some((0.3235, 0.3227)),
            Condition::Both => Some((0.3312, 0.3351)),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Condition::ZeroNoise,
            Condition::MissOnly,
            Condition::ShiftOnly,
            Condition::Both,
        ]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown condition {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionResult {
    pub condition: Condition,
    pub model: Architecture,
    pub bce: f64,
    /// Predicted frames scored (each covers every grid cell).
    pub n_frames: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NaiveBaselines {
    /// Measurement at `t` used as the prediction for truth at `t + 1`.
    pub copy_last: f64,
    /// `ε` everywhere.
    pub always_free: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionTable {
    pub results: Vec<ConditionResult>,
    pub baselines: Vec<(Condition, NaiveBaselines)>,
    /// SHA-256 of the truth frames every condition was scored against.
    pub truth_hash: String,
    /// Architectures whose parameters look freshly initialised (all biases zero).
    pub untrained: Vec<Architecture>,
    pub seed: u64,
}

impl ConditionTable {
    pub fn bce(&self, condition: Condition, model: Architecture) -> Option<f64> {
        self.results
            .iter()
            .find(|r| r.condition == condition && r.model == model)
            .map(|r| r.bce)
    }

    pub fn baseline(&self, condition: Condition) -> Option<NaiveBaselines> {
        self.baselines
            .iter()
            .find(|(c, _)| *c == condition)
            .map(|(_, b)| *b)
    }

    /// `condition,model,bce,n_frames,copy_last_bce,always_free_bce,reference_bce`
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "condition,model,bce,n_frames,copy_last_bce,always_free_bce,reference_bce\n",
        );
        for r in &self.results {
            let base = self.baseline(r.condition);
            let reference = r
                .condition
                .published_reference()
                .map(|(convgru, kga)| match r.model {
                    Architecture::Kga => kga,
                    Architecture::ConvGru => convgru,
                });
            let _ = writeln!(
                out,
                "{},{},{:.10},{},{},{},{}",
                r.condition,
                r.model,
                r.bce,
                r.n_frames,
                base.map_or(String::new(), |b| format!("{:.10}", b.copy_last)),
                base.map_or(String::new(), |b| format!("{:.10}", b.always_free)),
                reference.map_or(String::new(), |v| format!("{v:.4}")),
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Occupancy anticipation BCE by noise condition");
        let _ = writeln!(out, "Both models were trained once on miss and shift noise together and are scored on every condition.");
        let _ = writeln!(out, "BCE is the per-cell mean over all predicted frames against the next clean truth frame.");
        let _ = writeln!(out, "seed {}  truth sha256 {}", self.seed, self.truth_hash);
        if !self.untrained.is_empty() {
            let names: Vec<&str> = self.untrained.iter().map(|a| a.name()).collect();
            let _ = writeln!(
                out,
                "WARNING: untrained (fresh-init) parameters: {}",
                names.join(", ")
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<12} {:>10} {:>10} {:>10} {:>12} {:>16}",
            "condition", "KGA", "ConvGRU", "copy-last", "always-free", "ref ConvGRU/KGA"
        );
        let mut conditions: Vec<Condition> = self.results.iter().map(|r| r.condition).collect();
        conditions.dedup();
        for c in conditions {
            let cell = |a| {
                self.bce(c, a)
                    .map_or("-".to_string(), |v| format!("{v:.4}"))
            };
            let base = self.baseline(c);
            let _ = writeln!(
                out,
                "{:<12} {:>10} {:>10} {:>10} {:>12} {:>16}",
                c.name(),
                cell(Architecture::Kga),
                cell(Architecture::ConvGru),
                base.map_or("-".into(), |b| format!("{:.4}", b.copy_last)),
                base.map_or("-".into(), |b| format!("{:.2e}", b.always_free)),
                c.published_reference()
                    .map_or("-".into(), |(g, k)| format!("{g:.4}/{k:.4}")),
            );
        }
        let _ = writeln!(
            out,
            "\nReference values were reported under an unstated averaging convention and are not comparable in absolute terms."
        );
        out
    }
}

/// SHA-256 over the truth frames of every record, in order.
pub fn truth_hash(records: &[SequenceRecord]) -> String {
    let mut hasher = Sha256::new();
    for record in records {
        hasher.update((record.len() as u64).to_le_bytes());
        for truth in record.truths() {
            hasher.update(truth.cells());
        }
    }
    hex(&hasher.finalize())
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// True when every bias array is exactly zero, as after [`Model::init`].
pub fn looks_untrained(model: &Model) -> bool {
    model
        .params()
        .iter()
        .filter(|(name, _)| name.ends_with("bias") || name.starts_with("gru.b_"))
        .all(|(_, t)| t.data().iter().all(|&v| v == 0.0))
}

/// Corrupts every scene under `condition`. Scene `i` uses a noise seed derived
/// from `seed` and `i` only, so conditions sharing a rate also share draws.
pub fn corrupt_scenes(
    scenes: &[Scene],
    condition: Condition,
    seed: u64,
) -> Result<Vec<SequenceRecord>> {
    scenes
        .iter()
        .enumerate()
        .map(|(i, scene)| {
            scene.recorrupt(&condition.noise(derive_key(seed, &[tag::CONDITION, i as u64])))
        })
        .collect()
}

/// Scores both models on `scenes` under each listed condition.
pub fn run_condition_table(
    kga: &Model,
    convgru: &Model,
    scenes: &[Scene],
    conditions: &[Condition],
    seed: u64,
) -> Result<ConditionTable> {
    if scenes.is_empty() {
        return Err(Error::InvalidConfig(
            "condition table needs at least one scene".into(),
        ));
    }
    let mut results = Vec::new();
    let mut baselines = Vec::new();
    let mut hash: Option<String> = None;
    for &condition in conditions {
        let records = corrupt_scenes(scenes, condition, seed)?;
        let h = truth_hash(&records);
        match &hash {
            None => hash = Some(h),
            Some(first) if *first != h => {
                return Err(Error::InvalidConfig(format!(
                    "truth frames differ between conditions ({first} vs {h})"
                )))
            }
            Some(_) => {}
        }
        let n_frames = records.iter().map(|r| r.len().saturating_sub(1)).sum();
        for model in [kga, convgru] {
            results.push(ConditionResult {
                condition,
                model: model.arch(),
                bce: evaluate(model, &records)?,
                n_frames,
            });
        }
        baselines.push((condition, naive_baselines(&records)?));
    }
    Ok(ConditionTable {
        results,
        baselines,
        truth_hash: hash.unwrap_or_default(),
        untrained: [kga, convgru]
            .into_iter()
            .filter(|m| looks_untrained(m))
            .map(Model::arch)
            .collect(),
        seed,
    })
}

pub fn naive_baselines(dataset: &[SequenceRecord]) -> Result<NaiveBaselines> {
    let copy_last = evaluate_with(dataset, |record| {
        Ok(record
            .measurements()
            .map(|m| {
                m.to_f64()
                    .into_iter()
                    .map(|v| v.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON))
                    .collect()
            })
            .collect())
    })?;
    let always_free = evaluate_with(dataset, |record| {
        let cells = record.height() * record.width();
        Ok(vec![vec![BCE_EPSILON; cells]; record.len()])
    })?;
    Ok(NaiveBaselines {
        copy_last,
        always_free,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HostInfo {
    pub cpu_model: String,
    /// Hardware threads visible to the process.
    pub threads: usize,
    pub os: String,
    pub arch: String,
}

impl HostInfo {
    pub fn detect() -> Self {
        let cpu_model = std::fs::read_to_string("/proc/cpuinfo")
            .ok()
            .and_then(|info| {
                info.lines()
                    .find(|l| l.starts_with("model name"))
                    .and_then(|l| l.split_once(':'))
                    .map(|(_, v)| v.trim().to_string())
            })
            .unwrap_or_else(|| "unknown".into());
        Self {
            cpu_model,
            threads: std::thread::available_parallelism().map_or(1, usize::from),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BenchOptions {
    pub warmup: usize,
    pub frames: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            warmup: 100,
            frames: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchResult {
    pub model: Architecture,
    pub height: usize,
    pub width: usize,
    pub median_ms: f64,
    pub p95_ms: f64,
    pub frames: usize,
    pub param_count: usize,
    pub timer_resolution: Duration,
    pub host: HostInfo,
    pub warnings: Vec<String>,
}

impl BenchResult {
    pub const CSV_HEADER: &'static str = "model,height,width,param_count,frames,median_ms,p95_ms";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.4},{:.4}",
            self.model,
            self.height,
            self.width,
            self.param_count,
            self.frames,
            self.median_ms,
            self.p95_ms
        )
    }
}

/// Smallest non-zero step observed on the monotonic clock.
pub fn timer_resolution() -> Duration {
    let mut best = Duration::MAX;
    for _ in 0..200 {
        let start = Instant::now();
        let mut now = Instant::now();
        while now == start {
            now = Instant::now();
        }
        best = best.min(now - start);
    }
    best
}

/// Times single-frame [`step`] calls on the calling thread, cycling through
/// `inputs` (or an empty frame when none are given).
pub fn bench_latency(
    model: &Model,
    height: usize,
    width: usize,
    inputs: &[GridFrame],
    options: BenchOptions,
) -> Result<BenchResult> {
    if options.frames == 0 {
        return Err(Error::InvalidConfig(
            "benchmark needs at least one timed frame".into(),
        ));
    }
    if let Some(bad) = inputs.iter().find(|f| f.extent() != (height, width)) {
        return Err(Error::ShapeMismatch {
            op: "bench_latency",
            expected: vec![height, width],
            got: vec![bad.height(), bad.width()],
        });
    }
    let empty = [GridFrame::empty(height, width)];
    let inputs = if inputs.is_empty() {
        &empty[..]
    } else {
        inputs
    };
    let mut state = initial_state(height, width);
    let mut samples = Vec::with_capacity(options.frames);
    for n in 0..options.warmup + options.frames {
        let frame = &inputs[n % inputs.len()];
        let started = Instant::now();
        let (_, next) = step(frame, &state, model)?;
        let elapsed = started.elapsed();
        state = next;
        if n >= options.warmup {
            samples.push(elapsed.as_secs_f64() * 1e3);
        }
    }
    samples.sort_by(f64::total_cmp);
    let resolution = timer_resolution();
    let mut warnings = Vec::new();
    if resolution > Duration::from_micros(10) {
        warnings.push(format!(
            "timer resolution {resolution:?} is coarser than 10us"
        ));
    }
    Ok(BenchResult {
        model: model.arch(),
        height,
        width,
        median_ms: percentile(&samples, 0.5),
        p95_ms: percentile(&samples, 0.95),
        frames: samples.len(),
        param_count: model.count_params(),
        timer_resolution: resolution,
        host: HostInfo::detect(),
        warnings,
    })
}

/// Nearest-rank percentile of sorted samples.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Text summary of benchmark results with host metadata.
pub fn bench_report(results: &[BenchResult]) -> String {
    let mut out = String::new();
    if let Some(first) = results.first() {
        let h = &first.host;
        let _ = writeln!(
            out,
            "host: {} ({} threads, {}/{})",
            h.cpu_model, h.threads, h.os, h.arch
        );
        let _ = writeln!(out, "timer resolution: {:?}", first.timer_resolution);
    }
    for r in results {
        let _ = writeln!(
            out,
            "{:<8} {}x{}  params {:>6}  median {:.3} ms  p95 {:.3} ms  ({} frames, single thread)",
            r.model.name(),
            r.height,
            r.width,
            r.param_count,
            r.median_ms,
            r.p95_ms,
            r.frames
        );
        for w in &r.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
    }
    let find = |a| results.iter().find(|r| r.model == a);
    if let (Some(k), Some(c)) = (find(Architecture::Kga), find(Architecture::ConvGru)) {
        let _ = writeln!(
            out,
            "ConvGRU/KGA median ratio: {:.2}",
            c.median_ms / k.median_ms
        );
    }
    let _ = writeln!(
        out,
        "published reference: KGA 3906 params, about 5 ms/frame; ConvGRU 30626 params, about 18 ms/frame"
    );
    out
}

/// Frame pairs whose measurement equals the truth.
pub fn truth_pairs(truths: &[GridFrame]) -> Vec<FramePair> {
    truths
        .iter()
        .map(|t| FramePair {
            measurement: t.clone(),
            truth: t.clone(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boids::WorldConfig;
    use crate::dataset::synthesize_scenes;
    use crate::grid::Object;

    fn scenes(n: usize, frames: usize) -> Vec<Scene> {
        let world = WorldConfig {
            width: 20,
            height: 20,
            n_agents: 4,
            seed: 3,
            ..WorldConfig::default()
        };
        synthesize_scenes(&world, &NoiseConfig::default(), n, frames).unwrap()
    }

    #[test]
    fn condition_noise_rates() {
        assert_eq!(
            (
                Condition::MissOnly.noise(0).miss_rate,
                Condition::MissOnly.noise(0).shift_rate
            ),
            (0.8, 0.0)
        );
        assert_eq!(
            (
                Condition::ShiftOnly.noise(0).miss_rate,
                Condition::ShiftOnly.noise(0).shift_rate
            ),
            (0.0, 0.1)
        );
        assert_eq!(
            (
                Condition::Both.noise(0).miss_rate,
                Condition::Both.noise(0).shift_rate
            ),
            (0.8, 0.1)
        );
        for c in Condition::TABLE {
            assert_eq!(c.name().parse::<Condition>().unwrap(), c);
        }
        assert!("none".parse::<Condition>().is_err());
    }

    #[test]
    fn conditions_share_truth() {
        let scenes = scenes(2, 12);
        let hashes: Vec<String> = [
            Condition::ZeroNoise,
            Condition::MissOnly,
            Condition::ShiftOnly,
            Condition::Both,
        ]
        .into_iter()
        .map(|c| truth_hash(&corrupt_scenes(&scenes, c, 9).unwrap()))
        .collect();
        assert!(hashes.windows(2).all(|w| w[0] == w[1]));
        let zero = corrupt_scenes(&scenes, Condition::ZeroNoise, 9).unwrap();
        assert!(zero
            .iter()
            .all(|r| r.frames().iter().all(|f| f.measurement == f.truth)));
    }

    #[test]
    fn table_is_order_independent_and_flags_fresh_models() {
        let scenes = scenes(2, 10);
        let kga = Model::init(Architecture::Kga, 1);
        let convgru = Model::init(Architecture::ConvGru, 2);
        let forward = run_condition_table(&kga, &convgru, &scenes, &Condition::TABLE, 4).unwrap();
        let mut reversed_conditions = Condition::TABLE;
        reversed_conditions.reverse();
        let reversed =
            run_condition_table(&kga, &convgru, &scenes, &reversed_conditions, 4).unwrap();
        for r in &forward.results {
            assert_eq!(Some(r.bce), reversed.bce(r.condition, r.model));
            assert_eq!(r.n_frames, 18);
        }
        assert_eq!(
            forward.untrained,
            vec![Architecture::Kga, Architecture::ConvGru]
        );
        assert!(forward.to_text().contains("untrained"));
        assert_eq!(forward.to_csv().lines().count(), 1 + 6);
        assert!(forward.to_csv().contains("both,KGA,"));
    }

    #[test]
    fn noise_raises_copy_last_loss_and_biases_mark_training() {
        let scenes = scenes(2, 30);
        let mut kga = Model::init(Architecture::Kga, 5);
        let mut convgru = Model::init(Architecture::ConvGru, 6);
        for model in [&mut kga, &mut convgru] {
            model
                .params_mut()
                .get_mut("decoder.bias")
                .unwrap()
                .data_mut()
                .copy_from_slice(&[-3.0, 0.0]);
        }
        let table = run_condition_table(
            &kga,
            &convgru,
            &scenes,
            &[Condition::ZeroNoise, Condition::Both],
            8,
        )
        .unwrap();
        let base_zero = table.baseline(Condition::ZeroNoise).unwrap();
        let base_both = table.baseline(Condition::Both).unwrap();
        assert!(base_zero.copy_last < base_both.copy_last);
        assert!(table.untrained.is_empty());
    }

    #[test]
    fn naive_baseline_fixtures() {
        let empty =
            SequenceRecord::new(6, 6, 30, truth_pairs(&vec![GridFrame::empty(6, 6); 5])).unwrap();
        let b = naive_baselines(&[empty]).unwrap();
        assert!((b.always_free - -(1.0 - BCE_EPSILON).ln()).abs() < 1e-15);
        assert!(b.always_free < 1.1e-7);

        let objects = vec![
            vec![Object {
                x: 3.0,
                y: 3.0,
                radius: 1.5
            }];
            5
        ];
        let still =
            SequenceRecord::from_objects(&objects, 6, 6, 30, &NoiseConfig::noiseless(0)).unwrap();
        assert!(naive_baselines(&[still]).unwrap().copy_last <= 1e-6);
    }

    #[test]
    fn percentile_is_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 0.5), 50.0);
        assert_eq!(percentile(&v, 0.95), 95.0);
        assert_eq!(percentile(&[7.0], 0.95), 7.0);
    }

    #[test]
    fn bench_reports_counts_and_host() {
        let model = Model::init(Architecture::Kga, 0);
        let result = bench_latency(
            &model,
            12,
            12,
            &[],
            BenchOptions {
                warmup: 3,
                frames: 20,
            },
        )
        .unwrap();
        assert_eq!(result.param_count, 3906);
        assert_eq!(result.frames, 20);
        assert!(result.median_ms > 0.0 && result.median_ms <= result.p95_ms);
        assert!(bench_report(std::slice::from_ref(&result)).contains("3906"));
        assert!(result.csv_row().starts_with("KGA,12,12,3906,20,"));
        assert!(bench_latency(
            &model,
            12,
            12,
            &[GridFrame::empty(3, 3)],
            BenchOptions::default()
        )
        .is_err());
    }
}
