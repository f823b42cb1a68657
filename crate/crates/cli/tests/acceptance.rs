//! End-to-end acceptance checks. Each test prints one `ACCEPTANCE` line with
//! its measured values before asserting.

#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Mutex, OnceLock};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kga::boids::WorldConfig;
use kga::dataset::{
    export_frames, read_ogsq, read_pgm, synthesize_scenes, write_ogsq, FramePair, Scene,
    SequenceRecord,
};
use kga::evaluation::{
    bench_latency, naive_baselines, run_condition_table, BenchOptions, Condition,
};
use kga::gradcheck;
use kga::grid::{GridFrame, Object};
use kga::model::{
    convgru, kga as kga_model, read_checkpoint, rollout, write_checkpoint, Architecture, Model,
    HIDDEN,
};
use kga::noise::{apply_miss, NoiseConfig};
use kga::numerics::{Graph, Tensor};
use kga::training::{evaluate, sequence_loss, train_with_progress, TrainConfig, TrainReport};

/// Training and timing share the single measured core; never overlap them.
static HEAVY: Mutex<()> = Mutex::new(());

fn report(criterion: u32, title: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "ACCEPTANCE {criterion} {verdict} {title}: {detail}");
}

fn random_frame(rng: &mut ChaCha8Rng, h: usize, w: usize, density: f64) -> GridFrame {
    GridFrame::from_cells(
        h,
        w,
        (0..h * w)
            .map(|_| u8::from(rng.gen_bool(density)))
            .collect(),
    )
    .unwrap()
}

fn random_record(rng: &mut ChaCha8Rng, h: usize, w: usize, frames: usize) -> SequenceRecord {
    let pairs = (0..frames)
        .map(|_| FramePair {
            measurement: random_frame(rng, h, w, 0.1),
            truth: random_frame(rng, h, w, 0.15),
        })
        .collect();
    SequenceRecord::new(h, w, 30, pairs).unwrap()
}

/// Fresh init with non-zero biases so that every parameter path is exercised.
fn perturbed_model(arch: Architecture, seed: u64) -> Model {
    let mut model = Model::init(arch, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for name in [
        "encoder.bias",
        "gru.b_z",
        "gru.b_r",
        "gru.b_h",
        "decoder.bias",
    ] {
        for v in model.params_mut().get_mut(name).unwrap().data_mut() {
            *v = rng.gen_range(-0.5..0.5);
        }
    }
    model
}

#[test]
fn criterion_1_parameter_count() {
    let count = Model::init(Architecture::Kga, 0).count_params();
    let pass = count == 3906;
    report(
        1,
        "KGA parameter count",
        pass,
        &format!("{count} trainable parameters (expected 3906)"),
    );
    assert!(pass);
}

#[test]
fn criterion_2_gradient_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let record = random_record(&mut rng, 10, 10, 3);
    let mut details = Vec::new();
    let mut pass = true;
    for arch in [Architecture::Kga, Architecture::ConvGru] {
        let model = perturbed_model(arch, 20);
        let result = gradcheck::check(
            model.params(),
            |g, p| sequence_loss(g, p, record.frames()),
            1e-5,
        )
        .unwrap();
        let ok = result.checked == model.count_params() && result.max_relative_error < 1e-4;
        pass &= ok;
        details.push(format!(
            "{arch}: {} parameters, max relative error {:.2e} at {:?}",
            result.checked, result.max_relative_error, result.worst
        ));
    }
    report(
        2,
        "finite-difference gradients (10x10, T=3)",
        pass,
        &details.join("; "),
    );
    assert!(pass);
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn criterion_3_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut conv, mut gru, mut soft, mut bce) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..40 {
        let (c_in, c_out) = (rng.gen_range(1..4), rng.gen_range(1..4));
        let (h, w, k) = (
            rng.gen_range(1..8),
            rng.gen_range(1..8),
            rng.gen_range(1..7),
        );
        let input: Vec<f64> = (0..c_in * h * w)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let kernel: Vec<f64> = (0..c_out * c_in * k * k)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let bias: Vec<f64> = (0..c_out).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut g = Graph::new();
        let x = g.constant(Tensor::new(vec![c_in, h, w], input.clone()).unwrap());
        let kv = g.constant(Tensor::new(vec![c_out, c_in, k, k], kernel.clone()).unwrap());
        let bv = g.constant(Tensor::new(vec![c_out], bias.clone()).unwrap());
        let y = g.conv2d(x, kv, Some(bv)).unwrap();
        let expected = oracle::conv_same(&input, c_in, h, w, &kernel, c_out, k, Some(&bias));
        conv = conv.max(max_abs_diff(g.value(y).data(), &expected));

        let logits: Vec<f64> = (0..2 * h * w).map(|_| rng.gen_range(-30.0..30.0)).collect();
        let lv = g.constant(Tensor::new(vec![2, h, w], logits.clone()).unwrap());
        let s = g.softmax_channels(lv).unwrap();
        let expected: Vec<f64> = (0..h * w)
            .map(|n| oracle::softmax2(logits[n], logits[h * w + n]).0)
            .collect();
        let got: Vec<f64> = g.value(s).data()[..h * w].to_vec();
        soft = soft.max(max_abs_diff(&got, &expected));

        let probs: Vec<f64> = (0..h * w).map(|_| rng.gen_range(0.0..1.0)).collect();
        let target: Vec<f64> = (0..h * w)
            .map(|_| f64::from(u8::from(rng.gen_bool(0.3))))
            .collect();
        let pv = g.constant(Tensor::new(vec![h, w], probs.clone()).unwrap());
        let loss = g
            .bce_loss(pv, &Tensor::new(vec![h, w], target.clone()).unwrap())
            .unwrap();
        bce = bce.max((g.value(loss).item() - oracle::bce(&probs, &target)).abs());
    }
    for seed in 0..10 {
        let (h, w) = (rng.gen_range(1..7), rng.gen_range(1..7));
        let model = perturbed_model(Architecture::Kga, seed);
        let features: Vec<f64> = (0..HIDDEN * h * w)
            .map(|_| rng.gen_range(0.0..1.0))
            .collect();
        let hidden: Vec<f64> = (0..HIDDEN * h * w)
            .map(|_| rng.gen_range(0.0..1.0))
            .collect();
        let next = kga_model::gru_array_step(
            &Tensor::new(vec![HIDDEN, h, w], features.clone()).unwrap(),
            &Tensor::new(vec![HIDDEN, h, w], hidden.clone()).unwrap(),
            &model,
        )
        .unwrap();
        gru = gru.max(max_abs_diff(
            next.data(),
            &oracle::kga_recurrent(&model, &features, &hidden, h, w),
        ));
    }

    let kga = perturbed_model(Architecture::Kga, 33);
    let centre = convgru::from_kga_center_tap(&kga).unwrap();
    let frames: Vec<GridFrame> = (0..6).map(|_| random_frame(&mut rng, 9, 11, 0.2)).collect();
    let (a, b) = (
        rollout(&frames, &kga, true).unwrap(),
        rollout(&frames, &centre, true).unwrap(),
    );
    let bitwise = a.probs.iter().zip(&b.probs).all(|(p, q)| {
        p.values()
            .iter()
            .zip(q.values())
            .all(|(x, y)| x.to_bits() == y.to_bits())
    }) && a
        .hidden
        .unwrap()
        .iter()
        .zip(b.hidden.unwrap().iter())
        .all(|(x, y)| {
            x.data()
                .iter()
                .zip(y.data())
                .all(|(u, v)| u.to_bits() == v.to_bits())
        });

    let tol = 1e-10;
    let pass = conv <= tol && gru <= tol && soft <= tol && bce <= tol && bitwise;
    report(
        3,
        "oracle equivalence",
        pass,
        &format!(
            "max |diff| conv2d {conv:.1e}, GRU cell {gru:.1e}, softmax {soft:.1e}, BCE {bce:.1e}; centre-tap ConvGRU bit-identical to KGA: {bitwise}"
        ),
    );
    assert!(pass);
}

/// `|observed - expected| <= 3 * sqrt(p (1 - p) / n)`.
fn within_three_se(successes: usize, n: usize, p: f64) -> (bool, f64, f64) {
    let observed = successes as f64 / n as f64;
    let se = (p * (1.0 - p) / n as f64).sqrt();
    ((observed - p).abs() <= 3.0 * se, observed, se)
}

#[test]
fn criterion_4_noise_statistics() {
    let both = NoiseConfig {
        seed: 4,
        ..NoiseConfig::default()
    };
    let frames = 5_000u64;
    let objects: Vec<Object> = (0..10)
        .map(|k| Object {
            x: 2.5 + 4.0 * f64::from(k),
            y: 25.0,
            radius: 2.0,
        })
        .collect();

    let mut total = 0;
    let mut survivors = 0;
    let mut shifted = 0;
    for t in 0..frames {
        let kept = apply_miss(&objects, &both, t);
        total += objects.len();
        survivors += kept.len();
        for (k, o) in objects.iter().enumerate() {
            if kept.iter().any(|s| s.x == o.x) && both.shift_offset(t, k).is_some() {
                shifted += 1;
            }
        }
    }
    let (miss_ok, miss, miss_se) = within_three_se(total - survivors, total, both.miss_rate);
    let (shift_ok, shift, shift_se) = within_three_se(shifted, survivors, both.shift_rate);

    let shift_only = NoiseConfig {
        miss_rate: 0.0,
        seed: 5,
        ..NoiseConfig::default()
    };
    let mut counts = [[0usize; 5]; 5];
    let mut draws = 0;
    let mut in_support = true;
    for t in 0..20_000u64 {
        for k in 0..10 {
            if let Some((dx, dy)) = shift_only.shift_offset(t, k) {
                draws += 1;
                if dx.abs() > 2 || dy.abs() > 2 || (dx, dy) == (0, 0) {
                    in_support = false;
                    continue;
                }
                counts[(dy + 2) as usize][(dx + 2) as usize] += 1;
            }
        }
    }
    let mut uniform_ok = true;
    let mut worst = 0.0f64;
    for (r, row) in counts.iter().enumerate() {
        for (c, &n) in row.iter().enumerate() {
            if (r, c) == (2, 2) {
                continue;
            }
            let (ok, observed, se) = within_three_se(n, draws, 1.0 / 24.0);
            uniform_ok &= ok;
            worst = worst.max((observed - 1.0 / 24.0).abs() / se);
        }
    }
    let pass =
        miss_ok && shift_ok && in_support && uniform_ok && total >= 10_000 && draws >= 10_000;
    report(
        4,
        "noise statistics",
        pass,
        &format!(
            "miss {miss:.4} over {total} object-frames (nominal 0.8, {:.2} SE); shift {shift:.4} over {survivors} survivors (nominal 0.1, {:.2} SE); {draws} offsets all in support: {in_support}; worst offset frequency {worst:.2} SE from 1/24",
            (miss - 0.8).abs() / miss_se,
            (shift - 0.1).abs() / shift_se,
        ),
    );
    assert!(pass);
}

/// Scenes, trained models and their reports shared by the capability checks.
struct Trained {
    kga: Model,
    convgru: Model,
    untrained_kga: Model,
    kga_report: TrainReport,
    convgru_report: TrainReport,
    test_scenes: Vec<Scene>,
}

const TRAIN_SEQUENCES: usize = 40;
const TEST_SEQUENCES: usize = 8;
const FRAMES: usize = 200;

fn training_config() -> TrainConfig {
    TrainConfig {
        max_epochs: 60,
        steps_per_epoch: 10,
        patience: 10,
        seed: 7,
        ..TrainConfig::default()
    }
}

fn trained() -> &'static Trained {
    static CELL: OnceLock<Trained> = OnceLock::new();
    CELL.get_or_init(|| {
        let _guard = HEAVY.lock().unwrap_or_else(|e| e.into_inner());
        let world = WorldConfig {
            seed: 100,
            ..WorldConfig::default()
        };
        let noise = NoiseConfig {
            seed: 101,
            ..NoiseConfig::default()
        };
        let train_scenes = synthesize_scenes(&world, &noise, TRAIN_SEQUENCES, FRAMES).unwrap();
        let data: Vec<SequenceRecord> = train_scenes.into_iter().map(|s| s.record).collect();
        let test_scenes = synthesize_scenes(
            &WorldConfig { seed: 200, ..world },
            &NoiseConfig { seed: 201, ..noise },
            TEST_SEQUENCES,
            FRAMES,
        )
        .unwrap();
        let config = training_config();
        let fit = |arch: Architecture| {
            let start = Model::init(arch, 8);
            train_with_progress(&start, &data, &config, |e| {
                let mut err = std::io::stderr().lock();
                let _ = writeln!(
                    err,
                    "  [{arch} epoch {:>3}] train {:.5} val {:.5} ({:.0} ms)",
                    e.epoch, e.train_bce, e.val_bce, e.ms
                );
            })
            .unwrap()
        };
        let (kga, kga_report) = fit(Architecture::Kga);
        let (convgru, convgru_report) = fit(Architecture::ConvGru);
        Trained {
            kga,
            convgru,
            untrained_kga: Model::init(Architecture::Kga, 8),
            kga_report,
            convgru_report,
            test_scenes,
        }
    })
}

#[test]
fn criterion_5_anticipation_capability() {
    let t = trained();
    let records: Vec<SequenceRecord> = t.test_scenes.iter().map(|s| s.record.clone()).collect();
    let trained_bce = evaluate(&t.kga, &records).unwrap();
    let untrained_bce = evaluate(&t.untrained_kga, &records).unwrap();
    let baselines = naive_baselines(&records).unwrap();
    let vs_copy = 1.0 - trained_bce / baselines.copy_last;
    let vs_untrained = 1.0 - trained_bce / untrained_bce;
    let epochs = t.kga_report.stopped_epoch;
    let pass = epochs <= 200 && vs_copy >= 0.20 && vs_untrained >= 0.30;
    report(
        5,
        "anticipation capability",
        pass,
        &format!(
            "trained KGA {trained_bce:.4} after {epochs} epochs (best {}); copy-last {:.4} ({:.1}% better); untrained {untrained_bce:.4} ({:.1}% better); always-free {:.4}",
            t.kga_report.best_epoch,
            baselines.copy_last,
            100.0 * vs_copy,
            100.0 * vs_untrained,
            baselines.always_free,
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_6_comparability() {
    let t = trained();
    let mut conditions = vec![Condition::ZeroNoise];
    conditions.extend(Condition::TABLE);
    let table = run_condition_table(&t.kga, &t.convgru, &t.test_scenes, &conditions, 6).unwrap();
    let mut pass = table.untrained.is_empty();
    let mut details = Vec::new();
    for condition in Condition::TABLE {
        let k = table.bce(condition, Architecture::Kga).unwrap();
        let c = table.bce(condition, Architecture::ConvGru).unwrap();
        let gap = (k - c).abs() / c;
        pass &= gap <= 0.15;
        details.push(format!(
            "{condition}: KGA {k:.4} ConvGRU {c:.4} gap {:.1}%",
            100.0 * gap
        ));
    }
    details.push(format!(
        "ConvGRU trained {} epochs (best {})",
        t.convgru_report.stopped_epoch, t.convgru_report.best_epoch
    ));
    report(
        6,
        "KGA vs ConvGRU comparability (<= 15%)",
        pass,
        &details.join("; "),
    );
    let mut err = std::io::stderr().lock();
    let _ = write!(err, "{}", table.to_text());
    drop(err);
    assert!(pass);
}

#[test]
fn criterion_7_efficiency_ordering() {
    let _guard = HEAVY.lock().unwrap_or_else(|e| e.into_inner());
    let world = WorldConfig {
        seed: 70,
        ..WorldConfig::default()
    };
    let scene = synthesize_scenes(&world, &NoiseConfig::default(), 1, 200)
        .unwrap()
        .remove(0);
    let inputs: Vec<GridFrame> = scene.record.measurements().cloned().collect();
    let options = BenchOptions {
        warmup: 100,
        frames: 1000,
    };
    let kga = bench_latency(&Model::init(Architecture::Kga, 1), 50, 50, &inputs, options).unwrap();
    let conv = bench_latency(
        &Model::init(Architecture::ConvGru, 1),
        50,
        50,
        &inputs,
        options,
    )
    .unwrap();
    let pass = kga.median_ms < conv.median_ms;
    report(
        7,
        "inference latency ordering at 50x50",
        pass,
        &format!(
            "KGA median {:.3} ms (p95 {:.3}); ConvGRU median {:.3} ms (p95 {:.3}); ratio {:.2}; {} params vs {}; host {} ({} threads)",
            kga.median_ms,
            kga.p95_ms,
            conv.median_ms,
            conv.p95_ms,
            conv.median_ms / kga.median_ms,
            kga.param_count,
            conv.param_count,
            kga.host.cpu_model,
            kga.host.threads
        ),
    );
    assert!(pass);
}

fn arb_record() -> impl Strategy<Value = SequenceRecord> {
    (
        1usize..12,
        1usize..12,
        0usize..6,
        any::<u16>(),
        any::<u64>(),
    )
        .prop_map(|(h, w, frames, fps, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let density = rng.gen_range(0.0..1.0);
            let pairs = (0..frames)
                .map(|_| FramePair {
                    measurement: random_frame(&mut rng, h, w, density),
                    truth: random_frame(&mut rng, h, w, density),
                })
                .collect();
            SequenceRecord::new(h, w, fps, pairs).unwrap()
        })
}

#[test]
fn criterion_8_format_round_trips() {
    let cases = 128;
    let mut runner = TestRunner::new(Config {
        cases,
        ..Config::default()
    });
    let ogsq = runner.run(&arb_record(), |record| {
        let mut bytes = Vec::new();
        write_ogsq(&record, &mut bytes).unwrap();
        let back = read_ogsq(&bytes[..]).unwrap();
        prop_assert_eq!(&back, &record);
        let mut again = Vec::new();
        write_ogsq(&back, &mut again).unwrap();
        prop_assert_eq!(again, bytes);
        Ok(())
    });

    let mut runner = TestRunner::new(Config {
        cases,
        ..Config::default()
    });
    let checkpoint = runner.run(
        &(any::<u64>(), any::<bool>(), -1e3f64..1e3),
        |(seed, is_conv, scale)| {
            let arch = if is_conv {
                Architecture::ConvGru
            } else {
                Architecture::Kga
            };
            let mut model = Model::init(arch, seed);
            for t in model.params_mut().tensors_mut() {
                for v in t.data_mut() {
                    *v *= scale;
                }
            }
            let mut bytes = Vec::new();
            write_checkpoint(&model, &mut bytes).unwrap();
            let back = read_checkpoint(&bytes[..]).unwrap();
            prop_assert_eq!(back.arch(), arch);
            let (a, b) = (model.params().flatten(), back.params().flatten());
            prop_assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
            Ok(())
        },
    );

    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let record = random_record(&mut rng, 13, 17, 4);
    export_frames(&record, dir.path()).unwrap();
    let pgm = record.frames().iter().enumerate().all(|(t, pair)| {
        [("measurement", &pair.measurement), ("truth", &pair.truth)]
            .iter()
            .all(|(channel, frame)| {
                let image =
                    read_pgm(&dir.path().join(format!("frame_{t:05}_{channel}.pgm"))).unwrap();
                let cells: Vec<u8> = image.pixels.iter().map(|&p| u8::from(p >= 128)).collect();
                (image.height, image.width) == (13, 17) && cells == frame.cells()
            })
    });

    let pass = ogsq.is_ok() && checkpoint.is_ok() && pgm;
    report(
        8,
        "format round-trips",
        pass,
        &format!(
            "OGSQ1 {cases} cases: {}; checkpoint {cases} cases: {}; PGM re-parse: {}",
            if ogsq.is_ok() { "bit-exact" } else { "FAILED" },
            if checkpoint.is_ok() {
                "bit-exact"
            } else {
                "FAILED"
            },
            if pgm { "matches" } else { "differs" },
        ),
    );
    assert!(pass, "{ogsq:?} {checkpoint:?}");
}

fn kga_cli(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_kga"))
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn run_pipeline(root: &Path) {
    let p = |d: &str| root.join(d).to_str().unwrap().to_string();
    let small = [
        "--set",
        "generate.n_sequences=4",
        "--set",
        "generate.frames=30",
        "--set",
        "world.width=20",
        "--set",
        "world.height=20",
        "--set",
        "world.n_agents=3",
        "--set",
        "seed=9",
    ];
    let mut args = vec!["generate".to_string(), "--out".into(), p("gen")];
    args.extend(small.iter().map(|s| s.to_string()));
    kga_cli(&args.iter().map(String::as_str).collect::<Vec<_>>());
    for arch in ["kga", "convgru"] {
        kga_cli(&[
            "train",
            "--data",
            &p("gen"),
            "--out",
            &p(arch),
            "--set",
            &format!("model.arch={arch}"),
            "--set",
            "train.max_epochs=3",
            "--set",
            "train.unroll_length=8",
            "--set",
            "train.batch=2",
            "--set",
            "train.steps_per_epoch=2",
            "--set",
            "seed=9",
        ]);
    }
    kga_cli(&[
        "eval",
        "--data",
        &p("gen"),
        "--kga",
        &p("kga/model.ckpt"),
        "--convgru",
        &p("convgru/model.ckpt"),
        "--out",
        &p("eval"),
        "--set",
        "seed=9",
    ]);
}

fn listing(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    v.sort();
    v
}

/// Artifact bytes; the wall-clock column of training reports is dropped.
fn artifact_bytes(p: &Path) -> Vec<u8> {
    let bytes = fs::read(p).unwrap();
    if p.file_name().unwrap() != "train_report.csv" {
        return bytes;
    }
    String::from_utf8(bytes)
        .unwrap()
        .lines()
        .map(|l| format!("{}\n", l.rsplit_once(',').unwrap().0))
        .collect::<String>()
        .into_bytes()
}

#[test]
fn criterion_9_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_pipeline(&a);
    run_pipeline(&b);
    let mut compared = 0;
    let mut differing = Vec::new();
    for stage in ["gen", "kga", "convgru", "eval"] {
        let (la, lb) = (listing(&a.join(stage)), listing(&b.join(stage)));
        if la.len() != lb.len() {
            differing.push(format!("{stage}: file count {} vs {}", la.len(), lb.len()));
        }
        for (x, y) in la.iter().zip(&lb) {
            compared += 1;
            if artifact_bytes(x) != artifact_bytes(y) {
                differing.push(format!(
                    "{stage}/{}",
                    x.file_name().unwrap().to_string_lossy()
                ));
            }
        }
    }
    let pass = differing.is_empty() && compared > 0;
    report(
        9,
        "generate/train/eval determinism",
        pass,
        &format!(
            "{compared} artifacts compared across two runs (training reports without the wall-clock column); differing: {}",
            if differing.is_empty() { "none".to_string() } else { differing.join(", ") }
        ),
    );
    assert!(pass);
}
