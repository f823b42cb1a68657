use std::fs;
use std::path::{Path, PathBuf};

use kga::config::RunConfig;
use kga::dataset::{
    export_frames, export_planes, objects_to_tracks, read_ogsq, read_tracks, synthesize_scenes,
    tracks_to_objects, write_ogsq, write_tracks, Scene, SequenceRecord,
};
use kga::evaluation::{
    bench_latency, bench_report, run_condition_table, truth_hash, BenchResult, Condition,
};
use kga::grid::GridFrame;
use kga::model::{read_checkpoint, rollout, write_checkpoint, Architecture, Model};
use kga::training::train_with_progress;
use kga::{Error, Result};

use crate::meta::{file_name, RunMeta};
use crate::Common;

const META: &str = "run.meta";

fn prepare_out(dir: &Path, force: bool) -> Result<()> {
    if let Ok(mut entries) = fs::read_dir(dir) {
        if entries.next().is_some() && !force {
            return Err(Error::InvalidConfig(format!(
                "output directory {} is not empty; pass --force to write into it",
                dir.display()
            )));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Error::Io { path, source: e })
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn finish(dir: &Path, config: &RunConfig, meta: &RunMeta) -> Result<()> {
    write_file(dir, META, meta.render(config).as_bytes())
}

/// `*.ogsq` files of a directory in name order.
fn sequence_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ogsq"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no .ogsq files in {}",
            dir.display()
        )));
    }
    Ok(files)
}

fn load_sequences(dir: &Path, meta: &mut RunMeta) -> Result<Vec<(PathBuf, SequenceRecord)>> {
    sequence_files(dir)?
        .into_iter()
        .map(|path| {
            let bytes = read_file(&path)?;
            meta.input(&path, &bytes);
            let record = read_ogsq(&bytes[..]).map_err(|e| in_file(&path, e))?;
            Ok((path, record))
        })
        .collect()
}

/// Prefixes format errors with the offending file.
fn in_file(path: &Path, err: Error) -> Error {
    match err {
        Error::Format {
            format,
            offset,
            reason,
        } => Error::Format {
            format,
            offset,
            reason: format!("{}: {reason}", path.display()),
        },
        Error::TrackRow { row, reason } => Error::TrackRow {
            row,
            reason: format!("{}: {reason}", path.display()),
        },
        other => other,
    }
}

fn tracks_path(sequence: &Path) -> PathBuf {
    sequence.with_extension("tracks.csv")
}

fn load_model(path: &Path, expected: Architecture, meta: &mut RunMeta) -> Result<Model> {
    let bytes = read_file(path)?;
    meta.input(path, &bytes);
    let model = read_checkpoint(&bytes[..]).map_err(|e| in_file(path, e))?;
    if model.arch() != expected {
        return Err(Error::InvalidConfig(format!(
            "{} holds a {} checkpoint, expected {expected}",
            path.display(),
            model.arch()
        )));
    }
    Ok(model)
}

fn model_or_fresh(
    path: Option<&Path>,
    arch: Architecture,
    config: &RunConfig,
    meta: &mut RunMeta,
) -> Result<Model> {
    match path {
        Some(p) => load_model(p, arch, meta),
        None => Ok(Model::init(arch, config.model.seed)),
    }
}

pub fn generate(common: &Common) -> Result<()> {
    let config = common.resolve()?;
    prepare_out(&common.out, common.force)?;
    let scenes = synthesize_scenes(
        &config.world,
        &config.noise,
        config.generate.n_sequences,
        config.generate.frames,
    )?;
    let mut meta = RunMeta::new("generate");
    for (i, scene) in scenes.iter().enumerate() {
        let mut ogsq = Vec::new();
        write_ogsq(&scene.record, &mut ogsq)?;
        let name = format!("seq_{i:04}.ogsq");
        write_file(&common.out, &name, &ogsq)?;
        meta.output(&name, &ogsq);

        let mut tracks = Vec::new();
        write_tracks(&objects_to_tracks(&scene.objects), &mut tracks)?;
        let name = format!("seq_{i:04}.tracks.csv");
        write_file(&common.out, &name, &tracks)?;
        meta.output(&name, &tracks);
    }
    finish(&common.out, &config, &meta)?;
    println!(
        "wrote {} sequences of {} frames ({}x{}) to {}",
        scenes.len(),
        config.generate.frames,
        config.world.height,
        config.world.width,
        common.out.display()
    );
    Ok(())
}

pub fn train(common: &Common, data: &Path, init: Option<&Path>) -> Result<()> {
    let config = common.resolve()?;
    let mut meta = RunMeta::new("train");
    let records: Vec<SequenceRecord> = load_sequences(data, &mut meta)?
        .into_iter()
        .map(|(_, r)| r)
        .collect();
    let start = model_or_fresh(init, config.model.arch, &config, &mut meta)?;
    prepare_out(&common.out, common.force)?;

    let (model, report) = train_with_progress(&start, &records, &config.train, |e| {
        eprintln!(
            "epoch {:>4}  train {:.6}  val {:.6}  {:.0} ms",
            e.epoch, e.train_bce, e.val_bce, e.ms
        );
    })?;

    let mut checkpoint = Vec::new();
    write_checkpoint(&model, &mut checkpoint)?;
    write_file(&common.out, "model.ckpt", &checkpoint)?;
    meta.output("model.ckpt", &checkpoint);
    let csv = report.to_csv();
    write_file(&common.out, "train_report.csv", csv.as_bytes())?;
    // Wall-clock timings vary between runs; the hash covers the rest.
    meta.output(
        "train_report.csv[epoch,train_bce,val_bce]",
        report.to_csv_untimed().as_bytes(),
    );
    finish(&common.out, &config, &meta)?;

    print!("{csv}");
    println!(
        "best epoch {} (val {:.6}), stopped after {} epochs; checkpoint {}",
        report.best_epoch,
        report.best_val_bce(),
        report.stopped_epoch,
        common.out.join("model.ckpt").display()
    );
    Ok(())
}

pub fn eval(
    common: &Common,
    data: &Path,
    kga_path: Option<&Path>,
    convgru_path: Option<&Path>,
) -> Result<()> {
    let config = common.resolve()?;
    let mut meta = RunMeta::new("eval");
    let sequences = load_sequences(data, &mut meta)?;
    let mut scenes = Vec::with_capacity(sequences.len());
    for (path, record) in sequences {
        let tracks = tracks_path(&path);
        let bytes = read_file(&tracks)?;
        meta.input(&tracks, &bytes);
        let rows = read_tracks(&bytes[..]).map_err(|e| in_file(&tracks, e))?;
        let scene = Scene {
            objects: tracks_to_objects(&rows, record.len()),
            record,
        };
        let rasterized = scene.recorrupt(&kga::noise::NoiseConfig::noiseless(0))?;
        if truth_hash(&[rasterized]) != truth_hash(std::slice::from_ref(&scene.record)) {
            return Err(Error::InvalidConfig(format!(
                "{} does not match the truth frames of {}",
                file_name(&tracks),
                file_name(&path)
            )));
        }
        scenes.push(scene);
    }
    let kga = model_or_fresh(kga_path, Architecture::Kga, &config, &mut meta)?;
    let convgru = model_or_fresh(convgru_path, Architecture::ConvGru, &config, &mut meta)?;
    prepare_out(&common.out, common.force)?;

    let mut conditions = Vec::new();
    if config.eval.control {
        conditions.push(Condition::ZeroNoise);
    }
    conditions.extend(Condition::TABLE);
    let table = run_condition_table(&kga, &convgru, &scenes, &conditions, config.eval.seed)?;
    let csv = table.to_csv();
    let text = table.to_text();
    write_file(&common.out, "eval_report.csv", csv.as_bytes())?;
    write_file(&common.out, "eval_report.txt", text.as_bytes())?;
    meta.output("eval_report.csv", csv.as_bytes());
    meta.output("eval_report.txt", text.as_bytes());
    finish(&common.out, &config, &meta)?;
    print!("{text}");
    Ok(())
}

pub fn bench(
    common: &Common,
    which: &str,
    kga_path: Option<&Path>,
    convgru_path: Option<&Path>,
) -> Result<()> {
    let config = common.resolve()?;
    let archs = match which {
        "both" => vec![Architecture::Kga, Architecture::ConvGru],
        other => vec![other.parse::<Architecture>()?],
    };
    let mut meta = RunMeta::new("bench");
    let mut models = Vec::new();
    for arch in archs {
        let path = match arch {
            Architecture::Kga => kga_path,
            Architecture::ConvGru => convgru_path,
        };
        models.push(model_or_fresh(path, arch, &config, &mut meta)?);
    }
    prepare_out(&common.out, common.force)?;

    let (h, w) = (config.world.height, config.world.width);
    let scene = synthesize_scenes(&config.world, &config.noise, 1, 200)?.remove(0);
    let inputs: Vec<GridFrame> = scene.record.measurements().cloned().collect();
    let results = models
        .iter()
        .map(|m| bench_latency(m, h, w, &inputs, config.bench))
        .collect::<Result<Vec<BenchResult>>>()?;

    let mut csv = format!("{}\n", BenchResult::CSV_HEADER);
    for r in &results {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    let text = bench_report(&results);
    for r in &results {
        for warning in &r.warnings {
            eprintln!("warning: {warning}");
        }
    }
    write_file(&common.out, "bench.csv", csv.as_bytes())?;
    write_file(&common.out, "bench.txt", text.as_bytes())?;
    meta.output("bench.csv", csv.as_bytes());
    meta.output("bench.txt", text.as_bytes());
    finish(&common.out, &config, &meta)?;
    print!("{csv}{text}");
    Ok(())
}

pub fn export_viz(common: &Common, data: &Path, checkpoint: Option<&Path>) -> Result<()> {
    let config = common.resolve()?;
    let mut meta = RunMeta::new("export-viz");
    let bytes = read_file(data)?;
    meta.input(data, &bytes);
    let record = read_ogsq(&bytes[..]).map_err(|e| in_file(data, e))?;
    let model = match checkpoint {
        Some(path) => {
            let bytes = read_file(path)?;
            meta.input(path, &bytes);
            Some(read_checkpoint(&bytes[..]).map_err(|e| in_file(path, e))?)
        }
        None => None,
    };
    prepare_out(&common.out, common.force)?;

    let mut written = export_frames(&record, &common.out)?;
    if let Some(model) = model {
        let measurements: Vec<GridFrame> = record.measurements().cloned().collect();
        let (h, w) = record.extent();
        for (t, prob) in rollout(&measurements, &model, false)?
            .probs
            .iter()
            .enumerate()
        {
            written.push(export_planes(
                &common.out,
                t,
                "prediction",
                h,
                w,
                prob.values(),
            )?);
        }
    }
    for path in &written {
        meta.output(&file_name(path), &read_file(path)?);
    }
    finish(&common.out, &config, &meta)?;
    println!("wrote {} images to {}", written.len(), common.out.display());
    Ok(())
}
