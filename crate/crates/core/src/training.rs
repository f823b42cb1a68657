//! Truncated-unroll training against clean next-frame truth.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::{FramePair, SequenceRecord};
use crate::error::{Error, Result};
use crate::grid::{GridFrame, ProbFrame};
use crate::model::{layers, rollout, threshold, Model, DEFAULT_THRESHOLD};
use crate::numerics::{bce_value, rmsprop_step, Graph, RmsPropState, Var};
use crate::rng::{stream, tag};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Frames per training window.
    pub unroll_length: usize,
    /// Windows per optimizer step.
    pub batch: usize,
    pub max_epochs: usize,
    /// Optimizer steps per epoch; 0 sizes the epoch so that it covers the
    /// training frames once in expectation.
    pub steps_per_epoch: usize,
    pub patience: usize,
    pub min_delta: f64,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.003,
            unroll_length: 20,
            batch: 4,
            max_epochs: 200,
            steps_per_epoch: 0,
            patience: 10,
            min_delta: 1e-4,
            validation_fraction: 0.2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if !(self.learning_rate > 0.0) {
            return fail(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if self.unroll_length < 2 {
            return fail(format!(
                "unroll_length must be at least 2, got {}",
                self.unroll_length
            ));
        }
        if self.batch == 0 || self.max_epochs == 0 {
            return fail("batch and max_epochs must be positive".into());
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return fail(format!(
                "validation_fraction must lie in (0, 1), got {}",
                self.validation_fraction
            ));
        }
        if !(self.min_delta >= 0.0) {
            return fail("min_delta must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean window loss over the epoch's optimizer steps.
    pub train_bce: f64,
    pub val_bce: f64,
    pub ms: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// Epoch whose parameters were returned (lowest validation BCE).
    pub best_epoch: usize,
    pub stopped_epoch: usize,
    pub train_sequences: Vec<usize>,
    pub validation_sequences: Vec<usize>,
}

impl TrainReport {
    pub fn best_val_bce(&self) -> f64 {
        self.epochs[self.best_epoch - 1].val_bce
    }

    /// `epoch,train_bce,val_bce,ms_per_epoch`
    pub fn to_csv(&self) -> String {
        self.csv(true)
    }

    /// The table without the wall-clock column.
    pub fn to_csv_untimed(&self) -> String {
        self.csv(false)
    }

    fn csv(&self, timed: bool) -> String {
        let mut out = String::from(if timed {
            "epoch,train_bce,val_bce,ms_per_epoch\n"
        } else {
            "epoch,train_bce,val_bce\n"
        });
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{:.10},{:.10}",
                e.epoch, e.train_bce, e.val_bce
            ));
            if timed {
                out.push_str(&format!(",{:.1}", e.ms));
            }
            out.push('\n');
        }
        out
    }
}

/// Mean over `t = 0..T-2` of BCE(prob_t, truth_{t+1}) for one window.
///
/// Labels fed back between steps are thresholded values and enter the next
/// step as constants. The final prediction has no target inside the window
/// and is not computed.
pub fn sequence_loss(g: &mut Graph, params: &[Var], window: &[FramePair]) -> Result<Var> {
    if window.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "loss window needs at least 2 frames, got {}",
            window.len()
        )));
    }
    let (h, w) = window[0].measurement.extent();
    let mut hidden = g.constant(crate::numerics::Tensor::full(
        &[crate::model::HIDDEN, h, w],
        0.5,
    ));
    let mut label = GridFrame::empty(h, w);
    let mut terms = Vec::with_capacity(window.len() - 1);
    for t in 0..window.len() - 1 {
        let input = g.constant(layers::stack_input(&window[t].measurement, &label));
        let features = layers::encode(g, params, input)?;
        hidden = layers::recurrent(g, params, features, hidden)?;
        let prob = layers::decode(g, params, hidden)?;
        terms.push(g.bce_loss(prob, &window[t + 1].truth.to_tensor())?);
        label = threshold(
            &ProbFrame::new(h, w, g.value(prob).data().to_vec())?,
            DEFAULT_THRESHOLD,
        );
    }
    g.mean(&terms)
}

/// Loss and parameter gradients (checkpoint order) of one window.
pub fn window_gradients(model: &Model, window: &[FramePair]) -> Result<(f64, Vec<Vec<f64>>)> {
    let mut g = Graph::new();
    let vars = model.params().register(&mut g);
    let loss = sequence_loss(&mut g, &vars, window)?;
    g.backward(loss)?;
    let grads = model
        .params()
        .iter()
        .zip(&vars)
        .map(|((_, t), &v)| {
            g.grad(v)
                .map_or_else(|| vec![0.0; t.len()], <[f64]>::to_vec)
        })
        .collect();
    Ok((g.value(loss).item(), grads))
}

/// Sum of per-window gradients, accumulated in window order.
pub fn batch_gradients(
    model: &Model,
    windows: &[&[FramePair]],
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut losses = Vec::with_capacity(windows.len());
    let mut total: Option<Vec<Vec<f64>>> = None;
    for window in windows {
        let (loss, grads) = window_gradients(model, window)?;
        losses.push(loss);
        match total.as_mut() {
            None => total = Some(grads),
            Some(acc) => {
                for (a, g) in acc.iter_mut().zip(grads) {
                    for (x, y) in a.iter_mut().zip(g) {
                        *x += y;
                    }
                }
            }
        }
    }
    Ok((losses, total.unwrap_or_default()))
}

/// Mean over every `(sequence, t)` of BCE(prob_t, truth_{t+1}).
pub fn evaluate(model: &Model, dataset: &[SequenceRecord]) -> Result<f64> {
    evaluate_with(dataset, |record| {
        let measurements: Vec<GridFrame> = record.measurements().cloned().collect();
        Ok(rollout(&measurements, model, false)?
            .probs
            .into_iter()
            .map(|p| p.values().to_vec())
            .collect())
    })
}

/// [`evaluate`] for an arbitrary predictor returning one probability plane per frame.
pub fn evaluate_with<F>(dataset: &[SequenceRecord], mut predict: F) -> Result<f64>
where
    F: FnMut(&SequenceRecord) -> Result<Vec<Vec<f64>>>,
{
    let (mut total, mut count) = (0.0, 0usize);
    for record in dataset {
        if record.len() < 2 {
            continue;
        }
        let probs = predict(record)?;
        for (t, truth) in record.truths().enumerate().skip(1) {
            total += bce_value(&probs[t - 1], &truth.to_f64());
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InvalidConfig(
            "evaluation needs a sequence with at least 2 frames".into(),
        ));
    }
    Ok(total / count as f64)
}

/// Seeded train/validation split of record indices.
pub fn split(n: usize, config: &TrainConfig) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(config.seed, &[tag::SPLIT]));
    if n < 2 {
        return (order.clone(), order);
    }
    let n_val = ((n as f64 * config.validation_fraction).round() as usize).clamp(1, n - 1);
    let val = order[..n_val].to_vec();
    let train = order[n_val..].to_vec();
    (train, val)
}

pub fn train(
    model: &Model,
    dataset: &[SequenceRecord],
    config: &TrainConfig,
) -> Result<(Model, TrainReport)> {
    train_with_progress(model, dataset, config, |_| {})
}

/// As [`train`], calling `on_epoch` after every epoch.
pub fn train_with_progress<F>(
    model: &Model,
    dataset: &[SequenceRecord],
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<(Model, TrainReport)>
where
    F: FnMut(&EpochStats),
{
    config.validate()?;
    let first = dataset
        .first()
        .ok_or_else(|| Error::InvalidConfig("training needs at least one sequence".into()))?;
    if dataset.iter().any(|r| r.extent() != first.extent()) {
        return Err(Error::InvalidConfig(
            "all training sequences must share one extent".into(),
        ));
    }
    let (train_idx, val_idx) = split(dataset.len(), config);
    let train_set: Vec<&SequenceRecord> = train_idx
        .iter()
        .map(|&i| &dataset[i])
        .filter(|r| r.len() >= 2)
        .collect();
    if train_set.is_empty() {
        return Err(Error::InvalidConfig(
            "no training sequence has 2 or more frames".into(),
        ));
    }
    let val_set: Vec<SequenceRecord> = val_idx.iter().map(|&i| dataset[i].clone()).collect();

    let steps = if config.steps_per_epoch > 0 {
        config.steps_per_epoch
    } else {
        let frames: usize = train_set.iter().map(|r| r.len()).sum();
        frames.div_ceil(config.batch * config.unroll_length).max(1)
    };

    let mut current = model.clone();
    let mut state = RmsPropState::new(current.params());
    let mut best = (f64::INFINITY, 0usize, current.clone());
    let mut reference = f64::INFINITY;
    let mut stale = 0usize;
    let mut epochs = Vec::new();

    for epoch in 1..=config.max_epochs {
        let started = Instant::now();
        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;
        for step in 0..steps {
            let mut rng = stream(config.seed, &[tag::WINDOW, epoch as u64, step as u64]);
            let windows: Vec<&[FramePair]> = (0..config.batch)
                .map(|_| {
                    let record = train_set[rng.gen_range(0..train_set.len())];
                    let len = config.unroll_length.min(record.len());
                    let start = rng.gen_range(0..=record.len() - len);
                    &record.frames()[start..start + len]
                })
                .collect();
            let (losses, grads) = batch_gradients(&current, &windows)?;
            let last_good = epochs.last().map(|e: &EpochStats| e.epoch);
            if losses.iter().any(|l| !l.is_finite()) {
                return Err(Error::Diverged {
                    epoch,
                    last_good_epoch: last_good,
                });
            }
            rmsprop_step(
                current.params_mut(),
                &grads,
                &mut state,
                config.learning_rate,
            )
            .map_err(|e| match e {
                Error::NonFiniteGradient(_) => Error::Diverged {
                    epoch,
                    last_good_epoch: last_good,
                },
                other => other,
            })?;
            loss_sum += losses.iter().sum::<f64>();
            loss_count += losses.len();
        }
        let val_bce = evaluate(&current, &val_set)?;
        if !val_bce.is_finite() {
            return Err(Error::Diverged {
                epoch,
                last_good_epoch: epochs.last().map(|e: &EpochStats| e.epoch),
            });
        }
        let stats = EpochStats {
            epoch,
            train_bce: loss_sum / loss_count as f64,
            val_bce,
            ms: started.elapsed().as_secs_f64() * 1e3,
        };
        on_epoch(&stats);
        epochs.push(stats);

        if val_bce < best.0 {
            best = (val_bce, epoch, current.clone());
        }
        if val_bce < reference - config.min_delta {
            reference = val_bce;
            stale = 0;
        } else {
            stale += 1;
        }
        if stale >= config.patience {
            break;
        }
    }

    let stopped_epoch = epochs.len();
    Ok((
        best.2,
        TrainReport {
            epochs,
            best_epoch: best.1,
            stopped_epoch,
            train_sequences: train_idx,
            validation_sequences: val_idx,
        },
    ))
}
