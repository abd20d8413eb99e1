use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::data::{augment_translate, DatasetSplit, PointCloud};
use crate::error::{Error, Result};
use crate::model::LiteDgcnn;
use crate::ndcore::{Rng, Tensor};
use crate::nn::{weighted_cross_entropy, AdamState};

use super::metrics::{argmax, compute_metrics, Metrics};
use super::TrainConfig;

/// RNG streams derived from the run seed.
const INIT_STREAM: u64 = 0;
const SHUFFLE_STREAM: u64 = 1;
const AUGMENT_STREAM: u64 = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub test_oa: f64,
    pub test_ba: f64,
    /// Wall-clock seconds for batch assembly, forward, backward and updates.
    pub epoch_time_s: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub final_model: LiteDgcnn<f32>,
    pub final_metrics: Metrics,
    /// Model with the highest test OA (earliest epoch on ties).
    pub best_model: LiteDgcnn<f32>,
    pub best_metrics: Metrics,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
}

/// Per-epoch log as CSV. Timing is wall-clock and therefore excluded when
/// comparing runs.
pub fn history_csv(history: &[EpochRecord], include_timing: bool) -> String {
    let mut out = String::from("epoch,lr,train_loss,test_oa,test_ba");
    out.push_str(if include_timing { ",epoch_time_s\n" } else { "\n" });
    for r in history {
        write!(out, "{},{:e},{:.9e},{:.9e},{:.9e}", r.epoch, r.lr, r.train_loss, r.test_oa, r.test_ba).unwrap();
        if include_timing {
            write!(out, ",{:.6}", r.epoch_time_s).unwrap();
        }
        out.push('\n');
    }
    out
}

fn to_f32(c: &PointCloud) -> Tensor<f32> {
    c.points.cast()
}

/// Predicted classes for `clouds`, evaluated in parallel.
pub fn predict(model: &LiteDgcnn<f32>, clouds: &[PointCloud]) -> Result<Vec<usize>> {
    clouds.par_iter().map(|c| model.predict(&to_f32(c)).map(|y| argmax(y.data()))).collect()
}

/// One pass over `clouds` without augmentation.
pub fn evaluate(model: &LiteDgcnn<f32>, clouds: &[PointCloud]) -> Result<Metrics> {
    let preds = predict(model, clouds)?;
    let labels: Vec<usize> = clouds.iter().map(|c| c.label).collect();
    let mut m = compute_metrics(&preds, &labels, model.config().classes)?;
    m.param_count = model.param_count();
    Ok(m)
}

/// Loss and summed parameter gradients of one mini-batch. Samples run in
/// parallel; their gradients are added in batch order.
fn batch_step(
    model: &LiteDgcnn<f32>,
    inputs: &[(Tensor<f32>, usize)],
    weights: &[f32],
) -> Result<(f32, Vec<Tensor<f32>>)> {
    let forward: Vec<_> = inputs.par_iter().map(|(x, _)| model.forward(x)).collect::<Result<_>>()?;
    let classes = model.config().classes;
    let mut logits = Vec::with_capacity(inputs.len() * classes);
    for (y, _) in &forward {
        logits.extend_from_slice(y.data());
    }
    let logits = Tensor::new(&[inputs.len(), classes], logits)?;
    let labels: Vec<usize> = inputs.iter().map(|(_, y)| *y).collect();
    let ce = weighted_cross_entropy(&logits, &labels, weights)?;
    if !ce.loss.is_finite() {
        return Err(Error::NonFinite { layer: "loss".into(), batch: None });
    }

    let grads: Vec<Vec<Tensor<f32>>> = forward
        .par_iter()
        .enumerate()
        .map(|(i, (_, cache))| {
            let g = Tensor::new(&[1, classes], ce.grad_logits.row(i).to_vec())?;
            model.backward(cache, &g)
        })
        .collect::<Result<_>>()?;
    let mut total = grads[0].clone();
    for g in &grads[1..] {
        for (t, x) in total.iter_mut().zip(g) {
            t.add_assign(x)?;
        }
    }
    Ok((ce.loss, total))
}

/// Trains from scratch on `split.train`, scoring `split.test` after every
/// epoch.
pub fn train(config: &TrainConfig, split: &DatasetSplit) -> Result<TrainOutcome> {
    config.validate()?;
    if split.train.is_empty() || split.test.is_empty() {
        return Err(Error::Data("train and test sets must both be non-empty".into()));
    }
    if let Some(c) = split.train.iter().chain(&split.test).find(|c| c.points.rows() != config.points) {
        return Err(Error::Config(format!(
            "{}: cloud has {} points, config expects {}",
            c.source_id,
            c.points.rows(),
            config.points
        )));
    }
    let model_config = config.model_config(split.classes());
    let mut model = LiteDgcnn::<f32>::build(model_config, &mut Rng::stream(config.seed, INIT_STREAM))?;
    let mut adam = AdamState::new(config.adam(), model.params());
    let schedule = config.schedule();
    let mut shuffle_rng = Rng::stream(config.seed, SHUFFLE_STREAM);
    let mut augment_rng = Rng::stream(config.seed, AUGMENT_STREAM);
    let weights: Vec<f32> = split.class_weights.iter().map(|&w| w as f32).collect();
    let train_points: Vec<Tensor<f32>> = split.train.iter().map(to_f32).collect();

    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(LiteDgcnn<f32>, Metrics, usize)> = None;
    let mut last_metrics = None;
    let mut batch_index = 0usize;
    for epoch in 0..config.epochs {
        let started = Instant::now();
        let lr = schedule.lr_at(epoch);
        adam.set_lr(lr);
        let mut order: Vec<usize> = (0..split.train.len()).collect();
        shuffle_rng.shuffle(&mut order);

        let mut loss_sum = 0.0f64;
        for chunk in order.chunks(config.batch_size) {
            let inputs: Vec<(Tensor<f32>, usize)> = chunk
                .iter()
                .map(|&i| {
                    let x = &train_points[i];
                    let x = if config.augment {
                        augment_translate(x, &mut augment_rng, config.max_shift)
                    } else {
                        x.clone()
                    };
                    (x, split.train[i].label)
                })
                .collect();
            let (loss, grads) = batch_step(&model, &inputs, &weights).map_err(|e| e.at_batch(batch_index))?;
            adam.step(model.params_mut(), &grads).map_err(|e| e.at_batch(batch_index))?;
            loss_sum += loss as f64 * chunk.len() as f64;
            batch_index += 1;
        }
        let epoch_time_s = started.elapsed().as_secs_f64();

        let mut metrics = evaluate(&model, &split.test)?;
        metrics.epoch_time_s = epoch_time_s;
        let record = EpochRecord {
            epoch,
            lr,
            train_loss: loss_sum / split.train.len() as f64,
            test_oa: metrics.oa,
            test_ba: metrics.ba,
            epoch_time_s,
        };
        log::info!(
            "epoch {epoch:>4}  lr {lr:.2e}  loss {:.5}  test OA {:.4}  BA {:.4}  {epoch_time_s:.2}s",
            record.train_loss,
            record.test_oa,
            record.test_ba
        );
        history.push(record);
        if best.as_ref().is_none_or(|(_, m, _)| metrics.oa > m.oa) {
            best = Some((model.clone(), metrics.clone(), epoch));
        }
        last_metrics = Some(metrics);
    }
    let (best_model, best_metrics, best_epoch) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        final_model: model,
        final_metrics: last_metrics.expect("at least one epoch"),
        best_model,
        best_metrics,
        best_epoch,
        history,
    })
}
