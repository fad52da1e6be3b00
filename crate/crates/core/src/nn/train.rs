use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ComponentGraph;

use super::adam::{adam_step, AdamConfig};
use super::layers::GraphStructure;
use super::loss::softmax_cross_entropy;
use super::matrix::DenseMatrix;
use super::model::{argmax_rows, graph_inputs, Model, ModelConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    /// Graphs per optimization step.
    pub batch_size: usize,
    /// Fraction of drawings used for training; the rest validate.
    pub split: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            weight_decay: 5e-4,
            max_epochs: 2000,
            batch_size: 16,
            split: 0.8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::Config(format!("split {} must lie in (0, 1)", self.split)));
        }
        if !(self.learning_rate > 0.0) || self.weight_decay < 0.0 || !self.weight_decay.is_finite() {
            return Err(Error::Config("learning rate must be positive and weight decay nonnegative".into()));
        }
        if self.max_epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("max_epochs and batch_size must be positive".into()));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            ..AdamConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Node-weighted mean training loss over the epoch's steps.
    pub train_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Indices into the dataset passed to `train`.
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
}

struct Sample {
    x: DenseMatrix,
    s: GraphStructure,
    y: Vec<usize>,
}

fn prepare(graphs: &[&ComponentGraph], mc: &ModelConfig) -> Result<Vec<Sample>> {
    let first = graphs.first().ok_or_else(|| Error::Dataset("no graphs".into()))?;
    graphs
        .iter()
        .enumerate()
        .map(|(i, g)| {
            if g.n != first.n || g.scheme != first.scheme {
                return Err(Error::Dataset(format!(
                    "graph {i} has n = {} and scheme {:?}, expected n = {} and {:?}",
                    g.n, g.scheme, first.n, first.scheme
                )));
            }
            if g.scheme.num_classes() != mc.num_classes {
                return Err(Error::ClassCountMismatch {
                    model: mc.num_classes,
                    graph: g.scheme.num_classes(),
                });
            }
            if g.feature_dim() != mc.in_dim {
                return Err(Error::Dataset(format!(
                    "graph {i} has {} features per node, model expects {}",
                    g.feature_dim(),
                    mc.in_dim
                )));
            }
            g.validate()?;
            let y = g
                .labels
                .clone()
                .ok_or_else(|| Error::Dataset(format!("graph {i} is unlabeled")))?;
            let (x, s) = graph_inputs(g)?;
            Ok(Sample { x, s, y })
        })
        .collect()
}

fn union(batch: &[&Sample]) -> Result<Sample> {
    let x = DenseMatrix::vstack(&batch.iter().map(|b| &b.x).collect::<Vec<_>>())?;
    let s = GraphStructure::union(&batch.iter().map(|b| &b.s).collect::<Vec<_>>());
    let y = batch.iter().flat_map(|b| b.y.iter().copied()).collect();
    Ok(Sample { x, s, y })
}

fn accuracy(model: &Model, samples: &[Sample]) -> Result<f64> {
    let (mut hit, mut total) = (0usize, 0usize);
    for s in samples {
        let pred = argmax_rows(&model.logits(&s.x, &s.s)?);
        hit += pred.iter().zip(&s.y).filter(|(p, y)| p == y).count();
        total += s.y.len();
    }
    Ok(if total == 0 { 0.0 } else { hit as f64 / total as f64 })
}

/// Number of training drawings for a dataset of `len` under `split`.
pub fn train_count(len: usize, split: f64) -> usize {
    ((len as f64 * split).round() as usize).clamp(1, len.saturating_sub(1).max(1))
}

/// Seeded drawing-level split, then training on the two parts.
pub fn train(dataset: &[ComponentGraph], mc: &ModelConfig, tc: &TrainConfig) -> Result<(Model, TrainHistory)> {
    train_with(dataset, mc, tc, |_| {})
}

pub fn train_with(
    dataset: &[ComponentGraph],
    mc: &ModelConfig,
    tc: &TrainConfig,
    on_epoch: impl FnMut(&EpochRecord),
) -> Result<(Model, TrainHistory)> {
    tc.validate()?;
    if dataset.len() < 2 {
        return Err(Error::Dataset(format!(
            "need at least 2 graphs to split, got {}",
            dataset.len()
        )));
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(tc.seed));
    let n_train = train_count(dataset.len(), tc.split);
    let (tr, va) = order.split_at(n_train);
    let train_set: Vec<_> = tr.iter().map(|&i| &dataset[i]).collect();
    let val_set: Vec<_> = va.iter().map(|&i| &dataset[i]).collect();
    let (model, mut history) = run(&train_set, &val_set, mc, tc, on_epoch)?;
    history.train_indices = tr.to_vec();
    history.val_indices = va.to_vec();
    Ok((model, history))
}

/// Trains on explicit training and validation sets.
pub fn train_on(
    train: &[ComponentGraph],
    val: &[ComponentGraph],
    mc: &ModelConfig,
    tc: &TrainConfig,
) -> Result<(Model, TrainHistory)> {
    tc.validate()?;
    let t: Vec<_> = train.iter().collect();
    let v: Vec<_> = val.iter().collect();
    run(&t, &v, mc, tc, |_| {})
}

fn run(
    train: &[&ComponentGraph],
    val: &[&ComponentGraph],
    mc: &ModelConfig,
    tc: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(Model, TrainHistory)> {
    if train.is_empty() || val.is_empty() {
        return Err(Error::Dataset("training and validation sets must be nonempty".into()));
    }
    let all: Vec<_> = train.iter().chain(val).copied().collect();
    let mut samples = prepare(&all, mc)?;
    let val_samples = samples.split_off(train.len());
    let train_samples = samples;

    let mut model = Model::new(mc.clone(), tc.seed)?;
    let adam = tc.adam();
    // separate stream so the epoch order does not depend on the init draws
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    rng.set_stream(1);
    let mut best: Option<Model> = None;
    let mut history = TrainHistory::default();
    let mut order: Vec<usize> = (0..train_samples.len()).collect();

    for epoch in 1..=tc.max_epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut nodes) = (0.0, 0usize);
        for chunk in order.chunks(tc.batch_size) {
            let batch = union(&chunk.iter().map(|&i| &train_samples[i]).collect::<Vec<_>>())?;
            let (logits, cache) = model.forward(&batch.x, &batch.s)?;
            let (loss, dl) = softmax_cross_entropy(&logits, &batch.y)?;
            let grads = model.backward(&batch.s, &cache, &dl)?;
            adam_step(&mut model.params, &grads, &mut model.optimizer, &adam);
            loss_sum += loss * batch.y.len() as f64;
            nodes += batch.y.len();
        }
        let rec = EpochRecord {
            epoch,
            train_loss: loss_sum / nodes.max(1) as f64,
            val_accuracy: accuracy(&model, &val_samples)?,
        };
        if best.as_ref().is_none_or(|b| rec.val_accuracy > b.best_val_accuracy.unwrap_or(-1.0)) {
            let mut snapshot = model.clone();
            snapshot.best_val_accuracy = Some(rec.val_accuracy);
            snapshot.best_epoch = Some(epoch);
            best = Some(snapshot);
        }
        on_epoch(&rec);
        history.epochs.push(rec);
    }
    Ok((best.expect("at least one epoch ran"), history))
}
