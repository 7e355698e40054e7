use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graphio::Dataset;
use crate::metrics::{classification_report, ClassificationReport};
use crate::ndtensor::{Optimizer, Tape, Tensor};
use crate::pathsampler::{rwse, sample_pathways, PositionalEncoding};
use crate::rng::{derive_seed, rng_for};
use crate::{Error, Result};

use super::config::{ModelConfig, TrainConfig};
use super::model::{Model, Prepared};

/// Fold id for every sample. Each class is shuffled and dealt round-robin,
/// so fold class counts differ by at most one.
pub fn stratified_folds(labels: &[usize], classes: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Config("cross-validation needs at least 2 folds".into()));
    }
    let mut by_class = vec![Vec::new(); classes];
    for (i, &y) in labels.iter().enumerate() {
        by_class[y].push(i);
    }
    let smallest = by_class.iter().map(Vec::len).filter(|&n| n > 0).min().unwrap_or(0);
    if smallest < folds {
        return Err(Error::Config(format!(
            "a class has only {smallest} graphs, fewer than {folds} folds; use --folds {} or less",
            smallest.max(2)
        )));
    }
    let mut out = vec![0; labels.len()];
    let mut rng = rng_for(&[seed, 0xf01d]);
    let mut offset = 0;
    for members in &mut by_class {
        members.shuffle(&mut rng);
        for (k, &i) in members.iter().enumerate() {
            out[i] = (offset + k) % folds;
        }
        offset += members.len();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    /// Mean training loss per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Trains a fresh model on `indices` of `dataset`.
///
/// Walks are resampled every epoch from `(seed, graph index, epoch)`.
/// Per-graph gradients within a batch run in parallel but are summed in
/// batch order, so the result does not depend on thread count.
pub fn fit(
    dataset: &Dataset,
    indices: &[usize],
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    seed: u64,
) -> Result<(Model, TrainLog)> {
    train_cfg.validate()?;
    if indices.is_empty() {
        return Err(Error::Config("no training graphs".into()));
    }
    let mut model = Model::new(model_cfg.clone(), dataset.feature_dim(), derive_seed(&[seed, 0x10]))?;
    let pes: Vec<PositionalEncoding> = indices
        .iter()
        .map(|&i| rwse(&dataset.graphs[i].graph, model_cfg.pe_steps))
        .collect();
    let mut opt = Optimizer::new(train_cfg.optimizer, train_cfg.learning_rate, train_cfg.weight_decay);
    let mut order: Vec<usize> = (0..indices.len()).collect();
    let mut log = TrainLog {
        epoch_losses: Vec::with_capacity(train_cfg.epochs),
    };
    for epoch in 0..train_cfg.epochs {
        order.shuffle(&mut rng_for(&[seed, 0x5e, epoch as u64]));
        let mut epoch_loss = 0.0;
        for batch in order.chunks(train_cfg.batch_size) {
            let results: Vec<Result<(f64, Vec<Tensor>)>> = batch
                .par_iter()
                .map(|&k| {
                    let i = indices[k];
                    let lg = &dataset.graphs[i];
                    let paths = sample_pathways(
                        &lg.graph,
                        model_cfg.walk_length,
                        derive_seed(&[seed, i as u64, epoch as u64]),
                    )?;
                    let prep = Prepared::with_parts(&lg.graph, &lg.features, pes[k].clone(), paths)?;
                    let mut tape = Tape::new();
                    let vars = model.params().bind(&mut tape, true);
                    let x = tape.constant(lg.features.tensor().clone());
                    let logits = model.logits(&mut tape, &vars, &prep, x, None)?;
                    let loss = tape.softmax_cross_entropy(logits, lg.label)?;
                    let grads = tape.backward(loss)?;
                    Ok((tape.scalar(loss), vars.iter().map(|&v| grads.get(v)).collect()))
                })
                .collect();
            let mut sum: Option<Vec<Tensor>> = None;
            let mut batch_loss = 0.0;
            for r in results {
                let (loss, grads) = r.map_err(|e| Error::Divergence {
                    epoch,
                    message: e.to_string(),
                })?;
                batch_loss += loss;
                sum = Some(match sum {
                    None => grads,
                    Some(mut acc) => {
                        for (a, g) in acc.iter_mut().zip(&grads) {
                            *a.as_array_mut() += g.as_array();
                        }
                        acc
                    }
                });
            }
            let mut grads = sum.expect("batches are nonempty");
            let scale = 1.0 / batch.len() as f64;
            for g in &mut grads {
                *g.as_array_mut() *= scale;
            }
            if !batch_loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    message: "non-finite training loss".into(),
                });
            }
            opt.step(model.params_mut().tensors_mut(), &grads)
                .map_err(|e| Error::Divergence {
                    epoch,
                    message: e.to_string(),
                })?;
            epoch_loss += batch_loss;
        }
        let mean = epoch_loss / indices.len() as f64;
        log::debug!("epoch {epoch}: loss {mean:.5}");
        log.epoch_losses.push(mean);
    }
    Ok((model, log))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation (0 for a single value).
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub name: String,
    pub precision: MeanStd,
    pub recall: MeanStd,
}

/// Cross-validation summary: per-class precision/recall and overall
/// accuracy as mean ± std over repeats. Each repeat pools the held-out
/// predictions of all its folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub repeats: usize,
    pub classes: Vec<ClassSummary>,
    pub accuracy: MeanStd,
    pub per_repeat: Vec<ClassificationReport>,
}

/// Repeated stratified k-fold cross-validation. `jobs > 1` trains folds
/// concurrently; the report is identical for any job count.
pub fn cross_validate(
    dataset: &Dataset,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    seed: u64,
    jobs: usize,
) -> Result<CvReport> {
    train_cfg.validate()?;
    model_cfg.validate()?;
    if model_cfg.classes != dataset.num_classes() {
        return Err(Error::Config(format!(
            "model has {} classes, dataset has {}",
            model_cfg.classes,
            dataset.num_classes()
        )));
    }
    let labels = dataset.labels();
    let assignments = (0..train_cfg.repeats)
        .map(|r| stratified_folds(&labels, dataset.num_classes(), train_cfg.folds, derive_seed(&[seed, r as u64])))
        .collect::<Result<Vec<_>>>()?;
    let tasks: Vec<(usize, usize)> = (0..train_cfg.repeats)
        .flat_map(|r| (0..train_cfg.folds).map(move |f| (r, f)))
        .collect();
    let run = |&(r, f): &(usize, usize)| -> Result<Vec<(usize, usize)>> {
        let fold_of = &assignments[r];
        let train_idx: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] != f).collect();
        let test_idx: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] == f).collect();
        let (model, _) = fit(dataset, &train_idx, model_cfg, train_cfg, derive_seed(&[seed, r as u64, f as u64]))?;
        log::info!("repeat {r} fold {f} trained");
        test_idx
            .iter()
            .map(|&i| {
                let g = &dataset.graphs[i];
                Ok((i, model.predict(&g.graph, &g.features)?.label))
            })
            .collect()
    };
    let outcomes: Vec<Result<Vec<(usize, usize)>>> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        pool.install(|| tasks.par_iter().map(run).collect())
    } else {
        tasks.iter().map(run).collect()
    };
    let mut predictions = vec![vec![0usize; labels.len()]; train_cfg.repeats];
    for ((r, _), out) in tasks.iter().zip(outcomes) {
        for (i, p) in out? {
            predictions[*r][i] = p;
        }
    }
    let per_repeat = predictions
        .iter()
        .map(|p| classification_report(p, &labels, dataset.num_classes()))
        .collect::<Result<Vec<_>>>()?;
    let classes = dataset
        .class_names
        .iter()
        .enumerate()
        .map(|(c, name)| ClassSummary {
            name: name.clone(),
            precision: MeanStd::of(&per_repeat.iter().map(|r| r.per_class[c].precision).collect::<Vec<_>>()),
            recall: MeanStd::of(&per_repeat.iter().map(|r| r.per_class[c].recall).collect::<Vec<_>>()),
        })
        .collect();
    let accuracy = MeanStd::of(&per_repeat.iter().map(|r| r.accuracy).collect::<Vec<_>>());
    Ok(CvReport {
        folds: train_cfg.folds,
        repeats: train_cfg.repeats,
        classes,
        accuracy,
        per_repeat,
    })
}

/// Cross-validates, then fits a final model on every graph.
pub fn train(
    dataset: &Dataset,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    seed: u64,
    jobs: usize,
) -> Result<(Model, CvReport)> {
    let report = cross_validate(dataset, model_cfg, train_cfg, seed, jobs)?;
    let all: Vec<usize> = (0..dataset.graphs.len()).collect();
    let (model, _) = fit(dataset, &all, model_cfg, train_cfg, derive_seed(&[seed, 0xf1a1]))?;
    Ok((model, report))
}
