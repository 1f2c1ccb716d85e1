use std::collections::BTreeSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::objective::{utterance_loss_and_grad, ObjectiveOptions, TrainingExample};
use super::optim::{sampling_weights, zero_grad, Adagrad, EarlyStopping};
use super::TrainConfig;
use crate::data::Utterance;
use crate::error::{Error, Result};
use crate::eval::{tolerance_table, Gold, PredictionRecord};
use crate::frontend::fit_norm;
use crate::nn::{Model, ModelConfig, MODEL_FORMAT, MODEL_FORMAT_VERSION};
use crate::seg::{task_loss, FeatureSequence, TaskLossConfig};

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub struct_loss: f64,
    pub tagger_loss: f64,
    pub adversary_loss: f64,
    pub total: f64,
    pub valid_task_loss: f64,
    pub valid_type_accuracy: f64,
    pub valid_taus: Vec<f64>,
    pub valid_proportions: Vec<f64>,
    pub best: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation task loss.
    pub model: Model,
    pub log: Vec<EpochRecord>,
    pub best_epoch: usize,
}

pub fn model_version() -> String {
    format!("{MODEL_FORMAT}/{MODEL_FORMAT_VERSION} votseg {}", env!("CARGO_PKG_VERSION"))
}

/// Runs the model on every utterance, keeping input order.
pub fn predict_utterances(model: &Model, utts: &[Utterance]) -> Result<Vec<PredictionRecord>> {
    let version = model_version();
    utts.iter()
        .map(|u| {
            let p = model
                .predict(&u.features)
                .map_err(|e| Error::Data(format!("{}: {e}", u.id)))?;
            Ok(record(&u.id, &p, u.features.frame_period_ms(), &version))
        })
        .collect()
}

fn record(id: &str, p: &crate::nn::Prediction, period: f64, version: &str) -> PredictionRecord {
    PredictionRecord {
        utterance_id: id.to_string(),
        vot_ms: p.measurement.vot_ms,
        vot_type: p.measurement.vot_type,
        boundaries: p.measurement.boundaries,
        type_prob: p.measurement.type_prob,
        frame_period_ms: period,
        model_version: version.to_string(),
    }
}

struct Validation {
    task_loss: f64,
    type_accuracy: f64,
    proportions: Vec<f64>,
}

fn validate(
    model: &Model,
    examples: &[TrainingExample],
    golds: &[Gold],
    cfg: &TrainConfig,
) -> Result<Validation> {
    let tau = TaskLossConfig { tau_frames: cfg.tau_frames };
    let mut loss = 0.0;
    let mut correct = 0usize;
    let mut preds = Vec::with_capacity(examples.len());
    for ex in examples {
        let p = model.predict_prepared(&ex.x)?;
        loss += task_loss(ex.gold, p.measurement.boundaries, tau);
        correct += usize::from(p.measurement.vot_type == ex.kind);
        preds.push(record(&ex.id, &p, ex.x.frame_period_ms(), ""));
    }
    let table = tolerance_table(&preds, golds, &cfg.eval_taus, None)?;
    Ok(Validation {
        task_loss: loss / examples.len() as f64,
        type_accuracy: correct as f64 / examples.len() as f64,
        proportions: table.row("all").expect("non-empty").proportions.clone(),
    })
}

/// Fits normalization on `train`, then optimizes the joint objective
/// with Adagrad, one utterance per update by default, keeping the
/// parameters with the lowest validation task loss.
pub fn train(train: &[Utterance], valid: &[Utterance], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() || valid.is_empty() {
        return Err(Error::Data(format!(
            "training needs non-empty splits, got {} train and {} validation utterances",
            train.len(),
            valid.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let feats: Vec<FeatureSequence> = train.iter().map(|u| u.features.clone()).collect();
    let norm = fit_norm(&feats)?;
    drop(feats);
    let corpora: Vec<String> = train
        .iter()
        .map(|u| u.corpus_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut mc = ModelConfig::new(norm.output_dim(), cfg.hidden);
    mc.layers = cfg.layers;
    mc.branch_width = cfg.branch_width;
    mc.use_tagger = cfg.use_tagger;
    mc.use_adversary = cfg.use_adversary && cfg.lambda > 0.0;
    if mc.use_adversary && corpora.len() < 2 {
        log::warn!(
            "corpus adversary disabled: the training set holds {} corpus",
            corpora.len()
        );
        mc.use_adversary = false;
    }
    mc.corpora = corpora;
    let mut model = Model::init(mc, norm, &mut rng)?;
    model.lambda = cfg.lambda;
    model.seed = cfg.seed;

    let examples: Vec<TrainingExample> = train
        .iter()
        .map(|u| TrainingExample::from_utterance(u, &model))
        .collect::<Result<_>>()?;
    let valid_examples: Vec<TrainingExample> = valid
        .iter()
        .map(|u| TrainingExample::from_utterance(u, &model))
        .collect::<Result<_>>()?;
    let valid_golds: Vec<Gold> = valid.iter().map(Gold::from_utterance).collect::<Result<_>>()?;

    let sampler = if cfg.balance_classes {
        let labels: Vec<_> = examples.iter().map(|e| e.kind).collect();
        Some(WeightedIndex::new(sampling_weights(&labels)?).expect("weights are positive"))
    } else {
        None
    };
    let epoch_size = cfg.epoch_size.unwrap_or(examples.len());
    let opts = ObjectiveOptions::new(cfg.tau_frames, cfg.lambda);
    let mut opt = Adagrad::new(cfg.learning_rate, &model.params);
    let mut grad = model.params.zeros_like();
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best = model.clone();
    let mut log = Vec::new();

    for epoch in 1..=cfg.max_epochs {
        let order: Vec<usize> = match &sampler {
            Some(s) => (0..epoch_size).map(|_| s.sample(&mut rng)).collect(),
            None => {
                let mut all: Vec<usize> = (0..examples.len()).collect();
                all.shuffle(&mut rng);
                all.into_iter().cycle().take(epoch_size).collect()
            }
        };
        let mut sums = [0.0; 4];
        for batch in order.chunks(cfg.batch_size) {
            zero_grad(&mut grad);
            for &i in batch {
                let b = utterance_loss_and_grad(&model, &examples[i], &opts, &mut grad)?;
                sums[0] += b.struct_loss;
                sums[1] += b.tagger_loss;
                sums[2] += b.adversary_loss;
                sums[3] += b.total;
            }
            if batch.len() > 1 {
                let scale = 1.0 / batch.len() as f64;
                for (_, t) in grad.tensors_mut() {
                    t.iter_mut().for_each(|g| *g *= scale);
                }
            }
            opt.step(&mut model.params, &grad);
        }
        if !model.params.is_finite() {
            return Err(Error::Data(format!("parameters diverged in epoch {epoch}")));
        }

        let v = validate(&model, &valid_examples, &valid_golds, cfg)?;
        let improved = stopper.observe(epoch, v.task_loss);
        if improved {
            best = model.clone();
        }
        let n = order.len() as f64;
        let rec = EpochRecord {
            epoch,
            struct_loss: sums[0] / n,
            tagger_loss: sums[1] / n,
            adversary_loss: sums[2] / n,
            total: sums[3] / n,
            valid_task_loss: v.task_loss,
            valid_type_accuracy: v.type_accuracy,
            valid_taus: cfg.eval_taus.clone(),
            valid_proportions: v.proportions,
            best: improved,
        };
        log::info!(
            "epoch {epoch}: loss {:.4} (struct {:.4} tagger {:.4} adv {:.4}) valid task loss {:.4} type acc {:.3}",
            rec.total,
            rec.struct_loss,
            rec.tagger_loss,
            rec.adversary_loss,
            rec.valid_task_loss,
            rec.valid_type_accuracy
        );
        log.push(rec);
        if stopper.should_stop() {
            break;
        }
    }
    Ok(TrainOutcome {
        model: best,
        log,
        best_epoch: stopper.best_epoch(),
    })
}
