use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::trainer::{predict_utterances, train, EpochRecord};
use super::TrainConfig;
use crate::data::{split_by_speaker, Utterance};
use crate::error::{Error, Result};
use crate::eval::{classification_accuracy, tolerance_table, Gold, ToleranceTable};
use crate::nn::Model;

/// Metrics of one leave-one-corpus-out fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub held_out: String,
    pub train_corpora: Vec<String>,
    /// Speaker-disjoint test utterances from the training corpora.
    pub within: ToleranceTable,
    /// Every utterance of the held-out corpus.
    pub unseen: ToleranceTable,
    pub within_type_accuracy: f64,
    pub unseen_type_accuracy: f64,
    pub best_epoch: usize,
}

#[derive(Debug, Clone)]
pub struct Fold {
    pub report: FoldReport,
    pub model: Model,
    pub log: Vec<EpochRecord>,
    pub train: Vec<Utterance>,
    pub valid: Vec<Utterance>,
    pub within_test: Vec<Utterance>,
    pub unseen_test: Vec<Utterance>,
}

fn golds(u: &[Utterance]) -> Result<Vec<Gold>> {
    u.iter().map(Gold::from_utterance).collect()
}

/// Leave-one-corpus-out: each fold trains on every corpus but one, split
/// by speaker into train/validation/test, and scores both the within-corpus
/// test split and the whole held-out corpus. Folds follow sorted corpus id.
pub fn cross_validate(utts: &[Utterance], cfg: &TrainConfig) -> Result<Vec<Fold>> {
    let corpora: BTreeSet<&str> = utts.iter().map(|u| u.corpus_id.as_str()).collect();
    if corpora.len() < 2 {
        return Err(Error::Config(format!(
            "cross-validation needs at least 2 corpora, found {}",
            corpora.len()
        )));
    }
    let mut folds = Vec::new();
    for (k, &held) in corpora.iter().enumerate() {
        let (unseen, rest): (Vec<Utterance>, Vec<Utterance>) =
            utts.iter().cloned().partition(|u| u.corpus_id == held);
        let splits = split_by_speaker(&rest, cfg.split, cfg.seed.wrapping_add(k as u64))?;
        if splits.test.is_empty() {
            return Err(Error::Config("cross-validation needs a non-empty test fraction".into()));
        }
        log::info!("fold {}: holding out corpus {held}", k + 1);
        let out = train(&splits.train, &splits.valid, cfg)?;
        let seen: BTreeSet<String> = splits.train.iter().map(|u| u.corpus_id.clone()).collect();

        let within_pred = predict_utterances(&out.model, &splits.test)?;
        let unseen_pred = predict_utterances(&out.model, &unseen)?;
        let (wg, ug) = (golds(&splits.test)?, golds(&unseen)?);
        let report = FoldReport {
            held_out: held.to_string(),
            train_corpora: seen.iter().cloned().collect(),
            within: tolerance_table(&within_pred, &wg, &cfg.eval_taus, None)?,
            unseen: tolerance_table(&unseen_pred, &ug, &cfg.eval_taus, None)?,
            within_type_accuracy: classification_accuracy(&within_pred, &wg)?,
            unseen_type_accuracy: classification_accuracy(&unseen_pred, &ug)?,
            best_epoch: out.best_epoch,
        };
        folds.push(Fold {
            report,
            model: out.model,
            log: out.log,
            train: splits.train,
            valid: splits.valid,
            within_test: splits.test,
            unseen_test: unseen,
        });
    }
    Ok(folds)
}
