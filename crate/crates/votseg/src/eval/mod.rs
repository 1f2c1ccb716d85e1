//! Tolerance-proportion tables, VOT-type accuracy, and a post-hoc corpus
//! probe.
//!
//! The headline metric is the share of utterances whose automatic signed
//! VOT lies within `tau` ms of the manual one. A sign error therefore
//! misses at every tolerance below the (usually large) gap it creates.

mod probe;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use probe::{corpus_probe, cross_validated_probe, ProbeResult};

use crate::data::{Annotation, ManifestRecord, Utterance};
use crate::error::{Error, Result};
use crate::seg::{Segmentation, VotType};

pub const DEFAULT_TAUS: [f64; 4] = [2.0, 5.0, 10.0, 15.0];
/// Slack on `diff <= tau` for values that are not exact in binary.
const TAU_SLACK: f64 = 1e-9;

/// One line of `predict` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub utterance_id: String,
    pub vot_ms: f64,
    pub vot_type: VotType,
    pub boundaries: Segmentation,
    pub type_prob: f64,
    pub frame_period_ms: f64,
    pub model_version: String,
}

/// Manual reference for one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct Gold {
    pub id: String,
    pub corpus_id: String,
    pub annotation: Annotation,
}

impl Gold {
    pub fn from_record(r: &ManifestRecord) -> Result<Self> {
        Ok(Self {
            id: r.utterance_id.clone(),
            corpus_id: r.corpus_id.clone(),
            annotation: r
                .annotation
                .ok_or_else(|| Error::Data(format!("{}: no gold annotation", r.utterance_id)))?,
        })
    }

    pub fn from_utterance(u: &Utterance) -> Result<Self> {
        Ok(Self {
            id: u.id.clone(),
            corpus_id: u.corpus_id.clone(),
            annotation: *u.annotation()?,
        })
    }
}

/// A matched prediction/gold pair reduced to the quantities the tables use.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub id: String,
    pub corpus_id: String,
    pub gold_type: VotType,
    pub pred_type: VotType,
    /// `|predicted signed VOT - gold signed VOT|`
    pub vot_diff_ms: f64,
    /// Largest per-boundary offset; infinite on a type error.
    pub boundary_diff_ms: f64,
}

/// Matches predictions to golds by utterance id; any id present on only
/// one side is an error listing the symmetric difference.
pub fn pair_up(preds: &[PredictionRecord], golds: &[Gold]) -> Result<Vec<Comparison>> {
    let by_id: BTreeMap<&str, &PredictionRecord> =
        preds.iter().map(|p| (p.utterance_id.as_str(), p)).collect();
    let gold_ids: BTreeSet<&str> = golds.iter().map(|g| g.id.as_str()).collect();
    let pred_ids: BTreeSet<&str> = by_id.keys().copied().collect();
    if by_id.len() != preds.len() || gold_ids.len() != golds.len() {
        return Err(Error::Data("duplicate utterance ids in predictions or golds".into()));
    }
    if gold_ids != pred_ids {
        let only_gold: Vec<&str> = gold_ids.difference(&pred_ids).copied().collect();
        let only_pred: Vec<&str> = pred_ids.difference(&gold_ids).copied().collect();
        return Err(Error::Data(format!(
            "utterance ids differ; missing predictions: [{}]; predictions without gold: [{}]",
            only_gold.join(", "),
            only_pred.join(", ")
        )));
    }
    Ok(golds
        .iter()
        .map(|g| {
            let p = by_id[g.id.as_str()];
            let gold_type = g.annotation.vot_type();
            let boundary_diff_ms = if p.vot_type == gold_type {
                let (a, b) = g.annotation.boundary_times();
                let to_ms = |y: usize| (y - 1) as f64 * p.frame_period_ms;
                (to_ms(p.boundaries.y1) - a)
                    .abs()
                    .max((to_ms(p.boundaries.y2) - b).abs())
            } else {
                f64::INFINITY
            };
            Comparison {
                id: g.id.clone(),
                corpus_id: g.corpus_id.clone(),
                gold_type,
                pred_type: p.vot_type,
                vot_diff_ms: (p.vot_ms - g.annotation.vot_ms()).abs(),
                boundary_diff_ms,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumRow {
    pub stratum: String,
    pub count: usize,
    /// One proportion per tolerance, in `[0, 1]`.
    pub proportions: Vec<f64>,
    /// Per-boundary offsets rather than VOT differences.
    #[serde(default)]
    pub diagnostic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceTable {
    pub taus: Vec<f64>,
    pub rows: Vec<StratumRow>,
}

fn proportions<'a>(diffs: impl Iterator<Item = f64> + Clone, taus: &[f64]) -> (usize, Vec<f64>) {
    let n = diffs.clone().count();
    let props = taus
        .iter()
        .map(|&tau| diffs.clone().filter(|&d| d <= tau + TAU_SLACK).count() as f64 / n as f64)
        .collect();
    (n, props)
}

fn normalized_taus(taus: &[f64]) -> Result<Vec<f64>> {
    if taus.is_empty() || taus.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Config(format!("tolerances must be nonnegative, got {taus:?}")));
    }
    let mut t = taus.to_vec();
    t.sort_by(|a, b| a.partial_cmp(b).unwrap());
    t.dedup();
    Ok(t)
}

/// Tolerance proportions for every non-empty stratum: all, positive-only
/// and negative-only (by gold type), and, when `seen_corpora` is given,
/// within-corpus and unseen-corpus. A final diagnostic row scores the
/// largest per-boundary offset instead of the VOT difference.
pub fn tolerance_table_from(
    comparisons: &[Comparison],
    taus: &[f64],
    seen_corpora: Option<&BTreeSet<String>>,
) -> Result<ToleranceTable> {
    let taus = normalized_taus(taus)?;
    if comparisons.is_empty() {
        return Err(Error::Data("no utterances to evaluate".into()));
    }
    type Filter<'a> = Box<dyn Fn(&Comparison) -> bool + 'a>;
    let mut strata: Vec<(&str, Filter)> = vec![
        ("all", Box::new(|_| true)),
        ("positive", Box::new(|c| c.gold_type == VotType::Positive)),
        ("negative", Box::new(|c| c.gold_type == VotType::Negative)),
    ];
    if let Some(seen) = seen_corpora {
        strata.push(("within-corpus", Box::new(move |c| seen.contains(&c.corpus_id))));
        strata.push(("unseen-corpus", Box::new(move |c| !seen.contains(&c.corpus_id))));
    }
    let mut rows = Vec::new();
    for (name, keep) in &strata {
        let diffs = comparisons.iter().filter(|c| keep(c)).map(|c| c.vot_diff_ms);
        let (count, props) = proportions(diffs, &taus);
        if count > 0 {
            rows.push(StratumRow {
                stratum: name.to_string(),
                count,
                proportions: props,
                diagnostic: false,
            });
        }
    }
    let (count, props) = proportions(comparisons.iter().map(|c| c.boundary_diff_ms), &taus);
    rows.push(StratumRow {
        stratum: "boundary-offset".into(),
        count,
        proportions: props,
        diagnostic: true,
    });
    Ok(ToleranceTable { taus, rows })
}

pub fn tolerance_table(
    preds: &[PredictionRecord],
    golds: &[Gold],
    taus: &[f64],
    seen_corpora: Option<&BTreeSet<String>>,
) -> Result<ToleranceTable> {
    tolerance_table_from(&pair_up(preds, golds)?, taus, seen_corpora)
}

/// Share of utterances whose predicted VOT type matches the gold type.
pub fn classification_accuracy(preds: &[PredictionRecord], golds: &[Gold]) -> Result<f64> {
    let c = pair_up(preds, golds)?;
    if c.is_empty() {
        return Err(Error::Data("no utterances to evaluate".into()));
    }
    Ok(c.iter().filter(|c| c.gold_type == c.pred_type).count() as f64 / c.len() as f64)
}

impl ToleranceTable {
    pub fn row(&self, stratum: &str) -> Option<&StratumRow> {
        self.rows.iter().find(|r| r.stratum == stratum)
    }

    /// Proportion for `stratum` at tolerance `tau`.
    pub fn get(&self, stratum: &str, tau: f64) -> Option<f64> {
        let i = self.taus.iter().position(|&t| t == tau)?;
        self.row(stratum).map(|r| r.proportions[i])
    }

    /// Aligned plain-text rendering, percentages with one decimal.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<22}{:>7}", "stratum", "n");
        for t in &self.taus {
            let _ = write!(out, "{:>10}", format!("<={t}ms"));
        }
        out.push('\n');
        for r in &self.rows {
            let label = if r.diagnostic {
                format!("{} *", r.stratum)
            } else {
                r.stratum.clone()
            };
            let _ = write!(out, "{label:<22}{:>7}", r.count);
            for p in &r.proportions {
                let _ = write!(out, "{:>10.1}", 100.0 * p);
            }
            out.push('\n');
        }
        if self.rows.iter().any(|r| r.diagnostic) {
            out.push_str("* largest per-boundary offset, diagnostic only\n");
        }
        out
    }
}

/// First line of every JSONL artifact: what wrote it and with which seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactHeader {
    pub artifact: String,
    pub seed: u64,
    pub tool_version: String,
}

impl ArtifactHeader {
    pub fn new(artifact: &str, seed: u64) -> Self {
        Self {
            artifact: artifact.to_string(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Serializes a header line followed by one JSON record per line.
pub fn format_jsonl<T: Serialize>(header: &ArtifactHeader, records: &[T]) -> String {
    let mut out = serde_json::to_string(header).expect("serializable");
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("serializable"));
        out.push('\n');
    }
    out
}

pub fn write_predictions(path: &Path, header: &ArtifactHeader, preds: &[PredictionRecord]) -> Result<()> {
    std::fs::write(path, format_jsonl(header, preds)).map_err(|e| Error::io(path, e))
}

/// Reads a predictions file, skipping its header line if present.
pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if i == 0 && serde_json::from_str::<ArtifactHeader>(line).is_ok() {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pred(id: &str, vot: f64) -> PredictionRecord {
        let t = if vot < 0.0 { VotType::Negative } else { VotType::Positive };
        PredictionRecord {
            utterance_id: id.into(),
            vot_ms: vot,
            vot_type: t,
            boundaries: Segmentation { y1: 11, y2: 11 + vot.abs() as usize },
            type_prob: 0.9,
            frame_period_ms: 1.0,
            model_version: "test".into(),
        }
    }

    fn gold(id: &str, t_b: f64, t_v: f64) -> Gold {
        Gold {
            id: id.into(),
            corpus_id: "c".into(),
            annotation: Annotation { t_pv: None, t_b, t_v },
        }
    }

    #[test]
    fn identity_is_perfect() {
        let golds = vec![gold("a", 10.0, 40.0), gold("b", 10.0, 22.0)];
        let preds = vec![pred("a", 30.0), pred("b", 12.0)];
        let t = tolerance_table(&preds, &golds, &DEFAULT_TAUS, None).unwrap();
        assert!(t.rows.iter().all(|r| r.proportions.iter().all(|&p| p == 1.0)));
    }

    #[test]
    fn four_utterance_counts() {
        let golds: Vec<Gold> = ["a", "b", "c", "d"].iter().map(|id| gold(id, 10.0, 40.0)).collect();
        let preds = vec![pred("a", 30.0), pred("b", 33.0), pred("c", 23.0), pred("d", 50.0)];
        let t = tolerance_table(&preds, &golds, &DEFAULT_TAUS, None).unwrap();
        assert_eq!(t.row("all").unwrap().proportions, vec![0.25, 0.5, 0.75, 0.75]);
    }

    #[test]
    fn sign_error_misses() {
        let golds = vec![gold("a", 10.0, 14.0)];
        let preds = vec![pred("a", -4.0)];
        let t = tolerance_table(&preds, &golds, &[2.0, 5.0, 8.0], None).unwrap();
        assert_eq!(t.row("all").unwrap().proportions, vec![0.0, 0.0, 1.0]);
        assert_eq!(t.row("boundary-offset").unwrap().proportions, vec![0.0, 0.0, 0.0]);
        assert_eq!(classification_accuracy(&preds, &golds).unwrap(), 0.0);
    }

    #[test]
    fn accuracy_counts() {
        let golds: Vec<Gold> = ["a", "b", "c", "d"].iter().map(|id| gold(id, 10.0, 40.0)).collect();
        let preds = vec![pred("a", 30.0), pred("b", 33.0), pred("c", -23.0), pred("d", 50.0)];
        assert_eq!(classification_accuracy(&preds, &golds).unwrap(), 0.75);
    }

    #[test]
    fn id_mismatch_lists_both_sides() {
        let golds = vec![gold("a", 10.0, 40.0), gold("b", 10.0, 40.0)];
        let preds = vec![pred("a", 30.0), pred("z", 30.0)];
        let e = tolerance_table(&preds, &golds, &DEFAULT_TAUS, None).unwrap_err().to_string();
        assert!(e.contains("b") && e.contains("z"), "{e}");
    }

    #[test]
    fn strata_partition_the_total() {
        let mut golds = vec![gold("a", 10.0, 40.0), gold("b", 10.0, 40.0)];
        golds.push(Gold {
            id: "n".into(),
            corpus_id: "other".into(),
            annotation: Annotation { t_pv: Some(2.0), t_b: 10.0, t_v: 20.0 },
        });
        let preds = vec![pred("a", 30.0), pred("b", 31.0), pred("n", -8.0)];
        let seen: BTreeSet<String> = ["c".to_string()].into();
        let t = tolerance_table(&preds, &golds, &DEFAULT_TAUS, Some(&seen)).unwrap();
        let n = |s| t.row(s).unwrap().count;
        assert_eq!(n("positive") + n("negative"), n("all"));
        assert_eq!(n("within-corpus") + n("unseen-corpus"), n("all"));
        assert!(t.render().contains("unseen-corpus"));
    }

    #[test]
    fn predictions_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        let preds = vec![pred("a", 30.0), pred("b", -12.5)];
        write_predictions(&path, &ArtifactHeader::new("predictions", 9), &preds).unwrap();
        assert_eq!(read_predictions(&path).unwrap(), preds);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().next().unwrap().contains("\"seed\":9"));
    }
}
