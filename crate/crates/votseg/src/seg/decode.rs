use super::types::{ScoreMatrix, Segmentation, TaskLossConfig};
use crate::error::{Error, Result};

#[inline]
fn hinged_offset(a: usize, b: usize, tau: usize) -> f64 {
    a.abs_diff(b).saturating_sub(tau) as f64
}

/// Tolerance-hinged absolute boundary error, summed over both boundaries.
pub fn task_loss(gold: Segmentation, pred: Segmentation, cfg: TaskLossConfig) -> f64 {
    hinged_offset(gold.y1, pred.y1, cfg.tau_frames) + hinged_offset(gold.y2, pred.y2, cfg.tau_frames)
}

/// Maximizes `first(y1) + second(y2)` over `1 <= y1 < y2 <= t`.
///
/// Among equal values the lexicographically smallest `(y1, y2)` wins. The
/// prefix argmax keeps the smallest maximizing `y1`, so the lexicographic
/// minimum of the optimal set is always among the `(prefix_argmax(y2), y2)`
/// candidates.
fn argmax_pair(
    t: usize,
    first: impl Fn(usize) -> f64,
    second: impl Fn(usize) -> f64,
) -> Result<(Segmentation, f64)> {
    if t < 2 {
        return Err(Error::Contract(format!(
            "decoding needs at least 2 frames, got {t}"
        )));
    }
    let mut prefix_y1 = 1;
    let mut prefix_val = first(1);
    let mut best = (1, 2);
    let mut best_val = prefix_val + second(2);
    for y2 in 2..=t {
        if y2 > 2 {
            let cand = first(y2 - 1);
            if cand > prefix_val {
                prefix_val = cand;
                prefix_y1 = y2 - 1;
            }
        }
        let val = prefix_val + second(y2);
        if val > best_val || (val == best_val && (prefix_y1, y2) < best) {
            best_val = val;
            best = (prefix_y1, y2);
        }
    }
    Ok((Segmentation { y1: best.0, y2: best.1 }, best_val))
}

/// Highest-scoring segmentation.
pub fn decode(scores: &ScoreMatrix) -> Result<Segmentation> {
    argmax_pair(scores.len(), |y| scores.get(y, 0), |y| scores.get(y, 1)).map(|(s, _)| s)
}

/// Highest-scoring segmentation after adding the task loss against `gold`
/// to every candidate.
pub fn loss_augmented_decode(
    scores: &ScoreMatrix,
    gold: Segmentation,
    cfg: TaskLossConfig,
) -> Result<Segmentation> {
    augmented(scores, gold, cfg).map(|(s, _)| s)
}

fn augmented(
    scores: &ScoreMatrix,
    gold: Segmentation,
    cfg: TaskLossConfig,
) -> Result<(Segmentation, f64)> {
    gold.check_within(scores.len())?;
    let tau = cfg.tau_frames;
    argmax_pair(
        scores.len(),
        |y| scores.get(y, 0) + hinged_offset(y, gold.y1, tau),
        |y| scores.get(y, 1) + hinged_offset(y, gold.y2, tau),
    )
}

/// Everything the structural hinge needs for its gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HingeTerms {
    pub value: f64,
    /// The loss-augmented argmax.
    pub augmented: Segmentation,
    /// Task loss of the loss-augmented argmax against gold.
    pub task_loss: f64,
}

impl HingeTerms {
    /// Subgradient with respect to the score matrix entries, as a list of
    /// `(1-based frame, slot, coefficient)`.
    pub fn score_gradient(&self, gold: Segmentation) -> [(usize, usize, f64); 4] {
        [
            (self.augmented.y1, 0, 1.0),
            (self.augmented.y2, 1, 1.0),
            (gold.y1, 0, -1.0),
            (gold.y2, 1, -1.0),
        ]
    }
}

/// Max-margin surrogate: `max_y [loss(gold, y) + score(y)] - score(gold)`.
///
/// Evaluated as the difference of the augmented objective at the argmax and
/// at gold, so the result is exactly nonnegative in floating point.
pub fn structural_hinge(
    scores: &ScoreMatrix,
    gold: Segmentation,
    cfg: TaskLossConfig,
) -> Result<HingeTerms> {
    let (aug, best_val) = augmented(scores, gold, cfg)?;
    let gold_val = (scores.get(gold.y1, 0) + 0.0) + (scores.get(gold.y2, 1) + 0.0);
    Ok(HingeTerms {
        value: best_val - gold_val,
        augmented: aug,
        task_loss: task_loss(gold, aug, cfg),
    })
}
