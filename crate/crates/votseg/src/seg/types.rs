use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-frame acoustic features, one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    frames: Array2<f64>,
    frame_period_ms: f64,
}

impl FeatureSequence {
    pub fn new(frames: Array2<f64>, frame_period_ms: f64) -> Result<Self> {
        let (t, d) = frames.dim();
        if t < 2 {
            return Err(Error::Contract(format!(
                "a feature sequence needs at least 2 frames, got {t}"
            )));
        }
        if d == 0 {
            return Err(Error::Contract("feature dimension must be positive".into()));
        }
        if !(frame_period_ms.is_finite() && frame_period_ms > 0.0) {
            return Err(Error::Contract(format!(
                "frame period must be positive, got {frame_period_ms}"
            )));
        }
        if let Some(pos) = frames.iter().position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!(
                "non-finite feature at frame {}, dim {}",
                pos / d + 1,
                pos % d
            )));
        }
        Ok(Self {
            frames,
            frame_period_ms,
        })
    }

    /// Number of frames `T`.
    pub fn len(&self) -> usize {
        self.frames.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.nrows() == 0
    }

    /// Feature dimension `D`.
    pub fn dim(&self) -> usize {
        self.frames.ncols()
    }

    pub fn frame_period_ms(&self) -> f64 {
        self.frame_period_ms
    }

    pub fn frames(&self) -> &Array2<f64> {
        &self.frames
    }

    pub fn frame(&self, t: usize) -> ArrayView1<'_, f64> {
        self.frames.row(t)
    }

    pub fn into_frames(self) -> Array2<f64> {
        self.frames
    }
}

/// Ordered boundary pair, 1-based frame indices, `y1 < y2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segmentation {
    pub y1: usize,
    pub y2: usize,
}

impl Segmentation {
    pub fn new(y1: usize, y2: usize) -> Result<Self> {
        if y1 == 0 || y1 >= y2 {
            return Err(Error::Contract(format!(
                "segmentation needs 1 <= y1 < y2, got ({y1}, {y2})"
            )));
        }
        Ok(Self { y1, y2 })
    }

    /// Checks that both boundaries fall inside a `t`-frame utterance.
    pub fn check_within(&self, t: usize) -> Result<()> {
        if self.y2 > t {
            return Err(Error::Contract(format!(
                "segmentation ({}, {}) exceeds sequence length {t}",
                self.y1, self.y2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskLossConfig {
    /// Tolerance in frames; offsets up to this many frames cost nothing.
    pub tau_frames: usize,
}

impl Default for TaskLossConfig {
    fn default() -> Self {
        Self { tau_frames: 2 }
    }
}

/// Boundary scores, `T x 2`. Column 0 scores placing the first boundary at
/// each frame, column 1 the second.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    scores: Array2<f64>,
}

impl ScoreMatrix {
    pub fn new(scores: Array2<f64>) -> Result<Self> {
        if scores.ncols() != 2 {
            return Err(Error::Contract(format!(
                "score matrix must have 2 columns, got {}",
                scores.ncols()
            )));
        }
        if scores.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("score matrix has non-finite entries".into()));
        }
        Ok(Self { scores })
    }

    pub fn len(&self) -> usize {
        self.scores.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.nrows() == 0
    }

    /// Score for boundary slot `slot` (0 or 1) at 1-based frame `y`.
    #[inline]
    pub fn get(&self, y: usize, slot: usize) -> f64 {
        self.scores[[y - 1, slot]]
    }

    /// Score of a full segmentation.
    pub fn score(&self, seg: Segmentation) -> f64 {
        self.get(seg.y1, 0) + self.get(seg.y2, 1)
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.scores
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VotType {
    Positive,
    Negative,
}

impl VotType {
    /// Class index used by the tagger: 0 positive, 1 negative.
    pub fn index(self) -> usize {
        match self {
            VotType::Positive => 0,
            VotType::Negative => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            VotType::Positive
        } else {
            VotType::Negative
        }
    }
}

impl std::fmt::Display for VotType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VotType::Positive => "positive",
            VotType::Negative => "negative",
        })
    }
}

/// A measured VOT. Negative type always carries a negative value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VotMeasurement {
    pub vot_ms: f64,
    pub vot_type: VotType,
    pub boundaries: Segmentation,
    /// Tagger probability of `vot_type`.
    pub type_prob: f64,
}

impl VotMeasurement {
    pub fn with_type_prob(mut self, p: f64) -> Self {
        self.type_prob = p;
        self
    }
}
