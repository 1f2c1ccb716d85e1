use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::encoder::FrameEmbeddings;
use super::init::{uniform, uniform_vec};
use crate::seg::{ScoreMatrix, VotType};

/// Affine map from a frame embedding to the two boundary-slot scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadParams {
    /// `2 x 2h`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl HeadParams {
    pub fn init<R: Rng>(embed: usize, rng: &mut R) -> Self {
        let a = 1.0 / (embed as f64).sqrt();
        Self {
            weight: uniform((2, embed), a, rng),
            bias: uniform_vec(2, a, rng),
        }
    }

    pub fn zeros(embed: usize) -> Self {
        Self {
            weight: Array2::zeros((2, embed)),
            bias: Array1::zeros(2),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.weight.ncols())
    }

    pub fn score(&self, h: &FrameEmbeddings) -> ScoreMatrix {
        let mut s = h.as_array().dot(&self.weight.t());
        s += &self.bias;
        ScoreMatrix::new(s).expect("finite embeddings give finite scores")
    }

    /// Backward pass for a sparse score gradient `(1-based frame, slot, coef)`.
    pub fn backward(
        &self,
        h: &FrameEmbeddings,
        d_scores: &[(usize, usize, f64)],
        grad: &mut HeadParams,
        d_frames: &mut Array2<f64>,
    ) {
        let emb = h.as_array();
        for &(y, slot, coef) in d_scores {
            let t = y - 1;
            grad.bias[slot] += coef;
            grad.weight
                .row_mut(slot)
                .scaled_add(coef, &emb.row(t));
            d_frames.row_mut(t).scaled_add(coef, &self.weight.row(slot));
        }
    }
}

/// The two type-specific scoring heads over a shared encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heads {
    pub pos: HeadParams,
    pub neg: HeadParams,
}

impl Heads {
    pub fn init<R: Rng>(embed: usize, rng: &mut R) -> Self {
        Self {
            pos: HeadParams::init(embed, rng),
            neg: HeadParams::init(embed, rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            pos: self.pos.zeros_like(),
            neg: self.neg.zeros_like(),
        }
    }

    pub fn get(&self, kind: VotType) -> &HeadParams {
        match kind {
            VotType::Positive => &self.pos,
            VotType::Negative => &self.neg,
        }
    }

    pub fn get_mut(&mut self, kind: VotType) -> &mut HeadParams {
        match kind {
            VotType::Positive => &mut self.pos,
            VotType::Negative => &mut self.neg,
        }
    }
}

/// Boundary scores of every frame under the chosen head.
pub fn score_frames(h: &FrameEmbeddings, kind: VotType, heads: &Heads) -> ScoreMatrix {
    heads.get(kind).score(h)
}
