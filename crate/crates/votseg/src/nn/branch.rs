//! Small classifiers on the utterance summary: the VOT-type tagger and the
//! corpus adversary.

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::init::{uniform, uniform_vec};
use crate::error::{Error, Result};

/// Hidden width of both branch networks.
pub const BRANCH_WIDTH: usize = 50;

/// `input -> affine -> relu -> affine -> softmax`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierNet {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct ClassifierPass {
    pre: Array1<f64>,
    act: Array1<f64>,
    pub probs: Array1<f64>,
}

pub fn softmax(logits: &Array1<f64>) -> Array1<f64> {
    let m = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let e = logits.mapv(|v| (v - m).exp());
    let z = e.sum();
    e / z
}

impl ClassifierNet {
    pub fn init<R: Rng>(input: usize, width: usize, classes: usize, rng: &mut R) -> Self {
        let a1 = 1.0 / (input as f64).sqrt();
        let a2 = 1.0 / (width as f64).sqrt();
        Self {
            w1: uniform((width, input), a1, rng),
            b1: uniform_vec(width, a1, rng),
            w2: uniform((classes, width), a2, rng),
            b2: uniform_vec(classes, a2, rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            w1: Array2::zeros(self.w1.raw_dim()),
            b1: Array1::zeros(self.b1.raw_dim()),
            w2: Array2::zeros(self.w2.raw_dim()),
            b2: Array1::zeros(self.b2.raw_dim()),
        }
    }

    pub fn classes(&self) -> usize {
        self.w2.nrows()
    }

    pub fn forward(&self, summary: &Array1<f64>) -> ClassifierPass {
        let pre = self.w1.dot(summary) + &self.b1;
        let act = pre.mapv(|v| v.max(0.0));
        let logits = self.w2.dot(&act) + &self.b2;
        ClassifierPass {
            pre,
            act,
            probs: softmax(&logits),
        }
    }

    pub fn predict(&self, summary: &Array1<f64>) -> Array1<f64> {
        self.forward(summary).probs
    }

    /// Negative log-likelihood of `target` and its backward pass, scaled by
    /// `weight`. Returns the unscaled loss and the scaled gradient on the
    /// summary.
    pub fn nll_backward(
        &self,
        summary: &Array1<f64>,
        pass: &ClassifierPass,
        target: usize,
        weight: f64,
        grad: &mut ClassifierNet,
    ) -> (f64, Array1<f64>) {
        let loss = -pass.probs[target].ln();
        let mut d_logits = pass.probs.clone();
        d_logits[target] -= 1.0;
        d_logits *= weight;

        grad.b2 += &d_logits;
        for (k, &dl) in d_logits.iter().enumerate() {
            grad.w2.row_mut(k).scaled_add(dl, &pass.act);
        }
        let mut d_pre = self.w2.t().dot(&d_logits);
        d_pre.zip_mut_with(&pass.pre, |d, &p| {
            if p <= 0.0 {
                *d = 0.0
            }
        });
        grad.b1 += &d_pre;
        for (j, &dp) in d_pre.iter().enumerate() {
            if dp != 0.0 {
                grad.w1.row_mut(j).scaled_add(dp, summary);
            }
        }
        (loss, self.w1.t().dot(&d_pre))
    }
}

/// VOT-type tagger: probabilities `[P(positive), P(negative)]`.
pub type TaggerNet = ClassifierNet;

/// Corpus classifier behind a gradient-reversal gate. The gate is the
/// identity on the forward pass and negates the gradient that flows back
/// into the encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryNet {
    pub net: ClassifierNet,
}

impl AdversaryNet {
    pub fn init<R: Rng>(input: usize, width: usize, corpora: usize, rng: &mut R) -> Result<Self> {
        if corpora < 2 {
            return Err(Error::Config(format!(
                "the corpus adversary needs at least 2 corpora, got {corpora}"
            )));
        }
        Ok(Self {
            net: ClassifierNet::init(input, width, corpora, rng),
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            net: self.net.zeros_like(),
        }
    }

    pub fn predict(&self, summary: &Array1<f64>) -> Array1<f64> {
        self.net.predict(summary)
    }

    /// Weighted NLL backward through the branch. The returned summary
    /// gradient has already passed the reversal gate when `reverse` is set.
    pub fn nll_backward(
        &self,
        summary: &Array1<f64>,
        pass: &ClassifierPass,
        target: usize,
        weight: f64,
        reverse: bool,
        grad: &mut AdversaryNet,
    ) -> (f64, Array1<f64>) {
        let (loss, d) = self.net.nll_backward(summary, pass, target, weight, &mut grad.net);
        (loss, if reverse { -d } else { d })
    }
}

/// Head selection rule: positive unless the tagger strictly prefers negative.
pub fn select_type(probs: &Array1<f64>) -> crate::seg::VotType {
    if probs[1] > probs[0] {
        crate::seg::VotType::Negative
    } else {
        crate::seg::VotType::Positive
    }
}
