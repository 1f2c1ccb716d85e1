use crate::error::{Error, Result};
use crate::nn::ModelParams;
use crate::seg::VotType;

const ADAGRAD_EPS: f64 = 1e-10;

/// Adagrad: every parameter keeps its own sum of squared gradients.
#[derive(Debug, Clone)]
pub struct Adagrad {
    lr: f64,
    accum: ModelParams,
}

impl Adagrad {
    pub fn new(lr: f64, params: &ModelParams) -> Self {
        Self {
            lr,
            accum: params.zeros_like(),
        }
    }

    pub fn step(&mut self, params: &mut ModelParams, grad: &ModelParams) {
        let lr = self.lr;
        for (((_, p), (_, g)), (_, a)) in params
            .tensors_mut()
            .into_iter()
            .zip(grad.tensors())
            .zip(self.accum.tensors_mut())
        {
            for ((p, &g), a) in p.iter_mut().zip(g).zip(a.iter_mut()) {
                *a += g * g;
                *p -= lr * g / (a.sqrt() + ADAGRAD_EPS);
            }
        }
    }
}

pub fn zero_grad(grad: &mut ModelParams) {
    for (_, t) in grad.tensors_mut() {
        t.fill(0.0);
    }
}

/// Per-example draw probabilities proportional to the inverse frequency
/// of the example's class, so both classes are drawn equally often.
pub fn sampling_weights(labels: &[VotType]) -> Result<Vec<f64>> {
    let pos = labels.iter().filter(|&&l| l == VotType::Positive).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Config(format!(
            "class-balanced sampling needs both VOT types, got {pos} positive and {neg} negative"
        )));
    }
    Ok(labels
        .iter()
        .map(|l| match l {
            VotType::Positive => 0.5 / pos as f64,
            VotType::Negative => 0.5 / neg as f64,
        })
        .collect())
}

/// Tracks the best validation loss and says when to stop: after
/// `patience + 1` epochs without improvement.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            since_best: 0,
        }
    }

    /// Records an epoch's validation loss; true if it is a new best.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> bool {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = epoch;
            self.since_best = 0;
            true
        } else {
            self.since_best += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.since_best > self.patience
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best(&self) -> f64 {
        self.best
    }
}
