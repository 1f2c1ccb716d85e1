use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seg::FeatureSequence;

/// Below this standard deviation a dimension counts as constant.
const MIN_STD: f64 = 1e-12;

/// Per-dimension standardization fit on a training split. Constant
/// dimensions are dropped, so the output dimension can be smaller than the
/// input dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub input_dim: usize,
    /// Input dimensions that survive, ascending.
    pub kept: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    /// Keeps every dimension unchanged.
    pub fn identity(dim: usize) -> Self {
        Self {
            input_dim: dim,
            kept: (0..dim).collect(),
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn output_dim(&self) -> usize {
        self.kept.len()
    }

    pub fn apply(&self, x: &FeatureSequence) -> Result<FeatureSequence> {
        apply_norm(x, self)
    }
}

/// Fits mean and standard deviation over all frames of all sequences.
pub fn fit_norm(train: &[FeatureSequence]) -> Result<NormStats> {
    let first = train
        .first()
        .ok_or_else(|| Error::Data("cannot fit normalization on an empty training set".into()))?;
    let d = first.dim();
    if let Some(bad) = train.iter().position(|x| x.dim() != d) {
        return Err(Error::Data(format!(
            "feature dimension mismatch: sequence {bad} has {} dims, expected {d}",
            train[bad].dim()
        )));
    }
    let n: usize = train.iter().map(FeatureSequence::len).sum();
    let mut mean = vec![0.0; d];
    for x in train {
        for row in x.frames().rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; d];
    for x in train {
        for row in x.frames().rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
    }
    let mut stats = NormStats {
        input_dim: d,
        kept: Vec::new(),
        mean: Vec::new(),
        std: Vec::new(),
    };
    for j in 0..d {
        let sd = (var[j] / n as f64).sqrt();
        if sd < MIN_STD {
            log::warn!("feature dimension {j} is constant on the training set; dropping it");
            continue;
        }
        stats.kept.push(j);
        stats.mean.push(mean[j]);
        stats.std.push(sd);
    }
    if stats.kept.is_empty() {
        return Err(Error::Data("every feature dimension is constant".into()));
    }
    Ok(stats)
}

pub fn apply_norm(x: &FeatureSequence, stats: &NormStats) -> Result<FeatureSequence> {
    if x.dim() != stats.input_dim {
        return Err(Error::Contract(format!(
            "normalization expects {} dims, got {}",
            stats.input_dim,
            x.dim()
        )));
    }
    let frames = x.frames();
    let out = Array2::from_shape_fn((x.len(), stats.kept.len()), |(t, k)| {
        (frames[[t, stats.kept[k]]] - stats.mean[k]) / stats.std[k]
    });
    FeatureSequence::new(out, x.frame_period_ms())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn seq(a: Array2<f64>) -> FeatureSequence {
        FeatureSequence::new(a, 1.0).unwrap()
    }

    #[test]
    fn empty_training_set() {
        assert!(matches!(fit_norm(&[]), Err(Error::Data(_))));
    }

    #[test]
    fn constant_dimension_dropped() {
        let a = seq(array![[1.0, 5.0, 2.0], [2.0, 5.0, 4.0], [3.0, 5.0, 9.0]]);
        let s = fit_norm(&[a.clone()]).unwrap();
        assert_eq!(s.kept, vec![0, 2]);
        assert_eq!(s.apply(&a).unwrap().dim(), 2);
    }

    #[test]
    fn standardizes_training_data() {
        let a = seq(array![[1.0, -3.0], [2.0, 0.5], [7.0, 4.0]]);
        let b = seq(array![[0.0, 1.0], [10.0, 2.0]]);
        let s = fit_norm(&[a.clone(), b.clone()]).unwrap();
        let na = s.apply(&a).unwrap();
        let nb = s.apply(&b).unwrap();
        for j in 0..2 {
            let vals: Vec<f64> = na
                .frames()
                .column(j)
                .iter()
                .chain(nb.frames().column(j).iter())
                .copied()
                .collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let v = vals.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / vals.len() as f64;
            assert!(m.abs() < 1e-6);
            assert!((v - 1.0).abs() < 1e-4);
        }
    }
}
