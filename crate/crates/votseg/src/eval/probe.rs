use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::softmax;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub accuracy: f64,
    /// Majority-class share of the evaluation set.
    pub chance: f64,
}

const PROBE_STEPS: usize = 400;
const PROBE_LR: f64 = 0.5;
const PROBE_L2: f64 = 1e-4;

/// Fits a multinomial logistic regression on `train` rows (labels in
/// `0..classes`) and reports its accuracy on `test`. Inputs are
/// standardized with the training statistics.
pub fn corpus_probe(
    train: &Array2<f64>,
    train_labels: &[usize],
    test: &Array2<f64>,
    test_labels: &[usize],
) -> Result<ProbeResult> {
    if train.nrows() != train_labels.len() || test.nrows() != test_labels.len() {
        return Err(Error::Contract("probe rows and labels disagree".into()));
    }
    if train.nrows() == 0 || test.nrows() == 0 || train.ncols() != test.ncols() {
        return Err(Error::Contract("probe needs non-empty, same-width train and test sets".into()));
    }
    let classes = train_labels.iter().chain(test_labels).max().unwrap() + 1;
    let mean = train.mean_axis(Axis(0)).unwrap();
    let sd = train.std_axis(Axis(0), 0.0).mapv(|s| if s > 1e-12 { s } else { 1.0 });
    let standardize = |x: &Array2<f64>| (x - &mean) / &sd;
    let xtr = standardize(train);
    let xte = standardize(test);

    let d = xtr.ncols();
    let n = xtr.nrows() as f64;
    let mut w = Array2::<f64>::zeros((classes, d));
    let mut b = Array1::<f64>::zeros(classes);
    for _ in 0..PROBE_STEPS {
        let mut gw = &w * PROBE_L2;
        let mut gb = Array1::<f64>::zeros(classes);
        for (row, &y) in xtr.rows().into_iter().zip(train_labels) {
            let mut p = softmax(&(w.dot(&row) + &b));
            p[y] -= 1.0;
            for k in 0..classes {
                gw.row_mut(k).scaled_add(p[k] / n, &row);
            }
            gb.scaled_add(1.0 / n, &p);
        }
        w.scaled_add(-PROBE_LR, &gw);
        b.scaled_add(-PROBE_LR, &gb);
    }

    let correct = xte
        .rows()
        .into_iter()
        .zip(test_labels)
        .filter(|(row, &y)| {
            let s = w.dot(row) + &b;
            let best = s
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc })
                .0;
            best == y
        })
        .count();
    let mut counts = vec![0usize; classes];
    for &y in test_labels {
        counts[y] += 1;
    }
    Ok(ProbeResult {
        accuracy: correct as f64 / test_labels.len() as f64,
        chance: *counts.iter().max().unwrap() as f64 / test_labels.len() as f64,
    })
}

/// Pooled k-fold version of [`corpus_probe`]: row `i` is held out in fold
/// `i % folds`. Accuracy and chance are both taken over all rows.
pub fn cross_validated_probe(x: &Array2<f64>, labels: &[usize], folds: usize) -> Result<ProbeResult> {
    if folds < 2 || x.nrows() < folds {
        return Err(Error::Contract(format!(
            "cross-validated probe needs 2 <= folds <= rows, got {folds} folds for {} rows",
            x.nrows()
        )));
    }
    if x.nrows() != labels.len() {
        return Err(Error::Contract("probe rows and labels disagree".into()));
    }
    let mut correct = 0.0;
    for k in 0..folds {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..x.nrows()).partition(|i| i % folds == k);
        let pick = |idx: &[usize]| idx.iter().map(|&i| labels[i]).collect::<Vec<_>>();
        let r = corpus_probe(
            &x.select(Axis(0), &train),
            &pick(&train),
            &x.select(Axis(0), &test),
            &pick(&test),
        )?;
        correct += r.accuracy * test.len() as f64;
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; classes];
    for &y in labels {
        counts[y] += 1;
    }
    Ok(ProbeResult {
        accuracy: correct / x.nrows() as f64,
        chance: *counts.iter().max().unwrap() as f64 / x.nrows() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blobs(rng: &mut ChaCha8Rng, n: usize, sep: f64) -> (Array2<f64>, Vec<usize>) {
        let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let x = Array2::from_shape_fn((n, 4), |(i, j)| {
            let center = if j == labels[i] { sep } else { 0.0 };
            center + rng.random_range(-1.0..1.0)
        });
        (x, labels)
    }

    #[test]
    fn separable_classes_are_found() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (a, la) = blobs(&mut rng, 150, 4.0);
        let (b, lb) = blobs(&mut rng, 90, 4.0);
        let r = corpus_probe(&a, &la, &b, &lb).unwrap();
        assert!(r.accuracy > 0.95);
        assert!((r.chance - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn indistinguishable_classes_stay_near_chance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (a, la) = blobs(&mut rng, 300, 0.0);
        let (b, lb) = blobs(&mut rng, 300, 0.0);
        let r = corpus_probe(&a, &la, &b, &lb).unwrap();
        assert!(r.accuracy < r.chance + 0.15);
    }

    #[test]
    fn cross_validated_probe_pools_folds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (x, l) = blobs(&mut rng, 120, 4.0);
        let r = cross_validated_probe(&x, &l, 5).unwrap();
        assert!(r.accuracy > 0.95);
        assert!((r.chance - 1.0 / 3.0).abs() < 1e-12);
        let (x, l) = blobs(&mut rng, 240, 0.0);
        let r = cross_validated_probe(&x, &l, 5).unwrap();
        assert!(r.accuracy < r.chance + 0.15);
        assert!(cross_validated_probe(&x, &l, 1).is_err());
    }
}
