use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Anything that belongs to a speaker.
pub trait HasSpeaker {
    fn speaker(&self) -> &str;
}

impl HasSpeaker for super::ManifestRecord {
    fn speaker(&self) -> &str {
        &self.speaker_id
    }
}

impl HasSpeaker for super::Utterance {
    fn speaker(&self) -> &str {
        &self.speaker_id
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits<T> {
    pub train: Vec<T>,
    pub valid: Vec<T>,
    pub test: Vec<T>,
}

/// Speaker counts per split by largest remainder, so 10 speakers at
/// 80/10/10 give 8/1/1.
fn allocate(speakers: usize, fractions: [f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = fractions.iter().map(|f| f * speakers as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut left = speakers - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if fractions[i] > 0.0 {
            counts[i] += 1;
            left -= 1;
        }
    }
    // every requested split gets at least one speaker
    for i in 0..3 {
        if fractions[i] > 0.0 && counts[i] == 0 {
            let donor = (0..3).max_by_key(|&j| counts[j]).unwrap();
            if counts[donor] > 1 {
                counts[donor] -= 1;
                counts[i] += 1;
            }
        }
    }
    [counts[0], counts[1], counts[2]]
}

/// Assigns whole speakers to train/validation/test so no speaker appears
/// in two splits. Record order within each split follows the input.
pub fn split_by_speaker<T: HasSpeaker + Clone>(
    records: &[T],
    fractions: [f64; 3],
    seed: u64,
) -> Result<Splits<T>> {
    if fractions.iter().any(|f| !(f.is_finite() && *f >= 0.0))
        || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::Config(format!(
            "split fractions must be nonnegative and sum to 1, got {fractions:?}"
        )));
    }
    let speakers: BTreeSet<&str> = records.iter().map(HasSpeaker::speaker).collect();
    if speakers.len() < 3 {
        return Err(Error::Config(format!(
            "speaker-disjoint splitting needs at least 3 speakers, found {}",
            speakers.len()
        )));
    }
    let mut speakers: Vec<&str> = speakers.into_iter().collect();
    speakers.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let [n_train, n_valid, _] = allocate(speakers.len(), fractions);
    let assignment: BTreeMap<&str, usize> = speakers
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let split = if i < n_train {
                0
            } else if i < n_train + n_valid {
                1
            } else {
                2
            };
            (*s, split)
        })
        .collect();
    let mut out = Splits {
        train: Vec::new(),
        valid: Vec::new(),
        test: Vec::new(),
    };
    for r in records {
        match assignment[r.speaker()] {
            0 => out.train.push(r.clone()),
            1 => out.valid.push(r.clone()),
            _ => out.test.push(r.clone()),
        }
    }
    Ok(out)
}
