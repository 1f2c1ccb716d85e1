//! Seeded synthetic corpora with planted stop-consonant structure.
//!
//! Designated feature dimensions:
//!
//! | dim | content |
//! |-----|---------|
//! | 0 | low-band energy: 2.0 from prevoicing onset, 3.0 from vowel onset |
//! | 1 | high-band energy: burst transient 4.0, 2.5, 1.5, then aspiration 1.0 until the vowel (positive only) |
//! | 2, 3 | periodic voicing pattern (sine/cosine, period 8 frames): amplitude 1.0 while prevoiced, 2.0 in the vowel |
//! | 4 | overall energy: 1.0 while prevoiced, 2.0 during the burst, 1.0 while aspirated, 3.0 in the vowel |
//! | 5.. | distractors, zero before noise |
//!
//! Every frame gets Gaussian noise, then the corpus gain and offset:
//! `x = gain * (clean + noise) + offset`.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{write_manifest, Annotation, ManifestRecord, Source, Utterance};
use crate::error::{Error, Result};
use crate::frontend::write_precomputed;
use crate::seg::{FeatureSequence, VotType};

pub const MIN_SEGMENT_FRAMES: usize = 10;
/// Number of dimensions that carry planted structure.
pub const PLANTED_DIMS: usize = 5;
const VOICING_PERIOD: f64 = 8.0;

/// Per-corpus recording signature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nuisance {
    pub gain: f64,
    pub offset: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_utterances: usize,
    pub negative_fraction: f64,
    pub min_frames: usize,
    pub max_frames: usize,
    pub dim: usize,
    pub corpora: usize,
    pub speakers_per_corpus: usize,
    /// Standard deviation of the random per-corpus offsets.
    pub offset_scale: f64,
    /// Per-corpus gains are drawn uniformly from this range.
    pub gain_range: (f64, f64),
    /// Explicit signatures; overrides `offset_scale` and `gain_range`.
    pub nuisance: Option<Vec<Nuisance>>,
    pub noise_sd: f64,
    pub seed: u64,
    /// Prefix for utterance, corpus and speaker ids.
    pub id_prefix: String,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_utterances: 1000,
            negative_fraction: 0.2,
            min_frames: 100,
            max_frames: 300,
            dim: 8,
            corpora: 1,
            speakers_per_corpus: 20,
            offset_scale: 1.0,
            gain_range: (0.8, 1.25),
            nuisance: None,
            noise_sd: 0.5,
            seed: 0,
            id_prefix: String::new(),
        }
    }
}

impl SyntheticConfig {
    fn validate(&self) -> Result<()> {
        if !(self.negative_fraction > 0.0 && self.negative_fraction < 1.0) {
            return Err(Error::Config(format!(
                "negative_fraction must lie strictly between 0 and 1, got {}",
                self.negative_fraction
            )));
        }
        if self.dim < PLANTED_DIMS {
            return Err(Error::Config(format!(
                "synthetic features need at least {PLANTED_DIMS} dims, got {}",
                self.dim
            )));
        }
        if self.min_frames < 80 || self.min_frames > self.max_frames {
            return Err(Error::Config(format!(
                "frame range must satisfy 80 <= min <= max, got {}..{}",
                self.min_frames, self.max_frames
            )));
        }
        if self.corpora == 0 || self.speakers_per_corpus == 0 || self.n_utterances == 0 {
            return Err(Error::Config(
                "corpora, speakers_per_corpus and n_utterances must be positive".into(),
            ));
        }
        if !(self.noise_sd >= 0.0 && self.offset_scale >= 0.0) {
            return Err(Error::Config("noise_sd and offset_scale must be nonnegative".into()));
        }
        if let Some(n) = &self.nuisance {
            if n.len() != self.corpora || n.iter().any(|c| c.offset.len() != self.dim) {
                return Err(Error::Config(
                    "explicit nuisance needs one entry per corpus with one offset per dim".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn corpus_id(&self, c: usize) -> String {
        format!("{}corpus{c}", self.id_prefix)
    }
}

/// Planted boundaries as 0-based frame indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Planted {
    pub t_pv: Option<usize>,
    pub t_b: usize,
    pub t_v: usize,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub config: SyntheticConfig,
    pub nuisance: Vec<Nuisance>,
    pub utterances: Vec<Utterance>,
    pub planted: Vec<Planted>,
}

fn draw_boundaries<R: Rng>(rng: &mut R, t: usize, negative: bool) -> Planted {
    let m = MIN_SEGMENT_FRAMES;
    if negative {
        let lag = rng.random_range(m..=25);
        let max_pv = 100.min(t - 2 * m - lag - 1);
        let pv_len = rng.random_range(m..=max_pv);
        let t_pv = rng.random_range(m..=t - m - pv_len - lag);
        let t_b = t_pv + pv_len;
        Planted {
            t_pv: Some(t_pv),
            t_b,
            t_v: t_b + lag,
        }
    } else {
        let vot = rng.random_range(m..=80.min(t - 2 * m));
        let t_b = rng.random_range(m..=t - m - vot);
        Planted {
            t_pv: None,
            t_b,
            t_v: t_b + vot,
        }
    }
}

/// Noise-free planted features for one utterance.
pub fn clean_features(t: usize, dim: usize, p: Planted) -> Array2<f64> {
    let mut x = Array2::zeros((t, dim));
    let phase = |f: usize| 2.0 * std::f64::consts::PI * f as f64 / VOICING_PERIOD;
    for f in 0..t {
        let prevoiced = p.t_pv.is_some_and(|pv| f >= pv && f < p.t_v);
        let vowel = f >= p.t_v;
        let voicing = if vowel {
            2.0
        } else if prevoiced {
            1.0
        } else {
            0.0
        };
        if vowel {
            x[[f, 0]] = 3.0;
            x[[f, 4]] = 3.0;
        } else if prevoiced {
            x[[f, 0]] = 2.0;
            x[[f, 4]] = 1.0;
        }
        x[[f, 2]] = voicing * phase(f).sin();
        x[[f, 3]] = voicing * phase(f).cos();
        if f >= p.t_b && f < p.t_v {
            let k = f - p.t_b;
            let burst = [4.0, 2.5, 1.5];
            if k < 3 {
                x[[f, 1]] = burst[k];
                x[[f, 4]] = x[[f, 4]].max(2.0);
            } else if p.t_pv.is_none() {
                x[[f, 1]] = 1.0;
                x[[f, 4]] = 1.0;
            }
        }
    }
    x
}

/// Generates a corpus; a pure function of the config (including its seed).
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<SyntheticCorpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let nuisance = match &config.nuisance {
        Some(n) => n.clone(),
        None => {
            let offset = Normal::new(0.0, config.offset_scale.max(f64::MIN_POSITIVE))
                .expect("scale is positive");
            (0..config.corpora)
                .map(|_| {
                    let (lo, hi) = config.gain_range;
                    let gain = if hi > lo { rng.random_range(lo..hi) } else { lo };
                    let offset = (0..config.dim)
                        .map(|_| {
                            if config.offset_scale > 0.0 {
                                offset.sample(&mut rng)
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    Nuisance { gain, offset }
                })
                .collect()
        }
    };
    let noise = Normal::new(0.0, config.noise_sd.max(f64::MIN_POSITIVE)).expect("sd is positive");

    let width = (config.n_utterances.max(1) as f64).log10().floor() as usize + 1;
    let mut utterances = Vec::with_capacity(config.n_utterances);
    let mut planted = Vec::with_capacity(config.n_utterances);
    for i in 0..config.n_utterances {
        let c = i % config.corpora;
        let speaker = rng.random_range(0..config.speakers_per_corpus);
        let t = rng.random_range(config.min_frames..=config.max_frames);
        let negative = rng.random_bool(config.negative_fraction);
        let p = draw_boundaries(&mut rng, t, negative);
        let mut x = clean_features(t, config.dim, p);
        let sig = &nuisance[c];
        for (j, v) in x.indexed_iter_mut().map(|((_, j), v)| (j, v)) {
            let n = if config.noise_sd > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            *v = sig.gain * (*v + n) + sig.offset[j];
        }
        let annotation = Annotation {
            t_pv: p.t_pv.map(|f| f as f64),
            t_b: p.t_b as f64,
            t_v: p.t_v as f64,
        };
        debug_assert_eq!(annotation.vot_type() == VotType::Negative, negative);
        utterances.push(Utterance {
            id: format!("{}utt{:0width$}", config.id_prefix, i),
            corpus_id: config.corpus_id(c),
            speaker_id: format!("{}c{c}_spk{speaker}", config.id_prefix),
            features: FeatureSequence::new(x, 1.0)?,
            annotation: Some(annotation),
        });
        planted.push(p);
    }
    Ok(SyntheticCorpus {
        config: config.clone(),
        nuisance,
        utterances,
        planted,
    })
}

#[derive(Serialize)]
struct SynthInfo<'a> {
    seed: u64,
    config: &'a SyntheticConfig,
    nuisance: &'a [Nuisance],
}

impl SyntheticCorpus {
    /// Writes `features/<id>.txt` for every utterance, `manifest.jsonl`,
    /// and `synth_info.json` (seed, config, drawn nuisances) under `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<ManifestRecord>> {
        let feat_dir = dir.join("features");
        fs::create_dir_all(&feat_dir).map_err(|e| Error::io(&feat_dir, e))?;
        let mut records = Vec::with_capacity(self.utterances.len());
        for u in &self.utterances {
            let path = feat_dir.join(format!("{}.txt", u.id));
            write_precomputed(&path, &u.features)?;
            records.push(ManifestRecord {
                utterance_id: u.id.clone(),
                corpus_id: u.corpus_id.clone(),
                speaker_id: u.speaker_id.clone(),
                source: Source::Features(path),
                frame_period_ms: u.features.frame_period_ms(),
                annotation: u.annotation,
            });
        }
        write_manifest(&dir.join("manifest.jsonl"), &records)?;
        let info = SynthInfo {
            seed: self.config.seed,
            config: &self.config,
            nuisance: &self.nuisance,
        };
        let info_path = dir.join("synth_info.json");
        fs::write(&info_path, serde_json::to_string_pretty(&info).expect("serializable"))
            .map_err(|e| Error::io(&info_path, e))?;
        Ok(records)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_fraction() {
        for f in [0.0, 1.0, -0.1, 1.5] {
            let cfg = SyntheticConfig {
                negative_fraction: f,
                ..Default::default()
            };
            assert!(matches!(generate_synthetic(&cfg), Err(Error::Config(_))));
        }
    }

    #[test]
    fn annotations_are_ordered_with_min_gaps() {
        let cfg = SyntheticConfig {
            n_utterances: 500,
            seed: 4,
            ..Default::default()
        };
        let c = generate_synthetic(&cfg).unwrap();
        for (u, p) in c.utterances.iter().zip(&c.planted) {
            let a = u.annotation.unwrap();
            assert!(a.validate(Some(u.features.len() as f64)).is_ok());
            if let Some(pv) = p.t_pv {
                assert!(p.t_b - pv >= MIN_SEGMENT_FRAMES && pv >= MIN_SEGMENT_FRAMES);
            } else {
                assert!(p.t_b >= MIN_SEGMENT_FRAMES);
            }
            assert!(p.t_v - p.t_b >= MIN_SEGMENT_FRAMES);
            assert!(u.features.len() - p.t_v >= MIN_SEGMENT_FRAMES);
        }
    }

    #[test]
    fn pure_function_of_seed() {
        let cfg = SyntheticConfig {
            n_utterances: 20,
            corpora: 3,
            seed: 11,
            ..Default::default()
        };
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        assert_eq!(a.utterances, b.utterances);
        let c = generate_synthetic(&SyntheticConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(a.utterances, c.utterances);
    }
}
