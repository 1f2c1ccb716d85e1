use std::fs;
use std::path::Path;

use ndarray::Array1;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::branch::{select_type, AdversaryNet, TaggerNet, BRANCH_WIDTH};
use super::encoder::{EncoderParams, FrameEmbeddings};
use super::heads::{HeadParams, Heads};
use super::lstm::LstmParams;
use crate::error::{Error, Result};
use crate::frontend::NormStats;
use crate::seg::{decode, vot_from_segmentation, FeatureSequence, VotMeasurement, VotType};

pub const MODEL_FORMAT: &str = "votseg-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Every trainable tensor of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub encoder: EncoderParams,
    pub heads: Heads,
    pub tagger: TaggerNet,
    pub adversary: Option<AdversaryNet>,
}

fn push_lstm<'a>(out: &mut Vec<(String, &'a [f64])>, name: String, p: &'a LstmParams) {
    out.push((format!("{name}.w_ih"), p.w_ih.as_slice().unwrap()));
    out.push((format!("{name}.w_hh"), p.w_hh.as_slice().unwrap()));
    out.push((format!("{name}.bias"), p.bias.as_slice().unwrap()));
}

fn push_lstm_mut<'a>(out: &mut Vec<(String, &'a mut [f64])>, name: String, p: &'a mut LstmParams) {
    out.push((format!("{name}.w_ih"), p.w_ih.as_slice_mut().unwrap()));
    out.push((format!("{name}.w_hh"), p.w_hh.as_slice_mut().unwrap()));
    out.push((format!("{name}.bias"), p.bias.as_slice_mut().unwrap()));
}

impl ModelParams {
    pub fn zeros_like(&self) -> Self {
        Self {
            encoder: self.encoder.zeros_like(),
            heads: self.heads.zeros_like(),
            tagger: self.tagger.zeros_like(),
            adversary: self.adversary.as_ref().map(AdversaryNet::zeros_like),
        }
    }

    /// Named flat views of every tensor, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::new();
        for (l, layer) in self.encoder.layers.iter().enumerate() {
            push_lstm(&mut out, format!("encoder.{l}.fwd"), &layer.forward);
            push_lstm(&mut out, format!("encoder.{l}.bwd"), &layer.backward);
        }
        for (name, head) in [("pos", &self.heads.pos), ("neg", &self.heads.neg)] {
            out.push((format!("head.{name}.weight"), head.weight.as_slice().unwrap()));
            out.push((format!("head.{name}.bias"), head.bias.as_slice().unwrap()));
        }
        let mut nets = vec![("tagger", &self.tagger)];
        if let Some(adv) = &self.adversary {
            nets.push(("adversary", &adv.net));
        }
        for (name, net) in nets {
            out.push((format!("{name}.w1"), net.w1.as_slice().unwrap()));
            out.push((format!("{name}.b1"), net.b1.as_slice().unwrap()));
            out.push((format!("{name}.w2"), net.w2.as_slice().unwrap()));
            out.push((format!("{name}.b2"), net.b2.as_slice().unwrap()));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out = Vec::new();
        for (l, layer) in self.encoder.layers.iter_mut().enumerate() {
            push_lstm_mut(&mut out, format!("encoder.{l}.fwd"), &mut layer.forward);
            push_lstm_mut(&mut out, format!("encoder.{l}.bwd"), &mut layer.backward);
        }
        let Heads { pos, neg } = &mut self.heads;
        for (name, head) in [("pos", pos), ("neg", neg)] {
            let HeadParams { weight, bias } = head;
            out.push((format!("head.{name}.weight"), weight.as_slice_mut().unwrap()));
            out.push((format!("head.{name}.bias"), bias.as_slice_mut().unwrap()));
        }
        let mut nets = vec![("tagger", &mut self.tagger)];
        if let Some(adv) = &mut self.adversary {
            nets.push(("adversary", &mut adv.net));
        }
        for (name, net) in nets {
            out.push((format!("{name}.w1"), net.w1.as_slice_mut().unwrap()));
            out.push((format!("{name}.b1"), net.b1.as_slice_mut().unwrap()));
            out.push((format!("{name}.w2"), net.w2.as_slice_mut().unwrap()));
            out.push((format!("{name}.b2"), net.b2.as_slice_mut().unwrap()));
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }
}

/// Architecture and switches fixed at model creation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Feature dimension after normalization drops constant dimensions.
    pub input_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub branch_width: usize,
    /// Corpus labels known to the adversary, in class-index order.
    pub corpora: Vec<String>,
    /// With the tagger off the positive head scores every utterance and
    /// every prediction is reported as positive.
    pub use_tagger: bool,
    pub use_adversary: bool,
}

impl ModelConfig {
    pub fn new(input_dim: usize, hidden: usize) -> Self {
        Self {
            input_dim,
            hidden,
            layers: 2,
            branch_width: BRANCH_WIDTH,
            corpora: Vec::new(),
            use_tagger: true,
            use_adversary: false,
        }
    }
}

/// A trained (or freshly initialized) model with everything needed to run
/// it on raw features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub config: ModelConfig,
    pub norm: NormStats,
    pub lambda: f64,
    pub seed: u64,
    pub params: ModelParams,
}

/// Inference output for one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub measurement: VotMeasurement,
    /// `[P(positive), P(negative)]`
    pub type_probs: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    format_version: u32,
    #[serde(flatten)]
    model: Model,
}

impl Model {
    pub fn init<R: Rng>(config: ModelConfig, norm: NormStats, rng: &mut R) -> Result<Self> {
        if config.hidden == 0 || config.layers == 0 || config.input_dim == 0 {
            return Err(Error::Config(
                "hidden size, layer count and input dimension must be positive".into(),
            ));
        }
        if norm.output_dim() != config.input_dim {
            return Err(Error::Config(format!(
                "normalization emits {} dims but the encoder expects {}",
                norm.output_dim(),
                config.input_dim
            )));
        }
        let embed = 2 * config.hidden;
        let encoder = EncoderParams::init(config.input_dim, config.hidden, config.layers, rng);
        let heads = Heads::init(embed, rng);
        let tagger = TaggerNet::init(embed, config.branch_width, 2, rng);
        let adversary = if config.use_adversary {
            Some(AdversaryNet::init(
                embed,
                config.branch_width,
                config.corpora.len(),
                rng,
            )?)
        } else {
            None
        };
        Ok(Self {
            config,
            norm,
            lambda: 0.0,
            seed: 0,
            params: ModelParams {
                encoder,
                heads,
                tagger,
                adversary,
            },
        })
    }

    pub fn corpus_index(&self, corpus: &str) -> Option<usize> {
        self.config.corpora.iter().position(|c| c == corpus)
    }

    /// Normalizes raw features with the stored training statistics.
    pub fn prepare(&self, x: &FeatureSequence) -> Result<FeatureSequence> {
        self.norm.apply(x)
    }

    pub fn embed(&self, prepared: &FeatureSequence) -> Result<FrameEmbeddings> {
        self.params.encoder.encode(prepared.frames().view())
    }

    /// Tagger probabilities for an encoded utterance; `[1, 0]` when the
    /// tagger is disabled.
    pub fn type_probs(&self, h: &FrameEmbeddings) -> [f64; 2] {
        if self.config.use_tagger {
            let p = self.params.tagger.predict(&h.summarize());
            [p[0], p[1]]
        } else {
            [1.0, 0.0]
        }
    }

    /// Full inference on raw features: normalize, encode, pick the head
    /// the tagger prefers (ties go positive), decode. The adversary is not
    /// consulted.
    pub fn predict(&self, raw: &FeatureSequence) -> Result<Prediction> {
        let x = self.prepare(raw)?;
        self.predict_prepared(&x)
    }

    pub fn predict_prepared(&self, x: &FeatureSequence) -> Result<Prediction> {
        let h = self.embed(x)?;
        let probs = self.type_probs(&h);
        let kind = select_type(&Array1::from(probs.to_vec()));
        let scores = self.params.heads.get(self.scoring_head(kind)).score(&h);
        let seg = decode(&scores)?;
        let measurement = vot_from_segmentation(seg, kind, x.frame_period_ms())
            .with_type_prob(probs[kind.index()]);
        Ok(Prediction {
            measurement,
            type_probs: probs,
        })
    }

    /// Head used to score an utterance believed to be of type `kind`.
    pub fn scoring_head(&self, kind: VotType) -> VotType {
        if self.config.use_tagger {
            kind
        } else {
            VotType::Positive
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        };
        serde_json::to_string(&file).map_err(|e| Error::Data(format!("cannot serialize model: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::Data(format!("model file is not valid JSON: {e}")))?;
        let format = value.get("format").and_then(|v| v.as_str());
        if format != Some(MODEL_FORMAT) {
            return Err(Error::Incompatible(format!(
                "expected format \"{MODEL_FORMAT}\", found {format:?}"
            )));
        }
        let version = value.get("format_version").and_then(|v| v.as_u64());
        if version != Some(MODEL_FORMAT_VERSION as u64) {
            return Err(Error::Incompatible(format!(
                "model format version {version:?} is not supported (this build reads version {MODEL_FORMAT_VERSION})"
            )));
        }
        let file: ModelFile = serde_json::from_value(value)
            .map_err(|e| Error::Data(format!("malformed model file: {e}")))?;
        file.model.validate()?;
        Ok(file.model)
    }

    fn validate(&self) -> Result<()> {
        let c = &self.config;
        let enc = &self.params.encoder;
        if enc.layers.len() != c.layers
            || enc.input_dim() != c.input_dim
            || enc.hidden() != c.hidden
            || self.norm.output_dim() != c.input_dim
            || c.use_adversary != self.params.adversary.is_some()
        {
            return Err(Error::Data(
                "model file tensors disagree with its declared configuration".into(),
            ));
        }
        if !self.params.is_finite() {
            return Err(Error::Data("model file contains non-finite parameters".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::init::uniform;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny(adversary: bool) -> Model {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut cfg = ModelConfig::new(3, 4);
        cfg.branch_width = 5;
        cfg.corpora = vec!["a".into(), "b".into()];
        cfg.use_adversary = adversary;
        Model::init(cfg, NormStats::identity(3), &mut rng).unwrap()
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = tiny(true);
        let back = Model::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn version_mismatch_fails_loudly() {
        let m = tiny(false);
        let text = m.to_json().unwrap().replacen(
            &format!("\"format_version\":{MODEL_FORMAT_VERSION}"),
            "\"format_version\":999",
            1,
        );
        assert!(matches!(Model::from_json(&text), Err(Error::Incompatible(_))));
    }

    #[test]
    fn tensor_views_cover_all_parameters() {
        let mut m = tiny(true);
        let n = m.params.num_params();
        let named: usize = m.params.tensors_mut().iter().map(|(_, t)| t.len()).sum();
        assert_eq!(n, named);
        let names: Vec<String> = m.params.tensors().into_iter().map(|(n, _)| n).collect();
        assert!(names.iter().any(|n| n.starts_with("adversary")));
    }

    #[test]
    fn prediction_is_consistent() {
        let m = tiny(false);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = FeatureSequence::new(uniform((12, 3), 1.0, &mut rng), 1.0).unwrap();
        let p = m.predict(&x).unwrap();
        let meas = p.measurement;
        assert_eq!(
            meas.vot_ms.abs(),
            (meas.boundaries.y2 - meas.boundaries.y1) as f64
        );
        assert_eq!(meas.vot_type == VotType::Negative, meas.vot_ms < 0.0);
        assert!((p.type_probs[0] + p.type_probs[1] - 1.0).abs() < 1e-12);
    }
}
