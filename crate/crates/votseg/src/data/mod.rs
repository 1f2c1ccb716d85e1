//! Manifests, annotations, speaker-disjoint splits and synthetic corpora.

mod manifest;
mod split;
pub mod synthetic;

pub use manifest::{
    format_manifest, load_manifest, parse_manifest, write_manifest, Annotation, ManifestRecord,
    Source,
};
pub use split::{split_by_speaker, HasSpeaker, Splits};
pub use synthetic::{generate_synthetic, Nuisance, SyntheticConfig, SyntheticCorpus};

use crate::error::{Error, Result};
use crate::frontend::FeatureSpec;
use crate::seg::{FeatureSequence, Segmentation, VotType};

/// An utterance with its features loaded into memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub corpus_id: String,
    pub speaker_id: String,
    pub features: FeatureSequence,
    pub annotation: Option<Annotation>,
}

impl Utterance {
    pub fn annotation(&self) -> Result<&Annotation> {
        self.annotation
            .as_ref()
            .ok_or_else(|| Error::Data(format!("{}: no gold annotation", self.id)))
    }

    pub fn vot_type(&self) -> Option<VotType> {
        self.annotation.map(|a| a.vot_type())
    }

    /// Gold segmentation on this utterance's frame grid.
    pub fn gold_segmentation(&self) -> Result<Segmentation> {
        self.annotation()?
            .segmentation(self.features.frame_period_ms(), self.features.len())
            .map_err(|e| Error::Data(format!("{}: {e}", self.id)))
    }
}

/// Loads the features of every record.
pub fn load_utterances(records: &[ManifestRecord], spec: &FeatureSpec) -> Result<Vec<Utterance>> {
    records
        .iter()
        .map(|r| {
            Ok(Utterance {
                id: r.utterance_id.clone(),
                corpus_id: r.corpus_id.clone(),
                speaker_id: r.speaker_id.clone(),
                features: r.load_features(spec)?,
                annotation: r.annotation,
            })
        })
        .collect()
}
