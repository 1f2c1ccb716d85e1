use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::{self, FeatureSpec, FRAME_PERIOD_MS, SAMPLE_RATE_HZ};
use crate::seg::{FeatureSequence, Segmentation, VotType};

/// Manual boundary times in milliseconds from the start of the utterance
/// window. `t_pv` is present only for prevoiced (negative VOT) tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_pv: Option<f64>,
    pub t_b: f64,
    pub t_v: f64,
}

impl Annotation {
    /// Builds from the `-1`-sentinel convention used by legacy tools.
    pub fn from_sentinel(t_pv: f64, t_b: f64, t_v: f64) -> Self {
        Self {
            t_pv: if t_pv == -1.0 { None } else { Some(t_pv) },
            t_b,
            t_v,
        }
    }

    pub fn t_pv_or_sentinel(&self) -> f64 {
        self.t_pv.unwrap_or(-1.0)
    }

    pub fn vot_type(&self) -> VotType {
        if self.t_pv.is_some() {
            VotType::Negative
        } else {
            VotType::Positive
        }
    }

    /// Signed VOT: `t_v - t_b` when positive, `t_pv - t_b` when prevoiced.
    pub fn vot_ms(&self) -> f64 {
        match self.t_pv {
            Some(pv) => pv - self.t_b,
            None => self.t_v - self.t_b,
        }
    }

    /// Boundary times in ms of the segmentation for this token's type.
    pub fn boundary_times(&self) -> (f64, f64) {
        match self.t_pv {
            Some(pv) => (pv, self.t_b),
            None => (self.t_b, self.t_v),
        }
    }

    pub fn validate(&self, duration_ms: Option<f64>) -> std::result::Result<(), String> {
        let times = [self.t_pv, Some(self.t_b), Some(self.t_v)];
        if times.iter().flatten().any(|t| !t.is_finite()) {
            return Err("non-finite annotation time".into());
        }
        if let Some(pv) = self.t_pv {
            if !(pv < self.t_b) {
                return Err(format!("t_pv ({pv}) must precede t_b ({})", self.t_b));
            }
        }
        if !(self.t_b < self.t_v) {
            return Err(format!("t_b ({}) must precede t_v ({})", self.t_b, self.t_v));
        }
        let lo = self.t_pv.unwrap_or(self.t_b);
        if lo < 0.0 {
            return Err(format!("annotation time {lo} is negative"));
        }
        if let Some(d) = duration_ms {
            if self.t_v > d {
                return Err(format!("t_v ({}) exceeds the utterance duration {d} ms", self.t_v));
            }
        }
        Ok(())
    }

    /// Gold segmentation on a `t`-frame grid. Frame `y` starts at
    /// `(y - 1) * period` ms.
    pub fn segmentation(&self, frame_period_ms: f64, t: usize) -> Result<Segmentation> {
        let to_frame = |ms: f64| ((ms / frame_period_ms).round() as usize + 1).min(t);
        let (a, b) = self.boundary_times();
        Segmentation::new(to_frame(a), to_frame(b)).map_err(|_| {
            Error::Data(format!(
                "annotation ({a} ms, {b} ms) collapses onto one frame at {frame_period_ms} ms resolution"
            ))
        })
    }
}

/// Where an utterance's acoustics live.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Audio(PathBuf),
    Features(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRecord {
    pub utterance_id: String,
    pub corpus_id: String,
    pub speaker_id: String,
    pub source: Source,
    pub frame_period_ms: f64,
    pub annotation: Option<Annotation>,
}

/// On-disk shape of one manifest line.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    utterance_id: String,
    corpus_id: String,
    speaker_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    audio: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    features: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frame_period_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    annotation: Option<Annotation>,
}

impl ManifestRecord {
    pub fn vot_type(&self) -> Option<VotType> {
        self.annotation.map(|a| a.vot_type())
    }

    pub fn source_path(&self) -> &Path {
        match &self.source {
            Source::Audio(p) | Source::Features(p) => p,
        }
    }

    /// Loads (or extracts) this record's feature matrix.
    pub fn load_features(&self, spec: &FeatureSpec) -> Result<FeatureSequence> {
        match &self.source {
            Source::Features(p) => frontend::load_precomputed(p, self.frame_period_ms),
            Source::Audio(p) => frontend::extract(&frontend::load_wav(p)?, spec),
        }
    }

    fn duration_ms(&self) -> Result<f64> {
        match &self.source {
            Source::Features(p) => {
                let (t, _) = frontend::read_header(p)?;
                Ok(t as f64 * self.frame_period_ms)
            }
            Source::Audio(p) => {
                let r = hound::WavReader::open(p).map_err(|e| match e {
                    hound::Error::IoError(io) => Error::io(p, io),
                    other => Error::Format(format!("{}: {other}", p.display())),
                })?;
                Ok(r.duration() as f64 * 1000.0 / SAMPLE_RATE_HZ as f64)
            }
        }
    }
}

/// `path` expressed from `base`, climbing with `..` where needed. Falls
/// back to `path` itself when the two cannot be related lexically.
fn relative_to(path: &Path, base: &Path) -> PathBuf {
    use std::path::Component;
    fn plain(p: &Path) -> Vec<Component<'_>> {
        p.components().filter(|c| *c != Component::CurDir).collect()
    }
    let (p, b) = (plain(path), plain(base));
    if path.is_absolute() != base.is_absolute() || b.contains(&Component::ParentDir) {
        return path.to_path_buf();
    }
    let common = p.iter().zip(&b).take_while(|(x, y)| x == y).count();
    if path.is_absolute() && common == 0 {
        return path.to_path_buf();
    }
    let mut out = PathBuf::new();
    for _ in common..b.len() {
        out.push("..");
    }
    out.extend(&p[common..]);
    out
}

/// Serializes records as one JSON object per line. Source paths are written
/// relative to the manifest's directory.
pub fn format_manifest(records: &[ManifestRecord], manifest_dir: &Path) -> String {
    let mut out = String::new();
    for r in records {
        let (audio, features) = match &r.source {
            Source::Audio(p) => (Some(relative_to(p, manifest_dir)), None),
            Source::Features(p) => (None, Some(relative_to(p, manifest_dir))),
        };
        let raw = RawRecord {
            utterance_id: r.utterance_id.clone(),
            corpus_id: r.corpus_id.clone(),
            speaker_id: r.speaker_id.clone(),
            audio,
            features,
            frame_period_ms: (r.frame_period_ms != FRAME_PERIOD_MS).then_some(r.frame_period_ms),
            annotation: r.annotation,
        };
        out.push_str(&serde_json::to_string(&raw).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn write_manifest(path: &Path, records: &[ManifestRecord]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new(""));
    fs::write(path, format_manifest(records, dir)).map_err(|e| Error::io(path, e))
}

/// Reads and validates a manifest. Relative source paths resolve against
/// the manifest's directory. All problems are collected and reported
/// together, each tagged with its utterance id.
pub fn load_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    parse_manifest(&text, path, base)
}

pub fn parse_manifest(text: &str, path: &Path, base: &Path) -> Result<Vec<ManifestRecord>> {
    let mut records = Vec::new();
    let mut problems = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        let id = raw.utterance_id.clone();
        if !seen.insert(id.clone()) {
            problems.push(format!("{id}: duplicate utterance_id"));
            continue;
        }
        let source = match (raw.audio, raw.features) {
            (Some(a), None) => Source::Audio(base.join(a)),
            (None, Some(f)) => Source::Features(base.join(f)),
            _ => {
                problems.push(format!("{id}: exactly one of \"audio\" or \"features\" is required"));
                continue;
            }
        };
        let frame_period_ms = raw.frame_period_ms.unwrap_or(FRAME_PERIOD_MS);
        if !(frame_period_ms.is_finite() && frame_period_ms > 0.0) {
            problems.push(format!("{id}: frame_period_ms must be positive"));
            continue;
        }
        let rec = ManifestRecord {
            utterance_id: id.clone(),
            corpus_id: raw.corpus_id,
            speaker_id: raw.speaker_id,
            source,
            frame_period_ms,
            annotation: raw.annotation,
        };
        if !rec.source_path().is_file() {
            problems.push(format!("{id}: missing file {}", rec.source_path().display()));
            continue;
        }
        if let Some(a) = &rec.annotation {
            let duration = match rec.duration_ms() {
                Ok(d) => Some(d),
                Err(e) => {
                    problems.push(format!("{id}: {e}"));
                    continue;
                }
            };
            if let Err(msg) = a.validate(duration) {
                problems.push(format!("{id}: {msg}"));
                continue;
            }
        }
        records.push(rec);
    }
    if !problems.is_empty() {
        return Err(Error::Data(format!(
            "{} invalid manifest record(s) in {}:\n  {}",
            problems.len(),
            path.display(),
            problems.join("\n  ")
        )));
    }
    Ok(records)
}
