use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seg::FeatureSequence;

pub const SAMPLE_RATE_HZ: u32 = 16_000;
/// Frame period of extracted features.
pub const FRAME_PERIOD_MS: f64 = 1.0;
const FFT_LEN: usize = 256;
const MIN_DURATION_MS: f64 = 10.0;

/// Mono waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::Format("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Format(format!("sample {i} is not finite")));
        }
        let clip = Self {
            samples,
            sample_rate_hz,
        };
        if clip.duration_ms() < MIN_DURATION_MS {
            return Err(Error::Format(format!(
                "clip lasts {:.3} ms; at least {MIN_DURATION_MS} ms is required",
                clip.duration_ms()
            )));
        }
        Ok(clip)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn duration_ms(&self) -> f64 {
        self.samples.len() as f64 * 1000.0 / self.sample_rate_hz as f64
    }
}

/// Reads a 16 kHz mono 16-bit PCM WAV file, scaling samples to `[-1, 1)`.
pub fn load_wav(path: &Path) -> Result<AudioClip> {
    let mut reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other}", path.display())),
    })?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::Format(format!(
            "{}: channels = {}, expected mono",
            path.display(),
            spec.channels
        )));
    }
    if spec.sample_rate != SAMPLE_RATE_HZ {
        return Err(Error::Format(format!(
            "{}: sample rate = {} Hz, expected {SAMPLE_RATE_HZ} Hz",
            path.display(),
            spec.sample_rate
        )));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::Format(format!(
            "{}: sample format = {:?} {}-bit, expected 16-bit integer PCM",
            path.display(),
            spec.sample_format,
            spec.bits_per_sample
        )));
    }
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    AudioClip::new(samples, spec.sample_rate)
}

/// Measures computed for every analysis window.
pub const MEASURES: [&str; 8] = [
    "log_energy",
    "low_band_log_energy",
    "mid_band_log_energy",
    "high_band_log_energy",
    "wiener_entropy",
    "spectral_centroid",
    "max_abs_amplitude",
    "zero_crossing_rate",
];

/// Layout of the per-frame feature vector. For each window size the eight
/// [`MEASURES`] appear in order; with `deltas` their first differences
/// follow the whole raw block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub window_sizes_ms: Vec<u32>,
    /// `[low/mid, mid/high, upper]` band edges in Hz; the low band starts at 0.
    pub band_edges_hz: [f64; 3],
    pub energy_floor_db: f64,
    pub deltas: bool,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        Self {
            window_sizes_ms: vec![1, 5],
            band_edges_hz: [500.0, 3000.0, 8000.0],
            energy_floor_db: -80.0,
            deltas: true,
        }
    }
}

impl FeatureSpec {
    pub fn dim(&self) -> usize {
        let raw = self.window_sizes_ms.len() * MEASURES.len();
        if self.deltas {
            2 * raw
        } else {
            raw
        }
    }

    /// Column index of a raw measure for a given window.
    pub fn column(&self, window_ms: u32, measure: &str) -> Option<usize> {
        let w = self.window_sizes_ms.iter().position(|&x| x == window_ms)?;
        let m = MEASURES.iter().position(|&x| x == measure)?;
        Some(w * MEASURES.len() + m)
    }

    fn validate(&self) -> Result<()> {
        if self.window_sizes_ms.is_empty() || self.window_sizes_ms.contains(&0) {
            return Err(Error::Config("window sizes must be positive and non-empty".into()));
        }
        let [a, b, c] = self.band_edges_hz;
        if !(0.0 < a && a < b && b < c) {
            return Err(Error::Config(format!(
                "band edges must increase, got {:?}",
                self.band_edges_hz
            )));
        }
        let max_window = *self.window_sizes_ms.iter().max().unwrap() as usize;
        if max_window * SAMPLE_RATE_HZ as usize / 1000 > FFT_LEN {
            return Err(Error::Config(format!(
                "windows longer than {} ms are not supported",
                FFT_LEN * 1000 / SAMPLE_RATE_HZ as usize
            )));
        }
        Ok(())
    }
}

fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

struct WindowAnalyzer {
    len: usize,
    taper: Vec<f64>,
    taper_power: f64,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex<f64>>,
}

impl WindowAnalyzer {
    fn new(len: usize, fft: Arc<dyn Fft<f64>>) -> Self {
        let taper = hann(len);
        let taper_power = taper.iter().map(|w| w * w).sum::<f64>();
        Self {
            len,
            taper,
            taper_power,
            fft,
            buf: vec![Complex::default(); FFT_LEN],
        }
    }

    fn measures(&mut self, seg: &[f64], spec: &FeatureSpec, out: &mut [f64]) {
        let floor = spec.energy_floor_db;
        let to_db = |p: f64| {
            if p > 0.0 {
                (10.0 * p.log10()).max(floor)
            } else {
                floor
            }
        };
        let n = self.len as f64;
        let mean_sq = seg.iter().map(|x| x * x).sum::<f64>() / n;
        let max_abs = seg.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let crossings = seg.windows(2).filter(|p| p[0] * p[1] < 0.0).count();
        let zcr = if self.len > 1 {
            crossings as f64 / (self.len - 1) as f64
        } else {
            0.0
        };

        for (i, c) in self.buf.iter_mut().enumerate() {
            *c = if i < self.len {
                Complex::new(seg[i] * self.taper[i], 0.0)
            } else {
                Complex::default()
            };
        }
        self.fft.process(&mut self.buf);

        // One-sided power spectrum, scaled so it sums to the mean square of
        // the tapered window.
        let half = FFT_LEN / 2;
        let bin_hz = SAMPLE_RATE_HZ as f64 / FFT_LEN as f64;
        let [e1, e2, e3] = spec.band_edges_hz;
        let mut bands = [0.0f64; 3];
        let mut total = 0.0;
        let mut weighted = 0.0;
        let mut log_sum = 0.0;
        for k in 0..=half {
            let fold = if k == 0 || k == half { 1.0 } else { 2.0 };
            let p = fold * self.buf[k].norm_sqr() / (FFT_LEN as f64 * self.taper_power);
            let f = k as f64 * bin_hz;
            if f < e1 {
                bands[0] += p;
            } else if f < e2 {
                bands[1] += p;
            } else if f <= e3 {
                bands[2] += p;
            }
            total += p;
            weighted += f * p;
            log_sum += (p + 1e-300).ln();
        }
        let silent = to_db(mean_sq) <= floor;
        let (flatness, centroid) = if silent || total <= 0.0 {
            (0.0, 0.0)
        } else {
            let bins = (half + 1) as f64;
            ((log_sum / bins).exp() / (total / bins), weighted / total)
        };

        out[0] = to_db(mean_sq);
        out[1] = to_db(bands[0]);
        out[2] = to_db(bands[1]);
        out[3] = to_db(bands[2]);
        out[4] = flatness;
        out[5] = centroid;
        out[6] = max_abs;
        out[7] = zcr;
    }
}

/// Frame-level features at a 1 ms period. Frame `t` covers samples
/// `[16t, 16t + 16)`; each window is centered on the frame and zero-padded
/// past the clip edges.
pub fn extract(audio: &AudioClip, spec: &FeatureSpec) -> Result<FeatureSequence> {
    spec.validate()?;
    if audio.sample_rate_hz() != SAMPLE_RATE_HZ {
        return Err(Error::Format(format!(
            "sample rate = {} Hz, expected {SAMPLE_RATE_HZ} Hz",
            audio.sample_rate_hz()
        )));
    }
    let hop = (SAMPLE_RATE_HZ as f64 * FRAME_PERIOD_MS / 1000.0) as usize;
    let samples = audio.samples();
    let t_len = samples.len() / hop;
    let raw = spec.window_sizes_ms.len() * MEASURES.len();

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(FFT_LEN);
    let mut analyzers: Vec<WindowAnalyzer> = spec
        .window_sizes_ms
        .iter()
        .map(|&w| WindowAnalyzer::new(w as usize * hop, fft.clone()))
        .collect();

    let mut out = Array2::zeros((t_len, spec.dim()));
    let mut seg = Vec::new();
    for t in 0..t_len {
        let center = (t * hop + hop / 2) as isize;
        for (wi, an) in analyzers.iter_mut().enumerate() {
            let start = center - (an.len / 2) as isize;
            seg.clear();
            seg.extend((0..an.len as isize).map(|i| {
                let s = start + i;
                if s < 0 || s as usize >= samples.len() {
                    0.0
                } else {
                    samples[s as usize]
                }
            }));
            let mut row = out.row_mut(t);
            let cols = row.as_slice_mut().unwrap();
            let base = wi * MEASURES.len();
            an.measures(&seg, spec, &mut cols[base..base + MEASURES.len()]);
        }
    }
    if spec.deltas {
        for t in (1..t_len).rev() {
            for j in 0..raw {
                out[[t, raw + j]] = out[[t, j]] - out[[t - 1, j]];
            }
        }
    }
    FeatureSequence::new(out, FRAME_PERIOD_MS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone(freq: f64, amp: f64, ms: usize) -> AudioClip {
        let n = ms * 16;
        AudioClip::new(
            (0..n)
                .map(|i| amp * (2.0 * PI * freq * i as f64 / 16000.0).sin())
                .collect(),
            16000,
        )
        .unwrap()
    }

    #[test]
    fn frame_count() {
        let x = extract(&tone(440.0, 0.3, 250), &FeatureSpec::default()).unwrap();
        assert_eq!(x.len(), 250);
        assert_eq!(x.dim(), 32);
        let clip = AudioClip::new(vec![0.1; 16 * 20 + 7], 16000).unwrap();
        assert_eq!(extract(&clip, &FeatureSpec::default()).unwrap().len(), 20);
    }

    #[test]
    fn silence_sits_at_the_floor() {
        let spec = FeatureSpec::default();
        let x = extract(&AudioClip::new(vec![0.0; 16 * 50], 16000).unwrap(), &spec).unwrap();
        for w in [1, 5] {
            for m in [
                "log_energy",
                "low_band_log_energy",
                "mid_band_log_energy",
                "high_band_log_energy",
            ] {
                let c = spec.column(w, m).unwrap();
                assert!(x.frames().column(c).iter().all(|&v| v == -80.0));
            }
            let z = spec.column(w, "zero_crossing_rate").unwrap();
            assert!(x.frames().column(z).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn rejects_wrong_rate_and_short_clips() {
        let clip = AudioClip::new(vec![0.0; 8000], 8000).unwrap();
        match extract(&clip, &FeatureSpec::default()) {
            Err(Error::Format(m)) => assert!(m.contains("sample rate")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(AudioClip::new(vec![0.0; 100], 16000).is_err());
    }

    #[test]
    fn delay_shifts_interior_frames() {
        let base: Vec<f64> = (0..16 * 80)
            .map(|i| {
                let t = i as f64 / 16000.0;
                0.4 * (2.0 * PI * 230.0 * t).sin() + 0.1 * (2.0 * PI * 3100.0 * t).cos() * (t * 40.0).sin()
            })
            .collect();
        let k = 7;
        let mut delayed = vec![0.0; 16 * k];
        delayed.extend_from_slice(&base);
        let spec = FeatureSpec::default();
        let a = extract(&AudioClip::new(base, 16000).unwrap(), &spec).unwrap();
        let b = extract(&AudioClip::new(delayed, 16000).unwrap(), &spec).unwrap();
        // windows reach 2.5 ms either side, deltas one frame back
        for t in 4..a.len() - 4 {
            for j in 0..spec.dim() {
                assert!((a.frames()[[t, j]] - b.frames()[[t + k, j]]).abs() < 1e-6);
            }
        }
    }
}
