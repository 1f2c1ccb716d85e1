//! Hand-built edge detectors on noise-free synthetic features must recover
//! the planted boundaries exactly through the structured decoder.

use ndarray::{Array2, Axis};

use votseg::data::{generate_synthetic, SyntheticConfig};
use votseg::seg::{decode, ScoreMatrix, VotType};

fn rise(x: &Array2<f64>, col: usize) -> Vec<f64> {
    let c = x.index_axis(Axis(1), col);
    (0..c.len())
        .map(|f| if f == 0 { 0.0 } else { c[f] - c[f - 1] })
        .collect()
}

#[test]
fn edge_detector_decodes_planted_boundaries() {
    let cfg = SyntheticConfig {
        n_utterances: 300,
        noise_sd: 0.0,
        offset_scale: 0.0,
        gain_range: (1.0, 1.0),
        seed: 17,
        ..SyntheticConfig::default()
    };
    let corpus = generate_synthetic(&cfg).unwrap();
    let mut negatives = 0;
    for (u, p) in corpus.utterances.iter().zip(&corpus.planted) {
        let x = u.features.frames();
        // low band onset and burst onset
        let low = rise(x, 0);
        let burst = rise(x, 1);
        let kind = u.vot_type().unwrap();
        let (first, second) = match kind {
            VotType::Positive => (&burst, &low),
            VotType::Negative => (&low, &burst),
        };
        let s = Array2::from_shape_fn((x.nrows(), 2), |(f, j)| if j == 0 { first[f] } else { second[f] });
        let y = decode(&ScoreMatrix::new(s).unwrap()).unwrap();
        assert_eq!(y, u.gold_segmentation().unwrap(), "{}", u.id);
        let (a, b) = match p.t_pv {
            Some(pv) => (pv, p.t_b),
            None => (p.t_b, p.t_v),
        };
        assert_eq!((y.y1, y.y2), (a + 1, b + 1), "{}", u.id);
        assert_eq!(kind == VotType::Negative, p.t_pv.is_some());
        negatives += usize::from(p.t_pv.is_some());
    }
    assert!(negatives > 20 && negatives < 120, "{negatives} negatives");
}

#[test]
fn nuisance_is_affine_per_corpus() {
    let base = SyntheticConfig {
        n_utterances: 40,
        corpora: 2,
        noise_sd: 0.0,
        seed: 4,
        ..SyntheticConfig::default()
    };
    let corpus = generate_synthetic(&base).unwrap();
    for (i, (u, p)) in corpus.utterances.iter().zip(&corpus.planted).enumerate() {
        let sig = &corpus.nuisance[i % 2];
        let clean = votseg::data::synthetic::clean_features(u.features.len(), base.dim, *p);
        for ((f, j), v) in u.features.frames().indexed_iter() {
            let want = sig.gain * clean[[f, j]] + sig.offset[j];
            assert!((v - want).abs() < 1e-12);
        }
    }
}
