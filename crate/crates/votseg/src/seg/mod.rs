//! Structured prediction over two-boundary segmentations.
//!
//! A segmentation of a `T`-frame utterance is a pair of 1-based frame
//! indices `1 <= y1 < y2 <= T`. A model assigns every frame a score for
//! each boundary slot (a [`ScoreMatrix`]); the score of a segmentation is
//! the sum of the two selected entries. Because both the score and the
//! tolerance-hinged task loss decompose per boundary, exact decoding and
//! loss-augmented decoding run in `O(T)` with a prefix maximum.

mod decode;
mod types;

pub use decode::{
    decode, loss_augmented_decode, structural_hinge, task_loss, HingeTerms,
};
pub use types::{
    FeatureSequence, ScoreMatrix, Segmentation, TaskLossConfig, VotMeasurement, VotType,
};

/// Signed VOT for a decoded segmentation.
///
/// Positive stops decode to `(t_b, t_v)` and report `+(y2 - y1)`; prevoiced
/// stops decode to `(t_pv, t_b)` and report `-(y2 - y1)`, both scaled by the
/// frame period.
pub fn vot_from_segmentation(
    seg: Segmentation,
    vot_type: VotType,
    frame_period_ms: f64,
) -> VotMeasurement {
    let magnitude = (seg.y2 - seg.y1) as f64 * frame_period_ms;
    let vot_ms = match vot_type {
        VotType::Positive => magnitude,
        VotType::Negative => -magnitude,
    };
    VotMeasurement {
        vot_ms,
        vot_type,
        boundaries: seg,
        type_prob: 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vot_positive() {
        let m = vot_from_segmentation(Segmentation::new(10, 45).unwrap(), VotType::Positive, 1.0);
        assert_eq!(m.vot_ms, 35.0);
        assert_eq!(m.vot_type, VotType::Positive);
    }

    #[test]
    fn vot_negative_is_signed() {
        let m = vot_from_segmentation(Segmentation::new(12, 40).unwrap(), VotType::Negative, 1.0);
        assert_eq!(m.vot_ms, -28.0);
    }

    #[test]
    fn vot_scales_with_period() {
        let m = vot_from_segmentation(Segmentation::new(10, 45).unwrap(), VotType::Positive, 0.5);
        assert_eq!(m.vot_ms, 17.5);
    }
}
