use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::lstm::{LstmCache, LstmParams};
use crate::error::{Error, Result};

/// One bidirectional layer: two independent LSTMs over the same input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiLayer {
    pub forward: LstmParams,
    pub backward: LstmParams,
}

/// Stacked bidirectional LSTM encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub layers: Vec<BiLayer>,
}

/// Per-frame encoder output, `T x 2h`. Columns `[0, h)` hold the forward
/// direction, `[h, 2h)` the backward direction.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameEmbeddings {
    data: Array2<f64>,
    hidden: usize,
}

impl FrameEmbeddings {
    pub fn new(data: Array2<f64>, hidden: usize) -> Result<Self> {
        if data.ncols() != 2 * hidden || data.nrows() == 0 {
            return Err(Error::Contract(format!(
                "frame embeddings must be T x {} with T >= 1, got {:?}",
                2 * hidden,
                data.dim()
            )));
        }
        Ok(Self { data, hidden })
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    /// Forward state after the last frame concatenated with the backward
    /// state after (i.e. at) the first frame.
    pub fn summarize(&self) -> Array1<f64> {
        let h = self.hidden;
        let t = self.data.nrows();
        let mut out = Array1::zeros(2 * h);
        out.slice_mut(s![..h]).assign(&self.data.slice(s![t - 1, ..h]));
        out.slice_mut(s![h..]).assign(&self.data.slice(s![0, h..]));
        out
    }
}

/// Scatters a summary gradient back onto the frame-embedding gradient.
pub fn summary_backward(d_summary: &Array1<f64>, hidden: usize, d_frames: &mut Array2<f64>) {
    let t = d_frames.nrows();
    let mut last = d_frames.slice_mut(s![t - 1, ..hidden]);
    last += &d_summary.slice(s![..hidden]);
    let mut first = d_frames.slice_mut(s![0, hidden..]);
    first += &d_summary.slice(s![hidden..]);
}

pub struct EncoderCache {
    /// Input to every layer; entry 0 is the feature matrix.
    inputs: Vec<Array2<f64>>,
    states: Vec<(LstmCache, LstmCache)>,
}

impl EncoderParams {
    pub fn init<R: Rng>(input: usize, hidden: usize, layers: usize, rng: &mut R) -> Self {
        let layers = (0..layers)
            .map(|l| {
                let width = if l == 0 { input } else { 2 * hidden };
                BiLayer {
                    forward: LstmParams::init(width, hidden, rng),
                    backward: LstmParams::init(width, hidden, rng),
                }
            })
            .collect();
        Self { layers }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| BiLayer {
                    forward: l.forward.zeros_like(),
                    backward: l.backward.zeros_like(),
                })
                .collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].forward.input()
    }

    pub fn hidden(&self) -> usize {
        self.layers[0].forward.hidden()
    }

    fn check_input(&self, x: &ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Contract(format!(
                "encoder expects {} features per frame, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        if x.nrows() == 0 {
            return Err(Error::Contract("cannot encode an empty sequence".into()));
        }
        Ok(())
    }

    pub fn encode(&self, x: ArrayView2<'_, f64>) -> Result<FrameEmbeddings> {
        Ok(self.forward(x)?.0)
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<(FrameEmbeddings, EncoderCache)> {
        self.check_input(&x)?;
        let mut inputs = vec![x.to_owned()];
        let mut states = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let input = inputs.last().unwrap().view();
            let f = layer.forward.forward(input, false);
            let b = layer.backward.forward(input, true);
            let out = concatenate(Axis(1), &[f.hidden.view(), b.hidden.view()]).unwrap();
            states.push((f, b));
            inputs.push(out);
        }
        let top = inputs.pop().unwrap();
        let emb = FrameEmbeddings {
            data: top,
            hidden: self.hidden(),
        };
        Ok((emb, EncoderCache { inputs, states }))
    }

    /// Backpropagates the gradient on the top-layer embeddings through the
    /// stack, accumulating into `grad`. Returns the gradient on the features.
    pub fn backward(
        &self,
        cache: &EncoderCache,
        d_top: Array2<f64>,
        grad: &mut EncoderParams,
    ) -> Array2<f64> {
        let h = self.hidden();
        let mut d_out = d_top;
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let input = cache.inputs[l].view();
            let (f, b) = &cache.states[l];
            let g = &mut grad.layers[l];
            let mut d_in = layer
                .forward
                .backward(input, f, d_out.slice(s![.., ..h]), &mut g.forward);
            d_in += &layer
                .backward
                .backward(input, b, d_out.slice(s![.., h..]), &mut g.backward);
            d_out = d_in;
        }
        d_out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::init::uniform;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shape_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let enc = EncoderParams::init(63, 100, 2, &mut rng);
        let x = uniform((5, 63), 1.0, &mut rng);
        let h = enc.encode(x.view()).unwrap();
        assert_eq!(h.as_array().dim(), (5, 200));
        assert_eq!(h.summarize().len(), 200);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let enc = EncoderParams::init(4, 3, 2, &mut rng);
        let x = uniform((5, 5), 1.0, &mut rng);
        assert!(matches!(enc.encode(x.view()), Err(Error::Contract(_))));
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let enc = EncoderParams::init(6, 8, 2, &mut rng);
        let x = uniform((7, 6), 1.0, &mut rng);
        let a = enc.encode(x.view()).unwrap();
        let b = enc.encode(x.view()).unwrap();
        assert!(a
            .as_array()
            .iter()
            .zip(b.as_array().iter())
            .all(|(p, q)| p.to_bits() == q.to_bits()));
    }

    #[test]
    fn last_frame_reaches_first_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let enc = EncoderParams::init(4, 5, 2, &mut rng);
        let x = uniform((6, 4), 1.0, &mut rng);
        let mut y = x.clone();
        y[[5, 2]] += 0.25;
        let a = enc.encode(x.view()).unwrap();
        let b = enc.encode(y.view()).unwrap();
        assert_ne!(a.as_array().row(0), b.as_array().row(0));
    }

    #[test]
    fn summary_of_single_frame() {
        let data = Array2::from_shape_vec((1, 4), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let h = FrameEmbeddings::new(data, 2).unwrap();
        assert_eq!(h.summarize().to_vec(), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn summary_sees_interior_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let enc = EncoderParams::init(3, 4, 2, &mut rng);
        let x = uniform((6, 3), 1.0, &mut rng);
        let mut y = x.clone();
        for c in 0..3 {
            y.swap([2, c], [3, c]);
        }
        let a = enc.encode(x.view()).unwrap().summarize();
        let b = enc.encode(y.view()).unwrap().summarize();
        assert_ne!(a, b);
    }

    #[test]
    fn encoder_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let enc = EncoderParams::init(3, 4, 2, &mut rng);
        let x = uniform((5, 3), 1.0, &mut rng);
        let probe = uniform((5, 8), 1.0, &mut rng);
        let f = |e: &EncoderParams, x: &Array2<f64>| (e.encode(x.view()).unwrap().as_array() * &probe).sum();
        let (_, cache) = enc.forward(x.view()).unwrap();
        let mut g = enc.zeros_like();
        let dx = enc.backward(&cache, probe.clone(), &mut g);
        let eps = 1e-6;
        let mut xx = x.clone();
        for idx in 0..xx.len() {
            let orig = xx.as_slice().unwrap()[idx];
            xx.as_slice_mut().unwrap()[idx] = orig + eps;
            let up = f(&enc, &xx);
            xx.as_slice_mut().unwrap()[idx] = orig - eps;
            let dn = f(&enc, &xx);
            xx.as_slice_mut().unwrap()[idx] = orig;
            assert!(((up - dn) / (2.0 * eps) - dx.as_slice().unwrap()[idx]).abs() < 1e-7);
        }
    }
}
