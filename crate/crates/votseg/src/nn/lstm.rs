//! Single-direction LSTM layer with an explicit backward pass.
//!
//! Gate layout in the stacked weight matrices is `[input, forget, cell, output]`,
//! each block `hidden` rows tall.

use ndarray::linalg::general_mat_vec_mul;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::init::{uniform, uniform_vec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    /// `4h x in`
    pub w_ih: Array2<f64>,
    /// `4h x h`
    pub w_hh: Array2<f64>,
    /// `4h`
    pub bias: Array1<f64>,
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Activations kept from the forward pass, indexed by time (not by
/// processing order).
#[derive(Debug, Clone)]
pub struct LstmCache {
    reverse: bool,
    /// Post-nonlinearity gate values, `T x 4h`.
    gates: Array2<f64>,
    cells: Array2<f64>,
    tanh_cells: Array2<f64>,
    pub hidden: Array2<f64>,
}

impl LstmParams {
    pub fn init<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let a_in = 1.0 / (input as f64).sqrt();
        let a_h = 1.0 / (hidden as f64).sqrt();
        Self {
            w_ih: uniform((4 * hidden, input), a_in, rng),
            w_hh: uniform((4 * hidden, hidden), a_h, rng),
            bias: uniform_vec(4 * hidden, a_h, rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            w_ih: Array2::zeros(self.w_ih.raw_dim()),
            w_hh: Array2::zeros(self.w_hh.raw_dim()),
            bias: Array1::zeros(self.bias.raw_dim()),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.ncols()
    }

    pub fn input(&self) -> usize {
        self.w_ih.ncols()
    }

    /// Runs the layer over `x` (`T x in`). With `reverse` the sequence is
    /// consumed from the last frame to the first.
    pub fn forward(&self, x: ArrayView2<'_, f64>, reverse: bool) -> LstmCache {
        let t_len = x.nrows();
        let h = self.hidden();
        let mut pre = x.dot(&self.w_ih.t());
        pre += &self.bias;

        let mut gates = Array2::zeros((t_len, 4 * h));
        let mut cells = Array2::zeros((t_len, h));
        let mut tanh_cells = Array2::zeros((t_len, h));
        let mut hidden = Array2::zeros((t_len, h));
        let mut h_prev = Array1::<f64>::zeros(h);
        let mut c_prev = Array1::<f64>::zeros(h);
        let mut z = Array1::<f64>::zeros(4 * h);

        for k in 0..t_len {
            let t = if reverse { t_len - 1 - k } else { k };
            z.assign(&pre.row(t));
            general_mat_vec_mul(1.0, &self.w_hh, &h_prev, 1.0, &mut z);
            let zs = z.as_slice().unwrap();
            let mut g_row = gates.row_mut(t);
            let g_row = g_row.as_slice_mut().unwrap();
            let mut c_row = cells.row_mut(t);
            let c_row = c_row.as_slice_mut().unwrap();
            let mut tc_row = tanh_cells.row_mut(t);
            let tc_row = tc_row.as_slice_mut().unwrap();
            let hp = h_prev.as_slice_mut().unwrap();
            let cp = c_prev.as_slice_mut().unwrap();
            for j in 0..h {
                let i = sigmoid(zs[j]);
                let f = sigmoid(zs[h + j]);
                let g = zs[2 * h + j].tanh();
                let o = sigmoid(zs[3 * h + j]);
                let c = f * cp[j] + i * g;
                let tc = c.tanh();
                g_row[j] = i;
                g_row[h + j] = f;
                g_row[2 * h + j] = g;
                g_row[3 * h + j] = o;
                c_row[j] = c;
                tc_row[j] = tc;
                cp[j] = c;
                hp[j] = o * tc;
            }
            hidden.row_mut(t).assign(&h_prev);
        }

        LstmCache {
            reverse,
            gates,
            cells,
            tanh_cells,
            hidden,
        }
    }

    /// Backpropagates `d_hidden` (`T x h`, gradient of the loss with respect
    /// to every output state). Accumulates parameter gradients into `grad`
    /// and returns the gradient with respect to the input.
    pub fn backward(
        &self,
        x: ArrayView2<'_, f64>,
        cache: &LstmCache,
        d_hidden: ArrayView2<'_, f64>,
        grad: &mut LstmParams,
    ) -> Array2<f64> {
        let t_len = x.nrows();
        let h = self.hidden();
        let order = |k: usize| if cache.reverse { t_len - 1 - k } else { k };

        // contiguous copy so the per-step product walks rows
        let w_hh_t = self.w_hh.t().as_standard_layout().into_owned();
        let mut d_gates = Array2::<f64>::zeros((t_len, 4 * h));
        let mut dh_next = Array1::<f64>::zeros(h);
        let mut dc_next = vec![0.0; h];
        for k in (0..t_len).rev() {
            let t = order(k);
            let prev = if k > 0 { Some(order(k - 1)) } else { None };
            let g_row = cache.gates.row(t);
            let g_row = g_row.as_slice().unwrap();
            let tc_row = cache.tanh_cells.row(t);
            let tc_row = tc_row.as_slice().unwrap();
            let dh_ext = d_hidden.row(t);
            let mut dg_row = d_gates.row_mut(t);
            let dg = dg_row.as_slice_mut().unwrap();
            let dhn = dh_next.as_slice().unwrap();
            for j in 0..h {
                let (i, f, g, o) = (g_row[j], g_row[h + j], g_row[2 * h + j], g_row[3 * h + j]);
                let tc = tc_row[j];
                let c_prev = prev.map_or(0.0, |p| cache.cells[[p, j]]);
                let dh = dh_ext[j] + dhn[j];
                let d_o = dh * tc;
                let dc = dh * o * (1.0 - tc * tc) + dc_next[j];
                dc_next[j] = dc * f;
                dg[j] = dc * g * i * (1.0 - i);
                dg[h + j] = dc * c_prev * f * (1.0 - f);
                dg[2 * h + j] = dc * i * (1.0 - g * g);
                dg[3 * h + j] = d_o * o * (1.0 - o);
            }
            general_mat_vec_mul(1.0, &w_hh_t, &d_gates.row(t), 0.0, &mut dh_next);
        }

        // States that fed each step's recurrence, aligned by time.
        let mut h_prev = Array2::<f64>::zeros((t_len, h));
        if t_len > 1 {
            if cache.reverse {
                h_prev
                    .slice_mut(ndarray::s![..t_len - 1, ..])
                    .assign(&cache.hidden.slice(ndarray::s![1.., ..]));
            } else {
                h_prev
                    .slice_mut(ndarray::s![1.., ..])
                    .assign(&cache.hidden.slice(ndarray::s![..t_len - 1, ..]));
            }
        }

        let dg_t = d_gates.t();
        ndarray::linalg::general_mat_mul(1.0, &dg_t, &x, 1.0, &mut grad.w_ih);
        ndarray::linalg::general_mat_mul(1.0, &dg_t, &h_prev, 1.0, &mut grad.w_hh);
        grad.bias += &d_gates.sum_axis(Axis(0));
        d_gates.dot(&self.w_ih)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn loss(p: &LstmParams, x: &Array2<f64>, probe: &Array2<f64>, reverse: bool) -> f64 {
        let c = p.forward(x.view(), reverse);
        (&c.hidden * probe).sum()
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for reverse in [false, true] {
            let p = LstmParams::init(3, 4, &mut rng);
            let x = uniform((5, 3), 1.0, &mut rng);
            let probe = uniform((5, 4), 1.0, &mut rng);
            let cache = p.forward(x.view(), reverse);
            let mut g = p.zeros_like();
            let dx = p.backward(x.view(), &cache, probe.view(), &mut g);

            let eps = 1e-6;
            let mut q = p.clone();
            for idx in 0..q.w_hh.len() {
                let orig = q.w_hh.as_slice().unwrap()[idx];
                q.w_hh.as_slice_mut().unwrap()[idx] = orig + eps;
                let up = loss(&q, &x, &probe, reverse);
                q.w_hh.as_slice_mut().unwrap()[idx] = orig - eps;
                let dn = loss(&q, &x, &probe, reverse);
                q.w_hh.as_slice_mut().unwrap()[idx] = orig;
                let num = (up - dn) / (2.0 * eps);
                assert!((num - g.w_hh.as_slice().unwrap()[idx]).abs() < 1e-7);
            }
            let mut xx = x.clone();
            for idx in 0..xx.len() {
                let orig = xx.as_slice().unwrap()[idx];
                xx.as_slice_mut().unwrap()[idx] = orig + eps;
                let up = loss(&p, &xx, &probe, reverse);
                xx.as_slice_mut().unwrap()[idx] = orig - eps;
                let dn = loss(&p, &xx, &probe, reverse);
                xx.as_slice_mut().unwrap()[idx] = orig;
                let num = (up - dn) / (2.0 * eps);
                assert!((num - dx.as_slice().unwrap()[idx]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn reverse_direction_sees_the_future() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = LstmParams::init(2, 3, &mut rng);
        let x = uniform((6, 2), 1.0, &mut rng);
        let mut y = x.clone();
        y[[5, 0]] += 0.5;
        let fa = p.forward(x.view(), false);
        let fb = p.forward(y.view(), false);
        assert_eq!(fa.hidden.row(0), fb.hidden.row(0));
        let ra = p.forward(x.view(), true);
        let rb = p.forward(y.view(), true);
        assert_ne!(ra.hidden.row(0), rb.hidden.row(0));
    }
}
