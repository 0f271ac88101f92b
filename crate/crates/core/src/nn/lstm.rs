//! Single-layer LSTM with backpropagation through time.
//!
//! Gates read the concatenation `z_t = [x_t; h_{t-1}]`:
//!
//! ```text
//! i = sigmoid(W_i z + b_i)   f = sigmoid(W_f z + b_f)
//! o = sigmoid(W_o z + b_o)   g = tanh(W_g z + b_g)
//! c_t = f * c_{t-1} + i * g
//! h_t = o * tanh(c_t)
//! ```
//!
//! with `h_0 = c_0 = 0`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::activation::sigmoid;
use super::matrix::{axpy, dot, Dense2D};
use crate::error::{Error, Result};
use crate::seed::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub input_size: usize,
    pub hidden_size: usize,
    pub w_i: Dense2D,
    pub w_f: Dense2D,
    pub w_o: Dense2D,
    pub w_g: Dense2D,
    pub b_i: Vec<f64>,
    pub b_f: Vec<f64>,
    pub b_o: Vec<f64>,
    pub b_g: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmGrads {
    pub w: [Dense2D; 4],
    pub b: [Vec<f64>; 4],
}

#[derive(Debug, Clone)]
pub struct LstmStep {
    z: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    o: Vec<f64>,
    g: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

/// Activations saved by [`LstmParams::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmCache {
    input_size: usize,
    hidden_size: usize,
    steps: Vec<LstmStep>,
}

impl LstmCache {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Final hidden state h_T.
    pub fn last_hidden(&self) -> &[f64] {
        &self.steps.last().expect("non-empty cache").h
    }
}

impl LstmParams {
    /// Uniform(-s, s) weights with s = 1/sqrt(input + hidden); forget bias +1.
    pub fn init(input_size: usize, hidden_size: usize, rng: &mut Rng) -> Self {
        let fan_in = input_size + hidden_size;
        let s = 1.0 / (fan_in as f64).sqrt();
        let mut mat = || Dense2D {
            rows: hidden_size,
            cols: fan_in,
            data: (0..hidden_size * fan_in).map(|_| rng.random_range(-s..s)).collect(),
        };
        let (w_i, w_f, w_o, w_g) = (mat(), mat(), mat(), mat());
        Self {
            input_size,
            hidden_size,
            w_i,
            w_f,
            w_o,
            w_g,
            b_i: vec![0.0; hidden_size],
            b_f: vec![1.0; hidden_size],
            b_o: vec![0.0; hidden_size],
            b_g: vec![0.0; hidden_size],
        }
    }

    fn check(&self) -> Result<()> {
        let fan_in = self.input_size + self.hidden_size;
        let ok = [&self.w_i, &self.w_f, &self.w_o, &self.w_g]
            .iter()
            .all(|w| w.rows == self.hidden_size && w.cols == fan_in && w.data.len() == w.rows * w.cols)
            && [&self.b_i, &self.b_f, &self.b_o, &self.b_g]
                .iter()
                .all(|b| b.len() == self.hidden_size);
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension("inconsistent LSTM parameter shapes".into()))
        }
    }

    pub fn forward<S: AsRef<[f64]>>(&self, sequence: &[S]) -> Result<LstmCache> {
        self.check()?;
        if sequence.is_empty() {
            return Err(Error::Dimension("LSTM input sequence is empty".into()));
        }
        let hs = self.hidden_size;
        let mut h = vec![0.0; hs];
        let mut c = vec![0.0; hs];
        let mut steps = Vec::with_capacity(sequence.len());
        for x in sequence {
            let x = x.as_ref();
            if x.len() != self.input_size {
                return Err(Error::Dimension(format!(
                    "LSTM expects input width {}, got {}",
                    self.input_size,
                    x.len()
                )));
            }
            let mut z = Vec::with_capacity(self.input_size + hs);
            z.extend_from_slice(x);
            z.extend_from_slice(&h);
            let gate = |w: &Dense2D, b: &[f64], act: fn(f64) -> f64| -> Vec<f64> {
                (0..hs).map(|k| act(dot(w.row(k), &z) + b[k])).collect()
            };
            let i = gate(&self.w_i, &self.b_i, sigmoid);
            let f = gate(&self.w_f, &self.b_f, sigmoid);
            let o = gate(&self.w_o, &self.b_o, sigmoid);
            let g = gate(&self.w_g, &self.b_g, f64::tanh);
            for k in 0..hs {
                c[k] = f[k] * c[k] + i[k] * g[k];
            }
            let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
            h = (0..hs).map(|k| o[k] * tanh_c[k]).collect();
            steps.push(LstmStep {
                z,
                i,
                f,
                o,
                g,
                c: c.clone(),
                tanh_c,
                h: h.clone(),
            });
        }
        Ok(LstmCache {
            input_size: self.input_size,
            hidden_size: hs,
            steps,
        })
    }

    /// Parameter gradients given `dL/dh_T`, accumulated over all steps.
    pub fn backward(&self, cache: &LstmCache, grad_h_last: &[f64]) -> Result<LstmGrads> {
        self.check()?;
        let hs = self.hidden_size;
        if cache.hidden_size != hs || cache.input_size != self.input_size || cache.steps.is_empty() {
            return Err(Error::Dimension("LSTM cache does not match parameters".into()));
        }
        if grad_h_last.len() != hs {
            return Err(Error::Dimension(format!(
                "LSTM gradient width {} != hidden size {hs}",
                grad_h_last.len()
            )));
        }
        let mut grads = self.zero_grads();
        let weights = [&self.w_i, &self.w_f, &self.w_o, &self.w_g];
        let mut dh = grad_h_last.to_vec();
        let mut dc = vec![0.0; hs];
        let mut da = [vec![0.0; hs], vec![0.0; hs], vec![0.0; hs], vec![0.0; hs]];
        for t in (0..cache.steps.len()).rev() {
            let s = &cache.steps[t];
            for k in 0..hs {
                let d_o = dh[k] * s.tanh_c[k];
                dc[k] += dh[k] * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]);
                let c_prev = if t > 0 { cache.steps[t - 1].c[k] } else { 0.0 };
                let d_f = dc[k] * c_prev;
                let d_i = dc[k] * s.g[k];
                let d_g = dc[k] * s.i[k];
                da[0][k] = d_i * s.i[k] * (1.0 - s.i[k]);
                da[1][k] = d_f * s.f[k] * (1.0 - s.f[k]);
                da[2][k] = d_o * s.o[k] * (1.0 - s.o[k]);
                da[3][k] = d_g * (1.0 - s.g[k] * s.g[k]);
                dc[k] *= s.f[k];
            }
            let mut dz = vec![0.0; self.input_size + hs];
            for gate in 0..4 {
                for k in 0..hs {
                    let d = da[gate][k];
                    if d == 0.0 {
                        continue;
                    }
                    grads.b[gate][k] += d;
                    axpy(d, &s.z, grads.w[gate].row_mut(k));
                    axpy(d, weights[gate].row(k), &mut dz);
                }
            }
            dh.copy_from_slice(&dz[self.input_size..]);
        }
        Ok(grads)
    }

    pub fn zero_grads(&self) -> LstmGrads {
        let fan_in = self.input_size + self.hidden_size;
        let z = || Dense2D::zeros(self.hidden_size, fan_in);
        let b = || vec![0.0; self.hidden_size];
        LstmGrads {
            w: [z(), z(), z(), z()],
            b: [b(), b(), b(), b()],
        }
    }

    /// Order: W_i, W_f, W_o, W_g, b_i, b_f, b_o, b_g.
    pub fn params_mut(&mut self) -> [&mut [f64]; 8] {
        [
            &mut self.w_i.data,
            &mut self.w_f.data,
            &mut self.w_o.data,
            &mut self.w_g.data,
            &mut self.b_i,
            &mut self.b_f,
            &mut self.b_o,
            &mut self.b_g,
        ]
    }
}

impl LstmGrads {
    /// Same order as [`LstmParams::params_mut`].
    pub fn slices(&self) -> [&[f64]; 8] {
        [
            &self.w[0].data,
            &self.w[1].data,
            &self.w[2].data,
            &self.w[3].data,
            &self.b[0],
            &self.b[1],
            &self.b[2],
            &self.b[3],
        ]
    }

    pub fn add(&mut self, other: &LstmGrads) {
        for g in 0..4 {
            axpy(1.0, &other.w[g].data, &mut self.w[g].data);
            axpy(1.0, &other.b[g], &mut self.b[g]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_params(input: usize, hidden: usize) -> LstmParams {
        let fan_in = input + hidden;
        let z = || Dense2D::zeros(hidden, fan_in);
        LstmParams {
            input_size: input,
            hidden_size: hidden,
            w_i: z(),
            w_f: z(),
            w_o: z(),
            w_g: z(),
            b_i: vec![0.0; hidden],
            b_f: vec![0.0; hidden],
            b_o: vec![0.0; hidden],
            b_g: vec![0.0; hidden],
        }
    }

    #[test]
    fn zero_weights_give_zero_state() {
        let p = zero_params(3, 4);
        let seq = vec![vec![1.0, -2.0, 0.5]; 10];
        let cache = p.forward(&seq).unwrap();
        assert!(cache.last_hidden().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_step_matches_hand_computation() {
        let mut p = zero_params(1, 1);
        // z = [x, h_prev]; only the input weight matters on the first step.
        p.w_i.data = vec![0.5, 0.0];
        p.w_f.data = vec![-0.3, 0.0];
        p.w_o.data = vec![1.0, 0.0];
        p.w_g.data = vec![2.0, 0.0];
        p.b_i = vec![0.1];
        p.b_f = vec![1.0];
        p.b_o = vec![-0.2];
        p.b_g = vec![0.05];
        let x = 0.8;
        let i = 1.0 / (1.0 + (-(0.5 * x + 0.1f64)).exp());
        let o = 1.0 / (1.0 + (-(1.0 * x - 0.2f64)).exp());
        let g = (2.0 * x + 0.05f64).tanh();
        let c = i * g; // c_0 = 0, so the forget gate drops out
        let h = o * c.tanh();
        let cache = p.forward(&[vec![x]]).unwrap();
        assert!((cache.last_hidden()[0] - h).abs() < 1e-15);
    }

    #[test]
    fn sequence_length_is_number_of_steps() {
        let mut rng = crate::seed::rng(1);
        let p = LstmParams::init(7, 5, &mut rng);
        let cache = p.forward(&vec![vec![0.0; 7]; 200]).unwrap();
        assert_eq!(cache.len(), 200);
    }

    #[test]
    fn empty_sequence_is_error() {
        let mut rng = crate::seed::rng(1);
        let p = LstmParams::init(2, 2, &mut rng);
        let empty: Vec<Vec<f64>> = vec![];
        assert!(p.forward(&empty).is_err());
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_grads_and_linearity() {
        let mut rng = crate::seed::rng(2);
        let p = LstmParams::init(3, 3, &mut rng);
        let seq: Vec<Vec<f64>> = (0..5).map(|t| vec![t as f64 * 0.1, -0.3, 0.7]).collect();
        let cache = p.forward(&seq).unwrap();
        let g0 = p.backward(&cache, &[0.0; 3]).unwrap();
        assert!(g0.slices().iter().all(|s| s.iter().all(|&v| v == 0.0)));
        let g1 = p.backward(&cache, &[0.3, -1.0, 0.25]).unwrap();
        let g2 = p.backward(&cache, &[0.6, -2.0, 0.5]).unwrap();
        for (a, b) in g1.slices().iter().zip(g2.slices()) {
            for (x, y) in a.iter().zip(b) {
                assert!((2.0 * x - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
        }
    }

    #[test]
    fn forget_bias_starts_at_one() {
        let mut rng = crate::seed::rng(3);
        let p = LstmParams::init(7, 80, &mut rng);
        assert!(p.b_f.iter().all(|&b| b == 1.0));
        assert_eq!(p.w_i.shape(), (80, 87));
    }
}
