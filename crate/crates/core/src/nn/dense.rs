use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::activation::{activate, activate_grad, Activation};
use super::matrix::{axpy, dot, Dense2D};
use crate::error::{Error, Result};
use crate::seed::Rng;

/// Fully connected layer: `out = act(W x + b)` with `W` stored out x in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Dense2D,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub weights: Dense2D,
    pub bias: Vec<f64>,
}

/// Pre- and post-activation outputs of a batch.
#[derive(Debug, Clone)]
pub struct DenseForward {
    pub pre: Dense2D,
    pub out: Dense2D,
}

impl DenseLayer {
    /// Uniform(-s, s) weights with s = 1/sqrt(fan_in); zero bias.
    pub fn init(inputs: usize, outputs: usize, activation: Activation, rng: &mut Rng) -> Self {
        let s = 1.0 / (inputs as f64).sqrt();
        let data = (0..inputs * outputs).map(|_| rng.random_range(-s..s)).collect();
        Self {
            weights: Dense2D {
                rows: outputs,
                cols: inputs,
                data,
            },
            bias: vec![0.0; outputs],
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows
    }

    pub fn forward(&self, input: &Dense2D) -> Result<DenseForward> {
        if input.cols != self.inputs() {
            return Err(Error::Dimension(format!(
                "dense layer expects width {}, got {}",
                self.inputs(),
                input.cols
            )));
        }
        let mut pre = Dense2D::zeros(input.rows, self.outputs());
        let mut out = Dense2D::zeros(input.rows, self.outputs());
        for r in 0..input.rows {
            let x = input.row(r);
            for o in 0..self.outputs() {
                let z = dot(self.weights.row(o), x) + self.bias[o];
                pre.data[r * self.outputs() + o] = z;
                out.data[r * self.outputs() + o] = activate(z, self.activation);
            }
        }
        Ok(DenseForward { pre, out })
    }

    /// Single-sample forward pass returning activations only.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.inputs() {
            return Err(Error::Dimension(format!(
                "dense layer expects width {}, got {}",
                self.inputs(),
                x.len()
            )));
        }
        Ok((0..self.outputs())
            .map(|o| activate(dot(self.weights.row(o), x) + self.bias[o], self.activation))
            .collect())
    }

    /// Gradients of a scalar loss given `grad_out = dL/d(out)`.
    pub fn backward(&self, input: &Dense2D, pre: &Dense2D, grad_out: &Dense2D) -> Result<(Dense2D, DenseGrads)> {
        if grad_out.shape() != pre.shape() || input.rows != pre.rows || input.cols != self.inputs() {
            return Err(Error::Dimension("dense backward shapes disagree".into()));
        }
        let (n_in, n_out) = (self.inputs(), self.outputs());
        let mut grad_in = Dense2D::zeros(input.rows, n_in);
        let mut gw = Dense2D::zeros(n_out, n_in);
        let mut gb = vec![0.0; n_out];
        for r in 0..input.rows {
            let x = input.row(r);
            for o in 0..n_out {
                let delta = grad_out.get(r, o) * activate_grad(pre.get(r, o), self.activation);
                if delta == 0.0 {
                    continue;
                }
                gb[o] += delta;
                axpy(delta, x, gw.row_mut(o));
                axpy(delta, self.weights.row(o), grad_in.row_mut(r));
            }
        }
        Ok((grad_in, DenseGrads { weights: gw, bias: gb }))
    }

    pub fn params_mut(&mut self) -> [&mut [f64]; 2] {
        [&mut self.weights.data, &mut self.bias]
    }

    pub fn zero_grads(&self) -> DenseGrads {
        DenseGrads {
            weights: Dense2D::zeros(self.outputs(), self.inputs()),
            bias: vec![0.0; self.outputs()],
        }
    }
}

impl DenseGrads {
    pub fn slices(&self) -> [&[f64]; 2] {
        [&self.weights.data, &self.bias]
    }

    pub fn add(&mut self, other: &DenseGrads) {
        axpy(1.0, &other.weights.data, &mut self.weights.data);
        axpy(1.0, &other.bias, &mut self.bias);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_layer_passes_input_through() {
        let layer = DenseLayer {
            weights: Dense2D::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            bias: vec![0.0, 0.0],
            activation: Activation::Identity,
        };
        let x = Dense2D::from_vec(1, 2, vec![3.5, -1.25]).unwrap();
        assert_eq!(layer.forward(&x).unwrap().out, x);
    }

    #[test]
    fn one_by_one_chain_rule() {
        let layer = DenseLayer {
            weights: Dense2D::from_vec(1, 1, vec![2.0]).unwrap(),
            bias: vec![1.0],
            activation: Activation::Identity,
        };
        let x = Dense2D::from_vec(1, 1, vec![3.0]).unwrap();
        let f = layer.forward(&x).unwrap();
        assert_eq!(f.out.data, [7.0]);
        let ones = Dense2D::from_vec(1, 1, vec![1.0]).unwrap();
        let (gx, g) = layer.backward(&x, &f.pre, &ones).unwrap();
        assert_eq!(g.weights.data, [3.0]);
        assert_eq!(g.bias, [1.0]);
        assert_eq!(gx.data, [2.0]);
    }

    #[test]
    fn width_mismatch_is_dimension_error() {
        let mut rng = crate::seed::rng(0);
        let layer = DenseLayer::init(3, 2, Activation::Tanh, &mut rng);
        let x = Dense2D::zeros(1, 4);
        assert!(matches!(layer.forward(&x), Err(Error::Dimension(_))));
    }
}
