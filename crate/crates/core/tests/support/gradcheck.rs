//! Central-difference gradient oracle for the dense layer, the LSTM and both
//! losses. Shared by the nn tests and the acceptance suite.

#![allow(dead_code)]

use incident_fusion::nn::{mse, softmax_ce, Activation, Dense2D, DenseLayer, LstmParams};
use incident_fusion::seed::{self, Rng};
use rand::Rng as _;

pub const STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    Mse,
    Ce,
}

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-6)
}

fn uniform(rng: &mut Rng, rows: usize, cols: usize) -> Dense2D {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    Dense2D::from_vec(rows, cols, data).unwrap()
}

fn target(rng: &mut Rng, rows: usize, cols: usize, loss: Loss) -> Dense2D {
    match loss {
        Loss::Mse => uniform(rng, rows, cols),
        Loss::Ce => {
            let mut t = Dense2D::zeros(rows, cols);
            for r in 0..rows {
                let c = rng.random_range(0..cols);
                t.row_mut(r)[c] = 1.0;
            }
            t
        }
    }
}

fn loss_and_grad(out: &Dense2D, t: &Dense2D, loss: Loss) -> (f64, Dense2D) {
    match loss {
        Loss::Mse => mse(out, t).unwrap(),
        Loss::Ce => softmax_ce(out, t).unwrap(),
    }
}

/// Largest relative error over every entry of `params`, perturbing one
/// entry at a time and re-evaluating `f`.
fn sweep<M: Clone>(
    model: &M,
    slots: usize,
    slot: impl Fn(&mut M, usize) -> &mut [f64],
    analytic: &[Vec<f64>],
    f: impl Fn(&M) -> f64,
) -> f64 {
    let mut worst = 0.0f64;
    for s in 0..slots {
        let len = slot(&mut model.clone(), s).len();
        for k in 0..len {
            let mut plus = model.clone();
            slot(&mut plus, s)[k] += STEP;
            let mut minus = model.clone();
            slot(&mut minus, s)[k] -= STEP;
            let numeric = (f(&plus) - f(&minus)) / (2.0 * STEP);
            worst = worst.max(rel_err(analytic[s][k], numeric));
        }
    }
    worst
}

/// Dense layer of the given activation under one loss: parameter and input
/// gradients.
pub fn dense_error(seed_value: u64, act: Activation, loss: Loss) -> f64 {
    let mut rng = seed::rng(seed_value);
    let (n_in, n_out, batch) = (4, 3, 5);
    let mut layer = DenseLayer::init(n_in, n_out, act, &mut rng);
    for b in &mut layer.bias {
        *b = rng.random_range(-0.5..0.5);
    }
    let x = uniform(&mut rng, batch, n_in);
    let t = target(&mut rng, batch, n_out, loss);

    let fwd = layer.forward(&x).unwrap();
    let (_, g) = loss_and_grad(&fwd.out, &t, loss);
    let (g_in, grads) = layer.backward(&x, &fwd.pre, &g).unwrap();
    let analytic: Vec<Vec<f64>> = grads.slices().iter().map(|s| s.to_vec()).collect();
    let value = |l: &DenseLayer, x: &Dense2D| loss_and_grad(&l.forward(x).unwrap().out, &t, loss).0;

    let params = sweep(&layer, 2, |l, s| l.params_mut()[s].as_mut(), &analytic, |l| value(l, &x));
    let inputs = sweep(&x, 1, |m, _| m.data.as_mut_slice(), &[g_in.data.clone()], |m| value(&layer, m));
    params.max(inputs)
}

#[derive(Clone)]
struct LstmWithHead {
    lstm: LstmParams,
    head: DenseLayer,
}

impl LstmWithHead {
    fn slot(&mut self, s: usize) -> &mut [f64] {
        if s < 8 {
            self.lstm.params_mut().into_iter().nth(s).unwrap()
        } else {
            self.head.params_mut().into_iter().nth(s - 8).unwrap()
        }
    }

    fn output(&self, seq: &[Vec<f64>]) -> Dense2D {
        let cache = self.lstm.forward(seq).unwrap();
        let h = Dense2D::from_rows(&[cache.last_hidden().to_vec()]).unwrap();
        self.head.forward(&h).unwrap().out
    }
}

/// LSTM over a short sequence, last hidden state into a linear head, under
/// one loss: every LSTM and head parameter, gradients through BPTT.
pub fn lstm_error(seed_value: u64, loss: Loss) -> f64 {
    let mut rng = seed::rng(seed_value);
    let (n_in, hidden, steps, n_out) = (3, 4, 6, 3);
    let mut lstm = LstmParams::init(n_in, hidden, &mut rng);
    for p in lstm.params_mut() {
        for v in p.iter_mut() {
            *v += rng.random_range(-0.3..0.3);
        }
    }
    let head = DenseLayer::init(hidden, n_out, Activation::Identity, &mut rng);
    let model = LstmWithHead { lstm, head };
    let seq: Vec<Vec<f64>> = (0..steps).map(|_| (0..n_in).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let t = target(&mut rng, 1, n_out, loss);

    let cache = model.lstm.forward(&seq).unwrap();
    let h = Dense2D::from_rows(&[cache.last_hidden().to_vec()]).unwrap();
    let fwd = model.head.forward(&h).unwrap();
    let (_, g) = loss_and_grad(&fwd.out, &t, loss);
    let (g_h, head_grads) = model.head.backward(&h, &fwd.pre, &g).unwrap();
    let lstm_grads = model.lstm.backward(&cache, g_h.row(0)).unwrap();
    let mut analytic: Vec<Vec<f64>> = lstm_grads.slices().iter().map(|s| s.to_vec()).collect();
    analytic.extend(head_grads.slices().iter().map(|s| s.to_vec()));

    sweep(&model, 10, LstmWithHead::slot, &analytic, |m| loss_and_grad(&m.output(&seq), &t, loss).0)
}

/// Loss gradient with respect to predictions or logits.
pub fn loss_error(seed_value: u64, loss: Loss) -> f64 {
    let mut rng = seed::rng(seed_value);
    let pred = uniform(&mut rng, 4, 5);
    let t = target(&mut rng, 4, 5, loss);
    let (_, g) = loss_and_grad(&pred, &t, loss);
    sweep(&pred, 1, |m, _| m.data.as_mut_slice(), &[g.data.clone()], |m| loss_and_grad(m, &t, loss).0)
}
