//! Gradient boosting: first-order residual fitting and the second-order,
//! L2-regularized variant.

use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, predict_tree, GrowSpec, TreeNode};
use super::{FeatureTable, RegressorConfig};
use crate::error::Result;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub base: f64,
    pub learning_rate: f64,
    pub trees: Vec<TreeNode>,
}

impl BoostedModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.base + self.learning_rate * self.trees.iter().map(|t| predict_tree(t, row)).sum::<f64>()
    }

    /// Prediction after the first `stages` trees.
    pub fn predict_staged(&self, row: &[f64], stages: usize) -> f64 {
        self.base + self.learning_rate * self.trees.iter().take(stages).map(|t| predict_tree(t, row)).sum::<f64>()
    }
}

/// `-G / (H + lambda)`, zero when the denominator vanishes.
pub fn xgb_leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    let d = h + lambda;
    if d > 0.0 {
        -g / d
    } else {
        0.0
    }
}

enum Order {
    First,
    Second { lambda: f64 },
}

fn boost(table: &FeatureTable, config: &RegressorConfig, order: Order, label: &str) -> BoostedModel {
    let n = table.n_rows();
    let y = table.target();
    let base = y.iter().sum::<f64>() / n as f64;
    let mut f = vec![base; n];
    let spec = GrowSpec {
        max_depth: config.max_depth,
        min_samples_leaf: config.min_samples_leaf,
        lambda: match order {
            Order::First => 0.0,
            Order::Second { lambda } => lambda,
        },
        max_features: config.max_features,
    };
    let n_sub = ((config.subsample * n as f64).round() as usize).clamp(1, n);
    let mut rng = seed::rng_for(config.seed, label);
    let mut trees = Vec::with_capacity(config.n_trees);
    for _ in 0..config.n_trees {
        let samples: Vec<usize> = if n_sub < n {
            let mut s = seed::permutation(&mut rng, n)[..n_sub].to_vec();
            s.sort_unstable();
            s
        } else {
            (0..n).collect()
        };
        let (g, h): (Vec<f64>, Vec<f64>) = match order {
            // Residual fitting: minimizing SSE to r is the g = -r, h = 1 case.
            Order::First => samples.iter().map(|&i| (f[i] - y[i], 1.0)).unzip(),
            Order::Second { .. } => samples.iter().map(|&i| (2.0 * (f[i] - y[i]), 2.0)).unzip(),
        };
        let tree = grow_tree(table, &samples, &g, &h, &spec, Some(&mut rng));
        for (i, fi) in f.iter_mut().enumerate() {
            *fi += config.learning_rate * predict_tree(&tree, table.row(i));
        }
        trees.push(tree);
    }
    BoostedModel {
        base,
        learning_rate: config.learning_rate,
        trees,
    }
}

/// Stage m fits an SSE tree to `y - F_{m-1}`; `F_m = F_{m-1} + lr * tree_m`.
pub fn fit_gbdt(table: &FeatureTable, config: &RegressorConfig) -> Result<BoostedModel> {
    Ok(boost(table, config, Order::First, "gbdt"))
}

/// Squared-error boosting with hessian 2 and L2 leaf penalty `lambda`.
pub fn fit_xgb(table: &FeatureTable, config: &RegressorConfig) -> Result<BoostedModel> {
    Ok(boost(table, config, Order::Second { lambda: config.lambda }, "xgb"))
}
