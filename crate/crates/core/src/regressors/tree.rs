//! Exact greedy regression trees and random forests.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{FeatureTable, RegressorConfig};
use crate::error::Result;
use crate::seed::{self, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum TreeNode {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
    },
}

impl TreeNode {
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }
}

pub fn predict_tree(root: &TreeNode, row: &[f64]) -> f64 {
    let mut node = root;
    loop {
        match node {
            TreeNode::Leaf { value } => return *value,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => node = if row[*feature] <= *threshold { left } else { right },
        }
    }
}

/// Controls for one grown tree. Per-sample gradient `g` and hessian `h`
/// drive both the split score `G^2 / (H + lambda)` and the leaf weight
/// `-G / (H + lambda)`; with `g = -y`, `h = 1`, `lambda = 0` the gain is
/// half the SSE decrease and leaves hold means.
pub(crate) struct GrowSpec {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub lambda: f64,
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    /// Half the decrease of the node objective; SSE decrease / 2 for plain trees.
    pub gain: f64,
    n_left: usize,
}

struct Grower<'a> {
    table: &'a FeatureTable,
    samples: &'a [usize],
    g: &'a [f64],
    h: &'a [f64],
    spec: &'a GrowSpec,
    rng: Option<&'a mut Rng>,
    left_flag: Vec<bool>,
}

impl Grower<'_> {
    fn x(&self, pos: usize, f: usize) -> f64 {
        self.table.get(self.samples[pos], f)
    }

    fn score(&self, g: f64, h: f64) -> f64 {
        let d = h + self.spec.lambda;
        if d > 0.0 {
            g * g / d
        } else {
            0.0
        }
    }

    fn leaf(&self, members: &[usize]) -> TreeNode {
        let (g, h) = members.iter().fold((0.0, 0.0), |(g, h), &s| (g + self.g[s], h + self.h[s]));
        let d = h + self.spec.lambda;
        TreeNode::Leaf {
            value: if d > 0.0 { -g / d } else { 0.0 },
        }
    }

    fn features_to_try(&mut self) -> Vec<usize> {
        let p = self.table.n_features();
        match (self.spec.max_features, self.rng.as_deref_mut()) {
            (Some(m), Some(rng)) if m < p => {
                let mut all: Vec<usize> = (0..p).collect();
                for i in 0..m {
                    let j = rng.random_range(i..p);
                    all.swap(i, j);
                }
                let mut chosen = all[..m].to_vec();
                chosen.sort_unstable();
                chosen
            }
            _ => (0..p).collect(),
        }
    }

    fn find_split(&mut self, sorted: &[Vec<usize>]) -> Option<SplitCandidate> {
        let members = &sorted[0];
        let n = members.len();
        let msl = self.spec.min_samples_leaf;
        let (g_tot, h_tot) = members.iter().fold((0.0, 0.0), |(g, h), &s| (g + self.g[s], h + self.h[s]));
        let parent = self.score(g_tot, h_tot);
        // Rounding noise in the gain scales with the summed squared gradients.
        let energy: f64 = members.iter().map(|&s| self.g[s] * self.g[s] / self.h[s].max(f64::MIN_POSITIVE)).sum();
        let tol = 1e-12 * energy;
        let mut best: Option<SplitCandidate> = None;
        for f in self.features_to_try() {
            let order = &sorted[f];
            let (mut gl, mut hl) = (0.0, 0.0);
            for i in 0..n - 1 {
                let s = order[i];
                gl += self.g[s];
                hl += self.h[s];
                let n_left = i + 1;
                if n_left < msl || n - n_left < msl {
                    continue;
                }
                let (v, v_next) = (self.x(s, f), self.x(order[i + 1], f));
                if !(v < v_next) {
                    continue;
                }
                let gain = 0.5 * (self.score(gl, hl) + self.score(g_tot - gl, h_tot - hl) - parent);
                if gain > tol && best.is_none_or(|b| gain > b.gain) {
                    let mut threshold = v + (v_next - v) / 2.0;
                    if threshold >= v_next {
                        threshold = v;
                    }
                    best = Some(SplitCandidate {
                        feature: f,
                        threshold,
                        gain,
                        n_left,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, sorted: Vec<Vec<usize>>, depth: usize) -> TreeNode {
        let n = sorted[0].len();
        let at_limit = self.spec.max_depth.is_some_and(|d| depth >= d);
        if at_limit || n < 2 * self.spec.min_samples_leaf || n < 2 {
            return self.leaf(&sorted[0]);
        }
        let Some(split) = self.find_split(&sorted) else {
            return self.leaf(&sorted[0]);
        };
        for &s in &sorted[split.feature][..split.n_left] {
            self.left_flag[s] = true;
        }
        let mut left = Vec::with_capacity(sorted.len());
        let mut right = Vec::with_capacity(sorted.len());
        for order in &sorted {
            let (l, r): (Vec<usize>, Vec<usize>) = order.iter().partition(|&&s| self.left_flag[s]);
            left.push(l);
            right.push(r);
        }
        for &s in &sorted[split.feature][..split.n_left] {
            self.left_flag[s] = false;
        }
        drop(sorted);
        TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.grow(left, depth + 1)),
            right: Box::new(self.grow(right, depth + 1)),
        }
    }
}

fn presort(table: &FeatureTable, samples: &[usize]) -> Vec<Vec<usize>> {
    let p = table.n_features().max(1);
    (0..p)
        .map(|f| {
            let mut order: Vec<usize> = (0..samples.len()).collect();
            if f < table.n_features() {
                order.sort_by(|&a, &b| table.get(samples[a], f).total_cmp(&table.get(samples[b], f)).then(a.cmp(&b)));
            }
            order
        })
        .collect()
}

/// Grow one tree over `samples` (row indices, repeats allowed); `g` and `h`
/// are indexed by position in `samples`.
pub(crate) fn grow_tree(
    table: &FeatureTable,
    samples: &[usize],
    g: &[f64],
    h: &[f64],
    spec: &GrowSpec,
    rng: Option<&mut Rng>,
) -> TreeNode {
    let sorted = presort(table, samples);
    let mut grower = Grower {
        table,
        samples,
        g,
        h,
        spec,
        rng,
        left_flag: vec![false; samples.len()],
    };
    if table.n_features() == 0 {
        return grower.leaf(&sorted[0]);
    }
    grower.grow(sorted, 0)
}

/// Best SSE split of the whole table, or `None` if no split lowers SSE.
pub fn best_split(table: &FeatureTable, min_samples_leaf: usize) -> Option<SplitCandidate> {
    let samples: Vec<usize> = (0..table.n_rows()).collect();
    let g: Vec<f64> = table.target().iter().map(|y| -y).collect();
    let h = vec![1.0; samples.len()];
    let spec = GrowSpec {
        max_depth: Some(1),
        min_samples_leaf: min_samples_leaf.max(1),
        lambda: 0.0,
        max_features: None,
    };
    if table.n_features() == 0 || samples.len() < 2 {
        return None;
    }
    let sorted = presort(table, &samples);
    let mut grower = Grower {
        table,
        samples: &samples,
        g: &g,
        h: &h,
        spec: &spec,
        rng: None,
        left_flag: vec![false; samples.len()],
    };
    grower.find_split(&sorted).map(|s| SplitCandidate { gain: 2.0 * s.gain, ..s })
}

fn sse_spec(config: &RegressorConfig, max_features: Option<usize>) -> GrowSpec {
    GrowSpec {
        max_depth: config.max_depth,
        min_samples_leaf: config.min_samples_leaf,
        lambda: 0.0,
        max_features,
    }
}

pub fn fit_tree(table: &FeatureTable, config: &RegressorConfig) -> Result<TreeNode> {
    let samples: Vec<usize> = (0..table.n_rows()).collect();
    let g: Vec<f64> = table.target().iter().map(|y| -y).collect();
    let h = vec![1.0; samples.len()];
    let mut rng = seed::rng_for(config.seed, "tree");
    Ok(grow_tree(table, &samples, &g, &h, &sse_spec(config, config.max_features), Some(&mut rng)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeNode>,
}

impl ForestModel {
    pub fn tree_predictions(&self, row: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| predict_tree(t, row)).collect()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| predict_tree(t, row)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Bagged trees with ceil(sqrt(p)) features tried per split unless overridden.
pub fn fit_rf(table: &FeatureTable, config: &RegressorConfig) -> Result<ForestModel> {
    let n = table.n_rows();
    let p = table.n_features();
    let m = config.max_features.unwrap_or_else(|| (p as f64).sqrt().ceil() as usize).max(1);
    let spec = sse_spec(config, Some(m));
    let trees = (0..config.n_trees)
        .map(|t| {
            let mut rng = seed::rng_for(config.seed, &format!("rf-tree-{t}"));
            let samples: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let g: Vec<f64> = samples.iter().map(|&r| -table.target()[r]).collect();
            let h = vec![1.0; samples.len()];
            grow_tree(table, &samples, &g, &h, &spec, Some(&mut rng))
        })
        .collect();
    Ok(ForestModel { trees })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regressors::ModelKind;

    fn table(xs: &[f64], ys: &[f64]) -> FeatureTable {
        FeatureTable::new(vec!["x".into()], xs.iter().map(|&x| vec![x]).collect(), ys.to_vec()).unwrap()
    }

    #[test]
    fn constant_target_is_a_single_leaf() {
        let t = table(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.1 * 3.0; 5]);
        let root = fit_tree(&t, &RegressorConfig::new(ModelKind::Dt)).unwrap();
        assert_eq!(root.n_leaves(), 1);
        assert!((predict_tree(&root, &[9.0]) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn perfect_split() {
        let t = table(&[0.0, 0.0, 1.0, 1.0], &[1.0, 1.0, 9.0, 9.0]);
        let root = fit_tree(&t, &RegressorConfig::new(ModelKind::Dt)).unwrap();
        assert_eq!(
            root,
            TreeNode::Split {
                feature: 0,
                threshold: 0.5,
                left: Box::new(TreeNode::Leaf { value: 1.0 }),
                right: Box::new(TreeNode::Leaf { value: 9.0 }),
            }
        );
    }

    #[test]
    fn depth_and_leaf_size_limits() {
        let xs: Vec<f64> = (0..32).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 + x * x).collect();
        let t = table(&xs, &ys);
        let mut c = RegressorConfig::new(ModelKind::Dt);
        c.max_depth = Some(3);
        c.min_samples_leaf = 3;
        let root = fit_tree(&t, &c).unwrap();
        assert!(root.depth() <= 3);
        fn min_leaf(n: &TreeNode, t: &FeatureTable, rows: Vec<usize>) -> usize {
            match n {
                TreeNode::Leaf { .. } => rows.len(),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let (l, r) = rows.into_iter().partition(|&i| t.get(i, *feature) <= *threshold);
                    min_leaf(left, t, l).min(min_leaf(right, t, r))
                }
            }
        }
        assert!(min_leaf(&root, &t, (0..32).collect()) >= 3);
    }

    #[test]
    fn degenerate_forest_equals_tree() {
        let t = table(&[3.0, 1.0, 4.0, 1.5, 5.0, 9.0, 2.0, 6.0], &[2.0, 7.0, 1.0, 8.0, 2.0, 8.0, 1.0, 8.0]);
        let mut c = RegressorConfig::new(ModelKind::Rf);
        c.n_trees = 1;
        c.bootstrap = false;
        c.max_depth = None;
        let forest = fit_rf(&t, &c).unwrap();
        let mut d = c.clone();
        d.kind = ModelKind::Dt;
        assert_eq!(forest.trees[0], fit_tree(&t, &d).unwrap());
    }
}
