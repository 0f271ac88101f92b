//! Regression model zoo.
//!
//! Every model fits a [`FeatureTable`] and predicts duration minutes for a
//! feature row. Trees, forests and both boosters share one exact-split tree
//! grower; kNN, OLS and linear SVR are stand-alone.

mod boost;
mod knn;
mod linear;
mod tree;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use boost::{fit_gbdt, fit_xgb, xgb_leaf_weight, BoostedModel};
pub use knn::{fit_knn, KnnModel};
pub use linear::{fit_ols, fit_svr, LinearModel};
pub use tree::{best_split, fit_rf, fit_tree, predict_tree, ForestModel, SplitCandidate, TreeNode};

pub const FORMAT_VERSION: u32 = 1;

/// Rows of features with a positive duration target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    feature_names: Vec<String>,
    values: Vec<f64>,
    target: Vec<f64>,
}

impl FeatureTable {
    pub fn new(feature_names: Vec<String>, rows: Vec<Vec<f64>>, target: Vec<f64>) -> Result<Self> {
        let p = feature_names.len();
        if rows.len() != target.len() {
            return Err(Error::Dimension(format!("{} rows but {} targets", rows.len(), target.len())));
        }
        let mut values = Vec::with_capacity(rows.len() * p);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != p {
                return Err(Error::Dimension(format!("row {i} has {} values, expected {p}", r.len())));
            }
            values.extend(r);
        }
        Self::from_flat(feature_names, values, target)
    }

    pub fn from_flat(feature_names: Vec<String>, values: Vec<f64>, target: Vec<f64>) -> Result<Self> {
        if values.len() != feature_names.len() * target.len() {
            return Err(Error::Dimension("feature matrix does not match names x targets".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            let p = feature_names.len().max(1);
            return Err(Error::Numerical(format!(
                "non-finite value in row {} column {}",
                i / p,
                feature_names.get(i % p).map(String::as_str).unwrap_or("?")
            )));
        }
        if let Some(i) = target.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Numerical(format!("target in row {i} must be positive, got {}", target[i])));
        }
        Ok(Self {
            feature_names,
            values,
            target,
        })
    }

    /// Like `from_flat` but accepts any finite target, for score regressions
    /// such as one-vs-rest classification on 0/1 labels.
    pub(crate) fn with_free_target(feature_names: Vec<String>, values: Vec<f64>, target: Vec<f64>) -> Result<Self> {
        if target.iter().any(|t| !t.is_finite()) {
            return Err(Error::Numerical("non-finite target".into()));
        }
        let placeholder = vec![1.0; target.len()];
        let mut t = Self::from_flat(feature_names, values, placeholder)?;
        t.target = target;
        Ok(t)
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_features();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn get(&self, i: usize, f: usize) -> f64 {
        self.values[i * self.n_features() + f]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows()).map(|i| self.row(i))
    }

    /// Table restricted to `idx`, in that order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut values = Vec::with_capacity(idx.len() * self.n_features());
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        Self {
            feature_names: self.feature_names.clone(),
            values,
            target: idx.iter().map(|&i| self.target[i]).collect(),
        }
    }

    /// Append columns; `extra[i]` extends row `i`.
    pub fn with_columns(&self, names: &[String], extra: &[Vec<f64>]) -> Result<Self> {
        if extra.len() != self.n_rows() {
            return Err(Error::Dimension(format!("{} extra rows for {} rows", extra.len(), self.n_rows())));
        }
        let mut feature_names = self.feature_names.clone();
        feature_names.extend(names.iter().cloned());
        let rows = (0..self.n_rows())
            .map(|i| {
                let mut r = self.row(i).to_vec();
                r.extend_from_slice(&extra[i]);
                r
            })
            .collect();
        Self::new(feature_names, rows, self.target.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Dt,
    Rf,
    Gbdt,
    Xgb,
    Knn,
    Ols,
    Svr,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Dt,
        ModelKind::Rf,
        ModelKind::Gbdt,
        ModelKind::Xgb,
        ModelKind::Knn,
        ModelKind::Ols,
        ModelKind::Svr,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ModelKind::Dt => "dt",
            ModelKind::Rf => "rf",
            ModelKind::Gbdt => "gbdt",
            ModelKind::Xgb => "xgb",
            ModelKind::Knn => "knn",
            ModelKind::Ols => "ols",
            ModelKind::Svr => "svr",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Dt => "DecisionTree",
            ModelKind::Rf => "RandomForest",
            ModelKind::Gbdt => "GBDT",
            ModelKind::Xgb => "XGBoost",
            ModelKind::Knn => "kNN",
            ModelKind::Ols => "OLS",
            ModelKind::Svr => "SVR",
        }
    }

    pub fn is_randomized(self) -> bool {
        matches!(self, ModelKind::Rf | ModelKind::Gbdt | ModelKind::Xgb | ModelKind::Svr)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        ModelKind::ALL
            .into_iter()
            .find(|k| k.code().eq_ignore_ascii_case(s) || k.display_name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown model kind `{s}`")))
    }
}

/// Model kind plus hyperparameters. Fields a kind does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegressorConfig {
    pub kind: ModelKind,
    /// `None` grows until leaves are pure or too small.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub n_trees: usize,
    pub learning_rate: f64,
    /// Row fraction drawn without replacement per boosting stage.
    pub subsample: f64,
    /// Features tried per split; `None` means all for single trees and
    /// boosters, ceil(sqrt(p)) for forests.
    pub max_features: Option<usize>,
    /// Forest bootstrap; off only in tests.
    pub bootstrap: bool,
    pub k: usize,
    pub lambda: f64,
    pub epsilon: f64,
    pub c: f64,
    pub svr_lr: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for RegressorConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Gbdt,
            max_depth: Some(5),
            min_samples_leaf: 1,
            n_trees: 100,
            learning_rate: 0.1,
            subsample: 1.0,
            max_features: None,
            bootstrap: true,
            k: 5,
            lambda: 1.0,
            epsilon: 0.5,
            c: 1.0,
            svr_lr: 0.1,
            epochs: 1000,
            seed: 0,
        }
    }
}

impl RegressorConfig {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("{}: {m}", self.kind)));
        match self.kind {
            ModelKind::Dt | ModelKind::Rf | ModelKind::Gbdt | ModelKind::Xgb => {
                if self.min_samples_leaf == 0 {
                    return bad("min_samples_leaf must be at least 1");
                }
                if self.max_depth == Some(0) {
                    return bad("max_depth must be at least 1");
                }
                if self.max_features == Some(0) {
                    return bad("max_features must be at least 1");
                }
            }
            _ => {}
        }
        match self.kind {
            ModelKind::Rf if self.n_trees == 0 => bad("n_trees must be at least 1"),
            ModelKind::Gbdt | ModelKind::Xgb if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) => {
                bad("learning_rate must be in (0, 1]")
            }
            ModelKind::Gbdt | ModelKind::Xgb if !(self.subsample > 0.0 && self.subsample <= 1.0) => {
                bad("subsample must be in (0, 1]")
            }
            ModelKind::Xgb if !(self.lambda >= 0.0) => bad("lambda must be non-negative"),
            ModelKind::Knn if self.k == 0 => bad("k must be at least 1"),
            ModelKind::Svr if !(self.epsilon >= 0.0 && self.c > 0.0 && self.svr_lr > 0.0) => {
                bad("epsilon must be non-negative, c and svr_lr positive")
            }
            _ => Ok(()),
        }
    }

    /// Copy with the seed mixed with a fold index.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// Tuning candidates for each kind.
pub fn default_grid(kind: ModelKind) -> Vec<RegressorConfig> {
    let base = RegressorConfig::new(kind);
    let mut out = Vec::new();
    let depths = [Some(3), Some(5), Some(8)];
    match kind {
        ModelKind::Dt => {
            for max_depth in depths {
                for min_samples_leaf in [1, 5] {
                    out.push(RegressorConfig {
                        max_depth,
                        min_samples_leaf,
                        ..base.clone()
                    });
                }
            }
        }
        ModelKind::Rf => {
            for n_trees in [100, 300] {
                for max_depth in depths {
                    for min_samples_leaf in [1, 5] {
                        out.push(RegressorConfig {
                            n_trees,
                            max_depth,
                            min_samples_leaf,
                            ..base.clone()
                        });
                    }
                }
            }
        }
        ModelKind::Gbdt | ModelKind::Xgb => {
            for n_trees in [100, 300] {
                for max_depth in depths {
                    for learning_rate in [0.05, 0.1] {
                        if kind == ModelKind::Gbdt {
                            for min_samples_leaf in [1, 5] {
                                out.push(RegressorConfig {
                                    n_trees,
                                    max_depth,
                                    learning_rate,
                                    min_samples_leaf,
                                    ..base.clone()
                                });
                            }
                        } else {
                            for lambda in [0.0, 1.0, 10.0] {
                                out.push(RegressorConfig {
                                    n_trees,
                                    max_depth,
                                    learning_rate,
                                    lambda,
                                    ..base.clone()
                                });
                            }
                        }
                    }
                }
            }
        }
        ModelKind::Knn => {
            for k in [3, 5, 9] {
                out.push(RegressorConfig { k, ..base.clone() });
            }
        }
        ModelKind::Ols | ModelKind::Svr => out.push(base),
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum TrainedRegressor {
    Dt { root: TreeNode },
    Rf(ForestModel),
    Gbdt(BoostedModel),
    Xgb(BoostedModel),
    Knn(KnnModel),
    Ols(LinearModel),
    Svr(LinearModel),
}

impl TrainedRegressor {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match self {
            TrainedRegressor::Dt { root } => predict_tree(root, row),
            TrainedRegressor::Rf(m) => m.predict_row(row),
            TrainedRegressor::Gbdt(m) | TrainedRegressor::Xgb(m) => m.predict_row(row),
            TrainedRegressor::Knn(m) => m.predict_row(row),
            TrainedRegressor::Ols(m) | TrainedRegressor::Svr(m) => m.predict_row(row),
        }
    }

    pub fn predict(&self, table: &FeatureTable) -> Vec<f64> {
        table.rows().map(|r| self.predict_row(r)).collect()
    }
}

pub fn fit(table: &FeatureTable, config: &RegressorConfig) -> Result<TrainedRegressor> {
    config.validate()?;
    if table.n_rows() == 0 {
        return Err(Error::InsufficientData("cannot fit on an empty table".into()));
    }
    Ok(match config.kind {
        ModelKind::Dt => TrainedRegressor::Dt {
            root: fit_tree(table, config)?,
        },
        ModelKind::Rf => TrainedRegressor::Rf(fit_rf(table, config)?),
        ModelKind::Gbdt => TrainedRegressor::Gbdt(fit_gbdt(table, config)?),
        ModelKind::Xgb => TrainedRegressor::Xgb(fit_xgb(table, config)?),
        ModelKind::Knn => TrainedRegressor::Knn(fit_knn(table, config.k)?),
        ModelKind::Ols => TrainedRegressor::Ols(fit_ols(table)?),
        ModelKind::Svr => TrainedRegressor::Svr(fit_svr(table, config)?),
    })
}

/// Versioned on-disk model with its config and column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub config: RegressorConfig,
    pub feature_names: Vec<String>,
    pub model: TrainedRegressor,
}

impl ModelFile {
    pub fn new(config: RegressorConfig, feature_names: Vec<String>, model: TrainedRegressor) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            config,
            feature_names,
            model,
        }
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_reader(reader);
        // Unlimited-depth trees nest deeper than the default guard allows.
        de.disable_recursion_limit();
        let file = Self::deserialize(&mut de)?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::FormatVersion(file.format_version));
        }
        Ok(file)
    }

    /// Predict rows of `table`, which must carry the same columns in order.
    pub fn predict(&self, table: &FeatureTable) -> Result<Vec<f64>> {
        if table.feature_names() != self.feature_names.as_slice() {
            return Err(Error::Schema("feature columns differ from the trained model".into()));
        }
        Ok(self.model.predict(table))
    }
}
