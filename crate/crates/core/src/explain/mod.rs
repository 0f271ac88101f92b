//! Word importance for incident descriptions.
//!
//! A description goes through TF-IDF over unigrams and bigrams, a randomized
//! truncated SVD and a one-vs-rest GBDT classifier (severity levels or
//! duration tertiles). LIME then explains one class score of that chain by
//! masking words.

mod classify;
mod lime;
mod svd;
mod tfidf;

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regressors::{ModelKind, RegressorConfig};

pub use classify::{duration_tertiles, fit_group_classifier, DurationGroups, GroupClassifier};
pub use lime::{lime_explain, weighted_ridge, ClassScorer, LimeOptions, WordImportance};
pub use svd::{truncated_svd, SvdModel, DEFAULT_COMPONENTS, DEFAULT_POWER_ITERATIONS};
pub use tfidf::{ngrams, tfidf_fit, tokenize, SparseRow, TfIdfModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainConfig {
    pub components: usize,
    pub n_iter: usize,
    pub seed: u64,
    pub classifier: RegressorConfig,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            components: DEFAULT_COMPONENTS,
            n_iter: DEFAULT_POWER_ITERATIONS,
            seed: 0,
            classifier: RegressorConfig::new(ModelKind::Gbdt),
        }
    }
}

/// Fitted text-to-class-score pipeline. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextChain {
    pub tfidf: TfIdfModel,
    pub svd: SvdModel,
    pub classifier: GroupClassifier,
}

/// Fit TF-IDF, SVD and the classifier on one labelled corpus.
pub fn fit_text_chain<S: AsRef<str>>(descriptions: &[S], labels: &[usize], config: &ChainConfig) -> Result<TextChain> {
    if descriptions.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} descriptions for {} labels",
            descriptions.len(),
            labels.len()
        )));
    }
    let tfidf = tfidf_fit(descriptions)?;
    let mut x = DMatrix::<f64>::zeros(descriptions.len(), tfidf.n_columns());
    for (i, d) in descriptions.iter().enumerate() {
        for (j, v) in tfidf.transform(d.as_ref()) {
            x[(i, j)] = v;
        }
    }
    let (svd, reduced) = truncated_svd(&x, config.components, config.n_iter, config.seed)?;
    let rows: Vec<Vec<f64>> = reduced.row_iter().map(|r| r.iter().copied().collect()).collect();
    let classifier = fit_group_classifier(&rows, labels, &config.classifier.reseeded(config.seed))?;
    Ok(TextChain { tfidf, svd, classifier })
}

impl TextChain {
    pub fn features(&self, text: &str) -> Vec<f64> {
        self.svd.transform_sparse(&self.tfidf.transform(text))
    }

    pub fn predict(&self, text: &str) -> usize {
        self.classifier.predict(&self.features(text))
    }
}

impl ClassScorer for TextChain {
    fn score(&self, text: &str, class: usize) -> Result<f64> {
        self.classifier.score(&self.features(text), class)
    }
}

pub fn write_explanation<W: Write>(writer: W, items: &[WordImportance]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["class", "token", "weight"])?;
    for it in items {
        w.write_record([it.class.to_string(), it.token.clone(), it.weight.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
