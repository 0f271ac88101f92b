//! Smoothed TF-IDF over unigrams and bigrams.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowercased alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// All unigrams followed by all contiguous bigrams of a token list.
pub fn ngrams(tokens: &[String]) -> Vec<String> {
    let mut out: Vec<String> = tokens.to_vec();
    out.extend(tokens.windows(2).map(|w| format!("{} {}", w[0], w[1])));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfModel {
    /// N-gram to column; columns are in lexical order of the n-grams.
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    pub n_documents: usize,
}

/// Sparse row: (column, value) pairs in column order.
pub type SparseRow = Vec<(usize, f64)>;

pub fn tfidf_fit<S: AsRef<str>>(documents: &[S]) -> Result<TfIdfModel> {
    if documents.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "TF-IDF needs at least 2 documents, got {}",
            documents.len()
        )));
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for d in documents {
        let mut grams = ngrams(&tokenize(d.as_ref()));
        grams.sort();
        grams.dedup();
        for g in grams {
            *df.entry(g).or_default() += 1;
        }
    }
    if df.is_empty() {
        return Err(Error::InsufficientData("corpus has no tokens".into()));
    }
    let n = documents.len() as f64;
    let idf = df.values().map(|&c| ((1.0 + n) / (1.0 + c as f64)).ln() + 1.0).collect();
    let vocabulary = df.into_keys().enumerate().map(|(i, g)| (g, i)).collect();
    Ok(TfIdfModel {
        vocabulary,
        idf,
        n_documents: documents.len(),
    })
}

impl TfIdfModel {
    pub fn n_columns(&self) -> usize {
        self.idf.len()
    }

    /// Raw counts times idf, L2-normalized. Unknown n-grams are dropped.
    pub fn transform(&self, text: &str) -> SparseRow {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for g in ngrams(&tokenize(text)) {
            if let Some(&c) = self.vocabulary.get(&g) {
                *counts.entry(c).or_default() += 1.0;
            }
        }
        let mut row: SparseRow = counts.into_iter().map(|(c, tf)| (c, tf * self.idf[c])).collect();
        let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, v) in &mut row {
                *v /= norm;
            }
        }
        row
    }

    pub fn transform_dense(&self, text: &str) -> Vec<f64> {
        let mut out = vec![0.0; self.n_columns()];
        for (c, v) in self.transform(text) {
            out[c] = v;
        }
        out
    }

    pub fn idf_of(&self, gram: &str) -> Option<f64> {
        self.vocabulary.get(gram).map(|&c| self.idf[c])
    }
}
