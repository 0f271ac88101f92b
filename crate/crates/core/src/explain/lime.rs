//! Local word importance by masked-word perturbation and weighted ridge.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::tfidf::tokenize;
use crate::error::{Error, Result};
use crate::seed;

/// Score of one class for a raw description.
pub trait ClassScorer {
    fn score(&self, text: &str, class: usize) -> Result<f64>;
}

impl<F: Fn(&str, usize) -> f64> ClassScorer for F {
    fn score(&self, text: &str, class: usize) -> Result<f64> {
        Ok(self(text, class))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeOptions {
    pub n_samples: usize,
    pub kernel_width: f64,
    pub alpha: f64,
    pub top: usize,
    pub seed: u64,
}

impl Default for LimeOptions {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            kernel_width: 0.75,
            alpha: 1.0,
            top: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordImportance {
    pub class: usize,
    pub token: String,
    pub weight: f64,
}

/// Cosine distance of a presence vector with `kept` ones from the all-ones
/// vector of length `d`.
fn cosine_distance(kept: usize, d: usize) -> f64 {
    if kept == 0 {
        1.0
    } else {
        1.0 - (kept as f64 / d as f64).sqrt()
    }
}

/// Importance of each distinct word of `description` for `class`, largest
/// magnitude first, at most `opts.top` entries. Masking a word removes every
/// occurrence of it. The first sample is the unmasked description.
pub fn lime_explain<S: ClassScorer + ?Sized>(
    description: &str,
    scorer: &S,
    class: usize,
    opts: &LimeOptions,
) -> Result<Vec<WordImportance>> {
    let tokens = tokenize(description);
    let mut words = tokens.clone();
    words.sort();
    words.dedup();
    let d = words.len();
    if d == 0 {
        return Err(Error::Encoding("description has no tokens to explain".into()));
    }
    if opts.n_samples < 2 || !(opts.kernel_width > 0.0) || !(opts.alpha >= 0.0) {
        return Err(Error::Config("LIME needs n_samples >= 2, kernel_width > 0 and alpha >= 0".into()));
    }
    let mut rng = seed::rng_for(opts.seed, "lime");
    let n = opts.n_samples;
    let mut z = DMatrix::<f64>::zeros(n, d);
    let mut y = DVector::<f64>::zeros(n);
    let mut w = DVector::<f64>::zeros(n);
    for s in 0..n {
        let keep: Vec<bool> = if s == 0 {
            vec![true; d]
        } else {
            (0..d).map(|_| rng.random_bool(0.5)).collect()
        };
        let text: Vec<&str> = tokens
            .iter()
            .filter(|t| keep[words.binary_search(t).expect("word list covers tokens")])
            .map(String::as_str)
            .collect();
        for (j, &k) in keep.iter().enumerate() {
            z[(s, j)] = f64::from(u8::from(k));
        }
        let dist = cosine_distance(keep.iter().filter(|&&k| k).count(), d);
        w[s] = (-dist * dist / (opts.kernel_width * opts.kernel_width)).exp();
        y[s] = scorer.score(&text.join(" "), class)?;
        if !y[s].is_finite() {
            return Err(Error::Numerical("scorer returned a non-finite score".into()));
        }
    }
    let coef = weighted_ridge(&z, &y, &w, opts.alpha)?;
    let mut out: Vec<WordImportance> = words
        .into_iter()
        .zip(coef.iter())
        .map(|(token, &weight)| WordImportance { class, token, weight })
        .collect();
    out.sort_by(|a, b| b.weight.abs().total_cmp(&a.weight.abs()).then_with(|| a.token.cmp(&b.token)));
    out.truncate(opts.top);
    Ok(out)
}

/// Minimize sum_i w_i (y_i - b - z_i.beta)^2 + alpha |beta|^2 with an
/// unpenalized intercept; returns beta.
pub fn weighted_ridge(z: &DMatrix<f64>, y: &DVector<f64>, w: &DVector<f64>, alpha: f64) -> Result<DVector<f64>> {
    let sw = w.sum();
    if !(sw > 0.0) {
        return Err(Error::Numerical("ridge weights sum to zero".into()));
    }
    let d = z.ncols();
    let zbar = DVector::from_fn(d, |j, _| z.column(j).dot(w) / sw);
    let ybar = y.dot(w) / sw;
    let mut zc = z.clone();
    for j in 0..d {
        for i in 0..z.nrows() {
            zc[(i, j)] = (z[(i, j)] - zbar[j]) * w[i].sqrt();
        }
    }
    let yc = DVector::from_fn(y.len(), |i, _| (y[i] - ybar) * w[i].sqrt());
    let mut a = zc.tr_mul(&zc);
    for j in 0..d {
        a[(j, j)] += alpha;
    }
    let rhs = zc.tr_mul(&yc);
    a.lu().solve(&rhs).ok_or_else(|| Error::Singular {
        column: "ridge system".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ridge_without_penalty_recovers_a_line() {
        let z = DMatrix::from_fn(8, 2, |i, j| if j == 0 { i as f64 } else { (i * i % 5) as f64 });
        let y = DVector::from_fn(8, |i, _| 2.0 + 3.0 * z[(i, 0)] - z[(i, 1)]);
        let w = DVector::from_fn(8, |i, _| 1.0 + i as f64);
        let b = weighted_ridge(&z, &y, &w, 0.0).unwrap();
        assert!((b[0] - 3.0).abs() < 1e-9 && (b[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_description_is_rejected() {
        let f = |_: &str, _: usize| 0.0;
        assert!(matches!(lime_explain("  ..", &f, 1, &LimeOptions::default()), Err(Error::Encoding(_))));
    }
}
