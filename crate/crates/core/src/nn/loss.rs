use super::matrix::Dense2D;
use crate::error::{Error, Result};

/// Mean squared error over all elements with gradient `2 (pred - target) / n`.
pub fn mse(pred: &Dense2D, target: &Dense2D) -> Result<(f64, Dense2D)> {
    if pred.shape() != target.shape() || pred.data.is_empty() {
        return Err(Error::Dimension(format!(
            "mse shapes {:?} vs {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let n = pred.data.len() as f64;
    let mut grad = Dense2D::zeros(pred.rows, pred.cols);
    let mut total = 0.0;
    for ((g, p), t) in grad.data.iter_mut().zip(&pred.data).zip(&target.data) {
        let d = p - t;
        total += d * d;
        *g = 2.0 * d / n;
    }
    Ok((total / n, grad))
}

/// Row-wise softmax.
pub fn softmax(logits: &Dense2D) -> Dense2D {
    let mut out = logits.clone();
    for r in 0..out.rows {
        let row = out.row_mut(r);
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            s += *v;
        }
        for v in row.iter_mut() {
            *v /= s;
        }
    }
    out
}

/// Softmax cross-entropy, averaged over the batch. Targets must be one-hot.
pub fn softmax_ce(logits: &Dense2D, one_hot: &Dense2D) -> Result<(f64, Dense2D)> {
    if logits.shape() != one_hot.shape() || logits.rows == 0 {
        return Err(Error::Dimension(format!(
            "cross-entropy shapes {:?} vs {:?}",
            logits.shape(),
            one_hot.shape()
        )));
    }
    for r in 0..one_hot.rows {
        let row = one_hot.row(r);
        let ones = row.iter().filter(|&&v| v == 1.0).count();
        let zeros = row.iter().filter(|&&v| v == 0.0).count();
        if ones != 1 || ones + zeros != row.len() {
            return Err(Error::Dimension(format!("target row {r} is not one-hot")));
        }
    }
    let n = logits.rows as f64;
    let mut grad = softmax(logits);
    let mut total = 0.0;
    for r in 0..logits.rows {
        let z = logits.row(r);
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        let target = one_hot.row(r).iter().position(|&v| v == 1.0).expect("validated");
        total += lse - z[target];
        let g = grad.row_mut(r);
        g[target] -= 1.0;
        for v in g.iter_mut() {
            *v /= n;
        }
    }
    Ok((total / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, v: &[f64]) -> Dense2D {
        Dense2D::from_vec(rows, cols, v.to_vec()).unwrap()
    }

    #[test]
    fn mse_reference_values() {
        let (l, g) = mse(&m(1, 2, &[1.0, 2.0]), &m(1, 2, &[1.0, 2.0])).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.data.iter().all(|&v| v == 0.0));
        let (l, g) = mse(&m(1, 1, &[2.0]), &m(1, 1, &[0.0])).unwrap();
        assert_eq!(l, 4.0);
        assert_eq!(g.data, [4.0]);
    }

    #[test]
    fn uniform_logits_give_ln5() {
        let (l, _) = softmax_ce(&m(1, 5, &[0.3; 5]), &m(1, 5, &[0.0, 0.0, 1.0, 0.0, 0.0])).unwrap();
        assert!((l - 5f64.ln()).abs() < 1e-12);
        assert!((l - 1.6094).abs() < 1e-4);
    }

    #[test]
    fn shape_and_target_validation() {
        assert!(mse(&m(1, 2, &[0.0, 0.0]), &m(2, 1, &[0.0, 0.0])).is_err());
        assert!(softmax_ce(&m(1, 2, &[0.0, 0.0]), &m(1, 2, &[0.5, 0.5])).is_err());
    }
}
