//! Ordinary least squares and linear epsilon-insensitive SVR.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::knn::column_stats;
use super::{FeatureTable, RegressorConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl LinearModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(row).map(|(w, x)| w * x).sum::<f64>()
    }
}

/// Least squares through a Householder QR of `[1 | X]`.
pub fn fit_ols(table: &FeatureTable) -> Result<LinearModel> {
    let n = table.n_rows();
    let p = table.n_features();
    if n <= p {
        return Err(Error::InsufficientData(format!("OLS needs more than {p} rows, got {n}")));
    }
    let x = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { table.get(i, j - 1) });
    let y = DVector::from_column_slice(table.target());
    let qr = x.clone().qr();
    let r = qr.r();
    // Without pivoting, the first near-zero diagonal marks the first column
    // that is a combination of the ones before it.
    for j in 0..=p {
        let norm = x.column(j).norm();
        if norm == 0.0 || r[(j, j)].abs() <= 1e-10 * norm {
            let column = if j == 0 { "intercept".to_string() } else { table.feature_names()[j - 1].clone() };
            return Err(Error::Singular { column });
        }
    }
    let qty = qr.q().transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    Ok(LinearModel {
        intercept: beta[0],
        coefficients: beta.iter().skip(1).copied().collect(),
    })
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Minimizes `C * sum max(0, |y - w.z - b| - eps) + |w|^2 / 2` over
/// standardized features `z` by full-batch subgradient steps of size
/// `lr / sqrt(t)` on the objective divided by n, keeping the best iterate.
/// Coefficients are mapped back to raw feature units.
pub fn fit_svr(table: &FeatureTable, config: &RegressorConfig) -> Result<LinearModel> {
    let n = table.n_rows();
    let p = table.n_features();
    let (mean, scale) = column_stats(table);
    let z: Vec<Vec<f64>> = table
        .rows()
        .map(|r| r.iter().zip(&mean).zip(&scale).map(|((v, m), s)| (v - m) / s).collect())
        .collect();
    let y = table.target();
    let (c, eps) = (config.c, config.epsilon);
    let nf = n as f64;

    let objective = |w: &[f64], b: f64| {
        let hinge: f64 = z
            .iter()
            .zip(y)
            .map(|(zi, yi)| {
                let r = yi - b - zi.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
                (r.abs() - eps).max(0.0)
            })
            .sum();
        c * hinge + 0.5 * w.iter().map(|v| v * v).sum::<f64>()
    };

    let mut w = vec![0.0; p];
    let mut b = median(y);
    let mut best = (objective(&w, b), w.clone(), b);
    for t in 1..=config.epochs {
        let mut gw: Vec<f64> = w.iter().map(|v| v / nf).collect();
        let mut gb = 0.0;
        for (zi, yi) in z.iter().zip(y) {
            let r = yi - b - zi.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
            if r.abs() > eps {
                let s = c * r.signum() / nf;
                gb -= s;
                for (g, zv) in gw.iter_mut().zip(zi) {
                    *g -= s * zv;
                }
            }
        }
        let step = config.svr_lr / (t as f64).sqrt();
        b -= step * gb;
        for (wv, g) in w.iter_mut().zip(&gw) {
            *wv -= step * g;
        }
        let obj = objective(&w, b);
        if !obj.is_finite() {
            return Err(Error::Numerical(format!("svr objective diverged at step {t}")));
        }
        if obj < best.0 {
            best = (obj, w.clone(), b);
        }
    }
    let (_, w, b) = best;
    let coefficients: Vec<f64> = w.iter().zip(&scale).map(|(wv, s)| wv / s).collect();
    let intercept = b - coefficients.iter().zip(&mean).map(|(c, m)| c * m).sum::<f64>();
    Ok(LinearModel {
        intercept,
        coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regressors::ModelKind;

    fn line(n: usize) -> FeatureTable {
        let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        FeatureTable::new(vec!["x".into()], xs.iter().map(|&x| vec![x]).collect(), xs.iter().map(|x| 2.0 * x + 1.0).collect())
            .unwrap()
    }

    #[test]
    fn exact_line() {
        let m = fit_ols(&line(10)).unwrap();
        assert!((m.coefficients[0] - 2.0).abs() < 1e-10 && (m.intercept - 1.0).abs() < 1e-10);
    }

    #[test]
    fn constant_target() {
        let t = FeatureTable::new(vec!["x".into()], (0..6).map(|i| vec![f64::from(i)]).collect(), vec![4.0; 6]).unwrap();
        let m = fit_ols(&t).unwrap();
        assert!(m.coefficients[0].abs() < 1e-10 && (m.intercept - 4.0).abs() < 1e-10);
    }

    #[test]
    fn duplicate_column_is_named() {
        let t = FeatureTable::new(
            vec!["a".into(), "b".into(), "a_copy".into()],
            (0..8).map(|i| vec![f64::from(i), f64::from(i * i % 5), f64::from(i)]).collect(),
            (1..=8).map(f64::from).collect(),
        )
        .unwrap();
        match fit_ols(&t) {
            Err(Error::Singular { column }) => assert_eq!(column, "a_copy"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn svr_huge_epsilon_gives_zero_slope() {
        let mut c = RegressorConfig::new(ModelKind::Svr);
        c.epsilon = 1e6;
        let m = fit_svr(&line(10), &c).unwrap();
        assert_eq!(m.coefficients[0], 0.0);
    }
}
