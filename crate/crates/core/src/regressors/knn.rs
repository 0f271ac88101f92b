//! k-nearest-neighbour regression on standardized features.

use serde::{Deserialize, Serialize};

use super::FeatureTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub mean: Vec<f64>,
    /// Train-set standard deviations; zero-spread columns use 1.
    pub scale: Vec<f64>,
    /// Standardized training rows, row-major.
    pub points: Vec<f64>,
    pub target: Vec<f64>,
}

pub(crate) fn column_stats(table: &FeatureTable) -> (Vec<f64>, Vec<f64>) {
    let n = table.n_rows() as f64;
    let p = table.n_features();
    let mut mean = vec![0.0; p];
    for r in table.rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v / n;
        }
    }
    let mut var = vec![0.0; p];
    for r in table.rows() {
        for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    let scale = var.into_iter().map(|v| if v > 0.0 { v.sqrt() } else { 1.0 }).collect();
    (mean, scale)
}

pub fn fit_knn(table: &FeatureTable, k: usize) -> Result<KnnModel> {
    if k == 0 || k > table.n_rows() {
        return Err(Error::Config(format!("k = {k} must be in 1..={}", table.n_rows())));
    }
    let (mean, scale) = column_stats(table);
    let points = table
        .rows()
        .flat_map(|r| r.iter().zip(&mean).zip(&scale).map(|((v, m), s)| (v - m) / s).collect::<Vec<_>>())
        .collect();
    Ok(KnnModel {
        k,
        mean,
        scale,
        points,
        target: table.target().to_vec(),
    })
}

impl KnnModel {
    /// Indices of the k nearest training rows; equal distances go to the lower index.
    pub fn neighbours(&self, row: &[f64]) -> Vec<usize> {
        let p = self.mean.len();
        let q: Vec<f64> = row.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect();
        let mut d: Vec<(f64, usize)> = (0..self.target.len())
            .map(|i| {
                let pt = &self.points[i * p..(i + 1) * p];
                (pt.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i)
            })
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.into_iter().take(self.k).map(|(_, i)| i).collect()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.neighbours(row).iter().map(|&i| self.target[i]).sum::<f64>() / self.k as f64
    }
}
