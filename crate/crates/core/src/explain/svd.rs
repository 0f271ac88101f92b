//! Randomized truncated SVD (range finder with power iterations).

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::tfidf::SparseRow;
use crate::error::{Error, Result};
use crate::seed;

pub const DEFAULT_COMPONENTS: usize = 50;
pub const DEFAULT_POWER_ITERATIONS: usize = 7;
const OVERSAMPLE: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdModel {
    /// k rows of length n_columns, mutually orthonormal.
    pub components: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
    pub n_iter: usize,
    pub seed: u64,
}

fn orthonormal_basis(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

/// Top-`k` right singular vectors of `x` (rows are samples). Returns the
/// model and the reduced matrix `x * components^T`.
pub fn truncated_svd(x: &DMatrix<f64>, k: usize, n_iter: usize, seed_value: u64) -> Result<(SvdModel, DMatrix<f64>)> {
    let (n, v) = x.shape();
    let min_dim = n.min(v);
    if k == 0 || k > min_dim {
        return Err(Error::Dimension(format!("cannot take {k} components of a {n}x{v} matrix")));
    }
    let l = (k + OVERSAMPLE).min(min_dim);
    let mut rng = seed::rng_for(seed_value, "svd-range");
    let omega = DMatrix::from_fn(v, l, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormal_basis(x * omega);
    for _ in 0..n_iter {
        let z = orthonormal_basis(x.tr_mul(&q));
        q = orthonormal_basis(x * z);
    }
    let b = q.tr_mul(x);
    let svd = b.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Numerical("SVD did not produce right vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let mut components = Vec::with_capacity(k);
    let mut singular_values = Vec::with_capacity(k);
    for &i in order.iter().take(k) {
        let mut row: Vec<f64> = vt.row(i).iter().copied().collect();
        // Sign convention: the largest-magnitude entry is positive.
        let lead = row.iter().copied().fold(0.0f64, |m, e| if e.abs() > m.abs() { e } else { m });
        if lead < 0.0 {
            row.iter_mut().for_each(|e| *e = -*e);
        }
        components.push(row);
        singular_values.push(svd.singular_values[i]);
    }
    let model = SvdModel {
        components,
        singular_values,
        n_iter,
        seed: seed_value,
    };
    let reduced = model.reduce(x);
    Ok((model, reduced))
}

impl SvdModel {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn component_matrix(&self) -> DMatrix<f64> {
        let cols = self.components.first().map_or(0, Vec::len);
        DMatrix::from_fn(self.k(), cols, |i, j| self.components[i][j])
    }

    pub fn reduce(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x * self.component_matrix().transpose()
    }

    pub fn transform_sparse(&self, row: &SparseRow) -> Vec<f64> {
        self.components.iter().map(|c| row.iter().map(|&(j, v)| c[j] * v).sum()).collect()
    }

    /// Back to the original column space.
    pub fn reconstruct(&self, reduced: &DMatrix<f64>) -> DMatrix<f64> {
        reduced * self.component_matrix()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_is_exact() {
        let u = DMatrix::from_fn(6, 1, |i, _| i as f64 + 1.0);
        let w = DMatrix::from_fn(1, 9, |_, j| (j as f64 - 4.0) * 0.5);
        let x = &u * &w;
        let (m, r) = truncated_svd(&x, 1, 7, 3).unwrap();
        assert!((m.reconstruct(&r) - &x).amax() < 1e-8);
        assert!(truncated_svd(&x, 7, 7, 3).is_err());
        assert!(truncated_svd(&x, 0, 7, 3).is_err());
    }

    #[test]
    fn components_are_orthonormal() {
        let mut rng = seed::rng(9);
        let x = DMatrix::from_fn(30, 40, |_, _| StandardNormal.sample(&mut rng));
        let (m, _) = truncated_svd(&x, 12, 7, 1).unwrap();
        let c = m.component_matrix();
        let gram = &c * c.transpose();
        assert!((gram - DMatrix::identity(12, 12)).amax() < 1e-6);
        assert!(m.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }
}
