//! Pareto fronts over (MAPE, RMSE) and the random-vector experiment.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{mape, rmse};
use crate::error::Result;
use crate::seed;

/// Indices of the points not dominated in both coordinates (lower is
/// better), ordered by the first coordinate, then the second, then index.
pub fn pareto_front(points: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a].0.total_cmp(&points[b].0).then(points[a].1.total_cmp(&points[b].1)).then(a.cmp(&b))
    });
    let mut front: Vec<usize> = Vec::new();
    for i in order {
        let p = points[i];
        match front.last().map(|&j| points[j]) {
            // Sorted by x, so the last member holds the lowest y so far.
            Some(last) if p.1 > last.1 || (p.1 == last.1 && p.0 > last.0) => {}
            _ => front.push(i),
        }
    }
    front
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomExperiment {
    /// (MAPE, RMSE) per evaluation.
    pub points: Vec<(f64, f64)>,
    pub front: Vec<usize>,
    pub correlation: f64,
}

/// Score `n_pairs` pairs of uniform random "actual" and "predicted" vectors.
pub fn random_vector_experiment(dims: usize, range: (f64, f64), n_pairs: usize, seed_value: u64) -> Result<RandomExperiment> {
    let mut rng = seed::rng_for(seed_value, "random-vectors");
    let (lo, hi) = range;
    let draw = |rng: &mut seed::Rng| (0..dims).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect::<Vec<_>>();
    let mut points = Vec::with_capacity(n_pairs);
    for _ in 0..n_pairs {
        let actual = draw(&mut rng);
        let predicted = draw(&mut rng);
        points.push((mape(&actual, &predicted)?, rmse(&actual, &predicted)?));
    }
    let (m, r): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    Ok(RandomExperiment {
        front: pareto_front(&points),
        correlation: pearson(&m, &r),
        points,
    })
}
