//! Metrics, k-fold cross-validation, the scenario grid, model ranking and
//! Pareto analysis.

mod grid;
mod pareto;
mod report;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::IncidentRecord;
use crate::regressors::{fit, FeatureTable, RegressorConfig};
use crate::seed;

pub use grid::{
    fuse, rank_baseline_models, run_grid, scenario_grid, tune, GridOptions, GridResult, RankedModel, ScenarioFailure,
    ScenarioOutcome, ScenarioSpec,
};
pub use pareto::{pareto_front, pearson, random_vector_experiment, RandomExperiment};
pub use report::{
    read_outcomes, top_table, write_outcomes, write_parallel_categories, write_ranking, write_scatter, OutcomeRecord,
};

pub const DEFAULT_FOLDS: usize = 10;

fn check_pair(actual: &[f64], predicted: &[f64]) -> Result<()> {
    if actual.is_empty() || actual.len() != predicted.len() {
        return Err(Error::Metric(format!(
            "need equal non-empty lengths, got {} and {}",
            actual.len(),
            predicted.len()
        )));
    }
    Ok(())
}

/// Mean absolute percentage error, in percent.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted)?;
    let mut s = 0.0;
    for (a, f) in actual.iter().zip(predicted) {
        if *a == 0.0 {
            return Err(Error::Metric("MAPE undefined for a zero actual".into()));
        }
        s += ((a - f) / a).abs();
    }
    Ok(100.0 * s / actual.len() as f64)
}

pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted)?;
    let s: f64 = actual.iter().zip(predicted).map(|(a, f)| (a - f) * (a - f)).sum();
    Ok((s / actual.len() as f64).sqrt())
}

pub fn mae(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted)?;
    Ok(actual.iter().zip(predicted).map(|(a, f)| (a - f).abs()).sum::<f64>() / actual.len() as f64)
}

/// Symmetric MAPE with the `(|A| + |F|) / 2` denominator, in percent.
pub fn smape(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted)?;
    let mut s = 0.0;
    for (a, f) in actual.iter().zip(predicted) {
        let d = (a.abs() + f.abs()) / 2.0;
        if d == 0.0 {
            return Err(Error::Metric("SMAPE undefined when actual and forecast are both zero".into()));
        }
        s += (a - f).abs() / d;
    }
    Ok(100.0 * s / actual.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub mape: f64,
    pub rmse: f64,
    pub mae: f64,
    pub smape: f64,
}

impl MetricSet {
    pub fn compute(actual: &[f64], predicted: &[f64]) -> Result<Self> {
        Ok(Self {
            mape: mape(actual, predicted)?,
            rmse: rmse(actual, predicted)?,
            mae: mae(actual, predicted)?,
            smape: smape(actual, predicted)?,
        })
    }

    pub fn mean(sets: &[MetricSet]) -> Self {
        let n = sets.len() as f64;
        let avg = |f: fn(&MetricSet) -> f64| sets.iter().map(f).sum::<f64>() / n;
        Self {
            mape: avg(|m| m.mape),
            rmse: avg(|m| m.rmse),
            mae: avg(|m| m.mae),
            smape: avg(|m| m.smape),
        }
    }
}

/// Assignment of rows to k folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n_rows: usize,
    pub k: usize,
    pub seed: u64,
    pub assignments: Vec<usize>,
}

/// Seeded shuffle, then position i of the shuffle goes to fold i mod k.
pub fn make_folds(n_rows: usize, k: usize, seed_value: u64) -> Result<FoldPlan> {
    if k < 2 || n_rows < k {
        return Err(Error::InsufficientData(format!("{n_rows} rows cannot fill {k} folds")));
    }
    let perm = seed::permutation(&mut seed::rng_for(seed_value, "folds"), n_rows);
    let mut assignments = vec![0; n_rows];
    for (pos, &row) in perm.iter().enumerate() {
        assignments[row] = pos % k;
    }
    Ok(FoldPlan {
        n_rows,
        k,
        seed: seed_value,
        assignments,
    })
}

impl FoldPlan {
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.n_rows).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.n_rows).filter(|&i| self.assignments[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &a in &self.assignments {
            s[a] += 1;
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub per_fold: Vec<MetricSet>,
    pub mean: MetricSet,
}

/// Train on k-1 folds, score the held-out fold, for every fold. Model
/// randomness is reseeded per fold as `seed ^ fold`.
pub fn cross_validate(table: &FeatureTable, config: &RegressorConfig, plan: &FoldPlan) -> Result<CvResult> {
    if plan.n_rows != table.n_rows() {
        return Err(Error::Dimension(format!(
            "fold plan covers {} rows, table has {}",
            plan.n_rows,
            table.n_rows()
        )));
    }
    let per_fold = (0..plan.k)
        .map(|fold| {
            let run = || -> Result<MetricSet> {
                let train = table.select_rows(&plan.train_rows(fold));
                let test = table.select_rows(&plan.test_rows(fold));
                let model = fit(&train, &config.reseeded(config.seed ^ fold as u64))?;
                let pred = model.predict(&test);
                if pred.iter().any(|p| !p.is_finite()) {
                    return Err(Error::Numerical("non-finite prediction".into()));
                }
                MetricSet::compute(test.target(), &pred)
            };
            run().map_err(|e| Error::Fold {
                fold,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CvResult {
        mean: MetricSet::mean(&per_fold),
        per_fold,
    })
}

/// Baseline features of each record with duration as target.
pub fn baseline_table(records: &[IncidentRecord]) -> Result<FeatureTable> {
    let names: Vec<String> = records
        .first()
        .map(|r| r.baseline.iter().map(|(n, _)| n.clone()).collect())
        .unwrap_or_default();
    let mut rows = Vec::with_capacity(records.len());
    for r in records {
        if r.baseline.len() != names.len() || r.baseline.iter().zip(&names).any(|((a, _), b)| a != b) {
            return Err(Error::Schema(format!("incident {} has different baseline columns", r.id)));
        }
        rows.push(r.baseline_values().collect());
    }
    FeatureTable::new(names, rows, records.iter().map(|r| f64::from(r.duration_min)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_worked_metrics() {
        assert_eq!(mape(&[100.0], &[50.0]).unwrap(), 50.0);
        assert!((mape(&[10.0, 20.0], &[12.0, 15.0]).unwrap() - 22.5).abs() < 1e-9);
        assert_eq!(rmse(&[3.0], &[0.0]).unwrap(), 3.0);
        assert!((rmse(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap() - (2.0f64 / 3.0).sqrt()).abs() < 1e-9);
        assert_eq!(mae(&[10.0], &[30.0]).unwrap(), 20.0);
        assert_eq!(smape(&[10.0], &[30.0]).unwrap(), 100.0);
        assert!(mape(&[0.0], &[1.0]).is_err());
        assert!(smape(&[0.0], &[0.0]).is_err());
        assert!(rmse(&[1.0], &[]).is_err());
    }

    #[test]
    fn fold_sizes() {
        assert_eq!(make_folds(10, 10, 3).unwrap().fold_sizes(), vec![1; 10]);
        assert_eq!(make_folds(13, 10, 3).unwrap().fold_sizes(), vec![2, 2, 2, 1, 1, 1, 1, 1, 1, 1]);
        assert_eq!(make_folds(50, 10, 8).unwrap(), make_folds(50, 10, 8).unwrap());
        assert!(make_folds(9, 10, 0).is_err());
    }
}
