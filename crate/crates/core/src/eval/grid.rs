//! Scenario grid runner and baseline model ranking.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cross_validate, make_folds, CvResult, FoldPlan, MetricSet, DEFAULT_FOLDS};
use crate::encoders::{EncodedCache, Source, UNIT_GRID};
use crate::error::{Error, Result};
use crate::nn::Activation;
use crate::regressors::{FeatureTable, ModelKind, RegressorConfig};
use crate::seed;

/// One fused-feature configuration of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub source: Source,
    pub units: usize,
    pub activation: Activation,
}

/// Every (source, units, activation) combination, sources outermost.
pub fn scenario_grid(sources: &[Source], units: &[usize], activations: &[Activation]) -> Vec<ScenarioSpec> {
    let mut out = Vec::with_capacity(sources.len() * units.len() * activations.len());
    for &source in sources {
        for &u in units {
            for &activation in activations {
                out.push(ScenarioSpec {
                    source,
                    units: u,
                    activation,
                });
            }
        }
    }
    out
}

/// Cross-validated result of one model on one feature set; `spec` is `None`
/// for the baseline-only row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub model: ModelKind,
    pub spec: Option<ScenarioSpec>,
    pub metrics: MetricSet,
    pub per_fold: Vec<MetricSet>,
}

impl ScenarioOutcome {
    fn from_cv(model: ModelKind, spec: Option<ScenarioSpec>, cv: CvResult) -> Self {
        Self {
            model,
            spec,
            metrics: cv.mean,
            per_fold: cv.per_fold,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFailure {
    pub model: ModelKind,
    pub spec: Option<ScenarioSpec>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOptions {
    pub sources: Vec<Source>,
    pub units: Vec<usize>,
    pub activations: Vec<Activation>,
    pub folds: usize,
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    pub jobs: usize,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            sources: Source::GRID.to_vec(),
            units: UNIT_GRID.to_vec(),
            activations: Activation::BOTTLENECK.to_vec(),
            folds: DEFAULT_FOLDS,
            seed: 0,
            jobs: 1,
        }
    }
}

impl GridOptions {
    pub fn specs(&self) -> Vec<ScenarioSpec> {
        scenario_grid(&self.sources, &self.units, &self.activations)
    }

    fn plan(&self, n_rows: usize) -> Result<FoldPlan> {
        make_folds(n_rows, self.folds, seed::derive(self.seed, "cv"))
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs.max(1))
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    /// Per model in the given order: the baseline row, then grid order.
    pub outcomes: Vec<ScenarioOutcome>,
    pub failures: Vec<ScenarioFailure>,
}

/// Baseline columns of `ids` joined with the encoded vectors of one spec.
pub fn fuse(baseline: &FeatureTable, ids: &[String], cache: &EncodedCache, spec: &ScenarioSpec) -> Result<FeatureTable> {
    if ids.len() != baseline.n_rows() {
        return Err(Error::Dimension(format!("{} ids for {} rows", ids.len(), baseline.n_rows())));
    }
    let label = format!("{}/{}/{}", spec.source, spec.units, spec.activation);
    let group = cache
        .get(spec.source, spec.units, spec.activation)
        .ok_or_else(|| Error::InsufficientData(format!("no encoded vectors for {label}")))?;
    let extra = ids
        .iter()
        .map(|id| {
            group
                .get(id)
                .cloned()
                .ok_or_else(|| Error::InsufficientData(format!("no {label} vector for incident {id}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let names: Vec<String> = (1..=spec.units).map(|i| format!("{}_{i}", spec.source)).collect();
    baseline.with_columns(&names, &extra)
}

/// Model seed shared by every cell so cells differ only in features.
fn model_seed(master: u64, kind: ModelKind) -> u64 {
    seed::derive(master, kind.code())
}

/// Cross-validate every model on the baseline table and on every fused
/// scenario. A scenario that fails is recorded and the grid moves on.
pub fn run_grid(
    baseline: &FeatureTable,
    ids: &[String],
    cache: &EncodedCache,
    models: &[RegressorConfig],
    opts: &GridOptions,
) -> Result<GridResult> {
    let plan = opts.plan(baseline.n_rows())?;
    let specs = opts.specs();
    let jobs: Vec<(usize, Option<ScenarioSpec>)> = models
        .iter()
        .enumerate()
        .flat_map(|(m, _)| std::iter::once((m, None)).chain(specs.iter().map(move |s| (m, Some(*s)))))
        .collect();
    let run = |&(m, spec): &(usize, Option<ScenarioSpec>)| -> (usize, Option<ScenarioSpec>, Result<CvResult>) {
        let config = models[m].reseeded(model_seed(opts.seed, models[m].kind));
        let result = match spec {
            None => cross_validate(baseline, &config, &plan),
            Some(s) => fuse(baseline, ids, cache, &s).and_then(|t| cross_validate(&t, &config, &plan)),
        };
        (m, spec, result)
    };
    let results: Vec<_> = opts.pool()?.install(|| jobs.par_iter().map(run).collect());

    let mut outcomes = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (m, spec, r) in results {
        let kind = models[m].kind;
        match r {
            Ok(cv) => outcomes.push(ScenarioOutcome::from_cv(kind, spec, cv)),
            Err(e) => failures.push(ScenarioFailure {
                model: kind,
                spec,
                message: e.to_string(),
            }),
        }
    }
    Ok(GridResult { outcomes, failures })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedModel {
    pub config: RegressorConfig,
    pub metrics: MetricSet,
    pub per_fold: Vec<MetricSet>,
}

/// Candidate with the lowest mean MAPE; earlier candidates win ties.
pub fn tune(table: &FeatureTable, candidates: &[RegressorConfig], plan: &FoldPlan) -> Result<(RegressorConfig, CvResult)> {
    let mut best: Option<(RegressorConfig, CvResult)> = None;
    for c in candidates {
        let cv = cross_validate(table, c, plan)?;
        if best.as_ref().is_none_or(|(_, b)| cv.mean.mape < b.mean.mape) {
            best = Some((c.clone(), cv));
        }
    }
    best.ok_or_else(|| Error::Config("empty tuning grid".into()))
}

/// Tune each model kind on the baseline table, then order by MAPE.
pub fn rank_baseline_models(
    baseline: &FeatureTable,
    grids: &BTreeMap<ModelKind, Vec<RegressorConfig>>,
    opts: &GridOptions,
) -> Result<Vec<RankedModel>> {
    let plan = opts.plan(baseline.n_rows())?;
    let kinds: Vec<(&ModelKind, &Vec<RegressorConfig>)> = grids.iter().collect();
    let tuned: Vec<Result<RankedModel>> = opts.pool()?.install(|| {
        kinds
            .par_iter()
            .map(|(kind, grid)| {
                let seeded: Vec<RegressorConfig> =
                    grid.iter().map(|c| c.reseeded(model_seed(opts.seed, **kind))).collect();
                let (config, cv) = tune(baseline, &seeded, &plan)?;
                Ok(RankedModel {
                    config,
                    metrics: cv.mean,
                    per_fold: cv.per_fold,
                })
            })
            .collect()
    });
    let mut ranked = tuned.into_iter().collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| a.metrics.mape.total_cmp(&b.metrics.mape).then(a.config.kind.cmp(&b.config.kind)));
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vds::SeriesKind;

    #[test]
    fn default_grid_has_140_distinct_specs() {
        let specs = GridOptions::default().specs();
        assert_eq!(specs.len(), 140);
        let mut d = specs.clone();
        d.sort();
        d.dedup();
        assert_eq!(d.len(), 140);
        assert_eq!(
            specs[0],
            ScenarioSpec {
                source: Source::LstmSent,
                units: 2,
                activation: Activation::Relu
            }
        );
        assert_eq!(specs[139].source, Source::Series(SeriesKind::Fd));
    }
}
