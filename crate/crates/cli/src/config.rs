//! Run configuration: one TOML file, every field optional.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use incident_fusion::encoders::{Source, UNIT_GRID};
use incident_fusion::eval::DEFAULT_FOLDS;
use incident_fusion::explain::{DEFAULT_COMPONENTS, DEFAULT_POWER_ITERATIONS};
use incident_fusion::ingest::BaselineSchema;
use incident_fusion::nn::Activation;
use incident_fusion::regressors::{ModelKind, RegressorConfig};
use incident_fusion::vds::{Normalization, NormalizationMode, DEFAULT_RADIUS_M};
use serde::Deserialize;

use crate::failure::Failure;

pub const CONFIG_ENV: &str = "INCIDENT_FUSION_CONFIG";
pub const DEFAULT_CONFIG_FILE: &str = "incident-fusion.toml";

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub jobs: usize,
    pub paths: Paths,
    pub baseline: BaselineSchema,
    pub matching: Matching,
    pub encoders: EncoderSettings,
    pub grid: GridSettings,
    /// Per-kind hyperparameter overrides for `run-grid`, keyed by model code.
    pub models: BTreeMap<String, RegressorConfig>,
    pub tuning: TuningSettings,
    pub explain: ExplainSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            jobs: 1,
            paths: Paths::default(),
            baseline: BaselineSchema::default(),
            matching: Matching::default(),
            encoders: EncoderSettings::default(),
            grid: GridSettings::default(),
            models: BTreeMap::new(),
            tuning: TuningSettings::default(),
            explain: ExplainSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub incidents: PathBuf,
    pub station_meta: PathBuf,
    pub station_readings: PathBuf,
    pub cache_dir: PathBuf,
    pub output_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            incidents: "data/incidents.csv".into(),
            station_meta: "data/station_meta.csv".into(),
            station_readings: "data/station_readings.csv".into(),
            cache_dir: "cache".into(),
            output_dir: "output".into(),
        }
    }
}

impl Paths {
    fn rebase(&mut self, base: &Path) {
        for p in [
            &mut self.incidents,
            &mut self.station_meta,
            &mut self.station_readings,
            &mut self.cache_dir,
            &mut self.output_dir,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

/// `"auto"` or `{ max_speed = .., max_flow = .. }`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum NormalizationSetting {
    Named(String),
    Fixed { max_speed: f64, max_flow: f64 },
}

impl NormalizationSetting {
    pub fn mode(&self) -> Result<NormalizationMode, Failure> {
        match self {
            NormalizationSetting::Named(s) if s.eq_ignore_ascii_case("auto") => Ok(NormalizationMode::Auto),
            NormalizationSetting::Named(s) => Err(Failure::input(format!("normalization must be \"auto\" or a table, got `{s}`"))),
            NormalizationSetting::Fixed { max_speed, max_flow } => Ok(NormalizationMode::Fixed(Normalization {
                max_speed: *max_speed,
                max_flow: *max_flow,
            })),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Matching {
    pub radius_m: f64,
    pub normalization: NormalizationSetting,
}

impl Default for Matching {
    fn default() -> Self {
        Self {
            radius_m: DEFAULT_RADIUS_M,
            normalization: NormalizationSetting::Named("auto".into()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSettings {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_grad_norm: f64,
}

impl Default for EncoderSettings {
    fn default() -> Self {
        let c = incident_fusion::encoders::EncoderConfig::new(UNIT_GRID[0], Activation::Relu);
        Self {
            epochs: c.epochs,
            learning_rate: c.learning_rate,
            batch_size: c.batch_size,
            max_grad_norm: c.max_grad_norm,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSettings {
    pub sources: Vec<String>,
    pub units: Vec<usize>,
    pub activations: Vec<String>,
    pub folds: usize,
    /// Models evaluated by `run-grid` when neither `--models` nor a
    /// `rank-models` selection is available.
    pub models: Vec<String>,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self {
            sources: Source::GRID.iter().map(|s| s.label().to_string()).collect(),
            units: UNIT_GRID.to_vec(),
            activations: Activation::BOTTLENECK.iter().map(|a| a.name().to_string()).collect(),
            folds: DEFAULT_FOLDS,
            models: vec!["gbdt".into(), "rf".into(), "xgb".into()],
        }
    }
}

impl GridSettings {
    pub fn parsed_sources(&self) -> Result<Vec<Source>, Failure> {
        self.sources.iter().map(|s| s.parse().map_err(Failure::from)).collect()
    }

    pub fn parsed_activations(&self) -> Result<Vec<Activation>, Failure> {
        self.activations.iter().map(|s| s.parse().map_err(Failure::from)).collect()
    }

    pub fn parsed_models(&self) -> Result<Vec<ModelKind>, Failure> {
        parse_models(&self.models)
    }
}

pub fn parse_models<S: AsRef<str>>(names: &[S]) -> Result<Vec<ModelKind>, Failure> {
    names.iter().map(|s| s.as_ref().parse().map_err(Failure::from)).collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningSettings {
    /// Kinds ranked by `rank-models`.
    pub models: Vec<String>,
    /// Candidate lists replacing the built-in grid of a kind.
    pub grids: BTreeMap<String, Vec<RegressorConfig>>,
    /// How many of the best kinds `run-grid` evaluates by default.
    pub select: usize,
}

impl Default for TuningSettings {
    fn default() -> Self {
        Self {
            models: ModelKind::ALL.iter().map(|k| k.code().to_string()).collect(),
            grids: BTreeMap::new(),
            select: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ExplainTarget {
    Severity,
    Duration,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainSettings {
    pub target: ExplainTarget,
    pub components: usize,
    pub n_iter: usize,
    pub samples: usize,
    pub top: usize,
}

impl Default for ExplainSettings {
    fn default() -> Self {
        Self {
            target: ExplainTarget::Severity,
            components: DEFAULT_COMPONENTS,
            n_iter: DEFAULT_POWER_ITERATIONS,
            samples: 1000,
            top: 10,
        }
    }
}

/// Explicit path (flag or environment variable), else `incident-fusion.toml`
/// in the working directory if present, else defaults. Relative paths in a
/// file are taken relative to that file.
pub fn load(explicit: Option<&Path>) -> Result<RunConfig, Failure> {
    let path = explicit.map(Path::to_path_buf).or_else(|| {
        let p = PathBuf::from(DEFAULT_CONFIG_FILE);
        p.exists().then_some(p)
    });
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::missing(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg: RunConfig =
        toml::from_str(&text).map_err(|e| Failure::input(format!("config {}: {e}", path.display())))?;
    let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    cfg.paths.rebase(base);
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_full_grid() {
        let c = RunConfig::default();
        assert_eq!(c.grid.parsed_sources().unwrap().len(), 7);
        assert_eq!(c.grid.units, vec![2, 4, 8, 12, 16]);
        assert_eq!(c.grid.parsed_activations().unwrap().len(), 4);
        assert_eq!(c.grid.folds, 10);
        assert_eq!(c.encoders.epochs, 15);
        assert_eq!(c.matching.radius_m, 500.0);
    }

    #[test]
    fn toml_overrides() {
        let c: RunConfig = toml::from_str(
            r#"
            seed = 7
            [matching]
            normalization = { max_speed = 120.0, max_flow = 300.0 }
            [grid]
            units = [4]
            models = ["gbdt"]
            [models.gbdt]
            n_trees = 20
            "#,
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert!(matches!(c.matching.normalization.mode().unwrap(), NormalizationMode::Fixed(_)));
        assert_eq!(c.models["gbdt"].n_trees, 20);
        assert!(toml::from_str::<RunConfig>("sed = 1").is_err());
    }
}
