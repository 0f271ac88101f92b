//! Paired synthetic experiment: baseline-only GBDT against GBDT with the
//! autoencoded day-of-incident speed series appended.

#![allow(dead_code)]

use incident_fusion::encoders::{autoencode_all, series_pool, train_autoencoder, EncodedCache, EncoderConfig, Source};
use incident_fusion::eval::{baseline_table, cross_validate, fuse, make_folds, ScenarioSpec};
use incident_fusion::ingest::{generate_synthetic, SyntheticConfig};
use incident_fusion::nn::Activation;
use incident_fusion::regressors::{ModelKind, RegressorConfig};
use incident_fusion::seed;
use incident_fusion::vds::{match_all, NormalizationMode, SeriesKind, DEFAULT_RADIUS_M};

pub const N_INCIDENTS: usize = 400;
pub const UNITS: usize = 8;
pub const ACTIVATION: Activation = Activation::Tanh;

/// (baseline MAPE, fused MAPE) of 10-fold GBDT for one master seed.
pub fn paired_mape(master: u64) -> (f64, f64) {
    let data = generate_synthetic(&SyntheticConfig {
        n_incidents: N_INCIDENTS,
        seed: seed::derive(master, "synthetic"),
        ..Default::default()
    })
    .unwrap();
    let matched = match_all(&data.incidents, &data.stations, DEFAULT_RADIUS_M, NormalizationMode::Auto)
        .unwrap()
        .matched;

    let mut cfg = EncoderConfig::new(UNITS, ACTIVATION);
    cfg.seed = seed::derive(master, "autoencoder");
    let (model, _) = train_autoencoder(&series_pool(matched.iter().map(|m| &m.series)), &cfg).unwrap();
    let cache = EncodedCache::from_vectors(autoencode_all(&model, &matched, &[SeriesKind::Speed]).unwrap());

    let records: Vec<_> = matched.iter().map(|m| m.incident.clone()).collect();
    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    let baseline = baseline_table(&records).unwrap();
    let spec = ScenarioSpec {
        source: Source::Series(SeriesKind::Speed),
        units: UNITS,
        activation: ACTIVATION,
    };
    let fused = fuse(&baseline, &ids, &cache, &spec).unwrap();

    let plan = make_folds(baseline.n_rows(), 10, seed::derive(master, "cv")).unwrap();
    let gbdt = RegressorConfig::new(ModelKind::Gbdt).reseeded(seed::derive(master, "gbdt"));
    let a = cross_validate(&baseline, &gbdt, &plan).unwrap().mean.mape;
    let b = cross_validate(&fused, &gbdt, &plan).unwrap().mean.mape;
    (a, b)
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}
