//! CSV and text outputs of the evaluation stage.

use std::fmt::Write as _;
use std::io::{Read, Write};

use super::grid::{RankedModel, ScenarioOutcome, ScenarioSpec};
use super::MetricSet;
use crate::error::{Error, Result};
use crate::regressors::ModelKind;

const BASELINE: &str = "baseline";

/// One outcomes-CSV row: mean metrics plus per-fold MAPE.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRecord {
    pub model: ModelKind,
    pub spec: Option<ScenarioSpec>,
    pub metrics: MetricSet,
    pub fold_mape: Vec<f64>,
}

impl From<&ScenarioOutcome> for OutcomeRecord {
    fn from(o: &ScenarioOutcome) -> Self {
        Self {
            model: o.model,
            spec: o.spec,
            metrics: o.metrics,
            fold_mape: o.per_fold.iter().map(|m| m.mape).collect(),
        }
    }
}

pub fn write_outcomes<W: Write>(writer: W, outcomes: &[OutcomeRecord]) -> Result<()> {
    let folds = outcomes.iter().map(|o| o.fold_mape.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = ["model", "source", "units", "activation", "mape", "rmse", "mae", "smape"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=folds).map(|f| format!("fold{f}_mape")));
    w.write_record(&header)?;
    for o in outcomes {
        let (source, units, act) = match &o.spec {
            None => (BASELINE.to_string(), String::new(), String::new()),
            Some(s) => (s.source.to_string(), s.units.to_string(), s.activation.to_string()),
        };
        let m = &o.metrics;
        let mut row = vec![
            o.model.code().to_string(),
            source,
            units,
            act,
            m.mape.to_string(),
            m.rmse.to_string(),
            m.mae.to_string(),
            m.smape.to_string(),
        ];
        row.extend(o.fold_mape.iter().map(|v| v.to_string()));
        row.resize(header.len(), String::new());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_outcomes<R: Read>(reader: R) -> Result<Vec<OutcomeRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    let expected = ["model", "source", "units", "activation", "mape", "rmse", "mae", "smape"];
    if header.len() < expected.len() || expected.iter().zip(header.iter()).any(|(a, b)| *a != b) {
        return Err(Error::Schema(format!("outcomes header must start with {}", expected.join(","))));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::Schema(format!("outcomes row {}: bad {what}", i + 1));
        let num = |j: usize| rec[j].parse::<f64>().map_err(|_| bad(&header[j]));
        let model: ModelKind = rec[0].parse().map_err(|_| bad("model"))?;
        let spec = if &rec[1] == BASELINE {
            None
        } else {
            Some(ScenarioSpec {
                source: rec[1].parse().map_err(|_| bad("source"))?,
                units: rec[2].parse().map_err(|_| bad("units"))?,
                activation: rec[3].parse().map_err(|_| bad("activation"))?,
            })
        };
        let metrics = MetricSet {
            mape: num(4)?,
            rmse: num(5)?,
            mae: num(6)?,
            smape: num(7)?,
        };
        let fold_mape = (8..rec.len()).filter(|&j| !rec[j].is_empty()).map(num).collect::<Result<Vec<_>>>()?;
        out.push(OutcomeRecord {
            model,
            spec,
            metrics,
            fold_mape,
        });
    }
    Ok(out)
}

/// Best `n` scenarios of one model by MAPE, with the baseline row last.
pub fn top_table(outcomes: &[OutcomeRecord], model: ModelKind, n: usize) -> String {
    let mut rows: Vec<&OutcomeRecord> = outcomes.iter().filter(|o| o.model == model && o.spec.is_some()).collect();
    rows.sort_by(|a, b| a.metrics.mape.total_cmp(&b.metrics.mape));
    let mut s = String::new();
    let _ = writeln!(s, "{}", model.display_name());
    let _ = writeln!(s, "{:<14}{:>6}  {:<11}{:>8}{:>9}", "AdditionData", "Units", "Activation", "MAPE", "RMSE");
    for o in rows.iter().take(n) {
        let spec = o.spec.as_ref().expect("filtered");
        let _ = writeln!(
            s,
            "{:<14}{:>6}  {:<11}{:>8.2}{:>9.2}",
            spec.source.label(),
            spec.units,
            spec.activation.name(),
            o.metrics.mape,
            o.metrics.rmse
        );
    }
    if let Some(b) = outcomes.iter().find(|o| o.model == model && o.spec.is_none()) {
        let _ = writeln!(s, "{:<14}{:>6}  {:<11}{:>8.2}{:>9.2}", BASELINE, "", "", b.metrics.mape, b.metrics.rmse);
    }
    s
}

/// Per-model MAPE quartile band of each grid outcome: rank r of n (0 = best)
/// falls in band floor(4r / n) + 1, so Q1 holds the best quarter.
pub fn write_parallel_categories<W: Write>(writer: W, outcomes: &[OutcomeRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["model", "source", "units", "activation", "mape", "mape_band"])?;
    let mut models: Vec<ModelKind> = outcomes.iter().map(|o| o.model).collect();
    models.sort();
    models.dedup();
    for model in models {
        let mut rows: Vec<&OutcomeRecord> = outcomes.iter().filter(|o| o.model == model && o.spec.is_some()).collect();
        rows.sort_by(|a, b| a.metrics.mape.total_cmp(&b.metrics.mape));
        let n = rows.len();
        for (rank, o) in rows.into_iter().enumerate() {
            let spec = o.spec.as_ref().expect("filtered");
            w.write_record([
                model.code().to_string(),
                spec.source.to_string(),
                spec.units.to_string(),
                spec.activation.to_string(),
                o.metrics.mape.to_string(),
                format!("Q{}", 4 * rank / n + 1),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_scatter<W: Write>(writer: W, points: &[(f64, f64)], front: &[usize]) -> Result<()> {
    let mut on_front = vec![false; points.len()];
    for &i in front {
        on_front[i] = true;
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["index", "mape", "rmse", "on_front"])?;
    for (i, (m, r)) in points.iter().enumerate() {
        w.write_record([i.to_string(), m.to_string(), r.to_string(), u8::from(on_front[i]).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ranking<W: Write>(writer: W, ranked: &[RankedModel]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["rank", "model", "mape", "rmse", "mae", "smape", "config"])?;
    for (i, r) in ranked.iter().enumerate() {
        let m = &r.metrics;
        w.write_record([
            (i + 1).to_string(),
            r.config.kind.code().to_string(),
            m.mape.to_string(),
            m.rmse.to_string(),
            m.mae.to_string(),
            m.smape.to_string(),
            serde_json::to_string(&r.config)?,
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::Source;
    use crate::nn::Activation;

    fn rec(model: ModelKind, spec: Option<ScenarioSpec>, mape: f64) -> OutcomeRecord {
        OutcomeRecord {
            model,
            spec,
            metrics: MetricSet {
                mape,
                rmse: mape + 10.0,
                mae: 1.0,
                smape: 2.0,
            },
            fold_mape: vec![mape - 1.0, mape + 1.0],
        }
    }

    #[test]
    fn outcomes_round_trip_and_table() {
        let spec = ScenarioSpec {
            source: Source::LstmSent,
            units: 12,
            activation: Activation::Relu,
        };
        let rows = vec![rec(ModelKind::Gbdt, None, 44.99), rec(ModelKind::Gbdt, Some(spec), 41.89)];
        let mut buf = Vec::new();
        write_outcomes(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("gbdt,baseline,,,44.99,"));
        assert_eq!(read_outcomes(buf.as_slice()).unwrap(), rows);
        let table = top_table(&rows, ModelKind::Gbdt, 8);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0], "GBDT");
        assert!(lines[2].starts_with("LSTM-sent") && lines[2].contains("41.89"));
        assert!(lines[3].starts_with("baseline") && lines[3].contains("44.99"));
    }
}
