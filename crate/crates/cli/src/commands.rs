//! One function per subcommand.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use incident_fusion::encoders::{
    autoencode_all, sentiment_encode, series_pool, train_autoencoder, train_sentiment_encoder, write_encoded,
    EncodedVector, EncoderConfig, Head, Source,
};
use incident_fusion::eval::{
    baseline_table, pareto_front, random_vector_experiment, rank_baseline_models, run_grid, top_table,
    write_outcomes, write_parallel_categories, write_ranking, write_scatter, GridOptions, OutcomeRecord,
};
use incident_fusion::explain::{
    duration_tertiles, fit_text_chain, lime_explain, write_explanation, ChainConfig, LimeOptions, WordImportance,
};
use incident_fusion::ingest::{
    generate_synthetic, parse_incidents, parse_station_meta, parse_station_readings, write_incidents,
    write_raw_incidents, write_rejections, write_station_meta, write_station_readings, IncidentRecord,
    SyntheticConfig,
};
use incident_fusion::nn::{Activation, NetworkFile};
use incident_fusion::plot::{bar_chart_svg, scatter_svg};
use incident_fusion::regressors::{default_grid, FeatureTable, ModelKind, RegressorConfig};
use incident_fusion::seed;
use incident_fusion::vds::{match_all, write_matched, write_normalization, MatchedIncident, SeriesKind};
use rayon::prelude::*;

use crate::artifacts::{self as art, open, write_json, write_text, write_with, Layout};
use crate::config::{parse_models, ExplainTarget, RunConfig};
use crate::failure::Failure;

/// Resolved configuration shared by every command.
pub struct Context {
    pub config: RunConfig,
    pub layout: Layout,
}

impl Context {
    pub fn new(config: RunConfig) -> Self {
        let layout = Layout {
            cache: config.paths.cache_dir.clone(),
            output: config.paths.output_dir.clone(),
        };
        Self { config, layout }
    }

    fn pool(&self) -> Result<rayon::ThreadPool, Failure> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.jobs.max(1))
            .build()
            .map_err(|e| Failure::input(format!("worker pool: {e}")))
    }

    fn grid_options(&self) -> Result<GridOptions, Failure> {
        let g = &self.config.grid;
        Ok(GridOptions {
            sources: g.parsed_sources()?,
            units: g.units.clone(),
            activations: g.parsed_activations()?,
            folds: g.folds,
            seed: self.config.seed,
            jobs: self.config.jobs,
        })
    }

    /// Matched incidents with the baseline table and ids in the same order.
    fn matched_table(&self) -> Result<(Vec<MatchedIncident>, FeatureTable, Vec<String>), Failure> {
        let incidents = self.layout.load_incidents()?;
        let matched = self.layout.load_matched(&incidents)?;
        let records: Vec<IncidentRecord> = matched.iter().map(|m| m.incident.clone()).collect();
        let table = baseline_table(&records)?;
        let ids = records.into_iter().map(|r| r.id).collect();
        Ok((matched, table, ids))
    }
}

/// `seed=1,n=200,stations=20`; the seed defaults to the master seed.
pub fn parse_synth(spec: &str, master: u64) -> Result<SyntheticConfig, Failure> {
    let mut cfg = SyntheticConfig {
        seed: master,
        ..SyntheticConfig::default()
    };
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Failure::input(format!("synthetic option `{part}` is not key=value")))?;
        let num = |v: &str| {
            v.trim()
                .parse::<u64>()
                .map_err(|_| Failure::input(format!("synthetic option `{k}` needs an integer, got `{v}`")))
        };
        match k.trim() {
            "seed" => cfg.seed = num(v)?,
            "n" | "incidents" => cfg.n_incidents = num(v)? as usize,
            "stations" => cfg.n_stations = num(v)? as usize,
            other => return Err(Failure::input(format!("unknown synthetic option `{other}`"))),
        }
    }
    Ok(cfg)
}

pub struct IngestArgs {
    pub synth: Option<String>,
    pub incidents: Option<PathBuf>,
    pub station_meta: Option<PathBuf>,
    pub station_readings: Option<PathBuf>,
}

pub fn ingest(ctx: &Context, args: IngestArgs) -> Result<(), Failure> {
    let paths = &ctx.config.paths;
    let (incidents_path, meta_path, readings_path, schema) = match &args.synth {
        Some(spec) => {
            let data = generate_synthetic(&parse_synth(spec, ctx.config.seed)?)?;
            let dir = ctx.layout.cache.join("synthetic");
            let inc = dir.join("incidents_raw.csv");
            let meta = dir.join(art::STATION_META);
            let read = dir.join(art::STATION_READINGS);
            write_with(&inc, |w| Ok(write_raw_incidents(w, &data.raw, &data.schema)?))?;
            write_with(&meta, |w| Ok(write_station_meta(w, &data.stations)?))?;
            write_with(&read, |w| Ok(write_station_readings(w, &data.stations)?))?;
            write_json(&dir.join("planted_drops.json"), &data.drops)?;
            (inc, meta, read, data.schema)
        }
        None => (
            args.incidents.unwrap_or_else(|| paths.incidents.clone()),
            args.station_meta.unwrap_or_else(|| paths.station_meta.clone()),
            args.station_readings.unwrap_or_else(|| paths.station_readings.clone()),
            ctx.config.baseline.clone(),
        ),
    };
    let parsed = parse_incidents(open(&incidents_path)?, &schema)
        .map_err(|e| Failure::from(e).context(&incidents_path))?;
    if parsed.records.is_empty() {
        return Err(Failure::input(format!("{}: no valid incidents", incidents_path.display())));
    }
    let meta = parse_station_meta(open(&meta_path)?).map_err(|e| Failure::from(e).context(&meta_path))?;
    let stations =
        parse_station_readings(open(&readings_path)?, &meta).map_err(|e| Failure::from(e).context(&readings_path))?;

    let l = &ctx.layout;
    write_with(&l.cached(art::INCIDENTS), |w| Ok(write_incidents(w, &parsed.records)?))?;
    write_with(&l.cached(art::INCIDENT_REJECTIONS), |w| Ok(write_rejections(w, &parsed.rejections)?))?;
    write_with(&l.cached(art::STATION_META), |w| Ok(write_station_meta(w, &stations.series)?))?;
    write_with(&l.cached(art::STATION_READINGS), |w| Ok(write_station_readings(w, &stations.series)?))?;
    write_with(&l.cached(art::STATION_REJECTIONS), |w| Ok(write_rejections(w, &stations.rejections)?))?;
    println!(
        "ingested {} of {} incidents and {} stations ({} of {} readings rejected)",
        parsed.records.len(),
        parsed.rows_in,
        stations.series.len(),
        stations.rejections.len(),
        stations.rows_in
    );
    Ok(())
}

pub fn match_incidents(ctx: &Context, radius: Option<f64>) -> Result<(), Failure> {
    let incidents = ctx.layout.load_incidents()?;
    let stations = ctx.layout.load_stations()?;
    if stations.is_empty() {
        return Err(Failure::input("no stations to match against"));
    }
    let radius = radius.unwrap_or(ctx.config.matching.radius_m);
    if !(radius >= 0.0) {
        return Err(Failure::input(format!("radius must be non-negative, got {radius}")));
    }
    let mode = ctx.config.matching.normalization.mode()?;
    let outcome = ctx.pool()?.install(|| match_all(&incidents, &stations, radius, mode))?;
    write_with(&ctx.layout.cached(art::MATCHED), |w| Ok(write_matched(w, &outcome.matched)?))?;
    write_with(&ctx.layout.cached(art::NORMALIZATION), |w| {
        write_normalization(&mut *w, &outcome.normalization)?;
        Ok(w.write_all(b"\n")?)
    })?;
    println!("{}", outcome.summary());
    Ok(())
}

#[derive(Debug, Clone, Copy)]
enum EncoderJob {
    Sentiment(Head),
    Series,
}

struct TrainedJob {
    name: String,
    file: NetworkFile,
    vectors: Vec<EncodedVector>,
    /// (epoch, train loss, validation loss)
    losses: Vec<(usize, f64, Option<f64>)>,
}

pub fn train_encoders(ctx: &Context) -> Result<(), Failure> {
    let incidents = ctx.layout.load_incidents()?;
    let matched = ctx.layout.load_matched(&incidents)?;
    if matched.is_empty() {
        return Err(Failure::input("no matched incidents to encode; check the match radius"));
    }
    let opts = ctx.grid_options()?;
    let kinds: Vec<SeriesKind> = opts
        .sources
        .iter()
        .filter_map(|s| match s {
            Source::Series(k) => Some(*k),
            _ => None,
        })
        .collect();
    let mut variants = Vec::new();
    if opts.sources.contains(&Source::LstmSent) {
        variants.push(EncoderJob::Sentiment(Head::Mse));
    }
    if opts.sources.contains(&Source::LstmSentCe) {
        variants.push(EncoderJob::Sentiment(Head::Ce));
    }
    if !kinds.is_empty() {
        variants.push(EncoderJob::Series);
    }
    let mut jobs: Vec<(EncoderJob, usize, Activation)> = Vec::new();
    for &v in &variants {
        for &u in &opts.units {
            for &a in &opts.activations {
                jobs.push((v, u, a));
            }
        }
    }
    let pool = series_pool(matched.iter().map(|m| &m.series));
    let e = &ctx.config.encoders;
    let run = |&(job, units, act): &(EncoderJob, usize, Activation)| -> Result<TrainedJob, Failure> {
        let name = match job {
            EncoderJob::Sentiment(Head::Mse) => "sentiment",
            EncoderJob::Sentiment(Head::Ce) => "sentiment_ce",
            EncoderJob::Series => "autoencoder",
        };
        let config = EncoderConfig {
            units,
            activation: act,
            head: match job {
                EncoderJob::Sentiment(h) => h,
                EncoderJob::Series => Head::Mse,
            },
            epochs: e.epochs,
            seed: seed::derive(ctx.config.seed, &format!("{name}/{units}/{act}")),
            learning_rate: e.learning_rate,
            batch_size: e.batch_size,
            max_grad_norm: e.max_grad_norm,
        };
        let name = format!("{name}_{units}_{act}");
        match job {
            EncoderJob::Sentiment(_) => {
                let (enc, report) = train_sentiment_encoder(&incidents, &config)?;
                let vectors = matched
                    .iter()
                    .map(|m| sentiment_encode(&enc, &m.incident.id, &m.incident.description))
                    .collect::<incident_fusion::Result<Vec<_>>>()?;
                let losses = report
                    .epochs
                    .iter()
                    .map(|l| (l.epoch, l.train_loss, Some(l.validation_loss)))
                    .collect();
                Ok(TrainedJob {
                    name,
                    file: enc.to_file()?,
                    vectors,
                    losses,
                })
            }
            EncoderJob::Series => {
                let (model, report) = train_autoencoder(&pool, &config)?;
                let vectors = autoencode_all(&model, &matched, &kinds)?;
                let losses = report.epoch_loss.iter().enumerate().map(|(i, &l)| (i + 1, l, None)).collect();
                Ok(TrainedJob {
                    name,
                    file: model.to_file()?,
                    vectors,
                    losses,
                })
            }
        }
    };
    let trained: Vec<Result<TrainedJob, Failure>> = ctx.pool()?.install(|| jobs.par_iter().map(run).collect());
    let trained = trained.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut vectors = Vec::new();
    let mut log = String::from("encoder,epoch,train_loss,validation_loss\n");
    for t in &trained {
        write_with(&ctx.layout.cache.join("models").join(format!("{}.json", t.name)), |w| {
            Ok(t.file.write(w)?)
        })?;
        for (epoch, train, val) in &t.losses {
            let val = val.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(log, "{},{epoch},{train},{val}", t.name);
        }
        vectors.extend(t.vectors.iter().cloned());
    }
    write_with(&ctx.layout.cached(art::ENCODED), |w| Ok(write_encoded(w, &vectors)?))?;
    write_text(&ctx.layout.out("encoder_training.csv"), &log)?;
    println!(
        "trained {} encoders; wrote {} encoded vectors for {} incidents",
        trained.len(),
        vectors.len(),
        matched.len()
    );
    Ok(())
}

fn config_for(kind: ModelKind, base: Option<&RegressorConfig>) -> RegressorConfig {
    let mut c = base.cloned().unwrap_or_else(|| RegressorConfig::new(kind));
    c.kind = kind;
    c
}

pub fn rank_models(ctx: &Context) -> Result<(), Failure> {
    let (_, table, _) = ctx.matched_table()?;
    let t = &ctx.config.tuning;
    let mut grids: BTreeMap<ModelKind, Vec<RegressorConfig>> = BTreeMap::new();
    for kind in parse_models(&t.models)? {
        let grid = match t.grids.get(kind.code()) {
            Some(list) => list.iter().map(|c| config_for(kind, Some(c))).collect(),
            None => default_grid(kind),
        };
        grids.insert(kind, grid);
    }
    let ranked = rank_baseline_models(&table, &grids, &ctx.grid_options()?)?;
    write_with(&ctx.layout.out("model_ranking.csv"), |w| Ok(write_ranking(w, &ranked)?))?;
    let selected: Vec<RegressorConfig> = ranked.iter().take(t.select).map(|r| r.config.clone()).collect();
    write_json(&ctx.layout.cached(art::SELECTED_MODELS), &selected)?;
    println!("{:<6}{:<14}{:>8}{:>9}", "Rank", "Model", "MAPE", "RMSE");
    for (i, r) in ranked.iter().enumerate() {
        println!(
            "{:<6}{:<14}{:>8.2}{:>9.2}",
            i + 1,
            r.config.kind.display_name(),
            r.metrics.mape,
            r.metrics.rmse
        );
    }
    Ok(())
}

pub fn run_grid_command(ctx: &Context, models: Option<Vec<String>>) -> Result<(), Failure> {
    let (_, table, ids) = ctx.matched_table()?;
    let cache = ctx.layout.load_encoded()?;
    let selected = ctx.layout.selected_models()?;
    let kinds = match (&models, &selected) {
        (Some(m), _) => parse_models(m)?,
        (None, Some(sel)) if !sel.is_empty() => sel.iter().map(|c| c.kind).collect(),
        _ => ctx.config.grid.parsed_models()?,
    };
    let configs: Vec<RegressorConfig> = kinds
        .iter()
        .map(|&k| {
            let tuned = selected.as_ref().and_then(|s| s.iter().find(|c| c.kind == k));
            config_for(k, tuned.or_else(|| ctx.config.models.get(k.code())))
        })
        .collect();
    let result = run_grid(&table, &ids, &cache, &configs, &ctx.grid_options()?)?;
    let records: Vec<OutcomeRecord> = result.outcomes.iter().map(OutcomeRecord::from).collect();
    let l = &ctx.layout;
    write_with(&l.out(art::OUTCOMES), |w| Ok(write_outcomes(w, &records)?))?;
    write_with(&l.out("parallel_categories.csv"), |w| Ok(write_parallel_categories(w, &records)?))?;
    let mut failures = String::from("model,scenario,message\n");
    for f in &result.failures {
        let spec = f
            .spec
            .map(|s| format!("{}/{}/{}", s.source, s.units, s.activation))
            .unwrap_or_else(|| "baseline".into());
        let _ = writeln!(failures, "{},{spec},\"{}\"", f.model.code(), f.message.replace('"', "'"));
        eprintln!("warning: {} {spec} failed: {}", f.model.code(), f.message);
    }
    write_text(&l.out("grid_failures.csv"), &failures)?;
    let mut tables = String::new();
    for k in &kinds {
        tables.push_str(&top_table(&records, *k, 8));
        tables.push('\n');
    }
    write_text(&l.out("top_tables.txt"), &tables)?;
    print!("{tables}");
    println!("{} outcomes, {} failed scenarios", records.len(), result.failures.len());
    Ok(())
}

pub fn pareto(ctx: &Context, outcomes: Option<PathBuf>) -> Result<(), Failure> {
    let path = outcomes.unwrap_or_else(|| ctx.layout.out(art::OUTCOMES));
    if !path.is_file() {
        return Err(Failure::missing(format!(
            "missing artifact {} (run `incident-fusion run-grid` first)",
            path.display()
        )));
    }
    let records = incident_fusion::eval::read_outcomes(open(&path)?)?;
    let mut kinds: Vec<ModelKind> = records.iter().map(|r| r.model).collect();
    kinds.sort();
    kinds.dedup();
    let mut front_rows = Vec::new();
    let mut on_front = Vec::new();
    for kind in kinds {
        let idx: Vec<usize> = (0..records.len()).filter(|&i| records[i].model == kind).collect();
        let points: Vec<(f64, f64)> = idx.iter().map(|&i| (records[i].metrics.mape, records[i].metrics.rmse)).collect();
        let front = pareto_front(&points);
        let svg = scatter_svg(&format!("{} scenarios", kind.display_name()), "MAPE (%)", "RMSE (min)", &points, &front);
        write_text(&ctx.layout.out(&format!("pareto_{}.svg", kind.code())), &svg)?;
        println!("{}: {} of {} outcomes on the front", kind.display_name(), front.len(), points.len());
        for &f in &front {
            let r = &records[idx[f]];
            let label = r
                .spec
                .map(|s| format!("{} {} {}", s.source, s.units, s.activation))
                .unwrap_or_else(|| "baseline".into());
            println!("  {label:<24} MAPE {:.2}  RMSE {:.2}", r.metrics.mape, r.metrics.rmse);
            front_rows.push(r.clone());
            on_front.push(idx[f]);
        }
    }
    write_with(&ctx.layout.out("pareto_front.csv"), |w| Ok(write_outcomes(w, &front_rows)?))?;
    let all: Vec<(f64, f64)> = records.iter().map(|r| (r.metrics.mape, r.metrics.rmse)).collect();
    on_front.sort_unstable();
    write_with(&ctx.layout.out("pareto_scatter.csv"), |w| Ok(write_scatter(w, &all, &on_front)?))?;
    Ok(())
}

pub struct RandomArgs {
    pub dims: usize,
    pub pairs: usize,
    pub low: f64,
    pub high: f64,
}

pub fn random_experiment(ctx: &Context, a: RandomArgs) -> Result<(), Failure> {
    if a.dims == 0 || a.pairs == 0 || !(a.low > 0.0 && a.high >= a.low) {
        return Err(Failure::input("need dims > 0, pairs > 0 and 0 < low <= high"));
    }
    let exp = random_vector_experiment(a.dims, (a.low, a.high), a.pairs, seed::derive(ctx.config.seed, "random-experiment"))?;
    let l = &ctx.layout;
    write_with(&l.out("random_scatter.csv"), |w| Ok(write_scatter(w, &exp.points, &exp.front)?))?;
    let svg = scatter_svg("Random vectors: MAPE vs RMSE", "MAPE (%)", "RMSE", &exp.points, &exp.front);
    write_text(&l.out("random_pareto.svg"), &svg)?;
    let summary = serde_json::json!({
        "dims": a.dims,
        "pairs": a.pairs,
        "range": [a.low, a.high],
        "correlation": exp.correlation,
        "front": exp.front,
    });
    write_json(&l.out("random_summary.json"), &summary)?;
    println!(
        "{} evaluations: Pearson r(MAPE, RMSE) = {:.4}, {} on the Pareto front",
        a.pairs,
        exp.correlation,
        exp.front.len()
    );
    Ok(())
}

pub struct ExplainArgs {
    pub target: Option<ExplainTarget>,
    pub description: Option<String>,
    pub class: Option<usize>,
}

pub fn explain(ctx: &Context, args: ExplainArgs) -> Result<(), Failure> {
    let incidents = ctx.layout.load_incidents()?;
    let s = &ctx.config.explain;
    let target = args.target.unwrap_or(s.target);
    let (name, labels) = match target {
        ExplainTarget::Severity => ("severity", incidents.iter().map(|r| usize::from(r.severity)).collect::<Vec<_>>()),
        ExplainTarget::Duration => {
            let d: Vec<f64> = incidents.iter().map(|r| f64::from(r.duration_min)).collect();
            let groups = duration_tertiles(&d)?;
            write_json(&ctx.layout.out("duration_groups.json"), &groups.boundaries)?;
            println!(
                "duration groups: <= {} min, <= {} min, above; sizes {:?}",
                groups.boundaries.0,
                groups.boundaries.1,
                groups.sizes()
            );
            ("duration", groups.labels)
        }
    };
    let descriptions: Vec<&str> = incidents.iter().map(|r| r.description.as_str()).collect();
    let chain_cfg = ChainConfig {
        components: s.components,
        n_iter: s.n_iter,
        seed: seed::derive(ctx.config.seed, "explain"),
        ..ChainConfig::default()
    };
    let chain = fit_text_chain(&descriptions, &labels, &chain_cfg)?;
    let correct = descriptions.iter().zip(&labels).filter(|(d, l)| chain.predict(d) == **l).count();
    println!(
        "{name} classifier: classes {:?}, training accuracy {correct}/{}",
        chain.classifier.classes,
        labels.len()
    );
    let lime = LimeOptions {
        n_samples: s.samples,
        top: s.top,
        seed: seed::derive(ctx.config.seed, "lime"),
        ..LimeOptions::default()
    };
    // (class, description) pairs to explain.
    let targets: Vec<(usize, String)> = match (&args.description, args.class) {
        (Some(d), c) => vec![(c.unwrap_or_else(|| chain.predict(d)), d.clone())],
        (None, c) => chain
            .classifier
            .classes
            .iter()
            .filter(|&&k| c.is_none_or(|c| c == k))
            .filter_map(|&k| labels.iter().position(|&l| l == k).map(|i| (k, descriptions[i].to_string())))
            .collect(),
    };
    if targets.is_empty() {
        return Err(Failure::input("nothing to explain for the requested class"));
    }
    let mut all: Vec<WordImportance> = Vec::new();
    for (class, desc) in &targets {
        let items = lime_explain(desc, &chain, *class, &lime)?;
        println!("class {class}: {desc}");
        for it in &items {
            println!("  {:<16}{:>9.4}", it.token, it.weight);
        }
        let bars: Vec<(String, f64)> = items.iter().map(|i| (i.token.clone(), i.weight)).collect();
        let svg = bar_chart_svg(&format!("{name} class {class}"), &bars);
        write_text(&ctx.layout.out(&format!("explain_{name}_class{class}.svg")), &svg)?;
        all.extend(items);
    }
    write_with(&ctx.layout.out(&format!("explain_{name}.csv")), |w| Ok(write_explanation(w, &all)?))?;
    Ok(())
}
