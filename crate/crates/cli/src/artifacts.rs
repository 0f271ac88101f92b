//! On-disk cache and output layout.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use incident_fusion::encoders::{read_encoded, EncodedCache};
use incident_fusion::ingest::{parse_incidents, parse_station_meta, parse_station_readings, BaselineSchema, IncidentRecord, StationSeries};
use incident_fusion::regressors::RegressorConfig;
use incident_fusion::vds::{read_matched, MatchedIncident};

use crate::failure::Failure;

pub const INCIDENTS: &str = "incidents.csv";
pub const INCIDENT_REJECTIONS: &str = "incident_rejections.csv";
pub const STATION_META: &str = "station_meta.csv";
pub const STATION_READINGS: &str = "station_readings.csv";
pub const STATION_REJECTIONS: &str = "station_rejections.csv";
pub const MATCHED: &str = "matched.csv";
pub const NORMALIZATION: &str = "normalization.json";
pub const ENCODED: &str = "encoded.csv";
pub const SELECTED_MODELS: &str = "selected_models.json";
pub const OUTCOMES: &str = "outcomes.csv";

/// Columns every incident file carries before the baseline features.
const FIXED_INCIDENT_COLUMNS: usize = 7;

#[derive(Debug, Clone)]
pub struct Layout {
    pub cache: PathBuf,
    pub output: PathBuf,
}

impl Layout {
    pub fn cached(&self, name: &str) -> PathBuf {
        self.cache.join(name)
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.output.join(name)
    }

    /// Path of a cache file that an earlier command must have produced.
    pub fn require(&self, name: &str, producer: &str) -> Result<PathBuf, Failure> {
        let p = self.cached(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Failure::missing(format!(
                "missing artifact {} (run `incident-fusion {producer}` first)",
                p.display()
            )))
        }
    }

    pub fn load_incidents(&self) -> Result<Vec<IncidentRecord>, Failure> {
        let path = self.require(INCIDENTS, "ingest")?;
        let header = csv_header(&path)?;
        let schema = BaselineSchema {
            numeric: header.into_iter().skip(FIXED_INCIDENT_COLUMNS).collect(),
            categorical: Vec::new(),
        };
        Ok(parse_incidents(open(&path)?, &schema)?.records)
    }

    pub fn load_stations(&self) -> Result<Vec<StationSeries>, Failure> {
        let meta = parse_station_meta(open(&self.require(STATION_META, "ingest")?)?)?;
        Ok(parse_station_readings(open(&self.require(STATION_READINGS, "ingest")?)?, &meta)?.series)
    }

    pub fn load_matched(&self, incidents: &[IncidentRecord]) -> Result<Vec<MatchedIncident>, Failure> {
        let rows = read_matched(open(&self.require(MATCHED, "match")?)?)?;
        let by_id: HashMap<&str, &IncidentRecord> = incidents.iter().map(|r| (r.id.as_str(), r)).collect();
        Ok(rows
            .into_iter()
            .map(|r| r.into_matched(&by_id))
            .collect::<incident_fusion::Result<Vec<_>>>()?)
    }

    pub fn load_encoded(&self) -> Result<EncodedCache, Failure> {
        let vectors = read_encoded(open(&self.require(ENCODED, "train-encoders")?)?)?;
        Ok(EncodedCache::from_vectors(vectors))
    }

    /// Tuned configurations saved by `rank-models`, if any.
    pub fn selected_models(&self) -> Result<Option<Vec<RegressorConfig>>, Failure> {
        let p = self.cached(SELECTED_MODELS);
        if !p.is_file() {
            return Ok(None);
        }
        serde_json::from_reader(open(&p)?)
            .map(Some)
            .map_err(|e| Failure::input(format!("{}: {e}", p.display())))
    }
}

pub fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::missing(format!("cannot open {}: {e}", path.display())))
}

fn csv_header(path: &Path) -> Result<Vec<String>, Failure> {
    let mut r = csv::Reader::from_reader(open(path)?);
    let h = r.headers().map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok(h.iter().map(str::to_string).collect())
}

/// Create `path` (and its directory) and hand a buffered writer to `body`.
pub fn write_with<F>(path: &Path, body: F) -> Result<(), Failure>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), Failure>,
{
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    write_with(path, |w| Ok(w.write_all(text.as_bytes())?))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::input(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}
