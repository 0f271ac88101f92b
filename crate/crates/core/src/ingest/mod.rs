//! Incident-report and detector-reading ingestion.

mod incidents;
mod stations;
pub mod synth;

use std::collections::BTreeMap;
use std::io::Write;

use chrono::{DateTime, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::vds::GeoPoint;

pub use incidents::{parse_incidents, write_incidents, write_raw_incidents, IncidentParse, RawIncident};
pub use stations::{
    parse_station_meta, parse_station_readings, write_station_meta, write_station_readings,
    StationParse,
};
pub use synth::{generate_synthetic, DurationLaw, NoiseSd, SyntheticConfig, SyntheticDataset};

/// Width of one detector aggregation slot.
pub const SLOT_MINUTES: i64 = 5;
/// Slots in 24 hours.
pub const SLOTS_PER_DAY: usize = 288;

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M";

/// One incident report with its derived duration target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidentRecord {
    pub id: String,
    pub location: GeoPoint,
    pub start_time: NaiveDateTime,
    pub end_time: NaiveDateTime,
    pub severity: u8,
    pub description: String,
    /// Named numeric features, categoricals already expanded.
    pub baseline: Vec<(String, f64)>,
    pub duration_min: u32,
}

impl IncidentRecord {
    pub fn baseline_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.baseline.iter().map(|(_, v)| *v)
    }

    pub fn start_slot(&self) -> i64 {
        slot_of(&self.start_time)
    }
}

/// Declared baseline columns of the incident CSV.
///
/// Numeric columns are copied as-is. Each categorical column becomes one
/// indicator per observed level except the alphabetically first, which is
/// the reference level (so an intercept plus indicators stays full rank).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BaselineSchema {
    pub numeric: Vec<String>,
    pub categorical: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reading {
    /// km/h
    pub speed: f64,
    /// vehicles per 5 minutes
    pub flow: f64,
}

/// All readings of one detector station, keyed by 5-minute slot index
/// (minutes since the Unix epoch divided by five).
#[derive(Debug, Clone, PartialEq)]
pub struct StationSeries {
    pub station_id: String,
    pub location: GeoPoint,
    pub readings: BTreeMap<i64, Reading>,
}

impl StationSeries {
    pub fn new(station_id: impl Into<String>, location: GeoPoint) -> Self {
        Self {
            station_id: station_id.into(),
            location,
            readings: BTreeMap::new(),
        }
    }

    /// First and last slot present, if any.
    pub fn coverage(&self) -> Option<(i64, i64)> {
        let first = *self.readings.keys().next()?;
        let last = *self.readings.keys().next_back()?;
        Some((first, last))
    }
}

/// True iff every one of the `n_slots` slots ending at `end_slot` is present.
pub fn validate_window(series: &StationSeries, end_slot: i64, n_slots: usize) -> bool {
    first_missing_slot(series, end_slot, n_slots).is_none()
}

pub(crate) fn first_missing_slot(series: &StationSeries, end_slot: i64, n_slots: usize) -> Option<i64> {
    if n_slots == 0 {
        return None;
    }
    let start = end_slot - n_slots as i64 + 1;
    let mut expected = start;
    for (&slot, _) in series.readings.range(start..=end_slot) {
        if slot != expected {
            return Some(expected);
        }
        expected += 1;
    }
    (expected <= end_slot).then_some(expected)
}

/// A dropped input row and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    /// 1-based data row number (the header is not counted).
    pub row: usize,
    pub reason: String,
}

pub fn write_rejections<W: Write>(writer: W, rejections: &[Rejection]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["row_number", "reason"])?;
    for r in rejections {
        w.write_record([r.row.to_string(), r.reason.clone()])?;
    }
    w.flush()?;
    Ok(())
}

/// Parse an ISO-8601 timestamp, floored to the minute. Offsets are converted
/// to UTC; naive timestamps are taken as UTC.
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    let parsed = DateTime::parse_from_rfc3339(s)
        .map(|dt| dt.naive_utc())
        .ok()
        .or_else(|| {
            [
                "%Y-%m-%dT%H:%M:%S%.f",
                "%Y-%m-%dT%H:%M",
                "%Y-%m-%d %H:%M:%S%.f",
                "%Y-%m-%d %H:%M",
            ]
            .iter()
            .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        })?;
    parsed.with_second(0)?.with_nanosecond(0)
}

pub fn format_timestamp(t: &NaiveDateTime) -> String {
    t.format(TIMESTAMP_FORMAT).to_string()
}

/// 5-minute slot containing `t` (floor).
pub fn slot_of(t: &NaiveDateTime) -> i64 {
    t.and_utc().timestamp().div_euclid(60 * SLOT_MINUTES)
}

pub fn slot_start(slot: i64) -> NaiveDateTime {
    DateTime::from_timestamp(slot * 60 * SLOT_MINUTES, 0)
        .expect("slot within chrono range")
        .naive_utc()
}
