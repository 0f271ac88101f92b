use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use super::{format_timestamp, parse_timestamp, slot_of, slot_start, Reading, Rejection, StationSeries};
use crate::error::{Error, Result};
use crate::vds::GeoPoint;

#[derive(Debug, Clone)]
pub struct StationParse {
    /// Sorted by station id.
    pub series: Vec<StationSeries>,
    pub rejections: Vec<Rejection>,
    pub rows_in: usize,
}

fn find(headers: &csv::StringRecord, names: &[&str]) -> Result<usize> {
    headers
        .iter()
        .position(|h| names.iter().any(|n| h.trim().eq_ignore_ascii_case(n)))
        .ok_or_else(|| Error::Schema(format!("missing required column `{}`", names[0])))
}

/// Station metadata CSV: `station_id,latitude,longitude`.
pub fn parse_station_meta<R: Read>(source: R) -> Result<BTreeMap<String, GeoPoint>> {
    let mut reader = csv::Reader::from_reader(source);
    let headers = reader.headers()?.clone();
    let id = find(&headers, &["station_id"])?;
    let lat = find(&headers, &["latitude", "lat"])?;
    let lon = find(&headers, &["longitude", "lon"])?;
    let mut out = BTreeMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let get = |k: usize| row.get(k).unwrap_or("").trim();
        let point = get(lat)
            .parse()
            .ok()
            .zip(get(lon).parse().ok())
            .and_then(|(a, b)| GeoPoint::new(a, b))
            .ok_or_else(|| Error::Schema(format!("station metadata row {}: bad coordinates", i + 1)))?;
        out.insert(get(id).to_string(), point);
    }
    Ok(out)
}

/// Parse `station_id,timestamp,speed,flow` rows into per-station series.
///
/// Timestamps are floored to their 5-minute slot. Negative or unparseable
/// values, stations missing from `meta`, and repeated (station, slot) pairs
/// are rejected row by row.
pub fn parse_station_readings<R: Read>(source: R, meta: &BTreeMap<String, GeoPoint>) -> Result<StationParse> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(source);
    let headers = reader.headers()?.clone();
    let cols = [
        find(&headers, &["station_id"])?,
        find(&headers, &["timestamp"])?,
        find(&headers, &["speed"])?,
        find(&headers, &["flow"])?,
    ];
    let mut by_station: BTreeMap<String, StationSeries> = BTreeMap::new();
    let mut rejections = Vec::new();
    let mut rows_in = 0;
    let mut reject = |row: usize, reason: &str| rejections.push(Rejection { row, reason: reason.into() });

    for (i, row) in reader.records().enumerate() {
        rows_in += 1;
        let n = i + 1;
        let row = match row {
            Ok(r) => r,
            Err(_) => {
                reject(n, "malformed row");
                continue;
            }
        };
        let get = |k: usize| row.get(cols[k]).unwrap_or("").trim();
        let station = get(0);
        let Some(location) = meta.get(station) else {
            reject(n, "unknown station");
            continue;
        };
        let Some(ts) = parse_timestamp(get(1)) else {
            reject(n, "unparseable timestamp");
            continue;
        };
        let (Ok(speed), Ok(flow)) = (get(2).parse::<f64>(), get(3).parse::<f64>()) else {
            reject(n, "unparseable reading");
            continue;
        };
        if !speed.is_finite() || !flow.is_finite() {
            reject(n, "non-finite reading");
            continue;
        }
        if speed < 0.0 {
            reject(n, "negative speed");
            continue;
        }
        if flow < 0.0 {
            reject(n, "negative flow");
            continue;
        }
        let series = by_station
            .entry(station.to_string())
            .or_insert_with(|| StationSeries::new(station, *location));
        let slot = slot_of(&ts);
        if series.readings.contains_key(&slot) {
            reject(n, "duplicate slot");
            continue;
        }
        series.readings.insert(slot, Reading { speed, flow });
    }
    Ok(StationParse {
        series: by_station.into_values().collect(),
        rejections,
        rows_in,
    })
}

pub fn write_station_readings<W: Write>(writer: W, series: &[StationSeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["station_id", "timestamp", "speed", "flow"])?;
    for s in series {
        for (slot, r) in &s.readings {
            w.write_record([
                s.station_id.clone(),
                format_timestamp(&slot_start(*slot)),
                r.speed.to_string(),
                r.flow.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_station_meta<W: Write>(writer: W, series: &[StationSeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["station_id", "latitude", "longitude"])?;
    let mut seen = HashSet::new();
    for s in series {
        if seen.insert(&s.station_id) {
            w.write_record([
                s.station_id.clone(),
                s.location.latitude.to_string(),
                s.location.longitude.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
