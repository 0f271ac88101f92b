//! Incident-to-detector matching and traffic-window features.
//!
//! Each incident is paired with the nearest station within the radius whose
//! detector data is complete for both required windows: the 288 slots
//! strictly before the incident's start slot, and the same 288 slots one
//! week earlier. From those windows come six series: Speed, Flow, Speed7,
//! Flow7 and the pointwise differences SD = Speed - Speed7 and
//! FD = Flow - Flow7, all scaled by dataset-wide maxima.

mod cache;

use std::io::Write;

use chrono::NaiveDateTime;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{first_missing_slot, format_timestamp, slot_of, slot_start, IncidentRecord, StationSeries, SLOTS_PER_DAY};

pub use cache::{read_matched, write_matched, MatchedRow};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;
pub const DEFAULT_RADIUS_M: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub latitude: f64,
    pub longitude: f64,
}

impl GeoPoint {
    /// `None` unless |lat| <= 90 and |lon| <= 180.
    pub fn new(latitude: f64, longitude: f64) -> Option<Self> {
        (latitude.abs() <= 90.0 && longitude.abs() <= 180.0).then_some(Self { latitude, longitude })
    }
}

/// Great-circle distance in meters.
pub fn haversine(a: GeoPoint, b: GeoPoint) -> f64 {
    let (lat1, lat2) = (a.latitude.to_radians(), b.latitude.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.longitude - a.longitude).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Speed,
    Flow,
    Difference,
}

/// 288 five-minute values, oldest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaySeries288 {
    values: Vec<f64>,
    pub channel: Channel,
    pub normalized: bool,
}

impl DaySeries288 {
    pub fn new(values: Vec<f64>, channel: Channel, normalized: bool) -> Result<Self> {
        if values.len() != SLOTS_PER_DAY {
            return Err(Error::Dimension(format!(
                "day series needs {SLOTS_PER_DAY} values, got {}",
                values.len()
            )));
        }
        Ok(Self { values, channel, normalized })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// The six traffic series attached to a matched incident.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SeriesKind {
    Speed,
    Flow,
    Speed7,
    Flow7,
    Sd,
    Fd,
}

impl SeriesKind {
    pub const ALL: [SeriesKind; 6] = [
        SeriesKind::Speed,
        SeriesKind::Flow,
        SeriesKind::Speed7,
        SeriesKind::Flow7,
        SeriesKind::Sd,
        SeriesKind::Fd,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SeriesKind::Speed => "Speed",
            SeriesKind::Flow => "Flow",
            SeriesKind::Speed7 => "Speed7",
            SeriesKind::Flow7 => "Flow7",
            SeriesKind::Sd => "SD",
            SeriesKind::Fd => "FD",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesBlock {
    pub speed: DaySeries288,
    pub flow: DaySeries288,
    pub speed7: DaySeries288,
    pub flow7: DaySeries288,
    pub sd: DaySeries288,
    pub fd: DaySeries288,
}

impl SeriesBlock {
    pub fn get(&self, kind: SeriesKind) -> &DaySeries288 {
        match kind {
            SeriesKind::Speed => &self.speed,
            SeriesKind::Flow => &self.flow,
            SeriesKind::Speed7 => &self.speed7,
            SeriesKind::Flow7 => &self.flow7,
            SeriesKind::Sd => &self.sd,
            SeriesKind::Fd => &self.fd,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedIncident {
    pub incident: IncidentRecord,
    pub station_id: String,
    pub distance_m: f64,
    pub series: SeriesBlock,
}

/// Dataset-wide scaling constants, persisted alongside trained models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub max_speed: f64,
    pub max_flow: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalizationMode {
    /// Use the maxima over all extracted windows.
    Auto,
    Fixed(Normalization),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationMatch {
    pub station_index: usize,
    pub station_id: String,
    pub distance_m: f64,
}

/// Last slot of the window that ends just before `start`, shifted back by
/// `offset_days` whole days.
fn window_end_slot(start: &NaiveDateTime, offset_days: u32) -> i64 {
    slot_of(start) - 1 - i64::from(offset_days) * SLOTS_PER_DAY as i64
}

fn has_required_windows(series: &StationSeries, start: &NaiveDateTime) -> bool {
    [0, 7]
        .iter()
        .all(|&d| first_missing_slot(series, window_end_slot(start, d), SLOTS_PER_DAY).is_none())
}

/// Nearest station within `radius_m` with complete windows for the incident.
/// Equidistant candidates are ordered by station id.
pub fn match_incident(incident: &IncidentRecord, stations: &[StationSeries], radius_m: f64) -> Option<StationMatch> {
    let mut candidates: Vec<(f64, usize)> = stations
        .iter()
        .enumerate()
        .map(|(i, s)| (haversine(incident.location, s.location), i))
        .filter(|(d, _)| *d <= radius_m)
        .collect();
    candidates.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| stations[a.1].station_id.cmp(&stations[b.1].station_id))
    });
    candidates
        .into_iter()
        .find(|(_, i)| has_required_windows(&stations[*i], &incident.start_time))
        .map(|(d, i)| StationMatch {
            station_index: i,
            station_id: stations[i].station_id.clone(),
            distance_m: d,
        })
}

/// Raw (speed, flow) windows of 288 slots ending just before the incident
/// start, `offset_days` earlier.
pub fn extract_window(
    series: &StationSeries,
    incident_start: &NaiveDateTime,
    offset_days: u32,
) -> Result<(DaySeries288, DaySeries288)> {
    let end = window_end_slot(incident_start, offset_days);
    if let Some(slot) = first_missing_slot(series, end, SLOTS_PER_DAY) {
        return Err(Error::IncompleteWindow {
            slot,
            timestamp: format_timestamp(&slot_start(slot)),
        });
    }
    let start = end - SLOTS_PER_DAY as i64 + 1;
    let (speed, flow): (Vec<f64>, Vec<f64>) = series
        .readings
        .range(start..=end)
        .map(|(_, r)| (r.speed, r.flow))
        .unzip();
    Ok((
        DaySeries288::new(speed, Channel::Speed, false)?,
        DaySeries288::new(flow, Channel::Flow, false)?,
    ))
}

/// Scale the raw windows and form the difference series.
pub fn derive_and_normalize(
    speed: &DaySeries288,
    flow: &DaySeries288,
    speed7: &DaySeries288,
    flow7: &DaySeries288,
    max_speed: f64,
    max_flow: f64,
) -> Result<SeriesBlock> {
    if !(max_speed > 0.0 && max_flow > 0.0) {
        return Err(Error::Config(format!(
            "normalization maxima must be positive (speed {max_speed}, flow {max_flow})"
        )));
    }
    let scale = |s: &DaySeries288, m: f64| -> Result<DaySeries288> {
        let values: Vec<f64> = s.values.iter().map(|v| v / m).collect();
        if values.iter().any(|v| *v > 1.0) {
            return Err(Error::Config(format!(
                "normalization constant {m} is below an observed value"
            )));
        }
        DaySeries288::new(values, s.channel, true)
    };
    let diff = |a: &DaySeries288, b: &DaySeries288| {
        let v = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
        DaySeries288::new(v, Channel::Difference, true)
    };
    let speed = scale(speed, max_speed)?;
    let flow = scale(flow, max_flow)?;
    let speed7 = scale(speed7, max_speed)?;
    let flow7 = scale(flow7, max_flow)?;
    let sd = diff(&speed, &speed7)?;
    let fd = diff(&flow, &flow7)?;
    Ok(SeriesBlock {
        speed,
        flow,
        speed7,
        flow7,
        sd,
        fd,
    })
}

#[derive(Debug, Clone)]
pub struct MatchOutcome {
    /// Sorted by incident id.
    pub matched: Vec<MatchedIncident>,
    pub normalization: Normalization,
    pub n_incidents: usize,
}

impl MatchOutcome {
    pub fn summary(&self) -> String {
        format!("matched {} of {} incidents", self.matched.len(), self.n_incidents)
    }
}

/// Match every incident, extract its four raw windows and normalize.
pub fn match_all(
    incidents: &[IncidentRecord],
    stations: &[StationSeries],
    radius_m: f64,
    mode: NormalizationMode,
) -> Result<MatchOutcome> {
    type Raw = (DaySeries288, DaySeries288, DaySeries288, DaySeries288);
    let found: Vec<Option<(StationMatch, Raw)>> = incidents
        .par_iter()
        .map(|inc| -> Result<Option<(StationMatch, Raw)>> {
            let Some(m) = match_incident(inc, stations, radius_m) else {
                return Ok(None);
            };
            let st = &stations[m.station_index];
            let (s, f) = extract_window(st, &inc.start_time, 0)?;
            let (s7, f7) = extract_window(st, &inc.start_time, 7)?;
            Ok(Some((m, (s, f, s7, f7))))
        })
        .collect::<Result<_>>()?;

    let normalization = match mode {
        NormalizationMode::Fixed(n) => n,
        NormalizationMode::Auto => {
            let mut n = Normalization {
                max_speed: 0.0,
                max_flow: 0.0,
            };
            for (_, (s, f, s7, f7)) in found.iter().flatten() {
                for v in s.values.iter().chain(&s7.values) {
                    n.max_speed = n.max_speed.max(*v);
                }
                for v in f.values.iter().chain(&f7.values) {
                    n.max_flow = n.max_flow.max(*v);
                }
            }
            n
        }
    };

    let mut matched = Vec::new();
    for (inc, hit) in incidents.iter().zip(found) {
        let Some((m, (s, f, s7, f7))) = hit else { continue };
        let series = derive_and_normalize(&s, &f, &s7, &f7, normalization.max_speed, normalization.max_flow)?;
        matched.push(MatchedIncident {
            incident: inc.clone(),
            station_id: m.station_id,
            distance_m: m.distance_m,
            series,
        });
    }
    matched.sort_by(|a, b| a.incident.id.cmp(&b.incident.id));
    Ok(MatchOutcome {
        matched,
        normalization,
        n_incidents: incidents.len(),
    })
}

pub fn write_normalization<W: Write>(writer: W, n: &Normalization) -> Result<()> {
    serde_json::to_writer_pretty(writer, n)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_timestamp, Reading};
    use proptest::prelude::*;

    fn incident_at(p: GeoPoint, start: &str) -> IncidentRecord {
        let start_time = parse_timestamp(start).unwrap();
        IncidentRecord {
            id: "I".into(),
            location: p,
            start_time,
            end_time: start_time + chrono::Duration::minutes(30),
            severity: 2,
            description: "x".into(),
            baseline: vec![],
            duration_min: 30,
        }
    }

    fn station(id: &str, p: GeoPoint, slots: std::ops::Range<i64>, speed: f64) -> StationSeries {
        let mut s = StationSeries::new(id, p);
        for k in slots {
            s.readings.insert(k, Reading { speed, flow: 10.0 });
        }
        s
    }

    /// Point `meters` due north of `p`.
    fn north(p: GeoPoint, meters: f64) -> GeoPoint {
        GeoPoint {
            latitude: p.latitude + (meters / EARTH_RADIUS_M).to_degrees(),
            longitude: p.longitude,
        }
    }

    const ORIGIN: GeoPoint = GeoPoint {
        latitude: 37.75,
        longitude: -122.45,
    };

    fn full_slots(start: &str) -> std::ops::Range<i64> {
        let s = slot_of(&parse_timestamp(start).unwrap());
        s - 9 * 288..s + 10
    }

    #[test]
    fn haversine_reference_values() {
        let a = GeoPoint::new(0.0, 0.0).unwrap();
        assert_eq!(haversine(a, a), 0.0);
        let b = GeoPoint::new(1.0, 0.0).unwrap();
        let expected = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        assert!((haversine(a, b) - expected).abs() < 1e-6);
        assert!((haversine(a, b) - 111_194.9).abs() < 0.1);
    }

    proptest! {
        #[test]
        fn haversine_is_symmetric(
            la in -90.0f64..90.0, lo in -180.0f64..180.0,
            lb in -90.0f64..90.0, lob in -180.0f64..180.0,
        ) {
            let a = GeoPoint::new(la, lo).unwrap();
            let b = GeoPoint::new(lb, lob).unwrap();
            prop_assert_eq!(haversine(a, b), haversine(b, a));
            prop_assert!(haversine(a, b) >= 0.0);
        }
    }

    #[test]
    fn matches_single_close_station() {
        let t = "2019-03-20T10:00";
        let st = vec![station("A", north(ORIGIN, 100.0), full_slots(t), 90.0)];
        let m = match_incident(&incident_at(ORIGIN, t), &st, 500.0).unwrap();
        assert_eq!(m.station_id, "A");
        assert!((m.distance_m - 100.0).abs() < 0.01);
    }

    #[test]
    fn station_beyond_radius_is_ignored() {
        let t = "2019-03-20T10:00";
        let st = vec![station("A", north(ORIGIN, 600.0), full_slots(t), 90.0)];
        assert!(match_incident(&incident_at(ORIGIN, t), &st, 500.0).is_none());
    }

    #[test]
    fn incomplete_nearest_station_falls_through() {
        let t = "2019-03-20T10:00";
        let mut near = station("A", north(ORIGIN, 100.0), full_slots(t), 90.0);
        let s = slot_of(&parse_timestamp(t).unwrap());
        near.readings.remove(&(s - 7 * 288 - 5));
        let far = station("B", north(ORIGIN, 300.0), full_slots(t), 90.0);
        let stations = vec![near, far];
        // Oracle: enumerate in distance order, take the first with both windows complete.
        let inc = incident_at(ORIGIN, t);
        let mut by_dist: Vec<_> = stations.iter().map(|st| (haversine(ORIGIN, st.location), st)).collect();
        by_dist.sort_by(|a, b| a.0.total_cmp(&b.0));
        let oracle = by_dist
            .iter()
            .find(|(d, st)| {
                *d <= 500.0
                    && crate::ingest::validate_window(st, s - 1, 288)
                    && crate::ingest::validate_window(st, s - 1 - 7 * 288, 288)
            })
            .map(|(_, st)| st.station_id.clone());
        let m = match_incident(&inc, &stations, 500.0).unwrap();
        assert_eq!(Some(m.station_id.clone()), oracle);
        assert_eq!(m.station_id, "B");
        assert!((m.distance_m - 300.0).abs() < 0.01);
    }

    #[test]
    fn equidistant_tie_goes_to_lowest_id() {
        let t = "2019-03-20T10:00";
        let p = north(ORIGIN, 200.0);
        let st = vec![station("Z", p, full_slots(t), 90.0), station("M", p, full_slots(t), 90.0)];
        assert_eq!(match_incident(&incident_at(ORIGIN, t), &st, 500.0).unwrap().station_id, "M");
    }

    #[test]
    fn constant_speed_window() {
        let t = "2019-03-20T10:00";
        let st = station("A", ORIGIN, full_slots(t), 100.0);
        let (speed, flow) = extract_window(&st, &parse_timestamp(t).unwrap(), 0).unwrap();
        assert!(speed.values().iter().all(|&v| v == 100.0));
        assert_eq!(flow.values().len(), 288);
    }

    #[test]
    fn week_offset_window_indices() {
        let t = parse_timestamp("2019-03-20T10:02").unwrap();
        let s = slot_of(&t);
        let mut st = StationSeries::new("A", ORIGIN);
        for k in s - 9 * 288..s + 5 {
            // encode the slot index in the speed to read the window back
            st.readings.insert(k, Reading { speed: (k - s + 10_000) as f64, flow: 0.0 });
        }
        let (speed, _) = extract_window(&st, &t, 7).unwrap();
        let first = speed.values()[0] as i64 - 10_000;
        let last = speed.values()[287] as i64 - 10_000;
        assert_eq!(first, -7 * 288 - 288);
        assert_eq!(last, -7 * 288 - 1);
        let (today, _) = extract_window(&st, &t, 0).unwrap();
        assert_eq!(today.values()[287] as i64 - 10_000, -1);
    }

    #[test]
    fn extraction_names_first_missing_slot() {
        let t = parse_timestamp("2019-03-20T10:00").unwrap();
        let s = slot_of(&t);
        let mut st = station("A", ORIGIN, s - 300..s, 90.0);
        st.readings.remove(&(s - 100));
        match extract_window(&st, &t, 0) {
            Err(Error::IncompleteWindow { slot, timestamp }) => {
                assert_eq!(slot, s - 100);
                assert_eq!(timestamp, "2019-03-20T01:40");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    fn day(v: f64, c: Channel) -> DaySeries288 {
        DaySeries288::new(vec![v; 288], c, false).unwrap()
    }

    #[test]
    fn normalization_and_differences() {
        let b = derive_and_normalize(
            &day(60.0, Channel::Speed),
            &day(50.0, Channel::Flow),
            &day(60.0, Channel::Speed),
            &day(25.0, Channel::Flow),
            120.0,
            100.0,
        )
        .unwrap();
        assert!(b.speed.values().iter().all(|&v| v == 0.5));
        assert!(b.sd.values().iter().all(|&v| v == 0.0));
        assert!(b.fd.values().iter().all(|&v| v == 0.25));
        assert_eq!(b.fd.channel, Channel::Difference);
    }

    #[test]
    fn nonpositive_maximum_is_config_error() {
        let s = day(1.0, Channel::Speed);
        let f = day(1.0, Channel::Flow);
        assert!(matches!(
            derive_and_normalize(&s, &f, &s, &f, 0.0, 1.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn wrong_length_series_rejected() {
        assert!(DaySeries288::new(vec![0.0; 287], Channel::Speed, false).is_err());
    }
}
