//! Desk-scale synthetic incidents and detector data.
//!
//! Each incident sits 20-400 m from exactly one station on a 2.2 km grid.
//! Its station's speed series carries a planted drop: congestion builds for
//! `length` minutes before the report time and persists until clearance, and
//! the clearance time follows the configured duration law of drop depth and
//! drop length. Descriptions are template sentences whose blockage wording
//! tracks severity, which in turn tracks drop depth.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Duration, NaiveDate, NaiveDateTime, Timelike};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::incidents::expand_baseline;
use super::{slot_of, BaselineSchema, IncidentRecord, RawIncident, Reading, StationSeries, SLOTS_PER_DAY};
use crate::error::{Error, Result};
use crate::seed::{self, Rng};
use crate::vds::GeoPoint;

/// duration = intercept + per_depth * depth(km/h) + per_length * length(min) + noise
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DurationLaw {
    pub intercept: f64,
    pub per_depth: f64,
    pub per_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSd {
    /// km/h
    pub speed: f64,
    /// vehicles per slot
    pub flow: f64,
    /// minutes
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_incidents: usize,
    pub n_stations: usize,
    pub seed: u64,
    /// km/h
    pub drop_depth_range: (f64, f64),
    /// minutes of congestion visible before the report
    pub drop_length_range: (f64, f64),
    pub duration_law: DurationLaw,
    pub noise_sd: NoiseSd,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_incidents: 200,
            n_stations: 20,
            seed: 1,
            drop_depth_range: (10.0, 60.0),
            drop_length_range: (20.0, 180.0),
            duration_law: DurationLaw {
                intercept: 0.0,
                per_depth: 0.8,
                per_length: 0.5,
            },
            noise_sd: NoiseSd {
                speed: 3.0,
                flow: 2.0,
                duration: 5.0,
            },
        }
    }
}

impl SyntheticConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synthetic config: {m}")));
        if self.n_incidents == 0 || self.n_stations == 0 {
            return bad("counts must be positive");
        }
        let n = &self.noise_sd;
        if !(n.speed >= 0.0 && n.flow >= 0.0 && n.duration >= 0.0) {
            return bad("noise standard deviations must be non-negative");
        }
        let (dl, dh) = self.drop_depth_range;
        let (ll, lh) = self.drop_length_range;
        if !(0.0 <= dl && dl <= dh && dh < 100.0) {
            return bad("drop depth range must satisfy 0 <= lo <= hi < 100");
        }
        if !(0.0 <= ll && ll <= lh && lh <= 20.0 * 60.0) {
            return bad("drop length range must satisfy 0 <= lo <= hi <= 1200");
        }
        Ok(())
    }
}

/// Ground truth for one generated incident.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedDrop {
    pub incident_id: String,
    pub station_id: String,
    pub depth: f64,
    pub length_min: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub schema: BaselineSchema,
    pub raw: Vec<RawIncident>,
    pub incidents: Vec<IncidentRecord>,
    pub stations: Vec<StationSeries>,
    pub drops: Vec<PlantedDrop>,
}

const ROADS: [(&str, [&str; 2]); 3] = [
    ("I-280", ["Northbound", "Southbound"]),
    ("US-101", ["Northbound", "Southbound"]),
    ("I-80", ["Eastbound", "Westbound"]),
];

const PLACES: [&str; 8] = [
    "Exit 57 King St",
    "Exit 52 San Jose Ave",
    "Exit 55 Cesar Chavez",
    "Ocean Ave",
    "Exits 2B 2C Harrison St",
    "Exit 438 CA-1",
    "Exits 429B 429C Bay Shore Blvd",
    "Exits 1 1C / Bryant St / 8th St",
];

/// A template description whose blockage wording depends on severity.
pub fn description_for(severity: u8, rng: &mut Rng) -> String {
    let (road, dirs) = ROADS[rng.random_range(0..ROADS.len())];
    let dir = dirs[rng.random_range(0..2)];
    let place = PLACES[rng.random_range(0..PLACES.len())];
    let lead = match severity {
        1 => return format!("Accident on {road} {dir} at {place}."),
        2 => "Right hand shoulder blocked",
        3 => "Lane blocked",
        _ => "Two lanes blocked",
    };
    format!("{lead} due to accident on {road} {dir} at {place}.")
}

fn speed_profile(hour: f64) -> f64 {
    100.0 - 15.0 * (-((hour - 8.0) / 1.2).powi(2)).exp() - 20.0 * (-((hour - 17.5) / 1.5).powi(2)).exp()
}

fn flow_profile(hour: f64) -> f64 {
    20.0 + 60.0 * (-((hour - 8.0) / 2.0).powi(2)).exp() + 70.0 * (-((hour - 17.5) / 2.5).powi(2)).exp()
        + 30.0 * (-((hour - 13.0) / 4.0).powi(2)).exp()
}

fn hour_of_slot(slot: i64) -> f64 {
    slot.rem_euclid(SLOTS_PER_DAY as i64) as f64 * 5.0 / 60.0
}

fn normal(rng: &mut Rng, sd: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    sd * z
}

fn uniform(rng: &mut Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn offset_point(origin: GeoPoint, distance_m: f64, bearing: f64) -> GeoPoint {
    let r = crate::vds::EARTH_RADIUS_M;
    let dlat = distance_m * bearing.cos() / r;
    let dlon = distance_m * bearing.sin() / (r * origin.latitude.to_radians().cos());
    GeoPoint {
        latitude: origin.latitude + dlat.to_degrees(),
        longitude: origin.longitude + dlon.to_degrees(),
    }
}

struct Planted {
    station: usize,
    start_slot: i64,
    onset_slot: i64,
    end_slot: i64,
    depth: f64,
}

pub fn generate_synthetic(config: &SyntheticConfig) -> Result<SyntheticDataset> {
    config.validate()?;
    let schema = BaselineSchema {
        numeric: vec!["severity".into(), "hour".into(), "weekday".into(), "distance_mi".into()],
        categorical: vec!["weather".into(), "light".into()],
    };

    let cols = (config.n_stations as f64).sqrt().ceil() as usize;
    let mut stations: Vec<StationSeries> = (0..config.n_stations)
        .map(|s| {
            let p = GeoPoint {
                latitude: 37.70 + (s / cols) as f64 * 0.02,
                longitude: -122.50 + (s % cols) as f64 * 0.02,
            };
            StationSeries::new(format!("VDS-{:04}", s + 1), p)
        })
        .collect();

    let base: NaiveDateTime = NaiveDate::from_ymd_opt(2019, 3, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid base date");
    let mut rng = seed::rng_for(config.seed, "synthetic-incidents");
    let mut raw = Vec::with_capacity(config.n_incidents);
    let mut drops = Vec::with_capacity(config.n_incidents);
    let mut planted = Vec::with_capacity(config.n_incidents);
    let (dlo, dhi) = config.drop_depth_range;
    let law = config.duration_law;

    for i in 0..config.n_incidents {
        let station = i % config.n_stations;
        let occurrence = (i / config.n_stations) as i64;
        let distance = uniform(&mut rng, (20.0, 400.0));
        let bearing = uniform(&mut rng, (0.0, std::f64::consts::TAU));
        let location = offset_point(stations[station].location, distance, bearing);

        let minute = rng.random_range(0..24 * 60) as i64;
        let start = base + Duration::days(8 + 10 * occurrence) + Duration::minutes(minute);
        let depth = uniform(&mut rng, config.drop_depth_range);
        let length = uniform(&mut rng, config.drop_length_range);
        let noisy = law.intercept + law.per_depth * depth + law.per_length * length
            + normal(&mut rng, config.noise_sd.duration);
        let duration = noisy.round().max(1.0) as i64;
        let end = start + Duration::minutes(duration);

        let frac = if dhi > dlo { (depth - dlo) / (dhi - dlo) } else { 0.5 };
        let mut severity = 1 + ((frac * 4.0) as i64).min(3);
        let jitter: f64 = rng.random();
        if jitter < 0.1 {
            severity -= 1;
        } else if jitter < 0.2 {
            severity += 1;
        }
        let severity = severity.clamp(1, 4) as u8;
        let description = description_for(severity, &mut rng);

        let hour = start.hour() as f64;
        let weekday = start.and_utc().format("%u").to_string().parse::<f64>().unwrap_or(1.0) - 1.0;
        let distance_mi = (uniform(&mut rng, (0.0, 2.0)) * 100.0).round() / 100.0;
        let w: f64 = rng.random();
        let weather = if w < 0.7 { "clear" } else if w < 0.9 { "rain" } else { "fog" };
        let light = if (6.0..19.0).contains(&hour) { "day" } else { "night" };

        let id = format!("SYN-{:05}", i + 1);
        raw.push(RawIncident {
            id: id.clone(),
            location,
            start_time: start,
            end_time: end,
            severity,
            description,
            numeric: vec![severity as f64, hour, weekday, distance_mi],
            categorical: vec![weather.into(), light.into()],
        });
        drops.push(PlantedDrop {
            incident_id: id,
            station_id: stations[station].station_id.clone(),
            depth,
            length_min: length,
        });
        let start_slot = slot_of(&start);
        planted.push(Planted {
            station,
            start_slot,
            onset_slot: slot_of(&(start - Duration::minutes(length.round() as i64))),
            end_slot: slot_of(&end),
            depth,
        });
    }

    let day = SLOTS_PER_DAY as i64;
    for (s, series) in stations.iter_mut().enumerate() {
        let mine: Vec<&Planted> = planted.iter().filter(|p| p.station == s).collect();
        let mut slots = BTreeSet::new();
        for p in &mine {
            slots.extend(p.start_slot - 8 * day..p.start_slot - 7 * day);
            slots.extend(p.start_slot - day..=p.end_slot);
        }
        let mut srng = seed::rng_for(config.seed, &format!("station-{}", series.station_id));
        let mut readings = BTreeMap::new();
        for slot in slots {
            let hour = hour_of_slot(slot);
            let mut speed = speed_profile(hour) + normal(&mut srng, config.noise_sd.speed);
            let mut flow = flow_profile(hour) + normal(&mut srng, config.noise_sd.flow);
            if let Some(p) = mine.iter().find(|p| (p.onset_slot..=p.end_slot).contains(&slot)) {
                speed -= p.depth;
                flow *= 0.9;
            }
            readings.insert(
                slot,
                Reading {
                    speed: speed.max(3.0),
                    flow: flow.max(0.0),
                },
            );
        }
        series.readings = readings;
    }

    let incidents = expand_baseline(raw.clone(), &schema);
    Ok(SyntheticDataset {
        schema,
        raw,
        incidents,
        stations,
        drops,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SyntheticConfig {
        SyntheticConfig {
            n_incidents: 12,
            n_stations: 4,
            seed,
            ..SyntheticConfig::default()
        }
    }

    #[test]
    fn same_seed_same_data() {
        let a = generate_synthetic(&small(1)).unwrap();
        let b = generate_synthetic(&small(1)).unwrap();
        assert_eq!(a.incidents, b.incidents);
        assert_eq!(a.stations, b.stations);
        let c = generate_synthetic(&small(2)).unwrap();
        assert_ne!(a.incidents, c.incidents);
    }

    #[test]
    fn noiseless_linear_law_is_exact() {
        let cfg = SyntheticConfig {
            drop_depth_range: (40.0, 40.0),
            duration_law: DurationLaw {
                intercept: 0.0,
                per_depth: 1.0,
                per_length: 0.0,
            },
            noise_sd: NoiseSd {
                speed: 0.0,
                flow: 0.0,
                duration: 0.0,
            },
            ..small(5)
        };
        let d = generate_synthetic(&cfg).unwrap();
        assert!(d.incidents.iter().all(|r| r.duration_min == 40));
    }

    #[test]
    fn severity_tracks_blockage_wording() {
        let d = generate_synthetic(&SyntheticConfig::default()).unwrap();
        for r in &d.incidents {
            let blocked = r.description.contains("blocked");
            assert_eq!(blocked, r.severity >= 2, "{}: {}", r.severity, r.description);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = SyntheticConfig {
            n_incidents: 0,
            ..SyntheticConfig::default()
        };
        assert!(generate_synthetic(&cfg).is_err());
        let cfg = SyntheticConfig {
            noise_sd: NoiseSd {
                speed: -1.0,
                flow: 0.0,
                duration: 0.0,
            },
            ..SyntheticConfig::default()
        };
        assert!(generate_synthetic(&cfg).is_err());
    }
}
