//! Matched-features CSV: `incident_id,station_id,distance_m` followed by
//! 6 x 288 normalized values (speed, flow, speed7, flow7, sd, fd).

use std::collections::HashMap;
use std::io::{Read, Write};

use super::{Channel, DaySeries288, MatchedIncident, SeriesBlock, SeriesKind};
use crate::error::{Error, Result};
use crate::ingest::{IncidentRecord, SLOTS_PER_DAY};

const PREFIXES: [&str; 6] = ["speed", "flow", "speed7", "flow7", "sd", "fd"];

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedRow {
    pub incident_id: String,
    pub station_id: String,
    pub distance_m: f64,
    pub series: SeriesBlock,
}

impl MatchedRow {
    /// Attach the full incident record; fails if the id is unknown.
    pub fn into_matched(self, incidents: &HashMap<&str, &IncidentRecord>) -> Result<MatchedIncident> {
        let incident = incidents
            .get(self.incident_id.as_str())
            .ok_or_else(|| Error::Schema(format!("matched incident `{}` not in incident set", self.incident_id)))?;
        Ok(MatchedIncident {
            incident: (*incident).clone(),
            station_id: self.station_id,
            distance_m: self.distance_m,
            series: self.series,
        })
    }
}

pub fn write_matched<W: Write>(writer: W, matched: &[MatchedIncident]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["incident_id".to_string(), "station_id".into(), "distance_m".into()];
    for p in PREFIXES {
        header.extend((1..=SLOTS_PER_DAY).map(|i| format!("{p}_{i}")));
    }
    w.write_record(&header)?;
    for m in matched {
        let mut row = vec![m.incident.id.clone(), m.station_id.clone(), m.distance_m.to_string()];
        for kind in SeriesKind::ALL {
            row.extend(m.series.get(kind).values().iter().map(|v| v.to_string()));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matched<R: Read>(source: R) -> Result<Vec<MatchedRow>> {
    let mut reader = csv::Reader::from_reader(source);
    let width = 3 + 6 * SLOTS_PER_DAY;
    if reader.headers()?.len() != width {
        return Err(Error::Schema(format!("matched-features file must have {width} columns")));
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let num = |k: usize| -> Result<f64> {
            row[k]
                .parse()
                .map_err(|_| Error::Schema(format!("matched row {}: bad number in column {}", i + 1, k + 1)))
        };
        let mut blocks = Vec::with_capacity(6);
        for (b, kind) in SeriesKind::ALL.iter().enumerate() {
            let off = 3 + b * SLOTS_PER_DAY;
            let values = (off..off + SLOTS_PER_DAY).map(num).collect::<Result<Vec<_>>>()?;
            let channel = match kind {
                SeriesKind::Speed | SeriesKind::Speed7 => Channel::Speed,
                SeriesKind::Flow | SeriesKind::Flow7 => Channel::Flow,
                SeriesKind::Sd | SeriesKind::Fd => Channel::Difference,
            };
            blocks.push(DaySeries288::new(values, channel, true)?);
        }
        let mut it = blocks.into_iter();
        let mut next = || it.next().expect("six blocks");
        out.push(MatchedRow {
            incident_id: row[0].to_string(),
            station_id: row[1].to_string(),
            distance_m: num(2)?,
            series: SeriesBlock {
                speed: next(),
                flow: next(),
                speed7: next(),
                flow7: next(),
                sd: next(),
                fd: next(),
            },
        });
    }
    Ok(out)
}
