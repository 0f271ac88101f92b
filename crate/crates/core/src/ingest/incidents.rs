use std::collections::BTreeSet;
use std::io::{Read, Write};

use chrono::NaiveDateTime;

use super::{format_timestamp, parse_timestamp, BaselineSchema, IncidentRecord, Rejection};
use crate::error::{Error, Result};
use crate::vds::GeoPoint;

const REQUIRED: [&str; 7] = ["id", "lat", "lon", "start", "end", "severity", "description"];

/// An incident row before categorical expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct RawIncident {
    pub id: String,
    pub location: GeoPoint,
    pub start_time: NaiveDateTime,
    pub end_time: NaiveDateTime,
    pub severity: u8,
    pub description: String,
    pub numeric: Vec<f64>,
    pub categorical: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct IncidentParse {
    pub records: Vec<IncidentRecord>,
    pub rejections: Vec<Rejection>,
    pub rows_in: usize,
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::Schema(format!("missing required column `{name}`")))
}

fn parse_row(
    row: &csv::StringRecord,
    req: &[usize; 7],
    numeric: &[(String, usize)],
    categorical: &[usize],
) -> std::result::Result<RawIncident, String> {
    let field = |i: usize| row.get(i).unwrap_or("").trim();
    let id = field(req[0]).to_string();
    if id.is_empty() {
        return Err("empty id".into());
    }
    let lat: f64 = field(req[1]).parse().map_err(|_| "unparseable lat".to_string())?;
    let lon: f64 = field(req[2]).parse().map_err(|_| "unparseable lon".to_string())?;
    let location = GeoPoint::new(lat, lon).ok_or("coordinates out of range")?;
    let start = parse_timestamp(field(req[3])).ok_or("unparseable start timestamp")?;
    let end = parse_timestamp(field(req[4])).ok_or("unparseable end timestamp")?;
    if end <= start {
        return Err("end not after start".into());
    }
    let severity: i64 = field(req[5]).parse().map_err(|_| "unparseable severity".to_string())?;
    if !(1..=4).contains(&severity) {
        return Err("severity out of range".into());
    }
    let description = field(req[6]).to_string();
    if description.is_empty() {
        return Err("empty description".into());
    }
    let mut values = Vec::with_capacity(numeric.len());
    for (name, i) in numeric {
        let v: f64 = field(*i)
            .parse()
            .map_err(|_| format!("unparseable {name}"))?;
        if !v.is_finite() {
            return Err(format!("non-finite {name}"));
        }
        values.push(v);
    }
    Ok(RawIncident {
        id,
        location,
        start_time: start,
        end_time: end,
        severity: severity as u8,
        description,
        numeric: values,
        categorical: categorical.iter().map(|&i| field(i).to_string()).collect(),
    })
}

/// Parse an incident CSV. Rows violating record invariants are dropped and
/// reported; a missing required or declared column is fatal.
pub fn parse_incidents<R: Read>(source: R, schema: &BaselineSchema) -> Result<IncidentParse> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(source);
    let headers = reader.headers()?.clone();
    let mut req = [0usize; 7];
    for (slot, name) in req.iter_mut().zip(REQUIRED) {
        *slot = column(&headers, name)?;
    }
    let numeric = schema
        .numeric
        .iter()
        .map(|n| column(&headers, n).map(|i| (n.clone(), i)))
        .collect::<Result<Vec<_>>>()?;
    let categorical = schema
        .categorical
        .iter()
        .map(|n| column(&headers, n))
        .collect::<Result<Vec<_>>>()?;

    let mut raws = Vec::new();
    let mut rejections = Vec::new();
    let mut rows_in = 0;
    for (i, row) in reader.records().enumerate() {
        rows_in += 1;
        let row_number = i + 1;
        let parsed = match row {
            Ok(row) => parse_row(&row, &req, &numeric, &categorical),
            Err(e) => Err(format!("malformed row: {e}")),
        };
        match parsed {
            Ok(raw) => raws.push(raw),
            Err(reason) => rejections.push(Rejection { row: row_number, reason }),
        }
    }
    Ok(IncidentParse {
        records: expand_baseline(raws, schema),
        rejections,
        rows_in,
    })
}

/// Turn raw rows into records, one-hot expanding categoricals over the
/// levels observed in `raws`.
pub(crate) fn expand_baseline(raws: Vec<RawIncident>, schema: &BaselineSchema) -> Vec<IncidentRecord> {
    let levels: Vec<Vec<String>> = (0..schema.categorical.len())
        .map(|c| {
            let set: BTreeSet<&str> = raws.iter().map(|r| r.categorical[c].as_str()).collect();
            set.into_iter().skip(1).map(str::to_string).collect()
        })
        .collect();
    raws.into_iter()
        .map(|raw| {
            let mut baseline: Vec<(String, f64)> = schema
                .numeric
                .iter()
                .cloned()
                .zip(raw.numeric.iter().copied())
                .collect();
            for (c, name) in schema.categorical.iter().enumerate() {
                for level in &levels[c] {
                    let on = if raw.categorical[c] == *level { 1.0 } else { 0.0 };
                    baseline.push((format!("{name}={level}"), on));
                }
            }
            let duration = (raw.end_time - raw.start_time).num_minutes();
            IncidentRecord {
                id: raw.id,
                location: raw.location,
                start_time: raw.start_time,
                end_time: raw.end_time,
                severity: raw.severity,
                description: raw.description,
                baseline,
                duration_min: duration as u32,
            }
        })
        .collect()
}

fn write_common(r: &RawOrRecord<'_>) -> Vec<String> {
    let (id, loc, start, end, sev, desc) = match r {
        RawOrRecord::Raw(r) => (&r.id, r.location, &r.start_time, &r.end_time, r.severity, &r.description),
        RawOrRecord::Record(r) => (&r.id, r.location, &r.start_time, &r.end_time, r.severity, &r.description),
    };
    vec![
        id.clone(),
        loc.latitude.to_string(),
        loc.longitude.to_string(),
        format_timestamp(start),
        format_timestamp(end),
        sev.to_string(),
        desc.clone(),
    ]
}

enum RawOrRecord<'a> {
    Raw(&'a RawIncident),
    Record(&'a IncidentRecord),
}

/// Write parsed records, baseline columns already expanded. Re-parsing with a
/// schema whose numeric list is the expanded names returns equal records.
pub fn write_incidents<W: Write>(writer: W, records: &[IncidentRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(writer);
    let mut header: Vec<String> = REQUIRED.iter().map(|s| s.to_string()).collect();
    if let Some(first) = records.first() {
        header.extend(first.baseline.iter().map(|(n, _)| n.clone()));
    }
    w.write_record(&header)?;
    for r in records {
        let mut row = write_common(&RawOrRecord::Record(r));
        row.extend(r.baseline.iter().map(|(_, v)| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Write raw rows with the declared numeric then categorical columns.
pub fn write_raw_incidents<W: Write>(writer: W, raws: &[RawIncident], schema: &BaselineSchema) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let header: Vec<String> = REQUIRED
        .iter()
        .map(|s| s.to_string())
        .chain(schema.numeric.iter().cloned())
        .chain(schema.categorical.iter().cloned())
        .collect();
    w.write_record(&header)?;
    for r in raws {
        let mut row = write_common(&RawOrRecord::Raw(r));
        row.extend(r.numeric.iter().map(|v| v.to_string()));
        row.extend(r.categorical.iter().cloned());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> BaselineSchema {
        BaselineSchema {
            numeric: vec!["lanes".into()],
            categorical: vec!["weather".into()],
        }
    }

    const HEADER: &str = "id,lat,lon,start,end,severity,description,lanes,weather\n";

    #[test]
    fn one_hour_incident_has_duration_60() {
        let csv = format!("{HEADER}A-1,37.7,-122.4,2019-03-01T08:00,2019-03-01T09:00,2,\"Accident on I-80\",1,rain\n");
        let p = parse_incidents(csv.as_bytes(), &schema()).unwrap();
        assert_eq!(p.records.len(), 1);
        assert_eq!(p.records[0].duration_min, 60);
    }

    #[test]
    fn ctads_style_row() {
        let csv = format!(
            "{HEADER}A-2,37.77,-122.40,2019-03-01T07:10,2019-03-01T07:41,2,\"Accident on I-280 Northbound at Exit 57 King St.\",0,clear\n"
        );
        let p = parse_incidents(csv.as_bytes(), &schema()).unwrap();
        let r = &p.records[0];
        assert_eq!(r.duration_min, 31);
        assert_eq!(r.severity, 2);
        assert_eq!(r.description, "Accident on I-280 Northbound at Exit 57 King St.");
    }

    #[test]
    fn severity_seven_is_rejected() {
        let csv = format!("{HEADER}A-3,37.7,-122.4,2019-03-01T08:00,2019-03-01T09:00,7,x,1,rain\n");
        let p = parse_incidents(csv.as_bytes(), &schema()).unwrap();
        assert!(p.records.is_empty());
        assert_eq!(p.rejections, vec![Rejection { row: 1, reason: "severity out of range".into() }]);
    }

    #[test]
    fn bad_timestamp_rejects_row_only() {
        let csv = format!(
            "{HEADER}A,37.7,-122.4,garbage,2019-03-01T09:00,2,x,1,rain\nB,37.7,-122.4,2019-03-01T08:00,2019-03-01T08:30,2,y,1,rain\n"
        );
        let p = parse_incidents(csv.as_bytes(), &schema()).unwrap();
        assert_eq!(p.rows_in, 2);
        assert_eq!(p.records.len(), 1);
        assert_eq!(p.rejections[0].reason, "unparseable start timestamp");
    }

    #[test]
    fn missing_column_is_schema_error() {
        let csv = "id,lat,lon,start,end,description\n";
        let err = parse_incidents(csv.as_bytes(), &BaselineSchema::default()).unwrap_err();
        assert!(err.to_string().contains("severity"), "{err}");
    }

    #[test]
    fn categoricals_drop_the_reference_level() {
        let csv = format!(
            "{HEADER}A,37.7,-122.4,2019-03-01T08:00,2019-03-01T09:00,2,x,1,rain\nB,37.7,-122.4,2019-03-01T08:00,2019-03-01T09:00,2,x,3,clear\nC,37.7,-122.4,2019-03-01T08:00,2019-03-01T09:00,2,x,2,fog\n"
        );
        let p = parse_incidents(csv.as_bytes(), &schema()).unwrap();
        let names: Vec<_> = p.records[0].baseline.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["lanes", "weather=fog", "weather=rain"]);
        assert_eq!(p.records[0].baseline_values().collect::<Vec<_>>(), [1.0, 0.0, 1.0]);
        assert_eq!(p.records[1].baseline_values().collect::<Vec<_>>(), [3.0, 0.0, 0.0]);
    }

    #[test]
    fn invalid_rows_are_all_accounted_for() {
        let csv = format!(
            "{HEADER}A,95,-122.4,2019-03-01T08:00,2019-03-01T09:00,2,x,1,rain\n\
             B,37.7,-122.4,2019-03-01T09:00,2019-03-01T09:00,2,x,1,rain\n\
             C,37.7,-122.4,2019-03-01T08:00,2019-03-01T09:00,2,,1,rain\n\
             D,37.7,-122.4,2019-03-01T08:00,2019-03-01T09:00,2,x,n/a,rain\n"
        );
        let p = parse_incidents(csv.as_bytes(), &schema()).unwrap();
        let reasons: Vec<_> = p.rejections.iter().map(|r| r.reason.as_str()).collect();
        assert_eq!(
            reasons,
            ["coordinates out of range", "end not after start", "empty description", "unparseable lanes"]
        );
        assert_eq!(p.rows_in, p.records.len() + p.rejections.len());
    }
}
