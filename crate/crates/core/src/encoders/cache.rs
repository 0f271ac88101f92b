//! CSV cache of encoded vectors.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{EncodedVector, Source};
use crate::error::{Error, Result};
use crate::nn::Activation;

pub type EncodingKey = (Source, usize, Activation);

/// Encoded vectors grouped by encoder configuration, then by incident id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EncodedCache {
    groups: BTreeMap<EncodingKey, BTreeMap<String, Vec<f64>>>,
}

impl EncodedCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_vectors(vectors: impl IntoIterator<Item = EncodedVector>) -> Self {
        let mut cache = Self::new();
        for v in vectors {
            cache.insert(v);
        }
        cache
    }

    pub fn insert(&mut self, v: EncodedVector) {
        self.groups
            .entry((v.source, v.units, v.activation))
            .or_default()
            .insert(v.incident_id, v.values);
    }

    pub fn get(&self, source: Source, units: usize, activation: Activation) -> Option<&BTreeMap<String, Vec<f64>>> {
        self.groups.get(&(source, units, activation))
    }

    pub fn keys(&self) -> impl Iterator<Item = &EncodingKey> {
        self.groups.keys()
    }

    pub fn merge(&mut self, other: EncodedCache) {
        for (k, rows) in other.groups {
            self.groups.entry(k).or_default().extend(rows);
        }
    }

    pub fn vectors(&self) -> Vec<EncodedVector> {
        self.groups
            .iter()
            .flat_map(|(&(source, units, activation), rows)| {
                rows.iter().map(move |(id, values)| EncodedVector {
                    incident_id: id.clone(),
                    source,
                    units,
                    activation,
                    values: values.clone(),
                })
            })
            .collect()
    }
}

/// Write vectors padded with empty cells to the widest one.
pub fn write_encoded<W: Write>(writer: W, vectors: &[EncodedVector]) -> Result<()> {
    let width = vectors.iter().map(|v| v.values.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["incident_id".to_string(), "source".into(), "units".into(), "activation".into()];
    header.extend((1..=width).map(|i| format!("v{i}")));
    w.write_record(&header)?;
    for v in vectors {
        if v.values.len() != v.units {
            return Err(Error::Dimension(format!(
                "{} has {} values for {} units",
                v.incident_id,
                v.values.len(),
                v.units
            )));
        }
        let mut row = vec![v.incident_id.clone(), v.source.to_string(), v.units.to_string(), v.activation.to_string()];
        row.extend(v.values.iter().map(|x| x.to_string()));
        row.resize(header.len(), String::new());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_encoded<R: Read>(reader: R) -> Result<Vec<EncodedVector>> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    let fixed = ["incident_id", "source", "units", "activation"];
    if header.len() < fixed.len() || fixed.iter().zip(header.iter()).any(|(a, b)| *a != b) {
        return Err(Error::Schema(format!("encoded cache header must start with {}", fixed.join(","))));
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::Schema(format!("encoded cache row {}: bad {what}", line + 1));
        let source: Source = rec[1].parse().map_err(|_| bad("source"))?;
        let units: usize = rec[2].parse().map_err(|_| bad("units"))?;
        let activation: Activation = rec[3].parse().map_err(|_| bad("activation"))?;
        if rec.len() < 4 + units {
            return Err(bad("width"));
        }
        let values = (0..units)
            .map(|i| rec[4 + i].parse::<f64>().map_err(|_| bad("value")))
            .collect::<Result<Vec<_>>>()?;
        out.push(EncodedVector {
            incident_id: rec[0].to_string(),
            source,
            units,
            activation,
            values,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vds::SeriesKind;

    #[test]
    fn round_trip_with_padding() {
        let vs = vec![
            EncodedVector {
                incident_id: "a".into(),
                source: Source::LstmSent,
                units: 2,
                activation: Activation::Relu,
                values: vec![0.0, 1.25],
            },
            EncodedVector {
                incident_id: "a".into(),
                source: Source::Series(SeriesKind::Flow7),
                units: 4,
                activation: Activation::Tanh,
                values: vec![-0.1, 0.2, 1e-17, 0.3333333333333333],
            },
        ];
        let mut buf = Vec::new();
        write_encoded(&mut buf, &vs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("incident_id,source,units,activation,v1,v2,v3,v4\n"));
        assert!(text.contains("a,LSTM-sent,2,relu,0,1.25,,\n"));
        assert_eq!(read_encoded(buf.as_slice()).unwrap(), vs);
        let cache = EncodedCache::from_vectors(vs.clone());
        assert_eq!(cache.get(Source::LstmSent, 2, Activation::Relu).unwrap()["a"], vec![0.0, 1.25]);
        assert_eq!(cache.vectors().len(), 2);
    }
}
