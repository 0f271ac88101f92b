//! Duration tertiles and the one-vs-rest GBDT group classifier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regressors::{fit_gbdt, BoostedModel, FeatureTable, ModelKind, RegressorConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationGroups {
    /// Inclusive upper bounds of groups 0 and 1, in minutes.
    pub boundaries: (f64, f64),
    pub labels: Vec<usize>,
}

impl DurationGroups {
    pub fn group_of(&self, duration: f64) -> usize {
        if duration <= self.boundaries.0 {
            0
        } else if duration <= self.boundaries.1 {
            1
        } else {
            2
        }
    }

    pub fn sizes(&self) -> [usize; 3] {
        let mut s = [0; 3];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }
}

/// Cut at the sorted values of rank round(n/3) and round(2n/3). Sizes are
/// equal within one when durations are distinct; ties at a cut stay together.
pub fn duration_tertiles(durations: &[f64]) -> Result<DurationGroups> {
    let n = durations.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!("tertiles need 3 durations, got {n}")));
    }
    let mut sorted = durations.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cut = |frac: f64| sorted[((n as f64 * frac).round() as usize).clamp(1, n) - 1];
    let mut groups = DurationGroups {
        boundaries: (cut(1.0 / 3.0), cut(2.0 / 3.0)),
        labels: Vec::new(),
    };
    groups.labels = durations.iter().map(|&d| groups.group_of(d)).collect();
    Ok(groups)
}

/// One GBDT score function per class, fitted to 0/1 membership targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupClassifier {
    /// Class labels, ascending; `models[i]` scores `classes[i]`.
    pub classes: Vec<usize>,
    pub models: Vec<BoostedModel>,
}

pub fn fit_group_classifier(rows: &[Vec<f64>], labels: &[usize], config: &RegressorConfig) -> Result<GroupClassifier> {
    if rows.len() != labels.len() {
        return Err(Error::Dimension(format!("{} rows for {} labels", rows.len(), labels.len())));
    }
    if config.kind != ModelKind::Gbdt {
        return Err(Error::Config("group classifier uses a gbdt configuration".into()));
    }
    config.validate()?;
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::InsufficientData("classifier needs at least two classes".into()));
    }
    let p = rows[0].len();
    let names: Vec<String> = (1..=p).map(|i| format!("c{i}")).collect();
    let values: Vec<f64> = rows.iter().flatten().copied().collect();
    let models = classes
        .iter()
        .map(|&c| {
            let target = labels.iter().map(|&l| f64::from(u8::from(l == c))).collect();
            let table = FeatureTable::with_free_target(names.clone(), values.clone(), target)?;
            fit_gbdt(&table, config)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GroupClassifier { classes, models })
}

impl GroupClassifier {
    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        self.models.iter().map(|m| m.predict_row(row)).collect()
    }

    pub fn score(&self, row: &[f64], class: usize) -> Result<f64> {
        let i = self
            .classes
            .iter()
            .position(|&c| c == class)
            .ok_or_else(|| Error::Config(format!("class {class} is not one of {:?}", self.classes)))?;
        Ok(self.models[i].predict_row(row))
    }

    /// Highest score wins; the lower class label wins ties.
    pub fn predict(&self, row: &[f64]) -> usize {
        let s = self.scores(row);
        let mut best = 0;
        for i in 1..s.len() {
            if s[i] > s[best] {
                best = i;
            }
        }
        self.classes[best]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_to_nine() {
        let d: Vec<f64> = (1..=9).map(f64::from).collect();
        let g = duration_tertiles(&d).unwrap();
        assert_eq!(g.labels, vec![0, 0, 0, 1, 1, 1, 2, 2, 2]);
        assert_eq!(g.boundaries, (3.0, 6.0));
        assert!(duration_tertiles(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn separable_classes_fit_exactly() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![f64::from(i), f64::from(i % 3)]).collect();
        let labels: Vec<usize> = (0..20).map(|i| if i < 7 { 4 } else if i < 14 { 1 } else { 2 }).collect();
        let cfg = RegressorConfig::new(ModelKind::Gbdt);
        let c = fit_group_classifier(&rows, &labels, &cfg).unwrap();
        assert_eq!(c.classes, vec![1, 2, 4]);
        for (r, &l) in rows.iter().zip(&labels) {
            assert_eq!(c.scores(r).len(), 3);
            assert_eq!(c.predict(r), l);
        }
        assert_eq!(c, fit_group_classifier(&rows, &labels, &cfg).unwrap());
        assert!(fit_group_classifier(&rows, &[3; 20], &cfg).is_err());
    }
}
