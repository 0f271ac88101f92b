//! Exhaustive depth-1 split search used as the oracle for `best_split`.

#![allow(dead_code)]

use incident_fusion::regressors::{best_split, FeatureTable};
use incident_fusion::seed;
use rand::Rng;

pub fn sse(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m) * (x - m)).sum()
}

/// SSE of children when splitting on `x[f] <= thr`.
pub fn split_sse(t: &FeatureTable, f: usize, thr: f64) -> (f64, usize, usize) {
    let (mut l, mut r) = (Vec::new(), Vec::new());
    for i in 0..t.n_rows() {
        if t.get(i, f) <= thr {
            l.push(t.target()[i]);
        } else {
            r.push(t.target()[i]);
        }
    }
    let s = if l.is_empty() || r.is_empty() { f64::INFINITY } else { sse(&l) + sse(&r) };
    (s, l.len(), r.len())
}

/// Every admissible (feature, midpoint) pair with its child SSE.
pub fn all_splits(t: &FeatureTable, msl: usize) -> Vec<(usize, f64, f64)> {
    let mut out = Vec::new();
    for f in 0..t.n_features() {
        let mut vals: Vec<f64> = (0..t.n_rows()).map(|i| t.get(i, f)).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let thr = (w[0] + w[1]) / 2.0;
            let (s, nl, nr) = split_sse(t, f, thr);
            if nl >= msl && nr >= msl {
                out.push((f, thr, s));
            }
        }
    }
    out
}

/// Small table with repeated feature values and `min_samples_leaf`.
pub fn fixture(seed_value: u64) -> (FeatureTable, usize) {
    let mut rng = seed::rng_for(seed_value, "split-fixture");
    let n = rng.random_range(2..=16usize);
    let p = rng.random_range(1..=3usize);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| f64::from(rng.random_range(0..6u8))).collect()).collect();
    let target = (0..n).map(|_| f64::from(rng.random_range(1..60u8))).collect();
    let t = FeatureTable::new((0..p).map(|j| format!("f{j}")).collect(), rows, target).unwrap();
    (t, rng.random_range(1..=3usize))
}

/// `best_split` against the exhaustive scan. The chosen split must reach the
/// optimal child SSE and report the matching gain; when the optimum is
/// unique, feature and threshold must be identical too.
pub fn check(t: &FeatureTable, msl: usize) -> Result<(), String> {
    let parent = sse(t.target());
    let tol = 1e-9 * parent.max(1.0);
    let mut splits = all_splits(t, msl);
    splits.retain(|s| s.2 < parent - tol);
    splits.sort_by(|a, b| a.2.total_cmp(&b.2));
    match (best_split(t, msl), splits.first()) {
        (None, None) => Ok(()),
        (Some(s), Some(&(f, thr, best))) => {
            let (chosen, nl, nr) = split_sse(t, s.feature, s.threshold);
            if nl < msl || nr < msl {
                return Err(format!("leaf sizes {nl}/{nr} below {msl}"));
            }
            if (chosen - best).abs() > tol {
                return Err(format!("child sse {chosen} vs optimum {best}"));
            }
            if (s.gain - (parent - chosen)).abs() > tol {
                return Err(format!("gain {} vs {}", s.gain, parent - chosen));
            }
            let unique = splits.get(1).is_none_or(|second| second.2 - best > tol);
            if unique && (s.feature, s.threshold) != (f, thr) {
                return Err(format!("chose ({}, {}) but the unique optimum is ({f}, {thr})", s.feature, s.threshold));
            }
            Ok(())
        }
        (got, want) => Err(format!("got {got:?}, oracle {want:?}")),
    }
}
