//! Corpora and scorers with a planted rule on the word "blocked".

#![allow(dead_code)]

use incident_fusion::ingest::synth::description_for;
use incident_fusion::ingest::{generate_synthetic, IncidentRecord, SyntheticConfig};
use incident_fusion::seed;
use rand::Rng;

/// 200 records whose severity is 3 when the description says "blocked" and 2 otherwise.
pub fn blocked_corpus(seed_value: u64) -> Vec<IncidentRecord> {
    let d = generate_synthetic(&SyntheticConfig {
        n_incidents: 200,
        n_stations: 5,
        seed: seed_value,
        ..Default::default()
    })
    .unwrap();
    let mut rng = seed::rng_for(seed_value, "corpus");
    d.incidents
        .into_iter()
        .map(|mut r| {
            let template = rng.random_range(1..=4u8);
            r.description = description_for(template, &mut rng);
            r.severity = if r.description.contains("blocked") { 3 } else { 2 };
            r
        })
        .collect()
}

/// Score 1 for class 1 exactly when "blocked" survives masking.
pub fn planted(text: &str, class: usize) -> f64 {
    let hit = text.split(' ').any(|w| w == "blocked");
    if (class == 1) == hit {
        1.0
    } else {
        0.0
    }
}
