mod support {
    pub mod fusion;
}

use std::time::Instant;

use support::fusion::{median, paired_mape};

#[test]
fn encoded_speed_beats_the_baseline() {
    let start = Instant::now();
    let (base, fused): (Vec<f64>, Vec<f64>) = (1..=5).map(paired_mape).unzip();
    let (mb, mf) = (median(base.clone()), median(fused.clone()));
    eprintln!("baseline {base:?}\nfused {fused:?}\nmedian {mb:.3} vs {mf:.3} in {:?}", start.elapsed());
    assert!(mf < mb, "fused median {mf} not below baseline {mb}");
}
