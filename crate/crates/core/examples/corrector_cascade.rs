//! Chain correctors: the second stage catches errors found after the first
//! one was deployed.
//!
//! ```text
//! cargo run --release --example corrector_cascade
//! ```

use sepkit::corrector::{cascade_apply_set, fit, ClusterCount, FitOptions, LabeledData};
use sepkit::sampling::{sample, DistributionSpec};
use sepkit::PointSet;

fn main() -> sepkit::Result<()> {
    let n = 30;
    let base = sample(&DistributionSpec::standard_gaussian(n), 3000, 5)?;
    let mut rows: Vec<Vec<f64>> = base.rows().map(|r| r.to_vec()).collect();

    // Two tight groups of errors, one along +e0 and one along +e1.
    let jitter = sample(&DistributionSpec::standard_gaussian(n), 40, 6)?;
    let mut first = Vec::new();
    let mut second = Vec::new();
    for (k, j) in jitter.rows().enumerate() {
        let mut x: Vec<f64> = j.iter().map(|v| 0.1 * v).collect();
        x[k % 2] += 8.0;
        if k % 2 == 0 { &mut first } else { &mut second }.push(rows.len());
        rows.push(x);
    }
    let all = PointSet::from_rows(&rows)?;

    let options = FitOptions {
        clusters: ClusterCount::AtMost(1),
        ..FitOptions::default()
    };
    let stage1 = fit(&LabeledData::new(all.clone(), first.clone())?, &options)?;
    let stage2 = fit(&LabeledData::new(all.clone(), second.clone())?, &options)?;

    let decisions = cascade_apply_set(&[stage1, stage2], &all)?;
    let count = |idx: &[usize], stage| {
        idx.iter()
            .filter(|&&i| decisions[i].first_stage == Some(stage))
            .count()
    };
    println!("first group:  {} caught by stage 0", count(&first, 0));
    println!("second group: {} caught by stage 1", count(&second, 1));
    let bulk = decisions[..3000].iter().filter(|d| d.flagged()).count();
    println!("bulk points flagged: {bulk}/3000");
    Ok(())
}
