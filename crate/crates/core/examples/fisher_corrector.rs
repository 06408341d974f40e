//! Fit a one-shot corrector for a handful of "errors" in a large sample,
//! then check how often it fires on new data.
//!
//! ```text
//! cargo run --release --example fisher_corrector
//! ```

use sepkit::corrector::{apply_set, fit, CorrectorModel, FitOptions, LabeledData};
use sepkit::sampling::{sample, DistributionSpec};
use sepkit::separability::{fisher_separability_experiment, ExperimentConfig};

fn main() -> sepkit::Result<()> {
    let n = 100;
    let train = sample(&DistributionSpec::unit_ball(n), 5000, 1)?;
    let errors = vec![11, 512, 2048, 4095];
    let data = LabeledData::new(train.clone(), errors.clone())?;
    let model = fit(&data, &FitOptions::default())?;
    println!(
        "kept {} of {} dimensions, {} units, ridge {:.2e}",
        model.output_dim(),
        model.input_dim(),
        model.units.len(),
        model.pipeline.ridge()
    );

    let decisions = apply_set(&model, &train)?;
    let caught = errors.iter().filter(|&&i| decisions[i].flagged).count();
    let false_alarms = decisions.iter().filter(|d| d.flagged).count() - caught;
    println!(
        "training: {caught}/{} errors flagged, {false_alarms} other points flagged",
        errors.len()
    );

    let fresh = sample(&DistributionSpec::unit_ball(n), 5000, 2)?;
    let flagged = apply_set(&model, &fresh)?
        .iter()
        .filter(|d| d.flagged)
        .count();
    println!("fresh sample: {flagged}/5000 flagged");

    // The model round-trips through JSON exactly.
    let json = model.to_json()?;
    assert_eq!(CorrectorModel::from_json(&json)?, model);
    println!("model JSON: {} bytes", json.len());

    // How often does a Fisher discriminant isolate one random point?
    let rep = fisher_separability_experiment(n, 1000, &ExperimentConfig::new(200, 4))?;
    println!(
        "Fisher isolation in n={n}, M=1000: freq={:.4}, reference bound {:.6}",
        rep.frequency, rep.bound
    );
    Ok(())
}
