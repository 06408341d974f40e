//! Monte Carlo check of the ball separation bounds.
//!
//! For each configuration, run the experiment and compare the empirical
//! frequency of the event with the bound. A FAIL means the frequency fell
//! below the bound by more than the 99% Wilson half-width.
//!
//! ```text
//! cargo run --release --example ball_separation
//! ```

use sepkit::bounds::BallBoundQuery;
use sepkit::separability::{ball_experiment, BallVariant, ExperimentConfig};

fn main() -> sepkit::Result<()> {
    let cfg = ExperimentConfig::new(1000, 7);
    for (n, m, r) in [(10u64, 5u64, 0.5), (50, 200, 0.9), (100, 1000, 0.9)] {
        let q = BallBoundQuery::new(n, m, r)?;
        for variant in [BallVariant::Single, BallVariant::All, BallVariant::Angle] {
            let rep = ball_experiment(&q, variant, &cfg)?;
            println!(
                "n={n:<4} M={m:<5} r={r:<4} {:<7} freq={:.4} [{:.4}, {:.4}] bound={:.6} {}",
                format!("{variant:?}"),
                rep.frequency,
                rep.wilson99[0],
                rep.wilson99[1],
                rep.bound,
                if rep.passed() { "PASS" } else { "FAIL" }
            );
        }
    }
    Ok(())
}
