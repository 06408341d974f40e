//! Separation for product distributions in the unit cube, including
//! non-uniform coordinates with a smaller variance.
//!
//! ```text
//! cargo run --release --example cube_separation
//! ```

use sepkit::bounds::{cube_single_bound, CubeBoundQuery};
use sepkit::separability::{cube_experiment, CubeVariant, ExperimentConfig};

fn main() -> sepkit::Result<()> {
    let cfg = ExperimentConfig::new(300, 3);
    for (n, sigma2) in [(1000, 1.0 / 12.0), (5000, 1.0 / 12.0), (5000, 0.05)] {
        let q = CubeBoundQuery::new(50, 0.5, vec![sigma2; n])?;
        let rep = cube_experiment(&q, CubeVariant::Single, &cfg)?;
        println!(
            "n={n:<5} sigma^2={sigma2:.4} bound={:.6} freq={:.4} {}",
            cube_single_bound(&q).value,
            rep.frequency,
            if rep.passed() { "PASS" } else { "FAIL" }
        );
    }
    Ok(())
}
