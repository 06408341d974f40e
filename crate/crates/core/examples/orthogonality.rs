//! Random unit vectors in high dimension are nearly orthogonal.
//!
//! ```text
//! cargo run --release --example orthogonality
//! ```

use sepkit::bounds;
use sepkit::separability::{orthogonality_experiment, ExperimentConfig};

fn main() -> sepkit::Result<()> {
    let eps = 0.15;
    for n in [200usize, 500, 1000, 2000] {
        let rep = orthogonality_experiment(n, 10, eps, &ExperimentConfig::new(500, 11))?;
        let pair = bounds::pairwise_orthogonality_bound(n as u64, eps)?;
        println!(
            "n={n:<5} all 45 pairs |cos| < {eps}: freq={:.4} (bound {:.4}); pair violations {}/{} (pair bound {:.2e})",
            rep.frequency,
            rep.bound,
            rep.detail["pair_violations"],
            rep.detail["pairs_tested"],
            1.0 - pair.value
        );
    }
    Ok(())
}
