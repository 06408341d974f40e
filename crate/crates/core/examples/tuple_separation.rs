//! Separating a correlated pair of points from a large sample with one
//! explicit linear functional.
//!
//! ```text
//! cargo run --release --example tuple_separation
//! ```

use sepkit::bounds::TupleBoundQuery;
use sepkit::separability::{tuple_experiment, ExperimentConfig};

fn main() -> sepkit::Result<()> {
    let q = TupleBoundQuery::new(100, 500, 2, 1.0, 0.0)?;
    let rep = tuple_experiment(&q, &ExperimentConfig::new(400, 9))?;
    println!("{}", rep.to_json());
    Ok(())
}
