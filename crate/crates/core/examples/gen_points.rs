//! Draw seeded samples from each supported distribution and look at how
//! their norms concentrate as the dimension grows.
//!
//! ```text
//! cargo run --example gen_points
//! ```

use sepkit::sampling::{radial_statistics, sample, DistributionSpec};

fn main() -> sepkit::Result<()> {
    println!(
        "{:<18} {:>6} {:>10} {:>10} {:>12}",
        "kind", "n", "min |x|", "max |x|", "mean |x|^2"
    );
    for n in [2, 10, 100, 1000] {
        for spec in [
            DistributionSpec::unit_ball(n),
            DistributionSpec::unit_sphere(n),
            DistributionSpec::uniform_cube(n),
        ] {
            let ps = sample(&spec, 2000, 1)?;
            let s = radial_statistics(&ps);
            println!(
                "{:<18} {:>6} {:>10.4} {:>10.4} {:>12.4}",
                spec.kind().as_str(),
                n,
                s.min_norm,
                s.max_norm,
                s.mean_square_norm
            );
        }
    }

    // The same seed always gives the same points, so samples can be written
    // out and shared.
    let ps = sample(&DistributionSpec::unit_ball(3), 5, 42)?;
    let mut csv = Vec::new();
    ps.write_csv(&mut csv)?;
    print!("\n{}", String::from_utf8_lossy(&csv));
    Ok(())
}
