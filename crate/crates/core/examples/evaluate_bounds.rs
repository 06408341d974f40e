//! Evaluate the closed-form separation bounds and sample-size caps.
//!
//! ```text
//! cargo run --example evaluate_bounds
//! ```

use sepkit::bounds::{self, BallBoundQuery, CubeBoundQuery, EvalPath, TupleBoundQuery};

fn main() -> sepkit::Result<()> {
    // Probability that one point of an M-point ball sample is separable from
    // the rest by a hyperplane at distance r from the origin.
    println!("single-point ball bound, r = 0.9");
    for n in [20, 50, 100, 200] {
        let row: Vec<String> = [10u64, 1_000, 100_000, 10_000_000]
            .iter()
            .map(|&m| {
                let q = BallBoundQuery::new(n, m, 0.9).unwrap();
                format!("{:.6}", bounds::ball_single_bound(&q).value)
            })
            .collect();
        println!("  n={n:<4} M=10,1e3,1e5,1e7: {}", row.join("  "));
    }

    // How large the sample may be before the guarantee drops below 1 − ϑ.
    let single = bounds::max_cardinality_single(100, 0.9, 0.01)?;
    let all = bounds::max_cardinality_all(100, 0.9, 0.01)?;
    println!("\ncaps at n=100, r=0.9, theta=0.01");
    println!("  one point separable:   M < {:.6e}", single.value);
    println!("  every point separable: M < {:.6}", all.value);

    // Far past the f64 range the log-space path still reports log10.
    let huge = bounds::max_cardinality_single_with(5000, 0.99, 0.01, EvalPath::LogSpace)?;
    println!(
        "  n=5000, r=0.99: log10 M < {:.3}",
        huge.log10_value.unwrap()
    );

    let q = bounds::quasiorthogonal_set_size(2000, 0.1, 0.01)?;
    println!(
        "\n{:.2} random unit vectors in R^2000 are 0.1-orthogonal w.p. 0.99",
        q.value
    );

    let cube = CubeBoundQuery::uniform(5000, 100, 0.5)?;
    let b = bounds::cube_single_bound(&cube);
    println!("cube, n=5000, M=100, delta=0.5: 1 - {:.3e}", 1.0 - b.value);

    let tuple = TupleBoundQuery::new(100, 500, 2, 1.0, 0.0)?;
    let t = bounds::tuple_bound(&tuple)?;
    println!(
        "pair vs 500 points in R^100: {:.12} at eps = {:.6}, threshold {:.6}",
        t.value, t.detail["eps"], t.detail["threshold"]
    );
    Ok(())
}
