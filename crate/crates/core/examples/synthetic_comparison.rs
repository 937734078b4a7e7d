//! Trace-norm vs closed-form surrogate risk on planted low-rank problems,
//! each grid-searched on a validation split.
//!
//! ```text
//! cargo run --release --example synthetic_comparison -- [seeds]
//! ```

use selfrank::evaluation::{compare_synthetic, GridSpec, SyntheticSpec};

fn main() -> selfrank::Result<()> {
    let seeds: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(3);
    let spec = SyntheticSpec::default();
    let grid = GridSpec {
        ranks: vec![2, 5],
        iters: vec![1000],
        ..GridSpec::default()
    };
    for seed in 0..seeds {
        let c = compare_synthetic(&spec, &grid, seed)?;
        println!(
            "seed {seed}: trace norm {:.4} (lambda {:.0e}, rank {}), hs {:.4} (lambda {:.0e})",
            c.trace_norm_test_risk,
            c.trace_norm.lambda,
            c.trace_norm.rank,
            c.hs_test_risk,
            c.hs.lambda
        );
    }
    Ok(())
}
