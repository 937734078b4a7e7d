//! Runs the oracle property suite: the factorized learner against explicit
//! gradient descent and proximal SVT, closed-form residuals, descent, Gram
//! balance, decoding and the multitask reduction.
//!
//! ```text
//! cargo run --release --example verify_oracles -- [full]
//! ```

use selfrank::verify::{run_suite, SuiteConfig};

fn main() {
    let suite = match std::env::args().nth(1).as_deref() {
        Some("full") => SuiteConfig::full(0),
        _ => SuiteConfig::small(0),
    };
    let report = run_suite(&suite);
    for c in &report.checks {
        println!(
            "{} {:<24} {:.3e} / {:.1e}  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.residual,
            c.threshold,
            c.detail
        );
    }
    std::process::exit(if report.passed { 0 } else { 1 });
}
