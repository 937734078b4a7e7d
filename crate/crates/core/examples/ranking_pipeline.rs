//! Label ranking from user ratings: trains the trace-norm ranker on one
//! split, scores it on held-out ratings and prints a few predicted orderings.
//!
//! ```text
//! cargo run --release --example ranking_pipeline -- [u.data]
//! ```
//!
//! Without an argument a planted low-rank ratings file is generated.

use selfrank::config::RunConfig;
use selfrank::data_io::write_movielens;
use selfrank::evaluation::gen_synthetic_ratings;
use selfrank::experiment::{run_decode, run_eval, run_train};

fn main() -> selfrank::Result<()> {
    let path = match std::env::args().nth(1) {
        Some(p) => p.into(),
        None => {
            let p = std::env::temp_dir().join("selfrank_example_u.data");
            write_movielens(&gen_synthetic_ratings(300, 60, 3, 0), &p)?;
            p
        }
    };
    let cfg = RunConfig::from_toml_str(
        "[data]\nitems = 12\nusers = 150\n[train]\nrank = 3\nmax_iters = 800\n",
        &[format!("data.ratings = \"{}\"", path.display())],
    )?;

    let (ck, trace) = run_train(&cfg)?;
    println!(
        "trained on {} users, {} pair tasks; step {:.3e}, objective {:.5} -> {:.5}",
        ck.training_points.len(),
        ck.pairs.len(),
        trace.step,
        trace.objective_trace[0],
        trace.objective_trace.last().unwrap()
    );
    let report = run_eval(&cfg, &ck)?;
    println!(
        "test pairwise loss {:.4} over {} users ({} skipped)",
        report.mean, report.n_queries, report.skipped
    );
    for o in run_decode(&cfg, &ck)?.orderings.iter().take(3) {
        println!("user {:>4}: {}", o.user, o.ranking.join(" > "));
    }
    Ok(())
}
