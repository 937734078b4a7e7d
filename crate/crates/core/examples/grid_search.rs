//! Validation grid search for both learners over re-split trials.
//!
//! ```text
//! cargo run --release --example grid_search -- [u.data]
//! ```

use selfrank::config::RunConfig;
use selfrank::data_io::write_movielens;
use selfrank::evaluation::gen_synthetic_ratings;
use selfrank::experiment::run_grid;
use selfrank::LearnerKind;

fn main() -> selfrank::Result<()> {
    let path = match std::env::args().nth(1) {
        Some(p) => p.into(),
        None => {
            let p = std::env::temp_dir().join("selfrank_grid_u.data");
            write_movielens(&gen_synthetic_ratings(300, 60, 3, 1), &p)?;
            p
        }
    };
    let cfg = RunConfig::from_toml_str(
        "trials = 2\n[data]\nitems = 12\nusers = 120\n[grid]\nranks = [2, 5]\niters = [400]\n",
        &[format!("data.ratings = \"{}\"", path.display())],
    )?;
    for learner in [LearnerKind::TraceNorm, LearnerKind::Hs] {
        let art = run_grid(&cfg, learner)?;
        let best = &art.best;
        let rank = match learner {
            LearnerKind::TraceNorm => format!(", rank {}", best.rank),
            LearnerKind::Hs => String::new(),
        };
        println!(
            "{:<10} test loss {:.4} +- {:.4}; first trial picked lambda {:.1e}{rank}",
            learner.name(),
            art.report.mean,
            art.report.std,
            best.lambda
        );
    }
    Ok(())
}
