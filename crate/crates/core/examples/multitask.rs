//! Multitask learning with a shared input factor: each task observes its
//! own subset of a common input pool, and every task gets its own output
//! factor.
//!
//! ```text
//! cargo run --release --example multitask
//! ```

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use selfrank::learners::{fit_mtl, select_mtl_step, MtlProblem, MtlTask};
use selfrank::{GramMatrix, TrainConfig};

fn main() -> selfrank::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (n, d, tasks) = (60, 5, 4);
    let x = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
    let shared = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));

    // Each task sees a random half of the pool; targets share one direction.
    let mut problem_tasks = Vec::new();
    for t in 0..tasks {
        let inputs: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        let scale = 1.0 + t as f64 * 0.5;
        let y = DMatrix::from_fn(inputs.len(), 1, |i, _| {
            scale * x.row(inputs[i]).dot(&shared.transpose())
        });
        problem_tasks.push(MtlTask::with_features(inputs, y));
    }
    let problem = MtlProblem::new(GramMatrix::from_features(&x), problem_tasks)?;

    let mut cfg = TrainConfig {
        lambda: 1e-4,
        rank: 1,
        step: 10.0,
        max_iters: 2000,
        ..Default::default()
    };
    cfg.step = select_mtl_step(&problem, &cfg, cfg.step, 10)?;
    let fit = fit_mtl(&problem, &cfg)?;
    println!(
        "{} tasks, sizes {:?}; objective {:.5} -> {:.5} in {} iterations",
        fit.task_count(),
        fit.task_sizes,
        fit.objective_trace[0],
        fit.objective_trace.last().unwrap(),
        fit.iters_run
    );

    // Per-task weights for a fresh query, applied to each task's outputs.
    let q = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
    let v = &x * &q;
    for (t, alpha) in fit.weights(&v)?.iter().enumerate() {
        let inputs = &problem.tasks()[t].inputs;
        let scale = 1.0 + t as f64 * 0.5;
        let pred: f64 = inputs
            .iter()
            .zip(alpha.iter())
            .map(|(&i, a)| a * scale * x.row(i).dot(&shared.transpose()))
            .sum();
        println!(
            "task {t}: predicted {pred:+.4}, true {:+.4}",
            scale * q.dot(&shared)
        );
    }
    Ok(())
}
