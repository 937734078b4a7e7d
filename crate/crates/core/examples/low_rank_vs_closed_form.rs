//! Fits the trace-norm learner and the closed-form (HS) estimator on a
//! planted rank-2 regression problem, picks lambda for each on a validation
//! split and compares test error.
//!
//! ```text
//! cargo run --release --example low_rank_vs_closed_form
//! ```

use nalgebra::{DMatrix, DVector};
use selfrank::evaluation::{gen_synthetic_split, SyntheticSpec};
use selfrank::learners::{fit_hs, fit_lowrank, lowrank_weights, select_step};
use selfrank::oracles::ExplicitProblem;
use selfrank::{GramMatrix, TrainConfig};

/// Mean squared error of `alpha(x)^T Y_train` on `eval`.
fn error(
    weights: impl Fn(&DVector<f64>) -> DVector<f64>,
    train: &ExplicitProblem,
    eval: &ExplicitProblem,
) -> f64 {
    let v: DMatrix<f64> = &train.x * eval.x.transpose();
    let err: f64 = v
        .column_iter()
        .zip(eval.y.row_iter())
        .map(|(c, y)| {
            (train.y.transpose() * weights(&c.into_owned()) - y.transpose()).norm_squared()
        })
        .sum();
    err / eval.n() as f64
}

fn main() -> selfrank::Result<()> {
    let split = gen_synthetic_split(&SyntheticSpec::default(), 1)?;
    let k_x = GramMatrix::from_features(&split.train.x);
    let k_y = GramMatrix::from_features(&split.train.y);
    let lambdas = [1e-4, 1e-3, 1e-2, 1e-1];

    let mut best_hs = (f64::INFINITY, 0.0, 0.0);
    for &lambda in &lambdas {
        let hs = fit_hs(&k_x, lambda)?;
        let w = |v: &DVector<f64>| hs.weights(v).unwrap();
        let val = error(w, &split.train, &split.val);
        if val < best_hs.0 {
            best_hs = (val, lambda, error(w, &split.train, &split.test));
        }
    }

    let mut best_tn = (f64::INFINITY, 0.0, 0.0);
    for &lambda in &lambdas {
        let mut cfg = TrainConfig {
            lambda,
            rank: 2,
            step: 1.0,
            max_iters: 2000,
            ..Default::default()
        };
        cfg.step = select_step(&k_x, &k_y, &cfg, cfg.step, 10)?;
        let fp = fit_lowrank(&k_x, &k_y, &cfg)?;
        let w = |v: &DVector<f64>| lowrank_weights(&fp, v).unwrap();
        let val = error(w, &split.train, &split.val);
        if val < best_tn.0 {
            best_tn = (val, lambda, error(w, &split.train, &split.test));
        }
    }

    println!(
        "closed form  lambda {:.0e}: val {:.4}, test {:.4}",
        best_hs.1, best_hs.0, best_hs.2
    );
    println!(
        "trace norm   lambda {:.0e}: val {:.4}, test {:.4}",
        best_tn.1, best_tn.0, best_tn.2
    );
    Ok(())
}
