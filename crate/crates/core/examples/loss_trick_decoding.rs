//! SELF regression with the squared loss: weights come from the low-rank
//! learner on the output Gram matrix of the loss, and predictions are
//! decoded over a finite candidate grid without ever forming features.
//!
//! ```text
//! cargo run --release --example loss_trick_decoding
//! ```

use nalgebra::DVector;
use selfrank::decoding::decode_finite;
use selfrank::kernels::{cross_vector, gram};
use selfrank::learners::{fit_lowrank, lowrank_weights, select_step};
use selfrank::losses::output_gram;
use selfrank::{KernelSpec, Point, SelfLoss, TrainConfig};

fn main() -> selfrank::Result<()> {
    let target = |x: f64| (2.0 * x).sin() * 0.8;
    let xs: Vec<f64> = (0..40).map(|i| -1.5 + 3.0 * i as f64 / 39.0).collect();
    let inputs: Vec<Point> = xs.iter().map(|&x| Point::scalar(x)).collect();
    let outputs: Vec<Point> = xs.iter().map(|&x| Point::scalar(target(x))).collect();

    let input_kernel = KernelSpec::Gaussian { bandwidth: 0.5 };
    let loss = SelfLoss::Squared;
    let k_x = gram(&inputs, &input_kernel)?;
    let k_y = output_gram(&outputs, &loss)?;

    let mut cfg = TrainConfig {
        lambda: 1e-4,
        rank: 8,
        step: 1.0,
        max_iters: 3000,
        ..Default::default()
    };
    cfg.step = select_step(&k_x, &k_y, &cfg, cfg.step, 10)?;
    let fp = fit_lowrank(&k_x, &k_y, &cfg)?;

    let candidates: Vec<Point> = (0..81)
        .map(|i| Point::scalar(-1.0 + i as f64 / 40.0))
        .collect();
    let mut sq = 0.0;
    for x in [-1.2, -0.5, 0.1, 0.7, 1.3] {
        let v: DVector<f64> = cross_vector(&inputs, &Point::scalar(x), &input_kernel)?;
        let alpha = lowrank_weights(&fp, &v)?;
        let (best, score) = decode_finite(&candidates, &alpha, &outputs, &loss)?;
        let pred = candidates[best].as_scalar().unwrap();
        sq += (pred - target(x)).powi(2);
        println!(
            "x {x:+.2}  decoded {pred:+.3}  target {:+.3}  score {score:.4}",
            target(x)
        );
    }
    println!("mean squared error {:.4}", sq / 5.0);
    Ok(())
}
