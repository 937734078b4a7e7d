//! Gram matrices for the built-in kernels and the output Gram matrices
//! induced by each loss.
//!
//! ```text
//! cargo run --example kernels
//! ```

use selfrank::kernels::{gram, kernel_eval};
use selfrank::losses::{loss_eval, output_gram};
use selfrank::{KernelSpec, Point, SelfLoss};

fn main() -> selfrank::Result<()> {
    let pts: Vec<Point> = [[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]]
        .iter()
        .map(|p| Point::Vector(p.to_vec()))
        .collect();
    for spec in [
        KernelSpec::Linear,
        KernelSpec::Gaussian { bandwidth: 1.0 },
        KernelSpec::Abel { bandwidth: 1.0 },
    ] {
        let k = gram(&pts, &spec)?;
        println!(
            "{} kernel, min eigenvalue {:.3e}:{}",
            spec.kind(),
            k.min_eigenvalue(),
            k.matrix()
        );
    }
    println!(
        "k(a, b) linear = {}",
        kernel_eval(&KernelSpec::Linear, &pts[1], &pts[2])?
    );

    let labels: Vec<Point> = ["cat", "dog", "cat"]
        .iter()
        .map(|s| Point::Label(s.to_string()))
        .collect();
    println!(
        "zero-one output Gram:{}",
        output_gram(&labels, &SelfLoss::ZeroOne)?.matrix()
    );
    let (a, b) = (Point::scalar(0.2), Point::scalar(0.7));
    println!(
        "squared loss l(0.2, 0.7) = {:.3}",
        loss_eval(&SelfLoss::Squared, &a, &b)?
    );
    Ok(())
}
