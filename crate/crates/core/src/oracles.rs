//! Explicit-coordinate reference solvers used to check the kernelized
//! learners: plain gradient descent on the factors `A`, `B`, singular value
//! thresholding, and a proximal-gradient (ISTA) trace-norm solver.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Finite-dimensional problem: inputs `X` (`n x d`) and output embeddings
/// `Y` (`n x T`).
#[derive(Clone, Debug, PartialEq)]
pub struct ExplicitProblem {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

impl ExplicitProblem {
    pub fn new(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != y.nrows() {
            return Err(Error::invalid(format!(
                "X has {} rows, Y has {}",
                x.nrows(),
                y.nrows()
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite entries in explicit problem"));
        }
        Ok(ExplicitProblem { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// `||X A B^T - Y||_F^2 + lambda (||A||_F^2 + ||B||_F^2)`
    pub fn factorized_objective(&self, a: &DMatrix<f64>, b: &DMatrix<f64>, lambda: f64) -> f64 {
        let r = &self.x * a * b.transpose() - &self.y;
        r.norm_squared() + lambda * (a.norm_squared() + b.norm_squared())
    }

    /// `(1/n) ||X G^T - Y||_F^2 + lambda ||G||_*` for `G` of shape `T x d`.
    pub fn trace_norm_objective(&self, g: &DMatrix<f64>, lambda: f64) -> f64 {
        let r = &self.x * g.transpose() - &self.y;
        r.norm_squared() / self.n() as f64 + lambda * nuclear_norm(g)
    }
}

pub fn nuclear_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.sum()
}

/// Gradient descent on `(A, B)` with simultaneous updates
/// `A -= nu (X^T (X A B^T - Y) B + lambda A)` and
/// `B -= nu ((X A B^T - Y)^T X A + lambda B)`.
///
/// Returns every iterate, starting with `(A0, B0)`.
pub fn explicit_gd(
    p: &ExplicitProblem,
    a0: DMatrix<f64>,
    b0: DMatrix<f64>,
    lambda: f64,
    step: f64,
    iters: usize,
) -> Result<Vec<(DMatrix<f64>, DMatrix<f64>)>> {
    let (d, t) = (p.x.ncols(), p.y.ncols());
    if a0.nrows() != d || b0.nrows() != t || a0.ncols() != b0.ncols() {
        return Err(Error::invalid(format!(
            "A0 {:?} / B0 {:?} incompatible with d = {d}, T = {t}",
            a0.shape(),
            b0.shape()
        )));
    }
    let mut traj = Vec::with_capacity(iters + 1);
    traj.push((a0, b0));
    for k in 1..=iters {
        let (a, b) = &traj[k - 1];
        let xa = &p.x * a;
        let resid = &xa * b.transpose() - &p.y;
        let grad_a = p.x.transpose() * (&resid * b) + a * lambda;
        let grad_b = resid.transpose() * &xa + b * lambda;
        let a_next = a - grad_a * step;
        let b_next = b - grad_b * step;
        if a_next.iter().chain(b_next.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Divergence { iter: k });
        }
        traj.push((a_next, b_next));
    }
    Ok(traj)
}

/// Singular value soft-thresholding: every singular value `s` becomes
/// `max(s - tau, 0)`.
pub fn svt(mat: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    if !(tau >= 0.0) {
        return Err(Error::invalid("tau must be nonnegative"));
    }
    if mat.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("svt of a non-finite matrix".into()));
    }
    if mat.is_empty() {
        return Ok(mat.clone());
    }
    let mut svd = mat.clone().svd(true, true);
    svd.singular_values.apply(|s| *s = (*s - tau).max(0.0));
    svd.recompose()
        .map_err(|e| Error::Numerical(format!("SVD recomposition failed: {e}")))
}

/// Proximal gradient (ISTA) on `(1/n) ||X G^T - Y||^2 + lambda ||G||_*`
/// from `G = 0`. Returns the final iterate and the objective after every
/// step (starting at `G = 0`).
pub fn prox_nuclear(
    p: &ExplicitProblem,
    lambda: f64,
    step: f64,
    iters: usize,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let n = p.n() as f64;
    let mut g = DMatrix::zeros(p.y.ncols(), p.x.ncols());
    let mut trace = vec![p.trace_norm_objective(&g, lambda)];
    for k in 1..=iters {
        let resid = &p.x * g.transpose() - &p.y;
        let grad = resid.transpose() * &p.x * (2.0 / n);
        g = svt(&(&g - grad * step), step * lambda)?;
        let obj = p.trace_norm_objective(&g, lambda);
        if !obj.is_finite() {
            return Err(Error::Divergence { iter: k });
        }
        trace.push(obj);
    }
    Ok((g, trace))
}

/// Largest step with guaranteed ISTA descent: `n / (2 ||X||_op^2)`.
pub fn ista_step_bound(x: &DMatrix<f64>) -> f64 {
    let op = x.clone().svd(false, false).singular_values.max();
    x.nrows() as f64 / (2.0 * op * op).max(1e-300)
}
