//! Surrogate regression learners.
//!
//! * [`fit_hs`]: closed-form kernel ridge weights `(K_X + n lambda I)^-1 v_x`
//!   (Hilbert-Schmidt regularization).
//! * [`fit_lowrank`]: trace-norm regularization through the factorization
//!   `G = A B*`, run as gradient descent on the kernel coefficients `M`, `N`
//!   with `A = Phi* M` and `B = Psi* N`, so only `K_X` and `K_Y` are touched.
//! * [`fit_mtl`] / [`fit_lowrank_mtl`]: the multitask variant where task `t`
//!   only observes outputs on a subset of the inputs.
//!
//! Updates are simultaneous in `M` and `N` and use half-gradients of
//!
//! ```text
//! tr((I - K_X M N^T) K_Y (I - N M^T K_X)) + lambda (tr(M^T K_X M) + tr(N^T K_Y N))
//! ```
//!
//! with the `1/n` of the empirical risk absorbed into `lambda`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::GramMatrix;

/// Hyperparameters of the factorized learners.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lambda: f64,
    pub rank: usize,
    pub step: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Relative objective-change stopping threshold.
    pub tol: f64,
    /// Standard deviation of the initial factor entries. `None` uses
    /// `1/sqrt(n r)`.
    #[serde(default)]
    pub init_scale: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 1e-2,
            rank: 5,
            step: 1e-2,
            max_iters: 500,
            seed: 0,
            tol: 1e-9,
            init_scale: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::invalid(format!("train config: {what}")));
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad("lambda must be nonnegative and finite");
        }
        if !(self.step.is_finite() && self.step >= 0.0) {
            return bad("step must be nonnegative and finite");
        }
        if self.rank == 0 {
            return bad("rank must be at least 1");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        if !(self.tol >= 0.0) {
            return bad("tol must be nonnegative");
        }
        if let Some(s) = self.init_scale {
            if !(s > 0.0 && s.is_finite()) {
                return bad("init_scale must be positive");
            }
        }
        Ok(())
    }

    /// Stricter check used by user-facing entry points: `lambda` and `step`
    /// must be positive.
    pub fn validate_strict(&self) -> Result<()> {
        self.validate()?;
        if self.lambda <= 0.0 || self.step <= 0.0 {
            return Err(Error::invalid(
                "train config: lambda and step must be positive",
            ));
        }
        Ok(())
    }
}

/// Kernel coefficients of the factorization after training.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorPair {
    pub m: DMatrix<f64>,
    pub n: DMatrix<f64>,
    pub iters_run: usize,
    /// Objective at every iterate, starting with the initialization.
    pub objective_trace: Vec<f64>,
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    // Column-major fill; the draw order is part of the determinism contract.
    DMatrix::from_fn(rows, cols, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        scale * z
    })
}

/// Random initial factors, entries i.i.d. normal scaled by `init_scale`.
pub fn init_factors(n: usize, cfg: &TrainConfig) -> (DMatrix<f64>, DMatrix<f64>) {
    let scale = cfg
        .init_scale
        .unwrap_or_else(|| 1.0 / ((n * cfg.rank) as f64).sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let m = gaussian_matrix(&mut rng, n, cfg.rank, scale);
    let nn = gaussian_matrix(&mut rng, n, cfg.rank, scale);
    (m, nn)
}

fn check_pair_shapes(
    m: &DMatrix<f64>,
    n: &DMatrix<f64>,
    k_x: &GramMatrix,
    k_y: &GramMatrix,
) -> Result<()> {
    let rows = k_x.n();
    if k_y.n() != rows {
        return Err(Error::invalid(format!(
            "K_X is {rows}x{rows} but K_Y is {0}x{0}",
            k_y.n()
        )));
    }
    if m.shape() != n.shape() || m.nrows() != rows {
        return Err(Error::invalid(format!(
            "factor shapes {:?} and {:?} incompatible with n = {rows}",
            m.shape(),
            n.shape()
        )));
    }
    Ok(())
}

fn frob_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// One simultaneous update of both factors.
pub fn lowrank_step(
    m: &DMatrix<f64>,
    n: &DMatrix<f64>,
    k_x: &GramMatrix,
    k_y: &GramMatrix,
    lambda: f64,
    step: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_pair_shapes(m, n, k_x, k_y)?;
    let km = k_x.matrix() * m;
    let kn = k_y.matrix() * n;
    let shrink = 1.0 - lambda * step;

    // M' = (1 - lambda nu) M - nu (K_X M N^T K_Y N - K_Y N)
    let grad_m = &km * (n.transpose() * &kn) - &kn;
    // N' = (1 - lambda nu) N - nu (N M^T K_X K_X M - K_X M)
    let grad_n = n * (km.transpose() * &km) - &km;

    Ok((m * shrink - grad_m * step, n * shrink - grad_n * step))
}

/// Factorized objective in kernel form. Both terms are traces of
/// PSD-congruent matrices; round-off below zero is clamped.
pub fn factorized_objective(
    m: &DMatrix<f64>,
    n: &DMatrix<f64>,
    k_x: &GramMatrix,
    k_y: &GramMatrix,
    lambda: f64,
) -> Result<f64> {
    check_pair_shapes(m, n, k_x, k_y)?;
    let km = k_x.matrix() * m;
    let kn = k_y.matrix() * n;
    Ok(objective_parts(&km, &kn, m, n, k_y.trace(), lambda))
}

fn objective_parts(
    km: &DMatrix<f64>,
    kn: &DMatrix<f64>,
    m: &DMatrix<f64>,
    n: &DMatrix<f64>,
    trace_ky: f64,
    lambda: f64,
) -> f64 {
    // tr(K_Y) - 2 <K_X M, K_Y N> + tr((N^T K_Y N)(M^T K_X K_X M))
    let cross = frob_dot(km, kn);
    let quad = frob_dot(&(n.transpose() * kn), &(km.transpose() * km));
    let data = (trace_ky - 2.0 * cross + quad).max(0.0);
    let penalty = frob_dot(m, km).max(0.0) + frob_dot(n, kn).max(0.0);
    data + lambda * penalty
}

fn relative_change(prev: f64, cur: f64) -> f64 {
    (cur - prev).abs() / prev.max(1e-12)
}

/// Trains the factorized trace-norm learner from a seeded random start.
pub fn fit_lowrank(k_x: &GramMatrix, k_y: &GramMatrix, cfg: &TrainConfig) -> Result<FactorPair> {
    cfg.validate()?;
    let (m0, n0) = init_factors(k_x.n(), cfg);
    fit_lowrank_from(k_x, k_y, m0, n0, cfg)
}

/// Trains from explicit initial factors.
pub fn fit_lowrank_from(
    k_x: &GramMatrix,
    k_y: &GramMatrix,
    m0: DMatrix<f64>,
    n0: DMatrix<f64>,
    cfg: &TrainConfig,
) -> Result<FactorPair> {
    cfg.validate()?;
    check_pair_shapes(&m0, &n0, k_x, k_y)?;
    let trace_ky = k_y.trace();
    let objective = |m: &DMatrix<f64>, n: &DMatrix<f64>| {
        let km = k_x.matrix() * m;
        let kn = k_y.matrix() * n;
        objective_parts(&km, &kn, m, n, trace_ky, cfg.lambda)
    };

    let (mut m, mut n) = (m0, n0);
    let first = objective(&m, &n);
    if !first.is_finite() || !all_finite(&m) || !all_finite(&n) {
        return Err(Error::Divergence { iter: 0 });
    }
    let mut trace = vec![first];
    let mut iters_run = 0;
    for iter in 1..=cfg.max_iters {
        let (m_next, n_next) = lowrank_step(&m, &n, k_x, k_y, cfg.lambda, cfg.step)?;
        let obj = objective(&m_next, &n_next);
        if !obj.is_finite() || !all_finite(&m_next) || !all_finite(&n_next) {
            return Err(Error::Divergence { iter });
        }
        m = m_next;
        n = n_next;
        let prev = trace[trace.len() - 1];
        trace.push(obj);
        iters_run = iter;
        if relative_change(prev, obj) < cfg.tol {
            break;
        }
    }
    Ok(FactorPair {
        m,
        n,
        iters_run,
        objective_trace: trace,
    })
}

/// Factor applied to the first step that passes the descent probe. Early
/// iterates have small factors and low curvature, so a step right at the
/// probe's edge can start oscillating once the factors grow.
pub const STEP_MARGIN: f64 = 0.25;

/// Halves `start` until the first `probe_iters` iterations from the seeded
/// initialization stay finite and never increase the objective, then backs
/// off by [`STEP_MARGIN`].
pub fn select_step(
    k_x: &GramMatrix,
    k_y: &GramMatrix,
    cfg: &TrainConfig,
    start: f64,
    probe_iters: usize,
) -> Result<f64> {
    let mut step = start;
    for _ in 0..80 {
        let probe = TrainConfig {
            step,
            max_iters: probe_iters,
            tol: 0.0,
            ..cfg.clone()
        };
        if let Ok(fp) = fit_lowrank(k_x, k_y, &probe) {
            if is_non_increasing(&fp.objective_trace) {
                return Ok(step * STEP_MARGIN);
            }
        }
        step *= 0.5;
    }
    Err(Error::Numerical(format!(
        "no descending step found below {start}"
    )))
}

pub fn is_non_increasing(trace: &[f64]) -> bool {
    trace.windows(2).all(|w| w[1] <= w[0])
}

impl FactorPair {
    /// `alpha(x) = N M^T v_x`.
    pub fn weights(&self, v_x: &DVector<f64>) -> Result<DVector<f64>> {
        if v_x.len() != self.m.nrows() {
            return Err(Error::invalid(format!(
                "v_x has length {}, model expects {}",
                v_x.len(),
                self.m.nrows()
            )));
        }
        Ok(&self.n * (self.m.transpose() * v_x))
    }

    pub fn rank(&self) -> usize {
        self.m.ncols()
    }
}

pub fn lowrank_weights(fp: &FactorPair, v_x: &DVector<f64>) -> Result<DVector<f64>> {
    fp.weights(v_x)
}

/// Closed-form Hilbert-Schmidt regularized model: a factorization of
/// `K_X + n lambda I`.
#[derive(Clone, Debug)]
pub struct HsModel {
    system: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    n: usize,
    lambda: f64,
}

pub fn fit_hs(k_x: &GramMatrix, lambda: f64) -> Result<HsModel> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let n = k_x.n();
    if n == 0 {
        return Err(Error::invalid("empty Gram matrix"));
    }
    let shift = n as f64 * lambda;
    let mut system = k_x.matrix().clone();
    for i in 0..n {
        system[(i, i)] += shift;
    }
    let chol = match Cholesky::new(system.clone()) {
        Some(c) => c,
        None => {
            let jitter = 1e-12 * k_x.trace().abs() / n as f64;
            for i in 0..n {
                system[(i, i)] += jitter;
            }
            Cholesky::new(system.clone()).ok_or_else(|| {
                Error::Numerical("Cholesky factorization of K_X + n lambda I failed".into())
            })?
        }
    };
    Ok(HsModel {
        system,
        chol,
        n,
        lambda,
    })
}

impl HsModel {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Solves `(K_X + n lambda I) alpha = v_x`, with one step of iterative
    /// refinement.
    pub fn weights(&self, v_x: &DVector<f64>) -> Result<DVector<f64>> {
        if v_x.len() != self.n {
            return Err(Error::invalid(format!(
                "v_x has length {}, model expects {}",
                v_x.len(),
                self.n
            )));
        }
        let mut alpha = self.chol.solve(v_x);
        let residual = v_x - &self.system * &alpha;
        alpha += self.chol.solve(&residual);
        Ok(alpha)
    }

    /// `(K_X + n lambda I) alpha - v_x`
    pub fn residual(&self, alpha: &DVector<f64>, v_x: &DVector<f64>) -> DVector<f64> {
        &self.system * alpha - v_x
    }
}

pub fn hs_weights(model: &HsModel, v_x: &DVector<f64>) -> Result<DVector<f64>> {
    model.weights(v_x)
}

/// One task of a multitask problem: the indices of the base inputs it
/// observes, and the output Gram matrix of its observations.
#[derive(Clone, Debug)]
pub struct MtlTask {
    pub inputs: Vec<usize>,
    pub k_y: GramMatrix,
    /// Optional output features `F` with `K_Y = F F^T`; products with `K_Y`
    /// then go through `F`, which is cheaper when `F` is thin.
    pub y_features: Option<DMatrix<f64>>,
}

impl MtlTask {
    pub fn new(inputs: Vec<usize>, k_y: GramMatrix) -> Self {
        MtlTask {
            inputs,
            k_y,
            y_features: None,
        }
    }

    /// Task with an explicit output embedding; the Gram is `F F^T`.
    pub fn with_features(inputs: Vec<usize>, features: DMatrix<f64>) -> Self {
        MtlTask {
            inputs,
            k_y: GramMatrix::from_features(&features),
            y_features: Some(features),
        }
    }

    fn apply_k_y(&self, n: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.y_features {
            Some(f) => f * (f.transpose() * n),
            None => self.k_y.matrix() * n,
        }
    }
}

/// Multitask problem over a shared set of base inputs. Missing
/// (input, task) entries are simply absent from the task's index list.
#[derive(Clone, Debug)]
pub struct MtlProblem {
    k_x: GramMatrix,
    tasks: Vec<MtlTask>,
}

impl MtlProblem {
    pub fn new(k_x: GramMatrix, tasks: Vec<MtlTask>) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::invalid("multitask problem needs at least one task"));
        }
        for (t, task) in tasks.iter().enumerate() {
            if task.inputs.is_empty() {
                return Err(Error::invalid(format!("task {t} has no observations")));
            }
            if task.k_y.n() != task.inputs.len() {
                return Err(Error::invalid(format!(
                    "task {t}: {} inputs but output Gram of size {}",
                    task.inputs.len(),
                    task.k_y.n()
                )));
            }
            if task
                .y_features
                .as_ref()
                .is_some_and(|f| f.nrows() != task.inputs.len())
            {
                return Err(Error::invalid(format!(
                    "task {t}: output features have the wrong row count"
                )));
            }
            if let Some(&bad) = task.inputs.iter().find(|&&i| i >= k_x.n()) {
                return Err(Error::invalid(format!(
                    "task {t} references input {bad} of {}",
                    k_x.n()
                )));
            }
        }
        Ok(MtlProblem { k_x, tasks })
    }

    /// Builds the stacked problem from cross blocks `K_t` (`n_t x n`, rows of
    /// the full input Gram) and per-task output Grams. Task `t` owns the
    /// stacked rows `offset_t .. offset_t + n_t`.
    pub fn from_blocks(cross_blocks: &[DMatrix<f64>], output_grams: &[GramMatrix]) -> Result<Self> {
        if cross_blocks.len() != output_grams.len() {
            return Err(Error::invalid(format!(
                "{} cross blocks for {} output Grams",
                cross_blocks.len(),
                output_grams.len()
            )));
        }
        let n: usize = cross_blocks.iter().map(|b| b.nrows()).sum();
        let mut stacked = DMatrix::zeros(n, n);
        let mut tasks = Vec::with_capacity(cross_blocks.len());
        let mut offset = 0;
        for (t, (block, k_y)) in cross_blocks.iter().zip(output_grams).enumerate() {
            if block.ncols() != n {
                return Err(Error::invalid(format!(
                    "cross block {t} has {} columns, expected {n}",
                    block.ncols()
                )));
            }
            stacked.rows_mut(offset, block.nrows()).copy_from(block);
            tasks.push(MtlTask::new(
                (offset..offset + block.nrows()).collect(),
                k_y.clone(),
            ));
            offset += block.nrows();
        }
        MtlProblem::new(GramMatrix::from_matrix(stacked)?, tasks)
    }

    pub fn k_x(&self) -> &GramMatrix {
        &self.k_x
    }

    pub fn tasks(&self) -> &[MtlTask] {
        &self.tasks
    }

    pub fn task_sizes(&self) -> Vec<usize> {
        self.tasks.iter().map(|t| t.inputs.len()).collect()
    }

    fn task_weight(&self, t: usize) -> f64 {
        1.0 / (self.tasks.len() as f64 * self.tasks[t].inputs.len() as f64)
    }
}

/// Multitask factors: `M` over the base inputs and one `N_t` per task.
#[derive(Clone, Debug, PartialEq)]
pub struct MtlFactorSet {
    pub m: DMatrix<f64>,
    pub n_per_task: Vec<DMatrix<f64>>,
    pub task_sizes: Vec<usize>,
    pub iters_run: usize,
    pub objective_trace: Vec<f64>,
}

impl MtlFactorSet {
    pub fn task_count(&self) -> usize {
        self.n_per_task.len()
    }

    /// Per-task weights `alpha_t = N_t M^T v_x`.
    pub fn weights(&self, v_x: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        if v_x.len() != self.m.nrows() {
            return Err(Error::invalid(format!(
                "v_x has length {}, model expects {}",
                v_x.len(),
                self.m.nrows()
            )));
        }
        let proj = self.m.transpose() * v_x;
        Ok(self.n_per_task.iter().map(|n_t| n_t * &proj).collect())
    }
}

pub fn mtl_weights(ms: &MtlFactorSet, v_x: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
    ms.weights(v_x)
}

/// Seeded initial multitask factors: `M` first, then each `N_t` in task order.
pub fn init_mtl_factors(
    problem: &MtlProblem,
    cfg: &TrainConfig,
) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
    let r = cfg.rank;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let scale_for = |rows: usize| {
        cfg.init_scale
            .unwrap_or_else(|| 1.0 / ((rows * r) as f64).sqrt())
    };
    let u = problem.k_x.n();
    let m = gaussian_matrix(&mut rng, u, r, scale_for(u));
    let ns = problem
        .tasks
        .iter()
        .map(|t| gaussian_matrix(&mut rng, t.inputs.len(), r, scale_for(t.inputs.len())))
        .collect();
    (m, ns)
}

fn check_mtl_shapes(problem: &MtlProblem, m: &DMatrix<f64>, ns: &[DMatrix<f64>]) -> Result<()> {
    if m.nrows() != problem.k_x.n() || ns.len() != problem.tasks.len() {
        return Err(Error::invalid("multitask factors do not match the problem"));
    }
    for (t, (n_t, task)) in ns.iter().zip(&problem.tasks).enumerate() {
        if n_t.nrows() != task.inputs.len() || n_t.ncols() != m.ncols() {
            return Err(Error::invalid(format!(
                "N_{t} has shape {:?}, expected ({}, {})",
                n_t.shape(),
                task.inputs.len(),
                m.ncols()
            )));
        }
    }
    Ok(())
}

/// One simultaneous multitask update.
///
/// With `w_t = 1/(T n_t)` and `P_t = K_t M` (the task's rows of `K_X M`):
///
/// ```text
/// S_t  = P_t N_t^T K_Yt N_t - K_Yt N_t
/// M'   = (1 - lambda nu) M - nu sum_t w_t E_t S_t      (E_t scatters rows into task t's inputs)
/// N_t' = (1 - lambda nu) N_t - nu / n_t (N_t P_t^T P_t - P_t)
/// ```
pub fn mtl_step(
    problem: &MtlProblem,
    m: &DMatrix<f64>,
    ns: &[DMatrix<f64>],
    lambda: f64,
    step: f64,
) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
    check_mtl_shapes(problem, m, ns)?;
    let km = problem.k_x.matrix() * m;
    let shrink = 1.0 - lambda * step;
    let mut correction = DMatrix::zeros(m.nrows(), m.ncols());
    let mut next_ns = Vec::with_capacity(ns.len());
    for (t, (task, n_t)) in problem.tasks.iter().zip(ns).enumerate() {
        let p = km.select_rows(&task.inputs);
        let kyn = task.apply_k_y(n_t);
        let s = &p * (n_t.transpose() * &kyn) - &kyn;
        let w = problem.task_weight(t);
        for (row, &i) in task.inputs.iter().enumerate() {
            let mut dst = correction.row_mut(i);
            dst += s.row(row) * w;
        }
        let inv_nt = 1.0 / task.inputs.len() as f64;
        let grad_n = n_t * (p.transpose() * &p) - &p;
        next_ns.push(n_t * shrink - grad_n * (step * inv_nt));
    }
    Ok((m * shrink - correction * step, next_ns))
}

/// `sum_t w_t tr((I - K_t M N_t^T) K_Yt (I - N_t M^T K_t^T)) + lambda tr(M^T K_X M)
///  + (lambda / T) sum_t tr(N_t^T K_Yt N_t)`
pub fn mtl_objective(
    problem: &MtlProblem,
    m: &DMatrix<f64>,
    ns: &[DMatrix<f64>],
    lambda: f64,
) -> Result<f64> {
    check_mtl_shapes(problem, m, ns)?;
    let km = problem.k_x.matrix() * m;
    let tasks = problem.tasks.len() as f64;
    let mut data = 0.0;
    let mut pen_n = 0.0;
    for (t, (task, n_t)) in problem.tasks.iter().zip(ns).enumerate() {
        let p = km.select_rows(&task.inputs);
        let kyn = task.apply_k_y(n_t);
        let cross = frob_dot(&p, &kyn);
        let quad = frob_dot(&(n_t.transpose() * &kyn), &(p.transpose() * &p));
        data += problem.task_weight(t) * (task.k_y.trace() - 2.0 * cross + quad).max(0.0);
        pen_n += frob_dot(n_t, &kyn).max(0.0);
    }
    Ok(data + lambda * (frob_dot(m, &km).max(0.0) + pen_n / tasks))
}

/// Trains the multitask learner from a seeded random start.
pub fn fit_mtl(problem: &MtlProblem, cfg: &TrainConfig) -> Result<MtlFactorSet> {
    cfg.validate()?;
    let (m0, n0) = init_mtl_factors(problem, cfg);
    fit_mtl_from(problem, m0, n0, cfg)
}

pub fn fit_mtl_from(
    problem: &MtlProblem,
    m0: DMatrix<f64>,
    n0: Vec<DMatrix<f64>>,
    cfg: &TrainConfig,
) -> Result<MtlFactorSet> {
    cfg.validate()?;
    check_mtl_shapes(problem, &m0, &n0)?;
    let (mut m, mut ns) = (m0, n0);
    let finite = |m: &DMatrix<f64>, ns: &[DMatrix<f64>]| all_finite(m) && ns.iter().all(all_finite);
    let first = mtl_objective(problem, &m, &ns, cfg.lambda)?;
    if !first.is_finite() || !finite(&m, &ns) {
        return Err(Error::Divergence { iter: 0 });
    }
    let mut trace = vec![first];
    let mut iters_run = 0;
    for iter in 1..=cfg.max_iters {
        let (m_next, ns_next) = mtl_step(problem, &m, &ns, cfg.lambda, cfg.step)?;
        let obj = mtl_objective(problem, &m_next, &ns_next, cfg.lambda)?;
        if !obj.is_finite() || !finite(&m_next, &ns_next) {
            return Err(Error::Divergence { iter });
        }
        m = m_next;
        ns = ns_next;
        let prev = trace[trace.len() - 1];
        trace.push(obj);
        iters_run = iter;
        if relative_change(prev, obj) < cfg.tol {
            break;
        }
    }
    Ok(MtlFactorSet {
        m,
        n_per_task: ns,
        task_sizes: problem.task_sizes(),
        iters_run,
        objective_trace: trace,
    })
}

/// Stacked-input entry point: `cross_blocks[t]` is `K_t` (`n_t x n`) and
/// `output_grams[t]` is `K_Yt`.
pub fn fit_lowrank_mtl(
    cross_blocks: &[DMatrix<f64>],
    output_grams: &[GramMatrix],
    cfg: &TrainConfig,
) -> Result<MtlFactorSet> {
    let problem = MtlProblem::from_blocks(cross_blocks, output_grams)?;
    fit_mtl(&problem, cfg)
}

/// Multitask counterpart of [`select_step`].
pub fn select_mtl_step(
    problem: &MtlProblem,
    cfg: &TrainConfig,
    start: f64,
    probe_iters: usize,
) -> Result<f64> {
    let mut step = start;
    for _ in 0..80 {
        let probe = TrainConfig {
            step,
            max_iters: probe_iters,
            tol: 0.0,
            ..cfg.clone()
        };
        if let Ok(ms) = fit_mtl(problem, &probe) {
            if is_non_increasing(&ms.objective_trace) {
                return Ok(step * STEP_MARGIN);
            }
        }
        step *= 0.5;
    }
    Err(Error::Numerical(format!(
        "no descending step found below {start}"
    )))
}
