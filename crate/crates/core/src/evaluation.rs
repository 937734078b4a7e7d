//! Ranking metrics, hyperparameter grid search, and synthetic problems.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_io::{RatingRecord, RatingsTable};
use crate::decoding::Ordering;
use crate::error::{Error, Result};
use crate::kernels::GramMatrix;
use crate::learners::{fit_hs, fit_lowrank, select_step, TrainConfig};
use crate::losses::{pairwise_rank_loss, RatingVector};
use crate::oracles::ExplicitProblem;
use crate::ranking::{train_ranker, LearnerKind, Ranker, RankingData};

/// Embedded copy of the configuration that produced an artifact.
pub type ConfigDoc = BTreeMap<String, serde_json::Value>;

/// Anything that can order the item subset for a user.
pub trait QueryRanker {
    fn rank_user(&self, user: usize) -> Result<Ordering>;
}

impl QueryRanker for Ranker {
    fn rank_user(&self, user: usize) -> Result<Ordering> {
        Ranker::rank_user(self, user)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryLoss {
    pub user: String,
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ConfigDoc,
    pub per_query: Vec<QueryLoss>,
    /// Mean normalized pairwise loss (over queries, then over trials).
    pub mean: f64,
    /// Standard deviation of the per-trial means; 0 for a single trial.
    pub std: f64,
    pub n_queries: usize,
    pub skipped: usize,
    pub trials: usize,
}

/// Scores a ranker on the ratings of `eval` restricted to `items`.
///
/// Users with fewer than two ratings on the subset, or whose ratings there
/// are all equal, carry no pairwise signal and are counted as skipped.
pub fn evaluate_ranking(
    ranker: &dyn QueryRanker,
    eval: &RatingsTable,
    items: &[usize],
    users: &[usize],
    config: ConfigDoc,
) -> Result<EvalReport> {
    let mut users = users.to_vec();
    users.sort_unstable();
    users.dedup();
    let mut per_query = Vec::new();
    let mut skipped = 0;
    for &u in &users {
        let vals: Vec<Option<f64>> = items.iter().map(|&i| eval.get(u, i)).collect();
        let present: Vec<bool> = vals.iter().map(Option::is_some).collect();
        let known: Vec<f64> = vals.iter().flatten().copied().collect();
        if known.len() < 2 || known.iter().all(|v| *v == known[0]) {
            skipped += 1;
            continue;
        }
        let rv = RatingVector::new(vals.iter().map(|v| v.unwrap_or(0.0)).collect(), present)?;
        let order = ranker.rank_user(u)?;
        let (_, loss) = pairwise_rank_loss(&order.rank_scores(), &rv)?;
        per_query.push(QueryLoss {
            user: eval.users()[u].clone(),
            loss,
        });
    }
    let mean = if per_query.is_empty() {
        0.0
    } else {
        per_query.iter().map(|q| q.loss).sum::<f64>() / per_query.len() as f64
    };
    Ok(EvalReport {
        config,
        n_queries: per_query.len(),
        per_query,
        mean,
        std: 0.0,
        skipped,
        trials: 1,
    })
}

/// Combines single-trial reports: mean of means and their sample standard
/// deviation.
pub fn aggregate_trials(reports: &[EvalReport], config: ConfigDoc) -> Result<EvalReport> {
    if reports.is_empty() {
        return Err(Error::invalid("no trial reports to aggregate"));
    }
    let means: Vec<f64> = reports.iter().map(|r| r.mean).collect();
    let k = means.len() as f64;
    let mean = means.iter().sum::<f64>() / k;
    let std = if means.len() > 1 {
        (means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(EvalReport {
        config,
        per_query: reports.iter().flat_map(|r| r.per_query.clone()).collect(),
        mean,
        std,
        n_queries: reports.iter().map(|r| r.n_queries).sum(),
        skipped: reports.iter().map(|r| r.skipped).sum(),
        trials: reports.len(),
    })
}

/// Hyperparameter grid. For the trace-norm learner with `auto_step`, each
/// entry of `steps` is a starting value for the halving search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub lambdas: Vec<f64>,
    pub ranks: Vec<usize>,
    pub steps: Vec<f64>,
    pub iters: Vec<usize>,
    pub auto_step: bool,
}

impl Default for GridSpec {
    /// Seven log-spaced lambdas in `[1e-4, 1]`, ranks `{2, 5, 10, 20}`,
    /// halving from `0.1`, and `{500, 2000}` iterations.
    fn default() -> Self {
        GridSpec {
            lambdas: (0..7)
                .map(|i| 10f64.powf(-4.0 + 4.0 * i as f64 / 6.0))
                .collect(),
            ranks: vec![2, 5, 10, 20],
            steps: vec![0.1],
            iters: vec![500, 2000],
            auto_step: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellConfig {
    pub learner: LearnerKind,
    pub lambda: f64,
    pub rank: usize,
    pub step: f64,
    pub iters: usize,
}

impl CellConfig {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            lambda: self.lambda,
            rank: self.rank,
            step: self.step,
            max_iters: self.iters,
            seed,
            ..TrainConfig::default()
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty()
            || self.ranks.is_empty()
            || self.steps.is_empty()
            || self.iters.is_empty()
        {
            return Err(Error::invalid("grid lists must be nonempty"));
        }
        if self.lambdas.iter().chain(&self.steps).any(|v| !(*v > 0.0)) {
            return Err(Error::invalid("grid lambdas and steps must be positive"));
        }
        if self.ranks.contains(&0) || self.iters.contains(&0) {
            return Err(Error::invalid("grid ranks and iters must be positive"));
        }
        Ok(())
    }

    /// Cells in grid order (lambda outermost). The closed-form learner only
    /// varies lambda.
    pub fn cells(&self, learner: LearnerKind) -> Vec<CellConfig> {
        match learner {
            LearnerKind::Hs => self
                .lambdas
                .iter()
                .map(|&lambda| CellConfig {
                    learner,
                    lambda,
                    rank: 0,
                    step: 0.0,
                    iters: 0,
                })
                .collect(),
            LearnerKind::TraceNorm => {
                let mut out = Vec::new();
                for &lambda in &self.lambdas {
                    for &rank in &self.ranks {
                        for &step in &self.steps {
                            for &iters in &self.iters {
                                out.push(CellConfig {
                                    learner,
                                    lambda,
                                    rank,
                                    step,
                                    iters,
                                });
                            }
                        }
                    }
                }
                out
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub config: CellConfig,
    /// Step actually used after the halving search.
    pub effective_step: Option<f64>,
    pub score: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridOutcome {
    pub best: CellConfig,
    pub best_index: usize,
    pub best_score: f64,
    pub table: Vec<GridCell>,
}

/// Picks the first cell with the lowest score; failed cells are kept in the
/// table but never chosen.
fn select_best(
    cells: Vec<CellConfig>,
    results: Vec<Result<(f64, Option<f64>)>>,
) -> Result<GridOutcome> {
    let mut table = Vec::with_capacity(cells.len());
    let mut best: Option<(usize, f64)> = None;
    for (i, (cell, res)) in cells.into_iter().zip(results).enumerate() {
        match res {
            Ok((score, step)) => {
                if best.is_none_or(|(_, s)| score < s) {
                    best = Some((i, score));
                }
                table.push(GridCell {
                    config: cell,
                    effective_step: step,
                    score: Some(score),
                    error: None,
                });
            }
            Err(e) => table.push(GridCell {
                config: cell,
                effective_step: None,
                score: None,
                error: Some(e.to_string()),
            }),
        }
    }
    let (best_index, best_score) =
        best.ok_or_else(|| Error::Numerical("every grid cell failed".into()))?;
    Ok(GridOutcome {
        best: table[best_index].config.clone(),
        best_index,
        best_score,
        table,
    })
}

/// Ranking grid search: trains every cell on `data` and scores it by mean
/// normalized pairwise loss on `val`. Cells run in parallel.
pub fn grid_search(
    grid: &GridSpec,
    data: &RankingData,
    val: &RatingsTable,
    learner: LearnerKind,
    seed: u64,
) -> Result<(GridOutcome, Ranker)> {
    grid.validate()?;
    let cells = grid.cells(learner);
    let users: Vec<usize> = (0..val.users().len()).collect();
    let items = data.tasks.item_subset.clone();
    let results: Vec<Result<(f64, Option<f64>)>> = cells
        .par_iter()
        .map(|cell| {
            let ranker = train_ranker(
                data.clone(),
                learner,
                &cell.train_config(seed),
                grid.auto_step,
            )?;
            let report = evaluate_ranking(&ranker, val, &items, &users, ConfigDoc::new())?;
            let step = (learner == LearnerKind::TraceNorm).then_some(ranker.config.step);
            Ok((report.mean, step))
        })
        .collect();
    let outcome = select_best(cells, results)?;
    let best = &outcome.table[outcome.best_index];
    let mut cfg = best.config.train_config(seed);
    if let Some(step) = best.effective_step {
        cfg.step = step;
    }
    let ranker = train_ranker(data.clone(), learner, &cfg, false)?;
    Ok((outcome, ranker))
}

/// Synthetic multi-output regression with a planted low-rank map.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticProblem {
    /// `n x d`, rows on the unit sphere.
    pub x: DMatrix<f64>,
    /// `n x T`
    pub y: DMatrix<f64>,
    /// `T x d`
    pub g_star: DMatrix<f64>,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// `G* = U V^T` with Gaussian `U` (`T x rank`) and `V` (`d x rank`);
/// `X` rows uniform on the unit sphere; `Y = X G*^T + noise * N(0, 1)`.
pub fn gen_synthetic_lowrank(
    n: usize,
    d: usize,
    tasks: usize,
    true_rank: usize,
    noise: f64,
    seed: u64,
) -> Result<SyntheticProblem> {
    if true_rank == 0 || true_rank > d.min(tasks) {
        return Err(Error::invalid(format!(
            "true rank {true_rank} must be in 1..={}",
            d.min(tasks)
        )));
    }
    if !(noise >= 0.0) {
        return Err(Error::invalid("noise must be nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = DMatrix::from_fn(tasks, true_rank, |_, _| normal(&mut rng));
    let v = DMatrix::from_fn(d, true_rank, |_, _| normal(&mut rng));
    let g_star = &u * v.transpose();
    let mut x = DMatrix::zeros(n, d);
    for i in 0..n {
        let row: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        for (j, val) in row.into_iter().enumerate() {
            x[(i, j)] = val / norm;
        }
    }
    let eps = DMatrix::from_fn(n, tasks, |_, _| normal(&mut rng));
    let y = &x * g_star.transpose() + eps * noise;
    Ok(SyntheticProblem { x, y, g_star })
}

/// Train / validation / test parts drawn from one planted map.
#[derive(Clone, Debug)]
pub struct SyntheticSplit {
    pub train: ExplicitProblem,
    pub val: ExplicitProblem,
    pub test: ExplicitProblem,
    pub g_star: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub d: usize,
    pub tasks: usize,
    pub true_rank: usize,
    pub noise: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_train: 100,
            n_val: 100,
            n_test: 500,
            d: 20,
            tasks: 20,
            true_rank: 2,
            noise: 0.1,
        }
    }
}

pub fn gen_synthetic_split(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticSplit> {
    let total = spec.n_train + spec.n_val + spec.n_test;
    let p = gen_synthetic_lowrank(total, spec.d, spec.tasks, spec.true_rank, spec.noise, seed)?;
    let part = |start: usize, len: usize| {
        ExplicitProblem::new(
            p.x.rows(start, len).into_owned(),
            p.y.rows(start, len).into_owned(),
        )
    };
    Ok(SyntheticSplit {
        train: part(0, spec.n_train)?,
        val: part(spec.n_train, spec.n_val)?,
        test: part(spec.n_train + spec.n_val, spec.n_test)?,
        g_star: p.g_star,
    })
}

/// Maps an `n x q` block of cross-kernel columns to `n x q` weights.
type WeightFn = Box<dyn Fn(&DMatrix<f64>) -> DMatrix<f64> + Send + Sync>;

/// A fitted surrogate estimator in explicit coordinates: predictions are
/// `alpha(x)^T Y_train` with `alpha` the learner's weights.
pub struct SurrogateFit {
    weights: WeightFn,
    train_y: DMatrix<f64>,
    train_x: DMatrix<f64>,
    pub step: Option<f64>,
}

impl SurrogateFit {
    /// `q x T` predictions for the rows of `xq`.
    pub fn predict(&self, xq: &DMatrix<f64>) -> DMatrix<f64> {
        let v = &self.train_x * xq.transpose();
        (self.weights)(&v).transpose() * &self.train_y
    }

    /// Mean squared surrogate error `(1/q) sum ||g(x) - y||^2`.
    pub fn risk(&self, p: &ExplicitProblem) -> f64 {
        (self.predict(&p.x) - &p.y).norm_squared() / p.n() as f64
    }
}

/// Fits one grid cell on an explicit problem with linear input kernel and
/// linear output kernel on the embeddings.
pub fn fit_surrogate(
    train: &ExplicitProblem,
    cell: &CellConfig,
    seed: u64,
    auto_step: bool,
) -> Result<SurrogateFit> {
    let k_x = GramMatrix::from_features(&train.x);
    match cell.learner {
        LearnerKind::Hs => {
            let model = fit_hs(&k_x, cell.lambda)?;
            Ok(SurrogateFit {
                weights: Box::new(move |v: &DMatrix<f64>| {
                    let cols: Vec<DVector<f64>> = v
                        .column_iter()
                        .map(|c| model.weights(&c.into_owned()).expect("length checked"))
                        .collect();
                    DMatrix::from_columns(&cols)
                }),
                train_y: train.y.clone(),
                train_x: train.x.clone(),
                step: None,
            })
        }
        LearnerKind::TraceNorm => {
            let k_y = GramMatrix::from_features(&train.y);
            let mut cfg = cell.train_config(seed);
            if auto_step {
                cfg.step = select_step(&k_x, &k_y, &cfg, cfg.step, 10)?;
            }
            let fp = fit_lowrank(&k_x, &k_y, &cfg)?;
            let (m, n) = (fp.m, fp.n);
            Ok(SurrogateFit {
                weights: Box::new(move |v: &DMatrix<f64>| &n * (m.transpose() * v)),
                train_y: train.y.clone(),
                train_x: train.x.clone(),
                step: Some(cfg.step),
            })
        }
    }
}

/// Grid search on validation surrogate risk.
pub fn synthetic_grid_search(
    grid: &GridSpec,
    split: &SyntheticSplit,
    learner: LearnerKind,
    seed: u64,
) -> Result<GridOutcome> {
    grid.validate()?;
    let cells = grid.cells(learner);
    let results: Vec<Result<(f64, Option<f64>)>> = cells
        .par_iter()
        .map(|cell| {
            let fit = fit_surrogate(&split.train, cell, seed, grid.auto_step)?;
            Ok((fit.risk(&split.val), fit.step))
        })
        .collect();
    select_best(cells, results)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticComparison {
    pub seed: u64,
    pub trace_norm: CellConfig,
    pub trace_norm_test_risk: f64,
    pub hs: CellConfig,
    pub hs_test_risk: f64,
}

/// Grid-searches both learners on one seeded problem and reports test
/// surrogate risks of the selected configurations.
pub fn compare_synthetic(
    spec: &SyntheticSpec,
    grid: &GridSpec,
    seed: u64,
) -> Result<SyntheticComparison> {
    let split = gen_synthetic_split(spec, seed)?;
    let test_risk = |learner| -> Result<(CellConfig, f64)> {
        let outcome = synthetic_grid_search(grid, &split, learner, seed)?;
        let mut cell = outcome.best.clone();
        if let Some(step) = outcome.table[outcome.best_index].effective_step {
            cell.step = step;
        }
        let fit = fit_surrogate(&split.train, &cell, seed, false)?;
        Ok((cell, fit.risk(&split.test)))
    };
    let (trace_norm, trace_norm_test_risk) = test_risk(LearnerKind::TraceNorm)?;
    let (hs, hs_test_risk) = test_risk(LearnerKind::Hs)?;
    Ok(SyntheticComparison {
        seed,
        trace_norm,
        trace_norm_test_risk,
        hs,
        hs_test_risk,
    })
}

/// Ratings from a planted low-rank preference model, for demos and tests.
/// Item popularity decays with the item index so the most-rated items
/// carry dense co-ratings.
pub fn gen_synthetic_ratings(users: usize, items: usize, rank: usize, seed: u64) -> RatingsTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uf = DMatrix::from_fn(users, rank, |_, _| normal(&mut rng));
    let vf = DMatrix::from_fn(items, rank, |_, _| normal(&mut rng));
    let bias: Vec<f64> = (0..items).map(|_| 0.5 * normal(&mut rng)).collect();
    let scale = 1.0 / (rank as f64).sqrt();
    let mut records = Vec::new();
    for u in 0..users {
        for (i, b) in bias.iter().enumerate() {
            let p_obs = 0.9 / (1.0 + i as f64 / 15.0);
            if rng.random::<f64>() >= p_obs {
                continue;
            }
            let score = uf.row(u).dot(&vf.row(i)) * scale + b + 0.3 * normal(&mut rng);
            let rating = (3.0 + 1.2 * score).round().clamp(1.0, 5.0);
            records.push(RatingRecord {
                user: (u + 1).to_string(),
                item: (i + 1).to_string(),
                rating,
                line: 0,
            });
        }
    }
    RatingsTable::from_records(records).expect("generated ids are unique")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::{build_pair_tasks, split_per_user, top_items, user_feature_vectors};
    use crate::kernels::{KernelSpec, Point};

    struct FixedRanker(Vec<Vec<usize>>);

    impl QueryRanker for FixedRanker {
        fn rank_user(&self, user: usize) -> Result<Ordering> {
            Ordering::from_sequence(&self.0[user])
        }
    }

    fn random_table(users: usize, items: usize, seed: u64) -> RatingsTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut records = Vec::new();
        for u in 0..users {
            for i in 0..items {
                records.push(RatingRecord {
                    user: u.to_string(),
                    item: i.to_string(),
                    rating: rng.random_range(1..=5) as f64,
                    line: 0,
                });
            }
        }
        RatingsTable::from_records(records).unwrap()
    }

    #[test]
    fn perfect_ranker_scores_zero() {
        let t = random_table(12, 5, 1);
        let items: Vec<usize> = (0..5).collect();
        let orders = (0..12)
            .map(|u| {
                let mut seq = items.clone();
                seq.sort_by(|&a, &b| t.get(u, b).partial_cmp(&t.get(u, a)).unwrap());
                seq
            })
            .collect();
        let users: Vec<usize> = (0..12).collect();
        let r =
            evaluate_ranking(&FixedRanker(orders), &t, &items, &users, ConfigDoc::new()).unwrap();
        assert_eq!(r.mean, 0.0);
        assert!(r.n_queries + r.skipped == 12);
    }

    #[test]
    fn uninformed_ranker_near_half() {
        let t = random_table(400, 6, 2);
        let items: Vec<usize> = (0..6).collect();
        let orders = vec![items.clone(); 400];
        let users: Vec<usize> = (0..400).collect();
        let r =
            evaluate_ranking(&FixedRanker(orders), &t, &items, &users, ConfigDoc::new()).unwrap();
        assert!((r.mean - 0.5).abs() < 0.05, "mean {}", r.mean);
        assert!((0.0..=1.0).contains(&r.mean));
    }

    #[test]
    fn query_order_does_not_matter() {
        let t = random_table(30, 4, 3);
        let items: Vec<usize> = (0..4).collect();
        let orders: Vec<Vec<usize>> = (0..30)
            .map(|u| {
                if u % 2 == 0 {
                    vec![0, 1, 2, 3]
                } else {
                    vec![3, 1, 0, 2]
                }
            })
            .collect();
        let fwd: Vec<usize> = (0..30).collect();
        let rev: Vec<usize> = (0..30).rev().collect();
        let a = evaluate_ranking(
            &FixedRanker(orders.clone()),
            &t,
            &items,
            &fwd,
            ConfigDoc::new(),
        )
        .unwrap();
        let b = evaluate_ranking(&FixedRanker(orders), &t, &items, &rev, ConfigDoc::new()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn aggregate_reports_spread() {
        let mk = |mean| EvalReport {
            config: ConfigDoc::new(),
            per_query: vec![],
            mean,
            std: 0.0,
            n_queries: 1,
            skipped: 0,
            trials: 1,
        };
        let agg = aggregate_trials(&[mk(0.2), mk(0.4)], ConfigDoc::new()).unwrap();
        assert!((agg.mean - 0.3).abs() < 1e-15);
        assert!((agg.std - (0.02f64).sqrt()).abs() < 1e-12);
        assert_eq!(agg.trials, 2);
    }

    #[test]
    fn default_grid_shape() {
        let g = GridSpec::default();
        assert_eq!(g.lambdas.len(), 7);
        assert!((g.lambdas[0] - 1e-4).abs() < 1e-18 && (g.lambdas[6] - 1.0).abs() < 1e-12);
        assert_eq!(g.cells(LearnerKind::TraceNorm).len(), 56);
        assert_eq!(g.cells(LearnerKind::Hs).len(), 7);
        let bad = GridSpec {
            ranks: vec![],
            ..GridSpec::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn synthetic_generator_examples() {
        let p = gen_synthetic_lowrank(50, 6, 5, 1, 0.0, 9).unwrap();
        let mut sv: Vec<f64> =
            p.y.clone()
                .svd(false, false)
                .singular_values
                .iter()
                .copied()
                .collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!(sv[1] <= 1e-10 * sv[0]);
        assert_eq!(p, gen_synthetic_lowrank(50, 6, 5, 1, 0.0, 9).unwrap());
        assert!(gen_synthetic_lowrank(10, 3, 5, 4, 0.1, 0).is_err());
        for row in p.x.row_iter() {
            assert!((row.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_covariance_operator_norm() {
        let p = gen_synthetic_lowrank(500, 20, 2, 1, 0.0, 4).unwrap();
        let cov = p.x.transpose() * &p.x / 500.0;
        let op = cov.symmetric_eigen().eigenvalues.max();
        assert!(op > 0.5 / 20.0 && op < 2.0 / 20.0, "||C||_op = {op}");
    }

    fn ranking_fixture() -> (RankingData, RatingsTable) {
        let t = gen_synthetic_ratings(60, 8, 2, 5);
        let s = split_per_user(&t, [0.5, 0.2, 0.3], 1).unwrap();
        let items = top_items(&t, 6);
        let tasks = build_pair_tasks(&s.train, &items).unwrap();
        let features = user_feature_vectors(&s.train, &tasks.item_subset)
            .into_iter()
            .map(Point::Vector)
            .collect();
        (
            RankingData {
                tasks,
                features,
                kernel: KernelSpec::Linear,
            },
            s.val,
        )
    }

    #[test]
    fn grid_single_cell_and_failures() {
        let (data, val) = ranking_fixture();
        let single = GridSpec {
            lambdas: vec![0.01],
            ranks: vec![2],
            steps: vec![0.05],
            iters: vec![50],
            auto_step: true,
        };
        let (out, _) = grid_search(&single, &data, &val, LearnerKind::TraceNorm, 0).unwrap();
        assert_eq!(out.best_index, 0);
        assert_eq!(out.table.len(), 1);

        // A huge fixed step diverges; the search still completes.
        let mixed = GridSpec {
            lambdas: vec![0.01],
            ranks: vec![2],
            steps: vec![1e6, 1e-3],
            iters: vec![200],
            auto_step: false,
        };
        let (out, _) = grid_search(&mixed, &data, &val, LearnerKind::TraceNorm, 0).unwrap();
        assert!(out.table[0].error.is_some());
        assert_eq!(out.best_index, 1);
    }

    #[test]
    fn grid_best_is_minimal() {
        let (data, val) = ranking_fixture();
        let grid = GridSpec {
            lambdas: vec![1e-3, 1e3],
            ranks: vec![2],
            steps: vec![0.1],
            iters: vec![100],
            auto_step: true,
        };
        for learner in [LearnerKind::TraceNorm, LearnerKind::Hs] {
            let (out, _) = grid_search(&grid, &data, &val, learner, 0).unwrap();
            for cell in &out.table {
                if let Some(s) = cell.score {
                    assert!(out.best_score <= s);
                }
            }
        }
    }
}
