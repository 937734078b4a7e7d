//! End-to-end runs driven by a [`RunConfig`]: data preparation, training,
//! evaluation, grid search, decoding, synthetic comparisons and
//! verification. Each run returns a serializable artifact that embeds its
//! configuration.

use std::fs;
use std::path::Path;

use log::info;
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::config::{DataFormat, QueryFeatures, RunConfig};
use crate::data_io::{
    build_pair_tasks, parse_features_csv, parse_movielens, parse_ratings_csv, preference_features,
    split_per_user, top_items, top_users, user_feature_vectors, RatingsTable, SplitTable,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    aggregate_trials, compare_synthetic, evaluate_ranking, grid_search, CellConfig, ConfigDoc,
    EvalReport, GridOutcome, SyntheticComparison,
};
use crate::kernels::Point;
use crate::ranking::{train_ranker, LearnerKind, Ranker, RankingData};
use crate::verify::{run_suite, SuiteConfig, VerifyReport};

/// Reads the ratings (and optional side features) named by the config.
pub fn load_table(cfg: &RunConfig) -> Result<RatingsTable> {
    let path = cfg
        .data
        .ratings
        .as_ref()
        .ok_or_else(|| Error::Config("data.ratings is required for this command".into()))?;
    let mut table = match cfg.data.format {
        DataFormat::Movielens => parse_movielens(path)?,
        DataFormat::Csv => parse_ratings_csv(path)?,
    };
    if let Some(f) = &cfg.data.features {
        table.attach_features(&parse_features_csv(f)?)?;
    }
    Ok(table)
}

/// A seeded split of the subsampled table and the training data built on
/// its train part.
#[derive(Clone, Debug)]
pub struct Prepared {
    /// Ratings on the item subset from the kept users.
    pub table: RatingsTable,
    pub split: SplitTable,
    pub data: RankingData,
    /// Users with at least one rating on the item subset.
    pub queries: Vec<usize>,
}

/// Keeps the `data.items` most-rated items and, if set, the `data.users`
/// users most active on them; splits per user and builds pair tasks and
/// query features from the train part only.
pub fn prepare(cfg: &RunConfig, source: &RatingsTable, seed: u64) -> Result<Prepared> {
    let items = top_items(source, cfg.data.items);
    if items.len() < 2 {
        return Err(Error::invalid("the ratings cover fewer than two items"));
    }
    let mut table = source.restrict_items(&items);
    if let Some(count) = cfg.data.users {
        table = table.restrict_users(&top_users(&table, &items, count));
    }
    let mut queries: Vec<usize> = table.iter().map(|(u, _, _)| u).collect();
    queries.dedup();
    let split = split_per_user(&table, cfg.split_fractions(), seed)?;
    let tasks = build_pair_tasks(&split.train, &items)?;
    let features = match cfg.data.query_features {
        QueryFeatures::Centered => preference_features(&split.train, &tasks.item_subset),
        QueryFeatures::Raw => user_feature_vectors(&split.train, &tasks.item_subset),
    };
    let features = features.into_iter().map(Point::Vector).collect();
    info!(
        "prepared {} users, {} items, {} pair tasks (seed {seed})",
        queries.len(),
        items.len(),
        tasks.tasks.len()
    );
    Ok(Prepared {
        table,
        split,
        data: RankingData {
            tasks,
            features,
            kernel: cfg.kernel_spec()?,
        },
        queries,
    })
}

fn check_ranking_loss(cfg: &RunConfig) -> Result<()> {
    if cfg.loss.name != "pair_sign" {
        return Err(Error::Config(format!(
            "ranking commands need loss.name = \"pair_sign\", got `{}`",
            cfg.loss.name
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceDoc {
    pub config: ConfigDoc,
    pub learner: LearnerKind,
    pub step: f64,
    pub iters_run: usize,
    pub objective_trace: Vec<f64>,
}

/// Trains the configured learner on one seeded split.
pub fn run_train(cfg: &RunConfig) -> Result<(Checkpoint, TraceDoc)> {
    check_ranking_loss(cfg)?;
    let source = load_table(cfg)?;
    let prep = prepare(cfg, &source, cfg.seed)?;
    let ranker = train_ranker(
        prep.data,
        cfg.train.learner,
        &cfg.train_config(),
        cfg.train.auto_step,
    )?;
    let ck = Checkpoint::from_ranker(&ranker, source.users(), source.items(), cfg.to_doc());
    let trace = TraceDoc {
        config: cfg.to_doc(),
        learner: ck.learner,
        step: ck.step,
        iters_run: ck.iters_run,
        objective_trace: ck.objective_trace.clone(),
    };
    Ok((ck, trace))
}

fn restore(cfg: &RunConfig, ck: &Checkpoint) -> Result<(Prepared, Ranker)> {
    check_ranking_loss(cfg)?;
    let source = load_table(cfg)?;
    let prep = prepare(cfg, &source, cfg.seed)?;
    let ranker = ck.to_ranker(prep.data.clone(), source.users(), source.items())?;
    Ok((prep, ranker))
}

/// Scores a checkpoint on the test part of the same seeded split.
pub fn run_eval(cfg: &RunConfig, ck: &Checkpoint) -> Result<EvalReport> {
    let (prep, ranker) = restore(cfg, ck)?;
    evaluate_ranking(
        &ranker,
        &prep.split.test,
        &prep.data.tasks.item_subset,
        &prep.queries,
        cfg.to_doc(),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridTrial {
    pub seed: u64,
    pub grid: GridOutcome,
    pub test_mean: f64,
    pub test_queries: usize,
    pub test_skipped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridArtifact {
    pub config: ConfigDoc,
    pub learner: LearnerKind,
    /// Selected configuration of the first trial.
    pub best: CellConfig,
    pub trials: Vec<GridTrial>,
    /// Test-set report aggregated over trials.
    pub report: EvalReport,
}

/// Per trial (seed `seed + k`): re-split, grid search on validation, score
/// the selected model on test.
pub fn run_grid(cfg: &RunConfig, learner: LearnerKind) -> Result<GridArtifact> {
    check_ranking_loss(cfg)?;
    let source = load_table(cfg)?;
    let mut trials = Vec::with_capacity(cfg.trials);
    let mut reports = Vec::with_capacity(cfg.trials);
    for k in 0..cfg.trials as u64 {
        let seed = cfg.seed + k;
        let prep = prepare(cfg, &source, seed)?;
        let (grid, ranker) = grid_search(&cfg.grid, &prep.data, &prep.split.val, learner, seed)?;
        let report = evaluate_ranking(
            &ranker,
            &prep.split.test,
            &prep.data.tasks.item_subset,
            &prep.queries,
            ConfigDoc::new(),
        )?;
        info!("{} trial {k}: test loss {:.4}", learner.name(), report.mean);
        trials.push(GridTrial {
            seed,
            grid,
            test_mean: report.mean,
            test_queries: report.n_queries,
            test_skipped: report.skipped,
        });
        reports.push(report);
    }
    Ok(GridArtifact {
        config: cfg.to_doc(),
        learner,
        best: trials[0].grid.best.clone(),
        report: aggregate_trials(&reports, cfg.to_doc())?,
        trials,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryOrdering {
    pub user: String,
    /// Item ids, most preferred first.
    pub ranking: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeArtifact {
    pub config: ConfigDoc,
    pub learner: LearnerKind,
    pub orderings: Vec<QueryOrdering>,
}

/// Predicted item orderings for every query user.
pub fn run_decode(cfg: &RunConfig, ck: &Checkpoint) -> Result<DecodeArtifact> {
    let (prep, ranker) = restore(cfg, ck)?;
    let items = prep.table.items();
    let subset = &prep.data.tasks.item_subset;
    let orderings = prep
        .queries
        .iter()
        .map(|&u| {
            let order = ranker.rank_user(u)?;
            Ok(QueryOrdering {
                user: prep.table.users()[u].clone(),
                ranking: order
                    .sequence()
                    .iter()
                    .map(|&d| items[subset[d]].clone())
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecodeArtifact {
        config: cfg.to_doc(),
        learner: ranker.kind(),
        orderings,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthArtifact {
    pub config: ConfigDoc,
    pub comparisons: Vec<SyntheticComparison>,
    /// Trials where the trace-norm test risk is strictly lower.
    pub trace_norm_wins: usize,
    pub trace_norm_mean_risk: f64,
    pub hs_mean_risk: f64,
}

/// Both learners grid-searched on `trials` generated problems.
pub fn run_synth(cfg: &RunConfig) -> Result<SynthArtifact> {
    let comparisons = (0..cfg.trials as u64)
        .map(|k| {
            let c = compare_synthetic(&cfg.synth, &cfg.grid, cfg.seed + k)?;
            info!(
                "synthetic seed {}: trace norm {:.4}, hs {:.4}",
                c.seed, c.trace_norm_test_risk, c.hs_test_risk
            );
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let k = comparisons.len() as f64;
    Ok(SynthArtifact {
        config: cfg.to_doc(),
        trace_norm_wins: comparisons
            .iter()
            .filter(|c| c.trace_norm_test_risk < c.hs_test_risk)
            .count(),
        trace_norm_mean_risk: comparisons
            .iter()
            .map(|c| c.trace_norm_test_risk)
            .sum::<f64>()
            / k,
        hs_mean_risk: comparisons.iter().map(|c| c.hs_test_risk).sum::<f64>() / k,
        comparisons,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyArtifact {
    pub config: ConfigDoc,
    pub suite: SuiteConfig,
    pub report: VerifyReport,
}

pub fn run_verify(cfg: &RunConfig) -> VerifyArtifact {
    let suite = SuiteConfig::small(cfg.seed);
    VerifyArtifact {
        config: cfg.to_doc(),
        report: run_suite(&suite),
        suite,
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
