//! Learning to rank as a multitask surrogate problem: one task per document
//! pair, `pair_sign` outputs, decoding through feedback arc sets.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data_io::PairTaskSet;
use crate::decoding::{build_tournament, fas_greedy, Ordering, PairEvidence, Tournament};
use crate::error::{Error, Result};
use crate::kernels::{cross_vector, gram, GramMatrix, KernelSpec, Point};
use crate::learners::{
    fit_hs, fit_mtl, select_mtl_step, HsModel, MtlFactorSet, MtlProblem, MtlTask, TrainConfig,
};
use crate::losses::{output_gram, SelfLoss};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    TraceNorm,
    Hs,
}

impl LearnerKind {
    pub fn name(&self) -> &'static str {
        match self {
            LearnerKind::TraceNorm => "trace_norm",
            LearnerKind::Hs => "hs",
        }
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trace_norm" => Ok(LearnerKind::TraceNorm),
            "hs" => Ok(LearnerKind::Hs),
            other => Err(Error::invalid(format!("unknown learner `{other}`"))),
        }
    }
}

/// Training data for a ranker: pair tasks plus a feature point per user.
#[derive(Clone, Debug)]
pub struct RankingData {
    pub tasks: PairTaskSet,
    /// Indexed by table user index.
    pub features: Vec<Point>,
    pub kernel: KernelSpec,
}

impl RankingData {
    /// Multitask problem over the users that appear in at least one task.
    /// Returns the problem and those users (the base inputs, in order).
    pub fn mtl_problem(&self) -> Result<(MtlProblem, Vec<usize>)> {
        let base = self.tasks.query_users();
        if base.is_empty() {
            return Err(Error::invalid("no pair task has any observation"));
        }
        let slot: std::collections::BTreeMap<usize, usize> =
            base.iter().enumerate().map(|(s, &u)| (u, s)).collect();
        let points: Vec<Point> = base.iter().map(|&u| self.features[u].clone()).collect();
        let k_x = gram(&points, &self.kernel)?;
        let tasks = self
            .tasks
            .tasks
            .iter()
            .map(|t| {
                // The pair_sign output kernel is linear on scalars, so z itself
                // is an exact output feature map.
                let z = DMatrix::from_column_slice(t.z.len(), 1, &t.z);
                Ok(MtlTask::with_features(
                    t.queries.iter().map(|u| slot[u]).collect(),
                    z,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((MtlProblem::new(k_x, tasks)?, base))
    }
}

/// Learned pairwise weights for one of the two learners.
#[derive(Clone, Debug)]
pub enum RankingModel {
    TraceNorm(MtlFactorSet),
    /// One closed-form model per task, over that task's own queries.
    Hs(Vec<HsModel>),
}

#[derive(Clone, Debug)]
pub struct Ranker {
    pub data: RankingData,
    /// Base users for the trace-norm factors.
    pub base_users: Vec<usize>,
    pub model: RankingModel,
    pub config: TrainConfig,
}

/// Trains a ranker. For the trace-norm learner with `auto_step`, the step
/// is found by halving `cfg.step` until the first 10 iterations descend.
pub fn train_ranker(
    data: RankingData,
    kind: LearnerKind,
    cfg: &TrainConfig,
    auto_step: bool,
) -> Result<Ranker> {
    match kind {
        LearnerKind::TraceNorm => {
            let (problem, base) = data.mtl_problem()?;
            let mut cfg = cfg.clone();
            if auto_step {
                cfg.step = select_mtl_step(&problem, &cfg, cfg.step, 10)?;
            }
            let factors = fit_mtl(&problem, &cfg)?;
            Ok(Ranker {
                data,
                base_users: base,
                model: RankingModel::TraceNorm(factors),
                config: cfg,
            })
        }
        LearnerKind::Hs => {
            let models = data
                .tasks
                .tasks
                .iter()
                .map(|t| {
                    let pts: Vec<Point> = t
                        .queries
                        .iter()
                        .map(|&u| data.features[u].clone())
                        .collect();
                    fit_hs(&gram(&pts, &data.kernel)?, cfg.lambda)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Ranker {
                base_users: data.tasks.query_users(),
                data,
                model: RankingModel::Hs(models),
                config: cfg.clone(),
            })
        }
    }
}

/// Rebuilds a trace-norm ranker from stored factors.
pub fn ranker_from_factors(
    data: RankingData,
    factors: MtlFactorSet,
    config: TrainConfig,
) -> Result<Ranker> {
    let base = data.tasks.query_users();
    if factors.m.nrows() != base.len() || factors.task_count() != data.tasks.tasks.len() {
        return Err(Error::invalid(
            "stored factors do not match the rebuilt pair tasks",
        ));
    }
    for (n_t, t) in factors.n_per_task.iter().zip(&data.tasks.tasks) {
        if n_t.nrows() != t.queries.len() {
            return Err(Error::invalid(
                "stored task sizes do not match the rebuilt pair tasks",
            ));
        }
    }
    Ok(Ranker {
        data,
        base_users: base,
        model: RankingModel::TraceNorm(factors),
        config,
    })
}

impl Ranker {
    pub fn kind(&self) -> LearnerKind {
        match self.model {
            RankingModel::TraceNorm(_) => LearnerKind::TraceNorm,
            RankingModel::Hs(_) => LearnerKind::Hs,
        }
    }

    /// Per-task weights `alpha_t(x)` for a query point.
    pub fn task_weights(&self, query: &Point) -> Result<Vec<DVector<f64>>> {
        let kernel = &self.data.kernel;
        match &self.model {
            RankingModel::TraceNorm(f) => {
                let base: Vec<Point> = self
                    .base_users
                    .iter()
                    .map(|&u| self.data.features[u].clone())
                    .collect();
                f.weights(&cross_vector(&base, query, kernel)?)
            }
            RankingModel::Hs(models) => models
                .iter()
                .zip(&self.data.tasks.tasks)
                .map(|(m, t)| {
                    let pts: Vec<Point> = t
                        .queries
                        .iter()
                        .map(|&u| self.data.features[u].clone())
                        .collect();
                    m.weights(&cross_vector(&pts, query, kernel)?)
                })
                .collect(),
        }
    }

    pub fn tournament(&self, query: &Point) -> Result<Tournament> {
        let weights = self.task_weights(query)?;
        let evidence: Vec<PairEvidence<'_>> = weights
            .iter()
            .zip(&self.data.tasks.tasks)
            .map(|(a, t)| PairEvidence {
                pair: t.pair,
                alpha: a.as_slice(),
                z: &t.z,
            })
            .collect();
        build_tournament(self.data.tasks.documents(), &evidence)
    }

    /// Predicted order of the item subset for a query.
    pub fn rank(&self, query: &Point) -> Result<Ordering> {
        Ok(fas_greedy(&self.tournament(query)?))
    }

    /// Ranks for the user at table index `user`, using its training features.
    pub fn rank_user(&self, user: usize) -> Result<Ordering> {
        let q = self
            .data
            .features
            .get(user)
            .ok_or_else(|| Error::invalid(format!("no features for user index {user}")))?;
        self.rank(q)
    }
}

/// Output Gram of a pair task's signed differences.
pub fn pair_output_gram(z: &[f64]) -> Result<GramMatrix> {
    let pts: Vec<Point> = z.iter().map(|&v| Point::scalar(v)).collect();
    output_gram(&pts, &SelfLoss::PairSign)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::{build_pair_tasks, parse_movielens_str, user_feature_vectors};

    fn toy() -> RankingData {
        // Users 1-4 agree that item 1 > item 2 > item 3.
        let mut text = String::new();
        for u in 1..=4 {
            for (i, r) in [(1, 5), (2, 3), (3, 1)] {
                text.push_str(&format!("{u}\t{i}\t{r}\t0\n"));
            }
        }
        let t = parse_movielens_str(&text).unwrap();
        let items = vec![0, 1, 2];
        let tasks = build_pair_tasks(&t, &items).unwrap();
        let features = user_feature_vectors(&t, &items)
            .into_iter()
            .enumerate()
            .map(|(u, mut f)| {
                f.push(u as f64 * 0.1);
                Point::Vector(f)
            })
            .collect();
        RankingData {
            tasks,
            features,
            kernel: KernelSpec::Linear,
        }
    }

    #[test]
    fn both_learners_recover_consensus_order() {
        for kind in [LearnerKind::TraceNorm, LearnerKind::Hs] {
            let cfg = TrainConfig {
                lambda: 1e-3,
                rank: 2,
                step: 0.1,
                max_iters: 300,
                ..Default::default()
            };
            let r = train_ranker(toy(), kind, &cfg, true).unwrap();
            for u in 0..4 {
                assert_eq!(
                    r.rank_user(u).unwrap().sequence(),
                    vec![0, 1, 2],
                    "{kind:?}"
                );
            }
        }
    }

    #[test]
    fn factors_round_trip_into_ranker() {
        let cfg = TrainConfig {
            rank: 2,
            step: 0.1,
            max_iters: 20,
            ..Default::default()
        };
        let r = train_ranker(toy(), LearnerKind::TraceNorm, &cfg, true).unwrap();
        let RankingModel::TraceNorm(f) = r.model.clone() else {
            unreachable!()
        };
        let rebuilt = ranker_from_factors(toy(), f, r.config.clone()).unwrap();
        assert_eq!(rebuilt.rank_user(2).unwrap(), r.rank_user(2).unwrap());
    }

    #[test]
    fn learner_names() {
        assert_eq!("hs".parse::<LearnerKind>().unwrap(), LearnerKind::Hs);
        assert!("svm".parse::<LearnerKind>().is_err());
    }
}
