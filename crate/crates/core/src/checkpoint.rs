//! JSON model checkpoints.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::ConfigDoc;
use crate::kernels::KernelSpec;
use crate::learners::{FactorPair, MtlFactorSet, TrainConfig};
use crate::ranking::{
    ranker_from_factors, train_ranker, LearnerKind, Ranker, RankingData, RankingModel,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Dense matrix stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&DMatrix<f64>> for MatrixDoc {
    fn from(m: &DMatrix<f64>) -> Self {
        MatrixDoc {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().iter().copied().collect(),
        }
    }
}

impl MatrixDoc {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::invalid(format!(
                "matrix of {}x{} has {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema_version: u32,
    pub config: ConfigDoc,
    pub learner: LearnerKind,
    pub kernel: KernelSpec,
    pub loss: String,
    pub lambda: f64,
    pub rank: usize,
    pub step: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub iters_run: usize,
    pub seed: u64,
    /// Ids of the inputs indexing the rows of `m`.
    pub training_points: Vec<String>,
    /// Item ids of the ranked subset, in document order.
    pub items: Vec<String>,
    /// Document pairs, one per task.
    pub pairs: Vec<(usize, usize)>,
    pub task_sizes: Vec<usize>,
    /// Absent for the closed-form learner, which is refitted on load.
    pub m: Option<MatrixDoc>,
    pub n_per_task: Vec<MatrixDoc>,
    pub objective_trace: Vec<f64>,
}

impl Checkpoint {
    /// Snapshot of a trained ranker. `users`/`items` are the id lists of the
    /// table the ranker was trained on.
    pub fn from_ranker(
        ranker: &Ranker,
        users: &[String],
        items: &[String],
        config: ConfigDoc,
    ) -> Checkpoint {
        let cfg = &ranker.config;
        let tasks = &ranker.data.tasks;
        let (m, n_per_task, iters_run, objective_trace) = match &ranker.model {
            RankingModel::TraceNorm(f) => (
                Some(MatrixDoc::from(&f.m)),
                f.n_per_task.iter().map(MatrixDoc::from).collect(),
                f.iters_run,
                f.objective_trace.clone(),
            ),
            RankingModel::Hs(_) => (None, Vec::new(), 0, Vec::new()),
        };
        Checkpoint {
            schema_version: SCHEMA_VERSION,
            config,
            learner: ranker.kind(),
            kernel: ranker.data.kernel,
            loss: "pair_sign".into(),
            lambda: cfg.lambda,
            rank: cfg.rank,
            step: cfg.step,
            max_iters: cfg.max_iters,
            tol: cfg.tol,
            iters_run,
            seed: cfg.seed,
            training_points: ranker
                .base_users
                .iter()
                .map(|&u| users[u].clone())
                .collect(),
            items: tasks
                .item_subset
                .iter()
                .map(|&i| items[i].clone())
                .collect(),
            pairs: tasks.tasks.iter().map(|t| t.pair).collect(),
            task_sizes: tasks.tasks.iter().map(|t| t.queries.len()).collect(),
            m,
            n_per_task,
            objective_trace,
        }
    }

    /// Snapshot of a single-task factor pair.
    pub fn from_factor_pair(
        fp: &FactorPair,
        cfg: &TrainConfig,
        kernel: KernelSpec,
        loss: &str,
        points: Vec<String>,
        config: ConfigDoc,
    ) -> Checkpoint {
        Checkpoint {
            schema_version: SCHEMA_VERSION,
            config,
            learner: LearnerKind::TraceNorm,
            kernel,
            loss: loss.into(),
            lambda: cfg.lambda,
            rank: cfg.rank,
            step: cfg.step,
            max_iters: cfg.max_iters,
            tol: cfg.tol,
            iters_run: fp.iters_run,
            seed: cfg.seed,
            task_sizes: vec![fp.m.nrows()],
            training_points: points,
            items: Vec::new(),
            pairs: Vec::new(),
            m: Some(MatrixDoc::from(&fp.m)),
            n_per_task: vec![MatrixDoc::from(&fp.n)],
            objective_trace: fp.objective_trace.clone(),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lambda: self.lambda,
            rank: self.rank,
            step: self.step,
            max_iters: self.max_iters,
            seed: self.seed,
            tol: self.tol,
            init_scale: None,
        }
    }

    /// Restores a ranker against freshly rebuilt training data, checking
    /// that the data matches what the checkpoint was trained on.
    pub fn to_ranker(
        &self,
        data: RankingData,
        users: &[String],
        items: &[String],
    ) -> Result<Ranker> {
        let base: Vec<String> = data
            .tasks
            .query_users()
            .iter()
            .map(|&u| users[u].clone())
            .collect();
        let subset: Vec<String> = data
            .tasks
            .item_subset
            .iter()
            .map(|&i| items[i].clone())
            .collect();
        let pairs: Vec<(usize, usize)> = data.tasks.tasks.iter().map(|t| t.pair).collect();
        if subset != self.items || pairs != self.pairs {
            return Err(Error::invalid(
                "checkpoint item subset does not match the data",
            ));
        }
        if data.kernel != self.kernel {
            return Err(Error::invalid(
                "checkpoint kernel does not match the configuration",
            ));
        }
        match self.learner {
            LearnerKind::Hs => train_ranker(data, LearnerKind::Hs, &self.train_config(), false),
            LearnerKind::TraceNorm => {
                if base != self.training_points {
                    return Err(Error::invalid(
                        "checkpoint training points do not match the data",
                    ));
                }
                let m = self
                    .m
                    .as_ref()
                    .ok_or_else(|| Error::invalid("trace-norm checkpoint without M"))?
                    .to_matrix()?;
                let n_per_task = self
                    .n_per_task
                    .iter()
                    .map(MatrixDoc::to_matrix)
                    .collect::<Result<Vec<_>>>()?;
                let factors = MtlFactorSet {
                    m,
                    n_per_task,
                    task_sizes: self.task_sizes.clone(),
                    iters_run: self.iters_run,
                    objective_trace: self.objective_trace.clone(),
                };
                ranker_from_factors(data, factors, self.train_config())
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ck: Checkpoint = serde_json::from_str(&text)?;
        if ck.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "unsupported checkpoint schema {} (expected {SCHEMA_VERSION})",
                ck.schema_version
            )));
        }
        Ok(ck)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::GramMatrix;
    use crate::learners::fit_lowrank;

    #[test]
    fn matrix_doc_is_row_major() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let doc = MatrixDoc::from(&m);
        assert_eq!(doc.data, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(doc.to_matrix().unwrap(), m);
        let bad = MatrixDoc {
            rows: 2,
            cols: 2,
            data: vec![1.0],
        };
        assert!(bad.to_matrix().is_err());
    }

    #[test]
    fn factor_pair_round_trip_is_exact() {
        let f = DMatrix::from_fn(6, 3, |i, j| ((i * 7 + j * 3) as f64).sin());
        let k = GramMatrix::from_features(&f);
        let cfg = TrainConfig {
            rank: 2,
            step: 0.05,
            max_iters: 30,
            ..Default::default()
        };
        let fp = fit_lowrank(&k, &k, &cfg).unwrap();
        let ck = Checkpoint::from_factor_pair(
            &fp,
            &cfg,
            KernelSpec::Linear,
            "squared",
            (0..6).map(|i| i.to_string()).collect(),
            ConfigDoc::new(),
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.json");
        ck.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.m.unwrap().to_matrix().unwrap(), fp.m);
        assert_eq!(back.n_per_task[0].to_matrix().unwrap(), fp.n);
    }

    #[test]
    fn rejects_other_schema() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.json");
        let fp = FactorPair {
            m: DMatrix::zeros(1, 1),
            n: DMatrix::zeros(1, 1),
            iters_run: 0,
            objective_trace: vec![1.0],
        };
        let mut ck = Checkpoint::from_factor_pair(
            &fp,
            &TrainConfig::default(),
            KernelSpec::Linear,
            "squared",
            vec!["a".into()],
            ConfigDoc::new(),
        );
        ck.schema_version = 99;
        ck.save(&path).unwrap();
        assert!(Checkpoint::load(&path).is_err());
    }
}
