//! Structured prediction with low-rank surrogate estimators.
//!
//! Inputs and outputs live in kernel spaces; the surrogate map is learned
//! either in closed form (kernel ridge) or with a trace-norm penalty via
//! factorized gradient descent. Predictions are decoded through the loss
//! trick, and label ranking is handled as a multitask problem over item
//! pairs decoded with feedback arc sets.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod data_io;
pub mod decoding;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod kernels;
pub mod learners;
pub mod losses;
pub mod oracles;
pub mod ranking;
pub mod verify;

pub use error::{Error, Result};
pub use kernels::{GramMatrix, KernelSpec, Point};
pub use learners::{fit_hs, fit_lowrank, fit_mtl, FactorPair, HsModel, MtlProblem, TrainConfig};
pub use losses::SelfLoss;
pub use ranking::{train_ranker, LearnerKind, Ranker};
