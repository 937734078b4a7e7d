//! Run configuration: a TOML document with dotted keys, plus `key=value`
//! overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{ConfigDoc, GridSpec, SyntheticSpec};
use crate::kernels::KernelSpec;
use crate::learners::TrainConfig;
use crate::losses::SelfLoss;
use crate::ranking::LearnerKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    Movielens,
    Csv,
}

/// Rating-derived query features (ignored when side features are attached).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryFeatures {
    /// Mean-imputed ratings centered per user and scaled to unit length.
    Centered,
    /// Mean-imputed ratings as they are.
    Raw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub ratings: Option<PathBuf>,
    pub format: DataFormat,
    pub features: Option<PathBuf>,
    /// Size of the ranked item subset (most-rated items).
    pub items: usize,
    /// Keep only this many users, the most active on the item subset.
    pub users: Option<usize>,
    pub query_features: QueryFeatures,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            ratings: None,
            format: DataFormat::Movielens,
            features: None,
            items: 30,
            users: None,
            query_features: QueryFeatures::Centered,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub kind: String,
    pub bandwidth: Option<f64>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            kind: "linear".into(),
            bandwidth: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub name: String,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            name: "pair_sign".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub learner: LearnerKind,
    pub lambda: f64,
    pub rank: usize,
    /// Fixed step, or the starting point of the halving search.
    pub step: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub init_scale: Option<f64>,
    pub auto_step: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            learner: LearnerKind::TraceNorm,
            lambda: 1e-2,
            rank: 5,
            step: 0.1,
            max_iters: 500,
            tol: 1e-9,
            init_scale: None,
            auto_step: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train: 0.5,
            val: 0.2,
            test: 0.3,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub checkpoint: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Independent re-splits (ranking) or generated problems (synthetic).
    pub trials: usize,
    pub out: PathBuf,
    pub data: DataConfig,
    pub kernel: KernelConfig,
    pub loss: LossConfig,
    pub train: TrainSection,
    pub grid: GridSpec,
    pub split: SplitConfig,
    pub synth: SyntheticSpec,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            trials: 5,
            out: PathBuf::from("out"),
            data: DataConfig::default(),
            kernel: KernelConfig::default(),
            loss: LossConfig::default(),
            train: TrainSection::default(),
            grid: GridSpec::default(),
            split: SplitConfig::default(),
            synth: SyntheticSpec::default(),
            eval: EvalConfig::default(),
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Parses the right-hand side of an override as a TOML value, falling back
/// to a bare string (`kernel.kind=gaussian`).
fn parse_override_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_dotted(root: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(config_err(format!("malformed key `{key}`")));
    }
    let mut table = root;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| config_err(format!("`{part}` in `{key}` is not a section")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn flatten_json(prefix: &str, v: &serde_json::Value, out: &mut ConfigDoc) {
    match v {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_json(&key, v, out);
            }
        }
        serde_json::Value::Null => {}
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}

impl RunConfig {
    /// Parses a TOML document, applies `key=value` overrides in order, and
    /// validates the result.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<RunConfig> {
        let mut root: toml::Table = text
            .parse()
            .map_err(|e| config_err(format!("config: {e}")))?;
        for ov in overrides {
            let (key, raw) = ov
                .split_once('=')
                .ok_or_else(|| config_err(format!("override `{ov}` is not key=value")))?;
            set_dotted(&mut root, key.trim(), parse_override_value(raw.trim()))?;
        }
        let cfg: RunConfig = toml::Value::Table(root)
            .try_into()
            .map_err(|e: toml::de::Error| config_err(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads from a file; `None` starts from the defaults.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
        let text = match path {
            Some(p) => {
                fs::read_to_string(p).map_err(|e| config_err(format!("{}: {e}", p.display())))?
            }
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        for (key, path) in [
            ("data.ratings", &self.data.ratings),
            ("data.features", &self.data.features),
            ("eval.checkpoint", &self.eval.checkpoint),
        ] {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(config_err(format!("{key}: {} does not exist", p.display())));
                }
            }
        }
        self.kernel_spec()?;
        self.loss()?;
        self.train_config()
            .validate_strict()
            .map_err(|e| config_err(e.to_string()))?;
        self.grid
            .validate()
            .map_err(|e| config_err(e.to_string()))?;
        let f = [self.split.train, self.split.val, self.split.test];
        if f.iter().any(|v| !(*v > 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(config_err("split fractions must be positive and sum to 1"));
        }
        if self.data.items < 2 {
            return Err(config_err("data.items must be at least 2"));
        }
        if self.data.users == Some(0) {
            return Err(config_err("data.users must be positive"));
        }
        if self.trials == 0 {
            return Err(config_err("trials must be positive"));
        }
        Ok(())
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        KernelSpec::from_config(&self.kernel.kind, self.kernel.bandwidth)
            .map_err(|e| config_err(e.to_string()))
    }

    pub fn loss(&self) -> Result<SelfLoss> {
        self.loss
            .name
            .parse()
            .map_err(|e: Error| config_err(e.to_string()))
    }

    pub fn split_fractions(&self) -> [f64; 3] {
        [self.split.train, self.split.val, self.split.test]
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lambda: self.train.lambda,
            rank: self.train.rank,
            step: self.train.step,
            max_iters: self.train.max_iters,
            seed: self.seed,
            tol: self.train.tol,
            init_scale: self.train.init_scale,
        }
    }

    /// Flat dotted-key view embedded in artifacts. The output directory is
    /// left out: it says where results go, not how they were produced.
    pub fn to_doc(&self) -> ConfigDoc {
        let mut doc = ConfigDoc::new();
        let value = serde_json::to_value(self).expect("config is serializable");
        flatten_json("", &value, &mut doc);
        doc.remove("out");
        doc
    }
}
