//! Flat `key = value` configuration for QA training and inference.

use std::fmt::Write as _;
use std::path::Path;

use crate::complex::Norm;
use crate::error::{Error, Result};
use crate::kge::{KgeTrainConfig, ModelKind};
use crate::ppr::PprConfig;
use crate::predictor::ScoringMode;
use crate::reasoner::PathFeatures;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InferenceConfig {
    pub lambda: f64,
    pub stage1_k: usize,
    pub max_path_length: usize,
    pub max_paths: usize,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            lambda: 0.6,
            stage1_k: 15,
            max_path_length: 3,
            max_paths: 32,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidArgument(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        if self.stage1_k == 0 || self.max_path_length == 0 || self.max_paths == 0 {
            return Err(Error::InvalidArgument(
                "stage1_k, max_path_length and max_paths must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QaConfig {
    pub text_dim: usize,
    pub attention_dim: usize,
    pub scoring: ScoringMode,
    pub use_paths: bool,
    pub path_features: PathFeatures,
    pub norm: Norm,
    pub inference: InferenceConfig,
    pub ppr: PprConfig,
    /// Candidates per training example (gold included).
    pub candidates: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub freeze_embeddings: bool,
    pub exclude_topics: bool,
    /// Scale the two loss terms by `1−λ` and `λ` instead of summing them.
    pub weighted_loss: bool,
    pub init_scale: f64,
    pub kge: KgeTrainConfig,
}

impl Default for QaConfig {
    fn default() -> Self {
        Self {
            text_dim: 128,
            attention_dim: 64,
            scoring: ScoringMode::RotateScale,
            use_paths: true,
            path_features: PathFeatures::Both,
            norm: Norm::L1,
            inference: InferenceConfig::default(),
            ppr: PprConfig::default(),
            candidates: 64,
            epochs: 10,
            learning_rate: 3e-5,
            beta1: 0.9,
            beta2: 0.998,
            batch_size: 10,
            seed: 0,
            freeze_embeddings: false,
            exclude_topics: true,
            weighted_loss: false,
            init_scale: 0.1,
            kge: KgeTrainConfig::default(),
        }
    }
}

fn bad(key: &str, value: &str) -> Error {
    Error::InvalidArgument(format!("bad value {value:?} for {key}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value))
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(key, value)),
    }
}

impl QaConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "text_dim" => self.text_dim = num(key, v)?,
            "attention_dim" => self.attention_dim = num(key, v)?,
            "scoring" => self.scoring = ScoringMode::parse(v).ok_or_else(|| bad(key, v))?,
            "use_paths" => self.use_paths = flag(key, v)?,
            "path_features" => self.path_features = PathFeatures::parse(v).ok_or_else(|| bad(key, v))?,
            "norm" => self.norm = Norm::parse(v).ok_or_else(|| bad(key, v))?,
            "lambda" => self.inference.lambda = num(key, v)?,
            "stage1_k" => self.inference.stage1_k = num(key, v)?,
            "max_path_length" => self.inference.max_path_length = num(key, v)?,
            "max_paths" => self.inference.max_paths = num(key, v)?,
            "ppr_restart" => self.ppr.restart_prob = num(key, v)?,
            "ppr_iterations" => self.ppr.iterations = num(key, v)?,
            "max_entities" => self.ppr.max_entities = num(key, v)?,
            "candidates" => self.candidates = num(key, v)?,
            "epochs" => self.epochs = num(key, v)?,
            "learning_rate" => self.learning_rate = num(key, v)?,
            "beta1" => self.beta1 = num(key, v)?,
            "beta2" => self.beta2 = num(key, v)?,
            "batch_size" => self.batch_size = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "freeze_embeddings" => self.freeze_embeddings = flag(key, v)?,
            "exclude_topics" => self.exclude_topics = flag(key, v)?,
            "weighted_loss" => self.weighted_loss = flag(key, v)?,
            "init_scale" => self.init_scale = num(key, v)?,
            "kge_model" => self.kge.model = ModelKind::parse(v).ok_or_else(|| bad(key, v))?,
            "kge_dim" => self.kge.dim = num(key, v)?,
            "kge_epochs" => self.kge.epochs = num(key, v)?,
            "kge_learning_rate" => self.kge.learning_rate = num(key, v)?,
            "kge_negatives" => self.kge.negatives_per_positive = num(key, v)?,
            "kge_batch_size" => self.kge.batch_size = num(key, v)?,
            "kge_adversarial_temperature" => self.kge.adversarial_temperature = num(key, v)?,
            "kge_margin" => self.kge.margin = num(key, v)?,
            "kge_regularization" => self.kge.regularization = num(key, v)?,
            "kge_seed" => self.kge.seed = num(key, v)?,
            "kge_norm" => self.kge.norm = Norm::parse(v).ok_or_else(|| bad(key, v))?,
            other => return Err(Error::InvalidArgument(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: Default::default(),
                line: i + 1,
                msg: format!("expected key = value, got {line:?}"),
            })?;
            self.set(k, v)?;
        }
        self.validate()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse { line, msg, .. } => Error::Parse {
                path: path.to_path_buf(),
                line,
                msg,
            },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.inference.validate()?;
        self.kge.validate()?;
        if self.text_dim == 0 || self.attention_dim == 0 || self.candidates == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "text_dim, attention_dim, candidates and batch_size must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument("learning_rate must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.ppr.restart_prob) || self.ppr.max_entities == 0 {
            return Err(Error::InvalidArgument("bad PPR settings".into()));
        }
        Ok(())
    }

    /// Inverse of [`QaConfig::parse`]; floats use shortest round-trip formatting.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("text_dim", self.text_dim.to_string());
        kv("attention_dim", self.attention_dim.to_string());
        kv("scoring", self.scoring.as_str().into());
        kv("use_paths", self.use_paths.to_string());
        kv("path_features", self.path_features.as_str().into());
        kv("norm", self.norm.as_str().into());
        kv("lambda", self.inference.lambda.to_string());
        kv("stage1_k", self.inference.stage1_k.to_string());
        kv("max_path_length", self.inference.max_path_length.to_string());
        kv("max_paths", self.inference.max_paths.to_string());
        kv("ppr_restart", self.ppr.restart_prob.to_string());
        kv("ppr_iterations", self.ppr.iterations.to_string());
        kv("max_entities", self.ppr.max_entities.to_string());
        kv("candidates", self.candidates.to_string());
        kv("epochs", self.epochs.to_string());
        kv("learning_rate", self.learning_rate.to_string());
        kv("beta1", self.beta1.to_string());
        kv("beta2", self.beta2.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("seed", self.seed.to_string());
        kv("freeze_embeddings", self.freeze_embeddings.to_string());
        kv("exclude_topics", self.exclude_topics.to_string());
        kv("weighted_loss", self.weighted_loss.to_string());
        kv("init_scale", self.init_scale.to_string());
        kv("kge_model", self.kge.model.as_str().into());
        kv("kge_dim", self.kge.dim.to_string());
        kv("kge_epochs", self.kge.epochs.to_string());
        kv("kge_learning_rate", self.kge.learning_rate.to_string());
        kv("kge_negatives", self.kge.negatives_per_positive.to_string());
        kv("kge_batch_size", self.kge.batch_size.to_string());
        kv("kge_adversarial_temperature", self.kge.adversarial_temperature.to_string());
        kv("kge_margin", self.kge.margin.to_string());
        kv("kge_regularization", self.kge.regularization.to_string());
        kv("kge_seed", self.kge.seed.to_string());
        kv("kge_norm", self.kge.norm.as_str().into());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = QaConfig::default();
        assert_eq!(QaConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn overrides_and_comments() {
        let c = QaConfig::parse("# toy\nlambda = 0.4\nscoring = rotate  # ablation\nuse_paths=false\n").unwrap();
        assert_eq!(c.inference.lambda, 0.4);
        assert_eq!(c.scoring, ScoringMode::Rotate);
        assert!(!c.use_paths);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(QaConfig::parse("nope = 1").is_err());
        assert!(QaConfig::parse("lambda = 1.5").is_err());
        assert!(QaConfig::parse("lambda").is_err());
        assert!(QaConfig::parse("stage1_k = 0").is_err());
    }
}
