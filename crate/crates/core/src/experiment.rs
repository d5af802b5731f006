//! End-to-end runs: data preparation, ablation variants and λ sweeps.

use std::fmt::Write as _;

use crate::config::{InferenceConfig, QaConfig};
use crate::error::{Error, Result};
use crate::infer::{evaluate_with, subgraphs_for, EvalReport};
use crate::kg::KnowledgeGraph;
use crate::kge::{train_kge, EmbeddingTable, KgeTrainConfig, ModelKind};
use crate::model::{build_tokenizer, QaEnv, QaModel};
use crate::ppr::Subgraph;
use crate::predictor::ScoringMode;
use crate::qa::{QaDataset, QuestionInstance};
use crate::reasoner::PathFeatures;
use crate::text::Tokenizer;
use crate::toy::ToyBenchmark;
use crate::train::{train_qa, TrainReport};

/// Settings used for the toy benchmark; small widths keep a run near a minute.
/// The PPR cap keeps sampled negatives in the topic's neighbourhood.
pub fn toy_config(seed: u64) -> QaConfig {
    let mut c = QaConfig {
        text_dim: 32,
        attention_dim: 16,
        candidates: 32,
        epochs: 30,
        learning_rate: 2e-3,
        batch_size: 10,
        seed,
        init_scale: 0.03,
        freeze_embeddings: true,
        ..QaConfig::default()
    };
    c.ppr.max_entities = 64;
    c.kge = KgeTrainConfig {
        dim: 32,
        epochs: 150,
        learning_rate: 0.02,
        negatives_per_positive: 16,
        batch_size: 64,
        margin: 6.0,
        seed,
        ..KgeTrainConfig::default()
    };
    c
}

/// Tokenized splits over one inverse-augmented graph.
#[derive(Debug)]
pub struct Prepared {
    pub env: QaEnv,
    pub tokenizer: Tokenizer,
    pub train: QaDataset,
    pub valid: QaDataset,
    pub test: QaDataset,
}

fn dataset(instances: Vec<QuestionInstance>, tok: &Tokenizer) -> QaDataset {
    let mut d = QaDataset { instances, skipped: 0 };
    d.tokenize(tok);
    d
}

pub fn prepare(
    kg: KnowledgeGraph,
    train: Vec<QuestionInstance>,
    valid: Vec<QuestionInstance>,
    test: Vec<QuestionInstance>,
    inference: &InferenceConfig,
) -> Result<Prepared> {
    let kg = if kg.is_augmented() { kg } else { kg.add_inverse_relations()? };
    let train_ds = QaDataset { instances: train, skipped: 0 };
    let tokenizer = build_tokenizer(&train_ds, &kg);
    let env = QaEnv::new(kg, &tokenizer, inference.max_path_length, inference.max_paths)?;
    Ok(Prepared {
        train: dataset(train_ds.instances, &tokenizer),
        valid: dataset(valid, &tokenizer),
        test: dataset(test, &tokenizer),
        env,
        tokenizer,
    })
}

pub fn prepare_toy(bench: &ToyBenchmark, inference: &InferenceConfig) -> Result<Prepared> {
    prepare(
        bench.kg.clone(),
        bench.train.clone(),
        bench.valid.clone(),
        bench.test.clone(),
        inference,
    )
}

/// Trains embeddings of `kind` on the prepared graph.
pub fn embeddings(prep: &Prepared, cfg: &KgeTrainConfig, kind: ModelKind) -> Result<EmbeddingTable> {
    let mut c = cfg.clone();
    c.model = kind;
    if kind == ModelKind::ComplEx && c.regularization == 0.0 {
        c.regularization = 1e-3;
    }
    Ok(train_kge(&prep.env.kg, &c)?.table)
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub model: QaModel,
    pub train: TrainReport,
    pub report: EvalReport,
}

/// Trains on `prep.train` and evaluates on `prep.test`.
pub fn run(prep: &Prepared, kge: &EmbeddingTable, config: &QaConfig, test_subgraphs: Option<&[Subgraph]>) -> Result<RunResult> {
    let (model, train) = train_qa(&prep.env, kge.clone(), prep.tokenizer.clone(), &prep.train, config)?;
    let owned;
    let sgs = match test_subgraphs {
        Some(s) => s,
        None => {
            owned = subgraphs_for(&model, &prep.env, &prep.test)?;
            &owned
        }
    };
    let report = evaluate_with(&model, &prep.env, &prep.test, sgs, &config.inference)?;
    Ok(RunResult { model, train, report })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Variant {
    pub use_paths: bool,
    pub scoring: ScoringMode,
    pub features: PathFeatures,
}

impl Variant {
    pub const FULL: Variant = Variant {
        use_paths: true,
        scoring: ScoringMode::RotateScale,
        features: PathFeatures::Both,
    };

    pub fn name(&self) -> String {
        format!(
            "{}/{}/{}",
            if self.use_paths { "with_path" } else { "without_path" },
            self.scoring.as_str(),
            self.features.as_str()
        )
    }

    /// `with_path/rotate_scale/both` or any prefix-free subset of its parts,
    /// e.g. `without_path`, `rotate`, `textual_only`. Missing parts default
    /// to the full model.
    pub fn parse(s: &str) -> Result<Self> {
        let mut v = Variant::FULL;
        for part in s.split(['/', ',', '+']).map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "full" => v = Variant::FULL,
                "with_path" => v.use_paths = true,
                "without_path" => v.use_paths = false,
                other => {
                    if let Some(m) = ScoringMode::parse(other) {
                        v.scoring = m;
                    } else if let Some(f) = PathFeatures::parse(other) {
                        v.features = f;
                    } else {
                        return Err(Error::InvalidArgument(format!("unknown variant part {other:?}")));
                    }
                }
            }
        }
        Ok(v)
    }

    pub fn apply(&self, base: &QaConfig) -> QaConfig {
        let mut c = base.clone();
        c.use_paths = self.use_paths;
        c.scoring = self.scoring;
        c.path_features = self.features;
        c
    }

    pub fn kge_kind(&self) -> ModelKind {
        if self.scoring == ScoringMode::Complex {
            ModelKind::ComplEx
        } else {
            ModelKind::RotatE
        }
    }
}

/// The variants compared on the toy benchmark.
pub fn standard_variants() -> Vec<Variant> {
    let full = Variant::FULL;
    vec![
        full,
        Variant { use_paths: false, ..full },
        Variant { scoring: ScoringMode::Rotate, ..full },
        Variant { features: PathFeatures::TextualOnly, ..full },
        Variant { features: PathFeatures::StructuralOnly, ..full },
    ]
}

#[derive(Clone, Debug)]
pub struct AblationRow {
    pub variant: Variant,
    pub report: EvalReport,
    pub final_loss: f64,
}

/// Trains and evaluates every variant with the same seed and data. Embeddings
/// are trained once per kind and shared.
pub fn ablation_run(prep: &Prepared, base: &QaConfig, variants: &[Variant]) -> Result<Vec<AblationRow>> {
    if variants.is_empty() {
        return Err(Error::Empty("variant list".into()));
    }
    let mut tables: Vec<(ModelKind, EmbeddingTable)> = Vec::new();
    let mut rows = Vec::with_capacity(variants.len());
    let mut sgs: Option<Vec<Subgraph>> = None;
    for v in variants {
        let kind = v.kge_kind();
        if !tables.iter().any(|(k, _)| *k == kind) {
            tables.push((kind, embeddings(prep, &base.kge, kind)?));
        }
        let kge = &tables.iter().find(|(k, _)| *k == kind).expect("trained above").1;
        let cfg = v.apply(base);
        let r = run(prep, kge, &cfg, sgs.as_deref())?;
        if sgs.is_none() {
            sgs = Some(subgraphs_for(&r.model, &prep.env, &prep.test)?);
        }
        rows.push(AblationRow {
            variant: *v,
            final_loss: r.train.epoch_losses.last().copied().unwrap_or(f64::NAN),
            report: r.report,
        });
    }
    Ok(rows)
}

pub fn ablation_table(rows: &[AblationRow]) -> String {
    let buckets = bucket_union(rows.iter().map(|r| &r.report));
    let mut s = format!("variant\tall\t{}\n", buckets.join("\t"));
    for r in rows {
        let _ = write!(s, "{}\t{:.4}", r.variant.name(), r.report.hits_at_1);
        for b in &buckets {
            let _ = write!(s, "\t{:.4}", r.report.bucket_hits(b).unwrap_or(f64::NAN));
        }
        s.push('\n');
    }
    s
}

fn bucket_union<'a>(reports: impl Iterator<Item = &'a EvalReport>) -> Vec<String> {
    let mut v: Vec<String> = reports.flat_map(|r| r.buckets.keys().cloned()).collect();
    v.sort();
    v.dedup();
    v
}

/// Evaluates one trained model at each λ without retraining.
pub fn lambda_sweep(
    model: &QaModel,
    env: &QaEnv,
    dataset: &QaDataset,
    lambdas: &[f64],
    base: &InferenceConfig,
) -> Result<Vec<EvalReport>> {
    if lambdas.is_empty() {
        return Err(Error::Empty("lambda list".into()));
    }
    let sgs = subgraphs_for(model, env, dataset)?;
    lambdas
        .iter()
        .map(|&l| {
            let cfg = InferenceConfig { lambda: l, ..*base };
            evaluate_with(model, env, dataset, &sgs, &cfg)
        })
        .collect()
}

/// Long format: one row per (λ, bucket), `all` included.
pub fn sweep_table(reports: &[EvalReport]) -> String {
    let buckets = bucket_union(reports.iter());
    let mut s = String::from("lambda\tbucket\thits_at_1\tcount\n");
    for r in reports {
        let _ = writeln!(s, "{}\tall\t{:.4}\t{}", r.lambda, r.hits_at_1, r.count());
        for b in &buckets {
            let (c, n) = r.buckets.get(b).copied().unwrap_or((0, 0));
            let h = if n == 0 { f64::NAN } else { c as f64 / n as f64 };
            let _ = writeln!(s, "{}\t{b}\t{h:.4}\t{n}", r.lambda);
        }
    }
    s
}
