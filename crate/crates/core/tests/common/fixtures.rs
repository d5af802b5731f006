//! Small trained models on the synthetic benchmark.

use terp::config::QaConfig;
use terp::experiment::{embeddings, prepare_toy, toy_config, Prepared};
use terp::kge::{EmbeddingTable, ModelKind};
use terp::model::QaModel;
use terp::toy::{generate_toy, ToyConfig};
use terp::train::{train_qa, TrainReport};

/// The toy settings with short schedules, for suites that only need a
/// partially trained model.
pub fn quick_config(seed: u64) -> QaConfig {
    let mut c = toy_config(seed);
    c.epochs = 3;
    c.kge.epochs = 40;
    c.kge.dim = 16;
    c
}

pub fn toy(seed: u64, toy_cfg: ToyConfig, cfg: &QaConfig) -> Prepared {
    let bench = generate_toy(&ToyConfig { seed, ..toy_cfg }).unwrap();
    prepare_toy(&bench, &cfg.inference).unwrap()
}

pub fn kge(prep: &Prepared, cfg: &QaConfig) -> EmbeddingTable {
    let kind = if cfg.scoring == terp::predictor::ScoringMode::Complex { ModelKind::ComplEx } else { ModelKind::RotatE };
    embeddings(prep, &cfg.kge, kind).unwrap()
}

pub fn trained(prep: &Prepared, table: &EmbeddingTable, cfg: &QaConfig) -> (QaModel, TrainReport) {
    train_qa(&prep.env, table.clone(), prep.tokenizer.clone(), &prep.train, cfg).unwrap()
}

/// Larger graph so PPR subgraphs can hold 500 entities.
pub fn big_toy() -> ToyConfig {
    ToyConfig {
        families: 48,
        cities: 24,
        companies: 24,
        questions_per_hop: 500,
        ..ToyConfig::default()
    }
}
