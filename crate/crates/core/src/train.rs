//! QA training loop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::QaConfig;
use crate::error::{Error, Result};
use crate::kge::EmbeddingTable;
use crate::model::{Example, QaEnv, QaModel};
use crate::nn::{Adam, AdamConfig, Params};
use crate::ppr::{ppr_subgraph_with, Subgraph};
use crate::predictor::sample_candidates_for;
use crate::qa::QaDataset;
use crate::text::Tokenizer;

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
    pub examples_per_epoch: usize,
}

/// Builds a model and trains it; see [`train_model`].
pub fn train_qa(
    env: &QaEnv,
    embeddings: EmbeddingTable,
    tokenizer: Tokenizer,
    dataset: &QaDataset,
    config: &QaConfig,
) -> Result<(QaModel, TrainReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = QaModel::new(config.clone(), tokenizer, embeddings, &mut rng)?;
    let report = train_model(&mut model, env, dataset, &mut rng)?;
    Ok((model, report))
}

/// Every gold answer of every question is one example per epoch: the gold
/// plus `candidates − 1` negatives from the question's PPR subgraph.
/// Gradients are averaged over `batch_size` examples per Adam step.
pub fn train_model(model: &mut QaModel, env: &QaEnv, dataset: &QaDataset, rng: &mut ChaCha8Rng) -> Result<TrainReport> {
    if dataset.instances.is_empty() {
        return Err(Error::Empty("training dataset".into()));
    }
    let cfg = model.config.clone();
    let subgraphs: Vec<Subgraph> = dataset
        .instances
        .iter()
        .map(|q| ppr_subgraph_with(&env.kg, &q.topic_entities, &cfg.ppr))
        .collect::<Result<_>>()?;
    let mut examples: Vec<(usize, usize)> = dataset
        .instances
        .iter()
        .enumerate()
        .flat_map(|(i, q)| q.answers.iter().map(move |&a| (i, a)))
        .collect();
    let mut opt = Adam::new(AdamConfig {
        learning_rate: cfg.learning_rate,
        beta1: cfg.beta1,
        beta2: cfg.beta2,
        ..AdamConfig::default()
    });
    let mut grads = model.grads();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        examples.shuffle(rng);
        let mut total = 0.0;
        for batch in examples.chunks(cfg.batch_size) {
            grads.zero();
            let scale = 1.0 / batch.len() as f64;
            for &(qi, answer) in batch {
                let q = &dataset.instances[qi];
                let exclude: &[usize] = if cfg.exclude_topics { &q.topic_entities } else { &[] };
                let cands = sample_candidates_for(&subgraphs[qi], answer, &q.answers, exclude, cfg.candidates, rng)?;
                let ex = Example {
                    tokens: &q.tokens,
                    topics: &q.topic_entities,
                    candidates: &cands,
                    target: 0,
                };
                total += model.example_loss(env, &ex, scale, Some(&mut grads))?;
            }
            let mut g = grads.params.slices();
            if !model.kge.frozen {
                g.push(&grads.kge.entity);
                g.push(&grads.kge.relation);
            }
            opt.update(model.trainable_mut(), g);
        }
        epoch_losses.push(total / examples.len() as f64);
    }
    Ok(TrainReport {
        epoch_losses,
        examples_per_epoch: examples.len(),
    })
}
