//! Saves a trained model, reloads it and answers a new question.

use terp::experiment::{embeddings, prepare_toy, run, toy_config};
use terp::infer::{question_subgraph, two_stage_infer, InferenceStats};
use terp::kge::ModelKind;
use terp::model::QaModel;
use terp::qa::QuestionInstance;
use terp::toy::{generate_toy, ToyConfig};

fn main() -> anyhow::Result<()> {
    let mut cfg = toy_config(0);
    cfg.epochs = 5;
    let prep = prepare_toy(&generate_toy(&ToyConfig::default())?, &cfg.inference)?;
    let kge = embeddings(&prep, &cfg.kge, ModelKind::RotatE)?;
    let model = run(&prep, &kge, &cfg, None)?.model;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("qa.model");
    model.save(&path)?;
    let back = QaModel::load(&path)?;
    println!("checkpoint: {} bytes", std::fs::metadata(&path)?.len());

    let kg = &prep.env.kg;
    let topic = prep.test.instances[0].topic_entities[0];
    let text = format!("who is the grandfather of {}", kg.entity_label(topic));
    let mut q = QuestionInstance::new(text, [topic], [topic], None)?;
    q.tokenize(&back.tokenizer);
    q.answers.clear();
    let sg = question_subgraph(&back, &prep.env, &q)?;
    let ranked = two_stage_infer(&back, &prep.env, &q, &sg, &cfg.inference, &mut InferenceStats::default())?;
    println!("{}", q.text);
    for c in ranked.iter().take(3) {
        println!("  {} ({:.3})", kg.entity_label(c.entity), c.s);
    }
    Ok(())
}
