//! Two-stage inference versus scoring every candidate with the path view.

use terp::config::InferenceConfig;
use terp::experiment::{embeddings, prepare_toy, run, toy_config};
use terp::infer::{exhaustive_infer, question_subgraph, two_stage_infer, InferenceStats};
use terp::kge::ModelKind;
use terp::toy::{generate_toy, ToyConfig};

fn main() -> anyhow::Result<()> {
    let cfg = toy_config(0);
    let prep = prepare_toy(&generate_toy(&ToyConfig::default())?, &cfg.inference)?;
    let kge = embeddings(&prep, &cfg.kge, ModelKind::RotatE)?;
    let model = run(&prep, &kge, &cfg, None)?.model;
    let kg = &prep.env.kg;

    for k in [5, 15, 50] {
        let inf = InferenceConfig { stage1_k: k, ..cfg.inference };
        let (mut two, mut all) = (InferenceStats::default(), InferenceStats::default());
        let mut agree = 0;
        for q in &prep.test.instances {
            let sg = question_subgraph(&model, &prep.env, q)?;
            let a = two_stage_infer(&model, &prep.env, q, &sg, &inf, &mut two)?;
            let b = exhaustive_infer(&model, &prep.env, q, &sg, &inf, &mut all)?;
            agree += (a[0].entity == b[0].entity) as usize;
        }
        println!(
            "k={k:<3} bundles {:>5} vs {:>5}, path scores {:>5}, top-1 agreement {agree}/{}",
            two.path_bundles,
            all.path_bundles,
            two.path_scores,
            prep.test.instances.len()
        );
    }

    let q = &prep.test.instances[0];
    let sg = question_subgraph(&model, &prep.env, q)?;
    let ranked = two_stage_infer(&model, &prep.env, q, &sg, &cfg.inference, &mut InferenceStats::default())?;
    println!("{}", q.text);
    for c in ranked.iter().take(5) {
        println!("  {:<16} s={:.3} s_q={:.3} s_p={:?}", kg.entity_label(c.entity), c.s, c.s_q, c.s_p);
    }
    Ok(())
}
