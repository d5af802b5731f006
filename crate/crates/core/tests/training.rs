mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::fixtures::{kge, quick_config, toy, trained};
use terp::infer::evaluate;
use terp::model::QaModel;
use terp::nn::Params;
use terp::toy::ToyConfig;
use terp::train::train_qa;

#[test]
fn zero_epochs_leaves_the_initialisation() {
    let mut cfg = quick_config(0);
    cfg.epochs = 0;
    let prep = toy(0, ToyConfig::default(), &cfg);
    let table = kge(&prep, &cfg);
    let (model, report) = trained(&prep, &table, &cfg);
    assert!(report.epoch_losses.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let fresh = QaModel::new(cfg.clone(), prep.tokenizer.clone(), table, &mut rng).unwrap();
    assert_eq!(model.params, fresh.params);
    assert_eq!(model.kge, fresh.kge);
}

#[test]
fn frozen_embeddings_are_bit_identical() {
    let mut cfg = quick_config(0);
    cfg.epochs = 2;
    cfg.freeze_embeddings = true;
    let prep = toy(0, ToyConfig::default(), &cfg);
    let table = kge(&prep, &cfg);
    let (model, _) = trained(&prep, &table, &cfg);
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&model.kge.entity), bits(&table.entity));
    assert_eq!(bits(&model.kge.relation), bits(&table.relation));

    cfg.freeze_embeddings = false;
    let (tuned, _) = trained(&prep, &table, &cfg);
    assert_ne!(bits(&tuned.kge.entity), bits(&table.entity));
}

#[test]
fn empty_dataset_is_an_error() {
    let cfg = quick_config(0);
    let mut prep = toy(0, ToyConfig::default(), &cfg);
    let table = kge(&prep, &cfg);
    prep.train.instances.clear();
    assert!(train_qa(&prep.env, table, prep.tokenizer.clone(), &prep.train, &cfg).is_err());
}

#[test]
fn runs_are_deterministic_and_checkpoints_round_trip() {
    let cfg = quick_config(3);
    let prep = toy(3, ToyConfig::default(), &cfg);
    let table = kge(&prep, &cfg);
    assert_eq!(table, kge(&prep, &cfg));
    let (a, la) = trained(&prep, &table, &cfg);
    let (b, lb) = trained(&prep, &table, &cfg);
    assert_eq!(format!("{:?}", la.epoch_losses), format!("{:?}", lb.epoch_losses));
    let ra = evaluate(&a, &prep.env, &prep.test, &cfg.inference).unwrap();
    let rb = evaluate(&b, &prep.env, &prep.test, &cfg.inference).unwrap();
    assert_eq!(format!("{ra:?}"), format!("{rb:?}"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("qa.bin");
    a.save(&path).unwrap();
    let back = QaModel::load(&path).unwrap();
    assert_eq!(back.params.slices(), a.params.slices());
    assert_eq!(back.config, a.config);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = prep.env.kg.num_entities();
    let q = &prep.test.instances[0];
    let (sa, sb) = (a.question_state(&q.tokens).unwrap(), back.question_state(&q.tokens).unwrap());
    for _ in 0..100 {
        let (h, c) = (rng.gen_range(0..n), rng.gen_range(0..n));
        assert_eq!(a.score_q(&sa, h, c).unwrap().to_bits(), back.score_q(&sb, h, c).unwrap().to_bits());
        let pa = a.path_view(&prep.env, &sa, h, c).unwrap();
        let pb = back.path_view(&prep.env, &sb, h, c).unwrap();
        assert_eq!(pa.is_some(), pb.is_some());
        if let (Some(pa), Some(pb)) = (pa, pb) {
            assert_eq!(a.score_p(&pa, h, c).unwrap().to_bits(), back.score_p(&pb, h, c).unwrap().to_bits());
        }
    }
}
