//! Two-stage ranking, topic aggregation and hits@1 evaluation.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::config::InferenceConfig;
use crate::error::{check_dim, Error, Result};
use crate::kg::EntityId;
use crate::model::{QaEnv, QaModel, QuestionState};
use crate::ppr::{ppr_subgraph_with, Subgraph};
use crate::predictor::{combine, ScoredCandidate};
use crate::qa::{QaDataset, QuestionInstance};

/// Work counters; the exhaustive baseline would build one bundle per
/// (topic, candidate) pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct InferenceStats {
    pub question_scores: usize,
    pub path_bundles: usize,
    pub path_scores: usize,
}

impl InferenceStats {
    pub fn add(&mut self, o: &InferenceStats) {
        self.question_scores += o.question_scores;
        self.path_bundles += o.path_bundles;
        self.path_scores += o.path_scores;
    }
}

/// Averages `s_q` over topics and `s_p` over the topics that have one, then
/// combines with `lambda`. Returns `(s_q, s_p, s)` per candidate.
pub fn aggregate_topics(per_topic: &[Vec<(f64, Option<f64>)>], lambda: f64) -> Result<Vec<(f64, Option<f64>, f64)>> {
    let first = per_topic.first().ok_or_else(|| Error::Empty("topic scores".into()))?;
    let n = first.len();
    for row in per_topic {
        check_dim(n, row.len())?;
    }
    let t = per_topic.len() as f64;
    (0..n)
        .map(|c| {
            let s_q = per_topic.iter().map(|row| row[c].0).sum::<f64>() / t;
            let ps: Vec<f64> = per_topic.iter().filter_map(|row| row[c].1).collect();
            let s_p = (!ps.is_empty()).then(|| ps.iter().sum::<f64>() / ps.len() as f64);
            Ok((s_q, s_p, combine(s_q, s_p, lambda)?))
        })
        .collect()
}

/// Subgraph entities, minus the topics when `exclude_topics`.
pub fn candidate_pool(question: &QuestionInstance, subgraph: &Subgraph, exclude_topics: bool) -> Vec<EntityId> {
    subgraph
        .entity_ids
        .iter()
        .copied()
        .filter(|e| !exclude_topics || question.topic_entities.binary_search(e).is_err())
        .collect()
}

fn by_score_then_id(a: &(EntityId, f64), b: &(EntityId, f64)) -> Ordering {
    b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0))
}

/// Per-topic `s_q` rows over `cands`.
fn question_scores(
    model: &QaModel,
    state: &QuestionState,
    topics: &[EntityId],
    cands: &[EntityId],
    stats: &mut InferenceStats,
) -> Result<Vec<Vec<f64>>> {
    topics
        .iter()
        .map(|&h| {
            stats.question_scores += cands.len();
            cands.iter().map(|&c| model.score_q(state, h, c)).collect()
        })
        .collect()
}

fn path_scores(
    model: &QaModel,
    env: &QaEnv,
    state: &QuestionState,
    topics: &[EntityId],
    c: EntityId,
    stats: &mut InferenceStats,
) -> Result<Vec<Option<f64>>> {
    topics
        .iter()
        .map(|&h| {
            if !model.config.use_paths {
                return Ok(None);
            }
            stats.path_bundles += 1;
            match model.path_view(env, state, h, c)? {
                Some(v) => {
                    stats.path_scores += 1;
                    Ok(Some(model.score_p(&v, h, c)?))
                }
                None => Ok(None),
            }
        })
        .collect()
}

fn rank(
    model: &QaModel,
    env: &QaEnv,
    question: &QuestionInstance,
    subgraph: &Subgraph,
    config: &InferenceConfig,
    k: Option<usize>,
    stats: &mut InferenceStats,
) -> Result<Vec<ScoredCandidate>> {
    config.validate()?;
    if subgraph.is_empty() {
        return Err(Error::Empty("subgraph".into()));
    }
    let cands = candidate_pool(question, subgraph, model.config.exclude_topics);
    let state = model.question_state(&question.tokens)?;
    let topics = &question.topic_entities;
    let rows = question_scores(model, &state, topics, &cands, stats)?;
    let t = topics.len() as f64;
    let mean: Vec<f64> = (0..cands.len())
        .map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / t)
        .collect();
    let mut order: Vec<(usize, f64)> = (0..cands.len()).zip(mean.iter().copied()).collect();
    order.sort_by(|a, b| by_score_then_id(&(cands[a.0], a.1), &(cands[b.0], b.1)));
    let k = k.unwrap_or(order.len()).min(order.len());
    let (recalled, rest) = order.split_at(k);

    let mut per_topic: Vec<Vec<(f64, Option<f64>)>> = vec![Vec::with_capacity(k); topics.len()];
    for &(ci, _) in recalled {
        let sp = path_scores(model, env, &state, topics, cands[ci], stats)?;
        for (ti, row) in per_topic.iter_mut().enumerate() {
            row.push((rows[ti][ci], sp[ti]));
        }
    }
    let agg = if recalled.is_empty() { Vec::new() } else { aggregate_topics(&per_topic, config.lambda)? };
    let mut top: Vec<ScoredCandidate> = recalled
        .iter()
        .zip(agg)
        .map(|(&(ci, _), (s_q, s_p, s))| ScoredCandidate {
            entity: cands[ci],
            s_q,
            s_p,
            s,
        })
        .collect();
    top.sort_by(|a, b| by_score_then_id(&(a.entity, a.s), &(b.entity, b.s)));
    top.extend(rest.iter().map(|&(ci, s_q)| ScoredCandidate {
        entity: cands[ci],
        s_q,
        s_p: None,
        s: s_q,
    }));
    Ok(top)
}

/// Stage 1 ranks every candidate by `s_q`; stage 2 adds `s_p` for the top
/// `stage1_k` and re-ranks them by the combined score. Recalled candidates
/// come first, the rest follow in stage-1 order with `s = s_q`.
pub fn two_stage_infer(
    model: &QaModel,
    env: &QaEnv,
    question: &QuestionInstance,
    subgraph: &Subgraph,
    config: &InferenceConfig,
    stats: &mut InferenceStats,
) -> Result<Vec<ScoredCandidate>> {
    rank(model, env, question, subgraph, config, Some(config.stage1_k), stats)
}

/// Path scores for every candidate, ranked by the combined score.
pub fn exhaustive_infer(
    model: &QaModel,
    env: &QaEnv,
    question: &QuestionInstance,
    subgraph: &Subgraph,
    config: &InferenceConfig,
    stats: &mut InferenceStats,
) -> Result<Vec<ScoredCandidate>> {
    rank(model, env, question, subgraph, config, None, stats)
}

pub fn hits_at_1(predictions: &[Option<EntityId>], gold: &[Vec<EntityId>]) -> Result<f64> {
    check_dim(predictions.len(), gold.len())?;
    if predictions.is_empty() {
        return Err(Error::Empty("predictions".into()));
    }
    let hits = predictions
        .iter()
        .zip(gold)
        .filter(|(p, g)| p.is_some_and(|p| g.contains(&p)))
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub index: usize,
    pub bucket: String,
    pub entity: Option<EntityId>,
    pub score: f64,
    pub correct: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub hits_at_1: f64,
    /// bucket → (correct, total)
    pub buckets: BTreeMap<String, (usize, usize)>,
    pub predictions: Vec<Prediction>,
    pub stats: InferenceStats,
    /// Bundles an exhaustive pass would have built.
    pub exhaustive_bundles: usize,
    pub lambda: f64,
    pub stage1_k: usize,
}

pub fn bucket_name(hop: Option<u32>) -> String {
    match hop {
        Some(h) => format!("{h}-hop"),
        None => "unannotated".into(),
    }
}

impl EvalReport {
    pub fn bucket_hits(&self, name: &str) -> Option<f64> {
        self.buckets
            .get(name)
            .filter(|(_, n)| *n > 0)
            .map(|&(c, n)| c as f64 / n as f64)
    }

    pub fn count(&self) -> usize {
        self.predictions.len()
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "hits@1 {:.4} over {} questions (lambda {}, k {})\n",
            self.hits_at_1,
            self.count(),
            self.lambda,
            self.stage1_k
        );
        for (b, (c, n)) in &self.buckets {
            let _ = writeln!(s, "  {b}: {:.4} ({c}/{n})", *c as f64 / *n as f64);
        }
        let _ = writeln!(
            s,
            "  path bundles {} (exhaustive {}), path scores {}, question scores {}",
            self.stats.path_bundles, self.exhaustive_bundles, self.stats.path_scores, self.stats.question_scores
        );
        s
    }

    /// One row per question, then `#`-prefixed totals.
    pub fn to_tsv(&self, entity_label: impl Fn(EntityId) -> String) -> String {
        let mut s = String::from("index\tbucket\tprediction\tscore\tcorrect\n");
        for p in &self.predictions {
            let label = p.entity.map(&entity_label).unwrap_or_default();
            let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}", p.index, p.bucket, label, p.score, p.correct as u8);
        }
        let _ = writeln!(s, "#overall\t{}\t{}", self.hits_at_1, self.count());
        for (b, (c, n)) in &self.buckets {
            let _ = writeln!(s, "#{b}\t{}\t{n}", *c as f64 / *n as f64);
        }
        s
    }

    pub fn write(&self, path: &Path, entity_label: impl Fn(EntityId) -> String) -> Result<()> {
        std::fs::write(path, self.to_tsv(entity_label))?;
        Ok(())
    }
}

/// PPR subgraph around the question's topics.
pub fn question_subgraph(model: &QaModel, env: &QaEnv, q: &QuestionInstance) -> Result<Subgraph> {
    ppr_subgraph_with(&env.kg, &q.topic_entities, &model.config.ppr)
}

/// Evaluates every question with precomputed subgraphs.
pub fn evaluate_with(
    model: &QaModel,
    env: &QaEnv,
    dataset: &QaDataset,
    subgraphs: &[Subgraph],
    config: &InferenceConfig,
) -> Result<EvalReport> {
    if dataset.instances.is_empty() {
        return Err(Error::Empty("dataset".into()));
    }
    check_dim(dataset.instances.len(), subgraphs.len())?;
    let mut stats = InferenceStats::default();
    let mut preds = Vec::with_capacity(dataset.instances.len());
    let mut buckets: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut exhaustive = 0;
    for (i, (q, sg)) in dataset.instances.iter().zip(subgraphs).enumerate() {
        let ranked = two_stage_infer(model, env, q, sg, config, &mut stats)?;
        exhaustive += q.topic_entities.len() * candidate_pool(q, sg, model.config.exclude_topics).len();
        let top = ranked.first();
        let correct = top.is_some_and(|c| q.is_answer(c.entity));
        let bucket = bucket_name(q.hop_annotation);
        let e = buckets.entry(bucket.clone()).or_default();
        e.0 += correct as usize;
        e.1 += 1;
        preds.push(Prediction {
            index: i,
            bucket,
            entity: top.map(|c| c.entity),
            score: top.map_or(f64::NEG_INFINITY, |c| c.s),
            correct,
        });
    }
    let gold: Vec<Vec<EntityId>> = dataset.instances.iter().map(|q| q.answers.clone()).collect();
    let top1: Vec<Option<EntityId>> = preds.iter().map(|p| p.entity).collect();
    Ok(EvalReport {
        hits_at_1: hits_at_1(&top1, &gold)?,
        buckets,
        predictions: preds,
        stats,
        exhaustive_bundles: if model.config.use_paths { exhaustive } else { 0 },
        lambda: config.lambda,
        stage1_k: config.stage1_k,
    })
}

pub fn subgraphs_for(model: &QaModel, env: &QaEnv, dataset: &QaDataset) -> Result<Vec<Subgraph>> {
    dataset.instances.iter().map(|q| question_subgraph(model, env, q)).collect()
}

pub fn evaluate(model: &QaModel, env: &QaEnv, dataset: &QaDataset, config: &InferenceConfig) -> Result<EvalReport> {
    let sgs = subgraphs_for(model, env, dataset)?;
    evaluate_with(model, env, dataset, &sgs, config)
}
