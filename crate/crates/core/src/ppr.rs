//! Personalized PageRank subgraph retrieval.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PprConfig {
    pub restart_prob: f64,
    pub iterations: usize,
    pub max_entities: usize,
}

impl Default for PprConfig {
    fn default() -> Self {
        Self {
            restart_prob: 0.8,
            iterations: 20,
            max_entities: 2000,
        }
    }
}

/// Question-specific candidate set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subgraph {
    /// Ascending entity ids.
    pub entity_ids: Vec<EntityId>,
    /// Whether every gold answer is inside; `None` until checked.
    pub recall_flag: Option<bool>,
}

impl Subgraph {
    pub fn new(mut entity_ids: Vec<EntityId>) -> Self {
        entity_ids.sort_unstable();
        entity_ids.dedup();
        Self {
            entity_ids,
            recall_flag: None,
        }
    }

    pub fn full(kg: &KnowledgeGraph) -> Self {
        Self::new((0..kg.num_entities()).collect())
    }

    pub fn len(&self) -> usize {
        self.entity_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entity_ids.is_empty()
    }

    pub fn contains(&self, e: EntityId) -> bool {
        self.entity_ids.binary_search(&e).is_ok()
    }

    pub fn check_recall(&mut self, answers: &[EntityId]) -> bool {
        let hit = answers.iter().all(|a| self.contains(*a));
        self.recall_flag = Some(hit);
        hit
    }
}

/// Scores plus the total mass after each power-iteration step.
#[derive(Clone, Debug)]
pub struct PprRun {
    pub scores: Vec<f64>,
    pub mass_trace: Vec<f64>,
}

/// Power iteration on the undirected graph with uniform restart on `seeds`.
///
/// Mass on isolated entities is returned to the seeds so the vector stays
/// a distribution.
pub fn personalized_pagerank(
    kg: &KnowledgeGraph,
    seeds: &[EntityId],
    restart_prob: f64,
    iterations: usize,
) -> Result<PprRun> {
    if seeds.is_empty() {
        return Err(Error::Empty("PPR seed set".into()));
    }
    if !(0.0..=1.0).contains(&restart_prob) {
        return Err(Error::InvalidArgument(format!(
            "restart probability {restart_prob} outside [0, 1]"
        )));
    }
    let n = kg.num_entities();
    let unique: BTreeSet<EntityId> = seeds.iter().copied().collect();
    if let Some(&bad) = unique.iter().find(|&&s| s >= n) {
        return Err(Error::UnknownId(format!("seed entity {bad}")));
    }
    let mut restart = vec![0.0; n];
    let share = 1.0 / unique.len() as f64;
    for &s in &unique {
        restart[s] = share;
    }

    let mut scores = restart.clone();
    let mut next = vec![0.0; n];
    let mut mass_trace = Vec::with_capacity(iterations);
    let walk = 1.0 - restart_prob;
    for _ in 0..iterations {
        next.iter_mut().for_each(|x| *x = 0.0);
        let mut dangling = 0.0;
        for u in 0..n {
            let mass = scores[u];
            if mass == 0.0 {
                continue;
            }
            let deg = kg.undirected_degree(u);
            if deg == 0 {
                dangling += mass;
                continue;
            }
            let w = mass / deg as f64;
            for &(_, v) in kg.out_edges(u).iter().chain(kg.in_edges(u)) {
                next[v] += w;
            }
        }
        for u in 0..n {
            next[u] = restart_prob * restart[u] + walk * (next[u] + dangling * restart[u]);
        }
        std::mem::swap(&mut scores, &mut next);
        mass_trace.push(scores.iter().sum());
    }
    Ok(PprRun { scores, mass_trace })
}

/// Top `max_entities` entities by PPR score, seeds always kept, ties by id.
pub fn ppr_subgraph(
    kg: &KnowledgeGraph,
    seeds: &[EntityId],
    restart_prob: f64,
    max_entities: usize,
    iterations: usize,
) -> Result<Subgraph> {
    if max_entities == 0 {
        return Err(Error::InvalidArgument("max_entities must be positive".into()));
    }
    let run = personalized_pagerank(kg, seeds, restart_prob, iterations)?;
    let seed_set: BTreeSet<EntityId> = seeds.iter().copied().collect();
    let mut picked: Vec<EntityId> = seed_set.iter().copied().collect();
    let mut rest: Vec<EntityId> = (0..kg.num_entities())
        .filter(|e| !seed_set.contains(e))
        .collect();
    rest.sort_by(|&a, &b| run.scores[b].total_cmp(&run.scores[a]).then(a.cmp(&b)));
    let room = max_entities.saturating_sub(picked.len());
    picked.extend(rest.into_iter().take(room));
    Ok(Subgraph::new(picked))
}

pub fn ppr_subgraph_with(kg: &KnowledgeGraph, seeds: &[EntityId], cfg: &PprConfig) -> Result<Subgraph> {
    ppr_subgraph(kg, seeds, cfg.restart_prob, cfg.max_entities, cfg.iterations)
}
