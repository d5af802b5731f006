//! Shortest relation-path enumeration between entity pairs.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, RelationId};

/// Relation-label sequence of a walk; inverse steps use inverse relation ids.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationPath {
    pub steps: Vec<RelationId>,
}

impl RelationPath {
    pub fn new(steps: Vec<RelationId>) -> Self {
        Self { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Whether the steps can be walked from `source` to `target`.
    pub fn realizes(&self, kg: &KnowledgeGraph, source: EntityId, target: EntityId) -> bool {
        let mut frontier = BTreeSet::from([source]);
        for &r in &self.steps {
            frontier = frontier
                .iter()
                .flat_map(|&u| kg.out_edges(u).iter().filter(|e| e.0 == r).map(|e| e.1))
                .collect();
        }
        frontier.contains(&target)
    }

    pub fn describe(&self, kg: &KnowledgeGraph) -> String {
        self.steps
            .iter()
            .map(|&r| kg.relation_label(r))
            .collect::<Vec<_>>()
            .join(" -> ")
    }
}

/// Distances to `target` along directed edges, limited to `max_len`.
fn distances_to(kg: &KnowledgeGraph, target: EntityId, max_len: usize) -> HashMap<EntityId, usize> {
    let mut dist = HashMap::from([(target, 0usize)]);
    let mut queue = VecDeque::from([target]);
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        if d == max_len {
            continue;
        }
        for &(_, u) in kg.in_edges(v) {
            dist.entry(u).or_insert_with(|| {
                queue.push_back(u);
                d + 1
            });
        }
    }
    dist
}

/// All distinct relation sequences of minimal-length walks from `h` to `c`.
///
/// Returns at most `max_paths` sequences in lexicographic relation-id order,
/// and nothing when `h == c` or `c` is farther than `max_len`.
pub fn enumerate_shortest_paths(
    kg: &KnowledgeGraph,
    h: EntityId,
    c: EntityId,
    max_len: usize,
    max_paths: usize,
) -> Result<Vec<RelationPath>> {
    let n = kg.num_entities();
    if h >= n || c >= n {
        return Err(Error::UnknownId(format!("entity pair ({h}, {c})")));
    }
    if max_len == 0 || max_paths == 0 {
        return Err(Error::InvalidArgument(
            "max_len and max_paths must be positive".into(),
        ));
    }
    if h == c {
        return Ok(Vec::new());
    }
    let dist = distances_to(kg, c, max_len);
    let Some(&len) = dist.get(&h) else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(len);
    expand(kg, &dist, &BTreeSet::from([h]), len, &mut prefix, max_paths, &mut out);
    Ok(out)
}

// Depth-first over label sequences. `frontier` holds every node reachable by
// `prefix` that still lies on a shortest walk, so each label sequence is
// visited once regardless of how many node walks realise it.
fn expand(
    kg: &KnowledgeGraph,
    dist: &HashMap<EntityId, usize>,
    frontier: &BTreeSet<EntityId>,
    remaining: usize,
    prefix: &mut Vec<RelationId>,
    max_paths: usize,
    out: &mut Vec<RelationPath>,
) {
    if remaining == 0 {
        out.push(RelationPath::new(prefix.clone()));
        return;
    }
    let mut by_relation: BTreeMap<RelationId, BTreeSet<EntityId>> = BTreeMap::new();
    for &u in frontier {
        for &(r, v) in kg.out_edges(u) {
            if dist.get(&v) == Some(&(remaining - 1)) {
                by_relation.entry(r).or_default().insert(v);
            }
        }
    }
    for (r, next) in by_relation {
        if out.len() >= max_paths {
            return;
        }
        prefix.push(r);
        expand(kg, dist, &next, remaining - 1, prefix, max_paths, out);
        prefix.pop();
    }
}

/// Memoized shortest paths for one graph version.
#[derive(Debug)]
pub struct PathCache {
    graph_hash: u64,
    max_len: usize,
    max_paths: usize,
    map: RwLock<HashMap<(EntityId, EntityId), Arc<Vec<RelationPath>>>>,
}

impl PathCache {
    pub fn new(kg: &KnowledgeGraph, max_len: usize, max_paths: usize) -> Self {
        Self {
            graph_hash: kg.content_hash(),
            max_len,
            max_paths,
            map: RwLock::new(HashMap::new()),
        }
    }

    pub fn graph_hash(&self) -> u64 {
        self.graph_hash
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn max_paths(&self) -> usize {
        self.max_paths
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("path cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `kg` must be the graph this cache was built for.
    pub fn get(&self, kg: &KnowledgeGraph, h: EntityId, c: EntityId) -> Result<Arc<Vec<RelationPath>>> {
        if let Some(p) = self.map.read().expect("path cache lock").get(&(h, c)) {
            return Ok(Arc::clone(p));
        }
        debug_assert_eq!(kg.content_hash(), self.graph_hash, "path cache used with a different graph");
        let paths = Arc::new(enumerate_shortest_paths(kg, h, c, self.max_len, self.max_paths)?);
        self.map
            .write()
            .expect("path cache lock")
            .entry((h, c))
            .or_insert_with(|| Arc::clone(&paths));
        Ok(paths)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diamond() -> KnowledgeGraph {
        KnowledgeGraph::from_labeled([("h", "r1", "a"), ("a", "r2", "c"), ("h", "r3", "b"), ("b", "r4", "c")]).unwrap()
    }

    #[test]
    fn direct_and_parallel_edges() {
        let kg = KnowledgeGraph::from_labeled([("h", "r", "c"), ("h", "s", "c"), ("h", "r", "x"), ("x", "r", "c")]).unwrap();
        let p = enumerate_shortest_paths(&kg, 0, 1, 3, 32).unwrap();
        assert_eq!(p, vec![RelationPath::new(vec![0]), RelationPath::new(vec![1])]);
    }

    #[test]
    fn diamond_has_two_paths() {
        let kg = diamond();
        let p = enumerate_shortest_paths(&kg, 0, 2, 3, 32).unwrap();
        assert_eq!(p, vec![RelationPath::new(vec![0, 1]), RelationPath::new(vec![2, 3])]);
        for path in &p {
            assert!(path.realizes(&kg, 0, 2));
        }
    }

    #[test]
    fn unreachable_and_self() {
        let kg = diamond();
        assert!(enumerate_shortest_paths(&kg, 2, 0, 3, 32).unwrap().is_empty());
        assert!(enumerate_shortest_paths(&kg, 0, 0, 3, 32).unwrap().is_empty());
        assert!(enumerate_shortest_paths(&kg, 0, 2, 1, 32).unwrap().is_empty());
        assert!(enumerate_shortest_paths(&kg, 0, 99, 3, 32).is_err());
    }

    #[test]
    fn inverse_edges_open_upstream_paths() {
        let kg = diamond().add_inverse_relations().unwrap();
        let p = enumerate_shortest_paths(&kg, 2, 0, 3, 32).unwrap();
        assert_eq!(p.len(), 2);
        assert!(p.iter().all(|x| x.len() == 2 && x.steps.iter().all(|&r| r >= 4)));
    }

    #[test]
    fn cap_keeps_lexicographic_prefix() {
        let kg = diamond();
        let p = enumerate_shortest_paths(&kg, 0, 2, 3, 1).unwrap();
        assert_eq!(p, vec![RelationPath::new(vec![0, 1])]);
    }

    #[test]
    fn cache_returns_same_paths() {
        let kg = diamond();
        let cache = PathCache::new(&kg, 3, 32);
        let a = cache.get(&kg, 0, 2).unwrap();
        let b = cache.get(&kg, 0, 2).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.len(), 1);
    }
}
