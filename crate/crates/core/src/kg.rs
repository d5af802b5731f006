//! Triple storage, vocabularies, and graph-level transformations.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type EntityId = usize;
pub type RelationId = usize;

/// Suffix appended to a relation label to name its inverse.
pub const REVERSED_SUFFIX: &str = " (reversed)";

/// Bidirectional label ↔ dense id map, ids assigned in first-appearance order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocab {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Self::new();
        for l in labels {
            v.intern(l.into());
        }
        v
    }

    /// Returns the id of `label`, inserting it if new.
    pub fn intern(&mut self, label: impl Into<String>) -> usize {
        let label = label.into();
        if let Some(&id) = self.index.get(&label) {
            return id;
        }
        let id = self.labels.len();
        self.index.insert(label.clone(), id);
        self.labels.push(label);
        id
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: EntityId, relation: RelationId, tail: EntityId) -> Self {
        Self {
            head,
            relation,
            tail,
        }
    }
}

/// Immutable directed multigraph over entity and relation vocabularies.
#[derive(Clone, Debug)]
pub struct KnowledgeGraph {
    entities: Vocab,
    relations: Vocab,
    triples: Vec<Triple>,
    out_adj: Vec<Vec<(RelationId, EntityId)>>,
    in_adj: Vec<Vec<(RelationId, EntityId)>>,
    /// `Some(n)` once inverse relations were added: ids `n..2n` invert `0..n`.
    base_relations: Option<usize>,
}

impl KnowledgeGraph {
    /// Builds a graph, dropping duplicate triples (first occurrence kept).
    pub fn new(entities: Vocab, relations: Vocab, triples: Vec<Triple>) -> Result<Self> {
        Self::build(entities, relations, triples, None)
    }

    fn build(
        entities: Vocab,
        relations: Vocab,
        triples: Vec<Triple>,
        base_relations: Option<usize>,
    ) -> Result<Self> {
        let mut seen = HashSet::with_capacity(triples.len());
        let mut unique = Vec::with_capacity(triples.len());
        for t in triples {
            if t.head >= entities.len() || t.tail >= entities.len() {
                return Err(Error::UnknownId(format!("entity in {t:?}")));
            }
            if t.relation >= relations.len() {
                return Err(Error::UnknownId(format!("relation in {t:?}")));
            }
            if seen.insert(t) {
                unique.push(t);
            }
        }
        let n = entities.len();
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for t in &unique {
            out_adj[t.head].push((t.relation, t.tail));
            in_adj[t.tail].push((t.relation, t.head));
        }
        for adj in out_adj.iter_mut().chain(in_adj.iter_mut()) {
            adj.sort_unstable();
        }
        Ok(Self {
            entities,
            relations,
            triples: unique,
            out_adj,
            in_adj,
            base_relations,
        })
    }

    /// Builds from string triples, assigning ids in first-appearance order.
    pub fn from_labeled<'a, I>(triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str, &'a str)>,
    {
        let mut entities = Vocab::new();
        let mut relations = Vocab::new();
        let mut ts = Vec::new();
        for (h, r, t) in triples {
            let h = entities.intern(h);
            let r = relations.intern(r);
            let t = entities.intern(t);
            ts.push(Triple::new(h, r, t));
        }
        Self::new(entities, relations, ts)
    }

    pub fn entities(&self) -> &Vocab {
        &self.entities
    }

    pub fn relations(&self) -> &Vocab {
        &self.relations
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn out_edges(&self, e: EntityId) -> &[(RelationId, EntityId)] {
        &self.out_adj[e]
    }

    pub fn in_edges(&self, e: EntityId) -> &[(RelationId, EntityId)] {
        &self.in_adj[e]
    }

    pub fn is_augmented(&self) -> bool {
        self.base_relations.is_some()
    }

    /// Number of forward (non-inverse) relations.
    pub fn num_base_relations(&self) -> usize {
        self.base_relations.unwrap_or(self.relations.len())
    }

    /// For an augmented graph, maps a relation to `(forward id, is_inverse)`.
    pub fn base_relation(&self, r: RelationId) -> (RelationId, bool) {
        match self.base_relations {
            Some(n) if r >= n => (r - n, true),
            _ => (r, false),
        }
    }

    pub fn inverse_of(&self, r: RelationId) -> Option<RelationId> {
        let n = self.base_relations?;
        Some(if r >= n { r - n } else { r + n })
    }

    pub fn contains(&self, t: &Triple) -> bool {
        t.head < self.out_adj.len()
            && self.out_adj[t.head]
                .binary_search(&(t.relation, t.tail))
                .is_ok()
    }

    pub fn entity_id(&self, label: &str) -> Result<EntityId> {
        self.entities
            .id(label)
            .ok_or_else(|| Error::UnknownId(format!("entity {label:?}")))
    }

    pub fn relation_id(&self, label: &str) -> Result<RelationId> {
        self.relations
            .id(label)
            .ok_or_else(|| Error::UnknownId(format!("relation {label:?}")))
    }

    pub fn entity_label(&self, e: EntityId) -> &str {
        self.entities.label(e).unwrap_or("<?>")
    }

    pub fn relation_label(&self, r: RelationId) -> &str {
        self.relations.label(r).unwrap_or("<?>")
    }

    /// Neighbours ignoring edge direction, with multiplicity.
    pub fn undirected_degree(&self, e: EntityId) -> usize {
        self.out_adj[e].len() + self.in_adj[e].len()
    }

    /// Stable hash of the graph content, used to key path caches.
    pub fn content_hash(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.entities.len().hash(&mut h);
        self.relations.labels().hash(&mut h);
        self.base_relations.hash(&mut h);
        self.triples.hash(&mut h);
        h.finish()
    }

    /// Adds `r⁻¹` for every relation, with a reversed copy of every triple.
    pub fn add_inverse_relations(&self) -> Result<KnowledgeGraph> {
        if self.is_augmented() {
            return Err(Error::AlreadyAugmented);
        }
        let n = self.relations.len();
        let mut relations = self.relations.clone();
        for r in 0..n {
            let label = format!("{}{REVERSED_SUFFIX}", self.relations.labels()[r]);
            let id = relations.intern(label);
            if id != r + n {
                return Err(Error::InvalidArgument(format!(
                    "relation label {:?} collides with an inverse name",
                    relations.labels()[id]
                )));
            }
        }
        let mut triples = self.triples.clone();
        triples.extend(
            self.triples
                .iter()
                .map(|t| Triple::new(t.tail, t.relation + n, t.head)),
        );
        Self::build(self.entities.clone(), relations, triples, Some(n))
    }

    /// Removes exactly `round(fraction · |triples|)` triples chosen uniformly under `seed`.
    ///
    /// Vocabularies are kept. Apply before inverse augmentation.
    pub fn drop_edges(&self, fraction: f64, seed: u64) -> Result<KnowledgeGraph> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::InvalidArgument(format!(
                "fraction {fraction} outside [0, 1]"
            )));
        }
        let n = self.triples.len();
        let k = (fraction * n as f64).round() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let removed: HashSet<usize> = rand::seq::index::sample(&mut rng, n, k).into_iter().collect();
        let kept = self
            .triples
            .iter()
            .enumerate()
            .filter(|(i, _)| !removed.contains(i))
            .map(|(_, t)| *t)
            .collect();
        Self::build(
            self.entities.clone(),
            self.relations.clone(),
            kept,
            self.base_relations,
        )
    }

    /// Writes `head<TAB>relation<TAB>tail` lines using labels.
    pub fn write_triples(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(fs::File::create(path)?);
        for t in &self.triples {
            writeln!(
                out,
                "{}\t{}\t{}",
                self.entity_label(t.head),
                self.relation_label(t.relation),
                self.entity_label(t.tail)
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Reads a tab-separated triples file.
pub fn load_triples(path: &Path) -> Result<KnowledgeGraph> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 || fields.iter().any(|f| f.trim().is_empty()) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("expected head<TAB>relation<TAB>tail, got {line:?}"),
            });
        }
        rows.push((fields[0].trim(), fields[1].trim(), fields[2].trim()));
    }
    if rows.is_empty() {
        return Err(Error::Empty(format!("no triples in {}", path.display())));
    }
    KnowledgeGraph::from_labeled(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn chain(n: usize) -> KnowledgeGraph {
        let labels: Vec<String> = (0..=n).map(|i| format!("e{i}")).collect();
        let rows: Vec<(&str, &str, &str)> = (0..n)
            .map(|i| (labels[i].as_str(), "next", labels[i + 1].as_str()))
            .collect();
        KnowledgeGraph::from_labeled(rows).unwrap()
    }

    #[test]
    fn load_three_triples() {
        let f = write_tmp("a\tr\tb\nb\tr\tc\nc\ts\ta\n");
        let kg = load_triples(f.path()).unwrap();
        assert_eq!(kg.triples().len(), 3);
        assert_eq!(kg.num_entities(), 3);
        assert_eq!(kg.num_relations(), 2);
        assert_eq!(kg.entity_id("a").unwrap(), 0);
        assert_eq!(kg.relation_id("s").unwrap(), 1);
    }

    #[test]
    fn duplicate_lines_are_removed() {
        let f = write_tmp("a\tr\tb\na\tr\tb\nb\tr\tc\n");
        let kg = load_triples(f.path()).unwrap();
        assert_eq!(kg.triples().len(), 2);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let f = write_tmp("a\tr\tb\nbroken line\n");
        match load_triples(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        let f = write_tmp("\n\n");
        assert!(matches!(load_triples(f.path()), Err(Error::Empty(_))));
    }

    #[test]
    fn adjacency_is_transposed() {
        let kg = chain(5).add_inverse_relations().unwrap();
        let mut outs = 0;
        for t in kg.triples() {
            assert!(kg.out_edges(t.head).contains(&(t.relation, t.tail)));
            assert!(kg.in_edges(t.tail).contains(&(t.relation, t.head)));
        }
        for e in 0..kg.num_entities() {
            outs += kg.out_edges(e).len();
            for &(r, t) in kg.out_edges(e) {
                assert!(kg.contains(&Triple::new(e, r, t)));
            }
        }
        assert_eq!(outs, kg.triples().len());
    }

    #[test]
    fn inverse_augmentation() {
        let kg = KnowledgeGraph::from_labeled([("a", "r", "b")]).unwrap();
        let aug = kg.add_inverse_relations().unwrap();
        assert_eq!(aug.num_relations(), 2);
        assert_eq!(aug.triples().len(), 2);
        assert!(aug.contains(&Triple::new(1, 1, 0)));
        assert_eq!(aug.relation_label(1), "r (reversed)");
        assert_eq!(aug.inverse_of(0), Some(1));
        assert_eq!(aug.base_relation(1), (0, true));
        assert!(matches!(
            aug.add_inverse_relations(),
            Err(Error::AlreadyAugmented)
        ));
    }

    #[test]
    fn drop_edges_counts_and_determinism() {
        let kg = chain(1000);
        assert_eq!(kg.drop_edges(0.0, 1).unwrap().triples(), kg.triples());
        let a = kg.drop_edges(0.5, 7).unwrap();
        let b = kg.drop_edges(0.5, 7).unwrap();
        let c = kg.drop_edges(0.5, 8).unwrap();
        assert_eq!(a.triples().len(), 500);
        assert_eq!(a.triples(), b.triples());
        assert_ne!(a.triples(), c.triples());
        assert_eq!(a.num_entities(), kg.num_entities());
        assert_eq!(kg.drop_edges(1.0, 3).unwrap().triples().len(), 0);
        assert!(kg.drop_edges(1.5, 3).is_err());
    }

    #[test]
    fn content_hash_tracks_triples() {
        let kg = chain(10);
        assert_eq!(kg.content_hash(), chain(10).content_hash());
        assert_ne!(kg.content_hash(), kg.drop_edges(0.5, 0).unwrap().content_hash());
    }

    #[test]
    fn write_and_reload() {
        let kg = chain(4);
        let f = tempfile::NamedTempFile::new().unwrap();
        kg.write_triples(f.path()).unwrap();
        let back = load_triples(f.path()).unwrap();
        assert_eq!(back.triples(), kg.triples());
    }
}
