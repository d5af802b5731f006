//! RotatE and ComplEx knowledge-graph embeddings trained with negative sampling.
//!
//! RotatE relations are stored as phase vectors, so every relation has unit
//! modulus by construction. When the graph carries inverse relations, the
//! inverse of `r` is the conjugate of `r` rather than a separate parameter.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::binio::{BinReader, BinWriter};
use crate::complex::{hadamard, rotation_distance_grad, ComplexVec, Norm};
use crate::error::{check_dim, Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, RelationId, Triple};
use crate::nn::{sigmoid, softmax, softplus, Adam, AdamConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ModelKind {
    #[default]
    RotatE,
    ComplEx,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::RotatE => "rotate",
            ModelKind::ComplEx => "complex",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rotate" | "rotate_e" | "rotate-e" => Some(ModelKind::RotatE),
            "complex" | "compl_ex" => Some(ModelKind::ComplEx),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KgeTrainConfig {
    pub model: ModelKind,
    /// Complex dimension.
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub negatives_per_positive: usize,
    pub batch_size: usize,
    /// 0 disables self-adversarial weighting.
    pub adversarial_temperature: f64,
    pub seed: u64,
    pub norm: Norm,
    pub margin: f64,
    /// L2 penalty on the embeddings touched by a batch (used by ComplEx).
    pub regularization: f64,
}

impl Default for KgeTrainConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::RotatE,
            dim: 64,
            epochs: 100,
            learning_rate: 0.01,
            negatives_per_positive: 16,
            batch_size: 128,
            adversarial_temperature: 0.0,
            seed: 0,
            norm: Norm::L1,
            margin: 6.0,
            regularization: 0.0,
        }
    }
}

impl KgeTrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.negatives_per_positive == 0 {
            return bad("negatives_per_positive must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.adversarial_temperature >= 0.0) {
            return bad("adversarial_temperature must be non-negative");
        }
        if !(self.regularization >= 0.0) {
            return bad("regularization must be non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub kind: ModelKind,
    pub dim: usize,
    /// `|E| × 2d`, each row `[re ‖ im]`.
    pub entity: Vec<f64>,
    /// RotatE: `R × d` phases. ComplEx: `R × 2d` as `[re ‖ im]`.
    /// Only forward relations are stored.
    pub relation: Vec<f64>,
    pub num_base_relations: usize,
    /// Either `num_base_relations` or twice that when inverses are tied.
    pub num_relations: usize,
    pub frozen: bool,
}

impl EmbeddingTable {
    /// Zero-filled table with the same shape, used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        Self {
            entity: vec![0.0; self.entity.len()],
            relation: vec![0.0; self.relation.len()],
            ..self.clone()
        }
    }

    pub fn num_entities(&self) -> usize {
        self.entity.len() / (2 * self.dim)
    }

    fn relation_width(&self) -> usize {
        match self.kind {
            ModelKind::RotatE => self.dim,
            ModelKind::ComplEx => 2 * self.dim,
        }
    }

    pub fn entity_flat(&self, e: EntityId) -> &[f64] {
        let w = 2 * self.dim;
        &self.entity[e * w..(e + 1) * w]
    }

    pub fn entity_flat_mut(&mut self, e: EntityId) -> &mut [f64] {
        let w = 2 * self.dim;
        &mut self.entity[e * w..(e + 1) * w]
    }

    pub fn entity(&self, e: EntityId) -> ComplexVec {
        ComplexVec::from_flat(self.entity_flat(e))
    }

    /// `(stored index, is_inverse)`.
    pub fn resolve_relation(&self, r: RelationId) -> Result<(usize, bool)> {
        if r >= self.num_relations {
            return Err(Error::UnknownId(format!("relation {r}")));
        }
        Ok(if r >= self.num_base_relations {
            (r - self.num_base_relations, true)
        } else {
            (r, false)
        })
    }

    pub fn relation_params(&self, base: usize) -> &[f64] {
        let w = self.relation_width();
        &self.relation[base * w..(base + 1) * w]
    }

    pub fn relation_params_mut(&mut self, base: usize) -> &mut [f64] {
        let w = self.relation_width();
        &mut self.relation[base * w..(base + 1) * w]
    }

    /// Phase vector of a RotatE relation; inverses negate the phase.
    pub fn relation_phase(&self, r: RelationId) -> Result<Vec<f64>> {
        if self.kind != ModelKind::RotatE {
            return Err(Error::Unsupported("relation phases need a RotatE table".into()));
        }
        let (base, inv) = self.resolve_relation(r)?;
        let p = self.relation_params(base);
        Ok(if inv { p.iter().map(|x| -x).collect() } else { p.to_vec() })
    }

    pub fn relation(&self, r: RelationId) -> Result<ComplexVec> {
        let (base, inv) = self.resolve_relation(r)?;
        let v = match self.kind {
            ModelKind::RotatE => ComplexVec::from_phase(self.relation_params(base)),
            ModelKind::ComplEx => ComplexVec::from_flat(self.relation_params(base)),
        };
        Ok(if inv { v.conj() } else { v })
    }

    pub fn all_finite(&self) -> bool {
        self.entity.iter().chain(&self.relation).all(|x| x.is_finite())
    }

    /// Score of a triple under this table's model.
    pub fn score(&self, t: &Triple, norm: Norm) -> Result<f64> {
        let h = self.entity(t.head);
        let r = self.relation(t.relation)?;
        let c = self.entity(t.tail);
        match self.kind {
            ModelKind::RotatE => rotate_score(&h, &r, &c, norm),
            ModelKind::ComplEx => complex_score(&h, &r, &c),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BinWriter::new(std::io::BufWriter::new(fs::File::create(path)?));
        self.write_to(&mut w)?;
        use std::io::Write;
        w.into_inner().flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BinReader::new(std::io::BufReader::new(fs::File::open(path)?));
        Self::read_from(&mut r)
    }

    pub(crate) fn write_to<W: std::io::Write>(&self, w: &mut BinWriter<W>) -> Result<()> {
        w.bytes(b"TERPKGE1")?;
        w.u8(match self.kind {
            ModelKind::RotatE => 0,
            ModelKind::ComplEx => 1,
        })?;
        w.u64(self.dim as u64)?;
        w.u64(self.num_entities() as u64)?;
        w.u64(self.num_base_relations as u64)?;
        w.u64(self.num_relations as u64)?;
        w.u8(self.frozen as u8)?;
        w.f64s(&self.entity)?;
        w.f64s(&self.relation)
    }

    pub(crate) fn read_from<R: std::io::Read>(r: &mut BinReader<R>) -> Result<Self> {
        r.expect_magic(b"TERPKGE1")?;
        let kind = match r.u8()? {
            0 => ModelKind::RotatE,
            1 => ModelKind::ComplEx,
            k => return Err(Error::Checkpoint(format!("unknown model kind {k}"))),
        };
        let dim = r.usize()?;
        let n_ent = r.usize()?;
        let num_base_relations = r.usize()?;
        let num_relations = r.usize()?;
        let frozen = r.u8()? != 0;
        let entity = r.f64s()?;
        let relation = r.f64s()?;
        let table = Self {
            kind,
            dim,
            entity,
            relation,
            num_base_relations,
            num_relations,
            frozen,
        };
        if dim == 0
            || table.entity.len() != n_ent * 2 * dim
            || table.relation.len() != num_base_relations * table.relation_width()
        {
            return Err(Error::Checkpoint("embedding table shape mismatch".into()));
        }
        Ok(table)
    }
}

/// Uniform entity init in `[-a, a]` with `a = 6/√(2d)`; relation phases uniform.
pub fn init_embeddings(kg: &KnowledgeGraph, config: &KgeTrainConfig) -> Result<EmbeddingTable> {
    if config.dim == 0 {
        return Err(Error::InvalidArgument("dim must be positive".into()));
    }
    let d = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let a = 6.0 / ((2 * d) as f64).sqrt();
    let entity = (0..kg.num_entities() * 2 * d)
        .map(|_| rng.gen_range(-a..=a))
        .collect();
    let nb = kg.num_base_relations();
    let relation = match config.model {
        ModelKind::RotatE => (0..nb * d)
            .map(|_| rng.gen_range(-std::f64::consts::PI..=std::f64::consts::PI))
            .collect(),
        ModelKind::ComplEx => (0..nb * 2 * d).map(|_| rng.gen_range(-a..=a)).collect(),
    };
    Ok(EmbeddingTable {
        kind: config.model,
        dim: d,
        entity,
        relation,
        num_base_relations: nb,
        num_relations: kg.num_relations(),
        frozen: false,
    })
}

/// `-‖h ∘ r − t‖`.
pub fn rotate_score(h: &ComplexVec, r: &ComplexVec, t: &ComplexVec, norm: Norm) -> Result<f64> {
    Ok(-crate::complex::distance(&hadamard(h, r)?, t, norm)?)
}

/// `Re(Σ h·r·conj(t))`.
pub fn complex_score(h: &ComplexVec, r: &ComplexVec, t: &ComplexVec) -> Result<f64> {
    Ok(complex_score_grad(h, r, t)?.0)
}

/// ComplEx score and its gradients w.r.t. `h`, `r`, `t` as `[re ‖ im]`.
pub fn complex_score_grad(
    h: &ComplexVec,
    r: &ComplexVec,
    t: &ComplexVec,
) -> Result<(f64, Vec<f64>, Vec<f64>, Vec<f64>)> {
    check_dim(h.dim(), r.dim())?;
    check_dim(h.dim(), t.dim())?;
    let d = h.dim();
    let mut s = 0.0;
    let mut gh = vec![0.0; 2 * d];
    let mut gr = vec![0.0; 2 * d];
    let mut gt = vec![0.0; 2 * d];
    for i in 0..d {
        let (hr, hi, rr, ri, tr, ti) = (h.re[i], h.im[i], r.re[i], r.im[i], t.re[i], t.im[i]);
        let pr = hr * rr - hi * ri;
        let pi = hr * ri + hi * rr;
        s += pr * tr + pi * ti;
        gh[i] = rr * tr + ri * ti;
        gh[d + i] = -ri * tr + rr * ti;
        gr[i] = hr * tr + hi * ti;
        gr[d + i] = -hi * tr + hr * ti;
        gt[i] = pr;
        gt[d + i] = pi;
    }
    Ok((s, gh, gr, gt))
}

/// Left-to-right Hadamard product of RotatE relation embeddings.
pub fn compose_relations(relation_ids: &[RelationId], table: &EmbeddingTable) -> Result<ComplexVec> {
    if table.kind != ModelKind::RotatE {
        return Err(Error::Unsupported(
            "relation composition needs a RotatE table".into(),
        ));
    }
    let (first, rest) = relation_ids
        .split_first()
        .ok_or_else(|| Error::Empty("relation list".into()))?;
    let mut acc = table.relation(*first)?;
    for &r in rest {
        acc = hadamard(&acc, &table.relation(r)?)?;
    }
    Ok(acc)
}

/// Score of a triple and the gradient contributions, accumulated with weight
/// `upstream` into `grad`.
fn score_with_grad(
    table: &EmbeddingTable,
    t: &Triple,
    norm: Norm,
    upstream: f64,
    grad: &mut EmbeddingTable,
) -> Result<f64> {
    let h = table.entity(t.head);
    let c = table.entity(t.tail);
    let (base, inv) = table.resolve_relation(t.relation)?;
    let r = table.relation(t.relation)?;
    let d = table.dim;
    let (s, gh, gr, gc) = match table.kind {
        ModelKind::RotatE => rotation_distance_grad(&h, &r, &c, norm)?,
        ModelKind::ComplEx => complex_score_grad(&h, &r, &c)?,
    };
    for (g, x) in grad.entity_flat_mut(t.head).iter_mut().zip(&gh) {
        *g += upstream * x;
    }
    for (g, x) in grad.entity_flat_mut(t.tail).iter_mut().zip(&gc) {
        *g += upstream * x;
    }
    let rel_grad = grad.relation_params_mut(base);
    match table.kind {
        ModelKind::RotatE => {
            // r = exp(iφ) (or exp(-iφ) for an inverse)
            let sign = if inv { -1.0 } else { 1.0 };
            for i in 0..d {
                let dphi = -gr[i] * r.im[i] + gr[d + i] * r.re[i];
                rel_grad[i] += upstream * sign * dphi;
            }
        }
        ModelKind::ComplEx => {
            let sign = if inv { -1.0 } else { 1.0 };
            for i in 0..d {
                rel_grad[i] += upstream * gr[i];
                rel_grad[d + i] += upstream * sign * gr[d + i];
            }
        }
    }
    Ok(s)
}

/// Negative-sampling loss of one positive against its negatives,
/// accumulating `∂loss/∂params · scale` into `grad`.
///
/// `-log σ(γ + s⁺) − Σᵢ wᵢ log σ(−γ − sᵢ⁻)` with `wᵢ` uniform or a detached
/// softmax of `temperature · sᵢ⁻`.
pub fn example_loss(
    table: &EmbeddingTable,
    positive: &Triple,
    negatives: &[Triple],
    config: &KgeTrainConfig,
    scale: f64,
    grad: &mut EmbeddingTable,
) -> Result<f64> {
    if negatives.is_empty() {
        return Err(Error::Empty("negatives".into()));
    }
    let margin = config.margin;
    let mut scratch = grad.zeros_like();
    let s_pos = table.score(positive, config.norm)?;
    let neg_scores: Vec<f64> = negatives
        .iter()
        .map(|n| table.score(n, config.norm))
        .collect::<Result<_>>()?;
    let weights = if config.adversarial_temperature > 0.0 {
        let scaled: Vec<f64> = neg_scores
            .iter()
            .map(|s| config.adversarial_temperature * s)
            .collect();
        softmax(&scaled)
    } else {
        vec![1.0 / negatives.len() as f64; negatives.len()]
    };
    let mut loss = softplus(-(margin + s_pos));
    score_with_grad(table, positive, config.norm, -sigmoid(-(margin + s_pos)) * scale, &mut scratch)?;
    for ((n, s), w) in negatives.iter().zip(&neg_scores).zip(&weights) {
        loss += w * softplus(margin + s);
        score_with_grad(table, n, config.norm, w * sigmoid(margin + s) * scale, &mut scratch)?;
    }
    if config.regularization > 0.0 {
        let lam = config.regularization;
        for e in [positive.head, positive.tail] {
            let row = table.entity_flat(e);
            loss += lam * row.iter().map(|x| x * x).sum::<f64>();
            for (g, x) in scratch.entity_flat_mut(e).iter_mut().zip(row) {
                *g += scale * 2.0 * lam * x;
            }
        }
        if table.kind == ModelKind::ComplEx {
            let (base, _) = table.resolve_relation(positive.relation)?;
            let row = table.relation_params(base);
            loss += lam * row.iter().map(|x| x * x).sum::<f64>();
            for (g, x) in scratch.relation_params_mut(base).iter_mut().zip(row) {
                *g += scale * 2.0 * lam * x;
            }
        }
    }
    for (g, s) in grad.entity.iter_mut().zip(&scratch.entity) {
        *g += s;
    }
    for (g, s) in grad.relation.iter_mut().zip(&scratch.relation) {
        *g += s;
    }
    Ok(loss)
}

fn corrupt(rng: &mut impl Rng, t: &Triple, n_entities: usize) -> Triple {
    let e = rng.gen_range(0..n_entities);
    if rng.gen_bool(0.5) {
        Triple::new(e, t.relation, t.tail)
    } else {
        Triple::new(t.head, t.relation, e)
    }
}

#[derive(Clone, Debug)]
pub struct KgeTrainOutput {
    pub table: EmbeddingTable,
    pub epoch_losses: Vec<f64>,
}

/// Trains on the forward triples of `kg` with Adam (β₂ from the default config).
pub fn train_kge(kg: &KnowledgeGraph, config: &KgeTrainConfig) -> Result<KgeTrainOutput> {
    config.validate()?;
    let positives: Vec<Triple> = kg
        .triples()
        .iter()
        .filter(|t| t.relation < kg.num_base_relations())
        .copied()
        .collect();
    if positives.is_empty() {
        return Err(Error::Empty("knowledge graph has no triples".into()));
    }
    let mut table = init_embeddings(kg, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x9e37_79b9));
    let mut opt = Adam::new(AdamConfig {
        learning_rate: config.learning_rate,
        ..AdamConfig::default()
    });
    let mut grad = table.zeros_like();
    let mut order: Vec<usize> = (0..positives.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let n_ent = kg.num_entities();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            grad.entity.iter_mut().for_each(|x| *x = 0.0);
            grad.relation.iter_mut().for_each(|x| *x = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let pos = positives[i];
                let negs: Vec<Triple> = (0..config.negatives_per_positive)
                    .map(|_| corrupt(&mut rng, &pos, n_ent))
                    .collect();
                total += example_loss(&table, &pos, &negs, config, scale, &mut grad)?;
            }
            opt.update(
                vec![&mut table.entity, &mut table.relation],
                vec![&grad.entity, &grad.relation],
            );
        }
        epoch_losses.push(total / positives.len() as f64);
    }
    Ok(KgeTrainOutput {
        table,
        epoch_losses,
    })
}

/// Filtered rank (1-based) of the true tail among all entities.
pub fn filtered_tail_rank(
    table: &EmbeddingTable,
    kg: &KnowledgeGraph,
    t: &Triple,
    norm: Norm,
) -> Result<usize> {
    let target = table.score(t, norm)?;
    let mut rank = 1;
    for e in 0..kg.num_entities() {
        if e == t.tail {
            continue;
        }
        let cand = Triple::new(t.head, t.relation, e);
        if kg.contains(&cand) {
            continue;
        }
        if table.score(&cand, norm)? > target {
            rank += 1;
        }
    }
    Ok(rank)
}
