//! The QA model: question view, path view, their gradients and checkpoints.

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;

use crate::binio::{BinReader, BinWriter};
use crate::complex::ComplexVec;
use crate::config::QaConfig;
use crate::error::{check_dim, Error, Result};
use crate::kg::{EntityId, KnowledgeGraph};
use crate::kge::{EmbeddingTable, ModelKind};
use crate::nn::{Ffn, FfnCache, Linear, Params};
use crate::paths::{PathCache, RelationPath};
use crate::predictor::{score_view_grad, weighted_qa_loss, HeadCache, RotateScaleHead, RotateScaleRep};
use crate::qa::QaDataset;
use crate::reasoner::{attend_paths, attend_paths_backward, fuse_path_backward, fuse_path_forward, Attended, PathBundle};
use crate::text::{AvgEncoder, TokenId, Tokenizer};

/// Graph-side state shared by training and inference.
#[derive(Debug)]
pub struct QaEnv {
    pub kg: KnowledgeGraph,
    pub paths: PathCache,
    rel_tokens: Vec<Vec<TokenId>>,
    sep: TokenId,
}

impl QaEnv {
    /// Augments `kg` with inverse relations unless it already has them.
    pub fn new(kg: KnowledgeGraph, tokenizer: &Tokenizer, max_len: usize, max_paths: usize) -> Result<Self> {
        let kg = if kg.is_augmented() { kg } else { kg.add_inverse_relations()? };
        let rel_tokens = (0..kg.num_relations())
            .map(|r| tokenizer.relation_tokens(kg.relation_label(r)))
            .collect();
        let paths = PathCache::new(&kg, max_len, max_paths);
        Ok(Self {
            kg,
            paths,
            rel_tokens,
            sep: tokenizer.sep_id(),
        })
    }

    pub fn relation_tokens(&self, r: usize) -> &[TokenId] {
        &self.rel_tokens[r]
    }
}

/// Tokenizer over masked question texts and every relation label of `kg`.
pub fn build_tokenizer(dataset: &QaDataset, kg: &KnowledgeGraph) -> Tokenizer {
    let texts: Vec<String> = dataset
        .instances
        .iter()
        .map(|q| crate::text::mask_mentions(&q.text))
        .collect();
    Tokenizer::build(
        texts.iter().map(String::as_str),
        kg.relations().labels().iter().map(String::as_str),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct QaParams {
    pub encoder: AvgEncoder,
    pub fusion: Ffn,
    pub att_query: Linear,
    pub att_key: Linear,
    pub question_head: RotateScaleHead,
    pub path_head: RotateScaleHead,
}

impl QaParams {
    pub fn new(config: &QaConfig, vocab: usize, kge_dim: usize, rng: &mut impl Rng) -> Self {
        let t = config.text_dim;
        Self {
            encoder: AvgEncoder::new(vocab, t, config.init_scale, rng),
            fusion: Ffn::new(t + 2 * kge_dim, 2 * t, t, rng),
            att_query: Linear::new(t, config.attention_dim, rng),
            att_key: Linear::new(t, config.attention_dim, rng),
            question_head: RotateScaleHead::new(config.scoring, t, kge_dim, rng),
            path_head: RotateScaleHead::new(config.scoring, t, kge_dim, rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.zero_grad();
        z
    }

    pub fn text_dim(&self) -> usize {
        self.fusion.output
    }
}

impl Params for QaParams {
    fn slices(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = vec![&self.encoder.table];
        v.extend(self.fusion.slices());
        v.extend(self.att_query.slices());
        v.extend(self.att_key.slices());
        v.extend(self.question_head.slices());
        v.extend(self.path_head.slices());
        v
    }
    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = vec![&mut self.encoder.table];
        v.extend(self.fusion.slices_mut());
        v.extend(self.att_query.slices_mut());
        v.extend(self.att_key.slices_mut());
        v.extend(self.question_head.slices_mut());
        v.extend(self.path_head.slices_mut());
        v
    }
}

/// Gradient accumulator matching [`QaModel`]'s trainable state.
#[derive(Clone, Debug)]
pub struct QaGrads {
    pub params: QaParams,
    pub kge: EmbeddingTable,
}

impl QaGrads {
    pub fn zero(&mut self) {
        self.params.zero_grad();
        self.kge.entity.iter_mut().for_each(|x| *x = 0.0);
        self.kge.relation.iter_mut().for_each(|x| *x = 0.0);
    }
}

#[derive(Clone, Debug)]
pub struct QuestionState {
    pub tokens: Vec<TokenId>,
    pub q_sum: Vec<f64>,
    pub q: Vec<f64>,
    pub relation: RotateScaleRep,
    cache: HeadCache,
}

/// Forward state of the path view for one (topic, candidate) pair.
#[derive(Clone, Debug)]
pub struct PathView {
    pub paths: Arc<Vec<RelationPath>>,
    pub textual: Vec<Vec<f64>>,
    pub structural: Vec<ComplexVec>,
    phases: Vec<Vec<f64>>,
    seq_lens: Vec<usize>,
    fusion_inputs: Vec<Vec<f64>>,
    fusion_caches: Vec<FfnCache>,
    pub hybrid: Vec<Vec<f64>>,
    pub attention: Attended,
    pub relation: RotateScaleRep,
    cache: HeadCache,
}

impl PathView {
    pub fn bundle(&self, source: EntityId, target: EntityId) -> PathBundle {
        PathBundle {
            source,
            target,
            paths: self.paths.to_vec(),
            textual_reps: self.textual.clone(),
            hybrid_reps: self.hybrid.clone(),
        }
    }
}

/// One training example: a question, its topics, candidates and the gold index.
#[derive(Clone, Copy, Debug)]
pub struct Example<'a> {
    pub tokens: &'a [TokenId],
    pub topics: &'a [EntityId],
    pub candidates: &'a [EntityId],
    pub target: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QaModel {
    pub config: QaConfig,
    pub tokenizer: Tokenizer,
    pub params: QaParams,
    pub kge: EmbeddingTable,
    /// Where the embeddings came from; informational.
    pub kge_source: String,
}

const MAGIC: &[u8] = b"TERPQA01";

impl QaModel {
    pub fn new(config: QaConfig, tokenizer: Tokenizer, kge: EmbeddingTable, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        if config.scoring == crate::predictor::ScoringMode::Complex && kge.kind != ModelKind::ComplEx {
            return Err(Error::InvalidArgument("complex scoring needs ComplEx embeddings".into()));
        }
        if config.scoring != crate::predictor::ScoringMode::Complex && kge.kind != ModelKind::RotatE {
            return Err(Error::InvalidArgument("rotation scoring needs RotatE embeddings".into()));
        }
        let params = QaParams::new(&config, tokenizer.len(), kge.dim, rng);
        let mut kge = kge;
        kge.frozen = config.freeze_embeddings;
        Ok(Self {
            config,
            tokenizer,
            params,
            kge,
            kge_source: String::new(),
        })
    }

    pub fn grads(&self) -> QaGrads {
        QaGrads {
            params: self.params.zeros_like(),
            kge: self.kge.zeros_like(),
        }
    }

    fn check_env(&self, env: &QaEnv) -> Result<()> {
        check_dim(self.kge.num_entities(), env.kg.num_entities())?;
        check_dim(self.kge.num_relations, env.kg.num_relations())
    }

    pub fn question_state(&self, tokens: &[TokenId]) -> Result<QuestionState> {
        if tokens.is_empty() {
            return Err(Error::Empty("question tokens".into()));
        }
        if let Some(&t) = tokens.iter().find(|&&t| t >= self.tokenizer.len()) {
            return Err(Error::UnknownId(format!("token {t}")));
        }
        let q_sum = self.params.encoder.sum(tokens);
        let n = tokens.len() as f64;
        let q: Vec<f64> = q_sum.iter().map(|x| x / n).collect();
        let (relation, cache) = self.params.question_head.forward(&q)?;
        Ok(QuestionState {
            tokens: tokens.to_vec(),
            q_sum,
            q,
            relation,
            cache,
        })
    }

    pub fn score_q(&self, state: &QuestionState, h: EntityId, c: EntityId) -> Result<f64> {
        let (s, ..) = score_view_grad(
            self.config.scoring,
            &self.kge.entity(h),
            &state.relation.rep,
            &self.kge.entity(c),
            self.config.norm,
        )?;
        Ok(s)
    }

    /// `None` when `h == c` or no path of bounded length connects them.
    pub fn path_view(&self, env: &QaEnv, state: &QuestionState, h: EntityId, c: EntityId) -> Result<Option<PathView>> {
        if h == c {
            return Ok(None);
        }
        let paths = env.paths.get(&env.kg, h, c)?;
        if paths.is_empty() {
            return Ok(None);
        }
        let feats = self.config.path_features;
        let d = self.kge.dim;
        let t_dim = self.params.text_dim();
        let rotate_kge = self.kge.kind == ModelKind::RotatE;
        let enc = &self.params.encoder;
        let k = paths.len();
        let (mut textual, mut structural, mut phases) = (Vec::with_capacity(k), Vec::with_capacity(k), Vec::with_capacity(k));
        let (mut seq_lens, mut fusion_inputs, mut fusion_caches, mut hybrid) =
            (Vec::with_capacity(k), Vec::with_capacity(k), Vec::with_capacity(k), Vec::with_capacity(k));
        for path in paths.iter() {
            let mut n = state.tokens.len() + 1;
            let p_t = if feats.uses_text() {
                let mut acc = state.q_sum.clone();
                for (a, x) in acc.iter_mut().zip(enc.row(env.sep)) {
                    *a += x;
                }
                for &r in &path.steps {
                    let toks = env.relation_tokens(r);
                    n += toks.len();
                    for &t in toks {
                        for (a, x) in acc.iter_mut().zip(enc.row(t)) {
                            *a += x;
                        }
                    }
                }
                let inv = 1.0 / n as f64;
                acc.iter_mut().for_each(|x| *x *= inv);
                acc
            } else {
                vec![0.0; t_dim]
            };
            let mut phase = vec![0.0; d];
            let p_l = if feats.uses_structure() && rotate_kge {
                for &r in &path.steps {
                    for (p, x) in phase.iter_mut().zip(self.kge.relation_phase(r)?) {
                        *p += x;
                    }
                }
                ComplexVec::from_phase(&phase)
            } else {
                ComplexVec::zeros(d)
            };
            let (hyb, input, cache) = fuse_path_forward(&p_t, &p_l, &self.params.fusion)?;
            textual.push(p_t);
            structural.push(p_l);
            phases.push(phase);
            seq_lens.push(n);
            fusion_inputs.push(input);
            fusion_caches.push(cache);
            hybrid.push(hyb);
        }
        let attention = attend_paths(&state.q, &textual, &hybrid, &self.params.att_query, &self.params.att_key)?;
        let (relation, cache) = self.params.path_head.forward(&attention.output)?;
        Ok(Some(PathView {
            paths,
            textual,
            structural,
            phases,
            seq_lens,
            fusion_inputs,
            fusion_caches,
            hybrid,
            attention,
            relation,
            cache,
        }))
    }

    pub fn score_p(&self, view: &PathView, h: EntityId, c: EntityId) -> Result<f64> {
        let (s, ..) = score_view_grad(
            self.config.scoring,
            &self.kge.entity(h),
            &view.relation.rep,
            &self.kge.entity(c),
            self.config.norm,
        )?;
        Ok(s)
    }

    /// Loss of one example; with `grads`, also accumulates `scale · ∂loss`.
    pub fn example_loss(&self, env: &QaEnv, ex: &Example, scale: f64, grads: Option<&mut QaGrads>) -> Result<f64> {
        self.check_env(env)?;
        if ex.topics.is_empty() || ex.candidates.is_empty() {
            return Err(Error::Empty("topics or candidates".into()));
        }
        if ex.target >= ex.candidates.len() {
            return Err(Error::InvalidArgument("target index out of range".into()));
        }
        let n_ent = self.kge.num_entities();
        if let Some(e) = ex.topics.iter().chain(ex.candidates).find(|&&e| e >= n_ent) {
            return Err(Error::UnknownId(format!("entity {e}")));
        }
        let state = self.question_state(ex.tokens)?;
        let n_topics = ex.topics.len() as f64;
        let mode = self.config.scoring;
        let norm = self.config.norm;
        let ent: Vec<ComplexVec> = ex.candidates.iter().map(|&c| self.kge.entity(c)).collect();
        let heads: Vec<ComplexVec> = ex.topics.iter().map(|&h| self.kge.entity(h)).collect();

        let mut s_q = vec![0.0; ex.candidates.len()];
        for eh in &heads {
            for (s, ec) in s_q.iter_mut().zip(&ent) {
                *s += score_view_grad(mode, eh, &state.relation.rep, ec, norm)?.0 / n_topics;
            }
        }

        let mut views: Vec<Vec<Option<PathView>>> = Vec::new();
        let mut s_p = None;
        if self.config.use_paths {
            let mut sp = vec![0.0; ex.candidates.len()];
            let mut counts = vec![0usize; ex.candidates.len()];
            for (ti, &h) in ex.topics.iter().enumerate() {
                let mut row = Vec::with_capacity(ex.candidates.len());
                for (ci, &c) in ex.candidates.iter().enumerate() {
                    let v = self.path_view(env, &state, h, c)?;
                    if let Some(v) = &v {
                        sp[ci] += score_view_grad(mode, &heads[ti], &v.relation.rep, &ent[ci], norm)?.0;
                        counts[ci] += 1;
                    }
                    row.push(v);
                }
                views.push(row);
            }
            for (s, &k) in sp.iter_mut().zip(&counts) {
                *s = if k == 0 { f64::NEG_INFINITY } else { *s / k as f64 };
            }
            s_p = Some((sp, counts));
        }

        let (w_q, w_p) = if self.config.weighted_loss {
            (1.0 - self.config.inference.lambda, self.config.inference.lambda)
        } else {
            (1.0, 1.0)
        };
        let loss = weighted_qa_loss(&s_q, s_p.as_ref().map(|(v, _)| v.as_slice()), ex.target, w_q, w_p)?;
        let Some(grads) = grads else {
            return Ok(loss.loss);
        };

        let tune = !self.kge.frozen;
        let d = self.kge.dim;
        let t_dim = self.params.text_dim();
        let mut g_rq = vec![0.0; 2 * d];
        let mut g_q = vec![0.0; t_dim];
        let mut g_qsum = vec![0.0; t_dim];
        for (ti, eh) in heads.iter().enumerate() {
            for (ci, ec) in ent.iter().enumerate() {
                let g = scale * loss.grad_q[ci] / n_topics;
                if g == 0.0 {
                    continue;
                }
                let (_, gh, gr, gc) = score_view_grad(mode, eh, &state.relation.rep, ec, norm)?;
                axpy(&mut g_rq, g, &gr);
                if tune {
                    axpy(grads.kge.entity_flat_mut(ex.topics[ti]), g, &gh);
                    axpy(grads.kge.entity_flat_mut(ex.candidates[ci]), g, &gc);
                }
            }
        }
        if let (Some(gp), Some((_, counts))) = (&loss.grad_p, &s_p) {
            for (ti, row) in views.iter().enumerate() {
                for (ci, v) in row.iter().enumerate() {
                    let Some(v) = v else { continue };
                    let g = scale * gp[ci] / counts[ci] as f64;
                    if g == 0.0 {
                        continue;
                    }
                    let (_, gh, gr, gc) = score_view_grad(mode, &heads[ti], &v.relation.rep, &ent[ci], norm)?;
                    if tune {
                        axpy(grads.kge.entity_flat_mut(ex.topics[ti]), g, &gh);
                        axpy(grads.kge.entity_flat_mut(ex.candidates[ci]), g, &gc);
                    }
                    let g_rp: Vec<f64> = gr.iter().map(|x| g * x).collect();
                    self.path_view_backward(env, &state, v, &g_rp, &mut g_q, &mut g_qsum, grads)?;
                }
            }
        }
        let g_from_head = self.params.question_head.backward(
            &state.q,
            &state.relation,
            &state.cache,
            &g_rq,
            &mut grads.params.question_head,
        );
        axpy(&mut g_q, 1.0, &g_from_head);
        let n_q = state.tokens.len() as f64;
        axpy(&mut g_qsum, 1.0 / n_q, &g_q);
        self.params
            .encoder
            .backward_scaled(&state.tokens, &g_qsum, 1.0, &mut grads.params.encoder.table);
        Ok(loss.loss)
    }

    fn path_view_backward(
        &self,
        env: &QaEnv,
        state: &QuestionState,
        v: &PathView,
        g_rel: &[f64],
        g_q: &mut [f64],
        g_qsum: &mut [f64],
        grads: &mut QaGrads,
    ) -> Result<()> {
        let p = &self.params;
        let g_pooled = p
            .path_head
            .backward(&v.attention.output, &v.relation, &v.cache, g_rel, &mut grads.params.path_head);
        let ag = attend_paths_backward(
            &v.attention,
            &state.q,
            &v.textual,
            &v.hybrid,
            &p.att_query,
            &p.att_key,
            &g_pooled,
            &mut grads.params.att_query,
            &mut grads.params.att_key,
        );
        axpy(g_q, 1.0, &ag.q);
        let feats = self.config.path_features;
        let t_dim = p.text_dim();
        let d = self.kge.dim;
        let tune_rel = !self.kge.frozen && self.kge.kind == ModelKind::RotatE && feats.uses_structure();
        for (i, path) in v.paths.iter().enumerate() {
            let (g_t, g_l) = fuse_path_backward(
                &p.fusion,
                &v.fusion_inputs[i],
                &v.fusion_caches[i],
                &ag.hybrid[i],
                &mut grads.params.fusion,
                t_dim,
            );
            if feats.uses_text() {
                let w = 1.0 / v.seq_lens[i] as f64;
                let mut g = g_t;
                axpy(&mut g, 1.0, &ag.textual[i]);
                axpy(g_qsum, w, &g);
                let table = &mut grads.params.encoder.table;
                p.encoder.backward_scaled(&[env.sep], &g, w, table);
                for &r in &path.steps {
                    p.encoder.backward_scaled(env.relation_tokens(r), &g, w, table);
                }
            }
            if tune_rel {
                let phase = &v.phases[i];
                let mut g_phi = vec![0.0; d];
                for k in 0..d {
                    let (s, c) = (libm::sin(phase[k]), libm::cos(phase[k]));
                    g_phi[k] = -g_l[k] * s + g_l[d + k] * c;
                }
                for &r in &path.steps {
                    let (base, inv) = self.kge.resolve_relation(r)?;
                    let sign = if inv { -1.0 } else { 1.0 };
                    axpy(grads.kge.relation_params_mut(base), sign, &g_phi);
                }
            }
        }
        Ok(())
    }

    /// Trainable slices in a fixed order; embeddings last when not frozen.
    pub fn trainable_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.params.slices_mut();
        if !self.kge.frozen {
            v.push(&mut self.kge.entity);
            v.push(&mut self.kge.relation);
        }
        v
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BinWriter::new(std::io::BufWriter::new(fs::File::create(path)?));
        w.bytes(MAGIC)?;
        w.str(&self.config.to_text())?;
        w.str(&self.kge_source)?;
        w.u64(self.tokenizer.len() as u64)?;
        for t in self.tokenizer.tokens() {
            w.str(t)?;
        }
        self.kge.write_to(&mut w)?;
        let slices = self.params.slices();
        w.u64(slices.len() as u64)?;
        for s in slices {
            w.f64s(s)?;
        }
        w.into_inner().flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BinReader::new(std::io::BufReader::new(fs::File::open(path)?));
        r.expect_magic(MAGIC)?;
        let config = QaConfig::parse(&r.str()?)?;
        let kge_source = r.str()?;
        let n_tok = r.usize()?;
        let tokens = (0..n_tok).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
        let tokenizer = Tokenizer::from_tokens(tokens)?;
        let kge = EmbeddingTable::read_from(&mut r)?;
        let mut params = QaParams::zeros(&config, tokenizer.len(), kge.dim);
        let n = r.usize()?;
        let mut slices = params.slices_mut();
        if n != slices.len() {
            return Err(Error::Checkpoint(format!("expected {} parameter blocks, found {n}", slices.len())));
        }
        for s in slices.iter_mut() {
            let v = r.f64s()?;
            if v.len() != s.len() {
                return Err(Error::Checkpoint("parameter block shape mismatch".into()));
            }
            s.copy_from_slice(&v);
        }
        Ok(Self {
            config,
            tokenizer,
            params,
            kge,
            kge_source,
        })
    }
}

impl QaParams {
    fn zeros(config: &QaConfig, vocab: usize, kge_dim: usize) -> Self {
        let t = config.text_dim;
        Self {
            encoder: AvgEncoder::from_table(t, vec![0.0; vocab * t]).expect("positive text_dim"),
            fusion: Ffn::zeros(t + 2 * kge_dim, 2 * t, t),
            att_query: Linear::zeros(t, config.attention_dim),
            att_key: Linear::zeros(t, config.attention_dim),
            question_head: RotateScaleHead::zeros(config.scoring, t, kge_dim),
            path_head: RotateScaleHead::zeros(config.scoring, t, kge_dim),
        }
    }
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
