//! Rotate-and-scale relation heads, view scoring and the QA objective.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complex::{from_polar, rotation_distance_grad, ComplexVec, Norm};
use crate::error::{check_dim, Error, Result};
use crate::kg::EntityId;
use crate::kge::complex_score_grad;
use crate::nn::{softmax, Ffn, FfnCache, Params};
use crate::ppr::Subgraph;

/// How a view vector becomes a relation and how candidates are scored.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ScoringMode {
    /// Per-component angle and modulus.
    #[default]
    RotateScale,
    /// Modulus fixed to one.
    Rotate,
    /// One map to an unconstrained complex vector, scored with ComplEx.
    Complex,
}

impl ScoringMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoringMode::RotateScale => "rotate_scale",
            ScoringMode::Rotate => "rotate",
            ScoringMode::Complex => "complex",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "rotate_scale" => Some(Self::RotateScale),
            "rotate" => Some(Self::Rotate),
            "complex" => Some(Self::Complex),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RotateScaleRep {
    pub theta: Vec<f64>,
    pub m: Vec<f64>,
    pub rep: ComplexVec,
}

/// Maps a view vector to a complex relation.
///
/// In `Complex` mode `theta` outputs `[re ‖ im]` directly and `modulus` is absent.
#[derive(Clone, Debug, PartialEq)]
pub struct RotateScaleHead {
    pub mode: ScoringMode,
    pub theta: Ffn,
    pub modulus: Option<Ffn>,
}

#[derive(Clone, Debug)]
pub struct HeadCache {
    theta: FfnCache,
    modulus: Option<FfnCache>,
}

impl RotateScaleHead {
    pub fn new(mode: ScoringMode, input: usize, dim: usize, rng: &mut impl Rng) -> Self {
        let hidden = 2 * input;
        match mode {
            ScoringMode::Complex => Self {
                mode,
                theta: Ffn::new(input, hidden, 2 * dim, rng),
                modulus: None,
            },
            ScoringMode::Rotate => Self {
                mode,
                theta: Ffn::new(input, hidden, dim, rng),
                modulus: None,
            },
            ScoringMode::RotateScale => {
                let theta = Ffn::new(input, hidden, dim, rng);
                let mut m = Ffn::new(input, hidden, dim, rng);
                // start near a pure rotation
                m.b2.iter_mut().for_each(|b| *b = 1.0);
                Self {
                    mode,
                    theta,
                    modulus: Some(m),
                }
            }
        }
    }

    pub fn zeros(mode: ScoringMode, input: usize, dim: usize) -> Self {
        let hidden = 2 * input;
        Self {
            mode,
            theta: Ffn::zeros(input, hidden, if mode == ScoringMode::Complex { 2 * dim } else { dim }),
            modulus: (mode == ScoringMode::RotateScale).then(|| Ffn::zeros(input, hidden, dim)),
        }
    }

    pub fn input(&self) -> usize {
        self.theta.input
    }

    /// Complex dimension of the produced relation.
    pub fn dim(&self) -> usize {
        match self.mode {
            ScoringMode::Complex => self.theta.output / 2,
            _ => self.theta.output,
        }
    }

    pub fn forward(&self, view: &[f64]) -> Result<(RotateScaleRep, HeadCache)> {
        check_dim(self.input(), view.len())?;
        let (t, tc) = self.theta.forward(view)?;
        match self.mode {
            ScoringMode::Complex => {
                let rep = ComplexVec::from_flat(&t);
                let rs = RotateScaleRep {
                    theta: crate::complex::phase(&rep),
                    m: crate::complex::modulus(&rep),
                    rep,
                };
                Ok((rs, HeadCache { theta: tc, modulus: None }))
            }
            ScoringMode::Rotate => {
                let m = vec![1.0; t.len()];
                let rep = from_polar(&m, &t)?;
                Ok((RotateScaleRep { theta: t, m, rep }, HeadCache { theta: tc, modulus: None }))
            }
            ScoringMode::RotateScale => {
                let (m, mc) = self.modulus.as_ref().expect("rotate-scale head has a modulus map").forward(view)?;
                let rep = from_polar(&m, &t)?;
                Ok((
                    RotateScaleRep { theta: t, m, rep },
                    HeadCache {
                        theta: tc,
                        modulus: Some(mc),
                    },
                ))
            }
        }
    }

    /// `g_rep` is `∂L/∂rep` as `[re ‖ im]`. Returns `∂L/∂view`.
    pub fn backward(
        &self,
        view: &[f64],
        out: &RotateScaleRep,
        cache: &HeadCache,
        g_rep: &[f64],
        grad: &mut RotateScaleHead,
    ) -> Vec<f64> {
        match self.mode {
            ScoringMode::Complex => self.theta.backward(view, &cache.theta, g_rep, &mut grad.theta),
            _ => {
                let d = out.theta.len();
                let mut g_theta = vec![0.0; d];
                let mut g_m = vec![0.0; d];
                for i in 0..d {
                    let (s, c) = (libm::sin(out.theta[i]), libm::cos(out.theta[i]));
                    let (gr, gi) = (g_rep[i], g_rep[d + i]);
                    g_theta[i] = out.m[i] * (-gr * s + gi * c);
                    g_m[i] = gr * c + gi * s;
                }
                let mut g_view = self.theta.backward(view, &cache.theta, &g_theta, &mut grad.theta);
                if let (Some(mf), Some(mc), Some(gm)) = (&self.modulus, &cache.modulus, grad.modulus.as_mut()) {
                    let g2 = mf.backward(view, mc, &g_m, gm);
                    for (a, b) in g_view.iter_mut().zip(g2) {
                        *a += b;
                    }
                }
                g_view
            }
        }
    }
}

impl Params for RotateScaleHead {
    fn slices(&self) -> Vec<&[f64]> {
        let mut v = self.theta.slices();
        if let Some(m) = &self.modulus {
            v.extend(m.slices());
        }
        v
    }
    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.theta.slices_mut();
        if let Some(m) = &mut self.modulus {
            v.extend(m.slices_mut());
        }
        v
    }
}

/// Projects a question or attended path vector through a head.
pub fn project(view: &[f64], head: &RotateScaleHead) -> Result<RotateScaleRep> {
    Ok(head.forward(view)?.0)
}

/// `-‖e_h ∘ r − e_c‖` for rotation modes; ComplEx trilinear score otherwise.
pub fn score_view(e_h: &ComplexVec, r: &RotateScaleRep, e_c: &ComplexVec, norm: Norm) -> Result<f64> {
    Ok(rotation_distance_grad(e_h, &r.rep, e_c, norm)?.0)
}

/// Score under `mode` with gradients `(s, ∂e_h, ∂r, ∂e_c)`, each `[re ‖ im]`.
pub fn score_view_grad(
    mode: ScoringMode,
    e_h: &ComplexVec,
    r: &ComplexVec,
    e_c: &ComplexVec,
    norm: Norm,
) -> Result<(f64, Vec<f64>, Vec<f64>, Vec<f64>)> {
    match mode {
        ScoringMode::Complex => complex_score_grad(e_h, r, e_c),
        _ => rotation_distance_grad(e_h, r, e_c, norm),
    }
}

pub fn score_mode(mode: ScoringMode, e_h: &ComplexVec, r: &ComplexVec, e_c: &ComplexVec, norm: Norm) -> Result<f64> {
    Ok(score_view_grad(mode, e_h, r, e_c, norm)?.0)
}

/// `(1−λ)·s_q + λ·s_p`, or `s_q` when there is no path score.
pub fn combine(s_q: f64, s_p: Option<f64>, lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("lambda {lambda} outside [0, 1]")));
    }
    Ok(match s_p {
        Some(p) => (1.0 - lambda) * s_q + lambda * p,
        None => s_q,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredCandidate {
    pub entity: EntityId,
    pub s_q: f64,
    pub s_p: Option<f64>,
    pub s: f64,
}

/// One random gold answer followed by uniform negatives from the subgraph.
pub fn sample_candidates(subgraph: &Subgraph, answers: &[EntityId], n: usize, seed: u64) -> Result<Vec<EntityId>> {
    if answers.is_empty() {
        return Err(Error::Empty("answers".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gold = answers[rng.gen_range(0..answers.len())];
    sample_candidates_for(subgraph, gold, answers, &[], n, &mut rng)
}

/// `target` first, then up to `n − 1` negatives drawn without replacement from
/// the subgraph minus `answers` and `exclude`.
pub fn sample_candidates_for(
    subgraph: &Subgraph,
    target: EntityId,
    answers: &[EntityId],
    exclude: &[EntityId],
    n: usize,
    rng: &mut impl Rng,
) -> Result<Vec<EntityId>> {
    if subgraph.is_empty() {
        return Err(Error::Empty("subgraph".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("candidate count must be positive".into()));
    }
    let banned: BTreeSet<EntityId> = answers.iter().chain(exclude).copied().chain([target]).collect();
    let pool: Vec<EntityId> = subgraph
        .entity_ids
        .iter()
        .copied()
        .filter(|e| !banned.contains(e))
        .collect();
    let mut out = Vec::with_capacity(n.min(pool.len() + 1));
    out.push(target);
    out.extend(pool.choose_multiple(rng, n - 1));
    Ok(out)
}

/// Loss value and gradients with respect to both score vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct QaLoss {
    pub loss: f64,
    pub grad_q: Vec<f64>,
    pub grad_p: Option<Vec<f64>>,
}

/// `CE(softmax(s_q), t) + CE(softmax(s_p), t)`.
///
/// Entries of `s_p` equal to `-inf` (no path) drop out of the path softmax;
/// when the target itself has no path score the second term is omitted.
pub fn qa_loss(s_q: &[f64], s_p: Option<&[f64]>, target: usize) -> Result<QaLoss> {
    weighted_qa_loss(s_q, s_p, target, 1.0, 1.0)
}

/// [`qa_loss`] with the two terms scaled by `w_q` and `w_p`.
pub fn weighted_qa_loss(s_q: &[f64], s_p: Option<&[f64]>, target: usize, w_q: f64, w_p: f64) -> Result<QaLoss> {
    if target >= s_q.len() {
        return Err(Error::InvalidArgument(format!("target {target} out of range")));
    }
    let (lq, gq) = cross_entropy(s_q, target);
    let mut out = QaLoss {
        loss: w_q * lq,
        grad_q: gq.into_iter().map(|g| w_q * g).collect(),
        grad_p: None,
    };
    if let Some(sp) = s_p {
        check_dim(s_q.len(), sp.len())?;
        if sp[target].is_finite() {
            let (lp, gp) = cross_entropy(sp, target);
            out.loss += w_p * lp;
            out.grad_p = Some(gp.into_iter().map(|g| w_p * g).collect());
        }
    }
    Ok(out)
}

fn cross_entropy(s: &[f64], target: usize) -> (f64, Vec<f64>) {
    let p = softmax(s);
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + s.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    let mut g = p;
    g[target] -= 1.0;
    (lse - s[target], g)
}
