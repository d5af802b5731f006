//! Hybrid path representations and question-conditioned attention over them.

use crate::complex::ComplexVec;
use crate::error::{check_dim, Error, Result};
use crate::nn::{softmax, Ffn, FfnCache, Linear};
use crate::paths::RelationPath;

/// Which path features reach the fusion network.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum PathFeatures {
    #[default]
    Both,
    TextualOnly,
    StructuralOnly,
}

impl PathFeatures {
    pub fn as_str(self) -> &'static str {
        match self {
            PathFeatures::Both => "both",
            PathFeatures::TextualOnly => "textual_only",
            PathFeatures::StructuralOnly => "structural_only",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "both" => Some(Self::Both),
            "textual_only" | "textual" => Some(Self::TextualOnly),
            "structural_only" | "structural" => Some(Self::StructuralOnly),
            _ => None,
        }
    }

    pub fn uses_text(self) -> bool {
        self != PathFeatures::StructuralOnly
    }

    pub fn uses_structure(self) -> bool {
        self != PathFeatures::TextualOnly
    }
}

/// Paths between one (source, target) pair with their per-path features.
#[derive(Clone, Debug, PartialEq)]
pub struct PathBundle {
    pub source: usize,
    pub target: usize,
    pub paths: Vec<RelationPath>,
    pub textual_reps: Vec<Vec<f64>>,
    pub hybrid_reps: Vec<Vec<f64>>,
}

impl PathBundle {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

fn fusion_input(p_t: &[f64], p_l: &ComplexVec) -> Vec<f64> {
    let mut x = Vec::with_capacity(p_t.len() + 2 * p_l.dim());
    x.extend_from_slice(p_t);
    x.extend_from_slice(&p_l.re);
    x.extend_from_slice(&p_l.im);
    x
}

/// `FFN([p_t ‖ re(p_l) ‖ im(p_l)])`.
pub fn fuse_path(p_t: &[f64], p_l: &ComplexVec, fusion: &Ffn) -> Result<Vec<f64>> {
    check_dim(fusion.input, p_t.len() + 2 * p_l.dim())?;
    fusion.apply(&fusion_input(p_t, p_l))
}

/// Forward pass of [`fuse_path`] keeping what the backward pass needs.
pub fn fuse_path_forward(p_t: &[f64], p_l: &ComplexVec, fusion: &Ffn) -> Result<(Vec<f64>, Vec<f64>, FfnCache)> {
    check_dim(fusion.input, p_t.len() + 2 * p_l.dim())?;
    let x = fusion_input(p_t, p_l);
    let (y, cache) = fusion.forward(&x)?;
    Ok((y, x, cache))
}

/// Returns `(∂p_t, ∂p_l as [re ‖ im])` and accumulates fusion gradients.
pub fn fuse_path_backward(
    fusion: &Ffn,
    input: &[f64],
    cache: &FfnCache,
    g_out: &[f64],
    grad: &mut Ffn,
    text_width: usize,
) -> (Vec<f64>, Vec<f64>) {
    let g_x = fusion.backward(input, cache, g_out, grad);
    let (t, l) = g_x.split_at(text_width);
    (t.to_vec(), l.to_vec())
}

#[derive(Clone, Debug)]
pub struct Attended {
    pub output: Vec<f64>,
    pub weights: Vec<f64>,
    query: Vec<f64>,
    keys: Vec<Vec<f64>>,
}

/// `Attention(q·W1, P̄_t·W2, P̄)`: textual reps give keys, hybrid reps give values.
pub fn attend_paths(
    q: &[f64],
    textual: &[Vec<f64>],
    hybrid: &[Vec<f64>],
    w1: &Linear,
    w2: &Linear,
) -> Result<Attended> {
    if textual.is_empty() {
        return Err(Error::Empty("path bundle".into()));
    }
    check_dim(textual.len(), hybrid.len())?;
    let query = w1.forward(q)?;
    let keys: Vec<Vec<f64>> = textual.iter().map(|t| w2.forward(t)).collect::<Result<_>>()?;
    check_dim(query.len(), w2.output)?;
    let scale = 1.0 / (query.len() as f64).sqrt();
    let logits: Vec<f64> = keys
        .iter()
        .map(|k| scale * k.iter().zip(&query).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let weights = softmax(&logits);
    let width = hybrid[0].len();
    let mut output = vec![0.0; width];
    for (w, v) in weights.iter().zip(hybrid) {
        check_dim(width, v.len())?;
        for (o, x) in output.iter_mut().zip(v) {
            *o += w * x;
        }
    }
    Ok(Attended {
        output,
        weights,
        query,
        keys,
    })
}

/// Gradients of [`attend_paths`].
pub struct AttentionGrads {
    pub q: Vec<f64>,
    pub textual: Vec<Vec<f64>>,
    pub hybrid: Vec<Vec<f64>>,
}

pub fn attend_paths_backward(
    att: &Attended,
    q: &[f64],
    textual: &[Vec<f64>],
    hybrid: &[Vec<f64>],
    w1: &Linear,
    w2: &Linear,
    g_out: &[f64],
    g_w1: &mut Linear,
    g_w2: &mut Linear,
) -> AttentionGrads {
    let scale = 1.0 / (att.query.len() as f64).sqrt();
    let g_weight: Vec<f64> = hybrid
        .iter()
        .map(|v| v.iter().zip(g_out).map(|(a, b)| a * b).sum())
        .collect();
    let mean: f64 = att.weights.iter().zip(&g_weight).map(|(w, g)| w * g).sum();
    let g_logit: Vec<f64> = att
        .weights
        .iter()
        .zip(&g_weight)
        .map(|(w, g)| w * (g - mean))
        .collect();
    let g_hybrid = att
        .weights
        .iter()
        .map(|w| g_out.iter().map(|g| w * g).collect())
        .collect();
    let mut g_query = vec![0.0; att.query.len()];
    let mut g_textual = Vec::with_capacity(textual.len());
    for ((k, gl), t) in att.keys.iter().zip(&g_logit).zip(textual) {
        for (gq, kk) in g_query.iter_mut().zip(k) {
            *gq += scale * gl * kk;
        }
        let g_key: Vec<f64> = att.query.iter().map(|x| scale * gl * x).collect();
        g_textual.push(w2.backward(t, &g_key, g_w2));
    }
    let g_q = w1.backward(q, &g_query, g_w1);
    AttentionGrads {
        q: g_q,
        textual: g_textual,
        hybrid: g_hybrid,
    }
}
