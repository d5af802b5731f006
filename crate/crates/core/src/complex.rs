//! Dense complex vectors stored as split real/imaginary parts.
//!
//! `d` is always the complex dimension; the real storage is `2d`.

use crate::error::{check_dim, Result};

/// Norm used inside distance-based scores.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Norm {
    /// Sum of per-component complex moduli.
    #[default]
    L1,
    /// Euclidean norm over the `2d` real coordinates.
    L2,
}

impl Norm {
    pub fn as_str(self) -> &'static str {
        match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
        }
    }

    pub fn parse(s: &str) -> Option<Norm> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l1" => Some(Norm::L1),
            "l2" => Some(Norm::L2),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVec {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexVec {
    pub fn new(re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        check_dim(re.len(), im.len())?;
        Ok(Self { re, im })
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            re: vec![0.0; d],
            im: vec![0.0; d],
        }
    }

    /// The multiplicative identity `1 + 0i` in every component.
    pub fn ones(d: usize) -> Self {
        Self {
            re: vec![1.0; d],
            im: vec![0.0; d],
        }
    }

    /// Unit-modulus vector `exp(i·phase)`.
    pub fn from_phase(phase: &[f64]) -> Self {
        Self {
            re: phase.iter().map(|&p| libm::cos(p)).collect(),
            im: phase.iter().map(|&p| libm::sin(p)).collect(),
        }
    }

    /// Splits a `[re ‖ im]` slice of length `2d`.
    pub fn from_flat(flat: &[f64]) -> Self {
        let d = flat.len() / 2;
        Self {
            re: flat[..d].to_vec(),
            im: flat[d..2 * d].to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.re.len()
    }

    /// `[re ‖ im]`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.dim());
        out.extend_from_slice(&self.re);
        out.extend_from_slice(&self.im);
        out
    }

    pub fn conj(&self) -> Self {
        Self {
            re: self.re.clone(),
            im: self.im.iter().map(|x| -x).collect(),
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            re: self.re.iter().map(|x| k * x).collect(),
            im: self.im.iter().map(|x| k * x).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.re.iter().chain(&self.im).all(|x| x.is_finite())
    }
}

pub fn hadamard(a: &ComplexVec, b: &ComplexVec) -> Result<ComplexVec> {
    check_dim(a.dim(), b.dim())?;
    let (re, im) = a
        .re
        .iter()
        .zip(&a.im)
        .zip(b.re.iter().zip(&b.im))
        .map(|((&ar, &ai), (&br, &bi))| (ar * br - ai * bi, ar * bi + ai * br))
        .unzip();
    Ok(ComplexVec { re, im })
}

/// `m·cos θ + i·m·sin θ`. Negative moduli are allowed and act as a half-turn.
pub fn from_polar(m: &[f64], theta: &[f64]) -> Result<ComplexVec> {
    check_dim(m.len(), theta.len())?;
    let (re, im) = m
        .iter()
        .zip(theta)
        .map(|(&m, &t)| (m * libm::cos(t), m * libm::sin(t)))
        .unzip();
    Ok(ComplexVec { re, im })
}

pub fn modulus(a: &ComplexVec) -> Vec<f64> {
    a.re.iter().zip(&a.im).map(|(r, i)| r.hypot(*i)).collect()
}

/// Component-wise argument in `(-π, π]`; zero components map to 0.
pub fn phase(a: &ComplexVec) -> Vec<f64> {
    a.re
        .iter()
        .zip(&a.im)
        .map(|(&r, &i)| {
            if r == 0.0 && i == 0.0 {
                0.0
            } else {
                let p = i.atan2(r);
                // atan2 returns -π for (negative, -0.0)
                if p == -std::f64::consts::PI {
                    std::f64::consts::PI
                } else {
                    p
                }
            }
        })
        .collect()
}

pub fn distance(a: &ComplexVec, b: &ComplexVec, norm: Norm) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    let diffs = a
        .re
        .iter()
        .zip(&a.im)
        .zip(b.re.iter().zip(&b.im))
        .map(|((ar, ai), (br, bi))| (ar - br, ai - bi));
    Ok(match norm {
        Norm::L1 => diffs.map(|(x, y)| x.hypot(y)).sum(),
        Norm::L2 => diffs.map(|(x, y)| x * x + y * y).sum::<f64>().sqrt(),
    })
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}

/// Score `-‖a∘r − c‖` together with its gradients.
///
/// Shared by the KGE scorer and both QA views. Returns `(score, ∂/∂a, ∂/∂r, ∂/∂c)`
/// with each gradient laid out as `[re ‖ im]`. At a zero-modulus component the
/// L1 subgradient 0 is used.
pub fn rotation_distance_grad(
    a: &ComplexVec,
    r: &ComplexVec,
    c: &ComplexVec,
    norm: Norm,
) -> Result<(f64, Vec<f64>, Vec<f64>, Vec<f64>)> {
    check_dim(a.dim(), r.dim())?;
    check_dim(a.dim(), c.dim())?;
    let d = a.dim();
    let mut dre = vec![0.0; d];
    let mut dim = vec![0.0; d];
    for i in 0..d {
        dre[i] = a.re[i] * r.re[i] - a.im[i] * r.im[i] - c.re[i];
        dim[i] = a.re[i] * r.im[i] + a.im[i] * r.re[i] - c.im[i];
    }
    // g = ∂score/∂diff
    let mut g_re = vec![0.0; d];
    let mut g_im = vec![0.0; d];
    let score = match norm {
        Norm::L1 => {
            let mut total = 0.0;
            for i in 0..d {
                let m = dre[i].hypot(dim[i]);
                total += m;
                if m > 0.0 {
                    g_re[i] = -dre[i] / m;
                    g_im[i] = -dim[i] / m;
                }
            }
            -total
        }
        Norm::L2 => {
            let n = dre.iter().chain(&dim).map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.0 {
                for i in 0..d {
                    g_re[i] = -dre[i] / n;
                    g_im[i] = -dim[i] / n;
                }
            }
            -n
        }
    };
    let mut ga = vec![0.0; 2 * d];
    let mut gr = vec![0.0; 2 * d];
    let mut gc = vec![0.0; 2 * d];
    for i in 0..d {
        // ∂/∂a = conj(r)·g, ∂/∂r = conj(a)·g
        ga[i] = g_re[i] * r.re[i] + g_im[i] * r.im[i];
        ga[d + i] = -g_re[i] * r.im[i] + g_im[i] * r.re[i];
        gr[i] = g_re[i] * a.re[i] + g_im[i] * a.im[i];
        gr[d + i] = -g_re[i] * a.im[i] + g_im[i] * a.re[i];
        gc[i] = -g_re[i];
        gc[d + i] = -g_im[i];
    }
    Ok((score, ga, gr, gc))
}
