//! Small dense layers with hand-written backward passes, and Adam.

use rand::Rng;

use crate::error::{check_dim, Result};

/// Anything holding trainable parameters as flat slices, in a fixed order.
///
/// A gradient accumulator is a value of the same type, so parameter and
/// gradient slices line up position by position.
pub trait Params {
    fn slices(&self) -> Vec<&[f64]>;
    fn slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn zero_grad(&mut self) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    /// `self += other`, slice by slice.
    fn accumulate(&mut self, other: &Self) {
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    fn num_params(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }
}

/// `y = x · W` without bias.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    pub input: usize,
    pub output: usize,
    /// Row-major `input × output`.
    pub w: Vec<f64>,
}

impl Linear {
    pub fn new(input: usize, output: usize, rng: &mut impl Rng) -> Self {
        let a = (6.0 / (input + output) as f64).sqrt();
        Self {
            input,
            output,
            w: (0..input * output).map(|_| rng.gen_range(-a..=a)).collect(),
        }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            input,
            output,
            w: vec![0.0; input * output],
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input, x.len())?;
        let mut y = vec![0.0; self.output];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &self.w[i * self.output..(i + 1) * self.output];
            for (yk, wk) in y.iter_mut().zip(row) {
                *yk += xi * wk;
            }
        }
        Ok(y)
    }

    /// Accumulates `∂W` into `grad` and returns `∂x`.
    pub fn backward(&self, x: &[f64], g_y: &[f64], grad: &mut Linear) -> Vec<f64> {
        let mut g_x = vec![0.0; self.input];
        for i in 0..self.input {
            let row = &self.w[i * self.output..(i + 1) * self.output];
            let grow = &mut grad.w[i * self.output..(i + 1) * self.output];
            let xi = x[i];
            let mut acc = 0.0;
            for k in 0..self.output {
                grow[k] += xi * g_y[k];
                acc += row[k] * g_y[k];
            }
            g_x[i] = acc;
        }
        g_x
    }
}

impl Params for Linear {
    fn slices(&self) -> Vec<&[f64]> {
        vec![&self.w]
    }
    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.w]
    }
}

/// Single-hidden-layer feed-forward map with ReLU.
#[derive(Clone, Debug, PartialEq)]
pub struct Ffn {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Hidden pre-activations kept for the backward pass.
#[derive(Clone, Debug)]
pub struct FfnCache {
    pub pre: Vec<f64>,
}

impl Ffn {
    pub fn new(input: usize, hidden: usize, output: usize, rng: &mut impl Rng) -> Self {
        let a1 = (6.0 / (input + hidden) as f64).sqrt();
        let a2 = (6.0 / (hidden + output) as f64).sqrt();
        Self {
            input,
            hidden,
            output,
            w1: (0..input * hidden).map(|_| rng.gen_range(-a1..=a1)).collect(),
            b1: vec![0.0; hidden],
            w2: (0..hidden * output).map(|_| rng.gen_range(-a2..=a2)).collect(),
            b2: vec![0.0; output],
        }
    }

    pub fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        Self {
            input,
            hidden,
            output,
            w1: vec![0.0; input * hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden * output],
            b2: vec![0.0; output],
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, FfnCache)> {
        check_dim(self.input, x.len())?;
        let mut pre = self.b1.clone();
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &self.w1[i * self.hidden..(i + 1) * self.hidden];
            for (p, w) in pre.iter_mut().zip(row) {
                *p += xi * w;
            }
        }
        let mut y = self.b2.clone();
        for (j, &p) in pre.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let row = &self.w2[j * self.output..(j + 1) * self.output];
            for (yk, w) in y.iter_mut().zip(row) {
                *yk += p * w;
            }
        }
        Ok((y, FfnCache { pre }))
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.0)
    }

    /// Accumulates parameter gradients into `grad` and returns `∂x`.
    pub fn backward(&self, x: &[f64], cache: &FfnCache, g_y: &[f64], grad: &mut Ffn) -> Vec<f64> {
        for (gb, g) in grad.b2.iter_mut().zip(g_y) {
            *gb += g;
        }
        let mut g_pre = vec![0.0; self.hidden];
        for j in 0..self.hidden {
            let p = cache.pre[j];
            if p <= 0.0 {
                continue;
            }
            let row = &self.w2[j * self.output..(j + 1) * self.output];
            let grow = &mut grad.w2[j * self.output..(j + 1) * self.output];
            let mut acc = 0.0;
            for k in 0..self.output {
                grow[k] += p * g_y[k];
                acc += row[k] * g_y[k];
            }
            g_pre[j] = acc;
        }
        for (gb, g) in grad.b1.iter_mut().zip(&g_pre) {
            *gb += g;
        }
        let mut g_x = vec![0.0; self.input];
        for i in 0..self.input {
            let row = &self.w1[i * self.hidden..(i + 1) * self.hidden];
            let grow = &mut grad.w1[i * self.hidden..(i + 1) * self.hidden];
            let xi = x[i];
            let mut acc = 0.0;
            for j in 0..self.hidden {
                let g = g_pre[j];
                if g == 0.0 {
                    continue;
                }
                grow[j] += xi * g;
                acc += row[j] * g;
            }
            g_x[i] = acc;
        }
        g_x
    }
}

impl Params for Ffn {
    fn slices(&self) -> Vec<&[f64]> {
        vec![&self.w1, &self.b1, &self.w2, &self.b2]
    }
    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|x| (x - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Numerically stable `log(1 + exp(x))`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-5,
            beta1: 0.9,
            beta2: 0.998,
            eps: 1e-8,
        }
    }
}

/// Adam with moment buffers created lazily from the first call's shapes.
#[derive(Clone, Debug)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One update; `params` and `grads` must keep the same order across calls.
    pub fn update(&mut self, params: Vec<&mut [f64]>, grads: Vec<&[f64]>) {
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| vec![0.0; g.len()]).collect();
            self.v = self.m.clone();
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            eps,
        } = self.config;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        for (((p, g), m), v) in params
            .into_iter()
            .zip(grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p[i] -= learning_rate * mhat / (vhat.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_ffn_outputs_zero() {
        let f = Ffn::zeros(3, 6, 2);
        assert_eq!(f.apply(&[1.0, -2.0, 0.5]).unwrap(), vec![0.0, 0.0]);
        assert!(f.apply(&[1.0]).is_err());
    }

    #[test]
    fn ffn_backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let mut f = Ffn::new(4, 7, 3, &mut rng);
            f.b1.iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let c: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let loss = |f: &Ffn, x: &[f64]| -> f64 {
                f.apply(x).unwrap().iter().zip(&c).map(|(y, c)| y * c).sum()
            };
            let (_, cache) = f.forward(&x).unwrap();
            let mut grad = Ffn::zeros(4, 7, 3);
            let gx = f.backward(&x, &cache, &c, &mut grad);
            let h = 1e-6;
            for i in 0..4 {
                let mut xp = x.clone();
                xp[i] += h;
                let mut xm = x.clone();
                xm[i] -= h;
                let num = (loss(&f, &xp) - loss(&f, &xm)) / (2.0 * h);
                assert!((num - gx[i]).abs() < 1e-6 * (1.0 + num.abs()));
            }
            let n = f.num_params();
            for idx in (0..n).step_by(5) {
                let mut fp = f.clone();
                let mut fm = f.clone();
                let (mut k, mut s) = (idx, 0);
                while k >= f.slices()[s].len() {
                    k -= f.slices()[s].len();
                    s += 1;
                }
                fp.slices_mut()[s][k] += h;
                fm.slices_mut()[s][k] -= h;
                let num = (loss(&fp, &x) - loss(&fm, &x)) / (2.0 * h);
                let ana = grad.slices()[s][k];
                assert!((num - ana).abs() < 1e-6 * (1.0 + num.abs()));
            }
        }
    }

    #[test]
    fn adam_minimises_quadratic() {
        let mut p = vec![3.0, -2.0];
        let mut opt = Adam::new(AdamConfig {
            learning_rate: 0.1,
            ..AdamConfig::default()
        });
        for _ in 0..500 {
            let g: Vec<f64> = p.iter().map(|x| 2.0 * x).collect();
            opt.update(vec![&mut p], vec![&g]);
        }
        assert!(p.iter().all(|x| x.abs() < 1e-2));
        assert_eq!(opt.steps(), 500);
    }

    #[test]
    fn stable_activations() {
        assert!((softplus(1000.0) - 1000.0).abs() < 1e-9);
        assert!(softplus(-1000.0) >= 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
        let s = softmax(&[1000.0, 1000.0]);
        assert_eq!(s, vec![0.5, 0.5]);
    }
}
