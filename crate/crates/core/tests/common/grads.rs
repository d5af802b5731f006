//! Central finite differences against every hand-written backward pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use terp::complex::{ComplexVec, Norm};
use terp::nn::{Ffn, Linear, Params};
use terp::predictor::{qa_loss, score_view_grad, weighted_qa_loss, RotateScaleHead, ScoringMode};
use terp::reasoner::{attend_paths, attend_paths_backward, fuse_path, fuse_path_backward, fuse_path_forward};
use terp::text::{AvgEncoder, TextEncoder, Tokenizer};

pub const EPS: f64 = 1e-6;
pub const TOL: f64 = 1e-3;

/// `|a − n| / max(|a| + |n|, 1e-7)`; the floor only matters for gradients
/// that are zero up to rounding.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-7)
}

/// Largest relative error between `grad` and central differences of `f` at `x`.
pub fn check_vec(x: &[f64], grad: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    assert_eq!(x.len(), grad.len());
    let mut worst: f64 = 0.0;
    let mut y = x.to_vec();
    for i in 0..x.len() {
        y[i] = x[i] + EPS;
        let up = f(&y);
        y[i] = x[i] - EPS;
        let down = f(&y);
        y[i] = x[i];
        worst = worst.max(rel_err(grad[i], (up - down) / (2.0 * EPS)));
    }
    worst
}

/// Same as [`check_vec`] over every parameter slice of `p`.
pub fn check_params<P: Params + Clone>(p: &P, grad: &P, mut f: impl FnMut(&P) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    let mut q = p.clone();
    let gs: Vec<Vec<f64>> = grad.slices().iter().map(|s| s.to_vec()).collect();
    for (si, g) in gs.iter().enumerate() {
        for i in 0..g.len() {
            let orig = q.slices()[si][i];
            q.slices_mut()[si][i] = orig + EPS;
            let up = f(&q);
            q.slices_mut()[si][i] = orig - EPS;
            let down = f(&q);
            q.slices_mut()[si][i] = orig;
            worst = worst.max(rel_err(g[i], (up - down) / (2.0 * EPS)));
        }
    }
    worst
}

fn randv(rng: &mut impl Rng, n: usize, a: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-a..a)).collect()
}

fn randc(rng: &mut impl Rng, d: usize) -> ComplexVec {
    ComplexVec::new(randv(rng, d, 1.0), randv(rng, d, 1.0)).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Random FFN whose hidden pre-activations stay away from the ReLU kink.
fn ffn(rng: &mut impl Rng, i: usize, h: usize, o: usize) -> Ffn {
    let mut f = Ffn::new(i, h, o, rng);
    f.b1 = randv(rng, h, 0.5);
    f.b2 = randv(rng, o, 0.5);
    f
}

fn min_abs_pre(f: &Ffn, x: &[f64]) -> f64 {
    f.forward(x).unwrap().1.pre.iter().fold(f64::INFINITY, |m, p| m.min(p.abs()))
}

/// Worst error of one operation over its instances.
#[derive(Clone, Debug)]
pub struct GradReport {
    pub name: &'static str,
    pub instances: usize,
    pub worst: f64,
}

impl GradReport {
    pub fn ok(&self) -> bool {
        self.instances >= 20 && self.worst < TOL
    }
}

pub fn encoder(n: usize, seed: u64) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tok = Tokenizer::build(["who is the father of mother"], ["father", "born_in"]);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let dim = rng.gen_range(1..8);
        let enc = AvgEncoder::new(tok.len(), dim, 0.5, &mut rng);
        let len = rng.gen_range(1..7);
        let q: Vec<usize> = (0..len).map(|_| rng.gen_range(0..tok.len())).collect();
        let w = randv(&mut rng, dim, 1.0);
        // plain pooling
        let mut g = vec![0.0; enc.table.len()];
        enc.backward(&q, &w, &mut g);
        worst = worst.max(check_vec(&enc.table, &g, |t| {
            let e = AvgEncoder::from_table(dim, t.to_vec()).unwrap();
            dot(&e.encode(&q).unwrap(), &w)
        }));
        // path text: gradient of the pooled sequence
        let labels = ["father", "born_in"];
        let n_rel = rng.gen_range(1..=2);
        let seq = AvgEncoder::path_sequence(&tok, &q, &labels[..n_rel]);
        let mut g = vec![0.0; enc.table.len()];
        enc.backward(&seq, &w, &mut g);
        worst = worst.max(check_vec(&enc.table, &g, |t| {
            let e = AvgEncoder::from_table(dim, t.to_vec()).unwrap();
            dot(&e.encode_path_text(&tok, &q, &labels[..n_rel]).unwrap(), &w)
        }));
    }
    GradReport {
        name: "encoder",
        instances: n,
        worst,
    }
}

pub fn fusion(n: usize, seed: u64) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < n {
        let t = rng.gen_range(1..6);
        let d = rng.gen_range(1..5);
        let f = ffn(&mut rng, t + 2 * d, 2 * t, t);
        let p_t = randv(&mut rng, t, 1.0);
        let p_l = randc(&mut rng, d);
        let (_, x, cache) = fuse_path_forward(&p_t, &p_l, &f).unwrap();
        if min_abs_pre(&f, &x) < 1e-3 {
            continue;
        }
        let w = randv(&mut rng, t, 1.0);
        let mut gf = Ffn::zeros(f.input, f.hidden, f.output);
        let (g_t, g_l) = fuse_path_backward(&f, &x, &cache, &w, &mut gf, t);
        let loss = |pt: &[f64], pl: &ComplexVec, ff: &Ffn| dot(&fuse_path(pt, pl, ff).unwrap(), &w);
        worst = worst.max(check_params(&f, &gf, |ff| loss(&p_t, &p_l, ff)));
        worst = worst.max(check_vec(&p_t, &g_t, |pt| loss(pt, &p_l, &f)));
        worst = worst.max(check_vec(&p_l.flatten(), &g_l, |pl| loss(&p_t, &ComplexVec::from_flat(pl), &f)));
        done += 1;
    }
    GradReport {
        name: "fusion",
        instances: n,
        worst,
    }
}

pub fn attention(n: usize, seed: u64) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let t = rng.gen_range(1..6);
        let a = rng.gen_range(1..5);
        let k = rng.gen_range(1..5);
        let v = rng.gen_range(1..5);
        let w1 = Linear::new(t, a, &mut rng);
        let w2 = Linear::new(t, a, &mut rng);
        let q = randv(&mut rng, t, 1.5);
        let textual: Vec<Vec<f64>> = (0..k).map(|_| randv(&mut rng, t, 1.5)).collect();
        let hybrid: Vec<Vec<f64>> = (0..k).map(|_| randv(&mut rng, v, 1.0)).collect();
        let w = randv(&mut rng, v, 1.0);
        let att = attend_paths(&q, &textual, &hybrid, &w1, &w2).unwrap();
        let mut g1 = Linear::zeros(t, a);
        let mut g2 = Linear::zeros(t, a);
        let g = attend_paths_backward(&att, &q, &textual, &hybrid, &w1, &w2, &w, &mut g1, &mut g2);
        let loss = |q: &[f64], tx: &[Vec<f64>], hy: &[Vec<f64>], a1: &Linear, a2: &Linear| {
            dot(&attend_paths(q, tx, hy, a1, a2).unwrap().output, &w)
        };
        worst = worst.max(check_vec(&q, &g.q, |x| loss(x, &textual, &hybrid, &w1, &w2)));
        worst = worst.max(check_params(&w1, &g1, |l| loss(&q, &textual, &hybrid, l, &w2)));
        worst = worst.max(check_params(&w2, &g2, |l| loss(&q, &textual, &hybrid, &w1, l)));
        for i in 0..k {
            let mut tx = textual.clone();
            worst = worst.max(check_vec(&textual[i], &g.textual[i], |x| {
                tx[i] = x.to_vec();
                loss(&q, &tx, &hybrid, &w1, &w2)
            }));
            let mut hy = hybrid.clone();
            worst = worst.max(check_vec(&hybrid[i], &g.hybrid[i], |x| {
                hy[i] = x.to_vec();
                loss(&q, &textual, &hy, &w1, &w2)
            }));
        }
    }
    GradReport {
        name: "attention",
        instances: n,
        worst,
    }
}

pub fn heads(n: usize, seed: u64) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = [ScoringMode::RotateScale, ScoringMode::Rotate, ScoringMode::Complex];
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < n {
        let mode = modes[done % 3];
        let t = rng.gen_range(1..6);
        let d = rng.gen_range(1..5);
        let mut head = RotateScaleHead::new(mode, t, d, &mut rng);
        head.theta = ffn(&mut rng, t, 2 * t, head.theta.output);
        if let Some(m) = head.modulus.as_mut() {
            *m = ffn(&mut rng, t, 2 * t, d);
        }
        let view = randv(&mut rng, t, 1.0);
        let kink = min_abs_pre(&head.theta, &view).min(head.modulus.as_ref().map_or(1.0, |m| min_abs_pre(m, &view)));
        if kink < 1e-3 {
            continue;
        }
        let w = randv(&mut rng, 2 * d, 1.0);
        let (rep, cache) = head.forward(&view).unwrap();
        let mut g = RotateScaleHead::zeros(mode, t, d);
        let g_view = head.backward(&view, &rep, &cache, &w, &mut g);
        let loss = |h: &RotateScaleHead, v: &[f64]| dot(&h.forward(v).unwrap().0.rep.flatten(), &w);
        worst = worst.max(check_params(&head, &g, |h| loss(h, &view)));
        worst = worst.max(check_vec(&view, &g_view, |v| loss(&head, v)));
        done += 1;
    }
    GradReport {
        name: "rotate_scale_heads",
        instances: n,
        worst,
    }
}

pub fn score_view(n: usize, seed: u64) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases = [
        (ScoringMode::RotateScale, Norm::L1),
        (ScoringMode::RotateScale, Norm::L2),
        (ScoringMode::Complex, Norm::L1),
    ];
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let (mode, norm) = cases[i % cases.len()];
        let d = rng.gen_range(1..6);
        let (h, r, c) = (randc(&mut rng, d), randc(&mut rng, d), randc(&mut rng, d));
        let (_, gh, gr, gc) = score_view_grad(mode, &h, &r, &c, norm).unwrap();
        let s = |h: &ComplexVec, r: &ComplexVec, c: &ComplexVec| score_view_grad(mode, h, r, c, norm).unwrap().0;
        worst = worst.max(check_vec(&h.flatten(), &gh, |x| s(&ComplexVec::from_flat(x), &r, &c)));
        worst = worst.max(check_vec(&r.flatten(), &gr, |x| s(&h, &ComplexVec::from_flat(x), &c)));
        worst = worst.max(check_vec(&c.flatten(), &gc, |x| s(&h, &r, &ComplexVec::from_flat(x))));
    }
    GradReport {
        name: "score_view",
        instances: n,
        worst,
    }
}

pub fn loss(n: usize, seed: u64) -> GradReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let len = rng.gen_range(2..10);
        let target = rng.gen_range(0..len);
        let s_q = randv(&mut rng, len, 4.0);
        let mut s_p = randv(&mut rng, len, 4.0);
        // some candidates without paths
        for (j, x) in s_p.iter_mut().enumerate() {
            if j != target && rng.gen_bool(0.3) {
                *x = f64::NEG_INFINITY;
            }
        }
        let (wq, wp) = if i % 2 == 0 { (1.0, 1.0) } else { (0.4, 0.6) };
        let l = weighted_qa_loss(&s_q, Some(&s_p), target, wq, wp).unwrap();
        let f = |q: &[f64], p: &[f64]| weighted_qa_loss(q, Some(p), target, wq, wp).unwrap().loss;
        worst = worst.max(check_vec(&s_q, &l.grad_q, |x| f(x, &s_p)));
        let gp = l.grad_p.expect("target has a path");
        // finite coordinates only; -inf entries carry zero gradient
        for j in 0..len {
            if s_p[j].is_finite() {
                let mut y = s_p.clone();
                worst = worst.max(check_vec(&s_p[j..=j], &gp[j..=j], |x| {
                    y[j] = x[0];
                    f(&s_q, &y)
                }));
            } else {
                worst = worst.max(gp[j].abs());
            }
        }
        let plain = qa_loss(&s_q, None, target).unwrap();
        worst = worst.max(check_vec(&s_q, &plain.grad_q, |x| qa_loss(x, None, target).unwrap().loss));
    }
    GradReport {
        name: "qa_loss",
        instances: n,
        worst,
    }
}

pub fn all(n: usize, seed: u64) -> Vec<GradReport> {
    vec![
        encoder(n, seed),
        fusion(n, seed + 1),
        attention(n, seed + 2),
        heads(n, seed + 3),
        score_view(n, seed + 4),
        loss(n, seed + 5),
    ]
}
