use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::env::OBS_DIM;

use super::PolicyError;

pub const LANE_ACTIONS: usize = 3;
pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 1.0;
pub const DEFAULT_HIDDEN: usize = 128;

/// Named tensor inside the flat parameter vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: &'static str,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Offsets of every tensor for a given hidden width.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub input: usize,
    pub hidden: usize,
}

impl Layout {
    pub fn new(input: usize, hidden: usize) -> Self {
        Self { input, hidden }
    }

    pub fn tensors(&self) -> Vec<TensorSpec> {
        let (n, h) = (self.input, self.hidden);
        let shapes: [(&'static str, Vec<usize>); 11] = [
            ("actor.w1", vec![h, n]),
            ("actor.b1", vec![h]),
            ("actor.w_mean", vec![1, h]),
            ("actor.b_mean", vec![1]),
            ("actor.w_lane", vec![LANE_ACTIONS, h]),
            ("actor.b_lane", vec![LANE_ACTIONS]),
            ("actor.log_std", vec![1]),
            ("critic.w1", vec![h, n]),
            ("critic.b1", vec![h]),
            ("critic.w_value", vec![1, h]),
            ("critic.b_value", vec![1]),
        ];
        let mut offset = 0;
        shapes
            .into_iter()
            .map(|(name, shape)| {
                let spec = TensorSpec { name, shape, offset };
                offset += spec.len();
                spec
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(TensorSpec::len).sum()
    }

    fn offsets(&self) -> Offsets {
        let t = self.tensors();
        Offsets {
            aw1: t[0].offset,
            ab1: t[1].offset,
            wm: t[2].offset,
            bm: t[3].offset,
            wl: t[4].offset,
            bl: t[5].offset,
            log_std: t[6].offset,
            cw1: t[7].offset,
            cb1: t[8].offset,
            wv: t[9].offset,
            bv: t[10].offset,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Offsets {
    aw1: usize,
    ab1: usize,
    wm: usize,
    bm: usize,
    wl: usize,
    bl: usize,
    log_std: usize,
    cw1: usize,
    cb1: usize,
    wv: usize,
    bv: usize,
}

/// Output heads for one observation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActionDistribution {
    pub accel_mean: f64,
    pub accel_log_std: f64,
    pub lane_logits: [f64; LANE_ACTIONS],
    pub value: f64,
}

/// Hidden activations kept for the backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardCache {
    pub actor_hidden: Vec<f64>,
    pub critic_hidden: Vec<f64>,
}

/// Loss gradient with respect to the network outputs.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HeadGrads {
    pub accel_mean: f64,
    pub accel_log_std: f64,
    pub lane_logits: [f64; LANE_ACTIONS],
    pub value: f64,
}

/// Actor and critic, each one tanh hidden layer, over a flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyNet {
    pub layout: Layout,
    pub params: Vec<f64>,
}

impl PolicyNet {
    pub fn zeros(hidden: usize) -> Self {
        let layout = Layout::new(OBS_DIM, hidden);
        Self {
            layout,
            params: vec![0.0; layout.param_count()],
        }
    }

    /// Orthogonal initialization; output heads scaled by 0.01, log-std 0.
    pub fn init(hidden: usize, seed: u64) -> Self {
        let mut net = Self::zeros(hidden);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gains = [
            ("actor.w1", 1.0),
            ("actor.w_mean", 0.01),
            ("actor.w_lane", 0.01),
            ("critic.w1", 1.0),
            ("critic.w_value", 0.01),
        ];
        for spec in net.layout.tensors() {
            if let Some(&(_, gain)) = gains.iter().find(|(n, _)| *n == spec.name) {
                let m = orthogonal(spec.shape[0], spec.shape[1], gain, &mut rng);
                net.params[spec.range()].copy_from_slice(&m);
            }
        }
        net
    }

    pub fn hidden(&self) -> usize {
        self.layout.hidden
    }

    pub fn log_std(&self) -> f64 {
        self.params[self.layout.offsets().log_std]
    }

    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        self.layout
            .tensors()
            .into_iter()
            .find(|t| t.name == name)
            .map(|t| &self.params[t.range()])
    }

    /// Projects the log-std back into its allowed range.
    pub fn clamp_log_std(&mut self) {
        let i = self.layout.offsets().log_std;
        self.params[i] = self.params[i].clamp(LOG_STD_MIN, LOG_STD_MAX);
    }

    pub fn check_finite(&self) -> Result<(), PolicyError> {
        match self.params.iter().position(|p| !p.is_finite()) {
            None => Ok(()),
            Some(i) => Err(PolicyError::NonFinite(format!("parameter {i} is {}", self.params[i]))),
        }
    }

    pub fn forward(&self, obs: &[f64]) -> Result<ActionDistribution, PolicyError> {
        Ok(self.forward_cached(obs)?.0)
    }

    pub fn forward_cached(&self, obs: &[f64]) -> Result<(ActionDistribution, ForwardCache), PolicyError> {
        let (n, h) = (self.layout.input, self.layout.hidden);
        if obs.len() != n {
            return Err(PolicyError::Dimension {
                expected: n,
                got: obs.len(),
            });
        }
        let o = self.layout.offsets();
        let p = &self.params;
        let actor_hidden = hidden_layer(&p[o.aw1..o.aw1 + h * n], &p[o.ab1..o.ab1 + h], obs);
        let critic_hidden = hidden_layer(&p[o.cw1..o.cw1 + h * n], &p[o.cb1..o.cb1 + h], obs);
        let mut lane_logits = [0.0; LANE_ACTIONS];
        for (k, logit) in lane_logits.iter_mut().enumerate() {
            *logit = p[o.bl + k] + dot(&p[o.wl + k * h..o.wl + (k + 1) * h], &actor_hidden);
        }
        let dist = ActionDistribution {
            accel_mean: p[o.bm] + dot(&p[o.wm..o.wm + h], &actor_hidden),
            accel_log_std: p[o.log_std],
            lane_logits,
            value: p[o.bv] + dot(&p[o.wv..o.wv + h], &critic_hidden),
        };
        Ok((dist, ForwardCache { actor_hidden, critic_hidden }))
    }

    /// Accumulates the parameter gradient of one sample into `grad`.
    pub fn backward(&self, obs: &[f64], cache: &ForwardCache, up: &HeadGrads, grad: &mut [f64]) {
        let (n, h) = (self.layout.input, self.layout.hidden);
        let o = self.layout.offsets();
        let p = &self.params;
        debug_assert_eq!(grad.len(), p.len());

        let ah = &cache.actor_hidden;
        grad[o.bm] += up.accel_mean;
        grad[o.log_std] += up.accel_log_std;
        let mut d_ah = vec![0.0; h];
        for j in 0..h {
            grad[o.wm + j] += up.accel_mean * ah[j];
            d_ah[j] += up.accel_mean * p[o.wm + j];
        }
        for k in 0..LANE_ACTIONS {
            let g = up.lane_logits[k];
            grad[o.bl + k] += g;
            if g != 0.0 {
                for j in 0..h {
                    grad[o.wl + k * h + j] += g * ah[j];
                    d_ah[j] += g * p[o.wl + k * h + j];
                }
            }
        }
        trunk_backward(&mut grad[o.aw1..o.ab1 + h], n, h, obs, ah, &d_ah);

        let ch = &cache.critic_hidden;
        grad[o.bv] += up.value;
        let d_ch: Vec<f64> = (0..h)
            .map(|j| {
                grad[o.wv + j] += up.value * ch[j];
                up.value * p[o.wv + j]
            })
            .collect();
        trunk_backward(&mut grad[o.cw1..o.cb1 + h], n, h, obs, ch, &d_ch);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn hidden_layer(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    b.iter()
        .enumerate()
        .map(|(j, bj)| (bj + dot(&w[j * n..(j + 1) * n], x)).tanh())
        .collect()
}

/// `grad` holds `w1` (h×n) immediately followed by `b1` (h).
fn trunk_backward(grad: &mut [f64], n: usize, h: usize, x: &[f64], act: &[f64], d_act: &[f64]) {
    let (gw, gb) = grad.split_at_mut(h * n);
    for j in 0..h {
        let dz = d_act[j] * (1.0 - act[j] * act[j]);
        if dz == 0.0 {
            continue;
        }
        gb[j] += dz;
        for (g, xi) in gw[j * n..(j + 1) * n].iter_mut().zip(x) {
            *g += dz * xi;
        }
    }
}

/// `rows × cols` matrix (row-major) with orthonormal rows or columns, times `gain`.
fn orthogonal(rows: usize, cols: usize, gain: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    // Orthonormalize the shorter dimension's vectors with modified Gram-Schmidt.
    let (count, len) = if rows >= cols { (cols, rows) } else { (rows, cols) };
    let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(count);
    while vecs.len() < count {
        let mut v: Vec<f64> = (0..len).map(|_| StandardNormal.sample(rng)).collect();
        for u in &vecs {
            let d = dot(&v, u);
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
        }
        let norm = dot(&v, &v).sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        vecs.push(v);
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = gain * if rows >= cols { vecs[c][r] } else { vecs[r][c] };
        }
    }
    out
}
