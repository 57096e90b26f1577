use crate::env::Observation;
use crate::policy::{HeadGrads, PolicyNet, SampledAction};

use super::PpoError;

/// One stored agent-step ready for optimization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub obs: Observation,
    pub action: SampledAction,
    pub log_prob_old: f64,
    pub value_old: f64,
    pub advantage: f64,
    pub ret: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossCoefficients {
    pub clip: f64,
    pub value: f64,
    pub entropy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub grad: Vec<f64>,
}

/// Per-sample clipped surrogate `min(κA, clip(κ, 1−ε, 1+ε)A)`.
pub fn clipped_objective(ratio: f64, advantage: f64, eps: f64) -> f64 {
    (ratio * advantage).min(ratio.clamp(1.0 - eps, 1.0 + eps) * advantage)
}

/// Loss and gradient of a minibatch:
/// `−mean(clipped) + c_v·mean((V − R)²) − c_e·mean(H)`.
pub fn ppo_loss(net: &PolicyNet, batch: &[&Sample], c: &LossCoefficients) -> Result<LossOutput, PpoError> {
    let mut out = LossOutput {
        loss: 0.0,
        policy_loss: 0.0,
        value_loss: 0.0,
        entropy: 0.0,
        clip_fraction: 0.0,
        grad: vec![0.0; net.params.len()],
    };
    if batch.is_empty() {
        return Ok(out);
    }
    let inv = 1.0 / batch.len() as f64;
    let mut clipped = 0usize;
    for s in batch {
        let (d, cache) = net.forward_cached(s.obs.as_slice())?;
        let log_prob = d.log_prob(s.action);
        let ratio = (log_prob - s.log_prob_old).exp();
        if !ratio.is_finite() {
            return Err(PpoError::NonFinite(format!(
                "ratio {ratio} (log-prob {log_prob}, old {})",
                s.log_prob_old
            )));
        }
        let obj = clipped_objective(ratio, s.advantage, c.clip);
        if (ratio - 1.0).abs() > c.clip {
            clipped += 1;
        }
        let entropy = d.entropy();
        let err = d.value - s.ret;
        out.policy_loss -= obj * inv;
        out.value_loss += err * err * inv;
        out.entropy += entropy * inv;

        // d(−obj)/d(log_prob): the unclipped branch is active unless the
        // clipped one is strictly smaller.
        let unclipped = ratio * s.advantage <= ratio.clamp(1.0 - c.clip, 1.0 + c.clip) * s.advantage;
        let mut up = if unclipped {
            d.log_prob_grad(s.action, -inv * s.advantage * ratio)
        } else {
            HeadGrads::default()
        };
        if c.entropy != 0.0 {
            up.add(&d.entropy_grad(-c.entropy * inv));
        }
        up.value = c.value * 2.0 * err * inv;
        net.backward(s.obs.as_slice(), &cache, &up, &mut out.grad);
    }
    out.loss = out.policy_loss + c.value * out.value_loss - c.entropy * out.entropy;
    out.clip_fraction = clipped as f64 * inv;
    if !out.loss.is_finite() {
        return Err(PpoError::NonFinite(format!("loss {}", out.loss)));
    }
    if let Some(i) = out.grad.iter().position(|g| !g.is_finite()) {
        return Err(PpoError::NonFinite(format!("gradient of parameter {i}")));
    }
    Ok(out)
}
