use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::env::AgentAction;
use crate::road::{LaneDecision, A_MAX, A_MIN};

use super::net::{ActionDistribution, HeadGrads, LANE_ACTIONS};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// An action as stored in the rollout buffer: the raw Gaussian sample and
/// the lane index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampledAction {
    pub raw_accel: f64,
    pub lane: usize,
}

impl SampledAction {
    pub fn to_action(self) -> AgentAction {
        AgentAction {
            accel: self.raw_accel.clamp(A_MIN, A_MAX),
            lane: LaneDecision::from_index(self.lane),
        }
    }
}

impl ActionDistribution {
    pub fn lane_probs(&self) -> [f64; LANE_ACTIONS] {
        let m = self.lane_logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e = self.lane_logits.map(|z| (z - m).exp());
        let s: f64 = e.iter().sum();
        e.map(|x| x / s)
    }

    pub fn lane_log_probs(&self) -> [f64; LANE_ACTIONS] {
        let m = self.lane_logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + self.lane_logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
        self.lane_logits.map(|z| z - lse)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SampledAction {
        let z: f64 = StandardNormal.sample(rng);
        let raw_accel = self.accel_mean + self.accel_log_std.exp() * z;
        let u: f64 = rng.gen();
        let probs = self.lane_probs();
        let mut acc = 0.0;
        let mut lane = LANE_ACTIONS - 1;
        for (k, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                lane = k;
                break;
            }
        }
        SampledAction { raw_accel, lane }
    }

    /// Mean acceleration and most likely lane.
    pub fn mode(&self) -> SampledAction {
        let mut lane = 0;
        for k in 1..LANE_ACTIONS {
            if self.lane_logits[k] > self.lane_logits[lane] {
                lane = k;
            }
        }
        SampledAction {
            raw_accel: self.accel_mean,
            lane,
        }
    }

    /// Joint log-probability of the factored heads.
    pub fn log_prob(&self, a: SampledAction) -> f64 {
        let u = (a.raw_accel - self.accel_mean) / self.accel_log_std.exp();
        -0.5 * u * u - self.accel_log_std - HALF_LN_2PI + self.lane_log_probs()[a.lane]
    }

    pub fn entropy(&self) -> f64 {
        let lp = self.lane_log_probs();
        let cat: f64 = -lp.iter().map(|l| l.exp() * l).sum::<f64>();
        0.5 + HALF_LN_2PI + self.accel_log_std + cat
    }

    /// `d log_prob / d heads`, scaled by `scale`.
    pub fn log_prob_grad(&self, a: SampledAction, scale: f64) -> HeadGrads {
        let sigma = self.accel_log_std.exp();
        let u = (a.raw_accel - self.accel_mean) / sigma;
        let probs = self.lane_probs();
        let mut lane_logits = [0.0; LANE_ACTIONS];
        for k in 0..LANE_ACTIONS {
            let hit = if k == a.lane { 1.0 } else { 0.0 };
            lane_logits[k] = scale * (hit - probs[k]);
        }
        HeadGrads {
            accel_mean: scale * u / sigma,
            accel_log_std: scale * (u * u - 1.0),
            lane_logits,
            value: 0.0,
        }
    }

    /// `d entropy / d heads`, scaled by `scale`.
    pub fn entropy_grad(&self, scale: f64) -> HeadGrads {
        let lp = self.lane_log_probs();
        let h: f64 = -lp.iter().map(|l| l.exp() * l).sum::<f64>();
        HeadGrads {
            accel_mean: 0.0,
            accel_log_std: scale,
            lane_logits: lp.map(|l| -scale * l.exp() * (l + h)),
            value: 0.0,
        }
    }
}

impl HeadGrads {
    pub fn add(&mut self, other: &HeadGrads) {
        self.accel_mean += other.accel_mean;
        self.accel_log_std += other.accel_log_std;
        for k in 0..LANE_ACTIONS {
            self.lane_logits[k] += other.lane_logits[k];
        }
        self.value += other.value;
    }
}
