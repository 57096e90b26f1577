use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{observe, EnvConfig, MultiAgentEnv, Observation};
use crate::policy::{NetPolicy, PolicyNet, SampledAction};
use crate::road::VehicleId;
use crate::seed::derive_seed;

use super::gae::{compute_gae, normalize};
use super::loss::Sample;
use super::PpoError;

/// Transitions of one iteration, concatenated over environments and agents.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RolloutBuffer {
    pub samples: Vec<Sample>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    /// Sum over recorded environment steps of the system reward.
    pub system_reward_sum: f64,
    /// Environment steps during which transitions were recorded.
    pub recorded_steps: u64,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean_system_reward(&self) -> f64 {
        if self.recorded_steps == 0 {
            0.0
        } else {
            self.system_reward_sum / self.recorded_steps as f64
        }
    }

    pub fn extend(&mut self, other: RolloutBuffer) {
        self.samples.extend(other.samples);
        self.rewards.extend(other.rewards);
        self.dones.extend(other.dones);
        self.system_reward_sum += other.system_reward_sum;
        self.recorded_steps += other.recorded_steps;
    }

    pub fn normalize_advantages(&mut self) {
        let mut adv: Vec<f64> = self.samples.iter().map(|s| s.advantage).collect();
        normalize(&mut adv);
        for (s, a) in self.samples.iter_mut().zip(adv) {
            s.advantage = a;
        }
    }
}

#[derive(Default)]
struct Trajectory {
    obs: Vec<Observation>,
    actions: Vec<SampledAction>,
    log_probs: Vec<f64>,
    values: Vec<f64>,
    rewards: Vec<f64>,
    done: bool,
}

/// Per-environment collection settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollectSpec {
    /// Agent-steps to record.
    pub quota: usize,
    /// Run the policy for a random number of steps before recording.
    pub warmup: bool,
    pub gamma: f64,
    pub lambda: f64,
}

fn finish(buf: &mut RolloutBuffer, t: Trajectory, bootstrap: f64, spec: &CollectSpec) -> Result<(), PpoError> {
    let n = t.rewards.len();
    let mut values = t.values.clone();
    values.push(if t.done { 0.0 } else { bootstrap });
    let mut dones = vec![false; n];
    if let Some(last) = dones.last_mut() {
        *last = t.done;
    }
    let (adv, ret) = compute_gae(&t.rewards, &values, &dones, spec.gamma, spec.lambda)?;
    for i in 0..n {
        buf.samples.push(Sample {
            obs: t.obs[i],
            action: t.actions[i],
            log_prob_old: t.log_probs[i],
            value_old: t.values[i],
            advantage: adv[i],
            ret: ret[i],
        });
        buf.rewards.push(t.rewards[i]);
        buf.dones.push(dones[i]);
    }
    Ok(())
}

/// Closes every open trajectory, bootstrapping from the current state.
fn flush(
    buf: &mut RolloutBuffer,
    open: &mut BTreeMap<VehicleId, Trajectory>,
    env: &MultiAgentEnv,
    net: &PolicyNet,
    spec: &CollectSpec,
) -> Result<(), PpoError> {
    let traffic = env.world.traffic();
    for (id, t) in std::mem::take(open) {
        let bootstrap = match env.world.index_of(id) {
            Some(i) => net.forward(observe(&traffic, i).as_slice())?.value,
            None => 0.0,
        };
        finish(buf, t, bootstrap, spec)?;
    }
    Ok(())
}

/// Collects at least `spec.quota` agent-steps from fresh environments
/// seeded from `seed`, unless an entire episode yields no transitions.
pub fn collect_env(net: &PolicyNet, config: &EnvConfig, seed: u64, spec: &CollectSpec) -> Result<RolloutBuffer, PpoError> {
    let policy = NetPolicy::stochastic(net);
    let mut buf = RolloutBuffer::default();
    let episode_steps = config.scenario.sim.episode_steps;
    let mut episode = 0u64;
    while buf.len() < spec.quota {
        let mut env = MultiAgentEnv::new(config, derive_seed(seed, &[episode]), true, false)?;
        let warmup = if spec.warmup && episode == 0 && episode_steps > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[u64::MAX]));
            rng.gen_range(0..episode_steps)
        } else {
            0
        };
        while env.steps() < warmup {
            env.step(&policy)?;
        }
        let before = buf.len();
        let mut open: BTreeMap<VehicleId, Trajectory> = BTreeMap::new();
        while !env.finished() && buf.len() + open.values().map(|t| t.rewards.len()).sum::<usize>() < spec.quota {
            let outcome = env.step(&policy)?;
            buf.system_reward_sum += outcome.system_reward;
            buf.recorded_steps += 1;
            for a in outcome.agents {
                let t = open.entry(a.id).or_default();
                t.obs.push(a.obs);
                t.actions.push(SampledAction {
                    raw_accel: a.output.raw_accel,
                    lane: a.output.action.lane.index(),
                });
                t.log_probs.push(a.output.log_prob);
                t.values.push(a.output.value);
                t.rewards.push(a.reward.total);
                if a.done {
                    let mut t = open.remove(&a.id).expect("just inserted");
                    t.done = true;
                    finish(&mut buf, t, 0.0, spec)?;
                }
            }
        }
        flush(&mut buf, &mut open, &env, net, spec)?;
        let fresh = warmup == 0;
        if fresh && buf.len() == before && env.finished() {
            break;
        }
        episode += 1;
    }
    Ok(buf)
}
