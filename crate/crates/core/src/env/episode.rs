use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::road::{EpisodeLog, EventFlags, LaneDecision, Scenario, VehicleId, World, A_MAX, A_MIN};
use crate::seed::derive_seed;

use super::observation::{observe, Observation};
use super::reward::{compute_reward, time_headway, RewardBreakdown, RewardWeights};
use super::{apply_actions, AgentAction, EnvError};

/// Scenario plus reward design.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub scenario: Scenario,
    pub reward: RewardWeights,
}

/// What a policy returns for one agent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolicyOutput {
    pub action: AgentAction,
    /// Acceleration sample before clamping (what the log-prob refers to).
    pub raw_accel: f64,
    pub log_prob: f64,
    pub value: f64,
}

impl PolicyOutput {
    pub fn plain(action: AgentAction) -> Self {
        Self {
            action,
            raw_accel: action.accel,
            log_prob: 0.0,
            value: 0.0,
        }
    }
}

/// Shared policy driving every controlled agent.
pub trait Policy: Sync {
    /// Whether vehicles in the control zone are handed to this policy.
    /// `false` leaves the whole road to the baseline drivers.
    fn controls_agents(&self) -> bool {
        true
    }

    fn act(&self, obs: &[Observation], rng: &mut ChaCha8Rng) -> Vec<PolicyOutput>;
}

/// Everybody drives with the baseline model.
#[derive(Clone, Copy, Debug, Default)]
pub struct BaselinePolicy;

impl Policy for BaselinePolicy {
    fn controls_agents(&self) -> bool {
        false
    }

    fn act(&self, _obs: &[Observation], _rng: &mut ChaCha8Rng) -> Vec<PolicyOutput> {
        Vec::new()
    }
}

/// Uniformly random acceleration and lane decision.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomPolicy;

impl Policy for RandomPolicy {
    fn act(&self, obs: &[Observation], rng: &mut ChaCha8Rng) -> Vec<PolicyOutput> {
        obs.iter()
            .map(|_| {
                let accel = rng.gen_range(A_MIN..=A_MAX);
                let lane = LaneDecision::ALL[rng.gen_range(0..3)];
                PolicyOutput::plain(AgentAction { accel, lane })
            })
            .collect()
    }
}

/// One agent's transition.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentStep {
    pub step: u32,
    pub id: VehicleId,
    pub obs: Observation,
    pub output: PolicyOutput,
    pub reward: RewardBreakdown,
    /// The agent left the road during this step.
    pub done: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepOutcome {
    pub agents: Vec<AgentStep>,
    /// Sum of the agents' rewards.
    pub system_reward: f64,
}

/// A single environment instance.
pub struct MultiAgentEnv {
    pub world: World,
    weights: RewardWeights,
    rng: ChaCha8Rng,
    log: Option<EpisodeLog>,
    steps: u32,
}

impl MultiAgentEnv {
    pub fn new(config: &EnvConfig, seed: u64, rl_control: bool, record_log: bool) -> Result<Self, EnvError> {
        let mut world = World::new(config.scenario.clone(), derive_seed(seed, &[0]))?;
        world.set_rl_control(rl_control);
        let log = record_log.then(|| EpisodeLog::new(world.dt()));
        Ok(Self {
            world,
            weights: config.reward.clone(),
            rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, &[1])),
            log,
            steps: 0,
        })
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn finished(&self) -> bool {
        self.steps >= self.world.scenario.sim.episode_steps
    }

    pub fn take_log(&mut self) -> Option<EpisodeLog> {
        self.log.take()
    }

    /// Spawn, observe, act, mediate, advance, reward.
    pub fn step(&mut self, policy: &dyn Policy) -> Result<StepOutcome, EnvError> {
        self.world.spawn_arrivals();
        let (ids, obs): (Vec<VehicleId>, Vec<Observation>) = {
            let traffic = self.world.traffic();
            self.world
                .vehicles
                .iter()
                .enumerate()
                .filter(|(_, v)| v.controlled)
                .map(|(i, v)| (v.id, observe(&traffic, i)))
                .unzip()
        };
        let outputs = if ids.is_empty() {
            Vec::new()
        } else {
            policy.act(&obs, &mut self.rng)
        };
        if outputs.len() != ids.len() {
            return Err(EnvError::PolicyOutput {
                expected: ids.len(),
                got: outputs.len(),
            });
        }
        let actions: BTreeMap<VehicleId, AgentAction> =
            ids.iter().zip(&outputs).map(|(&id, o)| (id, o.action)).collect();
        let commands = apply_actions(&self.world, &actions)?;
        let report = self.world.step(&commands)?;

        let flags: BTreeMap<VehicleId, EventFlags> =
            report.events.iter().map(|e| (e.id, e.flags)).collect();
        let traffic = self.world.traffic();
        let net = &self.world.scenario.network;
        let mut outcome = StepOutcome::default();
        for ((id, obs), output) in ids.into_iter().zip(obs).zip(outputs) {
            let (after, headway, done) = match self.world.index_of(id) {
                Some(i) => (&self.world.vehicles[i], time_headway(&traffic, i), false),
                None => {
                    let v = report
                        .exited
                        .iter()
                        .find(|v| v.id == id)
                        .ok_or(EnvError::UnknownVehicle(id))?;
                    (v, f64::INFINITY, true)
                }
            };
            let reward = compute_reward(net, after, flags[&id], headway, &self.weights);
            outcome.system_reward += reward.total;
            outcome.agents.push(AgentStep {
                step: self.steps,
                id,
                obs,
                output,
                reward,
                done,
            });
        }
        if let Some(log) = self.log.as_mut() {
            log.record(&self.world, &report);
        }
        self.steps += 1;
        Ok(outcome)
    }
}

/// Result of a complete episode.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub log: EpisodeLog,
    /// System reward per step.
    pub system_rewards: Vec<f64>,
    pub transitions: Vec<AgentStep>,
}

impl Episode {
    pub fn total_reward(&self) -> f64 {
        self.system_rewards.iter().sum()
    }

    /// Per-agent reward breakdowns as CSV.
    pub fn write_reward_csv<W: Write>(&self, out: W) -> Result<(), EnvError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "vehicle_id", "v", "l", "c", "s", "b", "h", "total"])
            .map_err(crate::road::SimError::from)?;
        for t in &self.transitions {
            let r = &t.reward;
            w.write_record([
                t.step.to_string(),
                t.id.0.to_string(),
                r.v.to_string(),
                r.l.to_string(),
                r.c.to_string(),
                r.s.to_string(),
                r.b.to_string(),
                r.h.to_string(),
                r.total.to_string(),
            ])
            .map_err(crate::road::SimError::from)?;
        }
        w.flush().map_err(crate::road::SimError::from)?;
        Ok(())
    }
}

/// Runs one full episode with `policy`.
pub fn run_episode(policy: &dyn Policy, config: &EnvConfig, seed: u64) -> Result<Episode, EnvError> {
    let mut env = MultiAgentEnv::new(config, seed, policy.controls_agents(), true)?;
    let mut system_rewards = Vec::with_capacity(config.scenario.sim.episode_steps as usize);
    let mut transitions = Vec::new();
    while !env.finished() {
        let outcome = env.step(policy)?;
        system_rewards.push(outcome.system_reward);
        transitions.extend(outcome.agents);
    }
    Ok(Episode {
        log: env.take_log().expect("log recording enabled"),
        system_rewards,
        transitions,
    })
}
