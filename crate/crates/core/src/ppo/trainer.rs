use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::EnvConfig;
use crate::exec::Exec;
use crate::policy::{Checkpoint, PolicyNet, DEFAULT_HIDDEN};
use crate::seed::derive_seed;

use super::adam::{clip_grad_norm, Adam};
use super::loss::{ppo_loss, LossCoefficients, Sample};
use super::rollout::{collect_env, CollectSpec, RolloutBuffer};
use super::PpoError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub clip: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    /// Global gradient-norm limit per minibatch; 0 disables it.
    pub max_grad_norm: f64,
    /// Agent-steps collected per iteration.
    pub samples_per_iteration: usize,
    /// Environments collected per iteration (each gets an equal share).
    pub num_envs: usize,
    pub iterations: u64,
    pub checkpoint_every: u64,
    pub hidden: usize,
    /// Start each environment at a random point of its episode.
    pub warmup: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 5e-5,
            clip: 0.2,
            gamma: 0.99,
            lambda: 0.95,
            epochs: 10,
            minibatch_size: 2048,
            value_coef: 0.5,
            entropy_coef: 0.0,
            max_grad_norm: 0.5,
            samples_per_iteration: 16_000,
            num_envs: 4,
            iterations: 200,
            checkpoint_every: 10,
            hidden: DEFAULT_HIDDEN,
            warmup: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), PpoError> {
        let bad = |m: String| Err(PpoError::Config(m));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad(format!("lambda must lie in (0, 1], got {}", self.lambda));
        }
        if !(self.clip > 0.0) {
            return bad(format!("clip must be positive, got {}", self.clip));
        }
        if !(self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.minibatch_size == 0 || self.num_envs == 0 || self.hidden == 0 || self.checkpoint_every == 0 {
            return bad("minibatch_size, num_envs, hidden and checkpoint_every must be positive".into());
        }
        Ok(())
    }

    fn coefficients(&self) -> LossCoefficients {
        LossCoefficients {
            clip: self.clip,
            value: self.value_coef,
            entropy: self.entropy_coef,
        }
    }
}

/// Summary of one training iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationStats {
    /// Iterations completed, including this one.
    pub iteration: u64,
    pub samples: usize,
    /// Cumulative agent-steps consumed by training.
    pub total_env_steps: u64,
    /// Mean over recorded environment steps of the summed agent rewards.
    pub mean_system_reward: f64,
    pub clip_fraction: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub log_std: f64,
    /// Set when the update was skipped (nothing collected).
    pub warning: Option<String>,
}

pub struct Trainer {
    pub config: TrainConfig,
    pub env: EnvConfig,
    pub seed: u64,
    pub net: PolicyNet,
    pub adam: Adam,
    pub iteration: u64,
    pub env_steps: u64,
    pub exec: Exec,
}

impl Trainer {
    pub fn new(config: TrainConfig, env: EnvConfig, seed: u64, exec: Exec) -> Result<Self, PpoError> {
        config.validate()?;
        env.scenario.validate()?;
        let net = PolicyNet::init(config.hidden, derive_seed(seed, &[0x1417]));
        let adam = Adam::new(net.params.len(), config.learning_rate);
        Ok(Self {
            config,
            env,
            seed,
            net,
            adam,
            iteration: 0,
            env_steps: 0,
            exec,
        })
    }

    /// Continues training from a checkpoint.
    pub fn resume(config: TrainConfig, env: EnvConfig, seed: u64, exec: Exec, ck: Checkpoint) -> Result<Self, PpoError> {
        let mut t = Self::new(config, env, seed, exec)?;
        if ck.net.layout != t.net.layout {
            return Err(PpoError::Config(format!(
                "checkpoint has hidden width {}, config asks for {}",
                ck.net.hidden(),
                t.config.hidden
            )));
        }
        if let Some(state) = ck.optimizer {
            t.adam = Adam::with_state(state, t.config.learning_rate);
        }
        t.net = ck.net;
        t.iteration = ck.iteration;
        t.env_steps = ck.env_steps;
        Ok(t)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            iteration: self.iteration,
            env_steps: self.env_steps,
            net: self.net.clone(),
            optimizer: Some(self.adam.state.clone()),
        }
    }

    /// Rollouts for the next iteration, merged in environment order.
    pub fn collect(&self) -> Result<RolloutBuffer, PpoError> {
        let c = &self.config;
        let spec = CollectSpec {
            quota: c.samples_per_iteration.div_ceil(c.num_envs),
            warmup: c.warmup,
            gamma: c.gamma,
            lambda: c.lambda,
        };
        let seeds: Vec<u64> = (0..c.num_envs as u64)
            .map(|e| derive_seed(self.seed, &[self.iteration, e]))
            .collect();
        let net = &self.net;
        let env = &self.env;
        let parts = self.exec.map(seeds, |s| collect_env(net, env, s, &spec));
        let mut buf = RolloutBuffer::default();
        for part in parts {
            buf.extend(part?);
        }
        Ok(buf)
    }

    /// Collects, then runs the clipped-surrogate updates.
    pub fn step(&mut self) -> Result<IterationStats, PpoError> {
        let mut buf = self.collect()?;
        self.iteration += 1;
        self.env_steps += buf.len() as u64;
        let mut stats = IterationStats {
            iteration: self.iteration,
            samples: buf.len(),
            total_env_steps: self.env_steps,
            mean_system_reward: buf.mean_system_reward(),
            clip_fraction: 0.0,
            policy_loss: 0.0,
            value_loss: 0.0,
            entropy: 0.0,
            log_std: self.net.log_std(),
            warning: None,
        };
        if buf.is_empty() {
            stats.warning = Some("no agent transitions collected; update skipped".into());
            return Ok(stats);
        }
        buf.normalize_advantages();
        let c = self.config.clone();
        let coef = c.coefficients();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &[self.iteration, u64::MAX]));
        let mut order: Vec<usize> = (0..buf.len()).collect();
        let mut batches = 0usize;
        for _ in 0..c.epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(c.minibatch_size) {
                let batch: Vec<&Sample> = chunk.iter().map(|&i| &buf.samples[i]).collect();
                let mut out = ppo_loss(&self.net, &batch, &coef)?;
                clip_grad_norm(&mut out.grad, c.max_grad_norm);
                self.adam.step(&mut self.net.params, &out.grad);
                self.net.clamp_log_std();
                self.net.check_finite()?;
                stats.clip_fraction += out.clip_fraction;
                stats.policy_loss += out.policy_loss;
                stats.value_loss += out.value_loss;
                stats.entropy += out.entropy;
                batches += 1;
            }
        }
        if batches > 0 {
            let n = batches as f64;
            stats.clip_fraction /= n;
            stats.policy_loss /= n;
            stats.value_loss /= n;
            stats.entropy /= n;
        }
        stats.log_std = self.net.log_std();
        Ok(stats)
    }
}

pub const CURVE_FILE: &str = "reward_curve.csv";
pub const FINAL_CHECKPOINT: &str = "final.ckpt";
const CURVE_HEADER: &str = "iteration,total_env_steps,mean_system_reward,clip_fraction,policy_loss,value_loss";

fn curve_row(s: &IterationStats) -> String {
    format!(
        "{},{},{},{},{},{}",
        s.iteration, s.total_env_steps, s.mean_system_reward, s.clip_fraction, s.policy_loss, s.value_loss
    )
}

pub fn checkpoint_path(dir: &Path, iteration: u64) -> PathBuf {
    dir.join("checkpoints").join(format!("iter_{iteration:05}.ckpt"))
}

/// Trains until `config.iterations`, writing the reward curve, periodic
/// checkpoints and a final checkpoint into `dir`. A resumed trainer keeps
/// the curve rows up to its iteration and appends after them.
pub fn train(
    trainer: &mut Trainer,
    dir: &Path,
    mut on_iteration: impl FnMut(&IterationStats),
) -> Result<Vec<IterationStats>, PpoError> {
    fs::create_dir_all(dir.join("checkpoints"))?;
    let curve_path = dir.join(CURVE_FILE);
    let mut curve = vec![CURVE_HEADER.to_string()];
    if trainer.iteration > 0 {
        if let Ok(old) = fs::read_to_string(&curve_path) {
            for line in old.lines().skip(1) {
                let it: u64 = line
                    .split(',')
                    .next()
                    .and_then(|f| f.parse().ok())
                    .ok_or_else(|| PpoError::Format(format!("bad reward-curve row: {line}")))?;
                if it <= trainer.iteration {
                    curve.push(line.to_string());
                }
            }
        }
    } else {
        trainer.checkpoint().save(&checkpoint_path(dir, 0))?;
    }
    let write_curve = |rows: &[String]| fs::write(&curve_path, rows.join("\n") + "\n");
    write_curve(&curve)?;

    let mut all = Vec::new();
    while trainer.iteration < trainer.config.iterations {
        let stats = trainer.step()?;
        curve.push(curve_row(&stats));
        write_curve(&curve)?;
        if stats.iteration % trainer.config.checkpoint_every == 0 || stats.iteration == trainer.config.iterations {
            trainer.checkpoint().save(&checkpoint_path(dir, stats.iteration))?;
        }
        on_iteration(&stats);
        all.push(stats);
    }
    trainer.checkpoint().save(&dir.join(FINAL_CHECKPOINT))?;
    Ok(all)
}
