//! Batch evaluation: independent seeded episodes, run through [`Exec`].

use crate::env::{run_episode, EnvConfig, EnvError, Policy};
use crate::exec::Exec;
use crate::metrics::{compute_metrics, EmissionCoefficients, MetricsRecord};
use crate::road::EpisodeLog;
use crate::seed::derive_seed;

pub struct EpisodeResult {
    pub seed: u64,
    pub log: EpisodeLog,
    pub system_rewards: Vec<f64>,
    pub record: MetricsRecord,
}

/// Seeds of evaluation episodes `0..n`. Disjoint from the training streams.
pub fn episode_seeds(base: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|k| derive_seed(base, &[2, k])).collect()
}

/// One episode per seed; results in seed order whatever the worker count.
pub fn evaluate(
    policy: &dyn Policy,
    env: &EnvConfig,
    emissions: &EmissionCoefficients,
    seeds: &[u64],
    exec: Exec,
) -> Result<Vec<EpisodeResult>, EnvError> {
    exec.map(seeds.to_vec(), |seed| {
        let ep = run_episode(policy, env, seed)?;
        let record = compute_metrics(&ep.log, emissions);
        Ok(EpisodeResult {
            seed,
            log: ep.log,
            system_rewards: ep.system_rewards,
            record,
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::BaselinePolicy;

    #[test]
    fn worker_count_does_not_change_results() {
        let mut env = EnvConfig::default();
        env.scenario.sim.episode_steps = 120;
        let seeds = episode_seeds(5, 3);
        let coef = EmissionCoefficients::default();
        let a = evaluate(&BaselinePolicy, &env, &coef, &seeds, Exec::Sequential).unwrap();
        let b = evaluate(&BaselinePolicy, &env, &coef, &seeds, Exec::Parallel { workers: 3 }).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.seed, y.seed);
            assert_eq!(x.log, y.log);
            assert_eq!(x.record, y.record);
        }
    }
}
