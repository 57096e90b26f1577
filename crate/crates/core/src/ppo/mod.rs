//! Multi-agent PPO with a shared policy.

mod adam;
mod gae;
mod loss;
mod rollout;
mod trainer;

pub use adam::{clip_grad_norm, Adam};
pub use gae::{compute_gae, normalize};
pub use loss::{clipped_objective, ppo_loss, LossCoefficients, LossOutput, Sample};
pub use rollout::{collect_env, CollectSpec, RolloutBuffer};
pub use trainer::{
    checkpoint_path, train, IterationStats, TrainConfig, Trainer, CURVE_FILE, FINAL_CHECKPOINT,
};

use thiserror::Error;

use crate::env::EnvError;
use crate::policy::PolicyError;
use crate::road::SimError;

#[derive(Debug, Error)]
pub enum PpoError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("training fault: non-finite {0}")]
    NonFinite(String),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<SimError> for PpoError {
    fn from(e: SimError) -> Self {
        PpoError::Env(EnvError::Sim(e))
    }
}
