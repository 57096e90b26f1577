//! Decentralized cooperative lane changing at a freeway weaving area.
//!
//! The crate bundles a seedable microscopic simulator ([`road`]), a
//! multi-agent MDP wrapper ([`env`]), a shared actor-critic network with
//! analytic gradients ([`policy`]), a PPO trainer ([`ppo`]) and the
//! evaluation pipeline ([`metrics`]).

pub mod config;
pub mod env;
pub mod eval;
pub mod exec;
pub mod metrics;
pub mod policy;
pub mod ppo;
pub mod road;
pub mod seed;
