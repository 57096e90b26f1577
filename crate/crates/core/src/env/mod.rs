//! Multi-agent MDP on top of the simulator: observations, action
//! mediation, rewards and episode orchestration.

mod episode;
mod observation;
mod reward;

pub use episode::{
    run_episode, AgentStep, BaselinePolicy, EnvConfig, Episode, MultiAgentEnv, Policy,
    PolicyOutput, RandomPolicy, StepOutcome,
};
pub use observation::{
    build_observation, observe, NeighborSlot, Observation, DETECTION_RANGE, EGO_FEATURES,
    NEIGHBOR_FEATURES, NEIGHBOR_SLOTS, OBS_DIM,
};
pub use reward::{
    compute_reward, headway_penalty, lane_reward, time_headway, weave_progress, DesiredLaneSet,
    RewardBreakdown, RewardWeights,
};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::road::{
    AccelRequest, Command, Intent, LaneDecision, SimError, VehicleId, World, A_MAX, A_MIN,
};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("unknown vehicle {0}")]
    UnknownVehicle(VehicleId),
    #[error("no action supplied for controlled vehicle {0}")]
    MissingAction(VehicleId),
    #[error("policy returned {got} outputs for {expected} agents")]
    PolicyOutput { expected: usize, got: usize },
}

/// Hybrid action of one agent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgentAction {
    /// Requested acceleration, m/s²; clamped to `[A_MIN, A_MAX]`.
    pub accel: f64,
    pub lane: LaneDecision,
}

/// Turns agent actions into world commands.
///
/// Controlled vehicles must have an action; everybody else drives with the
/// baseline model and any actions addressed to them are ignored.
pub fn apply_actions(
    world: &World,
    actions: &BTreeMap<VehicleId, AgentAction>,
) -> Result<Vec<Command>, EnvError> {
    let mut intents = Vec::with_capacity(world.vehicles.len());
    for v in &world.vehicles {
        if !v.controlled {
            intents.push(None);
            continue;
        }
        let action = actions.get(&v.id).ok_or(EnvError::MissingAction(v.id))?;
        intents.push(Some(Intent {
            decision: action.lane,
            accel: AccelRequest::Direct(action.accel.clamp(A_MIN, A_MAX)),
        }));
    }
    Ok(world.resolve_commands(&intents)?)
}

#[cfg(test)]
pub(crate) mod test_support {
    use crate::road::{LaneId, Route, VehicleId, World};

    pub fn place(world: &mut World, lane: u8, pos: f64, speed: f64, route: Route) -> VehicleId {
        world.insert_vehicle(LaneId(lane), pos, speed, route)
    }
}
