//! Microscopic simulation of a freeway weaving area.

mod baseline;
pub mod geometry;
mod idm;
mod log;
pub mod safety;
mod spawn;
mod traffic;
pub mod vehicle;
mod world;

pub use baseline::{baseline_acceleration, baseline_lane_decision, route_need};
pub use geometry::{mph_to_mps, LaneId, RoadNetwork, MPH_TO_MPS};
pub use idm::idm_acceleration;
pub use log::{EpisodeLog, EventFlags, LogRow};
pub use safety::{safe_acceleration_bound, safe_speed};
pub use spawn::InflowSpec;
pub use traffic::{LeaderGap, Traffic};
pub use vehicle::{
    Blinker, DriverParams, LaneDecision, Route, Vehicle, VehicleId, A_MAX, A_MIN, B_PHYS,
    EMERGENCY_DECEL, VEHICLE_LENGTH,
};
pub use world::{
    AccelRequest, Census, Command, Intent, Scenario, SimParams, StepReport, VehicleEvents, World,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("input outside model domain: {0}")]
    Domain(String),
    #[error("unknown vehicle {0}")]
    UnknownVehicle(VehicleId),
    #[error("lane {to} is not adjacent to lane {from} at x = {pos:.2} m (vehicle {vehicle})")]
    NotAdjacent {
        vehicle: VehicleId,
        from: LaneId,
        to: LaneId,
        pos: f64,
    },
    #[error("expected {expected} commands, got {got}")]
    CommandMismatch { expected: usize, got: usize },
    #[error("command addressed to vehicle {got} where {expected} was expected")]
    CommandForWrongVehicle { expected: VehicleId, got: VehicleId },
    #[error("vehicles {follower} and {leader} overlap on lane {lane} after step {step}")]
    Overlap {
        step: u64,
        lane: LaneId,
        follower: VehicleId,
        leader: VehicleId,
    },
    #[error("malformed episode log: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
