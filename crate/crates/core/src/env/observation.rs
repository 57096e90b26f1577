use crate::road::{Blinker, LaneId, Route, Traffic, Vehicle, VehicleId, World};

use super::EnvError;

pub const EGO_FEATURES: usize = 5;
pub const NEIGHBOR_FEATURES: usize = 4;
pub const NEIGHBOR_SLOTS: usize = 6;
pub const OBS_DIM: usize = EGO_FEATURES + NEIGHBOR_SLOTS * NEIGHBOR_FEATURES;
/// Sensor range for neighbor detection, m.
pub const DETECTION_RANGE: f64 = 200.0;

/// Normalized per-agent state: ego block followed by six neighbor blocks.
///
/// Ego: `[speed, pos_x, pos_y, lane_index, destination]`. Neighbors, in
/// order leader, follower, left-front, left-rear, right-front, right-rear:
/// `[distance, speed, blinker, destination]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation(pub [f64; OBS_DIM]);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn neighbor(&self, slot: NeighborSlot) -> [f64; NEIGHBOR_FEATURES] {
        let start = EGO_FEATURES + slot as usize * NEIGHBOR_FEATURES;
        let mut out = [0.0; NEIGHBOR_FEATURES];
        out.copy_from_slice(&self.0[start..start + NEIGHBOR_FEATURES]);
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NeighborSlot {
    Leader = 0,
    Follower = 1,
    LeftFront = 2,
    LeftRear = 3,
    RightFront = 4,
    RightRear = 5,
}

fn destination(route: Route) -> f64 {
    if route.exits() {
        1.0
    } else {
        0.0
    }
}

fn blinker_on(b: Blinker) -> f64 {
    if b == Blinker::Off {
        0.0
    } else {
        1.0
    }
}

struct Normalizer {
    speed: f64,
    length: f64,
    lane: f64,
}

impl Normalizer {
    fn unit(x: f64) -> f64 {
        x.clamp(0.0, 1.0)
    }

    fn block(&self, ego: &Vehicle, other: &Vehicle) -> [f64; NEIGHBOR_FEATURES] {
        [
            Self::unit((other.pos - ego.pos).abs() / DETECTION_RANGE),
            Self::unit(other.speed / self.speed),
            blinker_on(other.blinker),
            destination(other.route),
        ]
    }

    fn front_fill(&self, limit: f64) -> [f64; NEIGHBOR_FEATURES] {
        [1.0, Self::unit(limit / self.speed), 0.0, 0.0]
    }

    fn rear_fill(&self) -> [f64; NEIGHBOR_FEATURES] {
        [1.0, 0.0, 0.0, 0.0]
    }
}

/// Builds the observation of vehicle `id`.
pub fn build_observation(world: &World, id: VehicleId) -> Result<Observation, EnvError> {
    let traffic = world.traffic();
    let i = world.index_of(id).ok_or(EnvError::UnknownVehicle(id))?;
    Ok(observe(&traffic, i))
}

/// Observation of vehicle index `i` given a prebuilt traffic view.
pub fn observe(traffic: &Traffic<'_>, i: usize) -> Observation {
    let net = traffic.net;
    let ego = &traffic.vehicles[i];
    let norm = Normalizer {
        speed: net.freeway_speed_limit,
        length: net.mainline_length(),
        lane: (net.lane_count() - 1).max(1) as f64,
    };
    let mut out = [0.0; OBS_DIM];
    let lane_feature = net.lateral_rank(ego.lane) as f64 / norm.lane;
    out[0] = Normalizer::unit(ego.speed / norm.speed);
    out[1] = Normalizer::unit(ego.pos / norm.length);
    out[2] = lane_feature;
    out[3] = lane_feature;
    out[4] = destination(ego.route);

    let in_range = |j: usize| (traffic.vehicles[j].pos - ego.pos).abs() <= DETECTION_RANGE;
    let mut put = |slot: NeighborSlot, block: [f64; NEIGHBOR_FEATURES]| {
        let start = EGO_FEATURES + slot as usize * NEIGHBOR_FEATURES;
        out[start..start + NEIGHBOR_FEATURES].copy_from_slice(&block);
    };

    let lanes: [(Option<LaneId>, NeighborSlot, NeighborSlot); 3] = [
        (Some(ego.lane), NeighborSlot::Leader, NeighborSlot::Follower),
        (net.left_of(ego.lane, ego.pos), NeighborSlot::LeftFront, NeighborSlot::LeftRear),
        (net.right_of(ego.lane, ego.pos), NeighborSlot::RightFront, NeighborSlot::RightRear),
    ];
    for (lane, front_slot, rear_slot) in lanes {
        // Missing lanes keep their all-zero blocks.
        let Some(lane) = lane else { continue };
        let front = traffic.front_of(lane, ego.pos, i).filter(|&j| in_range(j));
        let rear = traffic.rear_of(lane, ego.pos, i).filter(|&j| in_range(j));
        put(
            front_slot,
            match front {
                Some(j) => norm.block(ego, &traffic.vehicles[j]),
                None => norm.front_fill(net.speed_limit(lane, ego.pos)),
            },
        );
        put(
            rear_slot,
            match rear {
                Some(j) => norm.block(ego, &traffic.vehicles[j]),
                None => norm.rear_fill(),
            },
        );
    }
    Observation(out)
}
