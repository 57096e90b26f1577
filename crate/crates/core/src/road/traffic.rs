//! Neighbor queries over a (possibly tentative) lane assignment.

use super::geometry::{LaneId, RoadNetwork};
use super::safety::safe_acceleration_bound;
use super::vehicle::{LaneDecision, Route, Vehicle, A_MAX, A_MIN};
use super::SimError;

/// Deceleration used to bring exiting vehicles down to the off-ramp limit.
pub const LIMIT_DECEL: f64 = 3.0;

/// Leader seen by a vehicle: a vehicle, or the end of the lane for its route.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeaderGap {
    pub gap: f64,
    pub speed: f64,
}

/// Vehicles sorted per lane, with a working lane per vehicle so lane changes
/// can be applied tentatively one at a time.
#[derive(Clone, Debug)]
pub struct Traffic<'a> {
    pub net: &'a RoadNetwork,
    pub vehicles: &'a [Vehicle],
    pub min_gap: f64,
    pub dt: f64,
    lanes: Vec<LaneId>,
    by_lane: Vec<Vec<usize>>,
}

impl<'a> Traffic<'a> {
    pub fn new(net: &'a RoadNetwork, vehicles: &'a [Vehicle], min_gap: f64, dt: f64) -> Self {
        let mut by_lane = vec![Vec::new(); net.lane_count()];
        for (i, v) in vehicles.iter().enumerate() {
            by_lane[v.lane.0 as usize].push(i);
        }
        for lane in &mut by_lane {
            lane.sort_by(|&a, &b| vehicles[a].pos.total_cmp(&vehicles[b].pos));
        }
        let lanes = vehicles.iter().map(|v| v.lane).collect();
        Self {
            net,
            vehicles,
            min_gap,
            dt,
            lanes,
            by_lane,
        }
    }

    pub fn lane_of(&self, i: usize) -> LaneId {
        self.lanes[i]
    }

    /// Vehicle indices on `lane`, ascending by position.
    pub fn on_lane(&self, lane: LaneId) -> &[usize] {
        &self.by_lane[lane.0 as usize]
    }

    /// Nearest vehicle on `lane` with front position `>= x`, other than `skip`.
    pub fn front_of(&self, lane: LaneId, x: f64, skip: usize) -> Option<usize> {
        let list = self.on_lane(lane);
        let start = list.partition_point(|&j| self.vehicles[j].pos < x);
        list[start..].iter().copied().find(|&j| j != skip)
    }

    /// Nearest vehicle on `lane` with front position `< x`, other than `skip`.
    pub fn rear_of(&self, lane: LaneId, x: f64, skip: usize) -> Option<usize> {
        let list = self.on_lane(lane);
        let end = list.partition_point(|&j| self.vehicles[j].pos < x);
        list[..end].iter().rev().copied().find(|&j| j != skip)
    }

    pub fn leader(&self, i: usize) -> Option<usize> {
        let v = &self.vehicles[i];
        self.front_of(self.lanes[i], v.pos, i)
    }

    pub fn follower(&self, i: usize) -> Option<usize> {
        let v = &self.vehicles[i];
        self.rear_of(self.lanes[i], v.pos, i)
    }

    /// Lane end ahead of a vehicle of `route` on `lane`: the auxiliary lane
    /// stops at the off-ramp gore for everybody not leaving the freeway.
    pub fn lane_end(&self, lane: LaneId, route: Route) -> Option<f64> {
        (self.net.is_aux(lane) && !route.exits()).then(|| self.net.off_ramp_gore())
    }

    /// Vehicle and lane-end constraints ahead of vehicle `i` were it on `lane`.
    pub fn constraints_ahead(&self, i: usize, lane: LaneId) -> Vec<LeaderGap> {
        let v = &self.vehicles[i];
        let mut out = Vec::with_capacity(2);
        if let Some(j) = self.front_of(lane, v.pos, i) {
            let lead = &self.vehicles[j];
            out.push(LeaderGap {
                gap: lead.rear() - v.pos,
                speed: lead.speed,
            });
        }
        if let Some(end) = self.lane_end(lane, v.route) {
            out.push(LeaderGap {
                gap: end - v.pos,
                speed: 0.0,
            });
        }
        out
    }

    /// Speed ceiling for a vehicle of `route` at `x` on `lane`, including the
    /// approach envelope down to the off-ramp limit.
    pub fn speed_cap(&self, lane: LaneId, x: f64, route: Route) -> f64 {
        let net = self.net;
        let limit = net.speed_limit(lane, x);
        if net.is_aux(lane) && route.exits() && x < net.off_ramp_gore() {
            let ramp = net.ramp_speed_limit;
            let envelope = (ramp * ramp + 2.0 * LIMIT_DECEL * (net.off_ramp_gore() - x)).sqrt();
            limit.min(envelope)
        } else {
            limit
        }
    }

    /// Largest safe acceleration for vehicle `i` on its working lane.
    pub fn safety_bound(&self, i: usize) -> f64 {
        let v = &self.vehicles[i];
        let lane = self.lanes[i];
        let mut bound = A_MAX.min((self.speed_cap(lane, v.pos, v.route) - v.speed) / self.dt);
        for c in self.constraints_ahead(i, lane) {
            bound = bound.min(safe_acceleration_bound(v.speed, c.gap, c.speed, self.min_gap, self.dt));
        }
        bound
    }

    /// Target lane for a decision, if that lane exists beside the vehicle.
    pub fn target_lane(&self, i: usize, decision: LaneDecision) -> Option<LaneId> {
        let lane = self.lanes[i];
        let x = self.vehicles[i].pos;
        match decision {
            LaneDecision::Stay => Some(lane),
            LaneDecision::Left => self.net.left_of(lane, x),
            LaneDecision::Right => self.net.right_of(lane, x),
        }
    }

    /// Whether vehicle `i` can move into `target` this step without physical
    /// overlap and without forcing anyone (itself included) to brake harder
    /// than the action floor.
    pub fn lane_change_feasible(&self, i: usize, target: LaneId) -> Result<bool, SimError> {
        let v = &self.vehicles[i];
        let from = self.lanes[i];
        if !self.net.is_adjacent(from, target, v.pos) {
            return Err(SimError::NotAdjacent {
                vehicle: v.id,
                from,
                to: target,
                pos: v.pos,
            });
        }
        let s0 = self.min_gap;
        if v.speed > self.speed_cap(target, v.pos, v.route) + 1e-9 {
            return Ok(false);
        }
        for c in self.constraints_ahead(i, target) {
            if c.gap < s0 {
                return Ok(false);
            }
            if safe_acceleration_bound(v.speed, c.gap, c.speed, s0, self.dt) < A_MIN {
                return Ok(false);
            }
        }
        if let Some(j) = self.rear_of(target, v.pos, i) {
            let rear = &self.vehicles[j];
            let gap = v.rear() - rear.pos;
            if gap < s0 {
                return Ok(false);
            }
            if safe_acceleration_bound(rear.speed, gap, v.speed, s0, self.dt) < A_MIN {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Applies a lane change to the working assignment.
    pub fn move_vehicle(&mut self, i: usize, to: LaneId) {
        let from = self.lanes[i];
        let list = &mut self.by_lane[from.0 as usize];
        if let Some(k) = list.iter().position(|&j| j == i) {
            list.remove(k);
        }
        let pos = self.vehicles[i].pos;
        let list = &mut self.by_lane[to.0 as usize];
        let at = list.partition_point(|&j| self.vehicles[j].pos < pos);
        list.insert(at, i);
        self.lanes[i] = to;
    }

    pub fn into_lanes(self) -> Vec<LaneId> {
        self.lanes
    }
}
