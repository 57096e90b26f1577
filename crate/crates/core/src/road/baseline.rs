//! Human-driver stand-in: IDM car following with route-driven mandatory
//! lane changes and incentive-based discretionary ones.

use super::idm::idm_acceleration;
use super::traffic::Traffic;
use super::vehicle::{Blinker, DriverParams, LaneDecision, Route, B_PHYS};
use super::geometry::LaneId;

/// Lane change a vehicle's route requires right now, if any.
pub fn route_need(traffic: &Traffic<'_>, i: usize) -> Option<LaneDecision> {
    let v = &traffic.vehicles[i];
    let net = traffic.net;
    let lane = traffic.lane_of(i);
    match v.route {
        Route::ExitOffRamp => {
            if net.is_aux(lane) {
                None
            } else if lane.0 > 0 {
                Some(LaneDecision::Right)
            } else if net.in_weave(v.pos) && v.pos < net.off_ramp_gore() {
                Some(LaneDecision::Right)
            } else {
                None
            }
        }
        Route::EnterFromOnRamp | Route::ThroughFreeway => {
            (net.is_aux(lane) && net.in_weave(v.pos)).then_some(LaneDecision::Left)
        }
    }
}

/// IDM acceleration of vehicle `i` were it on `lane` (vehicles and lane end only).
pub fn idm_on_lane(traffic: &Traffic<'_>, i: usize, lane: LaneId, params: &DriverParams) -> f64 {
    let v = &traffic.vehicles[i];
    let desired = traffic.speed_cap(lane, v.pos, v.route) * params.desired_speed_factor;
    let mut acc = idm_acceleration(v.speed, f64::INFINITY, 0.0, desired, params).unwrap_or(-B_PHYS);
    for c in traffic.constraints_ahead(i, lane) {
        let a = idm_acceleration(v.speed, c.gap, c.speed, desired, params).unwrap_or(-B_PHYS);
        acc = acc.min(a);
    }
    acc
}

/// Baseline acceleration on the working lane, including courtesy yielding to
/// vehicles ahead that signal into this lane.
pub fn baseline_acceleration(traffic: &Traffic<'_>, i: usize, params: &DriverParams) -> f64 {
    let lane = traffic.lane_of(i);
    let mut acc = idm_on_lane(traffic, i, lane, params);
    if params.courtesy_range <= 0.0 {
        return acc;
    }
    let v = &traffic.vehicles[i];
    let desired = traffic.speed_cap(lane, v.pos, v.route) * params.desired_speed_factor;
    let net = traffic.net;
    let sides = [
        (net.right_of(lane, v.pos), Blinker::Left),
        (net.left_of(lane, v.pos), Blinker::Right),
    ];
    for (side, signal) in sides {
        let Some(side) = side else { continue };
        let mut x = v.pos;
        while let Some(j) = traffic.front_of(side, x, i) {
            let other = &traffic.vehicles[j];
            if other.pos - v.pos > params.courtesy_range {
                break;
            }
            x = other.pos + 1e-9;
            if other.blinker != signal || other.rear() <= v.pos {
                continue;
            }
            let gap = other.rear() - v.pos;
            if let Ok(a) = idm_acceleration(v.speed, gap, other.speed, desired, params) {
                if a >= -params.comfortable_decel {
                    acc = acc.min(a);
                }
            }
        }
    }
    acc
}

/// Gap acceptance for baseline drivers: the safety-layer test plus margins
/// and bounded IDM decelerations for both the changer and its new follower.
pub fn accepts_gap(traffic: &Traffic<'_>, i: usize, target: LaneId, params: &DriverParams) -> bool {
    if !traffic.lane_change_feasible(i, target).unwrap_or(false) {
        return false;
    }
    let v = &traffic.vehicles[i];
    let s0 = traffic.min_gap;
    if idm_on_lane(traffic, i, target, params) < -params.safe_decel {
        return false;
    }
    if let Some(j) = traffic.front_of(target, v.pos, i) {
        if traffic.vehicles[j].rear() - v.pos < s0 + params.lead_margin {
            return false;
        }
    }
    if let Some(j) = traffic.rear_of(target, v.pos, i) {
        let rear = &traffic.vehicles[j];
        let gap = v.rear() - rear.pos;
        if gap < s0 + params.lag_margin {
            return false;
        }
        let desired = traffic.speed_cap(target, rear.pos, rear.route) * params.desired_speed_factor;
        match idm_acceleration(rear.speed, gap, v.speed, desired, params) {
            Ok(a) if a >= -params.safe_decel => {}
            _ => return false,
        }
    }
    true
}

/// Baseline lane decision for vehicle `i`.
pub fn baseline_lane_decision(traffic: &Traffic<'_>, i: usize, params: &DriverParams) -> LaneDecision {
    if let Some(need) = route_need(traffic, i) {
        return match traffic.target_lane(i, need) {
            Some(target) if accepts_gap(traffic, i, target, params) => need,
            _ => LaneDecision::Stay,
        };
    }
    let v = &traffic.vehicles[i];
    if v.route.exits() {
        return LaneDecision::Stay;
    }
    let lane = traffic.lane_of(i);
    let current = idm_on_lane(traffic, i, lane, params);
    let mut best = (LaneDecision::Stay, params.change_threshold);
    for decision in [LaneDecision::Left, LaneDecision::Right] {
        let Some(target) = traffic.target_lane(i, decision) else { continue };
        if traffic.net.is_aux(target) {
            continue;
        }
        let gain = idm_on_lane(traffic, i, target, params) - current;
        if gain > best.1 && accepts_gap(traffic, i, target, params) {
            best = (decision, gain);
        }
    }
    best.0
}
