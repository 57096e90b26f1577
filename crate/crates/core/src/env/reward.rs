use serde::{Deserialize, Serialize};

use crate::road::{EventFlags, LaneId, RoadNetwork, Route, Traffic, Vehicle};

/// Reward weights and headway threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub speed: f64,
    pub lane: f64,
    pub lane_change: f64,
    pub improper: f64,
    pub emergency: f64,
    pub headway: f64,
    /// Headway below which the penalty applies, s.
    pub min_headway: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            speed: 0.1,
            lane: 1.0,
            lane_change: 1.0,
            improper: 5.0,
            emergency: 1.0,
            headway: 1.0,
            min_headway: 1.0,
        }
    }
}

/// The six reward terms of one agent-step and their weighted sum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub v: f64,
    pub l: f64,
    pub c: f64,
    pub s: f64,
    pub b: f64,
    pub h: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn compose(v: f64, l: f64, c: f64, s: f64, b: f64, h: f64, w: &RewardWeights) -> Self {
        let mut out = Self { v, l, c, s, b, h, total: 0.0 };
        out.total = out.weighted(w);
        out
    }

    pub fn weighted(&self, w: &RewardWeights) -> f64 {
        w.speed * self.v
            + w.lane * self.l
            + w.lane_change * self.c
            + w.improper * self.s
            + w.emergency * self.b
            + w.headway * self.h
    }
}

/// Lanes counted as "desired" for a route.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DesiredLaneSet(pub Vec<LaneId>);

impl DesiredLaneSet {
    pub fn for_route(route: Route, net: &RoadNetwork) -> Self {
        let mut lanes: Vec<LaneId> = (0..net.mainline_lanes).map(LaneId).collect();
        if route.exits() {
            lanes = vec![LaneId(0), net.aux_lane()];
        }
        Self(lanes)
    }

    pub fn contains(&self, lane: LaneId) -> bool {
        self.0.contains(&lane)
    }
}

/// Lane-position term: `1 − d/d_max` on a desired lane, `−d/d_max` otherwise.
pub fn lane_reward(d: f64, on_desired_lane: bool, d_max: f64) -> f64 {
    let frac = d.clamp(0.0, d_max) / d_max;
    if on_desired_lane {
        1.0 - frac
    } else {
        -frac
    }
}

/// Headway penalty `min((t − t_min)/t_min, 0)`; infinite headway gives 0.
pub fn headway_penalty(t: f64, t_min: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    ((t - t_min) / t_min).min(0.0)
}

/// Time headway to the same-lane leader, using a 0.1 m/s speed floor.
pub fn time_headway(traffic: &Traffic<'_>, i: usize) -> f64 {
    let v = &traffic.vehicles[i];
    match traffic.leader(i) {
        Some(j) => (traffic.vehicles[j].rear() - v.pos).max(0.0) / v.speed.max(0.1),
        None => f64::INFINITY,
    }
}

/// Distance travelled into the weave, clamped to `[0, weave_length]`.
pub fn weave_progress(net: &RoadNetwork, pos: f64) -> f64 {
    (pos - net.on_ramp_gore()).clamp(0.0, net.weave_length)
}

/// Reward of one agent from its post-step state, step events and headway.
pub fn compute_reward(
    net: &RoadNetwork,
    after: &Vehicle,
    flags: EventFlags,
    headway: f64,
    w: &RewardWeights,
) -> RewardBreakdown {
    let desired = DesiredLaneSet::for_route(after.route, net).contains(after.lane);
    let binary = |f: EventFlags| if flags.contains(f) { -1.0 } else { 0.0 };
    RewardBreakdown::compose(
        after.speed,
        lane_reward(weave_progress(net, after.pos), desired, net.weave_length),
        binary(EventFlags::LANE_CHANGED),
        binary(EventFlags::IMPROPER_INTENT),
        binary(EventFlags::EMERGENCY_BRAKE),
        headway_penalty(headway, w.min_headway),
        w,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lane_reward_boundaries() {
        assert_eq!(lane_reward(0.0, true, 200.0), 1.0);
        assert_eq!(lane_reward(200.0, false, 200.0), -1.0);
        assert_eq!(lane_reward(50.0, true, 200.0), 0.75);
        assert_eq!(lane_reward(350.0, false, 200.0), -1.0);
        assert_eq!(lane_reward(-5.0, false, 200.0), 0.0);
    }

    #[test]
    fn headway_penalty_cases() {
        assert_eq!(headway_penalty(1.0, 1.0), 0.0);
        assert_eq!(headway_penalty(2.0, 1.0), 0.0);
        assert_eq!(headway_penalty(0.5, 1.0), -0.5);
        assert_eq!(headway_penalty(0.0, 1.0), -1.0);
        assert_eq!(headway_penalty(f64::INFINITY, 1.0), 0.0);
    }

    #[test]
    fn totals_match_hand_sums() {
        let w = RewardWeights::default();
        assert_eq!(RewardBreakdown::compose(20.0, 1.0, 0.0, 0.0, 0.0, 0.0, &w).total, 3.0);
        assert_eq!(RewardBreakdown::compose(0.0, 0.0, 0.0, -1.0, 0.0, 0.0, &w).total, -5.0);
        assert_eq!(RewardBreakdown::compose(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, &w).total, 0.0);
    }

    #[test]
    fn desired_lanes_per_route() {
        let net = RoadNetwork::default();
        let exit = DesiredLaneSet::for_route(Route::ExitOffRamp, &net);
        assert!(exit.contains(LaneId(0)) && exit.contains(net.aux_lane()));
        assert!(!exit.contains(LaneId(1)));
        let through = DesiredLaneSet::for_route(Route::ThroughFreeway, &net);
        assert!(through.contains(LaneId(2)) && !through.contains(net.aux_lane()));
        assert_eq!(through, DesiredLaneSet::for_route(Route::EnterFromOnRamp, &net));
    }
}
