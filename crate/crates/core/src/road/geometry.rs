//! Weaving-area geometry.
//!
//! Longitudinal coordinates run from the upstream end of the mainline
//! (x = 0) to its downstream end. Mainline lanes are indexed from the right
//! starting at 0; the auxiliary lane gets the next free index. The auxiliary
//! lane is one continuous strip: on-ramp, the weave section proper (where it
//! is adjacent to mainline lane 0), and the off-ramp.

use serde::{Deserialize, Serialize};

use super::SimError;

/// Exact conversion factor, 1 mph = 0.44704 m/s.
pub const MPH_TO_MPS: f64 = 0.44704;

/// Converts mph to m/s, rounded to 4 decimals so the stored value is the
/// nearest double to the exact decimal conversion.
pub fn mph_to_mps(mph: f64) -> f64 {
    (mph * MPH_TO_MPS * 1e4).round() / 1e4
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LaneId(pub u8);

impl std::fmt::Display for LaneId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoadNetwork {
    /// Mainline start to on-ramp gore.
    pub upstream_length: f64,
    /// On-ramp gore to off-ramp gore.
    pub weave_length: f64,
    /// Off-ramp gore to mainline end.
    pub downstream_length: f64,
    pub mainline_lanes: u8,
    /// Length of on-ramp modeled upstream of the on-ramp gore.
    pub on_ramp_length: f64,
    /// Length of off-ramp modeled downstream of the off-ramp gore.
    pub off_ramp_length: f64,
    pub freeway_speed_limit: f64,
    pub ramp_speed_limit: f64,
    /// Control zone starts this far upstream of the on-ramp gore.
    pub control_upstream: f64,
    /// Control zone ends this far downstream of the off-ramp gore.
    pub control_downstream: f64,
}

impl Default for RoadNetwork {
    fn default() -> Self {
        Self {
            upstream_length: 200.0,
            weave_length: 200.0,
            downstream_length: 100.0,
            mainline_lanes: 3,
            on_ramp_length: 100.0,
            off_ramp_length: 100.0,
            freeway_speed_limit: mph_to_mps(65.0),
            ramp_speed_limit: mph_to_mps(40.0),
            control_upstream: 100.0,
            control_downstream: 100.0,
        }
    }
}

impl RoadNetwork {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("upstream_length", self.upstream_length),
            ("weave_length", self.weave_length),
            ("downstream_length", self.downstream_length),
            ("on_ramp_length", self.on_ramp_length),
            ("off_ramp_length", self.off_ramp_length),
            ("freeway_speed_limit", self.freeway_speed_limit),
            ("ramp_speed_limit", self.ramp_speed_limit),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(SimError::InvalidConfig(format!("{name} must be positive, got {value}")));
            }
        }
        if self.mainline_lanes == 0 || self.mainline_lanes > 8 {
            return Err(SimError::InvalidConfig(format!(
                "mainline_lanes must be in 1..=8, got {}",
                self.mainline_lanes
            )));
        }
        if self.on_ramp_length > self.upstream_length {
            return Err(SimError::InvalidConfig(
                "on_ramp_length cannot exceed upstream_length".into(),
            ));
        }
        let (start, end) = self.control_zone();
        if !(self.control_upstream >= 0.0 && self.control_downstream >= 0.0)
            || start < 0.0
            || end > self.mainline_length()
            || start >= end
        {
            return Err(SimError::InvalidConfig(format!(
                "control zone [{start}, {end}] must lie within [0, {}]",
                self.mainline_length()
            )));
        }
        Ok(())
    }

    pub fn mainline_length(&self) -> f64 {
        self.upstream_length + self.weave_length + self.downstream_length
    }

    pub fn on_ramp_gore(&self) -> f64 {
        self.upstream_length
    }

    pub fn off_ramp_gore(&self) -> f64 {
        self.upstream_length + self.weave_length
    }

    pub fn aux_start(&self) -> f64 {
        self.on_ramp_gore() - self.on_ramp_length
    }

    pub fn aux_end(&self) -> f64 {
        self.off_ramp_gore() + self.off_ramp_length
    }

    pub fn control_zone(&self) -> (f64, f64) {
        (
            self.on_ramp_gore() - self.control_upstream,
            self.off_ramp_gore() + self.control_downstream,
        )
    }

    pub fn in_control_zone(&self, x: f64) -> bool {
        let (start, end) = self.control_zone();
        x >= start && x <= end
    }

    pub fn aux_lane(&self) -> LaneId {
        LaneId(self.mainline_lanes)
    }

    pub fn lane_count(&self) -> usize {
        self.mainline_lanes as usize + 1
    }

    pub fn is_aux(&self, lane: LaneId) -> bool {
        lane == self.aux_lane()
    }

    pub fn lanes(&self) -> impl Iterator<Item = LaneId> {
        (0..=self.mainline_lanes).map(LaneId)
    }

    /// Lateral order from the right edge: aux lane is 0, mainline lane k is k + 1.
    pub fn lateral_rank(&self, lane: LaneId) -> usize {
        if self.is_aux(lane) {
            0
        } else {
            lane.0 as usize + 1
        }
    }

    pub fn in_weave(&self, x: f64) -> bool {
        x >= self.on_ramp_gore() && x <= self.off_ramp_gore()
    }

    /// Position at which a vehicle on `lane` leaves the network.
    pub fn exit_position(&self, lane: LaneId) -> f64 {
        if self.is_aux(lane) {
            self.aux_end()
        } else {
            self.mainline_length()
        }
    }

    /// Entry position of a lane (front bumper of a spawned vehicle).
    pub fn entry_position(&self, lane: LaneId) -> f64 {
        if self.is_aux(lane) {
            self.aux_start()
        } else {
            0.0
        }
    }

    pub fn lane_exists(&self, lane: LaneId, x: f64) -> bool {
        if lane.0 > self.mainline_lanes {
            false
        } else if self.is_aux(lane) {
            x >= self.aux_start() && x <= self.aux_end()
        } else {
            x <= self.mainline_length()
        }
    }

    pub fn speed_limit(&self, lane: LaneId, x: f64) -> f64 {
        if self.is_aux(lane) && !self.in_weave(x) {
            self.ramp_speed_limit
        } else {
            self.freeway_speed_limit
        }
    }

    pub fn left_of(&self, lane: LaneId, x: f64) -> Option<LaneId> {
        if self.is_aux(lane) {
            self.in_weave(x).then_some(LaneId(0))
        } else if lane.0 + 1 < self.mainline_lanes {
            Some(LaneId(lane.0 + 1))
        } else {
            None
        }
    }

    pub fn right_of(&self, lane: LaneId, x: f64) -> Option<LaneId> {
        if self.is_aux(lane) {
            None
        } else if lane.0 == 0 {
            self.in_weave(x).then_some(self.aux_lane())
        } else {
            Some(LaneId(lane.0 - 1))
        }
    }

    pub fn is_adjacent(&self, from: LaneId, to: LaneId, x: f64) -> bool {
        self.left_of(from, x) == Some(to) || self.right_of(from, x) == Some(to)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_geometry_is_consistent() {
        let net = RoadNetwork::default();
        net.validate().unwrap();
        assert_eq!(net.mainline_length(), 500.0);
        assert_eq!(net.control_zone(), (100.0, 500.0));
        assert_eq!(net.lane_count(), 4);
        assert_eq!(net.aux_lane(), LaneId(3));
    }

    #[test]
    fn speed_limits_convert_from_mph() {
        assert_eq!(format!("{:.4}", mph_to_mps(65.0)), "29.0576");
        assert_eq!(format!("{:.4}", mph_to_mps(40.0)), "17.8816");
        assert_eq!(mph_to_mps(65.0).to_string(), "29.0576");
        assert_eq!(mph_to_mps(40.0).to_string(), "17.8816");
    }

    #[test]
    fn aux_lane_adjacent_only_in_weave() {
        let net = RoadNetwork::default();
        let aux = net.aux_lane();
        assert_eq!(net.right_of(LaneId(0), 150.0), None);
        assert_eq!(net.right_of(LaneId(0), 250.0), Some(aux));
        assert_eq!(net.left_of(aux, 250.0), Some(LaneId(0)));
        assert_eq!(net.left_of(aux, 450.0), None);
        assert_eq!(net.left_of(LaneId(2), 250.0), None);
        assert!(net.is_adjacent(LaneId(1), LaneId(2), 10.0));
        assert!(!net.is_adjacent(LaneId(0), LaneId(2), 10.0));
    }

    #[test]
    fn rejects_control_zone_outside_segment() {
        let net = RoadNetwork {
            control_downstream: 150.0,
            ..RoadNetwork::default()
        };
        assert!(net.validate().is_err());
    }

    #[test]
    fn ramp_sections_use_ramp_limit() {
        let net = RoadNetwork::default();
        let aux = net.aux_lane();
        assert_eq!(net.speed_limit(aux, 150.0), net.ramp_speed_limit);
        assert_eq!(net.speed_limit(aux, 300.0), net.freeway_speed_limit);
        assert_eq!(net.speed_limit(aux, 450.0), net.ramp_speed_limit);
        assert_eq!(net.speed_limit(LaneId(0), 450.0), net.freeway_speed_limit);
    }
}
