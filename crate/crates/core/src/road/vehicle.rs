use serde::{Deserialize, Serialize};

use super::geometry::LaneId;

/// Maximum commanded acceleration, m/s².
pub const A_MAX: f64 = 4.0;
/// Action-space acceleration floor, m/s².
pub const A_MIN: f64 = -8.0;
/// Physical braking limit available to the safety layer, m/s².
pub const B_PHYS: f64 = 9.81;
/// Realized deceleration above this counts as an emergency brake, m/s².
pub const EMERGENCY_DECEL: f64 = 9.0;
pub const VEHICLE_LENGTH: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VehicleId(pub u32);

impl std::fmt::Display for VehicleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Route {
    ThroughFreeway,
    ExitOffRamp,
    EnterFromOnRamp,
}

impl Route {
    pub fn code(self) -> &'static str {
        match self {
            Route::ThroughFreeway => "through",
            Route::ExitOffRamp => "exit",
            Route::EnterFromOnRamp => "enter",
        }
    }

    pub fn from_code(code: &str) -> Option<Route> {
        match code {
            "through" => Some(Route::ThroughFreeway),
            "exit" => Some(Route::ExitOffRamp),
            "enter" => Some(Route::EnterFromOnRamp),
            _ => None,
        }
    }

    pub fn exits(self) -> bool {
        self == Route::ExitOffRamp
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Blinker {
    #[default]
    Off,
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LaneDecision {
    #[default]
    Stay,
    Left,
    Right,
}

impl LaneDecision {
    pub const ALL: [LaneDecision; 3] = [LaneDecision::Stay, LaneDecision::Left, LaneDecision::Right];

    pub fn index(self) -> usize {
        match self {
            LaneDecision::Stay => 0,
            LaneDecision::Left => 1,
            LaneDecision::Right => 2,
        }
    }

    pub fn from_index(i: usize) -> LaneDecision {
        Self::ALL[i]
    }

    pub fn blinker(self) -> Blinker {
        match self {
            LaneDecision::Stay => Blinker::Off,
            LaneDecision::Left => Blinker::Left,
            LaneDecision::Right => Blinker::Right,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vehicle {
    pub id: VehicleId,
    /// Front bumper position, meters from segment start.
    pub pos: f64,
    pub lane: LaneId,
    pub speed: f64,
    /// Last realized acceleration.
    pub accel: f64,
    pub length: f64,
    pub route: Route,
    pub blinker: Blinker,
    pub controlled: bool,
    pub spawn_time: f64,
    pub exit_time: Option<f64>,
    /// Lane intent from the previous step; drives the blinker hold.
    pub last_intent: LaneDecision,
}

impl Vehicle {
    pub fn rear(&self) -> f64 {
        self.pos - self.length
    }

    /// Blinker state given this step's intent: shows the intent while it
    /// persists and holds the previous one for a single step after it ends.
    pub fn blinker_for(&self, intent: LaneDecision) -> Blinker {
        match intent {
            LaneDecision::Stay => self.last_intent.blinker(),
            other => other.blinker(),
        }
    }
}

/// Baseline (human-driver) parameters: IDM car following plus gap acceptance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriverParams {
    /// Desired speed as a fraction of the local speed limit.
    pub desired_speed_factor: f64,
    /// Time headway T, s.
    pub time_headway: f64,
    /// Minimum standstill gap s0, m.
    pub min_gap: f64,
    /// Maximum acceleration a, m/s².
    pub accel: f64,
    /// Comfortable deceleration b, m/s².
    pub comfortable_decel: f64,
    pub delta: f64,
    /// Extra lead gap demanded for a baseline lane change, m.
    pub lead_margin: f64,
    /// Extra lag gap demanded for a baseline lane change, m.
    pub lag_margin: f64,
    /// Deceleration the new follower may be asked for (IDM), m/s².
    pub safe_decel: f64,
    /// IDM acceleration gain needed for a discretionary change, m/s².
    pub change_threshold: f64,
    /// Yield to signaling vehicles ahead in an adjacent lane within this distance, m.
    pub courtesy_range: f64,
}

impl Default for DriverParams {
    fn default() -> Self {
        Self {
            desired_speed_factor: 1.0,
            time_headway: 1.0,
            min_gap: 2.0,
            accel: 2.6,
            comfortable_decel: 4.5,
            delta: 4.0,
            lead_margin: 1.0,
            lag_margin: 2.0,
            safe_decel: 4.0,
            change_threshold: 0.3,
            courtesy_range: 30.0,
        }
    }
}

impl DriverParams {
    pub fn validate(&self) -> Result<(), super::SimError> {
        let positive = [
            ("desired_speed_factor", self.desired_speed_factor),
            ("min_gap", self.min_gap),
            ("accel", self.accel),
            ("comfortable_decel", self.comfortable_decel),
            ("delta", self.delta),
            ("safe_decel", self.safe_decel),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(super::SimError::InvalidConfig(format!(
                    "driver.{name} must be positive, got {value}"
                )));
            }
        }
        if !(self.time_headway >= 0.5) {
            return Err(super::SimError::InvalidConfig(format!(
                "driver.time_headway must be at least 0.5 s, got {}",
                self.time_headway
            )));
        }
        for (name, value) in [
            ("lead_margin", self.lead_margin),
            ("lag_margin", self.lag_margin),
            ("change_threshold", self.change_threshold),
            ("courtesy_range", self.courtesy_range),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(super::SimError::InvalidConfig(format!(
                    "driver.{name} must be non-negative, got {value}"
                )));
            }
        }
        Ok(())
    }
}
