use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::geometry::{LaneId, RoadNetwork};
use super::vehicle::Route;
use super::SimError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InflowSpec {
    /// Mainline demand per lane, veh/h/lane.
    pub freeway_rate: f64,
    /// On-ramp demand, veh/h/lane.
    pub ramp_rate: f64,
    /// Share of mainline arrivals routed to the off-ramp.
    pub exit_fraction: f64,
    /// Minimum headway between arrivals on one entry lane, s.
    pub min_spawn_headway: f64,
}

impl Default for InflowSpec {
    fn default() -> Self {
        Self {
            freeway_rate: 1200.0,
            ramp_rate: 1200.0,
            exit_fraction: 0.5,
            min_spawn_headway: 1.0,
        }
    }
}

impl InflowSpec {
    /// Both entries at the same per-lane rate.
    pub fn uniform(rate: f64) -> Self {
        Self {
            freeway_rate: rate,
            ramp_rate: rate,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.freeway_rate >= 0.0 && self.freeway_rate.is_finite())
            || !(self.ramp_rate >= 0.0 && self.ramp_rate.is_finite())
        {
            return Err(SimError::InvalidConfig("inflow rates must be finite and >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.exit_fraction) {
            return Err(SimError::InvalidConfig(format!(
                "exit_fraction must be in [0, 1], got {}",
                self.exit_fraction
            )));
        }
        if !(self.min_spawn_headway > 0.0 && self.min_spawn_headway.is_finite()) {
            return Err(SimError::InvalidConfig("min_spawn_headway must be positive".into()));
        }
        Ok(())
    }

    /// Mean headway between arrivals on one lane, s; `None` for zero demand.
    pub fn mean_headway(rate: f64) -> Option<f64> {
        (rate > 0.0).then(|| 3600.0 / rate)
    }
}

/// Arrival process and waiting queue of one entry lane.
#[derive(Clone, Debug)]
pub struct EntryQueue {
    pub lane: LaneId,
    pub ramp: bool,
    next_arrival: Option<f64>,
    headway: Option<HeadwaySampler>,
    pub pending: VecDeque<Route>,
}

#[derive(Clone, Debug)]
struct HeadwaySampler {
    min: f64,
    exp: Option<Exp<f64>>,
}

impl HeadwaySampler {
    fn new(rate: f64, min: f64) -> Option<Self> {
        let mean = InflowSpec::mean_headway(rate)?;
        let excess = mean - min;
        let exp = (excess > 0.0).then(|| Exp::new(1.0 / excess).expect("positive rate"));
        Some(Self { min, exp })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        self.min + self.exp.map_or(0.0, |e| e.sample(rng))
    }
}

impl EntryQueue {
    pub fn for_network<R: Rng>(net: &RoadNetwork, spec: &InflowSpec, rng: &mut R) -> Vec<EntryQueue> {
        let mut entries: Vec<EntryQueue> = (0..net.mainline_lanes)
            .map(|k| EntryQueue::new(LaneId(k), false, spec.freeway_rate, spec.min_spawn_headway))
            .collect();
        entries.push(EntryQueue::new(net.aux_lane(), true, spec.ramp_rate, spec.min_spawn_headway));
        for entry in &mut entries {
            entry.next_arrival = entry.headway.as_ref().map(|h| h.sample(rng));
        }
        entries
    }

    fn new(lane: LaneId, ramp: bool, rate: f64, min_headway: f64) -> Self {
        Self {
            lane,
            ramp,
            next_arrival: None,
            headway: HeadwaySampler::new(rate, min_headway),
            pending: VecDeque::new(),
        }
    }

    /// Enqueues every arrival strictly before `until`; returns how many.
    pub fn collect_arrivals<R: Rng>(&mut self, until: f64, exit_fraction: f64, rng: &mut R) -> usize {
        let mut count = 0;
        while let (Some(t), Some(h)) = (self.next_arrival, self.headway.as_ref()) {
            if t >= until {
                break;
            }
            let route = if self.ramp {
                Route::EnterFromOnRamp
            } else if rng.gen::<f64>() < exit_fraction {
                Route::ExitOffRamp
            } else {
                Route::ThroughFreeway
            };
            self.pending.push_back(route);
            self.next_arrival = Some(t + h.sample(rng));
            count += 1;
        }
        count
    }
}
