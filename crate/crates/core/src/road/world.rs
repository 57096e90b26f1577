use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::baseline::{baseline_acceleration, baseline_lane_decision, route_need, accepts_gap};
use super::geometry::{LaneId, RoadNetwork};
use super::idm::idm_acceleration;
use super::log::EventFlags;
use super::safety::safe_speed;
use super::spawn::{EntryQueue, InflowSpec};
use super::traffic::Traffic;
use super::vehicle::{
    Blinker, DriverParams, LaneDecision, Route, Vehicle, VehicleId, A_MAX, B_PHYS, EMERGENCY_DECEL,
    VEHICLE_LENGTH,
};
use super::SimError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    /// Integration step, s.
    pub dt: f64,
    pub episode_steps: u32,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            dt: 0.2,
            episode_steps: 1000,
        }
    }
}

/// Everything needed to build a world besides the seed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub network: RoadNetwork,
    pub inflow: InflowSpec,
    pub driver: DriverParams,
    pub sim: SimParams,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        self.network.validate()?;
        self.inflow.validate()?;
        self.driver.validate()?;
        if !(self.sim.dt > 0.0 && self.sim.dt.is_finite()) {
            return Err(SimError::InvalidConfig(format!("sim.dt must be positive, got {}", self.sim.dt)));
        }
        Ok(())
    }
}

/// How a vehicle's longitudinal command is produced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AccelRequest {
    /// Baseline car following.
    Baseline,
    /// Externally requested acceleration, still subject to the safety layer.
    Direct(f64),
}

/// An externally supplied intent (RL agents); `None` entries use the baseline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Intent {
    pub decision: LaneDecision,
    pub accel: AccelRequest,
}

/// Command for one vehicle after lane-change resolution and safety clipping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Command {
    pub id: VehicleId,
    pub accel: f64,
    pub lane_move: Option<LaneId>,
    /// Intent shown on the blinker.
    pub intent: LaneDecision,
    /// A requested lane change was refused by the safety layer.
    pub vetoed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Census {
    pub generated: u64,
    pub active: u64,
    pub exited: u64,
    pub queued: u64,
}

impl Census {
    pub fn conserved(&self) -> bool {
        self.generated == self.active + self.exited + self.queued
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VehicleEvents {
    pub id: VehicleId,
    pub flags: EventFlags,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    /// One entry per vehicle present at the start of the step, in world order.
    pub events: Vec<VehicleEvents>,
    /// Final state of vehicles retired during this step.
    pub exited: Vec<Vehicle>,
}

#[derive(Clone, Debug)]
pub struct World {
    pub scenario: Scenario,
    pub time: f64,
    pub step: u64,
    /// Active vehicles in insertion order.
    pub vehicles: Vec<Vehicle>,
    entries: Vec<EntryQueue>,
    rng: ChaCha8Rng,
    next_id: u32,
    generated: u64,
    exited: u64,
    rl_control: bool,
    spawned_now: Vec<VehicleId>,
}

impl World {
    pub fn new(scenario: Scenario, seed: u64) -> Result<Self, SimError> {
        scenario.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries = EntryQueue::for_network(&scenario.network, &scenario.inflow, &mut rng);
        Ok(Self {
            scenario,
            time: 0.0,
            step: 0,
            vehicles: Vec::new(),
            entries,
            rng,
            next_id: 0,
            generated: 0,
            exited: 0,
            rl_control: false,
            spawned_now: Vec::new(),
        })
    }

    pub fn network(&self) -> &RoadNetwork {
        &self.scenario.network
    }

    pub fn dt(&self) -> f64 {
        self.scenario.sim.dt
    }

    /// Hands vehicles inside the control zone to external (RL) control.
    pub fn set_rl_control(&mut self, on: bool) {
        self.rl_control = on;
        self.refresh_control();
    }

    pub fn refresh_control(&mut self) {
        let (on, net) = (self.rl_control, &self.scenario.network);
        for v in &mut self.vehicles {
            v.controlled = on && net.in_control_zone(v.pos);
        }
    }

    pub fn index_of(&self, id: VehicleId) -> Option<usize> {
        self.vehicles.binary_search_by_key(&id, |v| v.id).ok()
    }

    pub fn vehicle(&self, id: VehicleId) -> Option<&Vehicle> {
        self.index_of(id).map(|i| &self.vehicles[i])
    }

    pub fn traffic(&self) -> Traffic<'_> {
        Traffic::new(
            &self.scenario.network,
            &self.vehicles,
            self.scenario.driver.min_gap,
            self.dt(),
        )
    }

    pub fn census(&self) -> Census {
        Census {
            generated: self.generated,
            active: self.vehicles.len() as u64,
            exited: self.exited,
            queued: self.entries.iter().map(|e| e.pending.len() as u64).sum(),
        }
    }

    /// Whether `target` is a feasible lane change for `id` right now.
    pub fn lane_change_feasible(&self, id: VehicleId, target: LaneId) -> Result<bool, SimError> {
        let i = self.index_of(id).ok_or(SimError::UnknownVehicle(id))?;
        self.traffic().lane_change_feasible(i, target)
    }

    /// Baseline lane decision for an active vehicle.
    pub fn baseline_lane_decision(&self, id: VehicleId) -> Result<LaneDecision, SimError> {
        let i = self.index_of(id).ok_or(SimError::UnknownVehicle(id))?;
        Ok(baseline_lane_decision(&self.traffic(), i, &self.scenario.driver))
    }

    /// Places a vehicle directly on the road, bypassing the entry queues.
    pub fn insert_vehicle(&mut self, lane: LaneId, pos: f64, speed: f64, route: Route) -> VehicleId {
        let id = VehicleId(self.next_id);
        self.next_id += 1;
        self.vehicles.push(Vehicle {
            id,
            pos,
            lane,
            speed,
            accel: 0.0,
            length: VEHICLE_LENGTH,
            route,
            blinker: Blinker::Off,
            controlled: false,
            spawn_time: self.time,
            exit_time: None,
            last_intent: LaneDecision::Stay,
        });
        self.generated += 1;
        self.refresh_control();
        id
    }

    /// Enqueues this step's arrivals and inserts at most one queued vehicle
    /// per entry lane whose entry is clear.
    pub fn spawn_arrivals(&mut self) -> Vec<VehicleId> {
        let until = self.time + self.dt();
        let exit_fraction = self.scenario.inflow.exit_fraction;
        let mut spawned = Vec::new();
        for e in 0..self.entries.len() {
            let entry = &mut self.entries[e];
            self.generated += entry.collect_arrivals(until, exit_fraction, &mut self.rng) as u64;
            if entry.pending.is_empty() {
                continue;
            }
            let lane = entry.lane;
            let Some(speed) = self.insertion_speed(lane) else { continue };
            let route = self.entries[e].pending.pop_front().expect("non-empty queue");
            let id = VehicleId(self.next_id);
            self.next_id += 1;
            self.vehicles.push(Vehicle {
                id,
                pos: self.scenario.network.entry_position(lane),
                lane,
                speed,
                accel: 0.0,
                length: VEHICLE_LENGTH,
                route,
                blinker: Blinker::Off,
                controlled: false,
                spawn_time: self.time,
                exit_time: None,
                last_intent: LaneDecision::Stay,
            });
            spawned.push(id);
        }
        self.refresh_control();
        self.spawned_now.extend_from_slice(&spawned);
        spawned
    }

    /// Speed for a vehicle entering `lane` now, or `None` if the entry is blocked.
    fn insertion_speed(&self, lane: LaneId) -> Option<f64> {
        let net = &self.scenario.network;
        let driver = &self.scenario.driver;
        let x = net.entry_position(lane);
        let limit = net.speed_limit(lane, x);
        let leader = self
            .vehicles
            .iter()
            .filter(|v| v.lane == lane)
            .min_by(|a, b| a.pos.total_cmp(&b.pos));
        match leader {
            None => Some(limit),
            Some(lead) => {
                let gap = lead.rear() - x;
                if gap < driver.min_gap {
                    return None;
                }
                let safe = safe_speed(gap, lead.speed, driver.min_gap, self.dt());
                let headway = (gap - driver.min_gap) / driver.time_headway;
                let mut speed = limit.min(safe).min(headway).max(0.0);
                let desired = limit * driver.desired_speed_factor;
                let comfortable = idm_acceleration(speed, gap, lead.speed, desired, driver)
                    .map_or(false, |a| a >= -driver.comfortable_decel);
                if !comfortable {
                    speed = speed.min(lead.speed);
                }
                Some(speed)
            }
        }
    }

    /// Resolves lane changes and accelerations for every active vehicle.
    ///
    /// `intents` is aligned with `self.vehicles`; `None` entries drive with the
    /// baseline model. Lane changes are resolved one at a time from the
    /// front of the road backwards, each checked against the assignment left
    /// by the ones before it; accelerations are then clipped by the safety
    /// layer on the resulting lanes.
    pub fn resolve_commands(&self, intents: &[Option<Intent>]) -> Result<Vec<Command>, SimError> {
        if intents.len() != self.vehicles.len() {
            return Err(SimError::CommandMismatch {
                expected: self.vehicles.len(),
                got: intents.len(),
            });
        }
        let driver = &self.scenario.driver;
        let mut traffic = self.traffic();
        let n = self.vehicles.len();

        let mut wanted = vec![LaneDecision::Stay; n];
        let mut shown = vec![LaneDecision::Stay; n];
        for i in 0..n {
            match &intents[i] {
                Some(intent) => {
                    wanted[i] = intent.decision;
                    shown[i] = intent.decision;
                }
                None => {
                    wanted[i] = baseline_lane_decision(&traffic, i, driver);
                    shown[i] = match wanted[i] {
                        LaneDecision::Stay => route_need(&traffic, i).unwrap_or(LaneDecision::Stay),
                        d => d,
                    };
                }
            }
        }

        let mut order: Vec<usize> = (0..n).filter(|&i| wanted[i] != LaneDecision::Stay).collect();
        order.sort_by(|&a, &b| {
            self.vehicles[b]
                .pos
                .total_cmp(&self.vehicles[a].pos)
                .then(self.vehicles[a].id.cmp(&self.vehicles[b].id))
        });
        let mut lane_move = vec![None; n];
        let mut vetoed = vec![false; n];
        for i in order {
            let ok = match traffic.target_lane(i, wanted[i]) {
                None => false,
                Some(target) => match intents[i] {
                    Some(_) => traffic.lane_change_feasible(i, target)?,
                    None => accepts_gap(&traffic, i, target, driver),
                },
            };
            if ok {
                let target = traffic.target_lane(i, wanted[i]).expect("checked above");
                traffic.move_vehicle(i, target);
                lane_move[i] = Some(target);
            } else {
                vetoed[i] = true;
            }
        }

        let mut commands = Vec::with_capacity(n);
        for i in 0..n {
            let bound = traffic.safety_bound(i);
            let requested = match intents[i] {
                Some(Intent {
                    accel: AccelRequest::Direct(a),
                    ..
                }) => a,
                _ => baseline_acceleration(&traffic, i, driver),
            };
            commands.push(Command {
                id: self.vehicles[i].id,
                accel: requested.min(bound),
                lane_move: lane_move[i],
                intent: shown[i],
                vetoed: vetoed[i] && intents[i].is_some(),
            });
        }
        Ok(commands)
    }

    /// Commands for a world where every vehicle follows the baseline.
    pub fn baseline_commands(&self) -> Result<Vec<Command>, SimError> {
        self.resolve_commands(&vec![None; self.vehicles.len()])
    }

    /// Advances the world by one step.
    ///
    /// Lane moves are applied first, then the semi-implicit Euler update
    /// `v <- max(0, v + a·dt); x <- x + v·dt`. Vehicles past the end of their
    /// lane retire. Any overlap afterwards is a hard fault.
    pub fn step(&mut self, commands: &[Command]) -> Result<StepReport, SimError> {
        if commands.len() != self.vehicles.len() {
            return Err(SimError::CommandMismatch {
                expected: self.vehicles.len(),
                got: commands.len(),
            });
        }
        let dt = self.dt();
        let new_time = self.time + dt;
        let mut events = Vec::with_capacity(self.vehicles.len());
        for (v, cmd) in self.vehicles.iter_mut().zip(commands) {
            if v.id != cmd.id {
                return Err(SimError::CommandForWrongVehicle {
                    expected: v.id,
                    got: cmd.id,
                });
            }
            if !cmd.accel.is_finite() {
                return Err(SimError::Domain(format!("non-finite command for vehicle {}", v.id)));
            }
            let mut flags = EventFlags::default();
            if self.spawned_now.contains(&v.id) {
                flags.insert(EventFlags::SPAWNED);
            }
            if let Some(target) = cmd.lane_move {
                if target != v.lane {
                    v.lane = target;
                    flags.insert(EventFlags::LANE_CHANGED);
                }
            }
            if cmd.vetoed {
                flags.insert(EventFlags::IMPROPER_INTENT);
            }
            v.blinker = v.blinker_for(cmd.intent);
            v.last_intent = cmd.intent;

            let accel = cmd.accel.clamp(-B_PHYS, A_MAX);
            let speed = (v.speed + accel * dt).max(0.0);
            v.accel = (speed - v.speed) / dt;
            v.speed = speed;
            v.pos += speed * dt;
            if v.accel < -EMERGENCY_DECEL {
                flags.insert(EventFlags::EMERGENCY_BRAKE);
            }
            events.push(VehicleEvents { id: v.id, flags });
        }
        self.spawned_now.clear();

        let net = &self.scenario.network;
        let mut exited = Vec::new();
        let mut kept = Vec::with_capacity(self.vehicles.len());
        for (mut v, ev) in std::mem::take(&mut self.vehicles).into_iter().zip(events.iter_mut()) {
            if v.pos >= net.exit_position(v.lane) {
                v.exit_time = Some(new_time);
                v.controlled = false;
                ev.flags.insert(EventFlags::EXITED);
                exited.push(v);
            } else {
                kept.push(v);
            }
        }
        self.vehicles = kept;
        self.exited += exited.len() as u64;
        self.time = new_time;
        self.step += 1;
        self.refresh_control();
        self.check_overlap()?;
        Ok(StepReport { events, exited })
    }

    fn check_overlap(&self) -> Result<(), SimError> {
        let traffic = self.traffic();
        for lane in self.scenario.network.lanes() {
            let list = traffic.on_lane(lane);
            for pair in list.windows(2) {
                let (follower, leader) = (&self.vehicles[pair[0]], &self.vehicles[pair[1]]);
                if follower.pos > leader.rear() {
                    return Err(SimError::Overlap {
                        step: self.step,
                        lane,
                        follower: follower.id,
                        leader: leader.id,
                    });
                }
            }
        }
        Ok(())
    }
}
