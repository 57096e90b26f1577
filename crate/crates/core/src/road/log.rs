use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::geometry::LaneId;
use super::vehicle::{Route, VehicleId};
use super::world::{StepReport, World};
use super::SimError;

/// Per-vehicle, per-step event bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventFlags(pub u8);

impl EventFlags {
    pub const SPAWNED: EventFlags = EventFlags(1);
    pub const LANE_CHANGED: EventFlags = EventFlags(2);
    pub const EMERGENCY_BRAKE: EventFlags = EventFlags(4);
    pub const EXITED: EventFlags = EventFlags(8);
    /// A lane change requested by the controller was refused.
    pub const IMPROPER_INTENT: EventFlags = EventFlags(16);

    pub fn insert(&mut self, other: EventFlags) {
        self.0 |= other.0;
    }

    pub fn contains(self, other: EventFlags) -> bool {
        self.0 & other.0 == other.0
    }
}

/// One row of the episode trace: a vehicle's state after a step.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    /// Zero-based step index; the row describes the state at its end.
    pub step: u32,
    pub time_s: f64,
    pub vehicle_id: VehicleId,
    pub lane: LaneId,
    pub pos_m: f64,
    pub speed_mps: f64,
    pub accel_mps2: f64,
    pub route: Route,
    pub event_flags: EventFlags,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    time_s: f64,
    vehicle_id: u32,
    lane: u8,
    pos_m: f64,
    speed_mps: f64,
    accel_mps2: f64,
    route: String,
    event_flags: u8,
}

/// Complete per-step, per-vehicle trace of an episode.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeLog {
    pub dt: f64,
    /// Number of steps simulated.
    pub steps: u32,
    pub rows: Vec<LogRow>,
}

impl EpisodeLog {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            steps: 0,
            rows: Vec::new(),
        }
    }

    /// Appends the post-step state of every vehicle that took part in the step.
    pub fn record(&mut self, world: &World, report: &StepReport) {
        let step = self.steps;
        let time_s = world.time;
        let mut exited = report.exited.iter();
        for ev in &report.events {
            let v = match world.vehicle(ev.id) {
                Some(v) => v,
                None => exited
                    .find(|v| v.id == ev.id)
                    .expect("vehicle left without an exit record"),
            };
            self.rows.push(LogRow {
                step,
                time_s,
                vehicle_id: v.id,
                lane: v.lane,
                pos_m: v.pos,
                speed_mps: v.speed,
                accel_mps2: v.accel,
                route: v.route,
                event_flags: ev.flags,
            });
        }
        self.steps += 1;
    }

    pub fn duration(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn exit_count(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.event_flags.contains(EventFlags::EXITED))
            .count()
    }

    /// Rows grouped by step; steps without vehicles yield empty slices.
    pub fn by_step(&self) -> Vec<&[LogRow]> {
        let mut out = vec![&self.rows[0..0]; self.steps as usize];
        let mut start = 0;
        while start < self.rows.len() {
            let step = self.rows[start].step;
            let end = start + self.rows[start..].partition_point(|r| r.step == step);
            if let Some(slot) = out.get_mut(step as usize) {
                *slot = &self.rows[start..end];
            }
            start = end;
        }
        out
    }

    /// Writes the trace as CSV:
    /// `time_s,vehicle_id,lane,pos_m,speed_mps,accel_mps2,route,event_flags`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let mut writer = csv::Writer::from_writer(out);
        for r in &self.rows {
            writer.serialize(CsvRow {
                time_s: r.time_s,
                vehicle_id: r.vehicle_id.0,
                lane: r.lane.0,
                pos_m: r.pos_m,
                speed_mps: r.speed_mps,
                accel_mps2: r.accel_mps2,
                route: r.route.code().to_string(),
                event_flags: r.event_flags.0,
            })?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Reads a trace written by [`EpisodeLog::write_csv`]. The step count is
    /// taken as `steps` when given, otherwise inferred from the last row.
    pub fn read_csv<R: Read>(input: R, dt: f64, steps: Option<u32>) -> Result<Self, SimError> {
        let mut reader = csv::Reader::from_reader(input);
        let mut rows = Vec::new();
        for rec in reader.deserialize::<CsvRow>() {
            let r = rec?;
            let route = Route::from_code(&r.route)
                .ok_or_else(|| SimError::Format(format!("unknown route code {:?}", r.route)))?;
            let step = (r.time_s / dt).round() as i64 - 1;
            if step < 0 {
                return Err(SimError::Format(format!("row time {} precedes the first step", r.time_s)));
            }
            rows.push(LogRow {
                step: step as u32,
                time_s: r.time_s,
                vehicle_id: VehicleId(r.vehicle_id),
                lane: LaneId(r.lane),
                pos_m: r.pos_m,
                speed_mps: r.speed_mps,
                accel_mps2: r.accel_mps2,
                route,
                event_flags: EventFlags(r.event_flags),
            });
        }
        let inferred = rows.last().map_or(0, |r| r.step + 1);
        Ok(Self {
            dt,
            steps: steps.unwrap_or(inferred).max(inferred),
            rows,
        })
    }
}
