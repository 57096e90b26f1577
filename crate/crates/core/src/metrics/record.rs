use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::road::{EpisodeLog, EventFlags, LogRow, VehicleId};

pub const METERS_PER_MILE: f64 = 1609.344;
pub const ML_PER_GALLON: f64 = 3785.411784;
/// Stop hysteresis: a stop is counted when speed drops below `STOP_SPEED`
/// after having exceeded `REARM_SPEED`.
pub const STOP_SPEED: f64 = 0.3;
pub const REARM_SPEED: f64 = 2.0;

/// Demand polynomial `max(0, c0 + c1·v·a + c2·v·a² + c3·v + c4·v² + c5·v³)`.
pub type Polynomial = [f64; 6];

/// Fuel (mL/s), CO₂ (mg/s) and NOₓ (mg/s) rate polynomials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmissionCoefficients {
    pub fuel_ml_per_s: Polynomial,
    pub co2_mg_per_s: Polynomial,
    pub nox_mg_per_s: Polynomial,
}

impl Default for EmissionCoefficients {
    fn default() -> Self {
        let fuel = [0.25, 0.12, 0.005, 0.02, 0.0, 0.00006];
        Self {
            fuel_ml_per_s: fuel,
            // About 2.31 g of CO₂ per mL of gasoline burned.
            co2_mg_per_s: fuel.map(|c| c * 2310.0),
            nox_mg_per_s: [0.06, 0.06, 0.004, 0.006, 0.0, 0.00002],
        }
    }
}

pub fn emission_rate(v: f64, a: f64, c: &Polynomial) -> f64 {
    (c[0] + c[1] * v * a + c[2] * v * a * a + c[3] * v + c[4] * v * v + c[5] * v * v * v).max(0.0)
}

/// The evaluation metrics of one episode.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub throughput_vph: f64,
    pub mean_speed_mps: f64,
    pub mean_travel_time_s: f64,
    pub stops_per_vehicle: f64,
    pub fuel_mpg: f64,
    pub co2_g_per_mi: f64,
    pub nox_mg_per_mi: f64,
    pub vehicles: u64,
    pub exits: u64,
    /// The log held no vehicles; every metric is zero.
    pub empty: bool,
}

/// Counts stops in a speed trace.
pub fn count_stops(speeds: impl IntoIterator<Item = f64>) -> u32 {
    let mut armed = false;
    let mut stops = 0;
    for v in speeds {
        if v > REARM_SPEED {
            armed = true;
        } else if armed && v < STOP_SPEED {
            stops += 1;
            armed = false;
        }
    }
    stops
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

pub fn compute_metrics(log: &EpisodeLog, coef: &EmissionCoefficients) -> MetricsRecord {
    if log.rows.is_empty() {
        return MetricsRecord {
            empty: true,
            ..MetricsRecord::default()
        };
    }
    let dt = log.dt;
    let mut by_vehicle: BTreeMap<VehicleId, Vec<&LogRow>> = BTreeMap::new();
    for r in &log.rows {
        by_vehicle.entry(r.vehicle_id).or_default().push(r);
    }
    let exits = log.exit_count() as u64;
    let duration = log.duration();
    let mut travel = Vec::new();
    let mut stops = 0u64;
    for rows in by_vehicle.values() {
        stops += count_stops(rows.iter().map(|r| r.speed_mps)) as u64;
        let spawned = rows.first().filter(|r| r.event_flags.contains(EventFlags::SPAWNED));
        let exited = rows.last().filter(|r| r.event_flags.contains(EventFlags::EXITED));
        if let (Some(s), Some(e)) = (spawned, exited) {
            // Rows carry post-step times; the vehicle entered one step earlier.
            travel.push(e.time_s - (s.time_s - dt));
        }
    }
    // Fleet totals: ratios of per-vehicle sums stay finite for short or coasting trips.
    let (mut dist, mut fuel, mut co2, mut nox) = (0.0, 0.0, 0.0, 0.0);
    for r in &log.rows {
        let (v, a) = (r.speed_mps, r.accel_mps2);
        dist += v * dt;
        fuel += emission_rate(v, a, &coef.fuel_ml_per_s) * dt;
        co2 += emission_rate(v, a, &coef.co2_mg_per_s) * dt;
        nox += emission_rate(v, a, &coef.nox_mg_per_s) * dt;
    }
    let miles = dist / METERS_PER_MILE;
    let per_mile = |x: f64| if miles > 0.0 { x / miles } else { 0.0 };
    let speeds: Vec<f64> = log.rows.iter().map(|r| r.speed_mps).collect();
    let vehicles = by_vehicle.len() as u64;
    MetricsRecord {
        throughput_vph: if duration > 0.0 { exits as f64 * 3600.0 / duration } else { 0.0 },
        mean_speed_mps: mean(&speeds),
        mean_travel_time_s: mean(&travel),
        stops_per_vehicle: stops as f64 / vehicles as f64,
        fuel_mpg: if fuel > 0.0 { miles / (fuel / ML_PER_GALLON) } else { 0.0 },
        co2_g_per_mi: per_mile(co2 / 1000.0),
        nox_mg_per_mi: per_mile(nox),
        vehicles,
        exits,
        empty: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::road::{LaneId, Route};

    fn row(step: u32, id: u32, pos: f64, speed: f64, flags: EventFlags) -> LogRow {
        LogRow {
            step,
            time_s: (step + 1) as f64 * 0.2,
            vehicle_id: VehicleId(id),
            lane: LaneId(1),
            pos_m: pos,
            speed_mps: speed,
            accel_mps2: 0.0,
            route: Route::ThroughFreeway,
            event_flags: flags,
        }
    }

    #[test]
    fn polynomial_cases() {
        assert_eq!(emission_rate(12.0, 1.0, &[0.0; 6]), 0.0);
        assert_eq!(emission_rate(0.0, 0.0, &[0.7, 1.0, 1.0, 1.0, 1.0, 1.0]), 0.7);
        assert_eq!(emission_rate(10.0, 0.0, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0]), 10.0);
        assert_eq!(emission_rate(10.0, -9.0, &EmissionCoefficients::default().fuel_ml_per_s), 0.0);
    }

    #[test]
    fn constant_speed_traversal() {
        // 500 m at 25 m/s, 0.2 s steps: 100 steps, then idle until 200 s.
        let mut log = EpisodeLog::new(0.2);
        for k in 0..100u32 {
            let mut f = EventFlags::default();
            if k == 0 {
                f.insert(EventFlags::SPAWNED);
            }
            if k == 99 {
                f.insert(EventFlags::EXITED);
            }
            log.rows.push(row(k, 0, 5.0 * (k + 1) as f64, 25.0, f));
        }
        log.steps = 1000;
        let m = compute_metrics(&log, &EmissionCoefficients::default());
        assert!((m.throughput_vph - 18.0).abs() < 1e-12);
        assert!((m.mean_travel_time_s - 20.0).abs() < 1e-9);
        assert_eq!(m.stops_per_vehicle, 0.0);
        assert_eq!(m.exits, 1);
        // 1.6875 mL/s for 20 s over 500 m.
        let expect = (500.0 / METERS_PER_MILE) / (1.6875 * 20.0 / ML_PER_GALLON);
        assert!((m.fuel_mpg - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn stop_hysteresis() {
        assert_eq!(count_stops([10.0, 5.0, 1.0, 0.5]), 0);
        assert_eq!(count_stops([0.0, 0.1, 0.0]), 0);
        assert_eq!(count_stops([10.0, 0.0, 0.2, 0.0, 3.0, 0.1, 0.0]), 2);
        // Crawling between 0.3 and 2 m/s does not re-arm.
        assert_eq!(count_stops([5.0, 0.2, 1.5, 0.1, 1.9, 0.0]), 1);
    }

    #[test]
    fn empty_log_is_flagged() {
        let m = compute_metrics(&EpisodeLog::new(0.2), &EmissionCoefficients::default());
        assert!(m.empty);
        assert_eq!(m.throughput_vph, 0.0);
    }

    #[test]
    fn emissions_non_negative_over_simulated_range() {
        let c = EmissionCoefficients::default();
        for vi in 0..=40 {
            for ai in -20..=8 {
                let (v, a) = (vi as f64, ai as f64 * 0.5);
                assert!(emission_rate(v, a, &c.fuel_ml_per_s) >= 0.0);
                assert!(emission_rate(v, a, &c.nox_mg_per_s) >= 0.0);
            }
        }
    }
}
