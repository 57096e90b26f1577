//! Collision-prevention layer.
//!
//! A command is safe when, should the leader start braking at `B_PHYS`
//! right now, the ego can still come to rest at least `min_gap` behind it by
//! braking at `B_PHYS` from the next step on. Stopping distances are the exact
//! sums produced by the semi-implicit Euler integrator, which makes the rule
//! inductive: a safe state stays safe when the ego keeps braking.

use super::vehicle::{A_MAX, B_PHYS};

/// Slack absorbing floating-point drift in the stopping-distance sums.
const MARGIN: f64 = 1e-9;

/// Distance covered after the current step by a vehicle moving at `speed`
/// during this step and braking at `B_PHYS` from then on.
pub fn stopping_distance(speed: f64, dt: f64) -> f64 {
    let step = B_PHYS * dt;
    let n = (speed / step).floor();
    (n * speed * dt - step * dt * n * (n + 1.0) / 2.0).max(0.0)
}

/// Largest speed for this step such that `v·dt + stopping_distance(v) <= budget`.
fn max_speed_for_budget(budget: f64, dt: f64) -> f64 {
    if budget <= 0.0 {
        return 0.0;
    }
    let step = B_PHYS * dt;
    // f(v) = v·dt + stopping_distance(v) is piecewise linear with slope dt·(n+1)
    // on [n·step, (n+1)·step).
    let mut n = 0.0_f64;
    loop {
        let lo = n * step;
        let f_lo = lo * dt + stopping_distance(lo, dt);
        let hi = lo + step;
        let f_hi = hi * dt + stopping_distance(hi, dt);
        if budget < f_hi {
            return lo + (budget - f_lo) / (dt * (n + 1.0));
        }
        n += 1.0;
    }
}

/// Largest speed the ego may adopt this step behind a leader `gap` meters
/// ahead (bumper to bumper) travelling at `leader_speed`.
pub fn safe_speed(gap: f64, leader_speed: f64, min_gap: f64, dt: f64) -> f64 {
    if gap == f64::INFINITY {
        return f64::INFINITY;
    }
    let leader_next = (leader_speed - B_PHYS * dt).max(0.0);
    let budget = gap - min_gap + leader_next * dt + stopping_distance(leader_next, dt) - MARGIN;
    max_speed_for_budget(budget, dt)
}

/// Maximum acceleration keeping the ego able to stop behind its leader.
///
/// The result is capped at `A_MAX` but not floored: values below `-B_PHYS`
/// signal that no physically available braking restores the margin.
pub fn safe_acceleration_bound(
    ego_speed: f64,
    leader_gap: f64,
    leader_speed: f64,
    min_gap: f64,
    dt: f64,
) -> f64 {
    if leader_gap == f64::INFINITY {
        return A_MAX;
    }
    let v = safe_speed(leader_gap, leader_speed, min_gap, dt);
    ((v - ego_speed) / dt).min(A_MAX)
}
