use super::vehicle::{DriverParams, B_PHYS};
use super::SimError;

/// Intelligent Driver Model acceleration.
///
/// `gap` is bumper-to-bumper distance to the leader, `f64::INFINITY` when
/// there is none. The result is clamped to `[-B_PHYS, params.accel]`.
pub fn idm_acceleration(
    ego_speed: f64,
    gap: f64,
    leader_speed: f64,
    desired_speed: f64,
    params: &DriverParams,
) -> Result<f64, SimError> {
    if !ego_speed.is_finite() || !leader_speed.is_finite() || !desired_speed.is_finite() || gap.is_nan()
    {
        return Err(SimError::Domain(format!(
            "idm inputs must be finite: v={ego_speed}, gap={gap}, v_lead={leader_speed}, v0={desired_speed}"
        )));
    }
    if ego_speed < 0.0 || desired_speed <= 0.0 {
        return Err(SimError::Domain(format!(
            "idm needs v >= 0 and v0 > 0, got v={ego_speed}, v0={desired_speed}"
        )));
    }
    let a = params.accel;
    let free = 1.0 - (ego_speed / desired_speed).powf(params.delta);
    let interaction = if gap == f64::INFINITY {
        0.0
    } else if gap <= 0.0 {
        return Ok(-B_PHYS);
    } else {
        let dv = ego_speed - leader_speed;
        let s_star = params.min_gap
            + (ego_speed * params.time_headway
                + ego_speed * dv / (2.0 * (a * params.comfortable_decel).sqrt()))
            .max(0.0);
        (s_star / gap).powi(2)
    };
    Ok((a * (free - interaction)).clamp(-B_PHYS, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden_params() -> DriverParams {
        DriverParams {
            time_headway: 1.2,
            min_gap: 2.0,
            accel: 2.0,
            comfortable_decel: 3.0,
            delta: 4.0,
            ..DriverParams::default()
        }
    }

    #[test]
    fn free_road_at_desired_speed_is_zero() {
        let p = golden_params();
        let acc = idm_acceleration(29.06, f64::INFINITY, 0.0, 29.06, &p).unwrap();
        assert!(acc.abs() < 1e-15);
    }

    #[test]
    fn full_acceleration_from_rest() {
        let p = golden_params();
        assert_eq!(idm_acceleration(0.0, f64::INFINITY, 0.0, 29.06, &p).unwrap(), 2.0);
    }

    #[test]
    fn matches_hand_evaluation() {
        // s* = 2 + 15 * 1.2 = 20; 2 * (1 - (15/29.06)^4 - (20/30)^2)
        let p = golden_params();
        let acc = idm_acceleration(15.0, 30.0, 15.0, 29.06, &p).unwrap();
        assert!((acc - 0.969_135_877_474_178_5).abs() < 1e-12, "{acc}");
    }

    #[test]
    fn clamps_to_physical_braking() {
        let p = golden_params();
        let acc = idm_acceleration(30.0, 0.5, 0.0, 29.06, &p).unwrap();
        assert_eq!(acc, -B_PHYS);
    }

    #[test]
    fn rejects_non_finite_input() {
        let p = golden_params();
        assert!(idm_acceleration(f64::NAN, 10.0, 0.0, 29.06, &p).is_err());
        assert!(idm_acceleration(10.0, f64::NAN, 0.0, 29.06, &p).is_err());
        assert!(idm_acceleration(10.0, 10.0, f64::INFINITY, 29.06, &p).is_err());
    }
}
