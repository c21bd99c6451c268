use rand::Rng;

use super::VehicleParams;

/// Highest speed from which the follower can still avoid the leader if the
/// leader starts braking at `decel`.
///
/// `gap` is the free space in front of the follower. An infinite gap (no
/// leader) yields infinity.
pub fn safe_speed(v: f64, v_leader: f64, gap: f64, decel: f64, tau: f64) -> f64 {
    if gap.is_infinite() {
        return f64::INFINITY;
    }
    let denom = (v + v_leader) / (2.0 * decel) + tau;
    if denom <= 0.0 {
        // standing still with zero reaction time
        return if gap > 0.0 { f64::INFINITY } else { v_leader.min(0.0) };
    }
    v_leader + (gap - v_leader * tau) / denom
}

/// One Krauss speed update with the imperfection draw `r ∈ [0, 1)` supplied
/// by the caller.
pub fn krauss_speed(v: f64, v_leader: f64, gap: f64, p: &VehicleParams, dt: f64, r: f64) -> f64 {
    let v_safe = safe_speed(v, v_leader, gap.max(0.0), p.decel, p.tau);
    let v_des = p.v_max.min(v + p.accel * dt).min(v_safe);
    (v_des - r * p.sigma * p.accel * dt).max(0.0)
}

/// [`krauss_speed`] drawing `r` from `rng`. Always consumes exactly one
/// draw, whatever `sigma` is.
pub fn krauss_step<R: Rng + ?Sized>(
    v: f64,
    v_leader: f64,
    gap: f64,
    p: &VehicleParams,
    dt: f64,
    rng: &mut R,
) -> f64 {
    let r: f64 = rng.random();
    krauss_speed(v, v_leader, gap, p, dt, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn perfect() -> VehicleParams {
        VehicleParams { sigma: 0.0, ..Default::default() }
    }

    #[test]
    fn free_road_accelerates_by_a_dt() {
        let v = krauss_step(0.0, 0.0, f64::INFINITY, &perfect(), 1.0, &mut rng::from_seed(0));
        assert!((v - 2.6).abs() < 1e-12);
    }

    #[test]
    fn stopped_leader_at_zero_gap_forces_stop() {
        assert_eq!(safe_speed(5.0, 0.0, 0.0, 4.5, 1.0), 0.0);
        assert_eq!(krauss_speed(5.0, 0.0, 0.0, &perfect(), 1.0, 0.0), 0.0);
    }

    #[test]
    fn acceleration_bound_binds_before_safe_speed() {
        // 10 + (100 - 10) / (20 / 9 + 1) = 37.93…
        let vs = safe_speed(10.0, 10.0, 100.0, 4.5, 1.0);
        assert!((vs - (10.0 + 90.0 / (20.0 / 9.0 + 1.0))).abs() < 1e-12);
        assert!(vs > 37.9 && vs < 38.0);
        let v = krauss_speed(10.0, 10.0, 100.0, &perfect(), 1.0, 0.0);
        assert!((v - 12.6).abs() < 1e-12);
    }

    #[test]
    fn imperfection_only_slows_down() {
        let p = VehicleParams::default();
        let top = krauss_speed(5.0, 0.0, f64::INFINITY, &p, 1.0, 0.0);
        let worst = krauss_speed(5.0, 0.0, f64::INFINITY, &p, 1.0, 0.999_999);
        assert!(worst < top);
        assert!((top - worst - 0.5 * 2.6 * 0.999_999).abs() < 1e-9);
    }

    #[test]
    fn zero_reaction_time_from_standstill() {
        let p = VehicleParams { tau: 0.0, sigma: 0.0, ..Default::default() };
        assert_eq!(krauss_speed(0.0, 0.0, 10.0, &p, 1.0, 0.0), 2.6);
        assert_eq!(krauss_speed(0.0, 0.0, 0.0, &p, 1.0, 0.0), 0.0);
    }
}
