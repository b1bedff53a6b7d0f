//! Rotary-wing power consumption, wireless charging amounts, and per-step
//! energy accounting.
//!
//! The hover and cruise models are the classic blade-profile / induced /
//! parasite decomposition. The bundled `phantom4pro` preset carries the
//! DJI Phantom 4 Pro constants; note that its listed take-off weight
//! (1375 g) is inconsistent with its listed mean induced hover velocity
//! (v0 = 4.03 m/s) under v0 = sqrt(W / (2 rho A)). The preset honors the
//! v0 column and sets W = 20 N so that P_o, P_i and v0 are mutually
//! consistent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Real;

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("scheduled round trip ({round_trip_s:.3} s) does not fit in a {step_len_s:.3} s step")]
    InfeasiblePair { round_trip_s: f64, step_len_s: f64 },
}

/// Rotary-wing airframe constants for the hover/cruise power model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct Airframe<T: Real> {
    /// Profile drag coefficient (delta).
    pub delta: T,
    /// Air density, kg/m^3.
    pub rho: T,
    /// Rotor solidity.
    pub s: T,
    /// Rotor disc area, m^2.
    pub disc_area: T,
    /// Blade angular velocity, rad/s.
    pub omega: T,
    /// Rotor radius, m.
    pub rotor_radius: T,
    /// Incremental correction factor to induced power.
    pub k: T,
    /// Aircraft weight including battery and propellers, N.
    pub weight: T,
    /// Tip speed of the rotor blade, m/s.
    pub u_tip: T,
    /// Mean rotor-induced velocity in hovering, m/s.
    pub v0: T,
    /// Fuselage drag ratio.
    pub d0: T,
}

impl<T: Real> Airframe<T> {
    /// DJI Phantom 4 Pro v2.0 preset (W = 20 N, see module docs).
    pub fn phantom4pro() -> Self {
        let c = T::from_f64_const;
        Airframe {
            delta: c(0.012),
            rho: c(1.225),
            s: c(0.05),
            disc_area: c(0.503),
            omega: c(300.0),
            rotor_radius: c(0.4),
            k: c(0.1),
            weight: c(20.0),
            u_tip: c(120.0),
            v0: c(4.03),
            d0: c(0.6),
        }
    }

    /// All constants must be strictly positive; also warns (via the
    /// returned flag) when `u_tip` disagrees with `omega * R^2`.
    pub fn validate(&self) -> Result<bool, String> {
        let fields = [
            ("delta", self.delta),
            ("rho", self.rho),
            ("s", self.s),
            ("disc_area", self.disc_area),
            ("omega", self.omega),
            ("rotor_radius", self.rotor_radius),
            ("k", self.k),
            ("weight", self.weight),
            ("u_tip", self.u_tip),
            ("v0", self.v0),
            ("d0", self.d0),
        ];
        for (name, v) in fields {
            if !(v > T::zero()) {
                return Err(format!("airframe.{name} must be > 0, got {v}"));
            }
        }
        let expected = self.omega * self.rotor_radius * self.rotor_radius;
        let tol = T::from_f64_const(1e-6) * expected.abs();
        Ok((self.u_tip - expected).abs() <= tol)
    }
}

/// Blade-profile component of hover power: (delta/8) rho s A Omega^3 R^3.
pub fn blade_profile_power<T: Real>(af: &Airframe<T>) -> T {
    let eight = T::from_f64_const(8.0);
    af.delta / eight
        * af.rho
        * af.s
        * af.disc_area
        * af.omega.powi(3)
        * af.rotor_radius.powi(3)
}

/// Induced component of hover power: (1 + k) W^(3/2) / sqrt(2 rho A).
pub fn induced_power<T: Real>(af: &Airframe<T>) -> T {
    let two = T::from_f64_const(2.0);
    (T::one() + af.k) * af.weight.powf(T::from_f64_const(1.5)) / (two * af.rho * af.disc_area).sqrt()
}

/// Hover power: blade profile plus induced.
pub fn hover_power<T: Real>(af: &Airframe<T>) -> T {
    blade_profile_power(af) + induced_power(af)
}

/// Forward-flight power at speed `v`: blade profile, induced and parasite
/// terms. Equals `hover_power` exactly at v = 0.
pub fn cruise_power<T: Real>(af: &Airframe<T>, v: T) -> T {
    let two = T::from_f64_const(2.0);
    let three = T::from_f64_const(3.0);
    let four = T::from_f64_const(4.0);
    let half = T::from_f64_const(0.5);

    let p_o = blade_profile_power(af);
    let p_i = induced_power(af);

    let blade = p_o * (T::one() + three * v * v / (af.u_tip * af.u_tip));

    let v0_sq = af.v0 * af.v0;
    let radicand = (T::one() + v.powi(4) / (four * v0_sq * v0_sq)).sqrt() - v * v / (two * v0_sq);
    // Analytically non-negative; floating cancellation at extreme v could
    // push it below zero, in which case it is clamped.
    let radicand = radicand.max(T::zero());
    let induced = p_i * radicand.sqrt();

    let parasite = half * af.d0 * af.rho * af.s * af.disc_area * v.powi(3);

    blade + induced + parasite
}

/// Energy received during one scheduled step:
/// offer_power * eta_tower * eta_uav * max(0, step_len - travel_time).
pub fn charge_amount<T: Real>(
    offer_power: T,
    eta_tower: T,
    eta_uav: T,
    step_len: T,
    travel_time: T,
) -> T {
    let effective = (step_len - travel_time).max(T::zero());
    offer_power * eta_tower * eta_uav * effective
}

/// Battery update with capacity clamp: min(e + e_c, capacity).
pub fn apply_charge<T: Real>(e: T, e_c: T, capacity: T) -> T {
    (e + e_c).min(capacity)
}

/// Energy spent by one UAV during one step.
///
/// Scheduled UAVs fly the round trip to the tower at cruise power and
/// hover at the tower for the rest of the step. Unscheduled UAVs split
/// the step into trajectory flight time (cruise) and dwell time (hover),
/// supplied by the caller.
pub fn step_consumption<T: Real>(
    af: &Airframe<T>,
    speed: T,
    step_len: T,
    scheduled_distance: Option<T>,
    unscheduled_flight_time: T,
) -> Result<T, EnergyError> {
    match scheduled_distance {
        Some(dist) => {
            let round_trip = T::from_f64_const(2.0) * dist / speed;
            if round_trip > step_len {
                return Err(EnergyError::InfeasiblePair {
                    round_trip_s: round_trip.to_f64().unwrap_or(f64::NAN),
                    step_len_s: step_len.to_f64().unwrap_or(f64::NAN),
                });
            }
            Ok(cruise_power(af, speed) * round_trip + hover_power(af) * (step_len - round_trip))
        }
        None => {
            let fly = unscheduled_flight_time.min(step_len).max(T::zero());
            Ok(cruise_power(af, speed) * fly + hover_power(af) * (step_len - fly))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn af() -> Airframe<f64> {
        Airframe::phantom4pro()
    }

    // Pre-build hand evaluations of the hover equation with the preset
    // constants:
    //   P_o = (0.012/8)*1.225*0.05*0.503*300^3*0.4^3 = 79.853 W
    //   P_i = 1.1*20^1.5/sqrt(2*1.225*0.503)         = 88.627 W
    #[test]
    fn hover_power_matches_hand_evaluation() {
        assert_relative_eq!(blade_profile_power(&af()), 79.853, max_relative = 1e-3);
        assert_relative_eq!(induced_power(&af()), 88.627, max_relative = 1e-3);
        assert_relative_eq!(hover_power(&af()), 168.48, max_relative = 1e-3);
    }

    #[test]
    fn doubling_delta_doubles_blade_profile_only() {
        let mut a = af();
        let p_o = blade_profile_power(&a);
        let p_i = induced_power(&a);
        a.delta = a.delta * 2.0;
        assert_relative_eq!(blade_profile_power(&a), 2.0 * p_o, max_relative = 1e-12);
        assert_relative_eq!(induced_power(&a), p_i, max_relative = 1e-12);
    }

    #[test]
    fn zero_correction_factor_collapses_induced() {
        let mut a = af();
        a.k = 0.0;
        let expected = 20.0f64.powf(1.5) / (2.0 * a.rho * a.disc_area).sqrt();
        assert_relative_eq!(induced_power(&a), expected, max_relative = 1e-12);
    }

    // Term-by-term hand evaluation at v = 20:
    //   blade    = 79.853 * (1 + 3*400/14400)            = 86.507 W
    //   induced  = 88.627 * (sqrt(1+160000/(4*4.03^4)) - 400/(2*4.03^2))^(1/2)
    //            = 88.627 * 0.20106                      = 17.820 W
    //   parasite = 0.5*0.6*1.225*0.05*0.503*8000         = 73.941 W
    #[test]
    fn cruise_power_matches_hand_evaluation() {
        let p = cruise_power(&af(), 20.0);
        assert_relative_eq!(p, 178.27, max_relative = 2e-3);
        let parasite = 0.5 * 0.6 * 1.225 * 0.05 * 0.503 * 20.0f64.powi(3);
        assert_relative_eq!(parasite, 73.941, max_relative = 1e-3);
    }

    #[test]
    fn cruise_at_zero_equals_hover_exactly() {
        assert_eq!(cruise_power(&af(), 0.0), hover_power(&af()));
    }

    #[test]
    fn cruise_eventually_increasing() {
        for v in 10..80 {
            let v = v as f64;
            assert!(cruise_power(&af(), v + 1.0) > cruise_power(&af(), v), "v={v}");
        }
    }

    #[test]
    fn charge_amount_examples() {
        assert_relative_eq!(charge_amount(100.0, 0.9, 0.9, 60.0, 10.0), 4050.0);
        assert_eq!(charge_amount(100.0, 0.9, 0.9, 60.0, 60.0), 0.0);
        assert_eq!(charge_amount(100.0, 0.9, 0.9, 60.0, 75.0), 0.0);
        assert_eq!(charge_amount(100.0, 1.0, 1.0, 60.0, 0.0), 6000.0);
    }

    #[test]
    fn apply_charge_clamps_at_capacity() {
        assert_eq!(apply_charge(100.0, 50.0, 120.0), 120.0);
        assert_eq!(apply_charge(10.0, 5.0, 120.0), 15.0);
        assert_eq!(apply_charge(120.0, 999.0, 120.0), 120.0);
    }

    #[test]
    fn step_consumption_hovering_full_step() {
        let c = step_consumption(&af(), 20.0, 60.0, None, 0.0).unwrap();
        assert_relative_eq!(c, hover_power(&af()) * 60.0, max_relative = 1e-12);
        // ~10.1 kJ per idle minute
        assert_relative_eq!(c, 10_109.0, max_relative = 1e-2);
    }

    #[test]
    fn step_consumption_scheduled_zero_distance_is_pure_hover() {
        let c = step_consumption(&af(), 20.0, 60.0, Some(0.0), 0.0).unwrap();
        assert_eq!(c, hover_power(&af()) * 60.0);
    }

    #[test]
    fn step_consumption_scheduled_round_trip() {
        // 200 m at 20 m/s: tau = 10 s one way.
        let c = step_consumption(&af(), 20.0, 60.0, Some(200.0), 0.0).unwrap();
        let expected = cruise_power(&af(), 20.0) * 20.0 + hover_power(&af()) * 40.0;
        assert_relative_eq!(c, expected, max_relative = 1e-12);
        assert_relative_eq!(c, 10_305.0, max_relative = 1e-2);
    }

    #[test]
    fn step_consumption_rejects_unreachable_pair() {
        let err = step_consumption(&af(), 20.0, 60.0, Some(1000.0), 0.0).unwrap_err();
        assert!(matches!(err, EnergyError::InfeasiblePair { .. }));
    }

    #[test]
    fn battery_capacity_from_preset_cells() {
        // 5.870 Ah * 17.4 V * 3600 s/h
        let joules = 5.870 * 17.4 * 3600.0;
        assert_relative_eq!(joules, 367_697.0, max_relative = 1e-3);
    }

    #[test]
    fn preset_validates_with_u_tip_warning() {
        // Table lists U_tip = 120 while Omega * R^2 = 48; validate flags it.
        let consistent = af().validate().unwrap();
        assert!(!consistent);
    }
}
