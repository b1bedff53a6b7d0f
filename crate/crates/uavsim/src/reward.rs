//! The objective algebra: tower-side fairness reward, UAV-side energy
//! reward, their epsilon-weighted combination, and the time-averaged
//! system value.
//!
//! Two combination modes exist. `Raw` follows the formulas literally:
//! sum(d) / std(d) on the tower side and sum(e_j / E_j) on the UAV side.
//! Those two magnitudes differ by orders of magnitude, so `Normalized`
//! (the default scheduling objective) maps both sides into [0, 1] before
//! weighting; the raw values are still reported alongside.
//!
//! The raw tower reward divides by the population standard deviation,
//! which is zero at perfect fairness; a configurable floor keeps it
//! finite. One source writes the combination with a minus sign on the
//! UAV term while defining larger UAV power as a greater reward; this
//! implementation uses plus, consistent with the latter.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Real;

/// Default substitute for a zero standard deviation in the raw tower reward.
pub const SIGMA_FLOOR: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("epsilon must lie in [0, 1], got {0}")]
    EpsilonOutOfRange(f64),
    #[error("energy and capacity sequences differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty reward series")]
    EmptySeries,
    #[error("d_capacity must be > 0 in normalized mode")]
    NonPositiveDataCapacity,
}

/// How the tower and UAV terms are combined into one objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// Literal formulas: eps * sum/std + (1 - eps) * sum of energy ratios.
    Raw,
    /// Both terms mapped into [0, 1] before weighting.
    #[default]
    Normalized,
}

/// One step's reward, raw and normalized, plus the combined objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown<T> {
    pub r_tower_raw: T,
    pub r_uav_raw: T,
    pub r_tower_norm: T,
    pub r_uav_norm: T,
    pub combined: T,
}

fn mean<T: Real>(xs: &[T]) -> T {
    let n = T::from_usize(xs.len()).unwrap();
    xs.iter().fold(T::zero(), |a, &b| a + b) / n
}

/// Population standard deviation.
fn pop_std<T: Real>(xs: &[T]) -> T {
    let m = mean(xs);
    let n = T::from_usize(xs.len()).unwrap();
    (xs.iter().fold(T::zero(), |a, &b| a + (b - m) * (b - m)) / n).sqrt()
}

/// Tower-side fairness reward: sum(d) / std(d), with `sigma_floor`
/// substituted when the spread degenerates to zero.
pub fn tower_data_reward<T: Real>(d: &[T], sigma_floor: T) -> T {
    assert!(!d.is_empty(), "tower data vector must be non-empty");
    let sum = d.iter().fold(T::zero(), |a, &b| a + b);
    let sigma = pop_std(d).max(sigma_floor);
    sum / sigma
}

/// UAV-side energy reward: sum over the fleet of e_j / E_j.
pub fn uav_power_reward<T: Real>(e: &[T], capacity: &[T]) -> Result<T, RewardError> {
    if e.len() != capacity.len() {
        return Err(RewardError::LengthMismatch(e.len(), capacity.len()));
    }
    Ok(e.iter()
        .zip(capacity)
        .fold(T::zero(), |acc, (&ej, &cj)| acc + ej / cj))
}

/// Full per-step reward: both raw terms, both normalized terms, and the
/// epsilon-weighted combination under `mode`.
///
/// Normalized tower term: (sum(d) / d_capacity) / (1 + CV), where CV is
/// the coefficient of variation across towers (0 when the mean is 0).
/// Normalized UAV term: average energy ratio across the fleet.
pub fn combined_reward<T: Real>(
    epsilon: T,
    tower_data: &[T],
    uav_energy: &[T],
    uav_capacity: &[T],
    mode: RewardMode,
    d_capacity: T,
    sigma_floor: T,
) -> Result<RewardBreakdown<T>, RewardError> {
    let eps = epsilon.to_f64().unwrap_or(f64::NAN);
    if !(0.0..=1.0).contains(&eps) {
        return Err(RewardError::EpsilonOutOfRange(eps));
    }
    if mode == RewardMode::Normalized && !(d_capacity > T::zero()) {
        return Err(RewardError::NonPositiveDataCapacity);
    }

    let r_tower_raw = tower_data_reward(tower_data, sigma_floor);
    let r_uav_raw = uav_power_reward(uav_energy, uav_capacity)?;

    let sum = tower_data.iter().fold(T::zero(), |a, &b| a + b);
    let m = mean(tower_data);
    let cv = if m > T::zero() { pop_std(tower_data) / m } else { T::zero() };
    let r_tower_norm = if d_capacity > T::zero() {
        (sum / d_capacity) / (T::one() + cv)
    } else {
        T::zero()
    };
    let fleet = T::from_usize(uav_energy.len()).unwrap();
    let r_uav_norm = if uav_energy.is_empty() { T::zero() } else { r_uav_raw / fleet };

    let combined = match mode {
        RewardMode::Raw => epsilon * r_tower_raw + (T::one() - epsilon) * r_uav_raw,
        RewardMode::Normalized => epsilon * r_tower_norm + (T::one() - epsilon) * r_uav_norm,
    };

    Ok(RewardBreakdown {
        r_tower_raw,
        r_uav_raw,
        r_tower_norm,
        r_uav_norm,
        combined,
    })
}

/// Finite-horizon surrogate of the time-average objective: the mean of
/// the per-step combined rewards.
pub fn system_value_timeavg<T: Real>(series: &[T]) -> Result<T, RewardError> {
    if series.is_empty() {
        return Err(RewardError::EmptySeries);
    }
    Ok(mean(series))
}
