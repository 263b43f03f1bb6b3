//! One-parameter fit of the rotor disk radius to reference optimum ranges on
//! flat ground (`C_rr = 0.01`).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::params::{Preset, Setup};
use crate::power::RollingPowerOptions;

use super::{optimal_velocity, Mode};

/// Reference optimum range for the rolling pair, m.
pub const TARGET_ROLLING_RANGE: f64 = 267e3;
/// Reference optimum range for flight, m.
pub const TARGET_FLYING_RANGE: f64 = 135e3;
pub const CALIBRATION_CRR: f64 = 0.01;
/// Admissible disk radii, m.
pub const DISK_RADIUS_BAND: (f64, f64) = (0.05, 0.10);
/// Scan resolution over [`DISK_RADIUS_BAND`].
pub const CALIBRATION_STEPS: usize = 51;
/// Result of [`calibrate`] at [`CALIBRATION_STEPS`], m. Checked by test.
pub const CALIBRATED_DISK_RADIUS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    /// m
    pub disk_radius: f64,
    pub rolling_speed: f64,
    pub rolling_range: f64,
    pub flying_speed: f64,
    pub flying_range: f64,
    /// `ln(R*/target)` per mode.
    pub rolling_residual: f64,
    pub flying_residual: f64,
    /// Sum of squared log residuals.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub points: Vec<CalibrationPoint>,
    pub best: CalibrationPoint,
}

pub fn evaluate(disk_radius: f64, roll: &Setup, fly: &Setup, opts: &RollingPowerOptions) -> Result<CalibrationPoint> {
    let roll = roll.clone().with_disk_radius(disk_radius);
    let fly = fly.clone().with_disk_radius(disk_radius);
    let r = optimal_velocity(Mode::Rolling, 0.0, CALIBRATION_CRR, &roll, opts)?;
    let f = optimal_velocity(Mode::Flying, 0.0, CALIBRATION_CRR, &fly, opts)?;
    let rolling_residual = (r.range / TARGET_ROLLING_RANGE).ln();
    let flying_residual = (f.range / TARGET_FLYING_RANGE).ln();
    Ok(CalibrationPoint {
        disk_radius,
        rolling_speed: r.speed,
        rolling_range: r.range,
        flying_speed: f.speed,
        flying_range: f.range,
        rolling_residual,
        flying_residual,
        cost: rolling_residual.powi(2) + flying_residual.powi(2),
    })
}

/// Scans `steps` radii across [`DISK_RADIUS_BAND`] and keeps the lowest cost.
pub fn calibrate(roll: &Setup, fly: &Setup, steps: usize, opts: &RollingPowerOptions) -> Result<Calibration> {
    let (lo, hi) = DISK_RADIUS_BAND;
    let radii: Vec<f64> = super::SweepAxis::new(lo, hi, steps.max(1)).values();
    let points = radii
        .par_iter()
        .map(|&r| evaluate(r, roll, fly, opts))
        .collect::<Result<Vec<_>>>()?;
    let best = *points
        .iter()
        .min_by(|a, b| a.cost.total_cmp(&b.cost))
        .expect("at least one radius");
    Ok(Calibration { points, best })
}

/// Presets with the committed disk radius: (rolling pair, flying agent).
pub fn calibrated_setups() -> (Setup, Setup) {
    (
        Preset::TitanTable1Roll.setup().with_disk_radius(CALIBRATED_DISK_RADIUS),
        Preset::TitanTable1Fly.setup().with_disk_radius(CALIBRATED_DISK_RADIUS),
    )
}
