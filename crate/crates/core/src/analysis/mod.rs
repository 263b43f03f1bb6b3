//! Steady-state force balances, range curves, optimal-velocity search and the
//! rolling-vs-flying advantage map.

mod advantage;
pub mod calibration;
mod search;
mod steady;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use advantage::{advantage_map, AdvantageCell, AdvantageGrid, SweepAxis};
pub use search::{
    golden_section_max, log_spaced, optimal_velocity, range_curve, OptimalVelocity, RangeCurve, SEARCH_GRID_POINTS,
    SEARCH_MAX_SPEED, SEARCH_MIN_SPEED, SEARCH_TOLERANCE,
};
pub use steady::{flying_steady_state, rolling_steady_state, steady_state, MAX_TILT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[serde(alias = "roll")]
    Rolling,
    #[serde(alias = "fly")]
    Flying,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Rolling => "rolling",
            Mode::Flying => "flying",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "roll" | "rolling" => Ok(Mode::Rolling),
            "fly" | "flying" => Ok(Mode::Flying),
            other => Err(Error::Config(format!("unknown mode `{other}` (expected roll or fly)"))),
        }
    }
}

/// Why a steady state cannot be held.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Infeasibility {
    /// A rotor would need more than its maximum thrust.
    RotorSaturation,
    /// No tilt below the model limit balances weight and drag.
    TiltLimit,
    /// The terrain cannot push back (normal load not positive).
    LostContact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateResult {
    pub mode: Mode,
    /// m/s
    pub speed: f64,
    /// rad
    pub slope: f64,
    pub rolling_resistance: f64,
    /// Forward tilt from vertical for flight, rad; 0 for rolling.
    pub tilt: f64,
    /// Rolling torque about the axle, N m (rolling only).
    pub torque: f64,
    /// Total thrust, N (flying only).
    pub thrust: f64,
    /// N, one entry per rotor.
    pub rotor_thrusts: Vec<f64>,
    /// W
    pub power: f64,
    /// m
    pub range: f64,
    pub infeasible: Option<Infeasibility>,
}

impl SteadyStateResult {
    pub fn is_feasible(&self) -> bool {
        self.infeasible.is_none()
    }

    /// Range if the point is usable by a search, `None` otherwise.
    pub fn usable_range(&self) -> Option<f64> {
        (self.is_feasible() && !self.range.is_nan()).then_some(self.range)
    }
}

/// `R = v E / P`, with `R = 0` at rest and unbounded range when a moving
/// vehicle needs no power.
pub fn range_from_power(speed: f64, power: f64, battery_energy: f64) -> f64 {
    if speed == 0.0 {
        0.0
    } else if power > 0.0 {
        speed * battery_energy / power
    } else {
        f64::INFINITY
    }
}

/// Area of the out-and-back disk reachable with a one-way range, `pi (r/2)^2`.
pub fn coverage_area(one_way_range: f64) -> f64 {
    PI * (0.5 * one_way_range).powi(2)
}
