use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Setup;
use crate::power::RollingPowerOptions;

use super::{optimal_velocity, Mode};

/// Evenly spaced axis; a single point sits at `min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl SweepAxis {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        SweepAxis { min, max, count }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.min],
            n => (0..n)
                .map(|k| {
                    if k == n - 1 {
                        self.max
                    } else {
                        self.min + (self.max - self.min) * k as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvantageCell {
    /// rad
    pub slope: f64,
    pub rolling_resistance: f64,
    /// m/s; NaN when no speed is feasible.
    pub rolling_speed: f64,
    /// m; 0 when infeasible, infinite when the pair can coast.
    pub rolling_range: f64,
    pub flying_speed: f64,
    pub flying_range: f64,
    /// `R_roll - R_fly`, m.
    pub delta_range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageGrid {
    /// rad
    pub slopes: Vec<f64>,
    pub rolling_resistances: Vec<f64>,
    /// Slope-major: cell `(i, j)` is at `i * rolling_resistances.len() + j`.
    pub cells: Vec<AdvantageCell>,
    /// `(slope, C_rr)` points where the range difference changes sign, found
    /// by linear interpolation along each fixed-slope column.
    pub crossover: Vec<(f64, f64)>,
}

impl AdvantageGrid {
    pub fn cell(&self, slope_index: usize, crr_index: usize) -> &AdvantageCell {
        &self.cells[slope_index * self.rolling_resistances.len() + crr_index]
    }
}

fn optimum_or_limit(mode: Mode, slope: f64, crr: f64, setup: &Setup, opts: &RollingPowerOptions) -> Result<(f64, f64)> {
    match optimal_velocity(mode, slope, crr, setup, opts) {
        Ok(o) => Ok((o.speed, o.range)),
        Err(Error::UnboundedRange { speed }) => Ok((speed, f64::INFINITY)),
        Err(Error::NoFeasibleVelocity) => Ok((f64::NAN, 0.0)),
        Err(e) => Err(e),
    }
}

/// Rolling-minus-flying range over a slope by rolling-resistance grid, each
/// cell at both modes' own optimal speeds. Flight does not depend on `C_rr`,
/// so it is solved once per slope.
pub fn advantage_map(
    slopes: &SweepAxis,
    crrs: &SweepAxis,
    roll: &Setup,
    fly: &Setup,
    opts: &RollingPowerOptions,
) -> Result<AdvantageGrid> {
    let slope_values = slopes.values();
    let crr_values = crrs.values();

    let flying = slope_values
        .par_iter()
        .map(|&theta| optimum_or_limit(Mode::Flying, theta, 0.0, fly, opts))
        .collect::<Result<Vec<_>>>()?;

    let index: Vec<(usize, usize)> = (0..slope_values.len())
        .flat_map(|i| (0..crr_values.len()).map(move |j| (i, j)))
        .collect();
    let cells = index
        .par_iter()
        .map(|&(i, j)| {
            let (slope, crr) = (slope_values[i], crr_values[j]);
            let (rolling_speed, rolling_range) = optimum_or_limit(Mode::Rolling, slope, crr, roll, opts)?;
            let (flying_speed, flying_range) = flying[i];
            Ok(AdvantageCell {
                slope,
                rolling_resistance: crr,
                rolling_speed,
                rolling_range,
                flying_speed,
                flying_range,
                delta_range: rolling_range - flying_range,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let crossover = crossover_points(&slope_values, &crr_values, &cells);
    Ok(AdvantageGrid {
        slopes: slope_values,
        rolling_resistances: crr_values,
        cells,
        crossover,
    })
}

fn crossover_points(slopes: &[f64], crrs: &[f64], cells: &[AdvantageCell]) -> Vec<(f64, f64)> {
    let n = crrs.len();
    let mut out = Vec::new();
    for (i, &theta) in slopes.iter().enumerate() {
        let column = &cells[i * n..(i + 1) * n];
        for j in 0..n.saturating_sub(1) {
            let (d0, d1) = (column[j].delta_range, column[j + 1].delta_range);
            if !(d0.is_finite() && d1.is_finite()) {
                continue;
            }
            if d0 == 0.0 {
                out.push((theta, crrs[j]));
            } else if d0.signum() != d1.signum() && d1 != 0.0 {
                let t = d0 / (d0 - d1);
                out.push((theta, crrs[j] + t * (crrs[j + 1] - crrs[j])));
            } else if d1 == 0.0 && j + 1 == n - 1 {
                out.push((theta, crrs[j + 1]));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(delta: f64) -> AdvantageCell {
        AdvantageCell {
            slope: 0.0,
            rolling_resistance: 0.0,
            rolling_speed: 0.0,
            rolling_range: 0.0,
            flying_speed: 0.0,
            flying_range: 0.0,
            delta_range: delta,
        }
    }

    #[test]
    fn axis_values() {
        assert_eq!(SweepAxis::new(1.0, 2.0, 1).values(), vec![1.0]);
        assert_eq!(SweepAxis::new(0.0, 1.0, 3).values(), vec![0.0, 0.5, 1.0]);
        assert!(SweepAxis::new(0.0, 1.0, 0).values().is_empty());
    }

    #[test]
    fn crossover_interpolates_columns() {
        let cells = vec![cell(3.0), cell(-1.0), cell(-2.0), cell(1.0), cell(1.0), cell(1.0)];
        let pts = crossover_points(&[0.1, 0.2], &[0.0, 0.4, 0.8], &cells);
        assert_eq!(pts.len(), 1);
        assert!((pts[0].0 - 0.1).abs() < 1e-15);
        assert!((pts[0].1 - 0.3).abs() < 1e-15);
    }

    #[test]
    fn single_cell_has_no_crossover() {
        assert!(crossover_points(&[0.0], &[0.01], &[cell(-5.0)]).is_empty());
    }
}
