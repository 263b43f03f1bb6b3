use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Setup;
use crate::power::RollingPowerOptions;

use super::{steady_state, Mode, SteadyStateResult};

pub const SEARCH_GRID_POINTS: usize = 200;
/// m/s
pub const SEARCH_MIN_SPEED: f64 = 0.01;
/// m/s
pub const SEARCH_MAX_SPEED: f64 = 20.0;
/// Final bracket width of the golden-section refinement, m/s.
pub const SEARCH_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalVelocity {
    pub mode: Mode,
    /// rad
    pub slope: f64,
    pub rolling_resistance: f64,
    /// v*, m/s
    pub speed: f64,
    /// R*, m
    pub range: f64,
    /// Power at v*, W.
    pub power: f64,
    /// Best point of the coarse grid, m/s and m.
    pub grid_speed: f64,
    pub grid_range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeCurve {
    pub mode: Mode,
    pub slope: f64,
    pub rolling_resistance: f64,
    pub samples: Vec<SteadyStateResult>,
    /// `None` when no speed is feasible.
    pub optimum: Option<OptimalVelocity>,
}

/// `n` points spaced evenly in `ln v` over `[lo, hi]`, both ends included.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|k| {
                    if k == 0 {
                        lo
                    } else if k == n - 1 {
                        hi
                    } else {
                        (a + (b - a) * k as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
/// Returns the abscissa once the bracket is narrower than `tol`.
pub fn golden_section_max(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn usable(r: &SteadyStateResult) -> f64 {
    r.usable_range().unwrap_or(f64::NEG_INFINITY)
}

/// Range-maximizing speed: a log-spaced coarse grid over
/// [`SEARCH_MIN_SPEED`, `SEARCH_MAX_SPEED`], then golden-section refinement
/// around the best grid point. The refined point is kept only if it beats
/// the grid.
pub fn optimal_velocity(
    mode: Mode,
    slope: f64,
    crr: f64,
    setup: &Setup,
    opts: &RollingPowerOptions,
) -> Result<OptimalVelocity> {
    let grid = log_spaced(SEARCH_MIN_SPEED, SEARCH_MAX_SPEED, SEARCH_GRID_POINTS);
    let mut best: Option<(usize, SteadyStateResult)> = None;
    for (i, &v) in grid.iter().enumerate() {
        let r = steady_state(mode, v, slope, crr, setup, opts)?;
        let range = usable(&r);
        if range == f64::INFINITY {
            return Err(Error::UnboundedRange { speed: v });
        }
        if range > best.as_ref().map_or(f64::NEG_INFINITY, |(_, b)| usable(b)) {
            best = Some((i, r));
        }
    }
    let (i, coarse) = best.ok_or(Error::NoFeasibleVelocity)?;

    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(grid.len() - 1)];
    let mut failure = None;
    let v = golden_section_max(
        |v| match steady_state(mode, v, slope, crr, setup, opts) {
            Ok(r) => usable(&r),
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        lo,
        hi,
        SEARCH_TOLERANCE,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let refined = steady_state(mode, v, slope, crr, setup, opts)?;
    let winner = if usable(&refined) >= usable(&coarse) {
        &refined
    } else {
        &coarse
    };
    if winner.range.is_infinite() {
        return Err(Error::UnboundedRange { speed: winner.speed });
    }
    Ok(OptimalVelocity {
        mode,
        slope,
        rolling_resistance: crr,
        speed: winner.speed,
        range: winner.range,
        power: winner.power,
        grid_speed: coarse.speed,
        grid_range: coarse.range,
    })
}

/// Steady states over a speed grid plus the optimum. The optimum is at least
/// as good as every feasible sample.
pub fn range_curve(
    mode: Mode,
    slope: f64,
    crr: f64,
    speeds: &[f64],
    setup: &Setup,
    opts: &RollingPowerOptions,
) -> Result<RangeCurve> {
    if speeds.is_empty() {
        return Err(Error::Config("speed grid is empty".into()));
    }
    if let Some(v) = speeds.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Config(format!("speed grid must be positive, got {v}")));
    }
    let samples = speeds
        .iter()
        .map(|&v| steady_state(mode, v, slope, crr, setup, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut optimum = match optimal_velocity(mode, slope, crr, setup, opts) {
        Ok(o) => Some(o),
        Err(Error::NoFeasibleVelocity) => None,
        Err(e) => return Err(e),
    };
    let best_sample = samples
        .iter()
        .filter(|s| s.usable_range().is_some())
        .max_by(|a, b| a.range.total_cmp(&b.range));
    if let Some(s) = best_sample {
        let beaten = optimum.as_ref().is_none_or(|o| s.range > o.range);
        if beaten {
            let (grid_speed, grid_range) = optimum
                .as_ref()
                .map_or((s.speed, s.range), |o| (o.grid_speed, o.grid_range));
            optimum = Some(OptimalVelocity {
                mode,
                slope,
                rolling_resistance: crr,
                speed: s.speed,
                range: s.range,
                power: s.power,
                grid_speed,
                grid_range,
            });
        }
    }
    Ok(RangeCurve {
        mode,
        slope,
        rolling_resistance: crr,
        samples,
        optimum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Preset;

    #[test]
    fn log_grid_endpoints() {
        let g = log_spaced(0.01, 20.0, 200);
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 0.01);
        assert_eq!(g[199], 20.0);
        let ratio = g[1] / g[0];
        assert!((g[100] / g[99] - ratio).abs() < 1e-12);
    }

    #[test]
    fn golden_section_on_parabola() {
        let x = golden_section_max(|x| -(x - 0.37).powi(2), 0.0, 1.0, 1e-8);
        assert!((x - 0.37).abs() < 1e-8);
    }

    #[test]
    fn refinement_never_loses_to_grid() {
        let opts = RollingPowerOptions::default();
        for (mode, setup) in [
            (Mode::Rolling, Preset::TitanTable1Roll.setup()),
            (Mode::Flying, Preset::TitanTable1Fly.setup()),
        ] {
            let o = optimal_velocity(mode, 0.0, 0.01, &setup, &opts).unwrap();
            assert!(o.range >= o.grid_range);
            assert!(o.speed > SEARCH_MIN_SPEED && o.speed < SEARCH_MAX_SPEED);
        }
    }

    #[test]
    fn bad_grids_rejected() {
        let s = Preset::TitanTable1Fly.setup();
        let opts = RollingPowerOptions::default();
        assert!(range_curve(Mode::Flying, 0.0, 0.01, &[], &s, &opts).is_err());
        assert!(range_curve(Mode::Flying, 0.0, 0.01, &[1.0, -1.0], &s, &opts).is_err());
    }
}
