use crate::control::pair_to_rotor_thrusts;
use crate::dynamics::{aerodynamic_area, revolution_mean_area};
use crate::error::Result;
use crate::params::Setup;
use crate::power::{pure_pitch_pairs, vehicle_power_flying, vehicle_power_rolling_phase_averaged, RollingPowerOptions};

use super::{range_from_power, Infeasibility, Mode, SteadyStateResult};

/// Upper bound on the flight tilt, rad.
pub const MAX_TILT: f64 = std::f64::consts::FRAC_PI_3;

const TILT_SCAN_STEPS: usize = 240;

/// Rolling at constant `speed` up a slope `slope` with resistance `crr`.
///
/// The shell turns continuously, so drag uses the area averaged over a
/// revolution. The required axle torque is
/// `tau = l (m g sin(theta) + D + C_rr m g cos(theta))`, the resistance term
/// only applying while moving, and each active rotor pair carries
/// `tau / (4 c)`.
pub fn rolling_steady_state(
    speed: f64,
    slope: f64,
    crr: f64,
    setup: &Setup,
    opts: &RollingPowerOptions,
) -> Result<SteadyStateResult> {
    let (p, env) = (&setup.vehicle, &setup.env);
    let weight = p.mass * env.gravity;
    let drag = 0.5 * env.drag_coefficient * env.air_density * revolution_mean_area(p) * speed * speed;
    let resistance = if speed > 0.0 { crr * weight * slope.cos() } else { 0.0 };
    let torque = p.shell_radius * (weight * slope.sin() + drag + resistance);
    let pair_force = torque / (4.0 * p.pair_arm());

    let infeasible = if weight * slope.cos() <= 0.0 {
        Some(Infeasibility::LostContact)
    } else if pair_force.abs() > p.max_rotor_thrust {
        Some(Infeasibility::RotorSaturation)
    } else {
        None
    };
    let power = vehicle_power_rolling_phase_averaged(speed, pair_force, slope, p, env, &setup.eff, opts)?;
    let rotor_thrusts = pair_to_rotor_thrusts(&pure_pitch_pairs(pair_force)).to_vec();
    Ok(SteadyStateResult {
        mode: Mode::Rolling,
        speed,
        slope,
        rolling_resistance: crr,
        tilt: 0.0,
        torque,
        thrust: 0.0,
        rotor_thrusts,
        power,
        range: range_from_power(speed, power, p.battery_energy),
        infeasible,
    })
}

/// Flying at constant `speed` along the ground track, climbing at
/// `speed sin(theta)` to hold height above the slope.
///
/// The thrust tilt `t` solves `sin(t) (W + D sin(theta)) = cos(t) D cos(theta)`
/// where `D` uses the base area at the flow angle `t + theta`. The rotors see
/// the freestream at `alpha = -(t + theta)`.
pub fn flying_steady_state(speed: f64, slope: f64, setup: &Setup) -> Result<SteadyStateResult> {
    let (p, env) = (&setup.vehicle, &setup.env);
    let weight = p.mass * env.gravity;
    let q = 0.5 * env.drag_coefficient * env.air_density * speed * speed;
    let drag_at = |t: f64| q * aerodynamic_area(t + slope, p);
    let residual = |t: f64| {
        let d = drag_at(t);
        t.sin() * (weight + d * slope.sin()) - t.cos() * d * slope.cos()
    };

    let tilt = first_root(residual, 0.0, MAX_TILT, TILT_SCAN_STEPS);
    let Some(tilt) = tilt else {
        return Ok(SteadyStateResult {
            mode: Mode::Flying,
            speed,
            slope,
            rolling_resistance: 0.0,
            tilt: f64::NAN,
            torque: 0.0,
            thrust: f64::NAN,
            rotor_thrusts: vec![f64::NAN; p.rotor_count],
            power: f64::NAN,
            range: f64::NAN,
            infeasible: Some(Infeasibility::TiltLimit),
        });
    };
    let d = drag_at(tilt);
    let thrust = (weight + d * slope.sin()).hypot(d * slope.cos());
    let per_rotor = thrust / p.rotor_count as f64;
    let rotor_thrusts = vec![per_rotor; p.rotor_count];
    let power = vehicle_power_flying(speed, -(tilt + slope), &rotor_thrusts, p, env, &setup.eff)?;
    Ok(SteadyStateResult {
        mode: Mode::Flying,
        speed,
        slope,
        rolling_resistance: 0.0,
        tilt,
        torque: 0.0,
        thrust,
        rotor_thrusts,
        power,
        range: range_from_power(speed, power, p.battery_energy),
        infeasible: (per_rotor > p.max_rotor_thrust).then_some(Infeasibility::RotorSaturation),
    })
}

pub fn steady_state(
    mode: Mode,
    speed: f64,
    slope: f64,
    crr: f64,
    setup: &Setup,
    opts: &RollingPowerOptions,
) -> Result<SteadyStateResult> {
    match mode {
        Mode::Rolling => rolling_steady_state(speed, slope, crr, setup, opts),
        Mode::Flying => flying_steady_state(speed, slope, setup),
    }
}

/// Smallest root of `f` on `[lo, hi]`: scan for the first sign change, then
/// bisect to machine precision.
fn first_root(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> Option<f64> {
    let mut a = lo;
    let mut fa = f(a);
    if fa == 0.0 {
        return Some(a);
    }
    for k in 1..=steps {
        let b = lo + (hi - lo) * k as f64 / steps as f64;
        let fb = f(b);
        if fb == 0.0 {
            return Some(b);
        }
        if fa.signum() != fb.signum() {
            let (mut x0, mut x1, mut f0) = (a, b, fa);
            while x1 - x0 > 4.0 * f64::EPSILON * x1.abs().max(1e-300) {
                let m = 0.5 * (x0 + x1);
                if m <= x0 || m >= x1 {
                    break;
                }
                let fm = f(m);
                if fm == 0.0 {
                    return Some(m);
                }
                if fm.signum() == f0.signum() {
                    x0 = m;
                    f0 = fm;
                } else {
                    x1 = m;
                }
            }
            return Some(0.5 * (x0 + x1));
        }
        a = b;
        fa = fb;
    }
    None
}
