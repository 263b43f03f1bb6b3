//! Rotor aerodynamic power from momentum theory and electrical power through
//! the efficiency chain.
//!
//! Angle-of-attack convention: `alpha > 0` when the rotor moves against its
//! own thrust axis (descent-like), so the freestream term `-v sin(alpha)` of
//! the power law lowers power. A disk tilted forward into the flow, as in
//! cruise, has `alpha < 0` and pays the parasite power `T V sin|alpha|`.
//! The induced-velocity relation uses the same inflow term,
//! `nu_i = nu_h^2 / sqrt((V cos a)^2 + (nu_i - V sin a)^2)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::control::{pair_to_rotor_thrusts, PairForces};
use crate::error::{Error, Result};
use crate::geometry::{rotation_about_y, Rotation, Vec3};
use crate::params::{EfficiencyChain, Environment, VehicleParams};

const MAX_ITERATIONS: usize = 200;
const FIXED_POINT_TOL: f64 = 1e-13;
/// Acceptance bound on `|nu_i - rhs(nu_i)|`.
pub const GLAUERT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotorOperatingPoint {
    /// N
    pub thrust: f64,
    /// m/s
    pub freestream_speed: f64,
    /// rad
    pub angle_of_attack: f64,
    /// m/s
    pub induced_velocity: f64,
}

impl RotorOperatingPoint {
    pub fn solve(thrust: f64, freestream: f64, alpha: f64, density: f64, disk_radius: f64) -> Result<Self> {
        Ok(RotorOperatingPoint {
            thrust,
            freestream_speed: freestream,
            angle_of_attack: alpha,
            induced_velocity: induced_velocity(thrust, freestream, alpha, density, disk_radius)?,
        })
    }
}

/// `nu_h = sqrt(f / (2 rho pi r^2))`.
pub fn hover_induced_velocity(thrust: f64, density: f64, disk_radius: f64) -> f64 {
    if thrust <= 0.0 {
        return 0.0;
    }
    (thrust / (2.0 * density * PI * disk_radius * disk_radius)).sqrt()
}

fn glauert_rhs(nu_i: f64, nu_h: f64, freestream: f64, alpha: f64) -> f64 {
    let (s, c) = alpha.sin_cos();
    let axial = nu_i - freestream * s;
    let edge = freestream * c;
    nu_h * nu_h / (edge * edge + axial * axial).sqrt()
}

/// `nu_i - rhs(nu_i)` of the momentum-theory relation.
pub fn glauert_residual(nu_i: f64, thrust: f64, freestream: f64, alpha: f64, density: f64, disk_radius: f64) -> f64 {
    let nu_h = hover_induced_velocity(thrust, density, disk_radius);
    if nu_h == 0.0 {
        return nu_i;
    }
    nu_i - glauert_rhs(nu_i, nu_h, freestream, alpha)
}

/// Solves the forward-flight induced-velocity relation.
///
/// Damped fixed-point iteration (factor 0.5) from `nu_h`, falling back to
/// bisection on `nu_i * sqrt(..) - nu_h^2` when the iteration stalls. In deep
/// descent the relation can have several roots; bisection returns one of them.
pub fn induced_velocity(thrust: f64, freestream: f64, alpha: f64, density: f64, disk_radius: f64) -> Result<f64> {
    let nu_h = hover_induced_velocity(thrust, density, disk_radius);
    if nu_h == 0.0 {
        return Ok(0.0);
    }
    let fail = || Error::InducedVelocity {
        thrust,
        freestream,
        alpha,
    };
    if !(freestream.is_finite() && alpha.is_finite()) {
        return Err(fail());
    }

    let mut x = nu_h;
    for _ in 0..MAX_ITERATIONS {
        let g = glauert_rhs(x, nu_h, freestream, alpha);
        if !g.is_finite() {
            break;
        }
        if (x - g).abs() <= FIXED_POINT_TOL * nu_h.max(1.0) {
            return Ok(g);
        }
        x = 0.5 * x + 0.5 * g;
    }

    let (s, c) = alpha.sin_cos();
    let f = |x: f64| {
        let axial = x - freestream * s;
        let edge = freestream * c;
        x * (edge * edge + axial * axial).sqrt() - nu_h * nu_h
    };
    let (mut lo, mut hi) = (0.0, nu_h + freestream.abs() + 1.0);
    for _ in 0..MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let root = 0.5 * (lo + hi);
    let residual = root - glauert_rhs(root, nu_h, freestream, alpha);
    if residual.abs() < GLAUERT_TOLERANCE {
        Ok(root)
    } else {
        Err(fail())
    }
}

/// Electrical power of one rotor, `f (nu_i - V sin a) / (eta_p eta_m eta_c)`,
/// clamped at zero (no regeneration).
pub fn rotor_power(op: &RotorOperatingPoint, eff: &EfficiencyChain) -> f64 {
    let aero = op.thrust * (op.induced_velocity - op.freestream_speed * op.angle_of_attack.sin());
    (aero / eff.product()).max(0.0)
}

fn single_rotor_power(
    thrust: f64,
    speed: f64,
    alpha: f64,
    params: &VehicleParams,
    env: &Environment,
    eff: &EfficiencyChain,
) -> Result<f64> {
    if thrust <= 0.0 {
        return Ok(0.0);
    }
    let op = RotorOperatingPoint::solve(thrust, speed, alpha, env.air_density, params.disk_radius)?;
    Ok(rotor_power(&op, eff))
}

/// Total power when every rotor sees freestream `speed` at the shared `alpha`.
pub fn vehicle_power_flying(
    speed: f64,
    alpha: f64,
    thrusts: &[f64],
    params: &VehicleParams,
    env: &Environment,
    eff: &EfficiencyChain,
) -> Result<f64> {
    thrusts
        .iter()
        .map(|&f| single_rotor_power(f, speed, alpha, params, env, eff))
        .sum()
}

/// Local airflow seen by one rotor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorFlow {
    pub speed: f64,
    pub alpha: f64,
}

/// Airflow for a rotor at body position `position` thrusting along
/// `axis_sign * z_B`: speed `|v + R (w x p)|`, `sin a = -(u . n) / |u|`.
pub fn rotor_airflow(
    velocity: &Vec3,
    attitude: &Rotation,
    body_rates: &Vec3,
    position: &Vec3,
    axis_sign: f64,
) -> RotorFlow {
    let u = velocity + attitude.apply(&body_rates.cross(position));
    let speed = u.norm();
    if speed == 0.0 {
        return RotorFlow { speed: 0.0, alpha: 0.0 };
    }
    let n = axis_sign * attitude.body_z();
    let sin_a = (-u.dot(&n) / speed).clamp(-1.0, 1.0);
    RotorFlow {
        speed,
        alpha: sin_a.asin(),
    }
}

/// How rotor airspeed is modelled while rolling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RollingAirflow {
    /// Each rotor sees `v + w x p_i`.
    #[default]
    PerRotor,
    /// Every rotor sees only the vehicle velocity.
    Uniform,
}

/// Sum of rotor powers for an arbitrary rigid-body state and per-rotor thrusts.
pub fn rotor_set_power(
    velocity: &Vec3,
    attitude: &Rotation,
    body_rates: &Vec3,
    thrusts: &[f64],
    params: &VehicleParams,
    env: &Environment,
    eff: &EfficiencyChain,
    airflow: RollingAirflow,
) -> Result<f64> {
    let positions = params.rotor_positions();
    let rates = match airflow {
        RollingAirflow::PerRotor => *body_rates,
        RollingAirflow::Uniform => Vec3::zeros(),
    };
    let mut total = 0.0;
    for (i, (&f, p)) in thrusts.iter().zip(positions.iter()).enumerate() {
        if f <= 0.0 {
            continue;
        }
        let flow = rotor_airflow(velocity, attitude, &rates, p, VehicleParams::rotor_axis_sign(i));
        total += single_rotor_power(f, flow.speed, flow.alpha, params, env, eff)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RollingPowerOptions {
    /// Equally spaced roll phases per revolution.
    pub samples: usize,
    pub airflow: RollingAirflow,
}

impl Default for RollingPowerOptions {
    fn default() -> Self {
        RollingPowerOptions {
            samples: 72,
            airflow: RollingAirflow::PerRotor,
        }
    }
}

/// Pair forces for a pure pitch torque whose per-pair magnitude is
/// `|pair_force|`; positive drives forward (`tau_y > 0`).
pub fn pure_pitch_pairs(pair_force: f64) -> PairForces {
    PairForces([-pair_force, -pair_force, pair_force, pair_force])
}

/// Rolling power averaged over one shell revolution.
///
/// The pair rolls without slipping at `speed` along a slope `slope`
/// (`w_y = v / l`) while the four active rotors hold the pure torque set by
/// `pair_force`. Power is evaluated at `samples` equally spaced roll phases,
/// each rotor with its own airspeed and angle of attack.
pub fn vehicle_power_rolling_phase_averaged(
    speed: f64,
    pair_force: f64,
    slope: f64,
    params: &VehicleParams,
    env: &Environment,
    eff: &EfficiencyChain,
    opts: &RollingPowerOptions,
) -> Result<f64> {
    if params.rotor_count != 8 {
        return Err(Error::RollingNeedsPair);
    }
    if pair_force == 0.0 {
        return Ok(0.0);
    }
    let thrusts = pair_to_rotor_thrusts(&pure_pitch_pairs(pair_force));
    let velocity = speed * Vec3::new(slope.cos(), 0.0, slope.sin());
    let rates = Vec3::new(0.0, speed / params.shell_radius, 0.0);
    let n = opts.samples.max(1);
    let mut total = 0.0;
    for k in 0..n {
        let phase = 2.0 * PI * k as f64 / n as f64;
        total += rotor_set_power(
            &velocity,
            &rotation_about_y(phase),
            &rates,
            &thrusts,
            params,
            env,
            eff,
            opts.airflow,
        )?;
    }
    Ok(total / n as f64)
}
