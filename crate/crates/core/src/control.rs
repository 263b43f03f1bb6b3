//! Body-rate PI control, pair-force allocation, rotor speed mapping, and a
//! minimal cascaded velocity/attitude loop for flight.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::dynamics::{drag_force_for_attitude, RigidBodyState, Wrench};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::params::{Environment, VehicleParams};

/// PI body-rate controller. Gains are diagonal; the integral accumulator is
/// clamped componentwise to `integral_limit` (rad).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateControllerState {
    /// N m s/rad
    pub kp: Vec3,
    /// N m/rad
    pub ki: Vec3,
    /// rad
    pub integral_limit: Vec3,
    /// Integral of the rate error, rad.
    #[serde(default = "Vec3::zeros")]
    pub accumulator: Vec3,
    #[serde(skip)]
    pub last_error: Option<Vec3>,
}

impl Default for RateControllerState {
    fn default() -> Self {
        Self::new(0.05, 0.02, 0.5)
    }
}

impl RateControllerState {
    pub fn new(kp: f64, ki: f64, integral_limit: f64) -> Self {
        RateControllerState {
            kp: Vec3::repeat(kp),
            ki: Vec3::repeat(ki),
            integral_limit: Vec3::repeat(integral_limit),
            accumulator: Vec3::zeros(),
            last_error: None,
        }
    }

    pub fn reset(&mut self) {
        self.accumulator = Vec3::zeros();
        self.last_error = None;
    }
}

/// `tau = Kp e + Ki int(e)` with trapezoidal accumulation and a pure-torque
/// output (`f_cmd = 0`).
pub fn pi_rate_control(
    desired: &Vec3,
    measured: &Vec3,
    ctl: RateControllerState,
    dt: f64,
) -> (Wrench, RateControllerState) {
    let mut next = ctl;
    let e = desired - measured;
    let prev = ctl.last_error.unwrap_or(e);
    let raw = ctl.accumulator + 0.5 * (prev + e) * dt;
    next.accumulator = raw.zip_map(&ctl.integral_limit, |a, lim| a.clamp(-lim.abs(), lim.abs()));
    next.last_error = Some(e);
    let torque = ctl.kp.component_mul(&e) + ctl.ki.component_mul(&next.accumulator);
    (Wrench::pure_torque(torque), next)
}

/// Signed forces of the opposite-rotor pairs A..D: `f_A = f_1 - f_5`, etc.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PairForces(pub [f64; 4]);

impl PairForces {
    pub fn as_vector(&self) -> Vector4<f64> {
        Vector4::from(self.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, f| m.max(f.abs()))
    }
}

/// Rotor speeds `n_1..n_8`, rad/s. A single agent uses only the first four.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RotorSpeeds(pub [f64; 8]);

impl RotorSpeeds {
    pub fn thrusts(&self, thrust_constant: f64) -> [f64; 8] {
        self.0.map(|n| thrust_constant * n * n)
    }

    /// Zeroes rotors the vehicle does not have.
    pub fn restrict_to(mut self, rotor_count: usize) -> Self {
        for n in self.0.iter_mut().skip(rotor_count) {
            *n = 0.0;
        }
        self
    }
}

/// `M` mapping pair forces to `(f_cmd, tau_x, tau_y, tau_z)`.
pub fn allocation_matrix(params: &VehicleParams) -> Matrix4<f64> {
    let c = params.pair_arm();
    let k = params.torque_constant;
    Matrix4::new(
        1.0, 1.0, 1.0, 1.0, //
        -c, c, c, -c, //
        -c, -c, c, c, //
        -k, k, -k, k,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub pairs: PairForces,
    /// True when the raw solution exceeded the rotor limits (or asked a
    /// single agent for negative thrust) and was scaled or clipped.
    pub saturated: bool,
    /// Uniform scale applied to the raw solution (1 when unsaturated).
    pub scale: f64,
}

/// Inverts `M` to find pair forces for a wrench. Saturation scales the whole
/// pair vector uniformly, preserving the torque direction.
pub fn allocate(wrench: &Wrench, params: &VehicleParams) -> Result<Allocation> {
    let m = allocation_matrix(params);
    let inv = m.try_inverse().ok_or(Error::SingularAllocation)?;
    let target = Vector4::new(wrench.thrust, wrench.torque.x, wrench.torque.y, wrench.torque.z);
    let raw = inv * target;
    let mut pairs = PairForces([raw[0], raw[1], raw[2], raw[3]]);
    let mut saturated = false;
    let mut scale = 1.0;
    if params.rotor_count == 4 && pairs.0.iter().any(|&f| f < 0.0) {
        for f in pairs.0.iter_mut() {
            *f = f.max(0.0);
        }
        saturated = true;
    }
    let peak = pairs.max_abs();
    if peak > params.max_rotor_thrust {
        scale = params.max_rotor_thrust / peak;
        for f in pairs.0.iter_mut() {
            *f *= scale;
        }
        saturated = true;
    }
    Ok(Allocation {
        pairs,
        saturated,
        scale,
    })
}

/// Positive pair force spins the first rotor of the pair, negative the
/// opposite one, at `sqrt(|f| / k_t)`.
pub fn pair_to_speeds(pairs: &PairForces, thrust_constant: f64) -> RotorSpeeds {
    let mut n = [0.0; 8];
    for (i, &f) in pairs.0.iter().enumerate() {
        if f >= 0.0 {
            n[i] = (f / thrust_constant).sqrt();
        } else {
            n[i + 4] = (-f / thrust_constant).sqrt();
        }
    }
    RotorSpeeds(n)
}

/// Per-rotor thrust magnitudes implied by the pair forces.
pub fn pair_to_rotor_thrusts(pairs: &PairForces) -> [f64; 8] {
    let mut t = [0.0; 8];
    for (i, &f) in pairs.0.iter().enumerate() {
        if f >= 0.0 {
            t[i] = f;
        } else {
            t[i + 4] = -f;
        }
    }
    t
}

/// Wrench produced by the given rotor thrusts.
pub fn wrench_from_thrusts(thrusts: &[f64; 8], params: &VehicleParams) -> Wrench {
    let pairs = Vector4::from_fn(|i, _| thrusts[i] - thrusts[i + 4]);
    let w = allocation_matrix(params) * pairs;
    Wrench {
        thrust: w[0],
        torque: Vec3::new(w[1], w[2], w[3]),
    }
}

/// Gains of the minimal flight loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlightGains {
    /// Velocity P gain, 1/s.
    pub velocity_p: f64,
    /// Velocity I gain, 1/s^2.
    pub velocity_i: f64,
    /// Height-hold gain, 1/s.
    pub height_p: f64,
    /// Attitude P gain, 1/s.
    pub attitude_p: f64,
    /// Rate P gain, 1/s.
    pub rate_p: f64,
    /// rad
    pub max_tilt: f64,
}

impl Default for FlightGains {
    fn default() -> Self {
        FlightGains {
            velocity_p: 1.0,
            velocity_i: 0.2,
            height_p: 0.5,
            attitude_p: 4.0,
            rate_p: 20.0,
            max_tilt: 60f64.to_radians(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlightSetpoint {
    /// Speed along the ground track, m/s.
    pub speed: f64,
    /// Height above the terrain, m.
    pub height: f64,
}

/// Terrain directly below the vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroundReference {
    pub height: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FlightControllerState {
    pub gains: FlightGains,
    #[serde(default = "Vec3::zeros")]
    pub velocity_integral: Vec3,
}

/// Cascaded velocity -> tilt -> rate -> torque loop with drag feedforward.
///
/// At steady level flight the commanded force is `m g z - drag`, so the tilt
/// settles at `tan(a) = drag / (m g)` and thrust at `sqrt((m g)^2 + drag^2)`.
pub fn flight_velocity_control(
    setpoint: &FlightSetpoint,
    ground: &GroundReference,
    state: &RigidBodyState,
    ctl: FlightControllerState,
    params: &VehicleParams,
    env: &Environment,
    dt: f64,
) -> Result<(Wrench, FlightControllerState)> {
    let g = &ctl.gains;
    let path = Vec3::new(ground.slope.cos(), 0.0, ground.slope.sin());
    let height_error = setpoint.height - (state.position.z - ground.height);
    let v_ref = setpoint.speed * path + g.height_p * height_error * Vec3::z();
    let mut e = v_ref - state.velocity;
    e.y = 0.0;
    let mut next = ctl;
    next.velocity_integral += e * dt;
    let accel = g.velocity_p * e + g.velocity_i * next.velocity_integral;

    let drag = drag_force_for_attitude(&state.velocity, &state.attitude, params, env);
    let force = params.mass * (accel + env.gravity * Vec3::z()) - drag;
    let tilt = force.x.atan2(force.z);
    if tilt.abs() > g.max_tilt {
        return Err(Error::TiltLimit {
            tilt_deg: tilt.to_degrees(),
            limit_deg: g.max_tilt.to_degrees(),
        });
    }
    let thrust = force.dot(&state.attitude.body_z()).max(0.0);

    let pitch_error = tilt - state.attitude.pitch();
    let rate_ref = Vec3::new(0.0, g.attitude_p * pitch_error, 0.0);
    let w = state.body_rates;
    let torque = params.inertia * (g.rate_p * (rate_ref - w)) + w.cross(&(params.inertia * w));
    Ok((Wrench { thrust, torque }, next))
}
