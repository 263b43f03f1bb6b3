//! Newton-Euler equations of motion for the rolling docked pair and the
//! flying agent, with quadratic drag, rolling resistance and a no-slip
//! contact solve.
//!
//! Frames: inertial `I` with z up, gravity along `-z`; body `B` with the
//! thrust axis along `+z_B` and the cylinder axis along `y_B`. Rolling is
//! planar (motion in the x-z plane, rotation about y).

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{rotation_about_y, signum0, skew, Rotation, Vec3};
use crate::params::{Environment, VehicleParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidBodyState {
    /// CoM position in `I`, m.
    pub position: Vec3,
    /// CoM velocity in `I`, m/s.
    pub velocity: Vec3,
    /// `R_IB`.
    pub attitude: Rotation,
    /// Body rates in `B`, rad/s.
    pub body_rates: Vec3,
}

impl Default for RigidBodyState {
    fn default() -> Self {
        RigidBodyState {
            position: Vec3::zeros(),
            velocity: Vec3::zeros(),
            attitude: Rotation::identity(),
            body_rates: Vec3::zeros(),
        }
    }
}

impl RigidBodyState {
    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|x| x.is_finite())
            && self.velocity.iter().all(|x| x.is_finite())
            && self.body_rates.iter().all(|x| x.is_finite())
            && self.attitude.matrix().iter().all(|x| x.is_finite())
    }

    /// Translational plus rotational kinetic energy, J.
    pub fn kinetic_energy(&self, params: &VehicleParams) -> f64 {
        0.5 * params.mass * self.velocity.norm_squared()
            + 0.5 * self.body_rates.dot(&(params.inertia * self.body_rates))
    }

    /// `m g z`, J.
    pub fn potential_energy(&self, params: &VehicleParams, env: &Environment) -> f64 {
        params.mass * env.gravity * self.position.z
    }
}

/// Collective thrust along `+z_B` and body torque.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Wrench {
    /// N
    pub thrust: f64,
    /// N m, body frame.
    pub torque: Vec3,
}

impl Wrench {
    pub fn pure_torque(torque: Vec3) -> Self {
        Wrench { thrust: 0.0, torque }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactInfo {
    /// Unit terrain normal in `I`.
    pub normal: Vec3,
    /// Reaction force in `I`, N.
    pub reaction: Vec3,
    pub in_contact: bool,
}

impl ContactInfo {
    /// No contact (the flying case, `r = 0`).
    pub fn airborne(normal: Vec3) -> Self {
        ContactInfo {
            normal,
            reaction: Vec3::zeros(),
            in_contact: false,
        }
    }

    pub fn normal_load(&self) -> f64 {
        if self.in_contact {
            self.reaction.dot(&self.normal)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub velocity: Vec3,
    pub acceleration: Vec3,
    /// `dR_IB/dt = R_IB [omega]x`.
    pub attitude_rate: Matrix3<f64>,
    pub angular_acceleration: Vec3,
}

impl StateDerivative {
    pub fn is_finite(&self) -> bool {
        self.velocity
            .iter()
            .chain(self.acceleration.iter())
            .all(|x| x.is_finite())
            && self.angular_acceleration.iter().all(|x| x.is_finite())
            && self.attitude_rate.iter().all(|x| x.is_finite())
    }
}

/// Base area projected orthogonally to the velocity at pitch `alpha`:
/// `(h |cos a| + 2 l |sin a|) w`.
pub fn aerodynamic_area(alpha: f64, params: &VehicleParams) -> f64 {
    (params.rotor_height * alpha.cos().abs() + 2.0 * params.shell_radius * alpha.sin().abs()) * params.shell_width
}

/// Same area for an arbitrary attitude and unit flow direction `dir` (in `I`).
/// Reduces to [`aerodynamic_area`] with `alpha = pitch + path angle` for
/// planar motion.
pub fn projected_area(attitude: &Rotation, dir: &Vec3, params: &VehicleParams) -> f64 {
    params.shell_width
        * (params.rotor_height * attitude.body_x().dot(dir).abs()
            + 2.0 * params.shell_radius * attitude.body_z().dot(dir).abs())
}

/// Mean of [`aerodynamic_area`] over a full revolution, `(2/pi)(h + 2l) w`.
pub fn revolution_mean_area(params: &VehicleParams) -> f64 {
    std::f64::consts::FRAC_2_PI * (params.rotor_height + 2.0 * params.shell_radius) * params.shell_width
}

/// Quadratic drag `-1/2 C_d rho A(alpha) |v| v` for a body pitched by `pitch`.
pub fn drag_force(velocity: &Vec3, pitch: f64, params: &VehicleParams, env: &Environment) -> Vec3 {
    drag_force_for_attitude(velocity, &rotation_about_y(pitch), params, env)
}

pub fn drag_force_for_attitude(
    velocity: &Vec3,
    attitude: &Rotation,
    params: &VehicleParams,
    env: &Environment,
) -> Vec3 {
    let speed = velocity.norm();
    if speed == 0.0 {
        return Vec3::zeros();
    }
    let area = projected_area(attitude, &(velocity / speed), params);
    -0.5 * env.drag_coefficient * env.air_density * area * speed * velocity
}

/// Body-frame rolling-resistance torque `(0, -sgn(w_y) C_rr (r.n) l, 0)`.
///
/// Always opposes the rolling rate; zero at rest or without normal load.
pub fn rolling_resistance_torque(
    contact: &ContactInfo,
    body_rate_y: f64,
    params: &VehicleParams,
    env: &Environment,
) -> Vec3 {
    let load = contact.normal_load();
    Vec3::new(
        0.0,
        -signum0(body_rate_y) * env.rolling_resistance * load * params.shell_radius,
        0.0,
    )
}

/// Translational and angular accelerations for a given reaction force `r`.
fn accelerations(
    state: &RigidBodyState,
    wrench: &Wrench,
    params: &VehicleParams,
    env: &Environment,
    inertia_inv: &Matrix3<f64>,
    contact: &ContactInfo,
) -> (Vec3, Vec3) {
    let r = &state.attitude;
    let thrust = r.apply(&Vec3::new(0.0, 0.0, wrench.thrust));
    let weight = Vec3::new(0.0, 0.0, params.mass * env.gravity);
    let drag = drag_force_for_attitude(&state.velocity, r, params, env);
    let (reaction, contact_moment, rolling) = if contact.in_contact {
        (
            contact.reaction,
            -params.shell_radius * r.apply_inverse(&contact.normal.cross(&contact.reaction)),
            rolling_resistance_torque(contact, state.body_rates.y, params, env),
        )
    } else {
        (Vec3::zeros(), Vec3::zeros(), Vec3::zeros())
    };
    let accel = (thrust - weight + reaction + drag) / params.mass;

    let w = &state.body_rates;
    let gyro = w.cross(&(params.inertia * w));
    let alpha = inertia_inv * (wrench.torque - gyro + contact_moment + rolling);
    (accel, alpha)
}

/// Evaluates both equations of motion for an already-resolved contact.
/// With `contact.in_contact == false` this is the flying model.
pub fn newton_euler(
    state: &RigidBodyState,
    wrench: &Wrench,
    params: &VehicleParams,
    env: &Environment,
    contact: &ContactInfo,
) -> Result<StateDerivative> {
    let inv = params.inertia_inverse()?;
    let (acceleration, angular_acceleration) = accelerations(state, wrench, params, env, &inv, contact);
    Ok(StateDerivative {
        velocity: state.velocity,
        acceleration,
        attitude_rate: state.attitude.matrix() * skew(&state.body_rates),
        angular_acceleration,
    })
}

/// Tangent along which positive `w_y` rolls the cylinder: `y x n`.
pub fn rolling_tangent(normal: &Vec3) -> Vec3 {
    Vec3::y().cross(normal)
}

/// Solves for the reaction that enforces no penetration (`n . a = 0`) and
/// no slip (`t . a = l * dw_y/dt`) simultaneously with the equations of
/// motion. A negative normal component means the terrain would have to pull,
/// so the contact is released instead.
pub fn contact_reaction(
    state: &RigidBodyState,
    wrench: &Wrench,
    params: &VehicleParams,
    env: &Environment,
    normal: &Vec3,
) -> ContactInfo {
    let Ok(inv) = params.inertia_inverse() else {
        return ContactInfo::airborne(*normal);
    };
    let n = normal.normalize();
    let t = rolling_tangent(&n);
    let l = params.shell_radius;
    let residual = |r: Vec3| {
        let c = ContactInfo {
            normal: n,
            reaction: r,
            in_contact: true,
        };
        let (a, alpha_b) = accelerations(state, wrench, params, env, &inv, &c);
        let alpha_i = state.attitude.apply(&alpha_b);
        (n.dot(&a), t.dot(&a) - l * alpha_i.y)
    };
    // The constraint residuals are affine in (r_n, r_t).
    let c0 = residual(Vec3::zeros());
    let cn = residual(n);
    let ct = residual(t);
    let (a11, a12) = (cn.0 - c0.0, ct.0 - c0.0);
    let (a21, a22) = (cn.1 - c0.1, ct.1 - c0.1);
    let det = a11 * a22 - a12 * a21;
    let r_n = (-c0.0 * a22 + a12 * c0.1) / det;
    let r_t = (-a11 * c0.1 + a21 * c0.0) / det;
    if !(r_n >= 0.0) || !r_t.is_finite() {
        return ContactInfo::airborne(n);
    }
    ContactInfo {
        normal: n,
        reaction: r_n * n + r_t * t,
        in_contact: true,
    }
}

/// Rolling dynamics on the plane with normal `normal`; falls back to the
/// flying model when the solved contact lifts off.
pub fn rolling_derivatives_with_contact(
    state: &RigidBodyState,
    wrench: &Wrench,
    params: &VehicleParams,
    env: &Environment,
    normal: &Vec3,
) -> Result<(StateDerivative, ContactInfo)> {
    let contact = contact_reaction(state, wrench, params, env, normal);
    Ok((newton_euler(state, wrench, params, env, &contact)?, contact))
}

/// Rolling dynamics on the environment's planar slope.
pub fn rolling_derivatives(
    state: &RigidBodyState,
    wrench: &Wrench,
    params: &VehicleParams,
    env: &Environment,
) -> Result<StateDerivative> {
    rolling_derivatives_with_contact(state, wrench, params, env, &env.terrain_normal()).map(|(d, _)| d)
}

/// Flying agent: `r = 0`, no rolling resistance.
pub fn flying_derivatives(
    state: &RigidBodyState,
    wrench: &Wrench,
    params: &VehicleParams,
    env: &Environment,
) -> Result<StateDerivative> {
    newton_euler(state, wrench, params, env, &ContactInfo::airborne(env.terrain_normal()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Preset;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn roll() -> (VehicleParams, Environment) {
        let s = Preset::TitanTable1Roll.setup();
        (s.vehicle, s.env)
    }

    fn fly() -> (VehicleParams, Environment) {
        let s = Preset::TitanTable1Fly.setup();
        (s.vehicle, s.env)
    }

    fn resting(params: &VehicleParams) -> RigidBodyState {
        RigidBodyState {
            position: Vec3::new(0.0, 0.0, params.shell_radius),
            ..Default::default()
        }
    }

    #[test]
    fn area_examples() {
        let (p, _) = roll();
        assert_abs_diff_eq!(aerodynamic_area(0.0, &p), 0.064, epsilon = 1e-15);
        assert_abs_diff_eq!(aerodynamic_area(FRAC_PI_2, &p), 0.16, epsilon = 1e-15);
        assert_eq!(aerodynamic_area(FRAC_PI_4, &p), aerodynamic_area(-FRAC_PI_4, &p));
    }

    #[test]
    fn area_has_period_pi() {
        let (p, _) = roll();
        for k in 0..20 {
            let a = -3.0 + 0.3 * k as f64;
            assert_abs_diff_eq!(
                aerodynamic_area(a, &p),
                aerodynamic_area(a + std::f64::consts::PI, &p),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn projected_area_matches_pitch_plus_path_angle() {
        let (p, _) = fly();
        let (pitch, path): (f64, f64) = (0.3, 0.1);
        let dir = Vec3::new(path.cos(), 0.0, path.sin());
        assert_abs_diff_eq!(
            projected_area(&rotation_about_y(pitch), &dir, &p),
            aerodynamic_area(pitch + path, &p),
            epsilon = 1e-14
        );
    }

    #[test]
    fn revolution_mean_area_matches_quadrature() {
        let (p, _) = roll();
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|k| aerodynamic_area(2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n as f64, &p))
            .sum::<f64>()
            / n as f64;
        assert_abs_diff_eq!(mean, revolution_mean_area(&p), epsilon = 1e-9);
    }

    #[test]
    fn drag_examples() {
        let (p, env) = fly();
        assert_eq!(drag_force(&Vec3::zeros(), 0.0, &p, &env), Vec3::zeros());
        let d = drag_force(&Vec3::x(), 0.0, &p, &env);
        assert_abs_diff_eq!(d.norm(), 0.18144, epsilon = 1e-12);
        assert!(d.x < 0.0);
        let d2 = drag_force(&(2.0 * Vec3::x()), 0.0, &p, &env);
        assert_abs_diff_eq!(d2.norm(), 4.0 * d.norm(), epsilon = 1e-12);
    }

    #[test]
    fn rolling_resistance_examples() {
        let (p, env) = roll();
        let n = Vec3::z();
        let none = ContactInfo {
            normal: n,
            reaction: Vec3::zeros(),
            in_contact: true,
        };
        assert_eq!(rolling_resistance_torque(&none, 1.0, &p, &env), Vec3::zeros());

        let load = 1.6 * 1.352;
        let c = ContactInfo {
            normal: n,
            reaction: load * n,
            in_contact: true,
        };
        let tau = rolling_resistance_torque(&c, 0.7, &p, &env);
        assert_abs_diff_eq!(tau.y, -0.0043264, epsilon = 1e-15);
        assert_eq!((tau.x, tau.z), (0.0, 0.0));

        let env20 = env.with_terrain(0.0, 0.2);
        let tau20 = rolling_resistance_torque(&c, 0.7, &p, &env20);
        assert_abs_diff_eq!(tau20.y, 20.0 * tau.y, epsilon = 1e-15);
        // Opposes the direction of rolling.
        assert!(rolling_resistance_torque(&c, -0.7, &p, &env).y > 0.0);
    }

    #[test]
    fn static_contact_supports_weight() {
        let (p, env) = roll();
        let c = contact_reaction(&resting(&p), &Wrench::default(), &p, &env, &Vec3::z());
        assert!(c.in_contact);
        assert!((c.reaction - p.mass * env.gravity * Vec3::z()).norm() < 1e-12);
    }

    #[test]
    fn zero_gravity_zero_reaction() {
        let (p, mut env) = roll();
        env.gravity = 0.0;
        let c = contact_reaction(&resting(&p), &Wrench::default(), &p, &env, &Vec3::z());
        assert!(c.reaction.norm() < 1e-15);
    }

    #[test]
    fn thrust_above_weight_lifts_off() {
        let (p, env) = roll();
        let w = Wrench {
            thrust: 2.0 * p.mass * env.gravity,
            torque: Vec3::zeros(),
        };
        let c = contact_reaction(&resting(&p), &w, &p, &env, &Vec3::z());
        assert!(!c.in_contact);
        assert_eq!(c.reaction, Vec3::zeros());
    }

    /// Brute-force oracle: the no-slip cylinder as a stiff, critically damped
    /// penalty contact integrated at dt = 1e-6 s. Once the slip transient has
    /// died out the spring force equals the constrained tangential reaction.
    fn penalty_tangential_reaction(p: &VehicleParams, tau: f64) -> f64 {
        let (m, l, j) = (p.mass, p.shell_radius, p.inertia[(1, 1)]);
        let m_eff = 1.0 / (1.0 / m + l * l / j);
        let k = 1e6;
        let c = 2.0 * (k * m_eff).sqrt();
        let (mut x, mut v, mut th, mut w) = (0.0, 0.0, 0.0, 0.0);
        let dt = 1e-6;
        let mut f = 0.0;
        for _ in 0..20_000 {
            let slip = x - l * th;
            let slip_rate = v - l * w;
            f = -k * slip - c * slip_rate;
            v += f / m * dt;
            w += (tau - l * f) / j * dt;
            x += v * dt;
            th += w * dt;
        }
        f
    }

    #[test]
    fn pure_torque_tangential_reaction_matches_oracle() {
        let (p, mut env) = roll();
        env.rolling_resistance = 0.0;
        let tau = 0.1;
        let w = Wrench::pure_torque(Vec3::new(0.0, tau, 0.0));
        let c = contact_reaction(&resting(&p), &w, &p, &env, &Vec3::z());
        let j = p.inertia[(1, 1)];
        let (m, l) = (p.mass, p.shell_radius);
        let closed = tau * m * l / (j + m * l * l);
        assert_abs_diff_eq!(c.reaction.x, closed, epsilon = 1e-12);
        let oracle = penalty_tangential_reaction(&p, tau);
        assert!((oracle - closed).abs() / closed < 1e-3, "oracle {oracle} vs {closed}");
    }

    #[test]
    fn rolling_rest_is_equilibrium() {
        let (p, env) = roll();
        let d = rolling_derivatives(&resting(&p), &Wrench::default(), &p, &env).unwrap();
        assert!(d.acceleration.norm() < 1e-15);
        assert!(d.angular_acceleration.norm() < 1e-15);
        assert_eq!(d.velocity, Vec3::zeros());
    }

    #[test]
    fn rolling_torque_closed_form() {
        let (p, mut env) = roll();
        env.rolling_resistance = 0.0;
        let w = Wrench::pure_torque(Vec3::new(0.0, 0.1, 0.0));
        let d = rolling_derivatives(&resting(&p), &w, &p, &env).unwrap();
        let wdot = 0.1 / (p.inertia[(1, 1)] + p.mass * p.shell_radius.powi(2));
        assert_abs_diff_eq!(d.angular_acceleration.y, wdot, epsilon = 1e-12);
        assert_abs_diff_eq!(d.acceleration.x, p.shell_radius * wdot, epsilon = 1e-12);
        assert_abs_diff_eq!(d.acceleration.z, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn hover_and_free_fall() {
        let (p, env) = fly();
        let hover = Wrench {
            thrust: p.mass * env.gravity,
            torque: Vec3::zeros(),
        };
        let d = flying_derivatives(&RigidBodyState::default(), &hover, &p, &env).unwrap();
        assert!(d.acceleration.norm() < 1e-15);

        let fall = flying_derivatives(&RigidBodyState::default(), &Wrench::default(), &p, &env).unwrap();
        assert_abs_diff_eq!(fall.acceleration.z, -env.gravity, epsilon = 1e-15);

        let moving = RigidBodyState {
            velocity: Vec3::new(1.0, 0.0, 0.0),
            ..Default::default()
        };
        let fall = flying_derivatives(&moving, &Wrench::default(), &p, &env).unwrap();
        let drag = drag_force(&moving.velocity, 0.0, &p, &env) / p.mass;
        assert!((fall.acceleration - (drag - env.gravity * Vec3::z())).norm() < 1e-15);

        let double = Wrench {
            thrust: 2.0 * p.mass * env.gravity,
            torque: Vec3::zeros(),
        };
        let up = flying_derivatives(&RigidBodyState::default(), &double, &p, &env).unwrap();
        assert_abs_diff_eq!(up.acceleration.z, env.gravity, epsilon = 1e-15);
    }

    #[test]
    fn liftoff_matches_flying_exactly() {
        let (p, env) = roll();
        let s = RigidBodyState {
            position: Vec3::new(0.0, 0.0, p.shell_radius),
            velocity: Vec3::new(0.3, 0.0, 0.0),
            attitude: rotation_about_y(0.4),
            body_rates: Vec3::new(0.0, 1.5, 0.0),
        };
        let w = Wrench {
            thrust: 3.0 * p.mass * env.gravity,
            torque: Vec3::new(0.0, 0.05, 0.0),
        };
        let (d, c) = rolling_derivatives_with_contact(&s, &w, &p, &env, &Vec3::z()).unwrap();
        assert!(!c.in_contact);
        assert_eq!(d, flying_derivatives(&s, &w, &p, &env).unwrap());
    }

    fn arb_state() -> impl Strategy<Value = (RigidBodyState, Wrench)> {
        (
            -2.0f64..2.0,
            -1.0f64..1.0,
            -3.0f64..3.0,
            -2.0f64..2.0,
            -3.0f64..3.0,
            -0.3f64..0.3,
        )
            .prop_map(|(vx, vz, pitch, wy, f, ty)| {
                (
                    RigidBodyState {
                        position: Vec3::new(0.0, 0.0, 0.2),
                        velocity: Vec3::new(vx, 0.0, vz),
                        attitude: rotation_about_y(pitch),
                        body_rates: Vec3::new(0.0, wy, 0.0),
                    },
                    Wrench {
                        thrust: f,
                        torque: Vec3::new(0.0, ty, 0.0),
                    },
                )
            })
    }

    proptest! {
        #[test]
        fn forced_zero_reaction_reduces_to_flying((s, w) in arb_state(), slope in -0.5f64..0.5) {
            let (p, env) = roll();
            let env = env.with_terrain(slope, 0.1);
            let forced = ContactInfo { normal: env.terrain_normal(), reaction: Vec3::zeros(), in_contact: true };
            let a = newton_euler(&s, &w, &p, &env, &forced).unwrap();
            let b = flying_derivatives(&s, &w, &p, &env).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn no_slip_and_unilateral_contact((s, w) in arb_state(), slope in -0.5f64..0.5, crr in 0.0f64..0.3) {
            let (p, env) = roll();
            let env = env.with_terrain(slope, crr);
            let n = env.terrain_normal();
            let (d, c) = rolling_derivatives_with_contact(&s, &w, &p, &env, &n).unwrap();
            if c.in_contact {
                prop_assert!(c.reaction.dot(&n) >= 0.0);
                let t = rolling_tangent(&n);
                let alpha_i = s.attitude.apply(&d.angular_acceleration);
                prop_assert!((t.dot(&d.acceleration) - p.shell_radius * alpha_i.y).abs() < 1e-8);
                prop_assert!(n.dot(&d.acceleration).abs() < 1e-8);
            }
            prop_assert!((c.normal.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn drag_never_adds_energy(v in proptest::array::uniform3(-20.0f64..20.0), pitch in -4.0f64..4.0) {
            let (p, env) = fly();
            let v = Vec3::from(v);
            prop_assert!(drag_force(&v, pitch, &p, &env).dot(&v) <= 0.0);
        }
    }
}
