//! One integration step of the hybrid rigid-body model.
//!
//! In rolling mode the contact is resolved at every derivative evaluation
//! on the local terrain plane under the CoM. After each step the state is
//! projected back onto the contact manifold (zero gap, zero normal velocity,
//! no slip with the angular momentum about the contact point conserved);
//! the energy removed or added by that projection is reported separately so
//! the energy audit can close.

use serde::{Deserialize, Serialize};

use crate::control::{wrench_from_thrusts, RotorSpeeds};
use crate::dynamics::{
    contact_reaction, drag_force_for_attitude, newton_euler, rolling_resistance_torque, rolling_tangent, ContactInfo,
    RigidBodyState, StateDerivative, Wrench,
};
use crate::error::{Error, Result};
use crate::geometry::{Rotation, Vec3};
use crate::params::{Environment, VehicleParams};

use super::terrain::{Terrain, TerrainSample};

/// Contact gap below which a rolling vehicle counts as touching, m.
pub const CONTACT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Rk4,
    SemiImplicitEuler,
}

/// Whether the terrain can push on the vehicle during the step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactMode {
    Rolling,
    Free,
}

/// Work done on the vehicle over a step, J.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepWork {
    pub drag: f64,
    pub rolling_resistance: f64,
    /// Rotor thrust and torque.
    pub actuator: f64,
    /// Reaction force; zero up to integration error while rolling without slip.
    pub contact: f64,
    /// Mechanical-energy change caused by the post-step projection (impacts,
    /// constraint drift, terrain kinks).
    pub constraint: f64,
}

impl StepWork {
    fn scaled(&self, k: f64) -> StepWork {
        StepWork {
            drag: self.drag * k,
            rolling_resistance: self.rolling_resistance * k,
            actuator: self.actuator * k,
            contact: self.contact * k,
            constraint: self.constraint * k,
        }
    }

    fn add(&self, o: &StepWork) -> StepWork {
        StepWork {
            drag: self.drag + o.drag,
            rolling_resistance: self.rolling_resistance + o.rolling_resistance,
            actuator: self.actuator + o.actuator,
            contact: self.contact + o.contact,
            constraint: self.constraint + o.constraint,
        }
    }

    pub fn total(&self) -> f64 {
        self.drag + self.rolling_resistance + self.actuator + self.contact + self.constraint
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub state: RigidBodyState,
    pub work: StepWork,
    /// Contact at the end of the step.
    pub contact: ContactInfo,
    /// Largest of `|n . v|` and `|t . v - l w_y|` before projection, m/s.
    /// Zero when the step did not end in contact.
    pub slip: f64,
}

struct Rates {
    d: StateDerivative,
    power: StepWork,
    contact: ContactInfo,
}

fn terrain_env(env: &Environment, terrain: &Terrain) -> Environment {
    Environment {
        rolling_resistance: terrain.rolling_resistance,
        ..*env
    }
}

/// Signed distance from the shell surface to the local terrain plane, m.
pub fn contact_gap(state: &RigidBodyState, ground: &TerrainSample, params: &VehicleParams) -> f64 {
    let n = ground.normal();
    let on_plane = Vec3::new(state.position.x, state.position.y, ground.height);
    n.dot(&(state.position - on_plane)) - params.shell_radius
}

fn evaluate(
    state: &RigidBodyState,
    wrench: &Wrench,
    terrain: &Terrain,
    params: &VehicleParams,
    env: &Environment,
    touching: bool,
) -> Result<Rates> {
    let contact = if touching {
        let ground = terrain.sample(state.position.x)?;
        contact_reaction(state, wrench, params, env, &ground.normal())
    } else {
        ContactInfo::airborne(Vec3::z())
    };
    let d = newton_euler(state, wrench, params, env, &contact)?;
    let (v, w, r) = (&state.velocity, &state.body_rates, &state.attitude);
    let drag = drag_force_for_attitude(v, r, params, env);
    let thrust = r.apply(&Vec3::new(0.0, 0.0, wrench.thrust));
    let (contact_power, rr_power) = if contact.in_contact {
        let moment = -params.shell_radius * r.apply_inverse(&contact.normal.cross(&contact.reaction));
        (
            contact.reaction.dot(v) + moment.dot(w),
            rolling_resistance_torque(&contact, w.y, params, env).dot(w),
        )
    } else {
        (0.0, 0.0)
    };
    Ok(Rates {
        d,
        power: StepWork {
            drag: drag.dot(v),
            rolling_resistance: rr_power,
            actuator: thrust.dot(v) + wrench.torque.dot(w),
            contact: contact_power,
            constraint: 0.0,
        },
        contact,
    })
}

fn advance(state: &RigidBodyState, d: &StateDerivative, h: f64) -> RigidBodyState {
    RigidBodyState {
        position: state.position + h * d.velocity,
        velocity: state.velocity + h * d.acceleration,
        attitude: Rotation::from_matrix_orthonormalized(state.attitude.matrix() + h * d.attitude_rate),
        body_rates: state.body_rates + h * d.angular_acceleration,
    }
}

fn mechanical_energy(state: &RigidBodyState, params: &VehicleParams, env: &Environment) -> f64 {
    state.kinetic_energy(params) + state.potential_energy(params, env)
}

/// Moves the state back onto the rolling contact manifold. Returns the new
/// state and the pre-projection slip.
fn project(state: &RigidBodyState, ground: &TerrainSample, params: &VehicleParams) -> (RigidBodyState, f64) {
    let n = ground.normal();
    let t = rolling_tangent(&n);
    let l = params.shell_radius;
    let gap = contact_gap(state, ground, params);
    let mut out = *state;
    out.position -= gap * n;

    let w_inertial = state.attitude.apply(&state.body_rates);
    let v_n = n.dot(&state.velocity);
    let v_t = t.dot(&state.velocity);
    let slip = v_n.abs().max((v_t - l * w_inertial.y).abs());

    let j = params.inertia[(1, 1)];
    let m = params.mass;
    let momentum = j * w_inertial.y + m * l * v_t;
    let w_y = momentum / (j + m * l * l);
    out.velocity = state.velocity - v_n * n + (l * w_y - v_t) * t;
    let w_new = Vec3::new(w_inertial.x, w_y, w_inertial.z);
    out.body_rates = state.attitude.apply_inverse(&w_new);
    (out, slip)
}

/// Advances `state` by `dt` with the rotors held at `speeds`.
///
/// `touching` says whether the step starts in contact (rolling mode only).
/// A rolling vehicle whose contact solve releases lifts off; an airborne
/// rolling vehicle that reaches the terrain lands inelastically.
#[allow(clippy::too_many_arguments)]
pub fn step(
    state: &RigidBodyState,
    speeds: &RotorSpeeds,
    terrain: &Terrain,
    params: &VehicleParams,
    env: &Environment,
    dt: f64,
    integrator: Integrator,
    mode: ContactMode,
    touching: bool,
) -> Result<StepResult> {
    let thrusts = speeds.restrict_to(params.rotor_count).thrusts(params.thrust_constant);
    let wrench = wrench_from_thrusts(&thrusts, params);
    step_wrench(state, &wrench, terrain, params, env, dt, integrator, mode, touching)
}

/// [`step`] for an already-realized wrench.
#[allow(clippy::too_many_arguments)]
pub fn step_wrench(
    state: &RigidBodyState,
    wrench: &Wrench,
    terrain: &Terrain,
    params: &VehicleParams,
    env: &Environment,
    dt: f64,
    integrator: Integrator,
    mode: ContactMode,
    touching: bool,
) -> Result<StepResult> {
    let env = terrain_env(env, terrain);
    let touching = touching && mode == ContactMode::Rolling;
    let (mut next, work, released) = match integrator {
        Integrator::Rk4 => {
            let k1 = evaluate(state, wrench, terrain, params, &env, touching)?;
            let s2 = advance(state, &k1.d, 0.5 * dt);
            let k2 = evaluate(&s2, wrench, terrain, params, &env, touching)?;
            let s3 = advance(state, &k2.d, 0.5 * dt);
            let k3 = evaluate(&s3, wrench, terrain, params, &env, touching)?;
            let s4 = advance(state, &k3.d, dt);
            let k4 = evaluate(&s4, wrench, terrain, params, &env, touching)?;
            let blend =
                |f: fn(&StateDerivative) -> Vec3| (f(&k1.d) + 2.0 * f(&k2.d) + 2.0 * f(&k3.d) + f(&k4.d)) * (dt / 6.0);
            let attitude_rate =
                (k1.d.attitude_rate + 2.0 * k2.d.attitude_rate + 2.0 * k3.d.attitude_rate + k4.d.attitude_rate)
                    * (dt / 6.0);
            let next = RigidBodyState {
                position: state.position + blend(|d| d.velocity),
                velocity: state.velocity + blend(|d| d.acceleration),
                attitude: Rotation::from_matrix_orthonormalized(state.attitude.matrix() + attitude_rate),
                body_rates: state.body_rates + blend(|d| d.angular_acceleration),
            };
            let work = k1
                .power
                .add(&k2.power.scaled(2.0))
                .add(&k3.power.scaled(2.0))
                .add(&k4.power)
                .scaled(dt / 6.0);
            let released = touching && [&k1, &k2, &k3, &k4].iter().any(|k| !k.contact.in_contact);
            (next, work, released)
        }
        Integrator::SemiImplicitEuler => {
            let k = evaluate(state, wrench, terrain, params, &env, touching)?;
            let velocity = state.velocity + dt * k.d.acceleration;
            let body_rates = state.body_rates + dt * k.d.angular_acceleration;
            let turn = nalgebra::Rotation3::new(body_rates * dt);
            let next = RigidBodyState {
                position: state.position + dt * velocity,
                velocity,
                attitude: Rotation::from_matrix_orthonormalized(state.attitude.matrix() * turn.matrix()),
                body_rates,
            };
            (next, k.power.scaled(dt), touching && !k.contact.in_contact)
        }
    };
    if !next.is_finite() {
        return Err(Error::NonFinite { time: f64::NAN });
    }

    let mut work = work;
    let mut slip = 0.0;
    let mut contact = ContactInfo::airborne(Vec3::z());
    if mode == ContactMode::Rolling {
        let ground = terrain.sample(next.position.x)?;
        let gap = contact_gap(&next, &ground, params);
        let landing = !touching && gap <= CONTACT_TOLERANCE && ground.normal().dot(&next.velocity) < 0.0;
        let staying = touching && !released;
        if staying || landing {
            let before = mechanical_energy(&next, params, &env);
            let (projected, s) = project(&next, &ground, params);
            work.constraint = mechanical_energy(&projected, params, &env) - before;
            if staying {
                slip = s;
            }
            next = projected;
            contact = contact_reaction(&next, wrench, params, &env, &ground.normal());
            if !contact.in_contact {
                // Touching the surface while the solve would pull: keep the
                // flag so the next step starts in contact and releases there.
                contact = ContactInfo {
                    in_contact: true,
                    ..contact
                };
            }
        }
    }
    Ok(StepResult {
        state: next,
        work,
        contact,
        slip,
    })
}
