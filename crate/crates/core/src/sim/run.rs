//! Closed-loop simulation: setpoint, controller, allocation, rotor speeds,
//! integration, per-step rotor power.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::analysis::{steady_state, Mode};
use crate::control::{
    allocate, flight_velocity_control, pair_to_speeds, pi_rate_control, wrench_from_thrusts, FlightControllerState,
    FlightSetpoint, GroundReference, RotorSpeeds,
};
use crate::dynamics::RigidBodyState;
use crate::error::{Error, Result};
use crate::geometry::{Rotation, Vec3};
use crate::power::{rotor_set_power, RollingAirflow, RollingPowerOptions};

use super::config::SimConfig;
use super::integrate::{contact_gap, step_wrench, ContactMode, StepWork, CONTACT_TOLERANCE};
use super::terrain::TerrainKind;

/// CSV column order of [`SimLog::write_csv`].
pub const LOG_COLUMNS: [&str; 39] = [
    "time_s",
    "x_m",
    "y_m",
    "z_m",
    "vx_mps",
    "vy_mps",
    "vz_mps",
    "pitch_rad",
    "wx_radps",
    "wy_radps",
    "wz_radps",
    "mode",
    "contact",
    "saturated",
    "thrust_N",
    "tau_x_Nm",
    "tau_y_Nm",
    "tau_z_Nm",
    "n1_radps",
    "n2_radps",
    "n3_radps",
    "n4_radps",
    "n5_radps",
    "n6_radps",
    "n7_radps",
    "n8_radps",
    "power_W",
    "energy_J",
    "distance_m",
    "kinetic_J",
    "potential_J",
    "drag_work_J",
    "rolling_work_J",
    "actuator_work_J",
    "contact_work_J",
    "constraint_work_J",
    "slip_mps",
    "setpoint_mps",
    "track_height_m",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub time: f64,
    pub state: RigidBodyState,
    pub mode: Mode,
    pub contact: bool,
    pub saturated: bool,
    /// Realized thrust, N.
    pub thrust: f64,
    /// Realized body torque, N m.
    pub torque: Vec3,
    pub rotor_speeds: RotorSpeeds,
    /// Electrical rotor power, W.
    pub power: f64,
    /// Cumulative electrical energy, J.
    pub energy: f64,
    /// Ground-track distance, m.
    pub distance: f64,
    pub kinetic: f64,
    pub potential: f64,
    /// Cumulative work terms, J.
    pub work: StepWork,
    /// Pre-projection slip of the last step, m/s.
    pub slip: f64,
    pub setpoint: f64,
    /// Terrain height under the CoM, m.
    pub track_height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimLog {
    pub rows: Vec<LogRow>,
    pub dt: f64,
    pub steps: usize,
    /// `eta_p eta_m eta_c`.
    pub efficiency: f64,
    /// Largest pre-projection slip over all contact steps, m/s.
    pub max_slip: f64,
    pub saturated_steps: usize,
    pub averaging_start: f64,
}

impl SimLog {
    pub fn first(&self) -> &LogRow {
        &self.rows[0]
    }

    pub fn last(&self) -> &LogRow {
        &self.rows[self.rows.len() - 1]
    }

    /// Mean electrical power between the first row at or after `from` and
    /// the end of the run, W.
    pub fn mean_power_since(&self, from: f64) -> f64 {
        let last = self.last();
        let start = self
            .rows
            .iter()
            .find(|r| r.time >= from && r.time < last.time)
            .unwrap_or(self.first());
        if last.time == start.time {
            return last.power;
        }
        (last.energy - start.energy) / (last.time - start.time)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(LOG_COLUMNS)?;
        for r in &self.rows {
            let s = &r.state;
            let mut rec: Vec<String> = Vec::with_capacity(LOG_COLUMNS.len());
            rec.push(r.time.to_string());
            rec.extend(s.position.iter().map(f64::to_string));
            rec.extend(s.velocity.iter().map(f64::to_string));
            rec.push(s.attitude.pitch().to_string());
            rec.extend(s.body_rates.iter().map(f64::to_string));
            rec.push(r.mode.name().to_string());
            rec.push(u8::from(r.contact).to_string());
            rec.push(u8::from(r.saturated).to_string());
            rec.push(r.thrust.to_string());
            rec.extend(r.torque.iter().map(f64::to_string));
            rec.extend(r.rotor_speeds.0.iter().map(f64::to_string));
            for v in [
                r.power,
                r.energy,
                r.distance,
                r.kinetic,
                r.potential,
                r.work.drag,
                r.work.rolling_resistance,
                r.work.actuator,
                r.work.contact,
                r.work.constraint,
                r.slip,
                r.setpoint,
                r.track_height,
            ] {
                rec.push(v.to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Steady-state power for a single-segment run on a constant slope, W.
/// `None` for multi-segment runs, non-planar terrain, or a rolling run with
/// the rate loop switched off (it coasts instead of holding speed).
pub fn analytic_power(config: &SimConfig) -> Result<Option<f64>> {
    let [seg] = config.segments.as_slice() else {
        return Ok(None);
    };
    let rate = &config.rate_controller;
    if seg.mode == Mode::Rolling && rate.kp.iter().chain(rate.ki.iter()).all(|g| *g == 0.0) {
        return Ok(None);
    }
    let TerrainKind::Flat { slope } = config.terrain.kind else {
        return Ok(None);
    };
    let r = steady_state(
        seg.mode,
        seg.speed,
        slope,
        config.terrain.rolling_resistance,
        &config.setup,
        &RollingPowerOptions::default(),
    )?;
    Ok(Some(r.power))
}

fn initial_state(config: &SimConfig) -> Result<(RigidBodyState, bool)> {
    let seg = &config.segments[0];
    let p = &config.setup.vehicle;
    let ground = config.terrain.sample(config.start)?;
    let path = Vec3::new(ground.slope.cos(), 0.0, ground.slope.sin());
    let v0 = config.initial_speed;
    Ok(match seg.mode {
        Mode::Rolling => (
            RigidBodyState {
                position: Vec3::new(config.start, 0.0, ground.height + p.shell_radius / ground.slope.cos()),
                velocity: v0 * path,
                attitude: Rotation::identity(),
                body_rates: Vec3::new(0.0, v0 / p.shell_radius, 0.0),
            },
            true,
        ),
        Mode::Flying => (
            RigidBodyState {
                position: Vec3::new(config.start, 0.0, ground.height + seg.height),
                velocity: v0 * path,
                attitude: Rotation::identity(),
                body_rates: Vec3::zeros(),
            },
            false,
        ),
    })
}

/// Runs the closed loop for `config.duration`. Deterministic for a given
/// config, including the noise seed.
pub fn run(config: &SimConfig) -> Result<SimLog> {
    config.validate()?;
    let setup = &config.setup;
    let (params, env, eff) = (&setup.vehicle, &setup.env, &setup.eff);
    let dt = config.dt;
    let steps = (config.duration / dt - 1e-9).ceil().max(1.0) as usize;

    let (mut state, mut touching) = initial_state(config)?;
    let mut rate_ctl = config.rate_controller;
    let mut flight_ctl = FlightControllerState {
        gains: config.flight_gains,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = if config.rate_noise_std > 0.0 {
        Some(Normal::new(0.0, config.rate_noise_std).map_err(|e| Error::Config(e.to_string()))?)
    } else {
        None
    };

    let power_at = |s: &RigidBodyState, thrusts: &[f64; 8]| {
        rotor_set_power(
            &s.velocity,
            &s.attitude,
            &s.body_rates,
            thrusts,
            params,
            env,
            eff,
            RollingAirflow::PerRotor,
        )
    };
    let row = |time: f64, s: &RigidBodyState, seg_mode: Mode, setpoint: f64| -> Result<LogRow> {
        Ok(LogRow {
            time,
            state: *s,
            mode: seg_mode,
            contact: false,
            saturated: false,
            thrust: 0.0,
            torque: Vec3::zeros(),
            rotor_speeds: RotorSpeeds::default(),
            power: 0.0,
            energy: 0.0,
            distance: 0.0,
            kinetic: s.kinetic_energy(params),
            potential: s.potential_energy(params, env),
            work: StepWork::default(),
            slip: 0.0,
            setpoint,
            track_height: config.terrain.sample(s.position.x)?.height,
        })
    };

    let first = config.segments[0];
    let mut log = SimLog {
        rows: vec![LogRow {
            contact: touching,
            ..row(0.0, &state, first.mode, first.speed)?
        }],
        dt,
        steps,
        efficiency: eff.product(),
        max_slip: 0.0,
        saturated_steps: 0,
        averaging_start: config.averaging_start,
    };
    let mut energy = 0.0;
    let mut distance = 0.0;
    let mut work = StepWork::default();
    let mut mode = first.mode;
    let x_start = state.position.x;

    for k in 0..steps {
        let t = k as f64 * dt;
        let seg = *config.segment_at(t);
        if seg.mode != mode {
            rate_ctl.reset();
            flight_ctl.velocity_integral = Vec3::zeros();
            mode = seg.mode;
            if mode == Mode::Rolling {
                let ground = config.terrain.sample(state.position.x)?;
                touching = contact_gap(&state, &ground, params) <= CONTACT_TOLERANCE;
            }
        }

        let command = match mode {
            Mode::Rolling => {
                let mut measured = state.body_rates;
                if let Some(n) = &noise {
                    measured += Vec3::new(n.sample(&mut rng), n.sample(&mut rng), n.sample(&mut rng));
                }
                let desired = Vec3::new(0.0, seg.speed / params.shell_radius, 0.0);
                let (w, next) = pi_rate_control(&desired, &measured, rate_ctl, dt);
                rate_ctl = next;
                w
            }
            Mode::Flying => {
                let ground = config.terrain.sample(state.position.x)?;
                let setpoint = FlightSetpoint {
                    speed: seg.speed,
                    height: seg.height,
                };
                let reference = GroundReference {
                    height: ground.height,
                    slope: ground.slope,
                };
                let (w, next) = flight_velocity_control(&setpoint, &reference, &state, flight_ctl, params, env, dt)?;
                flight_ctl = next;
                w
            }
        };
        let allocation = allocate(&command, params)?;
        let speeds = pair_to_speeds(&allocation.pairs, params.thrust_constant).restrict_to(params.rotor_count);
        let thrusts = speeds.thrusts(params.thrust_constant);
        let applied = wrench_from_thrusts(&thrusts, params);
        if allocation.saturated {
            log.saturated_steps += 1;
        }

        let contact_mode = match mode {
            Mode::Rolling => ContactMode::Rolling,
            Mode::Flying => ContactMode::Free,
        };
        let p_before = power_at(&state, &thrusts)?;
        let result = step_wrench(
            &state,
            &applied,
            &config.terrain,
            params,
            env,
            dt,
            config.integrator,
            contact_mode,
            touching,
        )
        .map_err(|e| match e {
            Error::NonFinite { .. } => Error::NonFinite { time: t },
            other => other,
        })?;
        let next = result.state;
        let p_after = power_at(&next, &thrusts)?;
        energy += 0.5 * (p_before + p_after) * dt;
        distance += 0.5 * (state.velocity.xy().norm() + next.velocity.xy().norm()) * dt;
        work = StepWork {
            drag: work.drag + result.work.drag,
            rolling_resistance: work.rolling_resistance + result.work.rolling_resistance,
            actuator: work.actuator + result.work.actuator,
            contact: work.contact + result.work.contact,
            constraint: work.constraint + result.work.constraint,
        };
        touching = result.contact.in_contact;
        if touching {
            log.max_slip = log.max_slip.max(result.slip);
        }
        state = next;

        if (k + 1) % config.log_every == 0 || k + 1 == steps {
            let base = row((k + 1) as f64 * dt, &state, mode, seg.speed)?;
            log.rows.push(LogRow {
                contact: touching,
                saturated: allocation.saturated,
                thrust: applied.thrust,
                torque: applied.torque,
                rotor_speeds: speeds,
                power: p_after,
                energy,
                distance,
                work,
                slip: result.slip,
                ..base
            });
        }
    }
    config.terrain.warn_lateral(x_start, state.position.x);
    Ok(log)
}
