//! Energy bookkeeping over a simulation log.

use serde::{Deserialize, Serialize};

use crate::params::{Environment, VehicleParams};

use super::run::SimLog;

/// Mechanical energy balance and electrical totals of a run. Work terms are
/// signed: dissipation is negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyAudit {
    pub duration_s: f64,
    pub kinetic_initial_j: f64,
    pub kinetic_change_j: f64,
    pub potential_change_j: f64,
    pub drag_work_j: f64,
    pub rolling_resistance_work_j: f64,
    /// Mechanical work of rotor thrust and torque.
    pub actuator_work_j: f64,
    pub contact_work_j: f64,
    /// Energy change from contact projection (impacts, drift, kinks).
    pub constraint_work_j: f64,
    /// Integral of electrical rotor power.
    pub rotor_electrical_energy_j: f64,
    /// Electrical energy times the efficiency chain: aerodynamic input.
    pub rotor_aerodynamic_energy_j: f64,
    pub initial_mechanical_energy_j: f64,
    /// `dKE + dPE - sum(work)`.
    pub closure_residual_j: f64,
    /// Initial mechanical energy plus the magnitudes of all work terms.
    pub closure_scale_j: f64,
    pub closure_relative: f64,
    pub mean_power_w: f64,
    pub window_start_s: f64,
    pub window_mean_power_w: f64,
    pub distance_m: f64,
    pub max_slip_mps: f64,
    pub saturated_steps: usize,
    pub analytic_power_w: Option<f64>,
    pub analytic_relative_error: Option<f64>,
}

impl EnergyAudit {
    /// Records the steady-state reference and the window mean's relative error.
    pub fn with_analytic(mut self, power: Option<f64>) -> Self {
        self.analytic_power_w = power;
        self.analytic_relative_error = power.map(|p| (self.window_mean_power_w - p) / p);
        self
    }
}

/// Decomposes the energy flow of `log`. `params` and `env` must be the ones
/// the run used.
pub fn energy_audit(log: &SimLog, params: &VehicleParams, env: &Environment) -> EnergyAudit {
    let (a, b) = (log.first(), log.last());
    let ke0 = a.state.kinetic_energy(params);
    let pe0 = a.state.potential_energy(params, env);
    let d_ke = b.state.kinetic_energy(params) - ke0;
    let d_pe = b.state.potential_energy(params, env) - pe0;
    let w = &b.work;
    let residual = d_ke + d_pe - w.total();
    let scale = ke0
        + pe0.abs()
        + w.drag.abs()
        + w.rolling_resistance.abs()
        + w.actuator.abs()
        + w.contact.abs()
        + w.constraint.abs();
    let duration = b.time - a.time;
    EnergyAudit {
        duration_s: duration,
        kinetic_initial_j: ke0,
        kinetic_change_j: d_ke,
        potential_change_j: d_pe,
        drag_work_j: w.drag,
        rolling_resistance_work_j: w.rolling_resistance,
        actuator_work_j: w.actuator,
        contact_work_j: w.contact,
        constraint_work_j: w.constraint,
        rotor_electrical_energy_j: b.energy,
        rotor_aerodynamic_energy_j: b.energy * log.efficiency,
        initial_mechanical_energy_j: ke0 + pe0,
        closure_residual_j: residual,
        closure_scale_j: scale,
        closure_relative: if scale > 0.0 { residual.abs() / scale } else { 0.0 },
        mean_power_w: if duration > 0.0 { b.energy / duration } else { 0.0 },
        window_start_s: log.averaging_start,
        window_mean_power_w: log.mean_power_since(log.averaging_start),
        distance_m: b.distance,
        max_slip_mps: log.max_slip,
        saturated_steps: log.saturated_steps,
        analytic_power_w: None,
        analytic_relative_error: None,
    }
}
