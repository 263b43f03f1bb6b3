//! Dynamics, rotor power, control allocation and steady-state energy models
//! for a two-agent multirotor that can either fly or dock into a cylinder
//! and roll using pure propeller torque.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`] and [`params`]: vector/rotation primitives, vehicle and
//!   environment records, presets and validation.
//! - [`dynamics`]: Newton-Euler equations for the rolling pair (with the
//!   no-slip contact solve) and the flying agent.
//! - [`power`]: momentum-theory induced velocity and rotor power through the
//!   efficiency chain.
//! - [`control`]: PI body-rate controller, allocation-matrix inversion,
//!   rotor speed mapping and a minimal flight velocity loop.
//! - [`analysis`]: steady-state force balances, range curves, the
//!   optimal-velocity search and the rolling-vs-flying advantage map.
//! - [`sim`]: terrain ingestion and closed-loop time-domain simulation with
//!   energy accounting.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod analysis;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod params;
pub mod power;
pub mod sim;

pub use analysis::{
    advantage_map, coverage_area, flying_steady_state, optimal_velocity, range_curve, rolling_steady_state,
    AdvantageGrid, Mode, OptimalVelocity, RangeCurve, SteadyStateResult,
};
pub use control::{
    allocate, allocation_matrix, pair_to_speeds, pi_rate_control, Allocation, PairForces, RateControllerState,
    RotorSpeeds,
};
pub use dynamics::{ContactInfo, RigidBodyState, StateDerivative, Wrench};
pub use error::{Error, Result};
pub use geometry::{rotation_about_y, Rotation, Vec3};
pub use params::{preset, validate, EfficiencyChain, Environment, Preset, Setup, VehicleParams, Violation};
