//! Time-domain simulation of the closed-loop hybrid model: terrain, config,
//! integration, logging and energy audit.

pub mod audit;
pub mod config;
pub mod integrate;
pub mod run;
pub mod terrain;

pub use audit::{energy_audit, EnergyAudit};
pub use config::{load_config, parse_config, Segment, SimConfig, SimConfigFile};
pub use integrate::{step, step_wrench, ContactMode, Integrator, StepResult, StepWork};
pub use run::{analytic_power, run, LogRow, SimLog, LOG_COLUMNS};
pub use terrain::{load_terrain, GroundTrack, Terrain, TerrainFormat, TerrainSample};
