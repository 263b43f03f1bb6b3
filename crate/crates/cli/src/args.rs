use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rollfly_core::analysis::calibration::{CALIBRATED_DISK_RADIUS, CALIBRATION_STEPS};
use rollfly_core::power::{RollingAirflow, RollingPowerOptions};
use rollfly_core::{Mode, Preset};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "rollfly", version, about = "Rolling vs flying range analysis and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Steady-state power and range over a speed grid, plus the optimum.
    RangeCurve(RangeCurveArgs),
    /// Rolling-minus-flying range over a slope by C_rr grid.
    AdvantageMap(AdvantageMapArgs),
    /// Closed-loop time-domain run from a JSON config.
    Simulate(SimulateArgs),
    /// Out-and-back survey area for a one-way range.
    Coverage(CoverageArgs),
    /// Disk-radius scan against the reference optimum ranges.
    Calibrate(CalibrateArgs),
    /// Re-runs a manifest and compares output hashes.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::RangeCurve(_) => "range-curve",
            Command::AdvantageMap(_) => "advantage-map",
            Command::Simulate(_) => "simulate",
            Command::Coverage(_) => "coverage",
            Command::Calibrate(_) => "calibrate",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Roll,
    Fly,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Roll => Mode::Rolling,
            ModeArg::Fly => Mode::Flying,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetArg {
    /// Docked pair for rolling, single agent for flying.
    Titan,
    TitanTable1Roll,
    TitanTable1Fly,
}

impl PresetArg {
    /// The preset used for `mode`.
    pub fn for_mode(self, mode: Mode) -> Preset {
        match self {
            PresetArg::Titan => match mode {
                Mode::Rolling => Preset::TitanTable1Roll,
                Mode::Flying => Preset::TitanTable1Fly,
            },
            PresetArg::TitanTable1Roll => Preset::TitanTable1Roll,
            PresetArg::TitanTable1Fly => Preset::TitanTable1Fly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AirflowArg {
    PerRotor,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = PresetArg::Titan)]
    pub preset: PresetArg,
    /// Rotor disk radius, m.
    #[arg(long, default_value_t = CALIBRATED_DISK_RADIUS, allow_negative_numbers = true)]
    pub disk_radius: f64,
    /// Rotor airspeed model while rolling.
    #[arg(long, value_enum, default_value_t = AirflowArg::PerRotor)]
    pub airflow: AirflowArg,
    /// Roll phases averaged per revolution.
    #[arg(long, default_value_t = 72)]
    pub phase_samples: usize,
}

impl ModelArgs {
    pub fn power_options(&self) -> RollingPowerOptions {
        RollingPowerOptions {
            samples: self.phase_samples,
            airflow: match self.airflow {
                AirflowArg::PerRotor => RollingAirflow::PerRotor,
                AirflowArg::Uniform => RollingAirflow::Uniform,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RangeCurveArgs {
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    #[arg(long, allow_negative_numbers = true)]
    pub slope_deg: f64,
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    pub crr: f64,
    #[command(flatten)]
    pub model: ModelArgs,
    /// m/s
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    pub v_min: f64,
    /// m/s
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub v_max: f64,
    /// Log-spaced samples between the bounds.
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Curve CSV; the sidecar and manifest are written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AdvantageMapArgs {
    #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
    pub slope_min_deg: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub slope_max_deg: f64,
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    pub crr_min: f64,
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    pub crr_max: f64,
    /// Grid points per axis.
    #[arg(long, default_value_t = 25)]
    pub resolution: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Grid CSV; `<stem>_crossover.csv` and the manifest are written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// JSON simulation config.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for log.csv, audit.json and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CoverageArgs {
    /// One-way range, km.
    #[arg(long, allow_negative_numbers = true)]
    pub range_km: f64,
    /// Also write the JSON here, with a manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CalibrateArgs {
    /// Radii scanned across the band.
    #[arg(long, default_value_t = CALIBRATION_STEPS)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = AirflowArg::PerRotor)]
    pub airflow: AirflowArg,
    #[arg(long, default_value_t = 72)]
    pub phase_samples: usize,
    /// Residuals CSV; the summary JSON and manifest are written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory receiving the regenerated outputs.
    #[arg(long)]
    pub out_dir: PathBuf,
}
