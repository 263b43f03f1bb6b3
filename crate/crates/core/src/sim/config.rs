//! Simulation configuration. Files are JSON with angles in degrees; the
//! resolved [`SimConfig`] is SI throughout.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::calibration::CALIBRATED_DISK_RADIUS;
use crate::analysis::Mode;
use crate::control::{FlightGains, RateControllerState};
use crate::error::{Error, Result};
use crate::params::{validate_setup, Preset, Setup};

use super::integrate::Integrator;
use super::terrain::{load_terrain, GroundTrack, Terrain, TerrainFormat};

pub const MAX_DT: f64 = 0.01;

fn default_dt() -> f64 {
    1e-3
}

fn default_log_every() -> usize {
    100
}

fn default_height() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentOverrides {
    pub gravity_mps2: Option<f64>,
    pub air_density_kgpm3: Option<f64>,
    pub drag_coefficient: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TerrainSpec {
    Flat {
        slope_deg: f64,
        crr: f64,
    },
    CsvProfile {
        path: PathBuf,
        crr: f64,
    },
    AsciiGrid {
        path: PathBuf,
        crr: f64,
        #[serde(default)]
        start_m: [f64; 2],
        #[serde(default)]
        heading_deg: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub start_s: f64,
    pub mode: Mode,
    pub speed_mps: f64,
    /// Height above terrain held in flight.
    #[serde(default = "default_height")]
    pub height_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateGainsSpec {
    pub kp: f64,
    pub ki: f64,
    pub integral_limit_rad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlightGainsSpec {
    pub velocity_p: f64,
    pub velocity_i: f64,
    pub height_p: f64,
    pub attitude_p: f64,
    pub rate_p: f64,
    pub max_tilt_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub std_radps: f64,
    pub seed: u64,
}

/// On-disk form of a simulation config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfigFile {
    pub preset: Preset,
    /// Defaults to the calibrated disk radius.
    #[serde(default)]
    pub disk_radius_m: Option<f64>,
    #[serde(default)]
    pub environment: EnvironmentOverrides,
    pub terrain: TerrainSpec,
    pub segments: Vec<SegmentSpec>,
    #[serde(default)]
    pub rate_controller: Option<RateGainsSpec>,
    #[serde(default)]
    pub flight_gains: Option<FlightGainsSpec>,
    #[serde(default = "default_dt")]
    pub dt_s: f64,
    pub duration_s: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default = "default_log_every")]
    pub log_every: usize,
    /// Defaults to the first segment's speed.
    #[serde(default)]
    pub initial_speed_mps: Option<f64>,
    /// Starting track distance.
    #[serde(default)]
    pub start_m: f64,
    /// Start of the mean-power window; defaults to a fifth of the duration.
    #[serde(default)]
    pub averaging_start_s: Option<f64>,
    #[serde(default)]
    pub rate_noise: Option<NoiseSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// s
    pub start: f64,
    pub mode: Mode,
    /// Along-track speed, m/s.
    pub speed: f64,
    /// m
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub setup: Setup,
    pub terrain: Terrain,
    pub segments: Vec<Segment>,
    pub rate_controller: RateControllerState,
    pub flight_gains: FlightGains,
    /// s
    pub dt: f64,
    /// s
    pub duration: f64,
    pub integrator: Integrator,
    pub log_every: usize,
    /// m/s
    pub initial_speed: f64,
    /// m
    pub start: f64,
    /// s
    pub averaging_start: f64,
    /// rad/s, standard deviation of additive body-rate measurement noise.
    pub rate_noise_std: f64,
    pub seed: u64,
}

impl SimConfig {
    /// A single-segment run on a constant slope with default gains.
    pub fn steady(setup: Setup, mode: Mode, speed: f64, slope: f64, crr: f64, duration: f64) -> Self {
        SimConfig {
            setup,
            terrain: Terrain::flat(slope, crr),
            segments: vec![Segment {
                start: 0.0,
                mode,
                speed,
                height: default_height(),
            }],
            rate_controller: RateControllerState::default(),
            flight_gains: FlightGains::default(),
            dt: default_dt(),
            duration,
            integrator: Integrator::Rk4,
            log_every: default_log_every(),
            initial_speed: speed,
            start: 0.0,
            averaging_start: 0.2 * duration,
            rate_noise_std: 0.0,
            seed: 0,
        }
    }

    pub fn segment_at(&self, t: f64) -> &Segment {
        let i = self.segments.partition_point(|s| s.start <= t);
        &self.segments[i.saturating_sub(1)]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return bad(format!("dt_s must be in (0, {MAX_DT}], got {}", self.dt));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration_s must be positive, got {}", self.duration));
        }
        if self.log_every == 0 {
            return bad("log_every must be at least 1".into());
        }
        if self.segments.is_empty() {
            return bad("segments must not be empty".into());
        }
        if self.segments[0].start != 0.0 {
            return bad("the first segment must start at 0 s".into());
        }
        for (i, s) in self.segments.iter().enumerate() {
            if i > 0 && !(s.start > self.segments[i - 1].start) {
                return bad(format!("segments[{i}].start_s must increase"));
            }
            if !(s.speed >= 0.0 && s.speed.is_finite()) {
                return bad(format!("segments[{i}].speed_mps must be nonnegative"));
            }
            if s.mode == Mode::Rolling && self.setup.vehicle.rotor_count != 8 {
                return Err(Error::RollingNeedsPair);
            }
        }
        if !(self.terrain.rolling_resistance >= 0.0 && self.terrain.rolling_resistance <= 1.0) {
            return bad(format!(
                "terrain.crr out of range [0, 1]: {}",
                self.terrain.rolling_resistance
            ));
        }
        let gains = &self.rate_controller;
        if gains
            .kp
            .iter()
            .chain(gains.ki.iter())
            .chain(gains.integral_limit.iter())
            .any(|g| !(*g >= 0.0))
        {
            return bad("rate controller gains must be nonnegative".into());
        }
        if !(self.rate_noise_std >= 0.0) {
            return bad("rate_noise.std_radps must be nonnegative".into());
        }
        validate_setup(&self.setup)
    }
}

/// Parses a config from JSON text; relative terrain paths resolve against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<SimConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: SimConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Config(format!("{path}: {}", e.into_inner()))
    })?;
    resolve(&file, base)
}

pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Converts the file form to SI and loads any terrain file.
pub fn resolve(file: &SimConfigFile, base: &Path) -> Result<SimConfig> {
    let mut setup = file
        .preset
        .setup()
        .with_disk_radius(file.disk_radius_m.unwrap_or(CALIBRATED_DISK_RADIUS));
    let o = &file.environment;
    if let Some(g) = o.gravity_mps2 {
        setup.env.gravity = g;
    }
    if let Some(rho) = o.air_density_kgpm3 {
        setup.env.air_density = rho;
    }
    if let Some(cd) = o.drag_coefficient {
        setup.env.drag_coefficient = cd;
    }

    let terrain = match &file.terrain {
        TerrainSpec::Flat { slope_deg, crr } => {
            if !(slope_deg.abs() < 90.0) {
                return Err(Error::Config(format!(
                    "terrain.slope_deg must be within (-90, 90), got {slope_deg}"
                )));
            }
            Terrain::flat(slope_deg.to_radians(), *crr)
        }
        TerrainSpec::CsvProfile { path, crr } => load_terrain(
            &base.join(path),
            TerrainFormat::CsvProfile,
            *crr,
            GroundTrack::default(),
        )?,
        TerrainSpec::AsciiGrid {
            path,
            crr,
            start_m,
            heading_deg,
        } => load_terrain(
            &base.join(path),
            TerrainFormat::AsciiGrid,
            *crr,
            GroundTrack {
                start: *start_m,
                heading: heading_deg.to_radians(),
            },
        )?,
    };
    setup.env.rolling_resistance = terrain.rolling_resistance;

    let segments: Vec<Segment> = file
        .segments
        .iter()
        .map(|s| Segment {
            start: s.start_s,
            mode: s.mode,
            speed: s.speed_mps,
            height: s.height_m,
        })
        .collect();
    let rate_controller = file.rate_controller.map_or_else(RateControllerState::default, |g| {
        RateControllerState::new(g.kp, g.ki, g.integral_limit_rad)
    });
    let flight_gains = file.flight_gains.map_or_else(FlightGains::default, |g| FlightGains {
        velocity_p: g.velocity_p,
        velocity_i: g.velocity_i,
        height_p: g.height_p,
        attitude_p: g.attitude_p,
        rate_p: g.rate_p,
        max_tilt: g.max_tilt_deg.to_radians(),
    });
    let noise = file.rate_noise.unwrap_or(NoiseSpec {
        std_radps: 0.0,
        seed: 0,
    });
    let config = SimConfig {
        setup,
        terrain,
        initial_speed: file
            .initial_speed_mps
            .unwrap_or_else(|| segments.first().map_or(0.0, |s| s.speed)),
        segments,
        rate_controller,
        flight_gains,
        dt: file.dt_s,
        duration: file.duration_s,
        integrator: file.integrator,
        log_every: file.log_every,
        start: file.start_m,
        averaging_start: file.averaging_start_s.unwrap_or(0.2 * file.duration_s),
        rate_noise_std: noise.std_radps,
        seed: noise.seed,
    };
    config.validate()?;
    Ok(config)
}
