//! Vehicle, environment and efficiency records, presets, and validation.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nominal rotor speed at which one rotor produces [`ROTOR_MAX_THRUST`].
pub const NOMINAL_ROTOR_SPEED: f64 = 2_500.0;
/// One quarter of the ~32 N maximum thrust of a single agent.
pub const ROTOR_MAX_THRUST: f64 = 8.0;
/// Half of a 6 inch propeller.
pub const NOMINAL_DISK_RADIUS: f64 = 0.0762;
pub const DEFAULT_ARM_LENGTH: f64 = 0.14;
pub const DEFAULT_TORQUE_CONSTANT: f64 = 0.016;

/// Mass, inertia, geometry and rotor constants of one agent or a docked pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// kg
    pub mass: f64,
    /// Body-frame inertia about the CoM, kg m^2.
    pub inertia: Matrix3<f64>,
    /// Cylinder (shell) radius `l`, m.
    pub shell_radius: f64,
    /// Cylinder width `w`, m.
    pub shell_width: f64,
    /// `h`: rotor-to-rotor height for the pair, rotor-to-base height for one agent, m.
    pub rotor_height: f64,
    /// Arm length `a` from each rotor to the CoM, m.
    pub arm_length: f64,
    /// `k_t` in `f = k_t n^2`, N s^2/rad^2.
    pub thrust_constant: f64,
    /// `k_tau` in `tau = k_tau f`, m.
    pub torque_constant: f64,
    /// 4 (single agent) or 8 (docked pair).
    pub rotor_count: usize,
    /// Rotor disk radius, m. Enters only the induced-velocity model.
    pub disk_radius: f64,
    /// Per-rotor thrust ceiling, N.
    pub max_rotor_thrust: f64,
    /// Usable battery energy, J.
    pub battery_energy: f64,
}

impl VehicleParams {
    /// Docked pair: two agents forming a rolling cylinder.
    pub fn docked_pair() -> Self {
        let (mass, l, w) = (1.6, 0.2, 0.4);
        VehicleParams {
            mass,
            inertia: cylinder_inertia(mass, l, w),
            shell_radius: l,
            shell_width: w,
            rotor_height: 0.16,
            arm_length: DEFAULT_ARM_LENGTH,
            thrust_constant: default_thrust_constant(),
            torque_constant: DEFAULT_TORQUE_CONSTANT,
            rotor_count: 8,
            disk_radius: NOMINAL_DISK_RADIUS,
            max_rotor_thrust: ROTOR_MAX_THRUST,
            battery_energy: 2.0 * 8.7e5,
        }
    }

    /// A single flying agent.
    pub fn single_agent() -> Self {
        let (mass, l, w, h) = (0.8, 0.2, 0.4, 0.08);
        VehicleParams {
            mass,
            inertia: box_inertia(mass, 2.0 * l, w, h),
            shell_radius: l,
            shell_width: w,
            rotor_height: h,
            arm_length: DEFAULT_ARM_LENGTH,
            thrust_constant: default_thrust_constant(),
            torque_constant: DEFAULT_TORQUE_CONSTANT,
            rotor_count: 4,
            disk_radius: NOMINAL_DISK_RADIUS,
            max_rotor_thrust: ROTOR_MAX_THRUST,
            battery_energy: 8.7e5,
        }
    }

    /// Pair-force lever arm `c = a / sqrt(2)`.
    pub fn pair_arm(&self) -> f64 {
        self.arm_length / std::f64::consts::SQRT_2
    }

    pub fn inertia_inverse(&self) -> Result<Matrix3<f64>> {
        self.inertia.try_inverse().ok_or(Error::SingularInertia)
    }

    /// Body-frame positions of rotors 1..=rotor_count.
    ///
    /// The planform follows the columns of the allocation matrix: rotor 1 at
    /// `(c, -c)`, 2 at `(c, c)`, 3 at `(-c, c)`, 4 at `(-c, -c)`. On the docked
    /// pair, rotors 5..8 sit under 1..4 on the opposite plate at `z = -h/2`
    /// and thrust along `-z_B`; rotors 1..4 sit at `z = +h/2`. A single agent
    /// carries its rotor plane through the CoM.
    pub fn rotor_positions(&self) -> Vec<crate::geometry::Vec3> {
        let c = self.pair_arm();
        let planform = [(c, -c), (c, c), (-c, c), (-c, -c)];
        let z = if self.rotor_count == 8 {
            0.5 * self.rotor_height
        } else {
            0.0
        };
        let mut out: Vec<_> = planform
            .iter()
            .map(|&(x, y)| crate::geometry::Vec3::new(x, y, z))
            .collect();
        if self.rotor_count == 8 {
            out.extend(planform.iter().map(|&(x, y)| crate::geometry::Vec3::new(x, y, -z)));
        }
        out
    }

    /// +1 for rotors thrusting along +z_B (1..4), -1 for 5..8.
    pub fn rotor_axis_sign(index: usize) -> f64 {
        if index < 4 {
            1.0
        } else {
            -1.0
        }
    }
}

fn default_thrust_constant() -> f64 {
    ROTOR_MAX_THRUST / (NOMINAL_ROTOR_SPEED * NOMINAL_ROTOR_SPEED)
}

/// Uniform solid cylinder with its axis along body y.
pub fn cylinder_inertia(mass: f64, radius: f64, width: f64) -> Matrix3<f64> {
    let axial = 0.5 * mass * radius * radius;
    let transverse = mass * (3.0 * radius * radius + width * width) / 12.0;
    Matrix3::from_diagonal(&nalgebra::Vector3::new(transverse, axial, transverse))
}

/// Solid box with extents `(dx, dy, dz)` along the body axes.
pub fn box_inertia(mass: f64, dx: f64, dy: f64, dz: f64) -> Matrix3<f64> {
    let k = mass / 12.0;
    Matrix3::from_diagonal(&nalgebra::Vector3::new(
        k * (dy * dy + dz * dz),
        k * (dx * dx + dz * dz),
        k * (dx * dx + dy * dy),
    ))
}

/// Planetary and terrain constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    /// m/s^2
    pub gravity: f64,
    /// kg/m^3
    pub air_density: f64,
    pub drag_coefficient: f64,
    pub rolling_resistance: f64,
    /// Terrain slope, rad. Positive is uphill along +x.
    pub slope: f64,
}

impl Environment {
    pub fn titan() -> Self {
        Environment {
            gravity: 1.352,
            air_density: 5.4,
            drag_coefficient: 2.1,
            rolling_resistance: 0.01,
            slope: 0.0,
        }
    }

    pub fn with_terrain(mut self, slope: f64, rolling_resistance: f64) -> Self {
        self.slope = slope;
        self.rolling_resistance = rolling_resistance;
        self
    }

    /// Inertial terrain normal for the planar x-z slope.
    pub fn terrain_normal(&self) -> crate::geometry::Vec3 {
        crate::geometry::Vec3::new(-self.slope.sin(), 0.0, self.slope.cos())
    }
}

/// Propeller, motor and controller efficiencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyChain {
    pub propeller: f64,
    pub motor: f64,
    pub controller: f64,
}

impl Default for EfficiencyChain {
    fn default() -> Self {
        EfficiencyChain {
            propeller: 0.6,
            motor: 0.85,
            controller: 0.95,
        }
    }
}

impl EfficiencyChain {
    pub fn product(&self) -> f64 {
        self.propeller * self.motor * self.controller
    }
}

/// Everything a model evaluation needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub vehicle: VehicleParams,
    pub env: Environment,
    pub eff: EfficiencyChain,
}

impl Setup {
    pub fn with_disk_radius(mut self, r: f64) -> Self {
        self.vehicle.disk_radius = r;
        self
    }

    pub fn with_terrain(mut self, slope: f64, rolling_resistance: f64) -> Self {
        self.env = self.env.with_terrain(slope, rolling_resistance);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    TitanTable1Roll,
    TitanTable1Fly,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::TitanTable1Roll => "titan_table1_roll",
            Preset::TitanTable1Fly => "titan_table1_fly",
        }
    }

    pub fn setup(&self) -> Setup {
        let vehicle = match self {
            Preset::TitanTable1Roll => VehicleParams::docked_pair(),
            Preset::TitanTable1Fly => VehicleParams::single_agent(),
        };
        Setup {
            vehicle,
            env: Environment::titan(),
            eff: EfficiencyChain::default(),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "titan_table1_roll" => Ok(Preset::TitanTable1Roll),
            "titan_table1_fly" => Ok(Preset::TitanTable1Fly),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Looks up a named preset.
pub fn preset(name: &str) -> Result<Setup> {
    Ok(name.parse::<Preset>()?.setup())
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn positive(out: &mut Vec<Violation>, field: &str, label: &str, value: f64) {
    if !(value.is_finite() && value > 0.0) {
        out.push(Violation {
            field: field.into(),
            message: format!("{label} must be positive"),
        });
    }
}

/// Collects every violated invariant of the vehicle and environment.
///
/// `drag_coefficient = 0` is accepted so conservative (drag-free) scenarios
/// can be expressed.
pub fn validate(params: &VehicleParams, env: &Environment) -> std::result::Result<(), Vec<Violation>> {
    let mut v = Vec::new();
    positive(&mut v, "mass", "mass", params.mass);
    positive(&mut v, "shell_radius", "shell radius", params.shell_radius);
    positive(&mut v, "shell_width", "shell width", params.shell_width);
    positive(&mut v, "rotor_height", "rotor height", params.rotor_height);
    positive(&mut v, "arm_length", "arm length", params.arm_length);
    positive(&mut v, "thrust_constant", "thrust constant", params.thrust_constant);
    positive(&mut v, "torque_constant", "torque constant", params.torque_constant);
    positive(&mut v, "disk_radius", "disk radius", params.disk_radius);
    positive(&mut v, "max_rotor_thrust", "max rotor thrust", params.max_rotor_thrust);
    positive(&mut v, "battery_energy", "battery energy", params.battery_energy);
    if params.rotor_count != 4 && params.rotor_count != 8 {
        v.push(Violation {
            field: "rotor_count".into(),
            message: format!("rotor count must be 4 or 8, got {}", params.rotor_count),
        });
    }
    let diag = params.inertia.diagonal();
    if diag.iter().any(|&d| !(d.is_finite() && d > 0.0)) || params.inertia.try_inverse().is_none() {
        v.push(Violation {
            field: "inertia".into(),
            message: "inertia must be finite, invertible, with positive diagonal".into(),
        });
    }

    positive(&mut v, "gravity", "gravity", env.gravity);
    positive(&mut v, "air_density", "air density", env.air_density);
    if !(env.drag_coefficient.is_finite() && env.drag_coefficient >= 0.0) {
        v.push(Violation {
            field: "drag_coefficient".into(),
            message: "C_d must be non-negative".into(),
        });
    }
    if !(0.0..=1.0).contains(&env.rolling_resistance) {
        v.push(Violation {
            field: "rolling_resistance".into(),
            message: "C_rr out of range [0, 1]".into(),
        });
    }
    let half_pi = std::f64::consts::FRAC_PI_2;
    if !(env.slope.is_finite() && env.slope > -half_pi && env.slope < half_pi) {
        v.push(Violation {
            field: "slope".into(),
            message: "slope out of range (-pi/2, pi/2)".into(),
        });
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

pub fn validate_efficiency(eff: &EfficiencyChain) -> std::result::Result<(), Vec<Violation>> {
    let v: Vec<_> = [
        ("propeller", eff.propeller),
        ("motor", eff.motor),
        ("controller", eff.controller),
    ]
    .into_iter()
    .filter(|(_, x)| !(*x > 0.0 && *x <= 1.0))
    .map(|(f, _)| Violation {
        field: f.into(),
        message: "efficiency out of range (0, 1]".into(),
    })
    .collect();
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

/// [`validate`] plus the efficiency chain, as a single `Result`.
pub fn validate_setup(setup: &Setup) -> Result<()> {
    let mut all = validate(&setup.vehicle, &setup.env).err().unwrap_or_default();
    all.extend(validate_efficiency(&setup.eff).err().unwrap_or_default());
    if all.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidParams(all))
    }
}
