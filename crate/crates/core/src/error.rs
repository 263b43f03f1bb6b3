use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown preset `{0}` (expected titan_table1_roll or titan_table1_fly)")]
    UnknownPreset(String),

    #[error("invalid parameters: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidParams(Vec<crate::params::Violation>),

    #[error("inertia matrix is singular")]
    SingularInertia,

    #[error("allocation matrix is singular (arm length and torque constant must be nonzero)")]
    SingularAllocation,

    #[error("induced velocity did not converge (thrust {thrust} N, freestream {freestream} m/s, alpha {alpha} rad)")]
    InducedVelocity { thrust: f64, freestream: f64, alpha: f64 },

    #[error("commanded tilt {tilt_deg:.1} deg exceeds the {limit_deg:.0} deg model limit")]
    TiltLimit { tilt_deg: f64, limit_deg: f64 },

    #[error("rolling requires a docked pair with 8 rotors")]
    RollingNeedsPair,

    #[error("no feasible velocity in the search interval")]
    NoFeasibleVelocity,

    #[error("range is unbounded: the vehicle coasts at zero power at {speed} m/s")]
    UnboundedRange { speed: f64 },

    #[error("state became non-finite at t = {time} s")]
    NonFinite { time: f64 },

    #[error("left the terrain bounds at track distance {distance} m")]
    OutOfTerrain { distance: f64 },

    #[error("terrain parse error at line {line}: {message}")]
    TerrainParse { line: usize, message: String },

    #[error("terrain has nodata at row {row} (line {line}) inside the traversal region")]
    NoData { row: usize, line: usize },

    #[error("invalid simulation config: {0}")]
    Config(String),

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    /// True when the error reflects an infeasible model regime rather than bad input.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::TiltLimit { .. }
                | Error::NoFeasibleVelocity
                | Error::UnboundedRange { .. }
                | Error::InducedVelocity { .. }
                | Error::NonFinite { .. }
                | Error::OutOfTerrain { .. }
        )
    }
}
