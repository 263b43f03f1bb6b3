//! Shared fixtures for the benchmarks.

use rollfly_core::analysis::calibration::calibrated_setups;
use rollfly_core::Setup;

/// Calibrated (rolling pair, flying agent) setups.
pub fn setups() -> (Setup, Setup) {
    calibrated_setups()
}
