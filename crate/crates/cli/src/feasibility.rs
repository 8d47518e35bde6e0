//! Loop length and loss for a given repetition rate.

use loopsource_core::model::transmission;
use loopsource_core::LossModel;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Standard single-mode fibre at 1550 nm.
pub const DEFAULT_GROUP_INDEX: f64 = 1.468;
pub const DEFAULT_ATTENUATION_DB_PER_KM: f64 = 0.2;
pub const DEFAULT_LOOPS: usize = 10;
pub const DEFAULT_SWITCH_EFFICIENCY: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityInput {
    pub repetition_rate: f64,
    pub attenuation_db_per_km: f64,
    pub loops: usize,
    pub switch_efficiency: f64,
    pub group_index: f64,
}

impl FeasibilityInput {
    pub fn new(repetition_rate: f64) -> Self {
        Self {
            repetition_rate,
            attenuation_db_per_km: DEFAULT_ATTENUATION_DB_PER_KM,
            loops: DEFAULT_LOOPS,
            switch_efficiency: DEFAULT_SWITCH_EFFICIENCY,
            group_index: DEFAULT_GROUP_INDEX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub repetition_rate: f64,
    /// Seconds between time-bins, which is also the loop delay.
    pub bin_separation: f64,
    /// Fibre in one loop, metres.
    pub fibre_length: f64,
    /// Fibre traversed by a photon making every assessed loop, metres.
    pub total_path_length: f64,
    /// Per-loop fibre transmission.
    pub fibre_transmission: f64,
    pub loops_assessed: usize,
    pub switch_efficiency: f64,
    /// Switch and fibre transmission after `loops_assessed` loops.
    pub net_transmission: f64,
}

pub fn feasibility(input: &FeasibilityInput) -> CliResult<FeasibilityReport> {
    if !(input.repetition_rate.is_finite() && input.repetition_rate > 0.0) {
        return Err(CliError::flag(
            "--rate",
            "must be a positive frequency in Hz",
        ));
    }
    if !(input.attenuation_db_per_km.is_finite() && input.attenuation_db_per_km >= 0.0) {
        return Err(CliError::flag(
            "--attenuation",
            "must be non-negative dB/km",
        ));
    }
    if !(input.group_index.is_finite() && input.group_index >= 1.0) {
        return Err(CliError::flag("--group-index", "must be at least 1"));
    }
    let bin_separation = 1.0 / input.repetition_rate;
    let fibre_length = SPEED_OF_LIGHT / input.group_index * bin_separation;
    let fibre_transmission =
        10f64.powf(-input.attenuation_db_per_km * (fibre_length / 1000.0) / 10.0);
    let loss = LossModel::new(input.switch_efficiency, fibre_transmission)
        .map_err(|e| CliError::flag("--eta-s", e))?;
    Ok(FeasibilityReport {
        repetition_rate: input.repetition_rate,
        bin_separation,
        fibre_length,
        total_path_length: fibre_length * input.loops as f64,
        fibre_transmission,
        loops_assessed: input.loops,
        switch_efficiency: input.switch_efficiency,
        net_transmission: transmission(&loss, input.loops),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_nanosecond_loop() {
        let report = feasibility(&FeasibilityInput::new(1e9)).unwrap();
        assert!((report.bin_separation - 1e-9).abs() < 1e-24);
        assert!((report.fibre_length - 0.2042).abs() < 1e-3);
        assert!((report.total_path_length - 2.042).abs() < 1e-2);
        assert!(report.fibre_transmission > 0.9999);
        assert!((report.net_transmission - 0.8f64.powi(11)).abs() < 1e-4);
        assert!((report.net_transmission - 0.086).abs() < 1e-3);
    }

    #[test]
    fn slow_source_needs_kilometres() {
        let mut input = FeasibilityInput::new(1e5);
        input.loops = 1;
        let report = feasibility(&input).unwrap();
        assert!((report.fibre_length - 2042.2).abs() < 1.0);
        assert!((report.fibre_transmission - 0.91).abs() < 0.01);
    }

    #[test]
    fn zero_attenuation_is_lossless_fibre() {
        let mut input = FeasibilityInput::new(8e7);
        input.attenuation_db_per_km = 0.0;
        let report = feasibility(&input).unwrap();
        assert_eq!(report.fibre_transmission, 1.0);
        assert!((report.fibre_length - 2.553).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(feasibility(&FeasibilityInput::new(0.0)).is_err());
        let mut input = FeasibilityInput::new(1e9);
        input.attenuation_db_per_km = -1.0;
        assert!(feasibility(&input).is_err());
        let mut input = FeasibilityInput::new(1e9);
        input.switch_efficiency = 1.5;
        assert_eq!(feasibility(&input).unwrap_err().exit_code(), 2);
    }
}
