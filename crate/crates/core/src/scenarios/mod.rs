//! Worked physical scenarios built on the estimation core.

pub mod epr;
pub mod linear;
pub mod potential;
pub mod registry;
pub mod thermal;

pub use epr::{epr_closed_form, epr_numeric, EprGrid, EprParams, EprReport};
pub use linear::{
    linear_estimate, optimize_squeezing, LinearEstimateInputs, LinearQuadrature, LinearReport, SqueezingCandidate,
    SqueezingInputs, SqueezingRegime, SqueezingReport,
};
pub use registry::{run_scenario, ScenarioOutput, StateSpec, SCENARIO_NAMES};
pub use potential::{quantum_potential_estimate, GridWavefunction, PotentialEstimate};
pub use thermal::{oscillator_thermal, thermal_energy_estimate, Oscillator, OscillatorThermalReport, ThermalEstimate};
