//! Phase-field approximation of free-discontinuity problems: a finite
//! difference solver for the Ambrosio–Tortorelli energy together with
//! diagnostics for its stationarity conditions.

pub mod assembly;
pub mod config;
pub mod dump;
pub mod energetics;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod parallel;
pub mod runner;
pub mod scenarios;
pub mod solver;
pub mod variations;

pub use assembly::{discrete_at_energy, ATParams, ATState, EnergyParts};
pub use config::RunConfig;
pub use energetics::{energy_report, EnergyReport};
pub use error::{Error, Result};
pub use grid::{Domain, Grid, GridSpec, ScalarField, Sym2};
pub use scenarios::Scenario;
pub use solver::{alternate_minimize, continuation_run, init_state, ContinuationSchedule, EtaRule, SolverOptions};
pub use variations::{
    diagnose, energy_stress_tensor, stress_tensor, DiagnosticToggles, DiagnosticsReport, TestVectorField,
};
