//! Simulation harness: the factorial design, seeded runs over all methods,
//! CSV output and the acceptance checks.

pub mod check;
pub mod config;
pub mod output;
pub mod run;
pub mod scenario;

pub use config::HarnessConfig;
pub use output::write_results;
pub use run::{run_all, run_scenario, ScenarioResult};
pub use scenario::{enumerate_scenarios, PredictorSet, Scenario, ScenarioFilter};
