//! Scenario generation, Monte Carlo experiments, configuration and CSV
//! output.

pub mod config;
pub mod csv;
pub mod experiments;
pub mod scenario;

pub use config::ScenarioConfig;
pub use experiments::{
    codebook_patterns, non_irs_benchmark, quant_table, run_mp_experiment, run_rate_experiment, trace_estimates,
    Experiment, MpCurve, PatternRow, RatePoint, Rates, TrialRecord,
};
pub use scenario::{build_scenario, sample_scenario, Point, Scenario};
