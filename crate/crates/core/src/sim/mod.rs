//! Event-driven simulation of the receive chain under an interference
//! scenario.
//!
//! Time advances from decision to decision. Device transients between
//! samples are evaluated in closed form, so a run is exact and
//! reproducible for a given scenario and seed.

mod analysis;
mod engine;
pub mod recipes;
mod scenario;

pub use analysis::{
    compare_adaptive_vs_nominal, energy, episodes, expected_vg, measure_adaptation_time, settled_vg_sweep,
    settled_vg_sweep_with, summarize, sweep_point_scenario, trace_csv, ComparisonReport, ComparisonRow,
    EnergyReport, Episode, EpisodeKind, OperatingPoint, Summary, SweepRow, SWEEP_OFF_DBM, TRACE_HEADER,
};
pub use engine::{run, run_with, DecisionRecord, Halt, Marker, MarkerKind, SimulationTrace, TimingReport, TraceRow};
pub use scenario::{Event, Scenario, TimingConfig, TwoToneSpec, SCENARIO_SCHEMA_VERSION};
