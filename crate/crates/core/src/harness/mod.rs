//! Experiment configuration, runs, sweeps and bound verification.

mod config;
mod demo;
mod report;
mod run;
mod sweep;
mod verify;

pub use config::{ClassSpec, CostSpec, EnvSpec, EtaPolicy, Expectation, Mode, RunConfig};
pub use demo::{
    demo_lower_bound, deterministic_learners, DeterministicOutcome, LowerBoundDemo,
    RandomizedOutcome,
};
pub use report::{
    evaluate_bounds, hoeffding_half_width, parse_trace, trace_csv, BoundCheck, BoundContext,
    Hindsight, RegretReport, SampledSummary, TraceRow, BOUND_TOLERANCE, ENV_FILE, REPORT_FILE,
    TRACE_FILE,
};
pub use run::{
    binary_episode, build_costs, fixed_eta, load_class, parse_costs, run, write_costs, RunOutput,
};
pub use sweep::{log_log_slope, sweep, SweepAxis, SweepResult, SweepRow};
pub use verify::{check_trace, verify_all, verify_suite, Suite, SuiteResult, VerifyOptions};
