//! Invariant checker, reference model, differential fuzzer and cost
//! measurement.

mod check;
mod costs;
mod fuzz;
mod oracle;
mod trace;

pub use check::{degree_bound, Failure, Invariant, InvariantReport};
pub use costs::{
    fit_log_envelope, measure_costs, random_workload, summarize, CostRow, CostSummary, LogFit, OpEnvelope, CSV_HEADER,
};
pub use fuzz::{
    differential_fuzz, effective_check_every, generate, minimize, run_trace, FuzzConfig, FuzzFailure, Mismatch, Mix,
    RunOptions, RunResult, Verdict,
};
pub use oracle::{oracle_apply, Oracle, Output};
pub use trace::{Op, OpTrace, TraceError};
