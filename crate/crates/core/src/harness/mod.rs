//! Batch experiment driver: run matrices, trace persistence, summaries and
//! plot data.

mod experiment;
mod metrics;
mod plot;

pub use experiment::{
    evaluate_utilization, run_experiment, trace_verdict, CsvTraceSink, ExperimentReport, ExperimentSpec, HarnessError, RunReport, RunSpec,
    RunSummary, VERDICT_WINDOW,
};
pub use metrics::{mean_utilization, pooled_utilization, weighted_utilization, UtilizationSummary};
pub use plot::{emit_plot_data, TraceTable};
