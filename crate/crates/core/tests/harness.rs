use std::fs;
use std::path::Path;

use sasoc::exec::Execution;
use sasoc::harness::{emit_plot_data, run_experiment, trace_verdict, ExperimentSpec, TraceTable};
use sasoc::model::fixtures;
use sasoc::optimizer::run_on_system;
use sasoc::ServiceSystem;

const SPEC: &str = r#"
config = "system.toml"
algorithms = ["G", "H", "W"]
policies = ["edf", "prio-pull"]
seeds = [4, 5]
output_dir = "OUT"
workers = 2
evaluation_replications = 3

[hyperparams]
R = 30
K = 2
horizon_days = 7
b0 = 0.25
d0 = 10.0
"#;

fn write_spec(dir: &Path, out: &str) -> ExperimentSpec {
    fs::write(dir.join("system.toml"), fixtures::two_by_two().to_toml_string()).unwrap();
    let path = dir.join(format!("{out}.toml"));
    fs::write(&path, SPEC.replace("OUT", out)).unwrap();
    ExperimentSpec::load(&path).unwrap()
}

#[test]
fn experiment_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_experiment(&write_spec(dir.path(), "a")).unwrap();
    let b = run_experiment(&write_spec(dir.path(), "b")).unwrap();
    assert!(a.all_succeeded() && b.all_succeeded());
    assert_eq!(a.trace_files.len(), 12);
    for (x, y) in a.trace_files.iter().zip(&b.trace_files) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
    assert_eq!(fs::read(&a.summary_file).unwrap(), fs::read(&b.summary_file).unwrap());
}

/// Each trace file equals a direct run with the same hyperparameters, and
/// the reported verdict is the one computed from that trace.
#[test]
fn summary_agrees_with_direct_runs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "out");
    let report = run_experiment(&spec).unwrap();
    let system = ServiceSystem::new(fixtures::two_by_two()).unwrap();
    for (summary, file) in report.runs.iter().zip(&report.trace_files) {
        let hp = summary.run.hyperparams(&spec.hyperparams);
        let direct = run_on_system(&system, &hp, Execution::Sequential).unwrap();
        assert_eq!(fs::read_to_string(file).unwrap(), direct.trace.to_csv_string());
        let rep = summary.result.as_ref().unwrap();
        assert_eq!(rep.theta, direct.worker_param().0);
        assert_eq!(rep.feasible, trace_verdict(&direct.trace));
        assert_eq!(rep.simulations, 2 * 2 * 30);
    }
    let summary = fs::read_to_string(&report.summary_file).unwrap();
    assert_eq!(summary.lines().count(), 1 + report.runs.len());
}

#[test]
fn plot_data_has_one_row_per_iteration_and_metric() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&write_spec(dir.path(), "out")).unwrap();
    let tables: Vec<TraceTable> = report.trace_files.iter().map(|f| TraceTable::read(f.file_stem().unwrap().to_string_lossy(), f).unwrap()).collect();
    let mut out = Vec::new();
    let rows = emit_plot_data(&tables, &["w_sum".to_string(), "cost".to_string()], &mut out).unwrap();
    assert_eq!(rows, 12 * 30 * 2);
    assert_eq!(String::from_utf8(out).unwrap().lines().count() as u64, rows + 1);
}
