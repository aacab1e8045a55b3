use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use sasoc::exec::Execution;
use sasoc::harness::{emit_plot_data, run_experiment, CsvTraceSink, ExperimentSpec, TraceTable};
use sasoc::model::WorkerParam;
use sasoc::optimizer::{run_with_sink, simulation_model, Algorithm, Hyperparams};
use sasoc::oracle::{brute_force_search, BruteForceOptions};
use sasoc::sim::{eventlog, simulate_period, Policy, SimOptions};
use sasoc::{ServiceSystem, SystemConfig};

/// Staffing optimization for service systems by simultaneous perturbation
/// stochastic approximation.
#[derive(Parser)]
#[command(name = "sasoc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a service-system configuration and print its dimensions.
    Validate { config: PathBuf },
    /// Simulate one replication and optionally write its event log.
    Simulate(SimulateArgs),
    /// Run one optimizer and write its trace.
    Optimize(OptimizeArgs),
    /// Run an experiment matrix described by a TOML spec.
    Experiment {
        spec: PathBuf,
        /// Override the spec's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Evaluate every staffing vector of a small lattice.
    Bruteforce(BruteforceArgs),
    /// Convert trace CSV files into long-format plot data.
    Plotdata(PlotdataArgs),
}

#[derive(Args)]
struct SimulateArgs {
    config: PathBuf,
    /// Staffing vector, one count per (shift, skill) cell in shift-major order.
    #[arg(long)]
    theta: String,
    #[arg(long, default_value = "edf")]
    policy: Policy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 30)]
    horizon_days: u32,
    /// Preempt lower-ranked in-service work when a higher-ranked SR waits.
    #[arg(long)]
    preemption: bool,
    /// Write the tab-separated event log here (`-` for stdout).
    #[arg(long)]
    events: Option<PathBuf>,
}

#[derive(Args, Default)]
struct HyperparamArgs {
    /// TOML file with hyperparameters; flags override its values.
    #[arg(long)]
    params: Option<PathBuf>,
    /// G, H or W.
    #[arg(long)]
    algorithm: Option<Algorithm>,
    /// Iterations.
    #[arg(short = 'R', long = "R")]
    iterations: Option<u64>,
    /// Replications per iteration and parameter setting.
    #[arg(short = 'K', long = "K")]
    replications: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    delta1: Option<f64>,
    #[arg(long)]
    delta2: Option<f64>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    a0: Option<f64>,
    #[arg(long)]
    b0: Option<f64>,
    #[arg(long)]
    d0: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    policy: Option<Policy>,
    #[arg(long)]
    horizon_days: Option<u32>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    lambda_init: Option<f64>,
    /// Starting θ̄, comma separated.
    #[arg(long, value_delimiter = ',')]
    theta_init: Option<Vec<f64>>,
}

impl HyperparamArgs {
    fn resolve(&self) -> Result<Hyperparams> {
        let mut hp = match &self.params {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => Hyperparams::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = &self.$field { hp.$field = v.clone(); } )* };
        }
        set!(algorithm, iterations, replications, delta, delta1, delta2, zeta, epsilon, omega, a0, b0, d0, seed, policy, horizon_days, r, s, lambda_init);
        if let Some(t) = &self.theta_init {
            hp.theta_init = Some(t.clone());
        }
        hp.validate()?;
        Ok(hp)
    }
}

#[derive(Args)]
struct OptimizeArgs {
    config: PathBuf,
    #[command(flatten)]
    hyper: HyperparamArgs,
    /// Trace CSV output (`-` for stdout).
    #[arg(long, default_value = "-")]
    trace: PathBuf,
    /// Evaluate replications on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct BruteforceArgs {
    config: PathBuf,
    #[arg(long, default_value_t = 10)]
    replications: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "edf")]
    policy: Policy,
    #[arg(long, default_value_t = 30)]
    horizon_days: u32,
    /// Table CSV output (`-` for stdout).
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Args)]
struct PlotdataArgs {
    /// Trace CSV files; the file stem becomes the run id.
    #[arg(required = true)]
    traces: Vec<PathBuf>,
    /// Restrict to these columns (repeatable); all by default.
    #[arg(long = "metric")]
    metrics: Vec<String>,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

fn output(path: &Path) -> Result<Box<dyn Write>> {
    if path == Path::new("-") {
        Ok(Box::new(io::stdout().lock()))
    } else {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Box::new(BufWriter::new(f)))
    }
}

fn load_system(path: &Path) -> Result<ServiceSystem> {
    let config = SystemConfig::load(path).map_err(|e| anyhow::anyhow!("[{}] {e}", e.code()))?;
    ServiceSystem::new(config).map_err(|e| anyhow::anyhow!("[{}] {e}", e.code()))
}

fn validate(config: &Path) -> Result<()> {
    let system = load_system(config)?;
    let weights = system.workload_weights().map_err(|e| anyhow::anyhow!("[{}] {e}", e.code()))?;
    println!("ok: {}", config.display());
    println!("customers: {}", system.n_customers);
    println!("shifts: {}", system.n_shifts);
    println!("skills: {}", system.n_skills);
    println!("priorities: {}", system.n_priorities);
    println!("dimension: {}", system.dimension());
    println!("w_max: {}", system.w_max());
    let points = (system.w_max() as u128 + 1).checked_pow(system.dimension() as u32);
    println!("lattice_points: {}", points.map_or_else(|| "overflow".to_string(), |p| p.to_string()));
    println!("sla_constraints: {}", system.constraint_pairs().len());
    println!("workload_weights: {}", weights.as_slice().iter().map(|w| format!("{w:.4}")).collect::<Vec<_>>().join(" "));
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let system = load_system(&args.config)?;
    let theta: WorkerParam = args.theta.parse().map_err(|e| anyhow::anyhow!("--theta: {e}"))?;
    let opts = SimOptions {
        horizon_days: args.horizon_days,
        preemption: args.preemption,
        record_events: args.events.is_some(),
        ..SimOptions::default()
    };
    let out = simulate_period(&system, &theta.0, args.policy, &opts, args.seed)?;
    if let (Some(path), Some(events)) = (&args.events, &out.events) {
        let mut w = output(path)?;
        w.write_all(eventlog::render(events).as_bytes())?;
        w.flush()?;
    }
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
    let join = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
    eprintln!("theta: {theta}");
    eprintln!("feasible: {}", out.state.feasible);
    eprintln!("drained: {}", out.drained);
    eprintln!("end_minutes: {}", out.end_minutes);
    eprintln!("utilizations: {}", fmt(&out.state.utilizations));
    eprintln!("sla_attainment: {}", fmt(&out.state.sla_attainment));
    eprintln!("arrivals: {}", join(&out.arrivals));
    eprintln!("closed: {}", join(&out.closed));
    eprintln!("dropped: {}", join(&out.dropped));
    eprintln!("max_queue_lengths: {}", out.max_queue_lengths.iter().map(u32::to_string).collect::<Vec<_>>().join(" "));
    Ok(())
}

fn optimize(args: &OptimizeArgs) -> Result<()> {
    let system = load_system(&args.config)?;
    let hp = args.hyper.resolve()?;
    let model = simulation_model(&system, &hp)?;
    let mut sink = CsvTraceSink::new(output(&args.trace)?, system.dimension(), model.targets.entries.len())?;
    let exec = if args.sequential { Execution::Sequential } else { Execution::Parallel };
    let out = run_with_sink(&model, &hp, exec, &mut sink)?;
    let theta = out.worker_param();
    eprintln!("algorithm: {}", hp.algorithm);
    eprintln!("theta: {theta}");
    eprintln!("w_sum: {}", theta.w_sum());
    eprintln!("simulations: {}", out.simulations);
    Ok(())
}

fn experiment(spec: &Path, output_dir: Option<&Path>) -> Result<()> {
    let mut spec = ExperimentSpec::load(spec)?;
    if let Some(dir) = output_dir {
        spec.output_dir = dir.to_path_buf();
    }
    let report = run_experiment(&spec)?;
    for r in &report.runs {
        match &r.result {
            Ok(rep) => eprintln!("{}: w_sum {} feasible {}", r.run.id(), rep.w_sum, rep.feasible),
            Err(e) => eprintln!("{}: FAILED: {e}", r.run.id()),
        }
    }
    eprintln!("summary: {}", report.summary_file.display());
    if !report.all_succeeded() {
        bail!("some runs failed");
    }
    Ok(())
}

fn bruteforce(args: &BruteforceArgs) -> Result<()> {
    let system = load_system(&args.config)?;
    let hp = Hyperparams { policy: args.policy, horizon_days: args.horizon_days, ..Hyperparams::default() };
    let model = simulation_model(&system, &hp)?;
    let opts = BruteForceOptions { replications: args.replications, seed: args.seed, execution: Execution::Parallel };
    let result = brute_force_search(&model, &opts)?;
    let mut w = output(&args.out)?;
    result.write_csv(&mut w)?;
    w.flush()?;
    match result.best_point() {
        Some(p) => eprintln!("best: {} (w_sum {}, J {:.4} ± {:.4})", WorkerParam(p.theta.clone()), p.w_sum(), p.j_mean, p.j_half_width),
        None => eprintln!("best: none (no feasible staffing)"),
    }
    Ok(())
}

fn plotdata(args: &PlotdataArgs) -> Result<()> {
    let tables = args
        .traces
        .iter()
        .map(|p| {
            let id = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
            TraceTable::read(id, p).with_context(|| format!("reading {}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut w = output(&args.out)?;
    let n = emit_plot_data(&tables, &args.metrics, &mut w)?;
    w.flush()?;
    eprintln!("rows: {n}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { config } => validate(config),
        Command::Simulate(a) => simulate(a),
        Command::Optimize(a) => optimize(a),
        Command::Experiment { spec, output_dir } => experiment(spec, output_dir.as_deref()),
        Command::Bruteforce(a) => bruteforce(a),
        Command::Plotdata(a) => plotdata(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
