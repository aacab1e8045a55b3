//! Simulation-optimization of service-system staffing.
//!
//! A service system (customers, shifts, skill levels, priorities, hourly
//! arrival rates, lognormal service times and SLA targets) is simulated as a
//! discrete-event queueing system. The resulting per-period cost and
//! constraint samples drive a family of multi-timescale simultaneous
//! perturbation optimizers that search for the smallest, best-utilized
//! staffing vector meeting all SLAs:
//!
//! * [`optimizer::Algorithm::Gradient`]: first-order SPSA primal descent
//!   with Lagrange-multiplier dual ascent.
//! * [`optimizer::Algorithm::Newton`]: SPSA gradient and Hessian estimates,
//!   Newton direction through a projected, inverted Hessian.
//! * [`optimizer::Algorithm::Woodbury`]: the Newton variant with the inverse
//!   Hessian maintained directly by rank-one Woodbury updates.
//!
//! Replications inside one optimizer iteration, and lattice points in the
//! brute-force oracle, are evaluated data-parallel through [`exec`] when the
//! `parallel` feature (on by default) is enabled.

pub mod exec;
pub mod harness;
pub mod model;
pub mod optimizer;
pub mod oracle;
pub mod projection;
pub mod rng;
pub mod sim;

pub use model::{ConfigError, ContinuousParam, ServiceSystem, SystemConfig, WorkerParam, WorkloadWeights};
pub use optimizer::{Algorithm, Hyperparams, RunTrace};
pub use sim::{Policy, SimOutcome, SystemState};
