//! Discrete-event simulation of the service system.

pub mod dispatch;
mod engine;
pub mod eventlog;
pub mod feasibility;
pub mod service;
pub mod state;

pub use dispatch::{dispatch_edf, dispatch_prio_pull, Policy, UnknownPolicy};
pub use engine::{simulate_period, ServiceRequest, SimError, SimOptions, SimOutcome};
pub use feasibility::{queue_feasibility, GrowthTest};
pub use service::{sample_service_time, TruncatedLogNormal};
pub use state::{constraint_values, single_stage_cost, ConstraintValues, CostWeights, SlaTargets, SystemState};
