//! Static service-system description: configuration, staffing lattice and
//! derived workload weights.

pub mod config;
pub mod fixtures;
mod params;
mod system;

pub use config::{ArrivalProfile, ConfigError, SystemConfig};
pub use params::{ContinuousParam, WorkerParam};
pub use system::{CustomerModel, MixClass, ServiceSystem, SlaTarget, WorkloadError, WorkloadWeights};

/// Hour-of-week slots; arrival rates are stationary within each slot.
pub const HOURS_PER_WEEK: usize = 168;
