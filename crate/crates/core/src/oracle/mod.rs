//! Ground truth for the optimizers: exhaustive search over small lattices,
//! closed-form synthetic problems, and a budget-matched baseline search.

mod baseline;
mod brute;
mod synthetic;

pub use baseline::{baseline_search, penalized, BaselineOptions, BaselineResult, BaselineTraceRow};
pub use brute::{
    brute_force_search, evaluate_point, lattice_size, mean_and_half_width, replication_seed, BruteForceError, BruteForceOptions,
    BruteForceResult, PointEstimate, MAX_LATTICE_POINTS,
};
pub use synthetic::{synthetic_eval, LinearConstraint, SyntheticError, SyntheticProblem};
