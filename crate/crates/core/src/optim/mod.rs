//! Covariance-producing optimizers: water-filling over parallel channels,
//! WMMSE for the two-user MIMO interference channel, and capacity
//! maximization under an interference-temperature cap.

mod cognitive;
mod waterfill;
mod wmmse;

use serde::{Deserialize, Serialize};

pub use cognitive::{cr_capacity_opt, CrScenario, CrSolution, DEFAULT_CR_TOL};
pub use waterfill::waterfill;
pub use wmmse::{
    ic_effective_channel, ic_user_capacity, wmmse_ic, IcScenario, WmmseOptions, WmmseOutput,
};

/// Per-iteration record of an iterative solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub iterations: usize,
    pub objective_history: Vec<f64>,
    pub converged: bool,
    pub final_residual: f64,
}
