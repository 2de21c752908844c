use nalgebra::DVector;

use crate::ledger::QueryLedger;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Solution,
    Infeasible,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Solution => "solution",
            RunStatus::Infeasible => "infeasible",
        }
    }
}

/// Result of a meta-algorithm run: the averaged iterate, or the noise
/// assignment at which the optimization oracle declared infeasibility.
#[derive(Debug, Clone)]
pub enum RunResult {
    Solution { x_bar: DVector<f64> },
    Infeasible { witness: Vec<DVector<f64>> },
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub result: RunResult,
    pub ledger: QueryLedger,
    /// Iterations completed, equal to the number of optimization-oracle calls.
    pub iterations_used: usize,
    /// The planned horizon `T`.
    pub horizon: usize,
    /// `max_t max_i f_i(x⁽ᵗ⁾, u_i⁽ᵗ⁾)` over the oracle outputs, at the noise they were computed for.
    pub max_iterate_violation: f64,
}

impl RunOutcome {
    pub fn status(&self) -> RunStatus {
        match self.result {
            RunResult::Solution { .. } => RunStatus::Solution,
            RunResult::Infeasible { .. } => RunStatus::Infeasible,
        }
    }

    pub fn x_bar(&self) -> Option<&DVector<f64>> {
        match &self.result {
            RunResult::Solution { x_bar } => Some(x_bar),
            RunResult::Infeasible { .. } => None,
        }
    }

    pub fn witness(&self) -> Option<&[DVector<f64>]> {
        match &self.result {
            RunResult::Solution { .. } => None,
            RunResult::Infeasible { witness } => Some(witness),
        }
    }
}
