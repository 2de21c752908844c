use serde::{Deserialize, Serialize};

/// Per-run oracle accounting.
///
/// `grad_queries` is what the query model charges for `O_∇`;
/// `wall_grad_evals` is what the classical simulation actually evaluated.
/// The two coincide for the exact-gradient oracle and diverge for the
/// sampled one, whose charges follow the multi-sampling and norm-estimation
/// cost formulas.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    pub grad_queries: u64,
    pub proj_calls: u64,
    pub opt_calls: u64,
    pub wall_grad_evals: u64,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge_gradients(&mut self, n: u64) {
        self.grad_queries += n;
    }

    /// A subgradient entry both evaluated and charged.
    pub fn evaluate_and_charge(&mut self, n: u64) {
        self.grad_queries += n;
        self.wall_grad_evals += n;
    }

    pub fn record_evaluations(&mut self, n: u64) {
        self.wall_grad_evals += n;
    }

    pub fn record_projection(&mut self) {
        self.proj_calls += 1;
    }

    pub fn record_optimization(&mut self) {
        self.opt_calls += 1;
    }
}
