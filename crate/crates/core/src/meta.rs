//! Online dual-subgradient meta-algorithms for robust feasibility.
//!
//! The noise player runs projected stochastic subgradient ascent on each
//! `u_i` while the decision player answers every noise assignment with the
//! optimization oracle. After `T` rounds the average `x̄ = (1/T) Σ x⁽ᵗ⁾` is
//! `3ε`-robust-feasible with probability at least `1 − δ`, unless some
//! oracle call declared infeasibility, in which case that noise assignment
//! witnesses infeasibility of the robust problem.

use nalgebra::DVector;
use rand::Rng;

use crate::error::{param, Error, Result};
use crate::inner_oracle::{max_violation, OptimizationOracle, OracleAnswer};
use crate::ledger::QueryLedger;
use crate::outcome::{RunOutcome, RunResult};
use crate::problem::{compute_horizon, compute_step_size, effective_g2sq, Bounds, NoiseMemory, RobustProblem};
use crate::projections::SetDescriptor;
use crate::sampling::{ExactGradientOracle, GradientOracle, PerturbationMode, QueryCostModel, SampledGradientOracle};

/// Norm-estimation tolerance used by the sampled variant.
pub const SAMPLED_NU: f64 = 0.25;

/// Horizon and step schedule of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub horizon: usize,
    /// Bounds with the `ν` the step sizes use.
    pub bounds: Bounds,
    /// `G̃₂` in `η = D / ((1 − ν) G̃₂ √(t + 1))`.
    pub step_g2: f64,
}

impl Schedule {
    /// Schedule for a gradient oracle with second moment at most `G̃₂²`.
    pub fn exact(bounds: &Bounds, eff_g2: f64, m: usize, eps: f64, delta: f64) -> Result<Self> {
        bounds.validate_for(m)?;
        Ok(Schedule {
            horizon: compute_horizon(bounds, eff_g2 * eff_g2, m, eps, delta)?,
            bounds: bounds.clone(),
            step_g2: eff_g2,
        })
    }

    /// Schedule of the `s`-sample variant: `ν = 1/4`, horizon constant
    /// `(225/16) D² (G₂² + (G₁G∞ − G₂²)/s)`, step `4D / (3√(t + 1)) · (G₂² + (G₁G∞ − G₂²)/s)^{-1/2}`.
    pub fn sampled(bounds: &Bounds, s: usize, m: usize, eps: f64, delta: f64) -> Result<Self> {
        bounds.validate_for(m)?;
        let b = bounds.with_nu(SAMPLED_NU)?;
        let eff = effective_g2sq(&b, s)?;
        let inflated = (1.0 + SAMPLED_NU).powi(2) * eff;
        Ok(Schedule {
            horizon: compute_horizon(&b, inflated, m, eps, delta)?,
            bounds: b,
            step_g2: eff.sqrt(),
        })
    }

    /// Step size for the zero-based iteration `t`.
    pub fn step(&self, t: usize) -> f64 {
        compute_step_size(t, &self.bounds, self.step_g2)
    }
}

/// Runs the dual-subgradient loop for `schedule.horizon` rounds.
pub fn run_dual_subgradient<P, G, O, R>(
    problem: &P,
    schedule: &Schedule,
    g_oracle: &mut G,
    opt_oracle: &mut O,
    rng: &mut R,
) -> Result<RunOutcome>
where
    P: RobustProblem + ?Sized,
    G: GradientOracle,
    O: OptimizationOracle,
    R: Rng + ?Sized,
{
    let m = problem.num_constraints();
    let uncertainty = problem.uncertainty();
    if uncertainty.dimension() != problem.noise_dim() {
        return Err(Error::Dimension("uncertainty set does not match the noise dimension".into()));
    }
    let domain = problem.domain();
    domain.validate()?;
    let mut noise = NoiseMemory::centered(m, uncertainty);
    let mut x = domain.canonical_member();
    let mut ledger = QueryLedger::new();
    let mut sum_x = DVector::zeros(x.len());
    let mut max_iterate_violation = f64::NEG_INFINITY;
    let wrap = |t: usize| move |e: Error| Error::Oracle { iteration: t, source: Box::new(e) };

    for t in 0..schedule.horizon {
        let grads = g_oracle.query(problem, &x, &mut noise, &mut ledger, rng).map_err(wrap(t))?;
        let eta = schedule.step(t);
        for (i, g) in grads.updates {
            let ascended = noise.read(i) + g * eta;
            let projected = uncertainty.project(&ascended);
            ledger.record_projection();
            noise.write(i, projected);
        }
        ledger.record_optimization();
        match opt_oracle.solve(problem, noise.rows()).map_err(wrap(t))? {
            OracleAnswer::Infeasible { .. } => {
                return Ok(RunOutcome {
                    result: RunResult::Infeasible {
                        witness: noise.rows().to_vec(),
                    },
                    ledger,
                    iterations_used: t + 1,
                    horizon: schedule.horizon,
                    max_iterate_violation,
                });
            }
            OracleAnswer::Feasible(next) => {
                if next.len() != sum_x.len() {
                    return Err(Error::Oracle {
                        iteration: t,
                        source: Box::new(Error::Dimension("oracle returned a point of the wrong length".into())),
                    });
                }
                let (phi, _) = max_violation(problem, &next, noise.rows());
                max_iterate_violation = max_iterate_violation.max(phi);
                sum_x += &next;
                x = next;
            }
        }
    }
    Ok(RunOutcome {
        result: RunResult::Solution {
            x_bar: sum_x / schedule.horizon as f64,
        },
        ledger,
        iterations_used: schedule.horizon,
        horizon: schedule.horizon,
        max_iterate_violation,
    })
}

/// Dual-subgradient robust feasibility with a pluggable gradient oracle.
///
/// The horizon and steps use `G̃₂ = bounds.g2` and `ν = bounds.nu`, which
/// matches [`ExactGradientOracle`]; oracles with a larger second moment need
/// [`run_dual_subgradient`] with their own [`Schedule`].
pub fn solve_robust<P, G, O, R>(
    problem: &P,
    bounds: &Bounds,
    g_oracle: &mut G,
    opt_oracle: &mut O,
    eps: f64,
    delta: f64,
    rng: &mut R,
) -> Result<RunOutcome>
where
    P: RobustProblem + ?Sized,
    G: GradientOracle,
    O: OptimizationOracle,
    R: Rng + ?Sized,
{
    let schedule = Schedule::exact(bounds, bounds.g2, problem.num_constraints(), eps, delta)?;
    run_dual_subgradient(problem, &schedule, g_oracle, opt_oracle, rng)
}

/// [`solve_robust`] with exact gradients.
pub fn solve_robust_exact<P, O, R>(
    problem: &P,
    bounds: &Bounds,
    opt_oracle: &mut O,
    eps: f64,
    delta: f64,
    rng: &mut R,
) -> Result<RunOutcome>
where
    P: RobustProblem + ?Sized,
    O: OptimizationOracle,
    R: Rng + ?Sized,
{
    let b = bounds.with_nu(0.0)?;
    solve_robust(problem, &b, &mut ExactGradientOracle, opt_oracle, eps, delta, rng)
}

/// Parameters of the `s`-sample variant.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledOptions {
    pub s: usize,
    pub cost: QueryCostModel,
    pub mode: PerturbationMode,
    /// Simulate subroutine failures with probability `δ/(3T)` each; a failed round uses `g = 0`.
    pub simulate_failures: bool,
}

impl SampledOptions {
    pub fn new(s: usize) -> Self {
        SampledOptions {
            s,
            cost: QueryCostModel::default(),
            mode: PerturbationMode::Exact,
            simulate_failures: false,
        }
    }
}

/// Robust feasibility with the ℓ1-sampling gradient oracle; only sampled
/// constraints have their noise vector updated.
pub fn solve_robust_sampled<P, O, R>(
    problem: &P,
    bounds: &Bounds,
    options: &SampledOptions,
    opt_oracle: &mut O,
    eps: f64,
    delta: f64,
    rng: &mut R,
) -> Result<RunOutcome>
where
    P: RobustProblem + ?Sized,
    O: OptimizationOracle,
    R: Rng + ?Sized,
{
    options.cost.validate()?;
    let schedule = Schedule::sampled(bounds, options.s, problem.num_constraints(), eps, delta)?;
    let delta_iter = delta / (3.0 * schedule.horizon as f64);
    let mut g_oracle = SampledGradientOracle::new(options.s, options.mode, options.cost, delta_iter);
    g_oracle.nu = SAMPLED_NU;
    g_oracle.simulate_failures = options.simulate_failures;
    run_dual_subgradient(problem, &schedule, &mut g_oracle, opt_oracle, rng)
}

/// The problem with the objective constraint `f₀(x) − z ≤ 0` placed at index 0.
///
/// The objective carries no noise; its noise vector is inert.
pub struct ShiftedObjective<'a, P: ?Sized, F0, G0> {
    pub inner: &'a P,
    pub objective: F0,
    pub objective_subgradient: G0,
    pub z: f64,
}

impl<P, F0, G0> RobustProblem for ShiftedObjective<'_, P, F0, G0>
where
    P: RobustProblem + ?Sized,
    F0: Fn(&DVector<f64>) -> f64,
    G0: Fn(&DVector<f64>) -> DVector<f64>,
{
    fn num_constraints(&self) -> usize {
        self.inner.num_constraints() + 1
    }

    fn decision_dim(&self) -> usize {
        self.inner.decision_dim()
    }

    fn noise_dim(&self) -> usize {
        self.inner.noise_dim()
    }

    fn domain(&self) -> &SetDescriptor {
        self.inner.domain()
    }

    fn uncertainty(&self) -> &crate::problem::UncertaintySet {
        self.inner.uncertainty()
    }

    fn constraint_value(&self, i: usize, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        if i == 0 {
            (self.objective)(x) - self.z
        } else {
            self.inner.constraint_value(i - 1, x, u)
        }
    }

    fn noise_gradient_entry(&self, i: usize, j: usize, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.inner.noise_gradient_entry(i - 1, j, x, u)
        }
    }

    fn noise_gradient(&self, i: usize, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        if i == 0 {
            DVector::zeros(self.noise_dim())
        } else {
            self.inner.noise_gradient(i - 1, x, u)
        }
    }

    fn decision_subgradient(&self, i: usize, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        if i == 0 {
            (self.objective_subgradient)(x)
        } else {
            self.inner.decision_subgradient(i - 1, x, u)
        }
    }
}

#[derive(Debug, Clone)]
pub struct BisectionResult {
    /// Midpoint of the final bracket.
    pub z: f64,
    /// Solution of the last feasible probe.
    pub x: DVector<f64>,
    pub z_lo: f64,
    pub z_hi: f64,
    pub probes: usize,
    pub ledger: QueryLedger,
}

/// Per-probe failure budget: `δ` split over the bisection steps and the two bracket checks.
pub fn probe_budget(z_lo: f64, z_hi: f64, tol: f64, delta: f64) -> f64 {
    let steps = ((z_hi - z_lo) / tol).log2().ceil().max(0.0);
    delta / (steps + 2.0)
}

/// Minimizes the smallest `z` for which `probe(z, δ')` is feasible.
///
/// `probe` solves the robust feasibility problem at level `z` and must be
/// monotone: infeasible below the optimum, feasible above it. The bracket
/// is verified first: `z_lo` must be infeasible and `z_hi` feasible.
pub fn optimize_via_bisection<F>(mut z_lo: f64, mut z_hi: f64, tol: f64, delta: f64, mut probe: F) -> Result<BisectionResult>
where
    F: FnMut(f64, f64) -> Result<RunOutcome>,
{
    if !(tol > 0.0) {
        return param(format!("bisection tolerance must be positive, got {tol}"));
    }
    if !(z_lo <= z_hi) || !z_lo.is_finite() || !z_hi.is_finite() {
        return Err(Error::Bracket(format!("[{z_lo}, {z_hi}] is not a finite interval")));
    }
    let budget = probe_budget(z_lo, z_hi, tol, delta);
    let mut ledger = QueryLedger::new();
    let absorb = |o: &RunOutcome, ledger: &mut QueryLedger| {
        ledger.grad_queries += o.ledger.grad_queries;
        ledger.proj_calls += o.ledger.proj_calls;
        ledger.opt_calls += o.ledger.opt_calls;
        ledger.wall_grad_evals += o.ledger.wall_grad_evals;
    };

    let lo = probe(z_lo, budget)?;
    absorb(&lo, &mut ledger);
    if lo.x_bar().is_some() {
        return Err(Error::Bracket(format!("problem is feasible at the lower end z = {z_lo}")));
    }
    let hi = probe(z_hi, budget)?;
    absorb(&hi, &mut ledger);
    let mut x = match hi.x_bar() {
        Some(x) => x.clone(),
        None => return Err(Error::Bracket(format!("problem is infeasible at the upper end z = {z_hi}"))),
    };
    let mut probes = 2;
    while z_hi - z_lo > tol {
        let mid = 0.5 * (z_lo + z_hi);
        let out = probe(mid, budget)?;
        absorb(&out, &mut ledger);
        probes += 1;
        match out.x_bar() {
            Some(xm) => {
                z_hi = mid;
                x = xm.clone();
            }
            None => z_lo = mid,
        }
    }
    Ok(BisectionResult {
        z: 0.5 * (z_lo + z_hi),
        x,
        z_lo,
        z_hi,
        probes,
        ledger,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::applications::lp::RobustLpInstance;
    use crate::inner_oracle::{OracleConfig, SubgradientFeasibilityOracle};
    use crate::outcome::RunStatus;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dv(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn lp(a: Vec<DVector<f64>>, b: Vec<f64>, p: Vec<DMatrix<f64>>) -> RobustLpInstance {
        let n = a[0].len();
        RobustLpInstance::new(a, dv(&b), p, SetDescriptor::L1Ball { dim: n, radius: 1.0 }).unwrap()
    }

    fn tiny_bounds() -> Bounds {
        Bounds::new(2.0, 1e-12, 1e-12, 1e-12, 1e-12, 0.0).unwrap()
    }

    #[test]
    fn sampled_schedule_constants() {
        // G₂ = G₁ = G∞ = 1: eff = 1, horizon constant 225/16 · 4
        let b = Bounds::new(2.0, 1e-9, 1.0, 1.0, 1.0, 0.0).unwrap();
        let s = Schedule::sampled(&b, 1, 1, 1.0, 0.5).unwrap();
        assert_eq!(s.horizon, 57);
        assert!((s.step(0) - 8.0 / 3.0).abs() < 1e-12);
        assert!((s.step(3) - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn noise_free_feasible_problem() {
        let inst = lp(vec![dv(&[1.0, 0.0])], vec![0.0], vec![DMatrix::zeros(2, 1)]);
        let mut oracle = SubgradientFeasibilityOracle::new(OracleConfig::new(0.05, 1.0, 2.0).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = solve_robust_exact(&inst, &tiny_bounds(), &mut oracle, 0.05, 0.1, &mut rng).unwrap();
        let x = out.x_bar().unwrap();
        assert!(x[0] <= 0.05);
        assert_eq!(out.ledger.opt_calls as usize, out.iterations_used);
    }

    #[test]
    fn infeasible_at_first_call() {
        let inst = lp(
            vec![dv(&[1.0, 0.0]), dv(&[-1.0, 0.0])],
            vec![-1.0, -1.0],
            vec![DMatrix::zeros(2, 1), DMatrix::zeros(2, 1)],
        );
        let mut oracle = SubgradientFeasibilityOracle::new(OracleConfig::new(0.05, 1.0, 2.0).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = solve_robust_exact(&inst, &tiny_bounds(), &mut oracle, 0.05, 0.1, &mut rng).unwrap();
        assert_eq!(out.status(), RunStatus::Infeasible);
        assert_eq!(out.iterations_used, 1);
        assert_eq!(out.ledger.opt_calls, 1);
        let out = solve_robust_sampled(&inst, &tiny_bounds(), &SampledOptions::new(2), &mut oracle, 0.05, 0.1, &mut rng)
            .unwrap();
        assert_eq!(out.status(), RunStatus::Infeasible);
        assert_eq!(out.ledger.opt_calls, 1);
    }

    #[test]
    fn single_constraint_projects_once_per_round() {
        let p = DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.0, 0.3]);
        let inst = lp(vec![dv(&[0.0, 0.0])], vec![0.5], vec![p]);
        let b = crate::applications::lp::lp_constants(&inst).unwrap();
        let mut oracle = SubgradientFeasibilityOracle::new(OracleConfig::new(0.1, 1.0, 2.0).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let out = solve_robust_sampled(&inst, &b, &SampledOptions::new(3), &mut oracle, 0.1, 0.1, &mut rng).unwrap();
        assert!(out.ledger.proj_calls <= out.iterations_used as u64);
        assert_eq!(out.status(), RunStatus::Solution);
    }

    #[test]
    fn bisection_linear_objective() {
        // min x₁ over the ℓ1 ball, no other constraints
        let inst = lp(vec![dv(&[0.0, 0.0])], vec![1.0], vec![DMatrix::zeros(2, 1)]);
        // oracle tolerance eps/4 and bracket width eps/2 keep the midpoint within eps
        let eps = 0.01;
        let res = optimize_via_bisection(-2.0, 2.0, eps / 2.0, 0.1, |z, d| {
            let shifted = ShiftedObjective {
                inner: &inst,
                objective: |x: &DVector<f64>| x[0],
                objective_subgradient: |_: &DVector<f64>| dv(&[1.0, 0.0]),
                z,
            };
            let mut oracle = SubgradientFeasibilityOracle::new(OracleConfig::new(eps / 4.0, 1.0, 2.0)?)?;
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            solve_robust_exact(&shifted, &tiny_bounds(), &mut oracle, eps / 4.0, d, &mut rng)
        })
        .unwrap();
        assert!((res.z + 1.0).abs() <= eps + 1e-12, "z = {}", res.z);
    }

    #[test]
    fn bisection_constant_objective() {
        let inst = lp(vec![dv(&[0.0, 0.0])], vec![1.0], vec![DMatrix::zeros(2, 1)]);
        let eps = 0.01;
        let res = optimize_via_bisection(0.0, 10.0, eps / 2.0, 0.1, |z, d| {
            let shifted = ShiftedObjective {
                inner: &inst,
                objective: |_: &DVector<f64>| 5.0,
                objective_subgradient: |_: &DVector<f64>| DVector::zeros(2),
                z,
            };
            let mut oracle = SubgradientFeasibilityOracle::new(OracleConfig::new(eps / 4.0, 1.0, 2.0)?)?;
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            solve_robust_exact(&shifted, &tiny_bounds(), &mut oracle, eps / 4.0, d, &mut rng)
        })
        .unwrap();
        assert!((res.z - 5.0).abs() <= eps + 1e-12);
    }

    #[test]
    fn bisection_rejects_bad_brackets() {
        let inst = lp(vec![dv(&[0.0, 0.0])], vec![1.0], vec![DMatrix::zeros(2, 1)]);
        let run = |z: f64, d: f64| {
            let shifted = ShiftedObjective {
                inner: &inst,
                objective: |x: &DVector<f64>| x[0],
                objective_subgradient: |_: &DVector<f64>| dv(&[1.0, 0.0]),
                z,
            };
            let mut oracle = SubgradientFeasibilityOracle::new(OracleConfig::new(0.01, 1.0, 2.0)?)?;
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            solve_robust_exact(&shifted, &tiny_bounds(), &mut oracle, 0.01, d, &mut rng)
        };
        assert!(matches!(optimize_via_bisection(0.0, 2.0, 0.01, 0.1, run), Err(Error::Bracket(_))));
        assert!(matches!(optimize_via_bisection(-3.0, -2.0, 0.01, 0.1, run), Err(Error::Bracket(_))));
    }

    #[test]
    fn probe_budget_splits_delta() {
        // ⌈log₂ 400⌉ = 9 steps plus two bracket checks
        assert!((probe_budget(-2.0, 2.0, 0.01, 0.11) - 0.01).abs() < 1e-15);
    }
}
