//! The optimization oracle `O_ε` for the non-robust problem at fixed noise.
//!
//! Given `u₁, …, u_m`, the oracle either returns `x ∈ D` with
//! `max_i f_i(x, u_i) ≤ ε`, or declares the problem infeasible, which is only
//! allowed when no `x ∈ D` has `max_i f_i(x, u_i) ≤ 0`.
//!
//! [`SubgradientFeasibilityOracle`] minimizes `φ(x) = max_i f_i(x, u_i)` by
//! projected subgradient descent with steps `η_k = D_x / (G_x √k)`. After `K`
//! steps the iterates certify
//!
//! ```text
//! φ* ≥ ( Σ_k φ(x_k) − D_x² / (2η_K) − ½ Σ_k η_k ‖g_k‖² ) / K,
//! ```
//!
//! which uses the observed subgradients only. Infeasibility is declared once
//! that bound is positive.

use nalgebra::DVector;

use crate::applications::lp::RobustLpInstance;
use crate::applications::sdp::RobustSdpInstance;
use crate::applications::CONSTANT_FLOOR;
use crate::error::{param, Error, Result};
use crate::linalg::spectral_norm;
use crate::problem::RobustProblem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub eps: f64,
    /// Bound on the subgradient norm of `φ` over the domain.
    pub gx: f64,
    /// Euclidean diameter of the domain.
    pub dx: f64,
    pub max_iter: usize,
}

impl OracleConfig {
    /// Config with the iteration cap `⌈(3 G_x D_x / ε)²⌉`, at which one of the two stopping rules always fires.
    pub fn new(eps: f64, gx: f64, dx: f64) -> Result<Self> {
        let mut c = OracleConfig {
            eps,
            gx,
            dx,
            max_iter: 1,
        };
        c.validate()?;
        c.max_iter = ((3.0 * gx * dx / eps).powi(2)).ceil().max(1.0) as usize;
        Ok(c)
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return param(format!("oracle eps must be positive, got {}", self.eps));
        }
        if !(self.gx > 0.0 && self.gx.is_finite() && self.dx > 0.0 && self.dx.is_finite()) {
            return param(format!("oracle constants must be positive, got Gx = {}, Dx = {}", self.gx, self.dx));
        }
        if self.max_iter == 0 {
            return param("oracle max_iter must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleAnswer {
    Feasible(DVector<f64>),
    /// No `x ∈ D` has `max_i f_i(x, u_i) ≤ 0`; `lower_bound` is a certified bound on `min_D φ`.
    Infeasible { lower_bound: f64 },
}

/// An optimization oracle `O_ε`.
pub trait OptimizationOracle {
    fn solve<P: RobustProblem + ?Sized>(&mut self, problem: &P, noise: &[DVector<f64>]) -> Result<OracleAnswer>;
}

/// `φ(x) = max_i f_i(x, u_i)` and the smallest maximizing index.
pub fn max_violation<P: RobustProblem + ?Sized>(problem: &P, x: &DVector<f64>, noise: &[DVector<f64>]) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, u) in noise.iter().enumerate() {
        let v = problem.constraint_value(i, x, u);
        // strict comparison keeps the smallest index on ties; NaN propagates
        if v > best.0 || v.is_nan() {
            best = (v, i);
            if v.is_nan() {
                break;
            }
        }
    }
    best
}

/// Projected subgradient descent on `max_i f_i(·, u_i)` with a certified lower bound.
#[derive(Debug, Clone)]
pub struct SubgradientFeasibilityOracle {
    pub config: OracleConfig,
    /// Iterations used by the most recent call.
    pub last_iterations: usize,
}

impl SubgradientFeasibilityOracle {
    pub fn new(config: OracleConfig) -> Result<Self> {
        config.validate()?;
        Ok(SubgradientFeasibilityOracle {
            config,
            last_iterations: 0,
        })
    }
}

impl OptimizationOracle for SubgradientFeasibilityOracle {
    fn solve<P: RobustProblem + ?Sized>(&mut self, problem: &P, noise: &[DVector<f64>]) -> Result<OracleAnswer> {
        subgradient_feasibility_oracle(problem, noise, &self.config).map(|(answer, k)| {
            self.last_iterations = k;
            answer
        })
    }
}

/// Runs the oracle from the domain's canonical member; returns the answer and the iteration count.
pub fn subgradient_feasibility_oracle<P: RobustProblem + ?Sized>(
    problem: &P,
    noise: &[DVector<f64>],
    config: &OracleConfig,
) -> Result<(OracleAnswer, usize)> {
    config.validate()?;
    if noise.len() != problem.num_constraints() {
        return Err(Error::Dimension(format!(
            "{} noise vectors for {} constraints",
            noise.len(),
            problem.num_constraints()
        )));
    }
    let domain = problem.domain();
    let mut x = domain.canonical_member();
    let (dx, gx) = (config.dx, config.gx);
    let mut sum_phi = 0.0;
    let mut sum_step_grad = 0.0;
    let mut best = f64::INFINITY;
    let mut lower_bound = f64::NEG_INFINITY;
    for k in 1..=config.max_iter {
        let (phi, i) = max_violation(problem, &x, noise);
        if !phi.is_finite() {
            return Err(Error::NonFinite { step: k });
        }
        if phi <= config.eps {
            return Ok((OracleAnswer::Feasible(x), k));
        }
        best = best.min(phi);
        let g = problem.decision_subgradient(i, &x, &noise[i]);
        let g_sq = g.norm_squared();
        if !g_sq.is_finite() {
            return Err(Error::NonFinite { step: k });
        }
        let eta = dx / (gx * (k as f64).sqrt());
        sum_phi += phi;
        sum_step_grad += eta * g_sq;
        lower_bound = (sum_phi - dx * dx / (2.0 * eta) - 0.5 * sum_step_grad) / k as f64;
        if lower_bound > 0.0 {
            return Ok((OracleAnswer::Infeasible { lower_bound }, k));
        }
        x = domain.project(&(&x - g * eta))?;
    }
    Err(Error::Budget {
        iterations: config.max_iter,
        best,
        lower_bound,
    })
}

/// Euclidean diameter of the domain, floored so that a single-point domain still gives a valid config.
fn domain_diameter<P: RobustProblem + ?Sized>(problem: &P) -> f64 {
    problem.domain().l2_diameter().max(CONSTANT_FLOOR)
}

/// `max ‖u‖₂` over the uncertainty set.
fn noise_reach<P: RobustProblem + ?Sized>(problem: &P) -> f64 {
    problem.uncertainty().center.norm() + problem.uncertainty().radius
}

/// The oracle for a robust LP: `G_x = max_i ‖a_i‖₂ + ‖P_i‖₂ max ‖u‖₂`, `D_x` the domain diameter.
pub fn oracle_for_lp(instance: &RobustLpInstance, eps: f64) -> Result<SubgradientFeasibilityOracle> {
    let reach = noise_reach(instance);
    let gx = instance
        .a
        .iter()
        .zip(&instance.p)
        .map(|(a, p)| a.norm() + spectral_norm(p) * reach)
        .fold(0.0, f64::max)
        .max(CONSTANT_FLOOR);
    SubgradientFeasibilityOracle::new(OracleConfig::new(eps, gx, domain_diameter(instance))?)
}

/// The oracle for a robust SDP:
/// `G_x = max_i ‖A_i‖_F + |s_i| σ max ‖u‖₂ + |c_i|`, `D_x` the domain diameter.
pub fn oracle_for_sdp(instance: &RobustSdpInstance, eps: f64) -> Result<SubgradientFeasibilityOracle> {
    let reach = noise_reach(instance);
    let sigma = instance.p.iter().map(|p| p.norm_squared()).sum::<f64>().sqrt();
    let gx = (0..instance.a.len())
        .map(|i| {
            let z = instance.z_coeff.as_ref().map_or(0.0, |c| c[i].abs());
            instance.a[i].norm() + instance.noise_scale[i].abs() * sigma * reach + z
        })
        .fold(0.0, f64::max)
        .max(CONSTANT_FLOOR);
    SubgradientFeasibilityOracle::new(OracleConfig::new(eps, gx, domain_diameter(instance))?)
}
