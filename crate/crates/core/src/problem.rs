//! The robust feasibility problem model: uncertainty sets, the noise memory,
//! and the [`RobustProblem`] trait that instances implement.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::projections::{project_ball, SetDescriptor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UncertaintyKind {
    EuclideanBall,
}

/// The set `U ⊆ ℝᵈ` every noise vector must stay in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintySet {
    pub kind: UncertaintyKind,
    pub center: DVector<f64>,
    pub radius: f64,
}

impl UncertaintySet {
    pub fn ball(center: DVector<f64>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return param("uncertainty radius must be nonnegative");
        }
        Ok(UncertaintySet {
            kind: UncertaintyKind::EuclideanBall,
            center,
            radius,
        })
    }

    /// `{u : ‖u‖₂ ≤ 1}` in dimension `dim`.
    pub fn unit_ball(dim: usize) -> Self {
        UncertaintySet {
            kind: UncertaintyKind::EuclideanBall,
            center: DVector::zeros(dim),
            radius: 1.0,
        }
    }

    pub fn dimension(&self) -> usize {
        self.center.len()
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        match self.kind {
            UncertaintyKind::EuclideanBall => project_ball(v, &self.center, self.radius),
        }
    }

    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> bool {
        v.len() == self.dimension() && (v - &self.center).norm() <= self.radius + tol
    }

    pub fn as_descriptor(&self) -> SetDescriptor {
        SetDescriptor::EuclideanBall {
            center: self.center.iter().cloned().collect(),
            radius: self.radius,
        }
    }
}

/// Storage for the `m` noise vectors `u₁, …, u_m`, with access counters.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMemory {
    rows: Vec<DVector<f64>>,
    read_count: u64,
    write_count: u64,
}

impl NoiseMemory {
    /// Every row starts at the center of `set`.
    pub fn centered(m: usize, set: &UncertaintySet) -> Self {
        NoiseMemory {
            rows: vec![set.center.clone(); m],
            read_count: 0,
            write_count: 0,
        }
    }

    pub fn from_rows(rows: Vec<DVector<f64>>) -> Self {
        NoiseMemory {
            rows,
            read_count: 0,
            write_count: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Counted read of `u_i`.
    pub fn read(&mut self, i: usize) -> &DVector<f64> {
        self.read_count += 1;
        &self.rows[i]
    }

    /// Uncounted view, for checks and reporting.
    pub fn peek(&self, i: usize) -> &DVector<f64> {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[DVector<f64>] {
        &self.rows
    }

    pub fn write(&mut self, i: usize, value: DVector<f64>) {
        self.write_count += 1;
        self.rows[i] = value;
    }

    pub fn read_count(&self) -> u64 {
        self.read_count
    }

    pub fn write_count(&self) -> u64 {
        self.write_count
    }

    pub fn all_within(&self, set: &UncertaintySet, tol: f64) -> bool {
        self.rows.iter().all(|u| set.contains(u, tol))
    }
}

/// A robust feasibility problem `∃? x ∈ D : f_i(x, u) ≤ 0 ∀u ∈ U, i ∈ [m]`.
///
/// Each `f_i` must be convex in `x` and concave in `u`.
pub trait RobustProblem {
    /// Number of constraints `m`.
    fn num_constraints(&self) -> usize;

    /// Dimension `n` of the (flattened) decision variable.
    fn decision_dim(&self) -> usize;

    /// Dimension `d` of each noise vector.
    fn noise_dim(&self) -> usize;

    fn domain(&self) -> &SetDescriptor;

    fn uncertainty(&self) -> &UncertaintySet;

    /// `f_i(x, u)`.
    fn constraint_value(&self, i: usize, x: &DVector<f64>, u: &DVector<f64>) -> f64;

    /// `(∇_u f_i(x, u))_j`, a supergradient entry in `u`.
    fn noise_gradient_entry(&self, i: usize, j: usize, x: &DVector<f64>, u: &DVector<f64>) -> f64;

    /// The full supergradient `∇_u f_i(x, u)`.
    fn noise_gradient(&self, i: usize, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.noise_dim(),
            (0..self.noise_dim()).map(|j| self.noise_gradient_entry(i, j, x, u)),
        )
    }

    /// A subgradient of `f_i(·, u)` at `x`.
    fn decision_subgradient(&self, i: usize, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;

    /// `(α_i(x), β_i(x))` with `f_i(x, u) = α_i(x)ᵀu + β_i(x)`, when `f_i` is affine in `u`.
    fn linear_decomposition(&self, _i: usize, _x: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
        None
    }
}

/// The problem constants that set horizons and step sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    /// `D ≥ max_{u,v ∈ U} ‖u − v‖₂`.
    pub diameter: f64,
    /// `F`, a bound on `|f_i(x, u)|` (or on `|α_i(x)ᵀu|` for affine-in-`u` constraints).
    pub value_bound: f64,
    /// `G₂ ≥ ‖∇_u f_i‖₂`.
    pub g2: f64,
    /// `G₁ ≥ Σ_k ‖∇_u f_k‖₁`.
    pub g1: f64,
    /// `G∞ ≥ max_k ‖∇_u f_k‖₁`.
    pub g_inf: f64,
    /// Optional per-constraint bounds `G₁⁽ⁱ⁾ ≥ ‖∇_u f_i‖₁`.
    #[serde(default)]
    pub per_constraint_g1: Option<Vec<f64>>,
    /// Tolerated multiplicative bias `ν ∈ [0, 1/2]` of the gradient oracle.
    pub nu: f64,
}

impl Bounds {
    pub fn new(diameter: f64, value_bound: f64, g2: f64, g1: f64, g_inf: f64, nu: f64) -> Result<Self> {
        let b = Bounds {
            diameter,
            value_bound,
            g2,
            g1,
            g_inf,
            per_constraint_g1: None,
            nu,
        };
        b.validate()?;
        Ok(b)
    }

    /// Builds `G₁ = Σ G₁⁽ⁱ⁾` and `G∞ = max G₁⁽ⁱ⁾` from per-constraint bounds.
    pub fn from_per_constraint(diameter: f64, value_bound: f64, g2: f64, per_constraint: Vec<f64>, nu: f64) -> Result<Self> {
        let g1 = per_constraint.iter().sum();
        let g_inf = per_constraint.iter().cloned().fold(0.0, f64::max);
        let mut b = Bounds::new(diameter, value_bound, g2, g1, g_inf, nu)?;
        b.per_constraint_g1 = Some(per_constraint);
        b.validate_for(b.per_constraint_g1.as_ref().map_or(0, Vec::len))?;
        Ok(b)
    }

    pub fn with_nu(&self, nu: f64) -> Result<Self> {
        let mut b = self.clone();
        b.nu = nu;
        b.validate()?;
        Ok(b)
    }

    /// Positivity and ordering checks that do not need `m`.
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("diameter", self.diameter),
            ("value bound F", self.value_bound),
            ("G2", self.g2),
            ("G1", self.g1),
            ("Ginf", self.g_inf),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return param(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(0.0..=0.5).contains(&self.nu) {
            return param(format!("nu must lie in [0, 1/2], got {}", self.nu));
        }
        let slack = 1.0 + 1e-12;
        if self.g2 > self.g_inf * slack {
            return param(format!("G2 = {} exceeds Ginf = {}", self.g2, self.g_inf));
        }
        if self.g_inf > self.g1 * slack {
            return param(format!("Ginf = {} exceeds G1 = {}", self.g_inf, self.g1));
        }
        Ok(())
    }

    /// Full consistency check for a problem with `m` constraints.
    pub fn validate_for(&self, m: usize) -> Result<()> {
        self.validate()?;
        if self.g1 > m as f64 * self.g_inf * (1.0 + 1e-12) {
            return param(format!("G1 = {} exceeds m * Ginf = {}", self.g1, m as f64 * self.g_inf));
        }
        if let Some(per) = &self.per_constraint_g1 {
            if per.len() != m {
                return Err(Error::Dimension(format!(
                    "{} per-constraint G1 values for {m} constraints",
                    per.len()
                )));
            }
        }
        Ok(())
    }
}

/// Rounds up, treating values within floating-point noise of an integer as that integer.
fn ceil_snapped(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Iteration count `T = ⌈ε⁻² max{4F ln(m/δ), (9/4)(1 + 4ν)² D² G̃₂²}⌉`.
pub fn compute_horizon(bounds: &Bounds, eff_g2sq: f64, m: usize, eps: f64, delta: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return param(format!("eps must be positive, got {eps}"));
    }
    if !(eff_g2sq > 0.0 && eff_g2sq.is_finite()) {
        return param(format!("effective G2^2 must be positive, got {eff_g2sq}"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return param(format!("delta must lie in (0, 1), got {delta}"));
    }
    if m == 0 {
        return param("problem has no constraints");
    }
    let value_branch = 4.0 * bounds.value_bound * (m as f64 / delta).ln();
    let regret_branch =
        2.25 * (1.0 + 4.0 * bounds.nu).powi(2) * bounds.diameter.powi(2) * eff_g2sq;
    let t = ceil_snapped(value_branch.max(regret_branch) / (eps * eps));
    if !(t.is_finite() && t < usize::MAX as f64) {
        return param("horizon overflows");
    }
    Ok((t as usize).max(1))
}

/// Step size `η = D / ((1 − ν) G̃₂ √(t + 1))` for the zero-based iteration `t`.
pub fn compute_step_size(t: usize, bounds: &Bounds, eff_g2: f64) -> f64 {
    bounds.diameter / ((1.0 - bounds.nu) * eff_g2 * ((t + 1) as f64).sqrt())
}

/// Second-moment bound `G₂² + (G₁G∞ − G₂²)/s` of the `s`-sample ℓ1 gradient estimator.
pub fn effective_g2sq(bounds: &Bounds, s: usize) -> Result<f64> {
    if s < 1 {
        return param("sample count s must be at least 1");
    }
    let g2sq = bounds.g2 * bounds.g2;
    Ok(g2sq + (bounds.g1 * bounds.g_inf - g2sq) / s as f64)
}

/// The sample count `⌈G₁G∞ / G₂²⌉` at which the estimator's second moment is at most `2G₂²`.
pub fn balanced_sample_count(bounds: &Bounds) -> usize {
    ceil_snapped(bounds.g1 * bounds.g_inf / (bounds.g2 * bounds.g2)).max(1.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds(d: f64, f: f64, nu: f64) -> Bounds {
        Bounds::new(d, f, 1.0, 1.0, 1.0, nu).unwrap()
    }

    #[test]
    fn horizon_examples() {
        // max{4 ln 100, (9/4)·4·4·1} = 36, over eps² = 0.01
        assert_eq!(compute_horizon(&bounds(2.0, 1.0, 0.25), 1.0, 10, 0.1, 0.1).unwrap(), 3600);
        assert_eq!(compute_horizon(&bounds(1.0, 1e-300, 0.0), 1.0, 1, 1.0, 0.5).unwrap(), 3);
    }

    #[test]
    fn horizon_scaling() {
        let b = bounds(1.0, 1e-300, 0.0);
        let t1 = compute_horizon(&b, 1.0, 3, 0.01, 0.1).unwrap();
        let t2 = compute_horizon(&b, 1.0, 3, 0.02, 0.1).unwrap();
        assert_eq!(t1, 22500);
        assert_eq!(t2, 5625);
        let b2 = bounds(2.0, 1e-300, 0.0);
        assert_eq!(compute_horizon(&b2, 1.0, 3, 0.01, 0.1).unwrap(), 4 * t1);
    }

    #[test]
    fn horizon_rejects_bad_parameters() {
        let b = bounds(1.0, 1.0, 0.0);
        assert!(compute_horizon(&b, 1.0, 2, 0.0, 0.1).is_err());
        assert!(compute_horizon(&b, 0.0, 2, 0.1, 0.1).is_err());
        assert!(compute_horizon(&b, 1.0, 2, 0.1, 1.0).is_err());
    }

    #[test]
    fn step_size_examples() {
        let b = bounds(2.0, 1.0, 0.25);
        assert!((compute_step_size(3, &b, 1.0) - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(compute_step_size(0, &bounds(1.0, 1.0, 0.0), 1.0), 1.0);
        let steps: Vec<f64> = (0..10).map(|t| compute_step_size(t, &b, 1.0)).collect();
        assert!(steps.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn effective_second_moment() {
        let b = Bounds::new(2.0, 1.0, 1.0, 4.0, 2.0, 0.0).unwrap();
        assert_eq!(effective_g2sq(&b, 1).unwrap(), 8.0);
        assert!((effective_g2sq(&b, 1_000_000_000).unwrap() - 1.0).abs() < 1e-8);
        assert!(effective_g2sq(&b, 0).is_err());
        let flat = Bounds::new(2.0, 1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(effective_g2sq(&flat, 7).unwrap(), 1.0);
        let s = balanced_sample_count(&b);
        assert_eq!(s, 8);
        assert!(effective_g2sq(&b, s).unwrap() <= 2.0 * b.g2 * b.g2);
    }

    #[test]
    fn bounds_consistency() {
        assert!(Bounds::new(2.0, 1.0, 2.0, 4.0, 1.0, 0.0).is_err()); // G2 > Ginf
        assert!(Bounds::new(2.0, 1.0, 1.0, 1.0, 2.0, 0.0).is_err()); // Ginf > G1
        assert!(Bounds::new(2.0, 1.0, 1.0, 2.0, 1.0, 0.6).is_err());
        assert!(Bounds::new(0.0, 1.0, 1.0, 2.0, 1.0, 0.0).is_err());
        let b = Bounds::new(2.0, 1.0, 1.0, 3.0, 1.0, 0.0).unwrap();
        assert!(b.validate_for(2).is_err());
        assert!(b.validate_for(3).is_ok());
        let per = Bounds::from_per_constraint(2.0, 1.0, 1.0, vec![1.0, 2.0, 0.5], 0.25).unwrap();
        assert_eq!(per.g1, 3.5);
        assert_eq!(per.g_inf, 2.0);
    }

    #[test]
    fn noise_memory_counts() {
        let set = UncertaintySet::unit_ball(2);
        let mut mem = NoiseMemory::centered(3, &set);
        let _ = mem.read(1);
        mem.write(2, DVector::from_column_slice(&[0.6, 0.8]));
        assert_eq!((mem.read_count(), mem.write_count()), (1, 1));
        assert!(mem.all_within(&set, 1e-9));
        assert_eq!(set.diameter(), 2.0);
        mem.write(0, DVector::from_column_slice(&[1.0, 1.0]));
        assert!(!mem.all_within(&set, 1e-9));
    }
}
