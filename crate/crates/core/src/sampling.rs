//! Stochastic subgradient oracles for the noise player.
//!
//! The sampled oracle draws `s` index pairs `(i, j)` with probability
//! proportional to `|(∇_u f_i)_j|`, estimates the ℓ1 mass `Γ` of the
//! concatenated gradient up to a relative error `ν`, and returns the sparse
//! estimate `(g_i)_j = count(i, j) · sign · Γ / s`. Its mean is `λ ∇_u f_i`
//! with `λ = Γ / ‖∇‖₁`, and its second moment is at most
//! `G₂² + (G₁G∞ − G₂²)/s` times `λ²`.
//!
//! The quantum multi-sampling and norm-estimation subroutines are simulated
//! classically: the simulation evaluates every gradient entry (recorded as
//! `wall_grad_evals`), while the ledger charges the query counts of the
//! subroutines' cost models.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::ledger::QueryLedger;
use crate::problem::{NoiseMemory, RobustProblem};

/// The ℓ1 sampling distribution over the `m × d` entries of the concatenated gradient.
#[derive(Debug, Clone)]
pub struct L1Distribution {
    m: usize,
    d: usize,
    probabilities: Vec<f64>,
    cumulative: Vec<f64>,
    signs: Vec<f64>,
    total: f64,
    max_magnitude: f64,
}

impl L1Distribution {
    /// Builds the distribution from `m` gradients of equal length `d`.
    pub fn from_gradients(gradients: &[DVector<f64>]) -> Result<Self> {
        let m = gradients.len();
        let d = gradients.first().map_or(0, |g| g.len());
        if gradients.iter().any(|g| g.len() != d) {
            return Err(Error::Dimension("gradients differ in length".into()));
        }
        let mut magnitudes = Vec::with_capacity(m * d);
        let mut signs = Vec::with_capacity(m * d);
        for g in gradients {
            for &v in g.iter() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { step: 0 });
                }
                magnitudes.push(v.abs());
                // sign(0) = 0; zero entries are never sampled
                signs.push(if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 });
            }
        }
        let total: f64 = magnitudes.iter().sum();
        let max_magnitude = magnitudes.iter().cloned().fold(0.0, f64::max);
        let probabilities: Vec<f64> = if total > 0.0 {
            magnitudes.iter().map(|a| a / total).collect()
        } else {
            vec![0.0; m * d]
        };
        let mut acc = 0.0;
        let cumulative = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(L1Distribution {
            m,
            d,
            probabilities,
            cumulative,
            signs,
            total,
            max_magnitude,
        })
    }

    pub fn num_constraints(&self) -> usize {
        self.m
    }

    pub fn noise_dim(&self) -> usize {
        self.d
    }

    /// `Σ_k ‖∇_u f_k‖₁`.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn max_magnitude(&self) -> f64 {
        self.max_magnitude
    }

    /// True when every gradient entry is zero.
    pub fn is_degenerate(&self) -> bool {
        self.total == 0.0
    }

    pub fn probability(&self, i: usize, j: usize) -> f64 {
        self.probabilities[i * self.d + j]
    }

    pub fn sign(&self, i: usize, j: usize) -> f64 {
        self.signs[i * self.d + j]
    }

    /// One draw by binary search over the cumulative sums.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let last = *self.cumulative.last().expect("nonempty distribution");
        let r = rng.random::<f64>() * last;
        let mut k = self.cumulative.partition_point(|&c| c <= r);
        if k >= self.cumulative.len() {
            // r rounded up to the final sum: take the last entry with mass
            k = self.probabilities.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        }
        (k / self.d, k % self.d)
    }
}

/// Evaluates every `(∇_u f_i(x, u_i))_j` and builds the ℓ1 distribution.
///
/// The `m·d` evaluations are recorded as wall evaluations only; the query
/// charges are added by [`draw_samples`] and [`estimate_l1_norm`].
pub fn build_l1_distribution<P: RobustProblem + ?Sized>(
    problem: &P,
    x: &DVector<f64>,
    noise: &mut NoiseMemory,
    ledger: &mut QueryLedger,
) -> Result<L1Distribution> {
    let m = problem.num_constraints();
    let gradients: Vec<DVector<f64>> = (0..m)
        .map(|i| {
            let u = noise.read(i).clone();
            problem.noise_gradient(i, x, &u)
        })
        .collect();
    ledger.record_evaluations((m * problem.noise_dim()) as u64);
    L1Distribution::from_gradients(&gradients)
}

/// Constant factors of the simulated subroutines' cost models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryCostModel {
    pub c_sample: f64,
    pub c_norm: f64,
    /// Entrywise bound `M` for the norm-estimation cost; read from the distribution when absent.
    #[serde(default)]
    pub entry_bound: Option<f64>,
}

impl Default for QueryCostModel {
    fn default() -> Self {
        QueryCostModel {
            c_sample: 1.0,
            c_norm: 1.0,
            entry_bound: None,
        }
    }
}

impl QueryCostModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_sample >= 1.0 && self.c_norm >= 1.0) {
            return param("cost constants must be at least 1");
        }
        Ok(())
    }

    /// `⌈c_sample √(s·m·d) ln(1/δ)⌉`.
    pub fn sampling_charge(&self, s: usize, entries: usize, delta: f64) -> u64 {
        (self.c_sample * ((s * entries) as f64).sqrt() * (1.0 / delta).ln()).ceil() as u64
    }

    /// `⌈c_norm ν⁻¹ √(m·d·M/‖v‖₁) ln(1/δ)⌉`.
    pub fn norm_charge(&self, nu: f64, entries: usize, m_over_total: f64, delta: f64) -> u64 {
        (self.c_norm / nu * (entries as f64 * m_over_total).sqrt() * (1.0 / delta).ln()).ceil() as u64
    }
}

#[derive(Debug, Clone)]
pub struct SampleDraw {
    pub pairs: Vec<(usize, usize)>,
    /// Set when the simulated success event of the sampler did not occur.
    pub failed: bool,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return param(format!("per-iteration failure budget must lie in (0, 1), got {delta}"));
    }
    Ok(())
}

/// Draws `s` independent index pairs from `dist` and charges the multi-sampling cost.
///
/// With `simulate_failure`, the draw fails with probability `delta_iter`.
/// A degenerate distribution yields no samples and no charge.
pub fn draw_samples<R: Rng + ?Sized>(
    dist: &L1Distribution,
    s: usize,
    delta_iter: f64,
    simulate_failure: bool,
    rng: &mut R,
    ledger: &mut QueryLedger,
    cost: &QueryCostModel,
) -> Result<SampleDraw> {
    if s < 1 {
        return param("sample count s must be at least 1");
    }
    check_delta(delta_iter)?;
    if dist.is_degenerate() {
        return Ok(SampleDraw {
            pairs: Vec::new(),
            failed: false,
        });
    }
    ledger.charge_gradients(cost.sampling_charge(s, dist.m * dist.d, delta_iter));
    if simulate_failure && rng.random::<f64>() < delta_iter {
        return Ok(SampleDraw {
            pairs: Vec::new(),
            failed: true,
        });
    }
    let pairs = (0..s).map(|_| dist.sample(rng)).collect();
    Ok(SampleDraw { pairs, failed: false })
}

/// How the simulated norm estimator perturbs the true ℓ1 mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationMode {
    /// `λ = 1`.
    #[default]
    Exact,
    /// `λ ~ Uniform[1 − ν, 1 + ν]`.
    Uniform,
    /// `λ` alternates between `1 − ν` and `1 + ν`, starting low.
    Adversarial,
}

impl std::str::FromStr for PerturbationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(PerturbationMode::Exact),
            "uniform" => Ok(PerturbationMode::Uniform),
            "adversarial" => Ok(PerturbationMode::Adversarial),
            other => param(format!("unknown perturbation mode `{other}`")),
        }
    }
}

/// Perturbation state carried across calls (the adversarial mode alternates).
#[derive(Debug, Clone, Default)]
pub struct NormPerturbation {
    pub mode: PerturbationMode,
    calls: u64,
}

impl NormPerturbation {
    pub fn new(mode: PerturbationMode) -> Self {
        NormPerturbation { mode, calls: 0 }
    }

    fn next_factor<R: Rng + ?Sized>(&mut self, nu: f64, rng: &mut R) -> f64 {
        let lambda = match self.mode {
            PerturbationMode::Exact => 1.0,
            PerturbationMode::Uniform => 1.0 - nu + 2.0 * nu * rng.random::<f64>(),
            PerturbationMode::Adversarial => {
                if self.calls.is_multiple_of(2) {
                    1.0 - nu
                } else {
                    1.0 + nu
                }
            }
        };
        self.calls += 1;
        lambda
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    /// The estimate `Γ` of `Σ_k ‖∇_u f_k‖₁`.
    pub gamma: f64,
    /// Realized factor `Γ / ‖∇‖₁`.
    pub lambda: f64,
    pub mode: PerturbationMode,
    /// Set when the gradient was identically zero.
    pub degenerate: bool,
}

/// Simulated ℓ1-norm estimation with relative error at most `nu`; charges the estimator's cost.
pub fn estimate_l1_norm<R: Rng + ?Sized>(
    dist: &L1Distribution,
    nu: f64,
    delta_iter: f64,
    perturbation: &mut NormPerturbation,
    rng: &mut R,
    ledger: &mut QueryLedger,
    cost: &QueryCostModel,
) -> Result<NormEstimate> {
    if !(nu > 0.0 && nu <= 0.5) {
        return param(format!("norm-estimation tolerance nu must lie in (0, 1/2], got {nu}"));
    }
    check_delta(delta_iter)?;
    let entries = dist.m * dist.d;
    if dist.is_degenerate() {
        // the attempt is still paid for; M/‖v‖₁ is undefined, charge as if it were 1
        ledger.charge_gradients(cost.norm_charge(nu, entries, 1.0, delta_iter));
        return Ok(NormEstimate {
            gamma: 0.0,
            lambda: 1.0,
            mode: perturbation.mode,
            degenerate: true,
        });
    }
    let m_bound = cost.entry_bound.unwrap_or(dist.max_magnitude).max(dist.max_magnitude);
    ledger.charge_gradients(cost.norm_charge(nu, entries, m_bound / dist.total, delta_iter));
    let lambda = perturbation.next_factor(nu, rng);
    Ok(NormEstimate {
        gamma: lambda * dist.total,
        lambda,
        mode: perturbation.mode,
        degenerate: false,
    })
}

/// The sparse estimate `(g_i)_j = count(i, j)/s · sign · Γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledGradient {
    entries: BTreeMap<(usize, usize), f64>,
    touched: Vec<usize>,
    d: usize,
}

impl SampledGradient {
    pub fn nonzeros(&self) -> usize {
        self.entries.values().filter(|v| **v != 0.0).count()
    }

    /// Distinct constraint indices that received at least one sample, ascending.
    pub fn touched(&self) -> &[usize] {
        &self.touched
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries.get(&(i, j)).copied().unwrap_or(0.0)
    }

    /// Dense `g_i` (zero for constraints that were not sampled).
    pub fn constraint_vector(&self, i: usize) -> DVector<f64> {
        let mut g = DVector::zeros(self.d);
        for (&(_, j), &v) in self.entries.range((i, 0)..(i + 1, 0)) {
            g[j] = v;
        }
        g
    }
}

/// Assembles the sparse gradient from samples; each distinct sampled pair
/// costs one subgradient-entry lookup (its sign), charged and evaluated.
pub fn assemble_stochastic_gradient(
    samples: &[(usize, usize)],
    dist: &L1Distribution,
    gamma: f64,
    s: usize,
    ledger: &mut QueryLedger,
) -> SampledGradient {
    let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for &pair in samples {
        *counts.entry(pair).or_default() += 1;
    }
    ledger.evaluate_and_charge(counts.len() as u64);
    let entries: BTreeMap<(usize, usize), f64> = counts
        .into_iter()
        .map(|((i, j), c)| ((i, j), c as f64 / s as f64 * dist.sign(i, j) * gamma))
        .collect();
    let mut touched: Vec<usize> = entries.keys().map(|(i, _)| *i).collect();
    touched.dedup();
    SampledGradient {
        entries,
        touched,
        d: dist.d,
    }
}

/// Exact gradients of every constraint: `m·d` charged `O_∇` queries.
pub fn exact_gradient_oracle<P: RobustProblem + ?Sized>(
    problem: &P,
    x: &DVector<f64>,
    noise: &mut NoiseMemory,
    ledger: &mut QueryLedger,
) -> Vec<DVector<f64>> {
    let m = problem.num_constraints();
    let grads = (0..m)
        .map(|i| {
            let u = noise.read(i).clone();
            problem.noise_gradient(i, x, &u)
        })
        .collect();
    ledger.evaluate_and_charge((m * problem.noise_dim()) as u64);
    grads
}

/// Gradient estimates for the constraints whose noise vectors get updated.
#[derive(Debug, Clone, Default)]
pub struct NoisyGradients {
    /// `(i, g_i)` in ascending `i`; constraints not listed keep their noise vector.
    pub updates: Vec<(usize, DVector<f64>)>,
}

/// A stochastic subgradient oracle `O_g`: on `(x, u₁..u_m)` it returns
/// `g_i` with `E[g_i] = λ∇_u f_i(x, u_i)`, `|λ − 1| ≤ ν`.
pub trait GradientOracle {
    fn query<P: RobustProblem + ?Sized, R: Rng + ?Sized>(
        &mut self,
        problem: &P,
        x: &DVector<f64>,
        noise: &mut NoiseMemory,
        ledger: &mut QueryLedger,
        rng: &mut R,
    ) -> Result<NoisyGradients>;
}

/// Exact gradients for every constraint (`λ = 1`, `ν = 0`).
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactGradientOracle;

impl GradientOracle for ExactGradientOracle {
    fn query<P: RobustProblem + ?Sized, R: Rng + ?Sized>(
        &mut self,
        problem: &P,
        x: &DVector<f64>,
        noise: &mut NoiseMemory,
        ledger: &mut QueryLedger,
        _rng: &mut R,
    ) -> Result<NoisyGradients> {
        let grads = exact_gradient_oracle(problem, x, noise, ledger);
        if grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite { step: 0 });
        }
        Ok(NoisyGradients {
            updates: grads.into_iter().enumerate().collect(),
        })
    }
}

/// The ℓ1-sampling oracle with `s` samples per call.
#[derive(Debug, Clone)]
pub struct SampledGradientOracle {
    pub s: usize,
    /// Relative error of the norm estimate.
    pub nu: f64,
    pub perturbation: NormPerturbation,
    pub cost: QueryCostModel,
    /// Failure budget for each of the two subroutines per call.
    pub delta_iter: f64,
    /// Simulate subroutine failures with probability `delta_iter` each.
    pub simulate_failures: bool,
    /// Number of calls whose estimate was replaced by zero after a simulated failure.
    pub failures: u64,
    pub last_estimate: Option<NormEstimate>,
}

impl SampledGradientOracle {
    pub fn new(s: usize, mode: PerturbationMode, cost: QueryCostModel, delta_iter: f64) -> Self {
        SampledGradientOracle {
            s,
            nu: 0.25,
            perturbation: NormPerturbation::new(mode),
            cost,
            delta_iter,
            simulate_failures: false,
            failures: 0,
            last_estimate: None,
        }
    }

    /// One estimate from an already-built distribution.
    pub fn sample_from<R: Rng + ?Sized>(
        &mut self,
        dist: &L1Distribution,
        ledger: &mut QueryLedger,
        rng: &mut R,
    ) -> Result<Option<SampledGradient>> {
        let draw = draw_samples(dist, self.s, self.delta_iter, self.simulate_failures, rng, ledger, &self.cost)?;
        let estimate = estimate_l1_norm(dist, self.nu, self.delta_iter, &mut self.perturbation, rng, ledger, &self.cost)?;
        self.last_estimate = Some(estimate);
        if estimate.degenerate {
            return Ok(None);
        }
        let norm_failed = self.simulate_failures && rng.random::<f64>() < self.delta_iter;
        if draw.failed || norm_failed {
            self.failures += 1;
            return Ok(None);
        }
        Ok(Some(assemble_stochastic_gradient(&draw.pairs, dist, estimate.gamma, self.s, ledger)))
    }
}

impl GradientOracle for SampledGradientOracle {
    fn query<P: RobustProblem + ?Sized, R: Rng + ?Sized>(
        &mut self,
        problem: &P,
        x: &DVector<f64>,
        noise: &mut NoiseMemory,
        ledger: &mut QueryLedger,
        rng: &mut R,
    ) -> Result<NoisyGradients> {
        let dist = build_l1_distribution(problem, x, noise, ledger)?;
        let sampled = self.sample_from(&dist, ledger, rng)?;
        Ok(match sampled {
            None => NoisyGradients::default(),
            Some(g) => NoisyGradients {
                updates: g.touched().iter().map(|&i| (i, g.constraint_vector(i))).collect(),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dv(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn distribution_examples() {
        let dist = L1Distribution::from_gradients(&[dv(&[3.0, -1.0])]).unwrap();
        assert_eq!(dist.probability(0, 0), 0.75);
        assert_eq!(dist.probability(0, 1), 0.25);
        assert_eq!((dist.sign(0, 0), dist.sign(0, 1)), (1.0, -1.0));
        assert_eq!(dist.total(), 4.0);

        let dist = L1Distribution::from_gradients(&[dv(&[1.0]), dv(&[1.0])]).unwrap();
        assert_eq!((dist.probability(0, 0), dist.probability(1, 0)), (0.5, 0.5));

        let dist = L1Distribution::from_gradients(&[dv(&[0.0, 0.0]), dv(&[0.0, -2.5])]).unwrap();
        assert_eq!(dist.probability(1, 1), 1.0);
        assert!(L1Distribution::from_gradients(&[dv(&[0.0, 0.0])]).unwrap().is_degenerate());
    }

    #[test]
    fn point_mass_draws() {
        let dist = L1Distribution::from_gradients(&[dv(&[0.0, 0.0, 0.0]), dv(&[0.0, 7.0, 0.0])]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ledger = QueryLedger::new();
        let draw = draw_samples(&dist, 50, 0.01, false, &mut rng, &mut ledger, &QueryCostModel::default()).unwrap();
        assert!(draw.pairs.iter().all(|&p| p == (1, 1)));
    }

    #[test]
    fn sampling_charge_example() {
        // ⌈√(4·16) · ln 100⌉ = ⌈36.84⌉
        let dist = L1Distribution::from_gradients(&vec![DVector::from_element(8, 1.0); 2]).unwrap();
        let mut ledger = QueryLedger::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        draw_samples(&dist, 4, 0.01, false, &mut rng, &mut ledger, &QueryCostModel::default()).unwrap();
        assert_eq!(ledger.grad_queries, 37);
        assert_eq!(ledger.wall_grad_evals, 0);
    }

    #[test]
    fn norm_charge_example() {
        // M / total = 1 with m·d = 64: a single nonzero entry
        let mut g = vec![DVector::zeros(8); 8];
        g[3][5] = 2.0;
        let dist = L1Distribution::from_gradients(&g).unwrap();
        let mut ledger = QueryLedger::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut pert = NormPerturbation::new(PerturbationMode::Exact);
        let est = estimate_l1_norm(&dist, 0.25, 0.01, &mut pert, &mut rng, &mut ledger, &QueryCostModel::default()).unwrap();
        assert_eq!(ledger.grad_queries, 148);
        assert_eq!(est.gamma, 2.0);
        assert_eq!(est.lambda, 1.0);
    }

    #[test]
    fn adversarial_mode_hits_endpoints() {
        let dist = L1Distribution::from_gradients(&[dv(&[3.0, -1.0])]).unwrap();
        let mut ledger = QueryLedger::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut pert = NormPerturbation::new(PerturbationMode::Adversarial);
        let cost = QueryCostModel::default();
        let a = estimate_l1_norm(&dist, 0.25, 0.01, &mut pert, &mut rng, &mut ledger, &cost).unwrap();
        let b = estimate_l1_norm(&dist, 0.25, 0.01, &mut pert, &mut rng, &mut ledger, &cost).unwrap();
        assert_eq!((a.gamma, b.gamma), (3.0, 5.0));
    }

    #[test]
    fn uniform_mode_stays_within_tolerance() {
        let dist = L1Distribution::from_gradients(&[dv(&[3.0, -1.0])]).unwrap();
        let mut ledger = QueryLedger::new();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut pert = NormPerturbation::new(PerturbationMode::Uniform);
        for _ in 0..1000 {
            let e = estimate_l1_norm(&dist, 0.25, 0.01, &mut pert, &mut rng, &mut ledger, &QueryCostModel::default()).unwrap();
            assert!((e.lambda - 1.0).abs() <= 0.25);
        }
    }

    #[test]
    fn assemble_examples() {
        let dist = L1Distribution::from_gradients(&[dv(&[3.0, -1.0])]).unwrap();
        let mut ledger = QueryLedger::new();
        let samples = [(0, 0), (0, 0), (0, 1), (0, 0)];
        let g = assemble_stochastic_gradient(&samples, &dist, 4.0, 4, &mut ledger);
        assert_eq!(g.constraint_vector(0), dv(&[3.0, -1.0]));
        assert_eq!(ledger.grad_queries, 2);
        assert_eq!(g.touched(), &[0]);

        let empty = assemble_stochastic_gradient(&[], &dist, 4.0, 4, &mut ledger);
        assert_eq!(empty.constraint_vector(0), dv(&[0.0, 0.0]));
        assert!(empty.touched().is_empty());

        let g = assemble_stochastic_gradient(&[(0, 0); 5], &dist, 4.0, 5, &mut ledger);
        assert_eq!(g.entry(0, 0), 4.0);
    }

    #[test]
    fn empirical_frequencies_match() {
        let dist = L1Distribution::from_gradients(&[dv(&[0.5, -1.5, 0.0]), dv(&[2.0, 0.25, -0.75])]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 1_000_000usize;
        let mut counts = [[0usize; 3]; 2];
        for _ in 0..n {
            let (i, j) = dist.sample(&mut rng);
            counts[i][j] += 1;
        }
        for i in 0..2 {
            for j in 0..3 {
                let p = dist.probability(i, j);
                let se = (p * (1.0 - p) / n as f64).sqrt();
                let freq = counts[i][j] as f64 / n as f64;
                assert!((freq - p).abs() <= 5.0 * se + 1e-12, "({i},{j}) freq {freq} p {p}");
            }
        }
        assert_eq!(counts[0][2], 0);
    }

    #[test]
    fn degenerate_distribution_draws_nothing() {
        let dist = L1Distribution::from_gradients(&[dv(&[0.0, 0.0])]).unwrap();
        let mut ledger = QueryLedger::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let draw = draw_samples(&dist, 3, 0.1, false, &mut rng, &mut ledger, &QueryCostModel::default()).unwrap();
        assert!(draw.pairs.is_empty());
        assert_eq!(ledger.grad_queries, 0);
        let mut pert = NormPerturbation::default();
        let est = estimate_l1_norm(&dist, 0.25, 0.1, &mut pert, &mut rng, &mut ledger, &QueryCostModel::default()).unwrap();
        assert!(est.degenerate);
        assert!(ledger.grad_queries > 0);
    }

    #[test]
    fn failure_injection_fires_at_rate() {
        let dist = L1Distribution::from_gradients(&[dv(&[1.0, 2.0])]).unwrap();
        let mut ledger = QueryLedger::new();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let trials = 20_000;
        let failures = (0..trials)
            .filter(|_| {
                draw_samples(&dist, 2, 0.2, true, &mut rng, &mut ledger, &QueryCostModel::default())
                    .unwrap()
                    .failed
            })
            .count();
        let rate = failures as f64 / trials as f64;
        assert!((rate - 0.2).abs() < 5.0 * (0.2f64 * 0.8 / trials as f64).sqrt());
    }

    #[test]
    fn parameter_errors() {
        let dist = L1Distribution::from_gradients(&[dv(&[1.0])]).unwrap();
        let mut ledger = QueryLedger::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cost = QueryCostModel::default();
        assert!(draw_samples(&dist, 0, 0.1, false, &mut rng, &mut ledger, &cost).is_err());
        assert!(draw_samples(&dist, 1, 1.0, false, &mut rng, &mut ledger, &cost).is_err());
        let mut pert = NormPerturbation::default();
        assert!(estimate_l1_norm(&dist, 0.0, 0.1, &mut pert, &mut rng, &mut ledger, &cost).is_err());
        assert!(L1Distribution::from_gradients(&[dv(&[f64::NAN])]).is_err());
    }
}
