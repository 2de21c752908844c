//! Online stochastic subgradient ascent over a convex set.
//!
//! At step `t = 1, 2, …` the learner plays `u⁽ᵗ⁾`, observes a noisy
//! subgradient `g⁽ᵗ⁾` of a concave reward `h⁽ᵗ⁾`, and moves to
//! `P_U(u⁽ᵗ⁾ + η⁽ᵗ⁾ g⁽ᵗ⁾)` with `η⁽ᵗ⁾ = D / ((1 − ν) G̃₂ √t)`. When
//! `E[g] = λ∇h` with `|λ − 1| ≤ ν` and `E‖g‖² ≤ G̃₂²`, the expected average
//! regret after `T` steps is at most [`regret_bound`].

use nalgebra::DVector;
use rand::Rng;

use crate::error::{param, Error, Result};
use crate::problem::Bounds;
use crate::projections::SetDescriptor;

/// One-indexed step size `η⁽ᵗ⁾ = D / ((1 − ν) G̃₂ √t)`.
pub fn step_size(t: usize, diameter: f64, nu: f64, eff_g2: f64) -> f64 {
    assert!(t >= 1, "step index is one-based");
    diameter / ((1.0 - nu) * eff_g2 * (t as f64).sqrt())
}

/// Expected average regret bound `3(1 + 4ν) G̃₂ D / (2√T)`.
pub fn regret_bound(diameter: f64, nu: f64, eff_g2: f64, horizon: usize) -> f64 {
    3.0 * (1.0 + 4.0 * nu) * eff_g2 * diameter / (2.0 * (horizon as f64).sqrt())
}

/// A sequence of concave rewards `h⁽¹⁾, h⁽²⁾, …`.
pub trait OnlineObjective {
    /// `h⁽ᵗ⁾(u)` for the one-based step `t`.
    fn value(&self, t: usize, u: &DVector<f64>) -> f64;
    fn gradient(&self, t: usize, u: &DVector<f64>) -> DVector<f64>;
}

/// Linear rewards `h⁽ᵗ⁾(u) = α_tᵀu`.
#[derive(Debug, Clone)]
pub struct LinearLosses {
    pub alphas: Vec<DVector<f64>>,
}

impl LinearLosses {
    pub fn new(alphas: Vec<DVector<f64>>) -> Self {
        LinearLosses { alphas }
    }

    pub fn sum(&self) -> DVector<f64> {
        let d = self.alphas.first().map_or(0, |a| a.len());
        self.alphas.iter().fold(DVector::zeros(d), |acc, a| acc + a)
    }
}

impl OnlineObjective for LinearLosses {
    fn value(&self, t: usize, u: &DVector<f64>) -> f64 {
        self.alphas[t - 1].dot(u)
    }

    fn gradient(&self, t: usize, _u: &DVector<f64>) -> DVector<f64> {
        self.alphas[t - 1].clone()
    }
}

/// The maximizer over the ball `{‖u − c‖₂ ≤ r}` of `Σ_t α_tᵀu`.
pub fn linear_ball_comparator(losses: &LinearLosses, center: &DVector<f64>, radius: f64) -> DVector<f64> {
    let s = losses.sum();
    let n = s.norm();
    if n == 0.0 {
        center.clone()
    } else {
        center + s * (radius / n)
    }
}

#[derive(Debug, Clone, Default)]
pub struct OgdTrace {
    /// `u⁽¹⁾, …, u⁽ᵀ⁾`.
    pub iterates: Vec<DVector<f64>>,
    /// `h⁽ᵗ⁾(u⁽ᵗ⁾)`.
    pub values: Vec<f64>,
    pub gradients: Vec<DVector<f64>>,
    pub step_sizes: Vec<f64>,
}

impl OgdTrace {
    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }
}

/// Runs `horizon` projected ascent steps from `u0`.
///
/// `oracle(t, u, rng)` returns the noisy subgradient of `h⁽ᵗ⁾` at `u`.
/// Uses `bounds.diameter` and `bounds.nu` with the second-moment bound `eff_g2`.
pub fn run_osgd<O, F, R>(
    objective: &O,
    mut oracle: F,
    u0: &DVector<f64>,
    domain: &SetDescriptor,
    bounds: &Bounds,
    eff_g2: f64,
    horizon: usize,
    rng: &mut R,
) -> Result<OgdTrace>
where
    O: OnlineObjective + ?Sized,
    F: FnMut(usize, &DVector<f64>, &mut R) -> Result<DVector<f64>>,
    R: Rng + ?Sized,
{
    if !(eff_g2 > 0.0 && eff_g2.is_finite()) {
        return param(format!("second-moment bound must be positive, got {eff_g2}"));
    }
    if !domain.contains(u0, 1e-9) {
        return param("starting point lies outside the domain");
    }
    let mut trace = OgdTrace::default();
    let mut u = u0.clone();
    for t in 1..=horizon {
        let value = objective.value(t, &u);
        let g = oracle(t, &u, rng)?;
        if g.len() != u.len() {
            return Err(Error::Dimension(format!("gradient of length {} at step {t}", g.len())));
        }
        if !value.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: t });
        }
        let eta = step_size(t, bounds.diameter, bounds.nu, eff_g2);
        let next = domain.project(&(&u + &g * eta))?;
        trace.iterates.push(std::mem::replace(&mut u, next));
        trace.values.push(value);
        trace.gradients.push(g);
        trace.step_sizes.push(eta);
    }
    Ok(trace)
}

/// Average regret `(1/T) Σ h⁽ᵗ⁾(u*) − (1/T) Σ h⁽ᵗ⁾(u⁽ᵗ⁾)` against the comparator `u*`.
pub fn measure_regret<O: OnlineObjective + ?Sized>(trace: &OgdTrace, objective: &O, comparator: &DVector<f64>) -> f64 {
    let t = trace.len();
    if t == 0 {
        return 0.0;
    }
    let best: f64 = (1..=t).map(|k| objective.value(k, comparator)).sum();
    let played: f64 = trace.values.iter().sum();
    (best - played) / t as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_bounds() -> Bounds {
        Bounds::new(2.0, 1.0, 1.0, 1.0, 1.0, 0.0).unwrap()
    }

    struct NegSquaredNorm;

    impl OnlineObjective for NegSquaredNorm {
        fn value(&self, _t: usize, u: &DVector<f64>) -> f64 {
            -0.5 * u.norm_squared()
        }

        fn gradient(&self, _t: usize, u: &DVector<f64>) -> DVector<f64> {
            -u
        }
    }

    #[test]
    fn linear_reward_converges_to_direction() {
        let c = DVector::from_column_slice(&[3.0, -4.0]);
        let losses = LinearLosses::new(vec![c.clone(); 200_000]);
        let domain = SetDescriptor::unit_ball(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let trace = run_osgd(
            &losses,
            |t, u, _: &mut ChaCha8Rng| Ok(losses.gradient(t, u)),
            &DVector::zeros(2),
            &domain,
            &unit_bounds(),
            5.0,
            losses.alphas.len(),
            &mut rng,
        )
        .unwrap();
        let last = trace.iterates.last().unwrap();
        assert!((last - &c / 5.0).norm() < 1e-3);
    }

    #[test]
    fn zero_gradients_do_not_move() {
        let losses = LinearLosses::new(vec![DVector::zeros(3); 10]);
        let u0 = DVector::from_column_slice(&[0.1, 0.2, -0.3]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let trace = run_osgd(
            &losses,
            |t, u, _: &mut ChaCha8Rng| Ok(losses.gradient(t, u)),
            &u0,
            &SetDescriptor::unit_ball(3),
            &unit_bounds(),
            1.0,
            10,
            &mut rng,
        )
        .unwrap();
        assert!(trace.iterates.iter().all(|u| u == &u0));
    }

    #[test]
    fn concave_quadratic_approaches_origin() {
        let u0 = DVector::from_column_slice(&[0.6, -0.8]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let trace = run_osgd(
            &NegSquaredNorm,
            |t, u, _: &mut ChaCha8Rng| Ok(NegSquaredNorm.gradient(t, u)),
            &u0,
            &SetDescriptor::unit_ball(2),
            &unit_bounds(),
            1.0,
            2000,
            &mut rng,
        )
        .unwrap();
        assert!(trace.iterates.last().unwrap().norm() < 1e-6);
    }

    #[test]
    fn regret_examples() {
        let c = DVector::from_column_slice(&[1.0, 1.0]);
        let losses = LinearLosses::new(vec![c.clone(); 4]);
        let star = linear_ball_comparator(&losses, &DVector::zeros(2), 1.0);
        let at_star = OgdTrace {
            iterates: vec![star.clone(); 4],
            values: vec![c.dot(&star); 4],
            gradients: vec![c.clone(); 4],
            step_sizes: vec![1.0; 4],
        };
        assert!(measure_regret(&at_star, &losses, &star).abs() < 1e-12);

        let at_zero = OgdTrace {
            iterates: vec![DVector::zeros(2); 4],
            values: vec![0.0; 4],
            gradients: vec![c.clone(); 4],
            step_sizes: vec![1.0; 4],
        };
        assert!((measure_regret(&at_zero, &losses, &star) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let losses = LinearLosses::new(vec![DVector::zeros(1); 5]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = run_osgd(
            &losses,
            |t, _, _: &mut ChaCha8Rng| Ok(DVector::from_element(1, if t == 3 { f64::NAN } else { 0.0 })),
            &DVector::zeros(1),
            &SetDescriptor::unit_ball(1),
            &unit_bounds(),
            1.0,
            5,
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite { step: 3 }));
    }

    #[test]
    fn schedules_agree() {
        let b = Bounds::new(2.0, 1.0, 1.0, 1.0, 1.0, 0.25).unwrap();
        for t in 0..20 {
            let a = crate::problem::compute_step_size(t, &b, 1.5);
            assert!((a - step_size(t + 1, 2.0, 0.25, 1.5)).abs() < 1e-15);
        }
    }
}
