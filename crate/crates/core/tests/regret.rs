//! Seed-averaged regret of online subgradient ascent with the sampled
//! gradient estimator, on linear rewards over the unit ball.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robopt::ledger::QueryLedger;
use robopt::ogd::{linear_ball_comparator, measure_regret, regret_bound, run_osgd, LinearLosses};
use robopt::problem::Bounds;
use robopt::projections::SetDescriptor;
use robopt::sampling::{L1Distribution, PerturbationMode, QueryCostModel, SampledGradientOracle};

const SEEDS: u64 = 50;
const DIM: usize = 6;
const S: usize = 2;

fn losses(horizon: usize) -> LinearLosses {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let drift = DVector::from_fn(DIM, |j, _| if j % 2 == 0 { 0.3 } else { -0.2 });
    LinearLosses::new(
        (0..horizon)
            .map(|_| &drift + DVector::from_fn(DIM, |_, _| rng.random_range(-1.0..1.0)))
            .collect(),
    )
}

/// `G̃₂ = (G₂² + (G₁G∞ − G₂²)/s)^{1/2}` of the `s`-sample estimator for one reward sequence.
fn eff_g2(l: &LinearLosses) -> f64 {
    let g2 = l.alphas.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let g1 = l.alphas.iter().map(|a| a.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    (g2 * g2 + (g1 * g1 - g2 * g2) / S as f64).sqrt()
}

fn averaged_regret(horizon: usize, mode: PerturbationMode, nu: f64) -> (f64, f64, f64) {
    let l = losses(horizon);
    let domain = SetDescriptor::unit_ball(DIM);
    let eff = eff_g2(&l);
    let bounds = Bounds::new(2.0, 1.0, 1.0, 1.0, 1.0, nu).unwrap();
    let star = linear_ball_comparator(&l, &DVector::zeros(DIM), 1.0);
    let regrets: Vec<f64> = (0..SEEDS)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut oracle = SampledGradientOracle::new(S, mode, QueryCostModel::default(), 0.01);
            let mut ledger = QueryLedger::new();
            let trace = run_osgd(
                &l,
                |t, _u, rng: &mut ChaCha8Rng| {
                    let dist = L1Distribution::from_gradients(&[l.alphas[t - 1].clone()])?;
                    Ok(oracle
                        .sample_from(&dist, &mut ledger, rng)?
                        .map_or_else(|| DVector::zeros(DIM), |g| g.constraint_vector(0)))
                },
                &DVector::zeros(DIM),
                &domain,
                &bounds,
                eff,
                horizon,
                &mut rng,
            )
            .unwrap();
            assert!(trace.iterates.iter().all(|u| domain.contains(u, 1e-9)));
            measure_regret(&trace, &l, &star)
        })
        .collect();
    let n = regrets.len() as f64;
    let mean = regrets.iter().sum::<f64>() / n;
    let var = regrets.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt(), regret_bound(2.0, nu, eff, horizon))
}

#[test]
fn regret_within_bound_and_decays() {
    let mut scaled = Vec::new();
    for horizon in [100, 400, 1600] {
        let (mean, se, bound) = averaged_regret(horizon, PerturbationMode::Exact, 0.0);
        assert!(mean <= bound + 3.0 * se, "T={horizon}: regret {mean} ± {se}, bound {bound}");
        assert!(mean >= -1e-9 - 3.0 * se);
        scaled.push(mean.max(0.0) * (horizon as f64).sqrt());
    }
    let cap = regret_bound(2.0, 0.0, eff_g2(&losses(1600)), 1) * 1.5;
    assert!(scaled.iter().all(|v| *v <= cap), "regret·√T = {scaled:?}, cap {cap}");
}

#[test]
fn biased_norm_estimates_stay_within_bound() {
    for horizon in [100, 400] {
        let (mean, se, bound) = averaged_regret(horizon, PerturbationMode::Uniform, 0.25);
        assert!(mean <= bound + 3.0 * se, "T={horizon}: regret {mean}, bound {bound}");
    }
}
