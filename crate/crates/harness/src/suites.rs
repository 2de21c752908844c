//! The acceptance criteria as runnable checks, shared by `robopt validate`
//! and the `acceptance` test target.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use robopt::applications::lp::{build_gmrp, lp_constants, random_feasible_lp, GmrpInstance, RobustLpInstance};
use robopt::applications::sdp::{sdp_constants, worst_case_sdp_violation, RobustSdpInstance};
use robopt::inner_oracle::oracle_for_lp;
use robopt::ledger::QueryLedger;
use robopt::linalg::flatten;
use robopt::meta::{optimize_via_bisection, solve_robust_exact};
use robopt::ogd::{linear_ball_comparator, measure_regret, regret_bound, run_osgd, LinearLosses};
use robopt::problem::effective_g2sq;
use robopt::projections::SetDescriptor;
use robopt::sampling::{L1Distribution, PerturbationMode, QueryCostModel, SampledGradientOracle};
use robopt::{Bounds, RobustProblem, RunStatus};

use crate::config::{Algorithm, ExperimentConfig, InstanceSpec};
use crate::instance::Instance;
use crate::run::{run_experiment, run_replications};
use crate::study::{scaling_study, Axis, ScalingFamily};

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl std::fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} criterion {} ({}): {} [{:.1}s]",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

type Check = (bool, String);

fn timed(id: u8, name: &'static str, limit: Duration, check: impl FnOnce() -> Check) -> CriterionReport {
    let started = Instant::now();
    let (mut passed, mut detail) = check();
    let elapsed = started.elapsed();
    if elapsed > limit {
        passed = false;
        detail = format!("{detail}; exceeded runtime limit {}s", limit.as_secs());
    }
    CriterionReport {
        id,
        name,
        passed,
        detail,
        elapsed,
    }
}

/// Collects failures; the check passes when none were recorded.
#[derive(Default)]
struct Failures(Vec<String>);

impl Failures {
    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok && self.0.len() < 5 {
            self.0.push(msg());
        } else if !ok {
            self.0.push(String::new());
        }
    }

    fn finish(self, summary: String) -> Check {
        if self.0.is_empty() {
            (true, summary)
        } else {
            let shown: Vec<&str> = self.0.iter().filter(|s| !s.is_empty()).map(String::as_str).collect();
            (false, format!("{} failures: {}", self.0.len(), shown.join("; ")))
        }
    }
}

fn random_in_ball<R: Rng>(d: usize, rng: &mut R) -> DVector<f64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let g = DVector::from_fn(d, |_, _| normal.sample(rng));
    let r: f64 = rng.random::<f64>().powf(1.0 / d as f64);
    g.normalize() * r
}

fn random_in_l1_ball<R: Rng>(n: usize, rng: &mut R) -> DVector<f64> {
    let v: DVector<f64> = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    v * (rng.random::<f64>() / l1)
}

fn random_psd<R: Rng>(order: usize, radius: f64, rng: &mut R) -> DMatrix<f64> {
    let b = DMatrix::from_fn(order, order, |_, _| rng.random_range(-1.0..1.0));
    let m = &b * b.transpose();
    let n = m.norm();
    m * (radius * rng.random::<f64>() / n)
}

fn symmetric<R: Rng>(order: usize, scale: f64, rng: &mut R) -> DMatrix<f64> {
    let b = DMatrix::from_fn(order, order, |_, _| rng.random_range(-scale..scale));
    (&b + b.transpose()) * 0.5
}

/// The fixed robust-LP gradient of the moment suite: `m = 3`, `n = 4`, `d = 5`.
pub fn moment_instance() -> (RobustLpInstance, DVector<f64>, DVector<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let (m, n, d) = (3, 4, 5);
    let p = (0..m).map(|_| DMatrix::from_fn(n, d, |_, _| normal.sample(&mut rng))).collect();
    let inst = RobustLpInstance::new(vec![DVector::zeros(n); m], DVector::zeros(m), p, SetDescriptor::L1Ball { dim: n, radius: 1.0 })
        .expect("well-formed instance");
    let x = DVector::from_column_slice(&[0.4, -0.3, 0.2, -0.1]);
    let u = DVector::from_column_slice(&[0.1, 0.0, -0.2, 0.3, 0.0]);
    (inst, x, u)
}

pub fn criterion_1_moments() -> CriterionReport {
    timed(1, "oracle moments", Duration::from_secs(60), || {
        const N: usize = 100_000;
        let (inst, x, u) = moment_instance();
        let bounds = lp_constants(&inst).expect("constants");
        let grads: Vec<DVector<f64>> = (0..3).map(|i| inst.noise_gradient(i, &x, &u)).collect();
        let dist = L1Distribution::from_gradients(&grads).expect("distribution");
        let mut fails = Failures::default();
        let mut summary = Vec::new();
        for (s, seed) in [(1usize, 1u64), (4, 2), (16, 3)] {
            let mut oracle = SampledGradientOracle::new(s, PerturbationMode::Exact, QueryCostModel::default(), 0.01);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut ledger = QueryLedger::new();
            let mut sum = vec![DVector::<f64>::zeros(5); 3];
            let mut sum_sq = vec![DVector::<f64>::zeros(5); 3];
            let mut q_sum = [0.0f64; 3];
            let mut q_sq = [0.0f64; 3];
            for _ in 0..N {
                let g = oracle.sample_from(&dist, &mut ledger, &mut rng).expect("sample").expect("no failure injection");
                for i in 0..3 {
                    let gi = g.constraint_vector(i);
                    let q = gi.norm_squared();
                    sum_sq[i] += gi.component_mul(&gi);
                    sum[i] += gi;
                    q_sum[i] += q;
                    q_sq[i] += q * q;
                }
            }
            let nf = N as f64;
            let se = |s1: f64, s2: f64| ((s2 / nf - (s1 / nf).powi(2)).max(0.0) / nf).sqrt();
            let bound = effective_g2sq(&bounds, s).expect("bound");
            let mut worst_z = 0.0f64;
            for i in 0..3 {
                for j in 0..5 {
                    let mean = sum[i][j] / nf;
                    let err = se(sum[i][j], sum_sq[i][j]);
                    let dev = (mean - grads[i][j]).abs();
                    if err > 0.0 {
                        worst_z = worst_z.max(dev / err);
                    }
                    fails.check(dev <= 5.0 * err + 1e-12, || format!("s={s} mean ({i},{j}) off by {dev:.3e} (se {err:.3e})"));
                }
                let second = q_sum[i] / nf;
                let err = se(q_sum[i], q_sq[i]);
                fails.check(second <= bound + 3.0 * err, || format!("s={s} E|g_{i}|² = {second:.4} > bound {bound:.4}"));
            }
            summary.push(format!("s={s}: max |z| {worst_z:.2}"));
        }
        fails.finish(format!("{N} samples per s; {}", summary.join(", ")))
    })
}

fn regret_losses(horizon: usize, dim: usize) -> LinearLosses {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let drift = DVector::from_fn(dim, |j, _| if j % 2 == 0 { 0.3 } else { -0.2 });
    LinearLosses::new(
        (0..horizon)
            .map(|_| &drift + DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0)))
            .collect(),
    )
}

/// Seed-averaged regret of the `s`-sample estimator on linear rewards over the unit ball:
/// `(mean, standard error, bound)`.
pub fn averaged_regret(horizon: usize, seeds: u64, s: usize, mode: PerturbationMode, nu: f64) -> (f64, f64, f64) {
    const DIM: usize = 6;
    let l = regret_losses(horizon, DIM);
    let domain = SetDescriptor::unit_ball(DIM);
    let g2 = l.alphas.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let g1 = l.alphas.iter().map(|a| a.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let eff = (g2 * g2 + (g1 * g1 - g2 * g2) / s as f64).sqrt();
    let bounds = Bounds::new(2.0, 1.0, 1.0, 1.0, 1.0, nu).expect("bounds");
    let star = linear_ball_comparator(&l, &DVector::zeros(DIM), 1.0);
    let regrets: Vec<f64> = (0..seeds)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut oracle = SampledGradientOracle::new(s, mode, QueryCostModel::default(), 0.01);
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
            .expect("online run");
            measure_regret(&trace, &l, &star)
        })
        .collect();
    let n = regrets.len() as f64;
    let mean = regrets.iter().sum::<f64>() / n;
    let var = regrets.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt(), regret_bound(2.0, nu, eff, horizon))
}

pub fn criterion_2_regret() -> CriterionReport {
    timed(2, "regret", Duration::from_secs(60), || {
        let mut fails = Failures::default();
        let mut scaled = Vec::new();
        let mut constant = 0.0;
        for horizon in [100, 400, 1600] {
            let (mean, se, bound) = averaged_regret(horizon, 50, 2, PerturbationMode::Exact, 0.0);
            fails.check(mean <= bound + 3.0 * se, || format!("T={horizon}: regret {mean:.4} > bound {bound:.4}"));
            scaled.push(mean * (horizon as f64).sqrt());
            constant = bound * (horizon as f64).sqrt();
        }
        let max_scaled = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        fails.check(max_scaled <= constant, || format!("regret·√T = {scaled:?} exceeds {constant:.3}"));
        fails.finish(format!(
            "regret·√T = [{}], bound constant {constant:.3}",
            scaled.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(", ")
        ))
    })
}

pub fn end_to_end_config() -> ExperimentConfig {
    ExperimentConfig {
        instance: InstanceSpec::RandomLp {
            m: 5,
            n: 6,
            d: 4,
            noise_scale: 0.3,
            margin: 0.1,
            instance_seed: 0,
        },
        algorithm: Algorithm::Sampled,
        eps: 0.05,
        delta: 0.05,
        replications: 20,
        ..ExperimentConfig::default()
    }
}

pub fn criterion_3_end_to_end() -> CriterionReport {
    timed(3, "end-to-end robust LP", Duration::from_secs(300), || {
        let config = end_to_end_config();
        let runs = match run_replications(&config) {
            Ok(r) => r,
            Err(e) => return (false, e.to_string()),
        };
        let good = runs
            .iter()
            .filter(|(_, r)| r.max_violation.is_some_and(|v| v <= 3.0 * config.eps))
            .count();
        let worst = runs.iter().filter_map(|(_, r)| r.max_violation).fold(f64::NEG_INFINITY, f64::max);
        let (_, first) = &runs[0];
        (
            good >= 18,
            format!(
                "{good}/20 runs within 3ε = {:.2}; worst violation {worst:.4}; T = {}",
                3.0 * config.eps,
                first.iterations
            ),
        )
    })
}

pub fn criterion_4_infeasibility() -> CriterionReport {
    timed(4, "infeasibility", Duration::from_secs(1), || {
        let mut fails = Failures::default();
        for algorithm in [Algorithm::Exact, Algorithm::Sampled] {
            let config = ExperimentConfig {
                instance: InstanceSpec::InfeasibleLp { n: 2, d: 2 },
                algorithm,
                s: Some(1),
                eps: 0.05,
                delta: 0.05,
                replications: 20,
                ..ExperimentConfig::default()
            };
            match run_replications(&config) {
                Ok(runs) => {
                    for (o, r) in &runs {
                        fails.check(r.status == RunStatus::Infeasible && r.opt_calls == 1 && o.iterations_used == 1, || {
                            format!("{} seed {}: {} after {} oracle calls", algorithm.as_str(), r.seed, r.status.as_str(), r.opt_calls)
                        });
                    }
                }
                Err(e) => fails.check(false, || e.to_string()),
            }
        }
        fails.finish("both algorithms, 20 seeds each: INFEASIBLE on the first oracle call".into())
    })
}

fn set_kinds() -> Vec<(SetDescriptor, Option<usize>)> {
    vec![
        (
            SetDescriptor::EuclideanBall {
                center: vec![0.5, -1.0, 0.25, 2.0],
                radius: 1.5,
            },
            None,
        ),
        (SetDescriptor::Simplex { dim: 5 }, None),
        (SetDescriptor::L1Ball { dim: 5, radius: 2.0 }, None),
        (
            SetDescriptor::Box {
                lower: vec![-1.0, -0.5, 0.0, -2.0],
                upper: vec![1.0, 0.5, 0.0, 3.0],
            },
            None,
        ),
        (SetDescriptor::PsdFrobeniusBall { order: 3, radius: 1.5 }, Some(3)),
        (
            SetDescriptor::PsdFrobeniusBallWithCorner {
                order: 3,
                radius: 2.0,
                corner: 1.0,
            },
            Some(3),
        ),
        (
            SetDescriptor::Product {
                parts: vec![
                    SetDescriptor::PsdFrobeniusBallWithCorner {
                        order: 2,
                        radius: 2.0,
                        corner: 1.0,
                    },
                    SetDescriptor::Box {
                        lower: vec![-1.0],
                        upper: vec![1.0],
                    },
                ],
            },
            None,
        ),
    ]
}

fn random_point<R: Rng>(set: &SetDescriptor, order: Option<usize>, rng: &mut R) -> DVector<f64> {
    match order {
        Some(k) => flatten(&symmetric(k, 3.0, rng)),
        None => match set {
            SetDescriptor::Product { .. } => {
                let head = flatten(&symmetric(2, 3.0, rng));
                DVector::from_iterator(5, head.iter().cloned().chain(std::iter::once(rng.random_range(-3.0..3.0))))
            }
            _ => DVector::from_fn(set.dim(), |_, _| rng.random_range(-4.0..4.0)),
        },
    }
}

/// Grid-search nearest distance to the set over `[-3, 3]^k`, `k ≤ 3`.
fn grid_distance(set: &SetDescriptor, v: &DVector<f64>, steps: usize) -> f64 {
    let k = v.len();
    let h = 6.0 / steps as f64;
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; k];
    loop {
        let p = DVector::from_iterator(k, idx.iter().map(|i| -3.0 + *i as f64 * h));
        if set.contains(&p, 1e-12) {
            best = best.min((v - p).norm());
        }
        let mut c = 0;
        loop {
            if c == k {
                return best;
            }
            idx[c] += 1;
            if idx[c] <= steps {
                break;
            }
            idx[c] = 0;
            c += 1;
        }
    }
}

pub fn criterion_5_projections() -> CriterionReport {
    timed(5, "projection properties", Duration::from_secs(60), || {
        const POINTS: usize = 10_000;
        const TOL: f64 = 1e-9;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut fails = Failures::default();
        let kinds = set_kinds();
        for (set, order) in &kinds {
            for _ in 0..POINTS {
                let v = random_point(set, *order, &mut rng);
                let w = random_point(set, *order, &mut rng);
                let y = random_point(set, *order, &mut rng);
                let (pv, pw, py) = match (set.project(&v), set.project(&w), set.project(&y)) {
                    (Ok(a), Ok(b), Ok(c)) => (a, b, c),
                    _ => {
                        fails.check(false, || format!("{set:?}: projection error"));
                        continue;
                    }
                };
                fails.check(set.contains(&pv, TOL), || format!("{set:?}: projection outside the set"));
                let ppv = set.project(&pv).unwrap_or_else(|_| pv.clone());
                fails.check((&ppv - &pv).norm() <= TOL, || format!("{set:?}: not idempotent"));
                fails.check((&pv - &pw).norm() <= (&v - &w).norm() + TOL, || format!("{set:?}: expansive"));
                let vi = (&v - &pv).dot(&(&py - &pv));
                fails.check(vi <= TOL * (1.0 + (&v - &pv).norm() * (&py - &pv).norm()), || {
                    format!("{set:?}: variational inequality {vi:.3e}")
                });
            }
        }
        let low_dim = [
            SetDescriptor::unit_ball(2),
            SetDescriptor::L1Ball { dim: 3, radius: 1.0 },
            SetDescriptor::Simplex { dim: 3 },
            SetDescriptor::Box {
                lower: vec![-0.5, -1.0],
                upper: vec![1.0, 0.25],
            },
            SetDescriptor::PsdFrobeniusBall { order: 1, radius: 1.5 },
        ];
        let mut grid_checks = 0;
        for set in &low_dim {
            let k = set.dim();
            let steps = match k {
                1 => 60_000,
                2 => 1200,
                _ => 120,
            };
            let h = 6.0 / steps as f64;
            for _ in 0..4 {
                let v = DVector::from_fn(k, |_, _| rng.random_range(-2.5..2.5));
                let exact = (&v - set.project(&v).expect("projection")).norm();
                let grid = grid_distance(set, &v, steps);
                grid_checks += 1;
                fails.check(exact <= grid + 1e-12 && grid <= exact + h * (k as f64).sqrt(), || {
                    format!("{set:?} at {v:?}: exact {exact:.6} grid {grid:.6}")
                });
            }
        }
        fails.finish(format!("{POINTS} points × {} set kinds at {TOL:e}; {grid_checks} grid cross-checks", kinds.len()))
    })
}

pub fn scaling_base_config() -> ExperimentConfig {
    ExperimentConfig {
        eps: 0.1,
        delta: 0.05,
        replications: 1,
        ..ExperimentConfig::default()
    }
}

pub fn criterion_6_scaling() -> CriterionReport {
    timed(6, "query scaling in d", Duration::from_secs(600), || {
        let family = ScalingFamily {
            m: 4,
            n: 4,
            d: 16,
            scale: 1.0,
        };
        let report = match scaling_study(
            family,
            Axis::D,
            &[16, 64, 256, 1024],
            &[Algorithm::Exact, Algorithm::Sampled],
            &scaling_base_config(),
        ) {
            Ok(r) => r,
            Err(e) => return (false, e.to_string()),
        };
        let exact = report.sweep(Algorithm::Exact).expect("exact sweep");
        let sampled = report.sweep(Algorithm::Sampled).expect("sampled sweep");
        let s = family.m; // ⌈G₁G∞/G₂²⌉ = m on this family
        let mut fails = Failures::default();
        fails.check((exact.slope - 1.0).abs() <= 0.1, || format!("exact slope {:.4}", exact.slope));
        fails.check((sampled.slope - 0.5).abs() <= 0.15, || format!("sampled slope {:.4}", sampled.slope));
        for p in &exact.points {
            fails.check(p.proj_per_iteration == family.m as f64, || {
                format!("exact d={}: {} projections per iteration", p.value, p.proj_per_iteration)
            });
        }
        for p in &sampled.points {
            fails.check(p.proj_per_iteration <= family.m.min(s) as f64, || {
                format!("sampled d={}: {} projections per iteration", p.value, p.proj_per_iteration)
            });
        }
        fails.finish(format!("slopes: exact {:.4}, sampled {:.4}", exact.slope, sampled.slope))
    })
}

/// Two assets, two return scenarios.
pub fn gmrp_desk() -> GmrpInstance {
    GmrpInstance {
        r_tilde: vec![DVector::from_column_slice(&[0.1, 0.2]), DVector::from_column_slice(&[0.25, 0.05])],
        kappa: vec![0.05, 0.05],
        s_half: vec![DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.3, 0.5]), DMatrix::identity(2, 2)],
        c: 0.0,
    }
}

/// Largest worst-case return over a grid of the 2-simplex.
pub fn gmrp_grid_optimum(g: &GmrpInstance) -> f64 {
    (0..=100_000)
        .map(|k| {
            let t = k as f64 / 100_000.0;
            g.worst_case_return(&DVector::from_column_slice(&[t, 1.0 - t]))
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Maximizes the guaranteed return by bisection on `z = −c` with exact gradients.
pub fn gmrp_bisection(g: &GmrpInstance, eps: f64, delta: f64) -> robopt::Result<f64> {
    let solve_eps = eps / 4.0;
    let res = optimize_via_bisection(-0.5, 0.5, eps / 2.0, delta, |z, delta| {
        let lp = build_gmrp(&g.with_min_return(-z))?;
        let bounds = lp_constants(&lp)?;
        let mut oracle = oracle_for_lp(&lp, solve_eps)?;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        solve_robust_exact(&lp, &bounds, &mut oracle, solve_eps, delta, &mut rng)
    })?;
    Ok(-res.z)
}

fn constants_dominate<P: RobustProblem>(problem: &P, bounds: &Bounds, x: &DVector<f64>, u: &DVector<f64>) -> bool {
    let grads: Vec<DVector<f64>> = (0..problem.num_constraints()).map(|i| problem.noise_gradient(i, x, u)).collect();
    let l1: Vec<f64> = grads.iter().map(|g| g.iter().map(|v| v.abs()).sum()).collect();
    grads.iter().all(|g| g.norm() <= bounds.g2 + 1e-9)
        && l1.iter().sum::<f64>() <= bounds.g1 + 1e-9
        && l1.iter().cloned().fold(0.0, f64::max) <= bounds.g_inf + 1e-9
}

pub fn criterion_7_applications() -> CriterionReport {
    timed(7, "applications", Duration::from_secs(300), || {
        let mut fails = Failures::default();
        let eps = 0.02;
        let g = gmrp_desk();
        let grid = gmrp_grid_optimum(&g);
        let gmrp = match gmrp_bisection(&g, eps, 0.1) {
            Ok(v) => {
                fails.check((v - grid).abs() <= eps, || format!("GMRP bisection {v:.4} vs grid {grid:.4}"));
                format!("GMRP {v:.4} vs grid {grid:.4}")
            }
            Err(e) => {
                fails.check(false, || format!("GMRP: {e}"));
                String::new()
            }
        };

        let ttd_eps = 0.1;
        let config = ExperimentConfig {
            instance: InstanceSpec::ttd_desk(),
            algorithm: Algorithm::Sampled,
            eps: ttd_eps,
            delta: 0.1,
            seed: 9,
            ..ExperimentConfig::default()
        };
        let ttd = match run_replications(&config) {
            Ok(runs) => {
                let (outcome, row) = &runs[0];
                match (row.status, outcome.x_bar(), Instance::build(&config.instance)) {
                    (RunStatus::Solution, Some(x), Ok(Instance::Sdp(inst))) => {
                        let worst = worst_case_sdp_violation(&inst, x).into_iter().fold(f64::NEG_INFINITY, f64::max);
                        fails.check(worst <= 3.0 * ttd_eps, || format!("TTD worst-case violation {worst:.4}"));
                        fails.check(inst.domain.contains(x, 1e-6), || "TTD x̄ outside the domain".into());
                        format!("TTD violation {worst:.4}")
                    }
                    (RunStatus::Infeasible, _, _) => "TTD certified infeasible".into(),
                    _ => {
                        fails.check(false, || "TTD run produced no usable result".into());
                        String::new()
                    }
                }
            }
            Err(e) => {
                fails.check(false, || format!("TTD: {e}"));
                String::new()
            }
        };

        let mut rng = ChaCha8Rng::seed_from_u64(70);
        let (lp, _) = random_feasible_lp(5, 6, 4, 0.7, 0.1, &mut rng).expect("random LP");
        let lp_bounds = lp_constants(&lp).expect("LP constants");
        let sdp = {
            let a = (0..3).map(|_| symmetric(3, 1.0, &mut rng)).collect();
            let p = (0..5).map(|_| symmetric(3, 1.0, &mut rng)).collect();
            RobustSdpInstance::new(a, DVector::from_element(3, 0.2), p, SetDescriptor::PsdFrobeniusBall { order: 3, radius: 1.0 })
                .expect("random SDP")
        };
        let sdp_bounds = sdp_constants(&sdp).expect("SDP constants");
        for _ in 0..10_000 {
            let x = random_in_l1_ball(6, &mut rng);
            let u = random_in_ball(4, &mut rng);
            fails.check(constants_dominate(&lp, &lp_bounds, &x, &u), || "LP constants exceeded".into());
            let xs = flatten(&random_psd(3, 1.0, &mut rng));
            let us = random_in_ball(5, &mut rng);
            fails.check(constants_dominate(&sdp, &sdp_bounds, &xs, &us), || "SDP constants exceeded".into());
        }
        fails.finish(format!("{gmrp}; {ttd}; constants dominate 10⁴ samples each"))
    })
}

pub fn criterion_8_determinism() -> CriterionReport {
    timed(8, "determinism", Duration::from_secs(120), || {
        let config = ExperimentConfig {
            replications: 4,
            seed: 17,
            ..end_to_end_config()
        };
        let dir = std::env::temp_dir().join(format!("robopt-determinism-{}", std::process::id()));
        let render = |name: &str| -> crate::error::Result<Vec<u8>> {
            let path = dir.join(name);
            run_experiment(&ExperimentConfig {
                output: Some(path.clone()),
                ..config.clone()
            })?;
            std::fs::read(&path).map_err(|source| crate::error::HarnessError::Io { path, source })
        };
        let result = match (render("first.csv"), render("second.csv")) {
            (Ok(a), Ok(b)) => (a == b, format!("two runs, {} bytes each, identical: {}", a.len(), a == b)),
            (Err(e), _) | (_, Err(e)) => (false, e.to_string()),
        };
        let _ = std::fs::remove_dir_all(&dir);
        result
    })
}

pub fn all_criteria() -> Vec<CriterionReport> {
    vec![
        criterion_1_moments(),
        criterion_2_regret(),
        criterion_3_end_to_end(),
        criterion_4_infeasibility(),
        criterion_5_projections(),
        criterion_6_scaling(),
        criterion_7_applications(),
        criterion_8_determinism(),
    ]
}
