use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use robopt::applications::lp::{lp_constants, random_feasible_lp, two_sided_infeasible_lp, worst_case_lp_violation, RobustLpInstance};
use robopt::applications::sdp::{build_ttd, sdp_constants, worst_case_sdp_violation, RobustSdpInstance, TtdInstance};
use robopt::inner_oracle::{oracle_for_lp, oracle_for_sdp, SubgradientFeasibilityOracle};
use robopt::projections::SetDescriptor;
use robopt::{Bounds, RobustProblem};

use crate::config::InstanceSpec;
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone)]
pub enum Instance {
    Lp(RobustLpInstance),
    Sdp(RobustSdpInstance),
}

impl Instance {
    pub fn build(spec: &InstanceSpec) -> Result<Self> {
        Ok(match spec {
            InstanceSpec::RandomLp {
                m,
                n,
                d,
                noise_scale,
                margin,
                instance_seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*instance_seed);
                Instance::Lp(random_feasible_lp(*m, *n, *d, *noise_scale, *margin, &mut rng)?.0)
            }
            InstanceSpec::InfeasibleLp { n, d } => Instance::Lp(two_sided_infeasible_lp(*n, *d)),
            InstanceSpec::ScalingLp { m, n, d, scale } => Instance::Lp(scaling_lp(*m, *n, *d, *scale)?),
            InstanceSpec::Ttd {
                nodes,
                volume,
                q,
                lambda,
                radius,
            } => {
                let k = nodes[0].len();
                let mut t = TtdInstance::new(
                    nodes.iter().map(|v| DVector::from_column_slice(v)).collect(),
                    *volume,
                    DMatrix::from_row_slice(k, k, q),
                    *lambda,
                );
                t.radius = *radius;
                Instance::Sdp(build_ttd(&t)?)
            }
            InstanceSpec::LpFile { path } => Instance::Lp(RobustLpInstance::from_json(&read(path)?)?),
            InstanceSpec::SdpFile { path } => Instance::Sdp(RobustSdpInstance::from_json(&read(path)?)?),
        })
    }

    /// `(m, n, d)`: constraints, decision dimension, noise dimension.
    pub fn shape(&self) -> (usize, usize, usize) {
        match self {
            Instance::Lp(p) => (p.num_constraints(), p.decision_dim(), p.noise_dim()),
            Instance::Sdp(p) => (p.num_constraints(), p.decision_dim(), p.noise_dim()),
        }
    }

    pub fn bounds(&self) -> Result<Bounds> {
        Ok(match self {
            Instance::Lp(p) => lp_constants(p)?,
            Instance::Sdp(p) => sdp_constants(p)?,
        })
    }

    pub fn oracle(&self, eps: f64) -> Result<SubgradientFeasibilityOracle> {
        Ok(match self {
            Instance::Lp(p) => oracle_for_lp(p, eps)?,
            Instance::Sdp(p) => oracle_for_sdp(p, eps)?,
        })
    }

    /// `max_i max_{u ∈ U} f_i(x, u)` in closed form.
    pub fn worst_case_violation(&self, x: &DVector<f64>) -> f64 {
        let v = match self {
            Instance::Lp(p) => worst_case_lp_violation(p, x),
            Instance::Sdp(p) => worst_case_sdp_violation(p, x),
        };
        v.into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn read(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `max_{u ∈ U} (P_i u)ᵀx ≤ scale` over the simplex, with `P_i = scale·e_k e_cᵀ`
/// for `k = i mod n`, `c = i mod d`.
///
/// `G₂ = G∞ = scale` and `G₁ = m·scale` for every `d`, and the gradient at any
/// point has one nonzero entry per constraint.
pub fn scaling_lp(m: usize, n: usize, d: usize, scale: f64) -> Result<RobustLpInstance> {
    if scale.is_nan() || scale <= 0.0 {
        return Err(HarnessError::config("instance.scale", "must be positive"));
    }
    let p = (0..m)
        .map(|i| {
            let mut p = DMatrix::zeros(n, d);
            p[(i % n, i % d)] = scale;
            p
        })
        .collect();
    Ok(RobustLpInstance::new(
        vec![DVector::zeros(n); m],
        DVector::from_element(m, scale),
        p,
        SetDescriptor::Simplex { dim: n },
    )?)
}
