use serde::{Deserialize, Serialize};

use crate::config::{Algorithm, ExperimentConfig, InstanceSpec};
use crate::error::{HarnessError, Result};
use crate::run::{run_replications, ResultRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    /// Noise dimension `d`, with `m` fixed.
    D,
    /// Constraint count `m`, with `d` fixed.
    M,
}

/// The fixed-ratio family swept by the study; the swept coordinate overrides `m` or `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFamily {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub scale: f64,
}

impl ScalingFamily {
    fn at(&self, axis: Axis, value: usize) -> InstanceSpec {
        let (m, d) = match axis {
            Axis::D => (self.m, value),
            Axis::M => (value, self.d),
        };
        InstanceSpec::ScalingLp {
            m,
            n: self.n,
            d,
            scale: self.scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyPoint {
    pub value: usize,
    pub horizon: usize,
    /// Mean charged gradient queries over replications.
    pub grad_queries: f64,
    /// Largest `proj_calls / iterations` over replications.
    pub proj_per_iteration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmSweep {
    pub algorithm: Algorithm,
    pub points: Vec<StudyPoint>,
    /// Least-squares slope of `ln grad_queries` against `ln value`.
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub axis: Axis,
    pub family: ScalingFamily,
    pub sweeps: Vec<AlgorithmSweep>,
    #[serde(skip)]
    pub rows: Vec<ResultRow>,
}

impl StudyReport {
    pub fn sweep(&self, algorithm: Algorithm) -> Option<&AlgorithmSweep> {
        self.sweeps.iter().find(|s| s.algorithm == algorithm)
    }
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Sweeps `values` along `axis` for each algorithm in `algorithms`, reusing
/// `base` for tolerances, seeds, and sampling options.
pub fn scaling_study(
    family: ScalingFamily,
    axis: Axis,
    values: &[usize],
    algorithms: &[Algorithm],
    base: &ExperimentConfig,
) -> Result<StudyReport> {
    if values.len() < 3 {
        return Err(HarnessError::config("d_values", "a slope fit needs at least 3 values"));
    }
    if values.contains(&0) {
        return Err(HarnessError::config("d_values", "values must be positive"));
    }
    let mut sweeps = Vec::new();
    let mut rows = Vec::new();
    for &algorithm in algorithms {
        let mut points = Vec::new();
        for &value in values {
            let config = ExperimentConfig {
                instance: family.at(axis, value),
                algorithm,
                output: None,
                ..base.clone()
            };
            let runs = run_replications(&config)?;
            let k = runs.len() as f64;
            points.push(StudyPoint {
                value,
                horizon: runs[0].0.horizon,
                grad_queries: runs.iter().map(|(o, _)| o.ledger.grad_queries as f64).sum::<f64>() / k,
                proj_per_iteration: runs
                    .iter()
                    .map(|(o, _)| o.ledger.proj_calls as f64 / o.iterations_used.max(1) as f64)
                    .fold(0.0, f64::max),
            });
            rows.extend(runs.into_iter().map(|(_, r)| r));
        }
        let xs: Vec<f64> = points.iter().map(|p| p.value as f64).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.grad_queries).collect();
        sweeps.push(AlgorithmSweep {
            algorithm,
            slope: log_log_slope(&xs, &ys),
            points,
        });
    }
    Ok(StudyReport {
        axis,
        family,
        sweeps,
        rows,
    })
}
