use std::path::{Path, PathBuf};

use robopt::sampling::{PerturbationMode, QueryCostModel};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Built-in instance generators and file-backed instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InstanceSpec {
    /// Robustly feasible LP over the unit ℓ1 ball with slack `margin`.
    RandomLp {
        m: usize,
        n: usize,
        d: usize,
        #[serde(default = "default_noise_scale")]
        noise_scale: f64,
        #[serde(default = "default_margin")]
        margin: f64,
        #[serde(default)]
        instance_seed: u64,
    },
    /// `x₁ ≤ −1` and `−x₁ ≤ −1`.
    InfeasibleLp {
        #[serde(default = "two")]
        n: usize,
        #[serde(default = "two")]
        d: usize,
    },
    /// Each `P_i` has one nonzero entry `scale`, so `G₁G∞/G₂² = m` for every `d`.
    ScalingLp {
        m: usize,
        n: usize,
        d: usize,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Truss design with bar directions `nodes`, load covariance `q`, and compliance bound `lambda`.
    Ttd {
        nodes: Vec<Vec<f64>>,
        volume: f64,
        /// Row-major, `nodes[0].len()` rows.
        q: Vec<f64>,
        lambda: f64,
        #[serde(default = "two_f")]
        radius: f64,
    },
    LpFile { path: PathBuf },
    SdpFile { path: PathBuf },
}

fn default_noise_scale() -> f64 {
    0.3
}
fn default_margin() -> f64 {
    0.1
}
fn two() -> usize {
    2
}
fn one() -> f64 {
    1.0
}
fn two_f() -> f64 {
    2.0
}

impl InstanceSpec {
    pub fn family(&self) -> &'static str {
        match self {
            InstanceSpec::RandomLp { .. } => "random-lp",
            InstanceSpec::InfeasibleLp { .. } => "infeasible-lp",
            InstanceSpec::ScalingLp { .. } => "scaling-lp",
            InstanceSpec::Ttd { .. } => "ttd",
            InstanceSpec::LpFile { .. } => "lp-file",
            InstanceSpec::SdpFile { .. } => "sdp-file",
        }
    }

    /// The truss desk instance: three bars in the plane, `Q = 0.1·I₂`.
    pub fn ttd_desk() -> Self {
        InstanceSpec::Ttd {
            nodes: vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.8]],
            volume: 1.0,
            q: vec![0.1, 0.0, 0.0, 0.1],
            lambda: 0.5,
            radius: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Exact,
    Sampled,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Exact => "exact",
            Algorithm::Sampled => "sampled",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(Algorithm::Exact),
            "sampled" => Ok(Algorithm::Sampled),
            other => Err(format!("unknown algorithm `{other}` (expected exact or sampled)")),
        }
    }
}

/// One experiment: an instance, an algorithm, and a block of seeded replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub algorithm: Algorithm,
    /// Samples per iteration; `⌈G₁G∞/G₂²⌉` when absent.
    #[serde(default)]
    pub s: Option<usize>,
    pub eps: f64,
    pub delta: f64,
    #[serde(default)]
    pub nu_mode: PerturbationMode,
    #[serde(default)]
    pub cost: QueryCostModel,
    #[serde(default)]
    pub simulate_failures: bool,
    /// Replication `k` runs with seed `seed + k`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_rep")]
    pub replications: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Fill the wall-clock column; off keeps the CSV reproducible.
    #[serde(default)]
    pub timing: bool,
}

fn one_rep() -> usize {
    1
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            instance: InstanceSpec::RandomLp {
                m: 5,
                n: 6,
                d: 4,
                noise_scale: default_noise_scale(),
                margin: default_margin(),
                instance_seed: 0,
            },
            algorithm: Algorithm::Sampled,
            s: None,
            eps: 0.05,
            delta: 0.05,
            nu_mode: PerturbationMode::Exact,
            cost: QueryCostModel::default(),
            simulate_failures: false,
            seed: 0,
            replications: 1,
            output: None,
            timing: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| HarnessError::config("<document>", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(HarnessError::config("eps", "must be positive and finite"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(HarnessError::config("delta", "must lie in (0, 1)"));
        }
        if self.replications < 1 {
            return Err(HarnessError::config("replications", "must be at least 1"));
        }
        if self.s == Some(0) {
            return Err(HarnessError::config("s", "must be at least 1"));
        }
        self.cost
            .validate()
            .map_err(|e| HarnessError::config("cost", e.to_string()))?;
        let positive = |key: &str, v: usize| {
            if v == 0 {
                Err(HarnessError::config(&format!("instance.{key}"), "must be at least 1"))
            } else {
                Ok(())
            }
        };
        match &self.instance {
            InstanceSpec::RandomLp { m, n, d, .. } | InstanceSpec::ScalingLp { m, n, d, .. } => {
                positive("m", *m)?;
                positive("n", *n)?;
                positive("d", *d)?;
            }
            InstanceSpec::InfeasibleLp { n, d } => {
                positive("n", *n)?;
                positive("d", *d)?;
            }
            InstanceSpec::Ttd { nodes, q, .. } => {
                let k = nodes.first().map_or(0, |v| v.len());
                positive("nodes", nodes.len())?;
                if nodes.iter().any(|v| v.len() != k) || q.len() != k * k {
                    return Err(HarnessError::config("instance.q", "needs dim² entries for dim-length nodes"));
                }
            }
            InstanceSpec::LpFile { .. } | InstanceSpec::SdpFile { .. } => {}
        }
        Ok(())
    }
}

/// Command-line overrides applied on top of a config document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub algorithm: Option<Algorithm>,
    pub s: Option<usize>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub output: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, config: &mut ExperimentConfig) -> Result<()> {
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.algorithm {
            config.algorithm = v;
        }
        if let Some(v) = self.s {
            config.s = Some(v);
        }
        if let Some(v) = self.eps {
            config.eps = v;
        }
        if let Some(v) = self.delta {
            config.delta = v;
        }
        if let Some(v) = &self.output {
            config.output = Some(v.clone());
        }
        config.validate()
    }
}

/// Directory for CSV output when neither the config nor the command line names a file.
pub const OUTPUT_DIR_ENV: &str = "ROBOPT_OUTPUT_DIR";
