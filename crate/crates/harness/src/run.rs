use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use robopt::meta::{solve_robust_exact, solve_robust_sampled, SampledOptions};
use robopt::problem::balanced_sample_count;
use robopt::{RunOutcome, RunStatus};
use serde::Serialize;

use crate::config::{Algorithm, ExperimentConfig, OUTPUT_DIR_ENV};
use crate::error::{HarnessError, Result};
use crate::instance::Instance;

/// Bumped whenever the CSV columns change.
pub const SCHEMA_VERSION: u32 = 1;

/// One replication. Columns are written in field order.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub family: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub status: RunStatus,
    /// Closed-form worst-case violation of `x̄`; absent for infeasible runs.
    pub max_violation: Option<f64>,
    pub iterations: usize,
    pub grad_queries: u64,
    pub proj_calls: u64,
    pub opt_calls: u64,
    pub wall_ms: Option<f64>,
}

pub const CSV_HEADER: [&str; 14] = [
    "schema_version",
    "m",
    "n",
    "d",
    "family",
    "algorithm",
    "seed",
    "status",
    "max_violation",
    "iterations",
    "grad_queries",
    "proj_calls",
    "opt_calls",
    "wall_ms",
];

#[derive(Serialize)]
struct CsvRecord<'a> {
    schema_version: u32,
    m: usize,
    n: usize,
    d: usize,
    family: &'a str,
    algorithm: &'a str,
    seed: u64,
    status: &'a str,
    max_violation: String,
    iterations: usize,
    grad_queries: u64,
    proj_calls: u64,
    opt_calls: u64,
    wall_ms: String,
}

fn float(v: Option<f64>) -> String {
    // 17 significant digits
    v.map_or_else(String::new, |x| format!("{x:.16e}"))
}

impl ResultRow {
    fn record(&self) -> CsvRecord<'_> {
        CsvRecord {
            schema_version: SCHEMA_VERSION,
            m: self.m,
            n: self.n,
            d: self.d,
            family: &self.family,
            algorithm: self.algorithm.as_str(),
            seed: self.seed,
            status: self.status.as_str(),
            max_violation: float(self.max_violation),
            iterations: self.iterations,
            grad_queries: self.grad_queries,
            proj_calls: self.proj_calls,
            opt_calls: self.opt_calls,
            wall_ms: float(self.wall_ms),
        }
    }
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.serialize(row.record())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// The configured output file, else `results.csv` under the output-directory
/// environment variable, else none.
pub fn resolve_output(config: &ExperimentConfig) -> Option<PathBuf> {
    config.output.clone().or_else(|| {
        std::env::var_os(OUTPUT_DIR_ENV)
            .filter(|v| !v.is_empty())
            .map(|dir| PathBuf::from(dir).join("results.csv"))
    })
}

pub fn write_csv_file(rows: &[ResultRow], path: &Path) -> Result<()> {
    let io = |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let file = std::fs::File::create(path).map_err(io)?;
    write_csv(rows, std::io::BufWriter::new(file))
}

/// Runs one replication of `config` on a prebuilt instance.
pub fn run_replication(config: &ExperimentConfig, instance: &Instance, seed: u64) -> Result<(RunOutcome, ResultRow)> {
    let bounds = instance.bounds()?;
    let mut oracle = instance.oracle(config.eps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let started = Instant::now();
    let outcome = match config.algorithm {
        Algorithm::Exact => match instance {
            Instance::Lp(p) => solve_robust_exact(p, &bounds, &mut oracle, config.eps, config.delta, &mut rng),
            Instance::Sdp(p) => solve_robust_exact(p, &bounds, &mut oracle, config.eps, config.delta, &mut rng),
        },
        Algorithm::Sampled => {
            let options = SampledOptions {
                s: config.s.unwrap_or_else(|| balanced_sample_count(&bounds)),
                cost: config.cost,
                mode: config.nu_mode,
                simulate_failures: config.simulate_failures,
            };
            match instance {
                Instance::Lp(p) => solve_robust_sampled(p, &bounds, &options, &mut oracle, config.eps, config.delta, &mut rng),
                Instance::Sdp(p) => solve_robust_sampled(p, &bounds, &options, &mut oracle, config.eps, config.delta, &mut rng),
            }
        }
    }?;
    let wall_ms = config.timing.then(|| started.elapsed().as_secs_f64() * 1e3);
    let (m, n, d) = instance.shape();
    let row = ResultRow {
        m,
        n,
        d,
        family: config.instance.family().to_string(),
        algorithm: config.algorithm,
        seed,
        status: outcome.status(),
        max_violation: outcome.x_bar().map(|x| instance.worst_case_violation(x)),
        iterations: outcome.iterations_used,
        grad_queries: outcome.ledger.grad_queries,
        proj_calls: outcome.ledger.proj_calls,
        opt_calls: outcome.ledger.opt_calls,
        wall_ms,
    };
    Ok((outcome, row))
}

/// Runs every replication, in parallel, and returns rows and outcomes in replication order.
pub fn run_replications(config: &ExperimentConfig) -> Result<Vec<(RunOutcome, ResultRow)>> {
    config.validate()?;
    let instance = Instance::build(&config.instance)?;
    (0..config.replications as u64)
        .into_par_iter()
        .map(|k| run_replication(config, &instance, config.seed.wrapping_add(k)))
        .collect()
}

/// Runs the experiment and writes its CSV to the resolved output path, if any.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let rows: Vec<ResultRow> = run_replications(config)?.into_iter().map(|(_, r)| r).collect();
    if let Some(path) = resolve_output(config) {
        write_csv_file(&rows, &path)?;
    }
    Ok(rows)
}
