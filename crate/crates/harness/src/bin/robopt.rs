use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use robopt::RunStatus;
use robopt_harness::config::OUTPUT_DIR_ENV;
use robopt_harness::run::{csv_string, resolve_output, write_csv_file};
use robopt_harness::study::{scaling_study, Axis, ScalingFamily};
use robopt_harness::suites;
use robopt_harness::{run_experiment, Algorithm, ExperimentConfig, HarnessError, Overrides};

#[derive(Parser)]
#[command(name = "robopt", version, about = "Robust convex optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one instance for the configured replications and emit CSV.
    Solve(Common),
    /// Sweep the fixed-ratio family and fit log-log query slopes.
    Study(StudyArgs),
    /// Run the acceptance suites.
    Validate {
        /// Only these criteria (1-8); all when omitted.
        #[arg(long = "criterion")]
        criteria: Vec<u8>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_algorithm)]
    algo: Option<Algorithm>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// CSV destination; falls back to the config, then to $ROBOPT_OUTPUT_DIR/results.csv, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    D,
    M,
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "d")]
    axis: AxisArg,
    #[arg(long, value_delimiter = ',', default_values_t = [16usize, 64, 256, 1024])]
    values: Vec<usize>,
    #[arg(long, default_value_t = 4)]
    m: usize,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 16)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse()
}

fn load(common: &Common) -> Result<ExperimentConfig, HarnessError> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    Overrides {
        seed: common.seed,
        algorithm: common.algo,
        s: common.s,
        eps: common.eps,
        delta: common.delta,
        output: common.out.clone(),
    }
    .apply(&mut config)?;
    Ok(config)
}

fn solve(common: &Common) -> Result<ExitCode, HarnessError> {
    let config = load(common)?;
    let rows = run_experiment(&config)?;
    match resolve_output(&config) {
        Some(path) => eprintln!("wrote {} rows to {}", rows.len(), path.display()),
        None => print!("{}", csv_string(&rows)?),
    }
    let infeasible = rows.iter().any(|r| r.status == RunStatus::Infeasible);
    Ok(ExitCode::from(if infeasible { 1 } else { 0 }))
}

fn study(args: &StudyArgs) -> Result<ExitCode, HarnessError> {
    let mut base = load(&args.common)?;
    let algorithms = match args.common.algo {
        Some(a) => vec![a],
        None => vec![Algorithm::Exact, Algorithm::Sampled],
    };
    let axis = match args.axis {
        AxisArg::D => Axis::D,
        AxisArg::M => Axis::M,
    };
    let family = ScalingFamily {
        m: args.m,
        n: args.n,
        d: args.d,
        scale: args.scale,
    };
    let out = resolve_output(&base);
    base.output = None;
    let report = scaling_study(family, axis, &args.values, &algorithms, &base)?;
    if let Some(path) = out {
        write_csv_file(&report.rows, &path)?;
        eprintln!("wrote {} rows to {}", report.rows.len(), path.display());
    }
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(ExitCode::SUCCESS)
}

fn validate(criteria: &[u8]) -> ExitCode {
    let runners: [fn() -> suites::CriterionReport; 8] = [
        suites::criterion_1_moments,
        suites::criterion_2_regret,
        suites::criterion_3_end_to_end,
        suites::criterion_4_infeasibility,
        suites::criterion_5_projections,
        suites::criterion_6_scaling,
        suites::criterion_7_applications,
        suites::criterion_8_determinism,
    ];
    if let Some(bad) = criteria.iter().find(|c| !(1..=8).contains(*c)) {
        eprintln!("error: config key `criterion`: {bad} is not in 1-8");
        return ExitCode::from(2);
    }
    let mut failed = false;
    for (k, run) in runners.iter().enumerate() {
        if criteria.is_empty() || criteria.contains(&(k as u8 + 1)) {
            let report = run();
            failed |= !report.passed;
            println!("{report}");
        }
    }
    ExitCode::from(if failed { 3 } else { 0 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(common) => solve(common),
        Command::Study(args) => study(args),
        Command::Validate { criteria } => Ok(validate(criteria)),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        if matches!(e, HarnessError::Io { .. }) && std::env::var_os(OUTPUT_DIR_ENV).is_some() {
            eprintln!("note: ${OUTPUT_DIR_ENV} is set");
        }
        ExitCode::from(e.exit_code() as u8)
    })
}
