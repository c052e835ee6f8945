//! `mmlppca`: fit a probabilistic PCA model at a given rank, choose the rank
//! by MML, BIC or the Laplace evidence, or run the simulation suites.
//!
//! Exit codes: 0 on success, 2 for unreadable input, bad flags or an invalid
//! config, 3 when the model itself cannot be fitted as asked.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use core_lib::simlab::{
    parse_config, run_estimation_experiment, run_selection_experiment, write_estimation_csv,
    write_selection_csv, SimConfig, SimResult,
};
use core_lib::{
    candidate_ranks, max_rank, ml_estimate, mml::isotropic_fit, mml_estimate, select_rank,
    spectrum_of, CodelengthBreakdown, Criterion, DataMatrix, Error, Estimator, PcaFit,
    SelectionReport, Spectrum,
};
use serde::Serialize;

const SCHEMA_VERSION: u32 = 1;
const THREADS_ENV: &str = "MMLPPCA_THREADS";

#[derive(Parser)]
#[command(
    name = "mmlppca",
    version,
    about = "MML rank selection for probabilistic PCA"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the model at a fixed rank.
    Fit {
        /// CSV file, one observation per row. A header row is optional.
        input: PathBuf,
        #[arg(long)]
        rank: usize,
        #[arg(long, value_enum, default_value_t = EstimatorArg::Mml)]
        estimator: EstimatorArg,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Score every candidate rank and pick the best.
    Select {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = CriterionArg::Mml)]
        criterion: CriterionArg,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a simulation grid described by a TOML config.
    Simulate {
        config: PathBuf,
        #[arg(long, value_enum)]
        suite: Suite,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Same as `simulate --suite estimate`.
    SimEstimate {
        config: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Same as `simulate --suite select`.
    SimSelect {
        config: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
    },
}

#[derive(Args)]
struct SimArgs {
    /// Overrides every seed in the config.
    #[arg(long, value_parser = parse_seed)]
    seed: Option<u64>,
    /// Overrides every replication count in the config.
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Ml,
    Mml,
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    Mml,
    Bic,
    #[value(alias = "bayes")]
    Laplace,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Estimate,
    Select,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Accepts decimal or `0x` hex.
fn parse_seed(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed '{s}': {e}"))
}

/// A failure with its exit code and, for model errors, a JSON body.
struct Failure {
    code: u8,
    message: String,
    report: Option<String>,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
            report: None,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidData(_) | Error::InvalidConfig(_) => 2,
            _ => 3,
        };
        Self {
            code,
            message: e.to_string(),
            report: None,
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::input(format!("io: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fit {
            input,
            rank,
            estimator,
            output,
        } => cmd_fit(&input, rank, estimator, output.as_deref()),
        Command::Select {
            input,
            criterion,
            output,
        } => cmd_select(&input, criterion, output.as_deref()),
        Command::Simulate { config, suite, sim } => cmd_simulate(&config, suite, &sim),
        Command::SimEstimate { config, sim } => cmd_simulate(&config, Suite::Estimate, &sim),
        Command::SimSelect { config, sim } => cmd_simulate(&config, Suite::Select, &sim),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if let Some(report) = f.report {
                println!("{report}");
            }
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_spectrum(path: &Path) -> Result<Spectrum, Failure> {
    let data = DataMatrix::from_csv_path(path).map_err(|e| Failure::input(e.to_string()))?;
    spectrum_of(&data).map_err(Failure::from)
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), Failure> {
    match output {
        Some(path) => {
            let mut f = File::create(path)?;
            writeln!(f, "{text}")?;
        }
        None => {
            let mut out = io::stdout().lock();
            match writeln!(out, "{text}") {
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

#[derive(Serialize)]
struct FitReport {
    schema_version: u32,
    command: &'static str,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "J")]
    j: usize,
    requested_rank: usize,
    estimator: &'static str,
    sigma2: f64,
    alphas: Vec<f64>,
    eigenvalues: Vec<f64>,
    codelength: Option<CodelengthBreakdown>,
    fallback: bool,
    reason: Option<String>,
    warnings: Vec<String>,
}

impl FitReport {
    fn new(spec: &Spectrum, requested: usize, fit: &PcaFit) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: "fit",
            n: spec.n(),
            k: spec.k(),
            j: fit.rank,
            requested_rank: requested,
            estimator: fit.estimator.as_str(),
            sigma2: fit.sigma2,
            alphas: fit.alphas.clone(),
            eigenvalues: spec.eigenvalues().to_vec(),
            codelength: fit.codelength,
            fallback: false,
            reason: None,
            warnings: Vec::new(),
        }
    }
}

#[derive(Serialize)]
struct ErrorReport {
    schema_version: u32,
    command: &'static str,
    kind: &'static str,
    reason: String,
}

fn cmd_fit(
    input: &Path,
    rank: usize,
    estimator: EstimatorArg,
    output: Option<&Path>,
) -> Result<(), Failure> {
    let spec = load_spectrum(input)?;
    let limit = max_rank(spec.k());
    if rank > limit {
        let reason = "rank exceeds identifiable maximum".to_string();
        return Err(Failure {
            code: 3,
            message: format!("{reason}: rank {rank} > {limit} for K = {}", spec.k()),
            report: Some(to_json(&ErrorReport {
                schema_version: SCHEMA_VERSION,
                command: "fit",
                kind: "InvalidRank",
                reason,
            })),
        });
    }
    let estimator = match estimator {
        EstimatorArg::Ml => Estimator::Ml,
        EstimatorArg::Mml => Estimator::Mml,
    };
    let attempt = match estimator {
        Estimator::Ml => ml_estimate(&spec, rank),
        Estimator::Mml => mml_estimate(&spec, rank),
    };
    match attempt {
        Ok(fit) => emit(&to_json(&FitReport::new(&spec, rank, &fit)), output),
        Err(e @ Error::NoValidRoot { .. }) => {
            let fit = isotropic_fit(&spec, estimator)?;
            let mut report = FitReport::new(&spec, rank, &fit);
            report.fallback = true;
            report.reason = Some(e.kind().to_string());
            report
                .warnings
                .push(format!("{e}; reporting the rank-0 model"));
            emit(&to_json(&report), output)?;
            Err(Failure {
                code: 3,
                message: e.to_string(),
                report: None,
            })
        }
        Err(e) => {
            let kind = e.kind();
            let message = e.to_string();
            Err(Failure {
                code: 3,
                report: Some(to_json(&ErrorReport {
                    schema_version: SCHEMA_VERSION,
                    command: "fit",
                    kind,
                    reason: message.clone(),
                })),
                message,
            })
        }
    }
}

#[derive(Serialize)]
struct CriterionReport {
    selected_rank: usize,
    scores: BTreeMap<usize, f64>,
    skipped: BTreeMap<usize, String>,
}

impl From<SelectionReport> for CriterionReport {
    fn from(r: SelectionReport) -> Self {
        Self {
            selected_rank: r.selected_rank,
            scores: r.scores,
            skipped: r.skipped,
        }
    }
}

#[derive(Serialize)]
struct SelectReport {
    schema_version: u32,
    command: &'static str,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "K")]
    k: usize,
    max_rank: usize,
    candidates: Vec<usize>,
    eigenvalues: Vec<f64>,
    criteria: BTreeMap<&'static str, CriterionReport>,
}

fn cmd_select(input: &Path, criterion: CriterionArg, output: Option<&Path>) -> Result<(), Failure> {
    let spec = load_spectrum(input)?;
    let chosen: Vec<Criterion> = match criterion {
        CriterionArg::Mml => vec![Criterion::Mml],
        CriterionArg::Bic => vec![Criterion::Bic],
        CriterionArg::Laplace => vec![Criterion::Laplace],
        CriterionArg::All => Criterion::ALL.to_vec(),
    };
    let report = SelectReport {
        schema_version: SCHEMA_VERSION,
        command: "select",
        n: spec.n(),
        k: spec.k(),
        max_rank: max_rank(spec.k()),
        candidates: candidate_ranks(spec.k()).collect(),
        eigenvalues: spec.eigenvalues().to_vec(),
        criteria: chosen
            .into_iter()
            .map(|c| (c.as_str(), select_rank(&spec, c).into()))
            .collect(),
    };
    emit(&to_json(&report), output)
}

#[derive(Serialize)]
struct SimReport<'a> {
    schema_version: u32,
    command: &'static str,
    suite: &'static str,
    results: &'a [SimResult],
}

fn threads_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(Failure::input(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))),
        },
        Err(_) => Ok(None),
    }
}

fn cmd_simulate(path: &Path, suite: Suite, args: &SimArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let mut configs = parse_config(&text)?;
    let threads = threads_from_env()?;
    for cfg in &mut configs {
        if let Some(seed) = args.seed {
            cfg.master_seed = seed;
        }
        if let Some(r) = args.replications {
            cfg.replications = r;
        }
        cfg.threads = threads;
        cfg.validate()?;
    }

    let run: fn(&SimConfig) -> core_lib::Result<SimResult> = match suite {
        Suite::Estimate => run_estimation_experiment,
        Suite::Select => run_selection_experiment,
    };
    let mut results = Vec::with_capacity(configs.len());
    for cfg in &configs {
        let r = run(cfg)?;
        eprintln!("{}", one_line(&r));
        results.push(r);
    }

    let mut out: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match args.format {
        Format::Csv => match suite {
            Suite::Estimate => write_estimation_csv(&results, &mut out)?,
            Suite::Select => write_selection_csv(&results, &mut out)?,
        },
        Format::Json => {
            let report = SimReport {
                schema_version: SCHEMA_VERSION,
                command: "simulate",
                suite: match suite {
                    Suite::Estimate => "estimate",
                    Suite::Select => "select",
                },
                results: &results,
            };
            writeln!(out, "{}", to_json(&report))?;
        }
    }
    match out.flush() {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn one_line(r: &SimResult) -> String {
    let c = &r.config;
    let mut line = format!("N={} K={} J={} reps={}", c.n, c.k, c.j_true, r.replications);
    for (name, e) in &r.estimators {
        line.push_str(&format!(
            " | {name} S1={:.4} S2={:.4} KL={:.4}",
            e.s1.mean, e.s2.mean, e.kl.mean
        ));
    }
    for (name, s) in &r.criteria {
        line.push_str(&format!(
            " | {name} correct={:.2}% KL={:.4}",
            100.0 * s.rate_equal,
            s.kl.mean
        ));
    }
    line
}
