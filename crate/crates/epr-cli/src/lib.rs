//! Command-line front end for the unitary spin-correlation simulator.
//!
//! Six subcommands cover the workflows: `run` executes a protocol file,
//! `scan` sweeps the inter-axis angle through both exact quantum routes,
//! `bin` estimates the correlation curve by sampling one world per run,
//! `bell` evaluates the three-axis inequality, `lhv` sweeps a classical
//! hidden-variable baseline against the quantum curves, and `worlds`
//! prints a branch census. Reports serialize as canonical JSON (default)
//! or CSV and are byte-identical across reruns with the same inputs.
//!
//! Exit codes: 0 on success, 1 when a protocol fails to parse or
//! validate (the diagnostic goes to standard error as
//! `file:line:col: message`), 2 on any other failure.

use clap::{Parser, Subcommand, ValueEnum};
use epr_core::correlation::{
    bell_test, bisector_triple, correlation_operator, correlation_world_counting, LhvProvider,
    QuantumProvider,
};
use epr_core::lhv::{built_in_strategy, estimate_correlation};
use epr_core::protocol::{
    execute, parse, Analysis, AxisSpec, ExecOptions, ExperimentPlan, Particle, Preparation, Step,
};
use epr_core::report::{AnalysisOutput, ExperimentReport, LhvScanRow, Provenance};
use epr_core::{Direction, TOOL_VERSION};
use std::fmt;
use std::path::PathBuf;

/// Default sample budget for Monte Carlo estimates when neither the
/// command nor `--samples` specifies one.
const DEFAULT_SAMPLES: u64 = 100_000;

/// Unitary spin-correlation experiment simulator.
#[derive(Debug, Parser)]
#[command(name = "epr", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write the report to this path instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Seed override; beats the EPR_SEED environment variable, which
    /// beats seeds written in protocol files.
    #[arg(long, global = true, env = "EPR_SEED")]
    pub seed: Option<u64>,

    /// Sample-count override for Monte Carlo analyses.
    #[arg(long, global = true)]
    pub samples: Option<u64>,

    /// Denominator-bound override for world censuses.
    #[arg(long, global = true)]
    pub maxden: Option<u64>,

    /// Record this timestamp string in provenance. Omitted by default so
    /// identical inputs produce byte-identical reports.
    #[arg(long, global = true)]
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute an experiment protocol file (conventionally `.epr`).
    Run {
        /// Protocol file path.
        file: PathBuf,
        /// Runs for protocols with a random per-run axis.
        #[arg(long, default_value_t = 100_000)]
        runs: u64,
        /// Bin half-width in degrees for randomized protocols
        /// (default: half the bin spacing).
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Sweep the inter-axis angle; report both exact quantum routes.
    Scan {
        /// First grid angle in degrees.
        #[arg(long, default_value_t = 0.0)]
        start: f64,
        /// Last grid angle in degrees.
        #[arg(long, default_value_t = 180.0)]
        stop: f64,
        /// Grid size (endpoints included).
        #[arg(long, default_value_t = 181)]
        points: u32,
    },
    /// Run many singlet pairs with a random per-run angle, sample one
    /// world from each run's census, and bin the outcome products.
    Bin {
        /// Total simulated runs.
        #[arg(long, default_value_t = 100_000)]
        runs: u64,
        /// Number of bin centers, evenly spaced over [0, 180] degrees
        /// (a single bin sits at 90).
        #[arg(long, default_value_t = 19)]
        bins: u32,
        /// Bin half-width in degrees (default: half the spacing; runs
        /// outside every bin are discarded but still pooled).
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Evaluate the three-axis Bell inequality.
    Bell {
        /// Bisector-family half-angle in degrees: axis 2 is at twice
        /// this angle from axis 3, axis 1 bisects. 45 gives the maximal
        /// lhs = sqrt(2) against rhs = 1.
        #[arg(long, default_value_t = 45.0, conflicts_with = "axes")]
        phi: f64,
        /// Explicit axis triple as six degrees: p1,a1,p2,a2,p3,a3.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        axes: Option<Vec<f64>>,
        /// Correlation source: quantum:world_counting, quantum:operator,
        /// or lhv:<strategy>.
        #[arg(long, default_value = "quantum:world_counting")]
        source: String,
    },
    /// Sweep a hidden-variable strategy against the quantum curves.
    Lhv {
        /// Strategy name (built in: sgn).
        #[arg(long, default_value = "sgn")]
        strategy: String,
        /// First grid angle in degrees.
        #[arg(long, default_value_t = 0.0)]
        start: f64,
        /// Last grid angle in degrees.
        #[arg(long, default_value_t = 180.0)]
        stop: f64,
        /// Grid size (endpoints included).
        #[arg(long, default_value_t = 19)]
        points: u32,
    },
    /// Print the world census for a relative measurement angle.
    Worlds {
        /// Angle between the two device axes, degrees.
        #[arg(long, default_value_t = 60.0)]
        theta: f64,
    },
}

/// Failure modes, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Protocol parse or validation diagnostic; exit code 1.
    Diagnostic(String),
    /// Any other failure; exit code 2.
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Diagnostic(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Diagnostic(message) => write!(f, "{message}"),
            CliError::Runtime(error) => write!(f, "error: {error:#}"),
        }
    }
}

fn runtime(error: impl Into<anyhow::Error>) -> CliError {
    CliError::Runtime(error.into())
}

/// Runs one parsed invocation to completion: builds the report and
/// writes it in the requested format.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let report = build_report(&cli)?;
    let rendered = match cli.format {
        Format::Json => report.to_canonical_json(),
        Format::Csv => report.to_csv(),
    };
    match &cli.out {
        Some(path) => std::fs::write(path, rendered)
            .map_err(|e| runtime(anyhow::anyhow!("cannot write {}: {e}", path.display())))?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn exec_options(cli: &Cli, runs: Option<u64>, tolerance: Option<f64>) -> ExecOptions {
    let defaults = ExecOptions::default();
    ExecOptions {
        seed_override: cli.seed,
        samples_override: cli.samples,
        max_denominator_override: cli.maxden,
        scan_runs: runs.unwrap_or(defaults.scan_runs),
        bin_tolerance_deg: tolerance,
        timestamp: cli.timestamp.clone(),
    }
}

fn provenance(cli: &Cli) -> Provenance {
    Provenance {
        version: TOOL_VERSION.to_string(),
        seed: cli.seed,
        timestamp: cli.timestamp.clone(),
    }
}

fn fixed(polar_deg: f64, azimuth_deg: f64) -> AxisSpec {
    AxisSpec::Fixed { polar_deg, azimuth_deg }
}

fn execute_plan(plan: &ExperimentPlan, opts: &ExecOptions) -> Result<ExperimentReport, CliError> {
    execute(plan, opts).map_err(runtime)
}

fn build_report(cli: &Cli) -> Result<ExperimentReport, CliError> {
    match &cli.command {
        Command::Run { file, runs, tolerance } => {
            let text = std::fs::read_to_string(file)
                .map_err(|e| runtime(anyhow::anyhow!("cannot read {}: {e}", file.display())))?;
            let outcome = parse(&text)
                .map_err(|d| CliError::Diagnostic(format!("{}:{d}", file.display())))?;
            let opts = exec_options(cli, Some(*runs), *tolerance);
            let mut report = execute_plan(&outcome.plan, &opts)?;
            report.notes = outcome.notes;
            Ok(report)
        }
        Command::Scan { start, stop, points } => {
            let plan = ExperimentPlan {
                preparation: Preparation::Singlet { polar_deg: 0.0, azimuth_deg: 0.0 },
                steps: vec![
                    Step::Measure { device: Particle::One, axis: fixed(0.0, 0.0) },
                    Step::Measure { device: Particle::Two, axis: fixed(0.0, 0.0) },
                ],
                analyses: vec![Analysis::ThetaScan {
                    start_deg: *start,
                    stop_deg: *stop,
                    points: *points,
                }],
            };
            execute_plan(&plan, &exec_options(cli, None, None))
        }
        Command::Bin { runs, bins, tolerance } => {
            let plan = ExperimentPlan {
                preparation: Preparation::Singlet { polar_deg: 0.0, azimuth_deg: 0.0 },
                steps: vec![
                    Step::Measure { device: Particle::One, axis: fixed(0.0, 0.0) },
                    Step::Measure {
                        device: Particle::Two,
                        axis: AxisSpec::RandomPerRun { seed: cli.seed.unwrap_or(0) },
                    },
                    Step::Compare,
                ],
                analyses: vec![Analysis::ThetaScan {
                    start_deg: 0.0,
                    stop_deg: 180.0,
                    points: *bins,
                }],
            };
            execute_plan(&plan, &exec_options(cli, Some(*runs), *tolerance))
        }
        Command::Bell { phi, axes, source } => bell_report(cli, *phi, axes.as_deref(), source),
        Command::Lhv { strategy, start, stop, points } => {
            lhv_report(cli, strategy, *start, *stop, *points)
        }
        Command::Worlds { theta } => {
            let plan = ExperimentPlan {
                preparation: Preparation::Singlet { polar_deg: 0.0, azimuth_deg: 0.0 },
                steps: vec![
                    Step::Measure { device: Particle::One, axis: fixed(0.0, 0.0) },
                    Step::Measure { device: Particle::Two, axis: fixed(*theta, 0.0) },
                    Step::Compare,
                ],
                analyses: vec![Analysis::Worlds {
                    max_denominator: cli.maxden.unwrap_or(1_000_000),
                }],
            };
            execute_plan(&plan, &exec_options(cli, None, None))
        }
    }
}

fn bell_report(
    cli: &Cli,
    phi: f64,
    axes: Option<&[f64]>,
    source: &str,
) -> Result<ExperimentReport, CliError> {
    let dirs: [Direction; 3] = match axes {
        Some(values) => {
            if values.len() != 6 {
                return Err(runtime(anyhow::anyhow!(
                    "--axes needs exactly six comma-separated degrees \
                     (p1,a1,p2,a2,p3,a3), got {}",
                    values.len()
                )));
            }
            let mut dirs = [Direction::Z; 3];
            for (dir, pair) in dirs.iter_mut().zip(values.chunks_exact(2)) {
                *dir = Direction::from_degrees(pair[0], pair[1]).map_err(runtime)?;
            }
            dirs
        }
        None => {
            if !(phi > 0.0 && phi < 90.0) {
                return Err(runtime(anyhow::anyhow!(
                    "--phi must lie strictly between 0 and 90 degrees, got {phi}"
                )));
            }
            bisector_triple(phi.to_radians())
        }
    };
    let verdict = match source {
        "quantum:world_counting" => bell_test(&QuantumProvider::WorldCounting, &dirs),
        "quantum:operator" => bell_test(&QuantumProvider::Operator, &dirs),
        other => match other.strip_prefix("lhv:") {
            Some(name) => {
                let strategy = built_in_strategy(name).ok_or_else(|| {
                    runtime(anyhow::anyhow!("unknown lhv strategy `{name}`"))
                })?;
                let provider = LhvProvider {
                    strategy: strategy.as_ref(),
                    samples: cli.samples.unwrap_or(DEFAULT_SAMPLES),
                    seed: cli.seed.unwrap_or(0),
                };
                bell_test(&provider, &dirs)
            }
            None => {
                return Err(runtime(anyhow::anyhow!(
                    "unknown source `{other}`; use quantum:world_counting, \
                     quantum:operator, or lhv:<strategy>"
                )))
            }
        },
    };
    let echo = format!(
        "# epr bell --source {source} --axes {}\n",
        dirs.map(|d| format!("{},{}", d.polar_degrees(), d.azimuth_degrees())).join(",")
    );
    Ok(ExperimentReport {
        plan_echo: echo,
        notes: Vec::new(),
        results: vec![AnalysisOutput::Bell { verdict }],
        provenance: provenance(cli),
    })
}

fn lhv_report(
    cli: &Cli,
    strategy_name: &str,
    start: f64,
    stop: f64,
    points: u32,
) -> Result<ExperimentReport, CliError> {
    if points < 1 {
        return Err(runtime(anyhow::anyhow!("--points must be at least 1")));
    }
    if !(start.is_finite() && stop.is_finite() && start <= stop) {
        return Err(runtime(anyhow::anyhow!(
            "angle range {start}..{stop} must satisfy start <= stop"
        )));
    }
    let strategy = built_in_strategy(strategy_name)
        .ok_or_else(|| runtime(anyhow::anyhow!("unknown lhv strategy `{strategy_name}`")))?;
    let samples = cli.samples.unwrap_or(DEFAULT_SAMPLES);
    let seed = cli.seed.unwrap_or(0);
    let anchor = Direction::Z;
    let rows = (0..points)
        .map(|i| {
            let theta_deg = if points == 1 {
                (start + stop) / 2.0
            } else {
                start + (stop - start) * i as f64 / (points - 1) as f64
            };
            let swept = anchor.at_angle(theta_deg.to_radians());
            let estimate =
                estimate_correlation(strategy.as_ref(), &anchor, &swept, samples, seed);
            LhvScanRow {
                theta_deg,
                e_world_counting: correlation_world_counting(&anchor, &swept).value,
                e_operator: correlation_operator(&anchor, &swept).value,
                e_lhv: estimate.mean,
                lhv_stderr: estimate.stderr,
            }
        })
        .collect();
    let echo = format!(
        "# epr lhv --strategy {strategy_name} --start {start} --stop {stop} \
         --points {points} --samples {samples} --seed {seed}\n"
    );
    Ok(ExperimentReport {
        plan_echo: echo,
        notes: Vec::new(),
        results: vec![AnalysisOutput::LhvScan {
            strategy: strategy_name.to_string(),
            samples,
            seed,
            rows,
        }],
        provenance: provenance(cli),
    })
}
