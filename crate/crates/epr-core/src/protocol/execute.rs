//! Plan executor: turns a validated [`ExperimentPlan`] into an
//! [`ExperimentReport`].
//!
//! Plans with fixed axes run the unitary pipeline once and evaluate every
//! analysis against the final entangled state. Plans with one
//! random-per-run axis instead run the pipeline many times; each run
//! draws an inter-axis angle, decomposes the final state into worlds,
//! and samples a single world uniformly, so correlations emerge from
//! world counting alone rather than from reading off amplitudes.

use super::{pretty, validate_plan, Analysis, AxisSpec, ExperimentPlan, Preparation, Step};
use crate::correlation::{bell_test, correlation_operator, CorrelationProvider, QuantumProvider};
use crate::direction::Direction;
use crate::lhv::{built_in_strategy, estimate_correlation};
use crate::measurement::{apply_comparison, apply_measurement, MeasurementError};
use crate::report::{AnalysisOutput, ExperimentReport, Provenance, ScanRow, ThetaBin};
use crate::state::{Particle, StateVector};
use crate::worlds::{decompose_branches, Branch, WorldCensus, WorldError};
use crate::TOOL_VERSION;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Decorrelates the per-run RNG stream family from other uses of the
/// same user-facing seed.
const BIN_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

/// Denominator bound used for per-run world sampling when the plan does
/// not override it.
pub const DEFAULT_BIN_MAX_DENOMINATOR: u64 = 1_000_000;

/// Knobs that adjust execution without editing the plan text.
#[derive(Debug, Clone)]
pub struct ExecOptions {
    /// Replaces every analysis seed and the random-axis seed.
    pub seed_override: Option<u64>,
    /// Replaces every Monte Carlo sample count.
    pub samples_override: Option<u64>,
    /// Replaces every world-census denominator bound.
    pub max_denominator_override: Option<u64>,
    /// Number of runs for randomized-axis plans.
    pub scan_runs: u64,
    /// Half-width of each angle bin in degrees; defaults to half the
    /// grid spacing (every run lands in some bin).
    pub bin_tolerance_deg: Option<f64>,
    /// Recorded verbatim in provenance; `None` keeps reruns
    /// byte-identical.
    pub timestamp: Option<String>,
}

impl Default for ExecOptions {
    fn default() -> ExecOptions {
        ExecOptions {
            seed_override: None,
            samples_override: None,
            max_denominator_override: None,
            scan_runs: 100_000,
            bin_tolerance_deg: None,
            timestamp: None,
        }
    }
}

/// Execution failure.
#[derive(Debug, Error)]
pub enum ExecError {
    /// The plan failed structural validation.
    #[error("invalid plan: {message}")]
    InvalidPlan { message: String },
    /// A measurement or comparison step was rejected; `index` is the
    /// step's position in the plan.
    #[error("step {index}: {source}")]
    Measurement {
        index: usize,
        #[source]
        source: MeasurementError,
    },
    /// World decomposition or census assembly failed; `index` is the
    /// analysis's position in the plan.
    #[error("analysis {index}: {source}")]
    Worlds {
        index: usize,
        #[source]
        source: WorldError,
    },
    /// An analysis named a hidden-variable strategy this build does not
    /// provide; `index` is the analysis's position in the plan.
    #[error("analysis {index}: unknown lhv strategy `{name}`")]
    UnknownStrategy { index: usize, name: String },
}

/// Executes a plan. The returned report carries no notes; callers that
/// parsed the plan from text may attach the parser's notes.
pub fn execute(plan: &ExperimentPlan, opts: &ExecOptions) -> Result<ExperimentReport, ExecError> {
    validate_plan(plan).map_err(|message| ExecError::InvalidPlan { message })?;
    let has_random = plan
        .steps
        .iter()
        .any(|s| matches!(s, Step::Measure { axis: AxisSpec::RandomPerRun { .. }, .. }));
    let results =
        if has_random { execute_binned(plan, opts)? } else { execute_deterministic(plan, opts)? };
    Ok(ExperimentReport {
        plan_echo: pretty(plan),
        notes: Vec::new(),
        results,
        provenance: Provenance {
            version: TOOL_VERSION.to_string(),
            seed: opts.seed_override,
            timestamp: opts.timestamp.clone(),
        },
    })
}

fn invalid(e: impl std::fmt::Display) -> ExecError {
    ExecError::InvalidPlan { message: e.to_string() }
}

fn preparation_axis(plan: &ExperimentPlan) -> Result<Direction, ExecError> {
    let Preparation::Singlet { polar_deg, azimuth_deg } = plan.preparation;
    Direction::from_degrees(polar_deg, azimuth_deg).map_err(invalid)
}

fn execute_deterministic(
    plan: &ExperimentPlan,
    opts: &ExecOptions,
) -> Result<Vec<AnalysisOutput>, ExecError> {
    let mut state = StateVector::singlet(preparation_axis(plan)?);
    let mut axes: [Option<Direction>; 2] = [None, None];
    for (index, step) in plan.steps.iter().enumerate() {
        match step {
            Step::Measure { device, axis: AxisSpec::Fixed { polar_deg, azimuth_deg } } => {
                let dir = Direction::from_degrees(*polar_deg, *azimuth_deg).map_err(invalid)?;
                state = apply_measurement(&state, *device, dir)
                    .map_err(|source| ExecError::Measurement { index, source })?;
                axes[device.index()] = Some(dir);
            }
            Step::Measure { axis: AxisSpec::RandomPerRun { .. }, .. } => {
                unreachable!("deterministic path never sees random axes")
            }
            Step::Compare => {
                state = apply_comparison(&state)
                    .map_err(|source| ExecError::Measurement { index, source })?;
            }
        }
    }
    plan.analyses
        .iter()
        .enumerate()
        .map(|(index, analysis)| run_analysis(opts, &state, &axes, index, analysis))
        .collect()
}

/// Evenly spaced angle grid including both endpoints; a single point
/// sits at the midpoint of the range.
fn grid_theta(start_deg: f64, stop_deg: f64, points: u32, i: u32) -> f64 {
    if points == 1 {
        (start_deg + stop_deg) / 2.0
    } else {
        start_deg + (stop_deg - start_deg) * i as f64 / (points - 1) as f64
    }
}

/// Average outcome product over decomposed branches, weighted by squared
/// amplitude.
fn branch_correlation(branches: &[Branch]) -> f64 {
    branches
        .iter()
        .map(|b| b.outcome_product().expect("decomposed branches have fired devices") as f64 * b.weight)
        .sum()
}

fn run_analysis(
    opts: &ExecOptions,
    state: &StateVector,
    axes: &[Option<Direction>; 2],
    index: usize,
    analysis: &Analysis,
) -> Result<AnalysisOutput, ExecError> {
    let world_err = |source| ExecError::Worlds { index, source };
    match analysis {
        Analysis::Worlds { max_denominator } => {
            let maxden = opts.max_denominator_override.unwrap_or(*max_denominator);
            let branches = decompose_branches(state).map_err(world_err)?;
            let census = WorldCensus::assemble(branches, maxden).map_err(world_err)?;
            Ok(AnalysisOutput::Worlds { max_denominator: maxden, census })
        }
        Analysis::Correlation => {
            let axis1 = axes[0].expect("validated: device 1 measured");
            let axis2 = axes[1].expect("validated: device 2 measured");
            let branches = decompose_branches(state).map_err(world_err)?;
            Ok(AnalysisOutput::Correlation {
                axis1,
                axis2,
                world_counting: branch_correlation(&branches),
                operator_expectation: correlation_operator(&axis1, &axis2).value,
            })
        }
        Analysis::Bell { axes_deg } => {
            let mut dirs = [Direction::Z; 3];
            for (dir, [polar, azimuth]) in dirs.iter_mut().zip(axes_deg) {
                *dir = Direction::from_degrees(*polar, *azimuth).map_err(invalid)?;
            }
            Ok(AnalysisOutput::Bell {
                verdict: bell_test(&QuantumProvider::WorldCounting, &dirs),
            })
        }
        Analysis::LhvBaseline { strategy, samples, seed } => {
            let strat = built_in_strategy(strategy)
                .ok_or_else(|| ExecError::UnknownStrategy { index, name: strategy.clone() })?;
            let samples = opts.samples_override.unwrap_or(*samples);
            let seed = opts.seed_override.unwrap_or(*seed);
            let axis1 = axes[0].expect("validated: device 1 measured");
            let axis2 = axes[1].expect("validated: device 2 measured");
            let result = estimate_correlation(strat.as_ref(), &axis1, &axis2, samples, seed);
            Ok(AnalysisOutput::LhvBaseline {
                strategy: strategy.clone(),
                samples,
                seed,
                result,
            })
        }
        Analysis::ThetaScan { start_deg, stop_deg, points } => {
            let anchor = axes[0].expect("validated: device 1 measured");
            let rows = (0..*points)
                .map(|i| {
                    let theta_deg = grid_theta(*start_deg, *stop_deg, *points, i);
                    let swept = anchor.at_angle(theta_deg.to_radians());
                    ScanRow {
                        theta_deg,
                        e_world_counting: QuantumProvider::WorldCounting
                            .correlate(&anchor, &swept)
                            .value,
                        e_operator: correlation_operator(&anchor, &swept).value,
                    }
                })
                .collect();
            Ok(AnalysisOutput::ThetaScan { rows })
        }
    }
}

struct BinnedContext<'a> {
    plan: &'a ExperimentPlan,
    prep: Direction,
    /// The fixed device's axis; drawn angles are measured from it.
    anchor: Direction,
    random_device: Particle,
    seed: u64,
    max_denominator: u64,
    runs: u64,
}

fn execute_binned(
    plan: &ExperimentPlan,
    opts: &ExecOptions,
) -> Result<Vec<AnalysisOutput>, ExecError> {
    let prep = preparation_axis(plan)?;
    let mut random: Option<(Particle, u64)> = None;
    let mut anchor: Option<Direction> = None;
    for step in &plan.steps {
        if let Step::Measure { device, axis } = step {
            match axis {
                AxisSpec::RandomPerRun { seed } => random = Some((*device, *seed)),
                AxisSpec::Fixed { polar_deg, azimuth_deg } => {
                    anchor = Some(Direction::from_degrees(*polar_deg, *azimuth_deg).map_err(invalid)?);
                }
            }
        }
    }
    let (random_device, step_seed) = random.expect("validated: one random axis present");
    let ctx = BinnedContext {
        plan,
        prep,
        anchor: anchor.expect("validated: the other device has a fixed axis"),
        random_device,
        seed: opts.seed_override.unwrap_or(step_seed),
        max_denominator: opts.max_denominator_override.unwrap_or(DEFAULT_BIN_MAX_DENOMINATOR),
        runs: opts.scan_runs,
    };
    plan.analyses
        .iter()
        .enumerate()
        .map(|(index, analysis)| {
            let Analysis::ThetaScan { start_deg, stop_deg, points } = analysis else {
                unreachable!("validated: randomized plans only carry thetascan analyses")
            };
            run_binned_scan(&ctx, opts, index, *start_deg, *stop_deg, *points)
        })
        .collect()
}

/// One randomized scan: `runs` independent pipelines, each sampling one
/// world from its census; outcome products are pooled and binned.
fn run_binned_scan(
    ctx: &BinnedContext<'_>,
    opts: &ExecOptions,
    index: usize,
    start_deg: f64,
    stop_deg: f64,
    points: u32,
) -> Result<AnalysisOutput, ExecError> {
    let n = points as usize;
    let spacing = if points > 1 {
        (stop_deg - start_deg) / (points - 1) as f64
    } else {
        stop_deg - start_deg
    };
    let tolerance = opts.bin_tolerance_deg.unwrap_or(spacing / 2.0);
    let centers: Vec<f64> =
        (0..points).map(|i| grid_theta(start_deg, stop_deg, points, i)).collect();
    let mut bin_sums = vec![0i64; n];
    let mut bin_runs = vec![0u64; n];
    let mut pooled_sum = 0i64;
    let mut discarded = 0u64;

    for run in 0..ctx.runs {
        // One counter-derived stream per run: results do not depend on
        // run scheduling, and any run can be reproduced in isolation.
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ BIN_SEED_SALT);
        rng.set_stream(run);
        let theta_deg = start_deg + (stop_deg - start_deg) * rng.gen::<f64>();
        let random_axis = ctx.anchor.at_angle(theta_deg.to_radians());

        let mut state = StateVector::singlet(ctx.prep);
        for (step_index, step) in ctx.plan.steps.iter().enumerate() {
            match step {
                Step::Measure { device, .. } => {
                    let dir =
                        if *device == ctx.random_device { random_axis } else { ctx.anchor };
                    state = apply_measurement(&state, *device, dir)
                        .map_err(|source| ExecError::Measurement { index: step_index, source })?;
                }
                Step::Compare => {
                    state = apply_comparison(&state)
                        .map_err(|source| ExecError::Measurement { index: step_index, source })?;
                }
            }
        }
        let branches = decompose_branches(&state)
            .map_err(|source| ExecError::Worlds { index, source })?;
        let census = WorldCensus::assemble(branches, ctx.max_denominator)
            .map_err(|source| ExecError::Worlds { index, source })?;

        // Sample one world uniformly from the equipossible refinement.
        let draw = rng.gen_range(0..census.total_worlds);
        let mut cumulative = 0u64;
        let mut outcome = 0i64;
        for entry in &census.entries {
            cumulative += entry.world_count;
            if draw < cumulative {
                outcome = entry
                    .branch
                    .outcome_product()
                    .expect("decomposed branches have fired devices")
                    as i64;
                break;
            }
        }
        pooled_sum += outcome;

        let pos = if spacing > 0.0 { (theta_deg - start_deg) / spacing } else { 0.0 };
        let bin = (pos.round() as usize).min(n - 1);
        if (theta_deg - centers[bin]).abs() <= tolerance {
            bin_sums[bin] += outcome;
            bin_runs[bin] += 1;
        } else {
            discarded += 1;
        }
    }

    let rows = centers
        .iter()
        .zip(bin_runs.iter().zip(&bin_sums))
        .map(|(&center, (&runs, &sum))| ThetaBin {
            theta_center_deg: center,
            runs,
            mean_product: if runs > 0 { sum as f64 / runs as f64 } else { 0.0 },
            expected_quantum: -center.to_radians().cos(),
        })
        .collect();

    Ok(AnalysisOutput::BinnedScan {
        start_deg,
        stop_deg,
        tolerance_deg: tolerance,
        total_runs: ctx.runs,
        discarded_runs: discarded,
        pooled_mean: pooled_sum as f64 / ctx.runs as f64,
        seed: ctx.seed,
        max_denominator: ctx.max_denominator,
        rows,
    })
}
