//! A line-oriented language for describing EPR experiments.
//!
//! One directive per line; `#` starts a comment; angles are degrees in
//! the surface syntax (converted to radians only at execution time):
//!
//! ```text
//! # prepare, measure, compare, analyze
//! singlet axis 0 0
//! measure 1 axis 0 0
//! measure 2 axis 60 0
//! compare
//! analyze worlds maxden 8
//! analyze correlation
//! ```
//!
//! Directives:
//!
//! * `singlet axis <polar> <azimuth>` - prepare the singlet (must be the
//!   first directive, exactly once).
//! * `measure <1|2> axis <polar> <azimuth>` - fire a device along a
//!   fixed axis; each device fires at most once.
//! * `measure <1|2> random seed <seed>` - per-run random axis (only
//!   meaningful under `analyze thetascan`, which then runs the
//!   experiment many times and bins by relative angle).
//! * `compare` - fire the comparison apparatus (after both devices).
//! * `analyze worlds maxden <n>` - world census with denominator bound
//!   `n` (requires `compare`).
//! * `analyze correlation` - both exact correlation routes for the two
//!   measured axes (a missing `compare` is inserted automatically, with
//!   a note).
//! * `analyze bell <p1> <a1> <p2> <a2> <p3> <a3>` - Bell test on an
//!   explicit axis triple (degrees).
//! * `analyze lhv <strategy> samples <n> seed <s>` - Monte Carlo LHV
//!   baseline for the measured axis pair.
//! * `analyze thetascan <start> <stop> <points>` - correlation swept
//!   over relative angle; with a random-axis device this becomes a
//!   binned sampling run instead of an exact sweep. The grid includes
//!   both endpoints; a single point sits at the midpoint of the range.
//!
//! [`parse`](parse::parse) reports the first problem with its line and
//! column; [`pretty`] prints a plan back in canonical form such that
//! `parse(pretty(plan)) == plan`; [`execute`](execute::execute) runs a
//! plan into an [`ExperimentReport`](crate::report::ExperimentReport).

pub mod execute;
pub mod parse;

pub use execute::{execute, ExecError, ExecOptions};
pub use parse::{parse, Diagnostic, ParseOutcome};

use crate::lhv::built_in_strategy;
pub use crate::state::Particle;
use serde::Serialize;
use std::fmt::Write as _;

/// A fully validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentPlan {
    pub preparation: Preparation,
    pub steps: Vec<Step>,
    pub analyses: Vec<Analysis>,
}

/// State preparation. Only the singlet is supported; the axis matters
/// only as a bookkeeping origin (the state is rotationally invariant).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Preparation {
    Singlet { polar_deg: f64, azimuth_deg: f64 },
}

/// One pipeline step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Step {
    Measure { device: Particle, axis: AxisSpec },
    Compare,
}

/// Device axis: fixed, or drawn per run from a seeded stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AxisSpec {
    Fixed { polar_deg: f64, azimuth_deg: f64 },
    RandomPerRun { seed: u64 },
}

/// One requested analysis.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Analysis {
    Worlds { max_denominator: u64 },
    Correlation,
    Bell { axes_deg: [[f64; 2]; 3] },
    LhvBaseline { strategy: String, samples: u64, seed: u64 },
    ThetaScan { start_deg: f64, stop_deg: f64, points: u32 },
}

/// Prints a plan in canonical directive syntax (one directive per line,
/// trailing newline, floats in shortest round-trip form). Parsing the
/// output reproduces the plan exactly.
pub fn pretty(plan: &ExperimentPlan) -> String {
    let mut out = String::new();
    let Preparation::Singlet { polar_deg, azimuth_deg } = plan.preparation;
    let _ = writeln!(out, "singlet axis {polar_deg} {azimuth_deg}");
    for step in &plan.steps {
        match step {
            Step::Measure { device, axis: AxisSpec::Fixed { polar_deg, azimuth_deg } } => {
                let _ = writeln!(out, "measure {device} axis {polar_deg} {azimuth_deg}");
            }
            Step::Measure { device, axis: AxisSpec::RandomPerRun { seed } } => {
                let _ = writeln!(out, "measure {device} random seed {seed}");
            }
            Step::Compare => {
                let _ = writeln!(out, "compare");
            }
        }
    }
    for analysis in &plan.analyses {
        match analysis {
            Analysis::Worlds { max_denominator } => {
                let _ = writeln!(out, "analyze worlds maxden {max_denominator}");
            }
            Analysis::Correlation => {
                let _ = writeln!(out, "analyze correlation");
            }
            Analysis::Bell { axes_deg } => {
                let _ = writeln!(
                    out,
                    "analyze bell {} {} {} {} {} {}",
                    axes_deg[0][0],
                    axes_deg[0][1],
                    axes_deg[1][0],
                    axes_deg[1][1],
                    axes_deg[2][0],
                    axes_deg[2][1]
                );
            }
            Analysis::LhvBaseline { strategy, samples, seed } => {
                let _ = writeln!(out, "analyze lhv {strategy} samples {samples} seed {seed}");
            }
            Analysis::ThetaScan { start_deg, stop_deg, points } => {
                let _ = writeln!(out, "analyze thetascan {start_deg} {stop_deg} {points}");
            }
        }
    }
    out
}

/// Structural validation shared by the parser (which additionally knows
/// line positions) and the executor (which may receive programmatically
/// built plans). Returns the first problem as a plain message.
pub fn validate_plan(plan: &ExperimentPlan) -> Result<(), String> {
    let Preparation::Singlet { polar_deg, azimuth_deg } = plan.preparation;
    check_axis_degrees(polar_deg, azimuth_deg)?;

    let mut measured: [Option<AxisSpec>; 2] = [None, None];
    let mut compared = false;
    let mut random_devices = 0usize;
    for step in &plan.steps {
        match *step {
            Step::Measure { device, axis } => {
                if measured[device.index()].is_some() {
                    return Err(format!("device {device} is measured twice"));
                }
                match axis {
                    AxisSpec::Fixed { polar_deg, azimuth_deg } => {
                        check_axis_degrees(polar_deg, azimuth_deg)?
                    }
                    AxisSpec::RandomPerRun { .. } => random_devices += 1,
                }
                if compared {
                    return Err(format!("device {device} is measured after the comparison"));
                }
                measured[device.index()] = Some(axis);
            }
            Step::Compare => {
                if compared {
                    return Err("the comparison apparatus fires twice".into());
                }
                if let Some(unmeasured) =
                    [Particle::One, Particle::Two].iter().find(|p| measured[p.index()].is_none())
                {
                    return Err(format!(
                        "compare before device {unmeasured} has been measured"
                    ));
                }
                compared = true;
            }
        }
    }
    if random_devices > 1 {
        return Err("only one device may use a random per-run axis".into());
    }

    let both_measured = measured[0].is_some() && measured[1].is_some();
    let both_fixed = measured
        .iter()
        .all(|m| matches!(m, Some(AxisSpec::Fixed { .. })));
    for analysis in &plan.analyses {
        match analysis {
            Analysis::Worlds { max_denominator } => {
                if *max_denominator == 0 {
                    return Err("worlds analysis needs maxden >= 1".into());
                }
                if !compared {
                    return Err("worlds analysis requires a compare step".into());
                }
            }
            Analysis::Correlation => {
                if !both_measured || !both_fixed {
                    return Err(
                        "correlation analysis requires both devices measured along fixed axes"
                            .into(),
                    );
                }
                if !compared {
                    return Err("correlation analysis requires a compare step".into());
                }
            }
            Analysis::Bell { axes_deg } => {
                for pair in axes_deg {
                    check_axis_degrees(pair[0], pair[1])?;
                }
            }
            Analysis::LhvBaseline { strategy, samples, .. } => {
                if built_in_strategy(strategy).is_none() {
                    return Err(format!("unknown lhv strategy `{strategy}`"));
                }
                if *samples == 0 {
                    return Err("lhv analysis needs samples >= 1".into());
                }
                if !both_measured || !both_fixed {
                    return Err(
                        "lhv analysis requires both devices measured along fixed axes".into(),
                    );
                }
            }
            Analysis::ThetaScan { start_deg, stop_deg, points } => {
                if !(0.0..=180.0).contains(start_deg)
                    || !(0.0..=180.0).contains(stop_deg)
                    || start_deg > stop_deg
                {
                    return Err(format!(
                        "thetascan range {start_deg}..{stop_deg} must satisfy \
                         0 <= start <= stop <= 180"
                    ));
                }
                if *points < 1 {
                    return Err("thetascan needs at least 1 point".into());
                }
                if !both_measured {
                    return Err("thetascan requires both devices to be measured".into());
                }
            }
        }
    }
    if random_devices == 1 {
        let all_scans =
            plan.analyses.iter().all(|a| matches!(a, Analysis::ThetaScan { .. }));
        if plan.analyses.is_empty() || !all_scans {
            return Err(
                "a random per-run axis is only usable when every analysis is a thetascan".into(),
            );
        }
    }
    Ok(())
}

fn check_axis_degrees(polar: f64, azimuth: f64) -> Result<(), String> {
    if !polar.is_finite() || !azimuth.is_finite() {
        return Err("axis angles must be finite".into());
    }
    if !(0.0..=180.0).contains(&polar) {
        return Err(format!("polar angle {polar} outside [0, 180] degrees"));
    }
    Ok(())
}
