//! Result containers and stable serialization.
//!
//! Reports are designed for byte-identical reproduction: analyses are
//! emitted in plan order, every map is ordered, and every float is
//! formatted as `{:.16e}` (17 significant digits, enough to round-trip an
//! `f64`) in both the JSON and CSV encodings. Timestamps are opt-in so
//! that a rerun with the same inputs produces the same bytes.

use crate::correlation::BellVerdict;
use crate::lhv::LhvEstimate;
use crate::state::ComparisonRecord;
use crate::worlds::WorldCensus;
use crate::Direction;
use serde::Serialize;
use std::fmt::Write as _;
use std::io;

/// One point of a deterministic angle scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub theta_deg: f64,
    pub e_world_counting: f64,
    pub e_operator: f64,
}

/// One point of a local-hidden-variable angle scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LhvScanRow {
    pub theta_deg: f64,
    pub e_world_counting: f64,
    pub e_operator: f64,
    pub e_lhv: f64,
    pub lhv_stderr: f64,
}

/// One bin of a randomized-axis scan: runs whose drawn angle fell within
/// the tolerance of this bin center, with the mean recorded outcome
/// product and the closed-form quantum expectation at the center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaBin {
    pub theta_center_deg: f64,
    pub runs: u64,
    pub mean_product: f64,
    pub expected_quantum: f64,
}

/// Reproducibility metadata attached to every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    /// Library version that produced the report.
    pub version: String,
    /// Seed override in effect, if any (per-analysis seeds are recorded
    /// inside the analysis outputs).
    pub seed: Option<u64>,
    /// Optional caller-supplied timestamp. `None` by default so reruns
    /// are byte-identical.
    pub timestamp: Option<String>,
}

/// Output of a single `analyze` directive.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalysisOutput {
    /// Branch census with rationalized weights and world counts.
    Worlds { max_denominator: u64, census: WorldCensus },
    /// Two-axis correlation by both quantum routes.
    Correlation {
        axis1: Direction,
        axis2: Direction,
        world_counting: f64,
        operator_expectation: f64,
    },
    /// Three-axis inequality check.
    Bell { verdict: BellVerdict },
    /// Monte Carlo local-hidden-variable estimate for the plan's axes.
    LhvBaseline {
        strategy: String,
        samples: u64,
        seed: u64,
        result: LhvEstimate,
    },
    /// Deterministic sweep of the inter-axis angle.
    ThetaScan { rows: Vec<ScanRow> },
    /// Randomized-axis sweep: many runs, one sampled world each, binned
    /// by drawn angle.
    BinnedScan {
        start_deg: f64,
        stop_deg: f64,
        tolerance_deg: f64,
        total_runs: u64,
        discarded_runs: u64,
        /// Mean outcome product over every run regardless of binning.
        pooled_mean: f64,
        seed: u64,
        max_denominator: u64,
        rows: Vec<ThetaBin>,
    },
    /// Angle sweep comparing the quantum routes against a hidden-variable
    /// strategy.
    LhvScan {
        strategy: String,
        samples: u64,
        seed: u64,
        rows: Vec<LhvScanRow>,
    },
}

/// Complete result of executing an experiment plan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    /// Canonical text of the executed plan.
    pub plan_echo: String,
    /// Normalization notes (for example automatic `compare` insertion).
    pub notes: Vec<String>,
    /// One output per `analyze` directive, in plan order.
    pub results: Vec<AnalysisOutput>,
    pub provenance: Provenance,
}

/// JSON formatter that pins every `f64` to `{:.16e}` so output bytes do
/// not depend on the shortest-representation printer.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Formats a float exactly as the serializers do.
fn sci(value: f64) -> String {
    format!("{value:.16e}")
}

fn comparison_cell(record: ComparisonRecord) -> String {
    match record.pair() {
        Some((first, second)) => format!("{first}_{second}"),
        None => "unset".to_string(),
    }
}

impl ExperimentReport {
    /// Serializes to canonical JSON: fixed field order, `{:.16e}` floats,
    /// trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
        self.serialize(&mut ser).expect("report serialization cannot fail");
        buf.push(b'\n');
        String::from_utf8(buf).expect("serialized JSON is UTF-8")
    }

    /// Serializes to CSV: one section per analysis, sections separated by
    /// a blank line, floats formatted as `{:.16e}`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (i, result) in self.results.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            csv_section(&mut out, result);
        }
        out
    }
}

fn csv_axis_fields(axis: &Direction) -> String {
    format!("{},{}", sci(axis.polar_degrees()), sci(axis.azimuth_degrees()))
}

fn csv_section(out: &mut String, result: &AnalysisOutput) {
    match result {
        AnalysisOutput::Worlds { max_denominator, census } => {
            writeln!(out, "analysis,worlds").unwrap();
            writeln!(
                out,
                "max_denominator,total_worlds,common_denominator,approximation_error"
            )
            .unwrap();
            writeln!(
                out,
                "{},{},{},{}",
                max_denominator,
                census.total_worlds,
                census.common_denominator,
                sci(census.approximation_error)
            )
            .unwrap();
            writeln!(out, "device1,device2,comparison,weight_fraction,world_count").unwrap();
            for entry in &census.entries {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    entry.branch.device1,
                    entry.branch.device2,
                    comparison_cell(entry.branch.comparison),
                    entry.weight_fraction,
                    entry.world_count
                )
                .unwrap();
            }
        }
        AnalysisOutput::Correlation { axis1, axis2, world_counting, operator_expectation } => {
            writeln!(out, "analysis,correlation").unwrap();
            writeln!(
                out,
                "axis1_polar_deg,axis1_azimuth_deg,axis2_polar_deg,axis2_azimuth_deg,\
                 E_world_counting,E_operator"
            )
            .unwrap();
            writeln!(
                out,
                "{},{},{},{}",
                csv_axis_fields(axis1),
                csv_axis_fields(axis2),
                sci(*world_counting),
                sci(*operator_expectation)
            )
            .unwrap();
        }
        AnalysisOutput::Bell { verdict } => {
            writeln!(out, "analysis,bell").unwrap();
            writeln!(
                out,
                "pair,axis_a_polar_deg,axis_a_azimuth_deg,axis_b_polar_deg,axis_b_azimuth_deg,\
                 value,stderr"
            )
            .unwrap();
            for (name, pair) in
                [("12", &verdict.pair_12), ("13", &verdict.pair_13), ("23", &verdict.pair_23)]
            {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    name,
                    csv_axis_fields(&pair.axis1),
                    csv_axis_fields(&pair.axis2),
                    sci(pair.value),
                    sci(pair.stderr)
                )
                .unwrap();
            }
            writeln!(out, "lhs,rhs,margin,violated,source").unwrap();
            writeln!(
                out,
                "{},{},{},{},{}",
                sci(verdict.lhs),
                sci(verdict.rhs),
                sci(verdict.margin),
                verdict.violated,
                verdict.source
            )
            .unwrap();
        }
        AnalysisOutput::LhvBaseline { strategy, samples, seed, result } => {
            writeln!(out, "analysis,lhv_baseline").unwrap();
            writeln!(out, "strategy,samples,seed,mean,stderr").unwrap();
            writeln!(
                out,
                "{},{},{},{},{}",
                strategy,
                samples,
                seed,
                sci(result.mean),
                sci(result.stderr)
            )
            .unwrap();
        }
        AnalysisOutput::ThetaScan { rows } => {
            writeln!(out, "analysis,thetascan").unwrap();
            writeln!(out, "theta_deg,E_world_counting,E_operator").unwrap();
            for row in rows {
                writeln!(
                    out,
                    "{},{},{}",
                    sci(row.theta_deg),
                    sci(row.e_world_counting),
                    sci(row.e_operator)
                )
                .unwrap();
            }
        }
        AnalysisOutput::BinnedScan {
            start_deg,
            stop_deg,
            tolerance_deg,
            total_runs,
            discarded_runs,
            pooled_mean,
            seed,
            max_denominator,
            rows,
        } => {
            writeln!(out, "analysis,binned_scan").unwrap();
            writeln!(
                out,
                "start_deg,stop_deg,tolerance_deg,total_runs,discarded_runs,pooled_mean,\
                 seed,max_denominator"
            )
            .unwrap();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                sci(*start_deg),
                sci(*stop_deg),
                sci(*tolerance_deg),
                total_runs,
                discarded_runs,
                sci(*pooled_mean),
                seed,
                max_denominator
            )
            .unwrap();
            writeln!(out, "theta_center_deg,runs,mean_product,expected_quantum").unwrap();
            for row in rows {
                writeln!(
                    out,
                    "{},{},{},{}",
                    sci(row.theta_center_deg),
                    row.runs,
                    sci(row.mean_product),
                    sci(row.expected_quantum)
                )
                .unwrap();
            }
        }
        AnalysisOutput::LhvScan { strategy, samples, seed, rows } => {
            writeln!(out, "analysis,lhv_scan").unwrap();
            writeln!(out, "strategy,samples,seed").unwrap();
            writeln!(out, "{strategy},{samples},{seed}").unwrap();
            writeln!(out, "theta_deg,E_world_counting,E_operator,E_lhv,lhv_stderr").unwrap();
            for row in rows {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    sci(row.theta_deg),
                    sci(row.e_world_counting),
                    sci(row.e_operator),
                    sci(row.e_lhv),
                    sci(row.lhv_stderr)
                )
                .unwrap();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TOOL_VERSION;

    fn sample_report() -> ExperimentReport {
        ExperimentReport {
            plan_echo: "singlet axis 0 0\n".to_string(),
            notes: vec!["note".to_string()],
            results: vec![AnalysisOutput::ThetaScan {
                rows: vec![ScanRow { theta_deg: 0.0, e_world_counting: -1.0, e_operator: -1.0 }],
            }],
            provenance: Provenance {
                version: TOOL_VERSION.to_string(),
                seed: None,
                timestamp: None,
            },
        }
    }

    #[test]
    fn canonical_json_pins_float_format() {
        let json = sample_report().to_canonical_json();
        assert!(json.ends_with('\n'));
        assert!(json.contains("\"theta_deg\":0.0000000000000000e0"), "{json}");
        assert!(json.contains("\"e_world_counting\":-1.0000000000000000e0"));
        assert!(json.contains("\"kind\":\"theta_scan\""));
        // Parses back as ordinary JSON.
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["provenance"]["version"], TOOL_VERSION);
        assert!(value["provenance"]["timestamp"].is_null());
    }

    #[test]
    fn serialization_is_deterministic() {
        let a = sample_report().to_canonical_json();
        let b = sample_report().to_canonical_json();
        assert_eq!(a, b);
        assert_eq!(sample_report().to_csv(), sample_report().to_csv());
    }

    #[test]
    fn csv_sections_have_pinned_headers() {
        let report = ExperimentReport {
            results: vec![
                AnalysisOutput::ThetaScan { rows: vec![] },
                AnalysisOutput::LhvScan {
                    strategy: "sgn".to_string(),
                    samples: 10,
                    seed: 1,
                    rows: vec![LhvScanRow {
                        theta_deg: 90.0,
                        e_world_counting: 0.0,
                        e_operator: 0.0,
                        e_lhv: 0.01,
                        lhv_stderr: 0.3,
                    }],
                },
            ],
            ..sample_report()
        };
        let csv = report.to_csv();
        let sections: Vec<&str> = csv.split("\n\n").collect();
        assert_eq!(sections.len(), 2);
        assert!(sections[0].starts_with("analysis,thetascan\ntheta_deg,E_world_counting,E_operator"));
        assert!(sections[1]
            .contains("theta_deg,E_world_counting,E_operator,E_lhv,lhv_stderr"));
        assert!(csv.ends_with('\n'));
    }
}
