//! Parser and position-aware validation for the experiment language.

use super::{validate_plan, Analysis, AxisSpec, ExperimentPlan, Preparation, Step};
use crate::lhv::built_in_strategy;
use crate::state::Particle;
use std::fmt;

/// A parse or validation problem, located by 1-based line and (byte)
/// column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl Diagnostic {
    fn new(line: usize, col: usize, message: impl Into<String>) -> Diagnostic {
        Diagnostic { line, col, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for Diagnostic {}

/// A successfully parsed plan plus any normalization notes (currently:
/// automatic `compare` insertion).
#[derive(Debug, Clone, PartialEq)]
pub struct ParseOutcome {
    pub plan: ExperimentPlan,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    col: usize,
}

/// Splits one line (comment already stripped) into whitespace-separated
/// tokens with 1-based byte columns.
fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in line.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                tokens.push(Token { text: &line[s..i], col: s + 1 });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        tokens.push(Token { text: &line[s..], col: s + 1 });
    }
    tokens
}

/// Token stream for one line, with "expected X" errors pointing one past
/// the end of the line when tokens run out.
struct Cursor<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
    line: usize,
    end_col: usize,
}

impl<'a> Cursor<'a> {
    fn new(line_no: usize, line: &'a str) -> Cursor<'a> {
        let content = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        };
        Cursor {
            tokens: tokenize(content),
            pos: 0,
            line: line_no,
            end_col: content.trim_end().len() + 1,
        }
    }

    fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    fn next(&mut self, expected: &str) -> Result<Token<'a>, Diagnostic> {
        match self.tokens.get(self.pos) {
            Some(&t) => {
                self.pos += 1;
                Ok(t)
            }
            None => Err(Diagnostic::new(self.line, self.end_col, format!("expected {expected}"))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), Diagnostic> {
        let t = self.next(&format!("`{kw}`"))?;
        if t.text == kw {
            Ok(())
        } else {
            Err(Diagnostic::new(
                self.line,
                t.col,
                format!("expected `{kw}`, found `{}`", t.text),
            ))
        }
    }

    fn number_f64(&mut self, what: &str) -> Result<(f64, usize), Diagnostic> {
        let t = self.next(what)?;
        match t.text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok((v, t.col)),
            _ => Err(Diagnostic::new(
                self.line,
                t.col,
                format!("expected {what} (a finite number), found `{}`", t.text),
            )),
        }
    }

    fn number_u64(&mut self, what: &str) -> Result<(u64, usize), Diagnostic> {
        let t = self.next(what)?;
        match t.text.parse::<u64>() {
            Ok(v) => Ok((v, t.col)),
            Err(_) => Err(Diagnostic::new(
                self.line,
                t.col,
                format!("expected {what} (a nonnegative integer), found `{}`", t.text),
            )),
        }
    }

    fn finish(&mut self) -> Result<(), Diagnostic> {
        match self.tokens.get(self.pos) {
            None => Ok(()),
            Some(t) => Err(Diagnostic::new(
                self.line,
                t.col,
                format!("unexpected trailing token `{}`", t.text),
            )),
        }
    }
}

/// Reads an axis pair `<polar> <azimuth>` with range validation.
fn axis_degrees(cur: &mut Cursor<'_>) -> Result<(f64, f64), Diagnostic> {
    let (polar, polar_col) = cur.number_f64("a polar angle in degrees")?;
    if !(0.0..=180.0).contains(&polar) {
        return Err(Diagnostic::new(
            cur.line,
            polar_col,
            format!("polar angle {polar} outside [0, 180] degrees"),
        ));
    }
    let (azimuth, _) = cur.number_f64("an azimuth in degrees")?;
    Ok((polar, azimuth))
}

/// Parses and validates a protocol text. Returns the first problem as a
/// [`Diagnostic`] with its line and column.
pub fn parse(text: &str) -> Result<ParseOutcome, Diagnostic> {
    let mut preparation: Option<Preparation> = None;
    let mut steps: Vec<Step> = Vec::new();
    let mut analyses: Vec<Analysis> = Vec::new();
    let mut analysis_lines: Vec<(usize, usize)> = Vec::new();
    let mut measured: [Option<AxisSpec>; 2] = [None, None];
    let mut random_devices = 0usize;
    let mut compared = false;
    let mut last_line = 0usize;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let mut cur = Cursor::new(line_no, raw_line);
        if cur.is_empty() {
            continue;
        }
        let directive = cur.next("a directive")?;
        if preparation.is_none() && directive.text != "singlet" {
            return Err(Diagnostic::new(
                line_no,
                directive.col,
                format!(
                    "the first directive must be `singlet`, found `{}`",
                    directive.text
                ),
            ));
        }
        match directive.text {
            "singlet" => {
                if preparation.is_some() {
                    return Err(Diagnostic::new(
                        line_no,
                        directive.col,
                        "duplicate `singlet`: the state is prepared exactly once",
                    ));
                }
                cur.keyword("axis")?;
                let (polar_deg, azimuth_deg) = axis_degrees(&mut cur)?;
                cur.finish()?;
                preparation = Some(Preparation::Singlet { polar_deg, azimuth_deg });
            }
            "measure" => {
                let (device_no, device_col) = cur.number_u64("a device number (1 or 2)")?;
                let Some(device) = Particle::from_number(device_no) else {
                    return Err(Diagnostic::new(
                        line_no,
                        device_col,
                        format!("device number must be 1 or 2, found {device_no}"),
                    ));
                };
                if measured[device.index()].is_some() {
                    return Err(Diagnostic::new(
                        line_no,
                        device_col,
                        format!("device {device} is measured twice"),
                    ));
                }
                if compared {
                    return Err(Diagnostic::new(
                        line_no,
                        directive.col,
                        format!("device {device} is measured after `compare`"),
                    ));
                }
                let mode = cur.next("`axis` or `random`")?;
                let axis = match mode.text {
                    "axis" => {
                        let (polar_deg, azimuth_deg) = axis_degrees(&mut cur)?;
                        AxisSpec::Fixed { polar_deg, azimuth_deg }
                    }
                    "random" => {
                        cur.keyword("seed")?;
                        let (seed, _) = cur.number_u64("a seed")?;
                        random_devices += 1;
                        if random_devices > 1 {
                            return Err(Diagnostic::new(
                                line_no,
                                mode.col,
                                "only one device may use a random per-run axis",
                            ));
                        }
                        AxisSpec::RandomPerRun { seed }
                    }
                    other => {
                        return Err(Diagnostic::new(
                            line_no,
                            mode.col,
                            format!("expected `axis` or `random`, found `{other}`"),
                        ));
                    }
                };
                cur.finish()?;
                measured[device.index()] = Some(axis);
                steps.push(Step::Measure { device, axis });
            }
            "compare" => {
                cur.finish()?;
                if compared {
                    return Err(Diagnostic::new(
                        line_no,
                        directive.col,
                        "duplicate `compare`: the comparison apparatus fires once",
                    ));
                }
                for p in [Particle::One, Particle::Two] {
                    if measured[p.index()].is_none() {
                        return Err(Diagnostic::new(
                            line_no,
                            directive.col,
                            format!("`compare` before device {p} has been measured"),
                        ));
                    }
                }
                compared = true;
                steps.push(Step::Compare);
            }
            "analyze" => {
                let kind = cur.next("an analysis kind")?;
                let analysis = match kind.text {
                    "worlds" => {
                        cur.keyword("maxden")?;
                        let (max_denominator, col) = cur.number_u64("a denominator bound")?;
                        if max_denominator == 0 {
                            return Err(Diagnostic::new(
                                line_no,
                                col,
                                "denominator bound must be at least 1",
                            ));
                        }
                        Analysis::Worlds { max_denominator }
                    }
                    "correlation" => Analysis::Correlation,
                    "bell" => {
                        let mut axes_deg = [[0.0f64; 2]; 3];
                        for axis in &mut axes_deg {
                            let (p, a) = axis_degrees(&mut cur)?;
                            *axis = [p, a];
                        }
                        Analysis::Bell { axes_deg }
                    }
                    "lhv" => {
                        let strategy = cur.next("a strategy name")?;
                        if built_in_strategy(strategy.text).is_none() {
                            return Err(Diagnostic::new(
                                line_no,
                                strategy.col,
                                format!("unknown lhv strategy `{}`", strategy.text),
                            ));
                        }
                        cur.keyword("samples")?;
                        let (samples, samples_col) = cur.number_u64("a sample count")?;
                        if samples == 0 {
                            return Err(Diagnostic::new(
                                line_no,
                                samples_col,
                                "sample count must be at least 1",
                            ));
                        }
                        cur.keyword("seed")?;
                        let (seed, _) = cur.number_u64("a seed")?;
                        Analysis::LhvBaseline {
                            strategy: strategy.text.to_string(),
                            samples,
                            seed,
                        }
                    }
                    "thetascan" => {
                        let (start_deg, start_col) = cur.number_f64("a start angle in degrees")?;
                        let (stop_deg, _) = cur.number_f64("a stop angle in degrees")?;
                        if !(0.0..=180.0).contains(&start_deg)
                            || !(0.0..=180.0).contains(&stop_deg)
                            || start_deg > stop_deg
                        {
                            return Err(Diagnostic::new(
                                line_no,
                                start_col,
                                format!(
                                    "thetascan range {start_deg}..{stop_deg} must satisfy \
                                     0 <= start <= stop <= 180"
                                ),
                            ));
                        }
                        let (points, points_col) = cur.number_u64("a point count")?;
                        if !(1..=u32::MAX as u64).contains(&points) {
                            return Err(Diagnostic::new(
                                line_no,
                                points_col,
                                "thetascan needs at least 1 point",
                            ));
                        }
                        Analysis::ThetaScan { start_deg, stop_deg, points: points as u32 }
                    }
                    other => {
                        return Err(Diagnostic::new(
                            line_no,
                            kind.col,
                            format!("unknown analysis `{other}`"),
                        ));
                    }
                };
                cur.finish()?;
                analyses.push(analysis);
                analysis_lines.push((line_no, kind.col));
            }
            other => {
                return Err(Diagnostic::new(
                    line_no,
                    directive.col,
                    format!("unknown directive `{other}`"),
                ));
            }
        }
    }

    let Some(preparation) = preparation else {
        return Err(Diagnostic::new(
            last_line.max(1),
            1,
            "empty protocol: expected a `singlet` directive",
        ));
    };

    // Cross-directive checks, attributed to the analysis that needs them.
    let mut notes = Vec::new();
    let both_measured = measured[0].is_some() && measured[1].is_some();
    let both_fixed = measured.iter().all(|m| matches!(m, Some(AxisSpec::Fixed { .. })));
    for (analysis, &(line, col)) in analyses.iter().zip(&analysis_lines) {
        match analysis {
            Analysis::Worlds { .. } => {
                if !compared {
                    return Err(Diagnostic::new(
                        line,
                        col,
                        "worlds analysis requires a `compare` step",
                    ));
                }
            }
            Analysis::Correlation | Analysis::LhvBaseline { .. } => {
                if !both_measured || !both_fixed {
                    return Err(Diagnostic::new(
                        line,
                        col,
                        "this analysis requires both devices measured along fixed axes",
                    ));
                }
                if matches!(analysis, Analysis::Correlation) && !compared {
                    steps.push(Step::Compare);
                    compared = true;
                    notes.push(format!(
                        "compare step inserted automatically for `analyze correlation` (line {line})"
                    ));
                }
            }
            Analysis::Bell { .. } => {}
            Analysis::ThetaScan { .. } => {
                if !both_measured {
                    return Err(Diagnostic::new(
                        line,
                        col,
                        "thetascan requires both devices to be measured",
                    ));
                }
            }
        }
    }
    if random_devices == 1 {
        let all_scans = analyses.iter().all(|a| matches!(a, Analysis::ThetaScan { .. }));
        if analyses.is_empty() || !all_scans {
            let (line, col) = analysis_lines
                .iter()
                .zip(&analyses)
                .find(|(_, a)| !matches!(a, Analysis::ThetaScan { .. }))
                .map(|(&(l, c), _)| (l, c))
                .unwrap_or((last_line.max(1), 1));
            return Err(Diagnostic::new(
                line,
                col,
                "a random per-run axis is only usable when every analysis is a thetascan",
            ));
        }
    }

    let plan = ExperimentPlan { preparation, steps, analyses };
    debug_assert_eq!(validate_plan(&plan), Ok(()), "parser accepted an invalid plan");
    Ok(ParseOutcome { plan, notes })
}
