//! Acceptance gate for the simulator: ten numbered criteria, one test
//! (and therefore one pass/fail line) each.
//!
//! Each criterion pins its tolerance and, where specified, a wall-clock
//! budget, as constants next to the test. Criteria 1-8 exercise the
//! library crate directly; criterion 9 drives the compiled `epr` binary
//! end to end; criterion 10 fuzzes the protocol parser.

use epr_core::correlation::{
    bell_test, bell_triple_from_pair, bisector_triple, decorrelated_average, LhvProvider,
    QuantumProvider,
};
use epr_core::lhv::{built_in_strategy, estimate_correlation, sample_unit_vector, sgn_closed_form};
use epr_core::measurement::{
    apply_comparison, apply_measurement, check_commutation, MeasurementSetup,
};
use epr_core::protocol::{parse, pretty, validate_plan};
use epr_core::state::{ComparisonRecord, Particle, SpinLabel, StateVector};
use epr_core::worlds::{decompose_branches, deutsch_refine, rationalize_weights, WorldCensus};
use epr_core::Direction;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI, SQRT_2};
use std::time::{Duration, Instant};

fn direction_deg(polar: f64, azimuth: f64) -> Direction {
    Direction::from_degrees(polar, azimuth).expect("test axis in range")
}

fn random_direction(rng: &mut ChaCha8Rng) -> Direction {
    Direction::from_cartesian(sample_unit_vector(rng)).expect("unit vector is nonzero")
}

fn assert_within_budget(start: Instant, budget: Duration, what: &str) {
    let elapsed = start.elapsed();
    assert!(
        elapsed <= budget,
        "{what} took {elapsed:?}, budget is {budget:?}"
    );
}

/// Criterion 1 - correlation law: both exact correlation routes equal
/// -cos(theta) across a 181-point grid and agree with each other.
#[test]
fn criterion_01_correlation_law() {
    const TOLERANCE: f64 = 1e-12;
    const BUDGET: Duration = Duration::from_secs(1);

    let start = Instant::now();
    let anchor = Direction::Z;
    for i in 0..=180u32 {
        let theta_deg = f64::from(i);
        let swept = direction_deg(theta_deg, 0.0);
        let expected = -theta_deg.to_radians().cos();

        let counting = epr_core::correlation_world_counting(&anchor, &swept).value;
        let operator = epr_core::correlation_operator(&anchor, &swept).value;
        assert!(
            (counting - expected).abs() <= TOLERANCE,
            "world counting at {theta_deg} deg: {counting} vs {expected}"
        );
        assert!(
            (counting - operator).abs() <= TOLERANCE,
            "routes disagree at {theta_deg} deg: {counting} vs {operator}"
        );
    }
    assert_within_budget(start, BUDGET, "181-point correlation grid");
}

/// Criterion 2 - two-world anti-correlation: measuring both devices
/// along the same axis splits the singlet into exactly two branches
/// with opposite records, amplitudes exactly +-1/sqrt(2), and relative
/// phase exactly -1.
#[test]
fn criterion_02_two_world_anticorrelation() {
    const BUDGET: Duration = Duration::from_secs(1);

    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut axes = vec![Direction::Z, direction_deg(90.0, 0.0)];
    axes.extend((0..10).map(|_| random_direction(&mut rng)));

    for axis in axes {
        // Preparing the singlet along the measured axis keeps the basis
        // change a no-op, so every assertion below can be bit-exact.
        let state = StateVector::singlet(axis);
        let fired = apply_measurement(
            &apply_measurement(&state, Particle::One, axis).unwrap(),
            Particle::Two,
            axis,
        )
        .unwrap();
        let branches = decompose_branches(&fired).unwrap();

        assert_eq!(branches.len(), 2, "axis {axis:?} split into {branches:?}");
        let (up_down, down_up) = (&branches[0], &branches[1]);

        // Opposite device records in each branch, covering both orders.
        for branch in [up_down, down_up] {
            let s1 = branch.device1.outcome_sign().unwrap();
            let s2 = branch.device2.outcome_sign().unwrap();
            assert_eq!(s1, -s2, "records not opposite in {branch:?}");
        }
        assert_ne!(up_down.device1, down_up.device1);

        // Closed-form amplitudes, exactly: +1/sqrt(2) and -1/sqrt(2).
        assert_eq!(up_down.amplitude, Complex64::new(FRAC_1_SQRT_2, 0.0));
        assert_eq!(down_up.amplitude, Complex64::new(-FRAC_1_SQRT_2, 0.0));
        // Relative phase is exactly -1 ...
        assert_eq!(up_down.amplitude, -down_up.amplitude);
        // ... and the weights are the same number, each half the norm.
        assert_eq!(up_down.weight, down_up.weight);
        assert!((up_down.weight - 0.5).abs() <= f64::EPSILON);
    }
    assert_within_budget(start, BUDGET, "equal-axis branch audit");
}

/// Criterion 3 - order independence: the two devices act on disjoint
/// registers, so firing them in either order produces the same state.
#[test]
fn criterion_03_order_independence() {
    const TOLERANCE: f64 = 1e-12;
    const BUDGET: Duration = Duration::from_secs(1);
    const CASES: usize = 100;

    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spins = [SpinLabel::Up, SpinLabel::Down];

    for case in 0..CASES {
        // A fresh random two-particle state: random preparation axes and
        // random complex amplitudes over all four spin configurations.
        let mut amplitudes = Vec::new();
        for s1 in spins {
            for s2 in spins {
                let amp = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                amplitudes.push((s1, s2, amp));
            }
        }
        let state = StateVector::from_spin_amplitudes(
            random_direction(&mut rng),
            random_direction(&mut rng),
            &amplitudes,
        )
        .expect("random amplitudes are normalizable");

        let setup = MeasurementSetup {
            device1_axis: random_direction(&mut rng),
            device2_axis: random_direction(&mut rng),
        };
        let deviation = check_commutation(&state, &setup).unwrap();
        assert!(
            deviation < TOLERANCE,
            "case {case}: orders differ by {deviation}"
        );
    }
    assert_within_budget(start, BUDGET, "100 commutation checks");
}

/// Criterion 4 - four-world split: axes 60 degrees apart give branch
/// weights (1/8, 3/8, 3/8, 1/8) and refine into world counts
/// (1, 3, 3, 1) out of 8 exactly.
#[test]
fn criterion_04_four_world_split() {
    const WEIGHT_TOLERANCE: f64 = 1e-12;

    let state = StateVector::singlet(Direction::Z);
    let fired = apply_measurement(
        &apply_measurement(&state, Particle::One, Direction::Z).unwrap(),
        Particle::Two,
        direction_deg(60.0, 0.0),
    )
    .unwrap();
    let branches = decompose_branches(&apply_comparison(&fired).unwrap()).unwrap();

    assert_eq!(branches.len(), 4);
    let expected_weights = [0.125, 0.375, 0.375, 0.125];
    let weights: Vec<f64> = branches.iter().map(|b| b.weight).collect();
    for (weight, expected) in weights.iter().zip(expected_weights) {
        assert!(
            (weight - expected).abs() <= WEIGHT_TOLERANCE,
            "weights {weights:?} vs {expected_weights:?}"
        );
    }

    // Rationalize with denominator bound 8 and refine to worlds.
    let rationalized = rationalize_weights(&weights, 8).unwrap();
    assert_eq!(rationalized.common_denominator, 8);
    let refinement = deutsch_refine(&rationalized.rationals).unwrap();
    assert_eq!(refinement.counts, vec![1, 3, 3, 1]);
    assert_eq!(refinement.total_worlds, 8);

    // The assembled census exposes the same counts.
    let census = WorldCensus::assemble(branches, 8).unwrap();
    let counts: Vec<u64> = census.entries.iter().map(|e| e.world_count).collect();
    assert_eq!(counts, vec![1, 3, 3, 1]);
    assert_eq!(census.total_worlds, 8);
}

/// Criterion 5 - comparison measurement: the comparison apparatus only
/// copies the device-record pair into its own register; the branch set,
/// amplitudes, and weights are untouched.
#[test]
fn criterion_05_comparison_records() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut pairs = vec![(Direction::Z, direction_deg(60.0, 0.0))];
    pairs.extend((0..20).map(|_| (random_direction(&mut rng), random_direction(&mut rng))));

    for (axis1, axis2) in pairs {
        let fired = apply_measurement(
            &apply_measurement(&StateVector::singlet(Direction::Z), Particle::One, axis1)
                .unwrap(),
            Particle::Two,
            axis2,
        )
        .unwrap();
        let before = decompose_branches(&fired).unwrap();
        let after = decompose_branches(&apply_comparison(&fired).unwrap()).unwrap();

        assert_eq!(before.len(), after.len(), "branch count changed");
        for (b, a) in before.iter().zip(&after) {
            // Same device records in the same canonical order,
            // identical amplitude and weight, bit for bit.
            assert_eq!(b.device1, a.device1);
            assert_eq!(b.device2, a.device2);
            assert_eq!(b.amplitude, a.amplitude);
            assert_eq!(b.weight, a.weight);
            // Comparison register now holds exactly the record pair.
            assert_eq!(b.comparison, ComparisonRecord::Unset);
            assert_eq!(
                a.comparison,
                ComparisonRecord::from_outcomes(a.device1, a.device2).unwrap()
            );
        }
    }
}

/// Criterion 6 - Bell violation: with perpendicular n2, n3 and n1 along
/// their difference, the quantum correlations give lhs = sqrt(2) against
/// rhs = 1.
#[test]
fn criterion_06_bell_violation() {
    const TOLERANCE: f64 = 1e-12;

    let axes = bisector_triple(FRAC_PI_4);
    // The geometry is the advertised one: n2 perpendicular to n3, and
    // n1 along n2 - n3.
    assert!(axes[1].dot(&axes[2]).abs() <= TOLERANCE);
    assert!(axes[0].approx_eq(&bell_triple_from_pair(&axes[1], &axes[2])));

    for provider in [QuantumProvider::WorldCounting, QuantumProvider::Operator] {
        let verdict = bell_test(&provider, &axes);
        assert!(
            (verdict.lhs - SQRT_2).abs() <= TOLERANCE,
            "{provider:?} lhs = {}",
            verdict.lhs
        );
        assert!(
            (verdict.rhs - 1.0).abs() <= TOLERANCE,
            "{provider:?} rhs = {}",
            verdict.rhs
        );
        assert!(verdict.violated, "{provider:?} did not flag the violation");
    }
}

/// Criterion 7 - LHV classical bound: the sgn-model Monte Carlo matches
/// its closed form -1 + 2 theta / pi within four standard errors on a
/// 19-point grid, and never violates the Bell inequality beyond the
/// three-sigma margin on 200 random axis triples.
#[test]
fn criterion_07_lhv_classical_bound() {
    const GRID_SAMPLES: u64 = 1_000_000;
    const TRIPLE_SAMPLES: u64 = 100_000;
    const TRIPLES: usize = 200;
    const BUDGET: Duration = Duration::from_secs(30);

    let start = Instant::now();
    let strategy = built_in_strategy("sgn").expect("sgn strategy is built in");

    for i in 0..19u32 {
        let theta_deg = 10.0 * f64::from(i);
        let theta = theta_deg.to_radians();
        let swept = Direction::Z.at_angle(theta);
        let estimate =
            estimate_correlation(strategy.as_ref(), &Direction::Z, &swept, GRID_SAMPLES, i.into());
        let expected = sgn_closed_form(theta);
        assert!(
            (estimate.mean - expected).abs() <= 4.0 * estimate.stderr,
            "theta = {theta_deg} deg: mean {} vs closed form {expected} (stderr {})",
            estimate.mean,
            estimate.stderr
        );
    }
    // Spot-check the closed form itself at the anchor angles.
    assert_eq!(sgn_closed_form(0.0), -1.0);
    assert!((sgn_closed_form(PI / 2.0)).abs() <= 1e-15);
    assert_eq!(sgn_closed_form(PI), 1.0);

    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    for triple in 0..TRIPLES {
        let axes = [
            random_direction(&mut rng),
            random_direction(&mut rng),
            random_direction(&mut rng),
        ];
        let provider = LhvProvider {
            strategy: strategy.as_ref(),
            samples: TRIPLE_SAMPLES,
            seed: triple as u64,
        };
        let verdict = bell_test(&provider, &axes);
        assert!(
            !verdict.violated,
            "triple {triple}: LHV model broke the inequality: lhs {} rhs {} margin {}",
            verdict.lhs,
            verdict.rhs,
            verdict.margin
        );
    }
    assert_within_budget(start, BUDGET, "LHV grid + 200 Bell triples");
}

/// Criterion 8 - decorrelation integral: the quantum correlation
/// averaged over a uniformly random relative angle vanishes.
#[test]
fn criterion_08_decorrelation_integral() {
    const TOLERANCE: f64 = 1e-10;
    const POINTS: usize = 64;

    let average = decorrelated_average(POINTS);
    assert!(
        average.abs() < TOLERANCE,
        "64-point quadrature gave {average}"
    );
}

/// Criterion 9 - Born-rule emergence, end to end: a million binned runs
/// through the `epr` binary pool to zero correlation, the theta = 0 bin
/// reproduces -1, and the whole report is byte-identical on rerun.
#[test]
fn criterion_09_born_rule_emergence() {
    const POOLED_TOLERANCE: f64 = 0.005;
    const ZERO_BIN_TOLERANCE: f64 = 0.01;
    const BUDGET: Duration = Duration::from_secs(60);
    let args = [
        "bin",
        "--runs",
        "1000000",
        "--bins",
        "19",
        "--tolerance",
        "1",
        "--seed",
        "7",
    ];

    let start = Instant::now();
    let invoke = || {
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_epr"))
            .args(args)
            .env_remove("EPR_SEED")
            .output()
            .expect("binary should run");
        assert!(
            out.status.success(),
            "epr bin failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };

    let first = invoke();
    let second = invoke();
    assert_eq!(first, second, "rerun with the same seed changed the report");

    let report: serde_json::Value = serde_json::from_slice(&first).expect("valid JSON");
    let result = &report["results"][0];
    assert_eq!(result["kind"], "binned_scan");
    assert_eq!(result["total_runs"], 1_000_000);

    let pooled = result["pooled_mean"].as_f64().unwrap();
    assert!(
        pooled.abs() < POOLED_TOLERANCE,
        "pooled mean over uniform theta was {pooled}"
    );

    let rows = result["rows"].as_array().unwrap();
    let zero_bin = rows
        .iter()
        .find(|row| row["theta_center_deg"].as_f64() == Some(0.0))
        .expect("theta = 0 bin present");
    let runs = zero_bin["runs"].as_u64().unwrap();
    let mean = zero_bin["mean_product"].as_f64().unwrap();
    assert!(runs > 1_000, "theta = 0 bin only collected {runs} runs");
    assert!(
        (mean + 1.0).abs() < ZERO_BIN_TOLERANCE,
        "theta = 0 bin mean was {mean} over {runs} runs"
    );
    assert_within_budget(start, BUDGET, "two million binned runs");
}

/// Criterion 10 - parser totality: token-level mutations of valid
/// programs always produce either a diagnostic or a valid plan, and
/// pretty-printing a parsed plan reparses to the identical plan.
#[test]
fn criterion_10_parser_totality() {
    const FUZZ_CASES: usize = 1_000;
    const ROUND_TRIPS: usize = 50;

    let templates = [
        "singlet axis 0 0\nmeasure 1 axis 0 0\nmeasure 2 axis 0 0\ncompare\nanalyze correlation\n",
        "singlet axis 45 90\nmeasure 1 axis 30 0\nmeasure 2 axis 90 180\ncompare\nanalyze worlds maxden 64\n",
        "singlet axis 0 0\nmeasure 1 axis 0 0\nmeasure 2 random seed 5\ncompare\nanalyze thetascan 0 180 19\n",
        "singlet axis 0 0\nmeasure 1 axis 60 0\nmeasure 2 axis 0 0\nanalyze bell 45 180 0 0 90 0\n",
        "singlet axis 10 20\nmeasure 1 axis 0 0\nmeasure 2 axis 120 45\ncompare\nanalyze lhv sgn samples 1000 seed 3\n",
        "# comment line\nsinglet axis 0 0 # trailing comment\nmeasure 1 axis 0 0\nmeasure 2 axis 0 0\nanalyze thetascan 0 90 4\n",
    ];
    let vocabulary = [
        "singlet", "measure", "compare", "analyze", "axis", "random", "seed", "worlds",
        "maxden", "correlation", "bell", "lhv", "sgn", "samples", "thetascan", "0", "1",
        "2", "3", "60", "180", "181", "-45", "1e309", "nan", "0.5.5", "#", "@!?", "..",
    ];

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut diagnostics = 0usize;
    let mut valid = 0usize;

    for case in 0..FUZZ_CASES {
        let base = templates[rng.gen_range(0..templates.len())];
        let mut tokens: Vec<String> = base
            .split_inclusive('\n')
            .flat_map(|line| line.split(' '))
            .map(str::to_owned)
            .collect();
        for _ in 0..rng.gen_range(1..=4usize) {
            match rng.gen_range(0..5u8) {
                0 if !tokens.is_empty() => {
                    let at = rng.gen_range(0..tokens.len());
                    tokens.remove(at);
                }
                1 => {
                    let at = rng.gen_range(0..=tokens.len());
                    let word = vocabulary[rng.gen_range(0..vocabulary.len())];
                    tokens.insert(at, word.to_owned());
                }
                2 if !tokens.is_empty() => {
                    let at = rng.gen_range(0..tokens.len());
                    tokens[at] = vocabulary[rng.gen_range(0..vocabulary.len())].to_owned();
                }
                3 if tokens.len() >= 2 => {
                    let a = rng.gen_range(0..tokens.len());
                    let b = rng.gen_range(0..tokens.len());
                    tokens.swap(a, b);
                }
                _ => {
                    let at = rng.gen_range(0..tokens.len().max(1));
                    let word = tokens.get(at).cloned().unwrap_or_default();
                    tokens.insert(at, word);
                }
            }
        }
        let mut text = tokens.join(" ");
        if rng.gen_bool(0.1) {
            text.truncate(rng.gen_range(0..=text.len()));
        }

        // The parser must return, never panic, and an accepted plan must
        // be executable (pass plan validation).
        let parsed = std::panic::catch_unwind(|| parse(&text))
            .unwrap_or_else(|_| panic!("case {case} panicked on: {text:?}"));
        match parsed {
            Ok(outcome) => {
                valid += 1;
                assert_eq!(
                    validate_plan(&outcome.plan),
                    Ok(()),
                    "case {case} accepted an invalid plan from: {text:?}"
                );
            }
            Err(diagnostic) => {
                diagnostics += 1;
                assert!(
                    !diagnostic.message.is_empty(),
                    "case {case} produced an empty diagnostic"
                );
            }
        }
    }
    assert_eq!(diagnostics + valid, FUZZ_CASES);
    // The mutation vocabulary overlaps the grammar, so a healthy corpus
    // contains survivors as well as rejects.
    assert!(diagnostics > 0, "no mutation was ever rejected");
    assert!(valid > 0, "every mutation was rejected");

    // Round trip: parse -> pretty-print -> parse is the identity.
    let mut checked = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    while checked < ROUND_TRIPS {
        let mut polar = || f64::from(rng.gen_range(0..=180u32));
        let (p0, p1, p2) = (polar(), polar(), polar());
        let azimuth = f64::from(rng.gen_range(0..360u32));
        let maxden = rng.gen_range(1..=1000u32);
        let program = format!(
            "singlet axis {p0} {azimuth}\n\
             measure 1 axis {p1} {azimuth}\n\
             measure 2 axis {p2} {azimuth}\n\
             compare\n\
             analyze worlds maxden {maxden}\n\
             analyze correlation\n"
        );
        let plan = parse(&program).expect("generated program is valid").plan;
        let reparsed = parse(&pretty(&plan)).expect("pretty output reparses").plan;
        assert_eq!(plan, reparsed, "round trip changed the plan for: {program}");
        checked += 1;
    }
}
