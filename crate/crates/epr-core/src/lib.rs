//! Unitary-only simulation of EPR spin-correlation experiments.
//!
//! The crate models a pair of spin-1/2 particles prepared in the singlet
//! state together with three measuring devices: one Stern-Gerlach-style
//! device per particle and a comparison apparatus that records the ordered
//! pair of device outcomes. Nothing in the crate ever collapses a state:
//! every measurement is an entangling isometry on the joint
//! particle + register space, and the final state is a superposition of
//! branches ("worlds"), one per consistent record configuration.
//!
//! Statistics come out of the branch structure in two independent ways:
//!
//! * **World counting** - branch weights are approximated by rationals over
//!   a common denominator and each branch is refined into an integer number
//!   of equal-weight worlds; relative frequencies are ratios of world
//!   counts ([`worlds`]).
//! * **Operator expectation values** - the usual quadratic form
//!   `<psi| (n1.sigma)(n2.sigma) |psi>` evaluated directly on the state
//!   ([`state`]).
//!
//! Both routes yield the quantum correlation `-n1.n2`, which the
//! [`correlation`] module pits against local-hidden-variable baselines and
//! a Bell inequality. The [`protocol`] module adds a small line-oriented
//! experiment description language plus an executor so whole experiments
//! can be scripted and reproduced deterministically.

pub mod correlation;
pub mod direction;
pub mod lhv;
pub mod measurement;
pub mod protocol;
pub mod quadrature;
pub mod report;
pub mod spinor;
pub mod state;
pub mod worlds;

pub use correlation::{
    bell_test, bell_triple_from_pair, correlation_lhv, correlation_operator,
    correlation_world_counting, decorrelated_average, BellVerdict, CorrelationMethod,
    CorrelationProvider, CorrelationResult, LhvProvider, QuantumProvider,
};
pub use direction::Direction;
pub use lhv::{built_in_strategy, LhvEstimate, LhvStrategy, SgnStrategy};
pub use measurement::{
    apply_comparison, apply_measurement, check_commutation, MeasurementError, MeasurementSetup,
};
pub use protocol::{
    execute, parse, Analysis, AxisSpec, Diagnostic, ExecError, ExecOptions, ExperimentPlan,
    ParseOutcome, Particle, Step,
};
pub use report::{AnalysisOutput, ExperimentReport, Provenance, ThetaBin};
pub use state::{BasisLabel, ComparisonRecord, DeviceRecord, SpinLabel, StateVector};
pub use worlds::{
    born_weights, decompose_branches, deutsch_refine, rationalize_weights, Branch, CensusEntry,
    Rational, Rationalization, WorldCensus, WorldError, WorldRefinement,
};

/// Version string stamped into report provenance blocks.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
