//! Joint state of the particle pair and the measurement registers.
//!
//! A [`StateVector`] is a sparse complex vector over the computational
//! labels of five registers:
//!
//! * the two particle spins (`up`/`down`, each relative to a per-particle
//!   reference axis stored once on the state, not per term),
//! * the two device records (`unset` until the device fires),
//! * the comparison record (`unset` until the comparison apparatus reads
//!   both devices).
//!
//! Storing the reference axes outside the term keys keeps keys purely
//! discrete, so terms live in a `BTreeMap` with a total order and every
//! iteration, serialization, and branch decomposition is deterministic.
//! Nothing here normalizes after the fact or collapses: all evolution is
//! unitary (basis rotations) or isometric (the measurement couplings in
//! [`crate::measurement`]), so the norm stays 1 to rounding.

use crate::direction::Direction;
use crate::spinor::{change_of_basis, operator_in_basis};
use num_complex::Complex64;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

/// Terms with squared amplitude below `AMPLITUDE_EPS^2` are dropped after
/// each rotation; they are pure rounding debris (a genuine amplitude this
/// small contributes < 1e-28 to any probability).
pub const AMPLITUDE_EPS: f64 = 1e-14;

/// Which particle (and hence which device) an operation addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Particle {
    One,
    Two,
}

impl Particle {
    /// Zero-based index: `One -> 0`, `Two -> 1`.
    pub fn index(self) -> usize {
        match self {
            Particle::One => 0,
            Particle::Two => 1,
        }
    }

    /// Parses the customary 1-based device number.
    pub fn from_number(n: u64) -> Option<Particle> {
        match n {
            1 => Some(Particle::One),
            2 => Some(Particle::Two),
            _ => None,
        }
    }

    /// The customary 1-based device number.
    pub fn number(self) -> u64 {
        self.index() as u64 + 1
    }
}

impl fmt::Display for Particle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Spin projection of one particle along its reference axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinLabel {
    Up,
    Down,
}

impl SpinLabel {
    /// Row/column index in 2x2 spinor matrices: `Up -> 0`, `Down -> 1`.
    pub fn index(self) -> usize {
        match self {
            SpinLabel::Up => 0,
            SpinLabel::Down => 1,
        }
    }

    /// The measured value `+1` / `-1`.
    pub fn sign(self) -> i8 {
        match self {
            SpinLabel::Up => 1,
            SpinLabel::Down => -1,
        }
    }
}

impl fmt::Display for SpinLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpinLabel::Up => "up",
            SpinLabel::Down => "down",
        })
    }
}

/// Pointer state of one measuring device.
///
/// `Unset` is the ready state; after the device interacts with its
/// particle the record holds the outcome it registered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceRecord {
    Unset,
    Up,
    Down,
}

impl DeviceRecord {
    /// `+1` for `Up`, `-1` for `Down`, `None` while unset.
    pub fn outcome_sign(self) -> Option<i8> {
        match self {
            DeviceRecord::Unset => None,
            DeviceRecord::Up => Some(1),
            DeviceRecord::Down => Some(-1),
        }
    }

    fn of_spin(spin: SpinLabel) -> DeviceRecord {
        match spin {
            SpinLabel::Up => DeviceRecord::Up,
            SpinLabel::Down => DeviceRecord::Down,
        }
    }
}

impl fmt::Display for DeviceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeviceRecord::Unset => "unset",
            DeviceRecord::Up => "up",
            DeviceRecord::Down => "down",
        })
    }
}

/// Pointer state of the comparison apparatus: the ordered pair of device
/// outcomes it read, or `Unset` before it runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonRecord {
    Unset,
    UpUp,
    UpDown,
    DownUp,
    DownDown,
}

impl ComparisonRecord {
    /// The record produced by reading two fired devices; `None` if either
    /// device has not fired.
    pub fn from_outcomes(d1: DeviceRecord, d2: DeviceRecord) -> Option<ComparisonRecord> {
        use DeviceRecord::*;
        match (d1, d2) {
            (Up, Up) => Some(ComparisonRecord::UpUp),
            (Up, Down) => Some(ComparisonRecord::UpDown),
            (Down, Up) => Some(ComparisonRecord::DownUp),
            (Down, Down) => Some(ComparisonRecord::DownDown),
            _ => None,
        }
    }

    /// The ordered pair this record holds, if set.
    pub fn pair(self) -> Option<(DeviceRecord, DeviceRecord)> {
        use ComparisonRecord::*;
        match self {
            Unset => None,
            UpUp => Some((DeviceRecord::Up, DeviceRecord::Up)),
            UpDown => Some((DeviceRecord::Up, DeviceRecord::Down)),
            DownUp => Some((DeviceRecord::Down, DeviceRecord::Up)),
            DownDown => Some((DeviceRecord::Down, DeviceRecord::Down)),
        }
    }

    /// Product of the two recorded outcomes (`+1` same, `-1` opposite),
    /// `None` while unset.
    pub fn product_sign(self) -> Option<i8> {
        let (a, b) = self.pair()?;
        Some(a.outcome_sign()? * b.outcome_sign()?)
    }
}

impl fmt::Display for ComparisonRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pair() {
            None => f.write_str("unset"),
            Some((a, b)) => write!(f, "{a},{b}"),
        }
    }
}

/// Discrete part of one basis label: spins plus all register contents.
///
/// The continuous part (the two reference axes) lives on the
/// [`StateVector`] itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BasisLabel {
    pub spin1: SpinLabel,
    pub spin2: SpinLabel,
    pub device1: DeviceRecord,
    pub device2: DeviceRecord,
    pub comparison: ComparisonRecord,
}

/// Internal term key; identical content to [`BasisLabel`] but kept
/// separate so the public type can grow presentation helpers without
/// touching map internals.
pub(crate) type TermKey = BasisLabel;

impl BasisLabel {
    /// A fresh pre-measurement label: both registers and the comparison
    /// record unset.
    pub fn pre_measurement(spin1: SpinLabel, spin2: SpinLabel) -> BasisLabel {
        BasisLabel {
            spin1,
            spin2,
            device1: DeviceRecord::Unset,
            device2: DeviceRecord::Unset,
            comparison: ComparisonRecord::Unset,
        }
    }

    pub fn spin(&self, p: Particle) -> SpinLabel {
        match p {
            Particle::One => self.spin1,
            Particle::Two => self.spin2,
        }
    }

    pub fn device(&self, p: Particle) -> DeviceRecord {
        match p {
            Particle::One => self.device1,
            Particle::Two => self.device2,
        }
    }

    pub(crate) fn with_spin(mut self, p: Particle, s: SpinLabel) -> BasisLabel {
        match p {
            Particle::One => self.spin1 = s,
            Particle::Two => self.spin2 = s,
        }
        self
    }

    pub(crate) fn with_device_from_spin(mut self, p: Particle) -> BasisLabel {
        let rec = DeviceRecord::of_spin(self.spin(p));
        match p {
            Particle::One => self.device1 = rec,
            Particle::Two => self.device2 = rec,
        }
        self
    }

    pub(crate) fn with_comparison(mut self, c: ComparisonRecord) -> BasisLabel {
        self.comparison = c;
        self
    }
}

/// Sparse state vector over [`BasisLabel`]s, with one reference axis per
/// particle.
#[derive(Debug, Clone)]
pub struct StateVector {
    axis1: Direction,
    axis2: Direction,
    terms: BTreeMap<TermKey, Complex64>,
}

/// Errors from state constructors.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StateError {
    /// All supplied amplitudes were (numerically) zero.
    #[error("state has zero norm; nothing to normalize")]
    ZeroNorm,
    /// An amplitude was NaN or infinite.
    #[error("state amplitudes must be finite")]
    NonFinite,
}

impl StateVector {
    /// The spin singlet `(|up down> - |down up>) / sqrt(2)`, written with
    /// both particle axes along `axis`; registers unset.
    ///
    /// The state is rotationally invariant: preparing along any axis and
    /// rotating to another reproduces the singlet exactly (not merely up
    /// to phase), because every change of basis in this crate has unit
    /// determinant.
    pub fn singlet(axis: Direction) -> StateVector {
        let amp = std::f64::consts::FRAC_1_SQRT_2;
        let mut terms = BTreeMap::new();
        terms.insert(
            BasisLabel::pre_measurement(SpinLabel::Up, SpinLabel::Down),
            Complex64::new(amp, 0.0),
        );
        terms.insert(
            BasisLabel::pre_measurement(SpinLabel::Down, SpinLabel::Up),
            Complex64::new(-amp, 0.0),
        );
        StateVector { axis1: axis, axis2: axis, terms }
    }

    /// The product eigenstate `|spin1>|spin2>` with the given per-particle
    /// axes; registers unset.
    pub fn product(
        axis1: Direction,
        spin1: SpinLabel,
        axis2: Direction,
        spin2: SpinLabel,
    ) -> StateVector {
        let mut terms = BTreeMap::new();
        terms.insert(BasisLabel::pre_measurement(spin1, spin2), Complex64::new(1.0, 0.0));
        StateVector { axis1, axis2, terms }
    }

    /// Builds a pre-measurement state from spin amplitudes (registers all
    /// unset) and normalizes it. Duplicate spin pairs accumulate.
    pub fn from_spin_amplitudes(
        axis1: Direction,
        axis2: Direction,
        amplitudes: &[(SpinLabel, SpinLabel, Complex64)],
    ) -> Result<StateVector, StateError> {
        let mut terms: BTreeMap<TermKey, Complex64> = BTreeMap::new();
        for &(s1, s2, amp) in amplitudes {
            if !amp.re.is_finite() || !amp.im.is_finite() {
                return Err(StateError::NonFinite);
            }
            *terms
                .entry(BasisLabel::pre_measurement(s1, s2))
                .or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        let norm_sq: f64 = terms.values().map(|a| a.norm_sqr()).sum();
        if norm_sq < AMPLITUDE_EPS * AMPLITUDE_EPS {
            return Err(StateError::ZeroNorm);
        }
        let scale = norm_sq.sqrt().recip();
        for amp in terms.values_mut() {
            *amp *= scale;
        }
        prune(&mut terms);
        Ok(StateVector { axis1, axis2, terms })
    }

    pub(crate) fn from_parts(
        axis1: Direction,
        axis2: Direction,
        terms: BTreeMap<TermKey, Complex64>,
    ) -> StateVector {
        StateVector { axis1, axis2, terms }
    }

    /// Reference axis of one particle's spin labels.
    pub fn axis(&self, p: Particle) -> Direction {
        match p {
            Particle::One => self.axis1,
            Particle::Two => self.axis2,
        }
    }

    /// Number of nonzero terms.
    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Squared norm; 1 to rounding for any state built by this crate.
    pub fn norm_sq(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    /// Iterates terms in the canonical label order.
    pub fn terms(&self) -> impl Iterator<Item = (BasisLabel, Complex64)> + '_ {
        self.terms.iter().map(|(k, v)| (*k, *v))
    }

    /// Amplitude of one label (zero if absent).
    pub fn amplitude(&self, label: &BasisLabel) -> Complex64 {
        self.terms.get(label).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub(crate) fn terms_map(&self) -> &BTreeMap<TermKey, Complex64> {
        &self.terms
    }

    /// Whether device `p`'s record is `Unset` on every term.
    pub fn device_unset(&self, p: Particle) -> bool {
        self.terms.keys().all(|k| k.device(p) == DeviceRecord::Unset)
    }

    /// Whether the comparison record is `Unset` on every term.
    pub fn comparison_unset(&self) -> bool {
        self.terms.keys().all(|k| k.comparison == ComparisonRecord::Unset)
    }

    /// Re-expresses particle `p`'s spin labels relative to `new_axis`.
    ///
    /// This is passive: the physical state is unchanged (the operation is
    /// exactly unitary), only the description rotates. When `new_axis`
    /// already coincides with the current axis the amplitudes are returned
    /// bit-for-bit unchanged and only the stored axis is relabeled.
    pub fn rotate_particle(&self, p: Particle, new_axis: Direction) -> StateVector {
        let old_axis = self.axis(p);
        let mut out = self.clone();
        match p {
            Particle::One => out.axis1 = new_axis,
            Particle::Two => out.axis2 = new_axis,
        }
        if old_axis.approx_eq(&new_axis) {
            return out;
        }
        let c = change_of_basis(&old_axis, &new_axis);
        let mut terms: BTreeMap<TermKey, Complex64> = BTreeMap::new();
        for (key, amp) in &self.terms {
            let col = key.spin(p).index();
            for (row, new_spin) in [(0usize, SpinLabel::Up), (1, SpinLabel::Down)] {
                let contrib = amp * c[row][col];
                *terms
                    .entry(key.with_spin(p, new_spin))
                    .or_insert(Complex64::new(0.0, 0.0)) += contrib;
            }
        }
        prune(&mut terms);
        out.terms = terms;
        out
    }

    /// Inner product `<self|other>`; `other` is first re-expressed on
    /// `self`'s axes so the comparison is basis-independent.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        let aligned = other
            .rotate_particle(Particle::One, self.axis1)
            .rotate_particle(Particle::Two, self.axis2);
        let mut acc = Complex64::new(0.0, 0.0);
        for (key, amp) in &self.terms {
            if let Some(b) = aligned.terms.get(key) {
                acc += amp.conj() * b;
            }
        }
        acc
    }

    /// Expectation value `<psi| (axis1.sigma)(axis2.sigma) |psi>` of the
    /// product of spin projections, one factor per particle; registers
    /// are untouched (the operator acts as identity on them).
    pub fn spin_product_expectation(&self, axis1: &Direction, axis2: &Direction) -> f64 {
        let a1 = operator_in_basis(axis1, &self.axis1);
        let a2 = operator_in_basis(axis2, &self.axis2);
        let spins = [SpinLabel::Up, SpinLabel::Down];
        let mut image: BTreeMap<TermKey, Complex64> = BTreeMap::new();
        for (key, amp) in &self.terms {
            for s1 in spins {
                let c1 = a1[s1.index()][key.spin1.index()];
                for s2 in spins {
                    let c2 = a2[s2.index()][key.spin2.index()];
                    let contrib = amp * c1 * c2;
                    *image
                        .entry(key.with_spin(Particle::One, s1).with_spin(Particle::Two, s2))
                        .or_insert(Complex64::new(0.0, 0.0)) += contrib;
                }
            }
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (key, amp) in &self.terms {
            if let Some(b) = image.get(key) {
                acc += amp.conj() * b;
            }
        }
        debug_assert!(acc.im.abs() < 1e-10, "expectation of a Hermitian product must be real");
        acc.re
    }

    /// Largest termwise amplitude difference after aligning axes.
    pub fn max_amplitude_diff(&self, other: &StateVector) -> f64 {
        let aligned = other
            .rotate_particle(Particle::One, self.axis1)
            .rotate_particle(Particle::Two, self.axis2);
        let zero = Complex64::new(0.0, 0.0);
        let mut worst = 0.0f64;
        for key in self.terms.keys().chain(aligned.terms.keys()) {
            let a = self.terms.get(key).unwrap_or(&zero);
            let b = aligned.terms.get(key).unwrap_or(&zero);
            worst = worst.max((a - b).norm());
        }
        worst
    }

    /// Whether the two states agree termwise within `tol` (after axis
    /// alignment).
    pub fn approx_eq(&self, other: &StateVector, tol: f64) -> bool {
        self.max_amplitude_diff(other) <= tol
    }

    /// Whether the states agree within `tol` after axis alignment and
    /// multiplication of `other` by its best-fitting global phase.
    pub fn approx_eq_up_to_phase(&self, other: &StateVector, tol: f64) -> bool {
        let aligned = other
            .rotate_particle(Particle::One, self.axis1)
            .rotate_particle(Particle::Two, self.axis2);
        // Fit the phase on self's largest-amplitude term.
        let Some((anchor, anchor_amp)) = self
            .terms
            .iter()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
        else {
            return aligned.terms.is_empty();
        };
        let Some(matching) = aligned.terms.get(anchor) else {
            return false;
        };
        if matching.norm() < AMPLITUDE_EPS {
            return false;
        }
        let phase = (anchor_amp / matching) / (anchor_amp / matching).norm();
        let zero = Complex64::new(0.0, 0.0);
        for key in self.terms.keys().chain(aligned.terms.keys()) {
            let a = self.terms.get(key).unwrap_or(&zero);
            let b = aligned.terms.get(key).unwrap_or(&zero);
            if (a - b * phase).norm() > tol {
                return false;
            }
        }
        true
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "axes: particle 1 {}, particle 2 {}",
            self.axis(Particle::One),
            self.axis(Particle::Two)
        )?;
        for (k, amp) in &self.terms {
            writeln!(
                f,
                "  ({:+.6}{:+.6}i) |{} {}; dev {} {}; cmp {}>",
                amp.re, amp.im, k.spin1, k.spin2, k.device1, k.device2, k.comparison
            )?;
        }
        Ok(())
    }
}

/// Drops rounding-level terms in place.
pub(crate) fn prune(terms: &mut BTreeMap<TermKey, Complex64>) {
    terms.retain(|_, amp| amp.norm_sqr() > AMPLITUDE_EPS * AMPLITUDE_EPS);
}
