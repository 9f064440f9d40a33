//! Measurement as unitary register coupling - no collapse anywhere.
//!
//! A device measuring particle `p` along axis `n` acts in two purely
//! mechanical steps:
//!
//! 1. re-express particle `p`'s spin labels in the `n` basis (a passive
//!    exact unitary, [`StateVector::rotate_particle`]);
//! 2. copy each spin label into the device's record register:
//!    `|s>|unset> -> |s>|s>` termwise, amplitudes untouched.
//!
//! Step 2 is an isometry from the `record = unset` subspace into the full
//! space (the quantum-register analogue of a von Neumann pointer
//! coupling). Superpositions therefore stay superpositions: measuring a
//! two-term state yields a two-term entangled particle + device state,
//! and a second device or the comparison apparatus extends the
//! entanglement instead of selecting a branch. Because records are
//! write-once, firing a device twice is a domain error, not a physical
//! evolution.
//!
//! The comparison apparatus reads both device records and stores the
//! ordered pair; devices acting on different registers commute, which
//! [`check_commutation`] verifies numerically for any prepared state.

use crate::direction::Direction;
use crate::state::{ComparisonRecord, Particle, StateVector};
use std::collections::BTreeMap;

/// Axis settings for the two devices of one experimental run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSetup {
    pub device1_axis: Direction,
    pub device2_axis: Direction,
}

impl MeasurementSetup {
    pub fn axis(&self, p: Particle) -> Direction {
        match p {
            Particle::One => self.device1_axis,
            Particle::Two => self.device2_axis,
        }
    }
}

/// Domain errors for the measurement couplings.
///
/// Each one marks an attempt to drive an isometry from outside its
/// domain (a register that is not in its ready state, or a comparison
/// with nothing to read); the input state is never mutated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum MeasurementError {
    /// The device's record register is already set on some term.
    #[error("device {device} has already fired; its record is write-once")]
    DeviceAlreadyFired { device: Particle },
    /// The comparison apparatus ran before the named device fired.
    #[error("comparison requires both device records; device {device} is still unset")]
    ComparisonBeforeMeasurement { device: Particle },
    /// The comparison record is already set on some term.
    #[error("comparison apparatus has already fired; its record is write-once")]
    ComparisonAlreadyFired,
}

/// Runs device `p` on `state` along `axis`.
///
/// Returns the post-measurement state: particle `p`'s labels are
/// re-expressed along `axis` and every term's record register for `p` is
/// set to that term's spin label. Amplitudes are carried over unchanged,
/// so branch weights are exactly the squared amplitudes of the rotated
/// state.
pub fn apply_measurement(
    state: &StateVector,
    p: Particle,
    axis: Direction,
) -> Result<StateVector, MeasurementError> {
    if !state.device_unset(p) {
        return Err(MeasurementError::DeviceAlreadyFired { device: p });
    }
    let rotated = state.rotate_particle(p, axis);
    let mut terms = BTreeMap::new();
    for (key, amp) in rotated.terms() {
        terms.insert(key.with_device_from_spin(p), amp);
    }
    Ok(StateVector::from_parts(
        rotated.axis(Particle::One),
        rotated.axis(Particle::Two),
        terms,
    ))
}

/// Runs the comparison apparatus: each term's comparison register is set
/// to the ordered pair of that term's device records.
pub fn apply_comparison(state: &StateVector) -> Result<StateVector, MeasurementError> {
    for p in [Particle::One, Particle::Two] {
        if state.device_unset(p) {
            return Err(MeasurementError::ComparisonBeforeMeasurement { device: p });
        }
    }
    if !state.comparison_unset() {
        return Err(MeasurementError::ComparisonAlreadyFired);
    }
    let mut terms = BTreeMap::new();
    for (key, amp) in state.terms() {
        let record = ComparisonRecord::from_outcomes(key.device1, key.device2)
            .expect("both devices checked fired");
        terms.insert(key.with_comparison(record), amp);
    }
    Ok(StateVector::from_parts(
        state.axis(Particle::One),
        state.axis(Particle::Two),
        terms,
    ))
}

/// Applies the two device measurements in both orders and returns the
/// largest termwise amplitude difference between the results.
///
/// The devices act on disjoint registers, so the result is zero up to
/// floating-point rounding for every state; a macroscopic value would
/// mean the "devices" fail to commute and the record structure is not
/// order-independent.
pub fn check_commutation(
    state: &StateVector,
    setup: &MeasurementSetup,
) -> Result<f64, MeasurementError> {
    let one_then_two = apply_measurement(
        &apply_measurement(state, Particle::One, setup.device1_axis)?,
        Particle::Two,
        setup.device2_axis,
    )?;
    let two_then_one = apply_measurement(
        &apply_measurement(state, Particle::Two, setup.device2_axis)?,
        Particle::One,
        setup.device1_axis,
    )?;
    Ok(one_then_two.max_amplitude_diff(&two_then_one))
}
