//! Branch decomposition and world counting.
//!
//! After both devices (and optionally the comparison apparatus) have
//! fired, the state is a sum of terms labeled by record configurations.
//! Each distinct configuration is a [`Branch`] - a "world" in the
//! colloquial sense - carrying its amplitude and weight (squared
//! amplitude). Relative frequencies are extracted from the branch
//! structure by counting, not by postulate:
//!
//! 1. [`rationalize_weights`] approximates the weights by fractions over
//!    a common denominator `N` bounded by a caller-supplied limit;
//! 2. [`deutsch_refine`] splits each branch of weight `n/N` into `n`
//!    equal-weight worlds, giving `N` equipossible worlds in total;
//! 3. [`born_weights`] recovers the probabilities as world-count ratios
//!    `n/N` - exactly the squared amplitudes whenever those are rational
//!    with denominator within the limit, and within the reported
//!    approximation error otherwise.
//!
//! The refinement is the point: once every world is equipossible, branch
//! statistics follow from counting alone, and the counts converge to the
//! usual quantum weights as the denominator bound grows.

use crate::state::{ComparisonRecord, DeviceRecord, Particle, StateVector};
use num_complex::Complex64;
use num_integer::Integer;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use std::collections::BTreeMap;
use std::fmt;

/// Branch weights at or below this are allowed to round to zero worlds;
/// anything larger that would get zero worlds is an approximation
/// failure, reported as [`WorldError::NoValidApproximation`].
pub const ZERO_WEIGHT_TOLERANCE: f64 = 1e-6;

/// Branch weights must sum to 1 within this before rationalization.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// One branch of the decomposed state: a distinct record configuration
/// with its amplitude and weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub device1: DeviceRecord,
    pub device2: DeviceRecord,
    pub comparison: ComparisonRecord,
    pub amplitude: Complex64,
    /// Squared amplitude; the branch's share of the total norm.
    pub weight: f64,
}

impl Branch {
    /// Product of the two recorded outcomes, `+1` or `-1`.
    pub fn outcome_product(&self) -> Option<i8> {
        Some(self.device1.outcome_sign()? * self.device2.outcome_sign()?)
    }
}

impl Serialize for Branch {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Branch", 6)?;
        s.serialize_field("device1", &self.device1)?;
        s.serialize_field("device2", &self.device2)?;
        s.serialize_field("comparison", &self.comparison)?;
        s.serialize_field("amplitude_re", &self.amplitude.re)?;
        s.serialize_field("amplitude_im", &self.amplitude.im)?;
        s.serialize_field("weight", &self.weight)?;
        s.end()
    }
}

/// A reduced nonnegative fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Rational {
    pub num: u64,
    pub den: u64,
}

impl Rational {
    /// Builds a reduced fraction. Panics if `den == 0`.
    pub fn new(num: u64, den: u64) -> Rational {
        assert!(den != 0, "rational denominator must be nonzero");
        let g = num.gcd(&den);
        if g == 0 {
            return Rational { num: 0, den: 1 };
        }
        Rational { num: num / g, den: den / g }
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Output of [`rationalize_weights`]: one reduced fraction per input
/// weight, all sharing the common denominator before reduction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rationalization {
    pub rationals: Vec<Rational>,
    /// The common denominator `N`; every fraction is `n_k / N` reduced.
    pub common_denominator: u64,
    /// `max_k |w_k - n_k / N|`.
    pub approximation_error: f64,
}

/// Output of [`deutsch_refine`]: world counts per branch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WorldRefinement {
    pub counts: Vec<u64>,
    pub total_worlds: u64,
}

/// One branch with its rationalized weight and world count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusEntry {
    pub branch: Branch,
    pub weight_fraction: Rational,
    pub world_count: u64,
}

/// Complete world census of a decomposed state: branches in canonical
/// record order, each with its world count out of `total_worlds`
/// equipossible worlds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorldCensus {
    pub entries: Vec<CensusEntry>,
    pub total_worlds: u64,
    pub common_denominator: u64,
    pub approximation_error: f64,
}

impl WorldCensus {
    /// Rationalizes the branch weights and refines them into worlds in
    /// one step.
    pub fn assemble(branches: Vec<Branch>, max_denominator: u64) -> Result<WorldCensus, WorldError> {
        let weights: Vec<f64> = branches.iter().map(|b| b.weight).collect();
        let rat = rationalize_weights(&weights, max_denominator)?;
        let refinement = deutsch_refine(&rat.rationals)?;
        let entries = branches
            .into_iter()
            .zip(rat.rationals.iter())
            .zip(refinement.counts.iter())
            .map(|((branch, &weight_fraction), &world_count)| CensusEntry {
                branch,
                weight_fraction,
                world_count,
            })
            .collect();
        Ok(WorldCensus {
            entries,
            total_worlds: refinement.total_worlds,
            common_denominator: rat.common_denominator,
            approximation_error: rat.approximation_error,
        })
    }
}

/// Errors from branch decomposition and world counting.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    /// A device record is still unset somewhere; branches are only
    /// defined once every device has fired.
    #[error("device {device} has not fired; branch decomposition needs complete records")]
    IncompleteMeasurement { device: Particle },
    /// The weights do not sum to 1 within [`WEIGHT_SUM_TOLERANCE`].
    #[error("weights sum to {sum}, expected 1 within {WEIGHT_SUM_TOLERANCE}")]
    WeightsNotNormalized { sum: f64 },
    /// The denominator bound was zero.
    #[error("denominator bound must be at least 1")]
    ZeroDenominatorBound,
    /// A weight above [`ZERO_WEIGHT_TOLERANCE`] would receive zero worlds
    /// under the given bound.
    #[error(
        "weight {weight} at index {index} is not representable under denominator bound {bound} \
         (it would get zero worlds)"
    )]
    NoValidApproximation { index: usize, weight: f64, bound: u64 },
    /// The rationals handed to refinement do not sum to exactly 1.
    #[error("rationals sum to {num}/{den}, expected exactly 1")]
    RationalsNotNormalized { num: u128, den: u128 },
    /// The common refinement would need more than `u64::MAX` worlds.
    #[error("world count exceeds u64 range; lower the denominator bound")]
    Overflow,
}

/// Groups the state's terms by record configuration.
///
/// Requires every device record to be set (the comparison record may or
/// may not be). Branches come back sorted by record configuration, so
/// the order is reproducible run to run.
pub fn decompose_branches(state: &StateVector) -> Result<Vec<Branch>, WorldError> {
    for p in [Particle::One, Particle::Two] {
        if state.terms_map().keys().any(|k| k.device(p) == DeviceRecord::Unset) {
            return Err(WorldError::IncompleteMeasurement { device: p });
        }
    }
    let mut groups: BTreeMap<(DeviceRecord, DeviceRecord, ComparisonRecord), (Complex64, f64)> =
        BTreeMap::new();
    for (key, amp) in state.terms() {
        let entry = groups
            .entry((key.device1, key.device2, key.comparison))
            .or_insert((amp, 0.0));
        // Post-measurement spins always match records, so each group has
        // exactly one term; the amplitude stored first is the amplitude.
        entry.1 += amp.norm_sqr();
    }
    Ok(groups
        .into_iter()
        .map(|((device1, device2, comparison), (amplitude, weight))| Branch {
            device1,
            device2,
            comparison,
            amplitude,
            weight,
        })
        .collect())
}

/// Best rational approximation of `x` in `[0, 1]` with denominator at
/// most `max_den`, via continued-fraction convergents and the final
/// semiconvergent. Ties prefer the smaller denominator.
fn best_rational_in_unit(x: f64, max_den: u64) -> (u64, u64) {
    debug_assert!((0.0..=1.0).contains(&x) && max_den >= 1);
    // Below this, the remainder is floating-point debris: the current
    // convergent already matches x to ~1e-13, beyond any physically
    // meaningful refinement here.
    const REMAINDER_FLOOR: f64 = 1e-13;

    let (mut p_prev, mut q_prev) = (1u64, 0u64);
    let (mut p_cur, mut q_cur) = (x.floor() as u64, 1u64);
    let mut rem = x - x.floor();
    let mut capped: Option<(u64, u64)> = None;
    for _ in 0..128 {
        if rem < REMAINDER_FLOOR {
            break;
        }
        let quotient = (1.0 / rem).floor();
        let a = quotient as u128;
        let next_q = a * q_cur as u128 + q_prev as u128;
        if next_q > max_den as u128 {
            // Largest semiconvergent still within the bound.
            let k = (max_den - q_prev) / q_cur;
            if k >= 1 {
                capped = Some((k * p_cur + p_prev, k * q_cur + q_prev));
            }
            break;
        }
        let next_p = a * p_cur as u128 + p_prev as u128;
        (p_prev, q_prev) = (p_cur, q_cur);
        (p_cur, q_cur) = (next_p as u64, next_q as u64);
        rem = 1.0 / rem - quotient;
    }
    match capped {
        Some((p, q)) => {
            let err_conv = (x - p_cur as f64 / q_cur as f64).abs();
            let err_semi = (x - p as f64 / q as f64).abs();
            // Strict improvement required: on a tie the convergent has
            // the smaller denominator.
            if err_semi < err_conv {
                (p, q)
            } else {
                (p_cur, q_cur)
            }
        }
        None => (p_cur, q_cur),
    }
}

/// Approximates branch weights by fractions over one common denominator
/// `N <= max_denominator`.
///
/// `N` is the least common multiple of the per-weight best-approximation
/// denominators, capped at the bound; numerators are then apportioned by
/// largest remainder so they sum to exactly `N` (the fractions sum to
/// exactly 1 even when the float weights only do so approximately).
///
/// A weight above [`ZERO_WEIGHT_TOLERANCE`] that would receive numerator
/// zero is not representable under the bound and trips
/// [`WorldError::NoValidApproximation`]; weights at or below the
/// tolerance are allowed to drop to `0/1` (zero worlds).
pub fn rationalize_weights(
    weights: &[f64],
    max_denominator: u64,
) -> Result<Rationalization, WorldError> {
    if max_denominator == 0 {
        return Err(WorldError::ZeroDenominatorBound);
    }
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || !sum.is_finite() || (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(WorldError::WeightsNotNormalized { sum });
    }
    let clamped: Vec<f64> = weights.iter().map(|w| w.clamp(0.0, 1.0)).collect();

    let mut lcm: u128 = 1;
    for &w in &clamped {
        let (_, q) = best_rational_in_unit(w, max_denominator);
        lcm = lcm.lcm(&(q as u128));
        if lcm > max_denominator as u128 {
            break;
        }
    }
    let n = if lcm > max_denominator as u128 { max_denominator } else { lcm as u64 };

    // Largest-remainder apportionment of w_k * N onto integers summing
    // to exactly N.
    let scaled: Vec<f64> = clamped.iter().map(|w| w * n as f64).collect();
    let mut nums: Vec<u64> = scaled.iter().map(|s| s.floor() as u64).collect();
    let mut assigned: u64 = nums.iter().sum();
    let mut order: Vec<usize> = (0..nums.len()).collect();
    // Descending fractional remainder, index ascending on ties.
    order.sort_by(|&i, &j| {
        let fi = scaled[i] - scaled[i].floor();
        let fj = scaled[j] - scaled[j].floor();
        fj.total_cmp(&fi).then(i.cmp(&j))
    });
    let mut cursor = 0;
    while assigned < n {
        nums[order[cursor]] += 1;
        assigned += 1;
        cursor = (cursor + 1) % order.len();
    }
    // Defensive: floor sums can only exceed N if the input sum drifted
    // high; shave from the smallest remainders (reverse order).
    let mut rev = order.len();
    while assigned > n {
        rev -= 1;
        if nums[order[rev]] > 0 {
            nums[order[rev]] -= 1;
            assigned -= 1;
        }
        if rev == 0 {
            rev = order.len();
        }
    }

    let mut approximation_error = 0.0f64;
    let mut rationals = Vec::with_capacity(nums.len());
    for (index, (&num, &w)) in nums.iter().zip(clamped.iter()).enumerate() {
        if num == 0 && w > ZERO_WEIGHT_TOLERANCE {
            return Err(WorldError::NoValidApproximation {
                index,
                weight: w,
                bound: max_denominator,
            });
        }
        approximation_error = approximation_error.max((w - num as f64 / n as f64).abs());
        rationals.push(Rational::new(num, n));
    }
    Ok(Rationalization { rationals, common_denominator: n, approximation_error })
}

/// Refines branches with rational weights `n_k / d_k` into equipossible
/// worlds: with `N = lcm(d_k)`, branch `k` becomes `n_k * N / d_k`
/// identical worlds of weight `1/N` each.
///
/// The rationals must sum to exactly 1 (checked in integer arithmetic),
/// otherwise the "worlds" would not partition the state.
pub fn deutsch_refine(rationals: &[Rational]) -> Result<WorldRefinement, WorldError> {
    let mut lcm: u128 = 1;
    for r in rationals {
        lcm = lcm.lcm(&(r.den as u128));
        if lcm > u64::MAX as u128 {
            return Err(WorldError::Overflow);
        }
    }
    let mut counts = Vec::with_capacity(rationals.len());
    let mut total: u128 = 0;
    for r in rationals {
        let count = r.num as u128 * (lcm / r.den as u128);
        if count > u64::MAX as u128 {
            return Err(WorldError::Overflow);
        }
        total += count;
        counts.push(count as u64);
    }
    if total != lcm {
        return Err(WorldError::RationalsNotNormalized { num: total, den: lcm });
    }
    Ok(WorldRefinement { counts, total_worlds: lcm as u64 })
}

/// Probabilities as world-count ratios `count_k / total`.
pub fn born_weights(census: &WorldCensus) -> Vec<f64> {
    census
        .entries
        .iter()
        .map(|e| e.world_count as f64 / census.total_worlds as f64)
        .collect()
}
