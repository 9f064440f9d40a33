//! Local-hidden-variable baselines.
//!
//! A local-hidden-variable (LHV) strategy explains the spin correlations
//! classically: each particle pair carries a shared parameter `lambda`
//! (here a unit vector, drawn uniformly on the sphere), and each device's
//! outcome is a deterministic function of its own axis and `lambda`
//! alone. Whatever the strategy, such models obey Bell's inequality; the
//! Monte Carlo machinery here produces their correlation functions so
//! the quantum predictions have an honest classical opponent.
//!
//! Sampling is deterministic and partition-independent: sample `i` lives
//! in chunk `i / CHUNK_SAMPLES`, and each chunk draws from its own
//! counter-derived ChaCha stream of the same seed, so the estimate for a
//! given `(seed, samples)` pair is bit-identical no matter how chunks
//! are scheduled or batched.

use crate::direction::Direction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Samples per RNG stream chunk. Fixed: changing it changes which
/// lambda sequence a given seed denotes.
pub const CHUNK_SAMPLES: u64 = 1 << 14;

/// A deterministic local strategy: outcomes depend only on the local
/// axis and the shared parameter.
pub trait LhvStrategy {
    /// Short identifier used in protocols and reports (e.g. `"sgn"`).
    fn name(&self) -> &'static str;

    /// Outcome (+1 or -1) of device 1 with axis `axis`, given the shared
    /// unit vector `lambda`.
    fn outcome_device1(&self, axis: [f64; 3], lambda: [f64; 3]) -> i8;

    /// Outcome (+1 or -1) of device 2 with axis `axis`, given the shared
    /// unit vector `lambda`.
    fn outcome_device2(&self, axis: [f64; 3], lambda: [f64; 3]) -> i8;
}

/// The classic sign model: device 1 reports the sign of `axis . lambda`,
/// device 2 reports the opposite sign of its own projection, so equal
/// axes are perfectly anti-correlated.
///
/// Averaging over uniform `lambda`, the correlation is linear in the
/// angle `t` between the axes:
///
/// ```text
/// E(t) = -1 + 2 t / pi
/// ```
///
/// (the product is -1 unless `lambda` falls in one of the two spherical
/// lunes between the planes normal to the axes, whose combined solid
/// angle fraction is `t / pi`). See [`sgn_closed_form`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SgnStrategy;

impl LhvStrategy for SgnStrategy {
    fn name(&self) -> &'static str {
        "sgn"
    }

    fn outcome_device1(&self, axis: [f64; 3], lambda: [f64; 3]) -> i8 {
        sign_of(dot(axis, lambda))
    }

    fn outcome_device2(&self, axis: [f64; 3], lambda: [f64; 3]) -> i8 {
        -sign_of(dot(axis, lambda))
    }
}

/// Exact correlation of [`SgnStrategy`] at axis separation `theta`.
pub fn sgn_closed_form(theta: f64) -> f64 {
    -1.0 + 2.0 * theta / std::f64::consts::PI
}

/// Looks up a built-in strategy by its protocol name.
pub fn built_in_strategy(name: &str) -> Option<Box<dyn LhvStrategy + Send + Sync>> {
    match name {
        "sgn" => Some(Box::new(SgnStrategy)),
        _ => None,
    }
}

/// Monte Carlo estimate of an LHV correlation.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LhvEstimate {
    pub mean: f64,
    /// Standard error of the mean (0 only when the sampled products
    /// never varied).
    pub stderr: f64,
    pub samples: u64,
}

/// Estimates `E(axis1, axis2)` for `strategy` over `samples` shared
/// parameters drawn from the stream family of `seed`.
///
/// The outcome products are exactly +-1, so their sum is accumulated as
/// an integer: the mean is exact for the sampled sequence, and repeated
/// calls are bit-identical.
pub fn estimate_correlation(
    strategy: &dyn LhvStrategy,
    axis1: &Direction,
    axis2: &Direction,
    samples: u64,
    seed: u64,
) -> LhvEstimate {
    assert!(samples >= 1, "at least one sample is required");
    let a = axis1.cartesian();
    let b = axis2.cartesian();
    let chunks = samples.div_ceil(CHUNK_SAMPLES);
    let mut sum: i64 = 0;
    for chunk in 0..chunks {
        let in_chunk = (samples - chunk * CHUNK_SAMPLES).min(CHUNK_SAMPLES);
        sum += chunk_product_sum(strategy, a, b, seed, chunk, in_chunk);
    }
    let mean = sum as f64 / samples as f64;
    let stderr = if samples >= 2 {
        // Products are +-1: the sample variance is (1 - mean^2) up to the
        // n/(n-1) correction.
        ((1.0 - mean * mean).max(0.0) / (samples - 1) as f64).sqrt()
    } else {
        1.0
    };
    LhvEstimate { mean, stderr, samples }
}

/// Sum of outcome products over one chunk's sample stream. Chunk `k`
/// always draws from stream `k + 1` of `seed`, independent of how many
/// chunks any particular estimate touches.
pub(crate) fn chunk_product_sum(
    strategy: &dyn LhvStrategy,
    axis1: [f64; 3],
    axis2: [f64; 3],
    seed: u64,
    chunk: u64,
    count: u64,
) -> i64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk + 1);
    let mut sum = 0i64;
    for _ in 0..count {
        let lambda = sample_unit_vector(&mut rng);
        sum += strategy.outcome_device1(axis1, lambda) as i64
            * strategy.outcome_device2(axis2, lambda) as i64;
    }
    sum
}

/// Uniform point on the unit sphere (Marsaglia's polar method - no
/// trigonometry in the hot loop).
pub fn sample_unit_vector<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let x = 2.0 * rng.gen::<f64>() - 1.0;
        let y = 2.0 * rng.gen::<f64>() - 1.0;
        let s = x * x + y * y;
        if s < 1.0 && s > 0.0 {
            let factor = 2.0 * (1.0 - s).sqrt();
            return [x * factor, y * factor, 1.0 - 2.0 * s];
        }
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `+1` for nonnegative projections (the boundary has measure zero under
/// any continuous lambda distribution, so the convention is statistically
/// invisible).
fn sign_of(x: f64) -> i8 {
    if x >= 0.0 {
        1
    } else {
        -1
    }
}
