//! Spatial directions on the unit sphere.
//!
//! A [`Direction`] is the orientation of a Stern-Gerlach-style measuring
//! device (equivalently, a point on the Bloch sphere). Internally it is
//! stored as polar/azimuthal angles in radians with the polar angle in
//! `[0, pi]` and the azimuth normalized to `[0, 2*pi)`; the azimuth of a
//! pole is forced to zero so that every physical direction has exactly one
//! canonical representation.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use std::fmt;

/// Two unit vectors closer than this (Euclidean distance in Cartesian
/// coordinates) are treated as the same physical direction.
pub const DIRECTION_EPS: f64 = 1e-12;

/// A unit vector given by polar angle `theta` from the +z axis and
/// azimuthal angle `phi` from the +x axis.
#[derive(Debug, Clone, Copy)]
pub struct Direction {
    theta: f64,
    phi: f64,
}

impl Direction {
    /// The +z axis (`theta = 0`).
    pub const Z: Direction = Direction { theta: 0.0, phi: 0.0 };

    /// Builds a direction from angles in radians.
    ///
    /// `theta` outside `[0, pi]` and non-finite inputs are rejected rather
    /// than silently wrapped: callers that want wrapping semantics can go
    /// through [`Direction::from_cartesian`].
    pub fn new(theta: f64, phi: f64) -> Result<Direction, DirectionError> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(DirectionError::NonFinite);
        }
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(DirectionError::PolarOutOfRange { theta });
        }
        Ok(Direction { theta, phi: canonical_phi(theta, phi) })
    }

    /// Builds a direction from angles in degrees (`polar` in `[0, 180]`).
    pub fn from_degrees(polar: f64, azimuth: f64) -> Result<Direction, DirectionError> {
        if !polar.is_finite() || !azimuth.is_finite() {
            return Err(DirectionError::NonFinite);
        }
        if !(0.0..=180.0).contains(&polar) {
            return Err(DirectionError::PolarOutOfRange { theta: polar.to_radians() });
        }
        Ok(Direction {
            theta: polar.to_radians(),
            phi: canonical_phi(polar.to_radians(), azimuth.to_radians()),
        })
    }

    /// Builds the direction of an arbitrary nonzero vector.
    pub fn from_cartesian(v: [f64; 3]) -> Result<Direction, DirectionError> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !norm.is_finite() {
            return Err(DirectionError::NonFinite);
        }
        if norm < DIRECTION_EPS {
            return Err(DirectionError::ZeroVector);
        }
        let theta = (v[2] / norm).clamp(-1.0, 1.0).acos();
        let phi = v[1].atan2(v[0]);
        Ok(Direction { theta, phi: canonical_phi(theta, phi) })
    }

    /// Polar angle in radians, in `[0, pi]`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Azimuthal angle in radians, in `[0, 2*pi)`.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Polar angle in degrees.
    pub fn polar_degrees(&self) -> f64 {
        self.theta.to_degrees()
    }

    /// Azimuthal angle in degrees.
    pub fn azimuth_degrees(&self) -> f64 {
        self.phi.to_degrees()
    }

    /// Cartesian unit-vector components `[x, y, z]`.
    pub fn cartesian(&self) -> [f64; 3] {
        let (st, ct) = (self.theta.sin(), self.theta.cos());
        let (sp, cp) = (self.phi.sin(), self.phi.cos());
        [st * cp, st * sp, ct]
    }

    /// Dot product of the two unit vectors.
    pub fn dot(&self, other: &Direction) -> f64 {
        let a = self.cartesian();
        let b = other.cartesian();
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    /// Angle between the two directions, in `[0, pi]`.
    pub fn angle_between(&self, other: &Direction) -> f64 {
        self.dot(other).clamp(-1.0, 1.0).acos()
    }

    /// A direction making angle `angle` (radians) with `self`.
    ///
    /// The rotation happens in a deterministic plane: for a non-pole
    /// direction, the plane spanned by `self` and the +z axis (rotating
    /// away from +z); for the poles, the x-z plane. Only the angle to
    /// `self` is contractual - callers that care about the full geometry
    /// should construct both directions explicitly.
    pub fn at_angle(&self, angle: f64) -> Direction {
        let n = self.cartesian();
        // Unit vector perpendicular to self in the chosen plane.
        let perp = if self.theta < DIRECTION_EPS || self.theta > std::f64::consts::PI - DIRECTION_EPS
        {
            [if n[2] > 0.0 { 1.0 } else { -1.0 }, 0.0, 0.0]
        } else {
            // Component of +z orthogonal to n, normalized; points "toward the
            // pole", so rotating by a positive angle increases theta.
            let zn = n[2];
            let raw = [-zn * n[0], -zn * n[1], 1.0 - zn * zn];
            let norm = (raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2]).sqrt();
            [-raw[0] / norm, -raw[1] / norm, -raw[2] / norm]
        };
        let (s, c) = (angle.sin(), angle.cos());
        Direction::from_cartesian([
            c * n[0] + s * perp[0],
            c * n[1] + s * perp[1],
            c * n[2] + s * perp[2],
        ])
        .expect("rotating a unit vector yields a unit vector")
    }

    /// Whether the two directions coincide within [`DIRECTION_EPS`].
    pub fn approx_eq(&self, other: &Direction) -> bool {
        let a = self.cartesian();
        let b = other.cartesian();
        let d2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2);
        d2 <= DIRECTION_EPS * DIRECTION_EPS
    }
}

impl PartialEq for Direction {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(other)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(polar {} deg, azimuth {} deg)", self.polar_degrees(), self.azimuth_degrees())
    }
}

impl Serialize for Direction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Direction", 2)?;
        s.serialize_field("polar_deg", &self.polar_degrees())?;
        s.serialize_field("azimuth_deg", &self.azimuth_degrees())?;
        s.end()
    }
}

/// Errors from direction constructors.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DirectionError {
    /// An input angle or component was NaN or infinite.
    #[error("direction components must be finite")]
    NonFinite,
    /// The polar angle lies outside `[0, pi]` (`[0, 180]` in degrees).
    #[error("polar angle {theta} rad outside [0, pi]")]
    PolarOutOfRange { theta: f64 },
    /// A zero vector has no direction.
    #[error("cannot take the direction of a (near-)zero vector")]
    ZeroVector,
}

/// Normalizes an azimuth to `[0, 2*pi)` and zeroes it at the poles, where
/// it is physically meaningless.
fn canonical_phi(theta: f64, phi: f64) -> f64 {
    if theta < DIRECTION_EPS || theta > std::f64::consts::PI - DIRECTION_EPS {
        return 0.0;
    }
    let tau = 2.0 * std::f64::consts::PI;
    let mut p = phi % tau;
    if p < 0.0 {
        p += tau;
    }
    // `% tau` can round back up to tau itself for tiny negative inputs.
    if p >= tau {
        p = 0.0;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cartesian_of_axes() {
        let z = Direction::Z.cartesian();
        assert_eq!(z, [0.0, 0.0, 1.0]);

        let x = Direction::new(PI / 2.0, 0.0).unwrap().cartesian();
        assert!((x[0] - 1.0).abs() < 1e-15 && x[1].abs() < 1e-15 && x[2].abs() < 1e-15);

        let y = Direction::new(PI / 2.0, PI / 2.0).unwrap().cartesian();
        assert!(y[0].abs() < 1e-15 && (y[1] - 1.0).abs() < 1e-15 && y[2].abs() < 1e-15);
    }

    #[test]
    fn cartesian_round_trip() {
        let mut lcg = 0x243f_6a88_85a3_08d3_u64;
        let mut next = move || {
            lcg = lcg.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (lcg >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..500 {
            let d = Direction::new(next() * PI, next() * 2.0 * PI).unwrap();
            let back = Direction::from_cartesian(d.cartesian()).unwrap();
            assert!(d.approx_eq(&back), "{d} vs {back}");
        }
    }

    #[test]
    fn poles_canonicalize_azimuth() {
        let north = Direction::new(0.0, 1.234).unwrap();
        assert_eq!(north.phi(), 0.0);
        let south = Direction::new(PI, -2.0).unwrap();
        assert_eq!(south.phi(), 0.0);
        assert!(north.approx_eq(&Direction::Z));
    }

    #[test]
    fn azimuth_wraps_into_range() {
        let d = Direction::new(1.0, -0.5).unwrap();
        assert!((d.phi() - (2.0 * PI - 0.5)).abs() < 1e-12);
        let e = Direction::new(1.0, 2.0 * PI + 0.25).unwrap();
        assert!((e.phi() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(Direction::new(f64::NAN, 0.0), Err(DirectionError::NonFinite));
        assert!(matches!(
            Direction::new(3.2, 0.0),
            Err(DirectionError::PolarOutOfRange { .. })
        ));
        assert!(matches!(
            Direction::from_degrees(180.5, 0.0),
            Err(DirectionError::PolarOutOfRange { .. })
        ));
        assert_eq!(
            Direction::from_cartesian([0.0, 0.0, 0.0]),
            Err(DirectionError::ZeroVector)
        );
    }

    #[test]
    fn angle_between_matches_construction() {
        let base = Direction::new(0.3, 1.1).unwrap();
        for k in 0..=16 {
            let angle = PI * k as f64 / 16.0;
            let other = base.at_angle(angle);
            assert!(
                (base.angle_between(&other) - angle).abs() < 1e-9,
                "angle {angle}: got {}",
                base.angle_between(&other)
            );
        }
    }

    #[test]
    fn at_angle_from_z_lands_in_xz_plane() {
        let d = Direction::Z.at_angle(1.0);
        assert!((d.theta() - 1.0).abs() < 1e-12);
        assert!(d.phi().abs() < 1e-12);
    }

    #[test]
    fn equality_is_tolerance_based() {
        let a = Direction::new(1.0, 2.0).unwrap();
        let b = Direction::new(1.0 + 1e-14, 2.0 - 1e-14).unwrap();
        assert_eq!(a, b);
        let c = Direction::new(1.0 + 1e-6, 2.0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn degrees_round_trip() {
        let d = Direction::from_degrees(60.0, 45.0).unwrap();
        assert!((d.polar_degrees() - 60.0).abs() < 1e-12);
        assert!((d.azimuth_degrees() - 45.0).abs() < 1e-12);
        assert!((d.theta() - PI / 3.0).abs() < 1e-15);
    }
}
