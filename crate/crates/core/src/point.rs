//! Radar detection and frame model.
//!
//! Sensor frame: `x` forward along boresight, `y` left, `z` up. Azimuth is
//! measured in the x-y plane from `+x` toward `+y`, elevation from the x-y
//! plane toward `+z`. Angles are radians everywhere inside the crate.
//! Radial velocity is positive when the target recedes from the sensor.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Angular tolerance for quantized sensor records.
pub const INGEST_ANGLE_TOLERANCE: f64 = 1e-4;
/// Angular tolerance for points produced by the simulator.
pub const SIM_ANGLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum PointError {
    #[error("field `{0}` is not finite")]
    NonFinite(&'static str),
    #[error("field `{field}` = {value} is outside its valid range")]
    AngleOutOfRange { field: &'static str, value: f64 },
    #[error("`{field}` mismatch: expected {expected} from position, got {actual} (delta {delta})")]
    AngularMismatch {
        field: &'static str,
        expected: f64,
        actual: f64,
        delta: f64,
    },
    #[error("range {0} is negative")]
    NegativeRange(f64),
}

/// One radar detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Radar cross-section, dBsm.
    pub rcs: f64,
    /// Radial velocity, m/s.
    pub v: f64,
    pub azimuth: f64,
    pub elevation: f64,
}

impl RadarPoint {
    /// Builds a point from range and angles.
    pub fn from_spherical(range: f64, azimuth: f64, elevation: f64, rcs: f64, v: f64) -> Result<Self, PointError> {
        for (name, value) in [
            ("range", range),
            ("azimuth", azimuth),
            ("elevation", elevation),
            ("rcs", rcs),
            ("v", v),
        ] {
            if !value.is_finite() {
                return Err(PointError::NonFinite(name));
            }
        }
        if range < 0.0 {
            return Err(PointError::NegativeRange(range));
        }
        check_angle_ranges(azimuth, elevation)?;
        let horizontal = range * elevation.cos();
        Ok(Self {
            x: horizontal * azimuth.cos(),
            y: horizontal * azimuth.sin(),
            z: range * elevation.sin(),
            rcs,
            v,
            azimuth,
            elevation,
        })
    }

    /// Builds a point from a Cartesian position, deriving both angles.
    pub fn from_cartesian(position: [f64; 3], rcs: f64, v: f64) -> Self {
        let [x, y, z] = position;
        let (azimuth, elevation) = angles_of(position);
        Self {
            x,
            y,
            z,
            rcs,
            v,
            azimuth,
            elevation,
        }
    }

    #[inline]
    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn range(&self) -> f64 {
        norm(self.position())
    }

    /// Checks finiteness, angle ranges and position/angle consistency.
    ///
    /// The azimuth check is skipped when the point lies on the z axis and the
    /// elevation check when it sits at the origin; the angles carry no
    /// information there.
    pub fn validate(&self, angle_tolerance: f64) -> Result<(), PointError> {
        for (name, value) in [
            ("x", self.x),
            ("y", self.y),
            ("z", self.z),
            ("rcs", self.rcs),
            ("v", self.v),
            ("azimuth", self.azimuth),
            ("elevation", self.elevation),
        ] {
            if !value.is_finite() {
                return Err(PointError::NonFinite(name));
            }
        }
        check_angle_ranges(self.azimuth, self.elevation)?;

        let horizontal = self.x.hypot(self.y);
        if horizontal > 0.0 {
            let expected = self.y.atan2(self.x);
            let delta = wrapped_difference(expected, self.azimuth);
            if delta > angle_tolerance {
                return Err(PointError::AngularMismatch {
                    field: "azimuth",
                    expected,
                    actual: self.azimuth,
                    delta,
                });
            }
        }
        if horizontal > 0.0 || self.z != 0.0 {
            let expected = self.z.atan2(horizontal);
            let delta = (expected - self.elevation).abs();
            if delta > angle_tolerance {
                return Err(PointError::AngularMismatch {
                    field: "elevation",
                    expected,
                    actual: self.elevation,
                    delta,
                });
            }
        }
        Ok(())
    }
}

fn check_angle_ranges(azimuth: f64, elevation: f64) -> Result<(), PointError> {
    if !(-PI..=PI).contains(&azimuth) {
        return Err(PointError::AngleOutOfRange {
            field: "azimuth",
            value: azimuth,
        });
    }
    if !(-FRAC_PI_2..=FRAC_PI_2).contains(&elevation) {
        return Err(PointError::AngleOutOfRange {
            field: "elevation",
            value: elevation,
        });
    }
    Ok(())
}

/// Smallest absolute difference between two angles, accounting for the ±π seam.
fn wrapped_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Azimuth and elevation of a sensor-frame position.
pub fn angles_of(position: [f64; 3]) -> (f64, f64) {
    let [x, y, z] = position;
    (y.atan2(x), z.atan2(x.hypot(y)))
}

#[inline]
pub fn norm(p: [f64; 3]) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

/// Euclidean distance between two positions.
///
/// Every radius comparison in the crate goes through this one function so
/// that index pruning and membership tests agree bit for bit.
#[inline]
pub fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// A timestamped batch of detections. A point's index in `points` is its
/// identity for every downstream stage.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Frame {
    pub seq: u64,
    /// Seconds.
    pub timestamp: f64,
    pub points: Vec<RadarPoint>,
}

impl Frame {
    pub fn new(seq: u64, timestamp: f64, points: Vec<RadarPoint>) -> Self {
        Self { seq, timestamp, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Validates every point, returning the index and error of the first failure.
    pub fn validate(&self, angle_tolerance: f64) -> Result<(), (usize, PointError)> {
        self.points
            .iter()
            .enumerate()
            .try_for_each(|(i, p)| p.validate(angle_tolerance).map_err(|e| (i, e)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn point(x: f64, y: f64, z: f64, az: f64, el: f64) -> RadarPoint {
        RadarPoint {
            x,
            y,
            z,
            rcs: 0.0,
            v: 0.0,
            azimuth: az,
            elevation: el,
        }
    }

    #[test]
    fn boresight_point_is_valid() {
        assert_eq!(point(1.0, 0.0, 0.0, 0.0, 0.0).validate(1e-6), Ok(()));
    }

    #[test]
    fn off_axis_point_with_zero_azimuth_is_rejected() {
        match point(0.0, 1.0, 0.0, 0.0, 0.0).validate(1e-6) {
            Err(PointError::AngularMismatch { field, expected, .. }) => {
                assert_eq!(field, "azimuth");
                assert!((expected - FRAC_PI_2).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn diagonal_point_is_valid() {
        let mut p = point(1.0, 1.0, 2f64.sqrt(), FRAC_PI_4, FRAC_PI_4);
        p.rcs = -5.0;
        p.v = 1.2;
        assert_eq!(p.validate(1e-6), Ok(()));
    }

    #[test]
    fn non_finite_fields_are_reported() {
        let mut p = point(1.0, 0.0, 0.0, 0.0, 0.0);
        p.rcs = f64::NAN;
        assert_eq!(p.validate(1e-6), Err(PointError::NonFinite("rcs")));
        p.rcs = 0.0;
        p.x = f64::INFINITY;
        assert_eq!(p.validate(1e-6), Err(PointError::NonFinite("x")));
    }

    #[test]
    fn out_of_range_angles_are_reported() {
        let p = point(1.0, 0.0, 0.0, 4.0, 0.0);
        assert!(matches!(
            p.validate(1e-6),
            Err(PointError::AngleOutOfRange { field: "azimuth", .. })
        ));
        let p = point(1.0, 0.0, 0.0, 0.0, -2.0);
        assert!(matches!(
            p.validate(1e-6),
            Err(PointError::AngleOutOfRange { field: "elevation", .. })
        ));
    }

    #[test]
    fn azimuth_seam_is_not_a_mismatch() {
        // atan2(+0, -1) = π; -π describes the same direction.
        let p = point(-1.0, 0.0, 0.0, -PI, 0.0);
        assert_eq!(p.validate(1e-9), Ok(()));
    }

    #[test]
    fn spherical_examples() {
        let p = RadarPoint::from_spherical(5.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(p.position(), [5.0, 0.0, 0.0]);

        let p = RadarPoint::from_spherical(0.0, 0.3, -0.1, 0.0, 0.0).unwrap();
        assert_eq!(p.position().map(f64::abs), [0.0, 0.0, 0.0]);
        assert_eq!(p.validate(SIM_ANGLE_TOLERANCE), Ok(()));

        let p = RadarPoint::from_spherical(10.0, FRAC_PI_2, 0.0, 0.0, 0.0).unwrap();
        assert!(p.x.abs() < 1e-12);
        assert!((p.y - 10.0).abs() < 1e-12);
        assert_eq!(p.z, 0.0);
    }

    #[test]
    fn spherical_errors() {
        assert_eq!(
            RadarPoint::from_spherical(-1.0, 0.0, 0.0, 0.0, 0.0),
            Err(PointError::NegativeRange(-1.0))
        );
        assert!(matches!(
            RadarPoint::from_spherical(1.0, 0.0, 1.7, 0.0, 0.0),
            Err(PointError::AngleOutOfRange { field: "elevation", .. })
        ));
    }

    proptest! {
        #[test]
        fn spherical_round_trip(
            range in 0.0f64..200.0,
            az in -PI..=PI,
            el in -FRAC_PI_2..=FRAC_PI_2,
            rcs in -60.0f64..60.0,
            v in -30.0f64..30.0,
        ) {
            let p = RadarPoint::from_spherical(range, az, el, rcs, v).unwrap();
            prop_assert_eq!(p.validate(SIM_ANGLE_TOLERANCE), Ok(()));
            let r = p.range();
            prop_assert!((r - range).abs() <= 1e-9 * range.max(1e-300));
            prop_assert_eq!(p.validate(SIM_ANGLE_TOLERANCE), p.validate(SIM_ANGLE_TOLERANCE));
        }

        #[test]
        fn cartesian_points_are_self_consistent(
            x in -50.0f64..50.0, y in -50.0f64..50.0, z in -50.0f64..50.0,
        ) {
            let p = RadarPoint::from_cartesian([x, y, z], 0.0, 0.0);
            prop_assert_eq!(p.validate(SIM_ANGLE_TOLERANCE), Ok(()));
        }
    }
}
