//! Planar geometry on the highway frame.
//!
//! `x` runs along the road, `y` across it. Bearings are measured in degrees
//! clockwise from a vehicle heading, with `+y` lying 90° clockwise of `+x`.

use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Vehicle;

/// Angle in degrees, always normalized into `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Bearing(f64);

impl Bearing {
    pub const ZERO: Bearing = Bearing(0.0);

    pub fn new(raw_degrees: f64) -> Result<Self> {
        normalize_bearing(raw_degrees)
    }

    pub fn degrees(self) -> f64 {
        self.0
    }

    /// Smallest absolute angular difference to `other`, in `[0, 180]`.
    pub fn separation(self, other: Bearing) -> f64 {
        let d = libm::fabs(self.0 - other.0);
        if d > 180.0 {
            360.0 - d
        } else {
            d
        }
    }

    pub fn total_cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl TryFrom<f64> for Bearing {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        normalize_bearing(value)
    }
}

impl From<Bearing> for f64 {
    fn from(b: Bearing) -> f64 {
        b.0
    }
}

impl fmt::Display for Bearing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}°", self.0)
    }
}

/// Reduce an arbitrary finite angle into `[0, 360)`.
pub fn normalize_bearing(raw_degrees: f64) -> Result<Bearing> {
    if !raw_degrees.is_finite() {
        return Err(Error::InvalidArgument("bearing must be finite"));
    }
    let mut d = libm::fmod(raw_degrees, 360.0);
    if d < 0.0 {
        d += 360.0;
    }
    // fmod of a tiny negative value can round up to exactly 360
    if d >= 360.0 {
        d = 0.0;
    }
    Ok(Bearing(d))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Position) -> f64 {
        libm::hypot(other.x - self.x, other.y - self.y)
    }
}

/// Bearing of `to` as seen from `from`, relative to `heading`.
pub fn bearing_between(from: Position, to: Position, heading: Bearing) -> Result<Bearing> {
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    if dx == 0.0 && dy == 0.0 {
        return Err(Error::DegenerateGeometry);
    }
    let absolute = libm::atan2(dy, dx).to_degrees();
    normalize_bearing(absolute - heading.degrees())
}

/// Shift `x` by a multiple of `length` so it lies as close as possible to
/// `reference`. A non-positive or infinite `length` disables wrapping.
pub fn unwrap_near(reference: f64, x: f64, length: f64) -> f64 {
    if !(length > 0.0 && length.is_finite()) {
        return x;
    }
    let d = x - reference;
    x - length * libm::round(d / length)
}

/// Axis-aligned rectangle given by its center and full extents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub center: Position,
    pub length: f64,
    pub width: f64,
}

impl Rect {
    pub fn min(&self) -> Position {
        Position::new(self.center.x - self.length / 2.0, self.center.y - self.width / 2.0)
    }

    pub fn max(&self) -> Position {
        Position::new(self.center.x + self.length / 2.0, self.center.y + self.width / 2.0)
    }
}

/// Whether the open segment `(a, b)` touches the closed rectangle.
///
/// Liang-Barsky clipping of the parametric segment `a + t (b - a)`; the
/// segment hits the box iff the clipped parameter range meets `(0, 1)`.
pub fn segment_hits_rect(a: Position, b: Position, rect: &Rect) -> bool {
    let lo = rect.min();
    let hi = rect.max();
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    for (p, q) in [
        (-dx, a.x - lo.x),
        (dx, hi.x - a.x),
        (-dy, a.y - lo.y),
        (dy, hi.y - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
            continue;
        }
        let r = q / p;
        if p < 0.0 {
            if r > t1 {
                return false;
            }
            if r > t0 {
                t0 = r;
            }
        } else {
            if r < t0 {
                return false;
            }
            if r < t1 {
                t1 = r;
            }
        }
    }
    // open segment: a contact only at an endpoint does not count
    t0 < 1.0 && t1 > 0.0 && t0 <= t1
}

/// Vehicle footprint used for blockage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySize {
    pub length_m: f64,
    pub width_m: f64,
}

impl BodySize {
    pub fn inflated(self, margin_m: f64) -> Self {
        Self {
            length_m: self.length_m + 2.0 * margin_m,
            width_m: self.width_m + 2.0 * margin_m,
        }
    }
}

impl Default for BodySize {
    fn default() -> Self {
        Self {
            length_m: 4.8,
            width_m: 1.8,
        }
    }
}

/// Line of sight between `a` and `b`: no third vehicle's body crosses the
/// straight segment joining their antennas. `road_length` is the torus
/// circumference used to unwrap longitudinal coordinates.
pub fn los(a: &Vehicle, b: &Vehicle, all: &[Vehicle], body: BodySize, road_length: f64) -> bool {
    los_filtered(a, b, all.iter(), body, road_length)
}

pub(crate) fn los_filtered<'a>(
    a: &Vehicle,
    b: &Vehicle,
    blockers: impl Iterator<Item = &'a Vehicle>,
    body: BodySize,
    road_length: f64,
) -> bool {
    let pa = a.position();
    let pb = {
        let p = b.position();
        Position::new(unwrap_near(pa.x, p.x, road_length), p.y)
    };
    let mid_x = (pa.x + pb.x) / 2.0;
    for c in blockers {
        if c.id == a.id || c.id == b.id {
            continue;
        }
        let pc = c.position();
        let rect = Rect {
            center: Position::new(unwrap_near(mid_x, pc.x, road_length), pc.y),
            length: body.length_m,
            width: body.width_m,
        };
        if segment_hits_rect(pa, pb, &rect) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_bearing(370.0).unwrap().degrees(), 10.0);
        assert_eq!(normalize_bearing(-6.0).unwrap().degrees(), 354.0);
        assert_eq!(normalize_bearing(360.0).unwrap().degrees(), 0.0);
        assert_eq!(normalize_bearing(-1e-18).unwrap().degrees(), 0.0);
        assert!(matches!(
            normalize_bearing(f64::NAN),
            Err(Error::InvalidArgument(_))
        ));
        assert!(normalize_bearing(f64::INFINITY).is_err());
    }

    #[test]
    fn bearing_examples() {
        let o = Position::new(0.0, 0.0);
        let b = |x, y| bearing_between(o, Position::new(x, y), Bearing::ZERO).unwrap();
        assert_eq!(b(10.0, 0.0).degrees(), 0.0);
        assert_eq!(b(0.0, 10.0).degrees(), 90.0);
        assert_eq!(b(-10.0, 0.0).degrees(), 180.0);
        assert_eq!(bearing_between(o, o, Bearing::ZERO), Err(Error::DegenerateGeometry));
        // heading 180 flips the frame
        let h = Bearing::new(180.0).unwrap();
        assert_eq!(bearing_between(o, Position::new(-5.0, 0.0), h).unwrap().degrees(), 0.0);
    }

    #[test]
    fn separation_wraps() {
        let a = Bearing::new(359.0).unwrap();
        let b = Bearing::new(2.0).unwrap();
        assert!((a.separation(b) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn unwrap_examples() {
        assert_eq!(unwrap_near(10.0, 1990.0, 2000.0), -10.0);
        assert_eq!(unwrap_near(0.0, 1000.0, 2000.0).abs(), 1000.0);
        assert_eq!(unwrap_near(0.0, 30.0, f64::INFINITY), 30.0);
    }

    #[test]
    fn segment_rect_cases() {
        let r = Rect {
            center: Position::new(15.0, 0.0),
            length: 4.8,
            width: 1.8,
        };
        assert!(segment_hits_rect(Position::new(0.0, 0.0), Position::new(30.0, 0.0), &r));
        let far = Rect {
            center: Position::new(15.0, 7.0),
            ..r
        };
        assert!(!segment_hits_rect(Position::new(0.0, 0.0), Position::new(30.0, 3.5), &far));
        // segment ending before the box
        assert!(!segment_hits_rect(Position::new(0.0, 0.0), Position::new(10.0, 0.0), &r));
        // vertical segment through the box
        assert!(segment_hits_rect(Position::new(15.0, -5.0), Position::new(15.0, 5.0), &r));
    }
}
