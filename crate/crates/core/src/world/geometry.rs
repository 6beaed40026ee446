use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use super::WorldError;

/// Planar point in meters. Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn with_height(self, z: f64) -> Point3 {
        Point3::new(self.x, self.y, z)
    }
}

/// Point or vector in 3D (x east, y north, z up), meters. Serialized as
/// `[x, y, z]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ZERO: Point3 = Point3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn horizontal_norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Point3) -> Point3 {
        Point3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn horizontal(self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// Unit vector, or `None` for the zero vector.
    pub fn unit(self) -> Option<Point3> {
        let n = self.norm();
        (n > 0.0).then(|| self * (1.0 / n))
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Point2::new(x, y)
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl From<[f64; 3]> for Point3 {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Point3::new(x, y, z)
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, k: f64) -> Point3 {
        Point3::new(self.x * k, self.y * k, self.z * k)
    }
}

/// Euclidean range and the elevation of the `a -> b` ray above the
/// horizontal plane at `a`, in degrees.
pub fn slant_range_and_elevation(a: Point3, b: Point3) -> Result<(f64, f64), WorldError> {
    let d = b - a;
    let range = d.norm();
    if range == 0.0 {
        return Err(WorldError::DegenerateGeometry);
    }
    let horizontal = d.horizontal_norm();
    let elevation = if horizontal == 0.0 {
        90.0f64.copysign(d.z)
    } else {
        d.z.atan2(horizontal).to_degrees()
    };
    Ok((range, elevation))
}

/// Angle between two direction vectors in degrees, in [0, 180].
/// Zero-length inputs yield 0.
pub fn angle_between_deg(u: Point3, v: Point3) -> f64 {
    let cross = u.cross(v).norm();
    let dot = u.dot(v);
    if cross == 0.0 && dot >= 0.0 {
        return 0.0;
    }
    cross.atan2(dot).to_degrees()
}
