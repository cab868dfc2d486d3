//! Planar points and the distance helpers shared by every stage.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

/// A point (or vector) in the plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

/// Below this distance a node is considered coincident with the iterate and
/// its unit direction is replaced by zero.
pub const SINGULARITY_RADIUS: f64 = 1e-9;

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Unit vector pointing from `from` to `self`, or zero when the two
    /// points (nearly) coincide.
    pub fn direction_from(self, from: Point2) -> Point2 {
        let d = self - from;
        let n = d.norm();
        if n < SINGULARITY_RADIUS {
            Point2::ORIGIN
        } else {
            d * (1.0 / n)
        }
    }

    pub fn centroid<'a>(points: impl IntoIterator<Item = &'a Point2>) -> Option<Point2> {
        let mut sum = Point2::ORIGIN;
        let mut count = 0usize;
        for p in points {
            sum = sum + *p;
            count += 1;
        }
        (count > 0).then(|| sum * (1.0 / count as f64))
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

/// Transmitter -> target -> receiver path length for a line-of-sight target.
pub fn bistatic_range(target: Point2, gnb: Point2, ue: Point2) -> f64 {
    target.distance(gnb) + target.distance(ue)
}
