//! Planar primitives shared by the kinematic model and the collision checks.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Slack applied in favour of overlap when comparing projected intervals.
pub const OVERLAP_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Rotates counterclockwise by `angle` radians.
    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Maps an angle into the half-open interval `[-π, π)`.
pub fn normalize_angle(angle: f64) -> f64 {
    if (-PI..PI).contains(&angle) {
        return angle;
    }
    let mut a = (angle + PI).rem_euclid(TAU) - PI;
    if a >= PI {
        a -= TAU;
    }
    if a < -PI {
        a += TAU;
    }
    a
}

/// Absolute angular difference on the circle, in `[0, π]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    normalize_angle(a - b).abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub fn intersects(&self, other: &Aabb) -> bool {
        self.min.x <= other.max.x + OVERLAP_EPS
            && other.min.x <= self.max.x + OVERLAP_EPS
            && self.min.y <= other.max.y + OVERLAP_EPS
            && other.min.y <= self.max.y + OVERLAP_EPS
    }
}

/// Convex quadrilateral with corners in counterclockwise order.
///
/// Vehicle footprints are rectangles; rectangular obstacles may be any
/// convex quadrilateral, so the separating-axis test uses the edge normals of
/// both shapes rather than assuming right angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect {
    pub corners: [Vec2; 4],
}

impl OrientedRect {
    /// Builds from four corners in either winding; stored counterclockwise.
    pub fn from_corners(mut corners: [Vec2; 4]) -> Self {
        if signed_area(&corners) < 0.0 {
            corners.reverse();
        }
        Self { corners }
    }

    pub fn center(&self) -> Vec2 {
        let s = self.corners.iter().fold(Vec2::default(), |acc, c| acc + *c);
        s * 0.25
    }

    /// Radius of a circle about [`center`](Self::center) containing every corner.
    pub fn bounding_radius(&self) -> f64 {
        let c = self.center();
        self.corners
            .iter()
            .map(|p| p.distance(c))
            .fold(0.0, f64::max)
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.corners).abs()
    }

    pub fn aabb(&self) -> Aabb {
        let mut min = self.corners[0];
        let mut max = self.corners[0];
        for c in &self.corners[1..] {
            min.x = min.x.min(c.x);
            min.y = min.y.min(c.y);
            max.x = max.x.max(c.x);
            max.y = max.y.max(c.y);
        }
        Aabb { min, max }
    }

    fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        (0..4).map(move |i| (self.corners[i], self.corners[(i + 1) % 4]))
    }

    fn project(&self, axis: Vec2) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in &self.corners {
            let p = c.dot(axis);
            lo = lo.min(p);
            hi = hi.max(p);
        }
        (lo, hi)
    }

    /// Closed containment test (boundary counts as inside).
    pub fn contains(&self, p: Vec2) -> bool {
        self.edges()
            .all(|(a, b)| (b - a).cross(p - a) >= -OVERLAP_EPS * (b - a).norm().max(1.0))
    }

    /// Euclidean distance from `p` to the closed region; zero inside.
    pub fn distance_to(&self, p: Vec2) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Returns a copy grown outward by `margin` along both local axes.
    ///
    /// Only meaningful for true rectangles (footprints).
    pub fn inflated(&self, margin: f64) -> Self {
        if margin == 0.0 {
            return *self;
        }
        let c = self.center();
        let ex = (self.corners[1] - self.corners[0]) * (1.0 / (self.corners[1] - self.corners[0]).norm());
        let ey = (self.corners[3] - self.corners[0]) * (1.0 / (self.corners[3] - self.corners[0]).norm());
        let corners = self.corners.map(|p| {
            let d = p - c;
            let sx = d.dot(ex).signum();
            let sy = d.dot(ey).signum();
            p + ex * (sx * margin) + ey * (sy * margin)
        });
        Self { corners }
    }
}

fn signed_area(corners: &[Vec2; 4]) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        s += corners[i].cross(corners[(i + 1) % 4]);
    }
    0.5 * s
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Whether a quadrilateral is convex and non-degenerate.
pub fn is_convex_quad(corners: &[Vec2; 4]) -> bool {
    let mut sign = 0.0;
    for i in 0..4 {
        let a = corners[i];
        let b = corners[(i + 1) % 4];
        let c = corners[(i + 2) % 4];
        let z = (b - a).cross(c - b);
        if z.abs() < 1e-12 {
            return false;
        }
        if sign == 0.0 {
            sign = z.signum();
        } else if z.signum() != sign {
            return false;
        }
    }
    true
}

/// Separating-axis test over the edge normals of both shapes. Closed:
/// touching shapes overlap.
pub fn rects_overlap(a: &OrientedRect, b: &OrientedRect) -> bool {
    let rr = a.bounding_radius() + b.bounding_radius();
    let dc = a.center() - b.center();
    if dc.dot(dc) > rr * rr + OVERLAP_EPS {
        return false;
    }
    for shape in [a, b] {
        for (p, q) in shape.edges() {
            let axis = (q - p).perp();
            let (amin, amax) = a.project(axis);
            let (bmin, bmax) = b.project(axis);
            let scale = axis.norm().max(1.0) * OVERLAP_EPS;
            if amax < bmin - scale || bmax < amin - scale {
                return false;
            }
        }
    }
    true
}

/// Closed overlap between a quadrilateral and a disc.
pub fn rect_circle_overlap(rect: &OrientedRect, center: Vec2, radius: f64) -> bool {
    let reach = rect.bounding_radius() + radius;
    let d = rect.center() - center;
    if d.dot(d) > reach * reach + OVERLAP_EPS {
        return false;
    }
    rect.distance_to(center) <= radius + OVERLAP_EPS
}
