//! Planar vectors, 2×2 matrices and the handful of polygon predicates the
//! region construction needs.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point or tangent vector in the plane. Serialized as `[x1, x2]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(into = "[f64; 2]", from = "[f64; 2]")]
pub struct Vec2 {
    pub x1: f64,
    pub x2: f64,
}

pub type Point = Vec2;

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x1: 0.0, x2: 0.0 };

    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x1 * other.x1 + self.x2 * other.x2
    }

    /// Wedge product `self.x1 * other.x2 - self.x2 * other.x1`.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x1 * other.x2 - self.x2 * other.x1
    }

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x1 * s, self.x2 * s)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x1, v.x2]
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x1 + o.x1, self.x2 + o.x2)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x1 - o.x1, self.x2 - o.x2)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x1, -self.x2)
    }
}

/// Row-major 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Mat2::new(
            self.d / det,
            -self.b / det,
            -self.c / det,
            self.a / det,
        ))
    }

    /// `self^k` by repeated multiplication.
    pub fn pow(&self, k: usize) -> Mat2 {
        (0..k).fold(Mat2::IDENTITY, |acc, _| *self * acc)
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        (self.a - other.a)
            .abs()
            .max((self.b - other.b).abs())
            .max((self.c - other.c).abs())
            .max((self.d - other.d).abs())
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

impl Mul<Vec2> for Mat2 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        Vec2::new(self.a * v.x1 + self.b * v.x2, self.c * v.x1 + self.d * v.x2)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}

/// Signed orientation of `p` relative to the directed line `a -> b`:
/// positive on the left, negative on the right.
pub fn orient(a: Point, b: Point, p: Point) -> f64 {
    (b - a).cross(p - a)
}

/// Intersection of the line through `a` and `b` with the vertical line
/// `x1 = c`. `None` when the line is itself vertical.
pub fn line_at_x1(a: Point, b: Point, c: f64) -> Option<Point> {
    let dx = b.x1 - a.x1;
    if dx == 0.0 {
        return None;
    }
    let s = (c - a.x1) / dx;
    Some(Vec2::new(c, a.x2 + s * (b.x2 - a.x2)))
}

/// Intersection of the line through `a` and `b` with the horizontal line
/// `x2 = c`.
pub fn line_at_x2(a: Point, b: Point, c: f64) -> Option<Point> {
    let dy = b.x2 - a.x2;
    if dy == 0.0 {
        return None;
    }
    let s = (c - a.x2) / dy;
    Some(Vec2::new(a.x1 + s * (b.x1 - a.x1), c))
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab.scale(t))
}

/// Whether the closed segments `[p1, p2]` and `[q1, q2]` share a point.
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Point, b: Point, p: Point, o: f64| {
        o == 0.0
            && p.x1 >= a.x1.min(b.x1)
            && p.x1 <= a.x1.max(b.x1)
            && p.x2 >= a.x2.min(b.x2)
            && p.x2 <= a.x2.max(b.x2)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Iterator over the closed edges `(v[i], v[i+1 mod n])` of a vertex ring.
pub fn edges(vertices: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    let n = vertices.len();
    (0..n).map(move |i| (vertices[i], vertices[(i + 1) % n]))
}

/// True when no two non-adjacent edges of the closed ring intersect.
pub fn is_simple_ring(vertices: &[Point]) -> bool {
    let n = vertices.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        for j in (i + 1)..n {
            // adjacent edges share a vertex by construction
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (vertices[j], vertices[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Point-in-polygon by crossing number, with the boundary (within `tol`)
/// counted as inside.
pub fn ring_contains(vertices: &[Point], p: Point, tol: f64) -> bool {
    if edges(vertices).any(|(a, b)| point_segment_distance(p, a, b) <= tol) {
        return true;
    }
    let mut inside = false;
    for (a, b) in edges(vertices) {
        if (a.x2 > p.x2) != (b.x2 > p.x2) {
            let x_cross = a.x1 + (p.x2 - a.x2) * (b.x1 - a.x1) / (b.x2 - a.x2);
            if p.x1 < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Distance from `p` to the ring's boundary.
pub fn ring_boundary_distance(vertices: &[Point], p: Point) -> f64 {
    edges(vertices)
        .map(|(a, b)| point_segment_distance(p, a, b))
        .fold(f64::INFINITY, f64::min)
}

/// Twice the signed area (positive for anticlockwise rings).
pub fn ring_signed_area2(vertices: &[Point]) -> f64 {
    edges(vertices).map(|(a, b)| a.cross(b)).sum()
}

/// Axis-aligned bounding box as `(min, max)` corners.
pub fn bounding_box(vertices: &[Point]) -> (Point, Point) {
    vertices.iter().fold(
        (
            Vec2::new(f64::INFINITY, f64::INFINITY),
            Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        ),
        |(lo, hi), v| {
            (
                Vec2::new(lo.x1.min(v.x1), lo.x2.min(v.x2)),
                Vec2::new(hi.x1.max(v.x1), hi.x2.max(v.x2)),
            )
        },
    )
}
