//! Planar geometry primitives shared by the network, meshing and analysis code.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(
            self.x + t * (other.x - self.x),
            self.y + t * (other.y - self.y),
        )
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Twice the signed area of the triangle `(a, b, c)`; positive when counterclockwise.
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

/// Distance from `p` to the segment `[a, b]` and the parameter of the nearest point.
pub fn segment_point_distance(a: Point, b: Point, p: Point) -> (f64, f64) {
    let d = b - a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return (p.dist(a), 0.0);
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    (p.dist(a.lerp(b, t)), t)
}

/// How two closed segments meet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentContact {
    Disjoint,
    /// A single common point.
    Point,
    /// Collinear with a common sub-segment of positive length.
    Overlap,
}

/// Classifies the intersection of closed segments `[a, b]` and `[c, d]`.
///
/// `tol` is an absolute distance below which points are treated as coincident.
pub fn segment_contact(a: Point, b: Point, c: Point, d: Point, tol: f64) -> SegmentContact {
    let len_ab = a.dist(b).max(f64::MIN_POSITIVE);
    let len_cd = c.dist(d).max(f64::MIN_POSITIVE);
    // Signed distances of each endpoint to the other segment's supporting line.
    let dc = orient(a, b, c) / len_ab;
    let dd = orient(a, b, d) / len_ab;
    let da = orient(c, d, a) / len_cd;
    let db = orient(c, d, b) / len_cd;

    if dc.abs() <= tol && dd.abs() <= tol && da.abs() <= tol && db.abs() <= tol {
        // Collinear: project onto the direction of [a, b].
        let dir = (b - a) * (1.0 / len_ab);
        let (s0, s1) = (0.0f64, len_ab);
        let (mut t0, mut t1) = ((c - a).dot(dir), (d - a).dot(dir));
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        let lo = s0.max(t0);
        let hi = s1.min(t1);
        return if hi - lo > tol {
            SegmentContact::Overlap
        } else if hi - lo >= -tol {
            SegmentContact::Point
        } else {
            SegmentContact::Disjoint
        };
    }

    let straddle_ab = (dc > tol && dd < -tol) || (dc < -tol && dd > tol);
    let straddle_cd = (da > tol && db < -tol) || (da < -tol && db > tol);
    if straddle_ab && straddle_cd {
        return SegmentContact::Point;
    }
    // Endpoint touching the other segment.
    let touches = segment_point_distance(a, b, c).0 <= tol
        || segment_point_distance(a, b, d).0 <= tol
        || segment_point_distance(c, d, a).0 <= tol
        || segment_point_distance(c, d, b).0 <= tol;
    if touches {
        SegmentContact::Point
    } else {
        SegmentContact::Disjoint
    }
}

/// Length of `[a, b] ∩ B̄(center, r)` in closed form.
pub fn segment_disk_length(a: Point, b: Point, center: Point, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let len = a.dist(b);
    if len == 0.0 {
        return 0.0;
    }
    // Measure from the nearer endpoint so that small balls keep their precision.
    let (a, b) = if center.dist(b) < center.dist(a) { (b, a) } else { (a, b) };
    let dir = (b - a) * (1.0 / len);
    let f = center - a;
    // Foot of the perpendicular (arc-length along [a, b]) and distance to the line.
    let foot = f.dot(dir);
    let perp = f.cross(dir).abs();
    if perp >= r {
        return 0.0;
    }
    let half_chord = ((r - perp) * (r + perp)).sqrt();
    let lo = (foot - half_chord).max(0.0);
    let hi = (foot + half_chord).min(len);
    (hi - lo).max(0.0)
}

/// Signed area of a closed polygon (positive when counterclockwise).
pub fn polygon_signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| points[i].cross(points[(i + 1) % n]))
        .sum::<f64>()
        * 0.5
}

/// Even-odd point-in-polygon test; points on the boundary give an unspecified answer.
pub fn point_in_polygon(points: &[Point], p: Point) -> bool {
    let n = points.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (points[i], points[j]);
        if (pi.y > p.y) != (pj.y > p.y) {
            let x_cross = pj.x + (p.y - pj.y) / (pi.y - pj.y) * (pi.x - pj.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Distance from `p` to the boundary of a closed polygon.
pub fn polygon_boundary_distance(points: &[Point], p: Point) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| segment_point_distance(points[i], points[(i + 1) % n], p).0)
        .fold(f64::INFINITY, f64::min)
}

/// Interior angles of a triangle in radians.
pub fn triangle_angles(a: Point, b: Point, c: Point) -> [f64; 3] {
    let angle = |p: Point, q: Point, r: Point| {
        let u = q - p;
        let v = r - p;
        u.cross(v).abs().atan2(u.dot(v))
    };
    [angle(a, b, c), angle(b, c, a), angle(c, a, b)]
}
