//! Planar geometry: vectors, oriented boxes, and arc-length parameterized polylines.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector pointing along `heading`.
    pub fn from_heading(heading: f64) -> Self {
        Self::new(heading.cos(), heading.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist_sq(self, o: Vec2) -> f64 {
        (self - o).norm_sq()
    }

    pub fn dist(self, o: Vec2) -> f64 {
        self.dist_sq(o).sqrt()
    }

    pub fn heading(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Rotate counter-clockwise by `angle` radians.
    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(v: [f64; 2]) -> Self {
        Vec2::new(v[0], v[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wrap an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// A rigid transform of the plane: rotation followed by translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: f64,
    pub translation: Vec2,
}

impl RigidTransform {
    pub fn new(rotation: f64, translation: Vec2) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        p.rotate(self.rotation) + self.translation
    }

    pub fn apply_heading(&self, h: f64) -> f64 {
        wrap_angle(h + self.rotation)
    }
}

/// Rectangle with arbitrary orientation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub center: Vec2,
    pub heading: f64,
    /// (length / 2, width / 2)
    pub half_extents: (f64, f64),
}

impl OrientedBox {
    pub fn new(center: Vec2, heading: f64, length: f64, width: f64) -> Self {
        Self {
            center,
            heading,
            half_extents: (0.5 * length, 0.5 * width),
        }
    }

    pub fn axes(&self) -> [Vec2; 2] {
        let u = Vec2::from_heading(self.heading);
        [u, u.perp()]
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let [u, v] = self.axes();
        let (hl, hw) = self.half_extents;
        let c = self.center;
        [
            c + u * hl + v * hw,
            c - u * hl + v * hw,
            c - u * hl - v * hw,
            c + u * hl - v * hw,
        ]
    }

    /// Projection radius of the box onto a unit axis.
    fn radius_along(&self, axis: Vec2) -> f64 {
        let [u, v] = self.axes();
        self.half_extents.0 * u.dot(axis).abs() + self.half_extents.1 * v.dot(axis).abs()
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let [u, v] = self.axes();
        let d = p - self.center;
        d.dot(u).abs() <= self.half_extents.0 && d.dot(v).abs() <= self.half_extents.1
    }
}

/// Signed separating-axis margin: the largest gap over the four candidate axes.
/// Positive means separated, zero means touching, negative is the smallest penetration depth.
pub fn separation_margin(p: &OrientedBox, q: &OrientedBox) -> f64 {
    let d = q.center - p.center;
    p.axes()
        .into_iter()
        .chain(q.axes())
        .map(|axis| d.dot(axis).abs() - p.radius_along(axis) - q.radius_along(axis))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Closed-set rectangle intersection test. Touching boxes count as overlapping.
pub fn boxes_overlap(p: &OrientedBox, q: &OrientedBox) -> bool {
    separation_margin(p, q) <= 0.0
}

/// A point on a polyline together with the tangent heading of its segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolylinePoint {
    pub position: Vec2,
    pub heading: f64,
}

/// Polyline with cumulative arc lengths. Consecutive vertices are distinct.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Vec2>,
    cumulative: Vec<f64>,
}

impl Polyline {
    pub fn new(points: Vec<Vec2>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Invalid("polyline needs at least two points".into()));
        }
        let mut cumulative = Vec::with_capacity(points.len());
        cumulative.push(0.0);
        for w in points.windows(2) {
            let seg = w[0].dist(w[1]);
            if seg <= 0.0 {
                return Err(Error::Invalid("polyline has repeated consecutive points".into()));
            }
            cumulative.push(cumulative.last().copied().unwrap_or(0.0) + seg);
        }
        Ok(Self { points, cumulative })
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().expect("non-empty")
    }

    fn segment_heading(&self, seg: usize) -> f64 {
        (self.points[seg + 1] - self.points[seg]).heading()
    }

    /// Point at arc length `s`, clamped to the polyline when it lies in range,
    /// linearly extrapolated along the end segments otherwise.
    pub fn point_at_extrapolated(&self, s: f64) -> PolylinePoint {
        let n = self.points.len();
        let seg = if s <= 0.0 {
            0
        } else if s >= self.length() {
            n - 2
        } else {
            // last index with cumulative <= s
            self.cumulative.partition_point(|&c| c <= s).saturating_sub(1).min(n - 2)
        };
        let a = self.points[seg];
        let b = self.points[seg + 1];
        let len = self.cumulative[seg + 1] - self.cumulative[seg];
        let t = (s - self.cumulative[seg]) / len;
        PolylinePoint {
            position: a.lerp(b, t),
            heading: self.segment_heading(seg),
        }
    }

    pub fn point_at(&self, s: f64) -> Result<PolylinePoint> {
        let total = self.length();
        if !(0.0..=total).contains(&s) {
            return Err(Error::ArcOutOfRange { arc: s, total });
        }
        Ok(self.point_at_extrapolated(s))
    }

    /// Closest point on the polyline: (arc length, distance, tangent heading).
    pub fn project(&self, p: Vec2) -> (f64, f64, f64) {
        let mut best = (0.0, f64::INFINITY, 0.0);
        for seg in 0..self.points.len() - 1 {
            let a = self.points[seg];
            let d = self.points[seg + 1] - a;
            let len_sq = d.norm_sq();
            let t = ((p - a).dot(d) / len_sq).clamp(0.0, 1.0);
            let q = a + d * t;
            let dist = q.dist(p);
            if dist < best.1 {
                best = (
                    self.cumulative[seg] + t * len_sq.sqrt(),
                    dist,
                    self.segment_heading(seg),
                );
            }
        }
        best
    }

    /// Sub-polyline starting at arc length `s` (clamped into range).
    pub fn tail_from(&self, s: f64) -> Polyline {
        let s = s.clamp(0.0, self.length());
        let start = self.point_at_extrapolated(s).position;
        let mut points = vec![start];
        for (i, &c) in self.cumulative.iter().enumerate() {
            if c > s && self.points[i].dist(start) > 1e-9 {
                points.push(self.points[i]);
            }
        }
        if points.len() < 2 {
            // s is at the very end; keep direction of the final segment
            let h = self.segment_heading(self.points.len() - 2);
            points.push(start + Vec2::from_heading(h));
        }
        Polyline::new(points).expect("tail of a valid polyline is valid")
    }

    /// Append another polyline, dropping its first vertex when it coincides with our last.
    pub fn concat(&self, other: &Polyline) -> Polyline {
        let mut points = self.points.clone();
        for &p in other.points() {
            if points.last().is_none_or(|&l| l.dist(p) > 1e-9) {
                points.push(p);
            }
        }
        Polyline::new(points).expect("concatenation of valid polylines is valid")
    }
}

/// Interpolated points and tangent headings along `line` at each requested arc length.
pub fn resample_along_polyline(line: &[Vec2], arc_lengths: &[f64]) -> Result<Vec<PolylinePoint>> {
    let poly = Polyline::new(line.to_vec())?;
    arc_lengths.iter().map(|&s| poly.point_at(s)).collect()
}
