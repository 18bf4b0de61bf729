//! Convex polygons in the pixel frame (x right, y down) with exact clipping
//! and intersection-over-union.
//!
//! Polygons are stored counter-clockwise as seen on screen, which in raw
//! `(x, y)` coordinates means a negative shoelace sum. Construction accepts
//! either winding and normalizes it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Points closer than this to a clip line count as lying on it.
pub const CLIP_EPS: f64 = 1e-9;
/// Intersections with less area than this are reported as empty.
pub const MIN_AREA: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point::new(x, y)
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// z-component of `(b - a) × (p - a)`.
#[inline]
pub fn cross(a: Point, b: Point, p: Point) -> f64 {
    (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
}

fn signed_area2(pts: &[Point]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum()
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon vertex {0} is not finite")]
    NonFinite(usize),
    #[error("polygon is not convex at vertex {0}")]
    NotConvex(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

/// Drops repeated consecutive vertices (including last == first); a
/// zero-length edge would make every strict containment test fail. Fully
/// collapsed inputs are returned unchanged.
fn dedup_ring(mut v: Vec<Point>) -> Vec<Point> {
    let orig = v.clone();
    v.dedup();
    while v.len() > 1 && v.first() == v.last() {
        v.pop();
    }
    if v.len() < 3 {
        orig
    } else {
        v
    }
}

impl ConvexPolygon {
    /// Validates and normalizes winding. Degenerate (zero-area) polygons are
    /// accepted so that a zero-height triangle can still be represented.
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        if let Some(i) = vertices
            .iter()
            .position(|p| !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(GeometryError::NonFinite(i));
        }
        let mut vertices = dedup_ring(vertices);
        if signed_area2(&vertices) > 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        let scale = vertices
            .iter()
            .fold(1.0_f64, |m, p| m.max(p.x.abs()).max(p.y.abs()));
        let tol = CLIP_EPS * scale * scale;
        for i in 0..n {
            let c = cross(vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            if c > tol {
                return Err(GeometryError::NotConvex((i + 1) % n));
            }
        }
        Ok(Self { vertices })
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn aabb(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::new(vec![
            Point::new(x0, y0),
            Point::new(x0, y1),
            Point::new(x1, y1),
            Point::new(x1, y0),
        ])
        .expect("axis-aligned rectangle is convex")
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<Point> {
        self.vertices
    }

    /// Shoelace area, always non-negative.
    pub fn area(&self) -> f64 {
        0.5 * signed_area2(&self.vertices).abs()
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| self.vertices[i].dist(self.vertices[(i + 1) % n]))
            .sum()
    }

    /// Area centroid; falls back to the vertex mean for degenerate polygons.
    pub fn centroid(&self) -> Point {
        let a2 = signed_area2(&self.vertices);
        let n = self.vertices.len();
        if a2.abs() < MIN_AREA {
            let s = self
                .vertices
                .iter()
                .fold(Point::new(0.0, 0.0), |acc, &p| acc + p);
            return s * (1.0 / n as f64);
        }
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            let w = a.x * b.y - b.x * a.y;
            cx += (a.x + b.x) * w;
            cy += (a.y + b.y) * w;
        }
        Point::new(cx / (3.0 * a2), cy / (3.0 * a2))
    }

    /// `(min, max)` corners of the bounding box.
    pub fn bounds(&self) -> (Point, Point) {
        self.vertices.iter().fold(
            (
                Point::new(f64::INFINITY, f64::INFINITY),
                Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
            ),
            |(lo, hi), p| {
                (
                    Point::new(lo.x.min(p.x), lo.y.min(p.y)),
                    Point::new(hi.x.max(p.x), hi.y.max(p.y)),
                )
            },
        )
    }

    /// True when `p` is strictly inside (boundary excluded, no tolerance).
    pub fn contains_strict(&self, p: Point) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| cross(self.vertices[i], self.vertices[(i + 1) % n], p) < 0.0)
    }

    /// True when `p` is inside or within [`CLIP_EPS`] of the boundary.
    pub fn contains(&self, p: Point) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| cross(self.vertices[i], self.vertices[(i + 1) % n], p) <= CLIP_EPS)
    }

    /// Applies `f` to every vertex. `f` must be a similarity or rigid motion;
    /// reflections are handled by the winding normalization.
    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> Self {
        let mut vertices = dedup_ring(self.vertices.iter().map(|&p| f(p)).collect());
        if signed_area2(&vertices) > 0.0 {
            vertices.reverse();
        }
        Self { vertices }
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        self.map_points(|p| Point::new(p.x + dx, p.y + dy))
    }

    fn ordering_key(&self, other: &Self) -> std::cmp::Ordering {
        let a = self.vertices.iter().flat_map(|p| [p.x, p.y]);
        let b = other.vertices.iter().flat_map(|p| [p.x, p.y]);
        a.zip(b)
            .map(|(x, y)| x.total_cmp(&y))
            .find(|o| o.is_ne())
            .unwrap_or_else(|| self.vertices.len().cmp(&other.vertices.len()))
    }
}

impl<'de> Deserialize<'de> for ConvexPolygon {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let vertices = Vec::<Point>::deserialize(de)?;
        ConvexPolygon::new(vertices).map_err(serde::de::Error::custom)
    }
}

fn clip_half_plane(subject: &[Point], a: Point, b: Point) -> Vec<Point> {
    let n = subject.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let cur = subject[i];
        let next = subject[(i + 1) % n];
        let dc = cross(a, b, cur);
        let dn = cross(a, b, next);
        let cur_in = dc <= CLIP_EPS;
        let next_in = dn <= CLIP_EPS;
        if cur_in {
            out.push(cur);
        }
        if cur_in != next_in && (dc.abs() > CLIP_EPS || dn.abs() > CLIP_EPS) {
            let t = dc / (dc - dn);
            if t > 0.0 && t < 1.0 {
                out.push(cur + (next - cur) * t);
            }
        }
    }
    out
}

/// Drops repeated points and collinear middle points.
fn simplify(mut pts: Vec<Point>) -> Vec<Point> {
    pts.dedup_by(|a, b| a.dist(*b) <= CLIP_EPS);
    while pts.len() > 1 && pts[0].dist(pts[pts.len() - 1]) <= CLIP_EPS {
        pts.pop();
    }
    let mut changed = true;
    while changed && pts.len() >= 3 {
        changed = false;
        let n = pts.len();
        for i in 0..n {
            let (prev, cur, next) = (pts[(i + n - 1) % n], pts[i], pts[(i + 1) % n]);
            let len = prev.dist(next).max(1.0);
            if cross(prev, next, cur).abs() <= CLIP_EPS * len {
                pts.remove(i);
                changed = true;
                break;
            }
        }
    }
    pts
}

/// Exact intersection of two convex polygons by clipping `p` against each
/// edge of `q`. Returns `None` when the overlap has (near) zero area.
pub fn intersect(p: &ConvexPolygon, q: &ConvexPolygon) -> Option<ConvexPolygon> {
    let mut out = p.vertices.clone();
    let n = q.vertices.len();
    for i in 0..n {
        if out.len() < 3 {
            return None;
        }
        out = clip_half_plane(&out, q.vertices[i], q.vertices[(i + 1) % n]);
    }
    let out = simplify(out);
    if out.len() < 3 || 0.5 * signed_area2(&out).abs() < MIN_AREA {
        return None;
    }
    Some(ConvexPolygon { vertices: out })
}

pub fn intersection_area(p: &ConvexPolygon, q: &ConvexPolygon) -> f64 {
    // clip in a fixed order so the result does not depend on argument order
    let (a, b) = if p.ordering_key(q).is_le() {
        (p, q)
    } else {
        (q, p)
    };
    intersect(a, b).map_or(0.0, |r| r.area())
}

/// Intersection over union in `[0, 1]`; 0 when the union has no area.
pub fn iou(p: &ConvexPolygon, q: &ConvexPolygon) -> f64 {
    let inter = intersection_area(p, q);
    let union = p.area() + q.area() - inter;
    if union <= MIN_AREA {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Crossing-number point-in-polygon test, independent of the half-plane
/// machinery used by the clipper.
fn crossing_inside(poly: &[Point], p: Point) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_at = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_at {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// IOU estimated by sampling cell centers of a regular grid with spacing
/// `grid_step` over the joint bounding box. Used as a test oracle.
pub fn raster_iou_oracle(p: &ConvexPolygon, q: &ConvexPolygon, grid_step: f64) -> f64 {
    assert!(grid_step > 0.0, "grid_step must be positive");
    let (plo, phi) = p.bounds();
    let (qlo, qhi) = q.bounds();
    let lo = Point::new(plo.x.min(qlo.x), plo.y.min(qlo.y));
    let hi = Point::new(phi.x.max(qhi.x), phi.y.max(qhi.y));
    let nx = ((hi.x - lo.x) / grid_step).ceil().max(1.0) as usize;
    let ny = ((hi.y - lo.y) / grid_step).ceil().max(1.0) as usize;
    let (mut in_p, mut in_q, mut both) = (0u64, 0u64, 0u64);
    for j in 0..ny {
        let y = lo.y + (j as f64 + 0.5) * grid_step;
        for i in 0..nx {
            let pt = Point::new(lo.x + (i as f64 + 0.5) * grid_step, y);
            let a = crossing_inside(p.vertices(), pt);
            let b = crossing_inside(q.vertices(), pt);
            in_p += a as u64;
            in_q += b as u64;
            both += (a && b) as u64;
        }
    }
    let union = in_p + in_q - both;
    if union == 0 {
        0.0
    } else {
        both as f64 / union as f64
    }
}
