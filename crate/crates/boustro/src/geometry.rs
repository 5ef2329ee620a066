//! Polygon validation, unit-frame normalization, and oriented half-plane
//! edges.
//!
//! Everything downstream works on a `NormalizedPolygon`: the vertex set is
//! translated and scaled so its minimum enclosing circle is centered on the
//! origin with radius 0.5. That guarantees the polygon stays inside the
//! transect window [-0.5, 0.5]^2 under any rotation, which a bounding-box
//! normalization would not.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Repeated-vertex rejection threshold, user units.
const MIN_VERTEX_SEPARATION: f64 = 1e-12;

/// A planar point or vector. Serializes as a two-element array `[x, y]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product, positive when `other` is
    /// counter-clockwise from `self`.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn sub(self, other: Vec2) -> Vec2 {
        Vec2::new(self.x - other.x, self.y - other.y)
    }

    pub fn add(self, other: Vec2) -> Vec2 {
        Vec2::new(self.x + other.x, self.y + other.y)
    }

    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }

    pub fn dist(self, other: Vec2) -> f64 {
        self.sub(other).norm()
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    NotEnoughVertices(usize),
    #[error("polygon is not strictly convex at vertex index {0}")]
    NonConvex(usize),
    #[error("vertices {0} and {1} coincide (separation <= 1e-12)")]
    DegenerateVertex(usize, usize),
    #[error("point set is empty")]
    EmptyInput,
}

/// A strictly convex polygon in user coordinates, counter-clockwise.
///
/// Construct through [`validate`]; clockwise input is re-wound, not rejected.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedPolygon {
    vertices: Vec<Vec2>,
}

impl ValidatedPolygon {
    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    /// Parses the `{"vertices": [[x, y], ...]}` wire format and validates.
    pub fn from_json(text: &str) -> Result<Self, PolygonParseError> {
        let doc: PolygonDoc = serde_json::from_str(text)?;
        Ok(validate(doc.vertices)?)
    }

    pub fn to_json(&self) -> String {
        let doc = PolygonDoc {
            vertices: self.vertices.clone(),
        };
        serde_json::to_string(&doc).expect("polygon serialization cannot fail")
    }
}

#[derive(Serialize, Deserialize)]
struct PolygonDoc {
    vertices: Vec<Vec2>,
}

#[derive(Debug, Error)]
pub enum PolygonParseError {
    #[error("invalid polygon JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Validates a vertex list into a [`ValidatedPolygon`].
///
/// Checks vertex count, pairwise separation, and strict convexity (every
/// cross product of consecutive edge vectors positive, so collinear triples
/// are rejected). Clockwise input is reversed into counter-clockwise order.
pub fn validate(vertices: Vec<Vec2>) -> Result<ValidatedPolygon, GeometryError> {
    let n = vertices.len();
    if n < 3 {
        return Err(GeometryError::NotEnoughVertices(n));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if vertices[i].dist(vertices[j]) <= MIN_VERTEX_SEPARATION {
                return Err(GeometryError::DegenerateVertex(i, j));
            }
        }
    }
    // Signed area decides the winding; the convexity check then demands every
    // turn agree with it strictly.
    let mut area2 = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        area2 += a.cross(b);
    }
    let mut verts = vertices;
    if area2 < 0.0 {
        verts.reverse();
    }
    for i in 0..n {
        let prev = verts[(i + n - 1) % n];
        let here = verts[i];
        let next = verts[(i + 1) % n];
        let turn = here.sub(prev).cross(next.sub(here));
        if turn <= 0.0 {
            return Err(GeometryError::NonConvex(i));
        }
    }
    Ok(ValidatedPolygon { vertices: verts })
}

/// Smallest circle containing all points. Exact for up to 3 points,
/// deterministic for any input (the internal shuffle is fixed-seed).
///
/// Welzl's algorithm in the progressive (move-to-front-free) form: grow the
/// circle one outside point at a time, each such point pinned to the boundary
/// of the refined circle.
pub fn min_enclosing_circle(points: &[Vec2]) -> Result<(Vec2, f64), GeometryError> {
    if points.is_empty() {
        return Err(GeometryError::EmptyInput);
    }
    let mut shuffled: Vec<Vec2> = points.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_C19C ^ points.len() as u64);
    shuffled.shuffle(&mut rng);

    let mut circle: Option<(Vec2, f64)> = None;
    for i in 0..shuffled.len() {
        let p = shuffled[i];
        match circle {
            Some(c) if contains(c, p) => {}
            _ => circle = Some(circle_one_boundary(&shuffled[..=i], p)),
        }
    }
    Ok(circle.unwrap())
}

fn contains((center, r): (Vec2, f64), p: Vec2) -> bool {
    // Relative slack keeps boundary points "inside" despite roundoff.
    center.dist(p) <= r + 1e-12 * (1.0 + r)
}

fn circle_one_boundary(points: &[Vec2], p: Vec2) -> (Vec2, f64) {
    let mut circle = (p, 0.0);
    for (j, &q) in points.iter().enumerate() {
        if !contains(circle, q) {
            circle = if circle.1 == 0.0 {
                diameter_circle(p, q)
            } else {
                circle_two_boundary(&points[..=j], p, q)
            };
        }
    }
    circle
}

fn circle_two_boundary(points: &[Vec2], p: Vec2, q: Vec2) -> (Vec2, f64) {
    let circ = diameter_circle(p, q);
    let pq = q.sub(p);
    let mut left: Option<(Vec2, f64, f64)> = None;
    let mut right: Option<(Vec2, f64, f64)> = None;
    for &r in points {
        if contains(circ, r) {
            continue;
        }
        let side = pq.cross(r.sub(p));
        let Some((center, radius)) = circumcircle(p, q, r) else {
            continue;
        };
        let key = pq.cross(center.sub(p));
        if side > 0.0 {
            if left.map_or(true, |(_, _, k)| key > k) {
                left = Some((center, radius, key));
            }
        } else if side < 0.0 && right.map_or(true, |(_, _, k)| key < k) {
            right = Some((center, radius, key));
        }
    }
    match (left, right) {
        (None, None) => circ,
        (Some((c, r, _)), None) => (c, r),
        (None, Some((c, r, _))) => (c, r),
        (Some((cl, rl, _)), Some((cr, rr, _))) => {
            if rl <= rr {
                (cl, rl)
            } else {
                (cr, rr)
            }
        }
    }
}

fn diameter_circle(a: Vec2, b: Vec2) -> (Vec2, f64) {
    let center = Vec2::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0);
    (center, center.dist(a).max(center.dist(b)))
}

fn circumcircle(a: Vec2, b: Vec2, c: Vec2) -> Option<(Vec2, f64)> {
    // Work relative to the bounding-box midpoint to limit cancellation.
    let ox = (a.x.min(b.x).min(c.x) + a.x.max(b.x).max(c.x)) / 2.0;
    let oy = (a.y.min(b.y).min(c.y) + a.y.max(b.y).max(c.y)) / 2.0;
    let (ax, ay) = (a.x - ox, a.y - oy);
    let (bx, by) = (b.x - ox, b.y - oy);
    let (cx, cy) = (c.x - ox, c.y - oy);
    let d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
    if d == 0.0 {
        return None;
    }
    let ux = ((ax * ax + ay * ay) * (by - cy)
        + (bx * bx + by * by) * (cy - ay)
        + (cx * cx + cy * cy) * (ay - by))
        / d;
    let uy = ((ax * ax + ay * ay) * (cx - bx)
        + (bx * bx + by * by) * (ax - cx)
        + (cx * cx + cy * cy) * (bx - ax))
        / d;
    let center = Vec2::new(ux + ox, uy + oy);
    let r = center.dist(a).max(center.dist(b)).max(center.dist(c));
    Some((center, r))
}

/// Affine map between the unit frame and user coordinates:
/// `user = center + unit * scale`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub center: Vec2,
    /// Enclosing-circle diameter in user units; the unit frame's diameter is 1.
    pub scale: f64,
}

impl Transform {
    pub fn to_user(&self, p: Vec2) -> Vec2 {
        self.center.add(p.scale(self.scale))
    }

    pub fn to_unit(&self, u: Vec2) -> Vec2 {
        u.sub(self.center).scale(1.0 / self.scale)
    }
}

/// One polygon edge as an oriented half-plane: interior points satisfy
/// `w . x + b > 0`, the edge line is the zero set, and `w` has unit norm so
/// the pre-activation is the signed distance to the line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeHalfPlane {
    pub w: Vec2,
    pub b: f64,
}

impl EdgeHalfPlane {
    /// Signed distance of `p` to the edge line, positive inside.
    pub fn eval(&self, p: Vec2) -> f64 {
        self.w.dot(p) + self.b
    }
}

/// A polygon in the unit frame: enclosing circle of radius 0.5 centered on
/// the origin, edges as interior-positive half-planes, and the transform
/// back to user coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedPolygon {
    pub edges: Vec<EdgeHalfPlane>,
    /// Vertices in the unit frame, counter-clockwise, matching `edges`
    /// (edge i runs from vertex i to vertex i+1).
    pub vertices: Vec<Vec2>,
    pub inverse_transform: Transform,
    /// Always 0.5 by construction.
    pub enclosing_radius: f64,
}

/// Normalizes a polygon into the unit frame.
///
/// The minimum enclosing circle of the vertices is translated to the origin
/// and scaled to radius 0.5 ("maximal dimension" = diameter = 1), then each
/// edge becomes a half-plane via the two-point line form
/// `w = [y1 - y2, x2 - x1]`, `b = x1*y2 - x2*y1`, sign-fixed so the centroid
/// is positive and rescaled to unit norm.
///
/// Why unit-norm w: temperature then acts uniformly across edges regardless
/// of edge length; the zero set is unchanged.
pub fn normalize(poly: &ValidatedPolygon) -> NormalizedPolygon {
    let (center, radius) = min_enclosing_circle(poly.vertices())
        .expect("validated polygon has vertices");
    let transform = Transform {
        center,
        scale: 2.0 * radius,
    };
    let vertices: Vec<Vec2> = poly
        .vertices()
        .iter()
        .map(|&v| transform.to_unit(v))
        .collect();
    let n = vertices.len();
    let centroid = vertices
        .iter()
        .fold(Vec2::new(0.0, 0.0), |acc, &v| acc.add(v))
        .scale(1.0 / n as f64);
    let edges = (0..n)
        .map(|i| {
            let p1 = vertices[i];
            let p2 = vertices[(i + 1) % n];
            let mut w = Vec2::new(p1.y - p2.y, p2.x - p1.x);
            let mut b = p1.x * p2.y - p2.x * p1.y;
            if w.dot(centroid) + b < 0.0 {
                w = w.scale(-1.0);
                b = -b;
            }
            let inv_norm = 1.0 / w.norm();
            EdgeHalfPlane {
                w: w.scale(inv_norm),
                b: b * inv_norm,
            }
        })
        .collect();
    NormalizedPolygon {
        edges,
        vertices,
        inverse_transform: transform,
        enclosing_radius: 0.5,
    }
}

/// Edges of the polygon rotated by `theta` about the origin:
/// `w' = R(theta) w`, `b' = b`.
///
/// A point lies in the rotated polygon iff its back-rotation lies in the
/// original, and `w . R(-theta) x = (R(theta) w) . x`; `b` is unchanged
/// because the rotation is about the origin.
pub fn rotate(edges: &[EdgeHalfPlane], theta: f64) -> Vec<EdgeHalfPlane> {
    let (sin, cos) = theta.sin_cos();
    edges
        .iter()
        .map(|e| EdgeHalfPlane {
            w: Vec2::new(e.w.x * cos - e.w.y * sin, e.w.x * sin + e.w.y * cos),
            b: e.b,
        })
        .collect()
}
