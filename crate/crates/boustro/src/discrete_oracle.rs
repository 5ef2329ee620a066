//! Exact transect clipping and exact fitness. Ground truth for the
//! differentiable relaxation, plus boustrophedon waypoint export.
//!
//! Transects are vertical lines in the unit frame at abscissae
//! `x_j = j * spacing + x_offset`, `j in [-N, N]`, `N = ceil(0.6 / spacing)`.
//! The index range is fixed per spacing (it never depends on the offset), so
//! the candidate set is stable while the offset varies: lines fade in and out
//! through the polygon indicator instead of popping in and out of existence,
//! which is what keeps the offset derivative meaningful downstream.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{rotate, EdgeHalfPlane, NormalizedPolygon, Vec2};

/// Transects shorter than this are treated as absent. Exact clipping produces
/// exact zeros; the threshold only guards float noise at tangency.
pub const MIN_SHOWN_LENGTH: f64 = 1e-12;

/// `w.y` below this makes an edge constraint independent of y for a vertical
/// line; it then accepts or rejects the whole line.
const PARALLEL_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("spacing must lie in (0, 1], got {0}")]
    BadSpacing(f64),
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("weights must satisfy a >= 0, b >= 0, a + b = 1 (got a={a}, b={b})")]
    BadWeights { a: f64, b: f64 },
    #[error("temperature must be positive and finite, got {0}")]
    NonPositiveTemperature(f64),
    #[error("ppt (points per transect) must be at least 2, got {0}")]
    BadPPT(usize),
}

/// The family of candidate transect lines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransectField {
    spacing: f64,
    /// Normalized to [-spacing/2, spacing/2).
    x_offset: f64,
    /// Index bound: abscissae run j = -n_max ..= n_max.
    n_max: i64,
}

impl TransectField {
    /// `spacing` in (0, 1]; `x_offset` is taken modulo the spacing.
    pub fn new(spacing: f64, x_offset: f64) -> Result<Self, FieldError> {
        if !(spacing > 0.0 && spacing <= 1.0) || !spacing.is_finite() {
            return Err(FieldError::BadSpacing(spacing));
        }
        let n_max = (0.6 / spacing).ceil() as i64;
        Ok(TransectField {
            spacing,
            x_offset: normalize_offset(x_offset, spacing),
            n_max,
        })
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn x_offset(&self) -> f64 {
        self.x_offset
    }

    pub fn n_max(&self) -> i64 {
        self.n_max
    }

    /// Candidate abscissae in ascending order; covers [-0.5, 0.5] for every
    /// offset in the normalized range.
    pub fn abscissae(&self) -> Vec<f64> {
        self.abscissae_with_offset(self.x_offset)
    }

    /// Same index range, explicit offset. The caller owns normalization when
    /// the offset is an optimization variable.
    pub fn abscissae_with_offset(&self, x_offset: f64) -> Vec<f64> {
        (-self.n_max..=self.n_max)
            .map(|j| j as f64 * self.spacing + x_offset)
            .collect()
    }
}

/// Wraps `x_offset` into [-spacing/2, spacing/2). Exact (and idempotent) for
/// inputs already in range; the shift-mod-shift round trip would otherwise
/// cost an ulp and break value identities between wrapped and unwrapped
/// evaluation paths.
pub fn normalize_offset(x_offset: f64, spacing: f64) -> f64 {
    let half = spacing / 2.0;
    if (-half..half).contains(&x_offset) {
        return x_offset;
    }
    let wrapped = (x_offset + half).rem_euclid(spacing) - half;
    // rem_euclid output just under `spacing` can round the difference up to
    // exactly `half`; pull such results back into range.
    if wrapped >= half {
        wrapped - spacing
    } else {
        wrapped
    }
}

/// Fitness weights and relaxation parameters, validated on construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScoreParams {
    pub a: f64,
    pub b: f64,
    pub temperature: f64,
    /// Quadrature points per transect; unused by the discrete path.
    pub ppt: usize,
}

impl ScoreParams {
    pub fn new(a: f64, b: f64, temperature: f64, ppt: usize) -> Result<Self, ParamsError> {
        if !(a >= 0.0 && b >= 0.0 && (a + b - 1.0).abs() <= 1e-9) {
            return Err(ParamsError::BadWeights { a, b });
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(ParamsError::NonPositiveTemperature(temperature));
        }
        if ppt < 2 {
            return Err(ParamsError::BadPPT(ppt));
        }
        Ok(ScoreParams { a, b, temperature, ppt })
    }

    /// Same weights and ppt at a different temperature.
    pub fn with_temperature(&self, temperature: f64) -> Result<Self, ParamsError> {
        ScoreParams::new(self.a, self.b, temperature, self.ppt)
    }
}

/// Exact scoring result.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreReport {
    /// Mean length over shown transects (0 if none).
    pub mean_length: f64,
    /// Population standard deviation over shown transects (0 if none).
    pub std_length: f64,
    /// `a * mean_length + b * (1 - std_length)`; equals `b` when no transect
    /// intersects.
    pub fitness: f64,
    /// Lengths of the shown transects only, in abscissa order.
    pub transect_lengths: Vec<f64>,
    /// Number of shown transects. Integer-valued here; its soft counterpart
    /// is fractional.
    pub shown_count: f64,
}

/// Exact chord length of the vertical line at abscissa `x`.
///
/// Each edge's half-plane `w.(x, y) + b >= 0` either bounds y from one side
/// or, when the edge line is parallel to the transect, accepts or rejects the
/// whole line. Empty intersections return 0.
pub fn clip_transect(edges: &[EdgeHalfPlane], x: f64) -> f64 {
    // The polygon lives inside the radius-0.5 disk, so +-0.75 cannot truncate
    // a real chord and keeps the interval arithmetic finite.
    let mut lo = -0.75_f64;
    let mut hi = 0.75_f64;
    for e in edges {
        let c = e.w.x * x + e.b;
        if e.w.y.abs() < PARALLEL_EPS {
            if c < 0.0 {
                return 0.0;
            }
        } else {
            let y = -c / e.w.y;
            if e.w.y > 0.0 {
                lo = lo.max(y);
            } else {
                hi = hi.min(y);
            }
        }
    }
    (hi - lo).max(0.0)
}

/// The chord's y-interval at abscissa `x`, or None when the transect is
/// shorter than [`MIN_SHOWN_LENGTH`].
pub fn clip_interval(edges: &[EdgeHalfPlane], x: f64) -> Option<(f64, f64)> {
    let mut lo = -0.75_f64;
    let mut hi = 0.75_f64;
    for e in edges {
        let c = e.w.x * x + e.b;
        if e.w.y.abs() < PARALLEL_EPS {
            if c < 0.0 {
                return None;
            }
        } else {
            let y = -c / e.w.y;
            if e.w.y > 0.0 {
                lo = lo.max(y);
            } else {
                hi = hi.min(y);
            }
        }
    }
    (hi - lo > MIN_SHOWN_LENGTH).then_some((lo, hi))
}

/// Exact fitness over the candidate transect set.
///
/// Lengths come from [`clip_transect`] at every candidate abscissa; transects
/// at or below [`MIN_SHOWN_LENGTH`] are excluded; mean and population std run
/// over the remainder. Zero shown transects yield mean = std = 0 and
/// fitness = b.
pub fn discrete_score(
    edges: &[EdgeHalfPlane],
    field: &TransectField,
    params: &ScoreParams,
) -> ScoreReport {
    let shown: Vec<f64> = field
        .abscissae()
        .into_iter()
        .map(|x| clip_transect(edges, x))
        .filter(|&l| l > MIN_SHOWN_LENGTH)
        .collect();
    if shown.is_empty() {
        return ScoreReport {
            mean_length: 0.0,
            std_length: 0.0,
            fitness: params.b,
            transect_lengths: shown,
            shown_count: 0.0,
        };
    }
    let n = shown.len() as f64;
    let mean = shown.iter().sum::<f64>() / n;
    let var = shown.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    ScoreReport {
        mean_length: mean,
        std_length: std,
        fitness: params.a * mean + params.b * (1.0 - std),
        shown_count: n,
        transect_lengths: shown,
    }
}

/// Which corner of the (rotated-frame) transect family the path starts from.
/// `LowX*` orders transects by increasing abscissa, `HighX*` decreasing;
/// `*LowY` starts the first transect at its lower endpoint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum StartCorner {
    #[default]
    LowXLowY,
    LowXHighY,
    HighXLowY,
    HighXHighY,
}

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("no transect intersects the polygon; nothing to traverse")]
    EmptyPlan,
}

/// Boustrophedon waypoint sequence in user coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPlan {
    pub waypoints: Vec<Vec2>,
    pub total_length: f64,
}

impl PathPlan {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("path plan serialization cannot fail")
    }
}

/// Builds the back-and-forth path over the nonempty transects.
///
/// Chords are computed on the polygon rotated by `theta`, ordered per
/// `start_corner`, alternated in direction, and connected with straight
/// segments (contained, inside a convex polygon, and shorter than any
/// boundary-following connector). Waypoints are then mapped through the
/// inverse rotation and the inverse normalization into user coordinates.
pub fn build_path(
    poly: &NormalizedPolygon,
    theta: f64,
    field: &TransectField,
    start_corner: StartCorner,
) -> Result<PathPlan, PathError> {
    let edges = rotate(&poly.edges, theta);
    let mut chords: Vec<(f64, f64, f64)> = field
        .abscissae()
        .into_iter()
        .filter_map(|x| clip_interval(&edges, x).map(|(lo, hi)| (x, lo, hi)))
        .collect();
    if chords.is_empty() {
        return Err(PathError::EmptyPlan);
    }
    if matches!(start_corner, StartCorner::HighXLowY | StartCorner::HighXHighY) {
        chords.reverse();
    }
    let first_up = matches!(start_corner, StartCorner::LowXLowY | StartCorner::HighXLowY);

    let (sin, cos) = (-theta).sin_cos();
    let unrotate = |p: Vec2| Vec2::new(p.x * cos - p.y * sin, p.x * sin + p.y * cos);
    let mut waypoints = Vec::with_capacity(2 * chords.len());
    for (k, &(x, lo, hi)) in chords.iter().enumerate() {
        let up = first_up == (k % 2 == 0);
        let (start, end) = if up { (lo, hi) } else { (hi, lo) };
        waypoints.push(poly.inverse_transform.to_user(unrotate(Vec2::new(x, start))));
        waypoints.push(poly.inverse_transform.to_user(unrotate(Vec2::new(x, end))));
    }
    let total_length = waypoints
        .windows(2)
        .map(|w| w[0].dist(w[1]))
        .sum();
    Ok(PathPlan {
        waypoints,
        total_length,
    })
}
