//! The differentiable relaxation of the discrete score.
//!
//! Structure, sharpened everywhere by one temperature parameter:
//! per-edge sigmoids of signed distance -> product over edges -> re-sharpened
//! outer sigmoid = soft point-in-polygon indicator; trapezoidal integral of
//! the indicator along a vertical line = soft transect length; a sigmoid of
//! the length (rescaled to hit 0 at 0) = soft "shown" weight; shown-weighted
//! mean and population std of the lengths = soft fitness.
//!
//! As temperature grows the whole pipeline converges to the discrete oracle;
//! at low temperature it melts into a smooth, nearly flat surface. Gradients
//! with respect to the transect angle and x-offset are exact derivatives of
//! the implemented composition (quadrature as a fixed weighted sum), computed
//! with two-slot forward-mode duals. Derivatives flow through the shown
//! weights as well as the lengths; there is no stop-gradient anywhere.

use serde::Serialize;
use thiserror::Error;

use crate::autodiff::{Dual2, Scalar};
use crate::discrete_oracle::{ScoreParams, TransectField};
use crate::geometry::{EdgeHalfPlane, NormalizedPolygon, Vec2};

/// Guards the soft-count denominators when every transect is fully outside.
pub const SOFT_EPS: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum SoftError {
    #[error("temperature must be positive and finite, got {0}")]
    NonPositiveTemperature(f64),
    #[error("ppt (points per transect) must be at least 2, got {0}")]
    BadPPT(usize),
}

/// Soft scoring result; the soft analogue of `ScoreReport`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiffScoreReport {
    /// Shown-weighted mean of the quadrature lengths.
    pub mean_length: f64,
    /// Shown-weighted population standard deviation.
    pub std_length: f64,
    /// `a * mean + b * (1 - std)`.
    pub fitness: f64,
    /// Quadrature length of every candidate transect, ghosts included
    /// (nothing is excluded on the soft path; exclusion is what `soft_shown`
    /// relaxes).
    pub transect_lengths: Vec<f64>,
    /// Soft count: sum of `soft_shown`.
    pub shown_count: f64,
    /// Per-candidate shown weights; 0 exactly when the length is 0,
    /// saturating toward 1 for clearly-shown transects.
    pub soft_shown: Vec<f64>,
    /// (d fitness / d theta, d fitness / d x_offset). None when the report
    /// came from a value-only evaluation.
    pub gradient: Option<(f64, f64)>,
    pub temperature_used: f64,
}

/// Overflow-free logistic of `v * temperature`. Never exponentiates a
/// positive argument, so it saturates gracefully for |v * temperature| far
/// beyond 700.
pub fn stable_sigmoid(v: f64, temperature: f64) -> Result<f64, SoftError> {
    check_temperature(temperature)?;
    Ok(sigmoid(v * temperature))
}

/// Soft point-in-polygon membership of `p`, in (0, 1).
///
/// Product of per-edge sigmoids of signed distance, recentered by -0.5 and
/// re-sharpened by an outer sigmoid at the same temperature. Deep interior
/// points saturate to 1, deep exterior to 0, and the 0.5 level sits on the
/// polygon boundary away from corners.
pub fn polygon_indicator(
    p: Vec2,
    edges: &[EdgeHalfPlane],
    temperature: f64,
) -> Result<f64, SoftError> {
    check_temperature(temperature)?;
    let rows = edge_rows_f64(edges);
    Ok(indicator_core(p.x, p.y, &rows, temperature))
}

/// Trapezoidal estimate of the indicator integral along the vertical line at
/// `x`, over y in [-0.5, 0.5] with `ppt` endpoint-inclusive nodes.
pub fn transect_length(
    x: f64,
    edges: &[EdgeHalfPlane],
    temperature: f64,
    ppt: usize,
) -> Result<f64, SoftError> {
    check_temperature(temperature)?;
    if ppt < 2 {
        return Err(SoftError::BadPPT(ppt));
    }
    let rows = edge_rows_f64(edges);
    Ok(transect_length_core(x, &rows, temperature, ppt))
}

/// Soft weight for "this transect has positive length":
/// `(sigmoid(length * temperature) - 0.5) / 0.5`. Exactly 0 at length 0.
pub fn shown_indicator(length: f64, temperature: f64) -> f64 {
    debug_assert!(temperature > 0.0);
    shown_core(length, temperature)
}

/// Value-only soft score of a fixed edge set over the field's candidate
/// lines. `gradient` is None; use [`score_and_gradient`] when derivatives
/// are needed.
pub fn soft_score(
    edges: &[EdgeHalfPlane],
    field: &TransectField,
    params: &ScoreParams,
) -> DiffScoreReport {
    let rows = edge_rows_f64(edges);
    let xs = field.abscissae();
    let core = soft_core(&rows, &xs, params);
    DiffScoreReport {
        mean_length: core.mean,
        std_length: core.std,
        fitness: core.fitness,
        transect_lengths: core.lengths,
        shown_count: core.count,
        soft_shown: core.shown,
        gradient: None,
        temperature_used: params.temperature,
    }
}

/// Soft score of the polygon rotated by `theta`, with candidate abscissae
/// `x_j = j * spacing + x_offset`, plus exact partials of the fitness with
/// respect to `theta` and `x_offset`.
///
/// `x_offset` is used as given (no wrapping) so the derivative is taken at
/// the caller's point; the score itself is periodic in the offset.
pub fn score_and_gradient(
    poly: &NormalizedPolygon,
    theta: f64,
    x_offset: f64,
    field: &TransectField,
    params: &ScoreParams,
) -> DiffScoreReport {
    let th = Dual2::var(theta, 0);
    let off = Dual2::var(x_offset, 1);
    let sin = th.sin();
    let cos = th.cos();
    let rows: Vec<(Dual2, Dual2, Dual2)> = poly
        .edges
        .iter()
        .map(|e| {
            let wx = Dual2::constant(e.w.x);
            let wy = Dual2::constant(e.w.y);
            (
                wx * cos - wy * sin,
                wx * sin + wy * cos,
                Dual2::constant(e.b),
            )
        })
        .collect();
    let xs: Vec<Dual2> = (-field.n_max()..=field.n_max())
        .map(|j| off + Dual2::constant(j as f64 * field.spacing()))
        .collect();
    let core = soft_core(&rows, &xs, params);
    DiffScoreReport {
        mean_length: core.mean,
        std_length: core.std,
        fitness: core.fitness,
        transect_lengths: core.lengths,
        shown_count: core.count,
        soft_shown: core.shown,
        gradient: Some((core.fitness_grad[0], core.fitness_grad[1])),
        temperature_used: params.temperature,
    }
}

fn check_temperature(t: f64) -> Result<(), SoftError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(SoftError::NonPositiveTemperature(t))
    }
}

fn edge_rows_f64(edges: &[EdgeHalfPlane]) -> Vec<(f64, f64, f64)> {
    edges.iter().map(|e| (e.w.x, e.w.y, e.b)).collect()
}

/// Two-branch logistic; the argument is already temperature-scaled.
fn sigmoid<S: Scalar>(z: S) -> S {
    let one = S::from_f64(1.0);
    if z.value() >= 0.0 {
        one / (one + (-z).exp())
    } else {
        let e = z.exp();
        e / (one + e)
    }
}

fn indicator_core<S: Scalar>(x: S, y: S, rows: &[(S, S, S)], temperature: f64) -> S {
    let t = S::from_f64(temperature);
    let half = S::from_f64(0.5);
    let mut prod = S::from_f64(1.0);
    for &(wx, wy, b) in rows {
        let v = wx * x + wy * y + b;
        prod = prod * sigmoid(v * t);
    }
    sigmoid((prod - half) * t)
}

fn transect_length_core<S: Scalar>(x: S, rows: &[(S, S, S)], temperature: f64, ppt: usize) -> S {
    let h = 1.0 / (ppt - 1) as f64;
    let mut acc = S::from_f64(0.0);
    for k in 0..ppt {
        let y = S::from_f64(-0.5 + k as f64 * h);
        let weight = if k == 0 || k == ppt - 1 { 0.5 * h } else { h };
        acc = acc + indicator_core(x, y, rows, temperature) * S::from_f64(weight);
    }
    acc
}

fn shown_core<S: Scalar>(length: S, temperature: f64) -> S {
    let half = S::from_f64(0.5);
    (sigmoid(length * S::from_f64(temperature)) - half) / half
}

struct SoftCore {
    fitness: f64,
    fitness_grad: [f64; 2],
    mean: f64,
    std: f64,
    count: f64,
    lengths: Vec<f64>,
    shown: Vec<f64>,
}

/// Shared pipeline: lengths, shown weights, soft statistics, fitness.
/// All sums run in fixed index order so results are reproducible regardless
/// of how callers parallelize around this.
fn soft_core<S: Scalar>(rows: &[(S, S, S)], xs: &[S], params: &ScoreParams) -> SoftCore {
    let t = params.temperature;
    let lengths: Vec<S> = xs
        .iter()
        .map(|&x| transect_length_core(x, rows, t, params.ppt))
        .collect();
    let shown: Vec<S> = lengths.iter().map(|&l| shown_core(l, t)).collect();
    let eps = S::from_f64(SOFT_EPS);
    let zero = S::from_f64(0.0);
    let mut count = zero;
    for &s in &shown {
        count = count + s;
    }
    let mut weighted = zero;
    for (&s, &l) in shown.iter().zip(&lengths) {
        weighted = weighted + s * l;
    }
    let mean = weighted / (count + eps);
    let mut var_num = zero;
    for (&s, &l) in shown.iter().zip(&lengths) {
        let d = l - mean;
        var_num = var_num + s * d * d;
    }
    let std = (var_num / (count + eps)).sqrt();
    let fitness = S::from_f64(params.a) * mean
        + S::from_f64(params.b) * (S::from_f64(1.0) - std);
    SoftCore {
        fitness: fitness.value(),
        fitness_grad: fitness.tangents(),
        mean: mean.value(),
        std: std.value(),
        count: count.value(),
        lengths: lengths.iter().map(|l| l.value()).collect(),
        shown: shown.iter().map(|s| s.value()).collect(),
    }
}
