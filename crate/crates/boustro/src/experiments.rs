//! Random polygon corpus and the three studies: discrete-vs-soft parity
//! tables, score-surface sampling, and grid-vs-gradient-descent comparison.
//!
//! Determinism contract: every sample derives its own RNG seed from
//! (master seed, sample index) through a splitmix64 mix, and per-sample
//! results are collected in index order before any reduction. Thread count
//! and scheduling therefore cannot change any reported number.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::diffable::soft_score;
use crate::discrete_oracle::{discrete_score, ScoreParams, TransectField};
use crate::geometry::{normalize, rotate, validate, NormalizedPolygon, ValidatedPolygon, Vec2};
use crate::optimize::{gradient_ascent, grid_search, OptimizerConfig};

#[derive(Debug, Error, PartialEq)]
pub enum ExperimentError {
    #[error("side count must lie in [3, 10), got {0}")]
    BadSideCount(usize),
}

/// Fitness weights used by all of the studies.
const STUDY_A: f64 = 0.5;
const STUDY_B: f64 = 0.5;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-sample seed, independent of evaluation order.
fn sub_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Deterministic strictly convex polygon with exactly `n_sides` vertices,
/// by the random-convex-chain construction: split sorted coordinate samples
/// into two monotone chains, pair the resulting x- and y-increments at
/// random, sort the increment vectors by angle, and chain them. Degenerate
/// draws (collinear or repeated vertices) are retried on the same stream.
pub fn random_convex_polygon(
    seed: u64,
    n_sides: usize,
) -> Result<ValidatedPolygon, ExperimentError> {
    if !(3..10).contains(&n_sides) {
        return Err(ExperimentError::BadSideCount(n_sides));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..64 {
        if let Some(poly) = try_convex_chain(&mut rng, n_sides) {
            return Ok(poly);
        }
    }
    unreachable!("convex-chain construction failed 64 consecutive draws");
}

fn try_convex_chain(rng: &mut ChaCha8Rng, n: usize) -> Option<ValidatedPolygon> {
    let mut xs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let mut ys: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let dx = chain_deltas(rng, &xs);
    let mut dy = chain_deltas(rng, &ys);
    // Random pairing of the increments; the x order stays fixed.
    for i in (1..dy.len()).rev() {
        dy.swap(i, rng.gen_range(0..=i));
    }
    let mut vectors: Vec<Vec2> = dx
        .into_iter()
        .zip(dy)
        .map(|(x, y)| Vec2::new(x, y))
        .collect();
    vectors.sort_by(|a, b| a.y.atan2(a.x).total_cmp(&b.y.atan2(b.x)));
    let mut vertices = Vec::with_capacity(n);
    let mut p = Vec2::new(0.0, 0.0);
    for v in &vectors {
        vertices.push(p);
        p = p.add(*v);
    }
    validate(vertices).ok()
}

/// Splits the interior of a sorted coordinate list into two monotone chains
/// and returns the n signed increments (they sum to zero).
fn chain_deltas(rng: &mut ChaCha8Rng, sorted: &[f64]) -> Vec<f64> {
    let n = sorted.len();
    let (lo, hi) = (sorted[0], sorted[n - 1]);
    let mut deltas = Vec::with_capacity(n);
    let (mut top, mut bot) = (lo, lo);
    for &v in &sorted[1..n - 1] {
        if rng.gen::<bool>() {
            deltas.push(v - top);
            top = v;
        } else {
            deltas.push(bot - v);
            bot = v;
        }
    }
    deltas.push(hi - top);
    deltas.push(bot - hi);
    deltas
}

/// One random study configuration.
struct SampleTuple {
    poly: NormalizedPolygon,
    theta: f64,
    spacing: f64,
    offset: f64,
}

fn sample_tuple(master: u64, index: u64, spacing_range: (f64, f64)) -> SampleTuple {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(master, index));
    let n = rng.gen_range(3..10);
    let poly_seed = rng.gen::<u64>();
    let poly = random_convex_polygon(poly_seed, n).expect("side count in range");
    let theta = rng.gen::<f64>() * std::f64::consts::PI;
    let spacing = spacing_range.0 + rng.gen::<f64>() * (spacing_range.1 - spacing_range.0);
    let offset = (rng.gen::<f64>() - 0.5) * spacing;
    SampleTuple {
        poly: normalize(&poly),
        theta,
        spacing,
        offset,
    }
}

/// One cell of the parity table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ParityRow {
    pub temperature: f64,
    pub ppt: usize,
    pub mean_abs_error: f64,
    pub samples: usize,
}

/// Mean |discrete fitness - soft fitness| per (temperature, ppt) cell, with
/// weights a = b = 0.5.
///
/// One set of `samples` random (polygon, theta, spacing, offset) tuples is
/// drawn from the master seed and scored under every cell (a paired design:
/// the same configurations face every temperature, which is also what keeps
/// the down-column comparison low-variance). Spacing is uniform over
/// `spacing_range`, orientation over [0, pi), offset over half a spacing
/// either way.
pub fn parity_experiment(
    master_seed: u64,
    temps: &[f64],
    ppts: &[usize],
    spacing_range: (f64, f64),
    samples: usize,
) -> Vec<ParityRow> {
    let probe = ScoreParams::new(STUDY_A, STUDY_B, 1.0, 2).unwrap();
    let tuples: Vec<_> = (0..samples as u64)
        .into_par_iter()
        .map(|k| {
            let t = sample_tuple(master_seed, k, spacing_range);
            let edges = rotate(&t.poly.edges, t.theta);
            let field = TransectField::new(t.spacing, t.offset).unwrap();
            let exact = discrete_score(&edges, &field, &probe).fitness;
            (edges, field, exact)
        })
        .collect();
    let mut rows = Vec::with_capacity(temps.len() * ppts.len());
    for &temperature in temps {
        for &ppt in ppts {
            let params = ScoreParams::new(STUDY_A, STUDY_B, temperature, ppt).unwrap();
            let errors: Vec<f64> = tuples
                .par_iter()
                .map(|(edges, field, exact)| {
                    (soft_score(edges, field, &params).fitness - exact).abs()
                })
                .collect();
            let mean_abs_error = errors.iter().sum::<f64>() / samples as f64;
            rows.push(ParityRow {
                temperature,
                ppt,
                mean_abs_error,
                samples,
            });
        }
    }
    rows
}

/// `temperature,ppt,mean_abs_error,samples` CSV.
pub fn parity_csv(rows: &[ParityRow]) -> String {
    let mut out = String::from("temperature,ppt,mean_abs_error,samples\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.temperature, r.ppt, r.mean_abs_error, r.samples
        ));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Axis {
    Theta,
    XOffset,
    Temperature,
}

/// One swept axis. Theta and XOffset sample `steps` uniform values over the
/// half-open [start, stop) (both parameters are periodic); Temperature
/// samples `steps` geometric values inclusive of both ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AxisSpec {
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl AxisSpec {
    pub fn values(&self) -> Vec<f64> {
        match self.axis {
            Axis::Theta | Axis::XOffset => (0..self.steps)
                .map(|k| {
                    self.start + k as f64 * (self.stop - self.start) / self.steps as f64
                })
                .collect(),
            Axis::Temperature => {
                if self.steps == 1 {
                    return vec![self.start];
                }
                let ratio = self.stop / self.start;
                (0..self.steps)
                    .map(|k| self.start * ratio.powf(k as f64 / (self.steps - 1) as f64))
                    .collect()
            }
        }
    }
}

/// Values of whatever [`surface_sample`] does not sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FixedParams {
    pub theta: f64,
    pub x_offset: f64,
    pub temperature: f64,
}

/// Dense soft-fitness evaluation over a 2-D lattice (1-D when an axis has a
/// single step).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurfaceGrid {
    pub axis1: AxisSpec,
    pub axis2: AxisSpec,
    pub fixed: FixedParams,
    /// Row-major: axis1 outer, axis2 inner.
    pub values: Vec<f64>,
}

impl SurfaceGrid {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.axis2.steps + j]
    }
}

/// Sweeps soft fitness over two distinct axes of (theta, x_offset,
/// temperature); the rest come from `fixed`, spacing from `field`, weights
/// and ppt from `params`.
pub fn surface_sample(
    poly: &NormalizedPolygon,
    axis1: AxisSpec,
    axis2: AxisSpec,
    fixed: FixedParams,
    field: &TransectField,
    params: &ScoreParams,
) -> SurfaceGrid {
    assert!(axis1.axis != axis2.axis, "surface axes must be distinct");
    let v1 = axis1.values();
    let v2 = axis2.values();
    let values: Vec<f64> = v1
        .par_iter()
        .flat_map_iter(|&a1| {
            let v2 = v2.clone();
            v2.into_iter().map(move |a2| (a1, a2))
        })
        .map(|(a1, a2)| {
            let pick = |axis: Axis, fallback: f64| -> f64 {
                if axis1.axis == axis {
                    a1
                } else if axis2.axis == axis {
                    a2
                } else {
                    fallback
                }
            };
            let theta = pick(Axis::Theta, fixed.theta);
            let offset = pick(Axis::XOffset, fixed.x_offset);
            let temperature = pick(Axis::Temperature, fixed.temperature);
            let edges = rotate(&poly.edges, theta);
            let f = TransectField::new(field.spacing(), offset).unwrap();
            let p = params.with_temperature(temperature).unwrap();
            soft_score(&edges, &f, &p).fitness
        })
        .collect();
    SurfaceGrid {
        axis1,
        axis2,
        fixed,
        values,
    }
}

/// `axis1,axis2,fitness` CSV, row-major over the lattice.
pub fn surface_csv(grid: &SurfaceGrid) -> String {
    let v1 = grid.axis1.values();
    let v2 = grid.axis2.values();
    let mut out = String::from("axis1,axis2,fitness\n");
    for (i, a1) in v1.iter().enumerate() {
        for (j, a2) in v2.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", a1, a2, grid.value(i, j)));
        }
    }
    out
}

/// Grid-vs-gradient-descent comparison outcome.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub n_polygons: usize,
    /// Mean of (grid best - GD best); positive means grid search won on
    /// average.
    pub mean_gap: f64,
    /// Polygons where GD from a random init beat the grid.
    pub gd_wins: usize,
}

impl GapReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization cannot fail")
    }
}

/// Per random polygon: full grid search versus gradient ascent from one
/// uniform-random (theta, offset) init, both reported at the final
/// temperature.
pub fn grid_vs_gd(
    master_seed: u64,
    n_polygons: usize,
    field: &TransectField,
    params: &ScoreParams,
    cfg: &OptimizerConfig,
) -> GapReport {
    let outcomes: Vec<(f64, bool)> = (0..n_polygons as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(master_seed, k));
            let n = rng.gen_range(3..10);
            let poly_seed = rng.gen::<u64>();
            let poly = normalize(&random_convex_polygon(poly_seed, n).unwrap());
            let grid = grid_search(&poly, field, params, cfg);
            let init = (
                rng.gen::<f64>() * std::f64::consts::PI,
                (rng.gen::<f64>() - 0.5) * field.spacing(),
            );
            let gd = gradient_ascent(&poly, field, params, cfg, init)
                .expect("soft fitness is NaN-free on validated inputs");
            (
                grid.best_fitness - gd.best_fitness,
                gd.best_fitness > grid.best_fitness,
            )
        })
        .collect();
    let mean_gap = outcomes.iter().map(|(g, _)| g).sum::<f64>() / n_polygons as f64;
    let gd_wins = outcomes.iter().filter(|(_, w)| *w).count();
    GapReport {
        n_polygons,
        mean_gap,
        gd_wins,
    }
}
