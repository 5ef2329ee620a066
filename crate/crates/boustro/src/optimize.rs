//! Grid search, momentum gradient ascent, hybrid refinement, and temperature
//! schedules over the (theta, x_offset) plane.
//!
//! The search domain is theta in [0, pi) times offset in
//! [-spacing/2, spacing/2): the mirror identity
//! `score(theta + pi, offset) = score(theta, -offset)` makes the other half
//! of the circle redundant, and the offset is periodic in the spacing.

use serde::Serialize;
use thiserror::Error;

use crate::diffable::{score_and_gradient, soft_score};
use crate::discrete_oracle::{discrete_score, normalize_offset, ScoreParams, TransectField};
use crate::geometry::{rotate, NormalizedPolygon};

/// Consecutive sub-tolerance fitness steps required before declaring a
/// plateau. Why a plateau and not a gradient norm: near-discontinuities at
/// high temperature make gradient norms spiky and unreliable.
const PLATEAU_STEPS: u32 = 10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum Mode {
    Grid,
    Gd,
    #[default]
    Hybrid,
}

/// What grid search evaluates. Gradient ascent always uses the soft score
/// (it needs derivatives).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum Objective {
    #[default]
    Soft,
    Discrete,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridCfg {
    pub theta_steps: usize,
    pub offset_steps: usize,
}

impl Default for GridCfg {
    fn default() -> Self {
        GridCfg {
            theta_steps: 36,
            offset_steps: 9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GdCfg {
    pub lr_theta: f64,
    pub lr_offset: f64,
    pub momentum: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for GdCfg {
    fn default() -> Self {
        // Learning rates sized well under the O(0.1 rad) feature width of the
        // score surface.
        GdCfg {
            lr_theta: 0.01,
            lr_offset: 0.005,
            momentum: 0.8,
            max_iters: 200,
            tol: 1e-7,
        }
    }
}

/// Geometric temperature ramp for gradient ascent: start smooth, finish
/// sharp, hold at `t_end` after `ramp_iters`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Schedule {
    pub t_start: f64,
    pub t_end: f64,
    pub ramp_iters: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimizerConfig {
    pub mode: Mode,
    pub grid: GridCfg,
    pub gd: GdCfg,
    pub schedule: Option<Schedule>,
    pub seed: u64,
    pub objective: Objective,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            mode: Mode::default(),
            grid: GridCfg::default(),
            gd: GdCfg::default(),
            schedule: None,
            seed: 0,
            objective: Objective::default(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("momentum must lie in [0, 1), got {0}")]
    BadMomentum(f64),
    #[error("learning rates must be positive, got lr_theta={0}, lr_offset={1}")]
    BadLearningRate(f64, f64),
    #[error("grid steps must be at least 1, got {0}x{1}")]
    BadGridSteps(usize, usize),
    #[error("tolerance must be non-negative, got {0}")]
    BadTol(f64),
    #[error("schedule temperatures must be positive, got t_start={0}, t_end={1}")]
    BadSchedule(f64, f64),
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.gd.momentum >= 0.0 && self.gd.momentum < 1.0) {
            return Err(ConfigError::BadMomentum(self.gd.momentum));
        }
        if !(self.gd.lr_theta > 0.0 && self.gd.lr_offset > 0.0) {
            return Err(ConfigError::BadLearningRate(self.gd.lr_theta, self.gd.lr_offset));
        }
        if self.grid.theta_steps < 1 || self.grid.offset_steps < 1 {
            return Err(ConfigError::BadGridSteps(
                self.grid.theta_steps,
                self.grid.offset_steps,
            ));
        }
        if !(self.gd.tol >= 0.0) {
            return Err(ConfigError::BadTol(self.gd.tol));
        }
        if let Some(s) = self.schedule {
            if !(s.t_start > 0.0 && s.t_end > 0.0) {
                return Err(ConfigError::BadSchedule(s.t_start, s.t_end));
            }
        }
        Ok(())
    }

    /// The temperature best answers are reported at: the schedule's end if a
    /// schedule is set, otherwise the params temperature.
    pub fn final_temperature(&self, params: &ScoreParams) -> f64 {
        self.schedule.map_or(params.temperature, |s| s.t_end)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum OptimizeError {
    #[error("fitness became NaN at iteration {iter}; step size or temperature pathology")]
    DivergenceDetected { iter: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// One evaluated point of an optimization run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TracePoint {
    pub iter: usize,
    pub theta: f64,
    pub offset: f64,
    pub fitness: f64,
    pub temperature: f64,
}

/// Optimization result. `best_fitness` is the maximum over the trace with
/// every candidate scored at the final (highest) temperature; under a
/// schedule that means traced points are re-scored at `t_end` before the
/// argmax is taken.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimumReport {
    #[serde(rename = "theta")]
    pub best_theta: f64,
    #[serde(rename = "x_offset")]
    pub best_offset: f64,
    #[serde(rename = "fitness")]
    pub best_fitness: f64,
    pub evaluations: u64,
    pub trace: Vec<TracePoint>,
}

impl OptimumReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization cannot fail")
    }
}

/// Schedule temperature at an iteration: geometric interpolation from
/// `t_start` to `t_end` over `ramp_iters`, clamped at `t_end` afterward.
pub fn temperature_at(schedule: &Schedule, iter: usize) -> f64 {
    if iter >= schedule.ramp_iters {
        return schedule.t_end;
    }
    let frac = iter as f64 / schedule.ramp_iters as f64;
    schedule.t_start * (schedule.t_end / schedule.t_start).powf(frac)
}

fn evaluate(
    poly: &NormalizedPolygon,
    field: &TransectField,
    params: &ScoreParams,
    objective: Objective,
    theta: f64,
    offset: f64,
    temperature: f64,
) -> f64 {
    let edges = rotate(&poly.edges, theta);
    let field = TransectField::new(field.spacing(), offset).expect("spacing already validated");
    let params = params
        .with_temperature(temperature)
        .expect("temperature already validated");
    match objective {
        Objective::Soft => soft_score(&edges, &field, &params).fitness,
        Objective::Discrete => discrete_score(&edges, &field, &params).fitness,
    }
}

/// Exhaustive scan of the uniform lattice
/// theta_i = i * pi / theta_steps, offset_j = (j / offset_steps - 1/2) * spacing,
/// evaluated at the final temperature. Ties break toward the lowest theta,
/// then the lowest offset (scan order), deterministically.
///
/// The returned trace holds only the argmax entry; a full lattice trace would
/// dominate the report size at typical resolutions.
pub fn grid_search(
    poly: &NormalizedPolygon,
    field: &TransectField,
    params: &ScoreParams,
    cfg: &OptimizerConfig,
) -> OptimumReport {
    cfg.validate().expect("invalid optimizer config");
    let temp = cfg.final_temperature(params);
    let spacing = field.spacing();
    let mut best: Option<(f64, f64, f64)> = None;
    for i in 0..cfg.grid.theta_steps {
        let theta = i as f64 * std::f64::consts::PI / cfg.grid.theta_steps as f64;
        for j in 0..cfg.grid.offset_steps {
            let offset = (j as f64 / cfg.grid.offset_steps as f64 - 0.5) * spacing;
            let fitness = evaluate(poly, field, params, cfg.objective, theta, offset, temp);
            if best.map_or(true, |(_, _, bf)| fitness > bf) {
                best = Some((theta, offset, fitness));
            }
        }
    }
    let (theta, offset, fitness) = best.expect("grid has at least one cell");
    OptimumReport {
        best_theta: theta,
        best_offset: offset,
        best_fitness: fitness,
        evaluations: (cfg.grid.theta_steps * cfg.grid.offset_steps) as u64,
        trace: vec![TracePoint {
            iter: 0,
            theta,
            offset,
            fitness,
            temperature: temp,
        }],
    }
}

/// Classical momentum ascent on the soft fitness from `init`:
/// `v <- momentum * v + g`, `p <- p + lr * v`, with theta wrapped modulo pi
/// and the offset wrapped modulo the spacing after every step.
///
/// Stops at `max_iters` or once |delta fitness| stays below `tol` for 10
/// consecutive iterations. Every evaluated point lands in the trace.
pub fn gradient_ascent(
    poly: &NormalizedPolygon,
    field: &TransectField,
    params: &ScoreParams,
    cfg: &OptimizerConfig,
    init: (f64, f64),
) -> Result<OptimumReport, OptimizeError> {
    cfg.validate()?;
    let spacing = field.spacing();
    let mut theta = init.0.rem_euclid(std::f64::consts::PI);
    let mut offset = normalize_offset(init.1, spacing);
    let mut velocity = (0.0_f64, 0.0_f64);
    let mut trace: Vec<TracePoint> = Vec::with_capacity(cfg.gd.max_iters + 1);
    let mut evaluations = 0u64;
    let mut plateau = 0u32;

    for iter in 0..=cfg.gd.max_iters {
        let temperature = cfg
            .schedule
            .as_ref()
            .map_or(params.temperature, |s| temperature_at(s, iter));
        let params_i = params
            .with_temperature(temperature)
            .expect("schedule temperatures validated");
        let rep = score_and_gradient(poly, theta, offset, field, &params_i);
        evaluations += 1;
        if rep.fitness.is_nan() {
            return Err(OptimizeError::DivergenceDetected { iter });
        }
        if let Some(last) = trace.last() {
            if (rep.fitness - last.fitness).abs() < cfg.gd.tol {
                plateau += 1;
            } else {
                plateau = 0;
            }
        }
        trace.push(TracePoint {
            iter,
            theta,
            offset,
            fitness: rep.fitness,
            temperature,
        });
        if plateau >= PLATEAU_STEPS || iter == cfg.gd.max_iters {
            break;
        }
        let (g_theta, g_offset) = rep.gradient.expect("gradient path always fills gradients");
        velocity.0 = cfg.gd.momentum * velocity.0 + g_theta;
        velocity.1 = cfg.gd.momentum * velocity.1 + g_offset;
        theta = (theta + cfg.gd.lr_theta * velocity.0).rem_euclid(std::f64::consts::PI);
        offset = normalize_offset(offset + cfg.gd.lr_offset * velocity.1, spacing);
    }

    // Best-at-final-temperature selection. Without a schedule the traced
    // fitnesses already are final-temperature scores.
    let final_temp = cfg.final_temperature(params);
    let mut best: Option<(f64, f64, f64)> = None;
    for p in &trace {
        let fitness = if cfg.schedule.is_some() {
            evaluations += 1;
            evaluate(poly, field, params, Objective::Soft, p.theta, p.offset, final_temp)
        } else {
            p.fitness
        };
        if best.map_or(true, |(_, _, bf)| fitness > bf) {
            best = Some((p.theta, p.offset, fitness));
        }
    }
    let (best_theta, best_offset, best_fitness) = best.expect("trace is never empty");
    Ok(OptimumReport {
        best_theta,
        best_offset,
        best_fitness,
        evaluations,
        trace,
    })
}

/// Grid search to land near the global basin, then gradient ascent from the
/// grid argmax. Returns the better of the two at the final temperature, so
/// refinement never reports worse than the grid alone.
pub fn hybrid(
    poly: &NormalizedPolygon,
    field: &TransectField,
    params: &ScoreParams,
    cfg: &OptimizerConfig,
) -> Result<OptimumReport, OptimizeError> {
    cfg.validate()?;
    let grid = grid_search(poly, field, params, cfg);
    let gd = gradient_ascent(
        poly,
        field,
        params,
        cfg,
        (grid.best_theta, grid.best_offset),
    )?;
    let mut trace = grid.trace.clone();
    trace.extend(gd.trace.iter().copied());
    let use_gd = gd.best_fitness > grid.best_fitness;
    Ok(OptimumReport {
        best_theta: if use_gd { gd.best_theta } else { grid.best_theta },
        best_offset: if use_gd { gd.best_offset } else { grid.best_offset },
        best_fitness: gd.best_fitness.max(grid.best_fitness),
        evaluations: grid.evaluations + gd.evaluations,
        trace,
    })
}
