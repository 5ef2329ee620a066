//! `boustro`: score and optimize boustrophedon survey paths over convex
//! polygons.
//!
//! Angles are taken in degrees on the command line and converted to radians
//! internally; reports print radians. Spacing and offset are unit-frame
//! quantities (the polygon is rescaled so its enclosing circle has diameter
//! 1 before any scoring).
//!
//! Exit codes: 0 success, 1 validation error, 2 I/O error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use boustro::diffable::{score_and_gradient, DiffScoreReport};
use boustro::discrete_oracle::{
    build_path, discrete_score, ScoreParams, ScoreReport, StartCorner, TransectField,
};
use boustro::experiments::{
    grid_vs_gd, parity_csv, parity_experiment, random_convex_polygon, surface_csv, surface_sample,
    Axis, AxisSpec, ExperimentError, FixedParams,
};
use boustro::geometry::{normalize, rotate, NormalizedPolygon, ValidatedPolygon};
use boustro::optimize::{
    gradient_ascent, grid_search, hybrid, GdCfg, GridCfg, Mode, Objective, OptimizeError,
    OptimizerConfig, Schedule,
};

#[derive(Parser)]
#[command(
    name = "boustro",
    version,
    about = "Boustrophedon survey-path scoring and optimization over convex polygons"
)]
struct Cli {
    /// Worker threads for parallel evaluation (0 = all cores). Results are
    /// byte-identical regardless.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct FieldFlags {
    /// Transect spacing in the unit frame, in (0, 1].
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    spacing: f64,

    /// Transect x-offset in the unit frame (wrapped into half a spacing
    /// either way).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    offset: f64,
}

#[derive(Args)]
struct ScoreFlags {
    /// Fitness weight on mean transect length; a + b must equal 1.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    a: f64,

    /// Fitness weight on transect-length uniformity.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    b: f64,

    /// Sigmoid temperature of the relaxed score.
    #[arg(long, default_value_t = 1000.0, allow_negative_numbers = true)]
    temp: f64,

    /// Quadrature points per transect for the relaxed score.
    #[arg(long, default_value_t = 1000)]
    ppt: usize,
}

#[derive(Args)]
struct OptimizerFlags {
    /// Theta resolution of the grid search.
    #[arg(long, default_value_t = 36)]
    grid_theta: usize,

    /// Offset resolution of the grid search.
    #[arg(long, default_value_t = 9)]
    grid_offset: usize,

    /// Gradient-ascent learning rate for theta.
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    lr_theta: f64,

    /// Gradient-ascent learning rate for the offset.
    #[arg(long, default_value_t = 0.005, allow_negative_numbers = true)]
    lr_offset: f64,

    /// Momentum coefficient in [0, 1).
    #[arg(long, default_value_t = 0.8, allow_negative_numbers = true)]
    momentum: f64,

    /// Maximum gradient-ascent iterations.
    #[arg(long, default_value_t = 200)]
    iters: usize,

    /// Plateau tolerance: stop after 10 consecutive fitness changes below
    /// this.
    #[arg(long, default_value_t = 1e-7, allow_negative_numbers = true)]
    tol: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Grid,
    Gd,
    Hybrid,
}

/// Geometric temperature ramp `T0,T1,N`.
#[derive(Clone, Copy, Debug)]
struct Anneal {
    t0: f64,
    t1: f64,
    steps: usize,
}

fn parse_anneal(s: &str) -> Result<Anneal, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected T0,T1,N (three comma-separated values), got \"{s}\""));
    }
    let t0: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| format!("T0 must be a number, got \"{}\"", parts[0]))?;
    let t1: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| format!("T1 must be a number, got \"{}\"", parts[1]))?;
    let steps: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| format!("N must be a non-negative integer, got \"{}\"", parts[2]))?;
    Ok(Anneal { t0, t1, steps })
}

#[derive(Subcommand)]
enum Command {
    /// Score a polygon at one configuration: exact discrete fitness plus the
    /// differentiable relaxation (with its gradient).
    Score {
        /// Polygon JSON file: {"vertices": [[x, y], ...]}.
        #[arg(long)]
        polygon: PathBuf,

        /// Transect orientation in degrees.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        theta_deg: f64,

        #[command(flatten)]
        field: FieldFlags,

        #[command(flatten)]
        score: ScoreFlags,

        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Find the best (theta, offset) for a polygon.
    Optimize {
        #[arg(long)]
        polygon: PathBuf,

        #[arg(long, value_enum, default_value_t = ModeArg::Hybrid)]
        mode: ModeArg,

        /// Gradient-ascent start orientation in degrees (gd mode only).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        theta_deg: f64,

        #[command(flatten)]
        field: FieldFlags,

        #[command(flatten)]
        score: ScoreFlags,

        #[command(flatten)]
        opt: OptimizerFlags,

        /// Geometric temperature ramp T0,T1,N over the first N iterations;
        /// the report is scored at T1.
        #[arg(long, value_parser = parse_anneal)]
        anneal: Option<Anneal>,

        #[arg(long, default_value_t = 0)]
        seed: u64,

        /// Also write the boustrophedon waypoint plan of the optimum here.
        #[arg(long)]
        plan: Option<PathBuf>,

        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Sample the soft-fitness surface over theta x offset, or theta x
    /// temperature with --anneal. CSV to stdout or --out.
    Surface {
        #[arg(long)]
        polygon: PathBuf,

        /// Lattice steps per swept axis.
        #[arg(long, default_value_t = 64)]
        samples: usize,

        /// Sweep temperature (geometric, T0..T1 in N steps) as the second
        /// axis instead of the offset.
        #[arg(long, value_parser = parse_anneal)]
        anneal: Option<Anneal>,

        #[command(flatten)]
        field: FieldFlags,

        #[command(flatten)]
        score: ScoreFlags,

        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Mean |discrete - soft| fitness over random configurations, per
    /// (temperature, ppt) cell. CSV to stdout or --out.
    Parity {
        /// Random configurations per cell.
        #[arg(long, default_value_t = 100)]
        samples: usize,

        #[arg(long, default_value_t = 0)]
        seed: u64,

        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Compare grid search against gradient ascent from random inits over
    /// random polygons. JSON report to stdout or --out.
    Gridvsgd {
        /// Number of random polygons.
        #[arg(long, default_value_t = 100)]
        samples: usize,

        #[arg(long, default_value_t = 0)]
        seed: u64,

        #[command(flatten)]
        field: FieldFlags,

        #[command(flatten)]
        score: ScoreFlags,

        #[command(flatten)]
        opt: OptimizerFlags,

        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Generate a random convex polygon as JSON.
    Genpoly {
        #[arg(long, default_value_t = 0)]
        seed: u64,

        /// Vertex count, 3 through 9; derived from the seed when omitted.
        #[arg(long)]
        sides: Option<usize>,

        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum CliError {
    Validation(String),
    Io(String),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    // 0 is rayon's "pick automatically". A second global-pool build attempt
    // cannot happen here, so the result is only ignored for the degenerate
    // re-entry case.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_polygon(path: &Path) -> Result<NormalizedPolygon, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read --polygon {}: {e}", path.display())))?;
    let poly = ValidatedPolygon::from_json(&text).map_err(|e| {
        CliError::Validation(format!("--polygon {}: {e}", path.display()))
    })?;
    Ok(normalize(&poly))
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| CliError::Io(format!("cannot write --out {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn field_from(flags: &FieldFlags) -> Result<TransectField, CliError> {
    TransectField::new(flags.spacing, flags.offset)
        .map_err(|e| CliError::Validation(format!("--spacing: {e}")))
}

fn params_from(flags: &ScoreFlags) -> Result<ScoreParams, CliError> {
    use boustro::discrete_oracle::ParamsError::*;
    ScoreParams::new(flags.a, flags.b, flags.temp, flags.ppt).map_err(|e| {
        CliError::Validation(match e {
            BadWeights { .. } => format!("--a/--b: {e}"),
            NonPositiveTemperature(_) => format!("--temp: {e}"),
            BadPPT(_) => format!("--ppt: {e}"),
        })
    })
}

fn config_from(
    mode: Mode,
    opt: &OptimizerFlags,
    anneal: Option<Anneal>,
    seed: u64,
) -> Result<OptimizerConfig, CliError> {
    use boustro::optimize::ConfigError::*;
    let cfg = OptimizerConfig {
        mode,
        grid: GridCfg {
            theta_steps: opt.grid_theta,
            offset_steps: opt.grid_offset,
        },
        gd: GdCfg {
            lr_theta: opt.lr_theta,
            lr_offset: opt.lr_offset,
            momentum: opt.momentum,
            max_iters: opt.iters,
            tol: opt.tol,
        },
        schedule: anneal.map(|a| Schedule {
            t_start: a.t0,
            t_end: a.t1,
            ramp_iters: a.steps,
        }),
        seed,
        objective: Objective::Soft,
    };
    cfg.validate().map_err(|e| {
        CliError::Validation(match e {
            BadMomentum(_) => format!("--momentum: {e}"),
            BadLearningRate(..) => format!("--lr-theta/--lr-offset: {e}"),
            BadGridSteps(..) => format!("--grid-theta/--grid-offset: {e}"),
            BadTol(_) => format!("--tol: {e}"),
            BadSchedule(..) => format!("--anneal: {e}"),
        })
    })?;
    Ok(cfg)
}

#[derive(Serialize)]
struct ScoreOutput<'a> {
    discrete: &'a ScoreReport,
    soft: &'a DiffScoreReport,
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Score {
            polygon,
            theta_deg,
            field,
            score,
            out,
        } => {
            let poly = load_polygon(&polygon)?;
            let field = field_from(&field)?;
            let params = params_from(&score)?;
            let theta = theta_deg.to_radians();
            let edges = rotate(&poly.edges, theta);
            let discrete = discrete_score(&edges, &field, &params);
            let soft = score_and_gradient(&poly, theta, field.x_offset(), &field, &params);
            let report = ScoreOutput {
                discrete: &discrete,
                soft: &soft,
            };
            let json =
                serde_json::to_string(&report).expect("score reports always serialize");
            emit(&out, &format!("{json}\n"))
        }

        Command::Optimize {
            polygon,
            mode,
            theta_deg,
            field,
            score,
            opt,
            anneal,
            seed,
            plan,
            out,
        } => {
            let poly = load_polygon(&polygon)?;
            let transects = field_from(&field)?;
            let params = params_from(&score)?;
            let lib_mode = match mode {
                ModeArg::Grid => Mode::Grid,
                ModeArg::Gd => Mode::Gd,
                ModeArg::Hybrid => Mode::Hybrid,
            };
            let cfg = config_from(lib_mode, &opt, anneal, seed)?;
            let divergence = |e: OptimizeError| {
                CliError::Validation(format!(
                    "{e}; lower --lr-theta/--lr-offset or shorten --anneal"
                ))
            };
            let report = match lib_mode {
                Mode::Grid => grid_search(&poly, &transects, &params, &cfg),
                Mode::Gd => gradient_ascent(
                    &poly,
                    &transects,
                    &params,
                    &cfg,
                    (theta_deg.to_radians(), transects.x_offset()),
                )
                .map_err(divergence)?,
                Mode::Hybrid => hybrid(&poly, &transects, &params, &cfg).map_err(divergence)?,
            };
            if let Some(plan_path) = plan {
                let best_field = TransectField::new(transects.spacing(), report.best_offset)
                    .expect("spacing already validated");
                let path = build_path(&poly, report.best_theta, &best_field, StartCorner::default())
                    .map_err(|e| CliError::Validation(format!("--plan: {e}")))?;
                fs::write(&plan_path, format!("{}\n", path.to_json())).map_err(|e| {
                    CliError::Io(format!("cannot write --plan {}: {e}", plan_path.display()))
                })?;
            }
            emit(&out, &format!("{}\n", report.to_json()))
        }

        Command::Surface {
            polygon,
            samples,
            anneal,
            field,
            score,
            out,
        } => {
            let poly = load_polygon(&polygon)?;
            let transects = field_from(&field)?;
            let params = params_from(&score)?;
            if samples < 1 {
                return Err(CliError::Validation(
                    "--samples must be at least 1".to_string(),
                ));
            }
            let axis1 = AxisSpec {
                axis: Axis::Theta,
                start: 0.0,
                stop: std::f64::consts::PI,
                steps: samples,
            };
            let axis2 = match anneal {
                Some(a) => {
                    if a.steps < 1 || !(a.t0 > 0.0 && a.t1 > 0.0) {
                        return Err(CliError::Validation(format!(
                            "--anneal: temperatures must be positive and N >= 1, got {},{},{}",
                            a.t0, a.t1, a.steps
                        )));
                    }
                    AxisSpec {
                        axis: Axis::Temperature,
                        start: a.t0,
                        stop: a.t1,
                        steps: a.steps,
                    }
                }
                None => AxisSpec {
                    axis: Axis::XOffset,
                    start: -transects.spacing() / 2.0,
                    stop: transects.spacing() / 2.0,
                    steps: samples,
                },
            };
            let fixed = FixedParams {
                theta: 0.0,
                x_offset: transects.x_offset(),
                temperature: params.temperature,
            };
            let grid = surface_sample(&poly, axis1, axis2, fixed, &transects, &params);
            emit(&out, &surface_csv(&grid))
        }

        Command::Parity { samples, seed, out } => {
            if samples < 1 {
                return Err(CliError::Validation(
                    "--samples must be at least 1".to_string(),
                ));
            }
            let temps = [1.0, 10.0, 100.0, 1000.0, 10000.0];
            let ppts = [100usize, 1000];
            let rows = parity_experiment(seed, &temps, &ppts, (0.05, 0.3), samples);
            emit(&out, &parity_csv(&rows))
        }

        Command::Gridvsgd {
            samples,
            seed,
            field,
            score,
            opt,
            out,
        } => {
            if samples < 1 {
                return Err(CliError::Validation(
                    "--samples must be at least 1".to_string(),
                ));
            }
            let transects = field_from(&field)?;
            let params = params_from(&score)?;
            let cfg = config_from(Mode::Hybrid, &opt, None, seed)?;
            let report = grid_vs_gd(seed, samples, &transects, &params, &cfg);
            emit(&out, &format!("{}\n", report.to_json()))
        }

        Command::Genpoly { seed, sides, out } => {
            let n = sides.unwrap_or(3 + (seed % 7) as usize);
            let poly = random_convex_polygon(seed, n).map_err(|e| match e {
                ExperimentError::BadSideCount(_) => {
                    CliError::Validation(format!("--sides: {e}"))
                }
            })?;
            emit(&out, &format!("{}\n", poly.to_json()))
        }
    }
}
