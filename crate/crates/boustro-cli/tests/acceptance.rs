//! Acceptance gate: one test per release criterion, each printing a single
//! PASS/FAIL verdict line (visible with `--nocapture`, and always visible on
//! failure). Tolerances and sample counts are stated inline; seeds are fixed
//! so every run is identical.

use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use boustro::diffable::{score_and_gradient, soft_score};
use boustro::discrete_oracle::{
    clip_transect, discrete_score, ScoreParams, TransectField,
};
use boustro::experiments::{parity_experiment, random_convex_polygon};
use boustro::geometry::{normalize, rotate, validate, EdgeHalfPlane, NormalizedPolygon, Vec2};
use boustro::optimize::{gradient_ascent, grid_search, hybrid, OptimizerConfig};

fn verdict(number: usize, name: &str, pass: bool, detail: &str) {
    let state = if pass { "PASS" } else { "FAIL" };
    if detail.is_empty() {
        println!("ACCEPTANCE {number} ({name}): {state}");
    } else {
        println!("ACCEPTANCE {number} ({name}): {state} — {detail}");
    }
}

fn random_norm(seed: u64, n: usize) -> NormalizedPolygon {
    normalize(&random_convex_polygon(seed, n).unwrap())
}

/// Criterion 1: over 100 random configurations per cell, the mean
/// |discrete - soft| fitness error strictly decreases down each ppt column
/// as T steps through {1, 10, 100, 1000, 10000}; the T=1 error lands in
/// [0.4, 0.6]; the (T=10000, ppt=1000) error is below 0.005; and the table
/// builds in at most five minutes.
#[test]
fn c1_parity_error_decreases_with_temperature() {
    let started = Instant::now();
    let temps = [1.0, 10.0, 100.0, 1000.0, 10_000.0];
    let ppts = [100usize, 1000];
    let rows = parity_experiment(0, &temps, &ppts, (0.05, 0.3), 100);
    let elapsed = started.elapsed().as_secs_f64();

    println!("temperature   ppt=100     ppt=1000");
    for ti in 0..temps.len() {
        println!(
            "{:11} {:.6}    {:.6}",
            temps[ti],
            rows[ti * 2].mean_abs_error,
            rows[ti * 2 + 1].mean_abs_error
        );
    }

    let mut failures: Vec<String> = Vec::new();
    for (pi, &ppt) in ppts.iter().enumerate() {
        let column: Vec<f64> = (0..temps.len())
            .map(|ti| rows[ti * 2 + pi].mean_abs_error)
            .collect();
        for step in column.windows(2) {
            if !(step[1] < step[0]) {
                failures.push(format!(
                    "ppt={ppt} column not strictly decreasing ({:.6} -> {:.6})",
                    step[0], step[1]
                ));
            }
        }
        let t1 = column[0];
        if !(0.4..=0.6).contains(&t1) {
            failures.push(format!("ppt={ppt} error at T=1 is {t1:.5}, outside [0.4, 0.6]"));
        }
    }
    let best = rows[temps.len() * 2 - 1].mean_abs_error;
    if !(best < 0.005) {
        failures.push(format!("error at T=10000, ppt=1000 is {best:.6}, not < 0.005"));
    }
    if elapsed > 300.0 {
        failures.push(format!("took {elapsed:.0}s, over the 5-minute budget"));
    }

    verdict(1, "parity table", failures.is_empty(), &failures.join("; "));
    assert!(failures.is_empty(), "{}", failures.join("; "));
}

/// Criterion 2: over 200 random (polygon, theta, offset) configurations at
/// T in {10, 100}, each analytic partial matches a central finite difference
/// with step 1e-5 to relative error < 1e-4 (absolute < 1e-7 when |FD| is
/// below 1e-7) for at least 98% of configurations, within two minutes.
#[test]
fn c2_analytic_gradients_match_finite_differences() {
    let started = Instant::now();
    let total = 200u64;
    let passes = (0..total)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = ChaCha8Rng::seed_from_u64(2_900_000 + i);
            let n = rng.gen_range(3..10);
            let poly = random_norm(rng.gen::<u64>(), n);
            let theta = rng.gen::<f64>() * std::f64::consts::PI;
            let spacing = 0.05 + rng.gen::<f64>() * 0.25;
            let offset = (rng.gen::<f64>() - 0.5) * spacing;
            let t = if i % 2 == 0 { 10.0 } else { 100.0 };
            let params = ScoreParams::new(0.5, 0.5, t, 501).unwrap();
            let field = TransectField::new(spacing, offset).unwrap();

            let (g_theta, g_offset) = score_and_gradient(&poly, theta, offset, &field, &params)
                .gradient
                .unwrap();
            let h = 1e-5;
            let soft_at = |th: f64, off: f64| {
                let f = TransectField::new(spacing, off).unwrap();
                soft_score(&rotate(&poly.edges, th), &f, &params).fitness
            };
            let fd_theta = (soft_at(theta + h, offset) - soft_at(theta - h, offset)) / (2.0 * h);
            let fd_offset = (soft_at(theta, offset + h) - soft_at(theta, offset - h)) / (2.0 * h);
            let ok = |analytic: f64, fd: f64| {
                if fd.abs() < 1e-7 {
                    (analytic - fd).abs() < 1e-7
                } else {
                    ((analytic - fd) / fd).abs() < 1e-4
                }
            };
            ok(g_theta, fd_theta) && ok(g_offset, fd_offset)
        })
        .count();
    let elapsed = started.elapsed().as_secs_f64();
    let rate = passes as f64 / total as f64;
    let pass = rate >= 0.98 && elapsed <= 120.0;
    verdict(
        2,
        "gradient check",
        pass,
        &format!("{passes}/{total} configurations within tolerance in {elapsed:.1}s"),
    );
    assert!(pass, "pass rate {rate:.3}, elapsed {elapsed:.1}s");
}

/// Criterion 3: the exact clipper agrees with dense membership sampling
/// (1e5 points per line) within 2e-4 on 500 random cases, and the sharp
/// relaxation (T=10000, ppt=10000) agrees with the discrete fitness within
/// 2e-3 on 100 random cases.
#[test]
fn c3_clip_and_sharp_soft_match_their_oracles() {
    let worst_clip = (0..500u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(30_000 + k);
            let n = rng.gen_range(3..10);
            let poly = random_norm(rng.gen::<u64>(), n);
            let theta = rng.gen::<f64>() * std::f64::consts::PI;
            let x = rng.gen::<f64>() * 1.1 - 0.55;
            let edges = rotate(&poly.edges, theta);
            let exact = clip_transect(&edges, x);
            let m = 100_000;
            let mut inside = 0usize;
            for i in 0..m {
                let y = -0.5 + (i as f64 + 0.5) / m as f64;
                if edges.iter().all(|e| e.eval(Vec2::new(x, y)) >= 0.0) {
                    inside += 1;
                }
            }
            (exact - inside as f64 / m as f64).abs()
        })
        .reduce(|| 0.0, f64::max);

    let sharp = ScoreParams::new(0.5, 0.5, 10_000.0, 10_000).unwrap();
    let worst_soft = (0..100u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(31_000 + k);
            let n = rng.gen_range(3..10);
            let poly = random_norm(rng.gen::<u64>(), n);
            let theta = rng.gen::<f64>() * std::f64::consts::PI;
            let spacing = 0.05 + rng.gen::<f64>() * 0.25;
            let offset = (rng.gen::<f64>() - 0.5) * spacing;
            let edges = rotate(&poly.edges, theta);
            let field = TransectField::new(spacing, offset).unwrap();
            (soft_score(&edges, &field, &sharp).fitness
                - discrete_score(&edges, &field, &sharp).fitness)
                .abs()
        })
        .reduce(|| 0.0, f64::max);

    let pass = worst_clip < 2e-4 && worst_soft < 2e-3;
    verdict(
        3,
        "oracle equivalence",
        pass,
        &format!("worst clip diff {worst_clip:.2e} (< 2e-4), worst sharp-soft diff {worst_soft:.2e} (< 2e-3)"),
    );
    assert!(pass);
}

/// Criterion 4: rotation periodicity within 1e-9, the half-turn/offset
/// mirror identity within 1e-6, square invariance under quarter turns
/// within 1e-6, and a vanishing offset partial (|d fitness / d offset|
/// < 1e-6) at the square's symmetric configuration.
#[test]
fn c4_symmetry_and_periodicity_suite() {
    fn discrete_fitness(e: &[EdgeHalfPlane], f: &TransectField, p: &ScoreParams) -> f64 {
        discrete_score(e, f, p).fitness
    }
    fn soft_fitness(e: &[EdgeHalfPlane], f: &TransectField, p: &ScoreParams) -> f64 {
        soft_score(e, f, p).fitness
    }
    let scorers: [fn(&[EdgeHalfPlane], &TransectField, &ScoreParams) -> f64; 2] =
        [discrete_fitness, soft_fitness];

    let params = ScoreParams::new(0.5, 0.5, 100.0, 501).unwrap();
    let mut worst_period = 0.0f64;
    let mut worst_mirror = 0.0f64;
    for k in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(40_000 + k);
        let n = rng.gen_range(3..10);
        let poly = random_norm(rng.gen::<u64>(), n);
        let theta = rng.gen::<f64>() * std::f64::consts::PI;
        let spacing = 0.05 + rng.gen::<f64>() * 0.25;
        let offset = (rng.gen::<f64>() - 0.5) * spacing;
        let field = TransectField::new(spacing, offset).unwrap();
        let mirror_field = TransectField::new(spacing, -offset).unwrap();

        for score in scorers {
            let base = score(&rotate(&poly.edges, theta), &field, &params);
            let period = score(
                &rotate(&poly.edges, theta + 2.0 * std::f64::consts::PI),
                &field,
                &params,
            );
            let turned = score(
                &rotate(&poly.edges, theta + std::f64::consts::PI),
                &field,
                &params,
            );
            let mirrored = score(&rotate(&poly.edges, theta), &mirror_field, &params);
            worst_period = worst_period.max((base - period).abs());
            worst_mirror = worst_mirror.max((turned - mirrored).abs());
        }
    }

    let square = normalize(
        &validate(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap(),
    );
    let mut worst_quarter = 0.0f64;
    for k in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(41_000 + k);
        let theta = rng.gen::<f64>() * std::f64::consts::PI;
        let offset = (rng.gen::<f64>() - 0.5) * 0.2;
        let field = TransectField::new(0.2, offset).unwrap();
        let a = discrete_score(&rotate(&square.edges, theta), &field, &params).fitness;
        let b = discrete_score(
            &rotate(&square.edges, theta + std::f64::consts::FRAC_PI_2),
            &field,
            &params,
        )
        .fitness;
        worst_quarter = worst_quarter.max((a - b).abs());
    }

    let field = TransectField::new(0.2, 0.0).unwrap();
    let sym = score_and_gradient(&square, 0.0, 0.0, &field, &params);
    let offset_partial = sym.gradient.unwrap().1.abs();

    let pass = worst_period < 1e-9
        && worst_mirror < 1e-6
        && worst_quarter < 1e-6
        && offset_partial < 1e-6;
    verdict(
        4,
        "symmetry suite",
        pass,
        &format!(
            "period {worst_period:.2e} (< 1e-9), mirror {worst_mirror:.2e} (< 1e-6), quarter-turn {worst_quarter:.2e} (< 1e-6), symmetric offset partial {offset_partial:.2e} (< 1e-6)"
        ),
    );
    assert!(pass);
}

/// Criterion 5: a 1-degree theta sweep of the 2:1 parallelogram at T=10000
/// and spacing 0.1 exposes at least three strict local maxima, and the same
/// sweep at T=10 has strictly fewer (the relaxation smooths the surface).
#[test]
fn c5_theta_sweep_multimodality() {
    let para = normalize(
        &validate(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.5, 1.0),
            Vec2::new(0.5, 1.0),
        ])
        .unwrap(),
    );
    let field = TransectField::new(0.1, 0.0).unwrap();
    let count_maxima = |temperature: f64| {
        let params = ScoreParams::new(0.5, 0.5, temperature, 1000).unwrap();
        let sweep: Vec<f64> = (0..180)
            .into_par_iter()
            .map(|k| {
                let theta = k as f64 * std::f64::consts::PI / 180.0;
                soft_score(&rotate(&para.edges, theta), &field, &params).fitness
            })
            .collect();
        let n = sweep.len();
        (0..n)
            .filter(|&k| {
                sweep[k] > sweep[(k + n - 1) % n] && sweep[k] > sweep[(k + 1) % n]
            })
            .count()
    };
    let hot = count_maxima(10_000.0);
    let cold = count_maxima(10.0);
    let pass = hot >= 3 && cold < hot;
    verdict(
        5,
        "sweep multimodality",
        pass,
        &format!("{hot} strict local maxima at T=10000 (need >= 3), {cold} at T=10 (need < {hot})"),
    );
    assert!(pass);
}

/// Criterion 6: over 100 random polygons at default settings, grid search
/// beats gradient ascent from a random init on average (positive mean gap),
/// while the hybrid never reports below the grid on any polygon (within
/// 1e-9).
#[test]
fn c6_grid_beats_random_init_descent() {
    let field = TransectField::new(0.1, 0.0).unwrap();
    let params = ScoreParams::new(0.5, 0.5, 1000.0, 1000).unwrap();
    let cfg = OptimizerConfig::default();
    let rows: Vec<(f64, f64)> = (0..100u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(60_000 + k);
            let n = rng.gen_range(3..10);
            let poly = random_norm(rng.gen::<u64>(), n);
            let grid = grid_search(&poly, &field, &params, &cfg);
            let init = (
                rng.gen::<f64>() * std::f64::consts::PI,
                (rng.gen::<f64>() - 0.5) * field.spacing(),
            );
            let gd = gradient_ascent(&poly, &field, &params, &cfg, init).unwrap();
            let hyb = hybrid(&poly, &field, &params, &cfg).unwrap();
            (
                grid.best_fitness - gd.best_fitness,
                hyb.best_fitness - grid.best_fitness,
            )
        })
        .collect();
    let mean_gap = rows.iter().map(|r| r.0).sum::<f64>() / rows.len() as f64;
    let hybrid_regression = rows
        .iter()
        .map(|r| r.1)
        .fold(f64::INFINITY, f64::min);
    let pass = mean_gap > 0.0 && hybrid_regression >= -1e-9;
    verdict(
        6,
        "grid vs gradient descent",
        pass,
        &format!(
            "mean(grid - GD) = {mean_gap:.5} (> 0), min(hybrid - grid) = {hybrid_regression:.1e} (>= -1e-9)"
        ),
    );
    assert!(pass);
}

/// Criterion 7: every experiment subcommand, run twice with the same seed
/// but different --threads, produces byte-identical output.
#[test]
fn c7_outputs_are_thread_count_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let poly_path = dir.path().join("poly.json");
    let gen = Command::new(env!("CARGO_BIN_EXE_boustro"))
        .args(["genpoly", "--seed", "21", "--sides", "7", "--out"])
        .arg(&poly_path)
        .output()
        .unwrap();
    assert!(gen.status.success());
    let poly = poly_path.to_str().unwrap();

    let cases: Vec<Vec<&str>> = vec![
        vec!["parity", "--samples", "20", "--seed", "5"],
        vec![
            "gridvsgd", "--samples", "6", "--seed", "9", "--grid-theta", "10",
            "--grid-offset", "4", "--iters", "30", "--ppt", "300",
        ],
        vec!["surface", "--polygon", poly, "--samples", "8", "--ppt", "200"],
        vec![
            "surface", "--polygon", poly, "--samples", "6", "--ppt", "200",
            "--anneal", "10,10000,4",
        ],
        vec![
            "optimize", "--polygon", poly, "--grid-theta", "8", "--grid-offset", "3",
            "--iters", "20", "--ppt", "200", "--seed", "3",
        ],
        vec!["genpoly", "--seed", "77"],
        vec!["score", "--polygon", poly, "--spacing", "0.15", "--ppt", "300"],
    ];

    let mut mismatches: Vec<String> = Vec::new();
    for case in &cases {
        let run = |threads: &str| {
            let out = Command::new(env!("CARGO_BIN_EXE_boustro"))
                .args(case)
                .args(["--threads", threads])
                .output()
                .unwrap();
            assert!(
                out.status.success(),
                "{case:?} failed: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            out.stdout
        };
        if run("1") != run("4") {
            mismatches.push(case.join(" "));
        }
    }
    let pass = mismatches.is_empty();
    verdict(
        7,
        "thread-count determinism",
        pass,
        &if pass {
            format!("{} subcommand invocations byte-identical at --threads 1 vs 4", cases.len())
        } else {
            format!("outputs differ for: {}", mismatches.join(" | "))
        },
    );
    assert!(pass);
}
