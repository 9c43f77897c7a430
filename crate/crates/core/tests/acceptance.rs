//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p scangrasp --test acceptance`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scangrasp::control::{transition, try_transition, ControlState, UserEvent};
use scangrasp::ellipse::{distance_to_ellipse, fit_ellipse3};
use scangrasp::feedback::{quickhull, FeedbackState, Point2};
use scangrasp::geometry::{orthonormal_basis, Ellipse3, Plane, Point3, ShapeKind, Vec3};
use scangrasp::harness::{run_experiment, ExperimentSpec, ObjectSource, TrialRow};
use scangrasp::metrics::median;
use scangrasp::reconstruct::{principal_direction, reconstruct, ReconConfig, SeedPoints, ALPHA_MAX_DEG, SEED_COUNT};
use scangrasp::scan_sim::{ScanMode, VOLUME_Z_MIN};
use scangrasp::scene::{protocol_objects, Scene, SceneObject};
use scangrasp::trial::{lateral_pose, overshoot_scenario, run_trial, TrialConfig, Verdict};

const ELLIPSE_COUNT: usize = 500;
const ELLIPSE_SAMPLES: usize = 12;
const ELLIPSE_REL_TOL: f64 = 1e-6;
const ELLIPSE_BUDGET: Duration = Duration::from_secs(5);

const DISTANCE_PAIRS: usize = 1000;
const DENSE_SAMPLES: usize = 100_000;
const DISTANCE_TOL_MM: f64 = 1e-3;

const HULL_SETS: usize = 1000;
const HULL_MAX_POINTS: usize = 12;

const NOISELESS_REPS: usize = 5;
const NOISELESS_SIZE_TOL_MM: f64 = 0.5;
const NOISELESS_ORIENTATION_TOL_DEG: f64 = 0.5;
const NOISELESS_BUDGET: Duration = Duration::from_secs(30);

const NOISY_SIGMA_MM: f64 = 1.0;
const NOISY_TRIALS_PER_SHAPE: usize = 100;
const NOISY_MIN_ACCURACY_PCT: [(ShapeKind, f64); 3] =
    [(ShapeKind::Sphere, 90.0), (ShapeKind::Cylinder, 80.0), (ShapeKind::Cuboid, 75.0)];
const NOISY_SIZE_MAE_MM: f64 = 12.0;
const NOISY_ORIENTATION_MAE_DEG: f64 = 6.0;
const NOISY_BUDGET: Duration = Duration::from_secs(300);

const LATENCY_TRIALS_REPS: usize = 4;
const LATENCY_MEDIAN_MS: f64 = 150.0;

const ABLATION_PER_SHAPE: usize = 100;
const ABLATION_TILT_DEG: (f64, f64) = (20.0, 70.0);
const ABLATION_ORIENTATION_OK_DEG: f64 = 15.0;
const ABLATION_MIN_GAIN_PP: f64 = 20.0;
const SINGLE_LINE_OFFSETS_MM: [f64; 6] = [0.0, 4.0, 8.0, 12.0, 16.0, 20.0];

const SEED_SETS: usize = 500;
const DIRECTION_TOL_RAD: f64 = 1e-6;

fn report(n: usize, pass: bool, detail: String) -> bool {
    println!("criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Random ellipse in a random plane, with the major axis strictly longer.
fn random_ellipse(rng: &mut ChaCha8Rng) -> Ellipse3 {
    let a = rng.random_range(5.25..60.0);
    let b = rng.random_range(5.0..a / 1.05);
    let normal = random_unit(rng);
    let (u, v) = orthonormal_basis(&normal);
    let t = rng.random_range(0.0..2.0 * PI);
    let center = Vec3::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), rng.random_range(150.0..250.0));
    Ellipse3 { center, semi_major: a, semi_minor: b, plane_normal: normal, local_x_axis: u * t.cos() + v * t.sin() }
}

/// Sign conventions of a fitted ellipse are free: normal and major axis
/// may both flip. Pick the representative closest to `truth`.
fn align_signs(fit: &Ellipse3, truth: &Ellipse3) -> Ellipse3 {
    let mut e = *fit;
    if e.plane_normal.dot(&truth.plane_normal) < 0.0 {
        e.plane_normal = -e.plane_normal;
    }
    if e.local_x_axis.dot(&truth.local_x_axis) < 0.0 {
        e.local_x_axis = -e.local_x_axis;
    }
    e
}

/// Largest relative error over the 11 values. Vector components are
/// measured against the vector's norm so zero components stay meaningful.
fn ellipse_rel_error(fit: &Ellipse3, truth: &Ellipse3) -> f64 {
    let (g, w) = (fit.parameters(), truth.parameters());
    let scale = [truth.center.norm(); 3]
        .into_iter()
        .chain([truth.semi_major, truth.semi_minor])
        .chain([1.0; 6]);
    g.iter().zip(w).zip(scale).map(|((g, w), s)| (g - w).abs() / s).fold(0.0, f64::max)
}

fn criterion_1() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let truths: Vec<(Ellipse3, Vec<Point3>)> = (0..ELLIPSE_COUNT)
        .map(|_| {
            let e = random_ellipse(&mut rng);
            let pts = (0..ELLIPSE_SAMPLES).map(|_| e.point_at(rng.random_range(0.0..2.0 * PI))).collect();
            (e, pts)
        })
        .collect();
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut failures = 0;
    for (truth, pts) in &truths {
        match fit_ellipse3(pts) {
            Ok(fit) => {
                let err = ellipse_rel_error(&align_signs(&fit, truth), truth);
                worst = worst.max(err);
                if !(err < ELLIPSE_REL_TOL) {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    let took = start.elapsed();
    report(
        1,
        failures == 0 && took < ELLIPSE_BUDGET,
        format!("{ELLIPSE_COUNT} ellipses, worst relative error {worst:.2e}, {failures} over tolerance, {took:.2?}"),
    )
}

/// Minimum over a uniform parameter grid, then a second grid of the same
/// density across the two cells next to the best sample.
fn dense_distance(p: &Point3, e: &Ellipse3) -> f64 {
    let step = 2.0 * PI / DENSE_SAMPLES as f64;
    let d = |t: f64| (e.point_at(t) - p).norm();
    let best = (0..DENSE_SAMPLES).min_by(|&i, &j| d(i as f64 * step).total_cmp(&d(j as f64 * step))).unwrap();
    let t0 = best as f64 * step;
    let fine = 2.0 * step / 1000.0;
    (0..=1000).map(|k| d(t0 - step + k as f64 * fine)).fold(f64::INFINITY, f64::min)
}

fn criterion_2() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    let mut counts = [0usize; 4];
    for i in 0..DISTANCE_PAIRS {
        let e = random_ellipse(&mut rng);
        let (x, y, n) = (e.local_x_axis, e.local_y_axis(), e.plane_normal);
        let (a, b) = (e.semi_major, e.semi_minor);
        // Interior, exterior, near a quadrant seam, and off the plane.
        let kind = i % 4;
        counts[kind] += 1;
        let (u, v, h) = match kind {
            0 => {
                let (r, t) = (rng.random_range(0.0..0.99), rng.random_range(0.0..2.0 * PI));
                (a * r * t.cos(), b * r * t.sin(), 0.0)
            }
            1 => {
                let (r, t) = (rng.random_range(1.01..3.0), rng.random_range(0.0..2.0 * PI));
                (a * r * t.cos(), b * r * t.sin(), 0.0)
            }
            2 => {
                let eps = rng.random_range(-1e-3..1e-3);
                let along = rng.random_range(-1.5..1.5);
                if rng.random_bool(0.5) {
                    (a * along, eps, 0.0)
                } else {
                    (eps, b * along, 0.0)
                }
            }
            _ => {
                let t = rng.random_range(0.0..2.0 * PI);
                let r = rng.random_range(0.5..1.5);
                (a * r * t.cos(), b * r * t.sin(), rng.random_range(-10.0..10.0))
            }
        };
        let p = e.center + x * u + y * v + n * h;
        let err = (distance_to_ellipse(&p, &e) - dense_distance(&p, &e)).abs();
        worst = worst.max(err);
    }
    report(
        2,
        worst < DISTANCE_TOL_MM,
        format!("{DISTANCE_PAIRS} pairs (interior/exterior/seam/off-plane {counts:?}), worst gap {worst:.2e} mm"),
    )
}

fn orient(o: &Point2, a: &Point2, b: &Point2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(p: &Point2, a: &Point2, b: &Point2) -> bool {
    orient(a, b, p) == 0.0
        && p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

fn in_triangle(p: &Point2, a: &Point2, b: &Point2, c: &Point2) -> bool {
    let (d1, d2, d3) = (orient(a, b, p), orient(b, c, p), orient(c, a, p));
    let neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(neg && pos)
}

/// Extreme points: a point is a hull vertex unless it lies in a closed
/// triangle or segment spanned by the other distinct points.
fn brute_hull(points: &[Point2]) -> Vec<Point2> {
    let mut uniq: Vec<Point2> = Vec::new();
    for p in points {
        if !uniq.contains(p) {
            uniq.push(*p);
        }
    }
    let mut out = Vec::new();
    for (i, p) in uniq.iter().enumerate() {
        let others: Vec<&Point2> = uniq.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, q)| q).collect();
        let mut covered = false;
        'search: for a in 0..others.len() {
            for b in a + 1..others.len() {
                if on_segment(p, others[a], others[b]) {
                    covered = true;
                    break 'search;
                }
                for c in b + 1..others.len() {
                    if orient(others[a], others[b], others[c]) != 0.0 && in_triangle(p, others[a], others[b], others[c]) {
                        covered = true;
                        break 'search;
                    }
                }
            }
        }
        if !covered {
            out.push(*p);
        }
    }
    out.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    out
}

fn criterion_3() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut mismatches = 0;
    let mut degenerate = 0;
    for _ in 0..HULL_SETS {
        let n = rng.random_range(1..=HULL_MAX_POINTS);
        // A small integer grid gives exact duplicates and collinear runs.
        let grid = rng.random_range(2..=8) as f64;
        let pts: Vec<Point2> = (0..n)
            .map(|_| [rng.random_range(0.0..=grid).round(), rng.random_range(0.0..=grid).round()])
            .collect();
        let want = brute_hull(&pts);
        if want.len() < 3 {
            degenerate += 1;
        }
        let mut got = match quickhull(&pts) {
            Ok(h) => h.vertices,
            Err(_) => {
                mismatches += 1;
                continue;
            }
        };
        got.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        if got != want {
            mismatches += 1;
        }
    }
    report(3, mismatches == 0, format!("{HULL_SETS} sets ({degenerate} degenerate), {mismatches} mismatches"))
}

fn worst<'a>(rows: impl Iterator<Item = &'a TrialRow>, f: impl Fn(&TrialRow) -> Option<f64>) -> f64 {
    rows.filter_map(f).fold(0.0, f64::max)
}

fn criterion_4() -> bool {
    let spec = ExperimentSpec { reps: NOISELESS_REPS, noise_sigma: Some(0.0), seed: 4, ..ExperimentSpec::new(ObjectSource::Protocol) };
    let start = Instant::now();
    let exp = run_experiment(&spec).expect("protocol experiment runs");
    let took = start.elapsed();
    let n = exp.rows.len();
    let correct = exp.rows.iter().filter(|r| r.correct).count();
    let size = worst(exp.rows.iter(), |r| r.size_error_mm);
    let ori = worst(exp.rows.iter(), |r| r.orientation_error_deg);
    let pass = correct == n
        && n == 50
        && size < NOISELESS_SIZE_TOL_MM
        && ori < NOISELESS_ORIENTATION_TOL_DEG
        && took < NOISELESS_BUDGET;
    report(4, pass, format!("{correct}/{n} correct, worst size {size:.3} mm, worst orientation {ori:.3} deg, {took:.2?}"))
}

/// Protocol objects laid out so every shape gets the same number of slots.
fn balanced_protocol_scenes() -> Vec<Scene> {
    let objects = protocol_objects();
    let of = |k: ShapeKind| objects.iter().filter(move |o| o.shape == k).copied();
    let spheres: Vec<SceneObject> = of(ShapeKind::Sphere).collect();
    spheres
        .iter()
        .chain(&spheres)
        .copied()
        .chain(of(ShapeKind::Cylinder))
        .chain(of(ShapeKind::Cuboid))
        .map(Scene::single)
        .collect()
}

fn criterion_5() -> bool {
    let scenes = balanced_protocol_scenes();
    let reps = NOISY_TRIALS_PER_SHAPE * ShapeKind::ALL.len() / scenes.len();
    let spec = ExperimentSpec {
        reps,
        noise_sigma: Some(NOISY_SIGMA_MM),
        seed: 5,
        mode: ScanMode::Cloud,
        ..ExperimentSpec::new(ObjectSource::Scenes { scenes })
    };
    let start = Instant::now();
    let exp = run_experiment(&spec).expect("noisy experiment runs");
    let took = start.elapsed();
    let mut pass = took < NOISY_BUDGET;
    let mut parts = Vec::new();
    let ok: Vec<&TrialRow> = exp.rows.iter().filter(|r| r.correct).collect();
    for (shape, min_pct) in NOISY_MIN_ACCURACY_PCT {
        let m = exp.report.shape(shape).expect("every shape ran");
        pass &= m.attempts == NOISY_TRIALS_PER_SHAPE && m.success_rate_pct >= min_pct;
        parts.push(format!("{shape} {:.1}% (>= {min_pct})", m.success_rate_pct));
    }
    let size: Vec<f64> = ok.iter().filter_map(|r| r.size_error_mm).collect();
    let ori: Vec<f64> = ok.iter().filter_map(|r| r.orientation_error_deg).collect();
    let size_mae = size.iter().sum::<f64>() / size.len() as f64;
    let ori_mae = ori.iter().sum::<f64>() / ori.len() as f64;
    pass &= size_mae <= NOISY_SIZE_MAE_MM && ori_mae <= NOISY_ORIENTATION_MAE_DEG;
    report(
        5,
        pass,
        format!("{}, size MAE {size_mae:.2} mm, orientation MAE {ori_mae:.2} deg, {took:.2?}", parts.join(", ")),
    )
}

fn criterion_6() -> bool {
    let spec = ExperimentSpec {
        reps: LATENCY_TRIALS_REPS,
        noise_sigma: Some(NOISY_SIGMA_MM),
        seed: 6,
        mode: ScanMode::Cloud,
        timing: true,
        ..ExperimentSpec::new(ObjectSource::Protocol)
    };
    let exp = run_experiment(&spec).expect("timed experiment runs");
    let times: Vec<f64> = exp.rows.iter().map(|r| r.elapsed_ms).collect();
    let med = median(&times);
    report(6, med < LATENCY_MEDIAN_MS, format!("median reconstruct {med:.1} ms over {} frames", times.len()))
}

fn ablation_rate(n_lines: usize) -> (f64, usize) {
    let spec = ExperimentSpec {
        n_lines,
        seed: 7,
        noise_sigma: Some(NOISY_SIGMA_MM),
        ..ExperimentSpec::new(ObjectSource::Random {
            shapes: vec![ShapeKind::Cylinder, ShapeKind::Cuboid],
            per_shape: ABLATION_PER_SHAPE,
            tilt_min_deg: ABLATION_TILT_DEG.0,
            tilt_max_deg: ABLATION_TILT_DEG.1,
            jitter_mm: 0.0,
        })
    };
    let exp = run_experiment(&spec).expect("ablation runs");
    let good = exp
        .rows
        .iter()
        .filter(|r| r.correct && r.orientation_error_deg.is_some_and(|e| e <= ABLATION_ORIENTATION_OK_DEG))
        .count();
    (100.0 * good as f64 / exp.rows.len() as f64, exp.rows.len())
}

/// Single-line rig aimed `dy` above a sphere centre: the horizontal cut
/// misses the equator.
fn single_line_sphere_error(dy: f64) -> f64 {
    let d = 70.0;
    let object = SceneObject::sphere(d, [0.0, 0.0, VOLUME_Z_MIN + 20.0 + d / 2.0]);
    let scene = Scene { sensor: lateral_pose(0.0, dy), ..Scene::single(object) };
    let scans = ScanMode::Analytic.scan(&scene, 1).expect("single-line scan");
    let cfg = ReconConfig { parallel: false, ..ReconConfig::default() };
    match reconstruct(&scans, &cfg).model() {
        Some(m) if m.kind() == ShapeKind::Sphere => (m.grasp_size() - d).abs(),
        _ => f64::INFINITY,
    }
}

fn criterion_7() -> bool {
    let (four, n4) = ablation_rate(4);
    let (two, n2) = ablation_rate(2);
    let errors: Vec<f64> = SINGLE_LINE_OFFSETS_MM.iter().map(|&dy| single_line_sphere_error(dy)).collect();
    let monotone = errors.windows(2).all(|w| w[1] > w[0]) && errors.iter().all(|e| e.is_finite());
    let pass = n4 >= 200 && n2 >= 200 && four - two >= ABLATION_MIN_GAIN_PP && monotone;
    let shown: Vec<String> = errors.iter().map(|e| format!("{e:.2}")).collect();
    report(
        7,
        pass,
        format!(
            "4 lines {four:.1}% vs 2 lines {two:.1}% over {n4} scenes; 1-line sphere size error vs offset {SINGLE_LINE_OFFSETS_MM:?} mm: [{}]",
            shown.join(", ")
        ),
    )
}

/// Corners and edge midpoints of a rectangle in a random plane.
fn rectangle_seeds(rng: &mut ChaCha8Rng) -> (Vec<Point3>, Plane, [Vec3; 2]) {
    let normal = random_unit(rng);
    let (p, q) = orthonormal_basis(&normal);
    let t = rng.random_range(0.0..2.0 * PI);
    let u = p * t.cos() + q * t.sin();
    let v = normal.cross(&u);
    let (w, h) = (rng.random_range(20.0..120.0), rng.random_range(20.0..120.0));
    let c = Vec3::new(rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0), rng.random_range(170.0..230.0));
    let pts = [(1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (-1.0, 1.0), (-1.0, 0.0), (-1.0, -1.0), (0.0, -1.0), (1.0, -1.0)]
        .iter()
        .map(|(a, b)| c + u * (a * w / 2.0) + v * (b * h / 2.0))
        .collect();
    (pts, Plane { point: c, normal }, [u, v])
}

/// Two silhouette lines of a cylinder, four seeds on each, at random
/// positions along the axis.
fn cylinder_seeds(rng: &mut ChaCha8Rng) -> (Vec<Point3>, Plane, [Vec3; 2]) {
    let normal = random_unit(rng);
    let (p, q) = orthonormal_basis(&normal);
    let t = rng.random_range(0.0..2.0 * PI);
    let axis = p * t.cos() + q * t.sin();
    let across = normal.cross(&axis);
    let r = rng.random_range(17.5..42.5);
    let half = rng.random_range(40.0..75.0);
    let c = Vec3::new(rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0), rng.random_range(170.0..230.0));
    let mut pts = Vec::new();
    for side in [-1.0, 1.0] {
        for _ in 0..SEED_COUNT / 2 {
            pts.push(c + axis * rng.random_range(-half..half) + across * (side * r));
        }
    }
    (pts, Plane { point: c, normal }, [axis, axis])
}

fn axis_gap_rad(d: &Vec3, truth: &Vec3) -> f64 {
    // Sign-free angle, computed from the cross product for precision near 0.
    d.cross(truth).norm().atan2(d.dot(truth).abs())
}

fn criterion_8() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for i in 0..SEED_SETS {
        let (pts, plane, dirs) = if i % 2 == 0 { rectangle_seeds(&mut rng) } else { cylinder_seeds(&mut rng) };
        let seeds = SeedPoints::new(&pts, plane).expect("seed ordering");
        match principal_direction(&seeds.points, ALPHA_MAX_DEG) {
            Ok(d) => {
                let gap = axis_gap_rad(&d, &dirs[0]).min(axis_gap_rad(&d, &dirs[1]));
                worst = worst.max(gap);
                if !(gap <= DIRECTION_TOL_RAD) {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    let constants = ALPHA_MAX_DEG == 10.0 && SEED_COUNT == 8 && ReconConfig::default().alpha_max_deg == 10.0;
    report(
        8,
        failures == 0 && constants,
        format!(
            "{SEED_SETS} seed sets, worst gap {worst:.2e} rad, {failures} failures; alpha_max {ALPHA_MAX_DEG} deg, {SEED_COUNT} seeds"
        ),
    )
}

fn criterion_9() -> bool {
    use ControlState::*;
    // Rows follow ControlState::ALL, columns UserEvent::KINDS:
    // lock_acquired, lock_lost, trigger_preshape, take_over, object_released, proportional_command.
    let expected: [[ControlState; 6]; 4] = [
        [Locked, Idle, Idle, Idle, Idle, Idle],
        [Locked, Idle, Preshaped, Locked, Locked, Locked],
        [Locked, Preshaped, Preshaped, DirectControl, Preshaped, Preshaped],
        [DirectControl, DirectControl, DirectControl, DirectControl, Idle, DirectControl],
    ];
    let mut mismatches = Vec::new();
    for (s, row) in ControlState::ALL.iter().zip(expected) {
        for (e, want) in UserEvent::KINDS.iter().zip(row) {
            let got = transition(*s, *e);
            if got != want {
                mismatches.push(format!("{}+{} -> {}", s.name(), e.name(), got.name()));
            }
        }
    }
    // Entry edges into DirectControl, over a sweep of command values too.
    let values = [-1.5, -1.0, -0.3, 0.0, 0.7, 1.0, 1.5];
    let events: Vec<UserEvent> = UserEvent::KINDS
        .iter()
        .copied()
        .chain(values.iter().map(|&value| UserEvent::ProportionalCommand { value }))
        .collect();
    let mut entries = Vec::new();
    for s in ControlState::ALL {
        for e in &events {
            if s != DirectControl && try_transition(s, *e) == Some(DirectControl) {
                entries.push((s, e.name()));
            }
        }
    }
    let only_preshaped = entries.iter().all(|(s, _)| *s == Preshaped) && !entries.is_empty();
    // Reachability from Idle without passing through Preshaped.
    let mut seen = vec![Idle];
    let mut frontier = vec![Idle];
    while let Some(s) = frontier.pop() {
        for e in &events {
            let t = transition(s, *e);
            if t != Preshaped && !seen.contains(&t) {
                seen.push(t);
                frontier.push(t);
            }
        }
    }
    let blocked = !seen.contains(&DirectControl);
    report(
        9,
        mismatches.is_empty() && only_preshaped && blocked,
        format!("24 pairs, mismatches {mismatches:?}, entries into direct_control {entries:?}"),
    )
}

fn single_channel(a: &[f64; 4]) -> Option<(usize, f64)> {
    let on: Vec<usize> = (0..4).filter(|&i| a[i] > 0.0).collect();
    (on.len() == 1).then(|| (on[0], a[on[0]]))
}

fn criterion_10() -> bool {
    let (scene, traj) = overshoot_scenario();
    let trace = run_trial(&scene, &traj, &TrialConfig::default()).expect("scenario runs");
    let states: Vec<&FeedbackState> = trace.frames.iter().map(|f| &f.feedback).collect();
    let pass = match states.as_slice() {
        [FeedbackState::Directional { amplitudes: a0 }, FeedbackState::Directional { amplitudes: a1 }, FeedbackState::Locked] => {
            match (single_channel(a0), single_channel(a1)) {
                (Some((c0, lo)), Some((c1, hi))) => c0 != c1 && hi > lo,
                _ => false,
            }
        }
        _ => false,
    } && trace.verdict == Verdict::Success;
    let shown: Vec<String> = trace
        .frames
        .iter()
        .map(|f| format!("{} {:?}", f.feedback.name(), f.amplitudes))
        .collect();
    report(10, pass, format!("{} -> verdict {}", shown.join(" -> "), trace.verdict.name()))
}

fn criterion_11() -> bool {
    let spec = ExperimentSpec {
        reps: 2,
        seed: 11,
        mode: ScanMode::Cloud,
        noise_sigma: Some(NOISY_SIGMA_MM),
        ..ExperimentSpec::new(ObjectSource::Random {
            shapes: ShapeKind::ALL.to_vec(),
            per_shape: 4,
            tilt_min_deg: 0.0,
            tilt_max_deg: 60.0,
            jitter_mm: 5.0,
        })
    };
    let first = run_experiment(&spec).and_then(|e| e.to_csv()).expect("first run");
    let second = run_experiment(&spec).and_then(|e| e.to_csv()).expect("second run");
    let (scene, traj) = overshoot_scenario();
    let cfg = TrialConfig { mode: ScanMode::Cloud, ..TrialConfig::default() };
    let noisy = Scene { noise_sigma: NOISY_SIGMA_MM, seed: 11, ..scene };
    let t1 = run_trial(&noisy, &traj, &cfg).expect("trace").to_csv(false);
    let t2 = run_trial(&noisy, &traj, &cfg).expect("trace").to_csv(false);
    report(
        11,
        first == second && t1 == t2,
        format!("experiment CSV {} bytes identical: {}, trace CSV identical: {}", first.len(), first == second, t1 == t2),
    )
}

fn main() {
    let criteria: [fn() -> bool; 11] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
        criterion_11,
    ];
    let failed = criteria.iter().filter(|c| !c()).count();
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
