//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rollfly_core::analysis::calibration::{calibrated_setups, CALIBRATED_DISK_RADIUS, DISK_RADIUS_BAND};
use rollfly_core::analysis::steady_state;
use rollfly_core::dynamics::{flying_derivatives, newton_euler, rolling_derivatives_with_contact};
use rollfly_core::geometry::skew;
use rollfly_core::power::{glauert_residual, induced_velocity, RollingPowerOptions};
use rollfly_core::sim::{
    analytic_power, energy_audit, load_config, run, step, ContactMode, Integrator, SimConfig, Terrain,
};
use rollfly_core::{
    allocate, allocation_matrix, rotation_about_y, ContactInfo, Mode, RateControllerState, RigidBodyState, Rotation,
    RotorSpeeds, Vec3, Wrench,
};

const ROLL_V_BAND: (f64, f64) = (0.07, 0.28);
const ROLL_RANGE_KM: f64 = 267.0;
const FLY_V_BAND: (f64, f64) = (1.0, 2.9);
const FLY_RANGE_KM: f64 = 135.0;
const RANGE_TOLERANCE: f64 = 0.35;
const RATIO_BAND: (f64, f64) = (1.5, 2.6);
const CORNER_DELTA_KM: f64 = 200.0;
const CORNER_TOLERANCE: f64 = 0.5;
const MAP_RESOLUTION: usize = 25;
const MAP_BUDGET: Duration = Duration::from_secs(60);
const SIM_POINTS: usize = 20;
const SIM_DURATION: f64 = 600.0;
const SIM_TOLERANCE: f64 = 0.02;
const SIM_BUDGET: Duration = Duration::from_secs(300);
const CONSERVATIVE_CLOSURE: f64 = 1e-3;
const SCENARIO_CLOSURE: f64 = 5e-3;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn rollfly(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rollfly"))
        .args(args)
        .output()
        .expect("run rollfly")
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("read json")).expect("parse json")
}

fn within(x: f64, (lo, hi): (f64, f64)) -> bool {
    x >= lo && x <= hi
}

fn relative_band(target: f64, tol: f64) -> (f64, f64) {
    (target * (1.0 - tol), target * (1.0 + tol))
}

/// (v*, R* in km) from the range-curve sidecar.
fn cli_optimum(dir: &Path, mode: &str) -> Option<(f64, f64)> {
    let out = dir.join(format!("{mode}.csv"));
    let status = rollfly(&[
        "range-curve",
        "--mode",
        mode,
        "--slope-deg",
        "0",
        "--crr",
        "0.01",
        "--out",
        out.to_str()?,
    ]);
    if !status.status.success() {
        return None;
    }
    let j = read_json(&dir.join(format!("{mode}.json")));
    Some((j["v_opt_mps"].as_f64()?, j["range_opt_km"].as_f64()?))
}

fn ac1(dir: &Path) -> Verdict {
    let (Some((vr, rr)), Some((vf, rf))) = (cli_optimum(dir, "roll"), cli_optimum(dir, "fly")) else {
        return verdict(false, "range-curve failed".into());
    };
    let committed = read_json(&workspace().join("calibration/disk_radius_scan.json"));
    let best = committed["best_disk_radius_m"].as_f64().unwrap_or(f64::NAN);
    let cal_ok = best == CALIBRATED_DISK_RADIUS && within(best, DISK_RADIUS_BAND);
    let checks = [
        within(vr, ROLL_V_BAND),
        within(rr, relative_band(ROLL_RANGE_KM, RANGE_TOLERANCE)),
        within(vf, FLY_V_BAND),
        within(rf, relative_band(FLY_RANGE_KM, RANGE_TOLERANCE)),
        cal_ok,
    ];
    verdict(
        checks.iter().all(|&c| c),
        format!(
            "r_disk = {best} m committed {}; rolling v* = {vr:.4} m/s {} R* = {rr:.1} km {}; flying v* = {vf:.4} m/s {} R* = {rf:.1} km {}",
            ok(cal_ok),
            ok(checks[0]),
            ok(checks[1]),
            ok(checks[2]),
            ok(checks[3])
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "[ok]"
    } else {
        "[out]"
    }
}

fn ac2(dir: &Path) -> Verdict {
    let (Some((vr, rr)), Some((vf, rf))) = (cli_optimum(dir, "roll"), cli_optimum(dir, "fly")) else {
        return verdict(false, "range-curve failed".into());
    };
    let ratio = rr / rf;
    let ratio_ok = within(ratio, RATIO_BAND);
    let order_ok = vr < vf;
    verdict(
        ratio_ok && order_ok,
        format!(
            "R_roll/R_fly = {ratio:.3} {}; v*_roll = {vr:.4} < v*_fly = {vf:.4} {}",
            ok(ratio_ok),
            ok(order_ok)
        ),
    )
}

fn ac3(dir: &Path) -> Verdict {
    let out = dir.join("map.csv");
    let res = MAP_RESOLUTION.to_string();
    let start = Instant::now();
    let status = rollfly(&["advantage-map", "--resolution", &res, "--out", out.to_str().unwrap()]);
    let elapsed = start.elapsed();
    if !status.status.success() {
        return verdict(
            false,
            format!("advantage-map failed: {}", String::from_utf8_lossy(&status.stderr)),
        );
    }
    let mut reader = csv::Reader::from_path(&out).expect("map csv");
    let rows: Vec<Vec<f64>> = reader
        .records()
        .map(|r| r.expect("record").iter().map(|x| x.parse().expect("number")).collect())
        .collect();
    let n = MAP_RESOLUTION;
    let delta = |i: usize, j: usize| rows[i * n + j][6];
    let corner = delta(0, 0);
    let corner_ok =
        rows[0][0] == -0.5 && rows[0][1] == 0.01 && within(corner, relative_band(CORNER_DELTA_KM, CORNER_TOLERANCE));
    let negative = rows.iter().any(|r| r[6] < 0.0);
    let mut violations = 0;
    for i in 0..n {
        for j in 0..n {
            if i + 1 < n && delta(i + 1, j) > delta(i, j) {
                violations += 1;
            }
            if j + 1 < n && delta(i, j + 1) > delta(i, j) {
                violations += 1;
            }
        }
    }
    let time_ok = elapsed <= MAP_BUDGET;
    verdict(
        rows.len() == n * n && corner_ok && negative && violations == 0 && time_ok,
        format!(
            "corner dR = {corner:.1} km {}; dR < 0 present {}; monotonicity violations {violations} {}; {:.1} s {}",
            ok(corner_ok),
            ok(negative),
            ok(violations == 0),
            elapsed.as_secs_f64(),
            ok(time_ok)
        ),
    )
}

struct SimPoint {
    mode: Mode,
    speed: f64,
    slope: f64,
    crr: f64,
}

fn sim_points() -> Vec<SimPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..SIM_POINTS)
        .map(|_| {
            let mode = if rng.random_bool(0.5) {
                Mode::Rolling
            } else {
                Mode::Flying
            };
            let speed = match mode {
                Mode::Rolling => rng.random_range(0.05..0.5),
                Mode::Flying => rng.random_range(0.3..1.3),
            };
            SimPoint {
                mode,
                speed,
                slope: rng.random_range(-0.5f64..2.0).to_radians(),
                crr: rng.random_range(0.01..0.2),
            }
        })
        .collect()
}

fn ac4() -> Verdict {
    let (roll, fly) = calibrated_setups();
    let start = Instant::now();
    let errors: Vec<Result<f64, String>> = sim_points()
        .par_iter()
        .map(|p| {
            let setup = if p.mode == Mode::Rolling {
                roll.clone()
            } else {
                fly.clone()
            };
            let mut c = SimConfig::steady(setup, p.mode, p.speed, p.slope, p.crr, SIM_DURATION);
            if p.mode == Mode::Rolling {
                c.rate_controller = RateControllerState::new(0.5, 0.5, 2.0);
            }
            let reference = steady_state(
                p.mode,
                p.speed,
                p.slope,
                p.crr,
                &c.setup,
                &RollingPowerOptions::default(),
            )
            .map_err(|e| e.to_string())?;
            if !reference.is_feasible() {
                return Err(format!("{} at {} m/s infeasible in the analysis", p.mode, p.speed));
            }
            let log = run(&c).map_err(|e| e.to_string())?;
            Ok((log.mean_power_since(c.averaging_start) - reference.power) / reference.power)
        })
        .collect();
    let elapsed = start.elapsed();
    let worst = errors
        .iter()
        .map(|e| e.as_ref().map_or(f64::INFINITY, |x| x.abs()))
        .fold(0.0, f64::max);
    let failures: Vec<&String> = errors.iter().filter_map(|e| e.as_ref().err()).collect();
    let time_ok = elapsed <= SIM_BUDGET;
    verdict(
        failures.is_empty() && worst < SIM_TOLERANCE && time_ok,
        format!(
            "{SIM_POINTS} points, worst |dP/P| = {:.3}% {}; {} run errors {:?}; {:.1} s {}",
            worst * 100.0,
            ok(worst < SIM_TOLERANCE),
            failures.len(),
            failures,
            elapsed.as_secs_f64(),
            ok(time_ok)
        ),
    )
}

fn allocation_round_trip() -> f64 {
    let (roll, _) = calibrated_setups();
    let p = &roll.vehicle;
    let m = allocation_matrix(p);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..100_000 {
        let w = Wrench {
            thrust: rng.random_range(-8.0..8.0),
            torque: Vec3::new(
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.05..0.05),
            ),
        };
        let a = allocate(&w, p).expect("allocation");
        if a.saturated {
            return f64::INFINITY;
        }
        let back = m * a.pairs.as_vector();
        let err = (back[0] - w.thrust)
            .abs()
            .max((back.fixed_rows::<3>(1) - w.torque).amax());
        worst = worst.max(err);
    }
    worst
}

fn glauert_worst() -> f64 {
    let (_, fly) = calibrated_setups();
    let (rho, r) = (fly.env.air_density, fly.vehicle.disk_radius);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..1_000 {
        let f = rng.random_range(0.0..8.0);
        let v = rng.random_range(0.0..20.0);
        let a = rng.random_range(-1.5..1.5);
        let residual = match induced_velocity(f, v, a, rho, r) {
            Ok(nu) => glauert_residual(nu, f, v, a, rho, r).abs(),
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(residual);
    }
    worst
}

/// (conservative closure, worst closure over shipped scenarios, names).
fn closures() -> (f64, f64, Vec<String>) {
    let dir = workspace().join("scenarios");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .expect("scenarios dir")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    let results: Vec<(String, f64)> = paths
        .par_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            let closure = load_config(p)
                .and_then(|c| {
                    let log = run(&c)?;
                    let audit = energy_audit(&log, &c.setup.vehicle, &c.setup.env).with_analytic(analytic_power(&c)?);
                    Ok(audit.closure_relative.abs())
                })
                .unwrap_or(f64::INFINITY);
            (name, closure)
        })
        .collect();
    let conservative = results
        .iter()
        .find(|(n, _)| n == "conservative")
        .map_or(f64::INFINITY, |r| r.1);
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    (conservative, worst, results.into_iter().map(|r| r.0).collect())
}

fn reduction_identity() -> bool {
    let (roll, _) = calibrated_setups();
    let p = &roll.vehicle;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10_000 {
        let env = roll
            .env
            .with_terrain(rng.random_range(-0.5..0.5), rng.random_range(0.0..0.3));
        let s = RigidBodyState {
            position: Vec3::new(0.0, 0.0, p.shell_radius),
            velocity: Vec3::new(rng.random_range(-2.0..2.0), 0.0, rng.random_range(-1.0..1.0)),
            attitude: rotation_about_y(rng.random_range(-3.0..3.0)),
            body_rates: Vec3::new(0.0, rng.random_range(-2.0..2.0), 0.0),
        };
        let w = Wrench {
            thrust: rng.random_range(-3.0..3.0),
            torque: Vec3::new(0.0, rng.random_range(-0.3..0.3), 0.0),
        };
        let forced = ContactInfo {
            normal: env.terrain_normal(),
            reaction: Vec3::zeros(),
            in_contact: true,
        };
        let free = flying_derivatives(&s, &w, p, &env).expect("flying");
        if newton_euler(&s, &w, p, &env, &forced).expect("forced") != free {
            return false;
        }
        let (d, c) = rolling_derivatives_with_contact(&s, &w, p, &env, &env.terrain_normal()).expect("rolling");
        if !c.in_contact && d != free {
            return false;
        }
    }
    true
}

fn rk4_order() -> f64 {
    let (_, fly) = calibrated_setups();
    let p = &fly.vehicle;
    let kt = p.thrust_constant;
    let per = p.mass * fly.env.gravity / 4.0;
    let mut n = [0.0; 8];
    for (i, k) in [1.05, 1.05, 1.1, 1.1].iter().enumerate() {
        n[i] = (per * k / kt).sqrt();
    }
    let speeds = RotorSpeeds(n);
    let terrain = Terrain::flat(0.0, 0.0);
    let end = |dt: f64| {
        let mut s = RigidBodyState {
            position: Vec3::new(0.0, 0.0, 10.0),
            velocity: Vec3::new(1.0, 0.0, 0.2),
            attitude: rotation_about_y(0.3),
            body_rates: Vec3::new(0.0, 0.4, 0.0),
        };
        for _ in 0..(1.0 / dt).round() as usize {
            s = step(
                &s,
                &speeds,
                &terrain,
                p,
                &fly.env,
                dt,
                Integrator::Rk4,
                ContactMode::Free,
                false,
            )
            .expect("step")
            .state;
        }
        s
    };
    let ends: Vec<RigidBodyState> = [0.04, 0.02, 0.01].iter().map(|&dt| end(dt)).collect();
    let diff = |a: &RigidBodyState, b: &RigidBodyState| {
        ((a.position - b.position).norm_squared() + (a.velocity - b.velocity).norm_squared()).sqrt()
    };
    (diff(&ends[0], &ends[1]) / diff(&ends[1], &ends[2])).log2()
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Rotation {
    let axis = Vec3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    )
    .normalize();
    let angle = rng.random_range(-PI..PI);
    let k = skew(&axis);
    let m = Rotation::identity().matrix() + k * angle.sin() + k * k * (1.0 - angle.cos());
    Rotation::from_matrix_orthonormalized(m)
}

fn rotation_drift() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let pool: Vec<Rotation> = (0..64).map(|_| random_rotation(&mut rng)).collect();
    let mut acc = Rotation::identity();
    for i in 0..1_000_000 {
        acc = acc.compose(&pool[i % pool.len()]);
    }
    acc.orthonormality_error()
}

fn ac5() -> Verdict {
    let alloc = allocation_round_trip();
    let glauert = glauert_worst();
    let (conservative, scenarios, names) = closures();
    let reduction = reduction_identity();
    let order = rk4_order();
    let drift = rotation_drift();
    let checks = [
        alloc < 1e-9,
        glauert < 1e-10,
        conservative < CONSERVATIVE_CLOSURE,
        scenarios < SCENARIO_CLOSURE && !names.is_empty(),
        reduction,
        order >= 3.5,
        drift < 1e-9,
    ];
    verdict(
        checks.iter().all(|&c| c),
        format!(
            "allocation {alloc:.1e} {}; glauert {glauert:.1e} {}; closure conservative {conservative:.1e} {} shipped({}) {scenarios:.1e} {}; reduction {}; rk4 order {order:.2} {}; rotation drift {drift:.1e} {}",
            ok(checks[0]),
            ok(checks[1]),
            ok(checks[2]),
            names.len(),
            ok(checks[3]),
            ok(checks[4]),
            ok(checks[5]),
            ok(checks[6])
        ),
    )
}

fn sig4(x: f64) -> String {
    format!("{x:.3e}")
}

fn ac6() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for (range, expected) in [(130.0, 13_273.0), (260.0, 53_093.0)] {
        let out = rollfly(&["coverage", "--range-km", &range.to_string()]);
        let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap_or_default();
        let area = body["area_km2"].as_f64().unwrap_or(f64::NAN);
        let exact = PI * (range / 2.0) * (range / 2.0);
        let good = out.status.success() && sig4(area) == sig4(exact) && sig4(area) == sig4(expected);
        pass &= good;
        parts.push(format!("{range} km -> {area:.1} km2 {}", ok(good)));
    }
    verdict(pass, parts.join("; "))
}

fn main() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let dir = tmp.path();
    type Check<'a> = Box<dyn Fn() -> Verdict + 'a>;
    let criteria: [(&str, &str, Check); 6] = [
        ("AC1", "calibrated optima on flat ground", Box::new(|| ac1(dir))),
        (
            "AC2",
            "rolling/flying range ratio and speed order",
            Box::new(|| ac2(dir)),
        ),
        (
            "AC3",
            "advantage map corner, sign change, monotonicity",
            Box::new(|| ac3(dir)),
        ),
        ("AC4", "simulator vs steady-state mean power", Box::new(ac4)),
        ("AC5", "property suites", Box::new(ac5)),
        ("AC6", "coverage arithmetic", Box::new(ac6)),
    ];
    let mut failed = Vec::new();
    for (id, name, check) in criteria.iter() {
        let start = Instant::now();
        let v = check();
        println!(
            "{id} {} {name} ({:.1} s): {}",
            if v.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            v.detail
        );
        if !v.pass {
            failed.push(*id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing {}", failed.join(", "));
        std::process::exit(1);
    }
}
