use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rollfly_core::analysis::calibration::{
    calibrate, CALIBRATED_DISK_RADIUS, CALIBRATION_CRR, DISK_RADIUS_BAND, TARGET_FLYING_RANGE, TARGET_ROLLING_RANGE,
};
use rollfly_core::analysis::{log_spaced, SweepAxis};
use rollfly_core::params::validate_setup;
use rollfly_core::sim::{analytic_power, energy_audit, parse_config, run};
use rollfly_core::{advantage_map, coverage_area, range_curve, Mode, Preset, Setup};
use serde_json::json;

use crate::args::{
    AdvantageMapArgs, CalibrateArgs, Command, CoverageArgs, ModelArgs, PresetArg, RangeCurveArgs, ReplayArgs,
    SimulateArgs,
};
use crate::error::{CliError, CliResult};
use crate::manifest::{read_manifest, sibling, write_file, write_json, Artifacts, FileRecord};

/// Runs one command and writes its manifest.
pub fn execute(command: &Command) -> CliResult<()> {
    let artifacts = match command {
        Command::RangeCurve(a) => range_curve_cmd(a)?,
        Command::AdvantageMap(a) => advantage_map_cmd(a)?,
        Command::Simulate(a) => {
            let text = fs::read_to_string(&a.config).map_err(|e| CliError::io(&a.config, e))?;
            simulate_cmd(a, &text)?
        }
        Command::Coverage(a) => match coverage_cmd(a)? {
            Some(artifacts) => artifacts,
            None => return Ok(()),
        },
        Command::Calibrate(a) => calibrate_cmd(a)?,
        Command::Replay(a) => return replay_cmd(a),
    };
    artifacts.write_manifest(command)?;
    for p in &artifacts.outputs {
        info!("wrote {}", p.display());
    }
    Ok(())
}

fn num(x: f64) -> String {
    x.to_string()
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::Validation(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Validation(e.to_string()))
}

fn model_setup(model: &ModelArgs, preset: Preset, slope: f64, crr: f64) -> CliResult<Setup> {
    if model.phase_samples == 0 {
        return Err(CliError::Validation("--phase-samples must be at least 1".into()));
    }
    let setup = preset.setup().with_disk_radius(model.disk_radius);
    validate_setup(&setup.clone().with_terrain(slope, crr))?;
    Ok(setup)
}

fn check_finite(name: &str, x: f64) -> CliResult<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{name} must be finite")))
    }
}

fn range_curve_cmd(a: &RangeCurveArgs) -> CliResult<Artifacts> {
    check_finite("--slope-deg", a.slope_deg)?;
    let slope = a.slope_deg.to_radians();
    let mode = Mode::from(a.mode);
    let preset = a.model.preset.for_mode(mode);
    let setup = model_setup(&a.model, preset, slope, a.crr)?;
    if !(a.v_min > 0.0 && a.v_max > a.v_min && a.v_max.is_finite()) {
        return Err(CliError::Validation(format!(
            "speed bounds must satisfy 0 < --v-min < --v-max, got {} and {}",
            a.v_min, a.v_max
        )));
    }
    if a.points < 2 {
        return Err(CliError::Validation("--points must be at least 2".into()));
    }
    let opts = a.model.power_options();
    let speeds = log_spaced(a.v_min, a.v_max, a.points);
    let curve = range_curve(mode, slope, a.crr, &speeds, &setup, &opts)?;
    let best = curve.optimum.ok_or(rollfly_core::Error::NoFeasibleVelocity)?;
    info!("{mode}: v* = {} m/s, R* = {} km", best.speed, best.range / 1e3);

    let rows = curve.samples.iter().map(|s| {
        vec![
            num(s.speed),
            num(s.power),
            num(s.range / 1e3),
            num(s.tilt.to_degrees()),
            num(s.torque),
            num(s.thrust),
            s.is_feasible().to_string(),
        ]
    });
    let header = [
        "v_mps",
        "power_W",
        "range_km",
        "tilt_deg",
        "torque_Nm",
        "thrust_N",
        "feasible",
    ];
    let sidecar = sibling(&a.out, ".json");
    let summary = json!({
        "mode": mode,
        "preset": preset,
        "slope_deg": a.slope_deg,
        "crr": a.crr,
        "disk_radius_m": a.model.disk_radius,
        "v_opt_mps": best.speed,
        "range_opt_km": best.range / 1e3,
        "power_opt_W": best.power,
        "grid_v_opt_mps": best.grid_speed,
        "grid_range_opt_km": best.grid_range / 1e3,
    });
    write_file(&a.out, &csv_bytes(&header, rows)?)?;
    write_json(&sidecar, &summary)?;
    Ok(Artifacts {
        manifest_path: sibling(&a.out, ".manifest.json"),
        resolved: json!({
            "setup": setup,
            "rolling_power": opts,
            "slope_rad": slope,
            "speeds_mps": speeds,
        }),
        inputs: vec![],
        outputs: vec![a.out.clone(), sidecar],
    })
}

fn titan_pair(model: &ModelArgs) -> CliResult<()> {
    if model.preset != PresetArg::Titan {
        return Err(CliError::Validation(
            "this command compares both modes and needs --preset titan".into(),
        ));
    }
    Ok(())
}

fn advantage_map_cmd(a: &AdvantageMapArgs) -> CliResult<Artifacts> {
    titan_pair(&a.model)?;
    for (name, x) in [
        ("--slope-min-deg", a.slope_min_deg),
        ("--slope-max-deg", a.slope_max_deg),
        ("--crr-min", a.crr_min),
        ("--crr-max", a.crr_max),
    ] {
        check_finite(name, x)?;
    }
    if a.resolution == 0 {
        return Err(CliError::Validation("--resolution must be at least 1".into()));
    }
    if a.slope_max_deg < a.slope_min_deg || a.crr_max < a.crr_min {
        return Err(CliError::Validation("axis maxima must not be below the minima".into()));
    }
    let slopes = SweepAxis::new(a.slope_min_deg.to_radians(), a.slope_max_deg.to_radians(), a.resolution);
    let crrs = SweepAxis::new(a.crr_min, a.crr_max, a.resolution);
    model_setup(&a.model, Preset::TitanTable1Roll, slopes.min, crrs.min)?;
    let roll = model_setup(&a.model, Preset::TitanTable1Roll, slopes.max, crrs.max)?;
    let fly = model_setup(&a.model, Preset::TitanTable1Fly, slopes.max, crrs.max)?;
    let opts = a.model.power_options();
    let grid = advantage_map(&slopes, &crrs, &roll, &fly, &opts)?;
    info!("{} cells, {} crossover points", grid.cells.len(), grid.crossover.len());

    let rows = grid.cells.iter().map(|c| {
        vec![
            num(c.slope.to_degrees()),
            num(c.rolling_resistance),
            num(c.rolling_speed),
            num(c.rolling_range / 1e3),
            num(c.flying_speed),
            num(c.flying_range / 1e3),
            num(c.delta_range / 1e3),
        ]
    });
    let header = [
        "slope_deg",
        "crr",
        "rolling_v_mps",
        "rolling_range_km",
        "flying_v_mps",
        "flying_range_km",
        "delta_range_km",
    ];
    let crossover_path = sibling(&a.out, "_crossover.csv");
    let crossover = grid.crossover.iter().map(|&(s, c)| vec![num(s.to_degrees()), num(c)]);
    write_file(&a.out, &csv_bytes(&header, rows)?)?;
    write_file(&crossover_path, &csv_bytes(&["slope_deg", "crr"], crossover)?)?;
    Ok(Artifacts {
        manifest_path: sibling(&a.out, ".manifest.json"),
        resolved: json!({
            "rolling_setup": roll,
            "flying_setup": fly,
            "rolling_power": opts,
            "slopes_rad": grid.slopes,
            "crrs": grid.rolling_resistances,
        }),
        inputs: vec![],
        outputs: vec![a.out.clone(), crossover_path],
    })
}

fn simulate_cmd(a: &SimulateArgs, text: &str) -> CliResult<Artifacts> {
    let base = a.config.parent().unwrap_or(Path::new("."));
    let config = parse_config(text, base)?;
    config.validate()?;
    let analytic = analytic_power(&config)?;
    let log = run(&config)?;
    let audit = energy_audit(&log, &config.setup.vehicle, &config.setup.env).with_analytic(analytic);
    info!(
        "mean power {} W over the window, closure {:e}",
        audit.window_mean_power_w, audit.closure_relative
    );

    let log_path = a.out.join("log.csv");
    let audit_path = a.out.join("audit.json");
    let mut csv = Vec::new();
    log.write_csv(&mut csv)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    write_file(&log_path, &csv)?;
    write_json(&audit_path, &audit)?;
    let mut inputs = vec![];
    if a.config.exists() {
        inputs.push(a.config.clone());
    }
    Ok(Artifacts {
        manifest_path: a.out.join("manifest.json"),
        resolved: json!({ "config_text": text, "config": config }),
        inputs,
        outputs: vec![log_path, audit_path],
    })
}

fn coverage_cmd(a: &CoverageArgs) -> CliResult<Option<Artifacts>> {
    if !(a.range_km.is_finite() && a.range_km >= 0.0) {
        return Err(CliError::Validation(format!(
            "--range-km must be a nonnegative distance, got {}",
            a.range_km
        )));
    }
    let area_km2 = coverage_area(a.range_km * 1e3) / 1e6;
    let body = json!({ "range_km": a.range_km, "area_km2": area_km2 });
    println!("{}", serde_json::to_string(&body).expect("json value"));
    let Some(out) = &a.out else {
        return Ok(None);
    };
    write_json(out, &body)?;
    Ok(Some(Artifacts {
        manifest_path: sibling(out, ".manifest.json"),
        resolved: json!({ "range_m": a.range_km * 1e3 }),
        inputs: vec![],
        outputs: vec![out.clone()],
    }))
}

fn calibrate_cmd(a: &CalibrateArgs) -> CliResult<Artifacts> {
    if a.steps == 0 || a.phase_samples == 0 {
        return Err(CliError::Validation(
            "--steps and --phase-samples must be at least 1".into(),
        ));
    }
    let model = ModelArgs {
        preset: PresetArg::Titan,
        disk_radius: CALIBRATED_DISK_RADIUS,
        airflow: a.airflow,
        phase_samples: a.phase_samples,
    };
    let opts = model.power_options();
    let (roll, fly) = (Preset::TitanTable1Roll.setup(), Preset::TitanTable1Fly.setup());
    let cal = calibrate(&roll, &fly, a.steps, &opts)?;
    info!("best disk radius {} m (cost {})", cal.best.disk_radius, cal.best.cost);

    let header = [
        "disk_radius_m",
        "rolling_v_mps",
        "rolling_range_km",
        "flying_v_mps",
        "flying_range_km",
        "rolling_log_residual",
        "flying_log_residual",
        "cost",
    ];
    let rows = cal.points.iter().map(|p| {
        vec![
            num(p.disk_radius),
            num(p.rolling_speed),
            num(p.rolling_range / 1e3),
            num(p.flying_speed),
            num(p.flying_range / 1e3),
            num(p.rolling_residual),
            num(p.flying_residual),
            num(p.cost),
        ]
    });
    let summary_path = sibling(&a.out, ".json");
    let b = &cal.best;
    let summary = json!({
        "disk_radius_band_m": [DISK_RADIUS_BAND.0, DISK_RADIUS_BAND.1],
        "steps": a.steps,
        "crr": CALIBRATION_CRR,
        "target_rolling_range_km": TARGET_ROLLING_RANGE / 1e3,
        "target_flying_range_km": TARGET_FLYING_RANGE / 1e3,
        "best_disk_radius_m": b.disk_radius,
        "rolling_v_mps": b.rolling_speed,
        "rolling_range_km": b.rolling_range / 1e3,
        "flying_v_mps": b.flying_speed,
        "flying_range_km": b.flying_range / 1e3,
        "rolling_log_residual": b.rolling_residual,
        "flying_log_residual": b.flying_residual,
        "cost": b.cost,
    });
    write_file(&a.out, &csv_bytes(&header, rows)?)?;
    write_json(&summary_path, &summary)?;
    Ok(Artifacts {
        manifest_path: sibling(&a.out, ".manifest.json"),
        resolved: json!({ "rolling_setup": roll, "flying_setup": fly, "rolling_power": opts }),
        inputs: vec![],
        outputs: vec![a.out.clone(), summary_path],
    })
}

fn redirect(path: &Path, dir: &Path) -> PathBuf {
    dir.join(path.file_name().unwrap_or(path.as_os_str()))
}

fn replay_cmd(a: &ReplayArgs) -> CliResult<()> {
    let manifest = read_manifest(&a.manifest)?;
    let dir = &a.out_dir;
    let mut command = manifest.arguments.clone();
    let artifacts = match &mut command {
        Command::RangeCurve(c) => {
            c.out = redirect(&c.out, dir);
            range_curve_cmd(c)?
        }
        Command::AdvantageMap(c) => {
            c.out = redirect(&c.out, dir);
            advantage_map_cmd(c)?
        }
        Command::Simulate(c) => {
            let text = manifest
                .resolved
                .get("config_text")
                .and_then(|t| t.as_str())
                .ok_or_else(|| CliError::Validation("manifest has no config_text".into()))?
                .to_string();
            for input in &manifest.inputs {
                let path = Path::new(&input.path);
                if path.exists() && FileRecord::of(path)?.sha256 != input.sha256 {
                    log::warn!(
                        "{} changed since the recorded run; replaying the recorded text",
                        input.path
                    );
                }
            }
            c.out = dir.clone();
            simulate_cmd(c, &text)?
        }
        Command::Coverage(c) => {
            c.out = Some(redirect(c.out.as_deref().unwrap_or(Path::new("coverage.json")), dir));
            coverage_cmd(c)?.expect("output requested")
        }
        Command::Calibrate(c) => {
            c.out = redirect(&c.out, dir);
            calibrate_cmd(c)?
        }
        Command::Replay(_) => return Err(CliError::Validation("cannot replay a replay".into())),
    };
    let fresh = artifacts.write_manifest(&command)?;

    let mut mismatched = Vec::new();
    for old in &manifest.outputs {
        let name = old.file_name();
        match fresh.outputs.iter().find(|n| n.file_name() == name) {
            Some(new) if new.sha256 == old.sha256 => println!("match    {name} {}", new.sha256),
            Some(new) => {
                println!("MISMATCH {name} {} != {}", new.sha256, old.sha256);
                mismatched.push(name);
            }
            None => {
                println!("MISSING  {name}");
                mismatched.push(name);
            }
        }
    }
    if mismatched.is_empty() {
        Ok(())
    } else {
        Err(CliError::Mismatch(mismatched.join(", ")))
    }
}
