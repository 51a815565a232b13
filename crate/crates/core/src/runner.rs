//! Command execution and artifact output: fixed-order CSV tables with
//! 17-significant-digit floats and a JSON manifest written for every run,
//! including failed ones.
//!
//! Exit status: 0 when all checks pass, 1 when a check fails, 2 on
//! configuration or runtime errors.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::balance::{conserved_integrals, residual, LawId};
use crate::config::{Command, RunConfig};
use crate::dynamics::{edge_band_ratio, simulate, Params, SolverConfig};
use crate::error::{KdvError, Result};
use crate::experiments::{epsilon_sweep, epsilon_sweep_dynamic, invariant_drift};
use crate::flow::column_slice;
use crate::spectral::{Field, Grid};
use crate::thresholds;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// One pass/fail entry of the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    /// Human-readable bound the value was compared against.
    pub threshold: String,
}

impl CheckResult {
    fn le(name: impl Into<String>, value: f64, bound: f64) -> Self {
        CheckResult {
            name: name.into(),
            passed: value <= bound,
            value,
            threshold: format!("<= {bound:e}"),
        }
    }

    fn ge(name: impl Into<String>, value: f64, bound: f64) -> Self {
        CheckResult {
            name: name.into(),
            passed: value >= bound,
            value,
            threshold: format!(">= {bound:e}"),
        }
    }

    fn window(name: impl Into<String>, value: f64, window: (f64, f64)) -> Self {
        CheckResult {
            name: name.into(),
            passed: (window.0..=window.1).contains(&value),
            value,
            threshold: format!("in [{}, {}]", window.0, window.1),
        }
    }
}

/// 17-significant-digit decimal rendering, bit-stable on one platform.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_csv(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: Vec<Vec<String>>,
) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut out = String::with_capacity(rows.len() * 64 + 64);
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    let mut file = fs::File::create(&path)?;
    file.write_all(out.as_bytes())?;
    Ok(path)
}

struct RunState {
    checks: Vec<CheckResult>,
    artifacts: Vec<String>,
    results: serde_json::Map<String, serde_json::Value>,
    initial_sobolev: Option<[f64; 7]>,
    tail_guard_ratio: Option<f64>,
}

impl RunState {
    fn new() -> Self {
        RunState {
            checks: Vec::new(),
            artifacts: Vec::new(),
            results: serde_json::Map::new(),
            initial_sobolev: None,
            tail_guard_ratio: None,
        }
    }

    fn record_profile(&mut self, eta: &Field) -> Result<()> {
        let mut norms = [0.0; 7];
        for (k, slot) in norms.iter_mut().enumerate() {
            *slot = eta.sobolev_norm(k)?;
        }
        self.initial_sobolev = Some(norms);
        self.tail_guard_ratio = Some(edge_band_ratio(eta));
        Ok(())
    }
}

fn solver_config(config: &RunConfig, grid: &Grid, params: Params) -> SolverConfig {
    SolverConfig {
        params,
        grid: grid.clone(),
        dt: config.dt,
        t_end: config.t_end,
        scheme: config.scheme,
        snapshot_stride: config.snapshot_stride,
    }
}

fn run_verify_identities(
    config: &RunConfig,
    grid: &Grid,
    params: Params,
    out_dir: &Path,
    state: &mut RunState,
) -> Result<()> {
    let eta = config.profile_spec().build(grid)?;
    state.record_profile(&eta)?;
    let mut rows = Vec::new();
    for law in LawId::ALL {
        let norm = residual(law, &eta, &params)?.l2();
        let (class, check) = if law.is_exact() {
            (
                "exact",
                CheckResult::le(
                    format!("exact-law {law} residual"),
                    norm,
                    thresholds::EXACT_LAW_RESIDUAL_MAX,
                ),
            )
        } else {
            (
                "approximate",
                CheckResult::ge(
                    format!("approximate-law {law} residual floor"),
                    norm,
                    thresholds::APPROX_LAW_RESIDUAL_MIN,
                ),
            )
        };
        rows.push(vec![
            law.name().to_string(),
            class.to_string(),
            fmt_float(norm),
            check.threshold.clone(),
            check.passed.to_string(),
        ]);
        state.checks.push(check);
    }
    let path = write_csv(
        out_dir,
        "identities.csv",
        &["law", "class", "residual_l2", "threshold", "pass"],
        rows,
    )?;
    state.artifacts.push(path.display().to_string());
    Ok(())
}

fn run_balance_scan(
    config: &RunConfig,
    grid: &Grid,
    out_dir: &Path,
    state: &mut RunState,
) -> Result<()> {
    let profile = config.profile_spec();
    let eta = profile.build(grid)?;
    state.record_profile(&eta)?;
    let ladder = config.eps_ladder();
    for law in config.scan_laws() {
        let sweep = epsilon_sweep(&profile, law, &ladder, grid)?;
        let mut rows: Vec<Vec<String>> = sweep
            .eps_values
            .iter()
            .zip(&sweep.residual_norms)
            .map(|(&e, &n)| vec![fmt_float(e), fmt_float(n)])
            .collect();
        rows.extend(
            sweep
                .failures
                .iter()
                .map(|(e, msg)| vec![fmt_float(*e), format!("error: {msg}")]),
        );
        let path = write_csv(
            out_dir,
            &format!("scan_{}.csv", law.name()),
            &["eps", "residual_l2"],
            rows,
        )?;
        state.artifacts.push(path.display().to_string());
        state.results.insert(
            format!("scan_{}", law.name()),
            serde_json::to_value(&sweep).expect("sweep serializes"),
        );
        if law.is_exact() {
            for (&e, &n) in sweep.eps_values.iter().zip(&sweep.residual_norms) {
                state.checks.push(CheckResult::le(
                    format!("exact-law {law} residual at eps = {e}"),
                    n,
                    thresholds::EXACT_LAW_RESIDUAL_MAX,
                ));
            }
        } else {
            let slope = sweep.slope.ok_or_else(|| {
                KdvError::Config(format!(
                    "scan of {law} produced no slope (need >= 3 completed epsilon values)"
                ))
            })?;
            state.checks.push(CheckResult::window(
                format!("analysis slope for {law}"),
                slope,
                thresholds::SLOPE_WINDOW_WIDE,
            ));
        }
        if let Some(times) = &config.sample_times {
            let dynamic =
                epsilon_sweep_dynamic(&profile, law, &ladder, grid, config.dt, times)?;
            let mut rows = Vec::new();
            for (t, s) in &dynamic {
                for (&e, &n) in s.eps_values.iter().zip(&s.residual_norms) {
                    rows.push(vec![fmt_float(*t), fmt_float(e), fmt_float(n)]);
                }
                for (e, msg) in &s.failures {
                    rows.push(vec![
                        fmt_float(*t),
                        fmt_float(*e),
                        format!("error: {msg}"),
                    ]);
                }
                if !law.is_exact() {
                    if let Some(slope) = s.slope {
                        state.checks.push(CheckResult::window(
                            format!("dynamic slope for {law} at t = {t}"),
                            slope,
                            thresholds::SLOPE_WINDOW_WIDE,
                        ));
                    }
                }
            }
            let path = write_csv(
                out_dir,
                &format!("scan_{}_dynamic.csv", law.name()),
                &["t", "eps", "residual_l2"],
                rows,
            )?;
            state.artifacts.push(path.display().to_string());
            state.results.insert(
                format!("scan_{}_dynamic", law.name()),
                serde_json::to_value(
                    dynamic
                        .iter()
                        .map(|(t, s)| json!({ "t": t, "sweep": s }))
                        .collect::<Vec<_>>(),
                )
                .expect("dynamic sweep serializes"),
            );
        }
    }
    Ok(())
}

fn run_simulate(
    config: &RunConfig,
    grid: &Grid,
    params: Params,
    out_dir: &Path,
    state: &mut RunState,
) -> Result<()> {
    let eta0 = config.profile_spec().build(grid)?;
    state.record_profile(&eta0)?;
    let cfg = solver_config(config, grid, params);
    let traj = simulate(&eta0, &cfg)?;
    state.initial_sobolev = Some(*traj.initial_sobolev());

    let mut rows = Vec::new();
    for (t, field) in traj.snapshots() {
        let inv = conserved_integrals(field);
        let norms = field.norms();
        rows.push(vec![
            fmt_float(t),
            fmt_float(norms.linf),
            fmt_float(norms.l2),
            fmt_float(inv.m1),
            fmt_float(inv.m2),
            fmt_float(inv.m3),
        ]);
    }
    let path = write_csv(
        out_dir,
        "trajectory.csv",
        &["t", "linf", "l2", "m1", "m2", "m3"],
        rows,
    )?;
    state.artifacts.push(path.display().to_string());

    let last = traj.states().last().expect("trajectory is non-empty");
    let rows = grid
        .points()
        .zip(last.values())
        .map(|(x, &v)| vec![fmt_float(x), fmt_float(v)])
        .collect();
    let path = write_csv(out_dir, "final_state.csv", &["x", "eta"], rows)?;
    state.artifacts.push(path.display().to_string());

    let final_ratio = edge_band_ratio(last);
    state.checks.push(CheckResult::le(
        "tail-mass guard at t_end",
        final_ratio,
        thresholds::TAIL_GUARD_REL,
    ));
    Ok(())
}

fn run_drift(
    config: &RunConfig,
    grid: &Grid,
    params: Params,
    out_dir: &Path,
    state: &mut RunState,
) -> Result<()> {
    let eta0 = config.profile_spec().build(grid)?;
    state.record_profile(&eta0)?;
    let cfg = solver_config(config, grid, params);
    let traj = simulate(&eta0, &cfg)?;
    state.initial_sobolev = Some(*traj.initial_sobolev());
    let report = invariant_drift(&traj)?;

    let denom: Vec<f64> = [report.m1[0], report.m2[0], report.m3[0]]
        .iter()
        .map(|m| m.abs().max(1e-12))
        .collect();
    let rows = (0..report.times.len())
        .map(|i| {
            vec![
                fmt_float(report.times[i]),
                fmt_float(report.m1[i]),
                fmt_float(report.m2[i]),
                fmt_float(report.m3[i]),
                fmt_float((report.m1[i] - report.m1[0]).abs() / denom[0]),
                fmt_float((report.m2[i] - report.m2[0]).abs() / denom[1]),
                fmt_float((report.m3[i] - report.m3[0]).abs() / denom[2]),
            ]
        })
        .collect();
    let path = write_csv(
        out_dir,
        "drift.csv",
        &["t", "m1", "m2", "m3", "rel_dm1", "rel_dm2", "rel_dm3"],
        rows,
    )?;
    state.artifacts.push(path.display().to_string());
    for (i, name) in ["m1", "m2", "m3"].iter().enumerate() {
        state.checks.push(CheckResult::le(
            format!("invariant {name} relative drift"),
            report.max_rel_drift[i],
            thresholds::INVARIANT_DRIFT_MAX,
        ));
    }
    state.results.insert(
        "drift".into(),
        serde_json::to_value(&report).expect("drift report serializes"),
    );
    Ok(())
}

fn run_fields(
    config: &RunConfig,
    grid: &Grid,
    params: Params,
    out_dir: &Path,
    state: &mut RunState,
) -> Result<()> {
    let eta = config.profile_spec().build(grid)?;
    state.record_profile(&eta)?;
    for z in config.height_list() {
        let slice = column_slice(&eta, &params, z)?;
        let rows = grid
            .points()
            .enumerate()
            .map(|(j, x)| {
                vec![
                    fmt_float(x),
                    fmt_float(slice.phi_x.values()[j]),
                    fmt_float(slice.phi_z.values()[j]),
                    fmt_float(slice.dynamic_pressure.values()[j]),
                    slice.exterior[j].to_string(),
                ]
            })
            .collect();
        let path = write_csv(
            out_dir,
            &format!("fields_z{z:.3}.csv"),
            &["x", "phi_x", "phi_z", "p_dyn", "exterior"],
            rows,
        )?;
        state.artifacts.push(path.display().to_string());
    }
    Ok(())
}

fn execute(config: &RunConfig, out_dir: &Path, state: &mut RunState) -> Result<()> {
    let grid = Grid::new(config.grid.n, config.grid.length)?;
    let params = Params::new(config.epsilon)?;
    match config.command {
        Command::VerifyIdentities => {
            run_verify_identities(config, &grid, params, out_dir, state)
        }
        Command::BalanceScan => run_balance_scan(config, &grid, out_dir, state),
        Command::Simulate => run_simulate(config, &grid, params, out_dir, state),
        Command::Drift => run_drift(config, &grid, params, out_dir, state),
        Command::Fields => run_fields(config, &grid, params, out_dir, state),
    }
}

fn write_manifest(
    config: &RunConfig,
    out_dir: &Path,
    state: &RunState,
    status: &str,
    error: Option<&str>,
) -> Result<()> {
    let manifest = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": config.command.name(),
        "status": status,
        "error": error,
        "config": config,
        "initial_sobolev": state.initial_sobolev,
        "tail_guard_ratio": state.tail_guard_ratio,
        "thresholds": {
            "exact_law_residual_max": thresholds::EXACT_LAW_RESIDUAL_MAX,
            "approx_law_residual_min": thresholds::APPROX_LAW_RESIDUAL_MIN,
            "slope_window_wide": thresholds::SLOPE_WINDOW_WIDE,
            "invariant_drift_max": thresholds::INVARIANT_DRIFT_MAX,
            "tail_guard_rel": thresholds::TAIL_GUARD_REL,
        },
        "checks": state.checks,
        "results": state.results,
        "artifacts": state.artifacts,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(out_dir.join("manifest.json"), text)?;
    Ok(())
}

/// Execute a parsed configuration, writing artifacts under the output
/// directory (the `--output` flag overrides the configured one). A
/// manifest is written even when the run errors out, with partial results
/// flagged. Returns the process exit code.
pub fn run(config: &RunConfig, output_override: Option<&Path>, quiet: bool) -> i32 {
    let out_dir = output_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.output_dir.clone());
    if let Err(e) = fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create output directory {}: {e}", out_dir.display());
        return EXIT_ERROR;
    }
    let mut state = RunState::new();
    let outcome = execute(config, &out_dir, &mut state);

    let (status, code, error_text) = match &outcome {
        Ok(()) => {
            if state.checks.iter().all(|c| c.passed) {
                ("ok", EXIT_OK, None)
            } else {
                ("check-failed", EXIT_CHECK_FAILED, None)
            }
        }
        Err(e) => ("error", EXIT_ERROR, Some(e.to_string())),
    };
    if let Err(e) = write_manifest(config, &out_dir, &state, status, error_text.as_deref()) {
        eprintln!("error: cannot write manifest: {e}");
        return EXIT_ERROR;
    }
    if !quiet {
        for check in &state.checks {
            println!(
                "[{}] {}: {:.6e} ({})",
                if check.passed { "PASS" } else { "FAIL" },
                check.name,
                check.value,
                check.threshold
            );
        }
        match &outcome {
            Ok(()) => println!(
                "{}: {} ({} checks, artifacts in {})",
                config.command,
                status,
                state.checks.len(),
                out_dir.display()
            ),
            Err(e) => eprintln!("{}: error: {e}", config.command),
        }
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn config_text(command: &str, extra: &str) -> String {
        // n = 1024: the exact identities reach machine zero only when the
        // profile's nonlinear products are fully resolved.
        format!(
            r#"{{
                "command": "{command}",
                "grid": {{ "n": 1024, "length": 100.0 }},
                "epsilon": 0.1{extra}
            }}"#
        )
    }

    #[test]
    fn verify_identities_passes_and_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(&config_text("verify-identities", "")).unwrap();
        let code = run(&cfg, Some(dir.path()), true);
        assert_eq!(code, EXIT_OK);
        let csv = std::fs::read_to_string(dir.path().join("identities.csv")).unwrap();
        assert!(csv.starts_with("law,class,residual_l2,threshold,pass\n"));
        assert_eq!(csv.lines().count(), 7);
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(manifest["status"], "ok");
        assert_eq!(manifest["checks"].as_array().unwrap().len(), 6);
        assert!(manifest["initial_sobolev"].as_array().unwrap().len() == 7);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let cfg = parse_config(&config_text("verify-identities", "")).unwrap();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        assert_eq!(run(&cfg, Some(dir_a.path()), true), EXIT_OK);
        assert_eq!(run(&cfg, Some(dir_b.path()), true), EXIT_OK);
        let a = std::fs::read(dir_a.path().join("identities.csv")).unwrap();
        let b = std::fs::read(dir_b.path().join("identities.csv")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn balance_scan_reports_slope() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(&config_text(
            "balance-scan",
            r#", "laws": ["momentum"],
                "profile": { "type": "sech-squared", "amplitude": 0.5, "width": 0.8, "x0": 50.0 }"#,
        ))
        .unwrap();
        let code = run(&cfg, Some(dir.path()), true);
        assert_eq!(code, EXIT_OK);
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
                .unwrap();
        let slope = manifest["results"]["scan_momentum"]["slope"].as_f64().unwrap();
        assert!((1.95..=2.05).contains(&slope));
        let csv = std::fs::read_to_string(dir.path().join("scan_momentum.csv")).unwrap();
        assert!(csv.starts_with("eps,residual_l2\n"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn fields_writes_one_slice_per_height() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(&config_text("fields", "")).unwrap();
        let code = run(&cfg, Some(dir.path()), true);
        assert_eq!(code, EXIT_OK);
        for name in ["fields_z0.000.csv", "fields_z0.500.csv", "fields_z1.000.csv"] {
            let csv = std::fs::read_to_string(dir.path().join(name)).unwrap();
            assert!(csv.starts_with("x,phi_x,phi_z,p_dyn,exterior\n"));
            assert_eq!(csv.lines().count(), 1025);
        }
    }

    #[test]
    fn error_still_writes_manifest() {
        let dir = tempfile::tempdir().unwrap();
        // solitary amplitude too large for this short domain
        let cfg = parse_config(&config_text(
            "simulate",
            r#", "profile": { "type": "solitary", "amplitude": 0.001, "x0": 50.0 }"#,
        ))
        .unwrap();
        let code = run(&cfg, Some(dir.path()), true);
        assert_eq!(code, EXIT_ERROR);
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(manifest["status"], "error");
        assert!(manifest["error"].as_str().unwrap().contains("tail-mass"));
    }

    #[test]
    fn drift_failure_is_reported_not_hidden() {
        let dir = tempfile::tempdir().unwrap();
        // n = 64 cannot resolve the soliton; the run aborts on the tail
        // guard (status error), which is a reported failure, not a pass.
        let text = r#"{
            "command": "drift",
            "grid": { "n": 64, "length": 100.0 },
            "epsilon": 0.1,
            "dt": 0.01,
            "t-end": 5.0
        }"#;
        let cfg = parse_config(text).unwrap();
        let code = run(&cfg, Some(dir.path()), true);
        assert_ne!(code, EXIT_OK);
        assert!(dir.path().join("manifest.json").exists());
    }
}
