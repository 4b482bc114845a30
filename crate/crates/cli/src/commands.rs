//! Subcommand bodies: run the flow or one of its cross checks and leave the
//! artifacts on disk. Run artifacts are written before the verdict is
//! decided, so a rejected run still leaves its full trace behind.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use pmcflow::ambient::{christoffels_fd, AmbientError, ScaleFactor, SpacetimeModel};
use pmcflow::analysis::{
    audit, dual_path_check, identity_report, refinement_study, slice_scan, AnalysisError,
    AuditParams, AuditReport, MonitorRecord, RefinementScenario, RefinementVerdict,
};
use pmcflow::flow::{evolve, BarrierReport, FlowStatus, FlowTrace, PrescribedCurvature};
use pmcflow::geometry::{embedding_oracle_with, GeometryError, GeometryFields, GraphState};
use pmcflow::grid::{GridSpec, MAX_DIM};

use crate::config::{InitialProfile, RunConfig};
use crate::error::{io_error, CliError};

/// 17 significant digits, enough for f64 round trips.
fn fmt(value: f64) -> String {
    format!("{value:.16e}")
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|err| io_error(path, "writing", err))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact structs serialize");
    text.push('\n');
    write_text(path, &text)
}

const SERIES_HEADER: &str = "time,dt,sup_abs_residual,min_signed_residual,max_vtilde,\
max_abs_kappa,max_abs_H,u_min,u_max,max_du_norm";

#[derive(Serialize)]
struct Summary<'a> {
    status: FlowStatus,
    steps: usize,
    flow_time: f64,
    records: usize,
    final_sup_abs_residual: Option<f64>,
    wall_time_s: f64,
    audit_note: &'a str,
    audit: Option<&'a AuditReport<f64>>,
    initial_barrier: Option<&'a BarrierReport<f64>>,
    warnings: &'a [String],
}

pub fn run_evolve(config: &RunConfig) -> Result<(), CliError> {
    let dir = &config.directory;
    fs::create_dir_all(dir).map_err(|err| io_error(dir, "creating", err))?;

    let started = Instant::now();
    let trace = evolve(&config.model, config.initial_state(), &config.f, &config.flow)?;
    let wall_time_s = started.elapsed().as_secs_f64();

    let mut warnings = Vec::new();
    match &trace.initial_barrier {
        Some(report) if !report.ok => warnings.push(format!(
            "initial graph is not an upper barrier: min H - f = {} at node {}",
            report.min_signed, report.worst_node
        )),
        Some(_) => {}
        None => {
            warnings.push("initial graph is not spacelike, no barrier precheck possible".into())
        }
    }

    let params = AuditParams {
        tol_residual: config.flow.tol_residual,
        u_floor: config.flow.u_floor,
        ..AuditParams::default()
    };
    let (report, note) = match audit(&trace, &params) {
        Ok(report) => {
            let note = if report.all_passed { "passed" } else { "failed" };
            (Some(report), note)
        }
        Err(AnalysisError::InsufficientTrace { .. }) => {
            (None, "skipped: fewer than two monitor records")
        }
        Err(err) => return Err(err.into()),
    };

    write_series(&dir.join("series.csv"), &trace.records)?;
    write_snapshots(config, &trace, &mut warnings)?;

    let summary = Summary {
        status: trace.status,
        steps: trace.samples.last().map(|sample| sample.step).unwrap_or(0),
        flow_time: trace.final_state.time,
        records: trace.records.len(),
        final_sup_abs_residual: trace.records.last().map(|record| record.sup_abs_residual),
        wall_time_s,
        audit_note: note,
        audit: report.as_ref(),
        initial_barrier: trace.initial_barrier.as_ref(),
        warnings: &warnings,
    };
    write_json(&dir.join("summary.json"), &summary)?;

    for warning in &warnings {
        eprintln!("warning: {warning}");
    }

    let audit_ok = report.as_ref().map(|report| report.all_passed).unwrap_or(true);
    if trace.status == FlowStatus::Converged && audit_ok {
        println!(
            "evolve: converged after {} steps, final residual {:.3e}, audit {note}",
            summary.steps,
            summary.final_sup_abs_residual.unwrap_or(f64::NAN)
        );
        Ok(())
    } else {
        let mut reasons = Vec::new();
        if trace.status != FlowStatus::Converged {
            reasons.push(format!("status {:?}", trace.status));
        }
        if !audit_ok {
            let failed: Vec<&str> = report
                .as_ref()
                .map(|report| {
                    report
                        .verdicts
                        .iter()
                        .filter(|verdict| !verdict.passed)
                        .map(|verdict| verdict.name)
                        .collect()
                })
                .unwrap_or_default();
            reasons.push(format!("audit failed: {}", failed.join(", ")));
        }
        Err(CliError::RunFailed(format!(
            "run was not accepted ({})",
            reasons.join("; ")
        )))
    }
}

fn write_series(path: &Path, records: &[MonitorRecord<f64>]) -> Result<(), CliError> {
    let mut text = String::with_capacity(128 + records.len() * 256);
    text.push_str(SERIES_HEADER);
    text.push('\n');
    for record in records {
        let row = [
            fmt(record.time),
            fmt(record.dt),
            fmt(record.sup_abs_residual),
            fmt(record.min_signed_residual),
            fmt(record.max_vtilde),
            fmt(record.max_abs_kappa),
            fmt(record.max_abs_h),
            fmt(record.u_min),
            fmt(record.u_max),
            fmt(record.max_du_norm),
        ];
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write_text(path, &text)
}

/// One CSV per retained sample: the final state always, plus every sample
/// whose step index hits the snapshot cadence.
fn write_snapshots(
    config: &RunConfig,
    trace: &FlowTrace<f64>,
    warnings: &mut Vec<String>,
) -> Result<(), CliError> {
    let dir = config.directory.join("snapshots");
    fs::create_dir_all(&dir).map_err(|err| io_error(&dir, "creating", err))?;
    let dim = config.grid.dim();
    if trace.samples.is_empty() {
        return Ok(());
    }
    let last = trace.samples.len() - 1;
    for (index, sample) in trace.samples.iter().enumerate() {
        let due = index == last
            || config
                .snapshot_every
                .map(|every| sample.step % every == 0)
                .unwrap_or(false);
        if !due {
            continue;
        }
        let state = GraphState::new(config.grid, sample.u.clone(), sample.time)
            .expect("trace samples fit the run grid");
        let fields =
            match GeometryFields::compute(&config.model, &state, config.flow.spacelike_margin) {
                Ok(fields) => fields,
                Err(err) => {
                    warnings.push(format!("snapshot at step {} skipped: {err}", sample.step));
                    continue;
                }
            };
        let mut text = String::with_capacity(64 + state.u.len() * 128);
        for axis in 0..dim {
            text.push_str(&format!("x{},", axis + 1));
        }
        text.push_str("u,H,vtilde,");
        let kappa_names: Vec<String> =
            (0..dim).map(|axis| format!("kappa{}", axis + 1)).collect();
        text.push_str(&kappa_names.join(","));
        text.push('\n');
        for node in 0..state.u.len() {
            let x = config.grid.coords(node);
            let mut row: Vec<String> = Vec::with_capacity(2 * dim + 3);
            for axis in 0..dim {
                row.push(fmt(x[axis]));
            }
            row.push(fmt(state.u[node]));
            row.push(fmt(fields.mean_curvature[node]));
            row.push(fmt(fields.vtilde[node]));
            for axis in 0..dim {
                row.push(fmt(fields.kappa[node][axis]));
            }
            text.push_str(&row.join(","));
            text.push('\n');
        }
        write_text(&dir.join(format!("step_{}.csv", sample.step)), &text)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyCheck {
    name: String,
    passed: bool,
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    low: Option<f64>,
    high: f64,
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    all_passed: bool,
    checks: &'a [VerifyCheck],
}

fn bound_check(name: &str, value: f64, high: f64) -> VerifyCheck {
    VerifyCheck {
        name: name.to_string(),
        passed: value <= high,
        value,
        low: None,
        high,
    }
}

fn band_check(name: &str, value: f64, low: f64, high: f64) -> VerifyCheck {
    VerifyCheck {
        name: name.to_string(),
        passed: value >= low && value <= high,
        value,
        low: Some(low),
        high,
    }
}

/// Largest entry of the gap between the graph-formula curvature and the
/// embedding oracle. With `corrupt` set the oracle reads the ambient
/// connection through a sign flip, which the comparison must catch.
fn dual_gap(
    model: &SpacetimeModel<f64>,
    state: &GraphState<f64>,
    margin: f64,
    corrupt: bool,
) -> Result<f64, CliError> {
    if !corrupt {
        return Ok(dual_path_check(model, state, margin)?.max_discrepancy);
    }
    let fields = GeometryFields::compute(model, state, margin)?;
    let oracle = embedding_oracle_with(model, state, margin, |x0, x| {
        let mut gamma = model.christoffels_full(x0, x)?;
        gamma[0][1][1] = -gamma[0][1][1];
        gamma[1][1][1] = -gamma[1][1][1];
        Ok(gamma)
    })?;
    let dim = state.grid.dim();
    let mut gap = 0.0f64;
    for node in 0..state.u.len() {
        for i in 0..dim {
            for j in 0..dim {
                gap = gap.max((fields.h[node][i][j] - oracle[node][i][j]).abs());
            }
        }
    }
    Ok(gap)
}

pub fn run_verify(config: &RunConfig, corrupt: bool) -> Result<(), CliError> {
    let dir = &config.directory;
    fs::create_dir_all(dir).map_err(|err| io_error(dir, "creating", err))?;
    let margin = config.flow.spacelike_margin;
    let state = config.initial_state();
    let mut checks: Vec<VerifyCheck> = Vec::new();

    let identities = identity_report(&config.model, &state, margin)?;
    for check in &identities.checks {
        checks.push(bound_check(
            &format!("identity/{}", check.name),
            check.max_violation,
            check.tolerance,
        ));
    }

    // the two curvature routes agree exactly on slices and to second order
    // elsewhere, so a refinement halving the spacing divides the gap by
    // about four
    match &config.profile {
        InitialProfile::Constant { .. } => {
            let gap = dual_gap(&config.model, &state, margin, corrupt)?;
            checks.push(bound_check("dual_path/slice_exact", gap, 1e-10));
        }
        InitialProfile::Cosine { .. } => {
            let coarse = dual_gap(&config.model, &state, margin, corrupt)?;
            let fine_grid = config.grid.refined(2).map_err(AnalysisError::from)?;
            let fine_u = config
                .profile
                .sample(&fine_grid)
                .expect("closed form profiles resample");
            let fine_state =
                GraphState::new(fine_grid, fine_u, 0.0).expect("sample length matches the grid");
            let fine = dual_gap(&config.model, &fine_state, margin, corrupt)?;
            checks.push(band_check(
                "dual_path/refinement_ratio",
                coarse / fine,
                3.0,
                5.0,
            ));
        }
        InitialProfile::Sampled { .. } => {
            // tables cannot be resampled, so no ratio; the raw gap still has
            // to be small at legal slopes
            let gap = dual_gap(&config.model, &state, margin, corrupt)?;
            checks.push(bound_check("dual_path/gap", gap, 1e-3));
        }
    }

    // constant graphs reproduce the slice curvature of the homogeneous
    // models exactly; the static bump has totally geodesic slices instead
    let mut worst = 0.0f64;
    for &height in &slice_heights(&config.model) {
        let slice = GraphState::constant(config.grid, height);
        let fields = GeometryFields::compute(&config.model, &slice, margin)?;
        let reference = match config.model.slice_mean_curvature(height) {
            Ok(reference) => reference,
            Err(AmbientError::UnsupportedModel { .. }) => 0.0,
            Err(err) => return Err(GeometryError::from(err).into()),
        };
        for node in 0..slice.u.len() {
            worst = worst.max((fields.mean_curvature[node] - reference).abs());
        }
    }
    checks.push(bound_check("constant_slice/exact", worst, 1e-10));

    checks.push(bound_check(
        "christoffel/fd_agreement",
        christoffel_gap(&config.model, &config.grid)?,
        1e-6,
    ));

    let all_passed = checks.iter().all(|check| check.passed);
    write_json(
        &dir.join("verify.json"),
        &VerifyReport {
            all_passed,
            checks: &checks,
        },
    )?;
    if all_passed {
        println!("verify: {} checks passed", checks.len());
        Ok(())
    } else {
        let failed: Vec<&str> = checks
            .iter()
            .filter(|check| !check.passed)
            .map(|check| check.name.as_str())
            .collect();
        Err(CliError::RunFailed(format!(
            "verification failed: {}",
            failed.join(", ")
        )))
    }
}

fn slice_heights(model: &SpacetimeModel<f64>) -> [f64; 5] {
    match model {
        // the power scale only exists at positive times; keep every sample
        // well inside the domain whatever the exponent
        SpacetimeModel::FlrwTorus {
            scale: ScaleFactor::Power { exponent },
            ..
        } => {
            let unit = exponent.max(1.0);
            [0.3 * unit, 0.7 * unit, 1.2 * unit, 2.0 * unit, 3.5 * unit]
        }
        _ => [-0.8, -0.3, 0.0, 0.4, 1.1],
    }
}

/// Closed-form connection against centered differences of the metric, over
/// a fixed lattice of ambient points.
fn christoffel_gap(model: &SpacetimeModel<f64>, grid: &GridSpec<f64>) -> Result<f64, CliError> {
    let dim = model.dim();
    let (lo, hi) = match model {
        SpacetimeModel::FlrwTorus {
            scale: ScaleFactor::Power { exponent },
            ..
        } => {
            let unit = exponent.max(1.0);
            (0.3 * unit, 3.5 * unit)
        }
        _ => (-1.0, 1.0),
    };
    let step = 5e-5;
    let mut worst = 0.0f64;
    for k in 0..10 {
        let x0 = lo + (hi - lo) * k as f64 / 9.0;
        for m in 0..10 {
            let mut x = [0.0f64; MAX_DIM];
            x[0] = grid.length(0) * m as f64 / 10.0;
            if dim == 2 {
                x[1] = grid.length(1) * (((3 * m + k) % 10) as f64) / 10.0;
            }
            let exact = model
                .christoffels_full(x0, &x)
                .map_err(GeometryError::from)?;
            let approx = christoffels_fd(model, x0, &x, step).map_err(GeometryError::from)?;
            for a in 0..=dim {
                for b in 0..=dim {
                    for c in 0..=dim {
                        worst = worst.max((exact[a][b][c] - approx[a][b][c]).abs());
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// Reference scenario implied by the configuration shape: a cosine start on
/// the flat model studies the discrete curvature order, a constant start
/// studies slice exactness, and a constant start under the gaussian scale
/// with a constant prescription studies the full flow. Anything else has no
/// closed-form reference.
fn choose_scenario(config: &RunConfig) -> Result<RefinementScenario<f64>, CliError> {
    if let PrescribedCurvature::SampledGrid { .. } = &config.f {
        return Err(AnalysisError::NoReference {
            scenario: "sampled prescription",
        }
        .into());
    }
    match (&config.profile, &config.model) {
        (
            InitialProfile::Cosine { amplitude, waves, .. },
            SpacetimeModel::MinkowskiTorus { dim: 1 },
        ) if waves[0] == 1 => Ok(RefinementScenario::CosineCurvature {
            amplitude: *amplitude,
        }),
        (
            InitialProfile::Constant { height },
            SpacetimeModel::FlrwTorus {
                scale: ScaleFactor::Gaussian,
                ..
            },
        ) => match &config.f {
            PrescribedCurvature::Constant { value } => Ok(RefinementScenario::FlowToSlice {
                model: config.model.clone(),
                f_value: *value,
                initial_height: *height,
                config: config.flow.clone(),
            }),
            _ => Ok(RefinementScenario::ConstantSlice {
                model: config.model.clone(),
                height: *height,
            }),
        },
        (InitialProfile::Constant { height }, _) => Ok(RefinementScenario::ConstantSlice {
            model: config.model.clone(),
            height: *height,
        }),
        _ => Err(AnalysisError::NoReference {
            scenario: "this configuration shape",
        }
        .into()),
    }
}

pub fn run_refine(config: &RunConfig, levels: &[usize]) -> Result<(), CliError> {
    let dir = &config.directory;
    fs::create_dir_all(dir).map_err(|err| io_error(dir, "creating", err))?;
    let scenario = choose_scenario(config)?;
    let study = refinement_study(&scenario, levels)?;
    write_json(&dir.join("refine.json"), &study)?;
    match study.verdict {
        RefinementVerdict::Failed => Err(CliError::RunFailed(
            "refinement orders left the second-order band".into(),
        )),
        verdict => {
            println!("refine: verdict {verdict:?} over {} levels", study.rows.len());
            Ok(())
        }
    }
}

pub fn run_slice_scan(
    config: &RunConfig,
    from: f64,
    to: f64,
    steps: usize,
) -> Result<(), CliError> {
    let dir = &config.directory;
    fs::create_dir_all(dir).map_err(|err| io_error(dir, "creating", err))?;
    let samples = slice_scan(&config.model, from, to, steps)?;
    let mut text = String::from("x0,H_slice\n");
    for sample in &samples {
        text.push_str(&fmt(sample.x0));
        text.push(',');
        text.push_str(&fmt(sample.h_slice));
        text.push('\n');
    }
    write_text(&dir.join("slices.csv"), &text)?;
    println!("slice-scan: {} samples over [{from}, {to}]", samples.len());
    Ok(())
}
