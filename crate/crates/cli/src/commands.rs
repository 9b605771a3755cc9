//! Subcommand implementations. Each one resolves the parameter set, runs its
//! sweep, and emits exactly one table per output file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use kerromit::oracle::{compare, integrate, integrate_traced, OracleConfig, Tolerances};
use kerromit::steady_state::kerr_shift_curve;
use kerromit::{
    group_delays, observables_with, solve_steady_state, Branch, C64, DemodResult64, KerrUnit,
    Method, SidebandResponse64, SteadyState64,
};

use crate::config::{kerr_unit_name, kerr_unit_note, Settings};
use crate::output::{emit, Cell, Dest, Table};
use crate::sweep::{linspace, map_ordered};
use crate::{Ctx, Failure, MethodArg};

const SPECTRUM_COLUMNS: &[&str] = &[
    "omega_rad_per_s",
    "omega_over_omega_m",
    "tp_abs2",
    "eta",
    "arg_tp_rad",
    "arg_s2_rad",
    "method",
];

const TP2_COLUMNS: &[&str] = &["omega_rad_per_s", "omega_over_omega_m", "tp_abs2"];
const ETA_COLUMNS: &[&str] = &["omega_rad_per_s", "omega_over_omega_m", "eta"];

const DELAY_POWER_COLUMNS: &[&str] = &["pump_power_w", "tau1_s", "tau2_s"];
const DELAY_DETUNING_COLUMNS: &[&str] =
    &["detuning_rad_per_s", "detuning_over_omega_m", "tau1_s", "tau2_s"];

const KERR_SHIFT_COLUMNS: &[&str] = &[
    "pump_power_w",
    "kerr_u_rad_per_s",
    "photon_number",
    "kerr_shift_rad_per_s",
    "kerr_shift_over_omega_m",
    "effective_detuning_rad_per_s",
    "effective_detuning_over_omega_m",
];

const ORACLE_CHECK_COLUMNS: &[&str] = &[
    "omega_rad_per_s",
    "omega_over_omega_m",
    "tp_abs2_analytic",
    "tp_abs2_oracle",
    "tp_abs2_dev",
    "eta_analytic",
    "eta_oracle",
    "eta_dev",
    "mean_field_dev",
    "branch",
    "near_bistable",
    "pass",
];

const STEADY_COLUMNS: &[&str] = &[
    "branch",
    "branch_index",
    "root_count",
    "photon_number",
    "field_re",
    "field_im",
    "displacement_m",
    "kerr_shift_rad_per_s",
    "kerr_shift_over_omega_m",
    "effective_detuning_rad_per_s",
    "effective_detuning_over_omega_m",
    "omit_linewidth_rad_per_s",
    "near_bistable",
    "unstable_candidate",
];

const TRAJECTORY_COLUMNS: &[&str] = &["t_s", "re_a", "im_a", "x_m", "p_kg_m_s"];

/// Probe-detuning grid in units of the mechanical frequency.
pub struct GridSpec {
    pub points: usize,
    pub min: f64,
    pub max: f64,
}

pub enum DelayAxis {
    PumpPower,
    Detuning,
}

pub struct DelaySpec {
    pub axis: DelayAxis,
    pub points: usize,
    pub min: f64,
    pub max: f64,
}

pub struct KerrShiftSpec {
    pub power_min: f64,
    pub power_max: f64,
    pub power_points: usize,
    pub u_values: Vec<f64>,
    pub u_unit: KerrUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    Fig1c,
    Fig2,
    Fig3,
    Fig4,
}

fn validate_count_order(points: usize, min: f64, max: f64) -> Result<(), Failure> {
    if points == 0 {
        return Err(Failure::Validation("a grid needs at least one point".into()));
    }
    if !min.is_finite() || !max.is_finite() {
        return Err(Failure::Validation("grid bounds must be finite".into()));
    }
    if points > 1 && min >= max {
        return Err(Failure::Validation(format!(
            "grid start {min:?} must be below the end {max:?} when points > 1"
        )));
    }
    Ok(())
}

fn validate_omega_grid(grid: &GridSpec) -> Result<(), Failure> {
    validate_count_order(grid.points, grid.min, grid.max)?;
    if grid.min <= 0.0 || grid.max > 2.0 {
        return Err(Failure::Validation(
            "the probe grid must lie inside (0, 2] in units of omega_m".into(),
        ));
    }
    Ok(())
}

fn no_dump(ctx: &Ctx) -> Result<(), Failure> {
    if ctx.dump_trajectory.is_some() {
        return Err(Failure::Validation(
            "--dump-trajectory applies to single-point oracle runs only \
             (oracle-check --points 1, or spectrum --method oracle --points 1)"
                .into(),
        ));
    }
    Ok(())
}

fn analytic_method(ctx: &Ctx) -> Result<Method, Failure> {
    match ctx.method {
        MethodArg::Matrix => Ok(Method::Matrix),
        MethodArg::ClosedForm => Ok(Method::ClosedForm),
        MethodArg::Oracle => Err(Failure::Validation(
            "this command compares against or derives from the analytic response; \
             use --method matrix or closed-form"
                .into(),
        )),
    }
}

fn dest(ctx: &Ctx) -> Dest {
    match &ctx.output {
        Some(path) => Dest::File(path.clone()),
        None => Dest::Stdout,
    }
}

fn method_label(method: MethodArg) -> &'static str {
    match method {
        MethodArg::Matrix => Method::Matrix.tag(),
        MethodArg::ClosedForm => Method::ClosedForm.tag(),
        MethodArg::Oracle => "oracle",
    }
}

/// The run-identity half of a table's metadata line.
struct RunStamp<'a> {
    command: &'a str,
    branch: Branch,
    method: &'a str,
    jobs: usize,
    reproducible: bool,
}

fn assemble_metadata(
    settings: &Settings,
    stamp: &RunStamp<'_>,
    extra: &[(String, String)],
    skip: &[&str],
) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = vec![
        ("version".into(), env!("CARGO_PKG_VERSION").into()),
        ("command".into(), stamp.command.into()),
        ("branch".into(), stamp.branch.name().into()),
        ("method".into(), stamp.method.into()),
        ("jobs".into(), stamp.jobs.to_string()),
    ];
    out.extend(extra.iter().cloned());
    out.extend(settings.metadata(skip));
    if !stamp.reproducible {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        out.push(("generated_unix_s".into(), now.to_string()));
    }
    out
}

fn sweep_metadata(
    ctx: &Ctx,
    command: &str,
    extra: &[(String, String)],
    skip: &[&str],
) -> Vec<(String, String)> {
    let stamp = RunStamp {
        command,
        branch: ctx.branch,
        method: method_label(ctx.method),
        jobs: ctx.jobs,
        reproducible: ctx.reproducible,
    };
    assemble_metadata(&ctx.settings, &stamp, extra, skip)
}

pub fn steady(ctx: &Ctx) -> Result<(), Failure> {
    no_dump(ctx)?;
    let derived = ctx.settings.to_physical().derive()?;
    let ss = solve_steady_state(&derived, ctx.branch)?;
    let wm = derived.mech_frequency;
    let row = vec![
        Cell::Text(ss.branch.name().into()),
        Cell::Int(ss.branch_index as i64),
        Cell::Int(ss.roots.len() as i64),
        Cell::Num(ss.photon_number),
        Cell::Num(ss.field.re),
        Cell::Num(ss.field.im),
        Cell::Num(ss.displacement),
        Cell::Num(ss.kerr_shift),
        Cell::Num(ss.kerr_shift / wm),
        Cell::Num(ss.effective_detuning),
        Cell::Num(ss.effective_detuning / wm),
        Cell::Num(ss.omit_linewidth),
        Cell::Bool(ss.near_bistable),
        Cell::Bool(ss.unstable_candidate),
    ];
    let table = Table { columns: STEADY_COLUMNS, rows: vec![row] };
    emit(&table, &sweep_metadata(ctx, "steady", &[], &[]), ctx.format, &dest(ctx))
}

fn analytic_spectrum_rows(
    ss: &SteadyState64,
    omegas: Vec<f64>,
    method: Method,
    jobs: usize,
) -> Result<Vec<(f64, SidebandResponse64)>, Failure> {
    let results = map_ordered(jobs, omegas, |w| observables_with(ss, w, method).map(|r| (w, r)))?;
    results.into_iter().map(|r| r.map_err(Failure::from)).collect()
}

fn oracle_spectrum_row(ss: &SteadyState64, w: f64, demod: &DemodResult64) -> Vec<Cell> {
    let wm = ss.derived.mech_frequency;
    let scale = ss.derived.decay_rate / ss.derived.probe_amplitude;
    let tp = C64::new(1.0, 0.0) - demod.field(1) * scale;
    let s2 = -demod.field(2) * scale;
    vec![
        Cell::Num(w),
        Cell::Num(w / wm),
        Cell::Num(tp.norm_sqr()),
        Cell::Num(s2.norm()),
        Cell::Num(tp.arg()),
        Cell::Num(s2.arg()),
        Cell::Text("oracle".into()),
    ]
}

fn grid_metadata(grid: &GridSpec) -> Vec<(String, String)> {
    vec![
        ("grid_min_over_omega_m".into(), format!("{:?}", grid.min)),
        ("grid_max_over_omega_m".into(), format!("{:?}", grid.max)),
        ("grid_points".into(), grid.points.to_string()),
    ]
}

pub fn spectrum(ctx: &Ctx, grid: &GridSpec) -> Result<(), Failure> {
    validate_omega_grid(grid)?;
    let derived = ctx.settings.to_physical().derive()?;
    let ss = solve_steady_state(&derived, ctx.branch)?;
    let wm = derived.mech_frequency;
    let omegas: Vec<f64> =
        linspace(grid.min, grid.max, grid.points).into_iter().map(|f| f * wm).collect();

    let rows: Vec<Vec<Cell>> = match ctx.method {
        MethodArg::Matrix | MethodArg::ClosedForm => {
            no_dump(ctx)?;
            let method = analytic_method(ctx)?;
            analytic_spectrum_rows(&ss, omegas, method, ctx.jobs)?
                .into_iter()
                .map(|(w, r)| {
                    vec![
                        Cell::Num(w),
                        Cell::Num(w / wm),
                        Cell::Num(r.tp_abs2),
                        Cell::Num(r.eta),
                        Cell::Num(r.transmission.arg()),
                        Cell::Num(r.second_sideband.arg()),
                        Cell::Text(r.method.tag().into()),
                    ]
                })
                .collect()
        }
        MethodArg::Oracle => {
            if derived.probe_amplitude <= 0.0 {
                return Err(Failure::Validation(
                    "an oracle spectrum needs a nonzero probe drive".into(),
                ));
            }
            let config = OracleConfig::default();
            if let Some(path) = &ctx.dump_trajectory {
                if omegas.len() != 1 {
                    return Err(Failure::Validation(
                        "--dump-trajectory needs a single-point run (--points 1)".into(),
                    ));
                }
                let meta = sweep_metadata(ctx, "spectrum-trajectory", &grid_metadata(grid), &[]);
                let demod = integrate_dumped(&ss, omegas[0], &config, path, &meta)?;
                vec![oracle_spectrum_row(&ss, omegas[0], &demod)]
            } else {
                let results =
                    map_ordered(ctx.jobs, omegas, |w| integrate(&ss, w, &config).map(|d| (w, d)))?;
                let mut rows = Vec::with_capacity(results.len());
                for result in results {
                    let (w, demod) = result?;
                    rows.push(oracle_spectrum_row(&ss, w, &demod));
                }
                rows
            }
        }
    };

    let table = Table { columns: SPECTRUM_COLUMNS, rows };
    emit(&table, &sweep_metadata(ctx, "spectrum", &grid_metadata(grid), &[]), ctx.format, &dest(ctx))
}

pub fn delay(ctx: &Ctx, spec: &DelaySpec) -> Result<(), Failure> {
    no_dump(ctx)?;
    if !matches!(ctx.method, MethodArg::Matrix) {
        return Err(Failure::Validation(
            "delay sweeps differentiate the matrix-solve phases; use --method matrix".into(),
        ));
    }
    validate_count_order(spec.points, spec.min, spec.max)?;
    let wm = ctx.settings.mech_frequency();
    match spec.axis {
        DelayAxis::PumpPower => {
            if spec.min < 0.0 {
                return Err(Failure::Validation("pump power cannot be negative".into()));
            }
            let powers = linspace(spec.min, spec.max, spec.points);
            let settings = &ctx.settings;
            let branch = ctx.branch;
            let results = map_ordered(ctx.jobs, powers, move |p| {
                let derived = settings.with_pump_power(p).to_physical().derive()?;
                let ss = solve_steady_state(&derived, branch)?;
                let gd = group_delays(&ss)?;
                Ok::<_, kerromit::Error>(vec![
                    Cell::Num(p),
                    Cell::Num(gd.tau1),
                    Cell::Num(gd.tau2),
                ])
            })?;
            let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
            let extra = vec![
                ("axis".into(), "pump_power_w".into()),
                ("grid_min_w".into(), format!("{:?}", spec.min)),
                ("grid_max_w".into(), format!("{:?}", spec.max)),
                ("grid_points".into(), spec.points.to_string()),
                ("probe_detuning_over_omega_m".into(), "1".into()),
            ];
            let table = Table { columns: DELAY_POWER_COLUMNS, rows };
            let meta = sweep_metadata(ctx, "delay", &extra, &["pump_power_w"]);
            emit(&table, &meta, ctx.format, &dest(ctx))
        }
        DelayAxis::Detuning => {
            let fracs = linspace(spec.min, spec.max, spec.points);
            let settings = &ctx.settings;
            let branch = ctx.branch;
            let results = map_ordered(ctx.jobs, fracs, move |f| {
                let derived = settings.with_detuning_frac(f).to_physical().derive()?;
                let ss = solve_steady_state(&derived, branch)?;
                let gd = group_delays(&ss)?;
                Ok::<_, kerromit::Error>(vec![
                    Cell::Num(f * wm),
                    Cell::Num(f),
                    Cell::Num(gd.tau1),
                    Cell::Num(gd.tau2),
                ])
            })?;
            let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
            let extra = vec![
                ("axis".into(), "detuning_over_omega_m".into()),
                ("grid_min_over_omega_m".into(), format!("{:?}", spec.min)),
                ("grid_max_over_omega_m".into(), format!("{:?}", spec.max)),
                ("grid_points".into(), spec.points.to_string()),
                ("probe_detuning_over_omega_m".into(), "1".into()),
            ];
            let table = Table { columns: DELAY_DETUNING_COLUMNS, rows };
            let skip = ["detuning_rad_per_s", "detuning_over_omega_m"];
            emit(&table, &sweep_metadata(ctx, "delay", &extra, &skip), ctx.format, &dest(ctx))
        }
    }
}

fn kerr_shift_rows(rows: Vec<kerromit::steady_state::OperatingPointRow<f64>>, wm: f64) -> Vec<Vec<Cell>> {
    rows.into_iter()
        .map(|row| {
            vec![
                Cell::Num(row.pump_power),
                Cell::Num(row.kerr),
                Cell::Num(row.state.photon_number),
                Cell::Num(row.state.kerr_shift),
                Cell::Num(row.state.kerr_shift / wm),
                Cell::Num(row.state.effective_detuning),
                Cell::Num(row.state.effective_detuning / wm),
            ]
        })
        .collect()
}

/// Converts a tagged coefficient to rad/s through the same ingest path the
/// solver uses, so the CLI never duplicates the unit table.
fn coefficient_rad_per_s(
    settings: &Settings,
    value: f64,
    unit: KerrUnit,
) -> Result<f64, Failure> {
    Ok(settings.with_kerr(value, unit).to_physical().derive()?.kerr)
}

fn kerr_grid_metadata(spec: &KerrShiftSpec) -> Vec<(String, String)> {
    let values: Vec<String> = spec.u_values.iter().map(|v| format!("{v:?}")).collect();
    vec![
        ("axis".into(), "pump_power_w,kerr_u_rad_per_s".into()),
        ("power_grid_min_w".into(), format!("{:?}", spec.power_min)),
        ("power_grid_max_w".into(), format!("{:?}", spec.power_max)),
        ("power_grid_points".into(), spec.power_points.to_string()),
        ("kerr_u_values".into(), values.join(",")),
        ("kerr_u_unit".into(), kerr_unit_name(spec.u_unit).into()),
        ("u_interpretation".into(), kerr_unit_note(spec.u_unit)),
    ]
}

const KERR_SKIP: &[&str] =
    &["pump_power_w", "kerr_u", "kerr_u_unit", "mode_volume_m3", "u_interpretation"];

pub fn kerr_shift(ctx: &Ctx, spec: &KerrShiftSpec) -> Result<(), Failure> {
    no_dump(ctx)?;
    validate_count_order(spec.power_points, spec.power_min, spec.power_max)?;
    if spec.power_min < 0.0 {
        return Err(Failure::Validation("pump power cannot be negative".into()));
    }
    if spec.u_values.is_empty() {
        return Err(Failure::Validation("kerr-shift needs at least one --u value".into()));
    }
    let powers = linspace(spec.power_min, spec.power_max, spec.power_points);
    let mut us = Vec::with_capacity(spec.u_values.len());
    for &value in &spec.u_values {
        us.push(coefficient_rad_per_s(&ctx.settings, value, spec.u_unit)?);
    }
    let base = ctx.settings.to_physical();
    let rows = kerr_shift_curve(&base, &powers, &us, ctx.branch)?;
    let wm = ctx.settings.mech_frequency();
    let table = Table { columns: KERR_SHIFT_COLUMNS, rows: kerr_shift_rows(rows, wm) };
    let meta = sweep_metadata(ctx, "kerr-shift", &kerr_grid_metadata(spec), KERR_SKIP);
    emit(&table, &meta, ctx.format, &dest(ctx))
}

fn oracle_check_row(
    ss: &SteadyState64,
    w: f64,
    report: &kerromit::oracle::ComparisonReport<f64>,
) -> Vec<Cell> {
    let wm = ss.derived.mech_frequency;
    vec![
        Cell::Num(w),
        Cell::Num(w / wm),
        Cell::Num(report.tp_abs2_analytic),
        Cell::Num(report.tp_abs2_oracle),
        Cell::Num(report.tp_abs2_dev),
        Cell::Num(report.eta_analytic),
        Cell::Num(report.eta_oracle),
        Cell::Num(report.eta_dev),
        Cell::Num(report.mean_field_dev),
        Cell::Text(report.branch.into()),
        Cell::Bool(report.near_bistable),
        Cell::Bool(report.pass),
    ]
}

pub fn oracle_check(ctx: &Ctx, grid: &GridSpec) -> Result<(), Failure> {
    validate_omega_grid(grid)?;
    let method = analytic_method(ctx)?;
    let derived = ctx.settings.to_physical().derive()?;
    if derived.probe_amplitude <= 0.0 {
        return Err(Failure::Validation("oracle-check needs a nonzero probe drive".into()));
    }
    let ss = solve_steady_state(&derived, ctx.branch)?;
    let wm = derived.mech_frequency;
    let omegas: Vec<f64> =
        linspace(grid.min, grid.max, grid.points).into_iter().map(|f| f * wm).collect();
    let config = OracleConfig::default();

    let reports: Vec<(f64, kerromit::oracle::ComparisonReport<f64>)> =
        if let Some(path) = &ctx.dump_trajectory {
            if omegas.len() != 1 {
                return Err(Failure::Validation(
                    "--dump-trajectory needs a single-point run (--points 1)".into(),
                ));
            }
            let meta = sweep_metadata(ctx, "oracle-check-trajectory", &grid_metadata(grid), &[]);
            let demod = integrate_dumped(&ss, omegas[0], &config, path, &meta)?;
            let resp = observables_with(&ss, omegas[0], method)?;
            let report = compare(&ss, &(&resp).into(), &demod, Tolerances::default())?;
            vec![(omegas[0], report)]
        } else {
            let results = map_ordered(ctx.jobs, omegas, |w| {
                let resp = observables_with(&ss, w, method)?;
                let demod = integrate(&ss, w, &config)?;
                let report = compare(&ss, &(&resp).into(), &demod, Tolerances::default())?;
                Ok::<_, kerromit::Error>((w, report))
            })?;
            results.into_iter().collect::<Result<Vec<_>, _>>()?
        };

    let failed = reports.iter().filter(|(_, r)| !r.pass).count();
    let total = reports.len();
    let rows = reports.iter().map(|(w, r)| oracle_check_row(&ss, *w, r)).collect();
    let table = Table { columns: ORACLE_CHECK_COLUMNS, rows };
    emit(&table, &sweep_metadata(ctx, "oracle-check", &grid_metadata(grid), &[]), ctx.format, &dest(ctx))?;
    if failed > 0 {
        return Err(Failure::OracleCheck(format!(
            "{failed} of {total} points outside tolerance \
             (|t_p|^2 budget 1e-2, eta budget 1e-1)"
        )));
    }
    Ok(())
}

/// Runs one traced integration, writing every accepted step as a CSV row.
/// The file carries the same metadata line as the table that referenced it.
fn integrate_dumped(
    ss: &SteadyState64,
    omega: f64,
    config: &OracleConfig<f64>,
    path: &Path,
    metadata: &[(String, String)],
) -> Result<DemodResult64, Failure> {
    let mut body = String::new();
    let demod = {
        let mut sink = |t: f64, a: C64, x: f64, p: f64| {
            let _ = writeln!(body, "{t:?},{:?},{:?},{x:?},{p:?}", a.re, a.im);
        };
        integrate_traced(ss, omega, config, &mut sink)?
    };
    let meta: Vec<String> = metadata.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let mut text = format!("# {}\n{}\n", meta.join(" "), TRAJECTORY_COLUMNS.join(","));
    text.push_str(&body);
    fs::write(path, text)
        .map_err(|e| Failure::Validation(format!("cannot write `{}`: {e}", path.display())))?;
    Ok(demod)
}

fn preset_dir(ctx: &Ctx) -> Result<PathBuf, Failure> {
    let dir = match &ctx.output {
        Some(path) => path.clone(),
        None => std::env::var_os("KERROMIT_OUTPUT_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    fs::create_dir_all(&dir)
        .map_err(|e| Failure::Validation(format!("cannot create `{}`: {e}", dir.display())))?;
    Ok(dir)
}

/// The derived quality factor sits a few percent off the quoted 1.7e7
/// because the decay rate is taken as authoritative; presets log the gap.
fn quoted_quality_entry(settings: &Settings) -> (String, String) {
    let q = settings.quality_factor();
    let gap = (q / 1.7e7 - 1.0) * 100.0;
    ("quality_factor_quoted".into(), format!("1.7e7(derived_differs_by_{gap:+.1}%)"))
}

fn preset_metadata(
    settings: &Settings,
    preset: &str,
    ctx: &Ctx,
    extra: &[(String, String)],
    skip: &[&str],
) -> Vec<(String, String)> {
    let mut combined = vec![("preset".to_string(), preset.to_string())];
    combined.extend(extra.iter().cloned());
    combined.push(quoted_quality_entry(settings));
    let stamp = RunStamp {
        command: "preset",
        branch: Branch::Lower,
        method: Method::Matrix.tag(),
        jobs: ctx.jobs,
        reproducible: ctx.reproducible,
    };
    assemble_metadata(settings, &stamp, &combined, skip)
}

fn write_preset_table(
    ctx: &Ctx,
    dir: &Path,
    stem: &str,
    table: &Table,
    metadata: &[(String, String)],
) -> Result<(), Failure> {
    let path = dir.join(format!("{stem}.{}", ctx.format.extension()));
    emit(table, metadata, ctx.format, &Dest::File(path.clone()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

pub fn preset(ctx: &Ctx, name: PresetName) -> Result<(), Failure> {
    no_dump(ctx)?;
    let dir = preset_dir(ctx)?;
    match name {
        PresetName::Fig1c => preset_fig1c(ctx, &dir),
        PresetName::Fig2 => preset_fig2(ctx, &dir),
        PresetName::Fig3 => preset_fig3(ctx, &dir),
        PresetName::Fig4 => preset_fig4(ctx, &dir),
    }
}

fn preset_fig1c(ctx: &Ctx, dir: &Path) -> Result<(), Failure> {
    let settings = Settings::baseline();
    let powers = linspace(0.0, 10e-3, 41);
    let tags = [0.5, 3.0, 8.0];
    let mut us = Vec::with_capacity(tags.len());
    for tag in tags {
        us.push(coefficient_rad_per_s(&settings, tag, KerrUnit::HzPaper)?);
    }
    let rows = kerr_shift_curve(&settings.to_physical(), &powers, &us, Branch::Lower)?;
    let wm = settings.mech_frequency();
    let table = Table { columns: KERR_SHIFT_COLUMNS, rows: kerr_shift_rows(rows, wm) };
    let extra = vec![
        ("axis".into(), "pump_power_w,kerr_u_rad_per_s".into()),
        ("power_grid_min_w".into(), "0".into()),
        ("power_grid_max_w".into(), "0.01".into()),
        ("power_grid_points".into(), "41".into()),
        ("kerr_u_values".into(), "0.5,3,8".into()),
        ("kerr_u_unit".into(), "hz_paper".into()),
        ("u_interpretation".into(), kerr_unit_note(KerrUnit::HzPaper)),
    ];
    let meta = preset_metadata(&settings, "fig1c", ctx, &extra, KERR_SKIP);
    write_preset_table(ctx, dir, "fig1c", &table, &meta)
}

fn preset_fig2(ctx: &Ctx, dir: &Path) -> Result<(), Failure> {
    let grid = GridSpec { points: 2001, min: 0.8, max: 1.2 };
    for tag in [0.0, 3.0, 8.0] {
        let settings = Settings::baseline().with_kerr_tag(tag);
        let derived = settings.to_physical().derive()?;
        let ss = solve_steady_state(&derived, Branch::Lower)?;
        let wm = derived.mech_frequency;
        let omegas: Vec<f64> =
            linspace(grid.min, grid.max, grid.points).into_iter().map(|f| f * wm).collect();
        let full = analytic_spectrum_rows(&ss, omegas, Method::Matrix, ctx.jobs)?;
        let narrow = |value: fn(&SidebandResponse64) -> f64| -> Vec<Vec<Cell>> {
            full.iter()
                .map(|(w, r)| vec![Cell::Num(*w), Cell::Num(w / wm), Cell::Num(value(r))])
                .collect()
        };
        let mut extra = grid_metadata(&grid);
        extra.push(("u_tag".into(), format!("{tag}")));
        let meta = preset_metadata(&settings, "fig2", ctx, &extra, &[]);
        let tp2 = Table { columns: TP2_COLUMNS, rows: narrow(|r| r.tp_abs2) };
        write_preset_table(ctx, dir, &format!("fig2_tp2_u{tag}"), &tp2, &meta)?;
        let eta = Table { columns: ETA_COLUMNS, rows: narrow(|r| r.eta) };
        write_preset_table(ctx, dir, &format!("fig2_eta_u{tag}"), &eta, &meta)?;
    }
    Ok(())
}

fn preset_fig3(ctx: &Ctx, dir: &Path) -> Result<(), Failure> {
    let grid = GridSpec { points: 2001, min: 0.8, max: 1.2 };
    for det in [-0.5, -1.0, -1.5] {
        let settings = Settings::baseline().with_kerr_tag(3.0).with_detuning_frac(det);
        let derived = settings.to_physical().derive()?;
        let ss = solve_steady_state(&derived, Branch::Lower)?;
        let wm = derived.mech_frequency;
        let omegas: Vec<f64> =
            linspace(grid.min, grid.max, grid.points).into_iter().map(|f| f * wm).collect();
        let rows: Vec<Vec<Cell>> = analytic_spectrum_rows(&ss, omegas, Method::Matrix, ctx.jobs)?
            .into_iter()
            .map(|(w, r)| {
                vec![
                    Cell::Num(w),
                    Cell::Num(w / wm),
                    Cell::Num(r.tp_abs2),
                    Cell::Num(r.eta),
                    Cell::Num(r.transmission.arg()),
                    Cell::Num(r.second_sideband.arg()),
                    Cell::Text(r.method.tag().into()),
                ]
            })
            .collect();
        let table = Table { columns: SPECTRUM_COLUMNS, rows };
        let extra = grid_metadata(&grid);
        let meta = preset_metadata(&settings, "fig3", ctx, &extra, &[]);
        write_preset_table(ctx, dir, &format!("fig3_det{det:.1}"), &table, &meta)?;
    }
    Ok(())
}

fn preset_fig4(ctx: &Ctx, dir: &Path) -> Result<(), Failure> {
    let powers = linspace(0.5e-3, 10e-3, 39);
    for tag in [0.0, 3.0, 8.0] {
        let settings = Settings::baseline().with_kerr_tag(tag);
        let results = map_ordered(ctx.jobs, powers.clone(), |p| {
            let derived = settings.with_pump_power(p).to_physical().derive()?;
            let ss = solve_steady_state(&derived, Branch::Lower)?;
            let gd = group_delays(&ss)?;
            Ok::<_, kerromit::Error>(vec![Cell::Num(p), Cell::Num(gd.tau1), Cell::Num(gd.tau2)])
        })?;
        let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
        let table = Table { columns: DELAY_POWER_COLUMNS, rows };
        let extra = vec![
            ("axis".into(), "pump_power_w".into()),
            ("grid_min_w".into(), "0.0005".into()),
            ("grid_max_w".into(), "0.01".into()),
            ("grid_points".into(), "39".into()),
            ("probe_detuning_over_omega_m".into(), "1".into()),
            ("u_tag".into(), format!("{tag}")),
        ];
        let meta = preset_metadata(&settings, "fig4", ctx, &extra, &["pump_power_w"]);
        write_preset_table(ctx, dir, &format!("fig4_tau_u{tag}"), &table, &meta)?;
    }
    Ok(())
}
