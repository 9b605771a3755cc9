//! End-to-end tests of the installed binary: output layout, determinism,
//! exit codes, and the preset bundles.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kerromit"))
        .args(args)
        .env_remove("KERROMIT_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "expected success for {args:?}, stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 output")
}

fn exit_code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

/// Splits a CSV table into its metadata line, header cells, and data rows.
/// No cell the binary emits contains a comma, so a plain split suffices.
fn parse_csv(text: &str) -> (String, Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let meta = lines.next().expect("metadata line").to_string();
    let header = lines
        .next()
        .expect("header line")
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (meta, header, rows)
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    fs::create_dir_all(&dir).expect("create test dir");
    dir
}

#[test]
fn spectrum_layout_is_metadata_header_rows() {
    let text = stdout_ok(&["spectrum", "--points", "11", "--reproducible"]);
    let (meta, header, rows) = parse_csv(&text);
    assert!(meta.starts_with("# "), "metadata line: {meta}");
    assert!(meta.contains(concat!("version=", env!("CARGO_PKG_VERSION"))));
    assert!(meta.contains("command=spectrum"));
    assert!(meta.contains("method=matrix-solve"));
    assert!(meta.contains("grid_points=11"));
    assert!(!meta.contains("generated_unix_s"));
    assert_eq!(
        header,
        ["omega_rad_per_s", "omega_over_omega_m", "tp_abs2", "eta", "arg_tp_rad", "arg_s2_rad", "method"]
    );
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0][1], "0.8");
    assert_eq!(rows[10][1], "1.2");
    for row in &rows {
        assert_eq!(row.len(), header.len());
        assert_eq!(row[6], "matrix-solve");
    }
}

#[test]
fn reproducible_runs_are_byte_identical() {
    let args = ["spectrum", "--points", "11", "--reproducible"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    // Without the flag a timestamp lands in the metadata line.
    let c = run(&["spectrum", "--points", "11"]);
    let text = String::from_utf8(c.stdout).unwrap();
    assert!(text.lines().next().unwrap().contains("generated_unix_s="));
}

#[test]
fn worker_count_does_not_change_output() {
    let serial = run(&["spectrum", "--points", "101", "--reproducible", "--jobs", "1"]);
    let parallel = run(&["spectrum", "--points", "101", "--reproducible", "--jobs", "4"]);
    // The metadata line records the worker count, so compare from the
    // header on: every computed byte must be identical.
    let body = |out: &[u8]| {
        let text = String::from_utf8(out.to_vec()).unwrap();
        text.lines().skip(1).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(body(&serial.stdout), body(&parallel.stdout));
}

#[test]
fn json_output_round_trips_and_matches_csv() {
    let json_text =
        stdout_ok(&["spectrum", "--points", "5", "--format", "json", "--reproducible"]);
    let value: serde_json::Value = serde_json::from_str(&json_text).expect("valid json");
    let rows = value["rows"].as_array().expect("rows array");
    assert_eq!(rows.len(), 5);
    assert_eq!(value["metadata"]["command"], "spectrum");
    let reparsed: serde_json::Value =
        serde_json::from_str(&serde_json::to_string(&value).unwrap()).unwrap();
    assert_eq!(value, reparsed);

    let csv_text = stdout_ok(&["spectrum", "--points", "5", "--reproducible"]);
    let (_, header, csv_rows) = parse_csv(&csv_text);
    let col = header.iter().position(|h| h == "tp_abs2").unwrap();
    let from_csv: f64 = csv_rows[0][col].parse().unwrap();
    let from_json = rows[0]["tp_abs2"].as_f64().unwrap();
    assert_eq!(from_csv.to_bits(), from_json.to_bits());
}

#[test]
fn single_point_grid_matches_the_first_row_of_a_sweep() {
    let one = stdout_ok(&["spectrum", "--points", "1", "--reproducible"]);
    let eleven = stdout_ok(&["spectrum", "--points", "11", "--reproducible"]);
    let (_, _, one_rows) = parse_csv(&one);
    let (_, _, eleven_rows) = parse_csv(&eleven);
    assert_eq!(one_rows.len(), 1);
    assert_eq!(one_rows[0], eleven_rows[0]);
}

#[test]
fn bad_invocations_exit_1() {
    let dir = tmp_dir("bad-invocations");

    assert_eq!(exit_code(&["spectrum", "--no-such-flag"]), 1);
    assert_eq!(exit_code(&[]), 1);
    assert_eq!(exit_code(&["steady", "--param", "no_such_key=1"]), 1);
    assert_eq!(exit_code(&["steady", "--param", "pump_power_w=abc"]), 1);
    assert_eq!(exit_code(&["steady", "--param", "pump_power_w"]), 1);
    assert_eq!(
        exit_code(&["steady", "--param", "pump_power_w=1e-3", "--param", "pump_power_w=2e-3"]),
        1
    );
    // A bare coefficient has no meaning without its unit.
    assert_eq!(exit_code(&["steady", "--param", "kerr_u=4"]), 1);
    assert_eq!(
        exit_code(&["steady", "--param", "probe_ratio=0.1", "--param", "probe_power_w=1e-6"]),
        1
    );
    assert_eq!(exit_code(&["spectrum", "--points", "0"]), 1);
    assert_eq!(exit_code(&["spectrum", "--min", "0", "--max", "1.2"]), 1);
    assert_eq!(exit_code(&["spectrum", "--min", "1.2", "--max", "0.9"]), 1);
    assert_eq!(exit_code(&["delay", "--method", "closed-form"]), 1);

    let unknown_key = dir.join("unknown-key.json");
    fs::write(&unknown_key, r#"{"no_such_key": 1.0}"#).unwrap();
    assert_eq!(exit_code(&["steady", "--config", unknown_key.to_str().unwrap()]), 1);

    let malformed = dir.join("malformed.json");
    fs::write(&malformed, "{ not json").unwrap();
    assert_eq!(exit_code(&["steady", "--config", malformed.to_str().unwrap()]), 1);

    assert_eq!(exit_code(&["steady", "--config", "/no/such/file.json"]), 1);
    // The output path is an existing directory, so the write must fail.
    assert_eq!(exit_code(&["steady", "--output", dir.to_str().unwrap()]), 1);
}

#[test]
fn help_and_version_exit_0() {
    assert_eq!(exit_code(&["--help"]), 0);
    assert_eq!(exit_code(&["--version"]), 0);
    assert_eq!(exit_code(&["spectrum", "--help"]), 0);
}

#[test]
fn missing_branch_exits_2() {
    // The baseline cubic has a single root, so the middle branch is absent.
    let out = run(&["steady", "--branch", "middle"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error:"), "stderr: {stderr}");
}

#[test]
fn oracle_check_passes_with_a_weak_probe() {
    let out = run(&[
        "oracle-check",
        "--points",
        "1",
        "--min",
        "1.1",
        "--max",
        "1.1",
        "--param",
        "probe_ratio=0.005",
        "--reproducible",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (_, header, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    let pass_col = header.iter().position(|h| h == "pass").unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][pass_col], "true");
}

#[test]
fn oracle_check_failure_exits_3_after_writing_the_table() {
    // At the baseline 5% probe the quadratic probe back-action pushes the
    // band-edge transmission outside the first-order budget.
    let out = run(&[
        "oracle-check",
        "--points",
        "1",
        "--min",
        "0.8",
        "--max",
        "0.8",
        "--reproducible",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let (_, header, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    let pass_col = header.iter().position(|h| h == "pass").unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][pass_col], "false");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("outside tolerance"), "stderr: {stderr}");
}

#[test]
fn trajectory_dump_needs_a_single_point() {
    let dir = tmp_dir("trajectory");
    let path = dir.join("trace.csv");
    let out = run(&[
        "oracle-check",
        "--points",
        "1",
        "--min",
        "1.0",
        "--max",
        "1.0",
        "--reproducible",
        "--dump-trajectory",
        path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(&path).expect("trajectory file");
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# "));
    assert_eq!(lines.next().unwrap(), "t_s,re_a,im_a,x_m,p_kg_m_s");
    assert!(lines.next().unwrap().starts_with("0.0,"), "trace starts at t = 0");

    assert_eq!(
        exit_code(&[
            "spectrum",
            "--method",
            "oracle",
            "--points",
            "2",
            "--dump-trajectory",
            path.to_str().unwrap(),
        ]),
        1
    );
    assert_eq!(exit_code(&["steady", "--dump-trajectory", path.to_str().unwrap()]), 1);
}

#[test]
fn delay_schemas_follow_the_axis() {
    let power = stdout_ok(&["delay", "--points", "3", "--reproducible"]);
    let (meta, header, rows) = parse_csv(&power);
    assert!(meta.contains("axis=pump_power_w"));
    assert_eq!(header, ["pump_power_w", "tau1_s", "tau2_s"]);
    assert_eq!(rows.len(), 3);

    let detuning = stdout_ok(&["delay", "--axis", "detuning", "--points", "3", "--reproducible"]);
    let (meta, header, rows) = parse_csv(&detuning);
    assert!(meta.contains("axis=detuning_over_omega_m"));
    assert_eq!(header, ["detuning_rad_per_s", "detuning_over_omega_m", "tau1_s", "tau2_s"]);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][1], "-1.5");
    assert_eq!(rows[2][1], "-0.5");
}

#[test]
fn kerr_shift_orders_rows_power_major_and_shift_grows_with_u() {
    let text = stdout_ok(&["kerr-shift", "--power-points", "3", "--reproducible"]);
    let (_, header, rows) = parse_csv(&text);
    assert_eq!(rows.len(), 9, "3 powers x 3 default coefficients");
    let power_col = header.iter().position(|h| h == "pump_power_w").unwrap();
    let n_col = header.iter().position(|h| h == "photon_number").unwrap();
    let shift_col = header.iter().position(|h| h == "kerr_shift_rad_per_s").unwrap();

    let powers: Vec<f64> = rows.iter().map(|r| r[power_col].parse().unwrap()).collect();
    assert!(powers[..3].iter().all(|&p| p == 0.0));
    assert!(powers[3..6].iter().all(|&p| p == 0.005));
    assert!(powers[6..].iter().all(|&p| p == 0.01));

    for row in &rows[..3] {
        let n: f64 = row[n_col].parse().unwrap();
        assert_eq!(n, 0.0, "no pump, no photons");
    }
    // Within one power block the rows scan the coefficient upward, and a
    // stronger coefficient drags the resonance further.
    let shifts: Vec<f64> = rows[6..].iter().map(|r| r[shift_col].parse::<f64>().unwrap().abs()).collect();
    assert!(shifts[0] < shifts[1] && shifts[1] < shifts[2], "shifts: {shifts:?}");
}

#[test]
fn preset_fig2_writes_six_full_tables() {
    let dir = tmp_dir("preset-fig2");
    let out = run(&["preset", "fig2", "--output", dir.to_str().unwrap(), "--reproducible"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let names = [
        "fig2_tp2_u0.csv",
        "fig2_eta_u0.csv",
        "fig2_tp2_u3.csv",
        "fig2_eta_u3.csv",
        "fig2_tp2_u8.csv",
        "fig2_eta_u8.csv",
    ];
    for name in names {
        let text = fs::read_to_string(dir.join(name)).unwrap_or_else(|_| panic!("{name} exists"));
        let (meta, header, rows) = parse_csv(&text);
        assert!(meta.contains("preset=fig2"), "{name}: {meta}");
        assert_eq!(rows.len(), 2001, "{name}");
        assert_eq!(header[0], "omega_rad_per_s");
        assert_eq!(header.len(), 3);
    }
}

#[test]
fn preset_rejects_parameter_overrides() {
    let dir = tmp_dir("preset-guard");
    assert_eq!(
        exit_code(&["preset", "fig1c", "--param", "probe_ratio=0.1", "--output", dir.to_str().unwrap()]),
        1
    );
    assert_eq!(
        exit_code(&["preset", "fig1c", "--branch", "upper", "--output", dir.to_str().unwrap()]),
        1
    );
    assert_eq!(
        exit_code(&["preset", "fig1c", "--method", "oracle", "--output", dir.to_str().unwrap()]),
        1
    );
    let config = dir.join("config.json");
    fs::write(&config, r#"{"pump_power_w": 1e-3}"#).unwrap();
    assert_eq!(
        exit_code(&["preset", "fig1c", "--config", config.to_str().unwrap(), "--output", dir.to_str().unwrap()]),
        1
    );
}

#[test]
fn preset_fig1c_shift_magnitude_grows_with_power() {
    let dir = tmp_dir("preset-fig1c");
    let out = run(&["preset", "fig1c", "--output", dir.to_str().unwrap(), "--reproducible"]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.join("fig1c.csv")).unwrap();
    let (_, header, rows) = parse_csv(&text);
    assert_eq!(rows.len(), 41 * 3);
    let u_col = header.iter().position(|h| h == "kerr_u_rad_per_s").unwrap();
    let shift_col = header.iter().position(|h| h == "kerr_shift_rad_per_s").unwrap();

    let mut by_u: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
    for row in &rows {
        by_u.entry(row[u_col].clone())
            .or_default()
            .push(row[shift_col].parse::<f64>().unwrap().abs());
    }
    assert_eq!(by_u.len(), 3);
    for (u, shifts) in by_u {
        assert_eq!(shifts.len(), 41);
        for pair in shifts.windows(2) {
            assert!(pair[0] <= pair[1], "u={u}: shift magnitude dipped: {pair:?}");
        }
    }
}
