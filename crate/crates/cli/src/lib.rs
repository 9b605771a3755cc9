//! Command-line front end: argument parsing, parameter merging, and the
//! mapping from failures to process exit codes. The sweeps themselves live
//! in [`commands`]; `main.rs` only calls [`run`].

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use kerromit::{Branch, ErrorClass, KerrUnit};

pub mod commands;
pub mod config;
pub mod output;
pub mod sweep;

use commands::{DelayAxis, DelaySpec, GridSpec, KerrShiftSpec, PresetName};
use config::{ConfigFile, Settings};
use output::Format;

/// Anything that stops a run, sorted by exit code: bad input (1), a solver
/// or integrator breakdown (2), and an oracle comparison outside tolerance
/// after the table was already written (3).
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Numerical(String),
    OracleCheck(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::OracleCheck(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Numerical(m) | Failure::OracleCheck(m) => m,
        }
    }
}

impl From<kerromit::Error> for Failure {
    fn from(err: kerromit::Error) -> Failure {
        match err.class() {
            ErrorClass::Validation => Failure::Validation(err.to_string()),
            ErrorClass::Numerical => Failure::Numerical(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    Lower,
    Middle,
    Upper,
}

impl From<BranchArg> for Branch {
    fn from(arg: BranchArg) -> Branch {
        match arg {
            BranchArg::Lower => Branch::Lower,
            BranchArg::Middle => Branch::Middle,
            BranchArg::Upper => Branch::Upper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Linear solve of the coupled sideband system.
    Matrix,
    /// Explicit first- and second-order expressions.
    ClosedForm,
    /// Time-domain integration of the equations of motion.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(arg: FormatArg) -> Format {
        match arg {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    PumpPower,
    Detuning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KerrUnitArg {
    #[value(name = "rad_per_s")]
    RadPerS,
    #[value(name = "hz")]
    Hz,
    #[value(name = "hz_paper")]
    HzPaper,
}

impl From<KerrUnitArg> for KerrUnit {
    fn from(arg: KerrUnitArg) -> KerrUnit {
        match arg {
            KerrUnitArg::RadPerS => KerrUnit::RadPerSec,
            KerrUnitArg::Hz => KerrUnit::Hz,
            KerrUnitArg::HzPaper => KerrUnit::HzPaper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    Fig1c,
    Fig2,
    Fig3,
    Fig4,
}

impl From<PresetArg> for PresetName {
    fn from(arg: PresetArg) -> PresetName {
        match arg {
            PresetArg::Fig1c => PresetName::Fig1c,
            PresetArg::Fig2 => PresetName::Fig2,
            PresetArg::Fig3 => PresetName::Fig3,
            PresetArg::Fig4 => PresetName::Fig4,
        }
    }
}

/// Everything a subcommand needs besides its own grid flags.
pub struct Ctx {
    pub settings: Settings,
    pub branch: Branch,
    pub method: MethodArg,
    pub jobs: usize,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub reproducible: bool,
    pub dump_trajectory: Option<PathBuf>,
}

#[derive(Parser)]
#[command(name = "kerromit", version, about = "Pump-probe sweeps of a Kerr optomechanical cavity")]
struct Cli {
    /// JSON parameter file applied over the built-in baseline.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Single override as key=value, applied after --config; repeatable.
    /// Keys are the config-file field names.
    #[arg(long, global = true, value_name = "KEY=VALUE")]
    param: Vec<String>,

    /// Photon-number branch to operate on when the cubic has three roots.
    #[arg(long, global = true, value_enum, default_value_t = BranchArg::Lower)]
    branch: BranchArg,

    /// How the sideband response is evaluated.
    #[arg(long, global = true, value_enum, default_value_t = MethodArg::Matrix)]
    method: MethodArg,

    /// Worker threads for sweeps; 0 uses one per core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Output file, or output directory for presets. Default: stdout for
    /// tables, $KERROMIT_OUTPUT_DIR (falling back to `.`) for presets.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    /// Omit the generation timestamp so repeated runs are byte-identical.
    #[arg(long, global = true)]
    reproducible: bool,

    /// Write the time-domain trajectory of a single-point oracle run
    /// (spectrum --method oracle --points 1, or oracle-check --points 1)
    /// to this CSV path.
    #[arg(long, global = true, value_name = "PATH")]
    dump_trajectory: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the pump-only operating point and print it as a one-row table.
    Steady,

    /// Sweep the probe detuning; print probe transmission and the
    /// second-sideband efficiency.
    Spectrum {
        #[arg(long, default_value_t = 2001)]
        points: usize,
        /// Grid start, in units of the mechanical frequency.
        #[arg(long, default_value_t = 0.8)]
        min: f64,
        /// Grid end, in units of the mechanical frequency.
        #[arg(long, default_value_t = 1.2)]
        max: f64,
    },

    /// Sweep pump power or pump detuning; print both group delays with the
    /// probe fixed at the transparency window.
    Delay {
        #[arg(long, value_enum, default_value_t = AxisArg::PumpPower)]
        axis: AxisArg,
        /// Grid size. Default: 39 for pump-power, 21 for detuning.
        #[arg(long)]
        points: Option<usize>,
        /// Grid start: W for pump-power, units of the mechanical frequency
        /// for detuning. Defaults: 0.0005 W, -1.5.
        #[arg(long)]
        min: Option<f64>,
        /// Grid end. Defaults: 0.01 W, -0.5.
        #[arg(long)]
        max: Option<f64>,
    },

    /// Sweep pump power for each Kerr coefficient; print photon number and
    /// the Kerr-induced detuning shift.
    KerrShift {
        #[arg(long, default_value_t = 0.0, value_name = "W")]
        power_min: f64,
        #[arg(long, default_value_t = 10e-3, value_name = "W")]
        power_max: f64,
        #[arg(long, default_value_t = 41)]
        power_points: usize,
        /// Kerr coefficient in --u-unit units; repeatable.
        /// Default: 0.5, 3, 8.
        #[arg(long = "u", value_name = "VALUE")]
        u_values: Vec<f64>,
        #[arg(long, value_enum, default_value_t = KerrUnitArg::HzPaper)]
        u_unit: KerrUnitArg,
    },

    /// Integrate the full equations of motion at each grid point and score
    /// the analytic response against the demodulated trajectory. Exits 3 if
    /// any point falls outside tolerance (the table is still written).
    OracleCheck {
        #[arg(long, default_value_t = 5)]
        points: usize,
        /// Grid start, in units of the mechanical frequency.
        #[arg(long, default_value_t = 0.8)]
        min: f64,
        /// Grid end, in units of the mechanical frequency.
        #[arg(long, default_value_t = 1.2)]
        max: f64,
    },

    /// Write one of the bundled reference sweeps to the output directory.
    /// Presets fix every parameter; --config, --param, --branch, and
    /// --method are rejected.
    Preset {
        #[arg(value_enum)]
        name: PresetArg,
    },
}

/// Parses `argv` (without the program name) and runs one subcommand,
/// returning the process exit code: 0 ok, 1 bad input, 2 numerical failure,
/// 3 oracle comparison out of tolerance.
pub fn run<I>(argv: I) -> i32
where
    I: IntoIterator<Item = String>,
{
    let full = std::iter::once("kerromit".to_string()).chain(argv);
    let cli = match Cli::try_parse_from(full) {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version land here as non-error output.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            failure.exit_code()
        }
    }
}

fn build_settings(cli: &Cli) -> Result<Settings, Failure> {
    let mut settings = Settings::baseline();
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Validation(format!("cannot read `{}`: {e}", path.display())))?;
        let file: ConfigFile = serde_json::from_str(&text)
            .map_err(|e| Failure::Validation(format!("`{}`: {e}", path.display())))?;
        settings.apply_config(&file)?;
    }
    if !cli.param.is_empty() {
        settings.apply_params(&cli.param)?;
    }
    Ok(settings)
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    if let Command::Preset { name } = cli.command {
        if cli.config.is_some() || !cli.param.is_empty() {
            return Err(Failure::Validation(
                "presets fix their own parameters; --config and --param do not apply".into(),
            ));
        }
        if cli.branch != BranchArg::Lower || cli.method != MethodArg::Matrix {
            return Err(Failure::Validation(
                "presets fix the branch and the method; drop --branch and --method".into(),
            ));
        }
        let ctx = Ctx {
            settings: Settings::baseline(),
            branch: Branch::Lower,
            method: MethodArg::Matrix,
            jobs: cli.jobs,
            format: cli.format.into(),
            output: cli.output.clone(),
            reproducible: cli.reproducible,
            dump_trajectory: cli.dump_trajectory.clone(),
        };
        return commands::preset(&ctx, name.into());
    }

    let settings = build_settings(&cli)?;
    let ctx = Ctx {
        settings,
        branch: cli.branch.into(),
        method: cli.method,
        jobs: cli.jobs,
        format: cli.format.into(),
        output: cli.output.clone(),
        reproducible: cli.reproducible,
        dump_trajectory: cli.dump_trajectory.clone(),
    };

    match cli.command {
        Command::Steady => commands::steady(&ctx),
        Command::Spectrum { points, min, max } => {
            commands::spectrum(&ctx, &GridSpec { points, min, max })
        }
        Command::Delay { axis, points, min, max } => {
            let (default_points, default_min, default_max) = match axis {
                AxisArg::PumpPower => (39, 0.5e-3, 10e-3),
                AxisArg::Detuning => (21, -1.5, -0.5),
            };
            let spec = DelaySpec {
                axis: match axis {
                    AxisArg::PumpPower => DelayAxis::PumpPower,
                    AxisArg::Detuning => DelayAxis::Detuning,
                },
                points: points.unwrap_or(default_points),
                min: min.unwrap_or(default_min),
                max: max.unwrap_or(default_max),
            };
            commands::delay(&ctx, &spec)
        }
        Command::KerrShift { power_min, power_max, power_points, u_values, u_unit } => {
            let spec = KerrShiftSpec {
                power_min,
                power_max,
                power_points,
                u_values: if u_values.is_empty() { vec![0.5, 3.0, 8.0] } else { u_values },
                u_unit: u_unit.into(),
            };
            commands::kerr_shift(&ctx, &spec)
        }
        Command::OracleCheck { points, min, max } => {
            commands::oracle_check(&ctx, &GridSpec { points, min, max })
        }
        Command::Preset { .. } => unreachable!("handled above"),
    }
}
