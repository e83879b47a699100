//! Command-line front end.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::acceptance;
use crate::beam::AlignmentMode;
use crate::mcengine::{run_sweep, Metric, SweepError, SweepEstimate, SweepSpec};
use crate::pathloss::RadioKind;
use crate::scenario::{linspace, load_config_file, ConfigError, ScenarioConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

pub const CSV_HEADER: &str =
    "metric,radio,n_elements,alignment,distance_m,mean,std_err,ci_lo,ci_hi,n_trials,seed";

#[derive(Debug, Parser)]
#[command(
    name = "v2vsim",
    version,
    about = "Monte Carlo V2V link simulator for 802.11p and 60 GHz mmWave"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one of the figure presets.
    Run {
        preset: Preset,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a single explicit sweep.
    Sweep {
        #[arg(long, default_value = "rate")]
        metric: Metric,
        #[arg(long, default_value = "mmwave")]
        radio: RadioKind,
        #[arg(long, default_value_t = 1)]
        elements: u32,
        /// aligned, misaligned or gps_pointed (mmwave only).
        #[arg(long)]
        alignment: Option<AlignmentMode>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check a scenario file and report every invalid field.
    ValidateConfig { path: PathBuf },
    /// Run the acceptance checks.
    Selftest {
        /// Use fewer trials per point (faster, looser).
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Scenario TOML file (defaults apply to missing keys).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Trials per distance.
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// "lo:hi:count" or a comma-separated list of distances in meters.
    #[arg(long, value_parser = parse_grid)]
    distances: Option<Grid>,
    /// Noise figure applied to both radios, replacing per-radio values.
    #[arg(long, allow_negative_numbers = true)]
    noise_figure_db: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    JsonLines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    FigPathloss,
    FigRate,
    FigOutage,
    FigMisalignment,
    FigGps,
}

impl Preset {
    /// Curve family of the preset, one spec per plotted curve.
    pub fn specs(self, config: &ScenarioConfig) -> Vec<SweepSpec> {
        let spec = |metric, radio, n, alignment| {
            SweepSpec::from_config(metric, radio, n, alignment, config)
        };
        let aligned = Some(AlignmentMode::Aligned);
        let arrays = |metric| {
            std::iter::once(spec(metric, RadioKind::Dsrc, 1, None))
                .chain([1, 4, 64].map(|n| spec(metric, RadioKind::MmWave, n, aligned)))
                .collect()
        };
        match self {
            Preset::FigPathloss => vec![
                spec(Metric::PathLoss, RadioKind::MmWave, 1, aligned),
                spec(Metric::PathLoss, RadioKind::Dsrc, 1, None),
                spec(Metric::LosProb, RadioKind::MmWave, 1, aligned),
                spec(Metric::LosProb, RadioKind::Dsrc, 1, None),
            ],
            Preset::FigRate => arrays(Metric::Rate),
            Preset::FigOutage => arrays(Metric::Outage),
            Preset::FigMisalignment => [1, 4, 64]
                .into_iter()
                .flat_map(|n| {
                    [AlignmentMode::Aligned, AlignmentMode::Misaligned]
                        .map(|a| spec(Metric::RxPower, RadioKind::MmWave, n, Some(a)))
                })
                .collect(),
            Preset::FigGps => std::iter::once(spec(Metric::RxPower, RadioKind::Dsrc, 1, None))
                .chain(
                    AlignmentMode::ALL
                        .map(|a| spec(Metric::RxPower, RadioKind::MmWave, 64, Some(a))),
                )
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
struct Grid(Vec<f64>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    parse_distances(s).map(Grid)
}

pub fn parse_distances(s: &str) -> Result<Vec<f64>, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("'{t}' is not a number"))
    };
    let grid = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, count] = parts[..] else {
            return Err("expected lo:hi:count".into());
        };
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| format!("'{count}' is not a point count"))?;
        let (lo, hi) = (num(lo)?, num(hi)?);
        if count == 0 || hi < lo {
            return Err("need count >= 1 and hi >= lo".into());
        }
        linspace(lo, hi, count)
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if grid.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err("distances must be positive".into());
    }
    Ok(grid)
}

/// One sweep together with its estimates.
#[derive(Debug, Clone)]
pub struct SweepRun {
    pub spec: SweepSpec,
    pub estimates: Vec<SweepEstimate>,
}

#[derive(Serialize)]
struct Row<'a> {
    metric: &'a str,
    radio: &'a str,
    n_elements: u32,
    alignment: &'a str,
    distance_m: f64,
    mean: f64,
    std_err: f64,
    ci_lo: f64,
    ci_hi: f64,
    n_trials: u64,
    seed: u64,
}

/// `%.9g`-style formatting.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn round_sig9(x: f64) -> f64 {
    format_sig9(x).parse().unwrap_or(x)
}

/// Writes estimates as CSV (with header) or JSON lines.
pub fn emit_results<W: Write>(runs: &[SweepRun], format: Format, out: &mut W) -> io::Result<()> {
    if format == Format::Csv {
        writeln!(out, "{CSV_HEADER}")?;
    }
    for run in runs {
        let s = &run.spec;
        for e in &run.estimates {
            match format {
                Format::Csv => writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    s.metric.name(),
                    s.radio.name(),
                    s.n_elements,
                    s.alignment_label(),
                    format_sig9(e.distance_m),
                    format_sig9(e.mean),
                    format_sig9(e.std_error),
                    format_sig9(e.ci95_lo),
                    format_sig9(e.ci95_hi),
                    e.n_trials,
                    s.master_seed,
                )?,
                Format::JsonLines => {
                    let row = Row {
                        metric: s.metric.name(),
                        radio: s.radio.name(),
                        n_elements: s.n_elements,
                        alignment: s.alignment_label(),
                        distance_m: round_sig9(e.distance_m),
                        mean: round_sig9(e.mean),
                        std_err: round_sig9(e.std_error),
                        ci_lo: round_sig9(e.ci95_lo),
                        ci_hi: round_sig9(e.ci95_hi),
                        n_trials: e.n_trials,
                        seed: s.master_seed,
                    };
                    serde_json::to_writer(&mut *out, &row)?;
                    writeln!(out)?;
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::Runtime(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Pool(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

fn load(common: &CommonArgs) -> Result<ScenarioConfig, Failure> {
    let mut config = match &common.config {
        Some(path) => load_config_file(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(n) = common.trials {
        config.n_trials = n;
    }
    if let Some(seed) = common.seed {
        config.master_seed = seed;
    }
    if let Some(Grid(grid)) = &common.distances {
        config.distance_grid_m = grid.clone();
    }
    if let Some(nf) = common.noise_figure_db {
        config.noise_figure_db = nf;
        config.dsrc.noise_figure_db = None;
        config.mmwave.noise_figure_db = None;
    }
    config.validate()?;
    Ok(config)
}

fn execute(
    specs: Vec<SweepSpec>,
    config: &ScenarioConfig,
    common: &CommonArgs,
) -> Result<(), Failure> {
    let mut runs = Vec::with_capacity(specs.len());
    for spec in specs {
        let estimates = run_sweep(&spec, config)?;
        runs.push(SweepRun { spec, estimates });
    }
    let io_err = |e: io::Error| Failure::Runtime(e.to_string());
    match &common.out {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            emit_results(&runs, common.format, &mut w).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            emit_results(&runs, common.format, &mut w).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { preset, common } => {
            let config = load(&common)?;
            execute(preset.specs(&config), &config, &common)
        }
        Command::Sweep {
            metric,
            radio,
            elements,
            alignment,
            common,
        } => {
            let config = load(&common)?;
            let spec = SweepSpec::from_config(metric, radio, elements, alignment, &config);
            spec.validate()?;
            execute(vec![spec], &config, &common)
        }
        Command::ValidateConfig { path } => {
            load_config_file(&path)?;
            println!("{}: ok", path.display());
            Ok(())
        }
        Command::Selftest { quick } => {
            let scale = if quick {
                acceptance::Scale::Quick
            } else {
                acceptance::Scale::Full
            };
            let checks = acceptance::run_all(scale);
            for check in &checks {
                println!("{}", check.line());
            }
            let failed = checks.iter().filter(|c| !c.passed && !c.known_gap).count();
            let gaps = checks.iter().filter(|c| !c.passed && c.known_gap).count();
            println!(
                "{} passed, {failed} failed, {gaps} known gap(s) failing",
                checks.iter().filter(|c| c.passed).count()
            );
            if failed == 0 {
                Ok(())
            } else {
                Err(Failure::Runtime(format!("{failed} check(s) failed")))
            }
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INVALID
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_RUNTIME
        }
    }
}
