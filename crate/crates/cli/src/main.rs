use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aoi_mimo::sweep::{self, Axis, SvgStyle, SweepSpec, Table};
use aoi_mimo::{ConfigDraft, Error, Method, Population, RngSpec, SystemConfig};
use clap::{Args, Parser, Subcommand};

const USAGE: u8 = 1;
const FAILURE: u8 = 2;

/// Error probability and age of information for slotted random access to a
/// multi-antenna receiver.
#[derive(Parser, Debug)]
#[command(name = "aoi-mimo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Error probability and AoI along a parameter sweep.
    Pep(PepArgs),
    /// Fixed-error AoI versus spectral efficiency curves.
    AoiCurve(AoiCurveArgs),
    /// Age-limited capacity and the finite-N supremum.
    Capacity(CapacityArgs),
    /// Capacity bound points log2(1 + M/Ka).
    UraPoints(UraArgs),
    /// Cross-method checks at one operating point.
    Validate(ValidateArgs),
    /// Render a CSV produced by another subcommand as SVG.
    Plot(PlotArgs),
}

#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// key=value config file; flags below take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_users: Option<u64>,
    #[arg(long)]
    n_antennas: Option<u64>,
    #[arg(long, visible_alias = "tau")]
    attempt_prob: Option<f64>,
    #[arg(long)]
    tx_power: Option<f64>,
    #[arg(long, conflicts_with = "snr_db")]
    noise_var: Option<f64>,
    #[arg(long, visible_alias = "rho")]
    spectral_eff: Option<f64>,
    /// Sets noise_var = tx_power · 10^(−snr/10).
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// CSV destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG plot of the table.
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long)]
    log_y: bool,
}

#[derive(Args, Debug)]
struct PepArgs {
    #[arg(long)]
    axis: Axis,
    /// Comma-separated grid values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required_unless_present = "range", conflicts_with = "range")]
    grid: Vec<f64>,
    /// Uniform grid as start:stop:count.
    #[arg(long, allow_hyphen_values = true)]
    range: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "exact,asymptotic")]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct AoiCurveArgs {
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = 0.7)]
    zeta: f64,
    /// User counts; `inf` selects the infinite-population curve.
    #[arg(long = "n-list", value_delimiter = ',', default_value = "100,1000,10000,100000,inf")]
    n_list: Vec<Population>,
    /// Explicit spectral-efficiency grid shared by all curves.
    #[arg(long, value_delimiter = ',')]
    rho_grid: Option<Vec<f64>>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct CapacityArgs {
    #[arg(long)]
    tau: f64,
    #[arg(long)]
    zeta: f64,
    #[arg(long, requires = "n_users")]
    eps: Option<f64>,
    #[arg(long, requires = "eps")]
    n_users: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct UraArgs {
    #[arg(long, value_delimiter = ',', default_value = "30,45,60")]
    antennas: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "50,75,100")]
    active: Vec<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Multiplies every check tolerance.
    #[arg(long, default_value_t = 1.0)]
    tolerance_scale: f64,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// CSV input file.
    input: PathBuf,
    /// SVG destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    log_y: bool,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Parse { .. } | Error::Invalid(_) | Error::Domain { .. } => USAGE,
            _ => FAILURE,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: USAGE, message: message.into() }
}

impl ConfigArgs {
    fn resolve(&self) -> Result<SystemConfig, Failure> {
        self.resolve_with(ConfigDraft::default())
    }

    /// `fallback` supplies values that neither the file nor the flags set.
    fn resolve_with(&self, fallback: ConfigDraft) -> Result<SystemConfig, Failure> {
        let base = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
                ConfigDraft::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
            }
            None => ConfigDraft::default(),
        };
        let flags = ConfigDraft {
            n_users: self.n_users,
            n_antennas: self.n_antennas,
            attempt_prob: self.attempt_prob,
            tx_power: self.tx_power,
            noise_var: self.noise_var,
            spectral_eff: self.spectral_eff,
        };
        let mut draft = fallback.overridden_by(&base).overridden_by(&flags);
        if self.snr_db.is_some() {
            draft.noise_var = Some(0.0);
        }
        let config = draft.build()?;
        Ok(match self.snr_db {
            Some(snr) if snr.is_finite() => config.with_snr_db(snr),
            Some(_) => return Err(usage("snr_db must be finite")),
            None => config,
        })
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure { code: FAILURE, message: format!("{}: {e}", p.display()) }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit(table: &Table, output: &OutputArgs) -> Result<(), Failure> {
    write_output(output.out.as_deref(), &table.to_csv())?;
    if let Some(path) = &output.svg {
        let style = if output.log_y { SvgStyle::LogY } else { SvgStyle::Linear };
        write_output(Some(path), &sweep::emit_svg(table, style)?)?;
    }
    Ok(())
}

fn parse_range(text: &str) -> Result<Vec<f64>, Failure> {
    let bad = || usage(format!("invalid range {text:?}, expected start:stop:count"));
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, n] = parts.as_slice() else { return Err(bad()) };
    let (a, b): (f64, f64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
    let n: usize = n.parse().map_err(|_| bad())?;
    match n {
        0 => Err(bad()),
        1 => Ok(vec![a]),
        _ => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Pep(args) => {
            let grid = match &args.range {
                Some(r) => parse_range(r)?,
                None => args.grid.clone(),
            };
            // the swept field comes from the grid, so it may be left unset
            let mut fallback = ConfigDraft::default();
            if let Some(&first) = grid.first() {
                match args.axis {
                    Axis::Rho => fallback.spectral_eff = Some(first),
                    Axis::Tau => fallback.attempt_prob = Some(first),
                    Axis::Snr => fallback.noise_var = Some(0.0),
                    Axis::N | Axis::Zeta => {}
                }
            }
            let spec = SweepSpec {
                axis: args.axis,
                grid,
                fixed: args.config.resolve_with(fallback)?,
                methods: args.methods.clone(),
                mc_trials: args.trials,
                rng: RngSpec::new(args.seed, 0),
            };
            emit(&sweep::cmd_pep(&spec)?, &args.output)
        }
        Command::AoiCurve(args) => {
            let table = sweep::cmd_aoi_curve(args.eps, args.zeta, &args.n_list, args.rho_grid.as_deref())?;
            emit(&table, &args.output)
        }
        Command::Capacity(args) => {
            let report = sweep::cmd_capacity(args.tau, args.zeta, args.eps, args.n_users)?;
            write_output(args.out.as_deref(), &report.to_table().to_csv())
        }
        Command::UraPoints(args) => emit(&sweep::cmd_ura_points(&args.antennas, &args.active)?, &args.output),
        Command::Validate(args) => {
            if args.tolerance_scale.is_nan() || args.tolerance_scale < 0.0 {
                return Err(usage("tolerance_scale must be non-negative"));
            }
            let config = args.config.resolve()?;
            let report = sweep::cmd_validate(&config, args.trials, &RngSpec::new(args.seed, 0), args.tolerance_scale)?;
            write_output(args.out.as_deref(), &report.to_table().to_csv())?;
            if report.all_passed() {
                Ok(())
            } else {
                let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
                Err(Failure { code: FAILURE, message: format!("failed checks: {}", failed.join(", ")) })
            }
        }
        Command::Plot(args) => {
            let text = fs::read_to_string(&args.input).map_err(|e| usage(format!("{}: {e}", args.input.display())))?;
            let table = Table::parse(&text)?;
            let style = if args.log_y { SvgStyle::LogY } else { SvgStyle::Linear };
            write_output(args.out.as_deref(), &sweep::emit_svg(&table, style)?)
        }
    }
}

fn init_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("AOI_MIMO_THREADS") else { return Ok(()) };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("AOI_MIMO_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure { code: FAILURE, message: e.to_string() })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            e.print().ok();
            return ExitCode::from(code);
        }
    };
    match init_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
