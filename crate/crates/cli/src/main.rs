mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{CliError, Ctx};
use report::{to_json, ErrorBody, ErrorReport};

#[derive(Debug, Parser)]
#[command(name = "qorrel", version, about = "Irreducible multiparty correlations of qutrit states")]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Pass/fail tolerance; each subcommand has its own default.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Leave wall-clock timings out of the report (for byte-stable output).
    #[arg(long, global = true)]
    no_timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Correlation spectrum of one state, analytic or via maximum entropy.
    Spectrum(SpectrumArgs),
    /// Compare closed forms with the oracle over a parameter grid.
    Verify(VerifyArgs),
    /// Distances of the exponential-form states to their large-γ limits.
    Limits(LimitsArgs),
    /// Projector-flip identity for GHZ-like states, top-eigenvector
    /// certificate for maximal-slice states.
    Witness(WitnessArgs),
    /// Raw maximum-entropy solver output.
    OracleDump(OracleDumpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StateFamily {
    Ghz1,
    Ghz2,
    Ms,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Coherence {
    /// Rank-one coefficients from the spherical amplitudes.
    Pure,
    /// Diagonal coefficients only.
    Diagonal,
}

#[derive(Debug, Clone, Args)]
pub struct StateArgs {
    #[arg(long)]
    pub n: usize,
    /// Split index of the second family.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
    pub theta: f64,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
    pub phi: f64,
    #[arg(long, default_value_t = 0.6)]
    pub alpha: f64,
    /// JSON file `{"c": [[[re, im], ...], ...]}` overriding the angles.
    #[arg(long)]
    pub coeff_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Coherence::Pure)]
    pub state: Coherence,
    /// Sets the `c_02` coherence: `--c02 <re> <im>`.
    #[arg(long, num_args = 2, allow_negative_numbers = true, value_names = ["RE", "IM"])]
    pub c02: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Analytic,
    Oracle,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long, value_enum)]
    pub family: StateFamily,
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long, value_enum, default_value_t = Method::Analytic)]
    pub method: Method,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub theorem: u8,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long)]
    pub m: Option<usize>,
    /// Points per angle axis.
    #[arg(long, default_value_t = 3)]
    pub grid: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LimitKind {
    Ghz1,
    Ghz2Sigma,
    Ghz2Tau,
    Ms,
    MsExp,
}

#[derive(Debug, Args)]
pub struct LimitsArgs {
    #[arg(long, value_enum)]
    pub family: LimitKind,
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,30")]
    pub gammas: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WitnessFamily {
    Ghz1Pure,
    Ghz2Pure,
    Ms,
}

#[derive(Debug, Args)]
pub struct WitnessArgs {
    #[arg(long, value_enum)]
    pub family: WitnessFamily,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
    pub theta: f64,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
    pub phi: f64,
    #[arg(long, default_value_t = 0.6)]
    pub alpha: f64,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct OracleDumpArgs {
    #[arg(long, value_enum)]
    pub family: StateFamily,
    #[command(flatten)]
    pub state: StateArgs,
    /// Single level to solve; all levels below n when omitted.
    #[arg(long)]
    pub level: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("QORREL_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("QORREL_THREADS={raw} is not a positive integer")))?;
    // a pool may already exist when embedded; the cap is best effort then
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli, argv: Vec<String>) -> Result<i32, CliError> {
    configure_threads()?;
    let start = Instant::now();
    let ctx = Ctx {
        seed: cli.seed,
        tol: cli.tol,
        argv,
    };
    let mut output = match &cli.command {
        Command::Spectrum(a) => commands::spectrum(&ctx, a)?,
        Command::Verify(a) => commands::verify(&ctx, a)?,
        Command::Limits(a) => commands::limits(&ctx, a)?,
        Command::Witness(a) => commands::witness(&ctx, a)?,
        Command::OracleDump(a) => commands::oracle_dump(&ctx, a)?,
    };
    if !cli.no_timings {
        output.report.timings =
            Some([("wall_seconds".to_string(), start.elapsed().as_secs_f64())].into());
    }
    let text = match cli.format {
        Format::Json => to_json(&output.report),
        Format::Csv => output.table.to_csv(),
    };
    emit(&text, cli.out.as_ref())?;
    Ok(output.exit_code)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(), // --help, --version
        Err(e) => {
            let _ = e.print();
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or_default();
            let err = CliError::Usage(first.trim_start_matches("error: ").to_string());
            print!("{}", to_json(&error_report(&err)));
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(&cli, argv.into_iter().skip(1).collect()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            let body = to_json(&error_report(&err));
            eprintln!("qorrel: {err}");
            // the error object replaces the report wherever it would have gone
            if emit(&body, cli.out.as_ref()).is_err() {
                print!("{body}");
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn error_report(err: &CliError) -> ErrorReport {
    ErrorReport {
        error: ErrorBody {
            kind: err.kind().into(),
            message: err.to_string(),
            exit_code: err.exit_code(),
        },
    }
}
