use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bcn_deform::cli::{self, CliError, Format, LadderKind, Ladder, Method, Mode, Outcome, RunConfig};

/// Reduced dynamics of the deformed trigonometric BC_n Sutherland system:
/// verification suites, trajectories, limit ladders and grid scans.
///
/// Settings come from built-in defaults, then the JSON file given by
/// --config, then the flags below. The environment variable
/// BCN_DEFORM_THREADS caps the number of worker threads.
#[derive(Parser, Debug)]
#[command(name = "bcn-deform", version)]
struct Args {
    #[command(subcommand)]
    command: Option<Command>,

    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true, value_enum)]
    method: Option<Method>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    x: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    u: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    v: Option<f64>,
    /// Index of the Hamiltonian generating the flow.
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    t_max: Option<f64>,
    /// Number of sampling intervals on [0, t-max].
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Multiplies every verification tolerance.
    #[arg(long, global = true)]
    tolerance_scale: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every verification suite and report residuals as JSON.
    Verify,
    /// Integrate the flow of h_k and write the trajectory.
    Simulate,
    /// Tabulate residuals of the limits along parameter ladders.
    Limits {
        /// Restrict to one ladder.
        #[arg(long, value_enum)]
        ladder: Option<LadderKind>,
        /// Comma-separated ladder values.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        values: Option<Vec<f64>>,
    },
    /// Evaluate the Hamiltonians and the admissibility flag over a grid.
    Scan,
}

fn load(args: &Args) -> Result<(RunConfig, Mode), CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($($field:ident).+ = $flag:expr) => {
            if let Some(value) = $flag.clone() {
                config.$($field).+ = value;
            }
        };
    }
    set!(seed = args.seed);
    set!(method = args.method);
    set!(params.n = args.n);
    set!(params.x = args.x);
    set!(params.u = args.u);
    set!(params.v = args.v);
    set!(k = args.k);
    set!(t_max = args.t_max);
    set!(samples = args.samples);
    if args.out.is_some() {
        config.out = args.out.clone();
    }
    if args.format.is_some() {
        config.format = args.format;
    }
    if let Some(scale) = args.tolerance_scale {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(CliError::Config(format!("tolerance scale {scale} must be positive")));
        }
        config.tolerances = config.tolerances.scaled(scale);
    }
    let mode = match &args.command {
        Some(Command::Verify) => Mode::Verify,
        Some(Command::Simulate) => Mode::Simulate,
        Some(Command::Scan) => Mode::Scan,
        Some(Command::Limits { ladder, values }) => {
            match (ladder, values) {
                (Some(kind), values) => {
                    let values = values.clone().unwrap_or_else(|| kind.default_values());
                    config.ladders = vec![Ladder { kind: *kind, values }];
                }
                (None, Some(_)) => return Err(CliError::Config("--values needs --ladder".into())),
                (None, None) => {}
            }
            Mode::Limits
        }
        None => config
            .mode
            .ok_or_else(|| CliError::Config("no command given and the config names no mode".into()))?,
    };
    Ok((config, mode))
}

/// The summary of `--method both` goes next to the output as `<out>.summary.json`.
fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".summary.json");
    PathBuf::from(name)
}

fn emit(config: &RunConfig, outcome: &Outcome) -> Result<(), CliError> {
    let write = |path: &Path, text: &str| {
        std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
    };
    match &config.out {
        Some(path) => {
            write(path, &outcome.output)?;
            if let Some(side) = &outcome.sidecar {
                write(&sidecar_path(path), side)?;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(outcome.output.as_bytes()).and_then(|()| stdout.flush()) {
                // a closed reader (e.g. `| head`) is not a failure of the run
                Err(e) if e.kind() != ErrorKind::BrokenPipe => return Err(CliError::Runtime(format!("cannot write output: {e}"))),
                _ => {}
            }
            if let Some(side) = &outcome.sidecar {
                eprint!("{side}");
            }
        }
    }
    Ok(())
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("BCN_DEFORM_THREADS") else { return Ok(()) };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Config(format!("BCN_DEFORM_THREADS = {value:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = configure_threads().and_then(|()| {
        let (config, mode) = load(&args)?;
        let outcome = cli::run(&config, mode)?;
        emit(&config, &outcome)?;
        Ok(outcome.exit_code())
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("bcn-deform: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
