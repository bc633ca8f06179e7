//! `contnet` command-line front end.

mod commands;
mod config;
mod error;
mod selfcheck;
mod table;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use contnet::gaussian::{SweepGrid, SweepRange};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::parse;
use crate::error::{CliError, EXIT_CONFIG, EXIT_USAGE};
use crate::table::{to_csv, Header};

const THREADS_ENV: &str = "CONTNET_THREADS";

#[derive(Parser)]
#[command(name = "contnet", version, about = "Discretized information measures and coding regions for continuous sources")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads. `CONTNET_THREADS` takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Quantized pmf of a density on a clipped dyadic grid.
    Discretize { config: PathBuf },
    /// Mutual or conditional mutual information in bits.
    Mi { config: PathBuf },
    /// Convergence trace of a discretized mutual information.
    Converge { config: PathBuf },
    /// Halfspace description of an achievable region.
    Region { config: PathBuf },
    /// Sperner families or the structured multiple-description examples.
    MdSsc { config: PathBuf },
    /// Closed-form Gaussian examples.
    Gaussian {
        #[command(subcommand)]
        which: GaussianCmd,
    },
    /// Fast invariant suite.
    Selfcheck,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum GaussianCmd {
    /// Lattice gain over BT for the two-help-one problem on a (rho, c) grid.
    FigRhocrange {
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        rho_min: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        rho_max: f64,
        #[arg(long, default_value_t = 21)]
        rho_steps: usize,
        #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
        c_min: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        c_max: f64,
        #[arg(long, default_value_t = 21)]
        c_steps: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.05])]
        d: Vec<f64>,
    },
    /// Feasibility thresholds of the three-user interference channel.
    FigIc {
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        a_min: f64,
        #[arg(long, default_value_t = 4.0, allow_negative_numbers = true)]
        a_max: f64,
        #[arg(long, default_value_t = 0.005, allow_negative_numbers = true)]
        a_step: f64,
        #[arg(long, default_value_t = 0.02, allow_negative_numbers = true)]
        p_min: f64,
        #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
        p_max: f64,
        #[arg(long, default_value_t = 0.02, allow_negative_numbers = true)]
        p_step: f64,
    },
    /// First multiple-description example: structured triple against the optimized unstructured R3.
    FigMd1 {
        #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.3, 0.35, 0.4, 0.45])]
        p: Vec<f64>,
        #[arg(long, default_value_t = 24)]
        starts: usize,
    },
    /// Second multiple-description example in closed form.
    Md2 {
        #[arg(long, value_delimiter = ',', default_values_t = [0.55, 0.6, 0.65])]
        p: Vec<f64>,
    },
    /// Gaussian MAC sum rates; `--p1` and `--p2` take matching lists.
    Mac {
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        p1: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        p2: Vec<f64>,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        n: f64,
    },
    /// Two-help-one sum rates at one (rho, c).
    Thu {
        #[arg(long, allow_negative_numbers = true)]
        rho: f64,
        #[arg(long, allow_negative_numbers = true)]
        c: f64,
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        d: Vec<f64>,
    },
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Keys come out sorted, so equal configs hash equally regardless of layout.
fn header(command: &str, config: &serde_json::Value, seed: u64) -> Header {
    let doc = serde_json::json!({ "command": command, "config": config });
    let digest = Sha256::digest(doc.to_string().as_bytes());
    let mut h = Header::default();
    h.add("tool", format!("contnet {}", env!("CARGO_PKG_VERSION")));
    h.add("command", command);
    h.add("config-sha256", hex(&digest));
    h.add("seed", seed);
    h
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

fn set_threads(flag: Option<usize>) -> Result<(), CliError> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?,
        ),
        Err(_) => flag,
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Numeric(e.to_string()))?;
    }
    Ok(())
}

macro_rules! with_config {
    ($path:expr, $name:literal, $seed:expr, $run:path) => {{
        let (c, v) = parse(&read($path)?)?;
        $run(&c, header($name, &v, $seed))?
    }};
}

fn run(cli: Cli) -> Result<(), CliError> {
    set_threads(cli.threads)?;
    let seed = cli.seed;
    let (h, t) = match &cli.cmd {
        Cmd::Discretize { config } => with_config!(config, "discretize", seed, commands::discretize),
        Cmd::Mi { config } => with_config!(config, "mi", seed, commands::mi),
        Cmd::Converge { config } => with_config!(config, "converge", seed, commands::converge),
        Cmd::Region { config } => with_config!(config, "region", seed, commands::region),
        Cmd::MdSsc { config } => with_config!(config, "md-ssc", seed, commands::md_ssc),
        Cmd::Gaussian { which } => {
            let v = serde_json::to_value(which).expect("flags serialize");
            let name = v.as_object().and_then(|o| o.keys().next()).expect("externally tagged");
            let h = header(&format!("gaussian {name}"), &v, seed);
            match which {
                GaussianCmd::FigRhocrange {
                    rho_min,
                    rho_max,
                    rho_steps,
                    c_min,
                    c_max,
                    c_steps,
                    d,
                } => {
                    let grid = SweepGrid {
                        first: SweepRange::new(*rho_min, *rho_max, *rho_steps)?,
                        second: SweepRange::new(*c_min, *c_max, *c_steps)?,
                    };
                    commands::gaussian_rhoc(&grid, d, h)?
                }
                GaussianCmd::FigIc {
                    a_min,
                    a_max,
                    a_step,
                    p_min,
                    p_max,
                    p_step,
                } => commands::gaussian_ic(
                    &SweepRange::stepped(*a_min, *a_max, *a_step)?,
                    &SweepRange::stepped(*p_min, *p_max, *p_step)?,
                    h,
                )?,
                GaussianCmd::FigMd1 { p, starts } => commands::gaussian_md1(p, *starts, seed, h)?,
                GaussianCmd::Md2 { p } => commands::gaussian_md2(p, h)?,
                GaussianCmd::Mac { p1, p2, n } => commands::gaussian_mac(p1, p2, *n, h)?,
                GaussianCmd::Thu { rho, c, d } => commands::gaussian_thu(*rho, *c, d, h)?,
            }
        }
        Cmd::Selfcheck => {
            let mut h = header("selfcheck", &serde_json::Value::Null, seed);
            let (t, ok) = selfcheck::run(seed)?;
            h.add("all-pass", ok);
            let text = to_csv(&h, &t);
            emit(cli.out.as_deref(), &text)?;
            if !ok {
                return Err(CliError::Numeric("selfcheck failed".into()));
            }
            return Ok(());
        }
    };
    emit(cli.out.as_deref(), &to_csv(&h, &t))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::InvalidSubcommand
                | ErrorKind::UnknownArgument
                | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_USAGE,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("contnet: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
