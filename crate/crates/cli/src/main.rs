use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use scit_core::cuts::{Gamma, SplitRule};
use scit_core::engine::{run, EngineConfig};
use scit_core::oracle::{brute_force_optimum, ORACLE_LIMIT};
use scit_core::relax::{Backend, Budget, DnnConfig, ExactConfig};
use scit_core::report::{to_json, to_table};
use scit_core::{biqmac, model::QuboInstance};

/// Exit code for usage and I/O failures.
const EXIT_USAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "scit", version, about = "Certified cutting inequalities for QUBO instances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the cutting loop on an instance.
    Solve(SolveArgs),
    /// Print the brute-force optimum of a small instance.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Exact,
    Dnn,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Random,
    Interleave,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(clap::Args)]
struct SolveArgs {
    /// Instance in BiqMac sparse format (maximization, negated on read).
    #[arg(long)]
    instance: PathBuf,
    /// Upper bound on the optimum of the negated instance.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "eta_from_oracle")]
    eta: Option<i64>,
    /// Take eta from exhaustive enumeration (small instances only).
    #[arg(long, conflicts_with = "eta")]
    eta_from_oracle: bool,
    #[arg(long, value_enum, default_value = "dnn")]
    backend: BackendArg,
    #[arg(long, default_value_t = 10)]
    max_iter: usize,
    #[arg(long, default_value = "1/3")]
    gamma: String,
    #[arg(long, default_value_t = 10)]
    q: usize,
    #[arg(long, value_enum, default_value = "random")]
    split: SplitArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Name used in the report; defaults to the file stem.
    #[arg(long)]
    name: Option<String>,
    /// Include per-iteration wall time in the report.
    #[arg(long)]
    timings: bool,
    /// Sweep cap for master problems (dnn backend).
    #[arg(long, default_value_t = 2000)]
    master_sweeps: usize,
    /// Sweep cap for probe problems (dnn backend).
    #[arg(long, default_value_t = 2000)]
    probe_sweeps: usize,
    /// Relative residual tolerance (dnn backend).
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Largest instance the exact backend will enumerate.
    #[arg(long, default_value_t = 24)]
    exact_limit: usize,
    /// Known feasible point as a 0/1 string over u (length m) or x (length 2m).
    #[arg(long)]
    incumbent: Option<String>,
    /// Random subsets of the incumbent support added as candidates.
    #[arg(long, default_value_t = 0)]
    incumbent_subsets: usize,
    /// Drop a candidate after this many failed probes at step size zero.
    #[arg(long)]
    retire_stalled_after: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Solve(args) => solve(args),
        Command::Oracle { instance } => oracle(&instance),
    }
}

fn load(path: &Path) -> Result<QuboInstance> {
    biqmac::read(path).with_context(|| format!("reading {}", path.display()))
}

fn parse_incumbent(bits: &str, m: usize) -> Result<Vec<u8>> {
    let digits: Vec<u8> = bits
        .trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => bail!("incumbent contains `{other}`"),
        })
        .collect::<Result<_>>()?;
    if digits.len() == m {
        Ok(digits.iter().copied().chain(digits.iter().map(|&d| 1 - d)).collect())
    } else if digits.len() == 2 * m {
        Ok(digits)
    } else {
        bail!("incumbent has {} digits, expected {m} or {}", digits.len(), 2 * m)
    }
}

fn solve(args: SolveArgs) -> Result<u8> {
    let inst = load(&args.instance)?;
    let eta = match args.eta {
        Some(eta) => eta,
        None => {
            if inst.m() > ORACLE_LIMIT {
                bail!("--eta-from-oracle needs m <= {ORACLE_LIMIT}, instance has {}", inst.m());
            }
            brute_force_optimum(&inst)?.0
        }
    };
    let backend = match args.backend {
        BackendArg::Exact => Backend::Exact(ExactConfig { limit: args.exact_limit }),
        BackendArg::Dnn => Backend::Dnn(DnnConfig {
            master: Budget { max_sweeps: args.master_sweeps, tol: args.tol },
            probe: Budget { max_sweeps: args.probe_sweeps, tol: args.tol },
            ..DnnConfig::default()
        }),
    };
    let incumbent = args.incumbent.as_deref().map(|b| parse_incumbent(b, inst.m())).transpose()?;
    let config = EngineConfig {
        eta,
        max_iterations: args.max_iter,
        gamma: args.gamma.parse::<Gamma>()?,
        q: args.q,
        split: match args.split {
            SplitArg::Random => SplitRule::SeededRandom,
            SplitArg::Interleave => SplitRule::Interleave,
        },
        seed: args.seed,
        workers: args.workers,
        backend,
        incumbent,
        incumbent_subsets: args.incumbent_subsets,
        retire_stalled_after: args.retire_stalled_after,
        record_timings: args.timings,
    };

    let mut report = run(&inst, &config)?;
    report.instance = args.name.clone().unwrap_or_else(|| {
        args.instance.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
    });
    if let Some(msg) = &report.message {
        eprintln!("contradiction: {msg}");
    }

    let text = match args.format {
        Format::Json => to_json(&report),
        Format::Table => to_table(std::slice::from_ref(&report)),
    };
    match &args.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(report.status.exit_code() as u8)
}

fn oracle(path: &Path) -> Result<u8> {
    let inst = load(path)?;
    let (zeta, set) = brute_force_optimum(&inst)?;
    let mut out = format!("m {}\nzeta {zeta}\nminimizers {}\n", inst.m(), set.len());
    for u in set.iter().take(32) {
        out.extend(u.iter().map(|&b| if b { '1' } else { '0' }));
        out.push('\n');
    }
    std::io::stdout().write_all(out.as_bytes())?;
    Ok(0)
}
