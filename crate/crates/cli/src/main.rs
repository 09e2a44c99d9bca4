//! `blockgs`: κ sweeps, s-step GMRES runs and test matrix generation.
//!
//! Every option can come from a flag or from a `key=value` file given with
//! `--config`; flags win. Exit codes: 0 success, 1 usage, 2 I/O, 3 numerical
//! breakdown in `gmres` or `matgen`.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Command, RunConfig};
use error::CliResult;

#[derive(Parser)]
#[command(name = "blockgs", version, about = "Block Gram-Schmidt experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Factor generated matrices over a κ grid and write one CSV row per run.
    QrSweep(SweepArgs),
    /// Solve A x = 1 with s-step GMRES and write the convergence history.
    Gmres(GmresArgs),
    /// Write a generated matrix in Matrix Market array format.
    Matgen(MatgenArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// key=value file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// default, glued, monomial or piled
    #[arg(long)]
    class: Option<String>,
    /// Rows [default: 200]
    #[arg(long)]
    m: Option<String>,
    /// Block columns [default: 10]
    #[arg(long)]
    p: Option<String>,
    /// Columns per block [default: 5]
    #[arg(long)]
    s: Option<String>,
    /// `all` or a comma list of PIP_IRO, IP_1S, IP_2S, ADAPTIVE, BCGS2, A_1S [default: all]
    #[arg(long)]
    variants: Option<String>,
    /// First-block routine: HouseQR, TSQR[:leaves], MGS, CholQR, CholQRPythagorean [default: HouseQR]
    #[arg(long = "io-a")]
    io_a: Option<String>,
    /// Per-block routine [default: HouseQR]
    #[arg(long = "io-1")]
    io_1: Option<String>,
    /// Adaptive switching constant [default: sqrt(3)]
    #[arg(long = "switch-const")]
    switch_const: Option<String>,
    /// `lo..hi:n` log-spaced or a comma list [default: 1e1..1e15:8]
    #[arg(long)]
    kappa: Option<String>,
    /// RNG seed [default: 1]
    #[arg(long)]
    seed: Option<String>,
    /// CSV path, `-` for stdout [default: stdout]
    #[arg(long)]
    output: Option<String>,
}

#[derive(Args)]
struct GmresArgs {
    /// key=value file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Matrix Market file
    #[arg(long)]
    matrix: Option<String>,
    /// Order of a generated nonsymmetric test matrix, instead of `matrix`
    #[arg(long)]
    n: Option<String>,
    /// RNG seed of the generated matrix [default: 1]
    #[arg(long)]
    seed: Option<String>,
    /// Block size [default: 2]
    #[arg(long)]
    s: Option<String>,
    /// IP_1S, IP_2S, ADAPTIVE or BCGS2 [default: ADAPTIVE]
    #[arg(long)]
    variant: Option<String>,
    /// First-block routine [default: HouseQR]
    #[arg(long = "io-a")]
    io_a: Option<String>,
    /// Per-block routine [default: HouseQR]
    #[arg(long = "io-1")]
    io_1: Option<String>,
    /// Adaptive switching constant [default: sqrt(3)]
    #[arg(long = "switch-const")]
    switch_const: Option<String>,
    /// Backward error tolerance [default: 1e-12]
    #[arg(long)]
    tol: Option<String>,
    /// Iteration cap [default: Krylov dimension limit]
    #[arg(long = "max-iter")]
    max_iter: Option<String>,
    /// monomial or newton [default: monomial]
    #[arg(long)]
    basis: Option<String>,
    /// Comma list of Newton shifts, Leja ordered before use
    #[arg(long)]
    shifts: Option<String>,
    /// History CSV path, `-` for stdout [default: stdout]
    #[arg(long)]
    output: Option<String>,
}

#[derive(Args)]
struct MatgenArgs {
    /// key=value file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// default, glued, monomial, piled or nonsymmetric
    #[arg(long)]
    class: Option<String>,
    /// Rows, or the order for nonsymmetric [default: 200]
    #[arg(long)]
    m: Option<String>,
    /// Block columns [default: 10]
    #[arg(long)]
    p: Option<String>,
    /// Columns per block [default: 5]
    #[arg(long)]
    s: Option<String>,
    /// Target condition number [default: 1e8]
    #[arg(long)]
    kappa: Option<String>,
    /// RNG seed [default: 1]
    #[arg(long)]
    seed: Option<String>,
    /// Output path, `-` for stdout [default: stdout]
    #[arg(long)]
    output: Option<String>,
}

fn run(cmd: Cmd) -> CliResult<()> {
    match cmd {
        Cmd::QrSweep(a) => {
            let flags = [
                ("class", a.class),
                ("m", a.m),
                ("p", a.p),
                ("s", a.s),
                ("variants", a.variants),
                ("io_a", a.io_a),
                ("io_1", a.io_1),
                ("switch_const", a.switch_const),
                ("kappa", a.kappa),
                ("seed", a.seed),
                ("output", a.output),
            ];
            commands::qr_sweep(&RunConfig::load(Command::QrSweep, a.config.as_deref(), flags)?)
        }
        Cmd::Gmres(a) => {
            let flags = [
                ("matrix", a.matrix),
                ("n", a.n),
                ("seed", a.seed),
                ("s", a.s),
                ("variant", a.variant),
                ("io_a", a.io_a),
                ("io_1", a.io_1),
                ("switch_const", a.switch_const),
                ("tol", a.tol),
                ("max_iter", a.max_iter),
                ("basis", a.basis),
                ("shifts", a.shifts),
                ("output", a.output),
            ];
            commands::gmres(&RunConfig::load(Command::Gmres, a.config.as_deref(), flags)?)
        }
        Cmd::Matgen(a) => {
            let flags = [
                ("class", a.class),
                ("m", a.m),
                ("p", a.p),
                ("s", a.s),
                ("kappa", a.kappa),
                ("seed", a.seed),
                ("output", a.output),
            ];
            commands::matgen(&RunConfig::load(Command::Matgen, a.config.as_deref(), flags)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("blockgs: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
