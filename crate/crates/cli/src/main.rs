//! `aicsim`: optimize, simulate, validate, generate and benchmark circuits.
//!
//! Exit codes: 0 success, 1 parse or I/O error, 2 configuration error,
//! 3 simulation error, 4 validation failure.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::EXIT_PARSE;

#[derive(Parser)]
#[command(name = "aicsim", version, about = "Cache-blocked state-vector circuit simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Block a raw circuit into a program of chunk-sized gate blocks and swaps.
    Optimize(OptimizeArgs),
    /// Run a program (or a raw circuit with --raw) under an INI config.
    Simulate(SimulateArgs),
    /// Check that a program applies the raw circuit's gates in a valid order.
    Validate(ValidateArgs),
    /// Write a benchmark circuit in the raw format.
    Gen(GenArgs),
    /// Time the blockwise engine, and the gate-by-gate engine with --compare.
    Bench(BenchArgs),
}

#[derive(Args)]
pub struct OptimizeArgs {
    /// Raw circuit file.
    pub raw: PathBuf,
    /// Positional form: CHUNK RANK_REGION QUBITS IMS XRS FUSION_SIZE FUSION.
    pub positional: Vec<usize>,
    /// Chunk (cache) size C in qubits.
    #[arg(long)]
    pub chunk: Option<usize>,
    /// Rank-local qubits N-R.
    #[arg(long)]
    pub rank_region: Option<usize>,
    /// Total qubits N; inferred from the circuit when omitted.
    #[arg(long)]
    pub qubits: Option<usize>,
    /// In-memory swaps with several pairs at once (0 or 1).
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub ims: Option<u8>,
    /// Cross-rank swaps with several pairs at once (0 or 1).
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub xrs: Option<u8>,
    /// Largest fused gate in qubits.
    #[arg(long)]
    pub fusion_size: Option<usize>,
    /// Diagonal and general fusion (0 or 1).
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub fusion: Option<u8>,
    /// Cross-rank buffer size B in qubits.
    #[arg(long)]
    pub buffer: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// INI config file.
    #[arg(short = 'i', long)]
    pub config: PathBuf,
    /// Program file, or raw circuit with --raw.
    #[arg(short = 'c', long)]
    pub circuit: PathBuf,
    /// Treat the circuit file as raw and optimize it first.
    #[arg(long)]
    pub raw: bool,
    /// Print the final amplitudes in logical qubit order (at most 20 qubits).
    #[arg(long)]
    pub dump_state: bool,
    /// Worker threads; QUOKKA_THREADS or hardware parallelism when omitted.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args)]
pub struct ValidateArgs {
    /// Raw circuit file.
    pub raw: PathBuf,
    /// Optimized program file.
    pub program: PathBuf,
    /// INI config giving the qubit and rank counts.
    #[arg(short = 'i', long)]
    pub config: Option<PathBuf>,
    /// Total qubits N; inferred from the circuit when omitted.
    #[arg(long)]
    pub qubits: Option<usize>,
    /// Rank-local qubits N-R; defaults to N.
    #[arg(long)]
    pub rank_region: Option<usize>,
}

#[derive(Args)]
pub struct FamilyArgs {
    /// Circuit family: qft, qaoa, bv, gate or random.
    pub family: String,
    /// Number of qubits.
    #[arg(long)]
    pub qubits: usize,
    /// QAOA layers.
    #[arg(long, default_value_t = 1)]
    pub layers: usize,
    /// Seed for qaoa and random.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gate kind for the gate family, e.g. H or CX.
    #[arg(long)]
    pub kind: Option<String>,
    /// Bernstein-Vazirani secret as 0/1 digits; all ones when omitted.
    #[arg(long)]
    pub secret: Option<String>,
    /// Gate count for the random family.
    #[arg(long, default_value_t = 200)]
    pub gates: usize,
}

#[derive(Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Timed runs per engine.
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    /// Also time the gate-by-gate engine.
    #[arg(long)]
    pub compare: bool,
    /// Chunk size C in qubits.
    #[arg(long)]
    pub chunk: Option<usize>,
    /// Rank-local qubits N-R; defaults to N.
    #[arg(long)]
    pub rank_region: Option<usize>,
    /// General fusion into dense gates (0 or 1).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub fusion: u8,
    /// Diagonal fusion (0 or 1).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub diagonal_fusion: u8,
    /// Largest fused gate in qubits.
    #[arg(long)]
    pub fusion_size: Option<usize>,
    /// Worker threads; QUOKKA_THREADS or hardware parallelism when omitted.
    #[arg(long)]
    pub threads: Option<usize>,
    /// CSV output file; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(EXIT_PARSE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Optimize(args) => commands::optimize(&args),
        Command::Simulate(args) => commands::simulate(&args),
        Command::Validate(args) => commands::validate(&args),
        Command::Gen(args) => commands::generate(&args),
        Command::Bench(args) => commands::bench(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code)
        }
    }
}
