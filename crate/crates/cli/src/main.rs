use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hemem_core::{find_ntt_primes, ParameterSet};
use hemem_cost::MachineModel;

mod commands;
mod output;
mod verify;

use output::{Format, Sink};

pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Parser)]
#[command(name = "hemem", version, about = "RNS-CKKS kernels, verification harness and memory-hierarchy cost model")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Global {
    /// Parameter-set TOML file.
    #[arg(long, global = true)]
    params: Option<PathBuf>,
    /// Machine-profile TOML file (default: built-in RTX-5090-class profile).
    #[arg(long, global = true)]
    machine: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// List NTT-friendly primes.
    Primes {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 31)]
        bitwidth: u32,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Run the oracle suites against a parameter set.
    Verify(commands::VerifyArgs),
    /// L2-aware batch plan and amortized-latency curve.
    Plan(commands::PlanArgs),
    /// Roofline bound of a trace, key-switch or traffic totals.
    Roofline(commands::RooflineArgs),
    /// Latency estimate of a kernel trace with per-kernel rows.
    Analyze(commands::AnalyzeArgs),
    /// Write the key-switching kernel trace of a parameter set.
    Trace(commands::TraceArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    /// Corrupt one twiddle-table entry before the suites run.
    Twiddle,
}

/// Input problems exit with 2, failed verification with 1.
#[derive(Debug)]
pub enum Outcome {
    Ok,
    Failed,
}

pub struct InputError(anyhow::Error);

impl Global {
    pub fn sink(&self) -> Sink {
        Sink {
            format: self.format,
            out: self.out.clone(),
        }
    }

    pub fn machine(&self) -> Result<MachineModel> {
        match &self.machine {
            Some(p) => MachineModel::load(p).with_context(|| format!("loading machine profile {}", p.display())),
            None => Ok(MachineModel::rtx5090()),
        }
    }

    /// The given parameter file, or `fallback()` when none was passed.
    pub fn params_or(&self, fallback: impl FnOnce() -> Result<ParameterSet>) -> Result<ParameterSet> {
        match &self.params {
            Some(p) => ParameterSet::load(p).with_context(|| format!("loading parameter set {}", p.display())),
            None => fallback(),
        }
    }
}

fn primes(g: &Global, n: usize, bitwidth: u32, count: usize) -> Result<Outcome> {
    let ps = find_ntt_primes(count, bitwidth, n).map_err(|e| anyhow!(e))?;
    #[derive(serde::Serialize)]
    struct Row {
        index: usize,
        modulus: u32,
        bits: u32,
        psi: u32,
    }
    let rows: Vec<Row> = ps
        .iter()
        .enumerate()
        .map(|(index, m)| Row {
            index,
            modulus: m.value(),
            bits: m.bits(),
            psi: m.psi(),
        })
        .collect();
    let body = match g.format {
        Format::Text => rows.iter().map(|r| format!("{}\n", r.modulus)).collect(),
        Format::Csv => output::csv_rows(&rows)?,
        Format::Structured => {
            #[derive(serde::Serialize)]
            struct Body<'a> {
                n: usize,
                bitwidth: u32,
                moduli: &'a [Row],
            }
            output::structured("hemem.primes/1", &Body { n, bitwidth, moduli: &rows })?
        }
    };
    g.sink().emit(&body)?;
    Ok(Outcome::Ok)
}

fn run(cli: Cli) -> std::result::Result<Outcome, InputError> {
    let g = &cli.global;
    let r = match cli.command {
        Command::Primes { n, bitwidth, count } => primes(g, n, bitwidth, count),
        Command::Verify(a) => commands::verify(g, &a),
        Command::Plan(a) => commands::plan(g, &a),
        Command::Roofline(a) => commands::roofline(g, &a),
        Command::Analyze(a) => commands::analyze(g, &a),
        Command::Trace(a) => commands::trace(g, &a),
    };
    r.map_err(InputError)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(InputError(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
