//! `cpm`: batch driver for the combinatorial market makers.
//!
//! Exit codes: 0 ok, 1 usage or input error, 2 replay assertion failure,
//! 3 numerical error.

mod bench;
mod config;
mod error;
mod ops;
mod replay;

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use cpm_core::snapshot::{self, AnyMarket};

use crate::bench::BenchKind;
use crate::error::{CliError, CliResult};
use crate::ops::Direction;

#[derive(Debug, Parser)]
#[command(name = "cpm", version, about = "Combinatorial market makers over set systems")]
struct Cli {
    /// Seed for every random choice; echoed in each report header.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a market from a JSON config and write a snapshot.
    Init {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Price of the security on an event.
    Price {
        #[arg(long)]
        snap: PathBuf,
        #[arg(long)]
        event: String,
    },
    /// Quote for buying shares on an event, without trading.
    Cost {
        #[arg(long)]
        snap: PathBuf,
        #[arg(long)]
        event: String,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        shares: f64,
    },
    /// Buy (or sell, if negative) shares and update the snapshot.
    Buy {
        #[arg(long)]
        snap: PathBuf,
        #[arg(long)]
        event: String,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        shares: f64,
    },
    /// Swap baskets on a CFMM snapshot and update it.
    Swap {
        #[arg(long)]
        snap: PathBuf,
        #[arg(long)]
        plus: String,
        #[arg(long)]
        minus: String,
        /// Deposit on `plus` (fwd) or release from `minus` (bwd).
        #[arg(long)]
        scale: f64,
        #[arg(long, value_enum)]
        dir: SwapDir,
    },
    /// Apply a JSON Lines trade log to a snapshot.
    Replay {
        #[arg(long)]
        snap: PathBuf,
        #[arg(long)]
        log: PathBuf,
        /// Where to save the final state; the input snapshot is left untouched.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Visit-count scaling table as CSV.
    Bench {
        #[arg(long, value_enum)]
        kind: BenchKind,
        /// Comma-separated outcome counts.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long)]
        ops: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SwapDir {
    Fwd,
    Bwd,
}

fn load(path: &Path) -> CliResult<AnyMarket> {
    match snapshot::load(path) {
        Ok(m) => Ok(m),
        Err(cpm_core::Error::Io(e)) => Err(CliError::io(format!("cannot read snapshot {}", path.display()))(e)),
        Err(e) => Err(CliError::Usage(format!("cannot decode snapshot {}: {e}", path.display()))),
    }
}

/// Writes through a sibling file and renames, so a failed write never
/// leaves a truncated snapshot behind.
fn save(market: &AnyMarket, path: &Path) -> CliResult<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    snapshot::save(market, &tmp)?;
    std::fs::rename(&tmp, path).map_err(CliError::io(format!("cannot replace snapshot {}", path.display())))
}

fn header(out: &mut impl Write, command: &str, seed: u64, market: Option<&AnyMarket>) -> io::Result<()> {
    writeln!(out, "# cpm {command} seed={seed}")?;
    if let Some(m) = market {
        writeln!(out, "# market {} n={} nodes={}", m.kind_name(), m.system().n(), m.topology().len())?;
    }
    Ok(())
}

fn run(cli: Cli, out: &mut impl Write) -> CliResult<()> {
    let seed = cli.seed;
    let w = |r: io::Result<()>| r.map_err(CliError::io("cannot write report"));
    match cli.command {
        Command::Init { config, out: snap } => {
            let cfg = config::read_config(&config)?;
            let base = config.parent().unwrap_or(Path::new("."));
            let start = Instant::now();
            let market = config::build_market(&cfg, base)?;
            let build = start.elapsed();
            save(&market, &snap)?;
            w(header(out, "init", seed, Some(&market)))?;
            w(writeln!(out, "n\t{}", market.system().n()))?;
            w(writeln!(out, "nodes\t{}", market.topology().len()))?;
            w(writeln!(out, "build_ms\t{:.3}", build.as_secs_f64() * 1e3))?;
        }
        Command::Price { snap, event } => {
            let mut market = load(&snap)?;
            let e = ops::parse_event(&event, market.system())?;
            let r = ops::price(&mut market, &e)?;
            w(header(out, "price", seed, Some(&market)))?;
            w(writeln!(out, "price\t{:.12}\nvisits\t{}", r.value, r.visits))?;
        }
        Command::Cost { snap, event, shares } => {
            let mut market = load(&snap)?;
            let e = ops::parse_event(&event, market.system())?;
            let r = ops::cost(&mut market, &e, shares)?;
            w(header(out, "cost", seed, Some(&market)))?;
            w(writeln!(out, "cost\t{:.12}\nvisits\t{}", r.value, r.visits))?;
        }
        Command::Buy { snap, event, shares } => {
            let mut market = load(&snap)?;
            let e = ops::parse_event(&event, market.system())?;
            let r = ops::buy(&mut market, &e, shares)?;
            save(&market, &snap)?;
            w(header(out, "buy", seed, Some(&market)))?;
            w(writeln!(out, "paid\t{:.12}\nvisits\t{}", r.value, r.visits))?;
        }
        Command::Swap { snap, plus, minus, scale, dir } => {
            let mut market = load(&snap)?;
            let plus = ops::parse_event(&plus, market.system())?;
            let minus = ops::parse_event(&minus, market.system())?;
            let (dir, label) = match dir {
                SwapDir::Fwd => (Direction::Forward, "released"),
                SwapDir::Bwd => (Direction::Backward, "deposited"),
            };
            let r = ops::swap(&mut market, &minus, &plus, scale, dir)?;
            save(&market, &snap)?;
            w(header(out, "swap", seed, Some(&market)))?;
            w(writeln!(out, "{label}\t{:.12}\nvisits\t{}", r.value, r.visits))?;
        }
        Command::Replay { snap, log, out: save_to } => {
            let mut market = load(&snap)?;
            let file = File::open(&log).map_err(CliError::io(format!("cannot open log {}", log.display())))?;
            w(header(out, "replay", seed, Some(&market)))?;
            let summary = replay::replay(&mut market, BufReader::new(file), out)?;
            w(writeln!(out, "# records={} cash={:.12}", summary.records, summary.cash))?;
            if let Some(path) = save_to {
                save(&market, &path)?;
            }
        }
        Command::Bench { kind, n, ops } => {
            let rows = bench::run(kind, &n, ops, seed)?;
            w(header(out, &format!("bench kind={} ops={ops}", kind_name(kind)), seed, None))?;
            let mut csv = csv::Writer::from_writer(out);
            for row in &rows {
                csv.serialize(row).map_err(|e| CliError::Usage(format!("cannot write CSV: {e}")))?;
            }
            csv.flush().map_err(CliError::io("cannot write report"))?;
        }
    }
    Ok(())
}

fn kind_name(kind: BenchKind) -> &'static str {
    match kind {
        BenchKind::Interval => "interval",
        BenchKind::Grid => "grid",
        BenchKind::Hierarchy => "hierarchy",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
