//! JSON Lines trade logs.

use std::io::{BufRead, Write};

use cpm_core::snapshot::AnyMarket;
use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::ops::{self, Direction, EventArg};

/// Largest accepted gap between a record's result and its `expected` value.
pub const EXPECTED_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum LogOp {
    Price,
    Cost,
    Buy,
    SwapFwd,
    SwapBwd,
}

impl LogOp {
    fn name(self) -> &'static str {
        match self {
            LogOp::Price => "price",
            LogOp::Cost => "cost",
            LogOp::Buy => "buy",
            LogOp::SwapFwd => "swap_fwd",
            LogOp::SwapBwd => "swap_bwd",
        }
    }
}

/// One trade-log line. Scoring ops use `event` and `shares`; swaps use
/// `minus`, `plus` and `scale`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TradeLogRecord {
    pub op: LogOp,
    #[serde(default)]
    pub event: Option<EventArg>,
    #[serde(default)]
    pub minus: Option<EventArg>,
    #[serde(default)]
    pub plus: Option<EventArg>,
    #[serde(default)]
    pub shares: Option<f64>,
    #[serde(default)]
    pub scale: Option<f64>,
    #[serde(default)]
    pub expected: Option<f64>,
}

fn required<T: Clone>(field: &Option<T>, name: &str, line: usize) -> CliResult<T> {
    field.clone().ok_or_else(|| CliError::Usage(format!("log line {line}: missing `{name}`")))
}

fn apply(market: &mut AnyMarket, rec: &TradeLogRecord, line: usize) -> CliResult<ops::Outcome> {
    let sys = market.system().clone();
    match rec.op {
        LogOp::Price | LogOp::Cost | LogOp::Buy => {
            let e = required(&rec.event, "event", line)?.resolve(&sys)?;
            match rec.op {
                LogOp::Price => ops::price(market, &e),
                LogOp::Cost => ops::cost(market, &e, required(&rec.shares, "shares", line)?),
                _ => ops::buy(market, &e, required(&rec.shares, "shares", line)?),
            }
        }
        LogOp::SwapFwd | LogOp::SwapBwd => {
            let minus = required(&rec.minus, "minus", line)?.resolve(&sys)?;
            let plus = required(&rec.plus, "plus", line)?.resolve(&sys)?;
            let dir = if rec.op == LogOp::SwapFwd { Direction::Forward } else { Direction::Backward };
            ops::swap(market, &minus, &plus, required(&rec.scale, "scale", line)?, dir)
        }
    }
}

/// Applies every record in order, writing one report row per record.
/// Stops at the first failing record; rows already written stay written.
pub fn replay(market: &mut AnyMarket, log: impl BufRead, out: &mut impl Write) -> CliResult<ReplaySummary> {
    let io = CliError::io("cannot write report");
    let mut summary = ReplaySummary::default();
    writeln!(out, "record\top\tresult\tvisits\tcash").map_err(io)?;
    for (i, line) in log.lines().enumerate() {
        let line_no = i + 1;
        let text = line.map_err(CliError::io(format!("cannot read log line {line_no}")))?;
        if text.trim().is_empty() {
            continue;
        }
        let rec: TradeLogRecord =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("log line {line_no}: {e}")))?;
        let outcome = apply(market, &rec, line_no)?;
        if rec.op == LogOp::Buy {
            summary.cash += outcome.value;
        }
        summary.records += 1;
        writeln!(
            out,
            "{line_no}\t{}\t{:.12}\t{}\t{:.12}",
            rec.op.name(),
            outcome.value,
            outcome.visits,
            summary.cash
        )
        .map_err(CliError::io("cannot write report"))?;
        if let Some(want) = rec.expected {
            if !((outcome.value - want).abs() <= EXPECTED_TOLERANCE) {
                return Err(CliError::Assertion(format!(
                    "log line {line_no}: {} returned {:.12}, expected {want}",
                    rec.op.name(),
                    outcome.value
                )));
            }
        }
    }
    Ok(summary)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ReplaySummary {
    pub records: usize,
    /// Cash collected by the market maker from buys.
    pub cash: f64,
}
