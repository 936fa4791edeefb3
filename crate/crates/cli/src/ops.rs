//! Market operations shared by the single-shot commands and `replay`.

use cpm_core::snapshot::AnyMarket;
use cpm_core::{Event, SetSystem};
use serde::Deserialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// An event in its JSON encoding, or the name of a set in an explicit system.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum EventArg {
    Named(String),
    Event(Event),
}

impl EventArg {
    pub fn resolve(&self, sys: &SetSystem) -> CliResult<Event> {
        match self {
            EventArg::Event(e) => Ok(e.clone()),
            EventArg::Named(name) => sys.named_set(name).ok_or_else(|| CliError::Usage(format!("no named set `{name}`"))),
        }
    }
}

/// Parses a command-line event: JSON, or a bare set name.
pub fn parse_event(text: &str, sys: &SetSystem) -> CliResult<Event> {
    let arg = match serde_json::from_str::<Value>(text) {
        Ok(v) => serde_json::from_value(v).map_err(|e| CliError::Usage(format!("malformed event {text}: {e}")))?,
        Err(_) => EventArg::Named(text.to_string()),
    };
    arg.resolve(sys)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// A result value with the tree nodes visited to produce it.
#[derive(Clone, Copy, Debug)]
pub struct Outcome {
    pub value: f64,
    pub visits: u64,
}

fn scoring(m: &mut AnyMarket) -> CliResult<&mut dyn cpm_core::msr_markets::ScoringMarket> {
    let kind = m.kind_name();
    m.as_scoring().ok_or_else(|| CliError::Usage(format!("{kind} pools trade by swap, not price/cost/buy")))
}

pub fn price(m: &mut AnyMarket, e: &Event) -> CliResult<Outcome> {
    let s = scoring(m)?;
    let value = s.price(e)?;
    Ok(Outcome { value, visits: s.last_visits() as u64 })
}

pub fn cost(m: &mut AnyMarket, e: &Event, shares: f64) -> CliResult<Outcome> {
    let s = scoring(m)?;
    let value = s.cost(e, shares)?;
    Ok(Outcome { value, visits: s.last_visits() as u64 })
}

pub fn buy(m: &mut AnyMarket, e: &Event, shares: f64) -> CliResult<Outcome> {
    let s = scoring(m)?;
    let value = s.buy(e, shares)?;
    Ok(Outcome { value, visits: s.last_visits() as u64 })
}

/// Forward: deposit `scale` on `plus`, return the amount released from
/// `minus`. Backward: release `scale` from `minus`, return the deposit.
pub fn swap(m: &mut AnyMarket, minus: &Event, plus: &Event, scale: f64, dir: Direction) -> CliResult<Outcome> {
    let kind = m.kind_name();
    let AnyMarket::Cfmm(pool) = m else {
        return Err(CliError::Usage(format!("{kind} markets do not swap")));
    };
    let start = pool.visit_total();
    let value = match dir {
        Direction::Forward => pool.trade_forward(minus, plus, scale)?,
        Direction::Backward => pool.trade_backward(minus, plus, scale)?,
    };
    Ok(Outcome { value, visits: pool.visit_total() - start })
}
