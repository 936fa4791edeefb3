//! Constant function market makers over baskets of assets.
//!
//! A swap adds `s_plus` units of every asset in one basket to the reserves
//! and releases `s` units of every asset in another, keeping the trading
//! function `φ` fixed. For the log function each candidate `s` costs one
//! range update, one root read and one inverse update, and `s` is found by
//! bisection. The linear function has a closed form.

use serde::{Deserialize, Serialize};

use crate::algebra::{AffineSum, LogSumAdd};
use crate::partition_tree::{PartitionTree, PreparedEvent, Topology, TreeParts};
use crate::{Error, Event, Relation, Result, SetSystem};

/// Default bound on any swap scale.
pub const DEFAULT_SCALE_BOUND: f64 = 1e6;
/// Bisection stops once the bracket is this narrow.
pub const SCALE_TOLERANCE: f64 = 1e-12;
/// Bisection stops once `|φ(s) − φ₀| ≤ PHI_TOLERANCE · |φ₀|`.
pub const PHI_TOLERANCE: f64 = 1e-12;
/// Hard cap on bisection steps.
pub const MAX_BISECTION_STEPS: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TradingFunction {
    /// `φ(w) = −Σ e^{−w_x/b}`.
    Log { b: f64 },
    /// `φ(w) = Σ c_x w_x` with positive `c`.
    Linear { weights: Vec<f64> },
}

impl TradingFunction {
    /// `φ` after asset `x` moves from `old` to `new`, from the previous `φ`
    /// alone.
    pub fn replace_coordinate(&self, phi: f64, x: usize, old: f64, new: f64) -> f64 {
        match self {
            TradingFunction::Log { b } => phi + (-old / b).exp() - (-new / b).exp(),
            TradingFunction::Linear { weights } => phi + weights[x] * (new - old),
        }
    }
}

#[derive(Clone, Debug)]
enum Pool {
    Log(PartitionTree<LogSumAdd>),
    Linear(PartitionTree<AffineSum>),
}

/// Work done by the most recent swap.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub iterations: usize,
    pub updates: usize,
    pub evaluations: usize,
    pub inverses: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Leg {
    /// Bisect on the amount released from `e_minus`.
    Minus,
    /// Bisect on the amount added to `e_plus`.
    Plus,
}

#[derive(Clone, Debug)]
pub struct CfmmState {
    function: TradingFunction,
    pool: Pool,
    scale_bound: f64,
    phi_cached: f64,
    last_search: SearchStats,
}

fn check_input(s: f64) -> Result<()> {
    if !s.is_finite() {
        Err(Error::NonFinite("swap scale".into()))
    } else if s < 0.0 {
        Err(Error::NegativeInput(s))
    } else {
        Ok(())
    }
}

impl CfmmState {
    pub fn new(system: SetSystem, topology: Topology, function: TradingFunction, reserves: &[f64]) -> Result<Self> {
        let n = system.n();
        if reserves.len() != n {
            return Err(Error::InvalidParameter(format!("{} reserves for {n} assets", reserves.len())));
        }
        if reserves.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("reserves".into()));
        }
        let pool = match &function {
            TradingFunction::Log { b } => {
                if !(b.is_finite() && *b > 0.0) {
                    return Err(Error::InvalidParameter(format!("log liquidity {b} must be positive")));
                }
                Pool::Log(PartitionTree::new(LogSumAdd, system, topology, |x| -reserves[x] / b))
            }
            TradingFunction::Linear { weights } => {
                if weights.len() != n || weights.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
                    return Err(Error::InvalidParameter("linear weights must be positive, one per asset".into()));
                }
                Pool::Linear(PartitionTree::new(AffineSum, system, topology, |x| [weights[x] * reserves[x], weights[x]]))
            }
        };
        let mut st = CfmmState { function, pool, scale_bound: DEFAULT_SCALE_BOUND, phi_cached: 0.0, last_search: SearchStats::default() };
        st.phi_cached = st.evaluate();
        Ok(st)
    }

    pub fn with_scale_bound(mut self, bound: f64) -> Result<Self> {
        if !(bound.is_finite() && bound > 0.0) {
            return Err(Error::InvalidParameter(format!("scale bound {bound} must be positive")));
        }
        self.scale_bound = bound;
        Ok(self)
    }

    pub fn function(&self) -> &TradingFunction {
        &self.function
    }

    pub fn scale_bound(&self) -> f64 {
        self.scale_bound
    }

    pub fn system(&self) -> &SetSystem {
        match &self.pool {
            Pool::Log(t) => t.system(),
            Pool::Linear(t) => t.system(),
        }
    }

    pub fn topology(&self) -> &Topology {
        match &self.pool {
            Pool::Log(t) => t.topology(),
            Pool::Linear(t) => t.topology(),
        }
    }

    /// Cached `φ(w)`, refreshed after every accepted swap.
    pub fn phi(&self) -> f64 {
        self.phi_cached
    }

    pub fn last_search(&self) -> SearchStats {
        self.last_search
    }

    pub fn visit_total(&self) -> u64 {
        match &self.pool {
            Pool::Log(t) => t.visit_count().total,
            Pool::Linear(t) => t.visit_count().total,
        }
    }

    pub fn reserves(&self) -> Result<Vec<f64>> {
        Ok(match (&self.pool, &self.function) {
            (Pool::Log(t), TradingFunction::Log { b }) => t.outcome_values()?.into_iter().map(|z| -z * b).collect(),
            (Pool::Linear(t), _) => t.outcome_values()?.into_iter().map(|[a, c]| a / c).collect(),
            _ => unreachable!("pool matches its function"),
        })
    }

    /// `φ` from the root aggregate.
    fn evaluate(&self) -> f64 {
        match &self.pool {
            Pool::Log(t) => -t.root_value().exp(),
            Pool::Linear(t) => t.root_value()[0],
        }
    }

    /// Adds `delta` units of every asset in the prepared basket.
    fn shift(&mut self, ev: &PreparedEvent, delta: f64) -> Result<()> {
        match (&mut self.pool, &self.function) {
            (Pool::Log(t), TradingFunction::Log { b }) => t.range_update_prepared(ev, &(-delta / b)),
            (Pool::Linear(t), _) => t.range_update_prepared(ev, &delta),
            _ => unreachable!("pool matches its function"),
        }
    }

    fn prepare(&self, e: &Event) -> Result<PreparedEvent> {
        self.topology().prepare(self.system(), e)
    }

    fn classify(&self, ev: &PreparedEvent, v: usize) -> Result<Relation> {
        self.topology().classify(self.system(), ev, v)
    }

    /// True when some asset lies in both baskets.
    pub fn baskets_overlap(&self, a: &Event, b: &Event) -> Result<bool> {
        let (ea, eb) = (self.prepare(a)?, self.prepare(b)?);
        let mut stack = vec![self.topology().root()];
        while let Some(v) = stack.pop() {
            let (ra, rb) = (self.classify(&ea, v)?, self.classify(&eb, v)?);
            match (ra, rb) {
                (Relation::Disjoint, _) | (_, Relation::Disjoint) => {}
                (Relation::Contains, Relation::Contains) => return Ok(true),
                _ => stack.extend(self.topology().children(v).iter().map(|&c| c as usize)),
            }
        }
        Ok(false)
    }

    /// Total linear weight `Σ_{x∈e} c_x`.
    fn linear_weight(&mut self, ev: &PreparedEvent) -> Result<f64> {
        match &mut self.pool {
            Pool::Linear(t) => Ok(t.range_query_prepared(ev)?[1]),
            Pool::Log(_) => unreachable!("linear pools only"),
        }
    }

    fn prepare_pair(&self, e_minus: &Event, e_plus: &Event) -> Result<(PreparedEvent, PreparedEvent)> {
        if self.baskets_overlap(e_minus, e_plus)? {
            return Err(Error::OverlappingBaskets);
        }
        Ok((self.prepare(e_minus)?, self.prepare(e_plus)?))
    }

    /// Deposits `s_plus` of each asset in `e_plus`; returns the amount `s`
    /// of each asset in `e_minus` released at constant `φ`.
    pub fn trade_forward(&mut self, e_minus: &Event, e_plus: &Event, s_plus: f64) -> Result<f64> {
        match self.function {
            TradingFunction::Log { .. } => self.search_forward(e_minus, e_plus, s_plus),
            TradingFunction::Linear { .. } => {
                check_input(s_plus)?;
                let (em, ep) = self.prepare_pair(e_minus, e_plus)?;
                self.last_search = SearchStats::default();
                if s_plus == 0.0 {
                    return Ok(0.0);
                }
                let s = s_plus * self.linear_weight(&ep)? / self.linear_weight(&em)?;
                if !(s.is_finite() && s <= self.scale_bound) {
                    return Err(Error::NoFeasibleScale(self.scale_bound));
                }
                self.commit(&ep, s_plus, &em, s)?;
                Ok(s)
            }
        }
    }

    /// Releases `s_minus` of each asset in `e_minus`; returns the amount `s`
    /// of each asset in `e_plus` that must be deposited at constant `φ`.
    pub fn trade_backward(&mut self, e_minus: &Event, e_plus: &Event, s_minus: f64) -> Result<f64> {
        match self.function {
            TradingFunction::Log { .. } => self.search_backward(e_minus, e_plus, s_minus),
            TradingFunction::Linear { .. } => {
                check_input(s_minus)?;
                let (em, ep) = self.prepare_pair(e_minus, e_plus)?;
                self.last_search = SearchStats::default();
                if s_minus == 0.0 {
                    return Ok(0.0);
                }
                let s = s_minus * self.linear_weight(&em)? / self.linear_weight(&ep)?;
                if !(s.is_finite() && s <= self.scale_bound) {
                    return Err(Error::NoFeasibleScale(self.scale_bound));
                }
                self.commit(&ep, s, &em, s_minus)?;
                Ok(s)
            }
        }
    }

    fn commit(&mut self, ep: &PreparedEvent, plus: f64, em: &PreparedEvent, minus: f64) -> Result<()> {
        self.shift(ep, plus)?;
        self.shift(em, -minus)?;
        self.phi_cached = self.evaluate();
        Ok(())
    }

    /// Forward swap by bisection, for any trading function.
    pub fn search_forward(&mut self, e_minus: &Event, e_plus: &Event, s_plus: f64) -> Result<f64> {
        check_input(s_plus)?;
        let (em, ep) = self.prepare_pair(e_minus, e_plus)?;
        self.last_search = SearchStats::default();
        if s_plus == 0.0 {
            return Ok(0.0);
        }
        let target = self.phi_cached;
        self.shift(&ep, s_plus)?;
        self.last_search.updates += 1;
        match self.bisect(&em, Leg::Minus, target) {
            Ok(s) => {
                self.shift(&em, -s)?;
                self.last_search.updates += 1;
                self.phi_cached = self.evaluate();
                Ok(s)
            }
            Err(e) => {
                self.shift(&ep, -s_plus)?;
                self.last_search.inverses += 1;
                Err(e)
            }
        }
    }

    /// Backward swap by bisection, for any trading function.
    pub fn search_backward(&mut self, e_minus: &Event, e_plus: &Event, s_minus: f64) -> Result<f64> {
        check_input(s_minus)?;
        let (em, ep) = self.prepare_pair(e_minus, e_plus)?;
        self.last_search = SearchStats::default();
        if s_minus == 0.0 {
            return Ok(0.0);
        }
        let target = self.phi_cached;
        self.shift(&em, -s_minus)?;
        self.last_search.updates += 1;
        match self.bisect(&ep, Leg::Plus, target) {
            Ok(s) => {
                self.shift(&ep, s)?;
                self.last_search.updates += 1;
                self.phi_cached = self.evaluate();
                Ok(s)
            }
            Err(e) => {
                self.shift(&em, s_minus)?;
                self.last_search.inverses += 1;
                Err(e)
            }
        }
    }

    /// `φ` after a trial move of `s` on the searched leg, minus `target`.
    /// One update, one evaluation, one inverse update.
    fn probe(&mut self, ev: &PreparedEvent, leg: Leg, s: f64, target: f64) -> Result<f64> {
        let delta = if leg == Leg::Minus { -s } else { s };
        self.shift(ev, delta)?;
        let phi = self.evaluate();
        self.shift(ev, -delta)?;
        self.last_search.updates += 1;
        self.last_search.evaluations += 1;
        self.last_search.inverses += 1;
        Ok(phi - target)
    }

    /// Root of the probe on `[0, scale_bound]`. Releasing assets lowers `φ`
    /// and depositing raises it, so the probe is monotone on either leg.
    fn bisect(&mut self, ev: &PreparedEvent, leg: Leg, target: f64) -> Result<f64> {
        let tol = PHI_TOLERANCE * target.abs();
        // Orient so that `g` decreases in `s`.
        let sign = if leg == Leg::Minus { 1.0 } else { -1.0 };
        let g_hi = sign * self.probe(ev, leg, self.scale_bound, target)?;
        if g_hi > tol || g_hi.is_nan() {
            return Err(Error::NoFeasibleScale(self.scale_bound));
        }
        let (mut lo, mut hi) = (0.0, self.scale_bound);
        let mut mid = 0.5 * (lo + hi);
        while self.last_search.iterations < MAX_BISECTION_STEPS {
            mid = 0.5 * (lo + hi);
            self.last_search.iterations += 1;
            let g = sign * self.probe(ev, leg, mid, target)?;
            if g.abs() <= tol || hi - lo <= SCALE_TOLERANCE {
                break;
            }
            if g > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(mid)
    }

    pub fn to_parts(&self) -> TreeParts {
        match &self.pool {
            Pool::Log(t) => t.to_parts(),
            Pool::Linear(t) => t.to_parts(),
        }
    }

    pub fn from_parts(system: SetSystem, function: TradingFunction, scale_bound: f64, parts: TreeParts) -> Result<Self> {
        let pool = match &function {
            TradingFunction::Log { .. } => Pool::Log(PartitionTree::from_parts(LogSumAdd, system, parts)?),
            TradingFunction::Linear { .. } => Pool::Linear(PartitionTree::from_parts(AffineSum, system, parts)?),
        };
        let mut st = CfmmState { function, pool, scale_bound, phi_cached: 0.0, last_search: SearchStats::default() };
        st.phi_cached = st.evaluate();
        Ok(st)
    }
}
