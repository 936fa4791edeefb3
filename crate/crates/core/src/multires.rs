//! Multi-resolution market maker over nested partitions.
//!
//! Level `k` runs its own submarket with liquidity `b_k` over the cells of
//! the level-`k` partition. Submarkets are tied by the constraint bundle of
//! each internal node `u` at level `l`: `+B_l` on `u` and `−b_k` on every
//! level-`k` descendant, where `B_k = Σ_{j>k} b_j`. The market stores the
//! trader weights `w` and the bundle holdings `η` per node and keeps prices
//! coherent (a cell's price equals the sum over its children) after every
//! buy.
//!
//! With the node score `a(v) = (w(v) + B_k η(v)) / b_k`, coherence at every
//! level is equivalent to a per-node residual being equal across each level:
//!
//! * LMSR: `a(u) + η(u) − ln Σ_{c} e^{a(c)}`
//! * QMSR: `a(u) + η(u) − Σ_{c} (|N(c)|/|N(u)|) a(c)`
//!
//! The market pins every residual below the root to zero. Buying `x` of
//! `u`'s bundle moves `u`'s residual by `x (b_l + B_l) / b_l`, touches the
//! parent's residual through `a(u)`, and leaves every other residual alone,
//! so a trade is repaired by one closed-form step per node on the root path.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::algebra::log_sum_exp;
use crate::msr_markets::ScoringMarket;
use crate::oracle::{CellTable, DenseHierarchy};
use crate::partition_tree::{HierarchySpec, Topology};
use crate::{Error, Event, Result, SetSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MultiResRule {
    Lmsr,
    Qmsr,
}

/// Bundle shares that make an LMSR node's price match its children's.
///
/// `price` is the node's price in its own level, `finer_price` the summed
/// price of its children one level down, `level_b = b_l` and
/// `finer_total = Σ_{k≥l} b_k`.
pub fn lmsr_removal_shares(price: f64, finer_price: f64, level_b: f64, finer_total: f64) -> Result<f64> {
    for p in [price, finer_price] {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::LogSingularity(p));
        }
    }
    let logit = |p: f64| p.ln() - (-p).ln_1p();
    Ok(level_b / finer_total * (logit(finer_price) - logit(price)))
}

/// Bundle shares that make a QMSR node's price match its children's.
/// Fails for a node spanning every outcome, which never needs repair.
pub fn qmsr_removal_shares(
    price: f64,
    finer_price: f64,
    cell_size: usize,
    n: usize,
    level_b: f64,
    finer_total: f64,
) -> Result<f64> {
    if cell_size >= n {
        return Err(Error::FullSpanNode);
    }
    let (m, n) = (cell_size as f64, n as f64);
    Ok(level_b / finer_total * 2.0 * n * (finer_price - price) / (m * (n - m)))
}

/// Per-node mutable state. `child_agg` holds the children's score
/// aggregate (log-sum-exp or size-weighted mean) for internal nodes.
#[derive(Clone, Debug, PartialEq)]
struct Cells {
    trade: Vec<f64>,
    arb: Vec<f64>,
    score: Vec<f64>,
    child_agg: Vec<f64>,
    /// QMSR only: `Σ_v |N(v)| w̃(v)` per level.
    level_sum: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Slot {
    Trade,
    Arb,
    Score,
    ChildAgg,
}

trait Store {
    fn get(&self, slot: Slot, v: usize) -> f64;
    fn set(&mut self, slot: Slot, v: usize, x: f64);
    fn level_sum(&self, k: usize) -> f64;
    fn add_level_sum(&mut self, k: usize, dx: f64);
}

impl Store for Cells {
    fn get(&self, slot: Slot, v: usize) -> f64 {
        match slot {
            Slot::Trade => self.trade[v],
            Slot::Arb => self.arb[v],
            Slot::Score => self.score[v],
            Slot::ChildAgg => self.child_agg[v],
        }
    }
    fn set(&mut self, slot: Slot, v: usize, x: f64) {
        match slot {
            Slot::Trade => self.trade[v] = x,
            Slot::Arb => self.arb[v] = x,
            Slot::Score => self.score[v] = x,
            Slot::ChildAgg => self.child_agg[v] = x,
        }
    }
    fn level_sum(&self, k: usize) -> f64 {
        self.level_sum[k]
    }
    fn add_level_sum(&mut self, k: usize, dx: f64) {
        self.level_sum[k] += dx;
    }
}

/// Copy-on-write view used by `cost`; scratch grows with the nodes touched.
struct Shadow<'a> {
    base: &'a Cells,
    overlay: HashMap<(Slot, usize), f64>,
    level_sum: Vec<f64>,
}

impl Store for Shadow<'_> {
    fn get(&self, slot: Slot, v: usize) -> f64 {
        self.overlay.get(&(slot, v)).copied().unwrap_or_else(|| self.base.get(slot, v))
    }
    fn set(&mut self, slot: Slot, v: usize, x: f64) {
        self.overlay.insert((slot, v), x);
    }
    fn level_sum(&self, k: usize) -> f64 {
        self.level_sum[k]
    }
    fn add_level_sum(&mut self, k: usize, dx: f64) {
        self.level_sum[k] += dx;
    }
}

/// Immutable shape and liquidity data.
#[derive(Clone, Debug)]
struct Layout {
    rule: MultiResRule,
    topology: Topology,
    level_b: Vec<f64>,
    /// `B_k = Σ_{j>k} b_j`.
    finer_b: Vec<f64>,
    /// Index of each node's cell within its level, in input order.
    cell: Vec<u32>,
}

impl Layout {
    fn level(&self, v: usize) -> usize {
        self.topology.depth(v)
    }

    fn size(&self, v: usize) -> f64 {
        self.topology.size(v) as f64
    }

    fn n(&self) -> f64 {
        self.topology.n() as f64
    }

    fn refresh_score(&self, st: &mut impl Store, v: usize) {
        let k = self.level(v);
        let a = (st.get(Slot::Trade, v) + self.finer_b[k] * st.get(Slot::Arb, v)) / self.level_b[k];
        st.set(Slot::Score, v, a);
    }

    fn refresh_child_agg(&self, st: &mut impl Store, v: usize) {
        let kids = self.topology.children(v);
        let agg = match self.rule {
            MultiResRule::Lmsr => {
                let scores: Vec<f64> = kids.iter().map(|&c| st.get(Slot::Score, c as usize)).collect();
                log_sum_exp(&scores)
            }
            MultiResRule::Qmsr => {
                let total = self.size(v);
                kids.iter().map(|&c| self.size(c as usize) / total * st.get(Slot::Score, c as usize)).sum()
            }
        };
        st.set(Slot::ChildAgg, v, agg);
    }

    fn residual(&self, st: &impl Store, v: usize) -> f64 {
        st.get(Slot::Score, v) + st.get(Slot::Arb, v) - st.get(Slot::ChildAgg, v)
    }

    /// Buys `x` of `v`'s bundle. Updates `v`'s score and the level sums;
    /// the parent's aggregate is left to the caller.
    fn buy_bundle(&self, st: &mut impl Store, v: usize, x: f64) {
        let k = self.level(v);
        st.set(Slot::Arb, v, st.get(Slot::Arb, v) + x);
        self.refresh_score(st, v);
        if self.rule == MultiResRule::Qmsr {
            let m = self.size(v);
            st.add_level_sum(k, m * self.finer_b[k] * x);
            for j in k + 1..self.level_b.len() {
                st.add_level_sum(j, -m * self.level_b[j] * x);
            }
        }
    }

    /// Zeroes `v`'s residual and returns the bundle shares bought.
    fn repair(&self, st: &mut impl Store, v: usize) -> f64 {
        let k = self.level(v);
        let x = -self.residual(st, v) * self.level_b[k] / (self.level_b[k] + self.finer_b[k]);
        self.buy_bundle(st, v, x);
        x
    }

    fn needs_repair(&self, v: usize) -> bool {
        v != self.topology.root() && !self.topology.is_leaf(v)
    }

    /// Adds `s` to `w(u)` and repairs `u` and its ancestors. Returns nodes visited.
    fn trade(&self, st: &mut impl Store, u: usize, s: f64) -> usize {
        st.set(Slot::Trade, u, st.get(Slot::Trade, u) + s);
        self.refresh_score(st, u);
        if self.rule == MultiResRule::Qmsr {
            st.add_level_sum(self.level(u), self.size(u) * s);
        }
        let mut visits = 1;
        let mut v = u;
        loop {
            if self.needs_repair(v) {
                self.repair(st, v);
            }
            let Some(p) = self.topology.parent(v) else { break };
            self.refresh_child_agg(st, p);
            visits += 1;
            v = p;
        }
        visits
    }

    /// `w̃(v) = w(v) + B_k η(v) − b_k Σ_{strict ancestors} η`.
    fn effective(&self, st: &impl Store, v: usize) -> f64 {
        let k = self.level(v);
        let mut above = 0.0;
        let mut u = v;
        while let Some(p) = self.topology.parent(u) {
            above += st.get(Slot::Arb, p);
            u = p;
        }
        st.get(Slot::Trade, v) + self.finer_b[k] * st.get(Slot::Arb, v) - self.level_b[k] * above
    }

    /// Price of node `v`; assumes a coherent state.
    fn node_price(&self, st: &impl Store, v: usize) -> f64 {
        match self.rule {
            MultiResRule::Lmsr => {
                let mut log_p = 0.0;
                let mut u = v;
                while let Some(p) = self.topology.parent(u) {
                    log_p += st.get(Slot::Score, u) - st.get(Slot::ChildAgg, p);
                    u = p;
                }
                log_p.exp()
            }
            MultiResRule::Qmsr => {
                let k = self.level(v);
                let (m, n) = (self.size(v), self.n());
                m / n + m * (self.effective(st, v) - st.level_sum(k) / n) / (2.0 * self.level_b[k])
            }
        }
    }

    /// `Σ_k C_k`, in closed form for a coherent LMSR state.
    fn lmsr_direct_cost(&self, st: &impl Store) -> f64 {
        let root = self.topology.root();
        let w = st.get(Slot::Trade, root) + self.finer_b[0] * st.get(Slot::Arb, root);
        if self.topology.is_leaf(root) {
            w
        } else {
            w + self.finer_b[0] * (st.get(Slot::ChildAgg, root) - st.get(Slot::Arb, root))
        }
    }

    /// Buys `s` on each node of `nodes` and returns the trader's charge and
    /// the nodes visited (excluding the decomposition itself).
    fn buy_nodes(&self, st: &mut impl Store, nodes: &[usize], s: f64) -> (f64, usize) {
        let depth = |v: usize| self.level(v) + 1;
        match self.rule {
            MultiResRule::Lmsr => {
                let before = self.lmsr_direct_cost(st);
                let visits: usize = nodes.iter().map(|&u| self.trade(st, u, s)).sum();
                (self.lmsr_direct_cost(st) - before, visits)
            }
            MultiResRule::Qmsr => {
                // The LCMM cost is quadratic, so the trapezoid rule on the
                // price along the trade is exact.
                let before: f64 = nodes.iter().map(|&u| self.node_price(st, u)).sum();
                let mut visits: usize = nodes.iter().map(|&u| depth(u)).sum();
                visits += nodes.iter().map(|&u| self.trade(st, u, s)).sum::<usize>();
                let after: f64 = nodes.iter().map(|&u| self.node_price(st, u)).sum();
                visits += nodes.iter().map(|&u| depth(u)).sum::<usize>();
                (0.5 * s * (before + after), visits)
            }
        }
    }
}

/// Snapshot payload of a [`MultiResMarket`].
#[derive(Clone, Debug, PartialEq)]
pub struct MultiResParts {
    pub rule: MultiResRule,
    pub topology: Topology,
    pub level_b: Vec<f64>,
    pub cell: Vec<u32>,
    /// Concatenation of trade, arb, score and child aggregate per node.
    pub node_values: Vec<f64>,
    pub level_sum: Vec<f64>,
}

/// Coherent multi-resolution LMSR or QMSR market.
#[derive(Clone, Debug)]
pub struct MultiResMarket {
    system: SetSystem,
    layout: Layout,
    cells: Cells,
    last_visits: usize,
}

impl MultiResMarket {
    /// `levels[0]` must be the single cell `X`; each level refines the one
    /// above. One liquidity per level, each positive.
    pub fn new(rule: MultiResRule, system: SetSystem, levels: &[Vec<Vec<usize>>], liquidity: &[f64]) -> Result<Self> {
        if liquidity.len() != levels.len() {
            return Err(Error::InvalidParameter(format!(
                "{} liquidities for {} levels",
                liquidity.len(),
                levels.len()
            )));
        }
        if let Some(b) = liquidity.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(Error::InvalidParameter(format!("level liquidity {b} must be positive and finite")));
        }
        let topology = Topology::hierarchy(&system, levels, false)?;
        let n = system.n();
        let mut cell = vec![0u32; topology.len()];
        let mut owner = vec![0u32; n];
        for (k, cells) in levels.iter().enumerate() {
            for (c, members) in cells.iter().enumerate() {
                for &x in members {
                    owner[x] = c as u32;
                }
            }
            for v in (0..topology.len()).filter(|&v| topology.depth(v) == k) {
                cell[v] = owner[topology.outcome_at(topology.span(v).0)];
            }
        }
        let finer_b = (0..liquidity.len()).map(|k| liquidity[k + 1..].iter().sum()).collect();
        let len = topology.len();
        let layout = Layout { rule, topology, level_b: liquidity.to_vec(), finer_b, cell };
        let mut cells = Cells {
            trade: vec![0.0; len],
            arb: vec![0.0; len],
            score: vec![0.0; len],
            child_agg: vec![0.0; len],
            level_sum: vec![0.0; levels.len()],
        };
        // Children carry larger preorder ids, so a reverse sweep is bottom-up.
        for v in (0..len).rev() {
            if !layout.topology.is_leaf(v) {
                layout.refresh_child_agg(&mut cells, v);
                if layout.needs_repair(v) {
                    layout.repair(&mut cells, v);
                }
            }
        }
        Ok(MultiResMarket { system, layout, cells, last_visits: 0 })
    }

    /// Builds from a hierarchy file; levels without `b` take `default_b`.
    pub fn from_spec(rule: MultiResRule, system: SetSystem, spec: &HierarchySpec, default_b: Option<f64>) -> Result<Self> {
        let liquidity: Vec<f64> = spec
            .levels
            .iter()
            .map(|l| l.b.or(default_b).ok_or_else(|| Error::InvalidParameter("a level has no liquidity".into())))
            .collect::<Result<_>>()?;
        Self::new(rule, system, &spec.partitions(), &liquidity)
    }

    pub fn rule(&self) -> MultiResRule {
        self.layout.rule
    }

    pub fn system(&self) -> &SetSystem {
        &self.system
    }

    pub fn topology(&self) -> &Topology {
        &self.layout.topology
    }

    pub fn level_liquidity(&self) -> &[f64] {
        &self.layout.level_b
    }

    /// Number of levels below the root.
    pub fn depth(&self) -> usize {
        self.layout.level_b.len() - 1
    }

    pub fn trade_weight(&self, v: usize) -> f64 {
        self.cells.trade[v]
    }

    pub fn arbitrage_weight(&self, v: usize) -> f64 {
        self.cells.arb[v]
    }

    /// Level and within-level cell index of node `v`.
    pub fn cell_of(&self, v: usize) -> (usize, usize) {
        (self.layout.level(v), self.layout.cell[v] as usize)
    }

    /// Trade and arbitrage weights as `[level][cell]` tables.
    pub fn cell_tables(&self) -> (CellTable, CellTable) {
        let mut trade: CellTable = vec![Vec::new(); self.layout.level_b.len()];
        let mut arb = trade.clone();
        for v in 0..self.layout.topology.len() {
            let (k, c) = self.cell_of(v);
            if trade[k].len() <= c {
                trade[k].resize(c + 1, 0.0);
                arb[k].resize(c + 1, 0.0);
            }
            trade[k][c] = self.cells.trade[v];
            arb[k][c] = self.cells.arb[v];
        }
        (trade, arb)
    }

    /// The same hierarchy as a dense reference description.
    pub fn dense_hierarchy(&self) -> DenseHierarchy {
        let topo = &self.layout.topology;
        let mut levels: Vec<Vec<Vec<usize>>> = vec![Vec::new(); self.layout.level_b.len()];
        for v in 0..topo.len() {
            let (k, c) = self.cell_of(v);
            if levels[k].len() <= c {
                levels[k].resize(c + 1, Vec::new());
            }
            let mut members: Vec<usize> = topo.members(v).collect();
            members.sort_unstable();
            levels[k][c] = members;
        }
        DenseHierarchy::new(self.system.n(), levels, self.layout.level_b.clone())
    }

    /// Node price; valid at any level while the state is coherent.
    pub fn node_price(&self, v: usize) -> f64 {
        self.layout.node_price(&self.cells, v)
    }

    /// Exact per-level prices of every node, without assuming coherence.
    pub fn level_prices(&self) -> Vec<f64> {
        let topo = &self.layout.topology;
        let mut out = vec![0.0; topo.len()];
        for k in 0..self.layout.level_b.len() {
            let nodes: Vec<usize> = (0..topo.len()).filter(|&v| topo.depth(v) == k).collect();
            let b = self.layout.level_b[k];
            let eff: Vec<f64> = nodes.iter().map(|&v| self.layout.effective(&self.cells, v)).collect();
            match self.layout.rule {
                MultiResRule::Lmsr => {
                    let scaled: Vec<f64> = eff.iter().map(|w| w / b).collect();
                    let z = log_sum_exp(&scaled);
                    for (&v, a) in nodes.iter().zip(&scaled) {
                        out[v] = (a - z).exp();
                    }
                }
                MultiResRule::Qmsr => {
                    let n = self.layout.n();
                    let mean = nodes.iter().zip(&eff).map(|(&v, w)| self.layout.size(v) * w).sum::<f64>() / n;
                    for (&v, w) in nodes.iter().zip(&eff) {
                        let m = self.layout.size(v);
                        out[v] = m / n + m * (w - mean) / (2.0 * b);
                    }
                }
            }
        }
        out
    }

    /// Largest `|p(u) − Σ_children p(c)|` using exact level prices.
    pub fn coherence_gap(&self) -> f64 {
        let p = self.level_prices();
        let topo = &self.layout.topology;
        (0..topo.len())
            .filter(|&v| !topo.is_leaf(v))
            .map(|v| (p[v] - topo.children(v).iter().map(|&c| p[c as usize]).sum::<f64>()).abs())
            .fold(0.0, f64::max)
    }

    pub fn check_coherent(&self, tol: f64) -> Result<()> {
        let gap = self.coherence_gap();
        if gap <= tol {
            Ok(())
        } else {
            Err(Error::IncoherentState(gap))
        }
    }

    /// `Σ_k C_k(w̃_k)` at the current state.
    pub fn direct_sum_cost(&self) -> f64 {
        match self.layout.rule {
            MultiResRule::Lmsr => self.layout.lmsr_direct_cost(&self.cells),
            MultiResRule::Qmsr => {
                let h = self.dense_hierarchy();
                let (trade, arb) = self.cell_tables();
                h.direct_sum_cost(MultiResRule::Qmsr, &h.effective_state(&trade, &arb))
            }
        }
    }

    fn decompose(&self, e: &Event) -> Result<(Vec<usize>, usize)> {
        let ev = self.layout.topology.prepare(&self.system, e)?;
        self.layout.topology.decompose(&self.system, &ev)
    }

    pub fn mr_price(&mut self, e: &Event) -> Result<f64> {
        let (nodes, mut visits) = self.decompose(e)?;
        let mut p = 0.0;
        for &v in &nodes {
            p += self.layout.node_price(&self.cells, v);
            visits += self.layout.level(v) + 1;
        }
        self.last_visits = visits;
        Ok(p)
    }

    pub fn mr_buy(&mut self, e: &Event, s: f64) -> Result<f64> {
        check_shares(s)?;
        let (nodes, visits) = self.decompose(e)?;
        if s == 0.0 {
            self.last_visits = visits;
            return Ok(0.0);
        }
        let (paid, walk) = self.layout.buy_nodes(&mut self.cells, &nodes, s);
        self.last_visits = visits + walk;
        Ok(paid)
    }

    /// What [`mr_buy`](Self::mr_buy) would charge, computed on scratch state.
    pub fn mr_cost(&mut self, e: &Event, s: f64) -> Result<f64> {
        check_shares(s)?;
        let (nodes, visits) = self.decompose(e)?;
        if s == 0.0 {
            self.last_visits = visits;
            return Ok(0.0);
        }
        let mut shadow =
            Shadow { base: &self.cells, overlay: HashMap::new(), level_sum: self.cells.level_sum.clone() };
        let (paid, walk) = self.layout.buy_nodes(&mut shadow, &nodes, s);
        self.last_visits = visits + walk;
        Ok(paid)
    }

    /// Adds `s` to `w(v)` without any repair, leaving `v` and its ancestors
    /// incoherent. Meant for exercising the removal step in isolation.
    pub fn trade_without_removal(&mut self, v: usize, s: f64) {
        let l = &self.layout;
        let c = &mut self.cells;
        c.trade[v] += s;
        l.refresh_score(c, v);
        if l.rule == MultiResRule::Qmsr {
            c.add_level_sum(l.level(v), l.size(v) * s);
        }
        if let Some(p) = l.topology.parent(v) {
            l.refresh_child_agg(c, p);
        }
    }

    /// Buys `x` of node `v`'s constraint bundle as is.
    pub fn buy_bundle(&mut self, v: usize, x: f64) -> Result<()> {
        self.check_internal(v)?;
        self.layout.buy_bundle(&mut self.cells, v, x);
        if let Some(p) = self.layout.topology.parent(v) {
            self.layout.refresh_child_agg(&mut self.cells, p);
        }
        Ok(())
    }

    fn check_internal(&self, v: usize) -> Result<()> {
        let topo = &self.layout.topology;
        if v >= topo.len() {
            return Err(Error::IndexOutOfRange { index: v, n: topo.len() });
        }
        if topo.is_leaf(v) {
            return Err(Error::InvalidParameter(format!("node {v} is a leaf and has no bundle")));
        }
        Ok(())
    }

    /// Restores coherence between node `v` and its children, assuming finer
    /// levels inside `v` are coherent. Returns the bundle shares bought.
    pub fn remove_arbitrage(&mut self, v: usize) -> Result<f64> {
        self.check_internal(v)?;
        if self.layout.topology.size(v) == self.system.n() {
            return Err(Error::FullSpanNode);
        }
        let x = self.layout.repair(&mut self.cells, v);
        if let Some(p) = self.layout.topology.parent(v) {
            self.layout.refresh_child_agg(&mut self.cells, p);
        }
        Ok(x)
    }

    pub fn to_parts(&self) -> MultiResParts {
        let c = &self.cells;
        let node_values = [&c.trade, &c.arb, &c.score, &c.child_agg].into_iter().flatten().copied().collect();
        MultiResParts {
            rule: self.layout.rule,
            topology: self.layout.topology.clone(),
            level_b: self.layout.level_b.clone(),
            cell: self.layout.cell.clone(),
            node_values,
            level_sum: c.level_sum.clone(),
        }
    }

    pub fn from_parts(system: SetSystem, parts: MultiResParts) -> Result<Self> {
        let len = parts.topology.len();
        let levels = parts.level_b.len();
        if parts.topology.n() != system.n()
            || parts.cell.len() != len
            || parts.node_values.len() != 4 * len
            || parts.level_sum.len() != levels
            || (0..len).any(|v| parts.topology.depth(v) >= levels)
            || (0..len).any(|v| parts.topology.is_leaf(v) && parts.topology.depth(v) + 1 != levels)
        {
            return Err(Error::Snapshot("multi-resolution payload does not match its topology".into()));
        }
        if parts.level_b.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(Error::Snapshot("level liquidity must be positive".into()));
        }
        let mut chunks = parts.node_values.chunks_exact(len).map(<[f64]>::to_vec);
        let mut next = || chunks.next().expect("four chunks");
        let cells = Cells { trade: next(), arb: next(), score: next(), child_agg: next(), level_sum: parts.level_sum };
        let finer_b = (0..levels).map(|k| parts.level_b[k + 1..].iter().sum()).collect();
        let layout = Layout { rule: parts.rule, topology: parts.topology, level_b: parts.level_b, finer_b, cell: parts.cell };
        Ok(MultiResMarket { system, layout, cells, last_visits: 0 })
    }
}

fn check_shares(s: f64) -> Result<()> {
    if s.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("share quantity".into()))
    }
}

impl ScoringMarket for MultiResMarket {
    fn n(&self) -> usize {
        self.system.n()
    }

    /// Liquidity of the finest submarket.
    fn liquidity(&self) -> f64 {
        *self.layout.level_b.last().expect("at least one level")
    }

    fn price(&mut self, e: &Event) -> Result<f64> {
        self.mr_price(e)
    }

    fn cost(&mut self, e: &Event, s: f64) -> Result<f64> {
        self.mr_cost(e, s)
    }

    fn buy(&mut self, e: &Event, s: f64) -> Result<f64> {
        self.mr_buy(e, s)
    }

    fn last_visits(&self) -> usize {
        self.last_visits
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn binary(n: usize, b: f64, rule: MultiResRule) -> MultiResMarket {
        let spec = HierarchySpec::blocks(n, &(1..).map(|i| n >> i).take_while(|&s| s > 1).collect::<Vec<_>>(), None);
        MultiResMarket::from_spec(rule, SetSystem::interval(n).unwrap(), &spec, Some(b)).unwrap()
    }

    #[test]
    fn removal_formula_examples() {
        assert_abs_diff_eq!(lmsr_removal_shares(0.4, 0.6, 1.0, 2.0).unwrap(), 0.5 * 2.25f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(lmsr_removal_shares(0.4, 0.6, 1.0, 2.0).unwrap(), 0.40546, epsilon = 1e-5);
        assert_eq!(lmsr_removal_shares(0.3, 0.3, 1.0, 2.0).unwrap(), 0.0);
        assert!(matches!(lmsr_removal_shares(0.0, 0.3, 1.0, 2.0), Err(Error::LogSingularity(_))));
        assert_abs_diff_eq!(qmsr_removal_shares(0.2, 0.3, 2, 4, 1.0, 2.0).unwrap(), 0.1, epsilon = 1e-15);
        assert_eq!(qmsr_removal_shares(0.3, 0.3, 2, 4, 1.0, 2.0).unwrap(), 0.0);
        assert!(matches!(qmsr_removal_shares(1.0, 1.0, 4, 4, 1.0, 2.0), Err(Error::FullSpanNode)));
    }

    #[test]
    fn fresh_prices_are_uniform() {
        for rule in [MultiResRule::Lmsr, MultiResRule::Qmsr] {
            let mut m = binary(8, 1.0, rule);
            assert_abs_diff_eq!(m.mr_price(&Event::interval(0.0, 3.0)).unwrap(), 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(m.mr_price(&Event::interval(5.0, 5.0)).unwrap(), 0.125, epsilon = 1e-12);
            assert!(m.coherence_gap() < 1e-12);
        }
    }

    #[test]
    fn trivial_trades() {
        for rule in [MultiResRule::Lmsr, MultiResRule::Qmsr] {
            let mut m = binary(8, 1.0, rule);
            let before = m.to_parts();
            assert_eq!(m.mr_buy(&Event::interval(0.0, 2.0), 0.0).unwrap(), 0.0);
            assert_eq!(m.to_parts(), before);
            assert_eq!(m.mr_cost(&Event::interval(0.0, 2.0), 0.0).unwrap(), 0.0);
            let all = Event::interval(0.0, 7.0);
            assert_abs_diff_eq!(m.mr_cost(&all, 1.7).unwrap(), 1.7, epsilon = 1e-12);
            assert_abs_diff_eq!(m.mr_buy(&all, 1.7).unwrap(), 1.7, epsilon = 1e-12);
            assert_abs_diff_eq!(m.mr_price(&Event::interval(0.0, 0.0)).unwrap(), 0.125, epsilon = 1e-12);
        }
    }

    #[test]
    fn buys_stay_coherent_and_cost_matches_shadow() {
        for rule in [MultiResRule::Lmsr, MultiResRule::Qmsr] {
            let mut m = binary(16, 0.8, rule);
            for (lo, hi, s) in [(0.0, 3.0, 1.0), (5.0, 12.0, -0.4), (7.0, 7.0, 2.0), (2.0, 14.0, 0.3)] {
                let e = Event::interval(lo, hi);
                let quoted = m.mr_cost(&e, s).unwrap();
                let paid = m.mr_buy(&e, s).unwrap();
                assert_eq!(quoted, paid);
                assert!(m.coherence_gap() < 1e-12, "{rule:?} gap {}", m.coherence_gap());
            }
        }
    }

    #[test]
    fn removal_step_matches_price_formula() {
        let mut m = binary(8, 1.0, MultiResRule::Lmsr);
        // Node 1 is the left level-1 cell; its children are levels 2.
        let u = m.topology().children(0)[0] as usize;
        m.trade_without_removal(u, 0.7);
        let p = m.level_prices();
        let finer: f64 = m.topology().children(u).iter().map(|&c| p[c as usize]).sum();
        let b = m.level_liquidity().to_vec();
        let expected = lmsr_removal_shares(p[u], finer, b[1], b[1..].iter().sum()).unwrap();
        let x = m.remove_arbitrage(u).unwrap();
        assert_abs_diff_eq!(x, expected, epsilon = 1e-12);
        assert!(m.coherence_gap() < 1e-12);

        let mut q = binary(8, 1.0, MultiResRule::Qmsr);
        q.trade_without_removal(u, 0.7);
        let p = q.level_prices();
        let finer: f64 = q.topology().children(u).iter().map(|&c| p[c as usize]).sum();
        let expected = qmsr_removal_shares(p[u], finer, 4, 8, b[1], b[1..].iter().sum()).unwrap();
        assert_abs_diff_eq!(q.remove_arbitrage(u).unwrap(), expected, epsilon = 1e-12);
        assert!(q.coherence_gap() < 1e-12);
        assert!(matches!(q.remove_arbitrage(0), Err(Error::FullSpanNode)));
    }

    #[test]
    fn unrepresentable_event_is_rejected() {
        let levels = vec![vec![vec![0, 1, 2, 3]], vec![vec![0, 1], vec![2, 3]]];
        let mut m = MultiResMarket::new(MultiResRule::Lmsr, SetSystem::interval(4).unwrap(), &levels, &[1.0, 1.0]).unwrap();
        let before = m.to_parts();
        assert!(matches!(m.mr_buy(&Event::interval(0.0, 0.0), 1.0), Err(Error::EventNotRepresentable { .. })));
        assert_eq!(m.to_parts(), before);
        assert_abs_diff_eq!(m.mr_price(&Event::interval(0.0, 1.0)).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn parts_roundtrip() {
        let mut m = binary(8, 1.5, MultiResRule::Qmsr);
        m.mr_buy(&Event::interval(1.0, 6.0), 0.9).unwrap();
        let back = MultiResMarket::from_parts(m.system().clone(), m.to_parts()).unwrap();
        assert_eq!(back.to_parts(), m.to_parts());
    }
}
