//! Cost-function market makers on a single partition tree.
//!
//! * LMSR: `C(w) = b ln Σ e^{w_x/b}`, tree over [`LogSumAdd`] with leaf `w_x/b`.
//! * QMSR: quadratic rule, tree over [`SumAddVec<2>`] with leaf `(1, w_x)`.
//! * 3/2-power: `C(w) = max_p Σ w_x p_x − b Σ p_x^{3/2}`, tree over moment sums.

use crate::algebra::{alpha_action, log_add_exp, LogSumAdd, MinAdd, Paired, PowerMoments, SumAddVec};
use crate::partition_tree::{PartitionTree, PreparedEvent, Topology};
use crate::{Error, Event, Result, SetSystem};

/// Price, cost and buy on a cost-function market maker.
pub trait ScoringMarket {
    fn n(&self) -> usize;
    fn liquidity(&self) -> f64;
    /// Instantaneous price of the security paying 1 on `e`.
    fn price(&mut self, e: &Event) -> Result<f64>;
    /// `C(w + s·1_e) − C(w)`, without changing the state.
    fn cost(&mut self, e: &Event, s: f64) -> Result<f64>;
    /// Adds `s` shares on `e` and returns the amount charged.
    fn buy(&mut self, e: &Event, s: f64) -> Result<f64>;
    /// Tree nodes visited by the most recent operation.
    fn last_visits(&self) -> usize;
}

fn check_liquidity(b: f64) -> Result<()> {
    if b.is_finite() && b > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("liquidity b = {b} must be positive and finite")))
    }
}

fn check_shares(s: f64) -> Result<()> {
    if s.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("share quantity".into()))
    }
}

fn check_initial(initial: Option<&[f64]>, n: usize) -> Result<()> {
    if let Some(w) = initial {
        if w.len() != n {
            return Err(Error::InvalidParameter(format!("initial state has {} entries, expected {n}", w.len())));
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("initial state".into()));
        }
    }
    Ok(())
}

/// Tracks visits across several tree operations.
#[derive(Clone, Copy, Debug, Default)]
struct VisitMeter {
    start: u64,
}

impl VisitMeter {
    fn start<A: crate::algebra::WeightAlgebra>(tree: &PartitionTree<A>) -> VisitMeter {
        VisitMeter { start: tree.visit_count().total }
    }
    fn read<A: crate::algebra::WeightAlgebra>(self, tree: &PartitionTree<A>) -> usize {
        (tree.visit_count().total - self.start) as usize
    }
}

// ---------------------------------------------------------------------------

/// Logarithmic market scoring rule.
#[derive(Clone, Debug)]
pub struct LmsrMarket {
    b: f64,
    tree: PartitionTree<LogSumAdd>,
    last_visits: usize,
}

/// `C(w + s·1_e) − C(w)` for an event with log-price `logp`.
pub fn lmsr_cost_from_log_price(logp: f64, s: f64, b: f64) -> f64 {
    if logp == f64::NEG_INFINITY || s == 0.0 {
        return 0.0;
    }
    let logp = logp.min(0.0);
    let x = s / b;
    if x.abs() <= 1.0 {
        b * (logp.exp() * x.exp_m1()).ln_1p()
    } else {
        // ln(1 − p) from ln p without cancellation.
        let log1mp = if logp > -std::f64::consts::LN_2 { (-logp.exp_m1()).ln() } else { (-logp.exp()).ln_1p() };
        b * log_add_exp(logp + x, log1mp)
    }
}

impl LmsrMarket {
    pub fn new(system: SetSystem, topology: Topology, b: f64, initial: Option<&[f64]>) -> Result<Self> {
        check_liquidity(b)?;
        check_initial(initial, system.n())?;
        let tree = match initial {
            Some(w) => PartitionTree::new(LogSumAdd, system, topology, |x| w[x] / b),
            None => PartitionTree::uniform(LogSumAdd, system, topology, 0.0),
        };
        Ok(LmsrMarket { b, tree, last_visits: 0 })
    }

    pub fn from_tree(b: f64, tree: PartitionTree<LogSumAdd>) -> Result<Self> {
        check_liquidity(b)?;
        Ok(LmsrMarket { b, tree, last_visits: 0 })
    }

    pub fn tree(&self) -> &PartitionTree<LogSumAdd> {
        &self.tree
    }

    /// `ln Σ e^{w_x/b}`, read from the root aggregate.
    pub fn log_normalizer(&self) -> f64 {
        self.tree.root_value()
    }

    /// `C(w) = b ln Σ e^{w_x/b}`.
    pub fn cost_value(&self) -> f64 {
        self.b * self.log_normalizer()
    }

    /// Current share vector.
    pub fn weights(&self) -> Result<Vec<f64>> {
        Ok(self.tree.outcome_values()?.into_iter().map(|z| z * self.b).collect())
    }

    fn log_price(&mut self, ev: &PreparedEvent) -> Result<f64> {
        let q = self.tree.range_query_prepared(ev)?;
        Ok((q - self.log_normalizer()).min(0.0))
    }
}

impl ScoringMarket for LmsrMarket {
    fn n(&self) -> usize {
        self.tree.system().n()
    }

    fn liquidity(&self) -> f64 {
        self.b
    }

    fn price(&mut self, e: &Event) -> Result<f64> {
        let ev = self.tree.prepare(e)?;
        let meter = VisitMeter::start(&self.tree);
        let logp = self.log_price(&ev)?;
        self.last_visits = meter.read(&self.tree);
        Ok(logp.exp())
    }

    fn cost(&mut self, e: &Event, s: f64) -> Result<f64> {
        check_shares(s)?;
        let ev = self.tree.prepare(e)?;
        let meter = VisitMeter::start(&self.tree);
        let logp = self.log_price(&ev)?;
        self.last_visits = meter.read(&self.tree);
        Ok(lmsr_cost_from_log_price(logp, s, self.b))
    }

    fn buy(&mut self, e: &Event, s: f64) -> Result<f64> {
        check_shares(s)?;
        let ev = self.tree.prepare(e)?;
        let meter = VisitMeter::start(&self.tree);
        let logp = self.log_price(&ev)?;
        let paid = lmsr_cost_from_log_price(logp, s, self.b);
        if s != 0.0 {
            self.tree.range_update_prepared(&ev, &(s / self.b))?;
        }
        self.last_visits = meter.read(&self.tree);
        Ok(paid)
    }

    fn last_visits(&self) -> usize {
        self.last_visits
    }
}

// ---------------------------------------------------------------------------

/// Quadratic market scoring rule. Prices may leave `[0, 1]`.
#[derive(Clone, Debug)]
pub struct QmsrMarket {
    b: f64,
    tree: PartitionTree<SumAddVec<2>>,
    last_visits: usize,
}

impl QmsrMarket {
    pub fn new(system: SetSystem, topology: Topology, b: f64, initial: Option<&[f64]>) -> Result<Self> {
        check_liquidity(b)?;
        check_initial(initial, system.n())?;
        let tree = match initial {
            Some(w) => PartitionTree::new(SumAddVec::<2>, system, topology, |x| [1.0, w[x]]),
            None => PartitionTree::uniform(SumAddVec::<2>, system, topology, [1.0, 0.0]),
        };
        Ok(QmsrMarket { b, tree, last_visits: 0 })
    }

    pub fn from_tree(b: f64, tree: PartitionTree<SumAddVec<2>>) -> Result<Self> {
        check_liquidity(b)?;
        Ok(QmsrMarket { b, tree, last_visits: 0 })
    }

    pub fn tree(&self) -> &PartitionTree<SumAddVec<2>> {
        &self.tree
    }

    /// `Σ_x w_x`.
    pub fn total_weight(&self) -> f64 {
        self.tree.root_value()[1]
    }

    pub fn weights(&self) -> Result<Vec<f64>> {
        Ok(self.tree.outcome_values()?.into_iter().map(|z| z[1]).collect())
    }

    fn nf(&self) -> f64 {
        self.tree.system().n() as f64
    }

    fn price_of(&self, sums: [f64; 2]) -> f64 {
        let (n, b, m) = (self.nf(), self.b, self.total_weight());
        let [count, sum] = sums;
        count / n + sum / (2.0 * b) - count * m / (2.0 * b * n)
    }

    fn cost_of(&self, sums: [f64; 2], s: f64) -> f64 {
        let (n, b, m) = (self.nf(), self.b, self.total_weight());
        let [count, sum] = sums;
        (s / n + s * s / (4.0 * b)) * count - s * s / (4.0 * b * n) * count * count + s / (2.0 * b) * sum
            - s / (2.0 * b * n) * count * m
    }
}

impl ScoringMarket for QmsrMarket {
    fn n(&self) -> usize {
        self.tree.system().n()
    }

    fn liquidity(&self) -> f64 {
        self.b
    }

    fn price(&mut self, e: &Event) -> Result<f64> {
        let ev = self.tree.prepare(e)?;
        let meter = VisitMeter::start(&self.tree);
        let sums = self.tree.range_query_prepared(&ev)?;
        self.last_visits = meter.read(&self.tree);
        Ok(self.price_of(sums))
    }

    fn cost(&mut self, e: &Event, s: f64) -> Result<f64> {
        check_shares(s)?;
        let ev = self.tree.prepare(e)?;
        let meter = VisitMeter::start(&self.tree);
        let sums = self.tree.range_query_prepared(&ev)?;
        self.last_visits = meter.read(&self.tree);
        Ok(self.cost_of(sums, s))
    }

    fn buy(&mut self, e: &Event, s: f64) -> Result<f64> {
        check_shares(s)?;
        let ev = self.tree.prepare(e)?;
        let meter = VisitMeter::start(&self.tree);
        let sums = self.tree.range_query_prepared(&ev)?;
        let paid = self.cost_of(sums, s);
        if s != 0.0 && sums[0] > 0.0 {
            self.tree.range_update_prepared(&ev, &[0.0, s])?;
        }
        self.last_visits = meter.read(&self.tree);
        Ok(paid)
    }

    fn last_visits(&self) -> usize {
        self.last_visits
    }
}

// ---------------------------------------------------------------------------

/// Interior solution of the 3/2-power maximization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerSolution {
    /// `C(w)`.
    pub cost: f64,
    /// Square root of the discriminant.
    pub mu: f64,
    /// KKT multiplier in pivot-centred coordinates.
    pub multiplier: f64,
}

type PowerAlgebra = Paired<PowerMoments, MinAdd>;

/// 3/2-power market scoring rule, valid while the maximizer is interior.
///
/// Leaves store moments of `w_x − pivot` for precision; `C` is 1-invariant so
/// `C(w) = pivot + C(w − pivot)`.
#[derive(Clone, Debug)]
pub struct PowerMarket {
    b: f64,
    pivot: f64,
    tree: PartitionTree<PowerAlgebra>,
    last_visits: usize,
}

/// Closed-form interior solution from global moment sums (count, Σw, Σw², Σw³)
/// and the minimum weight.
pub fn power_solution(moments: &[f64; 4], min_weight: f64, b: f64) -> Result<PowerSolution> {
    let [n, m1, m2, _] = *moments;
    let disc = m1 * m1 - n * (m2 - 2.25 * b * b);
    if !(disc >= 0.0) {
        return Err(Error::NegativeDiscriminant(disc));
    }
    let mu = disc.sqrt();
    let multiplier = (m1 - mu) / n;
    if min_weight < multiplier - 1e-12 * multiplier.abs().max(1.0) {
        return Err(Error::BoundaryKkt { min_weight, multiplier });
    }
    // Third moment about the multiplier.
    let centred = alpha_action(-multiplier, moments);
    let cost = multiplier + 4.0 / (27.0 * b * b) * centred[3];
    Ok(PowerSolution { cost, mu, multiplier })
}

/// `C(w + s·1_e) − C(w)` in the interior regime from the global moment sums
/// and those of `e` (same pivot). Written in moments about the mean so that
/// every term scales with `s`; subtracting two cost values would lose all
/// relative precision for small trades.
pub fn power_cost_delta(global: &[f64; 4], event: &[f64; 4], s: f64, b: f64) -> Result<f64> {
    let n = global[0];
    let mean = global[1] / n;
    let c2 = alpha_action(-mean, global)[2];
    let [k, dev, dev2, _] = alpha_action(-mean, event);
    let f = k / n;
    let (inside, outside) = (s * (1.0 - f), s * f);
    let dc2 = 2.0 * s * dev + s * s * k * (1.0 - f);
    let dc3 = 3.0 * inside * dev2 + 3.0 * inside * inside * dev + k * inside.powi(3)
        - 3.0 * outside * (c2 - dev2)
        - 3.0 * outside * outside * dev
        - (n - k) * outside.powi(3);
    // Distance from the mean to the multiplier, before and after.
    let bb = 2.25 * b * b;
    let (rad, rad_after) = ((bb - c2) / n, (bb - c2 - dc2) / n);
    if !(rad >= 0.0 && rad_after >= 0.0) {
        return Err(Error::NegativeDiscriminant(n * n * rad.min(rad_after)));
    }
    let (gap, gap_after) = (rad.sqrt(), rad_after.sqrt());
    // C = mean + (4/(27b²))·c3 − gap·(2/3 − 8c2/(27b²)).
    let unit = 4.0 / (27.0 * b * b);
    let slope_after = 2.0 / 3.0 - 2.0 * unit * (c2 + dc2);
    let d_gap = if gap + gap_after > 0.0 { -dc2 / n / (gap + gap_after) } else { 0.0 };
    Ok(outside + unit * dc3 - (d_gap * slope_after - gap * 2.0 * unit * dc2))
}

impl PowerMarket {
    pub fn new(system: SetSystem, topology: Topology, b: f64, initial: Option<&[f64]>) -> Result<Self> {
        check_liquidity(b)?;
        check_initial(initial, system.n())?;
        let tree = match initial {
            Some(w) => {
                let pivot = w.iter().sum::<f64>() / w.len() as f64;
                let t = PartitionTree::new(Paired(PowerMoments, MinAdd), system, topology, |x| {
                    let c = w[x] - pivot;
                    (PowerMoments::leaf(c), c)
                });
                return Self::from_tree(b, pivot, t);
            }
            None => PartitionTree::uniform(Paired(PowerMoments, MinAdd), system, topology, (PowerMoments::leaf(0.0), 0.0)),
        };
        Self::from_tree(b, 0.0, tree)
    }

    pub fn from_tree(b: f64, pivot: f64, tree: PartitionTree<PowerAlgebra>) -> Result<Self> {
        check_liquidity(b)?;
        let m = PowerMarket { b, pivot, tree, last_visits: 0 };
        m.solution()?;
        Ok(m)
    }

    pub fn tree(&self) -> &PartitionTree<PowerAlgebra> {
        &self.tree
    }

    pub fn pivot(&self) -> f64 {
        self.pivot
    }

    /// Global moment sums of `w − pivot`.
    pub fn moments(&self) -> [f64; 4] {
        self.tree.root_value().0
    }

    pub fn weights(&self) -> Result<Vec<f64>> {
        Ok(self.tree.outcome_values()?.into_iter().map(|z| z.1 + self.pivot).collect())
    }

    pub fn solution(&self) -> Result<PowerSolution> {
        let (moments, min_weight) = self.tree.root_value();
        let mut sol = power_solution(&moments, min_weight, self.b)?;
        sol.cost += self.pivot;
        Ok(sol)
    }

    fn shift(&mut self, ev: &PreparedEvent, s: f64) -> Result<()> {
        self.tree.range_update_prepared(ev, &(s, s))
    }

    /// Cost of `s` shares on `e`. The shift is applied to check the regime of
    /// the resulting state and kept only when `commit` is set.
    fn trade(&mut self, e: &Event, s: f64, commit: bool) -> Result<f64> {
        check_shares(s)?;
        let ev = self.tree.prepare(e)?;
        self.solution()?;
        if s == 0.0 {
            self.last_visits = 0;
            return Ok(0.0);
        }
        let meter = VisitMeter::start(&self.tree);
        let (sums, _) = self.tree.range_query_prepared(&ev)?;
        let delta = power_cost_delta(&self.moments(), &sums, s, self.b);
        self.shift(&ev, s)?;
        let regime = self.solution();
        if !commit || regime.is_err() {
            self.shift(&ev, -s)?;
        }
        self.last_visits = meter.read(&self.tree);
        regime?;
        delta
    }
}

impl ScoringMarket for PowerMarket {
    fn n(&self) -> usize {
        self.tree.system().n()
    }

    fn liquidity(&self) -> f64 {
        self.b
    }

    fn price(&mut self, e: &Event) -> Result<f64> {
        let ev = self.tree.prepare(e)?;
        let meter = VisitMeter::start(&self.tree);
        let (sums, _) = self.tree.range_query_prepared(&ev)?;
        self.last_visits = meter.read(&self.tree);
        let sol = self.solution()?;
        // Σ_{x∈e} (4/(9b²)) (w_x − λ)².
        let centred = alpha_action(-(sol.multiplier), &sums);
        Ok(4.0 / (9.0 * self.b * self.b) * centred[2])
    }

    fn cost(&mut self, e: &Event, s: f64) -> Result<f64> {
        self.trade(e, s, false)
    }

    fn buy(&mut self, e: &Event, s: f64) -> Result<f64> {
        self.trade(e, s, true)
    }

    fn last_visits(&self) -> usize {
        self.last_visits
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn line(n: usize) -> (SetSystem, Topology) {
        let sys = SetSystem::interval(n).unwrap();
        let topo = Topology::segment(&sys).unwrap();
        (sys, topo)
    }

    fn lmsr(n: usize, b: f64) -> LmsrMarket {
        let (s, t) = line(n);
        LmsrMarket::new(s, t, b, None).unwrap()
    }

    fn x(i: usize) -> Event {
        Event::explicit([i])
    }

    #[test]
    fn lmsr_price_examples() {
        let mut m = lmsr(4, 1.0);
        assert_relative_eq!(m.price(&Event::interval(0.0, 1.0)).unwrap(), 0.5, max_relative = 1e-15);
        m.buy(&x(0), 1.0).unwrap();
        let e = std::f64::consts::E;
        assert_relative_eq!(m.price(&x(0)).unwrap(), e / (e + 3.0), max_relative = 1e-14);
        assert_eq!(m.price(&Event::interval(10.0, 20.0)).unwrap(), 0.0);
        assert_eq!(m.price(&Event::explicit([])).unwrap(), 0.0);
    }

    #[test]
    fn lmsr_cost_examples() {
        let mut m = lmsr(4, 1.0);
        let all = Event::interval(0.0, 3.0);
        assert_relative_eq!(m.cost(&all, 2.5).unwrap(), 2.5, max_relative = 1e-14);
        assert_relative_eq!(m.cost(&all, -40.0).unwrap(), -40.0, max_relative = 1e-14);
        let e = std::f64::consts::E;
        assert_relative_eq!(m.cost(&x(0), 1.0).unwrap(), (0.25 * e + 0.75).ln(), max_relative = 1e-14);
        assert_relative_eq!(m.cost(&x(0), 1.0).unwrap(), 0.357374, epsilon = 1e-6);
        assert_eq!(m.cost(&x(0), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn lmsr_buy_examples() {
        let mut m = lmsr(4, 1.0);
        let before: Vec<f64> = (0..4).map(|i| m.price(&x(i)).unwrap()).collect();
        assert_relative_eq!(m.buy(&Event::interval(0.0, 3.0), 3.0).unwrap(), 3.0, max_relative = 1e-14);
        for (i, p) in before.iter().enumerate() {
            assert_relative_eq!(m.price(&x(i)).unwrap(), *p, max_relative = 1e-12);
        }

        let mut m = lmsr(4, 1.0);
        m.buy(&Event::explicit([0, 1]), 0.5).unwrap();
        let h = 0.5f64.exp();
        assert_relative_eq!(m.price(&x(0)).unwrap(), h / (2.0 * h + 2.0), max_relative = 1e-14);
        assert_relative_eq!(m.price(&x(0)).unwrap(), 0.31123, epsilon = 1e-5);
        m.buy(&Event::explicit([0, 1]), -0.5).unwrap();
        assert_relative_eq!(m.price(&x(0)).unwrap(), 0.25, max_relative = 1e-12);
    }

    #[test]
    fn lmsr_extreme_states_stay_finite() {
        let mut m = lmsr(8, 1.0);
        m.buy(&x(3), 5000.0).unwrap();
        assert_relative_eq!(m.price(&x(3)).unwrap(), 1.0, max_relative = 1e-12);
        let c = m.cost(&x(3), -10.0).unwrap();
        assert_relative_eq!(c, -10.0, max_relative = 1e-9);
        assert!(m.cost(&x(2), 1e4).unwrap().is_finite());
    }

    #[test]
    fn qmsr_examples() {
        let (s, t) = line(4);
        let mut m = QmsrMarket::new(s, t, 1.0, None).unwrap();
        assert_relative_eq!(m.price(&Event::explicit([1, 2, 3])).unwrap(), 0.75);
        assert_relative_eq!(m.cost(&x(0), 1.0).unwrap(), 0.4375);
        assert_eq!(m.cost(&x(0), 0.0).unwrap(), 0.0);
        m.buy(&x(0), 1.0).unwrap();
        assert_relative_eq!(m.price(&x(0)).unwrap(), 0.625);
        assert_relative_eq!(m.price(&Event::interval(0.0, 3.0)).unwrap(), 1.0);
        assert_relative_eq!(m.cost(&Event::interval(0.0, 3.0), 1.7).unwrap(), 1.7, max_relative = 1e-14);

        let (s, t) = line(4);
        let mut m = QmsrMarket::new(s, t, 1.0, None).unwrap();
        assert_eq!(m.buy(&Event::interval(9.0, 10.0), 2.0).unwrap(), 0.0);
        m.buy(&Event::explicit([0, 1]), 2.0).unwrap();
        assert_eq!(m.total_weight(), 4.0);
        m.buy(&Event::explicit([0, 1]), -2.0).unwrap();
        assert_eq!(m.weights().unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn power_zero_state() {
        let (s, t) = line(4);
        let mut m = PowerMarket::new(s, t, 1.0, None).unwrap();
        let sol = m.solution().unwrap();
        assert_relative_eq!(sol.mu, 3.0, max_relative = 1e-15);
        assert_relative_eq!(sol.cost, -0.5, max_relative = 1e-14);
        assert_relative_eq!(m.price(&x(0)).unwrap(), 0.25, max_relative = 1e-14);
        assert_relative_eq!(m.price(&Event::explicit([0, 2, 3])).unwrap(), 0.75, max_relative = 1e-14);
        for (n, b) in [(9usize, 2.0f64), (64, 0.5)] {
            let (s, t) = line(n);
            let m = PowerMarket::new(s, t, b, None).unwrap();
            assert!((m.solution().unwrap().cost + b / (n as f64).sqrt()).abs() <= 1e-12);
        }
    }

    #[test]
    fn power_buy_reverts_on_boundary() {
        let (s, t) = line(4);
        let mut m = PowerMarket::new(s, t, 1.0, None).unwrap();
        let before = m.moments();
        let err = m.buy(&x(0), 5.0).unwrap_err();
        assert!(matches!(err, Error::BoundaryKkt { .. } | Error::NegativeDiscriminant(_)));
        let after = m.moments();
        for i in 0..4 {
            assert!((before[i] - after[i]).abs() < 1e-12);
        }
        let paid = m.buy(&x(0), 0.3).unwrap();
        assert!(paid > 0.0 && paid < 0.3);
    }

    #[test]
    fn power_initial_state_must_be_interior() {
        let (s, t) = line(4);
        assert!(PowerMarket::new(s, t, 1.0, Some(&[10.0, 0.0, 0.0, 0.0])).is_err());
        let (s, t) = line(4);
        let m = PowerMarket::new(s, t, 1.0, Some(&[100.1, 100.0, 100.0, 100.0])).unwrap();
        assert!((m.pivot() - 100.025).abs() < 1e-12);
        assert!(m.solution().unwrap().cost > 99.0);
    }

    #[test]
    fn power_cost_delta_matches_cost_difference() {
        let (s, t) = line(8);
        let w = [0.1, 0.3, 0.2, 0.25, 0.0, 0.15, 0.3, 0.05];
        let mut m = PowerMarket::new(s, t, 2.0, Some(&w)).unwrap();
        let e = Event::interval(2.0, 5.0);
        let before = m.solution().unwrap().cost;
        let paid = m.buy(&e, 0.2).unwrap();
        let after = m.solution().unwrap().cost;
        assert_relative_eq!(paid, after - before, max_relative = 1e-12);
        assert_relative_eq!(m.cost(&e, -0.2).unwrap(), before - after, max_relative = 1e-12);
    }
}
