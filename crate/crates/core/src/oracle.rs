//! Dense brute-force references.
//!
//! Nothing here touches the tree engine or the set-system classifier: events
//! are resolved by a separate membership loop and every market quantity is
//! evaluated from its defining formula over all outcomes. Performance is not
//! a goal; everything is O(n) or worse per call.

use crate::algebra::WeightAlgebra;
use crate::multires::MultiResRule;
use crate::set_system::SystemKind;
use crate::{Event, SetSystem};

/// A share vector over the outcomes of a set system.
#[derive(Clone, Debug)]
pub struct DenseState {
    pub system: SetSystem,
    pub weights: Vec<f64>,
}

impl DenseState {
    pub fn new(system: SetSystem, weights: Vec<f64>) -> DenseState {
        assert_eq!(weights.len(), system.n(), "dense state length must equal n");
        DenseState { system, weights }
    }

    pub fn zeros(system: SetSystem) -> DenseState {
        let n = system.n();
        DenseState { system, weights: vec![0.0; n] }
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    /// Adds `s` to every member of `e`.
    pub fn buy(&mut self, e: &Event, s: f64) {
        for x in naive_members(&self.system, e) {
            self.weights[x] += s;
        }
    }
}

fn position(sys: &SetSystem, x: usize, axis: usize) -> f64 {
    match sys.kind() {
        SystemKind::Interval => x as f64,
        SystemKind::Grid { side, dim } => {
            let mut rest = x;
            for _ in 0..(dim - 1 - axis) {
                rest /= side;
            }
            (rest % side) as f64
        }
        SystemKind::PointCloud { dim, coords } => coords[x * dim + axis],
        SystemKind::Explicit { .. } => f64::NAN,
    }
}

/// Whether outcome `x` satisfies `e`, decided from coordinates alone.
pub fn naive_member(sys: &SetSystem, e: &Event, x: usize) -> bool {
    match e {
        Event::Interval { lo, hi } => {
            let c = position(sys, x, 0);
            c >= *lo && c <= *hi
        }
        Event::Box { lo, hi } => lo.iter().zip(hi).enumerate().all(|(a, (l, h))| {
            let c = position(sys, x, a);
            c >= *l && c <= *h
        }),
        Event::Halfspace { beta, beta0 } => {
            let mut acc = *beta0;
            for (a, coef) in beta.iter().enumerate() {
                acc += coef * position(sys, x, a);
            }
            acc >= 0.0
        }
        Event::Explicit(m) => m.contains(&x),
    }
}

pub fn naive_members(sys: &SetSystem, e: &Event) -> Vec<usize> {
    (0..sys.n()).filter(|&x| naive_member(sys, e, x)).collect()
}

/// Folds `⊕` over the members of `e`; the empty event gives the zero.
pub fn naive_query<A: WeightAlgebra>(alg: &A, sys: &SetSystem, values: &[A::Value], e: &Event) -> A::Value {
    let mut acc = alg.zero();
    for (x, z) in values.iter().enumerate() {
        if naive_member(sys, e, x) {
            acc = alg.combine(&acc, z);
        }
    }
    acc
}

/// Applies `s` to every member of `e`.
pub fn naive_update<A: WeightAlgebra>(alg: &A, sys: &SetSystem, values: &mut [A::Value], e: &Event, s: &A::Update) {
    for (x, z) in values.iter_mut().enumerate() {
        if naive_member(sys, e, x) {
            *z = alg.apply(s, z);
        }
    }
}

fn stable_lse(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let top = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + xs.map(|x| (x - top).exp()).sum::<f64>().ln()
}

// --- LMSR -------------------------------------------------------------------

pub fn naive_lmsr_cost_value(ds: &DenseState, b: f64) -> f64 {
    b * stable_lse(ds.weights.iter().map(|w| w / b))
}

pub fn naive_lmsr_price(ds: &DenseState, e: &Event, b: f64) -> f64 {
    let top = ds.weights.iter().fold(f64::NEG_INFINITY, |m, &w| m.max(w / b));
    let mut inside = 0.0;
    let mut total = 0.0;
    for (x, w) in ds.weights.iter().enumerate() {
        let t = (w / b - top).exp();
        total += t;
        if naive_member(&ds.system, e, x) {
            inside += t;
        }
    }
    inside / total
}

/// `C(w + s·1_e) − C(w)` from the two normalizers, sharing one shift.
pub fn naive_lmsr_cost(ds: &DenseState, e: &Event, s: f64, b: f64) -> f64 {
    let top = ds.weights.iter().fold(f64::NEG_INFINITY, |m, &w| m.max(w / b)) + (s / b).max(0.0);
    let mut before = 0.0;
    let mut after = 0.0;
    for (x, w) in ds.weights.iter().enumerate() {
        before += (w / b - top).exp();
        let moved = if naive_member(&ds.system, e, x) { w + s } else { *w };
        after += (moved / b - top).exp();
    }
    b * (after.ln() - before.ln())
}

// --- QMSR -------------------------------------------------------------------

/// `Σw/n + Σw²/(4b) − (Σw)²/(4bn) − b/n`.
pub fn naive_qmsr_cost_value(ds: &DenseState, b: f64) -> f64 {
    let n = ds.n() as f64;
    let s1: f64 = ds.weights.iter().sum();
    let s2: f64 = ds.weights.iter().map(|w| w * w).sum();
    s1 / n + s2 / (4.0 * b) - s1 * s1 / (4.0 * b * n) - b / n
}

pub fn naive_qmsr_price(ds: &DenseState, e: &Event, b: f64) -> f64 {
    let n = ds.n() as f64;
    let mean = ds.weights.iter().sum::<f64>() / n;
    (0..ds.n()).filter(|&x| naive_member(&ds.system, e, x)).map(|x| 1.0 / n + (ds.weights[x] - mean) / (2.0 * b)).sum()
}

/// The cost is quadratic along the trade path, so the price at the midpoint
/// times `s` is exact and avoids differencing two cost values.
pub fn naive_qmsr_cost(ds: &DenseState, e: &Event, s: f64, b: f64) -> f64 {
    let mut midway = ds.clone();
    midway.buy(e, 0.5 * s);
    s * naive_qmsr_price(&midway, e, b)
}

// --- 3/2-power --------------------------------------------------------------

/// Maximizer of `Σ w_x p_x − b Σ p_x^{3/2}` over the simplex.
///
/// Stationarity gives `p_x = max(0, 2(w_x − λ)/(3b))²`; `λ` is found by
/// bisection on `Σ p_x = 1`, so boundary-active coordinates are handled.
pub fn power_maximizer(ds: &DenseState, b: f64) -> Vec<f64> {
    let top = ds.weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mass = |lambda: f64| -> f64 {
        ds.weights.iter().map(|w| (2.0 * (w - lambda) / (3.0 * b)).max(0.0).powi(2)).sum()
    };
    // At top the mass is 0; at top − 1.5b the largest coordinate alone is 1.
    let (mut lo, mut hi) = (top - 1.5 * b, top);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let p: Vec<f64> = ds.weights.iter().map(|w| (2.0 * (w - lambda) / (3.0 * b)).max(0.0).powi(2)).collect();
    let total: f64 = p.iter().sum();
    p.into_iter().map(|q| q / total).collect()
}

pub fn numeric_power_cost(ds: &DenseState, b: f64) -> f64 {
    let p = power_maximizer(ds, b);
    ds.weights.iter().zip(&p).map(|(w, q)| w * q - b * q.powf(1.5)).sum()
}

/// Gradient of the power cost restricted to `e` (envelope theorem).
pub fn numeric_power_price(ds: &DenseState, e: &Event, b: f64) -> f64 {
    let p = power_maximizer(ds, b);
    (0..ds.n()).filter(|&x| naive_member(&ds.system, e, x)).map(|x| p[x]).sum()
}

/// `C(w + s·1_e) − C(w)` as the integral of the numeric price along the
/// trade path. Differencing two cost values would cancel for small trades.
pub fn numeric_power_cost_delta(ds: &DenseState, e: &Event, s: f64, b: f64) -> f64 {
    let members = naive_members(&ds.system, e);
    let price_at = |t: f64| {
        let mut moved = ds.clone();
        for &x in &members {
            moved.weights[x] += t;
        }
        let p = power_maximizer(&moved, b);
        members.iter().map(|&x| p[x]).sum::<f64>()
    };
    adaptive_legendre(&price_at, 0.0, s, 0)
}

// 8-point Gauss–Legendre abscissae and weights on [−1, 1] (positive half).
const LEGENDRE_NODES: [f64; 4] =
    [0.183_434_642_495_649_8, 0.525_532_409_916_329_0, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const LEGENDRE_WEIGHTS: [f64; 4] =
    [0.362_683_783_378_362_0, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

fn legendre(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let sum: f64 = LEGENDRE_NODES
        .iter()
        .zip(&LEGENDRE_WEIGHTS)
        .map(|(x, w)| w * (f(mid - half * x) + f(mid + half * x)))
        .sum();
    half * sum
}

fn adaptive_legendre(f: &impl Fn(f64) -> f64, a: f64, b: f64, depth: usize) -> f64 {
    let whole = legendre(f, a, b);
    let mid = 0.5 * (a + b);
    let split = legendre(f, a, mid) + legendre(f, mid, b);
    if depth >= 20 || (split - whole).abs() <= 1e-14 * split.abs().max(f64::MIN_POSITIVE) {
        split
    } else {
        adaptive_legendre(f, a, mid, depth + 1) + adaptive_legendre(f, mid, b, depth + 1)
    }
}

// --- trading functions ------------------------------------------------------

/// `−Σ e^{−w_x/b}`.
pub fn naive_phi_log(reserves: &[f64], b: f64) -> f64 {
    -reserves.iter().map(|w| (-w / b).exp()).sum::<f64>()
}

/// `Σ c_x w_x`.
pub fn naive_phi_linear(reserves: &[f64], weights: &[f64]) -> f64 {
    reserves.iter().zip(weights).map(|(w, c)| w * c).sum()
}

/// `Π w_x^{γ_x}`; zero as soon as any reserve is zero.
pub fn naive_phi_geometric(reserves: &[f64], exponents: &[f64]) -> f64 {
    if reserves.iter().any(|&w| w == 0.0) {
        return 0.0;
    }
    reserves.iter().zip(exponents).map(|(w, g)| w.powf(*g)).product()
}

fn basket_sum(sys: &SetSystem, e: &Event, f: impl Fn(usize) -> f64) -> f64 {
    (0..sys.n()).filter(|&x| naive_member(sys, e, x)).map(f).sum()
}

/// Log trading function: amount of `e_minus` released for `s_plus` of
/// `e_plus`, solved in closed form.
pub fn naive_swap_forward_log(sys: &SetSystem, reserves: &[f64], b: f64, e_minus: &Event, e_plus: &Event, s_plus: f64) -> f64 {
    let plus = basket_sum(sys, e_plus, |x| (-reserves[x] / b).exp());
    let minus = basket_sum(sys, e_minus, |x| (-reserves[x] / b).exp());
    b * (plus * -(-s_plus / b).exp_m1() / minus).ln_1p()
}

/// Log trading function: amount of `e_plus` required to release `s_minus`
/// of `e_minus`; `None` when no finite amount suffices.
pub fn naive_swap_backward_log(sys: &SetSystem, reserves: &[f64], b: f64, e_minus: &Event, e_plus: &Event, s_minus: f64) -> Option<f64> {
    let plus = basket_sum(sys, e_plus, |x| (-reserves[x] / b).exp());
    let minus = basket_sum(sys, e_minus, |x| (-reserves[x] / b).exp());
    let ratio = minus * (s_minus / b).exp_m1() / plus;
    (ratio < 1.0).then(|| -b * (-ratio).ln_1p())
}

pub fn naive_swap_forward_linear(sys: &SetSystem, weights: &[f64], e_minus: &Event, e_plus: &Event, s_plus: f64) -> f64 {
    s_plus * basket_sum(sys, e_plus, |x| weights[x]) / basket_sum(sys, e_minus, |x| weights[x])
}

pub fn naive_swap_backward_linear(sys: &SetSystem, weights: &[f64], e_minus: &Event, e_plus: &Event, s_minus: f64) -> f64 {
    s_minus * basket_sum(sys, e_minus, |x| weights[x]) / basket_sum(sys, e_plus, |x| weights[x])
}

// --- multi-resolution -------------------------------------------------------

/// Nested partitions with one liquidity per level, indexed `[level][cell]`.
#[derive(Clone, Debug)]
pub struct DenseHierarchy {
    pub n: usize,
    pub levels: Vec<Vec<Vec<usize>>>,
    pub liquidity: Vec<f64>,
    /// `parent[k][c]`: level-(k−1) cell holding level-k cell `c`.
    parent: Vec<Vec<usize>>,
}

/// Per-level, per-cell numbers.
pub type CellTable = Vec<Vec<f64>>;

impl DenseHierarchy {
    pub fn new(n: usize, levels: Vec<Vec<Vec<usize>>>, liquidity: Vec<f64>) -> DenseHierarchy {
        assert_eq!(levels.len(), liquidity.len(), "one liquidity per level");
        let mut parent = vec![Vec::new()];
        for k in 1..levels.len() {
            let row = levels[k]
                .iter()
                .map(|cell| {
                    levels[k - 1].iter().position(|up| cell.iter().all(|x| up.contains(x))).expect("levels must nest")
                })
                .collect();
            parent.push(row);
        }
        DenseHierarchy { n, levels, liquidity, parent }
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn zeros(&self) -> CellTable {
        self.levels.iter().map(|l| vec![0.0; l.len()]).collect()
    }

    /// `Σ_{j>k} b_j`.
    pub fn finer_liquidity(&self, k: usize) -> f64 {
        self.liquidity[k + 1..].iter().sum()
    }

    /// Level-`j` ancestor of level-`k` cell `c`, for `j ≤ k`.
    pub fn ancestor(&self, k: usize, c: usize, j: usize) -> usize {
        let mut cell = c;
        for level in (j + 1..=k).rev() {
            cell = self.parent[level][cell];
        }
        cell
    }

    pub fn children(&self, k: usize, c: usize) -> Vec<usize> {
        if k >= self.depth() {
            return Vec::new();
        }
        (0..self.levels[k + 1].len()).filter(|&d| self.parent[k + 1][d] == c).collect()
    }

    /// Maximal cells inside `members`, coarsest first; `None` if some member
    /// is only covered by a finest cell that sticks out.
    pub fn decompose(&self, members: &[usize]) -> Option<Vec<(usize, usize)>> {
        let mut covered = vec![false; self.n];
        let inside: Vec<bool> = (0..self.n).map(|x| members.contains(&x)).collect();
        let mut out = Vec::new();
        for (k, cells) in self.levels.iter().enumerate() {
            for (c, cell) in cells.iter().enumerate() {
                if !covered[cell[0]] && cell.iter().all(|&x| inside[x]) {
                    out.push((k, c));
                    for &x in cell {
                        covered[x] = true;
                    }
                }
            }
        }
        (0..self.n).all(|x| covered[x] == inside[x]).then_some(out)
    }

    /// `w̃ = w + Aη` with `A` the constraint matrix: `B_k` on the cell
    /// itself, `−b_k` for each strict ancestor's `η`.
    pub fn effective_state(&self, trade: &CellTable, arb: &CellTable) -> CellTable {
        let mut out = trade.clone();
        for k in 0..self.levels.len() {
            let own = self.finer_liquidity(k);
            for c in 0..self.levels[k].len() {
                let above: f64 = (0..k).map(|j| arb[j][self.ancestor(k, c, j)]).sum();
                out[k][c] += own * arb[k][c] - self.liquidity[k] * above;
            }
        }
        out
    }

    /// Each submarket's own prices.
    pub fn level_prices(&self, rule: MultiResRule, effective: &CellTable) -> CellTable {
        let n = self.n as f64;
        (0..self.levels.len())
            .map(|k| {
                let b = self.liquidity[k];
                let row = &effective[k];
                match rule {
                    MultiResRule::Lmsr => {
                        let z = stable_lse(row.iter().map(|w| w / b));
                        row.iter().map(|w| (w / b - z).exp()).collect()
                    }
                    MultiResRule::Qmsr => {
                        let sizes: Vec<f64> = self.levels[k].iter().map(|c| c.len() as f64).collect();
                        let mean = row.iter().zip(&sizes).map(|(w, m)| w * m).sum::<f64>() / n;
                        row.iter().zip(&sizes).map(|(w, m)| m / n + m * (w - mean) / (2.0 * b)).collect()
                    }
                }
            })
            .collect()
    }

    /// `Σ_k C_k(w̃_k)`. LMSR levels price cells; QMSR levels price the
    /// outcome vector that is constant on each cell.
    pub fn direct_sum_cost(&self, rule: MultiResRule, effective: &CellTable) -> f64 {
        let n = self.n as f64;
        (0..self.levels.len())
            .map(|k| {
                let b = self.liquidity[k];
                let row = &effective[k];
                match rule {
                    MultiResRule::Lmsr => b * stable_lse(row.iter().map(|w| w / b)),
                    MultiResRule::Qmsr => {
                        let mut s1 = 0.0;
                        let mut s2 = 0.0;
                        for (w, cell) in row.iter().zip(&self.levels[k]) {
                            let m = cell.len() as f64;
                            s1 += m * w;
                            s2 += m * w * w;
                        }
                        s1 / n + s2 / (4.0 * b) - s1 * s1 / (4.0 * b * n) - b / n
                    }
                }
            })
            .sum()
    }

    /// Largest `|p_k(u) − Σ_{children} p_{k+1}(v)|` over internal cells.
    pub fn coherence_gap(&self, rule: MultiResRule, trade: &CellTable, arb: &CellTable) -> f64 {
        let p = self.level_prices(rule, &self.effective_state(trade, arb));
        let mut worst: f64 = 0.0;
        for k in 0..self.depth() {
            let mut below = vec![0.0; self.levels[k].len()];
            for (d, q) in p[k + 1].iter().enumerate() {
                below[self.parent[k + 1][d]] += q;
            }
            for (c, q) in p[k].iter().enumerate() {
                worst = worst.max((q - below[c]).abs());
            }
        }
        worst
    }

    /// Finest-level price of a union of cells.
    pub fn finest_price(&self, rule: MultiResRule, trade: &CellTable, arb: &CellTable, members: &[usize]) -> f64 {
        let p = self.level_prices(rule, &self.effective_state(trade, arb));
        let k = self.depth();
        self.levels[k].iter().zip(&p[k]).filter(|(cell, _)| cell.iter().all(|x| members.contains(x))).map(|(_, q)| q).sum()
    }

    /// Cells whose arbitrage weight is a live direction of the objective.
    fn free_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for k in 0..self.depth() {
            for (c, cell) in self.levels[k].iter().enumerate() {
                if cell.len() < self.n {
                    out.push((k, c));
                }
            }
        }
        out
    }

    /// Derivative of the direct-sum cost along the bundle of cell `(k, c)`.
    fn bundle_slope(&self, rule: MultiResRule, trade: &CellTable, arb: &CellTable, k: usize, c: usize) -> f64 {
        let p = self.level_prices(rule, &self.effective_state(trade, arb));
        let mut g = self.finer_liquidity(k) * p[k][c];
        for j in k + 1..self.levels.len() {
            let inside: f64 = (0..self.levels[j].len()).filter(|&d| self.ancestor(j, d, k) == c).map(|d| p[j][d]).sum();
            g -= self.liquidity[j] * inside;
        }
        g
    }

    /// `inf_η Σ_k C_k(w + Aη)` by exact coordinate minimization, stopping
    /// when the gradient norm drops to `tol`. Returns the value and the
    /// minimizing `η`.
    pub fn numeric_lcmm_cost(&self, rule: MultiResRule, trade: &CellTable, tol: f64) -> (f64, CellTable) {
        let mut arb = self.zeros();
        let cells = self.free_cells();
        for _sweep in 0..200_000 {
            let mut norm2 = 0.0;
            for &(k, c) in &cells {
                let g = self.bundle_slope(rule, trade, &arb, k, c);
                norm2 += g * g;
            }
            if norm2.sqrt() <= tol {
                break;
            }
            for &(k, c) in &cells {
                let slope = |t: f64, arb: &mut CellTable| {
                    let keep = arb[k][c];
                    arb[k][c] = keep + t;
                    let g = self.bundle_slope(rule, trade, arb, k, c);
                    arb[k][c] = keep;
                    g
                };
                let g0 = slope(0.0, &mut arb);
                if g0 == 0.0 {
                    continue;
                }
                // Slope increases in t (convexity): bracket the root, then bisect.
                let dir = if g0 > 0.0 { -1.0 } else { 1.0 };
                let mut step = 1.0;
                while slope(dir * step, &mut arb) * g0 > 0.0 {
                    step *= 2.0;
                    if step > 1e12 {
                        break;
                    }
                }
                let (mut lo, mut hi) = if dir < 0.0 { (-step, 0.0) } else { (0.0, step) };
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if slope(mid, &mut arb) > 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                arb[k][c] += 0.5 * (lo + hi);
            }
        }
        let value = self.direct_sum_cost(rule, &self.effective_state(trade, &arb));
        (value, arb)
    }
}
