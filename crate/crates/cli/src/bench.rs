//! Visit-count scaling benchmark: single tree passes on an LMSR-style
//! log-sum-exp tree.

use std::time::Instant;

use clap::ValueEnum;
use cpm_core::algebra::LogSumAdd;
use cpm_core::partition_tree::{HierarchySpec, PartitionTree, Topology};
use cpm_core::{Event, SetSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Below this many operations the quantiles are not meaningful.
pub const MIN_OPS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BenchKind {
    Interval,
    Grid,
    Hierarchy,
}

#[derive(Debug, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub median_visits: f64,
    pub p99_visits: usize,
    pub ns_per_op: f64,
}

/// Contiguous blocks shrinking by a factor of 8 while that divides evenly.
fn octree_blocks(n: usize) -> HierarchySpec {
    let mut sizes = Vec::new();
    let mut size = n;
    while size % 8 == 0 && size / 8 > 1 {
        size /= 8;
        sizes.push(size);
    }
    HierarchySpec::blocks(n, &sizes, None)
}

fn grid_side(n: usize) -> CliResult<usize> {
    let side = (n as f64).sqrt().round() as usize;
    if side * side == n {
        Ok(side)
    } else {
        Err(CliError::Usage(format!("grid benchmarks need square n, got {n}")))
    }
}

struct Workload {
    tree: PartitionTree<LogSumAdd>,
    side: Option<usize>,
}

fn workload(kind: BenchKind, n: usize) -> CliResult<Workload> {
    let (sys, top, side) = match kind {
        BenchKind::Interval => {
            let sys = SetSystem::interval(n)?;
            let top = Topology::segment(&sys)?;
            (sys, top, None)
        }
        BenchKind::Grid => {
            let side = grid_side(n)?;
            let sys = SetSystem::grid(side, 2)?;
            let top = Topology::kd(&sys)?;
            (sys, top, Some(side))
        }
        BenchKind::Hierarchy => {
            let sys = SetSystem::interval(n)?;
            let top = Topology::hierarchy(&sys, &octree_blocks(n).partitions(), true)?;
            (sys, top, None)
        }
    };
    Ok(Workload { tree: PartitionTree::uniform(LogSumAdd, sys, top, 0.0), side })
}

fn random_event(rng: &mut ChaCha8Rng, n: usize, side: Option<usize>) -> Event {
    let mut span = |len: usize| {
        let (a, b) = (rng.gen_range(0..len), rng.gen_range(0..len));
        (a.min(b) as f64, a.max(b) as f64)
    };
    match side {
        None => {
            let (lo, hi) = span(n);
            Event::interval(lo, hi)
        }
        Some(side) => {
            let (x0, x1) = span(side);
            let (y0, y1) = span(side);
            Event::Box { lo: vec![x0, y0], hi: vec![x1, y1] }
        }
    }
}

/// Alternates range queries and range updates on random events. Visit
/// columns depend only on `seed`; `ns_per_op` is wall-clock.
pub fn run(kind: BenchKind, sizes: &[usize], ops: usize, seed: u64) -> CliResult<Vec<BenchRow>> {
    if ops < MIN_OPS {
        return Err(CliError::Usage(format!("--ops must be at least {MIN_OPS}, got {ops}")));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let mut w = workload(kind, n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n as u64);
        let events: Vec<(Event, f64)> =
            (0..ops).map(|_| (random_event(&mut rng, n, w.side), rng.gen_range(-0.5..0.5))).collect();
        let mut visits = Vec::with_capacity(ops);
        let start = Instant::now();
        for (i, (e, s)) in events.iter().enumerate() {
            if i % 2 == 0 {
                std::hint::black_box(w.tree.range_query(e)?);
            } else {
                w.tree.range_update(e, s)?;
            }
            visits.push(w.tree.visit_count().last);
        }
        let elapsed = start.elapsed();
        visits.sort_unstable();
        let mid = visits.len() / 2;
        let median_visits =
            if visits.len() % 2 == 1 { visits[mid] as f64 } else { 0.5 * (visits[mid - 1] + visits[mid]) as f64 };
        let p99_visits = visits[(visits.len() * 99).div_ceil(100) - 1];
        rows.push(BenchRow { n, median_visits, p99_visits, ns_per_op: elapsed.as_nanos() as f64 / ops as f64 });
    }
    Ok(rows)
}
