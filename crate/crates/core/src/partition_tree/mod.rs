//! Lazy-propagation range update and range query over a partition tree.

mod topology;

pub use topology::{CellSpec, HierarchySpec, LevelSpec, PreparedEvent, Topology, TreeShape};

use crate::algebra::{FlatCodec, WeightAlgebra};
use crate::{Error, Event, Relation, Result, SetSystem};

/// Visit instrumentation. A visit is one recursive entry into a node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct VisitStats {
    pub last: usize,
    pub max: usize,
    /// Running total across every operation.
    pub total: u64,
}

impl VisitStats {
    fn record(&mut self, visits: usize) {
        self.last = visits;
        self.max = self.max.max(visits);
        self.total += visits as u64;
    }
}

#[derive(Clone, Debug)]
pub struct PartitionTree<A: WeightAlgebra> {
    algebra: A,
    system: SetSystem,
    topology: Topology,
    val: Vec<A::Value>,
    pend: Vec<A::Update>,
    stats: VisitStats,
}

/// Raw node contents, used by snapshots.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeParts {
    pub topology: Topology,
    pub values: Vec<f64>,
    pub pends: Vec<f64>,
}

impl<A: WeightAlgebra> PartitionTree<A> {
    /// Tree with leaf weights `init(x)` per outcome.
    pub fn new(algebra: A, system: SetSystem, topology: Topology, init: impl Fn(usize) -> A::Value) -> Self {
        let len = topology.len();
        let mut val = vec![algebra.zero(); len];
        for v in (0..len).rev() {
            val[v] = if topology.is_leaf(v) {
                topology.members(v).fold(algebra.zero(), |acc, x| algebra.combine(&acc, &init(x)))
            } else {
                topology.children(v).iter().fold(algebra.zero(), |acc, &c| algebra.combine(&acc, &val[c as usize]))
            };
        }
        Self::assemble(algebra, system, topology, val)
    }

    /// Tree with every leaf weight equal to `leaf`; skips per-outcome initialization.
    pub fn uniform(algebra: A, system: SetSystem, topology: Topology, leaf: A::Value) -> Self {
        let val = (0..topology.len()).map(|v| algebra.replicate(&leaf, topology.size(v))).collect();
        Self::assemble(algebra, system, topology, val)
    }

    fn assemble(algebra: A, system: SetSystem, topology: Topology, val: Vec<A::Value>) -> Self {
        let pend = vec![algebra.identity(); topology.len()];
        PartitionTree { algebra, system, topology, val, pend, stats: VisitStats::default() }
    }

    pub fn build_segment(algebra: A, system: SetSystem, init: impl Fn(usize) -> A::Value) -> Result<Self> {
        let topology = Topology::segment(&system)?;
        Ok(Self::new(algebra, system, topology, init))
    }

    pub fn build_kd(algebra: A, system: SetSystem, init: impl Fn(usize) -> A::Value) -> Result<Self> {
        let topology = Topology::kd(&system)?;
        Ok(Self::new(algebra, system, topology, init))
    }

    /// Hierarchy tree with single-child chains collapsed.
    pub fn build_from_hierarchy(
        algebra: A,
        system: SetSystem,
        partitions: &[Vec<Vec<usize>>],
        init: impl Fn(usize) -> A::Value,
    ) -> Result<Self> {
        let topology = Topology::hierarchy(&system, partitions, true)?;
        Ok(Self::new(algebra, system, topology, init))
    }

    pub fn algebra(&self) -> &A {
        &self.algebra
    }

    pub fn system(&self) -> &SetSystem {
        &self.system
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn visit_count(&self) -> VisitStats {
        self.stats
    }

    pub fn prepare(&self, e: &Event) -> Result<PreparedEvent> {
        self.topology.prepare(&self.system, e)
    }

    /// Aggregate over all outcomes. The root never holds a pending update.
    pub fn root_value(&self) -> A::Value {
        self.val[self.topology.root()]
    }

    pub fn range_update(&mut self, e: &Event, s: &A::Update) -> Result<()> {
        let ev = self.prepare(e)?;
        self.range_update_prepared(&ev, s)
    }

    pub fn range_query(&mut self, e: &Event) -> Result<A::Value> {
        let ev = self.prepare(e)?;
        self.range_query_prepared(&ev)
    }

    pub fn range_update_prepared(&mut self, ev: &PreparedEvent, s: &A::Update) -> Result<()> {
        self.algebra.check_update(s)?;
        if self.topology.has_coarse_leaves() {
            // Reject a split leaf cell before anything is mutated.
            self.topology.decompose(&self.system, ev)?;
        }
        let mut pass = Pass {
            alg: &self.algebra,
            sys: &self.system,
            topo: &self.topology,
            val: &mut self.val,
            pend: &mut self.pend,
            ev,
            visits: 0,
        };
        let root = pass.topo.root();
        let out = pass.update(root, s);
        let visits = pass.visits;
        self.stats.record(visits);
        out
    }

    pub fn range_query_prepared(&mut self, ev: &PreparedEvent) -> Result<A::Value> {
        let mut pass = Pass {
            alg: &self.algebra,
            sys: &self.system,
            topo: &self.topology,
            val: &mut self.val,
            pend: &mut self.pend,
            ev,
            visits: 0,
        };
        let root = pass.topo.root();
        let out = pass.query(root);
        let visits = pass.visits;
        self.stats.record(visits);
        out
    }

    /// Nodes in the Contains-decomposition of `e`; does not touch values.
    pub fn decompose(&self, e: &Event) -> Result<Vec<usize>> {
        let ev = self.prepare(e)?;
        Ok(self.topology.decompose(&self.system, &ev)?.0)
    }

    /// True aggregate of node `v`: its value with every pending update on the
    /// root path applied, innermost first.
    pub fn true_value(&self, v: usize) -> A::Value {
        let mut z = self.val[v];
        let mut u = Some(v);
        while let Some(node) = u {
            z = self.algebra.apply(&self.pend[node], &z);
            u = self.topology.parent(node);
        }
        z
    }

    pub fn pending(&self, v: usize) -> &A::Update {
        &self.pend[v]
    }

    /// True weight of every outcome. Requires singleton leaves.
    pub fn outcome_values(&self) -> Result<Vec<A::Value>> {
        if self.topology.has_coarse_leaves() {
            return Err(Error::UnsupportedSystem("per-outcome values of a tree with coarse leaves".into()));
        }
        let mut out = vec![self.algebra.zero(); self.topology.n()];
        // Push pending updates down in preorder without mutating the tree.
        let mut acc = vec![self.algebra.identity(); self.topology.len()];
        for v in 0..self.topology.len() {
            let above = match self.topology.parent(v) {
                Some(p) => acc[p],
                None => self.algebra.identity(),
            };
            acc[v] = self.algebra.compose(&above, &self.pend[v]);
            if self.topology.is_leaf(v) {
                let x = self.topology.members(v).next().expect("leaves are nonempty");
                out[x] = self.algebra.apply(&acc[v], &self.val[v]);
            }
        }
        Ok(out)
    }
}

impl<A: FlatCodec> PartitionTree<A> {
    pub fn to_parts(&self) -> TreeParts {
        let mut values = Vec::with_capacity(self.val.len() * A::VALUE_WIDTH);
        let mut pends = Vec::with_capacity(self.pend.len() * A::UPDATE_WIDTH);
        for (z, s) in self.val.iter().zip(&self.pend) {
            A::write_value(z, &mut values);
            A::write_update(s, &mut pends);
        }
        TreeParts { topology: self.topology.clone(), values, pends }
    }

    pub fn from_parts(algebra: A, system: SetSystem, parts: TreeParts) -> Result<Self> {
        let len = parts.topology.len();
        if parts.topology.n() != system.n()
            || parts.values.len() != len * A::VALUE_WIDTH
            || parts.pends.len() != len * A::UPDATE_WIDTH
        {
            return Err(Error::Snapshot("tree payload does not match its topology".into()));
        }
        let val = parts.values.chunks_exact(A::VALUE_WIDTH.max(1)).map(A::read_value).collect();
        let pend = parts.pends.chunks_exact(A::UPDATE_WIDTH.max(1)).map(A::read_update).collect();
        Ok(PartitionTree { algebra, system, topology: parts.topology, val, pend, stats: VisitStats::default() })
    }
}

/// One traversal with split borrows of the tree's fields.
struct Pass<'t, A: WeightAlgebra> {
    alg: &'t A,
    sys: &'t SetSystem,
    topo: &'t Topology,
    val: &'t mut [A::Value],
    pend: &'t mut [A::Update],
    ev: &'t PreparedEvent,
    visits: usize,
}

impl<A: WeightAlgebra> Pass<'_, A> {
    #[inline]
    fn push(&mut self, v: usize) {
        let p = self.pend[v];
        if self.alg.is_identity(&p) {
            return;
        }
        self.val[v] = self.alg.apply(&p, &self.val[v]);
        for &c in self.topo.children(v) {
            let c = c as usize;
            self.pend[c] = self.alg.compose(&p, &self.pend[c]);
        }
        self.pend[v] = self.alg.identity();
    }

    fn update(&mut self, v: usize, s: &A::Update) -> Result<()> {
        self.visits += 1;
        self.push(v);
        match self.topo.classify(self.sys, self.ev, v)? {
            Relation::Contains => {
                self.val[v] = self.alg.apply(s, &self.val[v]);
                for &c in self.topo.children(v) {
                    let c = c as usize;
                    self.pend[c] = self.alg.compose(s, &self.pend[c]);
                }
            }
            Relation::Disjoint => {}
            Relation::Crosses => {
                let mut acc = self.alg.zero();
                for &c in self.topo.children(v) {
                    self.update(c as usize, s)?;
                    acc = self.alg.combine(&acc, &self.val[c as usize]);
                }
                self.val[v] = acc;
            }
        }
        Ok(())
    }

    fn query(&mut self, v: usize) -> Result<A::Value> {
        self.visits += 1;
        self.push(v);
        Ok(match self.topo.classify(self.sys, self.ev, v)? {
            Relation::Contains => self.val[v],
            Relation::Disjoint => self.alg.zero(),
            Relation::Crosses => {
                let mut acc = self.alg.zero();
                for &c in self.topo.children(v) {
                    let part = self.query(c as usize)?;
                    acc = self.alg.combine(&acc, &part);
                }
                acc
            }
        })
    }
}
