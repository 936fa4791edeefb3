use serde::{Deserialize, Serialize};

use crate::set_system::{geometric_relation, relation_from_count, NodeSet, SystemKind};
use crate::{Error, Event, Relation, Result, SetSystem};

const NO_PARENT: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeShape {
    Segment,
    KdTree,
    Hierarchy,
}

impl TreeShape {
    pub(crate) fn tag(self) -> u8 {
        match self {
            TreeShape::Segment => 0,
            TreeShape::KdTree => 1,
            TreeShape::Hierarchy => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<TreeShape> {
        match tag {
            0 => Some(TreeShape::Segment),
            1 => Some(TreeShape::KdTree),
            2 => Some(TreeShape::Hierarchy),
            _ => None,
        }
    }
}

/// Node layout of a partition tree, independent of stored values.
///
/// Nodes are numbered in preorder with the root at 0. Outcomes are laid out
/// in DFS order so that every node-set is a contiguous span of positions.
#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    shape: TreeShape,
    n: usize,
    span_lo: Vec<u32>,
    span_hi: Vec<u32>,
    parent: Vec<u32>,
    depth: Vec<u32>,
    child_start: Vec<u32>,
    children: Vec<u32>,
    /// Per-node `[lo; dim] ++ [hi; dim]` bounding boxes.
    bounds: Option<(usize, Vec<f64>)>,
    /// Position to outcome; empty means identity.
    order: Vec<u32>,
    position: Vec<u32>,
    coarse_leaves: bool,
    single_child_chains: bool,
}

/// An event resolved against one topology.
#[derive(Clone, Debug)]
pub struct PreparedEvent {
    event: Event,
    /// Sorted member positions for explicit events.
    positions: Option<Vec<u32>>,
}

impl PreparedEvent {
    pub fn event(&self) -> &Event {
        &self.event
    }
}

struct Builder {
    span_lo: Vec<u32>,
    span_hi: Vec<u32>,
    parent: Vec<u32>,
    depth: Vec<u32>,
}

impl Builder {
    fn with_capacity(cap: usize) -> Builder {
        Builder {
            span_lo: Vec::with_capacity(cap),
            span_hi: Vec::with_capacity(cap),
            parent: Vec::with_capacity(cap),
            depth: Vec::with_capacity(cap),
        }
    }

    fn push(&mut self, lo: usize, hi: usize, parent: u32, depth: u32) -> u32 {
        let id = self.span_lo.len() as u32;
        self.span_lo.push(lo as u32);
        self.span_hi.push(hi as u32);
        self.parent.push(parent);
        self.depth.push(depth);
        id
    }
}

fn check_size(n: usize) -> Result<()> {
    if n >= u32::MAX as usize / 2 {
        return Err(Error::SizeOverflow(format!("{n} outcomes exceed the tree index range")));
    }
    Ok(())
}

impl Topology {
    /// Balanced binary tree over aligned dyadic blocks clipped to `0..n`.
    pub fn segment(sys: &SetSystem) -> Result<Topology> {
        if !matches!(sys.kind(), SystemKind::Interval) {
            return Err(Error::UnsupportedSystem("segment trees need an interval system".into()));
        }
        let n = sys.n();
        check_size(n)?;
        let mut b = Builder::with_capacity(2 * n);
        fn rec(b: &mut Builder, lo: usize, mut size: usize, n: usize, parent: u32, depth: u32) {
            // A block whose right half misses 0..n collapses into its left half.
            while size > 1 && lo + size / 2 >= n {
                size /= 2;
            }
            let id = b.push(lo, (lo + size - 1).min(n - 1), parent, depth);
            if size > 1 {
                rec(b, lo, size / 2, n, id, depth + 1);
                rec(b, lo + size / 2, size / 2, n, id, depth + 1);
            }
        }
        rec(&mut b, 0, n.next_power_of_two(), n, NO_PARENT, 0);
        Ok(Topology::finish(TreeShape::Segment, sys, b, Vec::new(), false))
    }

    /// Median-split k-d tree, axis cycling with depth, ties broken by index.
    pub fn kd(sys: &SetSystem) -> Result<Topology> {
        let dim = sys.dim().ok_or_else(|| Error::UnsupportedSystem("k-d trees need a geometric system".into()))?;
        let n = sys.n();
        check_size(n)?;
        let coords: Vec<f64> = (0..n).flat_map(|x| (0..dim).map(move |a| (x, a))).map(|(x, a)| sys.coord(x, a)).collect();
        let mut idx: Vec<u32> = (0..n as u32).collect();
        let mut b = Builder::with_capacity(2 * n);

        #[allow(clippy::too_many_arguments)]
        fn rec(b: &mut Builder, coords: &[f64], dim: usize, idx: &mut [u32], offset: usize, parent: u32, depth: u32) {
            let id = b.push(offset, offset + idx.len() - 1, parent, depth);
            if idx.len() == 1 {
                return;
            }
            let axis = depth as usize % dim;
            let mid = idx.len() / 2;
            idx.select_nth_unstable_by(mid, |&p, &q| {
                let (cp, cq) = (coords[p as usize * dim + axis], coords[q as usize * dim + axis]);
                cp.total_cmp(&cq).then(p.cmp(&q))
            });
            let (left, right) = idx.split_at_mut(mid);
            rec(b, coords, dim, left, offset, id, depth + 1);
            rec(b, coords, dim, right, offset + mid, id, depth + 1);
        }
        rec(&mut b, &coords, dim, &mut idx, 0, NO_PARENT, 0);
        Ok(Topology::finish(TreeShape::KdTree, sys, b, idx, false))
    }

    /// One node per cell of successively finer partitions. `levels[0]` must be
    /// the single cell `X`. With `collapse_chains`, a cell with exactly one
    /// child cell is merged into it.
    pub fn hierarchy(sys: &SetSystem, levels: &[Vec<Vec<usize>>], collapse_chains: bool) -> Result<Topology> {
        let n = sys.n();
        check_size(n)?;
        let bad = |msg: String| Error::InvalidHierarchy(msg);
        if levels.is_empty() || levels[0].len() != 1 || levels[0][0].len() != n {
            return Err(bad("level 0 must be the single cell holding every outcome".into()));
        }
        // cell_of[k][x] = index of the level-k cell holding x.
        let mut cell_of: Vec<Vec<u32>> = Vec::with_capacity(levels.len());
        for (k, cells) in levels.iter().enumerate() {
            let mut owner = vec![u32::MAX; n];
            for (c, cell) in cells.iter().enumerate() {
                if cell.is_empty() {
                    return Err(bad(format!("level {k} cell {c} is empty")));
                }
                for &x in cell {
                    if x >= n {
                        return Err(Error::IndexOutOfRange { index: x, n });
                    }
                    if owner[x] != u32::MAX {
                        return Err(bad(format!("outcome {x} appears twice at level {k}")));
                    }
                    owner[x] = c as u32;
                }
            }
            if let Some(x) = owner.iter().position(|&o| o == u32::MAX) {
                return Err(bad(format!("outcome {x} is missing at level {k}")));
            }
            cell_of.push(owner);
        }
        // kids[k][c] = child cells of level-k cell c.
        let mut kids: Vec<Vec<Vec<u32>>> = levels.iter().map(|cells| vec![Vec::new(); cells.len()]).collect();
        for k in 1..levels.len() {
            for (c, cell) in levels[k].iter().enumerate() {
                let p = cell_of[k - 1][cell[0]];
                if cell.iter().any(|&x| cell_of[k - 1][x] != p) {
                    return Err(bad(format!("level {k} cell {c} straddles two level-{} cells", k - 1)));
                }
                kids[k - 1][p as usize].push(c as u32);
            }
        }

        let mut b = Builder::with_capacity(levels.iter().map(Vec::len).sum());
        let mut order: Vec<u32> = Vec::with_capacity(n);
        #[allow(clippy::too_many_arguments)]
        fn emit(
            b: &mut Builder,
            order: &mut Vec<u32>,
            levels: &[Vec<Vec<usize>>],
            kids: &[Vec<Vec<u32>>],
            collapse: bool,
            mut k: usize,
            mut c: usize,
            parent: u32,
            depth: u32,
        ) {
            if collapse {
                while k + 1 < levels.len() && kids[k][c].len() == 1 {
                    c = kids[k][c][0] as usize;
                    k += 1;
                }
            }
            let lo = order.len();
            let id = b.push(lo, lo, parent, depth);
            if k + 1 == levels.len() {
                let mut members = levels[k][c].clone();
                members.sort_unstable();
                order.extend(members.iter().map(|&x| x as u32));
            } else {
                for &child in &kids[k][c] {
                    emit(b, order, levels, kids, collapse, k + 1, child as usize, id, depth + 1);
                }
            }
            b.span_hi[id as usize] = (order.len() - 1) as u32;
        }
        emit(&mut b, &mut order, levels, &kids, collapse_chains, 0, 0, NO_PARENT, 0);
        Ok(Topology::finish(TreeShape::Hierarchy, sys, b, order, true))
    }

    /// Rebuilds a topology from raw preorder arrays, validating structure.
    pub(crate) fn from_raw(
        shape: TreeShape,
        sys: &SetSystem,
        span_lo: Vec<u32>,
        span_hi: Vec<u32>,
        parent: Vec<u32>,
        order: Vec<u32>,
    ) -> Result<Topology> {
        let n = sys.n();
        let len = span_lo.len();
        let bad = |msg: &str| Error::Snapshot(format!("invalid topology: {msg}"));
        if len == 0 || span_hi.len() != len || parent.len() != len {
            return Err(bad("node arrays disagree"));
        }
        if !order.is_empty() {
            let mut seen = vec![false; n];
            if order.len() != n || order.iter().any(|&x| (x as usize) >= n || std::mem::replace(&mut seen[x as usize], true)) {
                return Err(bad("order is not a permutation"));
            }
        }
        if parent[0] != NO_PARENT || span_lo[0] != 0 || span_hi[0] as usize + 1 != n {
            return Err(bad("root must span every outcome"));
        }
        let mut depth = vec![0u32; len];
        // Children must tile their parent's span left to right.
        let mut next_lo: Vec<u32> = span_lo.clone();
        for v in 1..len {
            let p = parent[v] as usize;
            if p >= v || span_lo[v] > span_hi[v] || span_lo[v] != next_lo[p] || span_hi[v] > span_hi[p] {
                return Err(bad("children do not tile their parent"));
            }
            next_lo[p] = span_hi[v] + 1;
            depth[v] = depth[p] + 1;
        }
        let mut has_child = vec![false; len];
        for v in 1..len {
            has_child[parent[v] as usize] = true;
        }
        if (0..len).any(|v| has_child[v] && next_lo[v] != span_hi[v] + 1) {
            return Err(bad("children do not cover their parent"));
        }
        let b = Builder { span_lo, span_hi, parent, depth };
        let use_bounds = shape != TreeShape::Segment;
        Ok(Topology::finish(shape, sys, b, order, use_bounds))
    }

    fn finish(shape: TreeShape, sys: &SetSystem, b: Builder, order: Vec<u32>, want_bounds: bool) -> Topology {
        let n = sys.n();
        let len = b.span_lo.len();
        let mut child_start = vec![0u32; len + 1];
        for v in 1..len {
            child_start[b.parent[v] as usize + 1] += 1;
        }
        for v in 0..len {
            child_start[v + 1] += child_start[v];
        }
        let mut fill = child_start.clone();
        let mut children = vec![0u32; len.saturating_sub(1)];
        for v in 1..len {
            let p = b.parent[v] as usize;
            children[fill[p] as usize] = v as u32;
            fill[p] += 1;
        }
        let identity = order.iter().enumerate().all(|(i, &x)| i == x as usize);
        let order = if identity { Vec::new() } else { order };
        let mut position = Vec::new();
        if !order.is_empty() {
            position = vec![0u32; n];
            for (p, &x) in order.iter().enumerate() {
                position[x as usize] = p as u32;
            }
        }
        let mut coarse_leaves = false;
        let mut single_child_chains = false;
        for v in 0..len {
            let kids = child_start[v + 1] - child_start[v];
            coarse_leaves |= kids == 0 && b.span_hi[v] > b.span_lo[v];
            single_child_chains |= kids == 1;
        }
        let mut topo = Topology {
            shape,
            n,
            span_lo: b.span_lo,
            span_hi: b.span_hi,
            parent: b.parent,
            depth: b.depth,
            child_start,
            children,
            bounds: None,
            order,
            position,
            coarse_leaves,
            single_child_chains,
        };
        if want_bounds || shape == TreeShape::KdTree {
            if let Some(dim) = sys.dim() {
                topo.bounds = Some((dim, topo.compute_bounds(sys, dim)));
            }
        }
        topo
    }

    fn compute_bounds(&self, sys: &SetSystem, dim: usize) -> Vec<f64> {
        let len = self.len();
        let mut bounds = vec![0.0; len * 2 * dim];
        // Children have larger preorder ids, so a reverse sweep is bottom-up.
        for v in (0..len).rev() {
            let (lo, hi) = bounds[v * 2 * dim..(v + 1) * 2 * dim].split_at_mut(dim);
            lo.fill(f64::INFINITY);
            hi.fill(f64::NEG_INFINITY);
            if self.is_leaf(v) {
                for x in self.members(v) {
                    for a in 0..dim {
                        let c = sys.coord(x, a);
                        lo[a] = lo[a].min(c);
                        hi[a] = hi[a].max(c);
                    }
                }
            }
        }
        for v in (1..len).rev() {
            let p = self.parent[v] as usize;
            for a in 0..dim {
                let (clo, chi) = (bounds[v * 2 * dim + a], bounds[v * 2 * dim + dim + a]);
                let plo = &mut bounds[p * 2 * dim + a];
                *plo = plo.min(clo);
                let phi = &mut bounds[p * 2 * dim + dim + a];
                *phi = phi.max(chi);
            }
        }
        bounds
    }

    /// Preorder span and parent arrays plus the order table (empty when identity).
    pub(crate) fn raw_parts(&self) -> (&[u32], &[u32], &[u32], &[u32]) {
        (&self.span_lo, &self.span_hi, &self.parent, &self.order)
    }

    pub fn shape(&self) -> TreeShape {
        self.shape
    }

    /// Number of outcomes.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.span_lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.span_lo.is_empty()
    }

    pub fn root(&self) -> usize {
        0
    }

    #[inline]
    pub fn children(&self, v: usize) -> &[u32] {
        &self.children[self.child_start[v] as usize..self.child_start[v + 1] as usize]
    }

    #[inline]
    pub fn is_leaf(&self, v: usize) -> bool {
        self.child_start[v] == self.child_start[v + 1]
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        let p = self.parent[v];
        (p != NO_PARENT).then_some(p as usize)
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v] as usize
    }

    pub fn height(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0) as usize
    }

    /// Inclusive position span.
    #[inline]
    pub fn span(&self, v: usize) -> (usize, usize) {
        (self.span_lo[v] as usize, self.span_hi[v] as usize)
    }

    #[inline]
    pub fn size(&self, v: usize) -> usize {
        (self.span_hi[v] - self.span_lo[v]) as usize + 1
    }

    #[inline]
    pub fn outcome_at(&self, pos: usize) -> usize {
        if self.order.is_empty() {
            pos
        } else {
            self.order[pos] as usize
        }
    }

    #[inline]
    pub fn position_of(&self, x: usize) -> usize {
        if self.position.is_empty() {
            x
        } else {
            self.position[x] as usize
        }
    }

    pub fn is_identity_order(&self) -> bool {
        self.order.is_empty()
    }

    /// Outcomes of node `v`.
    pub fn members(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        let (lo, hi) = self.span(v);
        (lo..=hi).map(move |p| self.outcome_at(p))
    }

    /// Bounding box of node `v` for geometric systems.
    pub fn bounds(&self, v: usize) -> Option<(&[f64], &[f64])> {
        self.bounds.as_ref().map(|(dim, b)| b[v * 2 * dim..(v + 1) * 2 * dim].split_at(*dim))
    }

    /// True when some leaf holds more than one outcome.
    pub fn has_coarse_leaves(&self) -> bool {
        self.coarse_leaves
    }

    /// True when some node has exactly one child.
    pub fn has_single_child_chains(&self) -> bool {
        self.single_child_chains
    }

    pub fn node_set(&self, v: usize) -> NodeSet {
        match self.shape {
            TreeShape::Segment => {
                let (lo, hi) = self.span(v);
                NodeSet::IndexRange { lo, hi }
            }
            _ => {
                let mut m: Vec<usize> = self.members(v).collect();
                m.sort_unstable();
                NodeSet::Members(m)
            }
        }
    }

    pub fn prepare(&self, sys: &SetSystem, e: &Event) -> Result<PreparedEvent> {
        sys.validate_event(e)?;
        if sys.n() != self.n {
            return Err(Error::InvalidParameter(format!("system has {} outcomes, tree has {}", sys.n(), self.n)));
        }
        let positions = match e {
            Event::Explicit(m) => {
                let mut p: Vec<u32> = m.iter().map(|&x| self.position_of(x) as u32).collect();
                if !self.is_identity_order() {
                    p.sort_unstable();
                }
                Some(p)
            }
            _ => None,
        };
        Ok(PreparedEvent { event: e.clone(), positions })
    }

    /// Relation of a prepared event to node `v`'s node-set. Leaves resolve
    /// exactly; a leaf cell split by the event is an error.
    #[inline]
    pub fn classify(&self, sys: &SetSystem, ev: &PreparedEvent, v: usize) -> Result<Relation> {
        let rel = match &ev.positions {
            Some(pos) => {
                let (lo, hi) = self.span(v);
                let a = pos.partition_point(|&p| (p as usize) < lo);
                let b = pos.partition_point(|&p| (p as usize) <= hi);
                return self.leaf_check(relation_from_count(b - a, hi - lo + 1), v);
            }
            None => match self.bounds(v) {
                Some((lo, hi)) => geometric_relation(&ev.event, lo, hi),
                None => {
                    let (lo, hi) = self.span(v);
                    geometric_relation(&ev.event, &[lo as f64], &[hi as f64])
                }
            },
        };
        if rel == Relation::Crosses && self.is_leaf(v) {
            let exact = sys.classify_members(&ev.event, self.members(v));
            return self.leaf_check(exact, v);
        }
        Ok(rel)
    }

    #[inline]
    fn leaf_check(&self, rel: Relation, v: usize) -> Result<Relation> {
        if rel == Relation::Crosses && self.is_leaf(v) {
            Err(Error::EventNotRepresentable { size: self.size(v) })
        } else {
            Ok(rel)
        }
    }

    /// Maximal tree nodes whose node-sets lie inside the event; they are
    /// disjoint and cover `e ∩ X`. Also returns the number of nodes visited.
    pub fn decompose(&self, sys: &SetSystem, ev: &PreparedEvent) -> Result<(Vec<usize>, usize)> {
        let mut out = Vec::new();
        let mut visits = 0;
        let mut stack = vec![self.root()];
        while let Some(v) = stack.pop() {
            visits += 1;
            match self.classify(sys, ev, v)? {
                Relation::Contains => out.push(v),
                Relation::Disjoint => {}
                Relation::Crosses => stack.extend(self.children(v).iter().rev().map(|&c| c as usize)),
            }
        }
        Ok((out, visits))
    }
}

/// A cell given either as an inclusive index range or as explicit members.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellSpec {
    Range { range: [usize; 2] },
    Members(Vec<usize>),
}

impl CellSpec {
    pub fn members(&self) -> Vec<usize> {
        match self {
            CellSpec::Range { range: [lo, hi] } => (*lo..=*hi).collect(),
            CellSpec::Members(m) => m.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    /// Liquidity of this level's submarket; ignored by plain trees.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    pub cells: Vec<CellSpec>,
}

/// On-disk hierarchy: ordered levels from `{X}` down to the finest cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchySpec {
    pub levels: Vec<LevelSpec>,
}

impl HierarchySpec {
    pub fn partitions(&self) -> Vec<Vec<Vec<usize>>> {
        self.levels.iter().map(|l| l.cells.iter().map(CellSpec::members).collect()).collect()
    }

    pub fn liquidities(&self) -> Option<Vec<f64>> {
        self.levels.iter().map(|l| l.b).collect()
    }

    /// Contiguous blocks of the given sizes, coarsest first, always ending
    /// with singletons. Each size must divide the previous one.
    pub fn blocks(n: usize, sizes: &[usize], b: Option<&[f64]>) -> HierarchySpec {
        let mut all = vec![n];
        all.extend(sizes.iter().copied().filter(|&s| s < n && s > 1));
        all.push(1);
        all.dedup();
        let levels = all
            .iter()
            .enumerate()
            .map(|(k, &size)| LevelSpec {
                b: b.and_then(|b| b.get(k).copied()),
                cells: (0..n).step_by(size).map(|lo| CellSpec::Range { range: [lo, (lo + size).min(n) - 1] }).collect(),
            })
            .collect();
        HierarchySpec { levels }
    }

    /// Year of 4 quarters, 3 months, 4 weeks and 7 days (336 outcomes).
    pub fn calendar() -> HierarchySpec {
        HierarchySpec::blocks(336, &[84, 28, 7], None)
    }
}
