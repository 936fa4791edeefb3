//! Outcome spaces, events over them, and the three-way relation between an
//! event and a node-set.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A queryable range over the outcome space. Endpoints are closed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    Interval { lo: f64, hi: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Outcomes with `beta · x + beta0 >= 0`.
    Halfspace { beta: Vec<f64>, beta0: f64 },
    /// Strictly increasing outcome indices.
    Explicit(Vec<usize>),
}

impl Event {
    /// Explicit event from indices in any order; duplicates are dropped.
    pub fn explicit(members: impl IntoIterator<Item = usize>) -> Event {
        let mut m: Vec<usize> = members.into_iter().collect();
        m.sort_unstable();
        m.dedup();
        Event::Explicit(m)
    }

    pub fn interval(lo: f64, hi: f64) -> Event {
        Event::Interval { lo, hi }
    }

    /// Geometric dimension, `None` for explicit events.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Event::Interval { .. } => Some(1),
            Event::Box { lo, .. } => Some(lo.len()),
            Event::Halfspace { beta, .. } => Some(beta.len()),
            Event::Explicit(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Contains,
    Disjoint,
    Crosses,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemKind {
    /// Outcomes `0..n` on the real line.
    Interval,
    /// Lattice `[side]^dim`, row-major.
    Grid { side: usize, dim: usize },
    /// Explicit coordinates, row-major `n × dim`.
    PointCloud { dim: usize, coords: Vec<f64> },
    /// No geometry; events are explicit member lists.
    Explicit { named_sets: BTreeMap<String, Vec<usize>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetSystem {
    n: usize,
    kind: SystemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    declared_dual_shatter_dim: Option<u32>,
}

/// A node-set described independently of any tree.
#[derive(Clone, Debug, PartialEq)]
pub enum NodeSet {
    /// Outcomes `lo..=hi` by index.
    IndexRange { lo: usize, hi: usize },
    /// Some subset of the outcomes inside this box; only its bounds are known.
    BoundingBox { lo: Vec<f64>, hi: Vec<f64> },
    Members(Vec<usize>),
}

impl SetSystem {
    pub fn interval(n: usize) -> Result<SetSystem> {
        if n == 0 {
            return Err(Error::EmptySystem);
        }
        Ok(SetSystem { n, kind: SystemKind::Interval, declared_dual_shatter_dim: Some(2) })
    }

    pub fn grid(side: usize, dim: usize) -> Result<SetSystem> {
        if side == 0 || dim == 0 {
            return Err(Error::EmptySystem);
        }
        let n = u32::try_from(dim)
            .ok()
            .and_then(|d| side.checked_pow(d))
            .filter(|&n| n <= u32::MAX as usize)
            .ok_or_else(|| Error::SizeOverflow(format!("{side}^{dim}")))?;
        Ok(SetSystem { n, kind: SystemKind::Grid { side, dim }, declared_dual_shatter_dim: Some(2 * dim as u32) })
    }

    pub fn point_cloud(points: &[Vec<f64>]) -> Result<SetSystem> {
        let first = points.first().ok_or(Error::EmptySystem)?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::RaggedPoints { index: 0, found: 0, expected: 1 });
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::RaggedPoints { index, found: p.len(), expected: dim });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite(format!("point {index}")));
            }
            coords.extend_from_slice(p);
        }
        if points.len() > u32::MAX as usize {
            return Err(Error::SizeOverflow(format!("{} points", points.len())));
        }
        Ok(SetSystem { n: points.len(), kind: SystemKind::PointCloud { dim, coords }, declared_dual_shatter_dim: None })
    }

    /// One point per CSV row, no header.
    pub fn point_cloud_from_csv(reader: impl Read) -> Result<SetSystem> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).flexible(true).from_reader(reader);
        let mut points = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|f| f.parse::<f64>().map_err(|e| Error::InvalidParameter(format!("coordinate {f:?}: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            points.push(row);
        }
        SetSystem::point_cloud(&points)
    }

    pub fn explicit(n: usize, named_sets: BTreeMap<String, Vec<usize>>) -> Result<SetSystem> {
        if n == 0 {
            return Err(Error::EmptySystem);
        }
        let mut named_sets = named_sets;
        for members in named_sets.values_mut() {
            if let Some(&index) = members.iter().find(|&&i| i >= n) {
                return Err(Error::IndexOutOfRange { index, n });
            }
            members.sort_unstable();
            members.dedup();
        }
        Ok(SetSystem { n, kind: SystemKind::Explicit { named_sets }, declared_dual_shatter_dim: None })
    }

    /// Reads `{"n": .., "sets": {name: [indices]}}`.
    pub fn explicit_from_json(reader: impl Read) -> Result<SetSystem> {
        #[derive(Deserialize)]
        struct File {
            n: usize,
            sets: BTreeMap<String, Vec<usize>>,
        }
        let f: File = serde_json::from_reader(reader)?;
        SetSystem::explicit(f.n, f.sets)
    }

    pub fn with_dual_shatter_dim(mut self, dim: Option<u32>) -> SetSystem {
        self.declared_dual_shatter_dim = dim;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    pub fn declared_dual_shatter_dim(&self) -> Option<u32> {
        self.declared_dual_shatter_dim
    }

    /// Geometric dimension, `None` for explicit systems.
    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            SystemKind::Interval => Some(1),
            SystemKind::Grid { dim, .. } | SystemKind::PointCloud { dim, .. } => Some(*dim),
            SystemKind::Explicit { .. } => None,
        }
    }

    pub fn named_set(&self, name: &str) -> Option<Event> {
        match &self.kind {
            SystemKind::Explicit { named_sets } => named_sets.get(name).map(|m| Event::Explicit(m.clone())),
            _ => None,
        }
    }

    /// Coordinate of outcome `x` along `axis`. Panics on explicit systems.
    #[inline]
    pub fn coord(&self, x: usize, axis: usize) -> f64 {
        match &self.kind {
            SystemKind::Interval => x as f64,
            SystemKind::Grid { side, dim } => {
                let stride = side.pow((dim - 1 - axis) as u32);
                ((x / stride) % side) as f64
            }
            SystemKind::PointCloud { dim, coords } => coords[x * dim + axis],
            SystemKind::Explicit { .. } => panic!("explicit systems have no coordinates"),
        }
    }

    pub fn point(&self, x: usize) -> Vec<f64> {
        (0..self.dim().unwrap_or(0)).map(|a| self.coord(x, a)).collect()
    }

    /// Checks well-formedness of `e` against this system.
    pub fn validate_event(&self, e: &Event) -> Result<()> {
        match e {
            Event::Explicit(m) => {
                if let Some(&index) = m.iter().find(|&&i| i >= self.n) {
                    return Err(Error::IndexOutOfRange { index, n: self.n });
                }
                if m.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::MalformedEvent("explicit members must be strictly increasing".into()));
                }
                Ok(())
            }
            _ => {
                let dim = self.dim().ok_or_else(|| Error::UnsupportedSystem("geometric event on an explicit system".into()))?;
                let edim = e.dim().unwrap_or(0);
                if edim != dim {
                    return Err(Error::DimensionMismatch { event: edim, system: dim });
                }
                match e {
                    Event::Interval { lo, hi } => {
                        if lo.is_nan() || hi.is_nan() || lo > hi {
                            return Err(Error::MalformedEvent(format!("interval [{lo}, {hi}]")));
                        }
                    }
                    Event::Box { lo, hi } => {
                        if hi.len() != lo.len() {
                            return Err(Error::DimensionMismatch { event: hi.len(), system: dim });
                        }
                        if lo.iter().zip(hi).any(|(l, h)| l.is_nan() || h.is_nan() || l > h) {
                            return Err(Error::MalformedEvent("box requires lo <= hi on every axis".into()));
                        }
                    }
                    Event::Halfspace { beta, beta0 } => {
                        if beta.iter().chain(std::iter::once(beta0)).any(|c| !c.is_finite()) {
                            return Err(Error::MalformedEvent("halfspace coefficients must be finite".into()));
                        }
                    }
                    Event::Explicit(_) => unreachable!(),
                }
                Ok(())
            }
        }
    }

    /// True iff outcome `x` lies in `e`.
    pub fn membership(&self, e: &Event, x: usize) -> Result<bool> {
        self.validate_event(e)?;
        if x >= self.n {
            return Err(Error::IndexOutOfRange { index: x, n: self.n });
        }
        Ok(self.contains_unchecked(e, x))
    }

    /// Membership for an already validated event.
    #[inline]
    pub(crate) fn contains_unchecked(&self, e: &Event, x: usize) -> bool {
        match e {
            Event::Interval { lo, hi } => {
                let c = self.coord(x, 0);
                *lo <= c && c <= *hi
            }
            Event::Box { lo, hi } => (0..lo.len()).all(|a| {
                let c = self.coord(x, a);
                lo[a] <= c && c <= hi[a]
            }),
            Event::Halfspace { beta, beta0 } => {
                let v: f64 = beta.iter().enumerate().map(|(a, b)| b * self.coord(x, a)).sum::<f64>() + beta0;
                v >= 0.0
            }
            Event::Explicit(m) => m.binary_search(&x).is_ok(),
        }
    }

    /// Relation of `e` to a node-set. Bounding boxes may yield a conservative
    /// `Crosses`, never a wrong `Contains` or `Disjoint`.
    pub fn classify(&self, e: &Event, ns: &NodeSet) -> Result<Relation> {
        self.validate_event(e)?;
        match ns {
            NodeSet::IndexRange { lo, hi } => {
                if lo > hi || *hi >= self.n {
                    return Err(Error::IndexOutOfRange { index: *hi, n: self.n });
                }
                match (e, &self.kind) {
                    (Event::Explicit(m), _) => {
                        let inside = count_in_range(m, *lo, *hi);
                        Ok(relation_from_count(inside, hi - lo + 1))
                    }
                    (_, SystemKind::Interval) => Ok(geometric_relation(e, &[*lo as f64], &[*hi as f64])),
                    _ => Ok(self.classify_members(e, *lo..=*hi)),
                }
            }
            NodeSet::BoundingBox { lo, hi } => {
                if matches!(e, Event::Explicit(_)) {
                    return Err(Error::UnsupportedSystem("explicit event against a bounding box".into()));
                }
                let dim = self.dim().unwrap_or(0);
                if lo.len() != dim || hi.len() != dim {
                    return Err(Error::DimensionMismatch { event: lo.len(), system: dim });
                }
                Ok(geometric_relation(e, lo, hi))
            }
            NodeSet::Members(m) => {
                if let Some(&index) = m.iter().find(|&&i| i >= self.n) {
                    return Err(Error::IndexOutOfRange { index, n: self.n });
                }
                Ok(self.classify_members(e, m.iter().copied()))
            }
        }
    }

    pub(crate) fn classify_members(&self, e: &Event, members: impl Iterator<Item = usize>) -> Relation {
        let (mut inside, mut total) = (0usize, 0usize);
        for x in members {
            total += 1;
            inside += self.contains_unchecked(e, x) as usize;
        }
        relation_from_count(inside, total)
    }
}

pub(crate) fn relation_from_count(inside: usize, total: usize) -> Relation {
    if inside == 0 {
        Relation::Disjoint
    } else if inside == total {
        Relation::Contains
    } else {
        Relation::Crosses
    }
}

/// Number of entries of a sorted slice in `lo..=hi`.
pub(crate) fn count_in_range(sorted: &[usize], lo: usize, hi: usize) -> usize {
    let a = sorted.partition_point(|&m| m < lo);
    let b = sorted.partition_point(|&m| m <= hi);
    b - a
}

/// Relation of a geometric event to the box `[lo, hi]`, exact for the box
/// itself and conservative for any subset of it.
#[inline]
pub(crate) fn geometric_relation(e: &Event, lo: &[f64], hi: &[f64]) -> Relation {
    match e {
        Event::Interval { lo: elo, hi: ehi } => {
            if *elo <= lo[0] && hi[0] <= *ehi {
                Relation::Contains
            } else if hi[0] < *elo || lo[0] > *ehi {
                Relation::Disjoint
            } else {
                Relation::Crosses
            }
        }
        Event::Box { lo: elo, hi: ehi } => {
            let mut contains = true;
            for a in 0..lo.len() {
                if hi[a] < elo[a] || lo[a] > ehi[a] {
                    return Relation::Disjoint;
                }
                contains &= elo[a] <= lo[a] && hi[a] <= ehi[a];
            }
            if contains {
                Relation::Contains
            } else {
                Relation::Crosses
            }
        }
        Event::Halfspace { beta, beta0 } => {
            // Extremes of an affine function over a box sit at corners.
            let (mut fmin, mut fmax) = (*beta0, *beta0);
            for a in 0..lo.len() {
                let (p, q) = (beta[a] * lo[a], beta[a] * hi[a]);
                fmin += p.min(q);
                fmax += p.max(q);
            }
            if fmin >= 0.0 {
                Relation::Contains
            } else if fmax < 0.0 {
                Relation::Disjoint
            } else {
                Relation::Crosses
            }
        }
        Event::Explicit(_) => Relation::Crosses,
    }
}

// ---------------------------------------------------------------------------
// Explicit fixtures at desk scale.

const MAX_FIXTURE_K: usize = 7;

/// All permutations of `0..k` in lexicographic order; `perm[r]` is the
/// candidate at rank `r`.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                prefix.push(c);
                rec(prefix, used, out);
                prefix.pop();
                used[c] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(k), &mut vec![false; k], &mut out);
    out
}

fn check_fixture_k(k: usize) -> Result<()> {
    if k == 0 || k > MAX_FIXTURE_K {
        return Err(Error::InvalidParameter(format!("fixture size k = {k} must be in 1..={MAX_FIXTURE_K}")));
    }
    Ok(())
}

/// Outcomes are permutations of `k` candidates; `pair_i_j` holds the
/// permutations ranking `i` above `j`.
pub fn pairing_system(k: usize) -> Result<SetSystem> {
    check_fixture_k(k)?;
    let perms = permutations(k);
    let rank_of = |p: &Vec<usize>, c: usize| p.iter().position(|&x| x == c).unwrap();
    let mut sets = BTreeMap::new();
    for i in 0..k {
        for j in 0..k {
            if i != j {
                let members = perms.iter().enumerate().filter(|(_, p)| rank_of(p, i) < rank_of(p, j)).map(|(x, _)| x).collect();
                sets.insert(format!("pair_{i}_{j}"), members);
            }
        }
    }
    SetSystem::explicit(perms.len(), sets)
}

/// Outcomes are permutations of `k` candidates; `top{l}_i` holds the
/// permutations ranking `i` among the first `l`.
pub fn top_rank_system(k: usize, l: usize) -> Result<SetSystem> {
    check_fixture_k(k)?;
    if l == 0 || l > k {
        return Err(Error::InvalidParameter(format!("top-l requires 1 <= l <= k, got l = {l}")));
    }
    let perms = permutations(k);
    let mut sets = BTreeMap::new();
    for i in 0..k {
        let members = perms.iter().enumerate().filter(|(_, p)| p[..l].contains(&i)).map(|(x, _)| x).collect();
        sets.insert(format!("top{l}_{i}"), members);
    }
    SetSystem::explicit(perms.len(), sets)
}

/// Outcomes are bit vectors in `{0,1}^k` (outcome index = integer value);
/// `bit_i` holds the vectors with bit `i` set.
pub fn junta_system(k: usize) -> Result<SetSystem> {
    check_fixture_k(k)?;
    let n = 1usize << k;
    let sets = (0..k).map(|i| (format!("bit_{i}"), (0..n).filter(|x| x >> i & 1 == 1).collect())).collect();
    SetSystem::explicit(n, sets)
}
