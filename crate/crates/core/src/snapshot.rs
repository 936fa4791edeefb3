//! `CPT1` binary snapshots of any market in this crate.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "CPT1" | u32 meta_len | meta JSON {system, market}
//!        | u8 shape | u32 nodes | span_lo[nodes] | span_hi[nodes] | parent[nodes]
//!        | u32 order_len | order[order_len]
//!        | sections: (u32 len | f64[len]) or (u32 len | u32[len]), fixed per market kind
//! ```
//!
//! Floats are stored bit-exact so a loaded market replays identically.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebra::{LogSumAdd, MinAdd, Paired, PowerMoments, SumAddVec};
use crate::cfmm::{CfmmState, TradingFunction};
use crate::msr_markets::{LmsrMarket, PowerMarket, QmsrMarket, ScoringMarket};
use crate::multires::{MultiResMarket, MultiResParts, MultiResRule};
use crate::partition_tree::{PartitionTree, Topology, TreeParts, TreeShape};
use crate::{Error, Result, SetSystem};

const MAGIC: &[u8; 4] = b"CPT1";

/// Any market that can be saved.
#[derive(Clone, Debug)]
pub enum AnyMarket {
    Lmsr(LmsrMarket),
    Qmsr(QmsrMarket),
    Power(PowerMarket),
    MultiRes(MultiResMarket),
    Cfmm(CfmmState),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
enum MarketMeta {
    Lmsr { b: f64 },
    Qmsr { b: f64 },
    Power { b: f64, pivot: f64 },
    MultiRes { rule: MultiResRule, level_b: Vec<f64> },
    Cfmm { function: TradingFunction, scale_bound: f64 },
}

#[derive(Serialize, Deserialize)]
struct Meta {
    system: SetSystem,
    market: MarketMeta,
}

impl AnyMarket {
    pub fn system(&self) -> &SetSystem {
        match self {
            AnyMarket::Lmsr(m) => m.tree().system(),
            AnyMarket::Qmsr(m) => m.tree().system(),
            AnyMarket::Power(m) => m.tree().system(),
            AnyMarket::MultiRes(m) => m.system(),
            AnyMarket::Cfmm(m) => m.system(),
        }
    }

    pub fn topology(&self) -> &Topology {
        match self {
            AnyMarket::Lmsr(m) => m.tree().topology(),
            AnyMarket::Qmsr(m) => m.tree().topology(),
            AnyMarket::Power(m) => m.tree().topology(),
            AnyMarket::MultiRes(m) => m.topology(),
            AnyMarket::Cfmm(m) => m.topology(),
        }
    }

    /// Short market name used in reports.
    pub fn kind_name(&self) -> &'static str {
        match self {
            AnyMarket::Lmsr(_) => "lmsr",
            AnyMarket::Qmsr(_) => "qmsr",
            AnyMarket::Power(_) => "power",
            AnyMarket::MultiRes(m) => match m.rule() {
                MultiResRule::Lmsr => "multires-lmsr",
                MultiResRule::Qmsr => "multires-qmsr",
            },
            AnyMarket::Cfmm(m) => match m.function() {
                TradingFunction::Log { .. } => "cfmm-log",
                TradingFunction::Linear { .. } => "cfmm-linear",
            },
        }
    }

    /// The scoring-rule interface, absent for CFMMs.
    pub fn as_scoring(&mut self) -> Option<&mut dyn ScoringMarket> {
        match self {
            AnyMarket::Lmsr(m) => Some(m),
            AnyMarket::Qmsr(m) => Some(m),
            AnyMarket::Power(m) => Some(m),
            AnyMarket::MultiRes(m) => Some(m),
            AnyMarket::Cfmm(_) => None,
        }
    }
}

// --- byte helpers -------------------------------------------------------

fn put_u32(out: &mut Vec<u8>, x: u32) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn put_u32s(out: &mut Vec<u8>, xs: &[u32]) {
    put_u32(out, xs.len() as u32);
    for &x in xs {
        put_u32(out, x);
    }
}

fn put_f64s(out: &mut Vec<u8>, xs: &[f64]) {
    put_u32(out, xs.len() as u32);
    for &x in xs {
        out.extend_from_slice(&x.to_bits().to_le_bytes());
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

fn truncated() -> Error {
    Error::Snapshot("unexpected end of data".into())
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(len).filter(|&e| e <= self.bytes.len()).ok_or_else(truncated)?;
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn len(&mut self, width: usize) -> Result<usize> {
        let len = self.u32()? as usize;
        if len.saturating_mul(width) > self.bytes.len() - self.at {
            return Err(truncated());
        }
        Ok(len)
    }

    fn u32s_exact(&mut self, len: usize) -> Result<Vec<u32>> {
        let raw = self.take(len.checked_mul(4).ok_or_else(truncated)?)?;
        Ok(raw.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes"))).collect())
    }

    fn u32s(&mut self) -> Result<Vec<u32>> {
        let len = self.len(4)?;
        self.u32s_exact(len)
    }

    fn f64s(&mut self) -> Result<Vec<f64>> {
        let len = self.len(8)?;
        let raw = self.take(len * 8)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().expect("8 bytes")))).collect())
    }
}

fn put_topology(out: &mut Vec<u8>, topo: &Topology) {
    let (span_lo, span_hi, parent, order) = topo.raw_parts();
    out.push(topo.shape().tag());
    put_u32(out, span_lo.len() as u32);
    for part in [span_lo, span_hi, parent] {
        for &x in part {
            put_u32(out, x);
        }
    }
    put_u32s(out, order);
}

fn read_topology(cur: &mut Cursor, sys: &SetSystem) -> Result<Topology> {
    let shape = TreeShape::from_tag(cur.u8()?).ok_or_else(|| Error::Snapshot("unknown tree shape".into()))?;
    let nodes = cur.len(12)?;
    let span_lo = cur.u32s_exact(nodes)?;
    let span_hi = cur.u32s_exact(nodes)?;
    let parent = cur.u32s_exact(nodes)?;
    let order = cur.u32s()?;
    Topology::from_raw(shape, sys, span_lo, span_hi, parent, order)
}

fn put_tree(out: &mut Vec<u8>, parts: &TreeParts) {
    put_topology(out, &parts.topology);
    put_f64s(out, &parts.values);
    put_f64s(out, &parts.pends);
}

fn read_tree(cur: &mut Cursor, sys: &SetSystem) -> Result<TreeParts> {
    let topology = read_topology(cur, sys)?;
    Ok(TreeParts { topology, values: cur.f64s()?, pends: cur.f64s()? })
}

// --- encode / decode ----------------------------------------------------

pub fn encode(market: &AnyMarket) -> Result<Vec<u8>> {
    let meta = match market {
        AnyMarket::Lmsr(m) => MarketMeta::Lmsr { b: m.liquidity() },
        AnyMarket::Qmsr(m) => MarketMeta::Qmsr { b: m.liquidity() },
        AnyMarket::Power(m) => MarketMeta::Power { b: m.liquidity(), pivot: m.pivot() },
        AnyMarket::MultiRes(m) => MarketMeta::MultiRes { rule: m.rule(), level_b: m.level_liquidity().to_vec() },
        AnyMarket::Cfmm(m) => MarketMeta::Cfmm { function: m.function().clone(), scale_bound: m.scale_bound() },
    };
    let json = serde_json::to_vec(&Meta { system: market.system().clone(), market: meta })?;
    let mut out = Vec::with_capacity(64 + json.len());
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, json.len() as u32);
    out.extend_from_slice(&json);
    match market {
        AnyMarket::Lmsr(m) => put_tree(&mut out, &m.tree().to_parts()),
        AnyMarket::Qmsr(m) => put_tree(&mut out, &m.tree().to_parts()),
        AnyMarket::Power(m) => put_tree(&mut out, &m.tree().to_parts()),
        AnyMarket::Cfmm(m) => put_tree(&mut out, &m.to_parts()),
        AnyMarket::MultiRes(m) => {
            let parts = m.to_parts();
            put_topology(&mut out, &parts.topology);
            put_u32s(&mut out, &parts.cell);
            put_f64s(&mut out, &parts.node_values);
            put_f64s(&mut out, &parts.level_sum);
        }
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<AnyMarket> {
    let mut cur = Cursor { bytes, at: 0 };
    if cur.take(4).map_err(|_| Error::Snapshot("missing magic".into()))? != MAGIC {
        return Err(Error::Snapshot("not a CPT1 snapshot".into()));
    }
    let meta_len = cur.len(1)?;
    let meta: Meta = serde_json::from_slice(cur.take(meta_len)?)?;
    let sys = meta.system;
    let market = match meta.market {
        MarketMeta::Lmsr { b } => {
            let parts = read_tree(&mut cur, &sys)?;
            AnyMarket::Lmsr(LmsrMarket::from_tree(b, PartitionTree::from_parts(LogSumAdd, sys, parts)?)?)
        }
        MarketMeta::Qmsr { b } => {
            let parts = read_tree(&mut cur, &sys)?;
            AnyMarket::Qmsr(QmsrMarket::from_tree(b, PartitionTree::from_parts(SumAddVec::<2>, sys, parts)?)?)
        }
        MarketMeta::Power { b, pivot } => {
            let parts = read_tree(&mut cur, &sys)?;
            let tree = PartitionTree::from_parts(Paired(PowerMoments, MinAdd), sys, parts)?;
            AnyMarket::Power(PowerMarket::from_tree(b, pivot, tree)?)
        }
        MarketMeta::Cfmm { function, scale_bound } => {
            let parts = read_tree(&mut cur, &sys)?;
            AnyMarket::Cfmm(CfmmState::from_parts(sys, function, scale_bound, parts)?)
        }
        MarketMeta::MultiRes { rule, level_b } => {
            let topology = read_topology(&mut cur, &sys)?;
            let cell = cur.u32s()?;
            let node_values = cur.f64s()?;
            let level_sum = cur.f64s()?;
            let parts = MultiResParts { rule, topology, level_b, cell, node_values, level_sum };
            AnyMarket::MultiRes(MultiResMarket::from_parts(sys, parts)?)
        }
    };
    if cur.at != bytes.len() {
        return Err(Error::Snapshot(format!("{} trailing bytes", bytes.len() - cur.at)));
    }
    Ok(market)
}

pub fn write_to(market: &AnyMarket, mut w: impl Write) -> Result<()> {
    w.write_all(&encode(market)?)?;
    Ok(())
}

pub fn read_from(mut r: impl Read) -> Result<AnyMarket> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn save(market: &AnyMarket, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode(market)?)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<AnyMarket> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition_tree::HierarchySpec;
    use crate::Event;

    fn roundtrip(m: &AnyMarket) -> AnyMarket {
        let bytes = encode(m).unwrap();
        assert_eq!(&bytes[..4], b"CPT1");
        let back = decode(&bytes).unwrap();
        assert_eq!(encode(&back).unwrap(), bytes);
        back
    }

    #[test]
    fn scoring_markets_roundtrip() {
        let sys = SetSystem::grid(4, 2).unwrap();
        let topo = Topology::kd(&sys).unwrap();
        let box_e = Event::Box { lo: vec![0.0, 1.0], hi: vec![2.0, 3.0] };
        let mut lmsr = LmsrMarket::new(sys.clone(), topo.clone(), 2.0, None).unwrap();
        lmsr.buy(&box_e, 1.5).unwrap();
        let mut qmsr = QmsrMarket::new(sys.clone(), topo.clone(), 2.0, None).unwrap();
        qmsr.buy(&box_e, 0.5).unwrap();
        let w: Vec<f64> = (0..16).map(|i| i as f64 * 0.01).collect();
        let power = PowerMarket::new(sys, topo, 3.0, Some(&w)).unwrap();
        for m in [AnyMarket::Lmsr(lmsr), AnyMarket::Qmsr(qmsr), AnyMarket::Power(power)] {
            let mut back = roundtrip(&m);
            let mut orig = m.clone();
            let a = orig.as_scoring().unwrap().price(&box_e).unwrap();
            let b = back.as_scoring().unwrap().price(&box_e).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn multires_and_cfmm_roundtrip() {
        let sys = SetSystem::interval(336).unwrap();
        let mut mr = MultiResMarket::from_spec(MultiResRule::Lmsr, sys.clone(), &HierarchySpec::calendar(), Some(1.0)).unwrap();
        mr.mr_buy(&Event::interval(7.0, 90.0), 2.0).unwrap();
        roundtrip(&AnyMarket::MultiRes(mr));

        let topo = Topology::segment(&sys).unwrap();
        let cf = CfmmState::new(sys, topo, TradingFunction::Log { b: 1.0 }, &vec![1.0; 336]).unwrap();
        roundtrip(&AnyMarket::Cfmm(cf));
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let sys = SetSystem::interval(8).unwrap();
        let topo = Topology::segment(&sys).unwrap();
        let m = AnyMarket::Lmsr(LmsrMarket::new(sys, topo, 1.0, None).unwrap());
        let bytes = encode(&m).unwrap();
        assert!(matches!(decode(b"XXXX"), Err(Error::Snapshot(_))));
        assert!(decode(&bytes[..bytes.len() - 3]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode(&extra).is_err());
        let mut bad_parent = bytes.clone();
        // Point node 1's parent past itself.
        let meta_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let parent_at = 8 + meta_len + 1 + 4 + 2 * 15 * 4 + 4;
        bad_parent[parent_at..parent_at + 4].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(decode(&bad_parent), Err(Error::Snapshot(_))));
    }
}
