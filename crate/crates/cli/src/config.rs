//! Market configuration documents for `init`.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use cpm_core::cfmm::{CfmmState, TradingFunction, DEFAULT_SCALE_BOUND};
use cpm_core::msr_markets::{LmsrMarket, PowerMarket, QmsrMarket};
use cpm_core::multires::{MultiResMarket, MultiResRule};
use cpm_core::partition_tree::{HierarchySpec, Topology};
use cpm_core::set_system::SystemKind;
use cpm_core::snapshot::AnyMarket;
use cpm_core::SetSystem;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub system: SystemConfig,
    /// Defaults to a segment tree on intervals and a k-d tree on geometric
    /// systems; explicit systems need a hierarchy.
    #[serde(default)]
    pub tree: Option<TreeConfig>,
    pub market: MarketConfig,
    /// Initial share vector (scoring rules) or reserves (CFMMs).
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    Interval { n: usize },
    Grid { side: usize, dim: usize },
    /// Points inline or in a headerless CSV file, relative to the config.
    PointCloud {
        #[serde(default)]
        points: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        csv: Option<PathBuf>,
    },
    Explicit { n: usize, sets: BTreeMap<String, Vec<usize>> },
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeConfig {
    Segment,
    Kd,
    Hierarchy(HierarchySpec),
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarketConfig {
    Lmsr { b: f64 },
    Qmsr { b: f64 },
    Power { b: f64 },
    /// Level liquidities come from the hierarchy, falling back to `b`.
    Multires {
        rule: MultiResRule,
        hierarchy: HierarchySpec,
        #[serde(default)]
        b: Option<f64>,
    },
    Cfmm {
        function: TradingFunction,
        #[serde(default)]
        scale_bound: Option<f64>,
    },
}

pub fn read_config(path: &Path) -> CliResult<Config> {
    let file = File::open(path).map_err(CliError::io(format!("cannot open config {}", path.display())))?;
    serde_json::from_reader(file).map_err(|e| CliError::Usage(format!("malformed config {}: {e}", path.display())))
}

fn build_system(cfg: &SystemConfig, base: &Path) -> CliResult<SetSystem> {
    Ok(match cfg {
        SystemConfig::Interval { n } => SetSystem::interval(*n)?,
        SystemConfig::Grid { side, dim } => SetSystem::grid(*side, *dim)?,
        SystemConfig::PointCloud { points: Some(points), csv: None } => SetSystem::point_cloud(points)?,
        SystemConfig::PointCloud { points: None, csv: Some(csv) } => {
            let path = base.join(csv);
            let file = File::open(&path).map_err(CliError::io(format!("cannot open points {}", path.display())))?;
            SetSystem::point_cloud_from_csv(file)?
        }
        SystemConfig::PointCloud { .. } => {
            return Err(CliError::Usage("point_cloud needs exactly one of `points` and `csv`".into()));
        }
        SystemConfig::Explicit { n, sets } => SetSystem::explicit(*n, sets.clone())?,
    })
}

fn build_topology(tree: Option<&TreeConfig>, sys: &SetSystem) -> CliResult<Topology> {
    Ok(match tree {
        Some(TreeConfig::Segment) => Topology::segment(sys)?,
        Some(TreeConfig::Kd) => Topology::kd(sys)?,
        Some(TreeConfig::Hierarchy(spec)) => Topology::hierarchy(sys, &spec.partitions(), true)?,
        None => match sys.kind() {
            SystemKind::Interval => Topology::segment(sys)?,
            SystemKind::Explicit { .. } => {
                return Err(CliError::Usage("explicit systems need a `tree` hierarchy".into()));
            }
            _ => Topology::kd(sys)?,
        },
    })
}

/// Builds the market described by `cfg`; relative paths resolve against `base`.
pub fn build_market(cfg: &Config, base: &Path) -> CliResult<AnyMarket> {
    let sys = build_system(&cfg.system, base)?;
    let initial = cfg.initial.as_deref();
    if let MarketConfig::Multires { rule, hierarchy, b } = &cfg.market {
        if initial.is_some() || cfg.tree.is_some() {
            return Err(CliError::Usage("multires markets take their tree from `hierarchy` and start empty".into()));
        }
        return Ok(AnyMarket::MultiRes(MultiResMarket::from_spec(*rule, sys, hierarchy, *b)?));
    }
    let top = build_topology(cfg.tree.as_ref(), &sys)?;
    Ok(match &cfg.market {
        MarketConfig::Lmsr { b } => AnyMarket::Lmsr(LmsrMarket::new(sys, top, *b, initial)?),
        MarketConfig::Qmsr { b } => AnyMarket::Qmsr(QmsrMarket::new(sys, top, *b, initial)?),
        MarketConfig::Power { b } => AnyMarket::Power(PowerMarket::new(sys, top, *b, initial)?),
        MarketConfig::Cfmm { function, scale_bound } => {
            let zeros = vec![0.0; sys.n()];
            let reserves = initial.unwrap_or(&zeros);
            let pool = CfmmState::new(sys, top, function.clone(), reserves)?;
            AnyMarket::Cfmm(pool.with_scale_bound(scale_bound.unwrap_or(DEFAULT_SCALE_BOUND))?)
        }
        MarketConfig::Multires { .. } => unreachable!("handled above"),
    })
}
