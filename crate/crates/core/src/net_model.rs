//! Static network substrate: node placement, link geometry and the signal model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, LookupError};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

/// Axis-aligned box in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub min: Vec3,
    pub max: Vec3,
}

impl Region {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Region { min, max }
    }

    /// Box anchored at the origin.
    pub fn sized(x: f64, y: f64, z: f64) -> Self {
        Region::new(Vec3::ZERO, Vec3::new(x, y, z))
    }

    pub fn volume(&self) -> f64 {
        let d = self.max - self.min;
        d.x.max(0.0) * d.y.max(0.0) * d.z.max(0.0)
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (self.min.x..=self.max.x).contains(&p.x)
            && (self.min.y..=self.max.y).contains(&p.y)
            && (self.min.z..=self.max.z).contains(&p.z)
    }

    pub fn clamp(&self, p: Vec3) -> Vec3 {
        Vec3::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
            p.z.clamp(self.min.z, self.max.z),
        )
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.volume() <= 0.0 {
            return Err(ConfigError::invalid("region", "must have positive finite volume"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(u32::try_from(i).expect("node index fits in u32"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NodeRole {
    Normal,
    GroundStation,
    Wormhole { peer: NodeId },
    BlackHole,
    GrayHole { drop_prob: f64 },
    Fid,
}

impl NodeRole {
    pub fn is_malicious(&self) -> bool {
        !matches!(self, NodeRole::Normal | NodeRole::GroundStation)
    }

    pub fn is_ground_station(&self) -> bool {
        matches!(self, NodeRole::GroundStation)
    }

    /// Whether the node reports a broken outgoing link to route sources.
    /// Route-capturing attackers stay silent to keep the captured route alive.
    pub fn reports_link_breaks(&self) -> bool {
        !matches!(self, NodeRole::BlackHole | NodeRole::Wormhole { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            NodeRole::Normal => "normal",
            NodeRole::GroundStation => "ground-station",
            NodeRole::Wormhole { .. } => "wh",
            NodeRole::BlackHole => "bh",
            NodeRole::GrayHole { .. } => "gh",
            NodeRole::Fid => "fid",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteEntry {
    pub next_hop: NodeId,
    pub hop_count: u32,
    pub dest_seq: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UavNode {
    pub id: NodeId,
    pub position: Vec3,
    /// m/s
    pub velocity: Vec3,
    pub role: NodeRole,
    /// dBm
    pub tx_power: f64,
    pub routing_table: BTreeMap<NodeId, RouteEntry>,
}

impl UavNode {
    pub fn new(id: NodeId, position: Vec3, role: NodeRole, tx_power: f64) -> Self {
        UavNode { id, position, velocity: Vec3::ZERO, role, tx_power, routing_table: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub nodes: Vec<UavNode>,
    pub region: Region,
    pub comm_range: f64,
}

pub const DEFAULT_COMM_RANGE: f64 = 300.0;
pub const DEFAULT_TX_POWER_DBM: f64 = 20.0;

impl Topology {
    pub fn new(nodes: Vec<UavNode>, region: Region, comm_range: f64) -> Result<Self, ConfigError> {
        if !(comm_range > 0.0 && comm_range.is_finite()) {
            return Err(ConfigError::invalid("comm_range", "must be positive"));
        }
        region.validate()?;
        for (i, n) in nodes.iter().enumerate() {
            if n.id.index() != i {
                return Err(ConfigError::invalid("nodes", "ids must be dense and unique"));
            }
            if !region.contains(n.position) {
                return Err(ConfigError::invalid("nodes", format!("node {} lies outside the region", n.id)));
            }
            if let NodeRole::Wormhole { peer } = n.role {
                if peer == n.id || peer.index() >= nodes.len() {
                    return Err(ConfigError::invalid("nodes", format!("wormhole {} has no valid peer", n.id)));
                }
            }
            if let NodeRole::GrayHole { drop_prob } = n.role {
                if !(0.0..=1.0).contains(&drop_prob) {
                    return Err(ConfigError::invalid("nodes", "gray-hole drop probability outside [0,1]"));
                }
            }
        }
        Ok(Topology { nodes, region, comm_range })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Result<&UavNode, LookupError> {
        self.nodes.get(id.index()).ok_or(LookupError::UnknownNode(id))
    }

    /// Every other node within Euclidean distance `comm_range` of `id`.
    pub fn neighbors(&self, id: NodeId) -> Result<BTreeSet<NodeId>, LookupError> {
        let me = self.node(id)?.position;
        Ok(self
            .nodes
            .iter()
            .filter(|n| n.id != id && n.position.distance(me) <= self.comm_range)
            .map(|n| n.id)
            .collect())
    }

    pub fn in_range(&self, a: NodeId, b: NodeId) -> bool {
        match (self.nodes.get(a.index()), self.nodes.get(b.index())) {
            (Some(x), Some(y)) => x.position.distance(y.position) <= self.comm_range,
            _ => false,
        }
    }
}

/// Places `n` nodes uniformly and independently in `region`: a homogeneous Poisson
/// point process conditioned on its count. All nodes start as `Normal`.
pub fn ppp_deploy<R: Rng + ?Sized>(n: usize, region: Region, rng: &mut R) -> Result<Topology, ConfigError> {
    if n == 0 {
        return Err(ConfigError::invalid("n_uavs", "must be at least 1"));
    }
    region.validate()?;
    let nodes = (0..n)
        .map(|i| {
            let p = Vec3::new(
                rng.random_range(region.min.x..=region.max.x),
                rng.random_range(region.min.y..=region.max.y),
                rng.random_range(region.min.z..=region.max.z),
            );
            UavNode::new(NodeId::from(i), p, NodeRole::Normal, DEFAULT_TX_POWER_DBM)
        })
        .collect();
    Topology::new(nodes, region, DEFAULT_COMM_RANGE)
}

/// Log-distance path loss: `SSI = P_tx - 10·η·log10(d / d0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathLoss {
    pub exponent: f64,
    pub reference_distance: f64,
}

impl Default for PathLoss {
    fn default() -> Self {
        PathLoss { exponent: 2.0, reference_distance: 1.0 }
    }
}

impl PathLoss {
    /// Received strength in dBm. Distances below the reference are clamped to it.
    pub fn received(&self, tx_power_dbm: f64, distance: f64) -> f64 {
        let d = distance.max(self.reference_distance);
        tx_power_dbm - 10.0 * self.exponent * (d / self.reference_distance).log10()
    }
}

pub fn rx_signal_strength(tx: &UavNode, rx_pos: Vec3, model: &PathLoss) -> f64 {
    model.received(tx.tx_power, tx.position.distance(rx_pos))
}
