//! Network-wide evidence and the shared blacklist built from it.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::audit::AuditReport;
use crate::error::ConfigError;
use crate::net_model::NodeId;
use crate::sim::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvidenceParams {
    /// Audits in which a node must be the lossy forwarder before it is confirmed.
    pub min_drop_hits: u32,
    /// Minimum share of a node's audits that found it lossy.
    pub drop_ratio: f64,
    pub min_ssi_flags: u32,
    /// Minimum share of SSI observations that flagged the node.
    pub ssi_flag_ratio: f64,
    /// How long a Phase-2 suspect stays on the suspect list.
    pub suspect_ttl: f64,
    /// Delay before a confirmation is known network-wide; zero is instantaneous.
    pub gossip_delay: f64,
}

impl Default for EvidenceParams {
    fn default() -> Self {
        EvidenceParams {
            min_drop_hits: 2,
            drop_ratio: 0.5,
            min_ssi_flags: 3,
            ssi_flag_ratio: 0.2,
            suspect_ttl: 10.0,
            gossip_delay: 0.0,
        }
    }
}

impl EvidenceParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.drop_ratio) || !(0.0..=1.0).contains(&self.ssi_flag_ratio) {
            return Err(ConfigError::invalid("security.evidence", "ratios must lie in [0,1]"));
        }
        if self.min_drop_hits == 0 || self.min_ssi_flags == 0 {
            return Err(ConfigError::invalid("security.evidence", "hit counts must be at least 1"));
        }
        if !(self.suspect_ttl >= 0.0 && self.gossip_delay >= 0.0) {
            return Err(ConfigError::invalid("security.evidence", "times must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NodeEvidence {
    pub drop_hits: u32,
    pub clean_hits: u32,
    pub last_p_sb: f64,
    pub ssi_flags: u32,
    pub ssi_obs: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Blacklist {
    params: EvidenceParams,
    evidence: BTreeMap<NodeId, NodeEvidence>,
    /// node → instant the confirmation becomes known everywhere
    confirmed: BTreeMap<NodeId, SimTime>,
    /// node → suspect-list expiry
    suspects: BTreeMap<NodeId, SimTime>,
    protected: BTreeSet<NodeId>,
    pub route_broadcasts: u64,
    pub advisories: u64,
}

impl Blacklist {
    /// `protected` nodes (ground stations) are never suspected or confirmed.
    pub fn new(params: EvidenceParams, protected: BTreeSet<NodeId>) -> Self {
        Blacklist {
            params,
            evidence: BTreeMap::new(),
            confirmed: BTreeMap::new(),
            suspects: BTreeMap::new(),
            protected,
            route_broadcasts: 0,
            advisories: 0,
        }
    }

    pub fn evidence(&self, n: NodeId) -> NodeEvidence {
        self.evidence.get(&n).copied().unwrap_or_default()
    }

    pub fn last_p_sb(&self, n: NodeId) -> f64 {
        self.evidence.get(&n).map_or(0.0, |e| e.last_p_sb)
    }

    pub fn is_blacklisted(&self, n: NodeId, now: SimTime) -> bool {
        self.confirmed.get(&n).is_some_and(|&t| t <= now)
    }

    pub fn is_suspect(&self, n: NodeId, now: SimTime) -> bool {
        self.suspects.get(&n).is_some_and(|&t| t > now)
    }

    /// Every confirmed node, whether or not the news has spread yet.
    pub fn confirmed(&self) -> BTreeSet<NodeId> {
        self.confirmed.keys().copied().collect()
    }

    pub fn add_suspect(&mut self, n: NodeId, now: SimTime) {
        if !self.protected.contains(&n) {
            self.suspects.insert(n, now + self.params.suspect_ttl);
        }
    }

    /// Folds one audit in: the forwarding member of each pair is charged or
    /// cleared, and the report's suspects join the suspect list. Returns nodes
    /// confirmed by this audit.
    pub fn record_audit(&mut self, report: &AuditReport, now: SimTime) -> Vec<NodeId> {
        let mut touched = Vec::new();
        for p in &report.pair_scores {
            if self.protected.contains(&p.mid) {
                continue;
            }
            let e = self.evidence.entry(p.mid).or_default();
            if p.p_sb > report.t_s {
                e.drop_hits += 1;
            } else {
                e.clean_hits += 1;
            }
            e.last_p_sb = p.p_sb;
            touched.push(p.mid);
        }
        for &s in &report.suspects {
            self.add_suspect(s, now);
        }
        self.confirm(touched, now)
    }

    /// One observer's SSI readings of its neighbors for one flood.
    pub fn record_ssi(&mut self, observed: &[NodeId], flagged: &BTreeSet<NodeId>, now: SimTime) -> Vec<NodeId> {
        let mut touched = Vec::new();
        for &n in observed {
            if self.protected.contains(&n) {
                continue;
            }
            let e = self.evidence.entry(n).or_default();
            e.ssi_obs += 1;
            if flagged.contains(&n) {
                e.ssi_flags += 1;
                touched.push(n);
            }
        }
        self.confirm(touched, now)
    }

    fn confirm(&mut self, touched: Vec<NodeId>, now: SimTime) -> Vec<NodeId> {
        let mut newly = Vec::new();
        for n in touched {
            if self.confirmed.contains_key(&n) {
                continue;
            }
            let e = self.evidence(n);
            let audits = e.drop_hits + e.clean_hits;
            let by_drops = e.drop_hits >= self.params.min_drop_hits
                && f64::from(e.drop_hits) >= self.params.drop_ratio * f64::from(audits);
            let by_ssi = e.ssi_flags >= self.params.min_ssi_flags
                && f64::from(e.ssi_flags) >= self.params.ssi_flag_ratio * f64::from(e.ssi_obs);
            if by_drops || by_ssi {
                self.confirmed.insert(n, now + self.params.gossip_delay);
                newly.push(n);
            }
        }
        newly
    }
}
