use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::net_model::NodeId;
use crate::routing::Route;

/// Upper end of the tolerated loss fraction.
pub const MAX_SURVEILLANCE_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SurveillanceThreshold(f64);

impl SurveillanceThreshold {
    pub fn new(t_s: f64) -> Result<Self, ConfigError> {
        if (0.0..=MAX_SURVEILLANCE_THRESHOLD).contains(&t_s) {
            Ok(SurveillanceThreshold(t_s))
        } else {
            Err(ConfigError::invalid("security.t_s", format!("{t_s} is outside [0, {MAX_SURVEILLANCE_THRESHOLD}]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Per-directed-link sent-packet counters (SPC) for one route instance, plus the
/// packets each node could not forward because its next link had broken.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PacketCounters {
    sent: BTreeMap<(NodeId, NodeId), u64>,
    undeliverable: BTreeMap<NodeId, u64>,
}

impl PacketCounters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_sent(&mut self, from: NodeId, to: NodeId) {
        *self.sent.entry((from, to)).or_default() += 1;
    }

    pub fn record_undeliverable(&mut self, at: NodeId) {
        *self.undeliverable.entry(at).or_default() += 1;
    }

    pub fn set_sent(&mut self, from: NodeId, to: NodeId, n: u64) {
        self.sent.insert((from, to), n);
    }

    pub fn sent(&self, from: NodeId, to: NodeId) -> u64 {
        self.sent.get(&(from, to)).copied().unwrap_or(0)
    }

    pub fn undeliverable(&self, at: NodeId) -> u64 {
        self.undeliverable.get(&at).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub upstream: NodeId,
    pub mid: NodeId,
    pub p_sb: f64,
    /// The mid node never answered its query.
    pub unresponsive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub route: Route,
    pub n_s: u64,
    /// In walk order, from the destination end upstream.
    pub pair_scores: Vec<PairScore>,
    pub suspects: BTreeSet<NodeId>,
    pub t_s: f64,
}

impl AuditReport {
    /// The suspect set this audit would have produced at another threshold.
    pub fn suspects_at(&self, t_s: f64) -> BTreeSet<NodeId> {
        suspects_from(&self.route, &self.pair_scores, t_s)
    }
}

fn suspects_from(route: &Route, pairs: &[PairScore], t_s: f64) -> BTreeSet<NodeId> {
    let (src, dst) = (route.source(), route.destination());
    pairs.iter().filter(|p| p.p_sb > t_s).flat_map(|p| [p.upstream, p.mid]).filter(|&n| n != src && n != dst).collect()
}

/// Reverse packet-count audit with every node answering.
pub fn phase2_audit(route: &Route, counters: &PacketCounters, t_s: SurveillanceThreshold) -> AuditReport {
    phase2_audit_with(route, counters, t_s, |_| true)
}

/// Reverse packet-count audit. The destination queries nodes two hops apart,
/// walking upstream; each answer carries the queried node's SPC toward its next
/// hop and, relayed by that next hop, the next hop's own SPC. For every
/// forwarding node the loss fraction
/// `(SPC(upstream→mid) − SPC(mid→downstream)) / N_s` is compared strictly
/// against `t_s`, and both members of an offending pair become suspects. A node
/// that does not answer scores the maximal discrepancy 1.
pub fn phase2_audit_with<F>(
    route: &Route,
    counters: &PacketCounters,
    t_s: SurveillanceThreshold,
    responds: F,
) -> AuditReport
where
    F: Fn(NodeId) -> bool,
{
    let path = &route.path;
    let hops = path.len().saturating_sub(1);
    let n_s = if hops > 0 { counters.sent(path[0], path[1]) } else { 0 };
    let mut report =
        AuditReport { route: route.clone(), n_s, pair_scores: Vec::new(), suspects: BTreeSet::new(), t_s: t_s.value() };
    if hops < 2 || n_s == 0 {
        return report;
    }

    // reported[j] = (SPC(j→j+1), undeliverable at j) as answered by node j
    let mut reported: Vec<Option<(u64, u64)>> = vec![None; hops];
    let answer = |j: usize| -> Option<(u64, u64)> {
        (j == 0 || responds(path[j])).then(|| (counters.sent(path[j], path[j + 1]), counters.undeliverable(path[j])))
    };
    reported[0] = answer(0);
    let mut q = hops as isize - 2;
    while q >= 0 {
        let qi = q as usize;
        reported[qi] = answer(qi);
        if qi + 1 < hops {
            reported[qi + 1] = answer(qi + 1);
        }
        q -= 2;
    }

    for i in (1..hops).rev() {
        let score = match (reported[i - 1], reported[i]) {
            (_, None) => Some((1.0, true)),
            (None, Some(_)) => None,
            (Some((inbound, _)), Some((outbound, lost))) => {
                let diff = inbound as f64 - outbound as f64 - lost as f64;
                Some((diff / n_s as f64, false))
            }
        };
        if let Some((p_sb, unresponsive)) = score {
            report.pair_scores.push(PairScore { upstream: path[i - 1], mid: path[i], p_sb, unresponsive });
        }
    }
    report.suspects = suspects_from(route, &report.pair_scores, t_s.value());
    report
}
