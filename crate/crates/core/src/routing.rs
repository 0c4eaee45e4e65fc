//! AODV-style message types and the per-hop data-plane decision. The flood and
//! reply machinery itself runs inside [`crate::world`], which owns the clock.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::attacks::{gh_drop_decision, AttackConfig, GhDecision};
use crate::net_model::{NodeId, NodeRole, Topology, Vec3};
use crate::sim::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ControlKind {
    Rreq,
    Rrep,
    Hello,
    HelloAck,
    QueryReq,
    QueryResp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlMsg {
    pub kind: ControlKind,
    pub origin: NodeId,
    pub target: NodeId,
    pub hop_count: u32,
    pub dest_seq: u32,
    /// Nodes that have transmitted this message so far, origin first. For replies
    /// and probes it is the full source→destination route.
    pub path: Vec<NodeId>,
    pub claimed_position: Option<Vec3>,
    pub timestamp: SimTime,
    /// Flood or probe identifier the message belongs to.
    pub correlation: u64,
    /// Weakest per-hop received strength seen so far (replies only).
    pub min_ssi: f64,
    pub tampered: bool,
}

impl ControlMsg {
    pub fn rreq(origin: NodeId, target: NodeId, dest_seq: u32, now: SimTime, flood: u64) -> Self {
        ControlMsg {
            kind: ControlKind::Rreq,
            origin,
            target,
            hop_count: 1,
            dest_seq,
            path: vec![origin],
            claimed_position: None,
            timestamp: now,
            correlation: flood,
            min_ssi: f64::INFINITY,
            tampered: false,
        }
    }

    /// Honest relay of a flooded request: the relay joins the path and the hop
    /// count covers the next transmission.
    pub fn relayed_by(&self, node: NodeId) -> Self {
        let mut m = self.clone();
        m.path.push(node);
        m.hop_count += 1;
        m
    }

    /// The reply a destination sends for one received request copy.
    pub fn reply_to(rreq: &ControlMsg, dest: NodeId, dest_seq: u32) -> Self {
        let mut path = rreq.path.clone();
        path.push(dest);
        ControlMsg {
            kind: ControlKind::Rrep,
            origin: dest,
            target: rreq.origin,
            hop_count: rreq.hop_count,
            dest_seq,
            path,
            claimed_position: None,
            timestamp: rreq.timestamp,
            correlation: rreq.correlation,
            min_ssi: f64::INFINITY,
            tampered: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RouteStatus {
    Candidate,
    Rejected,
    Selected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub path: Vec<NodeId>,
    /// s
    pub rtt: f64,
    /// dBm
    pub min_ssi: f64,
    pub hop_count: u32,
    pub reply_arrival: SimTime,
    pub dest_seq: u32,
    /// Contamination score on the 0..100 scale.
    pub p_m: f64,
    pub status: RouteStatus,
}

impl Route {
    pub fn from_reply(rrep: &ControlMsg, arrival: SimTime) -> Self {
        Route {
            path: rrep.path.clone(),
            rtt: arrival - rrep.timestamp,
            min_ssi: rrep.min_ssi,
            hop_count: rrep.hop_count,
            reply_arrival: arrival,
            dest_seq: rrep.dest_seq,
            p_m: 0.0,
            status: RouteStatus::Candidate,
        }
    }

    pub fn source(&self) -> NodeId {
        self.path[0]
    }

    pub fn destination(&self) -> NodeId {
        *self.path.last().expect("route path is never empty")
    }

    pub fn is_loop_free(&self) -> bool {
        let mut seen: Vec<NodeId> = self.path.clone();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }

    /// Nodes strictly between source and destination.
    pub fn intermediates(&self) -> &[NodeId] {
        if self.path.len() <= 2 {
            &[]
        } else {
            &self.path[1..self.path.len() - 1]
        }
    }

    pub fn links(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.path.windows(2).map(|w| (w[0], w[1]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataPacket {
    pub src: NodeId,
    pub dst: NodeId,
    pub seq: u64,
    pub size: u32,
    pub route: Arc<[NodeId]>,
    pub hop_index: usize,
    pub sent_at: SimTime,
    pub corrupted: bool,
}

impl DataPacket {
    pub fn holder(&self) -> NodeId {
        self.route[self.hop_index]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DropReason {
    LinkBroken,
    Malicious,
    NotOnRoute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardDecision {
    Deliver,
    Forward(NodeId),
    Drop(DropReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HelloOutcome {
    Acked,
    Silent,
}

/// Decode-and-forward at `node`. `rng` is the node's own attack stream; it is
/// only drawn from by nodes whose role randomizes their data plane.
pub fn forward_data<R: Rng + ?Sized>(
    topo: &Topology,
    node: NodeId,
    pkt: &DataPacket,
    attack: &AttackConfig,
    rng: &mut R,
) -> ForwardDecision {
    if pkt.route.get(pkt.hop_index) != Some(&node) {
        return ForwardDecision::Drop(DropReason::NotOnRoute);
    }
    if node == pkt.dst {
        return ForwardDecision::Deliver;
    }
    let Some(&next) = pkt.route.get(pkt.hop_index + 1) else {
        return ForwardDecision::Drop(DropReason::NotOnRoute);
    };
    let role = topo.nodes.get(node.index()).map(|n| n.role).unwrap_or(NodeRole::Normal);
    match role {
        NodeRole::BlackHole => return ForwardDecision::Drop(DropReason::Malicious),
        NodeRole::GrayHole { drop_prob } => {
            if gh_drop_decision(drop_prob, rng) == GhDecision::Drop {
                return ForwardDecision::Drop(DropReason::Malicious);
            }
        }
        NodeRole::Wormhole { peer } if peer == next && attack.wh_tunnel => {
            if rng.random::<f64>() < attack.wh_data_drop {
                return ForwardDecision::Drop(DropReason::Malicious);
            }
            return ForwardDecision::Forward(next);
        }
        _ => {}
    }
    if topo.in_range(node, next) {
        ForwardDecision::Forward(next)
    } else {
        ForwardDecision::Drop(DropReason::LinkBroken)
    }
}

/// Per-transmission latency: fixed hop delay plus uniform jitter; the wormhole
/// tunnel has its own much smaller delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatencyModel {
    /// s
    pub hop: f64,
    /// s, upper bound of the uniform jitter
    pub jitter: f64,
    /// s
    pub tunnel: f64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel { hop: 5e-3, jitter: 1e-3, tunnel: 1e-4 }
    }
}

impl LatencyModel {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.jitter > 0.0 {
            self.hop + rng.random_range(0.0..self.jitter)
        } else {
            self.hop
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net_model::{Region, UavNode};
    use crate::sim::RngRegistry;

    fn chain(roles: &[NodeRole], spacing: f64) -> Topology {
        let nodes = roles
            .iter()
            .enumerate()
            .map(|(i, &r)| UavNode::new(NodeId::from(i), Vec3::new(spacing * i as f64, 0.0, 0.0), r, 20.0))
            .collect();
        Topology::new(nodes, Region::sized(10_000.0, 10.0, 10.0), 300.0).unwrap()
    }

    fn packet(route: &[usize], hop_index: usize) -> DataPacket {
        let route: Arc<[NodeId]> = route.iter().map(|&i| NodeId::from(i)).collect();
        DataPacket {
            src: route[0],
            dst: *route.last().unwrap(),
            seq: 0,
            size: 512,
            route,
            hop_index,
            sent_at: 0.0,
            corrupted: false,
        }
    }

    #[test]
    fn honest_forward_and_deliver() {
        let t = chain(&[NodeRole::Normal; 3], 200.0);
        let cfg = AttackConfig::default();
        let mut rng = RngRegistry::new(1).stream("x");
        assert_eq!(
            forward_data(&t, NodeId(1), &packet(&[0, 1, 2], 1), &cfg, &mut rng),
            ForwardDecision::Forward(NodeId(2))
        );
        assert_eq!(forward_data(&t, NodeId(2), &packet(&[0, 1, 2], 2), &cfg, &mut rng), ForwardDecision::Deliver);
        assert_eq!(
            forward_data(&t, NodeId(0), &packet(&[0, 2], 0), &cfg, &mut rng),
            ForwardDecision::Drop(DropReason::LinkBroken)
        );
        assert_eq!(
            forward_data(&t, NodeId(2), &packet(&[0, 1, 2], 1), &cfg, &mut rng),
            ForwardDecision::Drop(DropReason::NotOnRoute)
        );
    }

    #[test]
    fn black_hole_always_drops() {
        let t = chain(&[NodeRole::Normal, NodeRole::BlackHole, NodeRole::Normal], 200.0);
        let cfg = AttackConfig::default();
        let mut rng = RngRegistry::new(1).stream("x");
        for _ in 0..100 {
            assert_eq!(
                forward_data(&t, NodeId(1), &packet(&[0, 1, 2], 1), &cfg, &mut rng),
                ForwardDecision::Drop(DropReason::Malicious)
            );
        }
    }

    #[test]
    fn gray_hole_drop_fraction() {
        let t = chain(&[NodeRole::Normal, NodeRole::GrayHole { drop_prob: 0.5 }, NodeRole::Normal], 200.0);
        let cfg = AttackConfig::default();
        let mut rng = RngRegistry::new(5).stream("gh-drop/node1");
        let drops = (0..10_000)
            .filter(|_| {
                forward_data(&t, NodeId(1), &packet(&[0, 1, 2], 1), &cfg, &mut rng)
                    == ForwardDecision::Drop(DropReason::Malicious)
            })
            .count();
        let frac = drops as f64 / 10_000.0;
        assert!((frac - 0.5).abs() < 0.02, "drop fraction {frac}");
    }

    #[test]
    fn wormhole_tunnel_ignores_range() {
        let roles = [NodeRole::Normal, NodeRole::Wormhole { peer: NodeId(2) }, NodeRole::Wormhole { peer: NodeId(1) }];
        let t = chain(&roles, 1000.0);
        let mut rng = RngRegistry::new(1).stream("x");
        let keep = AttackConfig { wh_data_drop: 0.0, ..AttackConfig::default() };
        assert_eq!(
            forward_data(&t, NodeId(1), &packet(&[0, 1, 2], 1), &keep, &mut rng),
            ForwardDecision::Forward(NodeId(2))
        );
        let drop = AttackConfig::default();
        assert_eq!(
            forward_data(&t, NodeId(1), &packet(&[0, 1, 2], 1), &drop, &mut rng),
            ForwardDecision::Drop(DropReason::Malicious)
        );
    }

    #[test]
    fn relay_and_reply_hop_accounting() {
        let q = ControlMsg::rreq(NodeId(0), NodeId(2), 0, 1.0, 7);
        let q = q.relayed_by(NodeId(1));
        assert_eq!(q.path, vec![NodeId(0), NodeId(1)]);
        assert_eq!(q.hop_count, 2);
        let r = ControlMsg::reply_to(&q, NodeId(2), 3);
        assert_eq!(r.path, vec![NodeId(0), NodeId(1), NodeId(2)]);
        assert_eq!(r.hop_count as usize, r.path.len() - 1);
        let route = Route::from_reply(&r, 1.02);
        assert!(route.is_loop_free());
        assert_eq!(route.intermediates(), &[NodeId(1)]);
        assert!((route.rtt - 0.02).abs() < 1e-12);
    }

    #[test]
    fn zero_jitter_latency_is_exact() {
        let m = LatencyModel { jitter: 0.0, ..LatencyModel::default() };
        let mut rng = RngRegistry::new(1).stream("x");
        assert_eq!(m.sample(&mut rng), 5e-3);
        let j = LatencyModel::default();
        for _ in 0..100 {
            let l = j.sample(&mut rng);
            assert!((5e-3..6e-3).contains(&l));
        }
    }
}
