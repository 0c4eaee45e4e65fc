//! The event loop: mobility, AODV-style discovery, the data plane, attacker
//! behavior and, when enabled, route vetting and auditing.

mod events;
mod params;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::attacks::{
    assign_roles, bh_forge_rrep, fid_corrupts_data, fid_falsify, gh_drop_decision, wh_tunnel_relay, GhDecision,
    GroundTruth,
};
use crate::error::ConfigError;
use crate::immune::{Classification, FeatureVector, ImmuneAgent, SafetyMemory};
use crate::metrics::{self, classify_and_count, compute_rates, ConfusionCounts, Rates, Verdict};
use crate::mobility::{st_sample_maneuver, st_step, velocity, StState};
use crate::net_model::{ppp_deploy, NodeId, NodeRole, Region, Topology, UavNode};
use crate::routing::{
    forward_data, ControlKind, ControlMsg, DataPacket, DropReason, ForwardDecision, HelloOutcome, Route,
};
use crate::security::{
    path_label, phase1_probe, phase2_audit_with, select_immune_route, ssi_filter, AuditReport, Blacklist, Candidate,
    DecisionRecord, Defense, PacketCounters, RejectReason, PROBES_PER_ROUTE,
};

use crate::sim::{RngRegistry, Scheduler, SimRng, SimTime};

use events::{ControlDelivery, DataDelivery, Ev, ProbeMsg};
pub use params::{default_ground_stations, RadioParams, Recording, TrafficParams, WorldParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowReport {
    pub src: NodeId,
    pub dst: NodeId,
    pub sent: u64,
    pub received: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdrSample {
    pub time: SimTime,
    pub sent: u64,
    pub received: u64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub seed: u64,
    pub truth: GroundTruth,
    pub confirmed: BTreeSet<NodeId>,
    pub confusion: ConfusionCounts,
    pub rates: Rates,
    pub flows: Vec<FlowReport>,
    pub sent: u64,
    pub received: u64,
    /// Mean of per-flow delivery ratios, percent.
    pub pdr_mean: Option<f64>,
    /// `(1/n)·ΣX/ΣY·100` over the `n` flows.
    pub pdr_eq8: Option<f64>,
    pub pdr_series: Vec<PdrSample>,
    pub trace_hash: u64,
    pub events: u64,
    pub discoveries: u64,
    pub audits: Vec<AuditReport>,
    pub decisions: Vec<DecisionRecord>,
    pub route_broadcasts: u64,
    pub advisories: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Link {
    Radio,
    Tunnel,
}

#[derive(Debug)]
struct Flow {
    src: NodeId,
    dst: NodeId,
    sent: u64,
    received: u64,
    next_seq: u64,
    buffer: VecDeque<u64>,
    active: Option<u64>,
    discovering: Option<u64>,
    retry_pending: bool,
    known_dest_seq: u32,
}

#[derive(Debug)]
struct Discovery {
    src: NodeId,
    flow: Option<usize>,
    in_flight: u64,
    closed: bool,
    resolved: bool,
    replies: Vec<Route>,
    /// observer → (transmitter, residual dB) for each request copy heard
    observations: BTreeMap<NodeId, Vec<(NodeId, f64)>>,
    ssi_flagged: BTreeSet<NodeId>,
    vetting: Vec<(u64, bool)>,
}

#[derive(Debug)]
struct ProbeSession {
    route: Route,
    sent_at: Vec<SimTime>,
    acked: Vec<Option<SimTime>>,
    hello: PacketCounters,
    ack: PacketCounters,
    timeout: f64,
}

#[derive(Debug)]
struct Instance {
    route: Route,
    path: Arc<[NodeId]>,
    counters: PacketCounters,
}

pub struct World {
    p: WorldParams,
    seed: u64,
    sched: Scheduler<Ev>,
    topo: Topology,
    truth: GroundTruth,
    mob: Vec<StState>,
    rng_mob: Vec<SimRng>,
    rng_lat: Vec<SimRng>,
    rng_atk: Vec<SimRng>,
    rng_shadow: Vec<SimRng>,
    rng_immune: SimRng,
    shadow: Option<Normal<f64>>,
    neighbors: Vec<Vec<NodeId>>,
    neighbors_dirty: bool,
    seen_flood: Vec<BTreeSet<u64>>,
    own_seq: Vec<u32>,
    last_replied: Vec<Option<u64>>,
    max_seq_seen: Vec<u32>,
    flows: Vec<Flow>,
    discoveries: BTreeMap<u64, Discovery>,
    next_disc: u64,
    probes: BTreeMap<u64, ProbeSession>,
    next_session: u64,
    instances: BTreeMap<u64, Instance>,
    next_instance: u64,
    blacklist: Blacklist,
    memory: SafetyMemory,
    agents: BTreeMap<NodeId, ImmuneAgent>,
    audits: Vec<AuditReport>,
    decisions: Vec<DecisionRecord>,
    pdr_series: Vec<PdrSample>,
}

impl World {
    /// Deploys `n_uavs` UAVs uniformly in the altitude band, appends the ground
    /// stations, and draws the malicious roles.
    pub fn new(params: WorldParams, seed: u64) -> Result<Self, ConfigError> {
        params.validate()?;
        let reg = RngRegistry::new(seed);
        let roles = assign_roles(params.n_uavs, &params.attack, &mut reg.stream("attack-select"));
        Self::with_roles(params, seed, roles)
    }

    /// Like [`World::new`] with the UAV roles given instead of drawn.
    pub fn with_roles(params: WorldParams, seed: u64, roles: Vec<NodeRole>) -> Result<Self, ConfigError> {
        params.validate()?;
        if roles.len() != params.n_uavs {
            return Err(ConfigError::invalid("roles", "one role per UAV is required"));
        }
        let reg = RngRegistry::new(seed);
        let r = params.region;
        let band = Region::new(
            crate::Vec3::new(r.min.x, r.min.y, params.altitude_band.0),
            crate::Vec3::new(r.max.x, r.max.y, params.altitude_band.1),
        );
        let deployed = ppp_deploy(params.n_uavs, band, &mut reg.stream("deploy"))?;
        let mut nodes: Vec<UavNode> = deployed
            .nodes
            .into_iter()
            .zip(roles)
            .map(|(n, role)| UavNode::new(n.id, n.position, role, params.radio.tx_power_dbm))
            .collect();
        for (k, &g) in params.ground_stations.iter().enumerate() {
            let id = NodeId::from(params.n_uavs + k);
            nodes.push(UavNode::new(id, g, NodeRole::GroundStation, params.radio.tx_power_dbm));
        }
        let topo = Topology::new(nodes, params.region, params.radio.comm_range)?;
        Ok(Self::build(params, seed, topo, &reg))
    }

    /// A world over a hand-built topology. Ground stations are the nodes with
    /// that role, in id order; flows run between them as in generated worlds.
    pub fn from_topology(mut params: WorldParams, seed: u64, topo: Topology) -> Result<Self, ConfigError> {
        params.region = topo.region;
        params.radio.comm_range = topo.comm_range;
        params.n_uavs = topo.nodes.iter().filter(|n| !n.role.is_ground_station()).count();
        params.ground_stations = topo.nodes.iter().filter(|n| n.role.is_ground_station()).map(|n| n.position).collect();
        if params.n_uavs == 0 {
            params.n_uavs = 1;
        }
        params.validate()?;
        let reg = RngRegistry::new(seed);
        Ok(Self::build(params, seed, topo, &reg))
    }

    fn build(p: WorldParams, seed: u64, topo: Topology, reg: &RngRegistry) -> Self {
        let n = topo.len();
        let truth = GroundTruth::from_roles(&topo.nodes.iter().map(|u| u.role).collect::<Vec<_>>());
        let mut rng_mob: Vec<SimRng> = (0..n).map(|i| reg.node_stream("mobility", i)).collect();
        let mut topo = topo;
        let mut mob = Vec::with_capacity(n);
        for (i, node) in topo.nodes.iter_mut().enumerate() {
            let heading = rng_mob[i].random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let mut st = StState { heading, turn_curvature: 0.0, maneuver_end: 0.0 };
            if !node.role.is_ground_station() && p.mobility.speed > 0.0 {
                st.apply(st_sample_maneuver(&mut rng_mob[i], &p.mobility, 0.0));
                node.velocity = velocity(heading, p.mobility.speed);
            }
            mob.push(st);
        }
        let protected: BTreeSet<NodeId> =
            topo.nodes.iter().filter(|u| u.role.is_ground_station()).map(|u| u.id).collect();
        let stations: Vec<NodeId> = protected.iter().copied().collect();
        let mut flows = Vec::new();
        for k in 0..p.traffic.flows {
            let g = stations.len();
            let j = k / 2;
            let (mut a, mut b) = (stations[(2 * j) % g], stations[(2 * j + 1) % g]);
            if k % 2 == 1 {
                std::mem::swap(&mut a, &mut b);
            }
            flows.push(Flow {
                src: a,
                dst: b,
                sent: 0,
                received: 0,
                next_seq: 0,
                buffer: VecDeque::new(),
                active: None,
                discovering: None,
                retry_pending: false,
                known_dest_seq: 0,
            });
        }
        let shadow = (p.radio.shadowing_db > 0.0).then(|| Normal::new(0.0, p.radio.shadowing_db).expect("validated"));
        let mut w = World {
            seed,
            sched: Scheduler::new(),
            truth,
            mob,
            rng_mob,
            rng_lat: (0..n).map(|i| reg.node_stream("latency", i)).collect(),
            rng_atk: (0..n).map(|i| reg.node_stream("attack", i)).collect(),
            rng_shadow: (0..n).map(|i| reg.node_stream("shadow", i)).collect(),
            rng_immune: reg.stream("immune"),
            shadow,
            neighbors: vec![Vec::new(); n],
            neighbors_dirty: true,
            seen_flood: vec![BTreeSet::new(); n],
            own_seq: vec![0; n],
            last_replied: vec![None; n],
            max_seq_seen: vec![0; n],
            flows,
            discoveries: BTreeMap::new(),
            next_disc: 0,
            probes: BTreeMap::new(),
            next_session: 0,
            instances: BTreeMap::new(),
            next_instance: 0,
            blacklist: Blacklist::new(p.security.evidence, protected),
            memory: SafetyMemory::new(p.immune.memory_ttl),
            agents: BTreeMap::new(),
            audits: Vec::new(),
            decisions: Vec::new(),
            pdr_series: Vec::new(),
            topo,
            p,
        };
        if w.p.mobility.speed > 0.0 {
            w.at(w.p.mobility_tick, Ev::MobilityTick);
        }
        let gap = 1.0 / w.p.traffic.rate / w.flows.len().max(1) as f64;
        for k in 0..w.flows.len() {
            let start = w.p.traffic.start + k as f64 * gap;
            w.at(start, Ev::Traffic { flow: k });
            w.at(start + w.p.traffic.epoch, Ev::EpochBoundary { flow: k });
        }
        w.at(w.p.metric_interval, Ev::MetricSample);
        w
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn truth(&self) -> &GroundTruth {
        &self.truth
    }

    pub fn params(&self) -> &WorldParams {
        &self.p
    }

    pub fn now(&self) -> SimTime {
        self.sched.now()
    }

    pub fn trace_hash(&self) -> u64 {
        self.sched.trace_hash()
    }

    pub fn blacklist(&self) -> &Blacklist {
        &self.blacklist
    }

    fn at(&mut self, delay: f64, ev: Ev) {
        self.sched.schedule_in(delay, ev).expect("delays are finite and non-negative");
    }

    fn role(&self, n: NodeId) -> NodeRole {
        self.topo.nodes[n.index()].role
    }

    fn vetting(&self) -> bool {
        self.p.defense == Defense::SuasHis
    }

    /// Honest receivers discard traffic from nodes known to be blacklisted.
    fn ignores(&self, to: NodeId, from: NodeId) -> bool {
        self.vetting() && !self.role(to).is_malicious() && self.blacklist.is_blacklisted(from, self.now())
    }

    fn link(&self, u: NodeId, v: NodeId) -> Option<Link> {
        match self.role(u) {
            NodeRole::Wormhole { peer } if peer == v && self.p.attack.wh_tunnel => Some(Link::Tunnel),
            _ if self.topo.in_range(u, v) => Some(Link::Radio),
            _ => None,
        }
    }

    /// Whether a source would still consider the hop alive: broken links stay
    /// invisible when the upstream node does not report them.
    fn link_usable(&self, u: NodeId, v: NodeId) -> bool {
        self.link(u, v).is_some() || !self.role(u).reports_link_breaks()
    }

    fn route_usable(&self, path: &[NodeId]) -> bool {
        let now = self.now();
        path.windows(2).all(|w| self.link_usable(w[0], w[1]))
            && !(self.vetting() && path.iter().any(|&n| self.blacklist.is_blacklisted(n, now)))
    }

    fn tx_power(&self, u: NodeId) -> f64 {
        self.p.attack.effective_tx_power(&self.role(u), self.p.radio.tx_power_dbm)
    }

    fn distance(&self, u: NodeId, v: NodeId) -> f64 {
        self.topo.nodes[u.index()].position.distance(self.topo.nodes[v.index()].position)
    }

    fn delay(&mut self, u: NodeId, link: Link) -> f64 {
        match link {
            Link::Tunnel => self.p.radio.latency.tunnel,
            Link::Radio => self.p.radio.latency.sample(&mut self.rng_lat[u.index()]),
        }
    }

    /// Received strength at `v`, dBm. Tunnel exits re-emit at full power.
    fn rx_ssi(&mut self, u: NodeId, v: NodeId, link: Link) -> f64 {
        let tx = self.tx_power(u);
        match link {
            Link::Tunnel => tx,
            Link::Radio => {
                let base = self.p.radio.path_loss.received(tx, self.distance(u, v));
                let noise = match &self.shadow {
                    Some(d) => d.sample(&mut self.rng_shadow[v.index()]),
                    None => 0.0,
                };
                base + noise
            }
        }
    }

    fn refresh_neighbors(&mut self) {
        if !self.neighbors_dirty {
            return;
        }
        let range = self.topo.comm_range;
        for list in &mut self.neighbors {
            list.clear();
        }
        let nodes = &self.topo.nodes;
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                if nodes[i].position.distance(nodes[j].position) <= range {
                    self.neighbors[i].push(nodes[j].id);
                    self.neighbors[j].push(nodes[i].id);
                }
            }
        }
        self.neighbors_dirty = false;
    }

    /// Runs to the configured horizon and summarizes.
    pub fn run(mut self) -> RunReport {
        let end = self.p.sim_time;
        while let Some(ev) = self.sched.pop_until(end) {
            self.handle(ev.kind);
        }
        self.sched.advance_to(end);
        self.report()
    }

    fn handle(&mut self, ev: Ev) {
        match ev {
            Ev::MobilityTick => self.on_mobility_tick(),
            Ev::Control(d) => self.on_control(*d),
            Ev::Probe(m) => self.on_probe(m),
            Ev::Data(d) => self.on_data(*d),
            Ev::HelloLaunch { session, probe } => self.launch_hello(session, probe),
            Ev::ProbeTimeout { disc } => self.finish_vetting(disc),
            Ev::DiscoveryDeadline { disc } => {
                if self.discoveries.get(&disc).is_some_and(|d| !d.closed) {
                    self.close_discovery(disc);
                }
            }
            Ev::DiscoveryRetry { flow } => {
                self.flows[flow].retry_pending = false;
                self.try_send(flow);
            }
            Ev::AuditStep { instance } => self.audit_instance(instance),
            Ev::Traffic { flow } => self.on_traffic(flow),
            Ev::EpochBoundary { flow } => {
                self.retire(flow);
                let (s, d) = (self.flows[flow].src, self.flows[flow].dst);
                self.memory.forget(s, d);
                self.at(self.p.traffic.epoch, Ev::EpochBoundary { flow });
                self.try_send(flow);
            }
            Ev::MetricSample => {
                let sent = self.flows.iter().map(|f| f.sent).sum();
                let received = self.flows.iter().map(|f| f.received).sum();
                self.pdr_series.push(PdrSample { time: self.now(), sent, received });
                self.at(self.p.metric_interval, Ev::MetricSample);
            }
        }
    }

    fn on_mobility_tick(&mut self) {
        let now = self.now();
        let dt = self.p.mobility_tick;
        let speed = self.p.mobility.speed;
        for i in 0..self.topo.nodes.len() {
            if self.topo.nodes[i].role.is_ground_station() {
                continue;
            }
            let st = &mut self.mob[i];
            if now >= st.maneuver_end {
                st.apply(st_sample_maneuver(&mut self.rng_mob[i], &self.p.mobility, now));
            }
            let (pos, heading) = st_step(self.topo.nodes[i].position, st, speed, dt, &self.topo.region);
            st.heading = heading;
            self.topo.nodes[i].position = pos;
            self.topo.nodes[i].velocity = velocity(heading, speed);
        }
        self.neighbors_dirty = true;
        self.at(dt, Ev::MobilityTick);
    }

    // ---- discovery ----

    fn start_discovery(&mut self, src: NodeId, dst: NodeId, flow: Option<usize>, window: f64) -> u64 {
        let id = self.next_disc;
        self.next_disc += 1;
        self.seen_flood[src.index()].insert(id);
        self.discoveries.insert(
            id,
            Discovery {
                src,
                flow,
                in_flight: 0,
                closed: false,
                resolved: false,
                replies: Vec::new(),
                observations: BTreeMap::new(),
                ssi_flagged: BTreeSet::new(),
                vetting: Vec::new(),
            },
        );
        let seq = flow.map_or(0, |f| self.flows[f].known_dest_seq);
        let msg = ControlMsg::rreq(src, dst, seq, self.now(), id);
        self.broadcast(src, msg);
        self.at(window, Ev::DiscoveryDeadline { disc: id });
        self.check_quiescence(id);
        id
    }

    fn broadcast(&mut self, u: NodeId, msg: ControlMsg) {
        self.refresh_neighbors();
        let targets = self.neighbors[u.index()].clone();
        if targets.is_empty() {
            return;
        }
        let delay = self.delay(u, Link::Radio);
        for v in targets {
            let ssi = self.rx_ssi(u, v, Link::Radio);
            self.send_control(u, v, ssi, false, delay, msg.clone());
        }
    }

    fn send_control(&mut self, from: NodeId, to: NodeId, ssi: f64, tunneled: bool, delay: f64, msg: ControlMsg) {
        if let Some(d) = self.discoveries.get_mut(&msg.correlation) {
            d.in_flight += 1;
        }
        self.at(delay, Ev::Control(Box::new(ControlDelivery { to, from, ssi, tunneled, msg })));
    }

    fn unicast(&mut self, u: NodeId, v: NodeId, mut msg: ControlMsg) {
        let Some(link) = self.link(u, v) else { return };
        let delay = self.delay(u, link);
        let ssi = self.rx_ssi(u, v, link);
        msg.min_ssi = msg.min_ssi.min(ssi);
        self.send_control(u, v, ssi, link == Link::Tunnel, delay, msg);
    }

    fn on_control(&mut self, d: ControlDelivery) {
        let disc = d.msg.correlation;
        if let Some(x) = self.discoveries.get_mut(&disc) {
            x.in_flight -= 1;
        }
        if !self.ignores(d.to, d.from) {
            match d.msg.kind {
                ControlKind::Rreq => self.on_rreq(d),
                ControlKind::Rrep => self.on_rrep(d),
                _ => {}
            }
        }
        self.check_quiescence(disc);
    }

    fn on_rreq(&mut self, d: ControlDelivery) {
        let node = d.to;
        let role = self.role(node);
        let disc = d.msg.correlation;
        let ms = &mut self.max_seq_seen[node.index()];
        *ms = (*ms).max(d.msg.dest_seq);
        if !role.is_malicious() && !d.tunneled {
            let predicted = self.p.radio.path_loss.received(self.p.radio.tx_power_dbm, self.distance(d.from, node));
            if let Some(x) = self.discoveries.get_mut(&disc) {
                if !x.closed {
                    x.observations.entry(node).or_default().push((d.from, d.ssi - predicted));
                }
            }
        }
        if node == d.msg.target {
            if role.is_malicious() {
                return;
            }
            if self.last_replied[node.index()] != Some(disc) {
                self.last_replied[node.index()] = Some(disc);
                let s = &mut self.own_seq[node.index()];
                *s = (*s).max(d.msg.dest_seq) + 1;
            }
            let reply = ControlMsg::reply_to(&d.msg, node, self.own_seq[node.index()]);
            self.unicast(node, d.from, reply);
            return;
        }
        if !self.seen_flood[node.index()].insert(disc) {
            return;
        }
        match role {
            NodeRole::BlackHole => {
                let forged = bh_forge_rrep(node, &d.msg, self.max_seq_seen[node.index()]);
                self.unicast(node, d.from, forged);
            }
            NodeRole::Wormhole { peer } => {
                if self.p.attack.wh_tunnel && !d.tunneled {
                    let t = wh_tunnel_relay(node, &d.msg);
                    let ssi = self.rx_ssi(node, peer, Link::Tunnel);
                    self.send_control(node, peer, ssi, true, self.p.radio.latency.tunnel, t);
                }
                self.broadcast(node, d.msg.relayed_by(node));
            }
            NodeRole::Fid => {
                let pos = self.topo.nodes[node.index()].position;
                let m = fid_falsify(pos, &d.msg.relayed_by(node), &self.p.attack, &mut self.rng_atk[node.index()]);
                self.broadcast(node, m);
            }
            _ => self.broadcast(node, d.msg.relayed_by(node)),
        }
    }

    fn on_rrep(&mut self, d: ControlDelivery) {
        let node = d.to;
        let Some(idx) = d.msg.path.iter().position(|&x| x == node) else { return };
        let ms = &mut self.max_seq_seen[node.index()];
        *ms = (*ms).max(d.msg.dest_seq);
        if idx == 0 {
            self.collect_reply(d.msg);
            return;
        }
        let next = d.msg.path[idx - 1];
        match self.role(node) {
            NodeRole::BlackHole => {}
            NodeRole::Fid => {
                let pos = self.topo.nodes[node.index()].position;
                let m = fid_falsify(pos, &d.msg, &self.p.attack, &mut self.rng_atk[node.index()]);
                self.unicast(node, next, m);
            }
            _ => self.unicast(node, next, d.msg),
        }
    }

    fn collect_reply(&mut self, msg: ControlMsg) {
        let now = self.now();
        let route = Route::from_reply(&msg, now);
        let vetting = self.vetting();
        let Some(x) = self.discoveries.get_mut(&msg.correlation) else { return };
        if x.closed || !route.is_loop_free() || x.replies.iter().any(|r| r.path == route.path) {
            return;
        }
        x.replies.push(route.clone());
        let Some(f) = x.flow else { return };
        let take_first = !vetting && !x.resolved;
        if take_first {
            x.resolved = true;
        }
        let k = &mut self.flows[f].known_dest_seq;
        *k = (*k).max(msg.dest_seq);
        if take_first {
            self.flows[f].discovering = None;
            self.install(f, route);
            self.try_send(f);
        }
    }

    fn check_quiescence(&mut self, disc: u64) {
        if self.discoveries.get(&disc).is_some_and(|d| !d.closed && d.in_flight == 0) {
            self.close_discovery(disc);
        }
    }

    fn close_discovery(&mut self, id: u64) {
        let now = self.now();
        let delta = self.p.security.ssi_delta;
        let vetting = self.vetting();
        let Some(x) = self.discoveries.get_mut(&id) else { return };
        x.closed = true;
        let observations = std::mem::take(&mut x.observations);
        if vetting {
            let mut flagged_all = BTreeSet::new();
            for obs in observations.values() {
                let flagged = ssi_filter(obs, delta);
                let ids: Vec<NodeId> = obs.iter().map(|o| o.0).collect();
                self.blacklist.record_ssi(&ids, &flagged, now);
                flagged_all.extend(flagged);
            }
            if let Some(x) = self.discoveries.get_mut(&id) {
                x.ssi_flagged = flagged_all;
            }
        }
        let x = &self.discoveries[&id];
        let Some(f) = x.flow else { return };
        if x.resolved {
            self.discoveries.remove(&id);
        } else if x.replies.is_empty() || !vetting {
            self.discoveries.remove(&id);
            self.retry(f);
        } else {
            self.start_vetting(id);
        }
    }

    fn retry(&mut self, f: usize) {
        self.flows[f].discovering = None;
        if !self.flows[f].retry_pending {
            self.flows[f].retry_pending = true;
            self.at(self.p.traffic.retry_backoff, Ev::DiscoveryRetry { flow: f });
        }
    }

    // ---- probing ----

    fn new_session(&mut self, route: Route, probes: usize) -> u64 {
        let s = &self.p.security;
        let timeout = (s.probe_timeout_factor * route.rtt).max(s.min_probe_timeout);
        let id = self.next_session;
        self.next_session += 1;
        self.probes.insert(
            id,
            ProbeSession {
                route,
                sent_at: vec![f64::NAN; probes],
                acked: vec![None; probes],
                hello: PacketCounters::new(),
                ack: PacketCounters::new(),
                timeout,
            },
        );
        id
    }

    fn launch_hello(&mut self, session: u64, probe: u8) {
        let now = self.now();
        let Some(s) = self.probes.get_mut(&session) else { return };
        s.sent_at[probe as usize] = now;
        self.transmit_probe(session, probe, false, 0);
    }

    fn transmit_probe(&mut self, session: u64, probe: u8, ack: bool, from_idx: usize) {
        let Some(s) = self.probes.get(&session) else { return };
        let to_idx = if ack { from_idx - 1 } else { from_idx + 1 };
        let (u, v) = (s.route.path[from_idx], s.route.path[to_idx]);
        let link = self.link(u, v);
        let delay = link.map(|l| self.delay(u, l));
        let s = self.probes.get_mut(&session).expect("checked above");
        let ctr = if ack { &mut s.ack } else { &mut s.hello };
        match delay {
            None => ctr.record_undeliverable(u),
            Some(delay) => {
                ctr.record_sent(u, v);
                let m = ProbeMsg { session, probe, ack, hop: to_idx as u16, to: v, from: u };
                self.at(delay, Ev::Probe(m));
            }
        }
    }

    /// Probes ride the data plane, so attackers treat them like data.
    fn drops_as_data(&mut self, node: NodeId, next: NodeId) -> bool {
        let rng = &mut self.rng_atk[node.index()];
        match self.topo.nodes[node.index()].role {
            NodeRole::BlackHole => true,
            NodeRole::GrayHole { drop_prob } => gh_drop_decision(drop_prob, rng) == GhDecision::Drop,
            NodeRole::Wormhole { peer } if peer == next && self.p.attack.wh_tunnel => {
                rng.random::<f64>() < self.p.attack.wh_data_drop
            }
            _ => false,
        }
    }

    fn on_probe(&mut self, m: ProbeMsg) {
        if self.ignores(m.to, m.from) {
            return;
        }
        let now = self.now();
        let Some(s) = self.probes.get_mut(&m.session) else { return };
        let idx = m.hop as usize;
        let last = s.route.path.len() - 1;
        if m.ack && idx == 0 {
            let slot = &mut s.acked[m.probe as usize];
            if slot.is_none() {
                *slot = Some(now);
            }
            return;
        }
        if !m.ack && idx == last {
            self.transmit_probe(m.session, m.probe, true, idx);
            return;
        }
        let next = if m.ack { s.route.path[idx - 1] } else { s.route.path[idx + 1] };
        if !self.drops_as_data(m.to, next) {
            self.transmit_probe(m.session, m.probe, m.ack, idx);
        }
    }

    fn outcome(s: &ProbeSession, k: usize) -> HelloOutcome {
        match s.acked[k] {
            Some(t) if t - s.sent_at[k] <= s.timeout => HelloOutcome::Acked,
            _ => HelloOutcome::Silent,
        }
    }

    /// Mean round trip of the answered probes, or the timeout if none came back.
    fn measured_rtt(s: &ProbeSession) -> f64 {
        let rtts: Vec<f64> = (0..s.acked.len())
            .filter(|&k| Self::outcome(s, k) == HelloOutcome::Acked)
            .map(|k| s.acked[k].unwrap_or(0.0) - s.sent_at[k])
            .collect();
        if rtts.is_empty() {
            s.timeout
        } else {
            rtts.iter().sum::<f64>() / rtts.len() as f64
        }
    }

    fn run_session(&mut self, route: &Route) -> ProbeSession {
        let id = self.new_session(route.clone(), 1);
        let deadline = self.now() + self.probes[&id].timeout;
        self.at(0.0, Ev::HelloLaunch { session: id, probe: 0 });
        while let Some(ev) = self.sched.pop_until(deadline) {
            self.handle(ev.kind);
            if self.probes[&id].acked[0].is_some() {
                break;
            }
        }
        self.probes.remove(&id).expect("session is only removed here")
    }

    /// Sends one hello along `route` and waits for the acknowledgement or the
    /// timeout `max(factor·rtt, min_probe_timeout)`.
    pub fn send_hello(&mut self, route: &Route) -> HelloOutcome {
        let s = self.run_session(route);
        Self::outcome(&s, 0)
    }

    /// Measured hello round trip, `None` if the probe went unanswered.
    pub fn rtt_probe(&mut self, route: &Route) -> Option<f64> {
        let s = self.run_session(route);
        (Self::outcome(&s, 0) == HelloOutcome::Acked).then(|| Self::measured_rtt(&s))
    }

    /// Floods a request and collects replies until the flood dies out or
    /// `window` elapses.
    pub fn discover_routes(&mut self, src: NodeId, dst: NodeId, window: f64) -> Vec<Route> {
        let id = self.start_discovery(src, dst, None, window);
        while !self.discoveries[&id].closed {
            match self.sched.pop_until(f64::INFINITY) {
                Some(ev) => self.handle(ev.kind),
                None => break,
            }
        }
        self.discoveries.remove(&id).map(|d| d.replies).unwrap_or_default()
    }

    fn features(&self, rtt: f64, ssi: f64, max_rtt: f64, max_ssi: f64, route: &Route) -> FeatureVector {
        let worst = route.intermediates().iter().map(|&n| self.blacklist.last_p_sb(n)).fold(0.0, f64::max);
        let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
        FeatureVector::new(ratio(rtt, max_rtt), ratio(ssi, max_ssi), 1.0 - worst)
    }

    fn ssi_margin(&self, route: &Route) -> f64 {
        (route.min_ssi - self.p.radio.noise_floor_dbm).max(0.0)
    }

    fn start_vetting(&mut self, id: u64) {
        let now = self.now();
        let x = &self.discoveries[&id];
        let src = x.src;
        let replies = x.replies.clone();
        let flagged = x.ssi_flagged.clone();
        let max_rtt = replies.iter().map(|r| r.rtt).fold(0.0, f64::max);
        let max_ssi = replies.iter().map(|r| self.ssi_margin(r)).fold(0.0, f64::max);
        let mut plan = Vec::with_capacity(replies.len());
        let mut longest: f64 = 0.0;
        for r in replies {
            let clean = r.intermediates().iter().all(|&n| {
                !self.blacklist.is_blacklisted(n, now) && !self.blacklist.is_suspect(n, now) && !flagged.contains(&n)
            });
            let fv = self.features(r.rtt, self.ssi_margin(&r), max_rtt, max_ssi, &r);
            let is_self = self.agents.get(&src).is_none_or(|a| a.classify(fv) == Classification::SelfRoute);
            let sid = self.new_session(r, PROBES_PER_ROUTE);
            longest = longest.max(self.probes[&sid].timeout);
            plan.push((sid, clean && is_self));
        }
        let spacing = self.p.security.probe_spacing;
        for &(sid, _) in &plan {
            for k in 0..PROBES_PER_ROUTE {
                self.at(k as f64 * spacing, Ev::HelloLaunch { session: sid, probe: k as u8 });
            }
        }
        let settle = (PROBES_PER_ROUTE - 1) as f64 * spacing + longest + 1e-9;
        self.at(settle, Ev::ProbeTimeout { disc: id });
        self.discoveries.get_mut(&id).expect("present").vetting = plan;
    }

    fn audit(&mut self, route: &Route, counters: &PacketCounters) -> Option<AuditReport> {
        let threshold = self.p.security.threshold();
        let topo = &self.topo;
        let report =
            phase2_audit_with(route, counters, threshold, |n| topo.nodes[n.index()].role != NodeRole::BlackHole);
        if report.n_s == 0 {
            return None;
        }
        self.blacklist.record_audit(&report, self.now());
        if self.p.recording.audits {
            self.audits.push(report.clone());
        }
        Some(report)
    }

    fn finish_vetting(&mut self, id: u64) {
        let now = self.now();
        let Some(x) = self.discoveries.remove(&id) else { return };
        let Some(flow) = x.flow else { return };
        let src = x.src;

        struct Vetted {
            route: Route,
            ledger_traj: Vec<f64>,
            acks: u32,
            rtt: f64,
            suspects: BTreeSet<NodeId>,
            p_sb: Vec<f64>,
        }
        let mut vetted = Vec::with_capacity(x.vetting.len());
        for &(sid, confirmed) in &x.vetting {
            let s = self.probes.remove(&sid).expect("session lives until the deadline");
            let outcomes: Vec<HelloOutcome> = (0..s.acked.len()).map(|k| Self::outcome(&s, k)).collect();
            let ledger = phase1_probe(confirmed, &outcomes);
            let rtt = Self::measured_rtt(&s);
            let mut suspects = BTreeSet::new();
            let mut p_sb = Vec::new();
            if let Some(r) = self.audit(&s.route, &s.hello) {
                suspects.extend(r.suspects.iter().copied());
                p_sb.extend(r.pair_scores.iter().map(|p| p.p_sb));
            }
            let mut back = s.route.clone();
            back.path.reverse();
            if let Some(r) = self.audit(&back, &s.ack) {
                suspects.extend(r.suspects.iter().copied());
            }
            let mut route = s.route;
            route.p_m = ledger.p_m;
            route.rtt = rtt;
            vetted.push(Vetted { route, ledger_traj: ledger.trajectory, acks: ledger.acks, rtt, suspects, p_sb });
        }

        let max_rtt = vetted.iter().map(|v| v.rtt).fold(0.0, f64::max);
        let max_ssi = vetted.iter().map(|v| self.ssi_margin(&v.route)).fold(0.0, f64::max);
        let mut agent = self.agents.remove(&src).unwrap_or_else(|| ImmuneAgent::new(self.p.immune));
        let mut candidates = Vec::with_capacity(vetted.len());
        let mut fvs = Vec::with_capacity(vetted.len());
        for v in &vetted {
            let ssi = self.ssi_margin(&v.route);
            let fv = self.features(v.rtt, ssi, max_rtt, max_ssi, &v.route);
            let mids = v.route.intermediates();
            let verdict = if v.route.path.iter().any(|&n| self.blacklist.is_blacklisted(n, now)) {
                Some(RejectReason::Blacklisted)
            } else if !v.route.path.windows(2).all(|w| self.link_usable(w[0], w[1])) {
                Some(RejectReason::Expired)
            } else if mids.iter().any(|n| v.suspects.contains(n) || self.blacklist.is_suspect(*n, now)) {
                Some(RejectReason::Suspect)
            } else if agent.classify(fv) == Classification::NonSelfRoute {
                Some(RejectReason::NonSelf)
            } else {
                None
            };
            fvs.push(fv);
            candidates.push(Candidate { route: v.route.clone(), ssi, verdict });
        }
        let selection = select_immune_route(&candidates);
        self.blacklist.route_broadcasts += selection.rejected.len() as u64;
        self.blacklist.advisories += selection.advisories.len() as u64;

        let mut nonself = Vec::new();
        for (i, v) in vetted.iter().enumerate() {
            let mids = v.route.intermediates();
            let benign = v.route.p_m == 0.0
                && v.acks as usize == PROBES_PER_ROUTE
                && candidates[i].verdict.is_none()
                && !mids.iter().any(|n| x.ssi_flagged.contains(n));
            agent.record_antigen(fvs[i], benign, now);
            if candidates[i].verdict == Some(RejectReason::NonSelf) {
                nonself.push(fvs[i]);
            }
        }
        agent.train_if_due(now, &mut self.rng_immune);
        agent.stimulate(&nonself, &mut self.rng_immune);
        self.agents.insert(src, agent);

        if self.p.recording.decisions {
            let (fsrc, fdst) = (self.flows[flow].src, self.flows[flow].dst);
            for (i, v) in vetted.iter().enumerate() {
                let outcome = if selection.winner == Some(i) {
                    "selected".to_string()
                } else if let Some(&(_, r)) = selection.rejected.iter().find(|r| r.0 == i) {
                    format!("rejected:{r}")
                } else {
                    "outscored".to_string()
                };
                let join = |xs: &[f64]| xs.iter().map(|p| format!("{p:.0}")).collect::<Vec<_>>().join(";");
                self.decisions.push(DecisionRecord {
                    epoch: id,
                    time: now,
                    src: fsrc.0,
                    dst: fdst.0,
                    candidate: i,
                    route: path_label(&v.route.path),
                    hop_count: v.route.hop_count,
                    rtt: v.rtt,
                    ssi: candidates[i].ssi,
                    p_m_trajectory: join(&v.ledger_traj),
                    p_sb: v.p_sb.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join(";"),
                    fitness: selection.fitness[i],
                    uav_sr: selection.uav_sr[i],
                    outcome,
                });
            }
        }

        match selection.winner {
            Some(w) => {
                let route = candidates.swap_remove(w).route;
                self.memory.store(route.clone(), now);
                self.flows[flow].discovering = None;
                self.install(flow, route);
                self.try_send(flow);
            }
            None => self.retry(flow),
        }
    }

    // ---- data plane ----

    fn install(&mut self, f: usize, route: Route) {
        self.retire(f);
        let id = self.next_instance;
        self.next_instance += 1;
        let path: Arc<[NodeId]> = route.path.clone().into();
        self.instances.insert(id, Instance { route, path, counters: PacketCounters::new() });
        self.flows[f].active = Some(id);
    }

    fn retire(&mut self, f: usize) {
        if let Some(id) = self.flows[f].active.take() {
            self.at(self.p.security.audit_settle, Ev::AuditStep { instance: id });
        }
    }

    fn audit_instance(&mut self, id: u64) {
        let Some(inst) = self.instances.remove(&id) else { return };
        if self.vetting()
            && inst.counters.sent(inst.route.path[0], inst.route.path[1]) >= self.p.security.audit_min_packets
        {
            self.audit(&inst.route, &inst.counters);
        }
    }

    fn on_traffic(&mut self, f: usize) {
        let cap = self.p.traffic.buffer_capacity;
        let fl = &mut self.flows[f];
        fl.sent += 1;
        let seq = fl.next_seq;
        fl.next_seq += 1;
        if fl.buffer.len() >= cap {
            fl.buffer.pop_front();
        }
        fl.buffer.push_back(seq);
        self.try_send(f);
        self.at(1.0 / self.p.traffic.rate, Ev::Traffic { flow: f });
    }

    fn try_send(&mut self, f: usize) {
        if self.flows[f].buffer.is_empty() {
            return;
        }
        if let Some(id) = self.flows[f].active {
            if !self.route_usable(&self.instances[&id].path) {
                self.retire(f);
            }
        }
        if self.flows[f].active.is_none() {
            if self.flows[f].discovering.is_some() || self.flows[f].retry_pending {
                return;
            }
            let (src, dst) = (self.flows[f].src, self.flows[f].dst);
            if self.vetting() {
                let mut mem = std::mem::take(&mut self.memory);
                let now = self.now();
                let hit = mem.lookup(src, dst, now, |u, v| {
                    self.link_usable(u, v)
                        && !self.blacklist.is_blacklisted(u, now)
                        && !self.blacklist.is_blacklisted(v, now)
                });
                self.memory = mem;
                if let Some(route) = hit {
                    self.install(f, route);
                }
            }
            if self.flows[f].active.is_none() {
                let id = self.start_discovery(src, dst, Some(f), self.p.security.collection_window);
                if self.discoveries.contains_key(&id) {
                    self.flows[f].discovering = Some(id);
                }
                return;
            }
        }
        let id = self.flows[f].active.expect("installed above");
        let path = self.instances[&id].path.clone();
        let now = self.now();
        let size = self.p.traffic.packet_size;
        while let Some(seq) = self.flows[f].buffer.pop_front() {
            let pkt = DataPacket {
                src: path[0],
                dst: *path.last().expect("non-empty"),
                seq,
                size,
                route: path.clone(),
                hop_index: 0,
                sent_at: now,
                corrupted: false,
            };
            self.forward(DataDelivery { to: path[0], instance: id, flow: f, pkt });
            if self.flows[f].active != Some(id) {
                break;
            }
        }
    }

    fn on_data(&mut self, d: DataDelivery) {
        self.forward(d);
    }

    fn forward(&mut self, d: DataDelivery) {
        let node = d.to;
        let mut pkt = d.pkt;
        let decision = forward_data(&self.topo, node, &pkt, &self.p.attack, &mut self.rng_atk[node.index()]);
        match decision {
            ForwardDecision::Deliver => {
                if !pkt.corrupted {
                    self.flows[d.flow].received += 1;
                }
            }
            ForwardDecision::Forward(next) => {
                if self.role(node) == NodeRole::Fid
                    && fid_corrupts_data(&self.p.attack, &mut self.rng_atk[node.index()])
                {
                    pkt.corrupted = true;
                }
                if let Some(inst) = self.instances.get_mut(&d.instance) {
                    inst.counters.record_sent(node, next);
                }
                let link = self.link(node, next).unwrap_or(Link::Radio);
                let delay = self.delay(node, link);
                pkt.hop_index += 1;
                let next_d = DataDelivery { to: next, instance: d.instance, flow: d.flow, pkt };
                self.at(delay, Ev::Data(Box::new(next_d)));
            }
            ForwardDecision::Drop(DropReason::LinkBroken) => {
                if let Some(inst) = self.instances.get_mut(&d.instance) {
                    inst.counters.record_undeliverable(node);
                }
                if self.role(node).reports_link_breaks() && self.flows[d.flow].active == Some(d.instance) {
                    self.retire(d.flow);
                }
            }
            ForwardDecision::Drop(_) => {}
        }
    }

    fn report(self) -> RunReport {
        let confirmed = self.blacklist.confirmed();
        let verdicts: BTreeMap<NodeId, Verdict> = self
            .topo
            .nodes
            .iter()
            .filter(|n| !n.role.is_ground_station())
            .map(|n| (n.id, if confirmed.contains(&n.id) { Verdict::Malicious } else { Verdict::Honest }))
            .collect();
        let confusion = classify_and_count(&self.truth, &verdicts).expect("verdicts cover known nodes only");
        let flows: Vec<FlowReport> = self
            .flows
            .iter()
            .map(|f| FlowReport { src: f.src, dst: f.dst, sent: f.sent, received: f.received })
            .collect();
        let exp: Vec<(u64, u64)> = flows.iter().map(|f| (f.received, f.sent)).collect();
        RunReport {
            seed: self.seed,
            rates: compute_rates(&confusion),
            confusion,
            confirmed,
            truth: self.truth,
            sent: flows.iter().map(|f| f.sent).sum(),
            received: flows.iter().map(|f| f.received).sum(),
            pdr_mean: metrics::pdr_mean(&exp).ok(),
            pdr_eq8: metrics::pdr_eq8(&exp).ok(),
            flows,
            pdr_series: self.pdr_series,
            trace_hash: self.sched.trace_hash(),
            events: self.sched.processed(),
            discoveries: self.next_disc,
            audits: self.audits,
            decisions: self.decisions,
            route_broadcasts: self.blacklist.route_broadcasts,
            advisories: self.blacklist.advisories,
        }
    }
}
