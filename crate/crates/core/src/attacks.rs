//! The four malicious behaviors: black hole, gray hole, wormhole and fake
//! information dissemination (FID), plus role assignment and ground truth.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::net_model::{NodeId, NodeRole, Vec3};
use crate::routing::{ControlKind, ControlMsg};

pub const MAX_MALICIOUS_RATIO: f64 = 0.30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    Wh,
    Bh,
    Gh,
    Fid,
}

impl AttackKind {
    pub const ALL: [AttackKind; 4] = [AttackKind::Wh, AttackKind::Bh, AttackKind::Gh, AttackKind::Fid];

    pub fn as_str(self) -> &'static str {
        match self {
            AttackKind::Wh => "wh",
            AttackKind::Bh => "bh",
            AttackKind::Gh => "gh",
            AttackKind::Fid => "fid",
        }
    }
}

/// Relative weights over the four attacks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackMix {
    pub wh: f64,
    pub bh: f64,
    pub gh: f64,
    pub fid: f64,
}

impl Default for AttackMix {
    fn default() -> Self {
        AttackMix { wh: 1.0, bh: 1.0, gh: 1.0, fid: 1.0 }
    }
}

impl AttackMix {
    pub fn only(kind: AttackKind) -> Self {
        let mut m = AttackMix { wh: 0.0, bh: 0.0, gh: 0.0, fid: 0.0 };
        *m.weight_mut(kind) = 1.0;
        m
    }

    pub fn weight(&self, kind: AttackKind) -> f64 {
        match kind {
            AttackKind::Wh => self.wh,
            AttackKind::Bh => self.bh,
            AttackKind::Gh => self.gh,
            AttackKind::Fid => self.fid,
        }
    }

    fn weight_mut(&mut self, kind: AttackKind) -> &mut f64 {
        match kind {
            AttackKind::Wh => &mut self.wh,
            AttackKind::Bh => &mut self.bh,
            AttackKind::Gh => &mut self.gh,
            AttackKind::Fid => &mut self.fid,
        }
    }

    pub fn total(&self) -> f64 {
        AttackKind::ALL.iter().map(|&k| self.weight(k)).sum()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if AttackKind::ALL.iter().any(|&k| !(self.weight(k) >= 0.0 && self.weight(k).is_finite())) {
            return Err(ConfigError::invalid("attack.mix", "weights must be finite and non-negative"));
        }
        if self.total() <= 0.0 {
            return Err(ConfigError::invalid("attack.mix", "at least one weight must be positive"));
        }
        Ok(())
    }

    /// Short label: the attack name for one-hot mixes, `mixed` otherwise.
    pub fn label(&self) -> String {
        let active: Vec<AttackKind> = AttackKind::ALL.into_iter().filter(|&k| self.weight(k) > 0.0).collect();
        match active.as_slice() {
            [one] => one.as_str().to_string(),
            _ if *self == AttackMix::default() => "mixed".to_string(),
            _ => AttackKind::ALL
                .iter()
                .map(|&k| format!("{}{}", k.as_str(), self.weight(k)))
                .collect::<Vec<_>>()
                .join("+"),
        }
    }
}

impl FromStr for AttackMix {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mixed" | "all" => Ok(AttackMix::default()),
            "wh" | "wormhole" => Ok(AttackMix::only(AttackKind::Wh)),
            "bh" | "blackhole" | "black-hole" => Ok(AttackMix::only(AttackKind::Bh)),
            "gh" | "grayhole" | "gray-hole" => Ok(AttackMix::only(AttackKind::Gh)),
            "fid" => Ok(AttackMix::only(AttackKind::Fid)),
            other => Err(ConfigError::invalid("attack", format!("unknown attack `{other}` (wh, bh, gh, fid, mixed)"))),
        }
    }
}

impl fmt::Display for AttackMix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    pub malicious_ratio: f64,
    pub mix: AttackMix,
    pub gh_drop_prob: f64,
    /// Whether wormhole pairs actually use their tunnel.
    pub wh_tunnel: bool,
    /// Probability a data packet entering the tunnel is discarded.
    pub wh_data_drop: f64,
    /// dB added to the transmit power of wormhole endpoints.
    pub wh_ssi_boost: f64,
    /// dB added to the transmit power of FID nodes.
    pub fid_ssi_boost: f64,
    /// m
    pub fid_pos_error: f64,
    pub fid_control_mod_rate: f64,
    pub fid_data_mod_rate: f64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            malicious_ratio: 0.0,
            mix: AttackMix::default(),
            gh_drop_prob: 0.5,
            wh_tunnel: true,
            wh_data_drop: 1.0,
            wh_ssi_boost: 15.0,
            fid_ssi_boost: 15.0,
            fid_pos_error: 500.0,
            fid_control_mod_rate: 1.0,
            fid_data_mod_rate: 0.2,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=MAX_MALICIOUS_RATIO).contains(&self.malicious_ratio) {
            return Err(ConfigError::invalid(
                "attack.malicious_ratio",
                format!("{} is outside [0, {MAX_MALICIOUS_RATIO}]", self.malicious_ratio),
            ));
        }
        self.mix.validate()?;
        for (field, v) in [
            ("attack.gh_drop_prob", self.gh_drop_prob),
            ("attack.wh_data_drop", self.wh_data_drop),
            ("attack.fid_control_mod_rate", self.fid_control_mod_rate),
            ("attack.fid_data_mod_rate", self.fid_data_mod_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::invalid(field, "must be a probability"));
            }
        }
        for (field, v) in [
            ("attack.wh_ssi_boost", self.wh_ssi_boost),
            ("attack.fid_ssi_boost", self.fid_ssi_boost),
            ("attack.fid_pos_error", self.fid_pos_error),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ConfigError::invalid(field, "must be finite and non-negative"));
            }
        }
        Ok(())
    }

    /// Transmit power including any attacker boost.
    pub fn effective_tx_power(&self, role: &NodeRole, base_dbm: f64) -> f64 {
        match role {
            NodeRole::Fid => base_dbm + self.fid_ssi_boost,
            NodeRole::Wormhole { .. } => base_dbm + self.wh_ssi_boost,
            _ => base_dbm,
        }
    }
}

/// Which airborne UAVs misbehave.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    malicious: Vec<bool>,
}

impl GroundTruth {
    pub fn from_roles(roles: &[NodeRole]) -> Self {
        GroundTruth { malicious: roles.iter().map(NodeRole::is_malicious).collect() }
    }

    pub fn is_malicious(&self, id: NodeId) -> Option<bool> {
        self.malicious.get(id.index()).copied()
    }

    pub fn len(&self) -> usize {
        self.malicious.len()
    }

    pub fn is_empty(&self) -> bool {
        self.malicious.is_empty()
    }

    pub fn malicious_count(&self) -> usize {
        self.malicious.iter().filter(|&&m| m).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, bool)> + '_ {
        self.malicious.iter().enumerate().map(|(i, &m)| (NodeId::from(i), m))
    }
}

/// Smooth weighted round-robin over the mix: deterministic, and every prefix of
/// the sequence tracks the weights as closely as integer counts allow.
fn kind_sequence(mix: &AttackMix, len: usize) -> Vec<AttackKind> {
    let total = mix.total();
    let mut current = [0.0f64; 4];
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        for (c, k) in current.iter_mut().zip(AttackKind::ALL) {
            *c += mix.weight(k);
        }
        let (best, _) = current
            .iter()
            .enumerate()
            .filter(|(i, _)| mix.weight(AttackKind::ALL[*i]) > 0.0)
            .fold((usize::MAX, f64::NEG_INFINITY), |acc, (i, &c)| if c > acc.1 { (i, c) } else { acc });
        current[best] -= total;
        let kind = AttackKind::ALL[best];
        out.push(kind);
        if kind == AttackKind::Wh {
            // wormholes are emitted as a colluding pair
            out.push(kind);
        }
    }
    out.truncate(len);
    out
}

/// Roles for `n_uavs` airborne UAVs. The candidates are one seeded permutation,
/// so for a fixed seed the malicious set at a lower ratio is a subset of the set
/// at any higher ratio. An unpaired trailing wormhole stays honest.
pub fn assign_roles<R: Rng + ?Sized>(n_uavs: usize, cfg: &AttackConfig, rng: &mut R) -> Vec<NodeRole> {
    let mut roles = vec![NodeRole::Normal; n_uavs];
    let k = (cfg.malicious_ratio * n_uavs as f64).round() as usize;
    let k = k.min(n_uavs);
    let mut order: Vec<usize> = (0..n_uavs).collect();
    order.shuffle(rng);
    if k == 0 {
        return roles;
    }
    let kinds = kind_sequence(&cfg.mix, k);
    let mut pending_wh: Option<usize> = None;
    for (&slot, kind) in order.iter().zip(kinds) {
        roles[slot] = match kind {
            AttackKind::Bh => NodeRole::BlackHole,
            AttackKind::Gh => NodeRole::GrayHole { drop_prob: cfg.gh_drop_prob },
            AttackKind::Fid => NodeRole::Fid,
            AttackKind::Wh => match pending_wh.take() {
                Some(a) => {
                    roles[a] = NodeRole::Wormhole { peer: NodeId::from(slot) };
                    NodeRole::Wormhole { peer: NodeId::from(a) }
                }
                None => {
                    pending_wh = Some(slot);
                    NodeRole::Normal
                }
            },
        };
    }
    roles
}

/// A black hole answers any request at once with a reply claiming a one-hop
/// route and a destination sequence number far above anything honest.
pub fn bh_forge_rrep(node: NodeId, rreq: &ControlMsg, observed_max_seq: u32) -> ControlMsg {
    let mut path = rreq.path.clone();
    path.push(node);
    path.push(rreq.target);
    ControlMsg {
        kind: ControlKind::Rrep,
        origin: rreq.target,
        target: rreq.origin,
        hop_count: 1,
        dest_seq: observed_max_seq.max(rreq.dest_seq).saturating_add(100),
        path,
        claimed_position: None,
        timestamp: rreq.timestamp,
        correlation: rreq.correlation,
        min_ssi: f64::INFINITY,
        tampered: true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GhDecision {
    Drop,
    Forward,
}

pub fn gh_drop_decision<R: Rng + ?Sized>(drop_prob: f64, rng: &mut R) -> GhDecision {
    if drop_prob > 0.0 && rng.random::<f64>() < drop_prob {
        GhDecision::Drop
    } else {
        GhDecision::Forward
    }
}

/// Re-emission of `msg` at the far end of the tunnel. The entry node joins the
/// path but the hop count is left alone, so the peer's own relay makes the two
/// endpoints look like a single hop.
pub fn wh_tunnel_relay(a: NodeId, msg: &ControlMsg) -> ControlMsg {
    let mut m = msg.clone();
    m.path.push(a);
    m
}

/// FID tampering of a relayed control message: the claimed position is pushed
/// `fid_pos_error` meters in a random horizontal direction.
pub fn fid_falsify<R: Rng + ?Sized>(
    true_position: Vec3,
    msg: &ControlMsg,
    cfg: &AttackConfig,
    rng: &mut R,
) -> ControlMsg {
    let mut m = msg.clone();
    if rng.random::<f64>() < cfg.fid_control_mod_rate {
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let base = m.claimed_position.unwrap_or(true_position);
        m.claimed_position = Some(base + Vec3::new(theta.cos(), theta.sin(), 0.0) * cfg.fid_pos_error);
        m.tampered = true;
    }
    m
}

/// Whether an FID node mutates the payload of a data packet it forwards.
pub fn fid_corrupts_data<R: Rng + ?Sized>(cfg: &AttackConfig, rng: &mut R) -> bool {
    cfg.fid_data_mod_rate > 0.0 && rng.random::<f64>() < cfg.fid_data_mod_rate
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net_model::PathLoss;
    use crate::sim::RngRegistry;
    use approx::assert_abs_diff_eq;

    #[test]
    fn forged_reply_shape() {
        let mut q = ControlMsg::rreq(NodeId(0), NodeId(9), 4, 2.0, 1);
        q = q.relayed_by(NodeId(3));
        let r = bh_forge_rrep(NodeId(5), &q, 12);
        assert_eq!(r.hop_count, 1);
        assert_eq!(r.dest_seq, 112);
        assert_eq!(r.path, vec![NodeId(0), NodeId(3), NodeId(5), NodeId(9)]);
        assert_eq!(r.target, NodeId(0));
    }

    #[test]
    fn gh_degenerate_probabilities() {
        let mut rng = RngRegistry::new(2).stream("gh-drop/node0");
        assert!((0..1000).all(|_| gh_drop_decision(0.0, &mut rng) == GhDecision::Forward));
        assert!((0..1000).all(|_| gh_drop_decision(1.0, &mut rng) == GhDecision::Drop));
    }

    #[test]
    fn gh_binomial_drop_count() {
        let mut rng = RngRegistry::new(3).stream("gh-drop/node7");
        let drops = (0..10_000).filter(|_| gh_drop_decision(0.5, &mut rng) == GhDecision::Drop).count();
        // 3 sigma of Binomial(10^4, 0.5) is 150
        assert!((4850..=5150).contains(&drops), "{drops}");
    }

    #[test]
    fn fid_data_mutation_count() {
        let cfg = AttackConfig::default();
        let mut rng = RngRegistry::new(4).stream("fid/node3");
        let n = (0..1000).filter(|_| fid_corrupts_data(&cfg, &mut rng)).count();
        // 3 sigma of Binomial(1000, 0.2) is ~38
        assert!((162..=238).contains(&n), "{n}");
    }

    #[test]
    fn fid_degenerate_leaves_position() {
        let cfg = AttackConfig { fid_pos_error: 0.0, fid_ssi_boost: 0.0, ..AttackConfig::default() };
        let q = ControlMsg::rreq(NodeId(0), NodeId(1), 0, 0.0, 0);
        let mut rng = RngRegistry::new(1).stream("fid/node0");
        let p = Vec3::new(10.0, 20.0, 30.0);
        let m = fid_falsify(p, &q, &cfg, &mut rng);
        assert_eq!(m.claimed_position, Some(p));
        assert_eq!(m.path, q.path);
        assert_eq!(cfg.effective_tx_power(&NodeRole::Fid, 20.0), 20.0);
    }

    #[test]
    fn fid_displacement_and_boost() {
        let cfg = AttackConfig::default();
        let q = ControlMsg::rreq(NodeId(0), NodeId(1), 0, 0.0, 0);
        let mut rng = RngRegistry::new(1).stream("fid/node0");
        let p = Vec3::new(1000.0, 1000.0, 100.0);
        let m = fid_falsify(p, &q, &cfg, &mut rng);
        assert_abs_diff_eq!(m.claimed_position.unwrap().distance(p), cfg.fid_pos_error, epsilon = 1e-9);
        let pl = PathLoss::default();
        for d in [1.0, 37.0, 250.0] {
            let honest = pl.received(cfg.effective_tx_power(&NodeRole::Normal, 20.0), d);
            let fid = pl.received(cfg.effective_tx_power(&NodeRole::Fid, 20.0), d);
            assert_abs_diff_eq!(fid - honest, 15.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn tunnel_keeps_hop_count() {
        let q = ControlMsg::rreq(NodeId(0), NodeId(9), 0, 0.0, 0);
        let t = wh_tunnel_relay(NodeId(1), &q);
        assert_eq!(t.hop_count, q.hop_count);
        assert_eq!(t.path, vec![NodeId(0), NodeId(1)]);
    }

    fn roles_for(ratio: f64, mix: AttackMix, seed: u64) -> Vec<NodeRole> {
        let cfg = AttackConfig { malicious_ratio: ratio, mix, ..AttackConfig::default() };
        assign_roles(100, &cfg, &mut RngRegistry::new(seed).stream("attack-select"))
    }

    #[test]
    fn role_assignment_counts_and_pairing() {
        let roles = roles_for(0.3, AttackMix::default(), 9);
        let truth = GroundTruth::from_roles(&roles);
        assert!((28..=30).contains(&truth.malicious_count()));
        for (i, r) in roles.iter().enumerate() {
            if let NodeRole::Wormhole { peer } = r {
                assert_ne!(peer.index(), i);
                assert_eq!(roles[peer.index()], NodeRole::Wormhole { peer: NodeId::from(i) });
            }
        }
        assert!(roles_for(0.0, AttackMix::default(), 9).iter().all(|r| *r == NodeRole::Normal));
    }

    #[test]
    fn malicious_sets_nest_across_ratios() {
        for mix in [AttackMix::default(), AttackMix::only(AttackKind::Bh)] {
            let mut prev: Vec<bool> = vec![false; 100];
            for step in 0..=6 {
                let roles = roles_for(step as f64 * 0.05, mix, 21);
                let now: Vec<bool> = roles.iter().map(NodeRole::is_malicious).collect();
                for i in 0..100 {
                    assert!(!prev[i] || now[i], "node {i} left the malicious set at step {step}");
                }
                prev = now;
            }
        }
    }

    #[test]
    fn odd_wormhole_count_leaves_one_honest() {
        let roles = roles_for(0.05, AttackMix::only(AttackKind::Wh), 2);
        let wh = roles.iter().filter(|r| matches!(r, NodeRole::Wormhole { .. })).count();
        assert_eq!(wh, 4);
    }

    #[test]
    fn mix_parsing() {
        assert_eq!("BH".parse::<AttackMix>().unwrap(), AttackMix::only(AttackKind::Bh));
        assert_eq!("mixed".parse::<AttackMix>().unwrap().label(), "mixed");
        assert!("sybil".parse::<AttackMix>().is_err());
    }
}
