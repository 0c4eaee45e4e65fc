//! Three-phase route vetting (Hello probing, reverse packet-count audit, fitness)
//! and the final immune route selection.

mod audit;
mod blacklist;
mod fitness;
mod log;
mod probe;
mod select;
mod ssi;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use audit::{
    phase2_audit, phase2_audit_with, AuditReport, PacketCounters, PairScore, SurveillanceThreshold,
    MAX_SURVEILLANCE_THRESHOLD,
};
pub use blacklist::{Blacklist, EvidenceParams, NodeEvidence};
pub use fitness::{fitness, fitness_set, rtt_term, ssi_term};
pub use log::{path_label, write_decision_log, DecisionRecord};
pub use probe::{phase1_probe, ProbeLedger, ACK_CREDIT, PROBES_PER_ROUTE, REJECT_ABOVE, SILENCE_PENALTY};
pub use select::{
    pick_best, select_immune_route, uav_sr, Candidate, RejectReason, Selection, ADVISORY_BELOW, TIE_EPSILON,
};
pub use ssi::ssi_filter;

use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub enum Defense {
    #[default]
    #[serde(rename = "suas-his")]
    SuasHis,
    #[serde(rename = "none")]
    None,
}

impl Defense {
    pub fn as_str(self) -> &'static str {
        match self {
            Defense::SuasHis => "suas-his",
            Defense::None => "none",
        }
    }
}

impl fmt::Display for Defense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Defense {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "suas-his" | "suashis" | "suas_his" => Ok(Defense::SuasHis),
            "none" | "baseline" | "aodv" => Ok(Defense::None),
            other => Err(ConfigError::invalid("defense", format!("unknown defense `{other}` (suas-his, none)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecurityParams {
    pub t_s: f64,
    /// dB gap for the SSI outlier filter.
    pub ssi_delta: f64,
    /// Upper bound on reply collection per discovery.
    pub collection_window: f64,
    /// Spacing between the Hello probes sent down one route.
    pub probe_spacing: f64,
    /// Probe timeout as a multiple of the route's discovery RTT.
    pub probe_timeout_factor: f64,
    /// Floor on the probe timeout.
    pub min_probe_timeout: f64,
    /// Data packets a route must carry before its audit counts.
    pub audit_min_packets: u64,
    /// Wait after a route retires before auditing it, letting packets drain.
    pub audit_settle: f64,
    pub evidence: EvidenceParams,
}

impl Default for SecurityParams {
    fn default() -> Self {
        SecurityParams {
            t_s: 0.1,
            ssi_delta: 10.0,
            collection_window: 10.0,
            probe_spacing: 0.002,
            probe_timeout_factor: 2.0,
            min_probe_timeout: 0.01,
            audit_min_packets: 4,
            audit_settle: 0.2,
            evidence: EvidenceParams::default(),
        }
    }
}

impl SecurityParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        SurveillanceThreshold::new(self.t_s)?;
        if self.ssi_delta.is_nan() || self.ssi_delta < 0.0 {
            return Err(ConfigError::invalid("security.ssi_delta", "must be non-negative"));
        }
        for (field, v) in [
            ("security.collection_window", self.collection_window),
            ("security.probe_timeout_factor", self.probe_timeout_factor),
            ("security.min_probe_timeout", self.min_probe_timeout),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::invalid(field, "must be positive"));
            }
        }
        for (field, v) in [("security.probe_spacing", self.probe_spacing), ("security.audit_settle", self.audit_settle)]
        {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ConfigError::invalid(field, "must be non-negative"));
            }
        }
        if self.audit_min_packets == 0 {
            return Err(ConfigError::invalid("security.audit_min_packets", "must be at least 1"));
        }
        self.evidence.validate()
    }

    pub fn threshold(&self) -> SurveillanceThreshold {
        SurveillanceThreshold::new(self.t_s).unwrap_or(SurveillanceThreshold::new(0.0).expect("zero is valid"))
    }
}
