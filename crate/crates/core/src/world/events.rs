use crate::net_model::NodeId;
use crate::routing::{ControlMsg, DataPacket};
use crate::sim::TraceTag;

#[derive(Debug, Clone)]
pub(crate) struct ControlDelivery {
    pub to: NodeId,
    pub from: NodeId,
    /// dBm at the receiver
    pub ssi: f64,
    pub tunneled: bool,
    pub msg: ControlMsg,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ProbeMsg {
    pub session: u64,
    pub probe: u8,
    pub ack: bool,
    /// Index of the receiver in the probed path.
    pub hop: u16,
    pub to: NodeId,
    pub from: NodeId,
}

#[derive(Debug, Clone)]
pub(crate) struct DataDelivery {
    pub to: NodeId,
    pub instance: u64,
    pub flow: usize,
    pub pkt: DataPacket,
}

#[derive(Debug, Clone)]
pub(crate) enum Ev {
    MobilityTick,
    Control(Box<ControlDelivery>),
    Probe(ProbeMsg),
    Data(Box<DataDelivery>),
    HelloLaunch { session: u64, probe: u8 },
    ProbeTimeout { disc: u64 },
    DiscoveryDeadline { disc: u64 },
    DiscoveryRetry { flow: usize },
    AuditStep { instance: u64 },
    Traffic { flow: usize },
    EpochBoundary { flow: usize },
    MetricSample,
}

impl TraceTag for Ev {
    fn trace_tag(&self) -> u64 {
        let (kind, detail): (u64, u64) = match self {
            Ev::MobilityTick => (0, 0),
            Ev::Control(c) => (1, u64::from(c.to.0) << 8 | c.msg.kind as u64),
            Ev::Probe(p) => (2, u64::from(p.to.0) << 1 | u64::from(p.ack)),
            Ev::Data(d) => (3, u64::from(d.to.0)),
            Ev::HelloLaunch { session, probe } => (4, session << 3 | u64::from(*probe)),
            Ev::ProbeTimeout { disc } => (5, *disc),
            Ev::DiscoveryDeadline { disc } => (6, *disc),
            Ev::DiscoveryRetry { flow } => (7, *flow as u64),
            Ev::AuditStep { instance } => (8, *instance),
            Ev::Traffic { flow } => (9, *flow as u64),
            Ev::EpochBoundary { flow } => (10, *flow as u64),
            Ev::MetricSample => (11, 0),
        };
        kind << 56 | (detail & ((1 << 56) - 1))
    }
}
