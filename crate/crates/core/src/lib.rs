//! Deterministic discrete-event simulator of multi-hop UAV networks under routing
//! attacks, with an immune-inspired route vetting and selection scheme.
//!
//! The crate is layered bottom-up: [`sim`] (scheduler and seeded streams),
//! [`net_model`] and [`mobility`] (geometry), [`routing`] and [`attacks`]
//! (message semantics), [`immune`] and [`security`] (the defense), [`world`]
//! (the event loop tying them together), and [`metrics`] / [`harness`] on top.

pub mod attacks;
pub mod error;
pub mod harness;
pub mod immune;
pub mod metrics;
pub mod mobility;
pub mod net_model;
pub mod routing;
pub mod security;
pub mod sim;
pub mod world;

pub use error::{ConfigError, DimensionError, ImmuneError, LookupError, MetricsError, ResultsError};
pub use net_model::{NodeId, NodeRole, Region, Topology, UavNode, Vec3};
