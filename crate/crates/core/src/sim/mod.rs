//! Deterministic event scheduling and seeded randomness.
//!
//! The event loop is single-threaded; parallelism only exists across whole runs.

mod rng;
mod scheduler;

pub use rng::{RngRegistry, SimRng};
pub use scheduler::{Event, ScheduleError, Scheduler, SimTime, TraceHash, TraceTag};
