use std::collections::BTreeMap;

use crate::net_model::NodeId;
use crate::routing::Route;
use crate::sim::SimTime;

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryEntry {
    pub route: Route,
    pub stored_at: SimTime,
    pub ttl: f64,
}

/// Recently selected safe routes, keyed by (source, destination).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SafetyMemory {
    entries: BTreeMap<(NodeId, NodeId), MemoryEntry>,
    ttl: f64,
}

impl SafetyMemory {
    pub fn new(ttl: f64) -> Self {
        SafetyMemory { entries: BTreeMap::new(), ttl }
    }

    pub fn store(&mut self, route: Route, now: SimTime) {
        let key = (route.source(), route.destination());
        self.entries.insert(key, MemoryEntry { route, stored_at: now, ttl: self.ttl });
    }

    /// The stored route if it is unexpired (inclusive of the expiry instant) and
    /// every hop passes `link_ok`. Expired or broken entries are evicted.
    pub fn lookup<F>(&mut self, src: NodeId, dst: NodeId, now: SimTime, link_ok: F) -> Option<Route>
    where
        F: Fn(NodeId, NodeId) -> bool,
    {
        let entry = self.entries.get(&(src, dst))?;
        let fresh = now <= entry.stored_at + entry.ttl;
        if fresh && entry.route.links().all(|(u, v)| link_ok(u, v)) {
            return Some(entry.route.clone());
        }
        self.entries.remove(&(src, dst));
        None
    }

    pub fn forget(&mut self, src: NodeId, dst: NodeId) {
        self.entries.remove(&(src, dst));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
