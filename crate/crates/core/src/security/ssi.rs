use std::collections::BTreeSet;

use crate::net_model::NodeId;

/// Flags the single strongest transmitter when it stands out from the runner-up
/// by more than `delta` dB. Anything else, including a lone reading, flags no one.
pub fn ssi_filter(received: &[(NodeId, f64)], delta: f64) -> BTreeSet<NodeId> {
    let mut flagged = BTreeSet::new();
    if received.len() < 2 {
        return flagged;
    }
    let mut best: Option<(NodeId, f64)> = None;
    let mut second = f64::NEG_INFINITY;
    for &(id, s) in received {
        match best {
            Some((_, b)) if s <= b => second = second.max(s),
            Some((_, b)) => {
                second = second.max(b);
                best = Some((id, s));
            }
            None => best = Some((id, s)),
        }
    }
    if let Some((id, s)) = best {
        if s - second > delta {
            flagged.insert(id);
        }
    }
    flagged
}
