use std::fmt;

use serde::{Deserialize, Serialize};

use super::fitness::fitness_set;
use super::probe::REJECT_ABOVE;
use crate::routing::Route;

/// Scores closer than this are treated as equal; the earlier reply wins.
pub const TIE_EPSILON: f64 = 1e-6;
/// Survivors scoring below this are broadcast as advisories.
pub const ADVISORY_BELOW: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RejectReason {
    Contaminated,
    Suspect,
    NonSelf,
    Blacklisted,
    Expired,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::Contaminated => "contaminated",
            RejectReason::Suspect => "suspect",
            RejectReason::NonSelf => "non-self",
            RejectReason::Blacklisted => "blacklisted",
            RejectReason::Expired => "expired",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// `route.p_m` is on the 0..100 scale.
    pub route: Route,
    /// Signal strength on a positive scale (margin above the noise floor).
    pub ssi: f64,
    /// Set when an earlier check already condemned the route.
    pub verdict: Option<RejectReason>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Selection {
    pub winner: Option<usize>,
    pub fitness: Vec<Option<f64>>,
    pub uav_sr: Vec<Option<f64>>,
    pub rejected: Vec<(usize, RejectReason)>,
    pub advisories: Vec<usize>,
}

/// `(1 − p) · F_r` with `p_m` given on the 0..100 scale.
pub fn uav_sr(p_m: f64, f_r: f64) -> f64 {
    (1.0 - p_m / 100.0) * f_r
}

/// Index of the best (score, reply arrival) entry: highest score, and among
/// scores within [`TIE_EPSILON`] of it the earliest reply.
pub fn pick_best(scored: &[(usize, f64, f64)]) -> Option<usize> {
    let top = scored.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    scored
        .iter()
        .filter(|s| top - s.1 < TIE_EPSILON)
        .min_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)))
        .map(|s| s.0)
}

/// Final immune selection. Routes condemned earlier or with contamination above
/// one half are pushed out; the remaining ones are scored with fitness normalized
/// over the survivors.
pub fn select_immune_route(candidates: &[Candidate]) -> Selection {
    let n = candidates.len();
    let mut sel = Selection { fitness: vec![None; n], uav_sr: vec![None; n], ..Selection::default() };
    let mut survivors = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        if let Some(reason) = c.verdict {
            sel.rejected.push((i, reason));
        } else if c.route.p_m > REJECT_ABOVE {
            sel.rejected.push((i, RejectReason::Contaminated));
        } else {
            survivors.push(i);
        }
    }
    if survivors.is_empty() {
        return sel;
    }
    let inputs: Vec<(f64, f64)> = survivors.iter().map(|&i| (candidates[i].route.rtt, candidates[i].ssi)).collect();
    let f = fitness_set(&inputs);
    let mut scored = Vec::with_capacity(survivors.len());
    for (&i, &fr) in survivors.iter().zip(&f) {
        let score = uav_sr(candidates[i].route.p_m, fr);
        sel.fitness[i] = Some(fr);
        sel.uav_sr[i] = Some(score);
        if score < ADVISORY_BELOW {
            sel.advisories.push(i);
        }
        scored.push((i, score, candidates[i].route.reply_arrival));
    }
    sel.winner = pick_best(&scored);
    sel
}
