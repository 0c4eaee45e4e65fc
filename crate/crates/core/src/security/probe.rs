use serde::{Deserialize, Serialize};

use crate::routing::HelloOutcome;

pub const PROBES_PER_ROUTE: usize = 4;
pub const ACK_CREDIT: f64 = 25.0;
pub const SILENCE_PENALTY: f64 = 15.0;
pub const REJECT_ABOVE: f64 = 50.0;

/// Phase-1 bookkeeping for one candidate route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeLedger {
    /// 0..100
    pub p_m: f64,
    pub probes_sent: u32,
    pub acks: u32,
    /// p_m before the first probe and after each one.
    pub trajectory: Vec<f64>,
}

impl ProbeLedger {
    pub fn new(confirmed: bool) -> Self {
        let p_m = if confirmed { 0.0 } else { 100.0 };
        ProbeLedger { p_m, probes_sent: 0, acks: 0, trajectory: vec![p_m] }
    }

    pub fn record(&mut self, outcome: HelloOutcome) {
        debug_assert!((self.probes_sent as usize) < PROBES_PER_ROUTE);
        self.probes_sent += 1;
        self.p_m = match outcome {
            HelloOutcome::Acked => {
                self.acks += 1;
                self.p_m - ACK_CREDIT
            }
            HelloOutcome::Silent => self.p_m + SILENCE_PENALTY,
        }
        .clamp(0.0, 100.0);
        self.trajectory.push(self.p_m);
    }

    pub fn rejected(&self) -> bool {
        self.p_m > REJECT_ABOVE
    }
}

/// Applies the probe outcomes in order to a fresh ledger.
pub fn phase1_probe(confirmed: bool, outcomes: &[HelloOutcome]) -> ProbeLedger {
    let mut ledger = ProbeLedger::new(confirmed);
    for &o in outcomes.iter().take(PROBES_PER_ROUTE) {
        ledger.record(o);
    }
    ledger
}

#[cfg(test)]
mod tests {
    use super::*;
    use HelloOutcome::{Acked, Silent};

    #[test]
    fn reference_cases() {
        assert_eq!(phase1_probe(true, &[Acked; 4]).p_m, 0.0);
        assert_eq!(phase1_probe(false, &[Acked; 4]).p_m, 0.0);
        let l = phase1_probe(true, &[Silent; 4]);
        assert_eq!(l.p_m, 60.0);
        assert!(l.rejected());
        assert_eq!(l.trajectory, vec![0.0, 15.0, 30.0, 45.0, 60.0]);
    }

    #[test]
    fn order_matters_through_the_clamp() {
        assert_eq!(phase1_probe(true, &[Acked, Silent, Silent, Silent]).p_m, 45.0);
        assert_eq!(phase1_probe(true, &[Silent, Silent, Silent, Acked]).p_m, 20.0);
    }

    #[test]
    fn extra_outcomes_are_ignored() {
        let l = phase1_probe(true, &[Silent; 6]);
        assert_eq!(l.probes_sent, 4);
        assert_eq!(l.p_m, 60.0);
    }
}
