/// Route fitness: `MaxRTT / rtt + ssi / MaxSSI`. Lower delay and stronger signal
/// both raise it; a lone candidate scores 2.
pub fn fitness(rtt: f64, ssi: f64, max_rtt: f64, max_ssi: f64) -> f64 {
    rtt_term(rtt, max_rtt) + ssi_term(ssi, max_ssi)
}

pub fn rtt_term(rtt: f64, max_rtt: f64) -> f64 {
    if rtt > 0.0 {
        max_rtt / rtt
    } else {
        0.0
    }
}

pub fn ssi_term(ssi: f64, max_ssi: f64) -> f64 {
    if max_ssi > 0.0 {
        ssi / max_ssi
    } else {
        0.0
    }
}

/// Fitness of every candidate given as (rtt, ssi), normalized over the set.
pub fn fitness_set(candidates: &[(f64, f64)]) -> Vec<f64> {
    let max_rtt = candidates.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    let max_ssi = candidates.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    candidates.iter().map(|&(r, s)| fitness(r, s, max_rtt, max_ssi)).collect()
}
