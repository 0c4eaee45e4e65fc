//! Clonal selection: detectors that matched antigens are cloned in proportion to
//! their rank and hyper-mutated, with less mutation for closer matches.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::negative_selection::{CandidateSpace, Detector, DetectorSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClonalParams {
    /// Clone multiplier: rank `i` of `k` receives `round(beta * k / i)` copies.
    pub beta: f64,
    /// How many of the best-matching detectors reproduce.
    pub top_k: usize,
    /// Mutation stddev for a zero-affinity match.
    pub mutation_base: f64,
    /// Exponential damping of the mutation stddev with affinity.
    pub mutation_decay: f64,
}

impl Default for ClonalParams {
    fn default() -> Self {
        ClonalParams { beta: 1.0, top_k: 5, mutation_base: 0.1, mutation_decay: 3.0 }
    }
}

struct Stimulus {
    count: usize,
    best_affinity: f64,
}

/// One round of clonal selection. `matched` pairs a detector index in `det` with
/// an antigen it matched. Clones that match any self sample are discarded, and
/// the weakest detectors are evicted to respect the capacity.
pub fn clonal_select<R: Rng + ?Sized>(
    det: &DetectorSet,
    matched: &[(usize, Vec<f64>)],
    self_set: &[Vec<f64>],
    params: &ClonalParams,
    rng: &mut R,
) -> DetectorSet {
    let mut out = det.clone();
    let mut stimuli: BTreeMap<usize, Stimulus> = BTreeMap::new();
    for (idx, antigen) in matched {
        let Some(d) = det.detectors.get(*idx) else { continue };
        let a = d.match_affinity(antigen);
        let s = stimuli.entry(*idx).or_insert(Stimulus { count: 0, best_affinity: 0.0 });
        s.count += 1;
        s.best_affinity = s.best_affinity.max(a);
    }
    if stimuli.is_empty() {
        return out;
    }
    for (&idx, s) in &stimuli {
        out.detectors[idx].stimulation += s.count as f64;
    }

    let mut ranked: Vec<(usize, &Stimulus)> = stimuli.iter().map(|(&i, s)| (i, s)).collect();
    ranked.sort_by(|a, b| {
        b.1.count.cmp(&a.1.count).then(b.1.best_affinity.total_cmp(&a.1.best_affinity)).then(a.0.cmp(&b.0))
    });
    ranked.truncate(params.top_k.max(1));
    let k = ranked.len() as f64;

    for (rank, (idx, s)) in ranked.iter().enumerate() {
        let parent = out.detectors[*idx].clone();
        let copies = ((params.beta * k / (rank + 1) as f64).round() as usize).max(1);
        let sigma = params.mutation_base * (-params.mutation_decay * s.best_affinity).exp();
        for _ in 0..copies {
            let center = mutate(&parent.center, sigma, det.space, rng);
            let clone = Detector {
                id: 0,
                parent: Some(parent.id),
                center,
                radius: parent.radius,
                metric: parent.metric,
                generation: parent.generation + 1,
                stimulation: parent.stimulation / 2.0,
            };
            if !self_set.iter().any(|x| clone.matches(x)) {
                out.push(clone);
            }
        }
    }

    if out.detectors.len() > out.capacity {
        // keep the most stimulated, then the youngest; ties by id for determinism
        out.detectors.sort_by(|a, b| {
            b.stimulation.total_cmp(&a.stimulation).then(b.generation.cmp(&a.generation)).then(a.id.cmp(&b.id))
        });
        out.detectors.truncate(out.capacity);
        out.detectors.sort_by_key(|d| d.id);
    }
    out
}

fn mutate<R: Rng + ?Sized>(center: &[f64], sigma: f64, space: CandidateSpace, rng: &mut R) -> Vec<f64> {
    match space {
        CandidateSpace::UnitCube(_) => {
            let noise = Normal::new(0.0, sigma.max(0.0)).expect("finite stddev");
            center.iter().map(|&c| (c + noise.sample(rng)).clamp(0.0, 1.0)).collect()
        }
        CandidateSpace::Binary(_) => {
            let flip = sigma.clamp(0.0, 1.0);
            center.iter().map(|&c| if rng.random::<f64>() < flip { 1.0 - c } else { c }).collect()
        }
    }
}
