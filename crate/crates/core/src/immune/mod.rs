//! Artificial immune system: affinity metrics, negative-selection detectors,
//! clonal selection and the safety memory of vetted routes.

mod affinity;
pub mod binary;
mod clonal;
mod memory;
mod negative_selection;

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use affinity::{affinity, AffinityMetric};
pub use clonal::{clonal_select, ClonalParams};
pub use memory::{MemoryEntry, SafetyMemory};
pub use negative_selection::{
    train_detectors, train_detectors_partial, CandidateSpace, Classification, Detector, DetectorSet, TrainParams,
    Training,
};

use crate::error::ConfigError;
use crate::sim::SimTime;

/// Antigen: a candidate route summarized as three features in [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub rtt_norm: f64,
    pub ssi_norm: f64,
    pub reverse_count_score: f64,
}

impl FeatureVector {
    pub fn new(rtt_norm: f64, ssi_norm: f64, reverse_count_score: f64) -> Self {
        FeatureVector {
            rtt_norm: rtt_norm.clamp(0.0, 1.0),
            ssi_norm: ssi_norm.clamp(0.0, 1.0),
            reverse_count_score: reverse_count_score.clamp(0.0, 1.0),
        }
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.rtt_norm, self.ssi_norm, self.reverse_count_score]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImmuneParams {
    pub radius: f64,
    pub ni: usize,
    pub metric: AffinityMetric,
    pub attempt_cap: u64,
    /// Self samples gathered before this instant train the detectors.
    pub training_horizon: f64,
    /// Bound on buffered antigens and self samples.
    pub antigen_capacity: usize,
    /// Lifetime of safety-memory entries.
    pub memory_ttl: f64,
    pub clonal: ClonalParams,
}

impl Default for ImmuneParams {
    fn default() -> Self {
        ImmuneParams {
            radius: 0.1,
            ni: 200,
            metric: AffinityMetric::Euclidean,
            attempt_cap: 1_000_000,
            training_horizon: 70.0,
            antigen_capacity: 1200,
            memory_ttl: 11.0,
            clonal: ClonalParams::default(),
        }
    }
}

impl ImmuneParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(ConfigError::invalid("immune.radius", "must be positive"));
        }
        if self.ni == 0 {
            return Err(ConfigError::invalid("immune.ni", "must be at least 1"));
        }
        if self.antigen_capacity == 0 {
            return Err(ConfigError::invalid("immune.antigen_capacity", "must be at least 1"));
        }
        if self.metric == AffinityMetric::Hamming {
            return Err(ConfigError::invalid(
                "immune.metric",
                "route features are continuous; use euclidean or manhattan",
            ));
        }
        if !(self.training_horizon >= 0.0 && self.memory_ttl >= 0.0) {
            return Err(ConfigError::invalid("immune", "times must be non-negative"));
        }
        if !(self.clonal.beta > 0.0 && self.clonal.mutation_base >= 0.0 && self.clonal.mutation_decay >= 0.0) {
            return Err(ConfigError::invalid("immune.clonal", "parameters out of range"));
        }
        Ok(())
    }

    pub fn train_params(&self) -> TrainParams {
        TrainParams { ni: self.ni, radius: self.radius, metric: self.metric, attempt_cap: self.attempt_cap }
    }
}

fn push_bounded<T>(buf: &mut VecDeque<T>, cap: usize, item: T) {
    if buf.len() == cap {
        buf.pop_front();
    }
    buf.push_back(item);
}

/// Immune state held by one source node.
#[derive(Debug, Clone)]
pub struct ImmuneAgent {
    params: ImmuneParams,
    self_samples: VecDeque<Vec<f64>>,
    antigens: VecDeque<Vec<f64>>,
    detectors: Option<DetectorSet>,
    training_complete: bool,
}

impl ImmuneAgent {
    pub fn new(params: ImmuneParams) -> Self {
        ImmuneAgent {
            params,
            self_samples: VecDeque::new(),
            antigens: VecDeque::new(),
            detectors: None,
            training_complete: false,
        }
    }

    pub fn detectors(&self) -> Option<&DetectorSet> {
        self.detectors.as_ref()
    }

    /// Whether the last training reached `ni` detectors.
    pub fn training_complete(&self) -> bool {
        self.training_complete
    }

    pub fn self_sample_count(&self) -> usize {
        self.self_samples.len()
    }

    pub fn record_antigen(&mut self, fv: FeatureVector, benign: bool, now: SimTime) {
        let v = fv.to_vec();
        if benign && now < self.params.training_horizon {
            push_bounded(&mut self.self_samples, self.params.antigen_capacity, v.clone());
        }
        push_bounded(&mut self.antigens, self.params.antigen_capacity, v);
    }

    /// Trains once, the first time it is called at or after the horizon with a
    /// non-empty self set. Returns whether training happened on this call.
    pub fn train_if_due<R: Rng + ?Sized>(&mut self, now: SimTime, rng: &mut R) -> bool {
        if self.detectors.is_some() || now < self.params.training_horizon || self.self_samples.is_empty() {
            return false;
        }
        let self_set: Vec<Vec<f64>> = self.self_samples.iter().cloned().collect();
        match train_detectors_partial(&self_set, &self.params.train_params(), CandidateSpace::UnitCube(3), rng) {
            Ok(t) => {
                self.training_complete = t.complete;
                if !t.complete {
                    log::debug!("detector training stopped at {} of {}", t.set.len(), self.params.ni);
                }
                self.detectors = Some(t.set);
                true
            }
            Err(e) => {
                log::warn!("detector training failed: {e}");
                false
            }
        }
    }

    pub fn classify(&self, fv: FeatureVector) -> Classification {
        match &self.detectors {
            Some(d) => d.classify(&fv.to_vec()),
            None => Classification::SelfRoute,
        }
    }

    /// Feeds the antigens detected in one selection round to clonal selection.
    pub fn stimulate<R: Rng + ?Sized>(&mut self, nonself: &[FeatureVector], rng: &mut R) {
        let Some(det) = &self.detectors else { return };
        let mut matched = Vec::new();
        for fv in nonself {
            let v = fv.to_vec();
            for i in det.matching(&v) {
                matched.push((i, v.clone()));
            }
        }
        if matched.is_empty() {
            return;
        }
        let self_set: Vec<Vec<f64>> = self.self_samples.iter().cloned().collect();
        let next = clonal_select(det, &matched, &self_set, &self.params.clonal, rng);
        self.detectors = Some(next);
    }
}
