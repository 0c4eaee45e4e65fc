use std::io;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::affinity::{distance, AffinityMetric};
use crate::error::ImmuneError;

/// Where candidate detectors are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CandidateSpace {
    /// `[0,1]^d`
    UnitCube(usize),
    /// `{0,1}^len`
    Binary(usize),
}

impl CandidateSpace {
    pub fn dim(&self) -> usize {
        match *self {
            CandidateSpace::UnitCube(d) | CandidateSpace::Binary(d) => d,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match *self {
            CandidateSpace::UnitCube(d) => (0..d).map(|_| rng.random::<f64>()).collect(),
            CandidateSpace::Binary(len) => (0..len).map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detector {
    pub id: u64,
    pub parent: Option<u64>,
    pub center: Vec<f64>,
    pub radius: f64,
    pub metric: AffinityMetric,
    pub generation: u32,
    pub stimulation: f64,
}

impl Detector {
    pub fn distance_to(&self, x: &[f64]) -> f64 {
        distance(&self.center, x, self.metric)
    }

    pub fn matches(&self, x: &[f64]) -> bool {
        self.distance_to(x) <= self.radius
    }

    /// Match strength in [0,1]: 1 at the center, 0 on the boundary.
    pub fn match_affinity(&self, x: &[f64]) -> f64 {
        if self.radius <= 0.0 {
            return if self.distance_to(x) == 0.0 { 1.0 } else { 0.0 };
        }
        (1.0 - self.distance_to(x) / self.radius).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSet {
    pub detectors: Vec<Detector>,
    pub capacity: usize,
    pub space: CandidateSpace,
    pub(crate) next_id: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    SelfRoute,
    NonSelfRoute,
}

impl DetectorSet {
    pub fn empty(capacity: usize, space: CandidateSpace) -> Self {
        DetectorSet { detectors: Vec::new(), capacity, space, next_id: 0 }
    }

    pub fn len(&self) -> usize {
        self.detectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detectors.is_empty()
    }

    pub(crate) fn push(&mut self, mut d: Detector) {
        d.id = self.next_id;
        self.next_id += 1;
        self.detectors.push(d);
    }

    /// Indices of every detector that matches `x`.
    pub fn matching(&self, x: &[f64]) -> Vec<usize> {
        self.detectors.iter().enumerate().filter(|(_, d)| d.matches(x)).map(|(i, _)| i).collect()
    }

    pub fn classify(&self, x: &[f64]) -> Classification {
        if self.detectors.iter().any(|d| d.matches(x)) {
            Classification::NonSelfRoute
        } else {
            Classification::SelfRoute
        }
    }

    pub fn matches_any_self(&self, self_set: &[Vec<f64>]) -> bool {
        self.detectors.iter().any(|d| self_set.iter().any(|s| d.matches(s)))
    }

    /// CSV export: one row per detector with its center components.
    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        let dim = self.space.dim();
        let mut header = vec!["id".to_string(), "generation".to_string(), "radius".to_string()];
        header.extend((0..dim).map(|i| format!("c{i}")));
        out.write_record(&header)?;
        for d in &self.detectors {
            let mut row = vec![d.id.to_string(), d.generation.to_string(), d.radius.to_string()];
            row.extend(d.center.iter().map(f64::to_string));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub ni: usize,
    pub radius: f64,
    pub metric: AffinityMetric,
    pub attempt_cap: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams { ni: 200, radius: 0.1, metric: AffinityMetric::Euclidean, attempt_cap: 1_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Training {
    pub set: DetectorSet,
    pub attempts: u64,
    pub complete: bool,
}

/// Negative selection: draw candidates from `space` and keep those that match no
/// self sample, until `ni` are kept or the attempt cap runs out. Always returns
/// what it managed to train.
pub fn train_detectors_partial<R: Rng + ?Sized>(
    self_set: &[Vec<f64>],
    params: &TrainParams,
    space: CandidateSpace,
    rng: &mut R,
) -> Result<Training, ImmuneError> {
    if self_set.is_empty() {
        return Err(ImmuneError::EmptySelfSet);
    }
    let dim = space.dim();
    if let Some(bad) = self_set.iter().find(|s| s.len() != dim) {
        return Err(crate::error::DimensionError { left: bad.len(), right: dim }.into());
    }
    let mut set = DetectorSet::empty(params.ni, space);
    let mut attempts = 0;
    while set.len() < params.ni && attempts < params.attempt_cap {
        attempts += 1;
        let center = space.sample(rng);
        let d = Detector {
            id: 0,
            parent: None,
            center,
            radius: params.radius,
            metric: params.metric,
            generation: 0,
            stimulation: 0.0,
        };
        if !self_set.iter().any(|s| d.matches(s)) {
            set.push(d);
        }
    }
    let complete = set.len() >= params.ni;
    Ok(Training { set, attempts, complete })
}

/// As [`train_detectors_partial`], but falling short of `ni` is an error.
pub fn train_detectors<R: Rng + ?Sized>(
    self_set: &[Vec<f64>],
    params: &TrainParams,
    space: CandidateSpace,
    rng: &mut R,
) -> Result<DetectorSet, ImmuneError> {
    let t = train_detectors_partial(self_set, params, space, rng)?;
    if t.complete {
        Ok(t.set)
    } else {
        Err(ImmuneError::TrainingCoverage { achieved: t.set.len(), requested: params.ni })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::RngRegistry;
    use proptest::prelude::*;

    fn grid(step: usize) -> Vec<Vec<f64>> {
        let n = step + 1;
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out.push(vec![i as f64 / step as f64, j as f64 / step as f64, k as f64 / step as f64]);
                }
            }
        }
        out
    }

    #[test]
    fn saturated_self_gives_coverage_error() {
        let params = TrainParams { attempt_cap: 5_000, ..TrainParams::default() };
        let mut rng = RngRegistry::new(1).stream("train");
        let err = train_detectors(&grid(10), &params, CandidateSpace::UnitCube(3), &mut rng).unwrap_err();
        assert_eq!(err, ImmuneError::TrainingCoverage { achieved: 0, requested: 200 });
    }

    #[test]
    fn uncovered_region_fills_and_censors() {
        // self samples only in the lower half of the first axis
        let self_set: Vec<Vec<f64>> = grid(10).into_iter().filter(|p| p[0] <= 0.5).collect();
        let params = TrainParams { ni: 50, radius: 0.05, ..TrainParams::default() };
        let mut rng = RngRegistry::new(2).stream("train");
        let set = train_detectors(&self_set, &params, CandidateSpace::UnitCube(3), &mut rng).unwrap();
        assert_eq!(set.len(), 50);
        for d in &set.detectors {
            for s in &self_set {
                assert!(d.distance_to(s) > 0.05);
            }
        }
        for s in &self_set {
            assert_eq!(set.classify(s), Classification::SelfRoute);
        }
        let c = set.detectors[0].center.clone();
        assert_eq!(set.classify(&c), Classification::NonSelfRoute);
    }

    #[test]
    fn empty_self_rejected() {
        let mut rng = RngRegistry::new(2).stream("train");
        assert_eq!(
            train_detectors(&[], &TrainParams::default(), CandidateSpace::UnitCube(3), &mut rng),
            Err(ImmuneError::EmptySelfSet)
        );
    }

    #[test]
    fn csv_export_has_one_row_per_detector() {
        let mut rng = RngRegistry::new(3).stream("train");
        let params = TrainParams { ni: 5, ..TrainParams::default() };
        let set = train_detectors(&[vec![0.5, 0.5, 0.5]], &params, CandidateSpace::UnitCube(3), &mut rng).unwrap();
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.starts_with("id,generation,radius,c0,c1,c2"));
    }

    proptest! {
        #[test]
        fn enlarging_radii_never_unflags(seed in 0u64..500, scale in 1.0..3.0f64, x in proptest::collection::vec(0.0..1.0f64, 3)) {
            let mut rng = RngRegistry::new(seed).stream("train");
            let params = TrainParams { ni: 20, radius: 0.1, ..TrainParams::default() };
            let set = train_detectors(&[vec![0.5, 0.5, 0.5]], &params, CandidateSpace::UnitCube(3), &mut rng).unwrap();
            let mut wider = set.clone();
            for d in &mut wider.detectors {
                d.radius *= scale;
            }
            if set.classify(&x) == Classification::NonSelfRoute {
                prop_assert_eq!(wider.classify(&x), Classification::NonSelfRoute);
            }
        }
    }
}
