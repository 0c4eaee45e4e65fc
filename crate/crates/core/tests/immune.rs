use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uav_immune::immune::{
    affinity, clonal_select, train_detectors, AffinityMetric, CandidateSpace, Classification, ClonalParams, TrainParams,
};

fn manhattan(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0..=1.0f64, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn affinity_agrees_with_hand_formulas(a in point(), b in point()) {
        let e = (a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>()).sqrt();
        prop_assert!((affinity(&a, &b, AffinityMetric::Euclidean).unwrap() - e).abs() < 1e-12);
        prop_assert!((affinity(&a, &b, AffinityMetric::Manhattan).unwrap() - manhattan(&a, &b)).abs() < 1e-12);
        prop_assert_eq!(affinity(&a, &a, AffinityMetric::Euclidean).unwrap(), 0.0);
    }

    #[test]
    fn trained_detectors_avoid_self_and_classify_by_coverage(
        self_set in proptest::collection::vec(point(), 1..20),
        probes in proptest::collection::vec(point(), 1..40),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = TrainParams { ni: 25, radius: 0.15, metric: AffinityMetric::Manhattan, attempt_cap: 200_000 };
        let set = train_detectors(&self_set, &params, CandidateSpace::UnitCube(3), &mut rng).unwrap();
        prop_assert!(set.detectors.len() <= 25);
        for d in &set.detectors {
            for s in &self_set {
                prop_assert!(manhattan(&d.center, s) > d.radius);
            }
        }
        for x in &probes {
            let covered = set.detectors.iter().any(|d| manhattan(&d.center, x) <= d.radius);
            prop_assert_eq!(set.classify(x) == Classification::NonSelfRoute, covered);
        }
    }

    #[test]
    fn clonal_selection_never_adds_self_reactive_detectors(seed in any::<u64>(), antigen in point()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let self_set = vec![vec![0.8, 0.8, 0.9], vec![0.7, 0.9, 1.0]];
        let params = TrainParams { ni: 30, radius: 0.2, metric: AffinityMetric::Euclidean, attempt_cap: 200_000 };
        let set = train_detectors(&self_set, &params, CandidateSpace::UnitCube(3), &mut rng).unwrap();
        let matched: Vec<(usize, Vec<f64>)> = set.matching(&antigen).into_iter().map(|i| (i, antigen.clone())).collect();
        let next = clonal_select(&set, &matched, &self_set, &ClonalParams::default(), &mut rng);
        prop_assert!(next.len() <= 30);
        prop_assert!(!next.matches_any_self(&self_set));
        if matched.is_empty() {
            prop_assert_eq!(next.len(), set.len());
        }
    }
}

#[test]
fn mismatched_dimensions_are_rejected() {
    assert!(affinity(&[0.0, 1.0], &[0.0], AffinityMetric::Euclidean).is_err());
    assert!(affinity(&[0.5], &[1.0], AffinityMetric::Hamming).is_err());
    assert_eq!(affinity(&[1.0, 0.0, 1.0], &[1.0, 1.0, 0.0], AffinityMetric::Hamming).unwrap(), 2.0);
}
