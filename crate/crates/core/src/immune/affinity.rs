use serde::{Deserialize, Serialize};

use crate::error::{DimensionError, ImmuneError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AffinityMetric {
    Manhattan,
    Hamming,
    #[default]
    Euclidean,
}

/// Distance between two feature vectors; smaller means a closer match.
pub fn affinity(r: &[f64], s: &[f64], metric: AffinityMetric) -> Result<f64, ImmuneError> {
    if r.len() != s.len() {
        return Err(DimensionError { left: r.len(), right: s.len() }.into());
    }
    let pairs = r.iter().zip(s);
    Ok(match metric {
        AffinityMetric::Manhattan => pairs.map(|(a, b)| (a - b).abs()).sum(),
        AffinityMetric::Euclidean => pairs.map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        AffinityMetric::Hamming => {
            if r.iter().chain(s).any(|v| v.fract() != 0.0) {
                return Err(ImmuneError::NotDiscrete);
            }
            pairs.filter(|(a, b)| a != b).count() as f64
        }
    })
}

/// Unchecked variant for the hot path where dimensions are fixed by construction.
pub(crate) fn distance(r: &[f64], s: &[f64], metric: AffinityMetric) -> f64 {
    debug_assert_eq!(r.len(), s.len());
    let pairs = r.iter().zip(s);
    match metric {
        AffinityMetric::Manhattan => pairs.map(|(a, b)| (a - b).abs()).sum(),
        AffinityMetric::Euclidean => pairs.map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        AffinityMetric::Hamming => pairs.filter(|(a, b)| a != b).count() as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(s: &str) -> Vec<f64> {
        s.chars().map(|c| if c == '1' { 1.0 } else { 0.0 }).collect()
    }

    #[test]
    fn reference_values() {
        let v = [0.3, 0.7, 0.1];
        for m in [AffinityMetric::Manhattan, AffinityMetric::Euclidean] {
            assert_eq!(affinity(&v, &v, m).unwrap(), 0.0);
        }
        assert_eq!(affinity(&[0.0, 3.0], &[4.0, 0.0], AffinityMetric::Euclidean).unwrap(), 5.0);
        assert_eq!(affinity(&[0.0, 3.0], &[4.0, 0.0], AffinityMetric::Manhattan).unwrap(), 7.0);
        assert_eq!(affinity(&bits("10101"), &bits("10011"), AffinityMetric::Hamming).unwrap(), 2.0);
    }

    #[test]
    fn misuse_is_reported() {
        assert_eq!(
            affinity(&[1.0], &[1.0, 2.0], AffinityMetric::Euclidean),
            Err(ImmuneError::Dimension(DimensionError { left: 1, right: 2 }))
        );
        assert_eq!(affinity(&[0.5], &[1.0], AffinityMetric::Hamming), Err(ImmuneError::NotDiscrete));
    }

    fn vec3() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0..10.0f64, 3)
    }

    proptest! {
        #[test]
        fn metric_axioms(a in vec3(), b in vec3(), c in vec3()) {
            for m in [AffinityMetric::Manhattan, AffinityMetric::Euclidean] {
                let ab = affinity(&a, &b, m).unwrap();
                prop_assert_eq!(ab, affinity(&b, &a, m).unwrap());
                prop_assert_eq!(affinity(&a, &a, m).unwrap(), 0.0);
                prop_assert!(ab >= 0.0);
                let ac = affinity(&a, &c, m).unwrap();
                let cb = affinity(&c, &b, m).unwrap();
                prop_assert!(ab <= ac + cb + 1e-9);
            }
        }
    }
}
