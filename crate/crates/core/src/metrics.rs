//! Confusion-matrix accounting over node verdicts and packet-delivery ratios.
//! The positive class is "malicious".

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::attacks::GroundTruth;
use crate::error::MetricsError;
use crate::net_model::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Honest,
    Malicious,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.tn += other.tn;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

pub fn classify_and_count(
    truth: &GroundTruth,
    verdicts: &BTreeMap<NodeId, Verdict>,
) -> Result<ConfusionCounts, MetricsError> {
    let mut c = ConfusionCounts::default();
    for (&id, &v) in verdicts {
        let malicious = truth.is_malicious(id).ok_or(MetricsError::UnknownNode(id))?;
        match (malicious, v) {
            (true, Verdict::Malicious) => c.tp += 1,
            (true, Verdict::Honest) => c.fn_ += 1,
            (false, Verdict::Malicious) => c.fp += 1,
            (false, Verdict::Honest) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Percentages; `None` where the denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Rates {
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub dr: Option<f64>,
}

fn percent(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64 * 100.0)
}

pub fn compute_rates(c: &ConfusionCounts) -> Rates {
    let dr = percent(c.tp, c.tp + c.fn_);
    Rates {
        fpr: percent(c.fp, c.fp + c.tn),
        // the complement keeps dr + fnr at exactly 100 in floating point
        fnr: dr.map(|d| 100.0 - d),
        dr,
    }
}

/// Delivery ratio in its literal aggregate form: `(1/n)·(ΣX/ΣY)·100` over
/// `n` experiments of (received X, sent Y).
pub fn pdr_eq8(experiments: &[(u64, u64)]) -> Result<f64, MetricsError> {
    check_sent(experiments)?;
    let rx: u64 = experiments.iter().map(|e| e.0).sum();
    let tx: u64 = experiments.iter().map(|e| e.1).sum();
    Ok(rx as f64 / tx as f64 * 100.0 / experiments.len() as f64)
}

/// Mean of the per-experiment ratios: `(1/n)·Σ(X/Y)·100`.
pub fn pdr_mean(experiments: &[(u64, u64)]) -> Result<f64, MetricsError> {
    check_sent(experiments)?;
    let sum: f64 = experiments.iter().map(|&(x, y)| x as f64 / y as f64).sum();
    Ok(sum / experiments.len() as f64 * 100.0)
}

fn check_sent(experiments: &[(u64, u64)]) -> Result<(), MetricsError> {
    if experiments.is_empty() {
        return Err(MetricsError::Empty);
    }
    match experiments.iter().position(|e| e.1 == 0) {
        Some(i) => Err(MetricsError::ZeroSent(i)),
        None => Ok(()),
    }
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Some((mean, var.sqrt()))
}

/// One executed (cell, seed) of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub scenario: String,
    pub seed: u64,
    pub n_uavs: usize,
    pub malicious_ratio: f64,
    pub t_s: f64,
    pub attack: String,
    pub defense: String,
    pub sim_time: f64,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub dr: Option<f64>,
    pub pdr_mean: Option<f64>,
    pub pdr_eq8: Option<f64>,
    pub sent: u64,
    pub received: u64,
}
