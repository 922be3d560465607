//! Run statistics: the MCAV histogram and classification metrics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AntigenId, Category};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("MCAV {0} is outside [0, 1]")]
    ValueOutOfRange(f64),
    #[error("histogram needs at least one bin")]
    ZeroBins,
    #[error("no classification results to score")]
    EmptyResults,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub antigen_id: AntigenId,
    pub mcav: f64,
    pub predicted: Category,
    pub actual: Category,
}

/// Equal-width bins over `[0, 1]`; the top bin is closed on the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McavHistogram {
    pub bin_count: usize,
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl McavHistogram {
    /// `(lo, hi, count)` for each bin.
    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, usize)> + '_ {
        self.edges
            .windows(2)
            .zip(&self.counts)
            .map(|(e, &c)| (e[0], e[1], c))
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

pub fn build_histogram(mcavs: &[f64], bins: usize) -> Result<McavHistogram, AnalysisError> {
    if bins == 0 {
        return Err(AnalysisError::ZeroBins);
    }
    let edges: Vec<f64> = (0..=bins).map(|i| i as f64 / bins as f64).collect();
    let mut counts = vec![0; bins];
    for &v in mcavs {
        if !(0.0..=1.0).contains(&v) {
            return Err(AnalysisError::ValueOutOfRange(v));
        }
        let bin = ((v * bins as f64).floor() as usize).min(bins - 1);
        counts[bin] += 1;
    }
    Ok(McavHistogram {
        bin_count: bins,
        edges,
        counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// Rates with a zero denominator are `None` and serialise as `null`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub true_positive_rate: Option<f64>,
    pub false_positive_rate: Option<f64>,
    pub mean_mcav_normal: Option<f64>,
    pub mean_mcav_anomalous: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn compute_metrics(
    results: &[ClassificationResult],
) -> Result<(ConfusionCounts, Metrics), AnalysisError> {
    if results.is_empty() {
        return Err(AnalysisError::EmptyResults);
    }
    let mut c = ConfusionCounts::default();
    let (mut sum_normal, mut n_normal) = (0.0, 0usize);
    let (mut sum_anomalous, mut n_anomalous) = (0.0, 0usize);
    for r in results {
        match (r.predicted, r.actual) {
            (Category::Anomalous, Category::Anomalous) => c.tp += 1,
            (Category::Normal, Category::Normal) => c.tn += 1,
            (Category::Anomalous, Category::Normal) => c.fp += 1,
            (Category::Normal, Category::Anomalous) => c.fn_ += 1,
        }
        match r.actual {
            Category::Normal => {
                sum_normal += r.mcav;
                n_normal += 1;
            }
            Category::Anomalous => {
                sum_anomalous += r.mcav;
                n_anomalous += 1;
            }
        }
    }
    let metrics = Metrics {
        accuracy: (c.tp + c.tn) as f64 / c.total() as f64,
        true_positive_rate: ratio(c.tp, c.tp + c.fn_),
        false_positive_rate: ratio(c.fp, c.fp + c.tn),
        mean_mcav_normal: (n_normal > 0).then(|| sum_normal / n_normal as f64),
        mean_mcav_anomalous: (n_anomalous > 0).then(|| sum_anomalous / n_anomalous as f64),
    };
    Ok((c, metrics))
}
