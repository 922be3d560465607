//! Signal fusion inside a dendritic cell.
//!
//! A record's normalised attributes are averaged into three input signals on
//! a `[0, 100]` scale (PAMP, danger, safe). A 3×3 weight matrix turns them
//! into the three output signals: costimulation (`csm`, migration pressure),
//! semimature evidence and mature evidence. A DC keeps running sums of the
//! outputs over every antigen it samples.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper end of the input signal scale.
pub const SIGNAL_SCALE: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SignalError {
    #[error("{signal} source index {index} out of bounds for {len} attributes")]
    IndexOutOfBounds {
        signal: &'static str,
        index: usize,
        len: usize,
    },
    #[error("{signal} source list is empty")]
    EmptySourceList { signal: &'static str },
    #[error("invalid weight matrix: {0}")]
    InvalidWeights(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InputSignals {
    pub pamp: f64,
    pub danger: f64,
    pub safe: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputSignals {
    pub csm: f64,
    pub semi: f64,
    pub mat: f64,
}

/// Running totals of [`OutputSignals`] held by one DC.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CumulativeSignals {
    pub cum_csm: f64,
    pub cum_semi: f64,
    pub cum_mat: f64,
}

impl CumulativeSignals {
    pub fn accumulate(self, out: OutputSignals) -> Self {
        CumulativeSignals {
            cum_csm: self.cum_csm + out.csm,
            cum_semi: self.cum_semi + out.semi,
            cum_mat: self.cum_mat + out.mat,
        }
    }
}

pub fn accumulate(cum: CumulativeSignals, out: OutputSignals) -> CumulativeSignals {
    cum.accumulate(out)
}

/// Which attribute columns feed each input signal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalMapping {
    pub pamp_sources: Vec<usize>,
    pub danger_sources: Vec<usize>,
    pub safe_sources: Vec<usize>,
    /// When set, the safe signal is `100·(1 − mean)`: low attribute scores
    /// read as healthy tissue.
    pub safe_is_complement: bool,
}

impl SignalMapping {
    /// Every signal reads every one of `attribute_count` columns.
    pub fn all_attributes(attribute_count: usize) -> Self {
        let all: Vec<usize> = (0..attribute_count).collect();
        SignalMapping {
            pamp_sources: all.clone(),
            danger_sources: all.clone(),
            safe_sources: all,
            safe_is_complement: true,
        }
    }

    fn sources(&self) -> [(&'static str, &[usize]); 3] {
        [
            ("pamp", &self.pamp_sources),
            ("danger", &self.danger_sources),
            ("safe", &self.safe_sources),
        ]
    }

    /// Checks that every source list is non-empty and indexes into a record
    /// of `attribute_count` values.
    pub fn validate(&self, attribute_count: usize) -> Result<(), SignalError> {
        for (signal, sources) in self.sources() {
            if sources.is_empty() {
                return Err(SignalError::EmptySourceList { signal });
            }
            if let Some(&index) = sources.iter().find(|&&i| i >= attribute_count) {
                return Err(SignalError::IndexOutOfBounds {
                    signal,
                    index,
                    len: attribute_count,
                });
            }
        }
        Ok(())
    }

    /// Smallest record width this mapping can read.
    pub fn required_attributes(&self) -> usize {
        self.sources()
            .iter()
            .flat_map(|(_, s)| s.iter())
            .max()
            .map_or(0, |m| m + 1)
    }
}

impl Default for SignalMapping {
    fn default() -> Self {
        SignalMapping::all_attributes(crate::data_ingest::ATTRIBUTE_COUNT)
    }
}

/// Weights contributed by one input signal to each output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputWeights {
    pub csm: f64,
    pub semi: f64,
    pub mat: f64,
}

/// `W[signal][output]`, stored row by row.
///
/// The shipped default is a configuration choice, not a published table:
///
/// | signal | csm | semi | mat |
/// |--------|-----|------|-----|
/// | pamp   | 2   | 0    | 2   |
/// | danger | 1   | 0    | 1   |
/// | safe   | 2   | 3    | -3  |
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightMatrix {
    pub pamp: OutputWeights,
    pub danger: OutputWeights,
    pub safe: OutputWeights,
    /// Divide each output by the sum of absolute weights in its column.
    /// Off by default; a zero column is left undivided.
    #[serde(default)]
    pub normalize_by_weight_sum: bool,
}

impl Default for WeightMatrix {
    fn default() -> Self {
        WeightMatrix {
            pamp: OutputWeights {
                csm: 2.0,
                semi: 0.0,
                mat: 2.0,
            },
            danger: OutputWeights {
                csm: 1.0,
                semi: 0.0,
                mat: 1.0,
            },
            safe: OutputWeights {
                csm: 2.0,
                semi: 3.0,
                mat: -3.0,
            },
            normalize_by_weight_sum: false,
        }
    }
}

impl WeightMatrix {
    pub fn rows(&self) -> [OutputWeights; 3] {
        [self.pamp, self.danger, self.safe]
    }

    /// All entries finite and the csm column nonnegative, so cumulative csm
    /// never decreases and a sampled DC eventually migrates.
    pub fn validate(&self) -> Result<(), SignalError> {
        for (name, row) in ["pamp", "danger", "safe"].iter().zip(self.rows()) {
            if ![row.csm, row.semi, row.mat].iter().all(|w| w.is_finite()) {
                return Err(SignalError::InvalidWeights(format!(
                    "{name} row has a non-finite weight"
                )));
            }
            if row.csm < 0.0 {
                return Err(SignalError::InvalidWeights(format!(
                    "{name}→csm weight {} is negative",
                    row.csm
                )));
            }
        }
        Ok(())
    }
}

fn mean_of(
    attributes: &[f64],
    sources: &[usize],
    signal: &'static str,
) -> Result<f64, SignalError> {
    if sources.is_empty() {
        return Err(SignalError::EmptySourceList { signal });
    }
    let mut sum = 0.0;
    for &i in sources {
        sum += *attributes.get(i).ok_or(SignalError::IndexOutOfBounds {
            signal,
            index: i,
            len: attributes.len(),
        })?;
    }
    Ok(sum / sources.len() as f64)
}

/// Averages the mapped attribute columns into `[0, 100]` input signals.
pub fn derive_input_signals(
    attributes: &[f64],
    mapping: &SignalMapping,
) -> Result<InputSignals, SignalError> {
    let pamp = SIGNAL_SCALE * mean_of(attributes, &mapping.pamp_sources, "pamp")?;
    let danger = SIGNAL_SCALE * mean_of(attributes, &mapping.danger_sources, "danger")?;
    let safe_mean = mean_of(attributes, &mapping.safe_sources, "safe")?;
    let safe = if mapping.safe_is_complement {
        SIGNAL_SCALE * (1.0 - safe_mean)
    } else {
        SIGNAL_SCALE * safe_mean
    };
    Ok(InputSignals { pamp, danger, safe })
}

/// Weighted sum of the inputs for each output signal.
pub fn process_signals(input: InputSignals, w: &WeightMatrix) -> OutputSignals {
    let InputSignals { pamp, danger, safe } = input;
    let (p, d, s) = (w.pamp, w.danger, w.safe);
    let mut out = OutputSignals {
        csm: p.csm * pamp + d.csm * danger + s.csm * safe,
        semi: p.semi * pamp + d.semi * danger + s.semi * safe,
        mat: p.mat * pamp + d.mat * danger + s.mat * safe,
    };
    if w.normalize_by_weight_sum {
        let scale = |a: f64, b: f64, c: f64| {
            let sum = a.abs() + b.abs() + c.abs();
            if sum > 0.0 {
                sum
            } else {
                1.0
            }
        };
        out.csm /= scale(p.csm, d.csm, s.csm);
        out.semi /= scale(p.semi, d.semi, s.semi);
        out.mat /= scale(p.mat, d.mat, s.mat);
    }
    out
}
