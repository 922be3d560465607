//! Loading the Wisconsin breast cancer file into antigen records.
//!
//! The input is the UCI `breast-cancer-wisconsin.data` layout: one record per
//! line, 11 comma-separated fields (sample id, nine attributes scored 1..=10,
//! class code), no header, and `?` for a missing attribute.

use std::io::{BufRead, BufReader, Read};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AntigenId, Category};

/// Number of attribute slots in a Wisconsin record.
pub const ATTRIBUTE_COUNT: usize = 9;

const FIELD_COUNT: usize = ATTRIBUTE_COUNT + 2;
const CLASS_BENIGN: u8 = 2;
const CLASS_MALIGNANT: u8 = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("expected {FIELD_COUNT} fields, found {found}")]
    FieldCount { found: usize },
    #[error("field {field} is neither an integer nor `?`: {value:?}")]
    NonNumericField { field: usize, value: String },
    #[error("class code {code} is not 2 (benign) or 4 (malignant)")]
    ClassCode { code: String },
    #[error("value {value} outside declared bounds [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("bounds [{lo}, {hi}] do not satisfy lo < hi")]
    BadBounds { lo: f64, hi: f64 },
    #[error("attribute policy declares {found} bounds, expected {ATTRIBUTE_COUNT}")]
    BoundsCount { found: usize },
    #[error("attribute {attribute} has no observed values to impute from")]
    NothingToImpute { attribute: usize },
    #[error("dataset produced no records")]
    EmptyDataset,
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<IngestError>,
    },
    #[error("read failed: {0}")]
    Io(String),
}

impl IngestError {
    fn at_line(self, line: usize) -> Self {
        IngestError::AtLine {
            line,
            source: Box::new(self),
        }
    }
}

/// One unnormalised row of the data file. `None` marks a `?` attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub sample_id: u64,
    pub attributes: [Option<i64>; ATTRIBUTE_COUNT],
    pub class_code: u8,
}

impl RawRecord {
    pub fn has_missing(&self) -> bool {
        self.attributes.iter().any(Option::is_none)
    }

    pub fn category(&self) -> Category {
        if self.class_code == CLASS_MALIGNANT {
            Category::Anomalous
        } else {
            Category::Normal
        }
    }
}

/// A normalised record ready to be carried by an antigen agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntigenRecord {
    pub antigen_id: AntigenId,
    pub source_sample_id: u64,
    /// Every value lies in `[0, 1]`.
    pub attributes: Vec<f64>,
    pub true_label: Category,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingValuePolicy {
    /// Drop any row with a `?` attribute.
    #[default]
    SkipRecord,
    /// Replace `?` with the column median of the observed values. For an even
    /// number of observations the lower of the two middle values is used.
    ImputeMedian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeBounds {
    pub lo: f64,
    pub hi: f64,
}

impl Default for AttributeBounds {
    fn default() -> Self {
        AttributeBounds { lo: 1.0, hi: 10.0 }
    }
}

/// How rows are cleaned and scaled. Bounds are fixed, not fitted to the
/// data, so a record's normalised value never depends on its neighbours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributePolicy {
    pub missing_value_policy: MissingValuePolicy,
    /// One entry per attribute column.
    pub bounds: Vec<AttributeBounds>,
}

impl Default for AttributePolicy {
    fn default() -> Self {
        AttributePolicy {
            missing_value_policy: MissingValuePolicy::SkipRecord,
            bounds: vec![AttributeBounds::default(); ATTRIBUTE_COUNT],
        }
    }
}

impl AttributePolicy {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.bounds.len() != ATTRIBUTE_COUNT {
            return Err(IngestError::BoundsCount {
                found: self.bounds.len(),
            });
        }
        for b in &self.bounds {
            // Written this way so NaN bounds are rejected too.
            if !(b.lo < b.hi) || !b.lo.is_finite() || !b.hi.is_finite() {
                return Err(IngestError::BadBounds { lo: b.lo, hi: b.hi });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelCounts {
    pub normal: usize,
    pub anomalous: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub rows_read: usize,
    pub rows_skipped: usize,
    pub records_produced: usize,
    pub label_counts: LabelCounts,
}

/// Parses one data line. Missing markers are kept; nothing is normalised.
pub fn parse_record(line: &str) -> Result<RawRecord, IngestError> {
    let fields: Vec<&str> = line.trim().split(',').map(str::trim).collect();
    if fields.len() != FIELD_COUNT {
        return Err(IngestError::FieldCount {
            found: fields.len(),
        });
    }

    let sample_id = fields[0]
        .parse::<u64>()
        .map_err(|_| IngestError::NonNumericField {
            field: 0,
            value: fields[0].to_string(),
        })?;

    let mut attributes = [None; ATTRIBUTE_COUNT];
    for (slot, (i, raw)) in attributes.iter_mut().zip(fields.iter().enumerate().skip(1)) {
        if *raw == "?" {
            continue;
        }
        let v = raw
            .parse::<i64>()
            .map_err(|_| IngestError::NonNumericField {
                field: i,
                value: raw.to_string(),
            })?;
        *slot = Some(v);
    }

    let class_raw = fields[FIELD_COUNT - 1];
    let class_code = match class_raw.parse::<u8>() {
        Ok(c @ (CLASS_BENIGN | CLASS_MALIGNANT)) => c,
        Ok(_) => {
            return Err(IngestError::ClassCode {
                code: class_raw.to_string(),
            })
        }
        Err(_) => {
            return Err(IngestError::NonNumericField {
                field: FIELD_COUNT - 1,
                value: class_raw.to_string(),
            })
        }
    };

    Ok(RawRecord {
        sample_id,
        attributes,
        class_code,
    })
}

/// Min-max scales `value` from `[lo, hi]` onto `[0, 1]`.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn normalize_attribute(value: f64, lo: f64, hi: f64) -> Result<f64, IngestError> {
    if !(lo < hi) {
        return Err(IngestError::BadBounds { lo, hi });
    }
    if !(lo..=hi).contains(&value) {
        return Err(IngestError::OutOfRange { value, lo, hi });
    }
    Ok((value - lo) / (hi - lo))
}

/// Reads every line of `source`, applies the missing-value policy, and
/// returns normalised records with `antigen_id`s assigned in file order.
///
/// Blank lines are ignored and do not count as rows. Parse errors carry the
/// 1-based line number.
pub fn load_dataset<R: Read>(
    source: R,
    policy: &AttributePolicy,
) -> Result<(Vec<AntigenRecord>, DatasetSummary), IngestError> {
    policy.validate()?;

    let mut rows: Vec<(usize, RawRecord)> = Vec::new();
    for (idx, line) in BufReader::new(source).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| IngestError::Io(e.to_string()).at_line(line_no))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw = parse_record(&line).map_err(|e| e.at_line(line_no))?;
        rows.push((line_no, raw));
    }

    let mut summary = DatasetSummary {
        rows_read: rows.len(),
        ..Default::default()
    };

    let medians = match policy.missing_value_policy {
        MissingValuePolicy::SkipRecord => None,
        MissingValuePolicy::ImputeMedian => Some(column_medians(rows.iter().map(|(_, r)| r))?),
    };

    let mut records = Vec::with_capacity(rows.len());
    for (line_no, raw) in &rows {
        let values: Vec<i64> = match &medians {
            None if raw.has_missing() => {
                summary.rows_skipped += 1;
                continue;
            }
            None => raw
                .attributes
                .iter()
                .map(|a| a.unwrap_or_default())
                .collect(),
            Some(med) => raw
                .attributes
                .iter()
                .zip(med)
                .map(|(a, m)| a.unwrap_or(*m))
                .collect(),
        };

        let attributes = values
            .iter()
            .zip(&policy.bounds)
            .map(|(&v, b)| normalize_attribute(v as f64, b.lo, b.hi))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.at_line(*line_no))?;

        let true_label = raw.category();
        match true_label {
            Category::Normal => summary.label_counts.normal += 1,
            Category::Anomalous => summary.label_counts.anomalous += 1,
        }
        records.push(AntigenRecord {
            antigen_id: AntigenId(records.len()),
            source_sample_id: raw.sample_id,
            attributes,
            true_label,
        });
    }

    if records.is_empty() {
        return Err(IngestError::EmptyDataset);
    }
    summary.records_produced = records.len();
    Ok((records, summary))
}

/// Lower median of the observed values in each attribute column.
fn column_medians<'a>(
    rows: impl Iterator<Item = &'a RawRecord> + Clone,
) -> Result<[i64; ATTRIBUTE_COUNT], IngestError> {
    let mut medians = [0; ATTRIBUTE_COUNT];
    for (col, median) in medians.iter_mut().enumerate() {
        let mut observed: Vec<i64> = rows.clone().filter_map(|r| r.attributes[col]).collect();
        if observed.is_empty() {
            // An entirely missing column only matters if some row needs it.
            if rows.clone().next().is_some() {
                return Err(IngestError::NothingToImpute { attribute: col });
            }
            continue;
        }
        observed.sort_unstable();
        *median = observed[(observed.len() - 1) / 2];
    }
    Ok(medians)
}
