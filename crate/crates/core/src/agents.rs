//! Antigen and dendritic cell agents.
//!
//! Agents are plain state machines; the [`engine`](crate::engine) decides
//! when each transition runs and routes the messages between them.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal_model::{
    derive_input_signals, process_signals, CumulativeSignals, SignalError, SignalMapping,
    WeightMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AntigenId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DcId(pub u64);

impl fmt::Display for AntigenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for DcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Classification outcome. `Anomalous` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Normal,
    Anomalous,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Normal => "normal",
            Category::Anomalous => "anomalous",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DcState {
    Immature,
    Semimature,
    Mature,
}

/// The verdict a migrated DC returns to every antigen it sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Context {
    /// Bit `0`: the DC went semimature and votes normal.
    Semimature,
    /// Bit `1`: the DC went mature and votes anomalous.
    Mature,
}

impl Context {
    pub fn bit(self) -> u8 {
        match self {
            Context::Semimature => 0,
            Context::Mature => 1,
        }
    }

    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Context::Mature
        } else {
            Context::Semimature
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AgentError {
    #[error("cannot sample {k} DCs from a population of {population}")]
    SampleTooLarge { k: usize, population: usize },
    #[error("DC {dc} received a picked message after maturing")]
    NotImmature { dc: DcId },
    #[error("antigen {antigen} received more than its {expected} expected contexts")]
    ContextOverflow { antigen: AntigenId, expected: usize },
    #[error("MCAV of an empty context list is undefined")]
    EmptyContexts,
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Sent by an antigen to each DC it selects.
#[derive(Debug, Clone, Copy)]
pub struct PickedMessage<'a> {
    pub antigen_id: AntigenId,
    pub attributes: &'a [f64],
}

/// Sent by a migrated DC to each antigen it sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContextMessage {
    pub dc_id: DcId,
    pub context: Context,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcAgent {
    pub id: DcId,
    pub state: DcState,
    migration_threshold: f64,
    pub cum: CumulativeSignals,
    /// Antigens sampled so far, in arrival order. Duplicates are kept.
    pub sampled: Vec<AntigenId>,
}

impl DcAgent {
    pub fn new(id: DcId, migration_threshold: f64) -> Self {
        DcAgent {
            id,
            state: DcState::Immature,
            migration_threshold,
            cum: CumulativeSignals::default(),
            sampled: Vec::new(),
        }
    }

    /// Fixed at creation.
    pub fn migration_threshold(&self) -> f64 {
        self.migration_threshold
    }

    /// Moves the DC into its terminal state and returns the context it will
    /// hand to each sampled antigen.
    pub fn migrate(&mut self) -> Context {
        let (state, context) = dc_decide_context(self);
        self.state = state;
        context
    }
}

/// Uniform partial Fisher–Yates shuffle over `0..population`.
///
/// Makes exactly `k` calls to `rng.gen_range(i..population)` for
/// `i = 0, 1, .., k-1`, swapping slot `i` with the drawn slot, and returns the
/// first `k` slots in that order.
pub fn sample_indices<R: Rng + ?Sized>(
    population: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>, AgentError> {
    if k > population {
        return Err(AgentError::SampleTooLarge { k, population });
    }
    let mut slots: Vec<usize> = (0..population).collect();
    for i in 0..k {
        let j = rng.gen_range(i..population);
        slots.swap(i, j);
    }
    slots.truncate(k);
    Ok(slots)
}

/// Draws `k` distinct DCs uniformly at random. See [`sample_indices`] for
/// the exact draw sequence.
pub fn sample_dcs<R: Rng + ?Sized>(
    population_ids: &[DcId],
    k: usize,
    rng: &mut R,
) -> Result<Vec<DcId>, AgentError> {
    Ok(sample_indices(population_ids.len(), k, rng)?
        .into_iter()
        .map(|i| population_ids[i])
        .collect())
}

/// Records the antigen and folds its signals into the DC's running sums.
/// Migration is checked separately by [`dc_should_migrate`].
pub fn dc_handle_picked(
    dc: &mut DcAgent,
    msg: PickedMessage<'_>,
    mapping: &SignalMapping,
    w: &WeightMatrix,
) -> Result<(), AgentError> {
    if dc.state != DcState::Immature {
        return Err(AgentError::NotImmature { dc: dc.id });
    }
    let out = process_signals(derive_input_signals(msg.attributes, mapping)?, w);
    dc.cum = dc.cum.accumulate(out);
    dc.sampled.push(msg.antigen_id);
    Ok(())
}

/// True once cumulative csm strictly exceeds the migration threshold.
pub fn dc_should_migrate(dc: &DcAgent) -> bool {
    dc.cum.cum_csm > dc.migration_threshold
}

/// Semimature (context 0) iff cumulative semi is strictly greater than
/// cumulative mat; ties and everything else go mature (context 1).
pub fn dc_decide_context(dc: &DcAgent) -> (DcState, Context) {
    if dc.cum.cum_semi > dc.cum.cum_mat {
        (DcState::Semimature, Context::Semimature)
    } else {
        (DcState::Mature, Context::Mature)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntigenAgent {
    pub id: AntigenId,
    pub attributes: Vec<f64>,
    pub true_label: Category,
    pub expected_contexts: usize,
    pub received: Vec<Context>,
    /// Set once all expected contexts have arrived.
    pub mcav: Option<f64>,
    /// Set when the engine classifies the completed antigen.
    pub predicted: Option<Category>,
}

impl AntigenAgent {
    pub fn new(
        id: AntigenId,
        attributes: Vec<f64>,
        true_label: Category,
        expected_contexts: usize,
    ) -> Self {
        AntigenAgent {
            id,
            attributes,
            true_label,
            expected_contexts,
            received: Vec::with_capacity(expected_contexts),
            mcav: None,
            predicted: None,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.received.len() == self.expected_contexts
    }

    pub fn picked_message(&self) -> PickedMessage<'_> {
        PickedMessage {
            antigen_id: self.id,
            attributes: &self.attributes,
        }
    }
}

pub fn antigen_handle_context(
    ag: &mut AntigenAgent,
    msg: ContextMessage,
) -> Result<(), AgentError> {
    if ag.received.len() >= ag.expected_contexts {
        return Err(AgentError::ContextOverflow {
            antigen: ag.id,
            expected: ag.expected_contexts,
        });
    }
    ag.received.push(msg.context);
    if ag.is_complete() {
        ag.mcav = Some(compute_mcav(&ag.received)?);
    }
    Ok(())
}

/// Fraction of contexts that are mature (`1`).
pub fn compute_mcav(contexts: &[Context]) -> Result<f64, AgentError> {
    if contexts.is_empty() {
        return Err(AgentError::EmptyContexts);
    }
    let ones = contexts.iter().filter(|c| **c == Context::Mature).count();
    Ok(ones as f64 / contexts.len() as f64)
}

/// Anomalous iff `mcav` is strictly above the threshold.
pub fn classify_antigen(mcav: f64, anomalous_threshold: f64) -> Category {
    if mcav > anomalous_threshold {
        Category::Anomalous
    } else {
        Category::Normal
    }
}
