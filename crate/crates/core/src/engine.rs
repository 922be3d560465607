//! Deterministic tick scheduler.
//!
//! One antigen enters per tick. Within a tick everything happens
//! synchronously in a fixed order:
//!
//! 1. the head of the pending queue becomes an antigen agent and picks `k`
//!    distinct DCs;
//! 2. each picked DC, in pick order, processes the antigen's signals and is
//!    immediately checked for migration;
//! 3. a migrating DC decides its context and delivers it to every antigen it
//!    sampled, in sampling order and with multiplicity; an antigen that now
//!    holds `k` contexts is classified and moved to the results;
//! 4. the migrated DC is replaced, at the same position in the population,
//!    by a fresh immature DC with the next id.
//!
//! When the queue is empty, [`World::flush`] forces every DC still holding
//! samples to decide on its current sums, so every antigen completes.
//!
//! # Random stream
//!
//! A single ChaCha8 generator (`rand_chacha::ChaCha8Rng::seed_from_u64(seed)`)
//! drives the run. Draws happen in this order: one migration threshold per
//! initial DC in population order (`gen_range(t_min..=t_max)`); then for
//! every tick, the `k` index draws of [`sample_indices`], followed by one
//! threshold draw per replacement DC in migration order. Nothing else
//! consumes randomness.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{
    antigen_handle_context, classify_antigen, dc_handle_picked, dc_should_migrate, sample_indices,
    AgentError, AntigenAgent, AntigenId, Context, ContextMessage, DcAgent, DcId, DcState,
    PickedMessage,
};
use crate::analysis::{
    build_histogram, compute_metrics, AnalysisError, ClassificationResult, ConfusionCounts,
    McavHistogram, Metrics,
};
use crate::data_ingest::{AntigenRecord, AttributePolicy};
use crate::signal_model::{SignalMapping, WeightMatrix};
use crate::trace::{Trace, TraceEvent};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("no records to simulate")]
    EmptyDataset,
    #[error("tick {tick}: {source}")]
    Agent {
        tick: u64,
        #[source]
        source: AgentError,
    },
    #[error("tick {tick}: context addressed to antigen {antigen}, which is not in flight")]
    UnknownAntigen { tick: u64, antigen: AntigenId },
    #[error("antigen {antigen} holds {received} of {expected} contexts after flush")]
    Unflushable {
        antigen: AntigenId,
        received: usize,
        expected: usize,
    },
    #[error("flush requires an empty pending queue ({pending} records left)")]
    PendingNotEmpty { pending: usize },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Bounds of the uniform migration-threshold draw, in csm units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdRange {
    pub min: f64,
    pub max: f64,
}

/// Every tunable of a run. The JSON form of this struct is the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// DCs alive at any tick boundary.
    pub population_size: usize,
    /// DCs each antigen picks, and so contexts it waits for.
    pub dcs_per_antigen: usize,
    pub threshold_range: ThresholdRange,
    pub weight_matrix: WeightMatrix,
    pub signal_mapping: SignalMapping,
    /// An antigen is anomalous when its MCAV is strictly above this.
    pub anomalous_threshold: f64,
    pub histogram_bins: usize,
    pub attribute_policy: AttributePolicy,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            population_size: 100,
            dcs_per_antigen: 10,
            threshold_range: ThresholdRange {
                min: 100.0,
                max: 300.0,
            },
            weight_matrix: WeightMatrix::default(),
            signal_mapping: SignalMapping::default(),
            anomalous_threshold: 0.5,
            histogram_bins: 10,
            attribute_policy: AttributePolicy::default(),
            seed: DEFAULT_SEED,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let invalid = |msg: String| Err(EngineError::InvalidConfig(msg));
        if self.population_size == 0 {
            return invalid("population_size must be positive".into());
        }
        if self.dcs_per_antigen == 0 {
            return invalid("dcs_per_antigen must be positive".into());
        }
        if self.dcs_per_antigen > self.population_size {
            return invalid(format!(
                "dcs_per_antigen {} exceeds population_size {}",
                self.dcs_per_antigen, self.population_size
            ));
        }
        let ThresholdRange { min, max } = self.threshold_range;
        if !(min > 0.0 && min <= max && max.is_finite()) {
            return invalid(format!(
                "threshold_range [{min}, {max}] must satisfy 0 < min <= max"
            ));
        }
        if !(0.0..=1.0).contains(&self.anomalous_threshold) {
            return invalid(format!(
                "anomalous_threshold {} is outside [0, 1]",
                self.anomalous_threshold
            ));
        }
        if self.histogram_bins == 0 {
            return invalid("histogram_bins must be positive".into());
        }
        self.weight_matrix
            .validate()
            .map_err(|e| EngineError::InvalidConfig(e.to_string()))?;
        self.attribute_policy
            .validate()
            .map_err(|e| EngineError::InvalidConfig(e.to_string()))?;
        if self.signal_mapping.pamp_sources.is_empty()
            || self.signal_mapping.danger_sources.is_empty()
            || self.signal_mapping.safe_sources.is_empty()
        {
            return invalid("every signal needs at least one source attribute".into());
        }
        Ok(())
    }
}

/// Counters kept across a run, mainly for conservation checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunStats {
    pub ticks: u64,
    pub dcs_created: u64,
    pub dcs_migrated: u64,
    pub dcs_flushed: u64,
    pub dcs_discarded: u64,
    /// Σ |sampled| over every DC that migrated or was flushed.
    pub samples_released: u64,
    pub contexts_delivered: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub config: SimConfig,
    pub metrics: Metrics,
    pub confusion: ConfusionCounts,
    pub histogram: McavHistogram,
    pub stats: RunStats,
    /// One entry per record, ordered by antigen id.
    pub results: Vec<ClassificationResult>,
}

/// Full simulation state.
#[derive(Debug, Clone)]
pub struct World {
    tick: u64,
    pending: VecDeque<AntigenRecord>,
    dcs: Vec<DcAgent>,
    in_flight: BTreeMap<AntigenId, AntigenAgent>,
    results: Vec<ClassificationResult>,
    rng: ChaCha8Rng,
    next_dc_id: u64,
    stats: RunStats,
    trace: Option<Trace>,
}

impl World {
    /// Validates the inputs and creates the initial immature population.
    pub fn init(config: &SimConfig, records: Vec<AntigenRecord>) -> Result<World, EngineError> {
        config.validate()?;
        if records.is_empty() {
            return Err(EngineError::EmptyDataset);
        }
        let mut seen = BTreeSet::new();
        for r in &records {
            if !seen.insert(r.antigen_id) {
                return Err(EngineError::InvalidConfig(format!(
                    "antigen id {} appears more than once",
                    r.antigen_id
                )));
            }
            config
                .signal_mapping
                .validate(r.attributes.len())
                .map_err(|e| EngineError::InvalidConfig(format!("record {}: {e}", r.antigen_id)))?;
            if let Some(v) = r.attributes.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(EngineError::InvalidConfig(format!(
                    "record {} has attribute {v} outside [0, 1]",
                    r.antigen_id
                )));
            }
        }
        let mut pending: Vec<AntigenRecord> = records;
        pending.sort_by_key(|r| r.antigen_id);

        let mut world = World {
            tick: 0,
            pending: pending.into(),
            dcs: Vec::with_capacity(config.population_size),
            in_flight: BTreeMap::new(),
            results: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            next_dc_id: 0,
            stats: RunStats::default(),
            trace: None,
        };
        for position in 0..config.population_size {
            let dc = world.new_dc(config, position);
            world.dcs.push(dc);
        }
        Ok(world)
    }

    /// Starts recording events. Initial DCs are back-filled so the trace is
    /// complete from tick 0.
    pub fn enable_trace(&mut self) {
        let mut trace = Trace::default();
        if self.tick == 0 {
            for (position, dc) in self.dcs.iter().enumerate() {
                trace.push(TraceEvent::DcCreated {
                    tick: 0,
                    dc: dc.id,
                    position,
                    threshold: dc.migration_threshold(),
                });
            }
        }
        self.trace = Some(trace);
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn dcs(&self) -> &[DcAgent] {
        &self.dcs
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn in_flight(&self) -> &BTreeMap<AntigenId, AntigenAgent> {
        &self.in_flight
    }

    /// Completed antigens in completion order.
    pub fn results(&self) -> &[ClassificationResult] {
        &self.results
    }

    pub fn stats(&self) -> RunStats {
        self.stats
    }

    pub fn trace(&self) -> Option<&Trace> {
        self.trace.as_ref()
    }

    pub fn take_trace(&mut self) -> Option<Trace> {
        self.trace.take()
    }

    fn record(&mut self, event: impl FnOnce() -> TraceEvent) {
        if let Some(t) = self.trace.as_mut() {
            t.push(event());
        }
    }

    fn new_dc(&mut self, config: &SimConfig, position: usize) -> DcAgent {
        let ThresholdRange { min, max } = config.threshold_range;
        let threshold = self.rng.gen_range(min..=max);
        let id = DcId(self.next_dc_id);
        self.next_dc_id += 1;
        self.stats.dcs_created += 1;
        let tick = self.tick;
        self.record(|| TraceEvent::DcCreated {
            tick,
            dc: id,
            position,
            threshold,
        });
        DcAgent::new(id, threshold)
    }

    /// Runs one tick. With nothing pending this only advances the clock.
    pub fn step(&mut self, config: &SimConfig) -> Result<(), EngineError> {
        self.tick += 1;
        let Some(record) = self.pending.pop_front() else {
            self.stats.ticks = self.tick;
            return Ok(());
        };

        let tick = self.tick;
        let agent_err = |source| EngineError::Agent { tick, source };
        let antigen_id = record.antigen_id;
        let k = config.dcs_per_antigen;

        let picks = sample_indices(self.dcs.len(), k, &mut self.rng).map_err(agent_err)?;
        let picked_ids: Vec<DcId> = picks.iter().map(|&p| self.dcs[p].id).collect();
        self.record(|| TraceEvent::AntigenSpawned {
            tick,
            antigen: antigen_id,
            picks: picked_ids,
        });

        let attributes = record.attributes;
        self.in_flight.insert(
            antigen_id,
            AntigenAgent::new(antigen_id, attributes.clone(), record.true_label, k),
        );
        for &position in &picks {
            let dc = &mut self.dcs[position];
            let msg = PickedMessage {
                antigen_id,
                attributes: &attributes,
            };
            dc_handle_picked(dc, msg, &config.signal_mapping, &config.weight_matrix)
                .map_err(agent_err)?;
            let migrate = dc_should_migrate(dc);
            let (dc_id, cum) = (dc.id, dc.cum);
            self.record(|| TraceEvent::Picked {
                tick,
                antigen: antigen_id,
                dc: dc_id,
                cum,
            });

            if migrate {
                self.release(position, config, false)?;
                let replacement = self.new_dc(config, position);
                self.dcs[position] = replacement;
            }
        }
        self.stats.ticks = self.tick;
        Ok(())
    }

    /// Migrates the DC at `position` and delivers its context to every antigen
    /// it sampled. The dead DC is left in place for the caller to replace or
    /// drop.
    fn release(
        &mut self,
        position: usize,
        config: &SimConfig,
        forced: bool,
    ) -> Result<(), EngineError> {
        let tick = self.tick;
        let dc = &mut self.dcs[position];
        let context = dc.migrate();
        let sampled = std::mem::take(&mut dc.sampled);
        let (dc_id, state, cum) = (dc.id, dc.state, dc.cum);

        if forced {
            self.stats.dcs_flushed += 1;
        } else {
            self.stats.dcs_migrated += 1;
        }
        self.stats.samples_released += sampled.len() as u64;
        self.record(|| TraceEvent::Migrated {
            tick,
            dc: dc_id,
            state,
            forced,
            samples: sampled.len(),
            cum,
        });

        for antigen_id in sampled {
            self.deliver(antigen_id, ContextMessage { dc_id, context }, config)?;
        }
        Ok(())
    }

    fn deliver(
        &mut self,
        antigen_id: AntigenId,
        msg: ContextMessage,
        config: &SimConfig,
    ) -> Result<(), EngineError> {
        let tick = self.tick;
        let antigen = self
            .in_flight
            .get_mut(&antigen_id)
            .ok_or(EngineError::UnknownAntigen {
                tick,
                antigen: antigen_id,
            })?;
        antigen_handle_context(antigen, msg)
            .map_err(|source| EngineError::Agent { tick, source })?;
        self.stats.contexts_delivered += 1;
        let context: Context = msg.context;
        self.record(|| TraceEvent::ContextDelivered {
            tick,
            dc: msg.dc_id,
            antigen: antigen_id,
            context,
        });

        if let Some(mcav) = self.in_flight[&antigen_id].mcav {
            let mut antigen = self.in_flight.remove(&antigen_id).expect("antigen present");
            let predicted = classify_antigen(mcav, config.anomalous_threshold);
            antigen.predicted = Some(predicted);
            self.results.push(ClassificationResult {
                antigen_id,
                mcav,
                predicted,
                actual: antigen.true_label,
            });
            self.record(|| TraceEvent::Classified {
                tick,
                antigen: antigen_id,
                mcav,
                predicted,
            });
        }
        Ok(())
    }

    /// Ends the stream: every DC holding samples decides on its current sums
    /// and delivers its contexts; the population is then emptied.
    pub fn flush(&mut self, config: &SimConfig) -> Result<(), EngineError> {
        if !self.pending.is_empty() {
            return Err(EngineError::PendingNotEmpty {
                pending: self.pending.len(),
            });
        }
        let tick = self.tick;
        for position in 0..self.dcs.len() {
            if self.dcs[position].sampled.is_empty() {
                self.stats.dcs_discarded += 1;
                let dc = self.dcs[position].id;
                self.record(|| TraceEvent::Discarded { tick, dc });
            } else {
                self.release(position, config, true)?;
            }
        }
        self.dcs.clear();

        if let Some((&antigen, a)) = self.in_flight.iter().next() {
            return Err(EngineError::Unflushable {
                antigen,
                received: a.received.len(),
                expected: a.expected_contexts,
            });
        }
        Ok(())
    }

    /// Steps until the queue is drained, flushes, and scores the results.
    pub fn finish(mut self, config: &SimConfig) -> Result<(RunReport, Option<Trace>), EngineError> {
        while !self.pending.is_empty() {
            self.step(config)?;
        }
        self.flush(config)?;

        let mut results = std::mem::take(&mut self.results);
        results.sort_by_key(|r| r.antigen_id);
        let (confusion, metrics) = compute_metrics(&results)?;
        let mcavs: Vec<f64> = results.iter().map(|r| r.mcav).collect();
        let histogram = build_histogram(&mcavs, config.histogram_bins)?;
        let report = RunReport {
            seed: config.seed,
            config: config.clone(),
            metrics,
            confusion,
            histogram,
            stats: self.stats,
            results,
        };
        Ok((report, self.trace.take()))
    }
}

/// Simulates `records` under `config`. Deterministic in its inputs.
pub fn run(config: &SimConfig, records: Vec<AntigenRecord>) -> Result<RunReport, EngineError> {
    World::init(config, records)?
        .finish(config)
        .map(|(report, _)| report)
}

/// Like [`run`], also returning the event trace.
pub fn run_traced(
    config: &SimConfig,
    records: Vec<AntigenRecord>,
) -> Result<(RunReport, Trace), EngineError> {
    let mut world = World::init(config, records)?;
    world.enable_trace();
    let (report, trace) = world.finish(config)?;
    Ok((report, trace.unwrap_or_default()))
}

/// True when every DC in the population is immature, as it must be at every
/// tick boundary.
pub fn population_is_immature(dcs: &[DcAgent]) -> bool {
    dcs.iter().all(|dc| dc.state == DcState::Immature)
}
