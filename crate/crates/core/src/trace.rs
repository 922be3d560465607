//! Optional per-event trace of a run, written as CSV.
//!
//! Each line is `tick,event_kind,ids,values`. The `ids` and `values` columns
//! hold `key=value` pairs separated by `;` so they never contain a comma.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::agents::{AntigenId, Category, Context, DcId, DcState};
use crate::signal_model::CumulativeSignals;

pub const TRACE_HEADER: &str = "tick,event_kind,ids,values";

#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent {
    DcCreated {
        tick: u64,
        dc: DcId,
        position: usize,
        threshold: f64,
    },
    AntigenSpawned {
        tick: u64,
        antigen: AntigenId,
        picks: Vec<DcId>,
    },
    Picked {
        tick: u64,
        antigen: AntigenId,
        dc: DcId,
        cum: CumulativeSignals,
    },
    Migrated {
        tick: u64,
        dc: DcId,
        state: DcState,
        forced: bool,
        samples: usize,
        cum: CumulativeSignals,
    },
    ContextDelivered {
        tick: u64,
        dc: DcId,
        antigen: AntigenId,
        context: Context,
    },
    Classified {
        tick: u64,
        antigen: AntigenId,
        mcav: f64,
        predicted: Category,
    },
    Discarded {
        tick: u64,
        dc: DcId,
    },
}

impl TraceEvent {
    pub fn tick(&self) -> u64 {
        match self {
            TraceEvent::DcCreated { tick, .. }
            | TraceEvent::AntigenSpawned { tick, .. }
            | TraceEvent::Picked { tick, .. }
            | TraceEvent::Migrated { tick, .. }
            | TraceEvent::ContextDelivered { tick, .. }
            | TraceEvent::Classified { tick, .. }
            | TraceEvent::Discarded { tick, .. } => *tick,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            TraceEvent::DcCreated { .. } => "dc_created",
            TraceEvent::AntigenSpawned { .. } => "antigen_spawned",
            TraceEvent::Picked { .. } => "picked",
            TraceEvent::Migrated { forced: false, .. } => "migrated",
            TraceEvent::Migrated { forced: true, .. } => "flushed",
            TraceEvent::ContextDelivered { .. } => "context",
            TraceEvent::Classified { .. } => "classified",
            TraceEvent::Discarded { .. } => "discarded",
        }
    }

    pub fn csv_line(&self) -> String {
        let cum_values = |c: &CumulativeSignals| {
            format!(
                "cum_csm={};cum_semi={};cum_mat={}",
                c.cum_csm, c.cum_semi, c.cum_mat
            )
        };
        let (ids, values) = match self {
            TraceEvent::DcCreated {
                dc,
                position,
                threshold,
                ..
            } => (
                format!("dc={dc}"),
                format!("position={position};threshold={threshold}"),
            ),
            TraceEvent::AntigenSpawned { antigen, picks, .. } => {
                let mut picked = String::new();
                for (i, p) in picks.iter().enumerate() {
                    if i > 0 {
                        picked.push('|');
                    }
                    let _ = write!(picked, "{p}");
                }
                (format!("antigen={antigen}"), format!("picks={picked}"))
            }
            TraceEvent::Picked {
                antigen, dc, cum, ..
            } => (format!("antigen={antigen};dc={dc}"), cum_values(cum)),
            TraceEvent::Migrated {
                dc,
                state,
                samples,
                cum,
                ..
            } => {
                let state = match state {
                    DcState::Immature => "immature",
                    DcState::Semimature => "semimature",
                    DcState::Mature => "mature",
                };
                (
                    format!("dc={dc}"),
                    format!("state={state};samples={samples};{}", cum_values(cum)),
                )
            }
            TraceEvent::ContextDelivered {
                dc,
                antigen,
                context,
                ..
            } => (
                format!("dc={dc};antigen={antigen}"),
                format!("context={}", context.bit()),
            ),
            TraceEvent::Classified {
                antigen,
                mcav,
                predicted,
                ..
            } => (
                format!("antigen={antigen}"),
                format!("mcav={mcav};predicted={predicted}"),
            ),
            TraceEvent::Discarded { dc, .. } => (format!("dc={dc}"), String::new()),
        };
        format!("{},{},{},{}", self.tick(), self.kind(), ids, values)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    events: Vec<TraceEvent>,
}

impl Trace {
    pub fn push(&mut self, event: TraceEvent) {
        self.events.push(event);
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        for e in &self.events {
            writeln!(out, "{}", e.csv_line())?;
        }
        Ok(())
    }
}
