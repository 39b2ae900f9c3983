//! Step traces, one JSON object per line.

use std::io::Write;

use chrcp_core::abstract_engine::AbstractStep;
use chrcp_core::harness::classify_step;
use chrcp_core::op_engine::{ExecutionState, Observer, Step};
use chrcp_core::{Program, Store};
use serde::Serialize;

use crate::report::atoms;

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceEvent {
    pub index: usize,
    pub kind: String,
    /// The goal the step consumed, or the rule instance for abstract runs.
    pub goal_digest: String,
    pub store_before: Vec<String>,
    pub store_after: Vec<String>,
    /// `silent`, `abstract`, `violation`, or `unchecked` when the oracle gave up.
    pub classification: String,
}

fn labeled(s: &ExecutionState) -> Vec<String> {
    s.store.iter().map(|(n, a)| format!("{a}#{n}")).collect()
}

/// Records goal-stack steps, classifying each against the abstract semantics.
pub struct Recorder<'p> {
    program: &'p Program,
    oracle_budget: usize,
    pub events: Vec<TraceEvent>,
}

impl<'p> Recorder<'p> {
    pub fn new(program: &'p Program, oracle_budget: usize) -> Self {
        Recorder {
            program,
            oracle_budget,
            events: Vec::new(),
        }
    }
}

impl Observer for Recorder<'_> {
    fn on_step(
        &mut self,
        index: usize,
        step: &Step,
        before: &ExecutionState,
        after: &ExecutionState,
    ) {
        let classification = classify_step(
            self.program,
            before,
            after,
            step.firing.as_ref(),
            self.oracle_budget,
        )
        .map_or("unchecked", |c| c.name());
        self.events.push(TraceEvent {
            index,
            kind: step.kind.name().to_string(),
            goal_digest: before.top().map(ToString::to_string).unwrap_or_default(),
            store_before: labeled(before),
            store_after: labeled(after),
            classification: classification.to_string(),
        });
    }
}

/// Events for a run of the abstract engine from `initial`.
pub fn abstract_events(initial: &Store, steps: &[AbstractStep]) -> Vec<TraceEvent> {
    let mut cur = initial.clone();
    steps
        .iter()
        .enumerate()
        .map(|(index, step)| {
            let next = cur
                .difference(&step.consumed)
                .expect("steps apply in order")
                .union(&step.produced);
            let event = TraceEvent {
                index,
                kind: "rule".to_string(),
                goal_digest: step.to_string(),
                store_before: atoms(&cur),
                store_after: atoms(&next),
                classification: "abstract".to_string(),
            };
            cur = next;
            event
        })
        .collect()
}

pub fn write_events(out: &mut impl Write, events: &[TraceEvent]) -> std::io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut *out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
