//! Soundness fuzzing over a range of generator seeds, one independent run per
//! seed in parallel.

use std::ops::Range;

use anyhow::{bail, Context, Result};
use chrcp_core::harness::{
    check_soundness, generate_random, Generated, SizeParams, SoundnessConfig,
};
use chrcp_core::op_engine::OpConfig;
use chrcp_core::{Pattern, Store};
use rayon::prelude::*;
use serde::Serialize;

use crate::report::{atoms, SoundnessJson};

#[derive(Debug, Clone, Copy)]
pub struct FuzzOptions {
    pub size: SizeParams,
    pub config: SoundnessConfig,
    /// Use each seed also to drive the engine's choice among matches.
    pub vary_choice: bool,
}

impl Default for FuzzOptions {
    fn default() -> Self {
        FuzzOptions {
            size: SizeParams::DESK,
            config: SoundnessConfig::default(),
            vary_choice: true,
        }
    }
}

/// Parses `A..B` (exclusive) or `A..=B` (inclusive).
pub fn parse_seed_range(text: &str) -> Result<Range<u64>> {
    let (a, b, inclusive) = if let Some((a, b)) = text.split_once("..=") {
        (a, b, true)
    } else if let Some((a, b)) = text.split_once("..") {
        (a, b, false)
    } else {
        bail!("expected a seed range `A..B`, found `{text}`");
    };
    let a: u64 = a
        .trim()
        .parse()
        .with_context(|| format!("bad range start `{a}`"))?;
    let b: u64 = b
        .trim()
        .parse()
        .with_context(|| format!("bad range end `{b}`"))?;
    let end = if inclusive {
        b.checked_add(1).context("range end overflows")?
    } else {
        b
    };
    if end < a {
        bail!("empty seed range `{text}`");
    }
    Ok(a..end)
}

pub fn size_preset(name: &str) -> Result<SizeParams> {
    match name {
        "desk" => Ok(SizeParams::DESK),
        other => bail!("unknown size preset `{other}` (known: desk)"),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub seed: u64,
    pub program: String,
    pub store: Vec<String>,
    /// The store after deleting every element not needed for the failure.
    pub shrunk_store: Vec<String>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub ok: bool,
    pub steps: usize,
    #[serde(rename = "abstract")]
    pub abstract_steps: usize,
    pub step_limit_exceeded: bool,
    pub has_comprehension_head: bool,
    pub has_propagation_rule: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FuzzSummary {
    pub seeds: [u64; 2],
    pub runs: usize,
    pub ok_runs: usize,
    pub violations: usize,
    pub step_limit_runs: usize,
    pub steps: usize,
    #[serde(rename = "abstract")]
    pub abstract_steps: usize,
    pub with_comprehension_head: usize,
    pub with_propagation_rule: usize,
    pub failures: Vec<Failure>,
}

impl FuzzSummary {
    pub fn all_ok(&self) -> bool {
        self.ok_runs == self.runs
    }
}

fn config_for(seed: u64, opts: &FuzzOptions) -> SoundnessConfig {
    let mut config = opts.config;
    if opts.vary_choice {
        config.op = OpConfig { seed, ..config.op };
    }
    config
}

/// `Err` carries a description of the failure.
fn check(
    g: &Generated,
    store: &Store,
    config: SoundnessConfig,
) -> Result<(usize, usize, bool), String> {
    let init: Vec<Pattern> = store.iter().cloned().map(Pattern::Atom).collect();
    match check_soundness(&g.program, init, config) {
        Ok(r) if r.ok() => Ok((r.steps.len(), r.count("abstract"), r.step_limit_exceeded)),
        Ok(r) => {
            Err(serde_json::to_string(&SoundnessJson::from(&r).violations[0]).unwrap_or_default())
        }
        Err(e) => Err(e.to_string()),
    }
}

/// Deletes store elements one at a time while the check still fails.
fn shrink(g: &Generated, store: &Store, config: SoundnessConfig) -> Store {
    let mut cur = store.clone();
    let mut k = 0;
    while k < cur.len() {
        let mut atoms = cur.atoms().to_vec();
        atoms.remove(k);
        let smaller = Store::from_atoms(atoms);
        if check(g, &smaller, config).is_err() {
            cur = smaller;
        } else {
            k += 1;
        }
    }
    cur
}

pub fn run_seed(seed: u64, opts: &FuzzOptions) -> SeedOutcome {
    let g = generate_random(seed, opts.size);
    let config = config_for(seed, opts);
    let store = g.store();
    let rules = &g.program.rules;
    let has_comprehension_head = rules
        .iter()
        .any(|r| r.heads().any(|(_, h)| h.as_comp().is_some()));
    let has_propagation_rule = rules.iter().any(|r| r.is_propagation());
    let (ok, steps, abstract_steps, step_limit_exceeded, failure) = match check(&g, &store, config)
    {
        Ok((steps, abs, limit)) => (true, steps, abs, limit, None),
        Err(detail) => {
            let failure = Failure {
                seed,
                program: g.program_text.clone(),
                store: atoms(&store),
                shrunk_store: atoms(&shrink(&g, &store, config)),
                detail,
            };
            (false, 0, 0, false, Some(failure))
        }
    };
    SeedOutcome {
        seed,
        ok,
        steps,
        abstract_steps,
        step_limit_exceeded,
        has_comprehension_head,
        has_propagation_rule,
        failure,
    }
}

pub fn fuzz(seeds: Range<u64>, opts: &FuzzOptions) -> FuzzSummary {
    let outcomes: Vec<SeedOutcome> = seeds
        .clone()
        .into_par_iter()
        .map(|s| run_seed(s, opts))
        .collect();
    let count = |f: fn(&SeedOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count();
    FuzzSummary {
        seeds: [seeds.start, seeds.end],
        runs: outcomes.len(),
        ok_runs: count(|o| o.ok),
        violations: count(|o| !o.ok),
        step_limit_runs: count(|o| o.step_limit_exceeded),
        steps: outcomes.iter().map(|o| o.steps).sum(),
        abstract_steps: outcomes.iter().map(|o| o.abstract_steps).sum(),
        with_comprehension_head: count(|o| o.has_comprehension_head),
        with_propagation_rule: count(|o| o.has_propagation_rule),
        failures: outcomes.into_iter().filter_map(|o| o.failure).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_ranges() {
        assert_eq!(parse_seed_range("0..10").unwrap(), 0..10);
        assert_eq!(parse_seed_range("5..=5").unwrap(), 5..6);
        assert!(parse_seed_range("3..1").is_err());
        assert!(parse_seed_range("7").is_err());
    }

    #[test]
    fn small_sweep_is_clean_and_covers_both_rule_kinds() {
        let summary = fuzz(0..64, &FuzzOptions::default());
        assert!(summary.all_ok(), "{:?}", summary.failures);
        assert!(summary.with_comprehension_head > 0 && summary.with_propagation_rule > 0);
    }

    #[test]
    fn shrinking_keeps_a_failing_store() {
        use chrcp_core::matcher::MatchOptions;
        let mut opts = FuzzOptions::default();
        opts.config.op.matching = MatchOptions { maximality: false };
        let failing = (0..200)
            .map(|s| run_seed(s, &opts))
            .find_map(|o| o.failure)
            .expect("some failure");
        assert!(failing.shrunk_store.len() <= failing.store.len());
    }
}
