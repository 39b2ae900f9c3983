use std::fs::File;
use std::io::{self, BufWriter, IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use chrcp::files::{load_program, load_store};
use chrcp::fuzz::{fuzz, parse_seed_range, size_preset, FuzzOptions};
use chrcp::report::{analysis, atoms, SoundnessJson};
use chrcp::trace::{abstract_events, write_events, Recorder};
use chrcp_core::abstract_engine::run_abstract;
use chrcp_core::harness::{check_annotated, SoundnessConfig};
use chrcp_core::matcher::MatchOptions;
use chrcp_core::op_engine::{run_operational, Observer, OccurrenceProgram, OpConfig};
use chrcp_core::{Pattern, Store};

/// Exit status when a run stops on its step or store limit.
const LIMIT_EXIT: u8 = 2;

#[derive(Parser)]
#[command(
    name = "chrcp",
    version,
    about = "Multiset rewriting with comprehension patterns"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Engine {
    /// Goal-stack engine with lazy and eager storage.
    Op,
    /// Reference semantics, one rule application per step.
    Abs,
}

#[derive(Subcommand)]
enum Command {
    /// Run a program and print the final store.
    Run {
        program: PathBuf,
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "op")]
        engine: Engine,
        #[arg(long, default_value_t = 100_000)]
        max_steps: usize,
        /// 0 picks the first match; other values choose among matches at random.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write one JSON object per step to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Report which predicates and body patterns are monotone.
    Analyze {
        program: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Check every goal-stack step against the reference semantics.
    Check {
        program: PathBuf,
        #[arg(long)]
        store: Option<PathBuf>,
        /// Maximum number of goal-stack steps.
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        /// Maximum abstract successors examined per step.
        #[arg(long, default_value_t = 10_000)]
        oracle_budget: usize,
        #[arg(long)]
        json: bool,
    },
    /// Check soundness on generated programs, one per seed.
    Fuzz {
        /// `A..B` (exclusive) or `A..=B`.
        #[arg(long)]
        seeds: String,
        #[arg(long, default_value = "desk")]
        size_preset: String,
        #[arg(long, default_value_t = 2_000)]
        max_steps: usize,
        /// Always take the first match instead of letting the seed choose.
        #[arg(long)]
        fixed_choice: bool,
        /// Let the engine leave subsumed constraints out of comprehensions.
        /// Meant to show that the checker catches the resulting unsound steps.
        #[arg(long)]
        no_maximality: bool,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        json: bool,
    },
}

struct Style {
    color: bool,
}

impl Style {
    fn from_env() -> Self {
        let color = match std::env::var("CHRCP_COLOR").as_deref() {
            Ok("0") => false,
            Ok("1") => true,
            _ => io::stdout().is_terminal(),
        };
        Style { color }
    }

    fn paint(&self, text: &str, code: u8) -> String {
        if self.color {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }

    fn good(&self, text: &str) -> String {
        self.paint(text, 32)
    }

    fn bad(&self, text: &str) -> String {
        self.paint(text, 31)
    }

    fn warn(&self, text: &str) -> String {
        self.paint(text, 33)
    }
}

fn initial(st: &Store) -> Vec<Pattern> {
    st.iter().cloned().map(Pattern::Atom).collect()
}

fn annotate(program: &chrcp_core::Program) -> Result<OccurrenceProgram> {
    OccurrenceProgram::annotate(program).map_err(|ds| chrcp_core::Error::Scope(ds).into())
}

fn write_trace(path: &PathBuf, events: &[chrcp::trace::TraceEvent]) -> Result<()> {
    let mut out =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    write_events(&mut out, events)?;
    out.flush()?;
    Ok(())
}

fn run(
    program: PathBuf,
    store: Option<PathBuf>,
    engine: Engine,
    max_steps: usize,
    seed: u64,
    trace: Option<PathBuf>,
    style: &Style,
) -> Result<u8> {
    let p = load_program(&program)?;
    let st = load_store(store.as_deref())?;
    let (final_store, steps, limited) = match engine {
        Engine::Abs => {
            let run = run_abstract(
                &p.normalized().map_err(chrcp_core::Error::Scope)?,
                &st,
                max_steps,
                seed,
            );
            if let Some(path) = &trace {
                write_trace(path, &abstract_events(&st, &run.steps))?;
            }
            (run.store, run.steps.len(), run.step_limit_exceeded)
        }
        Engine::Op => {
            let pw = annotate(&p)?;
            let mut recorder =
                Recorder::new(pw.program(), SoundnessConfig::default().oracle_budget);
            let observer = trace
                .is_some()
                .then_some(&mut recorder as &mut dyn Observer);
            let config = OpConfig {
                seed,
                ..OpConfig::default()
            };
            let run = run_operational(&pw, initial(&st), max_steps, config, observer)?;
            if let Some(path) = &trace {
                write_trace(path, &recorder.events)?;
            }
            (run.store(), run.trace.len(), run.step_limit_exceeded)
        }
    };
    println!("{final_store}");
    if limited {
        eprintln!(
            "{}: stopped after {steps} steps",
            style.warn("step limit exceeded")
        );
        return Ok(LIMIT_EXIT);
    }
    Ok(0)
}

fn analyze(program: PathBuf, json: bool, style: &Style) -> Result<u8> {
    let source = load_program(&program)?;
    let normalized = source.normalized().map_err(chrcp_core::Error::Scope)?;
    let report = analysis(&source, &normalized);
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(0);
    }
    let describe = |v: &chrcp::report::VerdictJson| match (&v.absorbed_by, &v.rule) {
        (Some(c), Some(r)) => format!(
            "{} (may be absorbed by {c} in rule {r})",
            style.warn("non-monotone")
        ),
        _ => style.good("monotone"),
    };
    println!("predicates:");
    for pred in &report.predicates {
        println!(
            "  {}/{}: {}",
            pred.predicate,
            pred.arity,
            describe(&pred.verdict)
        );
    }
    println!("body patterns:");
    for b in &report.body_patterns {
        println!("  {} {}: {}", b.origin, b.pattern, describe(&b.verdict));
    }
    Ok(0)
}

fn check(
    program: PathBuf,
    store: Option<PathBuf>,
    budget: usize,
    oracle_budget: usize,
    json: bool,
    style: &Style,
) -> Result<u8> {
    let pw = annotate(&load_program(&program)?)?;
    let st = load_store(store.as_deref())?;
    let config = SoundnessConfig {
        max_steps: budget,
        oracle_budget,
        op: OpConfig::default(),
    };
    let report = check_annotated(&pw, initial(&st), config)?;
    let summary = SoundnessJson::from(&report);
    if json {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        let verdict = if summary.ok {
            style.good("OK")
        } else {
            style.bad("VIOLATION")
        };
        println!(
            "{verdict}: {} steps, {} abstract, {} silent, {} violations",
            summary.steps,
            summary.abstract_steps,
            summary.silent,
            summary.violations.len()
        );
        for v in &summary.violations {
            println!(
                "  step {} ({}) on {}: {}",
                v.index, v.kind, v.goal, v.reason
            );
            println!("    before: {{{}}}", v.before.join(", "));
            println!("    after:  {{{}}}", v.after.join(", "));
        }
        println!("final store: {{{}}}", atoms(&report.final_store).join(", "));
    }
    if !summary.ok {
        return Ok(1);
    }
    if summary.step_limit_exceeded {
        eprintln!(
            "{}: stopped after {} steps",
            style.warn("step limit exceeded"),
            summary.steps
        );
        return Ok(LIMIT_EXIT);
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn run_fuzz(
    seeds: String,
    size_preset_name: String,
    max_steps: usize,
    fixed_choice: bool,
    no_maximality: bool,
    jobs: Option<usize>,
    json: bool,
    style: &Style,
) -> Result<u8> {
    let range = parse_seed_range(&seeds)?;
    let mut opts = FuzzOptions {
        size: size_preset(&size_preset_name)?,
        vary_choice: !fixed_choice,
        ..Default::default()
    };
    opts.config.max_steps = max_steps;
    if no_maximality {
        opts.config.op.matching = MatchOptions { maximality: false };
    }
    let summary = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(|| fuzz(range, &opts)),
        None => fuzz(range, &opts),
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        let verdict = if summary.all_ok() {
            style.good("OK")
        } else {
            style.bad("VIOLATIONS")
        };
        println!(
            "{verdict}: {}/{} seeds sound, {} steps ({} abstract), {} stopped at a limit",
            summary.ok_runs,
            summary.runs,
            summary.steps,
            summary.abstract_steps,
            summary.step_limit_runs
        );
        println!(
            "coverage: {} programs with comprehension heads, {} with propagation rules",
            summary.with_comprehension_head, summary.with_propagation_rule
        );
        for f in &summary.failures {
            println!(
                "seed {}:\n{}store: {{{}}}",
                f.seed,
                f.program,
                f.store.join(", ")
            );
            println!(
                "shrunk store: {{{}}}\n  {}",
                f.shrunk_store.join(", "),
                f.detail
            );
        }
    }
    Ok(if summary.all_ok() { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let style = Style::from_env();
    let result = match cli.command {
        Command::Run {
            program,
            store,
            engine,
            max_steps,
            seed,
            trace,
        } => run(program, store, engine, max_steps, seed, trace, &style),
        Command::Analyze { program, json } => analyze(program, json, &style),
        Command::Check {
            program,
            store,
            budget,
            oracle_budget,
            json,
        } => check(program, store, budget, oracle_budget, json, &style),
        Command::Fuzz {
            seeds,
            size_preset,
            max_steps,
            fixed_choice,
            no_maximality,
            jobs,
            json,
        } => run_fuzz(
            seeds,
            size_preset,
            max_steps,
            fixed_choice,
            no_maximality,
            jobs,
            json,
            &style,
        ),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}: {e:#}", style.bad("error"));
            ExitCode::FAILURE
        }
    }
}
