//! Differential checking of the goal-stack engine against the abstract one.
//!
//! Every execution state corresponds to a plain store: its labeled store
//! without labels, plus the constraints still waiting in init and lazy goals.
//! A goal-stack step is sound if it leaves that store unchanged or moves it
//! by one abstract rule application.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::abstract_engine::{
    for_each_successor, instantiate_body, replay_step, unfold_body, AbstractStep,
};
use crate::error::{Error, EvalError};
use crate::matcher::MatchOptions;
use crate::op_engine::{
    run_operational, ExecutionState, Firing, Goal, Observer, OccurrenceProgram, OpConfig, Step,
    StepKind,
};
use crate::parser::{parse_program, parse_store};
use crate::store::Store;
use crate::syntax::{Atom, Diagnostic, HeadKind, Pattern, Program};

/// The plain store an execution state stands for.
pub fn correspondence(s: &ExecutionState) -> Store {
    let mut atoms = s.store.drop_labels().into_atoms();
    for g in &s.goals {
        match g {
            Goal::Init(body) => atoms.extend(
                unfold_body(body)
                    .expect("init goals hold evaluable bodies")
                    .into_atoms(),
            ),
            Goal::Lazy(a) => atoms.push(a.clone()),
            Goal::Eager(..) | Goal::Act(..) | Goal::Prop(..) => {}
        }
    }
    Store::from_atoms(atoms)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    /// The corresponding store is unchanged.
    Silent,
    /// The corresponding store moved by this abstract step.
    Abstract(AbstractStep),
    Violation {
        before: Store,
        after: Store,
        reason: String,
    },
}

impl Classification {
    pub fn name(&self) -> &'static str {
        match self {
            Classification::Silent => "silent",
            Classification::Abstract(_) => "abstract",
            Classification::Violation { .. } => "violation",
        }
    }

    pub fn is_violation(&self) -> bool {
        matches!(self, Classification::Violation { .. })
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Classification::Silent => f.write_str("silent"),
            Classification::Abstract(step) => write!(f, "abstract {step}"),
            Classification::Violation {
                before,
                after,
                reason,
            } => {
                write!(f, "violation: {reason}: {before} to {after}")
            }
        }
    }
}

/// The abstract oracle gave up before deciding a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    pub budget: usize,
}

impl fmt::Display for OracleBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "abstract oracle examined more than {} successors",
            self.budget
        )
    }
}

impl core::error::Error for OracleBudget {}

/// The abstract step a goal-stack firing claims to make from `before`.
pub fn firing_step(p: &Program, before: &ExecutionState, firing: &Firing) -> Option<AbstractStep> {
    let rule = p.rule(&firing.rule)?;
    let blocks: Vec<Vec<Atom>> = firing
        .blocks
        .iter()
        .map(|b| {
            b.iter()
                .map(|n| before.store.get(*n).cloned())
                .collect::<Option<Vec<_>>>()
        })
        .collect::<Option<_>>()?;
    let (mut consumed, mut retained) = (Vec::new(), Vec::new());
    for (h, block) in blocks.iter().enumerate() {
        match rule.head(h).0 {
            HeadKind::Propagated => retained.extend(block.iter().cloned()),
            HeadKind::Simplified => consumed.extend(block.iter().cloned()),
        }
    }
    Some(AbstractStep {
        rule: firing.rule.clone(),
        theta: firing.theta.clone(),
        consumed: Store::from_atoms(consumed),
        retained: Store::from_atoms(retained),
        produced: unfold_body(&instantiate_body(rule, &firing.theta)).ok()?,
        blocks,
    })
}

/// Classifies the transition from `before` to `after`.
///
/// When the step applied a rule, the claimed instance is first re-checked
/// with the declarative rule-application judgments (maximality included,
/// whatever options the goal-stack engine ran with). Otherwise, or if that
/// check fails, abstract successors are searched, giving up after `budget`.
pub fn classify_step(
    p: &Program,
    before: &ExecutionState,
    after: &ExecutionState,
    firing: Option<&Firing>,
    budget: usize,
) -> Result<Classification, OracleBudget> {
    let (from, to) = (correspondence(before), correspondence(after));
    if let Err(invalid) = after.validate(p) {
        return Ok(Classification::Violation {
            before: from,
            after: to,
            reason: format!("{invalid}"),
        });
    }
    if from == to {
        return Ok(Classification::Silent);
    }
    if let Some(step) = firing.and_then(|f| firing_step(p, before, f)) {
        if replay_step(p, &from, &step).as_ref() == Ok(&to) {
            return Ok(Classification::Abstract(step));
        }
    }
    let (mut seen, mut found) = (0, None);
    for_each_successor(p, &from, MatchOptions::default(), |step, next| {
        seen += 1;
        if next == to {
            found = Some(step);
        }
        found.is_none() && seen <= budget
    });
    match found {
        Some(step) => Ok(Classification::Abstract(step)),
        None if seen > budget => Err(OracleBudget { budget }),
        None => Ok(Classification::Violation {
            before: from,
            after: to,
            reason: String::from("no abstract step connects the stores"),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepReport {
    pub index: usize,
    pub kind: StepKind,
    pub goal: String,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoundnessReport {
    pub steps: Vec<StepReport>,
    /// The corresponding store of the last state reached.
    pub final_store: Store,
    pub step_limit_exceeded: bool,
}

impl SoundnessReport {
    pub fn violations(&self) -> impl Iterator<Item = &StepReport> {
        self.steps
            .iter()
            .filter(|s| s.classification.is_violation())
    }

    pub fn ok(&self) -> bool {
        self.violations().next().is_none()
    }

    pub fn count(&self, kind: &str) -> usize {
        self.steps
            .iter()
            .filter(|s| s.classification.name() == kind)
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SoundnessConfig {
    pub max_steps: usize,
    /// Most abstract successors the oracle may examine per step.
    pub oracle_budget: usize,
    pub op: OpConfig,
}

impl Default for SoundnessConfig {
    fn default() -> Self {
        SoundnessConfig {
            max_steps: 2_000,
            oracle_budget: 10_000,
            op: OpConfig {
                store_limit: Some(64),
                ..OpConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HarnessError {
    IllFormed(Vec<Diagnostic>),
    Eval(EvalError),
    Oracle(OracleBudget),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::IllFormed(ds) => {
                f.write_str("ill-formed program")?;
                ds.iter().try_for_each(|d| write!(f, "; {d}"))
            }
            HarnessError::Eval(e) => write!(f, "{e}"),
            HarnessError::Oracle(b) => write!(f, "{b}"),
        }
    }
}

impl core::error::Error for HarnessError {}

struct Classifier<'a> {
    program: &'a Program,
    budget: usize,
    steps: Vec<StepReport>,
    error: Option<OracleBudget>,
}

impl Observer for Classifier<'_> {
    fn on_step(
        &mut self,
        index: usize,
        step: &Step,
        before: &ExecutionState,
        after: &ExecutionState,
    ) {
        if self.error.is_some() {
            return;
        }
        let goal = before.top().map(|g| format!("{g}")).unwrap_or_default();
        match classify_step(
            self.program,
            before,
            after,
            step.firing.as_ref(),
            self.budget,
        ) {
            Ok(classification) => self.steps.push(StepReport {
                index,
                kind: step.kind,
                goal,
                classification,
            }),
            Err(e) => self.error = Some(e),
        }
    }
}

/// Runs the goal-stack engine from `init` and classifies every step.
pub fn check_soundness(
    p: &Program,
    init: Vec<Pattern>,
    config: SoundnessConfig,
) -> Result<SoundnessReport, HarnessError> {
    let pw = OccurrenceProgram::annotate(p).map_err(HarnessError::IllFormed)?;
    check_annotated(&pw, init, config)
}

pub fn check_annotated(
    pw: &OccurrenceProgram,
    init: Vec<Pattern>,
    config: SoundnessConfig,
) -> Result<SoundnessReport, HarnessError> {
    let mut classifier = Classifier {
        program: pw.program(),
        budget: config.oracle_budget,
        steps: Vec::new(),
        error: None,
    };
    let run = run_operational(pw, init, config.max_steps, config.op, Some(&mut classifier))
        .map_err(HarnessError::Eval)?;
    if let Some(e) = classifier.error {
        return Err(HarnessError::Oracle(e));
    }
    Ok(SoundnessReport {
        steps: classifier.steps,
        final_store: correspondence(&run.state),
        step_limit_exceeded: run.step_limit_exceeded,
    })
}

/// Bounds for generated programs and stores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeParams {
    pub predicates: usize,
    pub arity: usize,
    pub rules: usize,
    pub heads: usize,
    pub store: usize,
}

impl SizeParams {
    /// Small enough that every step can be checked against the abstract oracle.
    pub const DESK: SizeParams = SizeParams {
        predicates: 4,
        arity: 2,
        rules: 3,
        heads: 3,
        store: 8,
    };
}

impl Default for SizeParams {
    fn default() -> Self {
        Self::DESK
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub program: Program,
    pub initial: Vec<Pattern>,
    /// The program and store as source text.
    pub program_text: String,
    pub store_text: String,
}

impl Generated {
    pub fn store(&self) -> Store {
        self.initial
            .iter()
            .filter_map(|p| {
                if let Pattern::Atom(a) = p {
                    Some(a.clone())
                } else {
                    None
                }
            })
            .collect()
    }
}

const VALUES: i64 = 4;
const RELS: [&str; 5] = ["<", "<=", ">", ">=", "!="];

struct Generator {
    rng: ChaCha8Rng,
    arity: Vec<usize>,
}

struct HeadComp {
    domain: String,
    arity: usize,
}

impl Generator {
    fn chance(&mut self, percent: u32) -> bool {
        self.rng.gen_range(0..100) < percent
    }

    fn value(&mut self) -> String {
        format!("{}", self.rng.gen_range(0..VALUES))
    }

    fn pick<'a>(&mut self, from: &'a [String]) -> &'a str {
        &from[self.rng.gen_range(0..from.len())]
    }

    fn atom(&mut self, pred: usize, mut arg: impl FnMut(&mut Self) -> String) -> String {
        let args: Vec<String> = (0..self.arity[pred]).map(|_| arg(self)).collect();
        format!("p{pred}({})", args.join(", "))
    }

    /// Body predicates mostly come after every head predicate, which keeps
    /// most generated programs terminating. `None` skips the body pattern.
    fn body_pred(&mut self, max_head: usize) -> Option<usize> {
        let n = self.arity.len();
        if max_head + 1 < n {
            Some(if self.chance(90) {
                self.rng.gen_range(max_head + 1..n)
            } else {
                self.rng.gen_range(0..n)
            })
        } else {
            self.chance(20).then(|| self.rng.gen_range(0..n))
        }
    }

    fn rule(&mut self, idx: usize, size: &SizeParams) -> String {
        let n_heads = self.rng.gen_range(1..=size.heads);
        let (mut heads, mut vars, mut comps) = (Vec::new(), Vec::<String>::new(), Vec::new());
        let mut is_comp = Vec::new();
        let mut max_head = 0;
        let pool: Vec<String> = ["X", "Y", "Z"].iter().map(|v| String::from(*v)).collect();
        for h in 0..n_heads {
            let pred = self.rng.gen_range(0..self.arity.len());
            max_head = max_head.max(pred);
            if self.chance(30) {
                let binders: Vec<String> =
                    (0..self.arity[pred]).map(|j| format!("B{h}x{j}")).collect();
                let atom = format!("p{pred}({})", binders.join(", "));
                let guard = if self.chance(50) {
                    format!(" | {} {} {}", binders[0], self.pick_rel(), self.value())
                } else {
                    String::new()
                };
                let domain = format!("D{h}");
                heads.push(format!(
                    "{{{atom}{guard}}}#{{{} in {domain}}}",
                    binders.join(", ")
                ));
                comps.push(HeadComp {
                    domain,
                    arity: binders.len(),
                });
                is_comp.push(true);
            } else {
                let atom = self.atom(pred, |g| {
                    if g.chance(75) {
                        let v = String::from(g.pick(&pool));
                        if !vars.contains(&v) {
                            vars.push(v.clone());
                        }
                        v
                    } else {
                        g.value()
                    }
                });
                heads.push(atom);
                is_comp.push(false);
            }
        }
        let guard = if !vars.is_empty() && self.chance(40) {
            let lhs = String::from(self.pick(&vars));
            let rhs = if self.chance(50) {
                String::from(self.pick(&vars))
            } else {
                self.value()
            };
            format!("{lhs} {} {rhs} | ", self.pick_rel())
        } else {
            String::new()
        };
        let n_body = self.rng.gen_range(0..=2);
        let mut body = Vec::new();
        for _ in 0..n_body {
            let Some(pred) = self.body_pred(max_head) else {
                continue;
            };
            if !comps.is_empty() && self.chance(40) {
                let c = &comps[self.rng.gen_range(0..comps.len())];
                let (domain, arity) = (c.domain.clone(), c.arity);
                let binders: Vec<String> = (0..arity).map(|j| format!("E{j}")).collect();
                let atom = self.atom(pred, |g| {
                    if g.chance(80) {
                        String::from(g.pick(&binders))
                    } else {
                        g.value()
                    }
                });
                body.push(format!("{{{atom}}}#{{{} in {domain}}}", binders.join(", ")));
            } else {
                let atom = self.atom(pred, |g| {
                    if !vars.is_empty() && g.chance(75) {
                        String::from(g.pick(&vars))
                    } else {
                        g.value()
                    }
                });
                body.push(atom);
            }
        }
        let body = if body.is_empty() {
            String::from("true")
        } else {
            body.join(", ")
        };
        let name = format!("r{idx}");
        if self.chance(25) {
            format!("{name} @ {} ==> {guard}{body}.", heads.join(", "))
        } else if let Some(split) = self.split(&is_comp) {
            format!(
                "{name} @ {} \\ {} <=> {guard}{body}.",
                heads[..split].join(", "),
                heads[split..].join(", ")
            )
        } else {
            format!("{name} @ {} <=> {guard}{body}.", heads.join(", "))
        }
    }

    /// Where to divide kept from removed heads, if at all. Some removed head
    /// must be an atom: a rule that keeps its active constraint and removes
    /// only comprehensions may fire forever on empty blocks.
    fn split(&mut self, is_comp: &[bool]) -> Option<usize> {
        if is_comp.len() < 2 || !self.chance(40) {
            return None;
        }
        let split = self.rng.gen_range(1..is_comp.len());
        is_comp[split..].contains(&false).then_some(split)
    }

    fn pick_rel(&mut self) -> &'static str {
        RELS[self.rng.gen_range(0..RELS.len())]
    }
}

/// A well-formed random program and initial store. The same seed always
/// yields the same output.
pub fn generate_random(seed: u64, size: SizeParams) -> Generated {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_preds = rng.gen_range(1..=size.predicates.max(1));
    let arity = (0..n_preds)
        .map(|_| rng.gen_range(1..=size.arity.max(1)))
        .collect();
    let mut g = Generator { rng, arity };
    let n_rules = g.rng.gen_range(1..=size.rules.max(1));
    let mut program_text = String::new();
    for r in 0..n_rules {
        let rule = g.rule(r, &size);
        let _ = writeln!(program_text, "{rule}");
    }
    let n_store = g.rng.gen_range(0..=size.store);
    let atoms: Vec<String> = (0..n_store)
        .map(|_| {
            let pred = g.rng.gen_range(0..n_preds);
            g.atom(pred, |g| g.value())
        })
        .collect();
    let store_text = format!("{}.", atoms.join(", "));
    let program = parse_program(&program_text).expect("generated programs parse");
    let store = if atoms.is_empty() {
        Store::new()
    } else {
        parse_store(&store_text).expect("generated stores parse")
    };
    let initial = store.into_atoms().into_iter().map(Pattern::Atom).collect();
    Generated {
        program,
        initial,
        program_text,
        store_text,
    }
}

/// Parses and checks a program, then checks soundness from a store text.
pub fn check_text(
    program: &str,
    store: &str,
    config: SoundnessConfig,
) -> Result<SoundnessReport, Error> {
    let p = parse_program(program)?;
    let st = parse_store(store)?;
    let init = st.into_atoms().into_iter().map(Pattern::Atom).collect();
    match check_soundness(&p, init, config) {
        Ok(r) => Ok(r),
        Err(HarnessError::IllFormed(ds)) => Err(Error::Scope(ds)),
        Err(HarnessError::Eval(e)) => Err(Error::Eval(e)),
        Err(HarnessError::Oracle(b)) => Err(Error::Eval(EvalError::Type(format!("{b}")))),
    }
}
