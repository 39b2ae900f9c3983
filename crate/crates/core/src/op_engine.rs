//! The incremental goal-stack semantics.
//!
//! Every head of the program gets an occurrence index. Each new constraint is
//! activated and tried against the occurrences in order; a match must
//! contain the active constraint in the block of the current occurrence.
//! Body constraints that no comprehension head could absorb are stored
//! lazily (only when their goal reaches the top of the stack). All others are
//! stored eagerly, so that maximality is always checked against them.
//! Propagation rules keep a history of applied instances and fire each
//! instance once.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::abstract_engine::{instantiate_body, unfold_body, unfold_pattern};
use crate::error::EvalError;
use crate::matcher::{for_each_match, Anchor, Id, Match, MatchOptions, CHOICE_WINDOW};
use crate::monotonicity::is_monotone;
use crate::store::{Label, LabeledStore, Store};
use crate::syntax::{Atom, Diagnostic, HeadKind, Pattern, Program, Rule};
use crate::term::{Name, Subst};

/// A program whose heads carry occurrence indices `1..=N`, numbered in rule
/// order and, within a rule, propagated heads then simplified heads.
#[derive(Debug, Clone)]
pub struct OccurrenceProgram {
    source: Program,
    program: Program,
    /// `occurrences[i - 1]` is `(rule index, head index)` of occurrence `i`.
    occurrences: Vec<(usize, usize)>,
}

impl OccurrenceProgram {
    /// Normalizes `p` and numbers its heads.
    pub fn annotate(p: &Program) -> Result<Self, Vec<Diagnostic>> {
        let program = p.normalized()?;
        let occurrences = program
            .rules
            .iter()
            .enumerate()
            .flat_map(|(r, rule)| (0..rule.head_count()).map(move |h| (r, h)))
            .collect();
        Ok(OccurrenceProgram {
            source: p.clone(),
            program,
            occurrences,
        })
    }

    /// The normalized program the engine executes.
    pub fn program(&self) -> &Program {
        &self.program
    }

    /// The program as given, without occurrence indices.
    pub fn drop_indices(&self) -> &Program {
        &self.source
    }

    pub fn occurrence_count(&self) -> usize {
        self.occurrences.len()
    }

    /// The rule and head index of occurrence `i`, or `None` past the last one.
    pub fn lookup(&self, i: usize) -> Option<(&Rule, usize)> {
        let (r, h) = *self.occurrences.get(i.checked_sub(1)?)?;
        Some((&self.program.rules[r], h))
    }

    /// The occurrence index of head `head` of rule `rule`.
    pub fn occurrence_of(&self, rule: usize, head: usize) -> Option<usize> {
        self.occurrences
            .iter()
            .position(|&o| o == (rule, head))
            .map(|i| i + 1)
    }
}

/// A propagation instance: the substitution restricted to the rule's head
/// variables, and the sorted labels it matched.
pub type Instance = (Subst, Vec<Label>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Goal {
    /// Closed body patterns still to be added.
    Init(Vec<Pattern>),
    /// A monotone constraint not yet in the store.
    Lazy(Atom),
    /// A stored constraint not yet activated.
    Eager(Atom, Label),
    /// An active constraint trying occurrence `i`.
    Act(Atom, Label, usize),
    /// An active constraint saturating the propagation rule at occurrence `i`.
    Prop(Atom, Label, usize, BTreeSet<Instance>),
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Goal::Init(body) => {
                f.write_str("init {")?;
                for (k, p) in body.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str("}")
            }
            Goal::Lazy(a) => write!(f, "lazy {a}"),
            Goal::Eager(a, n) => write!(f, "eager {a}#{n}"),
            Goal::Act(a, n, i) => write!(f, "act {a}#{n} {i}"),
            Goal::Prop(a, n, i, h) => write!(f, "prop {a}#{n} {i} ({} applied)", h.len()),
        }
    }
}

/// A goal stack with its labeled store. The top of the stack is the last goal.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExecutionState {
    pub goals: Vec<Goal>,
    pub store: LabeledStore,
    /// Propagation instances applied so far, keyed by rule index.
    pub history: BTreeSet<(usize, Instance)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InvalidState {
    /// A lazy goal holds a constraint some comprehension head could absorb.
    NonMonotoneLazy(Atom),
    /// An init goal below the top of the stack.
    BuriedInit(usize),
}

impl fmt::Display for InvalidState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvalidState::NonMonotoneLazy(a) => write!(f, "lazy goal {a} is not monotone"),
            InvalidState::BuriedInit(depth) => {
                write!(f, "init goal at depth {depth} below the top")
            }
        }
    }
}

impl ExecutionState {
    /// The initial state: a single init goal and an empty store.
    pub fn initial(body: Vec<Pattern>) -> Self {
        ExecutionState {
            goals: alloc::vec![Goal::Init(body)],
            ..Default::default()
        }
    }

    pub fn top(&self) -> Option<&Goal> {
        self.goals.last()
    }

    pub fn is_terminal(&self) -> bool {
        self.goals.is_empty()
    }

    /// Lazy goals are monotone and only the top goal may be an init goal.
    pub fn validate(&self, p: &Program) -> Result<(), InvalidState> {
        let top = self.goals.len().saturating_sub(1);
        for (k, g) in self.goals.iter().enumerate() {
            match g {
                Goal::Lazy(a) if !is_monotone(p, &Pattern::Atom(a.clone())) => {
                    return Err(InvalidState::NonMonotoneLazy(a.clone()))
                }
                Goal::Init(_) if k != top => return Err(InvalidState::BuriedInit(top - k)),
                _ => {}
            }
        }
        Ok(())
    }
}

impl fmt::Display for ExecutionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<[")?;
        for (k, g) in self.goals.iter().rev().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{g}")?;
        }
        write!(f, "]; {}>", self.store)
    }
}

/// The transition taken by one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StepKind {
    Init,
    LazyAct,
    EagerAct,
    EagerDrop,
    /// The active constraint is consumed by a simplified head.
    ActSimpa1,
    /// The active constraint is kept by a propagated head; partners are consumed.
    ActSimpa2,
    ActNext,
    ActDrop,
    ActProp,
    PropProp,
    PropSat,
}

impl StepKind {
    pub const ALL: [StepKind; 11] = [
        StepKind::Init,
        StepKind::LazyAct,
        StepKind::EagerAct,
        StepKind::EagerDrop,
        StepKind::ActSimpa1,
        StepKind::ActSimpa2,
        StepKind::ActNext,
        StepKind::ActDrop,
        StepKind::ActProp,
        StepKind::PropProp,
        StepKind::PropSat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StepKind::Init => "init",
            StepKind::LazyAct => "lazy-act",
            StepKind::EagerAct => "eager-act",
            StepKind::EagerDrop => "eager-drop",
            StepKind::ActSimpa1 => "act-simpa-1",
            StepKind::ActSimpa2 => "act-simpa-2",
            StepKind::ActNext => "act-next",
            StepKind::ActDrop => "act-drop",
            StepKind::ActProp => "act-prop",
            StepKind::PropProp => "prop-prop",
            StepKind::PropSat => "prop-sat",
        }
    }

    /// Whether the transition applies a rule.
    pub fn is_firing(self) -> bool {
        matches!(
            self,
            StepKind::ActSimpa1 | StepKind::ActSimpa2 | StepKind::PropProp
        )
    }
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A rule application made by a firing step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Firing {
    pub rule: Name,
    pub occurrence: usize,
    pub active: Label,
    pub theta: Subst,
    /// Matched labels per head, in head order.
    pub blocks: Vec<Vec<Label>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub kind: StepKind,
    pub firing: Option<Firing>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OpConfig {
    /// 0 takes the first match in enumeration order; any other value picks
    /// uniformly among the first [`CHOICE_WINDOW`] matches with a generator
    /// seeded by it.
    pub seed: u64,
    pub matching: MatchOptions,
    /// A run stops, as on the step limit, once the store grows past this.
    pub store_limit: Option<usize>,
}

/// Receives every transition with the states around it.
pub trait Observer {
    fn on_step(
        &mut self,
        index: usize,
        step: &Step,
        before: &ExecutionState,
        after: &ExecutionState,
    );
}

/// Steps states of one occurrence program.
pub struct OpEngine<'p> {
    pw: &'p OccurrenceProgram,
    config: OpConfig,
    rng: ChaCha8Rng,
    monotone: BTreeMap<Pattern, bool>,
}

fn restrict_to(theta: &Subst, keep: &BTreeSet<Name>) -> Subst {
    theta
        .iter()
        .filter(|(k, _)| keep.contains(*k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect()
}

impl<'p> OpEngine<'p> {
    pub fn new(pw: &'p OccurrenceProgram, config: OpConfig) -> Self {
        OpEngine {
            pw,
            config,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            monotone: BTreeMap::new(),
        }
    }

    pub fn program(&self) -> &'p OccurrenceProgram {
        self.pw
    }

    fn is_monotone(&mut self, p: &Pattern) -> bool {
        if let Some(&v) = self.monotone.get(p) {
            return v;
        }
        let v = is_monotone(&self.pw.program, p);
        self.monotone.insert(p.clone(), v);
        v
    }

    /// Picks a match of `rule` containing `active` in head `head`'s block,
    /// whose body evaluates and which `accept` admits.
    fn choose(
        &mut self,
        rule: &Rule,
        head: usize,
        active: Label,
        store: &LabeledStore,
        mut accept: impl FnMut(&Match) -> bool,
    ) -> Option<Match> {
        let view: Vec<(Id, &Atom)> = store.iter().collect();
        let anchor = Some(Anchor { head, id: active });
        let mut usable =
            |m: &Match| accept(m) && unfold_body(&instantiate_body(rule, &m.theta)).is_ok();
        if self.config.seed == 0 {
            let mut found = None;
            for_each_match(rule, &view, anchor, self.config.matching, |m| {
                if usable(&m) {
                    found = Some(m);
                }
                found.is_none()
            });
            found
        } else {
            let (mut seen, mut pick) = (0, None);
            let rng = &mut self.rng;
            for_each_match(rule, &view, anchor, self.config.matching, |m| {
                if usable(&m) {
                    seen += 1;
                    if rng.gen_range(0..seen) == 0 {
                        pick = Some(m);
                    }
                }
                seen < CHOICE_WINDOW
            });
            pick
        }
    }

    fn init(&mut self, s: &mut ExecutionState, body: Vec<Pattern>) -> Result<(), EvalError> {
        let (mut lazy, mut eager) = (Vec::new(), Vec::new());
        for p in &body {
            let target = if self.is_monotone(p) {
                &mut lazy
            } else {
                &mut eager
            };
            unfold_pattern(p, &Subst::new(), target)?;
        }
        let eager: Vec<(Atom, Label)> = eager
            .into_iter()
            .map(|a| {
                let n = s.store.insert(a.clone());
                (a, n)
            })
            .collect();
        s.goals
            .extend(eager.into_iter().rev().map(|(a, n)| Goal::Eager(a, n)));
        s.goals.extend(lazy.into_iter().rev().map(Goal::Lazy));
        Ok(())
    }

    /// Applies one transition to the top goal, or returns `None` on an empty
    /// stack. Fails only if an init goal does not evaluate, which cannot
    /// happen for goals the engine pushed itself.
    pub fn step(&mut self, s: &mut ExecutionState) -> Result<Option<Step>, EvalError> {
        let Some(goal) = s.goals.pop() else {
            return Ok(None);
        };
        let plain = |kind| Ok(Some(Step { kind, firing: None }));
        match goal {
            Goal::Init(body) => {
                if let Err(e) = self.init(s, body.clone()) {
                    s.goals.push(Goal::Init(body));
                    return Err(e);
                }
                plain(StepKind::Init)
            }
            Goal::Lazy(a) => {
                let n = s.store.insert(a.clone());
                s.goals.push(Goal::Act(a, n, 1));
                plain(StepKind::LazyAct)
            }
            Goal::Eager(a, n) => {
                if s.store.contains(n) {
                    s.goals.push(Goal::Act(a, n, 1));
                    plain(StepKind::EagerAct)
                } else {
                    plain(StepKind::EagerDrop)
                }
            }
            Goal::Act(a, n, i) => {
                let pw = self.pw;
                let Some((rule, head)) = pw.lookup(i) else {
                    return plain(StepKind::ActDrop);
                };
                if rule.is_propagation() {
                    s.goals.push(Goal::Prop(a, n, i, BTreeSet::new()));
                    return plain(StepKind::ActProp);
                }
                let Some(m) = self.choose(rule, head, n, &s.store, |_| true) else {
                    s.goals.push(Goal::Act(a, n, i + 1));
                    return plain(StepKind::ActNext);
                };
                for (h, block) in m.blocks.iter().enumerate() {
                    if rule.head(h).0 == HeadKind::Simplified {
                        block.iter().for_each(|l| {
                            s.store.remove(*l);
                        });
                    }
                }
                let kind = match rule.head(head).0 {
                    HeadKind::Simplified => StepKind::ActSimpa1,
                    HeadKind::Propagated => {
                        s.goals.push(Goal::Act(a, n, i));
                        StepKind::ActSimpa2
                    }
                };
                s.goals.push(Goal::Init(instantiate_body(rule, &m.theta)));
                let firing = Firing {
                    rule: rule.name.clone(),
                    occurrence: i,
                    active: n,
                    theta: m.theta,
                    blocks: m.blocks,
                };
                Ok(Some(Step {
                    kind,
                    firing: Some(firing),
                }))
            }
            Goal::Prop(a, n, i, mut applied) => {
                let pw = self.pw;
                let (rule, head) = pw.lookup(i).expect("prop goals carry valid occurrences");
                let r = pw.occurrences[i - 1].0;
                let head_vars = rule.head_vars();
                let key = |m: &Match| (restrict_to(&m.theta, &head_vars), m.matched_ids());
                let history = &s.history;
                let fresh = |m: &Match| {
                    let k = key(m);
                    !applied.contains(&k) && !history.contains(&(r, k))
                };
                let Some(m) = self.choose(rule, head, n, &s.store, fresh) else {
                    s.goals.push(Goal::Act(a, n, i + 1));
                    return plain(StepKind::PropSat);
                };
                let k = key(&m);
                applied.insert(k.clone());
                s.history.insert((r, k));
                s.goals.push(Goal::Prop(a, n, i, applied));
                s.goals.push(Goal::Init(instantiate_body(rule, &m.theta)));
                let firing = Firing {
                    rule: rule.name.clone(),
                    occurrence: i,
                    active: n,
                    theta: m.theta,
                    blocks: m.blocks,
                };
                Ok(Some(Step {
                    kind: StepKind::PropProp,
                    firing: Some(firing),
                }))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub kind: StepKind,
    /// The goal the step consumed, as displayed.
    pub goal: String,
}

#[derive(Debug, Clone)]
pub struct OpRun {
    pub state: ExecutionState,
    pub trace: Vec<TraceEntry>,
    pub firings: Vec<Firing>,
    pub step_limit_exceeded: bool,
}

impl OpRun {
    /// The final store with labels dropped.
    pub fn store(&self) -> Store {
        self.state.store.drop_labels()
    }
}

/// Runs from an init goal holding `initial` until the stack is empty,
/// `max_steps` transitions have been taken, or the store limit is passed.
pub fn run_operational(
    pw: &OccurrenceProgram,
    initial: Vec<Pattern>,
    max_steps: usize,
    config: OpConfig,
    mut observer: Option<&mut dyn Observer>,
) -> Result<OpRun, EvalError> {
    unfold_body(&initial)?;
    let mut engine = OpEngine::new(pw, config);
    let mut state = ExecutionState::initial(initial);
    let (mut trace, mut firings) = (Vec::new(), Vec::new());
    while !state.is_terminal() {
        if trace.len() == max_steps || config.store_limit.is_some_and(|l| state.store.len() > l) {
            return Ok(OpRun {
                state,
                trace,
                firings,
                step_limit_exceeded: true,
            });
        }
        let goal = alloc::format!("{}", state.top().expect("nonempty stack"));
        let before = observer.is_some().then(|| state.clone());
        let step = engine.step(&mut state)?.expect("nonempty stack");
        if let (Some(obs), Some(before)) = (observer.as_deref_mut(), before) {
            obs.on_step(trace.len(), &step, &before, &state);
        }
        trace.push(TraceEntry {
            kind: step.kind,
            goal,
        });
        firings.extend(step.firing);
    }
    Ok(OpRun {
        state,
        trace,
        firings,
        step_limit_exceeded: false,
    })
}

/// Runs a program text on a store text with default settings.
pub fn run_store(pw: &OccurrenceProgram, st: &Store, max_steps: usize) -> Result<OpRun, EvalError> {
    let initial = st.iter().cloned().map(Pattern::Atom).collect();
    run_operational(pw, initial, max_steps, OpConfig::default(), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::parser::{parse_program, parse_store};

    fn annotate(src: &str) -> OccurrenceProgram {
        OccurrenceProgram::annotate(&parse_program(src).unwrap()).unwrap()
    }

    fn store(src: &str) -> Store {
        parse_store(src).unwrap()
    }

    #[test]
    fn occurrence_numbering() {
        let pw = annotate(corpus::PIVOT_SWAP);
        assert_eq!(pw.occurrence_count(), 3);
        assert_eq!(pw.lookup(1).unwrap().1, 0);
        assert_eq!(pw.lookup(3).unwrap().1, 2);
        assert!(pw.lookup(4).is_none() && pw.lookup(0).is_none());

        let pw = annotate("r1 @ p(X) \\ q(X) <=> true. r2 @ s(Y) <=> true.");
        assert_eq!(pw.occurrence_of(1, 0), Some(3));
        assert_eq!(pw.lookup(3).unwrap().0.name, "r2");
        assert_eq!(
            pw.drop_indices(),
            &parse_program("r1 @ p(X) \\ q(X) <=> true. r2 @ s(Y) <=> true.").unwrap()
        );

        let empty = OccurrenceProgram::annotate(&Program::default()).unwrap();
        assert!(empty.lookup(1).is_none());
    }

    #[test]
    fn init_stores_non_monotone_atoms_eagerly() {
        let pw = annotate(corpus::RELABEL);
        let mut engine = OpEngine::new(&pw, OpConfig::default());
        let body = store("a(1), a(2), c(5).")
            .into_atoms()
            .into_iter()
            .map(Pattern::Atom)
            .collect();
        let mut s = ExecutionState::initial(body);
        assert_eq!(engine.step(&mut s).unwrap().unwrap().kind, StepKind::Init);
        assert_eq!(s.store.drop_labels(), store("a(1), a(2)."));
        let expected = [Goal::Lazy(
            parse_store("c(5).").unwrap().into_atoms().remove(0),
        )];
        assert_eq!(&s.goals[2..], &expected);
        assert!(matches!(s.goals[1], Goal::Eager(_, 1)));
        assert!(matches!(s.goals[0], Goal::Eager(_, 2)));
    }

    #[test]
    fn act_past_last_occurrence_drops() {
        let pw = annotate(corpus::RELABEL);
        let mut engine = OpEngine::new(&pw, OpConfig::default());
        let a = Atom::new("c", alloc::vec![crate::term::Term::int(1)]);
        let mut s = ExecutionState::default();
        let n = s.store.insert(a.clone());
        s.goals.push(Goal::Act(a, n, 2));
        assert_eq!(
            engine.step(&mut s).unwrap().unwrap().kind,
            StepKind::ActDrop
        );
        assert!(s.goals.is_empty() && s.store.len() == 1);
    }

    #[test]
    fn saturated_prop_advances() {
        let pw = annotate("r @ p(X) ==> q(X).");
        let mut engine = OpEngine::new(&pw, OpConfig::default());
        let a = Atom::new("p", alloc::vec![crate::term::Term::int(1)]);
        let mut s = ExecutionState::default();
        let n = s.store.insert(a.clone());
        let only: Subst = [("X".into(), crate::term::Term::int(1))]
            .into_iter()
            .collect();
        s.goals.push(Goal::Prop(
            a.clone(),
            n,
            1,
            [(only, alloc::vec![n])].into_iter().collect(),
        ));
        assert_eq!(
            engine.step(&mut s).unwrap().unwrap().kind,
            StepKind::PropSat
        );
        assert_eq!(s.goals, alloc::vec![Goal::Act(a, n, 2)]);
    }

    #[test]
    fn pivot_swap_runs_to_expected_store() {
        let pw = annotate(corpus::PIVOT_SWAP);
        let run = run_store(&pw, &store(corpus::PIVOT_SWAP_STORE), 1000).unwrap();
        assert!(!run.step_limit_exceeded);
        assert_eq!(
            run.store(),
            store("data(a,3), data(b,7), data(a,2), data(b,8).")
        );
        assert_eq!(run.firings.len(), 1);
    }

    #[test]
    fn propagation_fires_once() {
        let pw = annotate("r @ p(X) ==> q(X).");
        let run = run_store(&pw, &store("p(1)."), 100).unwrap();
        assert_eq!(run.store(), store("p(1), q(1)."));
        assert_eq!(run.firings.len(), 1);
    }

    #[test]
    fn pairs_fire_once_per_ordered_pair() {
        let pw = annotate(corpus::PAIRS);
        let run = run_store(&pw, &store(corpus::PAIRS_STORE), 1000).unwrap();
        assert_eq!(run.firings.len(), 6);
        assert_eq!(run.store().filter_pred(|p| p == "q").len(), 6);
    }

    #[test]
    fn empty_init_is_one_step() {
        let pw = annotate(corpus::RELABEL);
        let run = run_operational(&pw, Vec::new(), 10, OpConfig::default(), None).unwrap();
        assert_eq!(run.trace.len(), 1);
        assert!(run.state.is_terminal() && run.store().is_empty());
    }

    #[test]
    fn firings_contain_the_active_constraint_in_its_head() {
        for (_, prog, st) in corpus::ALL {
            let pw = annotate(prog);
            let run = run_store(&pw, &store(st), 10_000).unwrap();
            for f in &run.firings {
                let head = pw.lookup(f.occurrence).unwrap().1;
                assert!(f.blocks[head].contains(&f.active));
            }
        }
    }

    #[test]
    fn states_stay_valid_and_labels_fresh() {
        struct Check<'a>(&'a Program);
        impl Observer for Check<'_> {
            fn on_step(
                &mut self,
                _: usize,
                _: &Step,
                before: &ExecutionState,
                after: &ExecutionState,
            ) {
                assert_eq!(after.validate(self.0), Ok(()));
                assert!(after.store.next_label() >= before.store.next_label());
            }
        }
        for (_, prog, st) in corpus::ALL {
            let pw = annotate(prog);
            let initial = store(st)
                .into_atoms()
                .into_iter()
                .map(Pattern::Atom)
                .collect();
            let mut check = Check(pw.program());
            run_operational(
                &pw,
                initial,
                10_000,
                OpConfig {
                    seed: 7,
                    ..Default::default()
                },
                Some(&mut check),
            )
            .unwrap();
        }
    }
}
