//! The reference rewriting semantics: one rule application per step.
//!
//! A step picks a rule, a substitution and disjoint store fragments matching
//! the rule's heads (comprehensions maximal against the rest of the store),
//! removes the simplified fragment and adds the unfolded body. No
//! propagation history is kept, so propagation rules may fire forever.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::EvalError;
use crate::eval::{bind_binders, eval, holds};
use crate::matcher::{
    for_each_match, matches_exactly, positional_view, residual_non_match, Match, MatchOptions,
    CHOICE_WINDOW,
};
use crate::store::Store;
use crate::syntax::{Atom, HeadKind, Pattern, Program, Rule};
use crate::term::{Name, Subst, Term};

/// One application of a rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AbstractStep {
    pub rule: Name,
    pub theta: Subst,
    /// The simplified fragment, removed by the step.
    pub consumed: Store,
    /// The propagated fragment, kept by the step.
    pub retained: Store,
    pub produced: Store,
    /// Matched constraints per head, in head order.
    pub blocks: Vec<Vec<Atom>>,
}

impl fmt::Display for AbstractStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: -{} +{}",
            self.rule, self.theta, self.consumed, self.produced
        )
    }
}

/// Unfolds closed body patterns: atoms are evaluated, each comprehension
/// yields one atom per domain element whose guard holds.
pub fn unfold_body(body: &[Pattern]) -> Result<Store, EvalError> {
    let env = Subst::new();
    let mut out = Vec::new();
    for p in body {
        unfold_pattern(p, &env, &mut out)?;
    }
    Ok(Store::from_atoms(out))
}

/// Unfolds one body pattern under `env`, appending in domain order.
pub fn unfold_pattern(p: &Pattern, env: &Subst, out: &mut Vec<Atom>) -> Result<(), EvalError> {
    let eval_atom = |a: &Atom, env: &Subst| -> Result<Atom, EvalError> {
        let args = a
            .args
            .iter()
            .map(|t| eval(t, env))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Atom {
            pred: a.pred.clone(),
            args,
        })
    };
    match p {
        Pattern::Atom(a) => out.push(eval_atom(a, env)?),
        Pattern::Comp(c) => {
            let Term::MSet(elems) = eval(&c.domain, env)? else {
                return Err(EvalError::Type(alloc::format!(
                    "comprehension domain {} is not a multiset",
                    c.domain
                )));
            };
            for elem in &elems {
                let mut local = env.without(&c.binders).without(&c.locals);
                bind_binders(&c.binders, elem, &mut local)?;
                if holds(&c.guard, &mut local) {
                    out.push(eval_atom(&c.atom, &local)?);
                }
            }
        }
    }
    Ok(())
}

/// `θ` applied to the rule body.
pub fn instantiate_body(rule: &Rule, theta: &Subst) -> Vec<Pattern> {
    rule.body.iter().map(|b| b.substitute(theta)).collect()
}

/// `θ` applied to the rule heads, in head order.
pub fn instantiate_heads(rule: &Rule, theta: &Subst) -> Vec<Pattern> {
    rule.heads().map(|(_, h)| h.substitute(theta)).collect()
}

fn build_step(rule: &Rule, st: &Store, m: &Match) -> Option<(AbstractStep, Store)> {
    if m.blocks.iter().all(Vec::is_empty) {
        return None;
    }
    let produced = unfold_body(&instantiate_body(rule, &m.theta)).ok()?;
    let blocks: Vec<Vec<Atom>> = m
        .blocks
        .iter()
        .map(|b| {
            b.iter()
                .map(|id| st.atoms()[*id as usize].clone())
                .collect()
        })
        .collect();
    let (mut consumed, mut retained) = (Vec::new(), Vec::new());
    for (h, block) in blocks.iter().enumerate() {
        match rule.head(h).0 {
            HeadKind::Propagated => retained.extend(block.iter().cloned()),
            HeadKind::Simplified => consumed.extend(block.iter().cloned()),
        }
    }
    let consumed = Store::from_atoms(consumed);
    let next = st
        .difference(&consumed)
        .expect("matched fragment is in the store")
        .union(&produced);
    let step = AbstractStep {
        rule: rule.name.clone(),
        theta: m.theta.clone(),
        consumed,
        retained: Store::from_atoms(retained),
        produced,
        blocks,
    };
    Some((step, next))
}

/// Calls `visit` on every applicable rule instance and its successor store,
/// in rule order then match order, until it returns false. Skipped: instances
/// whose body fails to evaluate, and instances matching no constraint at all
/// (only possible when every head is a comprehension), which would otherwise
/// apply to every store forever.
pub fn for_each_successor(
    p: &Program,
    st: &Store,
    opts: MatchOptions,
    mut visit: impl FnMut(AbstractStep, Store) -> bool,
) {
    let view = positional_view(st.atoms());
    let mut more = true;
    for rule in &p.rules {
        for_each_match(rule, &view, None, opts, |m| {
            if let Some((step, next)) = build_step(rule, st, &m) {
                more = visit(step, next);
            }
            more
        });
        if !more {
            break;
        }
    }
}

/// Every applicable rule instance and its successor store, in the order of
/// [`for_each_successor`].
pub fn abstract_successors(
    p: &Program,
    st: &Store,
    opts: MatchOptions,
) -> Vec<(AbstractStep, Store)> {
    let mut out = Vec::new();
    for_each_successor(p, st, opts, |step, next| {
        out.push((step, next));
        true
    });
    out
}

fn first_successor(p: &Program, st: &Store, opts: MatchOptions) -> Option<(AbstractStep, Store)> {
    let mut out = None;
    for_each_successor(p, st, opts, |step, next| {
        out = Some((step, next));
        false
    });
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractRun {
    pub store: Store,
    pub steps: Vec<AbstractStep>,
    pub step_limit_exceeded: bool,
}

/// Applies steps until none applies or `max_steps` is reached. Seed 0 takes
/// the first successor; any other seed picks uniformly among the first
/// [`CHOICE_WINDOW`] successors with a seeded generator.
pub fn run_abstract(p: &Program, st: &Store, max_steps: usize, seed: u64) -> AbstractRun {
    let opts = MatchOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = st.clone();
    let mut steps = Vec::new();
    loop {
        let next = if seed == 0 {
            first_successor(p, &store, opts)
        } else {
            let (mut seen, mut pick) = (0, None);
            for_each_successor(p, &store, opts, |step, next| {
                seen += 1;
                if rng.gen_range(0..seen) == 0 {
                    pick = Some((step, next));
                }
                seen < CHOICE_WINDOW
            });
            pick
        };
        let Some((step, succ)) = next else {
            return AbstractRun {
                store,
                steps,
                step_limit_exceeded: false,
            };
        };
        if steps.len() == max_steps {
            return AbstractRun {
                store,
                steps,
                step_limit_exceeded: true,
            };
        }
        steps.push(step);
        store = succ;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetExceeded {
    pub frontier: usize,
}

impl fmt::Display for BudgetExceeded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "reachability frontier grew to {} stores", self.frontier)
    }
}

impl core::error::Error for BudgetExceeded {}

/// All stores reachable in at most `depth` steps. Fails once the set of
/// stores found exceeds `budget`.
pub fn reachable(
    p: &Program,
    st: &Store,
    depth: usize,
    budget: usize,
) -> Result<BTreeSet<Store>, BudgetExceeded> {
    let mut seen = BTreeSet::new();
    seen.insert(st.clone());
    let mut frontier = alloc::vec![st.clone()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for s in &frontier {
            for (_, succ) in abstract_successors(p, s, MatchOptions::default()) {
                if seen.insert(succ.clone()) {
                    next.push(succ);
                }
                if seen.len() > budget {
                    return Err(BudgetExceeded {
                        frontier: seen.len(),
                    });
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(seen)
}

/// Why a recorded step does not apply to a store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayError {
    UnknownRule,
    FragmentMissing,
    HeadMismatch(usize),
    GuardFails,
    NotMaximal,
    BodyMismatch,
}

/// Re-checks `step` against `st` using the declarative judgments and returns
/// the successor store.
pub fn replay_step(p: &Program, st: &Store, step: &AbstractStep) -> Result<Store, ReplayError> {
    let rule = p.rule(&step.rule).ok_or(ReplayError::UnknownRule)?;
    if step.blocks.len() != rule.head_count() {
        return Err(ReplayError::UnknownRule);
    }
    let matched = step.consumed.union(&step.retained);
    let rest = st
        .difference(&matched)
        .ok_or(ReplayError::FragmentMissing)?;
    let heads = instantiate_heads(rule, &step.theta);
    for (h, (head, block)) in heads.iter().zip(&step.blocks).enumerate() {
        if !matches_exactly(core::slice::from_ref(head), block) {
            return Err(ReplayError::HeadMismatch(h));
        }
    }
    if !holds(&rule.guard, &mut step.theta.clone()) {
        return Err(ReplayError::GuardFails);
    }
    if !residual_non_match(&heads, rest.atoms()) {
        return Err(ReplayError::NotMaximal);
    }
    let produced =
        unfold_body(&instantiate_body(rule, &step.theta)).map_err(|_| ReplayError::BodyMismatch)?;
    if produced != step.produced {
        return Err(ReplayError::BodyMismatch);
    }
    Ok(rest.union(&step.retained).union(&produced))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::parser::{parse_program, parse_store};

    fn program(src: &str) -> Program {
        parse_program(src).unwrap().normalized().unwrap()
    }

    fn store(src: &str) -> Store {
        parse_store(src).unwrap()
    }

    fn body(src: &str) -> Vec<Pattern> {
        parse_program(&alloc::format!("r @ x <=> {src}."))
            .unwrap()
            .rules
            .remove(0)
            .body
    }

    #[test]
    fn unfold_examples() {
        assert_eq!(
            unfold_body(&body("{data(b,D)}#{D in [7]}")).unwrap(),
            store("data(b,7).")
        );
        assert_eq!(
            unfold_body(&body("{p(X) | X > 0}#{X in [1, -1, 2]}")).unwrap(),
            store("p(1), p(2).")
        );
        assert!(unfold_body(&body("{p(X)}#{X in []}")).unwrap().is_empty());
        assert_eq!(
            unfold_body(&body("p(X)")),
            Err(EvalError::NonGround("X".into()))
        );
    }

    #[test]
    fn relabel_needs_every_a() {
        let p = program(corpus::RELABEL);
        let succ: Vec<Store> =
            abstract_successors(&p, &store("a(1), a(2)."), MatchOptions::default())
                .into_iter()
                .map(|(_, s)| s)
                .collect();
        assert_eq!(succ, alloc::vec![store("b(1), b(2).")]);
        let succ: Vec<Store> =
            abstract_successors(&p, &store("a(1), a(2), a(3)."), MatchOptions::default())
                .into_iter()
                .map(|(_, s)| s)
                .collect();
        assert_eq!(succ, alloc::vec![store("b(1), b(2), b(3).")]);
    }

    #[test]
    fn pivot_swap_single_step() {
        let p = program(corpus::PIVOT_SWAP);
        let st = store("swap(a,b,5), data(a,7), data(a,3), data(b,2), data(b,8).");
        let run = run_abstract(&p, &st, 10, 0);
        assert_eq!(run.steps.len(), 1);
        assert_eq!(
            run.store,
            store("data(a,3), data(b,7), data(a,2), data(b,8).")
        );
        let all = reachable(&p, &st, 2, 100).unwrap();
        assert_eq!(all.len(), 2);
    }

    #[test]
    fn run_examples() {
        let p = program(corpus::RELABEL);
        let run = run_abstract(&p, &store("a(1)."), 10, 0);
        assert_eq!((run.store, run.steps.len()), (store("b(1)."), 1));
        let run = run_abstract(&p, &Store::new(), 10, 0);
        assert!(run.store.is_empty() && run.steps.is_empty());
        let looping = program("r @ p(X) ==> p(X).");
        assert!(run_abstract(&looping, &store("p(1)."), 5, 0).step_limit_exceeded);
    }

    #[test]
    fn reachable_examples() {
        let p = program(corpus::RELABEL);
        let st = store("a(1), a(2).");
        assert_eq!(reachable(&p, &st, 0, 10).unwrap().len(), 1);
        let one = reachable(&p, &st, 1, 10).unwrap();
        assert!(one.contains(&st) && one.contains(&store("b(1), b(2).")) && one.len() == 2);
        let looping = program("r @ p(X) ==> p(X).");
        assert!(reachable(&looping, &store("p(1)."), 10, 3).is_err());
    }

    #[test]
    fn replay_rejects_broken_maximality() {
        let p = program(corpus::RELABEL);
        let (step, _) =
            abstract_successors(&p, &store("a(1), a(2)."), MatchOptions::default()).remove(0);
        assert!(replay_step(&p, &store("a(1), a(2), c(3)."), &step).is_ok());
        assert_eq!(
            replay_step(&p, &store("a(1), a(2), a(3)."), &step),
            Err(ReplayError::NotMaximal)
        );
    }
}
