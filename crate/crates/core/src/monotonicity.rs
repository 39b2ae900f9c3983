//! Which constraints can never be absorbed by a comprehension head.
//!
//! A pattern is monotone with respect to a program when no instance of it
//! unifies with any comprehension head of any rule under that rule's guard.
//! Adding monotone constraints to a store never invalidates a rule
//! application, so they may be stored lazily.
//!
//! Unifiability is over-approximated: after syntactic unification, guards are
//! evaluated three-valued and only a definite `false` rules a unifier out.
//! Over-approximating unifiability only ever demotes a constraint to eager
//! storage.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::eval::{eval_guard_partial, substitute_term};
use crate::syntax::{Atom, Comprehension, Pattern, Program};
use crate::term::{Guard, GuardComp, Name, Subst, Term, TermComp};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Monotone,
    /// Some instance may be absorbed by head `head` of rule `rule`.
    NonMonotone {
        rule: Name,
        head: usize,
        comprehension: String,
    },
}

impl Verdict {
    pub fn is_monotone(&self) -> bool {
        matches!(self, Verdict::Monotone)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Monotone => f.write_str("monotone"),
            Verdict::NonMonotone {
                rule,
                comprehension,
                ..
            } => {
                write!(
                    f,
                    "non-monotone (unifies with {comprehension} in rule {rule})"
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotonicityReport {
    /// One verdict per input pattern, in input order.
    pub verdicts: Vec<(Pattern, Verdict)>,
}

impl MonotonicityReport {
    pub fn all_monotone(&self) -> bool {
        self.verdicts.iter().all(|(_, v)| v.is_monotone())
    }
}

const APART: &str = "'";

fn rename_term(t: &Term) -> Term {
    match t {
        Term::Var(v) => Term::Var(format!("{v}{APART}")),
        Term::Int(_) | Term::Infty | Term::Bool(_) | Term::Sym(_) => t.clone(),
        Term::Tuple(ts) => Term::Tuple(ts.iter().map(rename_term).collect()),
        Term::MSet(ts) => Term::MSet(ts.iter().map(rename_term).collect()),
        Term::Prim(op, ts) => Term::Prim(*op, ts.iter().map(rename_term).collect()),
        Term::Union(a, b) => Term::Union(Box::new(rename_term(a)), Box::new(rename_term(b))),
        Term::Reduce(f, u, d) => {
            Term::Reduce(*f, Box::new(rename_term(u)), Box::new(rename_term(d)))
        }
        Term::Comp(c) => Term::Comp(Box::new(TermComp {
            template: rename_term(&c.template),
            guard: rename_guard(&c.guard),
            binders: rename_names(&c.binders),
            domain: rename_term(&c.domain),
        })),
    }
}

fn rename_names(names: &[Name]) -> Vec<Name> {
    names.iter().map(|n| format!("{n}{APART}")).collect()
}

fn rename_guard(g: &Guard) -> Guard {
    match g {
        Guard::True => Guard::True,
        Guard::Atomic(r, a, b) => Guard::Atomic(*r, rename_term(a), rename_term(b)),
        Guard::Bind(p, t) => Guard::Bind(rename_term(p), rename_term(t)),
        Guard::Conj(gs) => Guard::Conj(gs.iter().map(rename_guard).collect()),
        Guard::ConjComp(c) => Guard::ConjComp(Box::new(GuardComp {
            binders: rename_names(&c.binders),
            domain: rename_term(&c.domain),
            body: rename_guard(&c.body),
        })),
    }
}

/// Renames every variable of a pattern with a suffix no parsed name can carry.
fn standardize_apart(p: &Pattern) -> Pattern {
    let atom = |a: &Atom| Atom {
        pred: a.pred.clone(),
        args: a.args.iter().map(rename_term).collect(),
    };
    match p {
        Pattern::Atom(a) => Pattern::Atom(atom(a)),
        Pattern::Comp(c) => Pattern::Comp(Comprehension {
            atom: atom(&c.atom),
            guard: rename_guard(&c.guard),
            binders: rename_names(&c.binders),
            locals: rename_names(&c.locals),
            domain: rename_term(&c.domain),
        }),
    }
}

fn walk(sigma: &Subst, t: &Term) -> Term {
    substitute_term(sigma, t)
}

fn bind(sigma: &mut Subst, v: &str, t: Term) {
    let single: Subst = [(String::from(v), t.clone())].into_iter().collect();
    let updated: Vec<(Name, Term)> = sigma
        .iter()
        .map(|(k, u)| (k.clone(), substitute_term(&single, u)))
        .collect();
    *sigma = updated.into_iter().collect();
    sigma.insert(v, t);
}

fn is_constructor(t: &Term) -> bool {
    matches!(
        t,
        Term::Int(_) | Term::Infty | Term::Bool(_) | Term::Sym(_) | Term::Tuple(_) | Term::Var(_)
    ) || (matches!(t, Term::MSet(_)) && t.is_value())
}

/// First-order unification with occurs check, extending an idempotent `sigma`.
/// Non-constructor terms (arithmetic, comprehensions, reduce) that are not
/// ground are opaque: they unify with anything without binding.
fn unify(a: &Term, b: &Term, sigma: &mut Subst) -> bool {
    let (a, b) = (walk(sigma, a), walk(sigma, b));
    if a == b {
        return true;
    }
    match (&a, &b) {
        (Term::Var(x), t) | (t, Term::Var(x)) => {
            if t.free_vars().contains(x) {
                return false;
            }
            bind(sigma, x, t.clone());
            true
        }
        (Term::Tuple(xs), Term::Tuple(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| unify(x, y, sigma))
        }
        _ if is_constructor(&a) && is_constructor(&b) => false,
        _ if a.is_value() && b.is_value() => false,
        _ => true,
    }
}

fn unify_args(xs: &[Term], ys: &[Term], sigma: &mut Subst) -> bool {
    xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| unify(x, y, sigma))
}

/// Whether each guard may hold under `sigma`, evaluated independently.
fn guards_possible(sigma: &Subst, guards: &[&Guard]) -> bool {
    guards
        .iter()
        .all(|g| eval_guard_partial(g, &mut sigma.clone()).possibly())
}

/// `a` may be absorbed by the comprehension head `m` of a rule with guard `g`.
/// The caller keeps `a`'s variables apart from `g` and `m`.
pub fn unifiable_atom_comp(g: &Guard, a: &Atom, m: &Comprehension) -> bool {
    let mut sigma = Subst::new();
    a.pred == m.atom.pred
        && unify_args(&a.args, &m.atom.args, &mut sigma)
        && guards_possible(&sigma, &[&m.guard, g])
}

/// Some instance of the comprehension `m1` may be absorbed by the
/// comprehension head `m2` of a rule with guard `g`.
pub fn unifiable_comp_comp(g: &Guard, m1: &Comprehension, m2: &Comprehension) -> bool {
    let mut sigma = Subst::new();
    m1.atom.pred == m2.atom.pred
        && unify_args(&m1.atom.args, &m2.atom.args, &mut sigma)
        && guards_possible(&sigma, &[&m2.guard, &m1.guard, g])
}

fn verdict(p: &Program, pattern: &Pattern) -> Verdict {
    let apart = standardize_apart(pattern);
    for rule in &p.rules {
        for (h, (_, head)) in rule.heads().enumerate() {
            let Pattern::Comp(m) = head else { continue };
            let hit = match &apart {
                Pattern::Atom(a) => unifiable_atom_comp(&rule.guard, a, m),
                Pattern::Comp(m1) => unifiable_comp_comp(&rule.guard, m1, m),
            };
            if hit {
                return Verdict::NonMonotone {
                    rule: rule.name.clone(),
                    head: h,
                    comprehension: format!("{m}"),
                };
            }
        }
    }
    Verdict::Monotone
}

/// Verdict for each pattern of `body` against every comprehension head of `p`.
pub fn residual_non_unifiable(p: &Program, body: &[Pattern]) -> MonotonicityReport {
    MonotonicityReport {
        verdicts: body.iter().map(|b| (b.clone(), verdict(p, b))).collect(),
    }
}

pub fn is_monotone(p: &Program, c: &Pattern) -> bool {
    verdict(p, c).is_monotone()
}

pub fn is_monotone_atom(p: &Program, a: &Atom) -> bool {
    is_monotone(p, &Pattern::Atom(a.clone()))
}

/// Verdict for a fully general atom of every predicate the program mentions.
pub fn predicate_report(p: &Program) -> Vec<(Name, usize, Verdict)> {
    p.predicates()
        .into_iter()
        .map(|(pred, arity)| {
            let args = (1..=arity).map(|i| Term::Var(format!("A{i}"))).collect();
            let v = verdict(
                p,
                &Pattern::Atom(Atom {
                    pred: pred.clone(),
                    args,
                }),
            );
            (pred, arity, v)
        })
        .collect()
}

/// Verdicts for every body pattern of every rule, labelled `rule#k`.
pub fn body_report(p: &Program) -> Vec<(String, Pattern, Verdict)> {
    let mut out = Vec::new();
    for r in &p.rules {
        for (k, b) in r.body.iter().enumerate() {
            out.push((format!("{}#{}", r.name, k + 1), b.clone(), verdict(p, b)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::parser::{parse_program, parse_store};

    fn program(src: &str) -> Program {
        parse_program(src).unwrap().normalized().unwrap()
    }

    fn atom(src: &str) -> Atom {
        parse_store(&format!("{src}."))
            .unwrap()
            .into_atoms()
            .remove(0)
    }

    fn head_comp(src: &str) -> Comprehension {
        program(&format!("r @ {src} <=> true.")).rules[0].simplified[0]
            .as_comp()
            .unwrap()
            .clone()
    }

    fn body_comp(src: &str) -> Comprehension {
        let r = parse_program(&format!("r @ x(Xs) <=> {src}."))
            .unwrap()
            .rules
            .remove(0);
        r.body[0].as_comp().unwrap().clone()
    }

    fn var_atom(pred: &str, var: &str) -> Atom {
        Atom::new(pred, alloc::vec![Term::var(var)])
    }

    #[test]
    fn atom_comprehension_examples() {
        let m = head_comp("{a(Y)}#{Y in Ys}");
        assert!(!unifiable_atom_comp(&Guard::True, &var_atom("b", "X"), &m));
        assert!(unifiable_atom_comp(&Guard::True, &var_atom("a", "X"), &m));
        let bounded = head_comp("{a(Y) | Y < 3}#{Y in Ys}");
        assert!(!unifiable_atom_comp(&Guard::True, &atom("a(3)"), &bounded));
        assert!(unifiable_atom_comp(&Guard::True, &atom("a(2)"), &bounded));
    }

    #[test]
    fn comprehension_comprehension_examples() {
        let m2 = head_comp("{a(Y)}#{Y in Ys}");
        assert!(!unifiable_comp_comp(
            &Guard::True,
            &body_comp("{b(X)}#{X in Xs}"),
            &m2
        ));
        assert!(unifiable_comp_comp(
            &Guard::True,
            &body_comp("{a(X) | X > 0}#{X in Xs}"),
            &m2
        ));
        // Contradictory guards are not detected.
        assert!(unifiable_comp_comp(
            &Guard::True,
            &body_comp("{a(X) | X > 0, X < 0}#{X in Xs}"),
            &m2
        ));
    }

    #[test]
    fn relabel_verdicts() {
        let p = program(corpus::RELABEL);
        assert!(!is_monotone_atom(&p, &atom("a(3)")));
        assert!(is_monotone_atom(&p, &atom("c(3)")));
        assert!(is_monotone_atom(&Program::default(), &atom("a(3)")));
    }

    #[test]
    fn pivot_swap_data_is_eager_and_swap_is_lazy() {
        let p = program(corpus::PIVOT_SWAP);
        let report = predicate_report(&p);
        let get = |name: &str| report.iter().find(|(n, _, _)| n == name).unwrap().2.clone();
        assert!(!get("data").is_monotone());
        assert!(get("swap").is_monotone());
    }

    #[test]
    fn shared_names_are_kept_apart() {
        // The body atom's X must not be confused with the head's X.
        let p = program("r @ p(X), {a(Y) | Y > X}#{Y in Ys} <=> true.");
        assert!(!is_monotone(&p, &Pattern::Atom(var_atom("a", "X"))));
        assert!(is_monotone_atom(&p, &atom("b(1)")));
    }
}
