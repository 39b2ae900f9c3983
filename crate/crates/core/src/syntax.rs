//! Constraint patterns, rules and programs.
//!
//! Rules come out of the parser in source form. [`normalize_rule`] rewrites a
//! rule into the shape the engines expect: every head atom argument becomes a
//! distinct variable, with the original argument terms moved into equality
//! guards, and every guard equation that introduces a variable becomes an
//! explicit [`Guard::Bind`]. The same pass performs the scope analysis behind
//! [`check_well_formed`].

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::eval::{enter_scope, join_names, substitute_guard, substitute_term};
use crate::term::{write_binders, FreshNames, Guard, GuardComp, Name, Rel, Subst, Term, TermComp};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub pred: Name,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, args: Vec<Term>) -> Self {
        Atom {
            pred: pred.to_owned(),
            args,
        }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        self.args.iter().flat_map(Term::free_vars).collect()
    }

    pub fn substitute(&self, theta: &Subst) -> Atom {
        Atom {
            pred: self.pred.clone(),
            args: self
                .args
                .iter()
                .map(|a| substitute_term(theta, a))
                .collect(),
        }
    }
}

/// `{atom | guard}#{binders in domain}`.
///
/// `locals` lists variables scoped to a single matched constraint: after
/// normalization the atom's arguments are exactly these, and the guard relates
/// them to the binders and the enclosing rule's variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Comprehension {
    pub atom: Atom,
    pub guard: Guard,
    pub binders: Vec<Name>,
    pub locals: Vec<Name>,
    pub domain: Term,
}

impl Comprehension {
    pub fn new(atom: Atom, guard: Guard, binders: Vec<Name>, domain: Term) -> Self {
        Comprehension {
            atom,
            guard,
            binders,
            locals: Vec::new(),
            domain,
        }
    }

    fn scoped(&self) -> Vec<Name> {
        let mut names = self.binders.clone();
        names.extend(self.locals.iter().cloned());
        names
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = self.domain.free_vars();
        let mut bound: BTreeSet<Name> = self.scoped().into_iter().collect();
        let mut inner = BTreeSet::new();
        for a in &self.atom.args {
            a.collect_free(&mut bound, &mut inner);
        }
        self.guard.collect_free(&mut bound, &mut inner);
        out.extend(inner);
        out
    }

    pub fn substitute(&self, theta: &Subst) -> Comprehension {
        let domain = substitute_term(theta, &self.domain);
        let scoped = self.scoped();
        let (renamed, inner, renaming) = enter_scope(theta, &scoped, |names| {
            self.atom.args.iter().for_each(|a| a.all_names(names));
            self.guard.all_names(names);
        });
        let (mut atom, mut guard) = (self.atom.clone(), self.guard.clone());
        if !renaming.is_empty() {
            atom = atom.substitute(&renaming);
            guard = substitute_guard(&renaming, &guard);
        }
        let (binders, locals) = renamed.split_at(self.binders.len());
        Comprehension {
            atom: atom.substitute(&inner),
            guard: substitute_guard(&inner, &guard),
            binders: binders.to_vec(),
            locals: locals.to_vec(),
            domain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pattern {
    Atom(Atom),
    Comp(Comprehension),
}

impl Pattern {
    pub fn pred(&self) -> &str {
        match self {
            Pattern::Atom(a) => &a.pred,
            Pattern::Comp(c) => &c.atom.pred,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        match self {
            Pattern::Atom(a) => a.free_vars(),
            Pattern::Comp(c) => c.free_vars(),
        }
    }

    pub fn substitute(&self, theta: &Subst) -> Pattern {
        match self {
            Pattern::Atom(a) => Pattern::Atom(a.substitute(theta)),
            Pattern::Comp(c) => Pattern::Comp(c.substitute(theta)),
        }
    }

    pub fn as_comp(&self) -> Option<&Comprehension> {
        match self {
            Pattern::Comp(c) => Some(c),
            Pattern::Atom(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HeadKind {
    Propagated,
    Simplified,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub name: Name,
    pub propagated: Vec<Pattern>,
    pub simplified: Vec<Pattern>,
    pub guard: Guard,
    pub body: Vec<Pattern>,
}

impl Rule {
    /// Heads in matching order: propagated heads, then simplified heads.
    pub fn heads(&self) -> impl Iterator<Item = (HeadKind, &Pattern)> + '_ {
        self.propagated
            .iter()
            .map(|p| (HeadKind::Propagated, p))
            .chain(self.simplified.iter().map(|p| (HeadKind::Simplified, p)))
    }

    pub fn head_count(&self) -> usize {
        self.propagated.len() + self.simplified.len()
    }

    pub fn head(&self, idx: usize) -> (HeadKind, &Pattern) {
        if idx < self.propagated.len() {
            (HeadKind::Propagated, &self.propagated[idx])
        } else {
            (
                HeadKind::Simplified,
                &self.simplified[idx - self.propagated.len()],
            )
        }
    }

    pub fn is_propagation(&self) -> bool {
        self.simplified.is_empty()
    }

    /// Free variables of the heads: atom arguments and comprehension domains.
    pub fn head_vars(&self) -> BTreeSet<Name> {
        self.heads().flat_map(|(_, p)| p.free_vars()).collect()
    }

    fn all_names(&self) -> BTreeSet<Name> {
        let mut names = BTreeSet::new();
        let mut pattern_names = |p: &Pattern| match p {
            Pattern::Atom(a) => a.args.iter().for_each(|t| t.all_names(&mut names)),
            Pattern::Comp(c) => {
                c.atom.args.iter().for_each(|t| t.all_names(&mut names));
                c.guard.all_names(&mut names);
                c.domain.all_names(&mut names);
                names.extend(c.binders.iter().cloned());
                names.extend(c.locals.iter().cloned());
            }
        };
        self.heads().for_each(|(_, p)| pattern_names(p));
        self.body.iter().for_each(&mut pattern_names);
        self.guard.all_names(&mut names);
        names
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub rules: Vec<Rule>,
}

impl Program {
    pub fn new(rules: Vec<Rule>) -> Self {
        Program { rules }
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }

    /// Normalizes every rule; fails with the well-formedness diagnostics.
    pub fn normalized(&self) -> Result<Program, Vec<Diagnostic>> {
        let diags = check_well_formed(self);
        if !diags.is_empty() {
            return Err(diags);
        }
        let rules = self
            .rules
            .iter()
            .map(|r| normalize_rule(r).expect("checked above"))
            .collect();
        Ok(Program { rules })
    }

    /// Predicate/arity pairs mentioned anywhere in the program, sorted.
    pub fn predicates(&self) -> Vec<(Name, usize)> {
        let mut out = BTreeSet::new();
        for r in &self.rules {
            for p in r.heads().map(|(_, p)| p).chain(r.body.iter()) {
                let a = match p {
                    Pattern::Atom(a) => a,
                    Pattern::Comp(c) => &c.atom,
                };
                out.insert((a.pred.clone(), a.args.len()));
            }
        }
        out.into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum DiagnosticKind {
    DuplicateRuleName,
    EmptyHead,
    /// A body variable that neither the heads nor the guard bind.
    UngroundedBody(Name),
    /// A head or guard term reads a variable that is never bound.
    UnboundVariable(Name),
    /// A comprehension binder that matching cannot determine.
    UnboundBinder(Name),
    DuplicateBinder(Name),
    HeadDomainNotVariable,
    /// A head comprehension's domain variable occurs elsewhere in the heads.
    DomainVariableReused(Name),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Diagnostic {
    pub rule: Name,
    pub kind: DiagnosticKind,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {}: ", self.rule)?;
        match &self.kind {
            DiagnosticKind::DuplicateRuleName => f.write_str("duplicate rule name"),
            DiagnosticKind::EmptyHead => f.write_str("rule has no head constraints"),
            DiagnosticKind::UngroundedBody(v) => {
                write!(f, "body variable {v} is not bound by the heads or guard")
            }
            DiagnosticKind::UnboundVariable(v) => {
                write!(f, "variable {v} is read before it is bound")
            }
            DiagnosticKind::UnboundBinder(v) => write!(
                f,
                "comprehension binder {v} is not determined by its pattern"
            ),
            DiagnosticKind::DuplicateBinder(v) => write!(f, "binder {v} listed twice"),
            DiagnosticKind::HeadDomainNotVariable => {
                f.write_str("head comprehension domain must be a variable")
            }
            DiagnosticKind::DomainVariableReused(v) => {
                write!(
                    f,
                    "comprehension domain {v} also occurs elsewhere in the heads"
                )
            }
        }
    }
}

/// Lists every well-formedness violation in `p`; empty iff the program is well formed.
pub fn check_well_formed(p: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for r in &p.rules {
        if !seen.insert(r.name.clone()) {
            out.push(Diagnostic {
                rule: r.name.clone(),
                kind: DiagnosticKind::DuplicateRuleName,
            });
        }
        if let Err(ds) = normalize_rule(r) {
            out.extend(ds);
        }
    }
    out
}

/// Scope state threaded through the normalization of one rule.
struct Scoper<'a> {
    rule: &'a str,
    diags: Vec<Diagnostic>,
}

impl Scoper<'_> {
    fn report(&mut self, kind: DiagnosticKind) {
        let d = Diagnostic {
            rule: self.rule.to_owned(),
            kind,
        };
        if !self.diags.contains(&d) {
            self.diags.push(d);
        }
    }

    fn unbound(&mut self, vars: impl IntoIterator<Item = Name>, body: bool) {
        for v in vars {
            self.report(if body {
                DiagnosticKind::UngroundedBody(v)
            } else {
                DiagnosticKind::UnboundVariable(v)
            });
        }
    }

    /// Checks a term's reads against `scope`, resolving guards of nested term comprehensions.
    fn term(&mut self, t: &Term, scope: &BTreeSet<Name>, body: bool) -> Term {
        match t {
            Term::Var(v) => {
                if !scope.contains(v) {
                    self.unbound([v.clone()], body);
                }
                t.clone()
            }
            Term::Int(_) | Term::Infty | Term::Bool(_) | Term::Sym(_) => t.clone(),
            Term::Tuple(ts) => Term::Tuple(ts.iter().map(|t| self.term(t, scope, body)).collect()),
            Term::MSet(ts) => Term::MSet(ts.iter().map(|t| self.term(t, scope, body)).collect()),
            Term::Prim(op, ts) => {
                Term::Prim(*op, ts.iter().map(|t| self.term(t, scope, body)).collect())
            }
            Term::Union(a, b) => Term::Union(
                alloc::boxed::Box::new(self.term(a, scope, body)),
                alloc::boxed::Box::new(self.term(b, scope, body)),
            ),
            Term::Reduce(f, u, d) => Term::Reduce(
                *f,
                alloc::boxed::Box::new(self.term(u, scope, body)),
                alloc::boxed::Box::new(self.term(d, scope, body)),
            ),
            Term::Comp(c) => {
                let domain = self.term(&c.domain, scope, body);
                self.distinct_binders(&c.binders);
                let mut inner = scope.clone();
                inner.extend(c.binders.iter().cloned());
                let guard = self.guard(&c.guard, &mut inner, body);
                let template = self.term(&c.template, &inner, body);
                Term::Comp(alloc::boxed::Box::new(TermComp {
                    template,
                    guard,
                    binders: c.binders.clone(),
                    domain,
                }))
            }
        }
    }

    fn distinct_binders(&mut self, binders: &[Name]) {
        let mut seen = BTreeSet::new();
        for b in binders {
            if !seen.insert(b) {
                self.report(DiagnosticKind::DuplicateBinder(b.clone()));
            }
        }
    }

    /// Resolves a guard left to right: an equation with unbound variables on
    /// exactly one side, where that side is a pattern, becomes a binding.
    fn guard(&mut self, g: &Guard, scope: &mut BTreeSet<Name>, body: bool) -> Guard {
        match g {
            Guard::True => Guard::True,
            Guard::Atomic(Rel::Eq, l, r) => {
                let fl: Vec<Name> = l
                    .free_vars()
                    .into_iter()
                    .filter(|v| !scope.contains(v))
                    .collect();
                let fr: Vec<Name> = r
                    .free_vars()
                    .into_iter()
                    .filter(|v| !scope.contains(v))
                    .collect();
                match (fl.is_empty(), fr.is_empty()) {
                    (true, true) => Guard::Atomic(
                        Rel::Eq,
                        self.term(l, scope, body),
                        self.term(r, scope, body),
                    ),
                    (false, true) if l.is_pattern() => {
                        let r = self.term(r, scope, body);
                        scope.extend(fl);
                        Guard::Bind(l.clone(), r)
                    }
                    (true, false) if r.is_pattern() => {
                        let l = self.term(l, scope, body);
                        scope.extend(fr);
                        Guard::Bind(r.clone(), l)
                    }
                    _ => {
                        self.unbound(fl.into_iter().chain(fr), body);
                        g.clone()
                    }
                }
            }
            Guard::Atomic(rel, l, r) => {
                Guard::Atomic(*rel, self.term(l, scope, body), self.term(r, scope, body))
            }
            Guard::Bind(p, t) => {
                let t = self.term(t, scope, body);
                scope.extend(p.free_vars());
                Guard::Bind(p.clone(), t)
            }
            Guard::Conj(gs) => Guard::and(
                gs.iter()
                    .map(|g| self.guard(g, scope, body))
                    .collect::<Vec<_>>(),
            ),
            Guard::ConjComp(c) => {
                let domain = self.term(&c.domain, scope, body);
                self.distinct_binders(&c.binders);
                let mut inner = scope.clone();
                inner.extend(c.binders.iter().cloned());
                let inner_body = self.guard(&c.body, &mut inner, body);
                Guard::ConjComp(alloc::boxed::Box::new(GuardComp {
                    binders: c.binders.clone(),
                    domain,
                    body: inner_body,
                }))
            }
        }
    }

    /// Turns `(var, original argument)` pairs into guards, repeating passes so
    /// an argument may use variables bound by a later one. Only variables in
    /// `bindable` (or any variable, when `None`) may be introduced.
    fn argument_equations(
        &mut self,
        pending: Vec<(Name, Term)>,
        scope: &mut BTreeSet<Name>,
        bindable: Option<&BTreeSet<Name>>,
    ) -> Vec<Guard> {
        let mut out = Vec::new();
        let mut pending: Vec<Option<(Name, Term)>> = pending.into_iter().map(Some).collect();
        loop {
            let mut progress = false;
            for slot in pending.iter_mut() {
                let Some((v, t)) = slot.as_ref() else {
                    continue;
                };
                let free: Vec<Name> = t
                    .free_vars()
                    .into_iter()
                    .filter(|x| !scope.contains(x))
                    .collect();
                let can_bind =
                    t.is_pattern() && free.iter().all(|x| bindable.is_none_or(|b| b.contains(x)));
                if free.is_empty() {
                    out.push(Guard::Atomic(
                        Rel::Eq,
                        Term::Var(v.clone()),
                        self.term(t, scope, false),
                    ));
                } else if can_bind {
                    scope.extend(free);
                    out.push(Guard::Bind(t.clone(), Term::Var(v.clone())));
                } else {
                    continue;
                }
                *slot = None;
                progress = true;
            }
            if !progress {
                break;
            }
        }
        for (_, t) in pending.into_iter().flatten() {
            let free: Vec<Name> = t
                .free_vars()
                .into_iter()
                .filter(|x| !scope.contains(x))
                .collect();
            self.unbound(free, false);
        }
        out
    }
}

/// Rewrites `r` so every head atom argument is a distinct variable and guard
/// equations that introduce variables are explicit bindings.
pub fn normalize_rule(r: &Rule) -> Result<Rule, Vec<Diagnostic>> {
    let mut sc = Scoper {
        rule: &r.name,
        diags: Vec::new(),
    };
    let mut fresh = FreshNames::avoiding(r.all_names());
    if r.head_count() == 0 {
        sc.report(DiagnosticKind::EmptyHead);
    }

    // Comprehension domains are outputs of matching.
    let mut domain_vars: BTreeSet<Name> = BTreeSet::new();
    let mut atom_arg_vars: BTreeSet<Name> = BTreeSet::new();
    let mut comp_inner_vars: Vec<BTreeSet<Name>> = Vec::new();
    for (_, p) in r.heads() {
        match p {
            Pattern::Atom(a) => atom_arg_vars.extend(a.free_vars()),
            Pattern::Comp(c) => {
                let mut inner = c.free_vars();
                inner.retain(|v| !c.domain.free_vars().contains(v));
                comp_inner_vars.push(inner);
            }
        }
    }
    for (_, p) in r.heads() {
        if let Pattern::Comp(c) = p {
            match &c.domain {
                Term::Var(d) => {
                    let elsewhere = atom_arg_vars.contains(d)
                        || comp_inner_vars.iter().any(|s| s.contains(d))
                        || domain_vars.contains(d);
                    if elsewhere {
                        sc.report(DiagnosticKind::DomainVariableReused(d.clone()));
                    }
                    domain_vars.insert(d.clone());
                }
                _ => sc.report(DiagnosticKind::HeadDomainNotVariable),
            }
        }
    }

    // Atom heads: keep first occurrences of plain variables, freshen the rest.
    let mut scope: BTreeSet<Name> = BTreeSet::new();
    let mut pending = Vec::new();
    let mut new_heads: Vec<Pattern> = Vec::new();
    for (_, p) in r.heads() {
        match p {
            Pattern::Atom(a) => {
                let mut args = Vec::with_capacity(a.args.len());
                for arg in &a.args {
                    match arg {
                        Term::Var(v) if !scope.contains(v) && !domain_vars.contains(v) => {
                            scope.insert(v.clone());
                            args.push(arg.clone());
                        }
                        _ => {
                            let fv = fresh.fresh("_A");
                            scope.insert(fv.clone());
                            pending.push((fv.clone(), arg.clone()));
                            args.push(Term::Var(fv));
                        }
                    }
                }
                new_heads.push(Pattern::Atom(Atom {
                    pred: a.pred.clone(),
                    args,
                }));
            }
            Pattern::Comp(_) => new_heads.push(p.clone()),
        }
    }
    let mut guards = sc.argument_equations(pending, &mut scope, None);

    // Comprehension heads: atom arguments become per-constraint locals.
    for h in new_heads.iter_mut() {
        let Pattern::Comp(c) = h else { continue };
        sc.distinct_binders(&c.binders);
        let already = !c.locals.is_empty()
            && c.atom
                .args
                .iter()
                .map(Term::as_var)
                .eq(c.locals.iter().map(|l| Some(l.as_str())));
        let mut inner = scope.clone();
        let mut eqs = Vec::new();
        if !already {
            let mut pending = Vec::new();
            let mut locals = Vec::new();
            let mut args = Vec::new();
            for arg in &c.atom.args {
                let l = fresh.fresh("_L");
                inner.insert(l.clone());
                locals.push(l.clone());
                pending.push((l.clone(), arg.clone()));
                args.push(Term::Var(l));
            }
            let binders: BTreeSet<Name> = c.binders.iter().cloned().collect();
            eqs = sc.argument_equations(pending, &mut inner, Some(&binders));
            c.atom.args = args;
            c.locals = locals;
        } else {
            inner.extend(c.locals.iter().cloned());
        }
        let guard = sc.guard(&c.guard, &mut inner, false);
        for b in &c.binders {
            if !inner.contains(b) {
                sc.report(DiagnosticKind::UnboundBinder(b.clone()));
            }
        }
        eqs.push(guard);
        c.guard = Guard::and(eqs);
    }

    scope.extend(domain_vars.iter().cloned());
    let user_guard = sc.guard(&r.guard, &mut scope, false);
    guards.push(user_guard);

    let mut body = Vec::with_capacity(r.body.len());
    for b in &r.body {
        body.push(match b {
            Pattern::Atom(a) => Pattern::Atom(Atom {
                pred: a.pred.clone(),
                args: a.args.iter().map(|t| sc.term(t, &scope, true)).collect(),
            }),
            Pattern::Comp(c) => {
                let domain = sc.term(&c.domain, &scope, true);
                sc.distinct_binders(&c.binders);
                let mut inner = scope.clone();
                inner.extend(c.binders.iter().cloned());
                inner.extend(c.locals.iter().cloned());
                let guard = sc.guard(&c.guard, &mut inner, true);
                let args = c
                    .atom
                    .args
                    .iter()
                    .map(|t| sc.term(t, &inner, true))
                    .collect();
                Pattern::Comp(Comprehension {
                    atom: Atom {
                        pred: c.atom.pred.clone(),
                        args,
                    },
                    guard,
                    binders: c.binders.clone(),
                    locals: c.locals.clone(),
                    domain,
                })
            }
        });
    }

    if !sc.diags.is_empty() {
        return Err(sc.diags);
    }
    let n_prop = r.propagated.len();
    let simplified = new_heads.split_off(n_prop);
    Ok(Rule {
        name: r.name.clone(),
        propagated: new_heads,
        simplified,
        guard: Guard::and(guards),
        body,
    })
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pred)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Comprehension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}", self.atom)?;
        if self.guard != Guard::True {
            write!(f, " | {}", self.guard)?;
        }
        f.write_str("}")?;
        write_binders(f, &self.binders, &self.domain)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Atom(a) => write!(f, "{a}"),
            Pattern::Comp(c) => write!(f, "{c}"),
        }
    }
}

fn write_patterns(f: &mut fmt::Formatter<'_>, ps: &[Pattern]) -> fmt::Result {
    for (i, p) in ps.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{p}")?;
    }
    Ok(())
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @ ", self.name)?;
        if self.simplified.is_empty() {
            write_patterns(f, &self.propagated)?;
            f.write_str(" ==> ")?;
        } else {
            if !self.propagated.is_empty() {
                write_patterns(f, &self.propagated)?;
                f.write_str(" \\ ")?;
            }
            write_patterns(f, &self.simplified)?;
            f.write_str(" <=> ")?;
        }
        if self.guard != Guard::True {
            write!(f, "{} | ", self.guard)?;
        }
        if self.body.is_empty() {
            f.write_str("true")?;
        } else {
            write_patterns(f, &self.body)?;
        }
        f.write_str(".")
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Used by diagnostics and reports that list binder names.
pub fn describe_binders(c: &Comprehension) -> String {
    join_names(&c.binders)
}
