//! Terms, guards and substitutions.
//!
//! The base language is deliberately small: integers with a top element
//! `infty`, booleans, symbols, tuples and multisets, plus arithmetic,
//! term-level multiset comprehensions and the `reduce` fold. Values (ground,
//! normalized terms) are ordered by the derived [`Ord`], which is the
//! canonical order used everywhere a multiset needs a normal form: first by
//! type tag (`Int < Infty < Bool < Sym < Tuple < MSet`), then structurally.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Name = String;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Int(i64),
    /// Top element, above every integer.
    Infty,
    Bool(bool),
    Sym(Name),
    Tuple(Vec<Term>),
    /// Multiset literal. Normalized multisets keep their elements sorted.
    MSet(Vec<Term>),
    Var(Name),
    Union(Box<Term>, Box<Term>),
    Comp(Box<TermComp>),
    Reduce(ReduceFn, Box<Term>, Box<Term>),
    Prim(PrimOp, Vec<Term>),
}

/// `{template | guard}#{binders in domain}`: filter `domain` by `guard`, map by `template`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermComp {
    pub template: Term,
    pub guard: Guard,
    pub binders: Vec<Name>,
    pub domain: Term,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PrimOp {
    Add,
    Sub,
    Mul,
    Neg,
    Min,
    Max,
}

/// Built-in reduce functions. All four are associative and commutative, so
/// the fold result does not depend on element order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReduceFn {
    Min,
    Max,
    Sum,
    Count,
}

impl ReduceFn {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "min" => ReduceFn::Min,
            "max" => ReduceFn::Max,
            "sum" => ReduceFn::Sum,
            "count" => ReduceFn::Count,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            ReduceFn::Min => "min",
            ReduceFn::Max => "max",
            ReduceFn::Sum => "sum",
            ReduceFn::Count => "count",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    In,
}

impl Rel {
    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Eq => "=",
            Rel::Ne => "!=",
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Gt => ">",
            Rel::Ge => ">=",
            Rel::In => "in",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Guard {
    True,
    Atomic(Rel, Term, Term),
    /// `pattern = term`: evaluates `term` and matches it against `pattern`
    /// (variables, tuples and literals), binding the pattern's unbound
    /// variables for every guard to its right.
    Bind(Term, Term),
    Conj(Vec<Guard>),
    /// Conjunction of `body` over every element of `domain`.
    ConjComp(Box<GuardComp>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GuardComp {
    pub binders: Vec<Name>,
    pub domain: Term,
    pub body: Guard,
}

impl Guard {
    /// Conjunction that flattens nested conjunctions and drops `True`.
    pub fn and(parts: impl IntoIterator<Item = Guard>) -> Guard {
        let mut out = Vec::new();
        for g in parts {
            match g {
                Guard::True => {}
                Guard::Conj(gs) => out.extend(gs),
                g => out.push(g),
            }
        }
        match out.len() {
            0 => Guard::True,
            1 => out.pop().unwrap(),
            _ => Guard::Conj(out),
        }
    }

    pub fn conjuncts(&self) -> Vec<&Guard> {
        match self {
            Guard::True => Vec::new(),
            Guard::Conj(gs) => gs.iter().flat_map(|g| g.conjuncts()).collect(),
            g => alloc::vec![g],
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut BTreeSet::new(), &mut out);
        out
    }

    /// Variables a guard reads before binding them, and those it binds.
    pub(crate) fn collect_free(&self, bound: &mut BTreeSet<Name>, out: &mut BTreeSet<Name>) {
        match self {
            Guard::True => {}
            Guard::Atomic(_, l, r) => {
                l.collect_free(bound, out);
                r.collect_free(bound, out);
            }
            Guard::Bind(p, t) => {
                t.collect_free(bound, out);
                for v in p.vars() {
                    if !bound.contains(&v) {
                        bound.insert(v);
                    }
                }
            }
            Guard::Conj(gs) => {
                for g in gs {
                    g.collect_free(bound, out);
                }
            }
            Guard::ConjComp(c) => {
                c.domain.collect_free(bound, out);
                let mut inner = bound.clone();
                inner.extend(c.binders.iter().cloned());
                c.body.collect_free(&mut inner, out);
            }
        }
    }

    /// Variables bound by top-level `Bind`s of this guard (in order).
    pub fn bound_vars(&self) -> Vec<Name> {
        let mut out = Vec::new();
        for g in self.conjuncts() {
            if let Guard::Bind(p, _) = g {
                for v in p.vars() {
                    if !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
        }
        out
    }
}

impl Term {
    pub fn int(v: i64) -> Term {
        Term::Int(v)
    }

    pub fn sym(s: &str) -> Term {
        Term::Sym(s.to_owned())
    }

    pub fn var(s: &str) -> Term {
        Term::Var(s.to_owned())
    }

    /// Builds a normalized multiset value.
    pub fn mset(mut elems: Vec<Term>) -> Term {
        elems.sort();
        Term::MSet(elems)
    }

    pub fn empty_mset() -> Term {
        Term::MSet(Vec::new())
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    /// True for a normalized value: no variables and no unevaluated operators.
    pub fn is_value(&self) -> bool {
        match self {
            Term::Int(_) | Term::Infty | Term::Bool(_) | Term::Sym(_) => true,
            Term::Tuple(ts) => ts.iter().all(Term::is_value),
            Term::MSet(ts) => ts.iter().all(Term::is_value) && ts.windows(2).all(|w| w[0] <= w[1]),
            _ => false,
        }
    }

    pub fn is_ground(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Terms usable on the left of a binding equation: variables, literals and tuples of those.
    pub fn is_pattern(&self) -> bool {
        match self {
            Term::Var(_) | Term::Int(_) | Term::Infty | Term::Bool(_) | Term::Sym(_) => true,
            Term::Tuple(ts) => ts.iter().all(Term::is_pattern),
            _ => false,
        }
    }

    /// Variables in pattern position (all variables of a pattern term).
    pub fn vars(&self) -> Vec<Name> {
        let mut out: Vec<Name> = Vec::new();
        for v in self.free_vars() {
            out.push(v);
        }
        out
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut BTreeSet::new(), &mut out);
        out
    }

    pub(crate) fn collect_free(&self, bound: &mut BTreeSet<Name>, out: &mut BTreeSet<Name>) {
        match self {
            Term::Int(_) | Term::Infty | Term::Bool(_) | Term::Sym(_) => {}
            Term::Var(v) => {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
            Term::Tuple(ts) | Term::MSet(ts) | Term::Prim(_, ts) => {
                for t in ts {
                    t.collect_free(bound, out);
                }
            }
            Term::Union(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Term::Reduce(_, u, d) => {
                u.collect_free(bound, out);
                d.collect_free(bound, out);
            }
            Term::Comp(c) => {
                c.domain.collect_free(bound, out);
                let mut inner = bound.clone();
                inner.extend(c.binders.iter().cloned());
                c.guard.collect_free(&mut inner, out);
                c.template.collect_free(&mut inner, out);
            }
        }
    }

    /// Every variable name occurring anywhere, bound or free.
    pub(crate) fn all_names(&self, out: &mut BTreeSet<Name>) {
        match self {
            Term::Int(_) | Term::Infty | Term::Bool(_) | Term::Sym(_) => {}
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Tuple(ts) | Term::MSet(ts) | Term::Prim(_, ts) => {
                ts.iter().for_each(|t| t.all_names(out))
            }
            Term::Union(a, b) | Term::Reduce(_, a, b) => {
                a.all_names(out);
                b.all_names(out);
            }
            Term::Comp(c) => {
                out.extend(c.binders.iter().cloned());
                c.template.all_names(out);
                c.guard.all_names(out);
                c.domain.all_names(out);
            }
        }
    }

    /// Numeric view for ordering relations: integers and the top element.
    pub(crate) fn numeric_key(&self) -> Option<(u8, i64)> {
        match self {
            Term::Int(v) => Some((0, *v)),
            Term::Infty => Some((1, 0)),
            _ => None,
        }
    }
}

impl Guard {
    pub(crate) fn all_names(&self, out: &mut BTreeSet<Name>) {
        match self {
            Guard::True => {}
            Guard::Atomic(_, l, r) | Guard::Bind(l, r) => {
                l.all_names(out);
                r.all_names(out);
            }
            Guard::Conj(gs) => gs.iter().for_each(|g| g.all_names(out)),
            Guard::ConjComp(c) => {
                out.extend(c.binders.iter().cloned());
                c.domain.all_names(out);
                c.body.all_names(out);
            }
        }
    }
}

/// A substitution from variable names to ground terms, ordered by name.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Subst(BTreeMap<Name, Term>);

impl Subst {
    pub fn new() -> Self {
        Subst(BTreeMap::new())
    }

    pub fn get(&self, v: &str) -> Option<&Term> {
        self.0.get(v)
    }

    pub fn insert(&mut self, v: impl Into<Name>, t: Term) -> Option<Term> {
        self.0.insert(v.into(), t)
    }

    pub fn remove(&mut self, v: &str) -> Option<Term> {
        self.0.remove(v)
    }

    pub fn contains(&self, v: &str) -> bool {
        self.0.contains_key(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Term)> {
        self.0.iter()
    }

    /// Keeps only the given variables.
    pub fn restrict<'a>(&self, vars: impl IntoIterator<Item = &'a Name>) -> Subst {
        let mut out = Subst::new();
        for v in vars {
            if let Some(t) = self.0.get(v) {
                out.0.insert(v.clone(), t.clone());
            }
        }
        out
    }

    pub(crate) fn range_free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        for t in self.0.values() {
            out.extend(t.free_vars());
        }
        out
    }

    pub(crate) fn without(&self, vars: &[Name]) -> Subst {
        let mut s = self.clone();
        for v in vars {
            s.0.remove(v);
        }
        s
    }
}

impl FromIterator<(Name, Term)> for Subst {
    fn from_iter<I: IntoIterator<Item = (Name, Term)>>(iter: I) -> Self {
        Subst(iter.into_iter().collect())
    }
}

impl fmt::Display for Subst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v} -> {t}")?;
        }
        f.write_str("}")
    }
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

pub(crate) fn write_binders(
    f: &mut fmt::Formatter<'_>,
    binders: &[Name],
    domain: &Term,
) -> fmt::Result {
    f.write_str("#{")?;
    write_list(f, binders)?;
    write!(f, " in {domain}}}")
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Int(v) => write!(f, "{v}"),
            Term::Infty => f.write_str("infty"),
            Term::Bool(b) => write!(f, "{b}"),
            Term::Sym(s) | Term::Var(s) => f.write_str(s),
            Term::Tuple(ts) => {
                f.write_str("(")?;
                write_list(f, ts)?;
                if ts.len() == 1 {
                    f.write_str(",")?;
                }
                f.write_str(")")
            }
            Term::MSet(ts) => {
                f.write_str("[")?;
                write_list(f, ts)?;
                f.write_str("]")
            }
            Term::Union(a, b) => write!(f, "({a} ++ {b})"),
            Term::Comp(c) => {
                write!(f, "{{{}", c.template)?;
                if c.guard != Guard::True {
                    write!(f, " | {}", c.guard)?;
                }
                f.write_str("}")?;
                write_binders(f, &c.binders, &c.domain)
            }
            Term::Reduce(func, u, d) => write!(f, "reduce({}, {u}, {d})", func.name()),
            Term::Prim(op, args) => match (op, args.as_slice()) {
                (PrimOp::Add, [a, b]) => write!(f, "({a} + {b})"),
                (PrimOp::Sub, [a, b]) => write!(f, "({a} - {b})"),
                (PrimOp::Mul, [a, b]) => write!(f, "({a} * {b})"),
                (PrimOp::Neg, [a]) => write!(f, "(-{a})"),
                (PrimOp::Min, _) | (PrimOp::Max, _) => {
                    f.write_str(if *op == PrimOp::Min { "min(" } else { "max(" })?;
                    write_list(f, args)?;
                    f.write_str(")")
                }
                _ => write!(f, "{op:?}{args:?}"),
            },
        }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guard::True => f.write_str("true"),
            Guard::Atomic(r, l, rhs) => write!(f, "{l} {} {rhs}", r.symbol()),
            Guard::Bind(p, t) => write!(f, "{p} = {t}"),
            Guard::Conj(gs) => write_list(f, gs),
            Guard::ConjComp(c) => {
                write!(f, "forall{{{}}}", c.body)?;
                write_binders(f, &c.binders, &c.domain)
            }
        }
    }
}

/// Generates names that avoid a given set of used names.
#[derive(Debug, Clone, Default)]
pub struct FreshNames {
    used: BTreeSet<Name>,
    counter: usize,
}

impl FreshNames {
    pub fn avoiding(used: BTreeSet<Name>) -> Self {
        FreshNames { used, counter: 0 }
    }

    pub fn fresh(&mut self, prefix: &str) -> Name {
        loop {
            self.counter += 1;
            let name = format!("{prefix}{}", self.counter);
            if self.used.insert(name.clone()) {
                return name;
            }
        }
    }
}
