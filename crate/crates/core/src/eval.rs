//! Normalization of ground terms, guard satisfaction and substitution.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::EvalError;
use crate::term::{
    FreshNames, Guard, GuardComp, Name, PrimOp, ReduceFn, Rel, Subst, Term, TermComp,
};

/// Evaluates `t` under `env` to a normalized value.
pub fn eval(t: &Term, env: &Subst) -> Result<Term, EvalError> {
    match t {
        Term::Int(_) | Term::Infty | Term::Bool(_) | Term::Sym(_) => Ok(t.clone()),
        Term::Var(v) => env
            .get(v)
            .cloned()
            .ok_or_else(|| EvalError::NonGround(v.clone())),
        Term::Tuple(ts) => Ok(Term::Tuple(
            ts.iter().map(|t| eval(t, env)).collect::<Result<_, _>>()?,
        )),
        Term::MSet(ts) => Ok(Term::mset(
            ts.iter().map(|t| eval(t, env)).collect::<Result<_, _>>()?,
        )),
        Term::Union(a, b) => {
            let mut xs = expect_mset(eval(a, env)?)?;
            xs.extend(expect_mset(eval(b, env)?)?);
            Ok(Term::mset(xs))
        }
        Term::Comp(c) => {
            let domain = expect_mset(eval(&c.domain, env)?)?;
            let mut out = Vec::new();
            for elem in &domain {
                let mut local = env.clone();
                bind_binders(&c.binders, elem, &mut local)?;
                if eval_guard(&c.guard, &mut local)? {
                    out.push(eval(&c.template, &local)?);
                }
            }
            Ok(Term::mset(out))
        }
        Term::Reduce(func, unit, domain) => {
            let unit = eval(unit, env)?;
            let domain = expect_mset(eval(domain, env)?)?;
            reduce(*func, unit, &domain)
        }
        Term::Prim(op, args) => {
            let args = args
                .iter()
                .map(|a| eval(a, env))
                .collect::<Result<Vec<_>, _>>()?;
            apply_prim(*op, &args)
        }
    }
}

/// Normalizes a ground term.
pub fn normalize(t: &Term) -> Result<Term, EvalError> {
    eval(t, &Subst::new())
}

/// Left fold of `func` over `m` in canonical order, seeded with `unit`.
pub fn reduce(func: ReduceFn, unit: Term, m: &[Term]) -> Result<Term, EvalError> {
    let mut sorted: Vec<&Term> = m.iter().collect();
    sorted.sort();
    let mut acc = unit;
    for x in sorted {
        acc = match func {
            ReduceFn::Min => apply_prim(PrimOp::Min, &[acc, x.clone()])?,
            ReduceFn::Max => apply_prim(PrimOp::Max, &[acc, x.clone()])?,
            ReduceFn::Sum => apply_prim(PrimOp::Add, &[acc, x.clone()])?,
            ReduceFn::Count => apply_prim(PrimOp::Add, &[acc, Term::Int(1)])?,
        };
    }
    Ok(acc)
}

fn expect_mset(t: Term) -> Result<Vec<Term>, EvalError> {
    match t {
        Term::MSet(xs) => Ok(xs),
        other => Err(EvalError::Type(alloc::format!(
            "expected a multiset, found {other}"
        ))),
    }
}

fn expect_int(t: &Term) -> Result<i64, EvalError> {
    match t {
        Term::Int(v) => Ok(*v),
        other => Err(EvalError::Type(alloc::format!(
            "expected an integer, found {other}"
        ))),
    }
}

fn numeric(t: &Term) -> Result<(u8, i64), EvalError> {
    t.numeric_key()
        .ok_or_else(|| EvalError::Type(alloc::format!("expected a number, found {t}")))
}

fn apply_prim(op: PrimOp, args: &[Term]) -> Result<Term, EvalError> {
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(EvalError::Type(alloc::format!(
                "{op:?} expects {n} arguments"
            )))
        }
    };
    match op {
        PrimOp::Neg => {
            arity(1)?;
            expect_int(&args[0])?
                .checked_neg()
                .map(Term::Int)
                .ok_or(EvalError::Overflow)
        }
        PrimOp::Add | PrimOp::Sub | PrimOp::Mul => {
            arity(2)?;
            let (a, b) = (expect_int(&args[0])?, expect_int(&args[1])?);
            let r = match op {
                PrimOp::Add => a.checked_add(b),
                PrimOp::Sub => a.checked_sub(b),
                _ => a.checked_mul(b),
            };
            r.map(Term::Int).ok_or(EvalError::Overflow)
        }
        PrimOp::Min | PrimOp::Max => {
            arity(2)?;
            let (ka, kb) = (numeric(&args[0])?, numeric(&args[1])?);
            let pick_first = if op == PrimOp::Min {
                ka <= kb
            } else {
                ka >= kb
            };
            Ok(if pick_first {
                args[0].clone()
            } else {
                args[1].clone()
            })
        }
    }
}

/// Binds comprehension binders to one domain element. A single binder takes the
/// element itself; several binders destructure a tuple of the same arity.
pub fn bind_binders(binders: &[Name], elem: &Term, env: &mut Subst) -> Result<(), EvalError> {
    if binders.len() == 1 {
        env.insert(binders[0].clone(), elem.clone());
        return Ok(());
    }
    match elem {
        Term::Tuple(ts) if ts.len() == binders.len() => {
            for (b, t) in binders.iter().zip(ts) {
                env.insert(b.clone(), t.clone());
            }
            Ok(())
        }
        other => Err(EvalError::Type(alloc::format!(
            "cannot destructure {other} into {} binders",
            binders.len()
        ))),
    }
}

/// The tuple of binder values, the inverse of [`bind_binders`].
pub fn binder_tuple(binders: &[Name], env: &Subst) -> Result<Term, EvalError> {
    let vals = binders
        .iter()
        .map(|b| {
            env.get(b)
                .cloned()
                .ok_or_else(|| EvalError::NonGround(b.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(if vals.len() == 1 {
        vals.into_iter().next().unwrap()
    } else {
        Term::Tuple(vals)
    })
}

fn compare(rel: Rel, l: &Term, r: &Term) -> Result<bool, EvalError> {
    Ok(match rel {
        Rel::Eq => l == r,
        Rel::Ne => l != r,
        Rel::In => match r {
            Term::MSet(xs) => xs.binary_search(l).is_ok(),
            other => {
                return Err(EvalError::Type(alloc::format!(
                    "`in` expects a multiset, found {other}"
                )))
            }
        },
        Rel::Lt | Rel::Le | Rel::Gt | Rel::Ge => {
            let (a, b) = (numeric(l)?, numeric(r)?);
            match rel {
                Rel::Lt => a < b,
                Rel::Le => a <= b,
                Rel::Gt => a > b,
                _ => a >= b,
            }
        }
    })
}

/// Matches a ground value against a pattern, extending `env`. Variables already
/// bound are compared; non-pattern subterms are evaluated and compared.
pub fn match_pattern(pattern: &Term, value: &Term, env: &mut Subst) -> Result<bool, EvalError> {
    match pattern {
        Term::Var(v) => match env.get(v) {
            Some(bound) => Ok(bound == value),
            None => {
                env.insert(v.clone(), value.clone());
                Ok(true)
            }
        },
        Term::Tuple(ps) => match value {
            Term::Tuple(vs) if vs.len() == ps.len() => {
                for (p, v) in ps.iter().zip(vs) {
                    if !match_pattern(p, v, env)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            _ => Ok(false),
        },
        other => Ok(&eval(other, env)? == value),
    }
}

/// Decides a guard under `env`. Bindings made by `Bind` guards are left in `env`.
pub fn eval_guard(g: &Guard, env: &mut Subst) -> Result<bool, EvalError> {
    match g {
        Guard::True => Ok(true),
        Guard::Atomic(rel, l, r) => compare(*rel, &eval(l, env)?, &eval(r, env)?),
        Guard::Bind(p, t) => {
            let v = eval(t, env)?;
            match_pattern(p, &v, env)
        }
        Guard::Conj(gs) => {
            for g in gs {
                if !eval_guard(g, env)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Guard::ConjComp(c) => {
            let domain = expect_mset(eval(&c.domain, env)?)?;
            for elem in &domain {
                let mut local = env.clone();
                bind_binders(&c.binders, elem, &mut local)?;
                if !eval_guard(&c.body, &mut local)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// Guard satisfaction where evaluation failures (ill-typed operands) count as
/// unsatisfied. This is the reading used by matching and unfolding.
pub fn holds(g: &Guard, env: &mut Subst) -> bool {
    eval_guard(g, env).unwrap_or(false)
}

/// Outcome of evaluating a guard whose variables may be only partially known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    fn and(self, other: Truth) -> Truth {
        match (self, other) {
            (Truth::False, _) | (_, Truth::False) => Truth::False,
            (Truth::Unknown, _) | (_, Truth::Unknown) => Truth::Unknown,
            _ => Truth::True,
        }
    }

    pub fn possibly(self) -> bool {
        self != Truth::False
    }
}

/// Three-valued guard evaluation over a substitution whose range may contain
/// variables. Anything that depends on a non-ground value is `Unknown`;
/// fully ground atomic guards are decided (errors count as false).
pub fn eval_guard_partial(g: &Guard, env: &mut Subst) -> Truth {
    match g {
        Guard::True => Truth::True,
        Guard::Atomic(rel, l, r) => {
            let (l, r) = (substitute_term(env, l), substitute_term(env, r));
            if !(l.is_ground() && r.is_ground()) {
                return Truth::Unknown;
            }
            match (normalize(&l), normalize(&r)) {
                (Ok(l), Ok(r)) => match compare(*rel, &l, &r) {
                    Ok(true) => Truth::True,
                    _ => Truth::False,
                },
                _ => Truth::False,
            }
        }
        Guard::Bind(p, t) => {
            let t = substitute_term(env, t);
            if t.is_ground() {
                match normalize(&t) {
                    Ok(v) => bind_partial(p, &v, env),
                    Err(_) => Truth::False,
                }
            } else {
                bind_partial(p, &t, env)
            }
        }
        Guard::Conj(gs) => gs
            .iter()
            .fold(Truth::True, |acc, g| acc.and(eval_guard_partial(g, env))),
        Guard::ConjComp(c) => {
            let domain = substitute_term(env, &c.domain);
            if !domain.is_ground() {
                return Truth::Unknown;
            }
            let Ok(Term::MSet(elems)) = normalize(&domain) else {
                return Truth::False;
            };
            let mut acc = Truth::True;
            for elem in &elems {
                let mut local = env.without(&c.binders);
                if bind_binders(&c.binders, elem, &mut local).is_err() {
                    return Truth::False;
                }
                acc = acc.and(eval_guard_partial(&c.body, &mut local));
            }
            acc
        }
    }
}

fn bind_partial(p: &Term, t: &Term, env: &mut Subst) -> Truth {
    match p {
        Term::Var(v) => match env.get(v) {
            Some(bound) if bound.is_ground() && t.is_ground() => {
                if bound == t {
                    Truth::True
                } else {
                    Truth::False
                }
            }
            Some(_) => Truth::Unknown,
            None => {
                env.insert(v.clone(), t.clone());
                Truth::True
            }
        },
        Term::Tuple(ps) => match t {
            Term::Tuple(ts) if ts.len() == ps.len() => ps
                .iter()
                .zip(ts)
                .fold(Truth::True, |acc, (p, t)| acc.and(bind_partial(p, t, env))),
            _ if t.is_value() => Truth::False,
            _ => Truth::Unknown,
        },
        other => {
            let other = substitute_term(env, other);
            if other.is_ground() && t.is_ground() {
                match normalize(&other) {
                    Ok(v) if &v == t => Truth::True,
                    _ => Truth::False,
                }
            } else {
                Truth::Unknown
            }
        }
    }
}

/// Normalizes a term if it is ground, leaving it untouched otherwise (or when
/// evaluation fails, so the failure resurfaces where the term is used).
fn settle(t: Term) -> Term {
    if t.is_value() || !t.is_ground() {
        return t;
    }
    normalize(&t).unwrap_or(t)
}

/// Simultaneous substitution with binder scoping. Binders that would capture a
/// free variable of the substitution's range are renamed first; ground
/// subterms of the result are normalized.
pub fn substitute_term(theta: &Subst, t: &Term) -> Term {
    if theta.is_empty() {
        return t.clone();
    }
    settle(subst_raw(theta, t))
}

fn subst_raw(theta: &Subst, t: &Term) -> Term {
    match t {
        Term::Int(_) | Term::Infty | Term::Bool(_) | Term::Sym(_) => t.clone(),
        Term::Var(v) => theta.get(v).cloned().unwrap_or_else(|| t.clone()),
        Term::Tuple(ts) => Term::Tuple(ts.iter().map(|t| substitute_term(theta, t)).collect()),
        Term::MSet(ts) => {
            let ts: Vec<Term> = ts.iter().map(|t| substitute_term(theta, t)).collect();
            if ts.iter().all(Term::is_value) {
                Term::mset(ts)
            } else {
                Term::MSet(ts)
            }
        }
        Term::Union(a, b) => Term::Union(
            Box::new(substitute_term(theta, a)),
            Box::new(substitute_term(theta, b)),
        ),
        Term::Reduce(f, u, d) => Term::Reduce(
            *f,
            Box::new(substitute_term(theta, u)),
            Box::new(substitute_term(theta, d)),
        ),
        Term::Prim(op, args) => Term::Prim(
            *op,
            args.iter().map(|a| substitute_term(theta, a)).collect(),
        ),
        Term::Comp(c) => {
            let domain = substitute_term(theta, &c.domain);
            let (binders, inner, renaming) = enter_scope(theta, &c.binders, |names| {
                c.template.all_names(names);
                c.guard.all_names(names);
            });
            let (mut template, mut guard) = (c.template.clone(), c.guard.clone());
            if !renaming.is_empty() {
                template = subst_raw(&renaming, &template);
                guard = subst_guard_raw(&renaming, &guard);
            }
            Term::Comp(Box::new(TermComp {
                template: substitute_term(&inner, &template),
                guard: substitute_guard(&inner, &guard),
                binders,
                domain,
            }))
        }
    }
}

/// Computes the substitution valid under a binder list: binders shadow `theta`,
/// and binders colliding with free variables of `theta`'s range get fresh names.
/// Returns the (possibly renamed) binders, the inner substitution and the
/// renaming to apply to the construct's body.
pub(crate) fn enter_scope(
    theta: &Subst,
    binders: &[Name],
    body_names: impl FnOnce(&mut BTreeSet<Name>),
) -> (Vec<Name>, Subst, Subst) {
    let mut inner = theta.without(binders);
    let range = inner.range_free_vars();
    let mut renaming = Subst::new();
    let mut out = Vec::with_capacity(binders.len());
    if binders.iter().any(|b| range.contains(b)) {
        let mut used = range.clone();
        body_names(&mut used);
        used.extend(binders.iter().cloned());
        for (v, t) in inner.iter() {
            used.insert(v.clone());
            t.all_names(&mut used);
        }
        let mut fresh = FreshNames::avoiding(used);
        for b in binders {
            if range.contains(b) {
                let nb = fresh.fresh(&alloc::format!("{b}_"));
                renaming.insert(b.clone(), Term::Var(nb.clone()));
                out.push(nb);
            } else {
                out.push(b.clone());
            }
        }
    } else {
        out.extend(binders.iter().cloned());
    }
    for b in &out {
        inner.remove(b);
    }
    (out, inner, renaming)
}

pub fn substitute_guard(theta: &Subst, g: &Guard) -> Guard {
    if theta.is_empty() {
        return g.clone();
    }
    match g {
        Guard::True => Guard::True,
        Guard::Atomic(r, a, b) => {
            Guard::Atomic(*r, substitute_term(theta, a), substitute_term(theta, b))
        }
        Guard::Bind(p, t) => Guard::Bind(substitute_term(theta, p), substitute_term(theta, t)),
        Guard::Conj(gs) => Guard::Conj(gs.iter().map(|g| substitute_guard(theta, g)).collect()),
        Guard::ConjComp(c) => {
            let domain = substitute_term(theta, &c.domain);
            let (binders, inner, renaming) =
                enter_scope(theta, &c.binders, |names| c.body.all_names(names));
            let body = if renaming.is_empty() {
                c.body.clone()
            } else {
                subst_guard_raw(&renaming, &c.body)
            };
            Guard::ConjComp(Box::new(GuardComp {
                binders,
                domain,
                body: substitute_guard(&inner, &body),
            }))
        }
    }
}

fn subst_guard_raw(theta: &Subst, g: &Guard) -> Guard {
    substitute_guard(theta, g)
}

/// Renders an evaluation error-free description of a term list, used in diagnostics.
pub(crate) fn join_names(names: &[Name]) -> String {
    let mut s = String::new();
    for (i, n) in names.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        s.push_str(n);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn comp(template: Term, guard: Guard, binders: &[&str], domain: Term) -> Term {
        Term::Comp(Box::new(TermComp {
            template,
            guard,
            binders: binders.iter().map(|b| String::from(*b)).collect(),
            domain,
        }))
    }

    #[test]
    fn union_flattens_into_one_multiset() {
        let t = Term::Union(
            Box::new(Term::MSet(vec![Term::Int(1)])),
            Box::new(Term::MSet(vec![Term::Int(2), Term::Int(2)])),
        );
        assert_eq!(
            normalize(&t).unwrap(),
            Term::mset(vec![Term::Int(1), Term::Int(2), Term::Int(2)])
        );
    }

    #[test]
    fn term_comprehension_projects_weights() {
        let es = Term::mset(vec![
            Term::Tuple(vec![Term::sym("a"), Term::sym("b"), Term::Int(3)]),
            Term::Tuple(vec![Term::sym("a"), Term::sym("d"), Term::Int(5)]),
        ]);
        let t = comp(Term::var("W"), Guard::True, &["X", "Y", "W"], es);
        assert_eq!(
            normalize(&t).unwrap(),
            Term::mset(vec![Term::Int(3), Term::Int(5)])
        );
    }

    #[test]
    fn reduce_examples() {
        let m = [Term::Int(3), Term::Int(3), Term::Int(5)];
        assert_eq!(
            reduce(ReduceFn::Min, Term::Infty, &m).unwrap(),
            Term::Int(3)
        );
        let m = [Term::Int(1), Term::Int(2), Term::Int(3)];
        assert_eq!(
            reduce(ReduceFn::Sum, Term::Int(0), &m).unwrap(),
            Term::Int(6)
        );
        assert_eq!(
            reduce(ReduceFn::Min, Term::Infty, &[]).unwrap(),
            Term::Infty
        );
        assert_eq!(
            reduce(ReduceFn::Count, Term::Int(0), &m).unwrap(),
            Term::Int(3)
        );
        assert!(matches!(
            reduce(ReduceFn::Sum, Term::Int(0), &[Term::sym("x")]),
            Err(EvalError::Type(_))
        ));
    }

    #[test]
    fn guard_examples() {
        let mut env = Subst::new();
        assert!(!eval_guard(
            &Guard::Atomic(Rel::Ge, Term::Int(3), Term::Int(5)),
            &mut env
        )
        .unwrap());
        let all_pos = Guard::ConjComp(Box::new(GuardComp {
            binders: vec!["X".into()],
            domain: Term::mset(vec![Term::Int(1), Term::Int(2)]),
            body: Guard::Atomic(Rel::Gt, Term::var("X"), Term::Int(0)),
        }));
        assert!(eval_guard(&all_pos, &mut env).unwrap());
        env.insert("Es", Term::empty_mset());
        let nonempty = Guard::Atomic(Rel::Ne, Term::var("Es"), Term::empty_mset());
        assert!(!eval_guard(&nonempty, &mut env).unwrap());
    }

    #[test]
    fn unbound_variable_is_non_ground() {
        let g = Guard::Atomic(Rel::Lt, Term::var("Z"), Term::Int(1));
        assert_eq!(
            eval_guard(&g, &mut Subst::new()),
            Err(EvalError::NonGround("Z".into()))
        );
    }

    #[test]
    fn bind_extends_environment_for_later_conjuncts() {
        let g = Guard::and([
            Guard::Bind(
                Term::var("W"),
                Term::Prim(PrimOp::Add, vec![Term::var("X"), Term::Int(1)]),
            ),
            Guard::Atomic(Rel::Eq, Term::var("W"), Term::Int(4)),
        ]);
        let mut env: Subst = [("X".into(), Term::Int(3))].into_iter().collect();
        assert!(eval_guard(&g, &mut env).unwrap());
        assert_eq!(env.get("W"), Some(&Term::Int(4)));
    }

    #[test]
    fn infty_sits_above_integers() {
        let mut env = Subst::new();
        assert!(eval_guard(
            &Guard::Atomic(Rel::Lt, Term::Int(i64::MAX), Term::Infty),
            &mut env
        )
        .unwrap());
        assert!(Term::Int(i64::MAX) < Term::Infty);
    }

    #[test]
    fn substitution_respects_binders() {
        let t = comp(
            Term::Tuple(vec![Term::var("X"), Term::var("Z")]),
            Guard::Atomic(Rel::Gt, Term::var("Z"), Term::Int(0)),
            &["Z"],
            Term::var("Ts"),
        );
        let theta: Subst = [("X".into(), Term::Int(1)), ("Z".into(), Term::Int(9))]
            .into_iter()
            .collect();
        let out = substitute_term(&theta, &t);
        let expected = comp(
            Term::Tuple(vec![Term::Int(1), Term::var("Z")]),
            Guard::Atomic(Rel::Gt, Term::var("Z"), Term::Int(0)),
            &["Z"],
            Term::var("Ts"),
        );
        assert_eq!(out, expected);
        assert_eq!(substitute_term(&Subst::new(), &t), t);
    }

    #[test]
    fn substitution_renames_capturing_binder() {
        // X -> Z under a binder named Z must not capture.
        let t = comp(
            Term::Tuple(vec![Term::var("X"), Term::var("Z")]),
            Guard::True,
            &["Z"],
            Term::var("Ts"),
        );
        let theta: Subst = [("X".into(), Term::var("Z"))].into_iter().collect();
        let Term::Comp(c) = substitute_term(&theta, &t) else {
            panic!()
        };
        assert_ne!(c.binders[0], "Z");
        assert_eq!(
            c.template,
            Term::Tuple(vec![Term::var("Z"), Term::Var(c.binders[0].clone())])
        );
    }

    #[test]
    fn partial_evaluation_is_three_valued() {
        let mut env: Subst = [("V".into(), Term::Int(3))].into_iter().collect();
        let g = Guard::and([
            Guard::Bind(Term::var("Y"), Term::var("V")),
            Guard::Atomic(Rel::Lt, Term::var("Y"), Term::Int(3)),
        ]);
        assert_eq!(eval_guard_partial(&g, &mut env.clone()), Truth::False);
        let open = Guard::Atomic(Rel::Lt, Term::var("Q"), Term::Int(3));
        assert_eq!(eval_guard_partial(&open, &mut env), Truth::Unknown);
    }
}
