//! Matching rule heads against a store.
//!
//! Three declarative judgments over closed patterns ([`matches_exactly`],
//! [`subsumes`], [`residual_non_match`]) and a search procedure
//! ([`for_each_match`]) that finds every way a rule's heads match a store
//! with maximal comprehensions.
//!
//! The search works over a view of `(id, atom)` pairs sorted by id, so the
//! same code serves plain stores (ids are positions) and labeled stores (ids
//! are labels). Order of results: atom heads are assigned by backtracking in
//! id order, anchored head first; then each remaining subsumed constraint, in
//! id order, is given to one subsuming comprehension, trying heads in head
//! order.

use alloc::vec;
use alloc::vec::Vec;

use crate::eval::{binder_tuple, eval, eval_guard, holds, match_pattern};
use crate::syntax::{Atom, Comprehension, Pattern, Rule};
use crate::term::{Guard, Subst, Term};

pub type Id = u64;

/// Seeded choices sample this many matches at most, since overlapping
/// comprehensions can have exponentially many.
pub const CHOICE_WINDOW: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchOptions {
    /// When false, comprehensions may leave subsumed constraints behind.
    /// Only useful as a negative control for the soundness checks.
    pub maximality: bool,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions { maximality: true }
    }
}

/// A head must match a block containing the constraint `id`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Anchor {
    pub head: usize,
    pub id: Id,
}

/// One way the heads of a rule match a store.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Match {
    /// Binds head variables, comprehension domains and guard-bound variables.
    pub theta: Subst,
    /// Per head in [`Rule::heads`] order, the matched ids in ascending order.
    pub blocks: Vec<Vec<Id>>,
}

impl Match {
    pub fn matched_ids(&self) -> Vec<Id> {
        let mut ids: Vec<Id> = self.blocks.iter().flatten().copied().collect();
        ids.sort_unstable();
        ids
    }
}

fn args_match(patterns: &[Term], values: &[Term], env: &mut Subst) -> bool {
    patterns.len() == values.len()
        && patterns
            .iter()
            .zip(values)
            .all(|(p, v)| matches!(match_pattern(p, v, env), Ok(true)))
}

/// Binder tuple under which `a` is absorbed by `m`, with `outer` supplying
/// the comprehension's free variables.
pub fn subsumed_tuple(a: &Atom, m: &Comprehension, outer: &Subst) -> Option<Term> {
    if a.pred != m.atom.pred || a.args.len() != m.atom.args.len() {
        return None;
    }
    let mut env = outer.without(&m.binders).without(&m.locals);
    if !args_match(&m.atom.args, &a.args, &mut env) || !holds(&m.guard, &mut env) {
        return None;
    }
    binder_tuple(&m.binders, &env).ok()
}

/// `a` is subsumed by the closed comprehension `m`: some binder values make
/// `m`'s atom equal to `a` and its guard true. Returns those binder values.
/// The comprehension domain is not consulted.
pub fn subsumes(a: &Atom, m: &Comprehension) -> Option<Subst> {
    if a.pred != m.atom.pred || a.args.len() != m.atom.args.len() {
        return None;
    }
    let mut env = Subst::new();
    if !args_match(&m.atom.args, &a.args, &mut env) || !holds(&m.guard, &mut env) {
        return None;
    }
    if m.binders.iter().all(|b| env.contains(b)) {
        Some(env.restrict(&m.binders))
    } else {
        None
    }
}

/// No constraint of `st` is subsumed by any comprehension in `patterns`.
pub fn residual_non_match(patterns: &[Pattern], st: &[Atom]) -> bool {
    st.iter().all(|a| {
        patterns
            .iter()
            .filter_map(Pattern::as_comp)
            .all(|m| subsumes(a, m).is_none())
    })
}

/// `st` splits into one identical constraint per atom pattern and, per
/// comprehension, exactly the constraints its ground domain dictates.
pub fn matches_exactly(patterns: &[Pattern], st: &[Atom]) -> bool {
    let empty = Subst::new();
    let mut rest: Vec<&Atom> = st.iter().collect();
    let mut comps = Vec::new();
    for p in patterns {
        match p {
            Pattern::Atom(a) => {
                let Ok(args) = a
                    .args
                    .iter()
                    .map(|t| eval(t, &empty))
                    .collect::<Result<Vec<_>, _>>()
                else {
                    return false;
                };
                let ground = Atom {
                    pred: a.pred.clone(),
                    args,
                };
                match rest.iter().position(|x| **x == ground) {
                    Some(i) => {
                        rest.remove(i);
                    }
                    None => return false,
                }
            }
            Pattern::Comp(m) => match eval(&m.domain, &empty) {
                Ok(Term::MSet(needed)) => comps.push((m, needed)),
                _ => return false,
            },
        }
    }
    let cands: Vec<Vec<(usize, Term)>> = rest
        .iter()
        .map(|a| {
            comps
                .iter()
                .enumerate()
                .filter_map(|(j, (m, _))| subsumed_tuple(a, m, &empty).map(|t| (j, t)))
                .collect()
        })
        .collect();
    let mut needed: Vec<Vec<Term>> = comps.into_iter().map(|(_, n)| n).collect();
    fn assign(k: usize, cands: &[Vec<(usize, Term)>], needed: &mut [Vec<Term>]) -> bool {
        // Single-choice constraints are taken in a loop to bound recursion depth.
        let (mut k, mut taken) = (k, Vec::new());
        let mut ok = true;
        while let Some([(j, t)]) = cands.get(k).map(Vec::as_slice) {
            match needed[*j].iter().position(|x| x == t) {
                Some(i) => taken.push((*j, i, needed[*j].remove(i))),
                None => {
                    ok = false;
                    break;
                }
            }
            k += 1;
        }
        ok = ok && choose(k, cands, needed);
        for (j, i, t) in taken.into_iter().rev() {
            needed[j].insert(i, t);
        }
        ok
    }
    fn choose(k: usize, cands: &[Vec<(usize, Term)>], needed: &mut [Vec<Term>]) -> bool {
        if k == cands.len() {
            return needed.iter().all(Vec::is_empty);
        }
        for (j, t) in &cands[k] {
            if let Some(i) = needed[*j].iter().position(|x| x == t) {
                let taken = needed[*j].remove(i);
                if assign(k + 1, cands, needed) {
                    return true;
                }
                needed[*j].insert(i, taken);
            }
        }
        false
    }
    assign(0, &cands, &mut needed)
}

struct Search<'a, F> {
    rule: &'a Rule,
    view: &'a [(Id, &'a Atom)],
    conj: Vec<&'a Guard>,
    atom_order: Vec<usize>,
    comp_heads: Vec<usize>,
    anchor: Option<Anchor>,
    opts: MatchOptions,
    used: Vec<bool>,
    blocks: Vec<Vec<Id>>,
    emit: F,
    stopped: bool,
}

impl<'a, F: FnMut(Match) -> bool> Search<'a, F> {
    /// Evaluates guard conjuncts from `next` while their inputs are bound.
    /// Returns the first conjunct not yet evaluated, or `None` if one failed.
    fn advance_guard(&self, env: &mut Subst, mut next: usize) -> Option<usize> {
        while let Some(g) = self.conj.get(next) {
            if !g.free_vars().iter().all(|v| env.contains(v)) {
                break;
            }
            if !holds(g, env) {
                return None;
            }
            next += 1;
        }
        Some(next)
    }

    fn atoms(&mut self, k: usize, env: &Subst, next: usize) {
        if self.stopped {
            return;
        }
        let Some(&h) = self.atom_order.get(k) else {
            return self.comps(env, next);
        };
        let Pattern::Atom(pat) = self.rule.head(h).1 else {
            unreachable!()
        };
        let anchored = self.anchor.filter(|a| a.head == h).map(|a| a.id);
        for i in 0..self.view.len() {
            let (id, atom) = self.view[i];
            if self.used[i] || anchored.is_some_and(|a| a != id) || atom.pred != pat.pred {
                continue;
            }
            let mut env2 = env.clone();
            if !args_match(&pat.args, &atom.args, &mut env2) {
                continue;
            }
            let Some(next2) = self.advance_guard(&mut env2, next) else {
                continue;
            };
            self.used[i] = true;
            self.blocks[h] = vec![id];
            self.atoms(k + 1, &env2, next2);
            self.used[i] = false;
            self.blocks[h].clear();
            if self.stopped {
                return;
            }
        }
    }

    fn comps(&mut self, env: &Subst, next: usize) {
        let mut rest: Vec<(Id, Vec<(usize, Term)>)> = Vec::new();
        let anchored = self.anchor.filter(|a| self.comp_heads.contains(&a.head));
        for (i, (id, atom)) in self.view.iter().enumerate() {
            if self.used[i] {
                continue;
            }
            let cands: Vec<(usize, Term)> = self
                .comp_heads
                .iter()
                .filter_map(|&h| {
                    let m = self.rule.head(h).1.as_comp()?;
                    subsumed_tuple(atom, m, env).map(|t| (h, t))
                })
                .collect();
            if let Some(a) = anchored.filter(|a| a.id == *id) {
                let keep: Vec<(usize, Term)> =
                    cands.into_iter().filter(|(h, _)| *h == a.head).collect();
                if keep.is_empty() {
                    return;
                }
                rest.push((*id, keep));
            } else if !cands.is_empty() {
                rest.push((*id, cands));
            }
        }
        if anchored.is_some_and(|a| !rest.iter().any(|(id, _)| *id == a.id)) {
            return;
        }
        let mut tuples: Vec<Vec<Term>> = vec![Vec::new(); self.rule.head_count()];
        self.assign(0, &rest, &mut tuples, env, next);
    }

    /// Assigns `rest[k..]` to comprehension heads. Constraints with a single
    /// choice are assigned in a loop, so recursion depth is the number of
    /// real choice points rather than the number of subsumed constraints.
    fn assign(
        &mut self,
        k: usize,
        rest: &[(Id, Vec<(usize, Term)>)],
        tuples: &mut Vec<Vec<Term>>,
        env: &Subst,
        next: usize,
    ) {
        let mut k = k;
        let mut forced = Vec::new();
        while let Some((id, cands)) = rest.get(k) {
            let optional = !self.opts.maximality && !self.anchor.is_some_and(|a| a.id == *id);
            if cands.len() != 1 || optional {
                break;
            }
            let (h, t) = &cands[0];
            self.blocks[*h].push(*id);
            tuples[*h].push(t.clone());
            forced.push(*h);
            k += 1;
        }
        self.choose(k, rest, tuples, env, next);
        for h in forced.into_iter().rev() {
            self.blocks[h].pop();
            tuples[h].pop();
        }
    }

    fn choose(
        &mut self,
        k: usize,
        rest: &[(Id, Vec<(usize, Term)>)],
        tuples: &mut Vec<Vec<Term>>,
        env: &Subst,
        next: usize,
    ) {
        if self.stopped {
            return;
        }
        let Some((id, cands)) = rest.get(k) else {
            return self.finish(tuples, env, next);
        };
        let anchored = self.anchor.is_some_and(|a| a.id == *id);
        if !self.opts.maximality && !anchored {
            self.assign(k + 1, rest, tuples, env, next);
        }
        for (h, t) in cands {
            self.blocks[*h].push(*id);
            tuples[*h].push(t.clone());
            self.assign(k + 1, rest, tuples, env, next);
            self.blocks[*h].pop();
            tuples[*h].pop();
            if self.stopped {
                return;
            }
        }
    }

    fn finish(&mut self, tuples: &[Vec<Term>], env: &Subst, next: usize) {
        let mut theta = env.clone();
        for &h in &self.comp_heads {
            let m = self.rule.head(h).1.as_comp().expect("comprehension head");
            let domain = Term::mset(tuples[h].clone());
            if !matches!(match_pattern(&m.domain, &domain, &mut theta), Ok(true)) {
                return;
            }
        }
        for g in &self.conj[next..] {
            if !matches!(eval_guard(g, &mut theta), Ok(true)) {
                return;
            }
        }
        let m = Match {
            theta,
            blocks: self.blocks.clone(),
        };
        if !(self.emit)(m) {
            self.stopped = true;
        }
    }
}

/// Calls `emit` on every match of `rule`'s heads in `view` (sorted by id) until
/// it returns false. Each match satisfies the rule guard, and with maximality
/// on, no constraint outside the matched blocks is subsumed by a comprehension
/// head under the match's substitution.
pub fn for_each_match(
    rule: &Rule,
    view: &[(Id, &Atom)],
    anchor: Option<Anchor>,
    opts: MatchOptions,
    emit: impl FnMut(Match) -> bool,
) {
    debug_assert!(
        view.windows(2).all(|w| w[0].0 < w[1].0),
        "view must be sorted by id"
    );
    let n = rule.head_count();
    let mut atom_order = Vec::new();
    let mut comp_heads = Vec::new();
    for h in 0..n {
        match rule.head(h).1 {
            Pattern::Atom(_) => atom_order.push(h),
            Pattern::Comp(_) => comp_heads.push(h),
        }
    }
    if let Some(a) = anchor {
        if a.head >= n || !view.iter().any(|(id, _)| *id == a.id) {
            return;
        }
        if let Some(pos) = atom_order.iter().position(|h| *h == a.head) {
            atom_order.remove(pos);
            atom_order.insert(0, a.head);
        }
    }
    let mut search = Search {
        rule,
        view,
        conj: rule.guard.conjuncts(),
        atom_order,
        comp_heads,
        anchor,
        opts,
        used: vec![false; view.len()],
        blocks: vec![Vec::new(); n],
        emit,
        stopped: false,
    };
    let mut env = Subst::new();
    if let Some(next) = search.advance_guard(&mut env, 0) {
        search.atoms(0, &env, next);
    }
}

pub fn enumerate_matches(
    rule: &Rule,
    view: &[(Id, &Atom)],
    anchor: Option<Anchor>,
    opts: MatchOptions,
) -> Vec<Match> {
    let mut out = Vec::new();
    for_each_match(rule, view, anchor, opts, |m| {
        out.push(m);
        true
    });
    out
}

pub fn first_match(
    rule: &Rule,
    view: &[(Id, &Atom)],
    anchor: Option<Anchor>,
    opts: MatchOptions,
) -> Option<Match> {
    let mut out = None;
    for_each_match(rule, view, anchor, opts, |m| {
        out = Some(m);
        false
    });
    out
}

/// A view of a plain atom list with positions as ids.
pub fn positional_view(atoms: &[Atom]) -> Vec<(Id, &Atom)> {
    atoms
        .iter()
        .enumerate()
        .map(|(i, a)| (i as Id, a))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_program, parse_store};
    use crate::store::Store;
    use alloc::string::String;

    const PIVOT: &str =
        "pivotSwap @ swap(X,Y,P), {data(X,D)|D>=P}#{D in Xs}, {data(Y,D)|D<P}#{D in Ys} \
                         <=> {data(Y,D)}#{D in Xs}, {data(X,D)}#{D in Ys}.";

    fn rule(src: &str) -> Rule {
        parse_program(src)
            .unwrap()
            .normalized()
            .unwrap()
            .rules
            .remove(0)
    }

    fn comp(src: &str) -> Comprehension {
        let r = parse_program(&alloc::format!("r @ {src} <=> true."))
            .unwrap()
            .rules
            .remove(0);
        r.simplified[0].as_comp().unwrap().clone()
    }

    fn atom(src: &str) -> Atom {
        parse_store(&alloc::format!("{src}."))
            .unwrap()
            .into_atoms()
            .remove(0)
    }

    fn store(src: &str) -> Store {
        parse_store(src).unwrap()
    }

    fn ground(m: &Comprehension, domain: Term) -> Pattern {
        Pattern::Comp(Comprehension {
            domain,
            ..m.clone()
        })
    }

    #[test]
    fn exact_matching_examples() {
        let m = comp("{data(a,D)}#{D in Ds}");
        assert!(matches_exactly(
            &[ground(&m, Term::mset(vec![Term::Int(7)]))],
            store("data(a,7).").atoms()
        ));
        assert!(matches_exactly(&[ground(&m, Term::empty_mset())], &[]));
        let p1 = Pattern::Atom(atom("p(1)"));
        assert!(!matches_exactly(&[p1], store("p(1), p(1).").atoms()));
    }

    #[test]
    fn subsumption_examples() {
        let m = comp("{data(a,D) | D >= 5}#{D in Ds}");
        let theta = subsumes(&atom("data(a,7)"), &m).unwrap();
        assert_eq!(theta.get("D"), Some(&Term::Int(7)));
        assert!(subsumes(&atom("data(a,3)"), &m).is_none());
        assert!(subsumes(&atom("edge(a,b,3)"), &comp("{data(X,D)}#{D in Ds}")).is_none());
    }

    #[test]
    fn residual_non_match_examples() {
        let r = parse_program(PIVOT).unwrap().rules.remove(0);
        let theta: Subst = [("X", "a"), ("Y", "b")]
            .into_iter()
            .map(|(v, s)| (String::from(v), Term::sym(s)))
            .chain([("P".into(), Term::Int(5))])
            .collect();
        let heads: Vec<Pattern> = r.simplified.iter().map(|p| p.substitute(&theta)).collect();
        assert!(residual_non_match(&heads, store("data(a,3).").atoms()));
        assert!(!residual_non_match(&heads, store("data(a,7).").atoms()));
        assert!(residual_non_match(&heads, &[]));
    }

    #[test]
    fn pivot_swap_has_one_match() {
        let r = rule(PIVOT);
        let st = store("swap(a,b,5), data(a,7), data(a,3), data(b,2), data(b,8).");
        let ms = enumerate_matches(
            &r,
            &positional_view(st.atoms()),
            None,
            MatchOptions::default(),
        );
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].theta.get("Xs"), Some(&Term::mset(vec![Term::Int(7)])));
        assert_eq!(ms[0].theta.get("Ys"), Some(&Term::mset(vec![Term::Int(2)])));
        let without_swap = store("data(a,7), data(b,2).");
        assert!(enumerate_matches(
            &r,
            &positional_view(without_swap.atoms()),
            None,
            MatchOptions::default()
        )
        .is_empty());
    }

    #[test]
    fn maximality_excludes_partial_blocks() {
        let r = rule("r @ {a(X)}#{X in Xs} <=> {b(X)}#{X in Xs}.");
        let st = store("a(1), a(2).");
        let view = positional_view(st.atoms());
        let ms = enumerate_matches(&r, &view, None, MatchOptions::default());
        assert_eq!(ms.len(), 1);
        assert_eq!(
            ms[0].theta.get("Xs"),
            Some(&Term::mset(vec![Term::Int(1), Term::Int(2)]))
        );
        let loose = enumerate_matches(&r, &view, None, MatchOptions { maximality: false });
        assert_eq!(loose.len(), 4);
        assert!(loose[0].blocks[0].is_empty());
    }

    #[test]
    fn anchor_restricts_block() {
        let r = rule("r @ p(X), q(Y) <=> true.");
        let st = store("p(1), p(2), q(3).");
        let view = positional_view(st.atoms());
        let ms = enumerate_matches(
            &r,
            &view,
            Some(Anchor { head: 0, id: 1 }),
            MatchOptions::default(),
        );
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].theta.get("X"), Some(&Term::Int(2)));
        let c = rule("r @ {p(X)}#{X in Xs} <=> true.");
        let ms = enumerate_matches(
            &c,
            &view,
            Some(Anchor { head: 0, id: 2 }),
            MatchOptions::default(),
        );
        assert!(ms.is_empty());
    }

    #[test]
    fn overlapping_comprehensions_split_contested_constraints() {
        let r = rule("r @ {p(X) | X > 0}#{X in As}, {p(Y) | Y < 5}#{Y in Bs} <=> true.");
        let st = store("p(1), p(2), p(9).");
        let ms = enumerate_matches(
            &r,
            &positional_view(st.atoms()),
            None,
            MatchOptions::default(),
        );
        // p(9) only fits the first; p(1) and p(2) go either way.
        assert_eq!(ms.len(), 4);
        assert!(ms.iter().all(|m| m.blocks[0].contains(&2)));
    }

    #[test]
    fn repeated_head_variables_join() {
        let r = rule("r @ e(X, Y), e(Y, X) <=> true.");
        let st = store("e(1, 2), e(2, 1), e(3, 4).");
        let ms = enumerate_matches(
            &r,
            &positional_view(st.atoms()),
            None,
            MatchOptions::default(),
        );
        assert_eq!(ms.len(), 2);
    }
}
