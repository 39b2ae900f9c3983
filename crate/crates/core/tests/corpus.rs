use chrcp_core::abstract_engine::{abstract_successors, run_abstract, unfold_body};
use chrcp_core::corpus;
use chrcp_core::eval::{eval, reduce};
use chrcp_core::matcher::MatchOptions;
use chrcp_core::op_engine::{run_store, OccurrenceProgram};
use chrcp_core::parser::{parse_program, parse_store, parse_term};
use chrcp_core::term::ReduceFn;
use chrcp_core::{load_program, Program, Store, Subst, Term};

fn store(src: &str) -> Store {
    parse_store(src).unwrap()
}

fn both_engines(program: &str, st: &Store) -> (Store, Store) {
    let p = load_program(program).unwrap();
    let abs = run_abstract(&p, st, 10_000, 0);
    assert!(!abs.step_limit_exceeded);
    let pw = OccurrenceProgram::annotate(&p).unwrap();
    let op = run_store(&pw, st, 100_000).unwrap();
    assert!(!op.step_limit_exceeded);
    (abs.store, op.store())
}

#[test]
fn every_bundled_program_parses_normalizes_and_round_trips() {
    for (name, prog, st) in corpus::ALL {
        let p = parse_program(prog).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(parse_program(&p.to_string()).unwrap(), p, "{name}");
        let n = p.normalized().unwrap();
        assert_eq!(n.normalized().unwrap(), n, "{name}");
        store(st);
    }
}

#[test]
fn pivot_swap_agrees_on_both_engines() {
    let (abs, op) = both_engines(corpus::PIVOT_SWAP, &store(corpus::PIVOT_SWAP_STORE));
    let expected = store("data(a,3), data(a,2), data(b,7), data(b,8).");
    assert_eq!(abs, expected);
    assert_eq!(op, expected);
}

#[test]
fn remove_non_min_keeps_only_the_cheapest_edges_out_of_a() {
    let st = store(corpus::REMOVE_NON_MIN_STORE);
    let (abs, op) = both_engines(corpus::REMOVE_NON_MIN, &st);
    let expected = store("edge(a,d,5), edge(b,c,1).");
    assert_eq!(abs, expected);
    assert_eq!(op, expected);

    let ws = eval(&parse_term("[3, 3, 5]").unwrap(), &Subst::new()).unwrap();
    let Term::MSet(ws) = ws else { unreachable!() };
    assert_eq!(
        reduce(ReduceFn::Min, Term::Infty, &ws).unwrap(),
        Term::int(3)
    );
}

#[test]
fn pure_swap_matches_pivot_swap_on_data() {
    let data = |s: &Store| s.filter_pred(|p| p == "data");
    let (pivot, _) = both_engines(corpus::PIVOT_SWAP, &store(corpus::PIVOT_SWAP_STORE));
    let (abs, op) = both_engines(corpus::PURE_SWAP, &store(corpus::PURE_SWAP_STORE));
    assert_eq!(data(&abs), data(&pivot));
    assert_eq!(data(&op), data(&pivot));
}

#[test]
fn relabel_is_all_or_nothing() {
    let p = load_program(corpus::RELABEL).unwrap();
    let succ: Vec<Store> =
        abstract_successors(&p, &store("a(1), a(2), a(3)."), MatchOptions::default())
            .into_iter()
            .map(|(_, s)| s)
            .collect();
    assert_eq!(succ, vec![store("b(1), b(2), b(3).")]);
    assert!(!succ.contains(&store("b(1), b(2), a(3).")));
}

#[test]
fn pairs_saturates_on_both_engines_differently() {
    let p = load_program(corpus::PAIRS).unwrap();
    // Without a history the reference semantics keeps propagating.
    assert!(run_abstract(&p, &store(corpus::PAIRS_STORE), 50, 0).step_limit_exceeded);
    let pw = OccurrenceProgram::annotate(&p).unwrap();
    let run = run_store(&pw, &store(corpus::PAIRS_STORE), 1000).unwrap();
    assert_eq!(run.store().filter_pred(|q| q == "q").len(), 6);
}

#[test]
fn unfolding_an_empty_body_is_empty() {
    assert!(unfold_body(&[]).unwrap().is_empty());
    assert!(Program::default().normalized().unwrap().rules.is_empty());
}
