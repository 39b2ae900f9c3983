use std::collections::BTreeSet;

use proptest::prelude::*;

use chrcp_core::abstract_engine::{abstract_successors, replay_step, run_abstract};
use chrcp_core::eval::{normalize, reduce, substitute_term};
use chrcp_core::harness::{generate_random, SizeParams};
use chrcp_core::matcher::{
    enumerate_matches, matches_exactly, positional_view, residual_non_match, subsumes, MatchOptions,
};
use chrcp_core::monotonicity::is_monotone_atom;
use chrcp_core::op_engine::{
    run_operational, ExecutionState, Observer, OccurrenceProgram, OpConfig, Step,
};
use chrcp_core::parser::{parse_atoms, parse_program, parse_term};
use chrcp_core::term::ReduceFn;
use chrcp_core::{Atom, Pattern, Program, Store, Subst, Term};

fn ints() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-20i64..20, 0..10)
}

fn term_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (-5i64..5).prop_map(|v| v.to_string()),
        prop::sample::select(vec!["X", "Y", "Z"]).prop_map(String::from),
        prop::sample::select(vec!["a", "b"]).prop_map(String::from),
    ];
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}, {b})")),
            prop::collection::vec(inner.clone(), 0..3)
                .prop_map(|xs| format!("[{}]", xs.join(", "))),
            (inner.clone(), inner).prop_map(|(a, b)| format!("max({a}, {b})")),
        ]
    })
}

fn generated(seed: u64) -> (Program, Store) {
    let g = generate_random(seed, SizeParams::DESK);
    let st = g.store();
    (g.program, st)
}

fn successor_stores(p: &Program, st: &Store) -> BTreeSet<Store> {
    abstract_successors(p, st, MatchOptions::default())
        .into_iter()
        .map(|(_, s)| s)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn reduce_ignores_element_order(xs in ints(), rot in 0usize..10) {
        let ts: Vec<Term> = xs.iter().map(|&v| Term::int(v)).collect();
        let mut rotated = ts.clone();
        if !rotated.is_empty() {
            let k = rot % rotated.len();
            rotated.rotate_left(k);
            rotated.reverse();
        }
        for f in [ReduceFn::Min, ReduceFn::Max, ReduceFn::Sum, ReduceFn::Count] {
            let unit = if f == ReduceFn::Min { Term::Infty } else { Term::int(0) };
            prop_assert_eq!(reduce(f, unit.clone(), &ts).unwrap(), reduce(f, unit, &rotated).unwrap());
        }
    }

    #[test]
    fn multisets_ignore_element_order(xs in ints()) {
        let mut ys = xs.clone();
        ys.reverse();
        let as_mset = |v: &[i64]| Term::mset(v.iter().map(|&x| Term::int(x)).collect());
        prop_assert_eq!(normalize(&as_mset(&xs)).unwrap(), normalize(&as_mset(&ys)).unwrap());
    }

    #[test]
    fn ground_substitution_is_idempotent(t in term_text(), x in -3i64..3, y in -3i64..3) {
        let t = parse_term(&t).unwrap();
        let theta: Subst = [("X".to_string(), Term::int(x)), ("Y".to_string(), Term::int(y))].into_iter().collect();
        let once = substitute_term(&theta, &t);
        prop_assert_eq!(substitute_term(&theta, &once), once.clone());
        prop_assert!(!once.free_vars().contains("X") && !once.free_vars().contains("Y"));
    }

    #[test]
    fn terms_print_and_parse_back(t in term_text()) {
        let t = parse_term(&t).unwrap();
        prop_assert_eq!(parse_term(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn generated_programs_round_trip_and_normalize_idempotently(seed in any::<u64>()) {
        let (p, _) = generated(seed);
        prop_assert_eq!(parse_program(&p.to_string()).unwrap(), p.clone());
        let n = p.normalized().unwrap();
        prop_assert_eq!(n.normalized().unwrap(), n);
    }

    #[test]
    fn normalization_preserves_successors(seed in any::<u64>()) {
        let (p, st) = generated(seed);
        let n = p.normalized().unwrap();
        prop_assert_eq!(successor_stores(&p, &st), successor_stores(&n, &st));
    }

    #[test]
    fn matches_are_exact_guarded_and_maximal(seed in any::<u64>()) {
        let (p, st) = generated(seed);
        let p = p.normalized().unwrap();
        let view = positional_view(st.atoms());
        for rule in &p.rules {
            for m in enumerate_matches(rule, &view, None, MatchOptions::default()) {
                let heads: Vec<Pattern> = rule.heads().map(|(_, h)| h.substitute(&m.theta)).collect();
                let mut used = vec![false; st.len()];
                for (head, block) in heads.iter().zip(&m.blocks) {
                    let atoms: Vec<Atom> = block.iter().map(|&i| st.atoms()[i as usize].clone()).collect();
                    prop_assert!(matches_exactly(std::slice::from_ref(head), &atoms));
                    for &i in block {
                        prop_assert!(!used[i as usize]);
                        used[i as usize] = true;
                    }
                }
                let rest: Vec<Atom> = st.iter().zip(&used).filter(|(_, u)| !**u).map(|(a, _)| a.clone()).collect();
                prop_assert!(residual_non_match(&heads, &rest));
                prop_assert!(chrcp_core::eval::holds(&rule.guard, &mut m.theta.clone()));
            }
        }
    }

    #[test]
    fn subsumption_and_residual_non_matching_are_dual(x in -3i64..3, bound in -3i64..3) {
        let p = parse_program(&format!("r @ {{a(Y) | Y < {bound}}}#{{Y in Ys}} <=> true.")).unwrap();
        let m = p.rules[0].simplified[0].as_comp().unwrap().clone();
        let a = parse_atoms(&format!("a({x}).")).unwrap().remove(0);
        let closed = Pattern::Comp(m.substitute(&[("Ys".to_string(), Term::mset(vec![]))].into_iter().collect()));
        prop_assert_eq!(subsumes(&a, &m).is_some(), x < bound);
        prop_assert_eq!(residual_non_match(&[closed], &[a]), x >= bound);
    }

    #[test]
    fn monotone_extensions_replay(seed in any::<u64>(), extra in prop::collection::vec((0usize..4, 0i64..4, 0i64..4), 0..4)) {
        let (p, st) = generated(seed);
        let p = p.normalized().unwrap();
        // Single steps, stopping before programs that double the store explode.
        let (mut steps, mut end) = (Vec::new(), st.clone());
        while steps.len() < 12 && end.len() <= 32 {
            let run = run_abstract(&p, &end, 1, seed.wrapping_add(steps.len() as u64));
            let Some(step) = run.steps.into_iter().next() else { break };
            steps.push(step);
            end = run.store;
        }
        let arity: std::collections::BTreeMap<String, usize> = p.predicates().into_iter().collect();
        let ext: Store = extra
            .into_iter()
            .map(|(k, x, y)| {
                let pred = format!("p{k}");
                let args = [x, y].iter().take(*arity.get(&pred).unwrap_or(&2)).map(|&v| Term::int(v)).collect();
                Atom::new(&pred, args)
            })
            .filter(|a| is_monotone_atom(&p, a))
            .collect();
        let mut cur = st.union(&ext);
        for step in &steps {
            cur = replay_step(&p, &cur, step).map_err(|e| TestCaseError::fail(format!("{e:?}")))?;
        }
        prop_assert_eq!(cur, end.union(&ext));
    }

    #[test]
    fn goal_stack_states_stay_valid(seed in any::<u64>(), choice in 0u64..4) {
        struct Check<'a> { p: &'a Program, labels: BTreeSet<u64>, bad: Option<String> }
        impl Observer for Check<'_> {
            fn on_step(&mut self, _: usize, _: &Step, _: &ExecutionState, after: &ExecutionState) {
                if let Err(e) = after.validate(self.p) {
                    self.bad.get_or_insert(e.to_string());
                }
                for (n, _) in after.store.iter() {
                    self.labels.insert(n);
                }
                if self.labels.iter().any(|&n| n >= after.store.next_label()) {
                    self.bad.get_or_insert("label beyond the counter".into());
                }
            }
        }
        let g = generate_random(seed, SizeParams::DESK);
        let pw = OccurrenceProgram::annotate(&g.program).unwrap();
        let mut check = Check { p: pw.program(), labels: BTreeSet::new(), bad: None };
        let config = OpConfig { seed: choice, store_limit: Some(64), ..Default::default() };
        run_operational(&pw, g.initial.clone(), 500, config, Some(&mut check)).unwrap();
        prop_assert_eq!(check.bad, None);
    }
}
