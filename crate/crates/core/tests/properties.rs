use std::sync::Arc;

use proptest::prelude::*;

use ecidpda::automaton::{Action, Pop};
use ecidpda::constraint::{eval_under, mutually_exclusive, xi, AtomSet, AtomUniverse, Exclusivity};
use ecidpda::determinize::{
    determinize_direct, determinize_direct_with, determinize_no_stack_prediction, uses_stack_prediction, Options,
};
use ecidpda::gen::{random_automaton, random_timed_string, test_alphabet, GenConfig};
use ecidpda::timed::Event;
use ecidpda::{
    AtomicConstraint, Clock, ClockConstraint, Cmp, EcidpdaQ, Rational, Rule, Scalar, Symbol, SymbolKind, TimedString,
    TimedStringQ,
};

const SYMBOLS: [&str; 4] = ["<", ">", "a", "b"];

fn ratio(p: i64, q: i64) -> Rational {
    Rational::from_ratio(p, q)
}

/// Timed strings over the test alphabet with gaps from a small rational pool.
fn timed_string(max_len: usize) -> impl Strategy<Value = TimedStringQ> {
    prop::collection::vec((0..SYMBOLS.len(), 1i64..=8), 0..=max_len).prop_map(|events| {
        let mut t = ratio(0, 1);
        let events = events
            .into_iter()
            .map(|(s, gap)| {
                t = t.clone() + ratio(gap, 4);
                Event {
                    symbol: Symbol::new(SYMBOLS[s]),
                    time: t.clone(),
                }
            })
            .collect();
        TimedString::new(test_alphabet(), events).unwrap()
    })
}

/// Strings with at least one position, paired with a position in them.
fn string_and_position() -> impl Strategy<Value = (TimedStringQ, usize)> {
    timed_string(10)
        .prop_filter("nonempty", |w| !w.is_empty())
        .prop_flat_map(|w| {
            let n = w.len();
            (Just(w), 1..=n)
        })
}

fn clock() -> impl Strategy<Value = Clock> {
    prop_oneof![
        prop::sample::select(SYMBOLS.to_vec()).prop_map(|s| Clock::SymbolHistory(s.into())),
        prop::sample::select(SYMBOLS.to_vec()).prop_map(|s| Clock::SymbolPrediction(s.into())),
        Just(Clock::StackHistory),
        Just(Clock::StackPrediction),
    ]
}

fn atom() -> impl Strategy<Value = AtomicConstraint<Rational>> {
    (clock(), any::<bool>(), 0i64..=8)
        .prop_map(|(c, le, b)| AtomicConstraint::new(c, if le { Cmp::Le } else { Cmp::Ge }, ratio(b, 4)).unwrap())
}

fn constraint() -> impl Strategy<Value = ClockConstraint<Rational>> {
    let leaf = prop_oneof![
        1 => Just(ClockConstraint::True),
        1 => Just(ClockConstraint::False),
        6 => atom().prop_map(|a| ClockConstraint::Atom(Arc::new(a))),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(ClockConstraint::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| ClockConstraint::and(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| ClockConstraint::or(a, b)),
        ]
    })
}

/// Partners by scanning outward with a depth counter, without a stack.
fn scan_partner(kinds: &[SymbolKind], i: usize) -> Option<usize> {
    match kinds[i] {
        SymbolKind::Call => {
            let mut depth = 0i64;
            for (j, k) in kinds.iter().enumerate().skip(i + 1) {
                match k {
                    SymbolKind::Call => depth += 1,
                    SymbolKind::Return if depth == 0 => return Some(j),
                    SymbolKind::Return => depth -= 1,
                    SymbolKind::Internal => {}
                }
            }
            None
        }
        SymbolKind::Return => (0..i).rev().find(|&j| kinds[j] == SymbolKind::Call && scan_partner(kinds, j) == Some(i)),
        SymbolKind::Internal => None,
    }
}

fn seeds() -> impl Strategy<Value = (u64, u64)> {
    (any::<u64>(), any::<u64>())
}

proptest! {
    #[test]
    fn matching_agrees_with_scan(w in timed_string(16)) {
        let kinds: Vec<SymbolKind> = (1..=w.len()).map(|i| w.kind(i)).collect();
        for i in 1..=w.len() {
            prop_assert_eq!(w.matching().partner(i), scan_partner(&kinds, i - 1).map(|j| j + 1));
        }
    }

    #[test]
    fn symbol_clocks_follow_definition((w, i) in string_and_position(), s in prop::sample::select(SYMBOLS.to_vec())) {
        let t = |j: usize| w.time(j).clone();
        let before = (1..i).rev().find(|&j| w.symbol(j).as_str() == s);
        let after = (i + 1..=w.len()).find(|&j| w.symbol(j).as_str() == s);
        prop_assert_eq!(w.clock_value(i, &Clock::SymbolHistory(s.into())).unwrap(), before.map(|j| t(i) - t(j)));
        prop_assert_eq!(w.clock_value(i, &Clock::SymbolPrediction(s.into())).unwrap(), after.map(|j| t(j) - t(i)));
    }

    #[test]
    fn stack_clocks_are_dual(w in timed_string(16)) {
        for (i, j) in w.matching().pairs() {
            let pred = w.clock_value(i, &Clock::StackPrediction).unwrap();
            prop_assert!(pred.is_some());
            prop_assert_eq!(pred, w.clock_value(j, &Clock::StackHistory).unwrap());
        }
        for i in 1..=w.len() {
            if w.matching().partner(i).is_none() {
                prop_assert_eq!(w.clock_value(i, &Clock::StackPrediction).unwrap(), None);
                prop_assert_eq!(w.clock_value(i, &Clock::StackHistory).unwrap(), None);
            }
        }
    }

    #[test]
    fn eval_is_compositional(phi in constraint(), extra in prop::collection::vec(atom(), 0..3), (w, i) in string_and_position()) {
        let universe = Arc::new(AtomUniverse::new(phi.atoms().into_iter().chain(extra)));
        let truths: Vec<&AtomicConstraint<Rational>> =
            universe.atoms().iter().filter(|a| a.eval(&w, i).unwrap()).collect();
        let s = AtomSet::new(universe.clone(), truths).unwrap();
        prop_assert_eq!(eval_under(&phi, &s).unwrap(), phi.eval(&w, i).unwrap());
    }

    #[test]
    fn exactly_one_xi_holds(atoms in prop::collection::vec(atom(), 0..=3), (w, i) in string_and_position()) {
        let universe = AtomUniverse::new(atoms);
        let holding: Vec<u64> = (0..(1u64 << universe.len()))
            .filter(|&m| xi(&universe, m).eval(&w, i).unwrap())
            .collect();
        prop_assert_eq!(holding.len(), 1);
        prop_assert_eq!(holding[0], universe.truths_at(&w, i).unwrap());
    }

    #[test]
    fn retiming_preserves_untimed_verdicts(seed in any::<u64>(), w in timed_string(12), gaps in prop::collection::vec(1i64..=20, 12)) {
        let a: EcidpdaQ = random_automaton(seed, &GenConfig::untimed());
        let mut t = ratio(0, 1);
        let times = (0..w.len()).map(|j| { t = t.clone() + ratio(gaps[j], 7); t.clone() }).collect();
        let retimed = w.retimed(times).unwrap();
        prop_assert_eq!(a.accepts(&w).unwrap(), a.accepts(&retimed).unwrap());
    }

    #[test]
    fn stack_heights_stay_synchronous(seed in any::<u64>(), w in timed_string(12)) {
        let a: EcidpdaQ = random_automaton(seed, &GenConfig::timed());
        for step in a.simulate(&w).unwrap().steps {
            prop_assert!(step.stack_heights.len() <= 1);
        }
    }

    #[test]
    fn adding_a_rule_never_shrinks_the_language(
        seed in any::<u64>(),
        (from, to, sym) in (0usize..3, 0usize..3, 0..SYMBOLS.len()),
        guard in constraint(),
        strings in prop::collection::vec(timed_string(10), 10),
    ) {
        let a: EcidpdaQ = random_automaton(seed, &GenConfig::timed());
        let n = a.num_states();
        let symbol = Symbol::new(SYMBOLS[sym]);
        let action = match a.alphabet().kind(SYMBOLS[sym]).unwrap() {
            SymbolKind::Call => Action::Push(0),
            SymbolKind::Return if from % 2 == 0 => Action::Pop(Pop::Symbol(0)),
            SymbolKind::Return => Action::Pop(Pop::Bottom),
            SymbolKind::Internal => Action::Internal,
        };
        let mut rules = a.rules().to_vec();
        rules.push(Rule { from: from % n, symbol, guard, to: to % n, action });
        let bigger = EcidpdaQ::new(
            a.alphabet().clone(),
            a.states().to_vec(),
            a.initial().clone(),
            a.accepting().clone(),
            a.stack_symbols().to_vec(),
            rules,
        ).unwrap();
        for w in &strings {
            if a.accepts(w).unwrap() {
                prop_assert!(bigger.accepts(w).unwrap());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn exclusivity_is_sound(phi in constraint(), psi in constraint(), (w, i) in string_and_position()) {
        if mutually_exclusive(&phi, &psi) == Exclusivity::ProvablyExclusive {
            prop_assert!(!(phi.eval(&w, i).unwrap() && psi.eval(&w, i).unwrap()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn deterministic_outputs_hold_one_configuration((seed, sseed) in seeds()) {
        let a: EcidpdaQ = random_automaton(seed, &GenConfig::timed());
        let d = determinize_direct(&a).unwrap();
        prop_assert!(d.automaton.is_deterministic().is_deterministic());
        let w: TimedStringQ = random_timed_string(sseed, a.alphabet(), 12);
        prop_assert!(d.automaton.simulate(&w).unwrap().max_configurations() <= 1);
    }

    #[test]
    fn pruning_preserves_the_language(seed in any::<u64>(), strings in prop::collection::vec(timed_string(12), 20)) {
        let a: EcidpdaQ = random_automaton(seed, &GenConfig::timed());
        let full = determinize_direct(&a).unwrap();
        let pruned = determinize_direct_with(&a, Options { prune_unsatisfiable: true }).unwrap();
        prop_assert!(pruned.automaton.rules().len() <= full.automaton.rules().len());
        for w in &strings {
            prop_assert_eq!(full.automaton.accepts(w).unwrap(), pruned.automaton.accepts(w).unwrap());
        }
    }

    #[test]
    fn constructions_agree_on_well_nested_strings_without_stack_prediction(
        seed in any::<u64>(),
        strings in prop::collection::vec(timed_string(12), 30),
    ) {
        let a: EcidpdaQ = random_automaton(seed, &GenConfig::timed());
        prop_assume!(!uses_stack_prediction(&a));
        let direct = determinize_direct(&a).unwrap();
        let improved = determinize_no_stack_prediction(&a).unwrap();
        for w in strings.iter().filter(|w| is_well_nested(w)) {
            prop_assert_eq!(direct.automaton.accepts(w).unwrap(), improved.automaton.accepts(w).unwrap());
        }
    }
}

fn is_well_nested(w: &TimedStringQ) -> bool {
    (1..=w.len()).all(|i| w.kind(i) == SymbolKind::Internal || w.matching().partner(i).is_some())
}

#[test]
fn well_nested_filter_sees_both_outcomes() {
    let nested: TimedStringQ = TimedString::from_literals(test_alphabet(), &[("<", "1"), ("a", "2"), (">", "3")]).unwrap();
    let open: TimedStringQ = TimedString::from_literals(test_alphabet(), &[("<", "1"), ("a", "2")]).unwrap();
    assert!(is_well_nested(&nested));
    assert!(!is_well_nested(&open));
}
