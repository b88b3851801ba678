use crate::automaton::{Ecidpda, Pop};
use crate::constraint::AtomUniverse;
use crate::error::Result;
use crate::scalar::Scalar;
use crate::timed::Symbol;

use super::{assignments, build, Construction, Determinized, Options, PairSet, Source};

/// `(P, <, S)`: the interrupted pair set, the bracket, and the atoms true at it (as a
/// mask over the determinization's universe).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DirectStackSymbol {
    pub context: PairSet,
    pub bracket: Symbol,
    pub truths: u64,
}

struct Direct<'a, T> {
    source: Source<'a, T>,
}

impl<T: Scalar> Construction for Direct<'_, T> {
    type State = PairSet;
    type Stack = DirectStackSymbol;

    fn initial(&self) -> PairSet {
        PairSet::diagonal(self.source.n(), self.source.automaton.initial().iter().copied())
    }

    fn internal(&self, state: &PairSet, symbol: &Symbol, mask: u64) -> PairSet {
        let mut next = PairSet::empty(self.source.n());
        for (p, q) in state.iter() {
            for to in self.source.internal_targets(q, self.source.symbol(symbol), mask) {
                next.insert(p, to);
            }
        }
        next
    }

    fn call(&self, state: &PairSet, symbol: &Symbol, mask: u64) -> (DirectStackSymbol, PairSet) {
        let nested = PairSet::diagonal(
            self.source.n(),
            state
                .iter()
                .flat_map(|(_, q)| self.source.call_targets(q, self.source.symbol(symbol), mask).map(|(r, _)| r)),
        );
        let top = DirectStackSymbol {
            context: state.clone(),
            bracket: symbol.clone(),
            truths: mask,
        };
        (top, nested)
    }

    fn matched_return(&self, state: &PairSet, top: &DirectStackSymbol, symbol: &Symbol, mask: u64) -> PairSet {
        let (open, close) = (self.source.symbol(&top.bracket), self.source.symbol(symbol));
        let mut next = PairSet::empty(self.source.n());
        for (p, q) in top.context.iter() {
            for (p1, s) in self.source.call_targets(q, open, top.truths) {
                for q1 in state.row(p1) {
                    for q2 in self.source.return_targets(q1, close, Pop::Symbol(s), mask) {
                        next.insert(p, q2);
                    }
                }
            }
        }
        next
    }

    fn unmatched_return(&self, state: &PairSet, symbol: &Symbol, mask: u64) -> PairSet {
        PairSet::diagonal(
            self.source.n(),
            state
                .iter()
                .flat_map(|(_, q)| self.source.return_targets(q, self.source.symbol(symbol), Pop::Bottom, mask)),
        )
    }

    fn accepting(&self, state: &PairSet) -> bool {
        state.iter().any(|(_, q)| self.source.automaton.is_accepting(q))
    }

    fn state_name(&self, state: &PairSet) -> String {
        state.label(self.source.automaton.states())
    }

    fn stack_name(&self, top: &DirectStackSymbol) -> String {
        format!(
            "K{{{};{};{}}}",
            top.context.label(self.source.automaton.states()),
            top.bracket,
            self.source.atom_label(top.truths)
        )
    }
}

pub fn determinize_direct<T: Scalar>(automaton: &Ecidpda<T>) -> Result<Determinized<T, PairSet, DirectStackSymbol>> {
    determinize_direct_with(automaton, Options::default())
}

/// Every transition is guarded by `xi(Ψ, S)` for one subset `S` of the source's atoms `Ψ`.
pub fn determinize_direct_with<T: Scalar>(
    automaton: &Ecidpda<T>,
    options: Options,
) -> Result<Determinized<T, PairSet, DirectStackSymbol>> {
    let universe = AtomUniverse::of_constraints(automaton.guards());
    let construction = Direct {
        source: Source::new(automaton, universe.clone())?,
    };
    let all = if universe.is_empty() { 0 } else { u64::MAX >> (64 - universe.len()) };
    let family = assignments(&universe, all, options);
    build(&construction, automaton.alphabet(), &family, universe)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timed::TimedString;
    use crate::Rational;

    fn automaton(transitions: &str) -> Ecidpda<Rational> {
        let text = format!(
            r#"{{"alphabet":{{"calls":["<"],"returns":[">"],"internals":["c"]}},
            "states":["q0","q1","q2"],"initial":["q0"],"accepting":["q2"],"stack":["x"],
            "transitions":[{transitions}]}}"#
        );
        Ecidpda::parse_json(&text).unwrap()
    }

    fn timed(events: &[(&str, &str)]) -> TimedString<Rational> {
        let a = automaton("");
        TimedString::from_literals(a.alphabet().clone(), events).unwrap()
    }

    #[test]
    fn stack_prediction_on_matched_and_unmatched_calls() {
        let a = automaton(
            r#"{"from":"q0","symbol":"<","guard":"stackpred < 1","to":"q1","push":"x"},
               {"from":"q1","symbol":">","pop":"x","guard":"true","to":"q2"},
               {"from":"q1","symbol":"c","guard":"true","to":"q2"}"#,
        );
        let d = determinize_direct(&a).unwrap();
        assert!(d.automaton.is_deterministic().is_deterministic());
        for events in [
            vec![("<", "0"), (">", "0.5")],
            vec![("<", "0"), (">", "1")],
            vec![("<", "0"), ("c", "0.5")],
            vec![("<", "0"), ("c", "0.5"), (">", "0.9")],
        ] {
            let w = timed(&events);
            assert_eq!(a.accepts(&w).unwrap(), d.automaton.accepts(&w).unwrap(), "{events:?}");
        }
        assert!(d.automaton.accepts(&timed(&[("<", "0"), (">", "0.5")])).unwrap());
        assert!(!d.automaton.accepts(&timed(&[("<", "0"), ("c", "0.5")])).unwrap());
    }

    #[test]
    fn bracket_free_automaton_tracks_pairs() {
        let a = automaton(
            r#"{"from":"q0","symbol":"c","guard":"hist(c) <= 1","to":"q1"},
               {"from":"q0","symbol":"c","guard":"true","to":"q0"},
               {"from":"q1","symbol":"c","guard":"true","to":"q2"}"#,
        );
        let d = determinize_direct(&a).unwrap();
        assert_eq!(d.automaton.states()[0], "P{(q0,q0)}");
        let w = timed(&[("c", "0"), ("c", "1"), ("c", "5")]);
        assert!(d.automaton.accepts(&w).unwrap());
        let w = timed(&[("c", "0"), ("c", "2"), ("c", "5")]);
        assert!(!d.automaton.accepts(&w).unwrap());
    }
}
