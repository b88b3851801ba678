use crate::automaton::{Ecidpda, Pop};
use crate::constraint::AtomUniverse;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::timed::Symbol;

use super::{assignments, build, Construction, Determinized, Options, PairSet, Source};

/// `(<, P)`: the bracket read and the pair set it interrupted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UntimedStackSymbol {
    pub bracket: Symbol,
    pub context: PairSet,
}

struct Untimed<'a, T> {
    source: Source<'a, T>,
}

impl<T: Scalar> Construction for Untimed<'_, T> {
    type State = PairSet;
    type Stack = UntimedStackSymbol;

    fn initial(&self) -> PairSet {
        PairSet::diagonal(self.source.n(), self.source.automaton.initial().iter().copied())
    }

    fn internal(&self, state: &PairSet, symbol: &Symbol, _: u64) -> PairSet {
        let mut next = PairSet::empty(self.source.n());
        for (p, q) in state.iter() {
            for to in self.source.internal_targets(q, self.source.symbol(symbol), 0) {
                next.insert(p, to);
            }
        }
        next
    }

    fn call(&self, state: &PairSet, symbol: &Symbol, _: u64) -> (UntimedStackSymbol, PairSet) {
        let nested = PairSet::diagonal(
            self.source.n(),
            state.iter().flat_map(|(_, q)| self.source.call_targets(q, self.source.symbol(symbol), 0).map(|(r, _)| r)),
        );
        let top = UntimedStackSymbol {
            bracket: symbol.clone(),
            context: state.clone(),
        };
        (top, nested)
    }

    fn matched_return(&self, state: &PairSet, top: &UntimedStackSymbol, symbol: &Symbol, _: u64) -> PairSet {
        let (open, close) = (self.source.symbol(&top.bracket), self.source.symbol(symbol));
        let mut next = PairSet::empty(self.source.n());
        for (p, q) in top.context.iter() {
            for (p1, s) in self.source.call_targets(q, open, 0) {
                for q1 in state.row(p1) {
                    for q2 in self.source.return_targets(q1, close, Pop::Symbol(s), 0) {
                        next.insert(p, q2);
                    }
                }
            }
        }
        next
    }

    fn unmatched_return(&self, state: &PairSet, symbol: &Symbol, _: u64) -> PairSet {
        let mut next = PairSet::empty(self.source.n());
        for (p, q) in state.iter() {
            for to in self.source.return_targets(q, self.source.symbol(symbol), Pop::Bottom, 0) {
                next.insert(p, to);
            }
        }
        next
    }

    fn accepting(&self, state: &PairSet) -> bool {
        state.iter().any(|(_, q)| self.source.automaton.is_accepting(q))
    }

    fn state_name(&self, state: &PairSet) -> String {
        state.label(self.source.automaton.states())
    }

    fn stack_name(&self, top: &UntimedStackSymbol) -> String {
        format!("K{{{};{}}}", top.context.label(self.source.automaton.states()), top.bracket)
    }
}

/// Determinizes an automaton whose guards are all `true`. The output's guards are all
/// `true` as well.
pub fn determinize_untimed<T: Scalar>(automaton: &Ecidpda<T>) -> Result<Determinized<T, PairSet, UntimedStackSymbol>> {
    if let Some(index) = automaton.rules().iter().position(|r| !r.guard.is_true_literal()) {
        return Err(Error::GuardNotTrue { index });
    }
    let universe = AtomUniverse::new([]);
    let construction = Untimed {
        source: Source::new(automaton, universe.clone())?,
    };
    let single = assignments(&universe, 0, Options::default());
    build(&construction, automaton.alphabet(), &single, universe)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{Action, UntimedRule};
    use crate::timed::{Alphabet, TimedString};
    use crate::Rational;
    use std::sync::Arc;

    fn alphabet() -> Arc<Alphabet> {
        Arc::new(Alphabet::new(["<"], [">"], ["c"]).unwrap())
    }

    fn rule(from: usize, symbol: &str, to: usize, action: Action) -> UntimedRule {
        UntimedRule {
            from,
            symbol: symbol.into(),
            to,
            action,
        }
    }

    /// Accepts strings whose last bracket pair was entered by guessing correctly that
    /// a `c` follows the return.
    fn guessing() -> Ecidpda<Rational> {
        Ecidpda::embed_untimed(
            alphabet(),
            vec!["q0".into(), "q1".into(), "q2".into()],
            [0].into(),
            [2].into(),
            vec!["x".into(), "y".into()],
            vec![
                rule(0, "<", 0, Action::Push(0)),
                rule(0, "<", 1, Action::Push(1)),
                rule(0, "c", 0, Action::Internal),
                rule(1, "c", 1, Action::Internal),
                rule(0, ">", 0, Action::Pop(Pop::Symbol(0))),
                rule(1, ">", 2, Action::Pop(Pop::Symbol(1))),
                rule(0, ">", 0, Action::Pop(Pop::Bottom)),
                rule(2, "c", 2, Action::Internal),
            ],
        )
        .unwrap()
    }

    fn word(symbols: &str) -> TimedString<Rational> {
        let events: Vec<(String, String)> = symbols
            .split_whitespace()
            .enumerate()
            .map(|(i, s)| (s.to_string(), (i + 1).to_string()))
            .collect();
        TimedString::from_literals(alphabet(), &events).unwrap()
    }

    #[test]
    fn agrees_with_source_on_small_words() {
        let a = guessing();
        let d = determinize_untimed(&a).unwrap();
        assert!(d.automaton.is_deterministic().is_deterministic());
        for text in ["", "< >", "< c > c", "> < c >", "< < > >", "< < c > c >", "< c", "c > c"] {
            let w = word(text);
            assert_eq!(a.accepts(&w).unwrap(), d.automaton.accepts(&w).unwrap(), "{text:?}");
        }
    }

    #[test]
    fn initial_state_accepts_empty_word_when_source_does() {
        let a: Ecidpda<Rational> =
            Ecidpda::embed_untimed(alphabet(), vec!["q".into()], [0].into(), [0].into(), vec![], vec![]).unwrap();
        let d = determinize_untimed(&a).unwrap();
        assert_eq!(d.automaton.states()[0], "P{(q,q)}");
        assert!(d.automaton.is_accepting(0));
    }

    #[test]
    fn timed_guards_are_refused() {
        let text = r#"{"alphabet":{"calls":["<"],"returns":[">"],"internals":["c"]},
            "states":["q"],"initial":["q"],"accepting":["q"],"stack":[],
            "transitions":[{"from":"q","symbol":"c","guard":"hist(c) <= 1","to":"q"}]}"#;
        let a: Ecidpda<Rational> = Ecidpda::parse_json(text).unwrap();
        assert!(matches!(determinize_untimed(&a), Err(Error::GuardNotTrue { index: 0 })));
    }
}
