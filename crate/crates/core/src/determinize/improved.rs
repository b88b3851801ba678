use crate::automaton::{Ecidpda, Pop};
use crate::constraint::{AtomUniverse, AtomicConstraint};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::timed::{Clock, Symbol};

use super::{assignments, build, is_stack_prediction, Construction, Determinized, Options, PairSet, Source, StateSet};

/// `(P, R)`: pairs for the current bracket level, and the states reachable on the whole
/// prefix assuming no bracket on the stack is ever closed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AugmentedState {
    pub pairs: PairSet,
    pub survivors: StateSet,
}

/// `(P, R, <, S)`; `truths` never contains a stack prediction atom.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ImprovedStackSymbol {
    pub context: PairSet,
    pub survivors: StateSet,
    pub bracket: Symbol,
    pub truths: u64,
}

struct Improved<'a, T> {
    source: Source<'a, T>,
    /// `(stackpred op τ, stackhist op τ)` bit positions.
    mirrors: Vec<(usize, usize)>,
}

impl<T: Scalar> Improved<'_, T> {
    /// The stack prediction atoms that held at the matching call, read off the stack
    /// history atoms true now.
    fn recovered(&self, mask: u64) -> u64 {
        self.mirrors
            .iter()
            .filter(|(_, hist)| mask & (1 << hist) != 0)
            .fold(0, |acc, (pred, _)| acc | (1 << pred))
    }

    fn full_diagonal(&self) -> PairSet {
        PairSet::diagonal(self.source.n(), 0..self.source.n())
    }

    /// Closes a bracket level: `from` are states before the call, `nested` the pairs
    /// of the level being closed.
    fn close<'s>(
        &'s self,
        from: usize,
        top: &'s ImprovedStackSymbol,
        nested: &'s PairSet,
        symbol: &'s Symbol,
        mask: u64,
    ) -> impl Iterator<Item = usize> + 's {
        let at_call = top.truths | self.recovered(mask);
        let (open, close) = (self.source.symbol(&top.bracket), self.source.symbol(symbol));
        self.source.call_targets(from, open, at_call).flat_map(move |(p1, s)| {
            nested
                .row(p1)
                .flat_map(move |q1| self.source.return_targets(q1, close, Pop::Symbol(s), mask))
        })
    }
}

impl<T: Scalar> Construction for Improved<'_, T> {
    type State = AugmentedState;
    type Stack = ImprovedStackSymbol;

    fn initial(&self) -> AugmentedState {
        let initial = self.source.automaton.initial().iter().copied();
        AugmentedState {
            pairs: PairSet::diagonal(self.source.n(), initial.clone()),
            survivors: StateSet::from_states(self.source.n(), initial),
        }
    }

    fn internal(&self, state: &AugmentedState, symbol: &Symbol, mask: u64) -> AugmentedState {
        let n = self.source.n();
        let mut pairs = PairSet::empty(n);
        for (p, q) in state.pairs.iter() {
            for to in self.source.internal_targets(q, self.source.symbol(symbol), mask) {
                pairs.insert(p, to);
            }
        }
        let survivors = StateSet::from_states(
            n,
            state
                .survivors
                .iter()
                .flat_map(|r| self.source.internal_targets(r, self.source.symbol(symbol), mask)),
        );
        AugmentedState { pairs, survivors }
    }

    fn call(&self, state: &AugmentedState, symbol: &Symbol, mask: u64) -> (ImprovedStackSymbol, AugmentedState) {
        // `mask` has no stack prediction bits: the survivors assume the call is unmatched.
        let survivors = StateSet::from_states(
            self.source.n(),
            state
                .survivors
                .iter()
                .flat_map(|r| self.source.call_targets(r, self.source.symbol(symbol), mask).map(|(to, _)| to)),
        );
        let top = ImprovedStackSymbol {
            context: state.pairs.clone(),
            survivors: state.survivors.clone(),
            bracket: symbol.clone(),
            truths: mask,
        };
        (
            top,
            AugmentedState {
                pairs: self.full_diagonal(),
                survivors,
            },
        )
    }

    fn matched_return(
        &self,
        state: &AugmentedState,
        top: &ImprovedStackSymbol,
        symbol: &Symbol,
        mask: u64,
    ) -> AugmentedState {
        let n = self.source.n();
        let mut pairs = PairSet::empty(n);
        for (p, q) in top.context.iter() {
            for to in self.close(q, top, &state.pairs, symbol, mask) {
                pairs.insert(p, to);
            }
        }
        // The survivors below this level are continued through it; the call guards see
        // the recovered stack prediction atoms just like the pairs do.
        let mut survivors = StateSet::empty(n);
        for r in top.survivors.iter() {
            for to in self.close(r, top, &state.pairs, symbol, mask) {
                survivors.insert(to);
            }
        }
        AugmentedState { pairs, survivors }
    }

    fn unmatched_return(&self, state: &AugmentedState, symbol: &Symbol, mask: u64) -> AugmentedState {
        let survivors = StateSet::from_states(
            self.source.n(),
            state
                .survivors
                .iter()
                .flat_map(|r| self.source.return_targets(r, self.source.symbol(symbol), Pop::Bottom, mask)),
        );
        AugmentedState {
            pairs: self.full_diagonal(),
            survivors,
        }
    }

    fn accepting(&self, state: &AugmentedState) -> bool {
        state.survivors.iter().any(|q| self.source.automaton.is_accepting(q))
    }

    fn state_name(&self, state: &AugmentedState) -> String {
        let names = self.source.automaton.states();
        format!("{}|{}", state.pairs.label(names), state.survivors.label(names))
    }

    fn stack_name(&self, top: &ImprovedStackSymbol) -> String {
        let names = self.source.automaton.states();
        format!(
            "K{{{};{};{};{}}}",
            top.context.label(names),
            top.survivors.label(names),
            top.bracket,
            self.source.atom_label(top.truths)
        )
    }
}

pub fn determinize_no_stack_prediction<T: Scalar>(
    automaton: &Ecidpda<T>,
) -> Result<Determinized<T, AugmentedState, ImprovedStackSymbol>> {
    determinize_no_stack_prediction_with(automaton, Options::default())
}

/// The output never mentions `stackpred`. Each `stackpred op τ` of the source is read
/// at the matching return as `stackhist op τ`, so those atoms join the universe.
pub fn determinize_no_stack_prediction_with<T: Scalar>(
    automaton: &Ecidpda<T>,
    options: Options,
) -> Result<Determinized<T, AugmentedState, ImprovedStackSymbol>> {
    let source_atoms = AtomUniverse::of_constraints(automaton.guards());
    let mirrored = source_atoms
        .atoms()
        .iter()
        .filter(|a| is_stack_prediction(a))
        .map(|a| AtomicConstraint {
            clock: Clock::StackHistory,
            op: a.op,
            bound: a.bound.clone(),
        });
    let universe = AtomUniverse::new(source_atoms.atoms().iter().cloned().chain(mirrored));
    let bit = |a: &AtomicConstraint<T>| universe.index_of(a).expect("atom in universe");
    let mirrors = universe
        .atoms()
        .iter()
        .filter(|a| is_stack_prediction(a))
        .map(|a| {
            let hist = AtomicConstraint {
                clock: Clock::StackHistory,
                op: a.op,
                bound: a.bound.clone(),
            };
            (bit(a), bit(&hist))
        })
        .collect();
    let free = universe
        .atoms()
        .iter()
        .enumerate()
        .filter(|(_, a)| !is_stack_prediction(a))
        .fold(0u64, |m, (i, _)| m | (1 << i));
    let family = assignments(&universe, free, options);
    let construction = Improved {
        source: Source::new(automaton, universe.clone())?,
        mirrors,
    };
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

    fn timed(a: &Ecidpda<Rational>, events: &[(&str, &str)]) -> TimedString<Rational> {
        TimedString::from_literals(a.alphabet().clone(), events).unwrap()
    }

    fn mentions_stack_prediction(a: &Ecidpda<Rational>) -> bool {
        super::super::uses_stack_prediction(a)
    }

    #[test]
    fn matched_call_guarded_by_stack_prediction_survives() {
        // Accepting needs the survivors to see the recovered `stackpred` atom at the
        // matching return, not just the pairs.
        let a = automaton(
            r#"{"from":"q0","symbol":"<","guard":"stackpred <= 5","to":"q1","push":"x"},
               {"from":"q1","symbol":">","pop":"x","guard":"true","to":"q2"}"#,
        );
        let d = determinize_no_stack_prediction(&a).unwrap();
        assert!(!mentions_stack_prediction(&d.automaton));
        assert!(d.automaton.is_deterministic().is_deterministic());
        let w = timed(&a, &[("<", "0"), (">", "1")]);
        assert!(a.accepts(&w).unwrap());
        assert!(d.automaton.accepts(&w).unwrap());
        let w = timed(&a, &[("<", "0"), (">", "6")]);
        assert!(!a.accepts(&w).unwrap());
        assert!(!d.automaton.accepts(&w).unwrap());
    }

    #[test]
    fn unmatched_call_with_stack_prediction_guard_dies() {
        let a = automaton(
            r#"{"from":"q0","symbol":"<","guard":"stackpred < 1","to":"q2","push":"x"},
               {"from":"q2","symbol":"c","guard":"true","to":"q2"}"#,
        );
        let d = determinize_no_stack_prediction(&a).unwrap();
        let w = timed(&a, &[("<", "0"), ("c", "0.5")]);
        assert!(!a.accepts(&w).unwrap());
        assert!(!d.automaton.accepts(&w).unwrap());
    }

    #[test]
    fn names_show_both_components() {
        let a = automaton("");
        let d = determinize_no_stack_prediction(&a).unwrap();
        assert_eq!(d.automaton.states()[0], "P{(q0,q0)}|R{q0}");
        assert_eq!(d.automaton.initial().len(), 1);
    }
}
