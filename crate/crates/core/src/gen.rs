//! Seeded random automata and timed strings for differential testing.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::automaton::{Action, Ecidpda, Pop, Rule};
use crate::constraint::{AtomicConstraint, ClockConstraint, Cmp};
use crate::scalar::Scalar;
use crate::timed::{Alphabet, Clock, Event, Symbol, TimedString};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub max_states: usize,
    pub max_stack_symbols: usize,
    /// Distinct atoms drawn per automaton; zero gives all-`true` guards.
    pub max_atoms: usize,
    pub max_guard_depth: usize,
    /// Share of guards that are the literal `true`, in percent.
    pub true_guard_percent: u32,
    pub max_string_len: usize,
}

impl GenConfig {
    pub fn untimed() -> Self {
        GenConfig {
            max_states: 4,
            max_stack_symbols: 2,
            max_atoms: 0,
            max_guard_depth: 0,
            true_guard_percent: 100,
            max_string_len: 12,
        }
    }

    pub fn timed() -> Self {
        GenConfig {
            max_states: 3,
            max_stack_symbols: 2,
            max_atoms: 3,
            max_guard_depth: 3,
            true_guard_percent: 30,
            max_string_len: 12,
        }
    }
}

/// `<`, `>` and two internal symbols.
pub fn test_alphabet() -> Arc<Alphabet> {
    Arc::new(Alphabet::new(["<"], [">"], ["a", "b"]).expect("valid alphabet"))
}

const BOUNDS: [(i64, i64); 6] = [(0, 1), (1, 4), (1, 2), (1, 1), (3, 2), (2, 1)];
const STEPS: [(i64, i64); 4] = [(1, 4), (1, 2), (3, 4), (1, 1)];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_clock(rng: &mut impl Rng, alphabet: &Alphabet) -> Clock {
    let symbols: Vec<&Symbol> = alphabet.symbols().collect();
    match rng.gen_range(0..4) {
        0 => Clock::SymbolHistory((*symbols.choose(rng).unwrap()).clone()),
        1 => Clock::SymbolPrediction((*symbols.choose(rng).unwrap()).clone()),
        2 => Clock::StackHistory,
        _ => Clock::StackPrediction,
    }
}

fn random_atom<T: Scalar>(rng: &mut impl Rng, alphabet: &Alphabet) -> AtomicConstraint<T> {
    let (p, q) = BOUNDS[rng.gen_range(0..BOUNDS.len())];
    let op = if rng.gen_bool(0.5) { Cmp::Le } else { Cmp::Ge };
    AtomicConstraint::new(random_clock(rng, alphabet), op, T::from_ratio(p, q)).expect("nonnegative bound")
}

fn random_guard<T: Scalar>(rng: &mut impl Rng, atoms: &[AtomicConstraint<T>], depth: usize) -> ClockConstraint<T> {
    if depth == 0 || rng.gen_bool(0.4) {
        return ClockConstraint::Atom(std::sync::Arc::new(atoms.choose(rng).unwrap().clone()));
    }
    match rng.gen_range(0..3) {
        0 => ClockConstraint::not(random_guard(rng, atoms, depth - 1)),
        1 => ClockConstraint::and(random_guard(rng, atoms, depth - 1), random_guard(rng, atoms, depth - 1)),
        _ => ClockConstraint::or(random_guard(rng, atoms, depth - 1), random_guard(rng, atoms, depth - 1)),
    }
}

/// A random automaton over [`test_alphabet`] with at least one initial and one
/// accepting state.
pub fn random_automaton<T: Scalar>(seed: u64, config: &GenConfig) -> Ecidpda<T> {
    let mut rng = rng(seed);
    let alphabet = test_alphabet();
    let n = rng.gen_range(1..=config.max_states.max(1));
    let k = rng.gen_range(1..=config.max_stack_symbols.max(1));
    let num_atoms = if config.max_atoms == 0 { 0 } else { rng.gen_range(1..=config.max_atoms) };
    let atoms: Vec<AtomicConstraint<T>> = (0..num_atoms).map(|_| random_atom(&mut rng, &alphabet)).collect();

    let pick = |rng: &mut ChaCha8Rng| -> BTreeSet<usize> {
        let mut set: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
        if set.is_empty() {
            set.insert(rng.gen_range(0..n));
        }
        set
    };
    let initial = pick(&mut rng);
    let accepting = pick(&mut rng);

    let mut rules = Vec::new();
    let symbols: Vec<Symbol> = alphabet.symbols().cloned().collect();
    for from in 0..n {
        for symbol in &symbols {
            let kind = alphabet.kind(symbol.as_str()).expect("own symbol");
            let count = [0, 1, 1, 2][rng.gen_range(0..4)];
            for _ in 0..count {
                let guard = if atoms.is_empty() || rng.gen_range(0..100) < config.true_guard_percent {
                    ClockConstraint::True
                } else {
                    random_guard(&mut rng, &atoms, config.max_guard_depth)
                };
                let action = match kind {
                    crate::timed::SymbolKind::Internal => Action::Internal,
                    crate::timed::SymbolKind::Call => Action::Push(rng.gen_range(0..k)),
                    crate::timed::SymbolKind::Return => {
                        if rng.gen_bool(0.3) {
                            Action::Pop(Pop::Bottom)
                        } else {
                            Action::Pop(Pop::Symbol(rng.gen_range(0..k)))
                        }
                    }
                };
                rules.push(Rule {
                    from,
                    symbol: symbol.clone(),
                    guard,
                    to: rng.gen_range(0..n),
                    action,
                });
            }
        }
    }
    Ecidpda::new(
        alphabet,
        (0..n).map(|q| format!("q{q}")).collect(),
        initial,
        accepting,
        (0..k).map(|s| format!("s{s}")).collect(),
        rules,
    )
    .expect("generated automaton is well-formed")
}

/// A random timed string of length at most `max_len`; brackets need not match.
pub fn random_timed_string<T: Scalar>(seed: u64, alphabet: &Arc<Alphabet>, max_len: usize) -> TimedString<T> {
    let mut rng = rng(seed);
    let symbols: Vec<Symbol> = alphabet.symbols().cloned().collect();
    let len = rng.gen_range(0..=max_len);
    let mut time = T::zero();
    let mut events = Vec::with_capacity(len);
    for _ in 0..len {
        let (p, q) = STEPS[rng.gen_range(0..STEPS.len())];
        time = time + T::from_ratio(p, q);
        events.push(Event {
            symbol: symbols.choose(&mut rng).unwrap().clone(),
            time: time.clone(),
        });
    }
    TimedString::new(alphabet.clone(), events).expect("increasing timestamps")
}

/// Seed of the `j`-th string for automaton seed `seed`, so every trial replays alone.
pub fn string_seed(seed: u64, j: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(j.wrapping_mul(0xbf58_476d_1ce4_e5b9)) ^ 0x94d0_49bb_1331_11eb
}
