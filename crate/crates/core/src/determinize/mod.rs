//! Subset-of-pairs determinization: untimed, direct event-clock, and the variant
//! that never reads the stack prediction clock.
//!
//! All three share one lazy worklist ([`build`]). Only states and stack symbols
//! reachable from the initial state are materialized. Return transitions are emitted
//! exactly for the `(state, stack top)` combinations that can occur, which is
//! computed by tracking, for every stack symbol, the contexts it can be pushed from.

mod direct;
mod improved;
mod oracle;
mod sets;
mod untimed;

use std::collections::{HashSet, VecDeque};
use std::hash::Hash;
use std::sync::Arc;

use rustc_hash::{FxHashMap, FxHashSet};

pub use direct::{determinize_direct, determinize_direct_with, DirectStackSymbol};
pub use improved::{determinize_no_stack_prediction, determinize_no_stack_prediction_with, AugmentedState, ImprovedStackSymbol};
pub use oracle::{pair_semantics_oracle, survivor_oracle};
pub use sets::{PairSet, StateSet};
pub use untimed::{determinize_untimed, UntimedStackSymbol};

use crate::automaton::{Action, Ecidpda, Pop, Rule, StateId};
use crate::constraint::{relaxed_satisfiable, xi, AtomUniverse, AtomicConstraint, ClockConstraint};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::timed::{Alphabet, Clock, Symbol};

/// Largest atom universe the constructions will enumerate assignments over.
pub const MAX_DETERMINIZE_ATOMS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Untimed,
    Direct,
    NoStackPrediction,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Untimed => "untimed",
            Mode::Direct => "direct",
            Mode::NoStackPrediction => "nostackpred",
        }
    }

    pub fn parse(text: &str) -> Option<Mode> {
        match text {
            "untimed" => Some(Mode::Untimed),
            "direct" => Some(Mode::Direct),
            "nostackpred" => Some(Mode::NoStackPrediction),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Options {
    /// Skip truth assignments whose `xi` constraint is unsatisfiable even when every
    /// clock is treated independently.
    pub prune_unsatisfiable: bool,
}

/// A determinized automaton together with the source-level meaning of its states
/// and stack symbols (indexed like the automaton's).
#[derive(Clone, Debug)]
pub struct Determinized<T, S, K> {
    pub automaton: Ecidpda<T>,
    pub states: Vec<S>,
    pub stack_symbols: Vec<K>,
    /// Atoms whose truth assignments label the transitions.
    pub universe: AtomUniverse<T>,
}

impl<T: Scalar, S, K> Determinized<T, S, K> {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_stack_symbols(&self) -> usize {
        self.stack_symbols.len()
    }
}

/// `count <= multiplier * 2^exponent`, without overflow.
pub fn within_bound(count: usize, multiplier: usize, exponent: usize) -> bool {
    if multiplier == 0 {
        return count == 0;
    }
    let needed = count.div_ceil(multiplier) as u128;
    exponent >= 127 || needed <= (1u128 << exponent)
}

/// Rule lookups and per-assignment guard truth for a source automaton. Rule lists are
/// stored densely by `(state, symbol)` and, for returns, by popped symbol.
pub(crate) struct Source<'a, T> {
    pub(crate) automaton: &'a Ecidpda<T>,
    pub(crate) universe: AtomUniverse<T>,
    /// `truth[rule][mask]` over `universe`.
    truth: Vec<Vec<bool>>,
    symbols: FxHashMap<Symbol, usize>,
    num_symbols: usize,
    num_pops: usize,
    internal: Vec<Vec<(usize, StateId)>>,
    call: Vec<Vec<(usize, StateId, usize)>>,
    ret: Vec<Vec<(usize, StateId)>>,
}

impl<'a, T: Scalar> Source<'a, T> {
    pub(crate) fn new(automaton: &'a Ecidpda<T>, universe: AtomUniverse<T>) -> Result<Self> {
        if universe.len() > MAX_DETERMINIZE_ATOMS {
            return Err(Error::TooManyAtoms {
                count: universe.len(),
                limit: MAX_DETERMINIZE_ATOMS,
            });
        }
        let masks = 1u64 << universe.len();
        let truth = automaton
            .rules()
            .iter()
            .map(|rule| {
                (0..masks)
                    .map(|mask| {
                        rule.guard.eval_with(&mut |a: &AtomicConstraint<T>| {
                            let idx = universe.index_of(a).expect("universe covers all guards");
                            mask & (1 << idx) != 0
                        })
                    })
                    .collect()
            })
            .collect();
        let symbols: FxHashMap<Symbol, usize> = automaton
            .alphabet()
            .symbols()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        let num_symbols = symbols.len();
        let num_pops = automaton.stack_symbols().len() + 1;
        let slots = automaton.num_states() * num_symbols;
        let mut internal = vec![Vec::new(); slots];
        let mut call = vec![Vec::new(); slots];
        let mut ret = vec![Vec::new(); slots * num_pops];
        for (idx, rule) in automaton.rules().iter().enumerate() {
            let slot = rule.from * num_symbols + symbols[&rule.symbol];
            match rule.action {
                Action::Internal => internal[slot].push((idx, rule.to)),
                Action::Push(s) => call[slot].push((idx, rule.to, s)),
                Action::Pop(p) => {
                    let pop = match p {
                        Pop::Symbol(s) => s,
                        Pop::Bottom => num_pops - 1,
                    };
                    ret[slot * num_pops + pop].push((idx, rule.to))
                }
            }
        }
        Ok(Source {
            automaton,
            universe,
            truth,
            symbols,
            num_symbols,
            num_pops,
            internal,
            call,
            ret,
        })
    }

    pub(crate) fn n(&self) -> usize {
        self.automaton.num_states()
    }

    pub(crate) fn symbol(&self, c: &Symbol) -> usize {
        self.symbols[c]
    }

    pub(crate) fn holds(&self, rule: usize, mask: u64) -> bool {
        self.truth[rule][mask as usize]
    }

    pub(crate) fn internal_targets(&self, q: StateId, c: usize, mask: u64) -> impl Iterator<Item = StateId> + '_ {
        self.internal[q * self.num_symbols + c]
            .iter()
            .filter(move |(r, _)| self.holds(*r, mask))
            .map(|&(_, to)| to)
    }

    /// `(target, pushed symbol)` for call rules from `q` on `c` true under `mask`.
    pub(crate) fn call_targets(&self, q: StateId, c: usize, mask: u64) -> impl Iterator<Item = (StateId, usize)> + '_ {
        self.call[q * self.num_symbols + c]
            .iter()
            .filter(move |(r, _, _)| self.holds(*r, mask))
            .map(|&(_, to, s)| (to, s))
    }

    pub(crate) fn return_targets(&self, q: StateId, c: usize, pop: Pop, mask: u64) -> impl Iterator<Item = StateId> + '_ {
        let pop = match pop {
            Pop::Symbol(s) => s,
            Pop::Bottom => self.num_pops - 1,
        };
        self.ret[(q * self.num_symbols + c) * self.num_pops + pop]
            .iter()
            .filter(move |(r, _)| self.holds(*r, mask))
            .map(|&(_, to)| to)
    }

    pub(crate) fn atom_label(&self, mask: u64) -> String {
        let members: Vec<String> = self
            .universe
            .atoms()
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, a)| format!("{}{}{}", a.clock, a.op, a.bound.to_text()))
            .collect();
        format!("S{{{}}}", members.join(","))
    }
}

/// One truth assignment and the guard that selects it.
pub(crate) struct Assignment<T> {
    pub(crate) mask: u64,
    pub(crate) guard: ClockConstraint<T>,
}

/// Assignments to emit per symbol kind.
pub(crate) struct Family<T> {
    internal: Vec<Assignment<T>>,
    call: Vec<Assignment<T>>,
    ret: Vec<Assignment<T>>,
}

/// All assignments over the universe atoms selected by `free` (a mask), each with guard
/// `xi` over exactly those atoms. An assignment is only emitted for the symbol kinds where
/// it can occur: stack atoms are false off brackets, `stackhist` atoms are false at calls
/// and `stackpred` atoms are false at returns.
pub(crate) fn assignments<T: Scalar>(universe: &AtomUniverse<T>, free: u64, options: Options) -> Family<T> {
    let positions: Vec<usize> = (0..universe.len()).filter(|i| free & (1 << i) != 0).collect();
    let sub = AtomUniverse::new(positions.iter().map(|&i| universe.atoms()[i].clone()));
    let all: Vec<Assignment<T>> = (0..(1u64 << positions.len()))
        .map(|local| {
            let mask = positions
                .iter()
                .enumerate()
                .filter(|(bit, _)| local & (1 << bit) != 0)
                .fold(0u64, |m, (_, &i)| m | (1 << i));
            Assignment {
                mask,
                guard: xi(&sub, local),
            }
        })
        .filter(|a| !options.prune_unsatisfiable || relaxed_satisfiable(&a.guard))
        .collect();
    let clock_bits = |clock: Clock| {
        universe
            .atoms()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.clock == clock)
            .fold(0u64, |m, (i, _)| m | (1 << i))
    };
    let hist = clock_bits(Clock::StackHistory);
    let pred = clock_bits(Clock::StackPrediction);
    let keep = |forbidden: u64| -> Vec<Assignment<T>> {
        all.iter()
            .filter(|a| a.mask & forbidden == 0)
            .map(|a| Assignment {
                mask: a.mask,
                guard: a.guard.clone(),
            })
            .collect()
    };
    Family {
        internal: keep(hist | pred),
        call: keep(hist),
        ret: keep(pred),
    }
}

/// The transition structure of a determinization, in terms of its own state and
/// stack-symbol labels.
pub(crate) trait Construction {
    type State: Clone + Eq + Hash;
    type Stack: Clone + Eq + Hash;

    fn initial(&self) -> Self::State;
    fn internal(&self, state: &Self::State, symbol: &Symbol, mask: u64) -> Self::State;
    fn call(&self, state: &Self::State, symbol: &Symbol, mask: u64) -> (Self::Stack, Self::State);
    fn matched_return(&self, state: &Self::State, top: &Self::Stack, symbol: &Symbol, mask: u64) -> Self::State;
    fn unmatched_return(&self, state: &Self::State, symbol: &Symbol, mask: u64) -> Self::State;
    fn accepting(&self, state: &Self::State) -> bool;
    fn state_name(&self, state: &Self::State) -> String;
    fn stack_name(&self, top: &Self::Stack) -> String;
}

struct Interner<L> {
    ids: FxHashMap<L, usize>,
    labels: Vec<L>,
}

impl<L: Clone + Eq + Hash> Interner<L> {
    fn new() -> Self {
        Interner {
            ids: FxHashMap::default(),
            labels: Vec::new(),
        }
    }

    fn intern(&mut self, label: L) -> usize {
        if let Some(&id) = self.ids.get(&label) {
            return id;
        }
        let id = self.labels.len();
        self.ids.insert(label.clone(), id);
        self.labels.push(label);
        id
    }
}

/// A reachable `(stack top, state)` combination; top `0` is the empty stack and
/// `t + 1` is stack symbol `t`.
#[derive(Clone, Copy)]
struct Fact {
    top: u32,
    state: u32,
}

impl Fact {
    fn key(self) -> u64 {
        (u64::from(self.top) << 32) | u64::from(self.state)
    }
}

#[derive(Default)]
struct Worklist {
    seen: FxHashSet<u64>,
    queue: VecDeque<Fact>,
}

impl Worklist {
    fn add(&mut self, top: u32, state: usize) {
        let fact = Fact {
            top,
            state: state as u32,
        };
        if self.seen.insert(fact.key()) {
            self.queue.push_back(fact);
        }
    }
}

/// Internal successors and `(pushed symbol, nested state)` pairs of one state.
type Moves = (Vec<usize>, Vec<(usize, usize)>);

#[derive(Default)]
struct StackUse {
    /// Tops (in [`Fact`] encoding) the symbol was pushed above.
    below: Vec<u32>,
    below_set: FxHashSet<u32>,
    /// States reached right after popping the symbol.
    exits: Vec<usize>,
    exit_set: FxHashSet<usize>,
}

pub(crate) fn build<T, C>(
    construction: &C,
    alphabet: &Arc<Alphabet>,
    family: &Family<T>,
    universe: AtomUniverse<T>,
) -> Result<Determinized<T, C::State, C::Stack>>
where
    T: Scalar,
    C: Construction,
{
    let mut states: Interner<C::State> = Interner::new();
    let mut stacks: Interner<C::Stack> = Interner::new();
    let mut rules: Vec<Rule<T>> = Vec::new();
    let mut work = Worklist::default();
    // Per state, once expanded.
    let mut local_moves: Vec<Option<Moves>> = Vec::new();
    let mut uses: Vec<StackUse> = Vec::new();

    let calls: Vec<Symbol> = alphabet.calls().cloned().collect();
    let returns: Vec<Symbol> = alphabet.returns().cloned().collect();
    let internals: Vec<Symbol> = alphabet.internals().cloned().collect();

    let init = states.intern(construction.initial());
    work.add(0, init);

    while let Some(Fact { top, state: q }) = work.queue.pop_front() {
        let q = q as usize;
        if local_moves.len() <= q {
            local_moves.resize_with(states.labels.len().max(q + 1), || None);
        }
        if local_moves[q].is_none() {
            let mut inner = Vec::new();
            for c in &internals {
                for a in &family.internal {
                    let to = states.intern(construction.internal(&states.labels[q], c, a.mask));
                    rules.push(Rule {
                        from: q,
                        symbol: c.clone(),
                        guard: a.guard.clone(),
                        to,
                        action: Action::Internal,
                    });
                    inner.push(to);
                }
            }
            let mut pushes = Vec::new();
            for c in &calls {
                for a in &family.call {
                    let (pushed, nested) = construction.call(&states.labels[q], c, a.mask);
                    let pushed = stacks.intern(pushed);
                    let to = states.intern(nested);
                    rules.push(Rule {
                        from: q,
                        symbol: c.clone(),
                        guard: a.guard.clone(),
                        to,
                        action: Action::Push(pushed),
                    });
                    pushes.push((pushed, to));
                }
            }
            local_moves[q] = Some((inner, pushes));
        }

        let (inner, pushes) = local_moves[q].as_ref().expect("expanded above");
        for &to in inner {
            work.add(top, to);
        }
        for &(pushed, nested) in pushes {
            work.add(pushed as u32 + 1, nested);
            if uses.len() <= pushed {
                uses.resize_with(stacks.labels.len().max(pushed + 1), StackUse::default);
            }
            let entry = &mut uses[pushed];
            if entry.below_set.insert(top) {
                entry.below.push(top);
                for &to in &entry.exits {
                    work.add(top, to);
                }
            }
        }

        // Each fact is dequeued once, so its return transitions are emitted once.
        if top == 0 {
            for c in &returns {
                for a in &family.ret {
                    let to = states.intern(construction.unmatched_return(&states.labels[q], c, a.mask));
                    rules.push(Rule {
                        from: q,
                        symbol: c.clone(),
                        guard: a.guard.clone(),
                        to,
                        action: Action::Pop(Pop::Bottom),
                    });
                    work.add(0, to);
                }
            }
        } else {
            let popped = top as usize - 1;
            for c in &returns {
                for a in &family.ret {
                    let next = construction.matched_return(&states.labels[q], &stacks.labels[popped], c, a.mask);
                    let to = states.intern(next);
                    rules.push(Rule {
                        from: q,
                        symbol: c.clone(),
                        guard: a.guard.clone(),
                        to,
                        action: Action::Pop(Pop::Symbol(popped)),
                    });
                    if uses.len() <= popped {
                        uses.resize_with(stacks.labels.len().max(popped + 1), StackUse::default);
                    }
                    let entry = &mut uses[popped];
                    if entry.exit_set.insert(to) {
                        entry.exits.push(to);
                        for &outer in &entry.below {
                            work.add(outer, to);
                        }
                    }
                }
            }
        }
    }

    let state_names: Vec<String> = states.labels.iter().map(|s| construction.state_name(s)).collect();
    let stack_names: Vec<String> = stacks.labels.iter().map(|k| construction.stack_name(k)).collect();
    let accepting = states
        .labels
        .iter()
        .enumerate()
        .filter(|(_, s)| construction.accepting(s))
        .map(|(i, _)| i)
        .collect();
    let automaton = Ecidpda::new(alphabet.clone(), state_names, [init].into(), accepting, stack_names, rules)?;
    Ok(Determinized {
        automaton,
        states: states.labels,
        stack_symbols: stacks.labels,
        universe,
    })
}

/// Source-level description of a determinization output, for reports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SizeReport {
    pub mode: Mode,
    pub source_states: usize,
    pub source_stack_symbols: usize,
    pub source_atoms: usize,
    pub calls: usize,
    pub states: usize,
    pub stack_symbols: usize,
    pub transitions: usize,
    pub guards: usize,
    pub state_bound_ok: bool,
    pub stack_bound_ok: bool,
}

impl SizeReport {
    /// Checks the output sizes against `2^{n^2}` states and `|calls| * 2^{n^2 + k}` stack
    /// symbols (direct), their untimed analogues with `k = 0`, and `2^{n^2 + n}` states and
    /// `|calls| * 2^{n^2 + n + k}` stack symbols for the variant without stack prediction.
    pub fn new<T: Scalar, S, K>(mode: Mode, source: &Ecidpda<T>, output: &Determinized<T, S, K>) -> Self {
        let n = source.num_states();
        let k = AtomUniverse::of_constraints(source.guards()).len();
        let calls = source.alphabet().num_calls();
        let (state_exp, stack_exp) = match mode {
            Mode::Untimed => (n * n, n * n),
            Mode::Direct => (n * n, n * n + k),
            Mode::NoStackPrediction => (n * n + n, n * n + n + k),
        };
        let guards: HashSet<&ClockConstraint<T>> = output.automaton.guards().collect();
        SizeReport {
            mode,
            source_states: n,
            source_stack_symbols: source.stack_symbols().len(),
            source_atoms: k,
            calls,
            states: output.num_states(),
            stack_symbols: output.num_stack_symbols(),
            transitions: output.automaton.rules().len(),
            guards: guards.len(),
            state_bound_ok: within_bound(output.num_states(), 1, state_exp),
            stack_bound_ok: within_bound(output.num_stack_symbols(), calls, stack_exp),
        }
    }
}

pub(crate) fn is_stack_prediction(atom: &AtomicConstraint<impl Scalar>) -> bool {
    atom.clock == Clock::StackPrediction
}

/// Whether any guard mentions the stack prediction clock.
pub fn uses_stack_prediction<T: Scalar>(automaton: &Ecidpda<T>) -> bool {
    automaton
        .guards()
        .any(|g| g.mentions_clock(|c| *c == Clock::StackPrediction))
}
