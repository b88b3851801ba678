//! The ECIDPDA model, configuration-set simulation and the determinism check.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::constraint::{mutually_exclusive, ClockConstraint, Exclusivity};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::timed::{Alphabet, AlphabetFile, Symbol, SymbolKind, TimedString};

pub type StateId = usize;
pub type StackId = usize;

/// What a right bracket reads from the stack.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pop {
    Symbol(StackId),
    /// The stack is empty.
    Bottom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    Internal,
    Push(StackId),
    Pop(Pop),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule<T> {
    pub from: StateId,
    pub symbol: Symbol,
    pub guard: ClockConstraint<T>,
    pub to: StateId,
    pub action: Action,
}

/// A rule without a guard, for untimed automata.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UntimedRule {
    pub from: StateId,
    pub symbol: Symbol,
    pub to: StateId,
    pub action: Action,
}

/// A nondeterministic event-clock input-driven pushdown automaton.
///
/// Deterministic automata are the same type; see [`Ecidpda::is_deterministic`].
#[derive(Clone, Debug)]
pub struct Ecidpda<T> {
    alphabet: Arc<Alphabet>,
    states: Vec<String>,
    initial: BTreeSet<StateId>,
    accepting: BTreeSet<StateId>,
    stack: Vec<String>,
    rules: Vec<Rule<T>>,
}

impl<T: Scalar> Ecidpda<T> {
    pub fn new(
        alphabet: Arc<Alphabet>,
        states: Vec<String>,
        initial: BTreeSet<StateId>,
        accepting: BTreeSet<StateId>,
        stack: Vec<String>,
        rules: Vec<Rule<T>>,
    ) -> Result<Self> {
        check_unique("state", &states)?;
        check_unique("stack symbol", &stack)?;
        if initial.is_empty() {
            return Err(Error::NoInitialState);
        }
        for &q in initial.iter().chain(&accepting) {
            if q >= states.len() {
                return Err(Error::UnknownState {
                    name: format!("#{q}"),
                });
            }
        }
        for (index, rule) in rules.iter().enumerate() {
            let bad = |message: String| Error::InvalidTransition { index, message };
            if rule.from >= states.len() || rule.to >= states.len() {
                return Err(bad("state index out of range".into()));
            }
            let kind = alphabet
                .kind(rule.symbol.as_str())
                .ok_or_else(|| bad(format!("symbol `{}` not in alphabet", rule.symbol)))?;
            match (kind, rule.action) {
                (SymbolKind::Internal, Action::Internal) => {}
                (SymbolKind::Call, Action::Push(s)) | (SymbolKind::Return, Action::Pop(Pop::Symbol(s))) => {
                    if s >= stack.len() {
                        return Err(bad("stack symbol index out of range".into()));
                    }
                }
                (SymbolKind::Return, Action::Pop(Pop::Bottom)) => {}
                (kind, action) => {
                    return Err(bad(format!("action {action:?} does not fit a {kind:?} symbol")))
                }
            }
        }
        Ok(Ecidpda {
            alphabet,
            states,
            initial,
            accepting,
            stack,
            rules,
        })
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn initial(&self) -> &BTreeSet<StateId> {
        &self.initial
    }

    pub fn accepting(&self) -> &BTreeSet<StateId> {
        &self.accepting
    }

    pub fn stack_symbols(&self) -> &[String] {
        &self.stack
    }

    pub fn rules(&self) -> &[Rule<T>] {
        &self.rules
    }

    pub fn state_index(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name)
    }

    pub fn stack_index(&self, name: &str) -> Option<StackId> {
        self.stack.iter().position(|s| s == name)
    }

    pub fn is_accepting(&self, q: StateId) -> bool {
        self.accepting.contains(&q)
    }

    pub fn guards(&self) -> impl Iterator<Item = &ClockConstraint<T>> {
        self.rules.iter().map(|r| &r.guard)
    }

    /// Wraps unguarded rules with `true` guards.
    pub fn embed_untimed(
        alphabet: Arc<Alphabet>,
        states: Vec<String>,
        initial: BTreeSet<StateId>,
        accepting: BTreeSet<StateId>,
        stack: Vec<String>,
        rules: Vec<UntimedRule>,
    ) -> Result<Self> {
        let rules = rules
            .into_iter()
            .map(|r| Rule {
                from: r.from,
                symbol: r.symbol,
                guard: ClockConstraint::True,
                to: r.to,
                action: r.action,
            })
            .collect();
        Ecidpda::new(alphabet, states, initial, accepting, stack, rules)
    }

    pub fn simulator(&self) -> Simulator<'_, T> {
        Simulator::new(self)
    }

    pub fn simulate(&self, w: &TimedString<T>) -> Result<RunResult> {
        self.simulator().run(w)
    }

    pub fn accepts(&self, w: &TimedString<T>) -> Result<bool> {
        Ok(self.simulate(w)?.accepted)
    }

    pub fn is_deterministic(&self) -> Determinism {
        if self.initial.len() != 1 {
            return Determinism::Nondeterministic(NondeterminismReason::InitialStates(self.initial.len()));
        }
        let key = |idx: usize| {
            let rule = &self.rules[idx];
            let pop = match rule.action {
                Action::Pop(p) => Some(p),
                _ => None,
            };
            (rule.from, &rule.symbol, pop)
        };
        let mut order: Vec<usize> = (0..self.rules.len()).collect();
        order.sort_by(|&i, &j| key(i).cmp(&key(j)).then(i.cmp(&j)));
        // Determinizations reuse a handful of guards across many groups, so guards are
        // numbered once and exclusivity is decided once per pair of numbers.
        let mut numbering: FxHashMap<&ClockConstraint<T>, u32> = FxHashMap::default();
        let ids: Vec<u32> = self
            .rules
            .iter()
            .map(|r| {
                let next = numbering.len() as u32;
                *numbering.entry(&r.guard).or_insert(next)
            })
            .collect();
        let mut exclusive: FxHashMap<(u32, u32), bool> = FxHashMap::default();
        for members in order.chunk_by(|&i, &j| key(i) == key(j)) {
            for (n, &i) in members.iter().enumerate() {
                for &j in &members[n + 1..] {
                    let (a, b) = (&self.rules[i], &self.rules[j]);
                    let same_target = a.to == b.to && a.action == b.action;
                    let conflict = if ids[i] == ids[j] {
                        !same_target
                    } else {
                        !*exclusive
                            .entry((ids[i], ids[j]))
                            .or_insert_with(|| mutually_exclusive(&a.guard, &b.guard) == Exclusivity::ProvablyExclusive)
                    };
                    if conflict {
                        return Determinism::Nondeterministic(NondeterminismReason::OverlappingRules(i, j));
                    }
                }
            }
        }
        Determinism::Deterministic
    }

    pub fn describe_rule(&self, index: usize) -> String {
        let r = &self.rules[index];
        let action = match r.action {
            Action::Internal => String::new(),
            Action::Push(s) => format!(" push {}", self.stack[s]),
            Action::Pop(Pop::Symbol(s)) => format!(" pop {}", self.stack[s]),
            Action::Pop(Pop::Bottom) => " pop bottom".to_string(),
        };
        format!(
            "{} --{} [{}]{}--> {}",
            self.states[r.from], r.symbol, r.guard, action, self.states[r.to]
        )
    }

    pub fn from_file(file: &AutomatonFile) -> Result<Self> {
        let alphabet = Arc::new(Alphabet::from_file(&file.alphabet)?);
        check_unique("state", &file.states)?;
        check_unique("stack symbol", &file.stack)?;
        let state = |name: &str| {
            file.states
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| Error::UnknownState { name: name.into() })
        };
        let stack = |name: &str| {
            file.stack
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| Error::UnknownStackSymbol { name: name.into() })
        };
        let initial = file.initial.iter().map(|s| state(s)).collect::<Result<_>>()?;
        let accepting = file.accepting.iter().map(|s| state(s)).collect::<Result<_>>()?;
        let mut rules = Vec::with_capacity(file.transitions.len());
        for (index, t) in file.transitions.iter().enumerate() {
            let bad = |message: String| Error::InvalidTransition { index, message };
            let kind = alphabet
                .kind(&t.symbol)
                .ok_or_else(|| bad(format!("symbol `{}` not in alphabet", t.symbol)))?;
            let action = match kind {
                SymbolKind::Internal => {
                    if t.push.is_some() || t.pop.is_some() {
                        return Err(bad("neutral symbols neither push nor pop".into()));
                    }
                    Action::Internal
                }
                SymbolKind::Call => {
                    let push = t.push.as_deref().ok_or_else(|| bad("left bracket needs `push`".into()))?;
                    if t.pop.is_some() {
                        return Err(bad("left brackets do not pop".into()));
                    }
                    Action::Push(stack(push)?)
                }
                SymbolKind::Return => {
                    let pop = t.pop.as_deref().ok_or_else(|| bad("right bracket needs `pop`".into()))?;
                    if t.push.is_some() {
                        return Err(bad("right brackets do not push".into()));
                    }
                    if pop == BOTTOM {
                        Action::Pop(Pop::Bottom)
                    } else {
                        Action::Pop(Pop::Symbol(stack(pop)?))
                    }
                }
            };
            let guard = match &t.guard {
                None => ClockConstraint::True,
                Some(text) => ClockConstraint::parse(text).map_err(|e| bad(format!("guard: {e}")))?,
            };
            rules.push(Rule {
                from: state(&t.from)?,
                symbol: Symbol::new(&t.symbol),
                guard,
                to: state(&t.to)?,
                action,
            });
        }
        Ecidpda::new(alphabet, file.states.clone(), initial, accepting, file.stack.clone(), rules)
    }

    pub fn to_file(&self) -> AutomatonFile {
        let names = |set: &BTreeSet<StateId>| set.iter().map(|&q| self.states[q].clone()).collect();
        AutomatonFile {
            alphabet: self.alphabet.to_file(),
            states: self.states.clone(),
            initial: names(&self.initial),
            accepting: names(&self.accepting),
            stack: self.stack.clone(),
            transitions: self
                .rules
                .iter()
                .map(|r| TransitionFile {
                    from: self.states[r.from].clone(),
                    symbol: r.symbol.to_string(),
                    guard: Some(r.guard.to_string()),
                    to: self.states[r.to].clone(),
                    push: match r.action {
                        Action::Push(s) => Some(self.stack[s].clone()),
                        _ => None,
                    },
                    pop: match r.action {
                        Action::Pop(Pop::Symbol(s)) => Some(self.stack[s].clone()),
                        Action::Pop(Pop::Bottom) => Some(BOTTOM.to_string()),
                        _ => None,
                    },
                })
                .collect(),
        }
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let file: AutomatonFile = serde_json::from_str(text)?;
        Ecidpda::from_file(&file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("automaton serializes")
    }
}

fn check_unique(what: &'static str, names: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for name in names {
        if !seen.insert(name) {
            return Err(Error::Duplicate {
                what,
                name: name.clone(),
            });
        }
    }
    Ok(())
}

/// Name of the empty-stack marker in automaton files.
pub const BOTTOM: &str = "bottom";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AutomatonFile {
    pub alphabet: AlphabetFile,
    pub states: Vec<String>,
    pub initial: Vec<String>,
    pub accepting: Vec<String>,
    #[serde(default)]
    pub stack: Vec<String>,
    #[serde(default)]
    pub transitions: Vec<TransitionFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransitionFile {
    pub from: String,
    pub symbol: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<String>,
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub push: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pop: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NondeterminismReason {
    InitialStates(usize),
    /// Two rules (by index) that share source, symbol and popped symbol, whose guards
    /// are not provably exclusive.
    OverlappingRules(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Determinism {
    Deterministic,
    Nondeterministic(NondeterminismReason),
}

impl Determinism {
    pub fn is_deterministic(&self) -> bool {
        matches!(self, Determinism::Deterministic)
    }
}

impl fmt::Display for Determinism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Determinism::Deterministic => f.write_str("deterministic"),
            Determinism::Nondeterministic(NondeterminismReason::InitialStates(n)) => {
                write!(f, "nondeterministic: {n} initial states")
            }
            Determinism::Nondeterministic(NondeterminismReason::OverlappingRules(i, j)) => {
                write!(f, "nondeterministic: transitions {i} and {j} may both apply")
            }
        }
    }
}

/// A state together with its stack; the top of the stack is the last element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    pub state: StateId,
    pub stack: Vec<StackId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepSummary {
    pub configurations: usize,
    pub states: BTreeSet<StateId>,
    pub stack_heights: BTreeSet<usize>,
}

/// One step of an accepting computation: the rule applied at `position` and the state reached.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessStep {
    pub position: usize,
    pub rule: usize,
    pub state: StateId,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub accepted: bool,
    pub final_configs: BTreeSet<Configuration>,
    /// One entry per prefix length `0..=|w|`.
    pub steps: Vec<StepSummary>,
    /// Initial state and rules of one accepting computation, when accepted.
    pub witness: Option<(StateId, Vec<WitnessStep>)>,
}

impl RunResult {
    pub fn max_configurations(&self) -> usize {
        self.steps.iter().map(|s| s.configurations).max().unwrap_or(0)
    }

    pub fn final_states(&self) -> BTreeSet<StateId> {
        self.final_configs.iter().map(|c| c.state).collect()
    }
}

/// Exact nondeterministic simulation over sets of configurations, with rules indexed
/// by `(state, symbol)` once up front.
pub struct Simulator<'a, T> {
    automaton: &'a Ecidpda<T>,
    index: HashMap<(StateId, Symbol), Vec<usize>>,
}

type Parents = HashMap<Configuration, (Configuration, usize)>;

impl<'a, T: Scalar> Simulator<'a, T> {
    pub fn new(automaton: &'a Ecidpda<T>) -> Self {
        let mut index: HashMap<(StateId, Symbol), Vec<usize>> = HashMap::new();
        for (idx, rule) in automaton.rules.iter().enumerate() {
            index.entry((rule.from, rule.symbol.clone())).or_default().push(idx);
        }
        Simulator { automaton, index }
    }

    pub fn automaton(&self) -> &'a Ecidpda<T> {
        self.automaton
    }

    pub fn initial_configurations(&self) -> BTreeSet<Configuration> {
        self.automaton
            .initial
            .iter()
            .map(|&q| Configuration {
                state: q,
                stack: Vec::new(),
            })
            .collect()
    }

    pub fn check_string(&self, w: &TimedString<T>) -> Result<()> {
        for event in w.events() {
            let theirs = w.alphabet().kind(event.symbol.as_str());
            match self.automaton.alphabet.kind(event.symbol.as_str()) {
                None => {
                    return Err(Error::UnknownSymbol {
                        symbol: event.symbol.to_string(),
                    })
                }
                Some(ours) if Some(ours) != theirs => {
                    return Err(Error::SymbolKindMismatch {
                        symbol: event.symbol.to_string(),
                    })
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    fn successors(
        &self,
        config: &Configuration,
        w: &TimedString<T>,
        i: usize,
        guard_cache: &mut HashMap<usize, bool>,
        mut emit: impl FnMut(Configuration, usize),
    ) {
        let symbol = w.symbol(i);
        let Some(candidates) = self.index.get(&(config.state, symbol.clone())) else {
            return;
        };
        for &idx in candidates {
            let rule = &self.automaton.rules[idx];
            let applicable = match rule.action {
                Action::Internal | Action::Push(_) => true,
                Action::Pop(Pop::Bottom) => config.stack.is_empty(),
                Action::Pop(Pop::Symbol(s)) => config.stack.last() == Some(&s),
            };
            if !applicable {
                continue;
            }
            let holds = *guard_cache
                .entry(idx)
                .or_insert_with(|| rule.guard.eval(w, i).expect("position in range"));
            if !holds {
                continue;
            }
            let mut stack = config.stack.clone();
            match rule.action {
                Action::Internal | Action::Pop(Pop::Bottom) => {}
                Action::Push(s) => stack.push(s),
                Action::Pop(Pop::Symbol(_)) => {
                    stack.pop();
                }
            }
            emit(
                Configuration {
                    state: rule.to,
                    stack,
                },
                idx,
            );
        }
    }

    /// All configurations reachable from `configs` by reading position `i` (1-based).
    /// Configurations with no applicable rule are dropped.
    pub fn step(&self, configs: &BTreeSet<Configuration>, w: &TimedString<T>, i: usize) -> BTreeSet<Configuration> {
        let mut cache = HashMap::new();
        let mut next = BTreeSet::new();
        for config in configs {
            self.successors(config, w, i, &mut cache, |c, _| {
                next.insert(c);
            });
        }
        next
    }

    fn summary(configs: &BTreeSet<Configuration>) -> StepSummary {
        StepSummary {
            configurations: configs.len(),
            states: configs.iter().map(|c| c.state).collect(),
            stack_heights: configs.iter().map(|c| c.stack.len()).collect(),
        }
    }

    pub fn run(&self, w: &TimedString<T>) -> Result<RunResult> {
        self.check_string(w)?;
        let mut current = self.initial_configurations();
        let mut steps = vec![Self::summary(&current)];
        let mut parents: Vec<Parents> = Vec::with_capacity(w.len());
        for i in 1..=w.len() {
            let mut cache = HashMap::new();
            let mut next = BTreeSet::new();
            let mut links: Parents = HashMap::new();
            for config in &current {
                self.successors(config, w, i, &mut cache, |c, rule| {
                    links.entry(c.clone()).or_insert_with(|| (config.clone(), rule));
                    next.insert(c);
                });
            }
            current = next;
            steps.push(Self::summary(&current));
            parents.push(links);
        }
        let accepted_config = current.iter().find(|c| self.automaton.is_accepting(c.state)).cloned();
        let witness = accepted_config.map(|mut config| {
            let mut trace = Vec::with_capacity(w.len());
            for (pos, links) in parents.iter().enumerate().rev() {
                let (prev, rule) = links[&config].clone();
                trace.push(WitnessStep {
                    position: pos + 1,
                    rule,
                    state: config.state,
                });
                config = prev;
            }
            trace.reverse();
            (config.state, trace)
        });
        Ok(RunResult {
            accepted: witness.is_some(),
            final_configs: current,
            steps,
            witness,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    type Q = BigRational;

    fn alphabet() -> Arc<Alphabet> {
        Arc::new(Alphabet::new(["<"], [">"], ["c", "d"]).unwrap())
    }

    fn names(n: &[&str]) -> Vec<String> {
        n.iter().map(|s| s.to_string()).collect()
    }

    fn string(pairs: &[(&str, &str)]) -> TimedString<Q> {
        TimedString::from_literals(alphabet(), pairs).unwrap()
    }

    fn single_state() -> Ecidpda<Q> {
        Ecidpda::new(alphabet(), names(&["q0"]), [0].into(), [0].into(), vec![], vec![]).unwrap()
    }

    #[test]
    fn trivial_automaton_accepts_only_empty() {
        let a = single_state();
        assert!(a.accepts(&TimedString::empty(alphabet())).unwrap());
        assert!(!a.accepts(&string(&[("c", "0.5")])).unwrap());
    }

    #[test]
    fn rejects_unknown_symbols() {
        let a = single_state();
        let other = Arc::new(Alphabet::new(["<"], [">"], ["z"]).unwrap());
        let w = TimedString::<Q>::from_literals(other, &[("z", "1")]).unwrap();
        assert!(matches!(a.simulate(&w), Err(Error::UnknownSymbol { .. })));
        let swapped = Arc::new(Alphabet::new(["c"], [">"], ["<"]).unwrap());
        let w = TimedString::<Q>::from_literals(swapped, &[("c", "1")]).unwrap();
        assert!(matches!(a.simulate(&w), Err(Error::SymbolKindMismatch { .. })));
    }

    #[test]
    fn construction_validates_rules() {
        let bad_action = Rule {
            from: 0,
            symbol: "<".into(),
            guard: ClockConstraint::<Q>::True,
            to: 0,
            action: Action::Internal,
        };
        let err = Ecidpda::new(alphabet(), names(&["q"]), [0].into(), [].into(), vec![], vec![bad_action]);
        assert!(matches!(err, Err(Error::InvalidTransition { index: 0, .. })));
        let err = Ecidpda::<Q>::new(alphabet(), names(&["q"]), [].into(), [].into(), vec![], vec![]);
        assert!(matches!(err, Err(Error::NoInitialState)));
        let err = Ecidpda::<Q>::new(alphabet(), names(&["q", "q"]), [0].into(), [].into(), vec![], vec![]);
        assert!(matches!(err, Err(Error::Duplicate { .. })));
    }

    const BRACKETS: &str = r#"{
        "alphabet": {"calls": ["<"], "returns": [">"], "internals": ["c", "d"]},
        "states": ["q", "p", "r"],
        "initial": ["q"],
        "accepting": ["r"],
        "stack": ["s"],
        "transitions": [
            {"from": "q", "symbol": "c", "guard": "true", "to": "q"},
            {"from": "q", "symbol": "<", "guard": "stackpred <= 1", "to": "q", "push": "s"},
            {"from": "q", "symbol": ">", "pop": "s", "guard": "stackhist > 0.1 or pred(c) >= 0", "to": "r"},
            {"from": "r", "symbol": ">", "pop": "s", "guard": "true", "to": "r"},
            {"from": "r", "symbol": ">", "pop": "bottom", "to": "r"},
            {"from": "r", "symbol": "d", "to": "r"}
        ]
    }"#;

    #[test]
    fn json_round_trip_and_example_run() {
        let a = Ecidpda::<Q>::parse_json(BRACKETS).unwrap();
        let back = Ecidpda::<Q>::parse_json(&a.to_json()).unwrap();
        assert_eq!(back.rules(), a.rules());
        let w = string(&[
            ("c", "0.1"),
            ("<", "0.2"),
            ("<", "0.4"),
            ("c", "0.5"),
            (">", "0.7"),
            (">", "0.8"),
            ("d", "1"),
        ]);
        let run = a.simulate(&w).unwrap();
        assert!(run.accepted);
        let (start, trace) = run.witness.unwrap();
        assert_eq!(a.states()[start], "q");
        assert_eq!(trace.len(), 7);
        assert_eq!(run.steps.len(), 8);
        assert_eq!(run.steps[3].stack_heights, BTreeSet::from([2]));
        // An unmatched right bracket on an empty stack.
        let w2 = string(&[("<", "1"), (">", "1.5"), (">", "2")]);
        assert!(a.accepts(&w2).unwrap());
    }

    #[test]
    fn file_errors() {
        let missing_push = BRACKETS.replace(r#", "push": "s""#, "");
        assert!(matches!(
            Ecidpda::<Q>::parse_json(&missing_push),
            Err(Error::InvalidTransition { .. })
        ));
        let bad_state = BRACKETS.replace(r#""to": "r"}"#, r#""to": "zz"}"#);
        assert!(matches!(Ecidpda::<Q>::parse_json(&bad_state), Err(Error::UnknownState { .. })));
        let bad_guard = BRACKETS.replace("stackpred <= 1", "stackpred <=");
        assert!(Ecidpda::<Q>::parse_json(&bad_guard).is_err());
    }

    fn two_rules(g1: &str, g2: &str) -> Ecidpda<Q> {
        let rule = |g: &str, to| Rule {
            from: 0,
            symbol: "c".into(),
            guard: ClockConstraint::parse(g).unwrap(),
            to,
            action: Action::Internal,
        };
        Ecidpda::new(alphabet(), names(&["a", "b"]), [0].into(), [1].into(), vec![], vec![rule(g1, 0), rule(g2, 1)])
            .unwrap()
    }

    #[test]
    fn determinism_examples() {
        assert!(!two_rules("true", "true").is_deterministic().is_deterministic());
        assert!(two_rules("hist(c) <= 1", "hist(c) > 1").is_deterministic().is_deterministic());
        assert!(!two_rules("hist(c) <= 1", "hist(d) <= 1").is_deterministic().is_deterministic());
        let two_initial =
            Ecidpda::<Q>::new(alphabet(), names(&["a", "b"]), [0, 1].into(), [].into(), vec![], vec![]).unwrap();
        assert_eq!(
            two_initial.is_deterministic(),
            Determinism::Nondeterministic(NondeterminismReason::InitialStates(2))
        );
        // Different pop symbols never conflict.
        let a = Ecidpda::<Q>::parse_json(BRACKETS).unwrap();
        assert!(a.is_deterministic().is_deterministic());
    }

    #[test]
    fn embed_untimed_ignores_time() {
        let rules = vec![
            UntimedRule { from: 0, symbol: "c".into(), to: 1, action: Action::Internal },
            UntimedRule { from: 1, symbol: "<".into(), to: 1, action: Action::Push(0) },
            UntimedRule { from: 1, symbol: ">".into(), to: 0, action: Action::Pop(Pop::Symbol(0)) },
        ];
        let a = Ecidpda::<Q>::embed_untimed(alphabet(), names(&["q", "p"]), [0].into(), [0].into(), names(&["s"]), rules)
            .unwrap();
        assert!(a.rules()[0].guard.is_true_literal());
        let w = string(&[("c", "1"), ("<", "2"), (">", "3")]);
        let slow = string(&[("c", "10"), ("<", "20.5"), (">", "300")]);
        assert!(a.accepts(&w).unwrap());
        assert!(a.accepts(&slow).unwrap());

        let empty =
            Ecidpda::<Q>::embed_untimed(alphabet(), names(&["q"]), [0].into(), [0].into(), vec![], vec![]).unwrap();
        assert!(empty.accepts(&TimedString::empty(alphabet())).unwrap());
        assert!(!empty.accepts(&string(&[("d", "1")])).unwrap());
    }
}
