//! The lower-bound family: well-formed strings encoding relations and event sets, the
//! validity predicate, an O(n)-state nondeterministic checker, and continuations that
//! tell two different prefixes apart.
//!
//! Numbers range over `0..n`. Events are numbered `1..=k` and named `e1`, `e2`, ...

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::automaton::{Action, Ecidpda, Pop, Rule};
use crate::constraint::{desugar, ClockConstraint, Relation};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::timed::{Alphabet, Clock, Event, Symbol, TimedString};

pub fn event_name(i: usize) -> String {
    format!("e{i}")
}

/// `<`, `>`, and internals `a b c #` plus `e1..ek`.
pub fn witness_alphabet(k: usize) -> Result<Arc<Alphabet>> {
    if k == 0 {
        return Err(Error::WitnessSpec("k must be at least 1".into()));
    }
    let internals = ["a", "b", "c", "#"]
        .iter()
        .map(|s| s.to_string())
        .chain((1..=k).map(event_name));
    Ok(Arc::new(Alphabet::new(["<"], [">"], internals)?))
}

pub type Relation2 = BTreeSet<(usize, usize)>;
pub type EventSet = BTreeSet<usize>;

/// Parameters of one well-formed string.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WitnessSpec {
    pub n: usize,
    pub k: usize,
    /// `s_1..s_{m+1}`.
    pub s: Vec<usize>,
    pub r: Vec<Relation2>,
    pub x: Vec<EventSet>,
    pub y: Vec<EventSet>,
}

impl WitnessSpec {
    pub fn new(n: usize, k: usize, s: Vec<usize>, r: Vec<Relation2>, x: Vec<EventSet>, y: Vec<EventSet>) -> Result<Self> {
        let spec = WitnessSpec { n, k, s, r, x, y };
        spec.check()?;
        Ok(spec)
    }

    pub fn m(&self) -> usize {
        self.r.len()
    }

    fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::WitnessSpec(msg));
        if self.n == 0 || self.k == 0 {
            return bad("n and k must be at least 1".into());
        }
        let m = self.r.len();
        if m == 0 {
            return bad("at least one level is required".into());
        }
        if self.s.len() != m + 1 || self.x.len() != m || self.y.len() != m {
            return bad(format!(
                "{m} levels need {} numbers and {m} sets X and Y (got {}, {}, {})",
                m + 1,
                self.s.len(),
                self.x.len(),
                self.y.len()
            ));
        }
        if let Some(v) = self.s.iter().find(|&&v| v >= self.n) {
            return bad(format!("number {v} outside 0..{}", self.n));
        }
        for rel in &self.r {
            if let Some(&(p, q)) = rel.iter().find(|&&(p, q)| p >= self.n || q >= self.n) {
                return bad(format!("pair ({p},{q}) outside 0..{}", self.n));
            }
        }
        for set in self.x.iter().chain(&self.y) {
            if let Some(e) = set.iter().find(|&&e| e == 0 || e > self.k) {
                return bad(format!("event index {e} outside 1..={}", self.k));
            }
        }
        Ok(())
    }

    pub fn from_file(file: &WitnessSpecFile) -> Result<Self> {
        let events = |sets: &[Vec<String>]| -> Result<Vec<EventSet>> {
            sets.iter()
                .map(|set| {
                    set.iter()
                        .map(|name| {
                            name.strip_prefix('e')
                                .and_then(|i| i.parse::<usize>().ok())
                                .filter(|&i| i >= 1 && i <= file.k)
                                .ok_or_else(|| Error::WitnessSpec(format!("unknown event `{name}`")))
                        })
                        .collect()
                })
                .collect()
        };
        if let Some(m) = file.m {
            if m != file.r.len() {
                return Err(Error::WitnessSpec(format!("m = {m} but {} relations given", file.r.len())));
            }
        }
        WitnessSpec::new(
            file.n,
            file.k,
            file.s.clone(),
            file.r.iter().map(|rel| rel.iter().map(|p| (p[0], p[1])).collect()).collect(),
            events(&file.x)?,
            events(&file.y)?,
        )
    }

    pub fn to_file(&self) -> WitnessSpecFile {
        let names = |sets: &[EventSet]| sets.iter().map(|s| s.iter().map(|&e| event_name(e)).collect()).collect();
        WitnessSpecFile {
            n: self.n,
            k: self.k,
            m: Some(self.m()),
            s: self.s.clone(),
            r: self.r.iter().map(|rel| rel.iter().map(|&(p, q)| [p, q]).collect()).collect(),
            x: names(&self.x),
            y: names(&self.y),
            timing: None,
        }
    }
}

/// JSON form of a [`WitnessSpec`], with optional timing overrides.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessSpecFile {
    pub n: usize,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub s: Vec<usize>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<[usize; 2]>>,
    #[serde(rename = "X")]
    pub x: Vec<Vec<String>>,
    #[serde(rename = "Y")]
    pub y: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingFile>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingFile {
    #[serde(default)]
    pub far_gap: Option<String>,
    #[serde(default)]
    pub near_gap: Option<String>,
    #[serde(default)]
    pub step: Option<String>,
    #[serde(default)]
    pub spacing: Option<String>,
}

/// Where events go relative to the bracket that follows a `v` block: the last mandatory
/// `e1..ek` symbol `far_gap` before it, the first member `near_gap` before it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimingScheme<T> {
    pub far_gap: T,
    pub near_gap: T,
    /// Spacing inside a `v` block; `None` means `1/(2L)` for a block of length `L`.
    pub step: Option<T>,
    /// Spacing of all other symbols.
    pub spacing: T,
}

impl<T: Scalar> Default for TimingScheme<T> {
    fn default() -> Self {
        TimingScheme {
            far_gap: T::from_ratio(3, 2),
            near_gap: T::from_ratio(1, 2),
            step: None,
            spacing: T::from_ratio(1, 2),
        }
    }
}

impl<T: Scalar> TimingScheme<T> {
    pub fn from_file(file: &TimingFile) -> Result<Self> {
        let mut scheme = TimingScheme::default();
        if let Some(v) = &file.far_gap {
            scheme.far_gap = T::parse_scalar(v)?;
        }
        if let Some(v) = &file.near_gap {
            scheme.near_gap = T::parse_scalar(v)?;
        }
        if let Some(v) = &file.step {
            scheme.step = Some(T::parse_scalar(v)?);
        }
        if let Some(v) = &file.spacing {
            scheme.spacing = T::parse_scalar(v)?;
        }
        Ok(scheme)
    }

    fn check(&self) -> Result<()> {
        let one = T::from_ratio(1, 1);
        let zero = T::zero();
        if self.far_gap <= one {
            return Err(Error::TimingScheme("far_gap must exceed 1".into()));
        }
        if self.near_gap >= one || self.near_gap <= zero {
            return Err(Error::TimingScheme("near_gap must lie strictly between 0 and 1".into()));
        }
        if self.spacing <= zero || self.step.as_ref().is_some_and(|s| *s <= zero) {
            return Err(Error::TimingScheme("spacing and step must be positive".into()));
        }
        Ok(())
    }

    fn block_step(&self, len: usize) -> T {
        self.step.clone().unwrap_or_else(|| T::from_ratio(1, 2 * len as i64))
    }
}

/// `# a^i b^j` for each pair in lexicographic order.
pub fn encode_relation(r: &Relation2, n: usize) -> Result<Vec<Symbol>> {
    let mut out = Vec::new();
    for &(i, j) in r {
        if i >= n || j >= n {
            return Err(Error::WitnessSpec(format!("pair ({i},{j}) outside 0..{n}")));
        }
        out.push(Symbol::new("#"));
        out.extend(std::iter::repeat_n(Symbol::new("a"), i));
        out.extend(std::iter::repeat_n(Symbol::new("b"), j));
    }
    Ok(out)
}

/// `e1 .. ek` followed by the members of `x` in index order.
pub fn encode_set(x: &EventSet, k: usize) -> Vec<Symbol> {
    (1..=k).chain(x.iter().copied()).map(|i| Symbol::new(&event_name(i))).collect()
}

/// Appends events while keeping track of the time of the last one.
struct Timeline<T> {
    events: Vec<Event<T>>,
    now: T,
}

impl<T: Scalar> Timeline<T> {
    fn push(&mut self, symbol: Symbol, time: T) {
        self.now = time.clone();
        self.events.push(Event { symbol, time });
    }

    fn plain(&mut self, symbol: Symbol, spacing: &T) {
        let time = self.now.clone() + spacing.clone();
        self.push(symbol, time);
    }

    /// A `v` block and the bracket right after it.
    fn block(&mut self, members: &EventSet, k: usize, bracket: &str, scheme: &TimingScheme<T>) -> Result<()> {
        let step = scheme.block_step(k + members.len());
        let mut last_member = T::zero();
        for _ in 1..members.len() {
            last_member = last_member + step.clone();
        }
        if last_member >= scheme.near_gap {
            return Err(Error::TimingScheme(format!(
                "{} members spaced {} apart do not fit within near_gap {}",
                members.len(),
                step.to_text(),
                scheme.near_gap.to_text()
            )));
        }
        // The first mandatory symbol goes one step after the previous event.
        let mut bracket_time = self.now.clone() + scheme.far_gap.clone();
        for _ in 0..k {
            bracket_time = bracket_time + step.clone();
        }
        let mut t = bracket_time.clone() - scheme.far_gap.clone();
        let mut mandatory = Vec::with_capacity(k);
        for _ in 0..k {
            mandatory.push(t.clone());
            t = t - step.clone();
        }
        for (i, time) in (1..=k).zip(mandatory.into_iter().rev()) {
            self.push(Symbol::new(&event_name(i)), time);
        }
        let mut t = bracket_time.clone() - scheme.near_gap.clone();
        for &e in members {
            self.push(Symbol::new(&event_name(e)), t.clone());
            t = t + step.clone();
        }
        self.push(Symbol::new(bracket), bracket_time);
        Ok(())
    }
}

/// `v_{X1} < u_{R1} ... v_{Xm} < u_{Rm} c^{s_{m+1}} v_{Ym} > c^{s_m} ... v_{Y1} > c^{s_1}`,
/// timed so that `hist(e) < 1` holds at a bracket iff `e` is a member of the block before it.
pub fn build_well_formed<T: Scalar>(spec: &WitnessSpec, scheme: &TimingScheme<T>) -> Result<TimedString<T>> {
    spec.check()?;
    scheme.check()?;
    let alphabet = witness_alphabet(spec.k)?;
    let mut line = Timeline {
        events: Vec::new(),
        now: T::zero(),
    };
    let m = spec.m();
    for level in 0..m {
        line.block(&spec.x[level], spec.k, "<", scheme)?;
        for symbol in encode_relation(&spec.r[level], spec.n)? {
            line.plain(symbol, &scheme.spacing);
        }
    }
    for level in (0..m).rev() {
        for _ in 0..spec.s[level + 1] {
            line.plain(Symbol::new("c"), &scheme.spacing);
        }
        line.block(&spec.y[level], spec.k, ">", scheme)?;
    }
    for _ in 0..spec.s[0] {
        line.plain(Symbol::new("c"), &scheme.spacing);
    }
    TimedString::new(alphabet, line.events)
}

/// Consecutive numbers are related at every level, and every `X_i` meets `Y_i`.
pub fn is_valid(spec: &WitnessSpec) -> bool {
    (0..spec.m()).all(|i| spec.r[i].contains(&(spec.s[i], spec.s[i + 1])) && !spec.x[i].is_disjoint(&spec.y[i]))
}

fn recent<T: Scalar>(e: usize) -> Result<ClockConstraint<T>> {
    desugar(Relation::Lt, Clock::SymbolHistory(Symbol::new(&event_name(e))), T::from_ratio(1, 1))
}

/// Nondeterministic checker with `5n + 1` states, `n * k` stack symbols `x:ei`, and
/// guards `hist(ei) < 1` only. It guesses each level's number and a witness event at
/// every `<`, verifies `# a^x b^y` inside the brackets, and on the way out checks each
/// `c` run and that the remembered event is recent again at the `>`.
pub fn build_witness_nfa<T: Scalar>(n: usize, k: usize) -> Result<Ecidpda<T>> {
    if n == 0 {
        return Err(Error::WitnessSpec("n must be at least 1".into()));
    }
    let alphabet = witness_alphabet(k)?;
    let mut states = vec!["start".to_string()];
    let mut add = |name: String| {
        states.push(name);
        states.len() - 1
    };
    let seek: Vec<usize> = (0..n).map(|x| add(format!("seek{x}"))).collect();
    let skip: Vec<usize> = (0..n).map(|t| add(format!("skip{t}"))).collect();
    // need_a[r] for r >= 1; index 0 unused.
    let need_a: Vec<usize> = (0..n).map(|r| if r == 0 { usize::MAX } else { add(format!("needa{r}")) }).collect();
    let count_b: Vec<usize> = (0..n).map(|t| add(format!("countb{t}"))).collect();
    let need_c: Vec<usize> = (0..n).map(|r| add(format!("needc{r}"))).collect();
    let skip_y = add("skipy".into());
    let start = 0;

    let stack: Vec<String> = (0..n)
        .flat_map(|x| (1..=k).map(move |e| format!("{x}:{}", event_name(e))))
        .collect();
    let stack_id = |x: usize, e: usize| x * k + (e - 1);

    let sym = Symbol::new;
    let events: Vec<Symbol> = (1..=k).map(|e| Symbol::new(&event_name(e))).collect();
    let mut rules: Vec<Rule<T>> = Vec::new();
    let mut rule = |from: usize, symbol: Symbol, guard: ClockConstraint<T>, to: usize, action: Action| {
        rules.push(Rule {
            from,
            symbol,
            guard,
            to,
            action,
        })
    };
    let after_a = |r: usize| if r == 0 { count_b[0] } else { need_a[r] };

    for e in &events {
        rule(start, e.clone(), ClockConstraint::True, start, Action::Internal);
    }
    // Entering a level: from the start any number may be guessed; later the number
    // carried over from the previous level is used.
    for e in 1..=k {
        for x in 0..n {
            rule(start, sym("<"), recent(e)?, seek[x], Action::Push(stack_id(x, e)));
            rule(skip[x], sym("<"), recent(e)?, seek[x], Action::Push(stack_id(x, e)));
        }
    }
    for x in 0..n {
        for s in ["a", "b", "#"] {
            rule(seek[x], sym(s), ClockConstraint::True, seek[x], Action::Internal);
        }
        rule(seek[x], sym("#"), ClockConstraint::True, after_a(x), Action::Internal);
    }
    for r in 1..n {
        rule(need_a[r], sym("a"), ClockConstraint::True, after_a(r - 1), Action::Internal);
    }
    for t in 0..n {
        if t + 1 < n {
            rule(count_b[t], sym("b"), ClockConstraint::True, count_b[t + 1], Action::Internal);
        }
        rule(count_b[t], sym("#"), ClockConstraint::True, skip[t], Action::Internal);
        for e in &events {
            rule(count_b[t], e.clone(), ClockConstraint::True, skip[t], Action::Internal);
            rule(skip[t], e.clone(), ClockConstraint::True, skip[t], Action::Internal);
        }
        for s in ["a", "b", "#"] {
            rule(skip[t], sym(s), ClockConstraint::True, skip[t], Action::Internal);
        }
        if t >= 1 {
            rule(count_b[t], sym("c"), ClockConstraint::True, need_c[t - 1], Action::Internal);
            rule(skip[t], sym("c"), ClockConstraint::True, need_c[t - 1], Action::Internal);
        }
        if t >= 1 {
            rule(need_c[t], sym("c"), ClockConstraint::True, need_c[t - 1], Action::Internal);
        }
    }
    for e in &events {
        rule(need_c[0], e.clone(), ClockConstraint::True, skip_y, Action::Internal);
        rule(skip_y, e.clone(), ClockConstraint::True, skip_y, Action::Internal);
    }
    // Leaving a level: the popped event must be recent again; then its number of `c`s.
    for x in 0..n {
        for e in 1..=k {
            for from in [skip[0], skip_y] {
                rule(from, sym(">"), recent(e)?, need_c[x], Action::Pop(Pop::Symbol(stack_id(x, e))));
            }
        }
    }
    Ecidpda::new(alphabet, states, [start].into(), [need_c[0]].into(), stack, rules)
}

/// Every element has a successor and a predecessor.
pub fn is_left_right_total(r: &Relation2, n: usize) -> bool {
    (0..n).all(|v| r.iter().any(|&(p, _)| p == v) && r.iter().any(|&(_, q)| q == v))
}

/// All relations on `0..n`, as bit patterns over the `n * n` pairs.
pub fn all_relations(n: usize) -> Vec<Relation2> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|p| (0..n).map(move |q| (p, q))).collect();
    (0u64..(1 << pairs.len()))
        .map(|bits| pairs.iter().enumerate().filter(|(i, _)| bits & (1 << i) != 0).map(|(_, &p)| p).collect())
        .collect()
}

pub fn all_event_sets(k: usize) -> Vec<EventSet> {
    (0u64..(1 << k))
        .map(|bits| (1..=k).filter(|e| bits & (1 << (e - 1)) != 0).collect())
        .collect()
}

/// Every spec with the given shape, in a fixed order.
pub fn all_specs(n: usize, k: usize, m: usize) -> Vec<WitnessSpec> {
    let relations = all_relations(n);
    let sets = all_event_sets(k);
    let mut out = Vec::new();
    let product = |choices: usize, len: usize| -> Vec<Vec<usize>> {
        let mut all = vec![vec![]];
        for _ in 0..len {
            all = all
                .into_iter()
                .flat_map(|v: Vec<usize>| {
                    (0..choices).map(move |c| {
                        let mut v = v.clone();
                        v.push(c);
                        v
                    })
                })
                .collect();
        }
        all
    };
    for rs in product(relations.len(), m) {
        for xs in product(sets.len(), m) {
            for ys in product(sets.len(), m) {
                for s in product(n, m + 1) {
                    out.push(WitnessSpec {
                        n,
                        k,
                        s,
                        r: rs.iter().map(|&i| relations[i].clone()).collect(),
                        x: xs.iter().map(|&i| sets[i].clone()).collect(),
                        y: ys.iter().map(|&i| sets[i].clone()).collect(),
                    });
                }
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

/// A second half `w2`, given by its numbers and `Y` sets. Appending it to the prefix on
/// the `valid` side gives a valid string; appending it to the other prefix an invalid one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Continuation {
    pub valid: Side,
    pub s: Vec<usize>,
    pub y: Vec<EventSet>,
}

impl Continuation {
    /// The full spec: `prefix`'s relations and `X` sets with this continuation.
    pub fn apply(&self, prefix: &WitnessSpec) -> WitnessSpec {
        WitnessSpec {
            s: self.s.clone(),
            y: self.y.clone(),
            ..prefix.clone()
        }
    }

    /// Symbols of `w2`; they are the same whichever prefix it follows.
    pub fn symbols(&self, k: usize) -> Vec<Symbol> {
        let m = self.y.len();
        let mut out = Vec::new();
        for level in (0..m).rev() {
            out.extend(std::iter::repeat_n(Symbol::new("c"), self.s[level + 1]));
            out.extend(encode_set(&self.y[level], k));
            out.push(Symbol::new(">"));
        }
        out.extend(std::iter::repeat_n(Symbol::new("c"), self.s[0]));
        out
    }
}

/// Numbers `s_1..s_{m+1}` with `(s_j, s_{j+1}) ∈ R_j` everywhere and `s_i = from`,
/// `s_{i+1} = to` at level `i`.
fn thread(r: &[Relation2], i: usize, from: usize, to: usize) -> Option<Vec<usize>> {
    let m = r.len();
    let mut s = vec![0; m + 1];
    s[i] = from;
    s[i + 1] = to;
    for j in (0..i).rev() {
        s[j] = r[j].iter().find(|&&(_, q)| q == s[j + 1])?.0;
    }
    for j in i + 1..m {
        s[j + 1] = r[j].iter().find(|&&(p, _)| p == s[j])?.1;
    }
    Some(s)
}

/// A continuation separating the prefixes `(R, X)` of `first` and `second` (their
/// numbers and `Y` sets are ignored), or `None` when the prefixes coincide.
///
/// Relations must be left- and right-total and every `X` set nonempty. If the relations
/// differ at some level, the continuation threads numbers through a pair present on one
/// side only and repeats each `X` as `Y`; otherwise the first differing set level gets
/// `Y = {e}` for an event `e` present on one side only.
pub fn distinguishing_suffix(first: &WitnessSpec, second: &WitnessSpec) -> Result<Option<Continuation>> {
    first.check()?;
    second.check()?;
    if (first.n, first.k, first.m()) != (second.n, second.k, second.m()) {
        return Err(Error::Distinguish("specs differ in n, k or m".into()));
    }
    for spec in [first, second] {
        if let Some(level) = spec.r.iter().position(|r| !is_left_right_total(r, spec.n)) {
            return Err(Error::Distinguish(format!("relation at level {} is not left- and right-total", level + 1)));
        }
        if let Some(level) = spec.x.iter().position(|x| x.is_empty()) {
            return Err(Error::Distinguish(format!("X at level {} is empty", level + 1)));
        }
    }
    let sides = [(Side::First, first, second), (Side::Second, second, first)];
    if let Some(i) = (0..first.m()).find(|&i| first.r[i] != second.r[i]) {
        for (side, valid, other) in sides {
            if let Some(&(s, t)) = valid.r[i].difference(&other.r[i]).next() {
                let numbers = thread(&valid.r, i, s, t).expect("total relations thread");
                return Ok(Some(Continuation {
                    valid: side,
                    s: numbers,
                    y: valid.x.clone(),
                }));
            }
        }
        unreachable!("relations differ at level {i}");
    }
    if let Some(i) = (0..first.m()).find(|&i| first.x[i] != second.x[i]) {
        for (side, valid, other) in sides {
            if let Some(&e) = valid.x[i].difference(&other.x[i]).next() {
                let (s, t) = *valid.r[i].iter().next().expect("total relation is nonempty");
                let numbers = thread(&valid.r, i, s, t).expect("total relations thread");
                let mut y = valid.x.clone();
                y[i] = [e].into();
                return Ok(Some(Continuation {
                    valid: side,
                    s: numbers,
                    y,
                }));
            }
        }
        unreachable!("sets differ at level {i}");
    }
    Ok(None)
}
