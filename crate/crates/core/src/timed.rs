//! Alphabets, timed strings, bracket matching and event-clock values.

use std::borrow::Borrow;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An input symbol. Cheap to clone.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Symbol {
    fn from(name: &str) -> Self {
        Symbol::new(name)
    }
}

impl From<String> for Symbol {
    fn from(name: String) -> Self {
        Symbol(Arc::from(name))
    }
}

impl Borrow<str> for Symbol {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymbolKind {
    /// Left bracket: pushes one stack symbol.
    Call,
    /// Right bracket: pops one stack symbol, or reads the empty stack.
    Return,
    /// Neutral symbol: leaves the stack alone.
    Internal,
}

/// An input alphabet split into left brackets, right brackets and neutral symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    calls: BTreeSet<Symbol>,
    returns: BTreeSet<Symbol>,
    internals: BTreeSet<Symbol>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct AlphabetFile {
    #[serde(default)]
    pub calls: Vec<String>,
    #[serde(default)]
    pub returns: Vec<String>,
    #[serde(default)]
    pub internals: Vec<String>,
}

impl Alphabet {
    pub fn new<I, J, K, S1, S2, S3>(calls: I, returns: J, internals: K) -> Result<Self>
    where
        I: IntoIterator<Item = S1>,
        J: IntoIterator<Item = S2>,
        K: IntoIterator<Item = S3>,
        S1: Into<Symbol>,
        S2: Into<Symbol>,
        S3: Into<Symbol>,
    {
        let calls: BTreeSet<Symbol> = calls.into_iter().map(Into::into).collect();
        let returns: BTreeSet<Symbol> = returns.into_iter().map(Into::into).collect();
        let internals: BTreeSet<Symbol> = internals.into_iter().map(Into::into).collect();
        for sym in calls.iter().chain(&returns).chain(&internals) {
            if sym.as_str().is_empty() || sym.as_str().chars().any(char::is_whitespace) {
                return Err(Error::Parse {
                    line: 0,
                    column: 0,
                    message: format!("symbol {sym:?} must be a non-empty token without whitespace"),
                });
            }
        }
        let overlap = calls
            .intersection(&returns)
            .chain(calls.intersection(&internals))
            .chain(returns.intersection(&internals))
            .next();
        if let Some(sym) = overlap {
            return Err(Error::AlphabetOverlap {
                symbol: sym.to_string(),
            });
        }
        if calls.is_empty() && returns.is_empty() && internals.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        Ok(Alphabet {
            calls,
            returns,
            internals,
        })
    }

    pub fn from_file(file: &AlphabetFile) -> Result<Self> {
        Alphabet::new(
            file.calls.iter().map(String::as_str),
            file.returns.iter().map(String::as_str),
            file.internals.iter().map(String::as_str),
        )
    }

    pub fn to_file(&self) -> AlphabetFile {
        let names = |set: &BTreeSet<Symbol>| set.iter().map(|s| s.to_string()).collect();
        AlphabetFile {
            calls: names(&self.calls),
            returns: names(&self.returns),
            internals: names(&self.internals),
        }
    }

    pub fn kind(&self, symbol: &str) -> Option<SymbolKind> {
        if self.calls.contains(symbol) {
            Some(SymbolKind::Call)
        } else if self.returns.contains(symbol) {
            Some(SymbolKind::Return)
        } else if self.internals.contains(symbol) {
            Some(SymbolKind::Internal)
        } else {
            None
        }
    }

    pub fn calls(&self) -> impl Iterator<Item = &Symbol> {
        self.calls.iter()
    }

    pub fn returns(&self) -> impl Iterator<Item = &Symbol> {
        self.returns.iter()
    }

    pub fn internals(&self) -> impl Iterator<Item = &Symbol> {
        self.internals.iter()
    }

    /// All symbols, calls first, then returns, then internals.
    pub fn symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.calls.iter().chain(&self.returns).chain(&self.internals)
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.kind(symbol).is_some()
    }

    pub fn num_calls(&self) -> usize {
        self.calls.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Event<T> {
    pub symbol: Symbol,
    pub time: T,
}

/// Per-position bracket partners of a (possibly ill-nested) string.
///
/// Positions are 1-based in the public API.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    partner: Vec<Option<usize>>,
}

impl Matching {
    /// Single stack scan: a right bracket matches the nearest unmatched left bracket,
    /// and is itself unmatched when there is none.
    pub fn from_kinds<I: IntoIterator<Item = SymbolKind>>(kinds: I) -> Self {
        let mut partner = Vec::new();
        let mut open: Vec<usize> = Vec::new();
        for (index, kind) in kinds.into_iter().enumerate() {
            partner.push(None);
            match kind {
                SymbolKind::Call => open.push(index),
                SymbolKind::Return => {
                    if let Some(left) = open.pop() {
                        partner[left] = Some(index + 1);
                        partner[index] = Some(left + 1);
                    }
                }
                SymbolKind::Internal => {}
            }
        }
        Matching { partner }
    }

    pub fn len(&self) -> usize {
        self.partner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partner.is_empty()
    }

    /// Partner of 1-based position `i`, or `None` when unmatched, neutral or out of range.
    pub fn partner(&self, i: usize) -> Option<usize> {
        i.checked_sub(1)
            .and_then(|idx| self.partner.get(idx).copied().flatten())
    }

    /// Matched pairs `(left, right)` in order of their left bracket.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.partner
            .iter()
            .enumerate()
            .filter_map(|(idx, p)| p.filter(|&j| j > idx + 1).map(|j| (idx + 1, j)))
            .collect()
    }
}

/// An event clock over an alphabet.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Clock {
    /// Time since the last earlier occurrence of the symbol.
    SymbolHistory(Symbol),
    /// Time until the next later occurrence of the symbol.
    SymbolPrediction(Symbol),
    /// At a matched right bracket: time since its left bracket.
    StackHistory,
    /// At a matched left bracket: time until its right bracket.
    StackPrediction,
}

impl fmt::Display for Clock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Clock::SymbolHistory(a) => write!(f, "hist({a})"),
            Clock::SymbolPrediction(a) => write!(f, "pred({a})"),
            Clock::StackHistory => f.write_str("stackhist"),
            Clock::StackPrediction => f.write_str("stackpred"),
        }
    }
}

/// A strictly time-increasing sequence of events over a partitioned alphabet.
#[derive(Clone, Debug)]
pub struct TimedString<T> {
    alphabet: Arc<Alphabet>,
    events: Vec<Event<T>>,
    matching: Matching,
}

impl<T: PartialEq> PartialEq for TimedString<T> {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet && self.events == other.events
    }
}

impl<T: Scalar> TimedString<T> {
    pub fn new(alphabet: Arc<Alphabet>, events: Vec<Event<T>>) -> Result<Self> {
        let mut kinds = Vec::with_capacity(events.len());
        for (idx, event) in events.iter().enumerate() {
            let kind = alphabet
                .kind(event.symbol.as_str())
                .ok_or_else(|| Error::UnknownSymbol {
                    symbol: event.symbol.to_string(),
                })?;
            kinds.push(kind);
            if event.time.is_negative_value() {
                return Err(Error::Negative {
                    value: event.time.to_text(),
                });
            }
            if idx > 0 && events[idx - 1].time >= event.time {
                return Err(Error::NonIncreasingTimestamp {
                    position: idx + 1,
                    previous: events[idx - 1].time.to_text(),
                    current: event.time.to_text(),
                });
            }
        }
        let matching = Matching::from_kinds(kinds);
        Ok(TimedString {
            alphabet,
            events,
            matching,
        })
    }

    pub fn empty(alphabet: Arc<Alphabet>) -> Self {
        TimedString {
            alphabet,
            events: Vec::new(),
            matching: Matching::from_kinds(std::iter::empty()),
        }
    }

    /// Builds a string from `(symbol, time literal)` pairs.
    pub fn from_literals<S: AsRef<str>, L: AsRef<str>>(
        alphabet: Arc<Alphabet>,
        pairs: &[(S, L)],
    ) -> Result<Self> {
        let events = pairs
            .iter()
            .map(|(s, t)| {
                Ok(Event {
                    symbol: Symbol::new(s.as_ref()),
                    time: T::parse_scalar(t.as_ref())?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        TimedString::new(alphabet, events)
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn events(&self) -> &[Event<T>] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn matching(&self) -> &Matching {
        &self.matching
    }

    fn check_position(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.events.len() {
            return Err(Error::PositionOutOfRange {
                position: i,
                len: self.events.len(),
            });
        }
        Ok(())
    }

    /// Symbol at 1-based position `i`.
    pub fn symbol(&self, i: usize) -> &Symbol {
        &self.events[i - 1].symbol
    }

    pub fn time(&self, i: usize) -> &T {
        &self.events[i - 1].time
    }

    pub fn kind(&self, i: usize) -> SymbolKind {
        self.alphabet
            .kind(self.symbol(i).as_str())
            .expect("validated at construction")
    }

    /// The value of `clock` at 1-based position `i`, or `None` when undefined.
    pub fn clock_value(&self, i: usize, clock: &Clock) -> Result<Option<T>> {
        self.check_position(i)?;
        let now = self.time(i);
        let value = match clock {
            Clock::SymbolHistory(a) => (1..i)
                .rev()
                .find(|&j| self.symbol(j) == a)
                .map(|j| now.clone() - self.time(j).clone()),
            Clock::SymbolPrediction(a) => (i + 1..=self.len())
                .find(|&j| self.symbol(j) == a)
                .map(|j| self.time(j).clone() - now.clone()),
            Clock::StackHistory => match self.kind(i) {
                SymbolKind::Return => self
                    .matching
                    .partner(i)
                    .map(|j| now.clone() - self.time(j).clone()),
                _ => None,
            },
            Clock::StackPrediction => match self.kind(i) {
                SymbolKind::Call => self
                    .matching
                    .partner(i)
                    .map(|j| self.time(j).clone() - now.clone()),
                _ => None,
            },
        };
        Ok(value)
    }

    /// The same symbols with new timestamps.
    pub fn retimed(&self, times: Vec<T>) -> Result<Self> {
        assert_eq!(times.len(), self.len(), "one timestamp per event");
        let events = self
            .events
            .iter()
            .zip(times)
            .map(|(e, time)| Event {
                symbol: e.symbol.clone(),
                time,
            })
            .collect();
        TimedString::new(self.alphabet.clone(), events)
    }

    /// Parses the line format: one `<symbol> <timestamp>` per line.
    ///
    /// Lines starting with `#` are comments unless they read as an event of the
    /// alphabet (`#` is itself a legal symbol). Text after the two tokens that
    /// starts with `#` is ignored.
    pub fn parse_text(alphabet: Arc<Alphabet>, text: &str) -> Result<Self> {
        let mut events: Vec<Event<T>> = Vec::new();
        for (line_idx, raw) in text.lines().enumerate() {
            let line_no = line_idx + 1;
            let tokens: Vec<(usize, &str)> = tokenize_with_columns(raw);
            if tokens.is_empty() {
                continue;
            }
            let reads_as_event = tokens.len() >= 2
                && alphabet.contains(tokens[0].1)
                && T::parse_scalar(tokens[1].1).is_ok()
                && tokens.get(2).is_none_or(|t| t.1.starts_with('#'));
            if !reads_as_event && tokens[0].1.starts_with('#') {
                continue;
            }
            let parse_err = |column: usize, message: String| Error::Parse {
                line: line_no,
                column,
                message,
            };
            let (col, sym) = tokens[0];
            if !alphabet.contains(sym) {
                return Err(parse_err(col, format!("unknown symbol `{sym}`")));
            }
            let Some(&(tcol, ttext)) = tokens.get(1) else {
                return Err(parse_err(col + sym.len(), "missing timestamp".into()));
            };
            let time = T::parse_scalar(ttext)
                .map_err(|_| parse_err(tcol, format!("invalid timestamp `{ttext}`")))?;
            if let Some(&(xcol, extra)) = tokens.get(2) {
                if !extra.starts_with('#') {
                    return Err(parse_err(xcol, format!("unexpected token `{extra}`")));
                }
            }
            if time.is_negative_value() {
                return Err(parse_err(tcol, format!("negative timestamp `{ttext}`")));
            }
            if let Some(prev) = events.last() {
                if prev.time >= time {
                    return Err(parse_err(
                        tcol,
                        format!(
                            "timestamp {} does not exceed previous {}",
                            time.to_text(),
                            prev.time.to_text()
                        ),
                    ));
                }
            }
            events.push(Event {
                symbol: Symbol::new(sym),
                time,
            });
        }
        TimedString::new(alphabet, events)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&format!("{} {}\n", e.symbol, e.time.to_text()));
        }
        out
    }

    pub fn from_json_file(file: &TimedStringFile) -> Result<Self> {
        let alphabet = Arc::new(Alphabet::from_file(&file.alphabet)?);
        Self::from_json_events(alphabet, &file.events)
    }

    pub fn from_json_events(alphabet: Arc<Alphabet>, events: &[(String, TimeLiteral)]) -> Result<Self> {
        let events = events
            .iter()
            .map(|(s, t)| {
                Ok(Event {
                    symbol: Symbol::new(s),
                    time: T::parse_scalar(&t.as_text())?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        TimedString::new(alphabet, events)
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let file: TimedStringFile = serde_json::from_str(text)?;
        Self::from_json_file(&file)
    }

    pub fn to_json_file(&self) -> TimedStringFile {
        TimedStringFile {
            alphabet: self.alphabet.to_file(),
            events: self
                .events
                .iter()
                .map(|e| (e.symbol.to_string(), TimeLiteral::Text(e.time.to_text())))
                .collect(),
        }
    }

    /// Space-separated symbols, for messages and tables.
    pub fn word(&self) -> String {
        self.events
            .iter()
            .map(|e| e.symbol.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn tokenize_with_columns(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (idx, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..idx]));
            }
        } else if start.is_none() {
            start = Some(idx);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

/// A timestamp in a JSON file: either a string literal or a bare number.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeLiteral {
    Text(String),
    Number(serde_json::Number),
}

impl TimeLiteral {
    pub fn as_text(&self) -> String {
        match self {
            TimeLiteral::Text(s) => s.clone(),
            TimeLiteral::Number(n) => n.to_string(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TimedStringFile {
    pub alphabet: AlphabetFile,
    pub events: Vec<(String, TimeLiteral)>,
}

/// Free-function form of [`Matching::from_kinds`] for a timed string.
pub fn compute_matching<T: Scalar>(w: &TimedString<T>) -> Matching {
    w.matching().clone()
}

pub fn clock_value<T: Scalar>(w: &TimedString<T>, i: usize, clock: &Clock) -> Result<Option<T>> {
    w.clock_value(i, clock)
}

/// Least `s` such that positions `s..=i` form a well-nested factor; `i + 1` when only
/// the empty suffix qualifies. `i` is a prefix length.
///
/// Quadratic scan over all suffixes; meant for test oracles.
pub fn longest_well_nested_suffix_start<T: Scalar>(w: &TimedString<T>, i: usize) -> usize {
    let i = i.min(w.len());
    (1..=i)
        .find(|&s| {
            let mut depth = 0usize;
            for j in s..=i {
                match w.kind(j) {
                    SymbolKind::Call => depth += 1,
                    SymbolKind::Return => match depth.checked_sub(1) {
                        Some(d) => depth = d,
                        None => return false,
                    },
                    SymbolKind::Internal => {}
                }
            }
            depth == 0
        })
        .unwrap_or(i + 1)
}
