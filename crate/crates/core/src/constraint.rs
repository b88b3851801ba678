//! Clock constraints: the Boolean AST, its evaluation on timed strings, truth
//! assignments over a finite atom universe, and a relaxed exclusivity check.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::timed::{Clock, Symbol, TimedString};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cmp {
    Le,
    Ge,
}

impl fmt::Display for Cmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cmp::Le => "<=",
            Cmp::Ge => ">=",
        })
    }
}

/// `clock <= bound` or `clock >= bound`.
///
/// The derived ordering (clock kind, symbol, comparison, bound) is the canonical
/// order of atom universes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomicConstraint<T> {
    pub clock: Clock,
    pub op: Cmp,
    pub bound: T,
}

impl<T: Scalar> AtomicConstraint<T> {
    pub fn new(clock: Clock, op: Cmp, bound: T) -> Result<Self> {
        if bound.is_negative_value() {
            return Err(Error::Negative {
                value: bound.to_text(),
            });
        }
        Ok(AtomicConstraint { clock, op, bound })
    }

    pub fn holds_for(&self, value: Option<&T>) -> bool {
        match (value, self.op) {
            (None, _) => false,
            (Some(v), Cmp::Le) => *v <= self.bound,
            (Some(v), Cmp::Ge) => *v >= self.bound,
        }
    }

    pub fn eval(&self, w: &TimedString<T>, i: usize) -> Result<bool> {
        Ok(self.holds_for(w.clock_value(i, &self.clock)?.as_ref()))
    }
}

impl<T: Scalar> fmt::Display for AtomicConstraint<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.clock, self.op, self.bound.to_text())
    }
}

/// Subterms are shared, so cloning a guard is cheap.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ClockConstraint<T> {
    True,
    False,
    Atom(Arc<AtomicConstraint<T>>),
    Not(Arc<ClockConstraint<T>>),
    And(Arc<ClockConstraint<T>>, Arc<ClockConstraint<T>>),
    Or(Arc<ClockConstraint<T>>, Arc<ClockConstraint<T>>),
}

/// Comparison operators accepted by [`desugar`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
    Lt,
    Gt,
}

impl<T: Scalar> ClockConstraint<T> {
    pub fn atom(clock: Clock, op: Cmp, bound: T) -> Result<Self> {
        Ok(ClockConstraint::Atom(Arc::new(AtomicConstraint::new(clock, op, bound)?)))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: Self) -> Self {
        ClockConstraint::Not(Arc::new(inner))
    }

    pub fn and(lhs: Self, rhs: Self) -> Self {
        ClockConstraint::And(Arc::new(lhs), Arc::new(rhs))
    }

    pub fn or(lhs: Self, rhs: Self) -> Self {
        ClockConstraint::Or(Arc::new(lhs), Arc::new(rhs))
    }

    pub fn is_true_literal(&self) -> bool {
        matches!(self, ClockConstraint::True)
    }

    /// Evaluates with atom truth supplied by `truth`.
    pub fn eval_with<F>(&self, truth: &mut F) -> bool
    where
        F: FnMut(&AtomicConstraint<T>) -> bool,
    {
        match self {
            ClockConstraint::True => true,
            ClockConstraint::False => false,
            ClockConstraint::Atom(a) => truth(a),
            ClockConstraint::Not(inner) => !inner.eval_with(truth),
            ClockConstraint::And(l, r) => l.eval_with(truth) && r.eval_with(truth),
            ClockConstraint::Or(l, r) => l.eval_with(truth) || r.eval_with(truth),
        }
    }

    /// Truth at 1-based position `i` of `w`. Atoms over undefined clocks are false.
    pub fn eval(&self, w: &TimedString<T>, i: usize) -> Result<bool> {
        if i == 0 || i > w.len() {
            return Err(Error::PositionOutOfRange {
                position: i,
                len: w.len(),
            });
        }
        Ok(self.eval_with(&mut |a| a.eval(w, i).expect("position checked")))
    }

    pub fn atoms(&self) -> BTreeSet<AtomicConstraint<T>> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<AtomicConstraint<T>>) {
        match self {
            ClockConstraint::True | ClockConstraint::False => {}
            ClockConstraint::Atom(a) => {
                out.insert((**a).clone());
            }
            ClockConstraint::Not(inner) => inner.collect_atoms(out),
            ClockConstraint::And(l, r) | ClockConstraint::Or(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }

    pub fn mentions_clock(&self, pred: impl Fn(&Clock) -> bool + Copy) -> bool {
        match self {
            ClockConstraint::True | ClockConstraint::False => false,
            ClockConstraint::Atom(a) => pred(&a.clock),
            ClockConstraint::Not(inner) => inner.mentions_clock(pred),
            ClockConstraint::And(l, r) | ClockConstraint::Or(l, r) => {
                l.mentions_clock(pred) || r.mentions_clock(pred)
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            ClockConstraint::True | ClockConstraint::False | ClockConstraint::Atom(_) => 0,
            ClockConstraint::Not(inner) => 1 + inner.depth(),
            ClockConstraint::And(l, r) | ClockConstraint::Or(l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Parses the guard grammar, e.g. `hist(e1) < 1 and not stackpred >= 2`.
    pub fn parse(text: &str) -> Result<Self> {
        parser::parse(text)
    }
}

/// Expands `=`, `<` and `>` into the two primitive comparisons.
pub fn desugar<T: Scalar>(rel: Relation, clock: Clock, bound: T) -> Result<ClockConstraint<T>> {
    let le = || ClockConstraint::atom(clock.clone(), Cmp::Le, bound.clone());
    let ge = || ClockConstraint::atom(clock.clone(), Cmp::Ge, bound.clone());
    Ok(match rel {
        Relation::Le => le()?,
        Relation::Ge => ge()?,
        Relation::Eq => ClockConstraint::and(le()?, ge()?),
        Relation::Lt => ClockConstraint::and(le()?, ClockConstraint::not(ge()?)),
        Relation::Gt => ClockConstraint::and(ge()?, ClockConstraint::not(le()?)),
    })
}

pub fn eval<T: Scalar>(phi: &ClockConstraint<T>, w: &TimedString<T>, i: usize) -> Result<bool> {
    phi.eval(w, i)
}

pub fn atoms<T: Scalar>(phi: &ClockConstraint<T>) -> BTreeSet<AtomicConstraint<T>> {
    phi.atoms()
}

/// A finite, canonically ordered set of atomic constraints.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AtomUniverse<T> {
    atoms: Vec<AtomicConstraint<T>>,
}

impl<T: Scalar> AtomUniverse<T> {
    pub fn new<I: IntoIterator<Item = AtomicConstraint<T>>>(atoms: I) -> Self {
        let set: BTreeSet<_> = atoms.into_iter().collect();
        AtomUniverse {
            atoms: set.into_iter().collect(),
        }
    }

    /// All atoms used by the given constraints.
    pub fn of_constraints<'a, I>(constraints: I) -> Self
    where
        I: IntoIterator<Item = &'a ClockConstraint<T>>,
    {
        let mut set = BTreeSet::new();
        for c in constraints {
            c.collect_atoms(&mut set);
        }
        AtomUniverse {
            atoms: set.into_iter().collect(),
        }
    }

    pub fn atoms(&self) -> &[AtomicConstraint<T>] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn index_of(&self, atom: &AtomicConstraint<T>) -> Option<usize> {
        self.atoms.binary_search(atom).ok()
    }

    /// Bitmask of the atoms true at position `i` of `w`.
    pub fn truths_at(&self, w: &TimedString<T>, i: usize) -> Result<u64> {
        let mut mask = 0u64;
        for (idx, atom) in self.atoms.iter().enumerate() {
            if atom.eval(w, i)? {
                mask |= 1 << idx;
            }
        }
        Ok(mask)
    }
}

/// Maximum universe size representable by an [`AtomSet`] mask.
pub const MAX_ASSIGNMENT_ATOMS: usize = 64;

/// A truth assignment: the members of a universe assumed true.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AtomSet<T> {
    universe: Arc<AtomUniverse<T>>,
    members: u64,
}

impl<T: Scalar> AtomSet<T> {
    pub fn from_mask(universe: Arc<AtomUniverse<T>>, members: u64) -> Result<Self> {
        if universe.len() > MAX_ASSIGNMENT_ATOMS {
            return Err(Error::TooManyAtoms {
                count: universe.len(),
                limit: MAX_ASSIGNMENT_ATOMS,
            });
        }
        let valid = if universe.len() == 64 {
            u64::MAX
        } else {
            (1u64 << universe.len()) - 1
        };
        Ok(AtomSet {
            universe,
            members: members & valid,
        })
    }

    pub fn new<'a, I>(universe: Arc<AtomUniverse<T>>, members: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a AtomicConstraint<T>>,
    {
        let mut mask = 0u64;
        for atom in members {
            let idx = universe
                .index_of(atom)
                .ok_or_else(|| Error::AtomOutsideUniverse {
                    atom: atom.to_string(),
                })?;
            mask |= 1 << idx;
        }
        AtomSet::from_mask(universe, mask)
    }

    pub fn universe(&self) -> &AtomUniverse<T> {
        &self.universe
    }

    pub fn mask(&self) -> u64 {
        self.members
    }

    pub fn contains(&self, atom: &AtomicConstraint<T>) -> Option<bool> {
        self.universe
            .index_of(atom)
            .map(|idx| self.members & (1 << idx) != 0)
    }

    pub fn members(&self) -> impl Iterator<Item = &AtomicConstraint<T>> {
        self.universe
            .atoms
            .iter()
            .enumerate()
            .filter(|(idx, _)| self.members & (1 << idx) != 0)
            .map(|(_, a)| a)
    }
}

/// Evaluates `phi` with each atom replaced by its membership in `assignment`.
pub fn eval_under<T: Scalar>(phi: &ClockConstraint<T>, assignment: &AtomSet<T>) -> Result<bool> {
    if let Some(missing) = phi
        .atoms()
        .into_iter()
        .find(|a| assignment.universe.index_of(a).is_none())
    {
        return Err(Error::AtomOutsideUniverse {
            atom: missing.to_string(),
        });
    }
    Ok(phi.eval_with(&mut |a| assignment.contains(a).unwrap_or(false)))
}

/// The constraint asserting that exactly the atoms of `members` hold among `universe`.
pub fn xi<T: Scalar>(universe: &AtomUniverse<T>, members: u64) -> ClockConstraint<T> {
    let mut acc: Option<ClockConstraint<T>> = None;
    for (idx, atom) in universe.atoms.iter().enumerate() {
        let literal = if members & (1 << idx) != 0 {
            ClockConstraint::Atom(Arc::new(atom.clone()))
        } else {
            ClockConstraint::not(ClockConstraint::Atom(Arc::new(atom.clone())))
        };
        acc = Some(match acc {
            None => literal,
            Some(prev) => ClockConstraint::and(prev, literal),
        });
    }
    acc.unwrap_or(ClockConstraint::True)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exclusivity {
    ProvablyExclusive,
    PossiblyOverlapping,
}

/// Relaxed region of one clock's value relative to the sorted bounds mentioned for it.
#[derive(Clone, Copy, Debug)]
enum Region {
    Undefined,
    /// Exactly the bound with this index.
    At(usize),
    /// Strictly between bound `i - 1` and bound `i` (below the first bound when `i == 0`,
    /// above the last one when `i == bounds.len()`).
    Below(usize),
}

fn region_truth<T: Scalar>(bounds: &[T], region: Region, op: Cmp, tau: &T) -> bool {
    match region {
        Region::Undefined => false,
        Region::At(j) => match op {
            Cmp::Le => bounds[j] <= *tau,
            Cmp::Ge => bounds[j] >= *tau,
        },
        // Every value in the open interval is `<= tau` iff tau is at least its upper end,
        // and `>= tau` iff tau is at most its lower end.
        Region::Below(j) => match op {
            Cmp::Le => bounds.get(j).is_some_and(|upper| upper <= tau),
            Cmp::Ge => match j.checked_sub(1) {
                Some(lower) => bounds[lower] >= *tau,
                None => tau.is_zero() || *tau < T::zero(),
            },
        },
    }
}

/// Kleene evaluation with some atoms unknown (`None`).
fn eval3<T, F>(phi: &ClockConstraint<T>, truth: &F) -> Option<bool>
where
    F: Fn(&AtomicConstraint<T>) -> Option<bool>,
{
    match phi {
        ClockConstraint::True => Some(true),
        ClockConstraint::False => Some(false),
        ClockConstraint::Atom(a) => truth(a),
        ClockConstraint::Not(inner) => eval3(inner, truth).map(|b| !b),
        ClockConstraint::And(l, r) => match (eval3(l, truth), eval3(r, truth)) {
            (Some(false), _) | (_, Some(false)) => Some(false),
            (Some(true), Some(true)) => Some(true),
            _ => None,
        },
        ClockConstraint::Or(l, r) => match (eval3(l, truth), eval3(r, truth)) {
            (Some(true), _) | (_, Some(true)) => Some(true),
            (Some(false), Some(false)) => Some(false),
            _ => None,
        },
    }
}

/// Whether some relaxed valuation satisfies `phi`: each clock independently ranges over
/// `[0, inf)` plus "undefined", ignoring any correlation between clocks.
pub fn relaxed_satisfiable<T: Scalar>(phi: &ClockConstraint<T>) -> bool {
    let mut bounds: BTreeMap<Clock, Vec<T>> = BTreeMap::new();
    for atom in phi.atoms() {
        bounds.entry(atom.clock.clone()).or_default().push(atom.bound.clone());
    }
    let clocks: Vec<(Clock, Vec<T>)> = bounds
        .into_iter()
        .map(|(c, mut b)| {
            b.sort();
            b.dedup();
            (c, b)
        })
        .collect();
    let mut assigned: Vec<Option<Region>> = vec![None; clocks.len()];
    search(phi, &clocks, &mut assigned, 0)
}

fn search<T: Scalar>(
    phi: &ClockConstraint<T>,
    clocks: &[(Clock, Vec<T>)],
    assigned: &mut Vec<Option<Region>>,
    next: usize,
) -> bool {
    let verdict = eval3(phi, &|atom: &AtomicConstraint<T>| {
        let idx = clocks
            .binary_search_by(|(c, _)| c.cmp(&atom.clock))
            .expect("atom clock collected");
        assigned[idx].map(|r| region_truth(&clocks[idx].1, r, atom.op, &atom.bound))
    });
    match verdict {
        Some(result) => return result,
        None if next == clocks.len() => unreachable!("all clocks assigned yet undetermined"),
        None => {}
    }
    let bounds = &clocks[next].1;
    let mut regions = vec![Region::Undefined];
    for j in 0..bounds.len() {
        // [0, first bound) is empty when the first bound is zero.
        if j > 0 || !bounds[0].is_zero() {
            regions.push(Region::Below(j));
        }
        regions.push(Region::At(j));
    }
    regions.push(Region::Below(bounds.len()));
    for region in regions {
        assigned[next] = Some(region);
        if search(phi, clocks, assigned, next + 1) {
            assigned[next] = None;
            return true;
        }
    }
    assigned[next] = None;
    false
}

/// Sound check that `phi` and `psi` can never hold together: no relaxed valuation
/// satisfies both. `PossiblyOverlapping` is inconclusive.
pub fn mutually_exclusive<T: Scalar>(phi: &ClockConstraint<T>, psi: &ClockConstraint<T>) -> Exclusivity {
    let both = ClockConstraint::and(phi.clone(), psi.clone());
    if relaxed_satisfiable(&both) {
        Exclusivity::PossiblyOverlapping
    } else {
        Exclusivity::ProvablyExclusive
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Or,
    And,
    Unary,
}

impl<T: Scalar> ClockConstraint<T> {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, outer: Prec) -> fmt::Result {
        let (own, body): (Prec, Box<dyn Fn(&mut fmt::Formatter<'_>) -> fmt::Result + '_>) = match self {
            ClockConstraint::True => return f.write_str("true"),
            ClockConstraint::False => return f.write_str("false"),
            ClockConstraint::Atom(a) => return write!(f, "{a}"),
            ClockConstraint::Not(inner) => (
                Prec::Unary,
                Box::new(move |f| {
                    f.write_str("not ")?;
                    inner.fmt_prec(f, Prec::Unary)
                }),
            ),
            ClockConstraint::And(l, r) => (
                Prec::And,
                Box::new(move |f| {
                    l.fmt_prec(f, Prec::And)?;
                    f.write_str(" and ")?;
                    r.fmt_prec(f, Prec::Unary)
                }),
            ),
            ClockConstraint::Or(l, r) => (
                Prec::Or,
                Box::new(move |f| {
                    l.fmt_prec(f, Prec::Or)?;
                    f.write_str(" or ")?;
                    r.fmt_prec(f, Prec::And)
                }),
            ),
        };
        if own < outer {
            f.write_str("(")?;
            body(f)?;
            f.write_str(")")
        } else {
            body(f)
        }
    }
}

impl<T: Scalar> fmt::Display for ClockConstraint<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, Prec::Or)
    }
}

mod parser {
    use super::*;

    #[derive(Clone, Debug, PartialEq)]
    enum Tok {
        Clock(Clock),
        Op(Relation),
        Number(String),
        And,
        Or,
        Not,
        True,
        False,
        LParen,
        RParen,
    }

    fn err(column: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            line: 1,
            column,
            message: message.into(),
        }
    }

    fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let (byte, ch) = chars[i];
            let col = text[..byte].chars().count() + 1;
            if ch.is_whitespace() {
                i += 1;
                continue;
            }
            match ch {
                '(' => {
                    out.push((col, Tok::LParen));
                    i += 1;
                }
                ')' => {
                    out.push((col, Tok::RParen));
                    i += 1;
                }
                '<' | '>' | '=' => {
                    let next = chars.get(i + 1).map(|c| c.1);
                    let (tok, len) = match (ch, next) {
                        ('<', Some('=')) => (Relation::Le, 2),
                        ('>', Some('=')) => (Relation::Ge, 2),
                        ('<', _) => (Relation::Lt, 1),
                        ('>', _) => (Relation::Gt, 1),
                        _ => (Relation::Eq, if next == Some('=') { 2 } else { 1 }),
                    };
                    out.push((col, Tok::Op(tok)));
                    i += len;
                }
                c if c.is_ascii_digit() || c == '.' => {
                    let start = byte;
                    let mut j = i;
                    while j < chars.len() && (chars[j].1.is_ascii_digit() || matches!(chars[j].1, '.' | '/')) {
                        j += 1;
                    }
                    let end = chars.get(j).map_or(text.len(), |c| c.0);
                    out.push((col, Tok::Number(text[start..end].to_string())));
                    i = j;
                }
                c if c.is_alphabetic() || c == '_' => {
                    let start = byte;
                    let mut j = i;
                    while j < chars.len() && (chars[j].1.is_alphanumeric() || chars[j].1 == '_') {
                        j += 1;
                    }
                    let end = chars.get(j).map_or(text.len(), |c| c.0);
                    let word = &text[start..end];
                    i = j;
                    let tok = match word {
                        "and" => Tok::And,
                        "or" => Tok::Or,
                        "not" => Tok::Not,
                        "true" => Tok::True,
                        "false" => Tok::False,
                        "stackhist" => Tok::Clock(Clock::StackHistory),
                        "stackpred" => Tok::Clock(Clock::StackPrediction),
                        "hist" | "pred" => {
                            if chars.get(i).map(|c| c.1) != Some('(') {
                                return Err(err(col, format!("expected `(` after `{word}`")));
                            }
                            i += 1;
                            // A symbol runs to the next `)`; a leading `)` is the symbol `)` itself.
                            let sym_start = i;
                            let mut k = i;
                            if chars.get(k).map(|c| c.1) == Some(')') {
                                k += 1;
                            }
                            while k < chars.len() && chars[k].1 != ')' {
                                k += 1;
                            }
                            if k >= chars.len() {
                                return Err(err(col, "unterminated clock symbol"));
                            }
                            let s_byte = chars.get(sym_start).map_or(text.len(), |c| c.0);
                            let symbol = &text[s_byte..chars[k].0];
                            if symbol.is_empty() || symbol.chars().any(char::is_whitespace) {
                                return Err(err(col, format!("invalid clock symbol `{symbol}`")));
                            }
                            i = k + 1;
                            let symbol = Symbol::new(symbol);
                            Tok::Clock(if word == "hist" {
                                Clock::SymbolHistory(symbol)
                            } else {
                                Clock::SymbolPrediction(symbol)
                            })
                        }
                        other => return Err(err(col, format!("unknown word `{other}`"))),
                    };
                    out.push((col, tok));
                }
                other => return Err(err(col, format!("unexpected character `{other}`"))),
            }
        }
        Ok(out)
    }

    struct Parser<'a> {
        toks: &'a [(usize, Tok)],
        pos: usize,
        end_col: usize,
    }

    impl Parser<'_> {
        fn peek(&self) -> Option<&Tok> {
            self.toks.get(self.pos).map(|t| &t.1)
        }

        fn col(&self) -> usize {
            self.toks.get(self.pos).map_or(self.end_col, |t| t.0)
        }

        fn or<T: Scalar>(&mut self) -> Result<ClockConstraint<T>> {
            let mut lhs = self.and()?;
            while self.peek() == Some(&Tok::Or) {
                self.pos += 1;
                lhs = ClockConstraint::or(lhs, self.and()?);
            }
            Ok(lhs)
        }

        fn and<T: Scalar>(&mut self) -> Result<ClockConstraint<T>> {
            let mut lhs = self.unary()?;
            while self.peek() == Some(&Tok::And) {
                self.pos += 1;
                lhs = ClockConstraint::and(lhs, self.unary()?);
            }
            Ok(lhs)
        }

        fn unary<T: Scalar>(&mut self) -> Result<ClockConstraint<T>> {
            let col = self.col();
            match self.toks.get(self.pos).map(|t| t.1.clone()) {
                Some(Tok::Not) => {
                    self.pos += 1;
                    Ok(ClockConstraint::not(self.unary()?))
                }
                Some(Tok::True) => {
                    self.pos += 1;
                    Ok(ClockConstraint::True)
                }
                Some(Tok::False) => {
                    self.pos += 1;
                    Ok(ClockConstraint::False)
                }
                Some(Tok::LParen) => {
                    self.pos += 1;
                    let inner = self.or()?;
                    if self.peek() != Some(&Tok::RParen) {
                        return Err(err(self.col(), "expected `)`"));
                    }
                    self.pos += 1;
                    Ok(inner)
                }
                Some(Tok::Clock(clock)) => {
                    self.pos += 1;
                    let Some(Tok::Op(rel)) = self.peek().cloned() else {
                        return Err(err(self.col(), "expected comparison operator"));
                    };
                    self.pos += 1;
                    let num_col = self.col();
                    let Some(Tok::Number(num)) = self.peek().cloned() else {
                        return Err(err(num_col, "expected a constant"));
                    };
                    self.pos += 1;
                    let bound = T::parse_scalar(&num).map_err(|_| err(num_col, format!("invalid constant `{num}`")))?;
                    desugar(rel, clock, bound).map_err(|e| err(num_col, e.to_string()))
                }
                Some(other) => Err(err(col, format!("unexpected token {other:?}"))),
                None => Err(err(col, "unexpected end of guard")),
            }
        }
    }

    pub(super) fn parse<T: Scalar>(text: &str) -> Result<ClockConstraint<T>> {
        let toks = lex(text)?;
        let mut p = Parser {
            toks: &toks,
            pos: 0,
            end_col: text.chars().count() + 1,
        };
        let out = p.or()?;
        if p.pos != toks.len() {
            return Err(err(p.col(), "trailing input"));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timed::Alphabet;
    use num_rational::BigRational;

    type Q = BigRational;
    type C = ClockConstraint<Q>;

    fn q(s: &str) -> Q {
        Q::parse_scalar(s).unwrap()
    }

    fn example_one() -> TimedString<Q> {
        let alphabet = Arc::new(Alphabet::new(["<"], [">"], ["c", "d"]).unwrap());
        TimedString::from_literals(
            alphabet,
            &[
                ("c", "0.1"),
                ("<", "0.2"),
                ("<", "0.4"),
                ("c", "0.5"),
                (">", "0.7"),
                (">", "0.8"),
                ("d", "1"),
            ],
        )
        .unwrap()
    }

    fn hist(a: &str) -> Clock {
        Clock::SymbolHistory(a.into())
    }

    fn pred(a: &str) -> Clock {
        Clock::SymbolPrediction(a.into())
    }

    fn atom(c: Clock, op: Cmp, b: &str) -> AtomicConstraint<Q> {
        AtomicConstraint::new(c, op, q(b)).unwrap()
    }

    #[test]
    fn example_one_constraints() {
        let w = example_one();
        let first = C::or(
            desugar(Relation::Gt, Clock::StackHistory, q("0.1")).unwrap(),
            C::atom(pred("c"), Cmp::Ge, q("0")).unwrap(),
        );
        assert!(first.eval(&w, 6).unwrap());
        let second = C::and(
            desugar(Relation::Gt, hist("c"), q("0.1")).unwrap(),
            desugar(Relation::Lt, pred("d"), q("0.2")).unwrap(),
        );
        assert!(!second.eval(&w, 6).unwrap());
        // Same constraints through the guard grammar.
        let parsed = C::parse("stackhist > 0.1 or pred(c) >= 0").unwrap();
        assert!(parsed.eval(&w, 6).unwrap());
        let parsed = C::parse("hist(c) > 0.1 and pred(d) < 0.2").unwrap();
        assert!(!parsed.eval(&w, 6).unwrap());
    }

    #[test]
    fn negated_undefined_atom_is_true() {
        let w = example_one();
        let phi = C::not(C::atom(hist("z"), Cmp::Le, q("5")).unwrap());
        for i in 1..=w.len() {
            assert!(phi.eval(&w, i).unwrap());
        }
    }

    #[test]
    fn desugar_shapes() {
        let c = Clock::StackHistory;
        assert_eq!(
            desugar(Relation::Lt, c.clone(), q("1")).unwrap(),
            C::and(
                C::atom(c.clone(), Cmp::Le, q("1")).unwrap(),
                C::not(C::atom(c.clone(), Cmp::Ge, q("1")).unwrap())
            )
        );
        assert_eq!(
            desugar(Relation::Eq, c.clone(), q("0")).unwrap(),
            C::and(
                C::atom(c.clone(), Cmp::Le, q("0")).unwrap(),
                C::atom(c.clone(), Cmp::Ge, q("0")).unwrap()
            )
        );
        let lt = desugar(Relation::Lt, c, q("1")).unwrap();
        assert!(lt.eval(&example_one(), 6).unwrap());
        assert!(desugar(Relation::Lt, Clock::StackHistory, q("-1")).is_err());
    }

    #[test]
    fn atoms_collapse_duplicates() {
        let a = atom(hist("a"), Cmp::Le, "1");
        let b = atom(pred("b"), Cmp::Ge, "2");
        assert_eq!(C::Atom(Arc::new(a.clone())).atoms(), BTreeSet::from([a.clone()]));
        assert_eq!(
            C::and(C::Atom(Arc::new(a.clone())), C::not(C::Atom(Arc::new(a.clone())))).atoms(),
            BTreeSet::from([a.clone()])
        );
        let phi = C::or(C::Atom(Arc::new(a.clone())), C::and(C::Atom(Arc::new(b.clone())), C::True));
        assert_eq!(phi.atoms(), BTreeSet::from([a, b]));
    }

    #[test]
    fn eval_under_examples() {
        let a = atom(hist("a"), Cmp::Le, "1");
        let b = atom(hist("b"), Cmp::Le, "1");
        let only_a = Arc::new(AtomUniverse::new([a.clone()]));
        let s = AtomSet::new(only_a.clone(), [&a]).unwrap();
        assert!(eval_under(&C::Atom(Arc::new(a.clone())), &s).unwrap());

        let ab = Arc::new(AtomUniverse::new([a.clone(), b.clone()]));
        let s = AtomSet::new(ab, [&b]).unwrap();
        assert!(eval_under(&C::not(C::Atom(Arc::new(a.clone()))), &s).unwrap());

        let s = AtomSet::from_mask(only_a, 1).unwrap();
        assert!(matches!(
            eval_under(&C::Atom(Arc::new(b)), &s),
            Err(Error::AtomOutsideUniverse { .. })
        ));
    }

    #[test]
    fn xi_examples() {
        let empty = AtomUniverse::<Q>::new([]);
        assert_eq!(xi(&empty, 0), C::True);
        let a = atom(hist("a"), Cmp::Le, "1");
        let single = AtomUniverse::new([a.clone()]);
        assert_eq!(xi(&single, 0), C::not(C::Atom(Arc::new(a))));
    }

    #[test]
    fn universe_is_canonically_sorted() {
        let u = AtomUniverse::new([
            atom(Clock::StackPrediction, Cmp::Le, "1"),
            atom(hist("b"), Cmp::Ge, "1"),
            atom(hist("a"), Cmp::Le, "2"),
            atom(hist("a"), Cmp::Le, "1"),
            atom(pred("a"), Cmp::Le, "0"),
            atom(hist("a"), Cmp::Le, "1"),
        ]);
        let text: Vec<String> = u.atoms().iter().map(|a| a.to_string()).collect();
        assert_eq!(
            text,
            [
                "hist(a) <= 1",
                "hist(a) <= 2",
                "hist(b) >= 1",
                "pred(a) <= 0",
                "stackpred <= 1"
            ]
        );
    }

    #[test]
    fn exclusivity_examples() {
        let c = hist("a");
        let le = C::atom(c.clone(), Cmp::Le, q("1")).unwrap();
        let gt = desugar(Relation::Gt, c.clone(), q("1")).unwrap();
        assert_eq!(mutually_exclusive(&le, &gt), Exclusivity::ProvablyExclusive);
        let other = C::atom(hist("b"), Cmp::Le, q("1")).unwrap();
        assert_eq!(mutually_exclusive(&le, &other), Exclusivity::PossiblyOverlapping);
        // `= 1` overlaps `<= 1` at the point 1.
        let eq = desugar(Relation::Eq, c.clone(), q("1")).unwrap();
        assert_eq!(mutually_exclusive(&le, &eq), Exclusivity::PossiblyOverlapping);
        // `< 0` is empty on nonnegative values but still relaxed to `[0, 0)`: empty.
        let lt0 = desugar(Relation::Lt, c.clone(), q("0")).unwrap();
        assert_eq!(mutually_exclusive(&lt0, &C::True), Exclusivity::ProvablyExclusive);
        // Undefined satisfies the negation of every atom.
        let neg = C::not(C::atom(c.clone(), Cmp::Ge, q("0")).unwrap());
        assert_eq!(mutually_exclusive(&neg, &C::not(le.clone())), Exclusivity::PossiblyOverlapping);
        assert_eq!(mutually_exclusive(&C::False, &C::True), Exclusivity::ProvablyExclusive);
        // Open interval between two bounds.
        let between = C::and(
            desugar(Relation::Gt, c.clone(), q("1")).unwrap(),
            desugar(Relation::Lt, c.clone(), q("2")).unwrap(),
        );
        assert_eq!(mutually_exclusive(&between, &C::True), Exclusivity::PossiblyOverlapping);
        let none_between = C::and(
            desugar(Relation::Gt, c.clone(), q("1")).unwrap(),
            C::atom(c, Cmp::Le, q("1")).unwrap(),
        );
        assert_eq!(mutually_exclusive(&none_between, &C::True), Exclusivity::ProvablyExclusive);
    }

    #[test]
    fn xi_pairs_are_exclusive_exhaustively() {
        let u = AtomUniverse::new([
            atom(hist("a"), Cmp::Le, "1"),
            atom(hist("a"), Cmp::Ge, "1"),
            atom(Clock::StackHistory, Cmp::Le, "2"),
        ]);
        for size in 0..=3 {
            let sub = AtomUniverse::new(u.atoms()[..size].iter().cloned());
            for s in 0..(1u64 << size) {
                for t in 0..(1u64 << size) {
                    let verdict = mutually_exclusive(&xi(&sub, s), &xi(&sub, t));
                    if s == t {
                        // xi(S) with S={hist(a)>=1} and not hist(a)<=1 is satisfiable, and so on:
                        // every xi over these atoms is relaxed-satisfiable.
                        assert_eq!(verdict, Exclusivity::PossiblyOverlapping, "{s} {t}");
                    } else {
                        assert_eq!(verdict, Exclusivity::ProvablyExclusive, "{s} {t}");
                    }
                }
            }
        }
    }

    #[test]
    fn guard_grammar_round_trip() {
        for text in [
            "true",
            "false",
            "hist(e1) <= 1",
            "hist(e1) <= 1 and not hist(e1) >= 1",
            "(hist(a) <= 1 or pred(b) >= 1/3) and stackpred >= 2",
            "not (stackhist <= 0.5 and hist(<) >= 1)",
            "hist()) <= 1 or pred(#) >= 0",
        ] {
            let parsed = C::parse(text).unwrap();
            let printed = parsed.to_string();
            assert_eq!(C::parse(&printed).unwrap(), parsed, "{text} -> {printed}");
        }
        let guard = C::parse("hist(e1) < 1 and not stackpred >= 2").unwrap();
        assert_eq!(
            guard,
            C::and(
                desugar(Relation::Lt, hist("e1"), q("1")).unwrap(),
                C::not(C::atom(Clock::StackPrediction, Cmp::Ge, q("2")).unwrap())
            )
        );
        assert_eq!(
            C::parse("hist(a) = 2").unwrap(),
            desugar(Relation::Eq, hist("a"), q("2")).unwrap()
        );
    }

    #[test]
    fn guard_grammar_precedence() {
        let a = C::atom(hist("a"), Cmp::Le, q("1")).unwrap();
        let b = C::atom(hist("b"), Cmp::Le, q("1")).unwrap();
        let c = C::atom(hist("c"), Cmp::Le, q("1")).unwrap();
        assert_eq!(
            C::parse("hist(a) <= 1 or hist(b) <= 1 and hist(c) <= 1").unwrap(),
            C::or(a.clone(), C::and(b.clone(), c.clone()))
        );
        assert_eq!(
            C::parse("not hist(a) <= 1 and hist(b) <= 1").unwrap(),
            C::and(C::not(a), b)
        );
    }

    #[test]
    fn guard_grammar_errors() {
        for bad in ["", "hist(a)", "hist(a) <= ", "hist a <= 1", "foo", "true and", "(true", "hist(a) <= -1", "stackhist <= 1 1"] {
            assert!(C::parse(bad).is_err(), "{bad:?} should fail");
        }
        match C::parse("true and bogus").unwrap_err() {
            Error::Parse { column, .. } => assert_eq!(column, 10),
            other => panic!("{other:?}"),
        }
    }
}
