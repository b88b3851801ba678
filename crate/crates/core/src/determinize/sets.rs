//! Bitset-backed state sets and pair sets with canonical text forms.

use std::fmt::Write;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(len: usize) -> Self {
        Bits(vec![0; len.div_ceil(64)])
    }

    fn insert(&mut self, idx: usize) -> bool {
        let (w, b) = (idx / 64, idx % 64);
        let fresh = self.0[w] & (1 << b) == 0;
        self.0[w] |= 1 << b;
        fresh
    }

    fn contains(&self, idx: usize) -> bool {
        self.0.get(idx / 64).is_some_and(|w| w & (1 << (idx % 64)) != 0)
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                (rest != 0).then(|| {
                    let b = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    w * 64 + b
                })
            })
        })
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// A subset of the source automaton's states.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateSet {
    n: usize,
    bits: Bits,
}

impl StateSet {
    pub fn empty(n: usize) -> Self {
        StateSet { n, bits: Bits::new(n) }
    }

    pub fn from_states<I: IntoIterator<Item = usize>>(n: usize, states: I) -> Self {
        let mut set = StateSet::empty(n);
        for q in states {
            set.insert(q);
        }
        set
    }

    pub fn insert(&mut self, q: usize) -> bool {
        assert!(q < self.n);
        self.bits.insert(q)
    }

    pub fn contains(&self, q: usize) -> bool {
        self.bits.contains(q)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter()
    }

    pub fn len(&self) -> usize {
        self.bits.count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn label(&self, names: &[String]) -> String {
        let inner: Vec<&str> = self.iter().map(|q| names[q].as_str()).collect();
        format!("R{{{}}}", inner.join(","))
    }
}

/// A set of pairs `(anchor, current)` of source states.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairSet {
    n: usize,
    bits: Bits,
}

impl PairSet {
    pub fn empty(n: usize) -> Self {
        PairSet {
            n,
            bits: Bits::new(n * n),
        }
    }

    pub fn diagonal<I: IntoIterator<Item = usize>>(n: usize, states: I) -> Self {
        let mut set = PairSet::empty(n);
        for q in states {
            set.insert(q, q);
        }
        set
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, usize)>>(n: usize, pairs: I) -> Self {
        let mut set = PairSet::empty(n);
        for (p, q) in pairs {
            set.insert(p, q);
        }
        set
    }

    pub fn num_source_states(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, p: usize, q: usize) -> bool {
        assert!(p < self.n && q < self.n);
        self.bits.insert(p * self.n + q)
    }

    pub fn contains(&self, p: usize, q: usize) -> bool {
        p < self.n && q < self.n && self.bits.contains(p * self.n + q)
    }

    /// Pairs in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        self.bits.iter().map(move |idx| (idx / n, idx % n))
    }

    /// Current states paired with anchor `p`.
    pub fn row(&self, p: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&q| self.contains(p, q))
    }

    pub fn len(&self) -> usize {
        self.bits.count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn second_components(&self) -> StateSet {
        StateSet::from_states(self.n, self.iter().map(|(_, q)| q))
    }

    pub fn label(&self, names: &[String]) -> String {
        let mut out = String::from("P{");
        for (idx, (p, q)) in self.iter().enumerate() {
            if idx > 0 {
                out.push(',');
            }
            write!(out, "({},{})", names[p], names[q]).expect("string write");
        }
        out.push('}');
        out
    }
}
