use std::collections::BTreeSet;

use crate::automaton::{Configuration, Ecidpda, StateId};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::timed::{longest_well_nested_suffix_start, TimedString};

/// Brute-force meaning of a pair-set state after the first `i` symbols of `w`: the pairs
/// `(p, q)` such that some computation is in `p` where the longest well-nested suffix of
/// the prefix begins, and in `q` at its end. Clocks are evaluated on all of `w`.
pub fn pair_semantics_oracle<T: Scalar>(
    automaton: &Ecidpda<T>,
    w: &TimedString<T>,
    i: usize,
) -> Result<BTreeSet<(StateId, StateId)>> {
    if i > w.len() {
        return Err(Error::PositionOutOfRange { position: i, len: w.len() });
    }
    let sim = automaton.simulator();
    sim.check_string(w)?;
    let start = longest_well_nested_suffix_start(w, i);
    let mut configs = sim.initial_configurations();
    for pos in 1..start {
        configs = sim.step(&configs, w, pos);
    }
    let mut anchored: BTreeSet<(StateId, Configuration)> = configs.into_iter().map(|c| (c.state, c)).collect();
    for pos in start..=i {
        let mut next = BTreeSet::new();
        for (anchor, config) in &anchored {
            for c in sim.step(&[config.clone()].into(), w, pos) {
                next.insert((*anchor, c));
            }
        }
        anchored = next;
    }
    Ok(anchored.into_iter().map(|(p, c)| (p, c.state)).collect())
}

/// States of all configurations reachable after reading the whole of `w`.
pub fn survivor_oracle<T: Scalar>(automaton: &Ecidpda<T>, w: &TimedString<T>) -> Result<BTreeSet<StateId>> {
    Ok(automaton.simulate(w)?.final_states())
}
