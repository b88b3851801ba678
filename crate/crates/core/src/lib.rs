//! Event-clock input-driven pushdown automata over timed strings.
//!
//! The model is generic over the timestamp scalar ([`Scalar`]); exact rationals
//! ([`Rational`]) are the default everywhere numbers come from files, and float
//! instantiations exist for quick experiments.

pub mod automaton;
pub mod cli;
pub mod constraint;
pub mod determinize;
pub mod error;
pub mod gen;
pub mod scalar;
pub mod timed;
pub mod witness;

use ordered_float::OrderedFloat;

pub use automaton::{Action, Configuration, Determinism, Ecidpda, Pop, Rule, RunResult, Simulator, UntimedRule};
pub use constraint::{AtomSet, AtomUniverse, AtomicConstraint, ClockConstraint, Cmp, Exclusivity, Relation};
pub use determinize::{
    determinize_direct, determinize_no_stack_prediction, determinize_untimed, pair_semantics_oracle, Determinized,
    Mode,
};
pub use error::{Error, Result};
pub use scalar::Scalar;
pub use timed::{Alphabet, Clock, Event, Matching, Symbol, SymbolKind, TimedString};

pub type Rational = num_rational::BigRational;

pub type TimedStringQ = TimedString<Rational>;
pub type EcidpdaQ = Ecidpda<Rational>;
pub type ClockConstraintQ = ClockConstraint<Rational>;

pub type TimedStringF64 = TimedString<OrderedFloat<f64>>;
pub type EcidpdaF64 = Ecidpda<OrderedFloat<f64>>;
pub type TimedStringF32 = TimedString<OrderedFloat<f32>>;
pub type EcidpdaF32 = Ecidpda<OrderedFloat<f32>>;
