//! Command implementations behind the `ecidpda` binary. Each returns a serializable
//! report; the binary only parses arguments, prints, and maps outcomes to exit codes.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::automaton::Ecidpda;
use crate::constraint::AtomUniverse;
use crate::determinize::{
    determinize_direct_with, determinize_no_stack_prediction_with, determinize_untimed, pair_semantics_oracle,
    uses_stack_prediction, Mode, Options, SizeReport,
};
use crate::error::{Error, Result};
use crate::gen::{random_automaton, random_timed_string, string_seed, GenConfig};
use crate::timed::{Alphabet, TimedString};
use crate::witness::{
    all_event_sets, all_relations, all_specs, build_well_formed, build_witness_nfa, distinguishing_suffix,
    is_left_right_total, is_valid, Continuation, Side, TimingScheme, WitnessSpec,
};
use crate::{EcidpdaQ, Rational, TimedStringQ};

pub fn load_automaton(path: &Path) -> Result<EcidpdaQ> {
    Ecidpda::parse_json(&fs::read_to_string(path)?)
}

/// A timed string in JSON (it carries its own alphabet) or in the line format, which
/// uses `alphabet`.
pub fn load_string(path: &Path, alphabet: &std::sync::Arc<Alphabet>) -> Result<TimedStringQ> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        TimedString::parse_json(&text)
    } else {
        TimedString::parse_text(alphabet.clone(), &text)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceStep {
    pub position: usize,
    pub symbol: Option<String>,
    pub time: Option<String>,
    pub configurations: usize,
    pub states: Vec<String>,
    pub stack_heights: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub accepted: bool,
    /// One entry per prefix length, starting with the empty prefix.
    pub steps: Vec<TraceStep>,
    pub elapsed_ms: f64,
}

pub fn cmd_run(automaton: &EcidpdaQ, w: &TimedStringQ) -> Result<RunReport> {
    let start = Instant::now();
    let result = automaton.simulate(w)?;
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    let steps = result
        .steps
        .iter()
        .enumerate()
        .map(|(i, step)| TraceStep {
            position: i,
            symbol: (i > 0).then(|| w.symbol(i).to_string()),
            time: (i > 0).then(|| crate::scalar::Scalar::to_text(w.time(i))),
            configurations: step.configurations,
            states: step.states.iter().map(|&q| automaton.states()[q].clone()).collect(),
            stack_heights: step.stack_heights.iter().copied().collect(),
        })
        .collect();
    Ok(RunReport {
        accepted: result.accepted,
        steps,
        elapsed_ms,
    })
}

impl RunReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for step in &self.steps {
            let head = match (&step.symbol, &step.time) {
                (Some(s), Some(t)) => format!("{:>3} {s} @ {t}", step.position),
                _ => format!("{:>3} (start)", step.position),
            };
            out.push_str(&format!(
                "{head}: {} configuration(s), states {{{}}}, stack height {:?}\n",
                step.configurations,
                step.states.join(", "),
                step.stack_heights
            ));
        }
        out.push_str(if self.accepted { "accept\n" } else { "reject\n" });
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DeterminizeReport {
    pub mode: String,
    pub source_states: usize,
    pub source_stack_symbols: usize,
    pub source_atoms: usize,
    pub states: usize,
    pub stack_symbols: usize,
    pub transitions: usize,
    pub guards: usize,
    pub state_bound: String,
    pub stack_bound: String,
    pub within_bounds: bool,
    pub deterministic: bool,
    pub stack_prediction_free: bool,
}

impl DeterminizeReport {
    fn new(size: &SizeReport, output: &EcidpdaQ) -> Self {
        let n = size.source_states;
        let k = size.source_atoms;
        let (state_bound, stack_bound) = match size.mode {
            Mode::Untimed => (format!("2^{}", n * n), format!("{}*2^{}", size.calls, n * n)),
            Mode::Direct => (format!("2^{}", n * n), format!("{}*2^{}", size.calls, n * n + k)),
            Mode::NoStackPrediction => (format!("2^{}", n * n + n), format!("{}*2^{}", size.calls, n * n + n + k)),
        };
        DeterminizeReport {
            mode: size.mode.name().into(),
            source_states: n,
            source_stack_symbols: size.source_stack_symbols,
            source_atoms: k,
            states: size.states,
            stack_symbols: size.stack_symbols,
            transitions: size.transitions,
            guards: size.guards,
            state_bound,
            stack_bound,
            within_bounds: size.state_bound_ok && size.stack_bound_ok,
            deterministic: output.is_deterministic().is_deterministic(),
            stack_prediction_free: !uses_stack_prediction(output),
        }
    }

    pub fn render(&self) -> String {
        format!(
            "mode: {}\nsource: {} states, {} stack symbols, {} atoms\noutput: {} states (bound {}), {} stack symbols (bound {}), {} transitions, {} distinct guards\nwithin bounds: {}\ndeterministic: {}\nstackpred-free: {}\n",
            self.mode,
            self.source_states,
            self.source_stack_symbols,
            self.source_atoms,
            self.states,
            self.state_bound,
            self.stack_symbols,
            self.stack_bound,
            self.transitions,
            self.guards,
            self.within_bounds,
            self.deterministic,
            self.stack_prediction_free
        )
    }
}

/// A determinized automaton with its size report, whatever the construction.
pub struct Output {
    pub automaton: EcidpdaQ,
    pub size: SizeReport,
}

pub fn determinize(automaton: &EcidpdaQ, mode: Mode, options: Options) -> Result<Output> {
    Ok(match mode {
        Mode::Untimed => {
            let d = determinize_untimed(automaton)?;
            let size = SizeReport::new(mode, automaton, &d);
            Output {
                automaton: d.automaton,
                size,
            }
        }
        Mode::Direct => {
            let d = determinize_direct_with(automaton, options)?;
            let size = SizeReport::new(mode, automaton, &d);
            Output {
                automaton: d.automaton,
                size,
            }
        }
        Mode::NoStackPrediction => {
            let d = determinize_no_stack_prediction_with(automaton, options)?;
            let size = SizeReport::new(mode, automaton, &d);
            Output {
                automaton: d.automaton,
                size,
            }
        }
    })
}

pub fn cmd_determinize(automaton: &EcidpdaQ, mode: Mode, options: Options, output: Option<&Path>) -> Result<DeterminizeReport> {
    let out = determinize(automaton, mode, options)?;
    if let Some(path) = output {
        fs::write(path, out.automaton.to_json())?;
    }
    Ok(DeterminizeReport::new(&out.size, &out.automaton))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub automaton_seed: u64,
    pub string_seed: u64,
    pub source: bool,
    pub determinized: bool,
}

/// Outcome of one random automaton against its strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrialOutcome {
    pub automaton_seed: u64,
    pub mismatches: Vec<Mismatch>,
    pub deterministic: bool,
    pub within_bounds: bool,
    pub stack_prediction_free: bool,
    /// Largest configuration count the determinized run held at any position.
    pub max_configurations: usize,
    pub states: usize,
    pub stack_symbols: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiffReport {
    pub mode: String,
    pub seed: u64,
    pub trials: usize,
    pub strings_per_trial: usize,
    pub mismatches: Vec<Mismatch>,
    /// Automaton seeds whose output failed the determinism check.
    pub nondeterministic: Vec<u64>,
    /// Automaton seeds whose output exceeded the size bounds.
    pub over_bound: Vec<u64>,
    pub max_configurations: usize,
    pub max_states: usize,
    pub max_stack_symbols: usize,
}

impl DiffReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() && self.nondeterministic.is_empty() && self.over_bound.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "mode {} seed {}: {} automata x {} strings, {} mismatch(es), {} nondeterministic output(s), {} over bound; largest output {} states / {} stack symbols; max configurations {}\n",
            self.mode,
            self.seed,
            self.trials,
            self.strings_per_trial,
            self.mismatches.len(),
            self.nondeterministic.len(),
            self.over_bound.len(),
            self.max_states,
            self.max_stack_symbols,
            self.max_configurations
        );
        for m in &self.mismatches {
            out.push_str(&format!(
                "  automaton seed {} string seed {}: source {} determinized {}\n",
                m.automaton_seed, m.string_seed, m.source, m.determinized
            ));
        }
        out
    }
}

pub fn gen_config(mode: Mode) -> GenConfig {
    match mode {
        Mode::Untimed => GenConfig::untimed(),
        _ => GenConfig::timed(),
    }
}

/// Seed of the `i`-th automaton of a run.
pub fn automaton_seed(seed: u64, i: u64) -> u64 {
    string_seed(seed ^ 0x5851_f42d_4c95_7f2d, i)
}

/// Determinizes one random automaton and compares verdicts on `strings` random strings.
pub fn diff_trial(mode: Mode, automaton_seed: u64, strings: usize, config: &GenConfig) -> Result<TrialOutcome> {
    let source: EcidpdaQ = random_automaton(automaton_seed, config);
    let out = determinize(&source, mode, Options::default())?;
    let (src, det) = (source.simulator(), out.automaton.simulator());
    let mut mismatches = Vec::new();
    let mut max_configurations = 0;
    for j in 0..strings as u64 {
        let seed = string_seed(automaton_seed, j);
        let w: TimedStringQ = random_timed_string(seed, source.alphabet(), config.max_string_len);
        let expected = src.run(&w)?.accepted;
        let got = det.run(&w)?;
        max_configurations = max_configurations.max(got.max_configurations());
        if expected != got.accepted {
            mismatches.push(Mismatch {
                automaton_seed,
                string_seed: seed,
                source: expected,
                determinized: got.accepted,
            });
        }
    }
    Ok(TrialOutcome {
        automaton_seed,
        mismatches,
        deterministic: out.automaton.is_deterministic().is_deterministic(),
        within_bounds: out.size.state_bound_ok && out.size.stack_bound_ok,
        stack_prediction_free: !uses_stack_prediction(&out.automaton),
        max_configurations,
        states: out.size.states,
        stack_symbols: out.size.stack_symbols,
    })
}

/// Trials run in parallel; the report lists everything in seed order, so a run is a
/// function of `(mode, trials, strings, seed)` only.
pub fn cmd_diff(mode: Mode, trials: usize, strings: usize, seed: u64) -> Result<DiffReport> {
    let config = gen_config(mode);
    let mut outcomes = (0..trials as u64)
        .into_par_iter()
        .map(|i| diff_trial(mode, automaton_seed(seed, i), strings, &config))
        .collect::<Result<Vec<_>>>()?;
    outcomes.sort_by_key(|o| o.automaton_seed);
    Ok(DiffReport {
        mode: mode.name().into(),
        seed,
        trials,
        strings_per_trial: strings,
        mismatches: outcomes.iter().flat_map(|o| o.mismatches.iter().cloned()).collect(),
        nondeterministic: outcomes.iter().filter(|o| !o.deterministic).map(|o| o.automaton_seed).collect(),
        over_bound: outcomes.iter().filter(|o| !o.within_bounds).map(|o| o.automaton_seed).collect(),
        max_configurations: outcomes.iter().map(|o| o.max_configurations).max().unwrap_or(0),
        max_states: outcomes.iter().map(|o| o.states).max().unwrap_or(0),
        max_stack_symbols: outcomes.iter().map(|o| o.stack_symbols).max().unwrap_or(0),
    })
}

/// Compares the pair set of the direct determinization against the brute-force oracle
/// after every prefix of every string. Returns the first disagreement.
pub fn check_pair_semantics(source: &EcidpdaQ, strings: &[TimedStringQ]) -> Result<Option<String>> {
    let d = determinize_direct_with(source, Options::default())?;
    let sim = d.automaton.simulator();
    for w in strings {
        let run = sim.run(w)?;
        for (i, step) in run.steps.iter().enumerate() {
            let oracle = pair_semantics_oracle(source, w, i)?;
            let state = step.states.iter().next().copied();
            let pairs: std::collections::BTreeSet<(usize, usize)> =
                state.map(|q| d.states[q].iter().collect()).unwrap_or_default();
            // A dead run means no computation survives, which the oracle reports as empty.
            if pairs != oracle {
                return Ok(Some(format!("string {:?} prefix {i}: automaton {pairs:?}, oracle {oracle:?}", w.word())));
            }
        }
    }
    Ok(None)
}

/// Compares the survivor set after each whole string against the states of the
/// source's final configurations.
pub fn check_survivors(source: &EcidpdaQ, strings: &[TimedStringQ]) -> Result<Option<String>> {
    let d = crate::determinize::determinize_no_stack_prediction(source)?;
    let sim = d.automaton.simulator();
    for w in strings {
        let run = sim.run(w)?;
        let survivors: std::collections::BTreeSet<usize> = run
            .final_states()
            .iter()
            .flat_map(|&q| d.states[q].survivors.iter())
            .collect();
        let oracle = crate::determinize::survivor_oracle(source, w)?;
        if survivors != oracle {
            return Ok(Some(format!("string {:?}: survivors {survivors:?}, oracle {oracle:?}", w.word())));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessRow {
    pub spec: String,
    pub valid: bool,
    pub nfa: bool,
    pub determinized: bool,
}

impl WitnessRow {
    pub fn agrees(&self) -> bool {
        self.valid == self.nfa && self.valid == self.determinized
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    pub n: usize,
    pub k: usize,
    pub nfa_states: usize,
    pub nfa_stack_symbols: usize,
    pub determinized_states: usize,
    pub determinized_stack_symbols: usize,
    pub rows: Vec<WitnessRow>,
    pub disagreements: usize,
}

impl WitnessReport {
    pub fn render(&self, all_rows: bool) -> String {
        let mut out = format!(
            "witness n={} k={}: NFA {} states, {} stack symbols; determinized {} states, {} stack symbols\n",
            self.n, self.k, self.nfa_states, self.nfa_stack_symbols, self.determinized_states, self.determinized_stack_symbols
        );
        out.push_str("spec | valid | nfa | determinized\n");
        for row in self.rows.iter().filter(|r| all_rows || !r.agrees()) {
            out.push_str(&format!(
                "{} | {} | {} | {}{}\n",
                row.spec,
                row.valid,
                row.nfa,
                row.determinized,
                if row.agrees() { "" } else { "  <-- disagreement" }
            ));
        }
        out.push_str(&format!("{} string(s), {} disagreement(s)\n", self.rows.len(), self.disagreements));
        out
    }
}

pub const MAX_EXHAUSTIVE: (usize, usize, usize) = (3, 2, 2);

pub fn spec_label(spec: &WitnessSpec) -> String {
    let sets = |v: &[crate::witness::EventSet]| {
        v.iter()
            .map(|s| format!("{{{}}}", s.iter().map(|e| format!("e{e}")).collect::<Vec<_>>().join(",")))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let rels = spec
        .r
        .iter()
        .map(|r| format!("{{{}}}", r.iter().map(|(p, q)| format!("({p},{q})")).collect::<Vec<_>>().join(",")))
        .collect::<Vec<_>>()
        .join(" ");
    format!("s={:?} R={rels} X={} Y={}", spec.s, sets(&spec.x), sets(&spec.y))
}

/// Verdicts of the checker and of its direct determinization on each spec's string.
pub fn cmd_witness(n: usize, k: usize, specs: &[WitnessSpec], scheme: &TimingScheme<Rational>) -> Result<(WitnessReport, EcidpdaQ)> {
    let nfa: EcidpdaQ = build_witness_nfa(n, k)?;
    let det = determinize_direct_with(&nfa, Options::default())?;
    let (sn, sd) = (nfa.simulator(), det.automaton.simulator());
    let rows = specs
        .par_iter()
        .map(|spec| {
            let w = build_well_formed(spec, scheme)?;
            Ok(WitnessRow {
                spec: spec_label(spec),
                valid: is_valid(spec),
                nfa: sn.run(&w)?.accepted,
                determinized: sd.run(&w)?.accepted,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let disagreements = rows.iter().filter(|r| !r.agrees()).count();
    Ok((
        WitnessReport {
            n,
            k,
            nfa_states: nfa.num_states(),
            nfa_stack_symbols: nfa.stack_symbols().len(),
            determinized_states: det.automaton.num_states(),
            determinized_stack_symbols: det.stack_symbols.len(),
            rows,
            disagreements,
        },
        nfa,
    ))
}

pub fn exhaustive_specs(n: usize, k: usize, m: usize) -> Result<Vec<WitnessSpec>> {
    let (mn, mk, mm) = MAX_EXHAUSTIVE;
    if n == 0 || k == 0 || m == 0 || n > mn || k > mk || m > mm {
        return Err(Error::WitnessSpec(format!(
            "exhaustive mode needs 1 <= n <= {mn}, 1 <= k <= {mk}, 1 <= m <= {mm}"
        )));
    }
    Ok(all_specs(n, k, m))
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationCase {
    pub first: String,
    pub second: String,
    pub suffix: String,
    pub valid_side: String,
    pub first_verdict: bool,
    pub second_verdict: bool,
}

impl SeparationCase {
    pub fn separated(&self) -> bool {
        self.first_verdict != self.second_verdict
    }
}

/// Prefixes `(R, X)` with left- and right-total relations and nonempty `X` sets.
pub fn separation_prefixes(n: usize, k: usize, m: usize) -> Vec<WitnessSpec> {
    let relations: Vec<_> = all_relations(n).into_iter().filter(|r| is_left_right_total(r, n)).collect();
    let sets: Vec<_> = all_event_sets(k).into_iter().filter(|s| !s.is_empty()).collect();
    let mut out = vec![(Vec::new(), Vec::new())];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|(rs, xs): (Vec<_>, Vec<_>)| {
                let mut next = Vec::new();
                for r in &relations {
                    for x in &sets {
                        let mut rs = rs.clone();
                        let mut xs = xs.clone();
                        rs.push(r.clone());
                        xs.push(x.clone());
                        next.push((rs, xs));
                    }
                }
                next
            })
            .collect();
    }
    out.into_iter()
        .map(|(r, x)| WitnessSpec {
            n,
            k,
            s: vec![0; m + 1],
            y: vec![Default::default(); m],
            r,
            x,
        })
        .collect()
}

/// Builds both full strings for a continuation and runs the checker on them.
pub fn separate(nfa: &EcidpdaQ, first: &WitnessSpec, second: &WitnessSpec, scheme: &TimingScheme<Rational>) -> Result<Option<SeparationCase>> {
    let Some(cont) = distinguishing_suffix(first, second)? else {
        return Ok(None);
    };
    let verdict = |spec: &WitnessSpec, cont: &Continuation| -> Result<bool> {
        nfa.accepts(&build_well_formed(&cont.apply(spec), scheme)?)
    };
    let words: Vec<String> = cont.symbols(first.k).iter().map(|s| s.to_string()).collect();
    Ok(Some(SeparationCase {
        first: spec_label(first),
        second: spec_label(second),
        suffix: words.join(" "),
        valid_side: match cont.valid {
            Side::First => "first".into(),
            Side::Second => "second".into(),
        },
        first_verdict: verdict(first, &cont)?,
        second_verdict: verdict(second, &cont)?,
    }))
}

/// The first two total-relation prefixes that differ, separated.
pub fn cmd_separation_demo(n: usize, k: usize, m: usize) -> Result<SeparationCase> {
    let nfa: EcidpdaQ = build_witness_nfa(n, k)?;
    let prefixes = separation_prefixes(n, k, m);
    if prefixes.len() < 2 {
        return Err(Error::WitnessSpec("fewer than two total-relation prefixes".into()));
    }
    let scheme = TimingScheme::default();
    Ok(separate(&nfa, &prefixes[0], &prefixes[1], &scheme)?.expect("distinct prefixes"))
}

pub fn atom_count(automaton: &EcidpdaQ) -> usize {
    AtomUniverse::of_constraints(automaton.guards()).len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diff_is_reproducible_and_clean() {
        let a = cmd_diff(Mode::Direct, 8, 10, 42).unwrap();
        let b = cmd_diff(Mode::Direct, 8, 10, 42).unwrap();
        assert!(a.passed());
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn run_trace_has_one_step_per_prefix() {
        let a: EcidpdaQ = random_automaton(3, &GenConfig::timed());
        let w: TimedStringQ = random_timed_string(9, a.alphabet(), 12);
        let report = cmd_run(&a, &w).unwrap();
        assert_eq!(report.steps.len(), w.len() + 1);
        assert!(report.render().ends_with("accept\n") || report.render().ends_with("reject\n"));
    }

    #[test]
    fn witness_table_agrees_for_one_level() {
        let specs = exhaustive_specs(2, 1, 1).unwrap();
        assert_eq!(specs.len(), 256);
        let (report, _) = cmd_witness(2, 1, &specs, &TimingScheme::default()).unwrap();
        assert_eq!(report.disagreements, 0);
        assert!(exhaustive_specs(4, 1, 1).is_err());
    }

    #[test]
    fn demo_separates() {
        let case = cmd_separation_demo(2, 1, 1).unwrap();
        assert!(case.separated());
    }

    #[test]
    fn pair_and_survivor_checks_pass_on_a_sample() {
        let config = GenConfig::timed();
        for seed in 0..5 {
            let a: EcidpdaQ = random_automaton(seed, &config);
            let strings: Vec<TimedStringQ> = (0..5).map(|j| random_timed_string(string_seed(seed, j), a.alphabet(), 8)).collect();
            assert_eq!(check_pair_semantics(&a, &strings).unwrap(), None);
            assert_eq!(check_survivors(&a, &strings).unwrap(), None);
        }
    }
}
