use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use ecidpda::cli;
use ecidpda::determinize::{Mode, Options};
use ecidpda::witness::{build_well_formed, is_valid, TimingScheme, WitnessSpec, WitnessSpecFile};
use ecidpda::Error;

/// Event-clock input-driven pushdown automata.
#[derive(Parser)]
#[command(name = "ecidpda", version)]
struct Args {
    /// Print reports as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an automaton on a timed string and print the configuration trace.
    Run { automaton: PathBuf, string: PathBuf },
    /// Determinize an automaton.
    Determinize {
        automaton: PathBuf,
        #[arg(long, default_value = "direct", value_parser = parse_mode)]
        mode: Mode,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Drop transitions whose guard no timed string can satisfy.
        #[arg(long)]
        prune: bool,
    },
    /// Check whether an automaton is deterministic.
    CheckDet { automaton: PathBuf },
    /// Compare random automata with their determinizations on random strings.
    Diff {
        #[arg(long, value_parser = parse_mode)]
        mode: Mode,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 100)]
        strings: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Lower-bound witness: build checker and strings, compare with the predicate.
    Witness {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        /// Enumerate every spec with the given n, k, m.
        #[arg(long, conflicts_with_all = ["spec", "demo"])]
        exhaustive: bool,
        /// Check one spec from a JSON file.
        #[arg(long, conflicts_with = "demo")]
        spec: Option<PathBuf>,
        /// Separate two distinct total-relation prefixes with a continuation.
        #[arg(long)]
        demo: bool,
        /// Print agreeing rows of the exhaustive table too.
        #[arg(long)]
        all_rows: bool,
        /// Write the checker automaton here.
        #[arg(long)]
        nfa_out: Option<PathBuf>,
        /// Write the spec's timed string here (with --spec).
        #[arg(long)]
        string_out: Option<PathBuf>,
    },
}

fn parse_mode(text: &str) -> Result<Mode, String> {
    Mode::parse(text).ok_or_else(|| format!("unknown mode `{text}` (untimed, direct, nostackpred)"))
}

fn emit<R: Serialize>(json: bool, report: &R, text: impl FnOnce() -> String) {
    if json {
        println!("{}", serde_json::to_string_pretty(report).expect("reports serialize"));
    } else {
        print!("{}", text());
    }
}

fn usage(message: impl Into<String>) -> Error {
    Error::WitnessSpec(message.into())
}

fn execute(args: Args) -> Result<bool, Error> {
    let json = args.json;
    match args.command {
        Command::Run { automaton, string } => {
            let a = cli::load_automaton(&automaton)?;
            let w = cli::load_string(&string, a.alphabet())?;
            let report = cli::cmd_run(&a, &w)?;
            emit(json, &report, || report.render());
            Ok(report.accepted)
        }
        Command::Determinize {
            automaton,
            mode,
            output,
            prune,
        } => {
            let a = cli::load_automaton(&automaton)?;
            let report = cli::cmd_determinize(&a, mode, Options { prune_unsatisfiable: prune }, output.as_deref())?;
            emit(json, &report, || report.render());
            Ok(true)
        }
        Command::CheckDet { automaton } => {
            let a = cli::load_automaton(&automaton)?;
            let verdict = a.is_deterministic();
            let text = verdict.to_string();
            emit(json, &serde_json::json!({ "deterministic": verdict.is_deterministic(), "detail": text }), || {
                format!("{text}\n")
            });
            Ok(verdict.is_deterministic())
        }
        Command::Diff {
            mode,
            trials,
            strings,
            seed,
        } => {
            let report = cli::cmd_diff(mode, trials, strings, seed)?;
            emit(json, &report, || report.render());
            Ok(report.passed())
        }
        Command::Witness {
            n,
            k,
            m,
            exhaustive,
            spec,
            demo,
            all_rows,
            nfa_out,
            string_out,
        } => {
            if let Some(path) = spec {
                let file: WitnessSpecFile =
                    serde_json::from_str(&fs::read_to_string(&path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?;
                let spec = WitnessSpec::from_file(&file)?;
                let scheme = match &file.timing {
                    Some(t) => TimingScheme::from_file(t)?,
                    None => TimingScheme::default(),
                };
                if let Some(out) = &string_out {
                    fs::write(out, serde_json::to_string_pretty(&build_well_formed(&spec, &scheme)?.to_json_file())?)?;
                }
                let (report, nfa) = cli::cmd_witness(spec.n, spec.k, std::slice::from_ref(&spec), &scheme)?;
                if let Some(out) = &nfa_out {
                    fs::write(out, nfa.to_json())?;
                }
                emit(json, &report, || report.render(true));
                return Ok(report.disagreements == 0 && is_valid(&spec));
            }
            let (Some(n), Some(k), Some(m)) = (n, k, m) else {
                return Err(usage("witness needs --spec FILE or all of --n, --k, --m"));
            };
            if demo {
                let case = cli::cmd_separation_demo(n, k, m)?;
                emit(json, &case, || {
                    format!(
                        "first:  {}\nsecond: {}\ncontinuation: {}\nvalid for the {} prefix\nverdicts: first {}, second {}\n",
                        case.first, case.second, case.suffix, case.valid_side, case.first_verdict, case.second_verdict
                    )
                });
                return Ok(case.separated());
            }
            if !exhaustive {
                return Err(usage("witness needs one of --exhaustive, --spec, --demo"));
            }
            let specs = cli::exhaustive_specs(n, k, m)?;
            let (report, nfa) = cli::cmd_witness(n, k, &specs, &TimingScheme::default())?;
            if let Some(out) = &nfa_out {
                fs::write(out, nfa.to_json())?;
            }
            emit(json, &report, || report.render(all_rows));
            Ok(report.disagreements == 0)
        }
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
