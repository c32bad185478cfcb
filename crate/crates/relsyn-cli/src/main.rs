//! `relsyn`: synthesize, benchmark and check relational programs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use relsyn::cegis::{
    synthesize_with, verify, Event, Outcome, Overrides, ProblemError, SynthesisProblem, Verdict,
};
use relsyn::dsl::{parse_program, CostModel};
use relsyn::lang::Symbol;
use relsyn::search::Assignment;

const EXIT_INVALID: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;
const EXIT_CAPACITY: u8 = 4;
const EXIT_UNSAT: u8 = 5;
const EXIT_IO: u8 = 10;

#[derive(Parser)]
#[command(
    name = "relsyn",
    version,
    about = "Relational program synthesis over DSL grammars"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize programs for every function declared in a spec file.
    Synth {
        spec: PathBuf,
        #[command(flatten)]
        flags: Flags,
        /// Print search decisions and per-iteration records to stderr.
        #[arg(long)]
        trace: bool,
        /// Write the last hierarchical automaton as Graphviz DOT.
        #[arg(long, value_name = "PATH")]
        dump_hfta: Option<PathBuf>,
    },
    /// Run every spec listed in a suite file and print a CSV table.
    Bench {
        suite: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Verify given programs against a spec file.
    Check {
        spec: PathBuf,
        /// Files with `name = program` lines.
        #[arg(required = true)]
        programs: Vec<PathBuf>,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args, Clone, Default)]
struct Flags {
    #[arg(long, value_name = "N")]
    depth_bound: Option<usize>,
    #[arg(long, value_name = "SECS")]
    timeout: Option<u64>,
    #[arg(long, value_name = "STR")]
    val_alphabet: Option<String>,
    #[arg(long, value_name = "K")]
    val_len: Option<usize>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, value_name = "PATH")]
    cost_model: Option<PathBuf>,
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn new(code: u8, msg: impl Into<String>) -> Failure {
        Failure {
            code,
            msg: msg.into(),
        }
    }
}

impl From<ProblemError> for Failure {
    fn from(e: ProblemError) -> Failure {
        let code = match e {
            ProblemError::Io { .. } => EXIT_IO,
            _ => EXIT_PARSE,
        };
        Failure::new(code, e.to_string())
    }
}

impl Flags {
    fn overrides(&self) -> Result<Overrides, Failure> {
        let costs = match &self.cost_model {
            Some(p) => Some(CostModel::load(p).map_err(|e| match e {
                relsyn::dsl::cost::CostModelError::Io { .. } => {
                    Failure::new(EXIT_IO, e.to_string())
                }
                _ => Failure::new(EXIT_PARSE, format!("{}: {e}", p.display())),
            })?),
            None => None,
        };
        Ok(Overrides {
            depth_bound: self.depth_bound,
            val_alphabet: self.val_alphabet.clone(),
            val_len: self.val_len,
            timeout: self.timeout.map(Duration::from_secs),
            seed: self.seed,
            costs,
            exec: None,
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth {
            spec,
            flags,
            trace,
            dump_hfta,
        } => cmd_synth(&spec, &flags, trace, dump_hfta.as_deref()),
        Command::Bench { suite, flags } => cmd_bench(&suite, &flags),
        Command::Check {
            spec,
            programs,
            flags,
        } => cmd_check(&spec, &programs, &flags),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.msg.is_empty() {
                eprintln!("relsyn: {}", f.msg);
            }
            ExitCode::from(f.code)
        }
    }
}

fn print_assignment(a: &Assignment) {
    for (name, p) in a.iter() {
        match p {
            Some(p) => println!("{name} = {p}"),
            None => println!("{name} = ?"),
        }
    }
}

fn outcome_failure(outcome: &Outcome) -> Option<Failure> {
    match outcome {
        Outcome::Solved(_) => None,
        Outcome::Unsat { reason } => {
            Some(Failure::new(EXIT_UNSAT, format!("no solution: {reason}")))
        }
        Outcome::Timeout => Some(Failure::new(EXIT_TIMEOUT, "timed out")),
        Outcome::Capacity { reason } => Some(Failure::new(
            EXIT_CAPACITY,
            format!("capacity exceeded: {reason}"),
        )),
    }
}

fn cmd_synth(spec: &Path, flags: &Flags, trace: bool, dump: Option<&Path>) -> Result<(), Failure> {
    let problem = SynthesisProblem::load(spec, &flags.overrides()?)?;
    let mut dot: Option<String> = None;
    let report = synthesize_with(&problem, &mut |e| match e {
        Event::Iteration(r) if trace => {
            eprintln!("{}", r.line());
            eprintln!("  rejected {} by {}", r.candidate, r.counterexample);
        }
        Event::Search(t) if trace => eprintln!("  {t}"),
        Event::Hfta(_, h) if dump.is_some() => dot = Some(h.to_dot()),
        _ => {}
    });
    if let (Some(path), Some(dot)) = (dump, dot) {
        std::fs::write(path, dot)
            .map_err(|e| Failure::new(EXIT_IO, format!("cannot write {}: {e}", path.display())))?;
    }
    if trace {
        eprintln!(
            "iterations={} total_s={:.3} synth_s={:.3} peak_states={}",
            report.iterations,
            report.total_time.as_secs_f64(),
            report.synth_time.as_secs_f64(),
            report.peak_states
        );
    }
    match &report.outcome {
        Outcome::Solved(a) => {
            print_assignment(a);
            Ok(())
        }
        other => Err(outcome_failure(other).expect("not solved")),
    }
}

/// Spec paths listed one per line, relative to the suite file; `#` starts a
/// comment.
fn read_suite(path: &Path) -> Result<Vec<PathBuf>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_IO, format!("cannot read {}: {e}", path.display())))?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| dir.join(l))
        .collect())
}

fn cmd_bench(suite: &Path, flags: &Flags) -> Result<(), Failure> {
    let specs = read_suite(suite)?;
    let overrides = flags.overrides()?;
    println!("name,solved,iters,total_s,synth_s,peak_states");
    for spec in specs {
        let name = spec
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        match SynthesisProblem::load(&spec, &overrides) {
            Ok(problem) => {
                let r = synthesize_with(&problem, &mut |_| {});
                println!(
                    "{name},{},{},{:.3},{:.3},{}",
                    r.solution().is_some(),
                    r.iterations,
                    r.total_time.as_secs_f64(),
                    r.synth_time.as_secs_f64(),
                    r.peak_states
                );
                if let Some(f) = outcome_failure(&r.outcome) {
                    eprintln!("relsyn: {name}: {}", f.msg);
                }
            }
            Err(e) => {
                eprintln!("relsyn: {name}: {e}");
                println!("{name},false,0,0.000,0.000,0");
            }
        }
    }
    Ok(())
}

/// Reads `name = program` lines, parsing each program against the grammar of
/// the named function.
fn read_programs(problem: &SynthesisProblem, paths: &[PathBuf]) -> Result<Assignment, Failure> {
    let mut a = Assignment::unassigned(problem.targets.iter().map(|t| &t.name));
    for path in paths {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::new(EXIT_IO, format!("cannot read {}: {e}", path.display())))?;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = |msg: String| {
                Failure::new(EXIT_PARSE, format!("{}:{}: {msg}", path.display(), i + 1))
            };
            let (name, prog) = line
                .split_once('=')
                .ok_or_else(|| at("expected `name = program`".into()))?;
            let name = Symbol::new(name.trim());
            let target = problem
                .target(&name)
                .ok_or_else(|| at(format!("`{name}` is not declared in the spec")))?;
            let p = parse_program(prog.trim(), &target.grammar).map_err(|e| at(e.to_string()))?;
            a.set(name, p);
        }
    }
    if let Some(missing) = a.iter().find(|(_, p)| p.is_none()) {
        return Err(Failure::new(
            EXIT_PARSE,
            format!("no program given for `{}`", missing.0),
        ));
    }
    Ok(a)
}

fn cmd_check(spec: &Path, programs: &[PathBuf], flags: &Flags) -> Result<(), Failure> {
    let problem = SynthesisProblem::load(spec, &flags.overrides()?)?;
    let a = read_programs(&problem, programs)?;
    match verify(&a.interpretation(), &problem.spec, &problem.config) {
        Verdict::Valid => {
            println!("valid");
            Ok(())
        }
        Verdict::Invalid(cex) => {
            println!("counterexample: {}", cex.ground);
            for (x, v) in &cex.witness {
                println!("  {x} = {v}");
            }
            Err(Failure::new(EXIT_INVALID, ""))
        }
    }
}
