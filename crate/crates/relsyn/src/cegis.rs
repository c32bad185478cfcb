//! The synthesis loop: verify a candidate by exhaustive bounded testing,
//! add the first violated instance to the ground specification, and pick
//! the next candidate from the version space of that specification.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dsl::grammar::{Grammar, GrammarError, Rhs, SymId};
use crate::dsl::{load_grammar, CostModel, ProgramAst};
use crate::exec::ExecMode;
use crate::fta::{BuildConfig, FtaError};
use crate::hfta::{build_hfta, Hfta, HftaError, Target};
use crate::lang::{
    eval_formula, parse_spec, relax, Formula, GroundFormula, Interpretation, RelationalSpec,
    SpecError, Symbol, Term,
};
use crate::search::{find_progs, Assignment, SearchConfig, SearchOutcome, TraceEvent};
use crate::values::{Sort, Value};

/// One function to synthesize.
#[derive(Clone, Debug)]
pub struct FunctionTarget {
    pub name: Symbol,
    pub params: Vec<Sort>,
    pub ret: Sort,
    pub grammar: Arc<Grammar>,
    pub depth_bound: usize,
}

#[derive(Clone, Debug)]
pub struct SynthesisConfig {
    /// Depth bound for functions without their own.
    pub depth_bound: usize,
    pub val_alphabet: Vec<char>,
    pub val_min_len: usize,
    pub val_len: usize,
    pub val_int_min: i64,
    pub val_int_max: i64,
    pub timeout: Duration,
    pub seed: u64,
    pub costs: CostModel,
    pub candidate_cap: usize,
    pub state_ceiling: usize,
    pub exec: ExecMode,
}

pub const DEFAULT_ALPHABET: &str = "ABMNab01+/=- .xz\u{00E9}";

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            depth_bound: 6,
            val_alphabet: DEFAULT_ALPHABET.chars().collect(),
            val_min_len: 0,
            val_len: 3,
            val_int_min: -3,
            val_int_max: 3,
            timeout: Duration::from_secs(600),
            seed: 0,
            costs: CostModel::default(),
            candidate_cap: 10_000,
            state_ceiling: 20_000_000,
            exec: ExecMode::default(),
        }
    }
}

/// Settings that take precedence over the spec file's `config` entries.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub depth_bound: Option<usize>,
    pub val_alphabet: Option<String>,
    pub val_len: Option<usize>,
    pub timeout: Option<Duration>,
    pub seed: Option<u64>,
    pub costs: Option<CostModel>,
    pub exec: Option<ExecMode>,
}

#[derive(Debug, thiserror::Error)]
pub enum ProblemError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Spec { path: String, source: SpecError },
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug)]
pub struct SynthesisProblem {
    pub targets: Vec<FunctionTarget>,
    pub spec: RelationalSpec,
    pub config: SynthesisConfig,
}

fn config_usize(v: &Value, key: &str) -> Result<usize, ProblemError> {
    match v {
        Value::Int(n) if *n >= 0 => Ok(*n as usize),
        _ => Err(ProblemError::Invalid(format!(
            "config `{key}` expects a non-negative integer"
        ))),
    }
}

impl SynthesisProblem {
    /// Loads a spec file; grammar paths are relative to its directory.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<SynthesisProblem, ProblemError> {
        let text = std::fs::read_to_string(path).map_err(|source| ProblemError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let spec = parse_spec(&text).map_err(|source| ProblemError::Spec {
            path: path.display().to_string(),
            source,
        })?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        SynthesisProblem::from_spec(spec, &dir, overrides)
    }

    pub fn from_spec(
        spec: RelationalSpec,
        dir: &Path,
        overrides: &Overrides,
    ) -> Result<SynthesisProblem, ProblemError> {
        let mut config = SynthesisConfig::default();
        for (key, v) in &spec.config {
            match key.as_str() {
                "depth_bound" => config.depth_bound = config_usize(v, key)?,
                "val_len" => config.val_len = config_usize(v, key)?,
                "val_min_len" => config.val_min_len = config_usize(v, key)?,
                "val_alphabet" => match v {
                    Value::Str(s) => config.val_alphabet = s.chars().collect(),
                    _ => {
                        return Err(ProblemError::Invalid(
                            "config `val_alphabet` expects a string".into(),
                        ))
                    }
                },
                "val_int_min" | "val_int_max" => {
                    let n = v.as_int().ok_or_else(|| {
                        ProblemError::Invalid(format!("config `{key}` expects an integer"))
                    })?;
                    if key == "val_int_min" {
                        config.val_int_min = n;
                    } else {
                        config.val_int_max = n;
                    }
                }
                "timeout" => config.timeout = Duration::from_secs(config_usize(v, key)? as u64),
                "seed" => config.seed = config_usize(v, key)? as u64,
                "candidate_cap" => config.candidate_cap = config_usize(v, key)?,
                "state_ceiling" => config.state_ceiling = config_usize(v, key)?,
                _ => return Err(ProblemError::Invalid(format!("unknown config key `{key}`"))),
            }
        }
        if let Some(d) = overrides.depth_bound {
            config.depth_bound = d;
        }
        if let Some(a) = &overrides.val_alphabet {
            config.val_alphabet = a.chars().collect();
        }
        if let Some(k) = overrides.val_len {
            config.val_len = k;
        }
        if let Some(t) = overrides.timeout {
            config.timeout = t;
        }
        if let Some(s) = overrides.seed {
            config.seed = s;
        }
        if let Some(c) = &overrides.costs {
            config.costs = c.clone();
        }
        if let Some(e) = overrides.exec {
            config.exec = e;
        }
        let mut targets = Vec::new();
        for decl in &spec.funs {
            let path: PathBuf = if decl.grammar.is_absolute() {
                decl.grammar.clone()
            } else {
                dir.join(&decl.grammar)
            };
            let grammar = load_grammar(&path)?;
            if grammar.params.len() != decl.params.len() {
                return Err(ProblemError::Invalid(format!(
                    "function `{}` takes {} arguments but grammar {} has {} parameters",
                    decl.name,
                    decl.params.len(),
                    path.display(),
                    grammar.params.len()
                )));
            }
            let depth_bound = match (overrides.depth_bound, decl.depth) {
                (Some(d), _) => d,
                (None, Some(d)) => d,
                (None, None) => config.depth_bound,
            };
            targets.push(FunctionTarget {
                name: decl.name.clone(),
                params: decl.params.clone(),
                ret: decl.ret,
                grammar: Arc::new(grammar),
                depth_bound,
            });
        }
        Ok(SynthesisProblem {
            targets,
            spec,
            config,
        })
    }

    pub fn target(&self, name: &Symbol) -> Option<&FunctionTarget> {
        self.targets.iter().find(|t| t.name == *name)
    }
}

/// Every string over the alphabet with length in `min..=max`, shortest
/// first and in alphabet order within a length.
pub fn strings_up_to(alphabet: &[char], min: usize, max: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut layer: Vec<String> = vec![String::new()];
    for len in 0..=max {
        if len >= min {
            out.extend(layer.iter().cloned());
        }
        if len < max {
            layer = layer
                .iter()
                .flat_map(|s| alphabet.iter().map(move |c| format!("{s}{c}")))
                .collect();
        }
    }
    out
}

/// Validation values of one sort: the generated domain followed by the
/// example inputs of that sort.
pub fn validation_values(sort: Sort, config: &SynthesisConfig, extra: &[Value]) -> Vec<Value> {
    let mut out: Vec<Value> = match sort {
        Sort::Bool => vec![Value::Bool(false), Value::Bool(true)],
        Sort::Int => (config.val_int_min..=config.val_int_max)
            .map(Value::Int)
            .collect(),
        Sort::Char => config
            .val_alphabet
            .iter()
            .map(|c| Value::Char(*c))
            .collect(),
        Sort::Str => strings_up_to(&config.val_alphabet, config.val_min_len, config.val_len)
            .iter()
            .map(|s| Value::str(s))
            .collect(),
        Sort::Bytes => {
            let bytes: Vec<char> = ['\u{0}', '\u{1}', '\u{7f}', '\u{ff}'].to_vec();
            strings_up_to(&bytes, config.val_min_len, config.val_len)
                .iter()
                .map(|s| Value::bytes(&s.chars().map(|c| c as u8).collect::<Vec<u8>>()))
                .collect()
        }
        Sort::IntArray => {
            let digits: Vec<char> = (config.val_int_min..=config.val_int_max)
                .filter_map(|i| char::from_u32((i - config.val_int_min) as u32 + 'a' as u32))
                .collect();
            strings_up_to(&digits, config.val_min_len, config.val_len)
                .iter()
                .map(|s| {
                    Value::ints(
                        &s.chars()
                            .map(|c| (c as u32 - 'a' as u32) as i64 + config.val_int_min)
                            .collect::<Vec<i64>>(),
                    )
                })
                .collect()
        }
        Sort::CharArray => strings_up_to(&config.val_alphabet, config.val_min_len, config.val_len)
            .iter()
            .map(|s| Value::chars(&s.chars().collect::<Vec<char>>()))
            .collect(),
    };
    for v in extra {
        if v.sort() == Some(sort) && !out.contains(v) {
            out.push(v.clone());
        }
    }
    out
}

fn example_inputs(spec: &RelationalSpec) -> Vec<Value> {
    fn walk_term(t: &Term, out: &mut Vec<Value>) {
        match t {
            Term::Const(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Var(_) => {}
            Term::Apply(_, args) => args.iter().for_each(|a| walk_term(a, out)),
        }
    }
    fn walk(f: &Formula, out: &mut Vec<Value>) {
        match f {
            Formula::Atom(l, _, r) => {
                walk_term(l, out);
                walk_term(r, out);
            }
            Formula::Binary(l, _, r) => {
                walk(l, out);
                walk(r, out);
            }
            Formula::Not(b) => walk(b, out),
        }
    }
    let mut out = Vec::new();
    for e in spec.examples() {
        walk(e, &mut out);
    }
    out
}

/// A violated instance of the specification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub ground: GroundFormula,
    pub witness: Vec<(Arc<str>, Value)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Invalid(Counterexample),
}

/// Checks every clause in declaration order and returns the first violated
/// instance: examples directly, quantified clauses over all tuples of
/// validation values in lexicographic order.
pub fn verify(p: &Interpretation, spec: &RelationalSpec, config: &SynthesisConfig) -> Verdict {
    let extra = example_inputs(spec);
    for clause in &spec.clauses {
        if clause.is_example() {
            if !eval_formula(&clause.body, p, &[]) {
                return Verdict::Invalid(Counterexample {
                    ground: clause.body.clone(),
                    witness: Vec::new(),
                });
            }
            continue;
        }
        let domains: Vec<Vec<Value>> = clause
            .vars
            .iter()
            .map(|(_, s)| validation_values(*s, config, &extra))
            .collect();
        let total = domains
            .iter()
            .try_fold(1usize, |acc, d| acc.checked_mul(d.len()))
            .expect("validation space too large");
        let env_of = |mut i: usize| -> Vec<(Arc<str>, Value)> {
            let mut env: Vec<(Arc<str>, Value)> = Vec::with_capacity(domains.len());
            for (j, d) in domains.iter().enumerate().rev() {
                env.push((clause.vars[j].0.clone(), d[i % d.len()].clone()));
                i /= d.len();
            }
            env.reverse();
            env
        };
        if let Some(i) = config
            .exec
            .find_first(total, |i| !eval_formula(&clause.body, p, &env_of(i)))
        {
            let env = env_of(i);
            return Verdict::Invalid(Counterexample {
                ground: clause.body.substitute(&env),
                witness: env,
            });
        }
    }
    Verdict::Valid
}

/// A uniformly random derivation for each target within its depth bound:
/// at every step one of the productions that fit the remaining depth.
pub fn random_candidate(problem: &SynthesisProblem, seed: u64) -> Assignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Assignment::unassigned(problem.targets.iter().map(|t| &t.name));
    for t in &problem.targets {
        if let Some(p) = random_program(&t.grammar, t.depth_bound, &mut rng) {
            a.set(t.name.clone(), p);
        }
    }
    a
}

pub fn random_program(g: &Grammar, depth: usize, rng: &mut ChaCha8Rng) -> Option<ProgramAst> {
    fn fits(g: &Grammar, s: SymId, d: usize) -> bool {
        g.min_depth(s).is_some_and(|m| (m as usize) <= d)
    }
    fn gen(g: &Grammar, s: SymId, d: usize, rng: &mut ChaCha8Rng) -> ProgramAst {
        if let Some(i) = g.param_index(s) {
            return ProgramAst::param(i, g.symbol_name(s));
        }
        let options: Vec<usize> = g
            .productions_of(s)
            .filter(|(_, p)| p.children().iter().all(|c| d > 1 && fits(g, *c, d - 1)) && (d >= 1))
            .map(|(i, _)| i)
            .collect();
        let &pi = options.choose(rng).expect("a production fits");
        match &g.productions[pi].rhs {
            Rhs::Const(c) => ProgramAst::constant(c.clone()),
            Rhs::Chain(c) => gen(g, *c, d - 1, rng),
            Rhs::Op { op, args } => {
                ProgramAst::op(op, args.iter().map(|a| gen(g, *a, d - 1, rng)).collect())
            }
        }
    }
    fits(g, g.start, depth).then(|| gen(g, g.start, depth, rng))
}

#[derive(Clone, Debug)]
pub struct IterationRecord {
    pub index: usize,
    pub candidate: String,
    pub counterexample: String,
    pub ground_size: usize,
    pub hfta_nodes: usize,
    pub hfta_states: usize,
    pub build_time: Duration,
    pub synth_time: Duration,
}

impl IterationRecord {
    /// Machine-readable progress line.
    pub fn line(&self) -> String {
        format!(
            "iter={} ground_size={} hfta_nodes={} hfta_states={} build_ms={} synth_ms={}",
            self.index,
            self.ground_size,
            self.hfta_nodes,
            self.hfta_states,
            self.build_time.as_millis(),
            self.synth_time.as_millis()
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Solved(Assignment),
    /// No consistent programs exist for the accumulated counterexamples
    /// within the bounds.
    Unsat {
        reason: String,
    },
    Timeout,
    Capacity {
        reason: String,
    },
}

#[derive(Clone, Debug)]
pub struct SynthesisReport {
    pub outcome: Outcome,
    /// Candidates verified, including the final one.
    pub iterations: usize,
    pub records: Vec<IterationRecord>,
    /// Each rejected candidate with the counterexample it produced.
    pub rejected: Vec<(Assignment, Counterexample)>,
    pub ground: Option<GroundFormula>,
    pub total_time: Duration,
    pub synth_time: Duration,
    pub peak_states: usize,
}

impl SynthesisReport {
    pub fn solution(&self) -> Option<&Assignment> {
        match &self.outcome {
            Outcome::Solved(a) => Some(a),
            _ => None,
        }
    }
}

/// Progress notifications from [`synthesize_with`].
pub enum Event<'a> {
    Iteration(&'a IterationRecord),
    Search(&'a TraceEvent),
    Hfta(usize, &'a Hfta),
}

pub fn synthesize(problem: &SynthesisProblem) -> SynthesisReport {
    synthesize_with(problem, &mut |_| {})
}

pub fn synthesize_with(
    problem: &SynthesisProblem,
    observer: &mut dyn FnMut(Event<'_>),
) -> SynthesisReport {
    let start = Instant::now();
    let deadline = start + problem.config.timeout;
    let cfg = &problem.config;
    let targets: BTreeMap<Symbol, Target> = problem
        .targets
        .iter()
        .map(|t| {
            (
                t.name.clone(),
                Target {
                    grammar: t.grammar.clone(),
                    depth_bound: t.depth_bound,
                },
            )
        })
        .collect();
    let grammars: BTreeMap<Symbol, (Grammar, usize)> = problem
        .targets
        .iter()
        .map(|t| (t.name.clone(), ((*t.grammar).clone(), t.depth_bound)))
        .collect();
    let names: std::collections::BTreeSet<Symbol> = targets.keys().cloned().collect();
    let search_cfg = SearchConfig {
        costs: cfg.costs.clone(),
        candidate_cap: cfg.candidate_cap,
        deadline: Some(deadline),
    };
    let build_cfg = BuildConfig {
        depth_bound: cfg.depth_bound,
        state_ceiling: cfg.state_ceiling,
        exec: cfg.exec,
    };

    let mut report = SynthesisReport {
        outcome: Outcome::Timeout,
        iterations: 0,
        records: Vec::new(),
        rejected: Vec::new(),
        ground: None,
        total_time: Duration::ZERO,
        synth_time: Duration::ZERO,
        peak_states: 0,
    };
    let mut candidate = random_candidate(problem, cfg.seed);
    let mut parts: Vec<GroundFormula> = Vec::new();
    let finish = |mut report: SynthesisReport, outcome: Outcome| {
        report.outcome = outcome;
        report.total_time = start.elapsed();
        report
    };
    loop {
        if Instant::now() >= deadline {
            return finish(report, Outcome::Timeout);
        }
        report.iterations += 1;
        let cex = match verify(&candidate.interpretation(), &problem.spec, cfg) {
            Verdict::Valid => return finish(report, Outcome::Solved(candidate)),
            Verdict::Invalid(c) => c,
        };
        parts.push(cex.ground.clone());
        report.rejected.push((candidate.clone(), cex.clone()));
        let phi = Formula::conjunction(&parts).expect("nonempty");
        report.ground = Some(phi.clone());

        let t0 = Instant::now();
        let (relaxed, m) = relax(&phi, &names);
        let h = match build_hfta(&relaxed, &targets, &m, &build_cfg) {
            Ok(h) => h,
            Err(HftaError::Fta(FtaError::CapacityExceeded { grammar, ceiling })) => {
                report.synth_time += t0.elapsed();
                let reason = format!("automaton for `{grammar}` exceeds {ceiling} states");
                return finish(report, Outcome::Capacity { reason });
            }
            Err(e) => {
                report.synth_time += t0.elapsed();
                return finish(
                    report,
                    Outcome::Unsat {
                        reason: e.to_string(),
                    },
                );
            }
        };
        let build_time = t0.elapsed();
        report.peak_states = report.peak_states.max(h.state_count());
        observer(Event::Hfta(report.iterations, &h));
        let outcome = find_progs(
            &h,
            Assignment::unassigned(names.iter()),
            &m,
            &grammars,
            &search_cfg,
            &mut |e| observer(Event::Search(e)),
        );
        let elapsed = t0.elapsed();
        report.synth_time += elapsed;
        let record = IterationRecord {
            index: report.iterations,
            candidate: candidate.to_string(),
            counterexample: cex.ground.to_string(),
            ground_size: phi.size(),
            hfta_nodes: h.node_count(),
            hfta_states: h.state_count(),
            build_time,
            synth_time: elapsed,
        };
        observer(Event::Iteration(&record));
        report.records.push(record);
        candidate = match outcome {
            SearchOutcome::Found(a) => a,
            SearchOutcome::Exhausted => {
                return finish(
                    report,
                    Outcome::Unsat {
                        reason: "no consistent programs within the depth bounds".into(),
                    },
                )
            }
            SearchOutcome::Timeout => return finish(report, Outcome::Timeout),
            SearchOutcome::CandidateCap { symbol } => {
                let reason = format!("more than {} candidates for `{symbol}`", cfg.candidate_cap);
                return finish(report, Outcome::Capacity { reason });
            }
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::evaluate_ground;

    fn write(dir: &Path, name: &str, text: &str) {
        std::fs::write(dir.join(name), text).unwrap();
    }

    fn problem(spec: &str, files: &[(&str, &str)]) -> SynthesisProblem {
        let dir = std::env::temp_dir().join(format!(
            "relsyn-cegis-{}-{}",
            std::process::id(),
            spec.len()
        ));
        std::fs::create_dir_all(&dir).unwrap();
        for (n, t) in files {
            write(&dir, n, t);
        }
        write(&dir, "p.spec", spec);
        SynthesisProblem::load(&dir.join("p.spec"), &Overrides::default()).unwrap()
    }

    const INC: (&str, &str) = ("inc.grammar", "params x: Int\nstart e\ne -> x | inc(e)");
    const DBL: (&str, &str) = ("dbl.grammar", "params y: Int\nstart t\nt -> y | dbl(t)");

    #[test]
    fn example_4_3() {
        let p = problem(
            "fun f : Int -> Int grammar inc.grammar depth 3;\nfun g : Int -> Int grammar dbl.grammar depth 3;\nexample f(2) == g(f(1));",
            &[INC, DBL],
        );
        let r = synthesize(&p);
        let a = r.solution().expect("solved");
        assert_eq!(a.to_string(), "f = x, g = dbl(y)");
        assert!(r.iterations <= 2);
        for (cand, cex) in &r.rejected {
            assert!(!evaluate_ground(&cex.ground, &cand.interpretation()));
        }
    }

    #[test]
    fn unsat_problem() {
        let p = problem(
            "fun f : Int -> Int grammar inc.grammar depth 4;\nexample f(1) == 1 && f(1) == 2;",
            &[INC],
        );
        assert!(matches!(synthesize(&p).outcome, Outcome::Unsat { .. }));
    }

    #[test]
    fn property_counterexamples() {
        let p = problem(
            "fun f : Int -> Int grammar inc.grammar depth 4;\nconfig val_int_min = 0;\nconfig val_int_max = 3;\nproperty forall a: Int. f(a) > a;\nexample f(0) == 2;",
            &[INC],
        );
        let r = synthesize(&p);
        assert_eq!(r.solution().unwrap().to_string(), "f = inc(inc(x))");
        let v = verify(&r.solution().unwrap().interpretation(), &p.spec, &p.config);
        assert_eq!(v, Verdict::Valid);
    }

    #[test]
    fn random_is_reproducible() {
        let p = problem(
            "fun f : Int -> Int grammar inc.grammar depth 2;\nexample f(1) == 2;",
            &[INC],
        );
        assert_eq!(random_candidate(&p, 0), random_candidate(&p, 0));
        let g = &p.targets[0].grammar;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(random_program(g, 1, &mut rng), None);
        for _ in 0..20 {
            let prog = random_program(g, 3, &mut rng).unwrap();
            assert!(crate::dsl::conforms(g, &prog).is_some_and(|d| d <= 3));
        }
    }

    #[test]
    fn validation_domain() {
        let s = strings_up_to(&['a', 'b'], 0, 2);
        assert_eq!(s, ["", "a", "b", "aa", "ab", "ba", "bb"]);
        let cfg = SynthesisConfig {
            val_alphabet: vec!['a'],
            val_len: 1,
            ..SynthesisConfig::default()
        };
        let v = validation_values(Sort::Str, &cfg, &[Value::str("zz"), Value::Int(3)]);
        assert_eq!(v, vec![Value::str(""), Value::str("a"), Value::str("zz")]);
    }
}
