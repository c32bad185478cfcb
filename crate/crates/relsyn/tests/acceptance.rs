//! One pass/fail line per acceptance criterion. Runs without the libtest
//! harness so that the lines are always shown.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use relsyn::cegis::{
    strings_up_to, synthesize, verify, Overrides, SynthesisProblem, SynthesisReport, Verdict,
};
use relsyn::dsl::{parse_program, CostModel, Grammar, ProgramAst};
use relsyn::fta::{accepts, build_fta_for_example, BuildConfig};
use relsyn::hfta::{accepts_hierarchical, build_hfta, enumerate, HierarchicalTree, NodeId, Target};
use relsyn::lang::{evaluate_ground, parse_formula, relax, Symbol};
use relsyn::search::{find_progs, propagate, Assignment, SearchConfig, SearchOutcome};
use relsyn::Value;

use common::*;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn benchmarks() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../benchmarks")
}

struct Run {
    name: &'static str,
    problem: SynthesisProblem,
    report: SynthesisReport,
}

fn run(name: &'static str) -> Run {
    let problem = SynthesisProblem::load(
        &benchmarks().join(format!("{name}.spec")),
        &Overrides::default(),
    )
    .expect("load");
    let report = synthesize(&problem);
    Run {
        name,
        problem,
        report,
    }
}

fn encoder_runs() -> &'static [Run] {
    static RUNS: OnceLock<Vec<Run>> = OnceLock::new();
    RUNS.get_or_init(|| ["base16", "utf8", "base64"].into_iter().map(run).collect())
}

fn comparator_run() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| run("comparator-count5"))
}

fn target(text: &str, depth: usize) -> Target {
    Target {
        grammar: Arc::new(Grammar::parse("g", text).unwrap()),
        depth_bound: depth,
    }
}

fn c1_two_functions() -> Check {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    std::fs::write(
        dir.path().join("e.grammar"),
        "params x: Int\nstart e\ne -> x | inc(e)\n",
    )
    .unwrap();
    std::fs::write(
        dir.path().join("t.grammar"),
        "params y: Int\nstart t\nt -> y | dbl(t)\n",
    )
    .unwrap();
    let spec = dir.path().join("p.spec");
    std::fs::write(
        &spec,
        "fun f : Int -> Int grammar \"e.grammar\" depth 3;\nfun g : Int -> Int grammar \"t.grammar\" depth 3;\nexample f(2) == g(f(1));\n",
    )
    .unwrap();
    let p = SynthesisProblem::load(&spec, &Overrides::default()).map_err(|e| e.to_string())?;
    let r = synthesize(&p);
    let elapsed = t0.elapsed();
    let a = r.solution().ok_or("not solved")?;
    ensure(a.to_string() == "f = x, g = dbl(y)", format!("got {a}"))?;
    ensure(
        elapsed < Duration::from_secs(1),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!("{a} in {:.3}s", elapsed.as_secs_f64()))
}

fn c2_hfta_golden() -> Check {
    let phi = parse_formula("t1() == t2()").unwrap();
    let g = "start e\ne -> 2 | 3 | plus(e, e) | times(e, e)";
    let targets: BTreeMap<Symbol, Target> = [
        (Symbol::new("t1"), target(g, 2)),
        (Symbol::new("t2"), target(g, 2)),
    ]
    .into_iter()
    .collect();
    let (relaxed, m) = relax(&phi, &targets.keys().cloned().collect());
    let h = build_hfta(&relaxed, &targets, &m, &BuildConfig::with_depth(2))
        .map_err(|e| e.to_string())?;
    let nodes = func_nodes(&h);
    let gr = targets[&Symbol::new("t1")].grammar.clone();
    let make = |a: &str, b: &str| {
        let mut trees: Vec<Option<ProgramAst>> = vec![None; h.node_count()];
        trees[nodes[&Symbol::new("t1#1")].0] = Some(parse_program(a, &gr).unwrap());
        trees[nodes[&Symbol::new("t2#1")].0] = Some(parse_program(b, &gr).unwrap());
        trees[h.root()] = Some(ProgramAst::call(
            "eq",
            vec![ProgramAst::param(0, "x1"), ProgramAst::param(1, "x2")],
        ));
        HierarchicalTree {
            trees: trees.into_iter().map(|t| t.expect("three nodes")).collect(),
            children: h.nodes().map(|(_, n)| n.children.clone()).collect(),
            root: h.root(),
        }
    };
    let good =
        accepts_hierarchical(&h, &make("plus(2,3)", "plus(3,2)")).map_err(|e| e.to_string())?;
    let bad =
        accepts_hierarchical(&h, &make("plus(2,3)", "times(3,2)")).map_err(|e| e.to_string())?;
    ensure(
        good && !bad,
        format!("accepts (2+3,3+2)={good}, (2+3,3*2)={bad}"),
    )?;
    Ok("(2+3, 3+2) accepted, (2+3, 3*2) rejected".into())
}

fn c3_fta_golden() -> Check {
    let g = Arc::new(
        Grammar::parse("arith", "params x1, x2\nstart e\ne -> x1 | x2 | plus(e, e)").unwrap(),
    );
    let a = build_fta_for_example(
        g.clone(),
        &[Value::Int(1), Value::Int(3)],
        &Value::Int(4),
        &BuildConfig::with_depth(3),
    )
    .map_err(|e| e.to_string())?;
    let accepted: BTreeSet<String> = programs(&g, 3)
        .into_iter()
        .filter(|p| accepts(&a, p).is_some())
        .map(|p| p.to_string())
        .collect();
    let expected: BTreeSet<String> = ["plus(x1,x2)", "plus(x2,x1)"]
        .into_iter()
        .map(String::from)
        .collect();
    ensure(accepted == expected, format!("accepted {accepted:?}"))?;
    Ok(format!("accepted {accepted:?}"))
}

fn check_pair(r: &Run) -> Result<(), String> {
    let a = r
        .report
        .solution()
        .ok_or_else(|| format!("{} not solved: {:?}", r.name, r.report.outcome))?;
    let mut cfg = r.problem.config.clone();
    cfg.val_len = 3;
    ensure(
        verify(&a.interpretation(), &r.problem.spec, &cfg) == Verdict::Valid,
        format!("{} fails check", r.name),
    )
}

fn c4_encoders() -> Check {
    let mut parts = Vec::new();
    for (r, table) in encoder_runs().iter().zip([3usize, 4, 5]) {
        check_pair(r)?;
        ensure(
            r.report.iterations.abs_diff(table) <= 2,
            format!("{}: {} iterations vs {table}", r.name, r.report.iterations),
        )?;
        ensure(
            r.report.total_time <= Duration::from_secs(600),
            format!("{}: {:?}", r.name, r.report.total_time),
        )?;
        parts.push(format!(
            "{} iters={} {:.1}s",
            r.name,
            r.report.iterations,
            r.report.total_time.as_secs_f64()
        ));
    }
    Ok(parts.join(", "))
}

fn c5_comparator() -> Check {
    let r = comparator_run();
    let a = r
        .report
        .solution()
        .ok_or_else(|| format!("not solved: {:?}", r.report.outcome))?;
    let p = a
        .get(&Symbol::new("compare"))
        .ok_or("no compare program")?
        .clone();
    let cfg = &r.problem.config;
    let strs: Vec<Value> = strings_up_to(&cfg.val_alphabet, cfg.val_min_len, cfg.val_len)
        .into_iter()
        .map(|s| Value::str(&s))
        .collect();
    let cmp = |x: &Value, y: &Value| p.eval(&[x.clone(), y.clone()]).as_int();
    for x in &strs {
        ensure(cmp(x, x) == Some(0), format!("reflexivity at {x}"))?;
        for y in &strs {
            let (xy, yx) = (
                cmp(x, y).ok_or("error value")?,
                cmp(y, x).ok_or("error value")?,
            );
            ensure(
                xy.signum() == -yx.signum(),
                format!("anti-symmetry at {x},{y}"),
            )?;
            for z in &strs {
                let (yz, xz) = (cmp(y, z).unwrap(), cmp(x, z).unwrap());
                ensure(
                    !(xy > 0 && yz > 0) || xz > 0,
                    format!("transitivity at {x},{y},{z}"),
                )?;
                ensure(
                    xy != 0 || xz.signum() == yz.signum(),
                    format!("totality at {x},{y},{z}"),
                )?;
            }
        }
    }
    ensure(
        r.report.total_time <= Duration::from_secs(600),
        "over ten minutes",
    )?;
    Ok(format!(
        "{p} over {} strings, {} iters",
        strs.len(),
        r.report.iterations
    ))
}

fn c6_soundness() -> Check {
    let mut trees = 0usize;
    for seed in 0..200 {
        let t = tiny(seed);
        for (tree, _) in enumerate(&t.h, &CostModel::default()) {
            trees += 1;
            let interp = occurrence_interpretation(&t, &tree);
            ensure(
                evaluate_ground(&t.relaxed, &interp),
                format!("seed {seed}: {} violates {}", tree_text(&t, &tree), t.text),
            )?;
        }
    }
    Ok(format!("200 problems, {trees} trees, 0 violations"))
}

fn tree_text(t: &Tiny, tree: &HierarchicalTree) -> String {
    occurrence_programs(t, tree)
        .iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn c7_completeness() -> Check {
    let (mut relaxed_eq, mut sat) = (0, 0);
    for seed in 0..200 {
        let t = tiny(seed);
        let brute = brute_relaxed(&t);
        let engine: BTreeSet<Vec<String>> = enumerate(&t.h, &CostModel::default())
            .map(|(tree, _)| {
                occurrence_programs(&t, &tree)
                    .iter()
                    .map(|p| p.to_string())
                    .collect()
            })
            .collect();
        ensure(
            engine == brute.keys().cloned().collect::<BTreeSet<_>>(),
            format!("seed {seed}: relaxed language differs for {}", t.text),
        )?;
        relaxed_eq += 1;
        let consistent = brute_consistent(&t);
        let names = t.targets.keys();
        let out = find_progs(
            &t.h,
            Assignment::unassigned(names),
            &t.m,
            &t.grammars(),
            &SearchConfig::default(),
            &mut |_| {},
        );
        match out {
            SearchOutcome::Found(a) => {
                ensure(
                    !consistent.is_empty(),
                    format!("seed {seed}: found {a} but brute force finds none"),
                )?;
                ensure(
                    evaluate_ground(&t.phi, &a.interpretation()),
                    format!("seed {seed}: {a} violates {}", t.text),
                )?;
                sat += 1;
            }
            SearchOutcome::Exhausted => ensure(
                consistent.is_empty(),
                format!(
                    "seed {seed}: exhausted but {} solutions exist",
                    consistent.len()
                ),
            )?,
            other => return Err(format!("seed {seed}: {other:?}")),
        }
    }
    Ok(format!(
        "{relaxed_eq} relaxed languages equal, {sat} satisfiable consistent specs solved"
    ))
}

fn c8_order() -> Check {
    let mut nonempty = 0;
    for seed in 1000..1100 {
        let t = tiny(seed);
        let costs: Vec<u32> = enumerate(&t.h, &CostModel::default())
            .map(|(_, c)| c)
            .collect();
        ensure(
            costs.windows(2).all(|w| w[0] <= w[1]),
            format!("seed {seed}: costs {costs:?}"),
        )?;
        let brute_min = brute_relaxed(&t).values().copied().min();
        ensure(
            costs.first().copied() == brute_min,
            format!(
                "seed {seed}: first {:?} vs min {brute_min:?}",
                costs.first()
            ),
        )?;
        nonempty += usize::from(brute_min.is_some());
    }
    Ok(format!(
        "100 automata ({nonempty} nonempty), costs ordered, first is minimal"
    ))
}

fn c9_propagate() -> Check {
    let mut pairs = 0;
    for seed in 2000..2100 {
        let t = tiny(seed);
        let f = t
            .targets
            .keys()
            .nth((seed % t.targets.len() as u64) as usize)
            .unwrap()
            .clone();
        let progs = programs(&t.targets[&f].grammar, t.targets[&f].depth_bound);
        let p = &progs[(seed as usize / 7) % progs.len()];
        let before: HashSet<HierarchicalTree> = enumerate(&t.h, &CostModel::default())
            .map(|(x, _)| x)
            .collect();
        let h2 = propagate(&t.h, p, &f, &t.m);
        let nodes = func_nodes(&t.h);
        for (tree, _) in enumerate(&h2, &CostModel::default()) {
            ensure(
                before.contains(&tree),
                format!("seed {seed}: propagated tree outside the original language"),
            )?;
            let vals = node_values(&tree);
            for v in nodes.values().filter(|(_, g)| *g == f).map(|(v, _)| *v) {
                let args: Vec<Value> = tree.children[v]
                    .iter()
                    .map(|&c: &NodeId| vals[c].clone())
                    .collect();
                ensure(
                    tree.trees[v].eval(&args) == p.eval(&args),
                    format!("seed {seed}: occurrence differs from {p}"),
                )?;
            }
        }
        pairs += 1;
    }
    Ok(format!("{pairs} pairs, subset and equivalence hold"))
}

fn c10_monotonic() -> Check {
    let mut rejected = 0;
    for r in encoder_runs().iter().chain([comparator_run()]) {
        for (cand, cex) in &r.report.rejected {
            ensure(
                !evaluate_ground(&cex.ground, &cand.interpretation()),
                format!("{}: {cand} satisfies {}", r.name, cex.ground),
            )?;
            rejected += 1;
        }
    }
    Ok(format!(
        "{rejected} rejected candidates each fail their counterexample"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("two-function end-to-end", c1_two_functions),
        ("HFTA acceptance golden", c2_hfta_golden),
        ("FTA construction golden", c3_fta_golden),
        ("encoder/decoder synthesis", c4_encoders),
        ("comparator synthesis", c5_comparator),
        ("enumerated trees satisfy the relaxed formula", c6_soundness),
        ("engine agrees with brute force", c7_completeness),
        ("enumeration order", c8_order),
        ("propagate", c9_propagate),
        ("monotonic strengthening", c10_monotonic),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let secs = t0.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {}: PASS {name} ({detail}) [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({why}) [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
