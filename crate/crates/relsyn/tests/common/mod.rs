//! Random tiny synthesis problems and brute-force oracles over them.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relsyn::dsl::{Grammar, ProgramAst, Rhs, SymId};
use relsyn::fta::BuildConfig;
use relsyn::hfta::{build_hfta, HNodeKind, Hfta, HierarchicalTree, NodeId, Target};
use relsyn::lang::{
    evaluate_ground, parse_formula, relax, Formula, Interpretation, OccurrenceMap, Symbol,
};
use relsyn::Value;

pub struct Tiny {
    pub text: String,
    pub phi: Formula,
    pub relaxed: Formula,
    pub m: OccurrenceMap,
    pub targets: BTreeMap<Symbol, Target>,
    pub h: Hfta,
}

impl Tiny {
    pub fn grammars(&self) -> BTreeMap<Symbol, (Grammar, usize)> {
        self.targets
            .iter()
            .map(|(f, t)| (f.clone(), ((*t.grammar).clone(), t.depth_bound)))
            .collect()
    }

    /// Occurrence symbols with their function, in a fixed order.
    pub fn occurrences(&self) -> Vec<(Symbol, Symbol)> {
        self.m
            .symbols()
            .flat_map(|f| self.m.occurrences(f).map(move |o| (o.clone(), f.clone())))
            .collect()
    }
}

const EXTRA: &[&str] = &[
    "inc(e)",
    "dbl(e)",
    "dec(e)",
    "plus(e, e)",
    "times(e, e)",
    "negate(e)",
    "1",
    "2",
];

fn grammar(rng: &mut ChaCha8Rng, name: &str, param: &str) -> Arc<Grammar> {
    let n = rng.gen_range(1..=2);
    let picks: Vec<&str> = EXTRA.choose_multiple(rng, n).copied().collect();
    let text = format!(
        "params {param}: Int\nstart e\ne -> {param} | {}\n",
        picks.join(" | ")
    );
    Arc::new(Grammar::parse(name, &text).expect("tiny grammar"))
}

fn term(rng: &mut ChaCha8Rng, funs: &[&str], depth: usize) -> String {
    if depth == 0 || rng.gen_bool(0.3) {
        return rng.gen_range(0..=3).to_string();
    }
    let f = funs.choose(rng).unwrap();
    let inner = if rng.gen_bool(0.6) {
        rng.gen_range(0..=3).to_string()
    } else {
        term(rng, funs, depth - 1)
    };
    format!("{f}({inner})")
}

fn atom(rng: &mut ChaCha8Rng, funs: &[&str]) -> String {
    let rel = ["==", "==", "!=", "<", "<="].choose(rng).unwrap();
    let l = term(rng, funs, 2);
    let r = term(rng, funs, 2);
    let a = format!("{l} {rel} {r}");
    if rng.gen_bool(0.15) {
        format!("!({a})")
    } else {
        a
    }
}

/// A random problem with one or two unary integer functions, grammars of at
/// most three productions, depth at most three and at most four function
/// occurrences.
pub fn tiny(seed: u64) -> Tiny {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let two = rng.gen_bool(0.5);
        let funs: Vec<&str> = if two { vec!["f", "g"] } else { vec!["f"] };
        let mut text = atom(&mut rng, &funs);
        if rng.gen_bool(0.5) {
            let conn = ["&&", "&&", "||"].choose(&mut rng).unwrap();
            text = format!("{text} {conn} {}", atom(&mut rng, &funs));
        }
        let phi = parse_formula(&text).expect("generated formula parses");
        let mut targets = BTreeMap::new();
        for (f, p) in funs.iter().zip(["x", "y"]) {
            let depth = rng.gen_range(2..=3);
            targets.insert(
                Symbol::new(f),
                Target {
                    grammar: grammar(&mut rng, f, p),
                    depth_bound: depth,
                },
            );
        }
        let names: BTreeSet<Symbol> = targets.keys().cloned().collect();
        let (relaxed, m) = relax(&phi, &names);
        let occs: usize = names.iter().map(|f| m.occurrence_count(f)).sum();
        if occs == 0 || occs > 4 || names.iter().any(|f| m.occurrence_count(f) == 0) {
            continue;
        }
        let h = build_hfta(&relaxed, &targets, &m, &BuildConfig::with_depth(3)).expect("tiny HFTA");
        return Tiny {
            text,
            phi,
            relaxed,
            m,
            targets,
            h,
        };
    }
}

/// Every program of `g` whose derivation depth is at most `depth`. A
/// parameter leaf and every chain step count as one level.
pub fn programs(g: &Grammar, depth: usize) -> Vec<ProgramAst> {
    fn go(g: &Grammar, s: SymId, d: usize, out: &mut Vec<ProgramAst>) {
        if d == 0 {
            return;
        }
        if let Some(i) = g.params.iter().position(|&p| p == s) {
            out.push(ProgramAst::param(i, g.symbol_name(s)));
        }
        for prod in g.productions.iter().filter(|p| p.lhs == s) {
            match &prod.rhs {
                Rhs::Const(v) => out.push(ProgramAst::constant(v.clone())),
                Rhs::Chain(c) => go(g, *c, d - 1, out),
                Rhs::Op { op, args } if args.is_empty() => out.push(ProgramAst::op(op, vec![])),
                Rhs::Op { op, args } => {
                    let mut combos: Vec<Vec<ProgramAst>> = vec![vec![]];
                    for a in args {
                        let mut kids = Vec::new();
                        go(g, *a, d - 1, &mut kids);
                        combos = combos
                            .into_iter()
                            .flat_map(|c| {
                                kids.iter().map(move |k| {
                                    let mut c = c.clone();
                                    c.push(k.clone());
                                    c
                                })
                            })
                            .collect();
                    }
                    out.extend(combos.into_iter().map(|c| ProgramAst::op(op, c)));
                }
            }
        }
    }
    let mut out = Vec::new();
    go(g, g.start, depth, &mut out);
    let mut seen = BTreeSet::new();
    out.retain(|p| seen.insert(p.to_string()));
    out
}

/// Every tuple in `lists`' cartesian product.
pub fn tuples<T: Clone>(lists: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = vec![vec![]];
    for l in lists {
        out = out
            .into_iter()
            .flat_map(|t| {
                l.iter().map(move |x| {
                    let mut t = t.clone();
                    t.push(x.clone());
                    t
                })
            })
            .collect();
    }
    out
}

/// Occurrence programs (as text, in [`Tiny::occurrences`] order) satisfying
/// the relaxed formula, with the cost of the tuple.
pub fn brute_relaxed(t: &Tiny) -> BTreeMap<Vec<String>, u32> {
    let occs = t.occurrences();
    let lists: Vec<Vec<ProgramAst>> = occs
        .iter()
        .map(|(_, f)| programs(&t.targets[f].grammar, t.targets[f].depth_bound))
        .collect();
    let mut out = BTreeMap::new();
    for tuple in tuples(&lists) {
        let interp: Interpretation = occs
            .iter()
            .map(|(o, _)| o.clone())
            .zip(tuple.iter().cloned())
            .collect();
        if evaluate_ground(&t.relaxed, &interp) {
            let cost = tuple.iter().map(|p| p.size() as u32).sum();
            out.insert(tuple.iter().map(|p| p.to_string()).collect(), cost);
        }
    }
    out
}

/// Functionally consistent assignments satisfying the original formula.
pub fn brute_consistent(t: &Tiny) -> Vec<Interpretation> {
    let funs: Vec<&Symbol> = t.targets.keys().collect();
    let lists: Vec<Vec<ProgramAst>> = funs
        .iter()
        .map(|f| programs(&t.targets[*f].grammar, t.targets[*f].depth_bound))
        .collect();
    tuples(&lists)
        .into_iter()
        .map(|tuple| {
            funs.iter()
                .map(|f| (*f).clone())
                .zip(tuple)
                .collect::<Interpretation>()
        })
        .filter(|i| evaluate_ground(&t.phi, i))
        .collect()
}

/// Occurrence nodes of the HFTA keyed by occurrence symbol.
pub fn func_nodes(h: &Hfta) -> BTreeMap<Symbol, (NodeId, Symbol)> {
    h.nodes()
        .filter_map(|(v, n)| match &n.kind {
            HNodeKind::Func { occ, fun } => Some((occ.clone(), (v, fun.clone()))),
            _ => None,
        })
        .collect()
}

/// The occurrence programs of a hierarchical tree, in [`Tiny::occurrences`] order.
pub fn occurrence_programs(t: &Tiny, tree: &HierarchicalTree) -> Vec<ProgramAst> {
    let nodes = func_nodes(&t.h);
    t.occurrences()
        .iter()
        .map(|(o, _)| tree.trees[nodes[o].0].clone())
        .collect()
}

/// Value computed at every node of a hierarchical tree.
pub fn node_values(tree: &HierarchicalTree) -> Vec<Value> {
    fn go(tree: &HierarchicalTree, v: NodeId, out: &mut Vec<Option<Value>>) -> Value {
        let args: Vec<Value> = tree.children[v].iter().map(|&c| go(tree, c, out)).collect();
        let val = tree.trees[v].eval(&args);
        out[v] = Some(val.clone());
        val
    }
    let mut out = vec![None; tree.trees.len()];
    go(tree, tree.root, &mut out);
    out.into_iter()
        .map(|v| v.expect("every node is reachable from the root"))
        .collect()
}

/// Interpretation of the occurrence symbols given by a hierarchical tree.
pub fn occurrence_interpretation(t: &Tiny, tree: &HierarchicalTree) -> Interpretation {
    t.occurrences()
        .into_iter()
        .map(|(o, _)| o)
        .zip(occurrence_programs(t, tree))
        .collect()
}
