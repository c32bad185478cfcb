//! Functional consistency: every occurrence of a function gets the same
//! program. Programs are chosen one function at a time, in cost order, and
//! propagated to all occurrences before recursing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::Instant;

use rustc_hash::FxHashSet;

use crate::dsl::grammar::{Grammar, Rhs, SymId};
use crate::dsl::{CostModel, ProgramAst};
use crate::fta::StateId;
use crate::hfta::{Enumerator, Hfta, NodeId, Viability};
use crate::lang::{Interpretation, OccurrenceMap, Symbol};
use crate::values::Value;

/// Programs chosen so far; `None` marks an unassigned function.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment(BTreeMap<Symbol, Option<ProgramAst>>);

impl Assignment {
    pub fn unassigned<'a>(symbols: impl IntoIterator<Item = &'a Symbol>) -> Assignment {
        Assignment(symbols.into_iter().map(|s| (s.clone(), None)).collect())
    }

    pub fn get(&self, f: &Symbol) -> Option<&ProgramAst> {
        self.0.get(f).and_then(Option::as_ref)
    }

    pub fn set(&mut self, f: Symbol, p: ProgramAst) {
        self.0.insert(f, Some(p));
    }

    pub fn symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.0.keys()
    }

    pub fn is_total(&self) -> bool {
        self.0.values().all(Option::is_some)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, Option<&ProgramAst>)> {
        self.0.iter().map(|(s, p)| (s, p.as_ref()))
    }

    /// The assigned programs as an interpretation of the function symbols.
    pub fn interpretation(&self) -> Interpretation {
        self.0
            .iter()
            .filter_map(|(s, p)| p.clone().map(|p| (s.clone(), p)))
            .collect()
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (s, p)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match p {
                Some(p) => write!(f, "{s} = {p}")?,
                None => write!(f, "{s} = ?")?,
            }
        }
        Ok(())
    }
}

/// The next function to assign: most occurrences first, then by name.
pub fn choose_unassigned(p: &Assignment, m: &OccurrenceMap) -> Option<Symbol> {
    p.0.iter()
        .filter(|(_, prog)| prog.is_none())
        .map(|(s, _)| s)
        .min_by(|a, b| {
            m.occurrence_count(b)
                .cmp(&m.occurrence_count(a))
                .then_with(|| a.cmp(b))
        })
        .cloned()
}

fn occurrence_nodes(h: &Hfta, f: &Symbol, m: &OccurrenceMap) -> Vec<NodeId> {
    let occs: BTreeSet<&Symbol> = m.occurrences(f).collect();
    h.nodes()
        .filter(|(_, n)| matches!(&n.kind, crate::hfta::HNodeKind::Func { occ, .. } if occs.contains(occ)))
        .map(|(v, _)| v)
        .collect()
}

/// Restricts the finals of every occurrence node of `f` to those `p`
/// reaches. Links leaving removed finals disappear with them.
pub fn propagate(h: &Hfta, p: &ProgramAst, f: &Symbol, m: &OccurrenceMap) -> Hfta {
    let mut out = h.clone();
    for v in occurrence_nodes(h, f, m) {
        out.set_finals(v, h.node(v).fta.reached_among(p, h.finals(v)));
    }
    out
}

/// [`propagate`] over the given occurrence nodes, or `None` as soon as one
/// of them keeps no final state (the result would be empty).
fn propagate_nodes(h: &Hfta, p: &ProgramAst, nodes: &[NodeId]) -> Option<Hfta> {
    let mut order = nodes.to_vec();
    order.sort_by_key(|&v| (h.finals(v).len(), v));
    let mut reached = Vec::with_capacity(order.len());
    for &v in &order {
        let r = h.node(v).fta.reached_among(p, h.finals(v));
        if r.is_empty() {
            return None;
        }
        reached.push((v, r));
    }
    let mut out = h.clone();
    for (v, r) in reached {
        out.set_finals(v, r);
    }
    Some(out)
}

/// Minimal-cost program of `g` within the depth bound.
pub fn cheapest_program(g: &Grammar, costs: &CostModel, depth: usize) -> Option<ProgramAst> {
    #[derive(Clone)]
    enum Via {
        Param(usize),
        Prod(usize),
    }
    let n = g.symbols.len();
    let mut rows: Vec<Vec<Option<(u64, Via)>>> = Vec::new();
    for d in 1..=depth {
        let mut row: Vec<Option<(u64, Via)>> = vec![None; n];
        for (i, &s) in g.params.iter().enumerate() {
            row[s.index()] = Some((costs.param, Via::Param(i)));
        }
        for (pi, prod) in g.productions.iter().enumerate() {
            let kids = prod.children();
            let sum = if kids.is_empty() {
                Some(0)
            } else if d == 1 {
                None
            } else {
                kids.iter().try_fold(0u64, |acc, k| {
                    rows[d - 2][k.index()].as_ref().map(|e| acc + e.0)
                })
            };
            if let Some(c) = sum.map(|s| s + costs.production_cost(prod)) {
                let slot = &mut row[prod.lhs.index()];
                if slot.as_ref().is_none_or(|e| c < e.0) {
                    *slot = Some((c, Via::Prod(pi)));
                }
            }
        }
        rows.push(row);
    }
    fn build(g: &Grammar, rows: &[Vec<Option<(u64, Via)>>], s: SymId, d: usize) -> ProgramAst {
        match &rows[d - 1][s.index()].as_ref().expect("derivable").1 {
            Via::Param(i) => ProgramAst::param(*i, g.symbol_name(g.params[*i])),
            Via::Prod(pi) => match &g.productions[*pi].rhs {
                Rhs::Const(c) => ProgramAst::constant(c.clone()),
                Rhs::Chain(c) => build(g, rows, *c, d - 1),
                Rhs::Op { op, args } => {
                    ProgramAst::op(op, args.iter().map(|a| build(g, rows, *a, d - 1)).collect())
                }
            },
        }
    }
    rows.last()?[g.start.index()].as_ref()?;
    Some(build(g, &rows, g.start, depth))
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub costs: CostModel,
    /// Maximum candidates tried for one function at one search level.
    pub candidate_cap: usize,
    pub deadline: Option<Instant>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            costs: CostModel::default(),
            candidate_cap: 10_000,
            deadline: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(Assignment),
    /// No consistent assignment exists within the bounds.
    Exhausted,
    Timeout,
    CandidateCap {
        symbol: Symbol,
    },
}

/// One search decision, for tracing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceEvent {
    Choose {
        symbol: Symbol,
        occurrences: usize,
        node: NodeId,
        occurrence: Symbol,
    },
    Try {
        symbol: Symbol,
        program: String,
        cost: u32,
        empty: bool,
    },
    Unconstrained {
        symbol: Symbol,
        program: String,
    },
    Backtrack {
        symbol: Symbol,
    },
    Done,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::Choose {
                symbol,
                occurrences,
                node,
                occurrence,
            } => {
                write!(
                    f,
                    "choose {symbol} ({occurrences} occurrences) at {occurrence} (node {node})"
                )
            }
            TraceEvent::Try {
                symbol,
                program,
                cost,
                empty,
            } => {
                write!(
                    f,
                    "try {symbol} = {program} (cost {cost}): {}",
                    if *empty { "empty" } else { "nonempty" }
                )
            }
            TraceEvent::Unconstrained { symbol, program } => {
                write!(f, "unconstrained {symbol} = {program}")
            }
            TraceEvent::Backtrack { symbol } => write!(f, "backtrack {symbol}"),
            TraceEvent::Done => f.write_str("done"),
        }
    }
}

enum Abort {
    Timeout,
    Cap(Symbol),
}

struct Search<'a> {
    m: &'a OccurrenceMap,
    cfg: &'a SearchConfig,
    grammars: &'a BTreeMap<Symbol, (Grammar, usize)>,
    trace: &'a mut dyn FnMut(&TraceEvent),
}

impl Search<'_> {
    fn go(
        &mut self,
        h: &Hfta,
        live: &Viability,
        p: Assignment,
    ) -> Result<Option<Assignment>, Abort> {
        let Some(f) = choose_unassigned(&p, self.m) else {
            (self.trace)(&TraceEvent::Done);
            return Ok(Some(p));
        };
        let nodes = occurrence_nodes(h, &f, self.m);
        if nodes.is_empty() {
            let Some((g, depth)) = self.grammars.get(&f) else {
                return Ok(None);
            };
            let Some(prog) = cheapest_program(g, &self.cfg.costs, *depth) else {
                return Ok(None);
            };
            (self.trace)(&TraceEvent::Unconstrained {
                symbol: f.clone(),
                program: prog.to_string(),
            });
            let mut p = p;
            p.set(f, prog);
            return self.go(h, live, p);
        }
        let mut e = Enumerator::new(h, &self.cfg.costs);
        let mut contexts: Vec<Vec<Value>> = nodes
            .iter()
            .flat_map(|&u| h.node(u).fta.contexts().iter().cloned())
            .collect();
        contexts.sort();
        contexts.dedup();
        e.distinct_on(&contexts);
        // Enumerate where programs must be most expensive: every candidate
        // below that cost would fail this occurrence anyway.
        let v = *nodes
            .iter()
            .min_by_key(|&&v| {
                (
                    std::cmp::Reverse(e.min_program_cost(v)),
                    e.viable_finals(v),
                    h.finals(v).len(),
                    v,
                )
            })
            .unwrap();
        let occurrence = match &h.node(v).kind {
            crate::hfta::HNodeKind::Func { occ, .. } => occ.clone(),
            _ => unreachable!(),
        };
        (self.trace)(&TraceEvent::Choose {
            symbol: f.clone(),
            occurrences: nodes.len(),
            node: v,
            occurrence,
        });
        let mut seen_progs: FxHashSet<ProgramAst> = FxHashSet::default();
        let mut seen_keys: FxHashSet<Vec<Vec<StateId>>> = FxHashSet::default();
        let mut tried = 0usize;
        for (prog, _, cost) in e.node_programs(v) {
            if self.cfg.deadline.is_some_and(|d| Instant::now() >= d) {
                return Err(Abort::Timeout);
            }
            if !seen_progs.insert(prog.clone()) {
                continue;
            }
            let Some(next) = propagate_nodes(h, &prog, &nodes) else {
                (self.trace)(&TraceEvent::Try {
                    symbol: f.clone(),
                    program: prog.to_string(),
                    cost,
                    empty: true,
                });
                continue;
            };
            let key: Vec<Vec<StateId>> = nodes.iter().map(|&u| next.finals(u).to_vec()).collect();
            if !seen_keys.insert(key) {
                continue;
            }
            tried += 1;
            if tried > self.cfg.candidate_cap {
                return Err(Abort::Cap(f));
            }
            let next_live = live.update(&next, &self.cfg.costs, &nodes);
            let empty = next_live.is_empty();
            (self.trace)(&TraceEvent::Try {
                symbol: f.clone(),
                program: prog.to_string(),
                cost,
                empty,
            });
            if empty {
                continue;
            }
            let mut p2 = p.clone();
            p2.set(f.clone(), prog);
            if let Some(done) = self.go(&next, &next_live, p2)? {
                return Ok(Some(done));
            }
        }
        (self.trace)(&TraceEvent::Backtrack { symbol: f });
        Ok(None)
    }
}

/// Searches for a functionally consistent assignment in the language of
/// `h`. `grammars` supplies programs for functions absent from `h`.
pub fn find_progs(
    h: &Hfta,
    p: Assignment,
    m: &OccurrenceMap,
    grammars: &BTreeMap<Symbol, (Grammar, usize)>,
    cfg: &SearchConfig,
    trace: &mut dyn FnMut(&TraceEvent),
) -> SearchOutcome {
    let mut s = Search {
        m,
        cfg,
        grammars,
        trace,
    };
    match s.go(h, &Viability::new(h, &cfg.costs), p) {
        Ok(Some(a)) => SearchOutcome::Found(a),
        Ok(None) => SearchOutcome::Exhausted,
        Err(Abort::Timeout) => SearchOutcome::Timeout,
        Err(Abort::Cap(symbol)) => SearchOutcome::CandidateCap { symbol },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_program;
    use crate::fta::BuildConfig;
    use crate::hfta::{build_hfta, enumerate, is_empty, Target};
    use crate::lang::{evaluate_ground, parse_formula, relax};
    use std::sync::Arc;

    fn setup(
        formula: &str,
        gs: &[(&str, &str, usize)],
    ) -> (Hfta, OccurrenceMap, BTreeMap<Symbol, (Grammar, usize)>) {
        let phi = parse_formula(formula).unwrap();
        let mut targets = BTreeMap::new();
        let mut grammars = BTreeMap::new();
        for (name, text, depth) in gs {
            let g = Grammar::parse(name, text).unwrap();
            grammars.insert(Symbol::new(name), (g.clone(), *depth));
            targets.insert(
                Symbol::new(name),
                Target {
                    grammar: Arc::new(g),
                    depth_bound: *depth,
                },
            );
        }
        let (relaxed, m) = relax(&phi, &targets.keys().cloned().collect());
        (
            build_hfta(&relaxed, &targets, &m, &BuildConfig::default()).unwrap(),
            m,
            grammars,
        )
    }

    const INC: &str = "params x\nstart e\ne -> x | inc(e)";
    const DBL: &str = "params y\nstart t\nt -> y | dbl(t)";

    #[test]
    fn example_4_6() {
        let (h, m, gs) = setup("f(2) == g(f(1))", &[("f", INC, 3), ("g", DBL, 3)]);
        let g = gs[&Symbol::new("f")].0.clone();
        let h2 = propagate(
            &h,
            &parse_program("inc(x)", &g).unwrap(),
            &Symbol::new("f"),
            &m,
        );
        assert!(is_empty(&h2));
        let h3 = propagate(&h, &parse_program("x", &g).unwrap(), &Symbol::new("f"), &m);
        assert_eq!(enumerate(&h3, &CostModel::default()).count(), 1);
        let mut lines = Vec::new();
        let start = Assignment::unassigned(gs.keys());
        let out = find_progs(&h, start, &m, &gs, &SearchConfig::default(), &mut |e| {
            lines.push(e.to_string())
        });
        let SearchOutcome::Found(a) = out else {
            panic!("{out:?}")
        };
        assert_eq!(a.to_string(), "f = x, g = dbl(y)");
        assert_eq!(
            lines,
            [
                "choose f (2 occurrences) at f#1 (node 1)",
                "try f = x (cost 4): nonempty",
                "choose g (1 occurrences) at g#1 (node 4)",
                "try g = dbl(y) (cost 4): nonempty",
                "done",
            ]
        );
        assert!(evaluate_ground(
            &parse_formula("f(2) == g(f(1))").unwrap(),
            &a.interpretation()
        ));
    }

    #[test]
    fn two_examples() {
        let (h, m, gs) = setup("f(1) == 2 && f(2) == 3", &[("f", INC, 4)]);
        let out = find_progs(
            &h,
            Assignment::unassigned(gs.keys()),
            &m,
            &gs,
            &SearchConfig::default(),
            &mut |_| {},
        );
        assert_eq!(out.clone(), {
            let mut a = Assignment::unassigned(gs.keys());
            a.set(
                Symbol::new("f"),
                parse_program("inc(x)", &gs[&Symbol::new("f")].0).unwrap(),
            );
            SearchOutcome::Found(a)
        });
    }

    #[test]
    fn contradiction_is_exhausted() {
        let (h, m, gs) = setup("f(1) == 1 && f(1) == 2", &[("f", INC, 4)]);
        let out = find_progs(
            &h,
            Assignment::unassigned(gs.keys()),
            &m,
            &gs,
            &SearchConfig::default(),
            &mut |_| {},
        );
        assert_eq!(out, SearchOutcome::Exhausted);
    }

    #[test]
    fn choose_order() {
        let mut m = OccurrenceMap::new();
        m.insert("f".into(), "f#1".into());
        m.insert("f".into(), "f#2".into());
        m.insert("g".into(), "g#1".into());
        let mut p = Assignment::unassigned([Symbol::new("f"), Symbol::new("g")].iter());
        assert_eq!(choose_unassigned(&p, &m), Some(Symbol::new("f")));
        p.set("f".into(), ProgramAst::param(0, "x"));
        assert_eq!(choose_unassigned(&p, &m), Some(Symbol::new("g")));
        p.set("g".into(), ProgramAst::param(0, "y"));
        assert_eq!(choose_unassigned(&p, &m), None);
    }

    #[test]
    fn cheapest() {
        let g = Grammar::parse("g", "params x\nstart e\ne -> inc(e) | x").unwrap();
        assert_eq!(
            cheapest_program(&g, &CostModel::default(), 2)
                .unwrap()
                .to_string(),
            "x"
        );
        let g = Grammar::parse("g", "params x\nstart e\ne -> inc(x)").unwrap();
        assert_eq!(cheapest_program(&g, &CostModel::default(), 1), None);
        assert_eq!(
            cheapest_program(&g, &CostModel::default(), 2)
                .unwrap()
                .to_string(),
            "inc(x)"
        );
    }
}
