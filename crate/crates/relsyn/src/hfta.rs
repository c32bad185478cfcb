//! Hierarchical tree automata: one automaton per subterm of a relaxed
//! ground formula, linked child-final to parent-parameter.
//!
//! Every node's automaton is built over the input contexts formed by the
//! distinct final values of its children. A child final with value `c`
//! links to the parent's parameter state `(x_i, c, k)` for every context
//! `k` whose `i`-th value is `c`; these links are implied by the current
//! finals, so restricting finals also removes the links leaving them.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt::Write as _;
use std::sync::{Arc, OnceLock};

use rustc_hash::{FxHashMap, FxHashSet};
use smallvec::SmallVec;

use crate::dsl::grammar::{Grammar, Rhs};
use crate::dsl::{semantics, CostModel, ProgramAst};
use crate::fta::{build_contexts, BuildConfig, Fta, FtaError, Label, StateId, TransId};
use crate::lang::{Conn, Formula, OccurrenceMap, Rel, Symbol, Term};
use crate::values::Value;

pub type NodeId = usize;

/// Grammar and depth bound of one synthesis target.
#[derive(Clone, Debug)]
pub struct Target {
    pub grammar: Arc<Grammar>,
    pub depth_bound: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HNodeKind {
    /// An occurrence of a synthesis target.
    Func {
        occ: Symbol,
        fun: Symbol,
    },
    /// A function with fixed semantics such as `sgn`.
    Interp(Symbol),
    Const(Value),
    Atom(Rel),
    Logical(Conn),
    Neg,
}

pub struct HNode {
    pub kind: HNodeKind,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
    pub fta: Fta,
}

struct Shape {
    nodes: Vec<HNode>,
    root: NodeId,
    tables: Vec<OnceLock<(CostModel, Arc<InsideTable>)>>,
    /// Per node and state: index of the state's value among the node's
    /// distinct final values at construction, `NO_VALUE` for other states.
    value_ids: Vec<Vec<u32>>,
    value_counts: Vec<usize>,
    /// Per node and argument: the mixed-radix stride of that argument's
    /// value index within a context index.
    strides: Vec<Vec<usize>>,
}

const NO_VALUE: u32 = u32::MAX;

/// A version space over hierarchical trees. Cloning is cheap: the node
/// automata are shared and only the final-state sets are per copy.
#[derive(Clone)]
pub struct Hfta {
    shape: Arc<Shape>,
    finals: Vec<Arc<Vec<StateId>>>,
}

/// One program tree per HFTA node, in the HFTA's node order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HierarchicalTree {
    pub trees: Vec<ProgramAst>,
    pub children: Vec<Vec<NodeId>>,
    pub root: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HftaError {
    #[error(transparent)]
    Fta(#[from] FtaError),
    #[error("no grammar for function `{0}`")]
    UnknownFunction(Symbol),
    #[error("hierarchical tree does not match the automaton's node structure")]
    ShapeMismatch,
}

fn op_grammar(name: &str, arity: usize) -> Arc<Grammar> {
    let op =
        semantics::lookup(name, arity).unwrap_or_else(|| panic!("missing builtin {name}/{arity}"));
    Arc::new(Grammar::single_op(op))
}

fn distinct_values(a: &Fta, finals: &[StateId]) -> Vec<Value> {
    let mut vs: Vec<Value> = finals.iter().map(|q| a.state(*q).value.clone()).collect();
    vs.sort();
    vs.dedup();
    vs
}

fn product(sets: &[Vec<Value>]) -> Vec<Vec<Value>> {
    let mut out: Vec<Vec<Value>> = vec![Vec::new()];
    for set in sets {
        out = out
            .iter()
            .flat_map(|prefix| {
                set.iter().map(move |v| {
                    let mut t = prefix.clone();
                    t.push(v.clone());
                    t
                })
            })
            .collect();
    }
    out
}

struct Builder<'a> {
    targets: &'a BTreeMap<Symbol, Target>,
    cfg: &'a BuildConfig,
    nodes: Vec<HNode>,
    finals: Vec<Vec<StateId>>,
    states: usize,
}

impl Builder<'_> {
    fn push(
        &mut self,
        kind: HNodeKind,
        children: Vec<NodeId>,
        g: Arc<Grammar>,
        depth: usize,
    ) -> Result<NodeId, HftaError> {
        let sets: Vec<Vec<Value>> = children
            .iter()
            .map(|&c| distinct_values(&self.nodes[c].fta, &self.finals[c]))
            .collect();
        let ceiling = self.cfg.state_ceiling.saturating_sub(self.states);
        let cfg = BuildConfig {
            depth_bound: depth,
            state_ceiling: ceiling,
            ..*self.cfg
        };
        let fta = build_contexts(g, product(&sets), &cfg).map_err(|e| match e {
            FtaError::CapacityExceeded { grammar, .. } => FtaError::CapacityExceeded {
                grammar,
                ceiling: self.cfg.state_ceiling,
            },
        })?;
        self.states += fta.state_count();
        let id = self.nodes.len();
        for &c in &children {
            self.nodes[c].parent = Some(id);
        }
        self.finals.push(fta.finals().to_vec());
        self.nodes.push(HNode {
            kind,
            children,
            parent: None,
            fta,
        });
        Ok(id)
    }

    fn term(&mut self, t: &Term, m: &OccurrenceMap) -> Result<NodeId, HftaError> {
        match t {
            Term::Const(v) => self.push(
                HNodeKind::Const(v.clone()),
                Vec::new(),
                Arc::new(Grammar::constant(v.clone())),
                1,
            ),
            Term::Var(v) => panic!("free variable `{v}` in a ground formula"),
            Term::Apply(f, args) => {
                let children = args
                    .iter()
                    .map(|a| self.term(a, m))
                    .collect::<Result<Vec<_>, _>>()?;
                let fun = m.original(f).cloned().unwrap_or_else(|| f.erase());
                if let Some(target) = self.targets.get(&fun) {
                    let kind = HNodeKind::Func {
                        occ: f.clone(),
                        fun,
                    };
                    self.push(kind, children, target.grammar.clone(), target.depth_bound)
                } else if crate::values::interpreted(f.as_str()).is_some() {
                    self.push(
                        HNodeKind::Interp(f.clone()),
                        children,
                        op_grammar(f.as_str(), args.len()),
                        2,
                    )
                } else {
                    Err(HftaError::UnknownFunction(fun))
                }
            }
        }
    }

    fn formula(&mut self, phi: &Formula, m: &OccurrenceMap) -> Result<NodeId, HftaError> {
        match phi {
            Formula::Atom(l, r, t) => {
                let kids = vec![self.term(l, m)?, self.term(t, m)?];
                self.push(HNodeKind::Atom(*r), kids, op_grammar(r.builtin(), 2), 2)
            }
            Formula::Binary(l, c, r) => {
                let kids = vec![self.formula(l, m)?, self.formula(r, m)?];
                self.push(HNodeKind::Logical(*c), kids, op_grammar(c.builtin(), 2), 2)
            }
            Formula::Not(b) => {
                let kids = vec![self.formula(b, m)?];
                self.push(HNodeKind::Neg, kids, op_grammar("not", 1), 2)
            }
        }
    }
}

/// Builds the HFTA of a relaxed ground formula. The root's finals are its
/// `true` states.
pub fn build_hfta(
    phi: &Formula,
    targets: &BTreeMap<Symbol, Target>,
    m: &OccurrenceMap,
    cfg: &BuildConfig,
) -> Result<Hfta, HftaError> {
    let mut b = Builder {
        targets,
        cfg,
        nodes: Vec::new(),
        finals: Vec::new(),
        states: 0,
    };
    let root = b.formula(phi, m)?;
    let root_fta = &b.nodes[root].fta;
    b.finals[root].retain(|q| root_fta.state(*q).value == Value::Bool(true));
    let tables = (0..b.nodes.len()).map(|_| OnceLock::new()).collect();
    let mut value_ids = Vec::with_capacity(b.nodes.len());
    let mut value_counts = Vec::with_capacity(b.nodes.len());
    for (v, n) in b.nodes.iter().enumerate() {
        let finals = if v == root {
            n.fta.finals()
        } else {
            &b.finals[v]
        };
        let values = distinct_values(&n.fta, finals);
        let mut ids = vec![NO_VALUE; n.fta.state_count()];
        for &f in finals {
            ids[f.index()] = values
                .binary_search(&n.fta.state(f).value)
                .expect("final value") as u32;
        }
        value_ids.push(ids);
        value_counts.push(values.len());
    }
    let strides = b
        .nodes
        .iter()
        .map(|n| {
            let mut st = vec![0usize; n.children.len()];
            let mut acc = 1usize;
            for (i, &c) in n.children.iter().enumerate().rev() {
                st[i] = acc;
                acc *= value_counts[c];
            }
            st
        })
        .collect();
    Ok(Hfta {
        shape: Arc::new(Shape {
            nodes: b.nodes,
            root,
            tables,
            value_ids,
            value_counts,
            strides,
        }),
        finals: b.finals.into_iter().map(Arc::new).collect(),
    })
}

impl Hfta {
    pub fn root(&self) -> NodeId {
        self.shape.root
    }

    pub fn node_count(&self) -> usize {
        self.shape.nodes.len()
    }

    pub fn node(&self, v: NodeId) -> &HNode {
        &self.shape.nodes[v]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &HNode)> {
        self.shape.nodes.iter().enumerate()
    }

    pub fn finals(&self, v: NodeId) -> &[StateId] {
        &self.finals[v]
    }

    pub fn set_finals(&mut self, v: NodeId, finals: Vec<StateId>) {
        self.finals[v] = Arc::new(finals);
    }

    pub fn state_count(&self) -> usize {
        self.shape.nodes.iter().map(|n| n.fta.state_count()).sum()
    }

    /// Index of the value of final `f` of node `v` among the node's values.
    fn value_id(&self, v: NodeId, f: StateId) -> u32 {
        self.shape.value_ids[v][f.index()]
    }

    /// Index of argument `i`'s value in context `ctx` of node `v`, among the
    /// values of that child.
    fn arg_value_id(&self, v: NodeId, ctx: u32, i: usize) -> u32 {
        let child = self.node(v).children[i];
        ((ctx as usize / self.shape.strides[v][i]) % self.shape.value_counts[child]) as u32
    }

    /// Nodes holding an occurrence of target `f`.
    pub fn occurrence_nodes(&self, f: &Symbol) -> Vec<NodeId> {
        self.nodes()
            .filter(|(_, n)| matches!(&n.kind, HNodeKind::Func { fun, .. } if fun == f))
            .map(|(v, _)| v)
            .collect()
    }

    /// The current inter-automaton transitions into node `v`, as
    /// (argument index, child final, parent parameter state).
    pub fn links_into(&self, v: NodeId) -> Vec<(usize, StateId, StateId)> {
        let n = self.node(v);
        let mut out = Vec::new();
        for (i, &c) in n.children.iter().enumerate() {
            let child = &self.node(c).fta;
            for &g in self.finals(c) {
                let val = &child.state(g).value;
                for (k, ctx) in n.fta.contexts().iter().enumerate() {
                    if ctx[i] == *val {
                        out.push((i, g, n.fta.param_state(i, k as u32)));
                    }
                }
            }
        }
        out
    }

    fn node_label(&self, v: NodeId) -> String {
        match &self.node(v).kind {
            HNodeKind::Func { occ, .. } => occ.to_string(),
            HNodeKind::Interp(s) => s.to_string(),
            HNodeKind::Const(c) => c.to_string(),
            HNodeKind::Atom(r) => r.token().to_string(),
            HNodeKind::Logical(c) => c.token().to_string(),
            HNodeKind::Neg => "!".to_string(),
        }
    }

    /// Graphviz rendering: one cluster per node listing its transitions,
    /// inter-automaton transitions as dashed edges.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph hfta {\n  node [shape=box, fontname=monospace];\n");
        for (v, n) in self.nodes() {
            let body = n
                .fta
                .dump(self.finals(v))
                .replace('\\', "\\\\")
                .replace('"', "\\\"")
                .replace('\n', "\\l");
            let _ = writeln!(
                out,
                "  v{v} [label=\"v{v}: {}\\l{body}\"];",
                self.node_label(v).replace('"', "\\\"")
            );
        }
        for (v, n) in self.nodes() {
            for (i, &c) in n.children.iter().enumerate() {
                let links = self.links_into(v).into_iter().filter(|l| l.0 == i).count();
                let _ = writeln!(
                    out,
                    "  v{c} -> v{v} [style=dashed, label=\"x{} ({links})\"];",
                    i + 1
                );
            }
        }
        out.push_str("}\n");
        out
    }

    fn table(&self, v: NodeId, costs: &CostModel) -> Arc<InsideTable> {
        let slot = &self.shape.tables[v];
        if let Some((m, t)) = slot.get() {
            if m == costs {
                return t.clone();
            }
        }
        let t = Arc::new(InsideTable::compute(self.node(v), costs));
        let _ = slot.set((costs.clone(), t.clone()));
        t
    }

    fn weight(&self, v: NodeId, t: TransId, costs: &CostModel) -> u32 {
        let n = self.node(v);
        if !matches!(n.kind, HNodeKind::Func { .. }) {
            return 0;
        }
        let c = match n.fta.label(t) {
            Label::Input(_) => costs.param,
            Label::Prod(p) => costs.production_cost(&n.fta.grammar().productions[p as usize]),
        };
        c.min(u32::MAX as u64 / 4) as u32
    }
}

const INF: u32 = u32::MAX;

fn add(a: u32, b: u32) -> u32 {
    if a == INF || b == INF {
        INF
    } else {
        a.saturating_add(b).min(INF - 1)
    }
}

/// Minimal derivation cost per state within each depth budget.
struct InsideTable {
    rows: Vec<Vec<u32>>,
}

impl InsideTable {
    fn compute(n: &HNode, costs: &CostModel) -> InsideTable {
        let a = &n.fta;
        let func = matches!(n.kind, HNodeKind::Func { .. });
        let weights: Vec<u32> = a
            .transitions()
            .map(|t| {
                if !func {
                    return 0;
                }
                let c = match a.label(t) {
                    Label::Input(_) => costs.param,
                    Label::Prod(p) => costs.production_cost(&a.grammar().productions[p as usize]),
                };
                c.min(u32::MAX as u64 / 4) as u32
            })
            .collect();
        let mut rows: Vec<Vec<u32>> = Vec::with_capacity(a.depth_bound());
        for d in 1..=a.depth_bound() {
            let mut row = vec![INF; a.state_count()];
            for t in a.transitions() {
                let ins = a.inputs(t);
                let mut c = weights[t.0 as usize];
                if !ins.is_empty() {
                    let Some(prev) = d.checked_sub(2).map(|i| &rows[i]) else {
                        continue;
                    };
                    for q in ins {
                        c = add(c, prev[q.index()]);
                    }
                }
                let o = a.output(t).index();
                if c < row[o] {
                    row[o] = c;
                }
            }
            rows.push(row);
        }
        InsideTable { rows }
    }

    fn get(&self, q: StateId, d: usize) -> u32 {
        if d == 0 {
            INF
        } else {
            self.rows[d - 1][q.index()]
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum ItemKey {
    Root,
    Hier(NodeId, StateId),
    Link(NodeId, u32, StateId),
    Prog(NodeId, StateId, u8),
}

#[derive(Clone, Copy, Debug)]
enum EdgeLabel {
    Plain,
    Trans(TransId),
}

struct Edge {
    tails: SmallVec<[u32; 4]>,
    weight: u32,
    label: EdgeLabel,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Cand {
    cost: u32,
    edge: u32,
    ranks: SmallVec<[u32; 4]>,
}

struct Item {
    key: ItemKey,
    inside: u32,
    edges: Option<Vec<Edge>>,
    derivs: Vec<Cand>,
    heap: BinaryHeap<Reverse<Cand>>,
    seen: FxHashSet<(u32, SmallVec<[u32; 4]>)>,
    /// Output of each kept derivation over the distinctness contexts.
    sigs: Vec<Arc<[Value]>>,
    sig_seen: FxHashSet<Arc<[Value]>>,
}

/// Cost summaries of one node's finals under the current final sets.
struct NodeCosts {
    /// Minimal cost of a hierarchical subtree rooted at each final (by
    /// position in the finals list), `INF` when none exists.
    hier: Vec<u32>,
    /// Minimal program cost at each final.
    prog: Vec<u32>,
    /// Best `hier` cost per value id.
    by_value: Vec<u32>,
    /// Viable final positions per value id, built on first use.
    positions: Option<Vec<Vec<u32>>>,
    /// Minimal cost of the rest of a complete tree around each final.
    outside: Vec<u32>,
}

/// Per-node cost summaries; outside costs only when `outside` is set.
fn node_costs(h: &Hfta, tables: &[Arc<InsideTable>], outside: bool) -> Vec<NodeCosts> {
    let mut node_costs: Vec<NodeCosts> = Vec::with_capacity(h.node_count());
    for (v, n) in h.nodes() {
        let a = &n.fta;
        let d = a.depth_bound();
        let finals = h.finals(v);
        let mut hier = Vec::with_capacity(finals.len());
        let mut prog = Vec::with_capacity(finals.len());
        let mut by_value = vec![INF; h.shape.value_counts[v]];
        for &f in finals.iter() {
            let p = tables[v].get(f, d);
            let mut c = p;
            if c != INF {
                let ctx = a.state(f).ctx;
                for (i, &child) in n.children.iter().enumerate() {
                    c = add(
                        c,
                        node_costs[child].by_value[h.arg_value_id(v, ctx, i) as usize],
                    );
                }
            }
            prog.push(p);
            hier.push(c);
            if c != INF {
                let e = &mut by_value[h.value_id(v, f) as usize];
                *e = (*e).min(c);
            }
        }
        let outside = vec![INF; if outside { finals.len() } else { 0 }];
        node_costs.push(NodeCosts {
            hier,
            prog,
            by_value,
            positions: None,
            outside,
        });
    }
    if !outside {
        return node_costs;
    }
    // Outside costs, parents before children.
    let root = h.root();
    for o in node_costs[root].outside.iter_mut() {
        *o = 0;
    }
    for v in (0..h.node_count()).rev() {
        let n = h.node(v);
        if n.children.is_empty() {
            continue;
        }
        let mut per_child: Vec<Vec<u32>> = n
            .children
            .iter()
            .map(|&c| vec![INF; h.shape.value_counts[c]])
            .collect();
        for (pos, &f) in h.finals(v).iter().enumerate() {
            let nc = &node_costs[v];
            if nc.hier[pos] == INF || nc.outside[pos] == INF {
                continue;
            }
            let total = add(nc.outside[pos], nc.hier[pos]);
            let ctx = n.fta.state(f).ctx;
            for (i, &child) in n.children.iter().enumerate() {
                let id = h.arg_value_id(v, ctx, i) as usize;
                let link = node_costs[child].by_value[id];
                let e = &mut per_child[i][id];
                *e = (*e).min(total - link);
            }
        }
        for (i, &child) in n.children.iter().enumerate() {
            let finals = h.finals(child);
            let nc = &mut node_costs[child];
            for (pos, &g) in finals.iter().enumerate() {
                if nc.hier[pos] != INF {
                    nc.outside[pos] = per_child[i][h.value_id(child, g) as usize];
                }
            }
        }
    }
    node_costs
}

/// Lazy cost-ordered enumeration over one HFTA snapshot.
pub struct Enumerator<'a> {
    h: &'a Hfta,
    costs: &'a CostModel,
    tables: Vec<Arc<InsideTable>>,
    node_costs: Vec<NodeCosts>,
    items: Vec<Item>,
    index: FxHashMap<ItemKey, u32>,
    yielded: usize,
    seen_trees: FxHashSet<Vec<ProgramAst>>,
    /// Parameter columns of the contexts on which program derivations must
    /// differ; see [`Enumerator::distinct_on`].
    distinct: Option<Vec<Arc<[Value]>>>,
}

impl<'a> Enumerator<'a> {
    pub fn new(h: &'a Hfta, costs: &'a CostModel) -> Enumerator<'a> {
        let tables: Vec<Arc<InsideTable>> =
            (0..h.node_count()).map(|v| h.table(v, costs)).collect();
        let node_costs = node_costs(h, &tables, true);
        Enumerator {
            h,
            costs,
            tables,
            node_costs,
            items: Vec::new(),
            index: FxHashMap::default(),
            yielded: 0,
            seen_trees: FxHashSet::default(),
            distinct: None,
        }
    }

    /// Makes [`Enumerator::node_programs`] skip a subprogram whenever a
    /// cheaper one for the same state computes the same outputs on every
    /// input tuple in `contexts`. Must precede any enumeration.
    pub fn distinct_on(&mut self, contexts: &[Vec<Value>]) {
        assert!(
            self.items.is_empty(),
            "distinct_on after enumeration started"
        );
        let arity = contexts.first().map_or(0, Vec::len);
        self.distinct = Some(
            (0..arity)
                .map(|i| contexts.iter().map(|c| c[i].clone()).collect())
                .collect(),
        );
    }

    /// Outputs over the distinctness contexts of a program derivation whose
    /// subderivations are already kept.
    fn signature(&self, it: u32, c: &Cand) -> Arc<[Value]> {
        let cols = self.distinct.as_ref().expect("distinct mode");
        let item = &self.items[it as usize];
        let ItemKey::Prog(v, _, _) = item.key else {
            unreachable!("signature of a non-program item")
        };
        let edge = &item.edges.as_ref().unwrap()[c.edge as usize];
        let EdgeLabel::Trans(t) = edge.label else {
            unreachable!()
        };
        let kid = |j: usize| &self.items[edge.tails[j] as usize].sigs[c.ranks[j] as usize];
        let g = self.h.node(v).fta.grammar();
        let n = cols.first().map_or(0, |c| c.len());
        match self.h.node(v).fta.label(t) {
            Label::Input(i) => cols[i as usize].clone(),
            Label::Prod(p) => match &g.productions[p as usize].rhs {
                Rhs::Const(k) => vec![k.clone(); n].into(),
                Rhs::Chain(_) => kid(0).clone(),
                Rhs::Op { op, .. } => {
                    let mut args = Vec::with_capacity(edge.tails.len());
                    (0..n)
                        .map(|r| {
                            args.clear();
                            args.extend((0..edge.tails.len()).map(|j| kid(j)[r].clone()));
                            op.apply(&args)
                        })
                        .collect()
                }
            },
        }
    }

    /// Number of finals of `v` that occur in some accepted hierarchical tree.
    pub fn viable_finals(&self, v: NodeId) -> usize {
        let nc = &self.node_costs[v];
        nc.hier
            .iter()
            .zip(&nc.outside)
            .filter(|(h, o)| **h != INF && **o != INF)
            .count()
    }

    /// Cheapest program of node `v` among its viable finals.
    pub fn min_program_cost(&self, v: NodeId) -> Option<u32> {
        let nc = &self.node_costs[v];
        (0..nc.prog.len())
            .filter(|&i| nc.hier[i] != INF && nc.outside[i] != INF)
            .map(|i| nc.prog[i])
            .min()
    }

    /// Whether no hierarchical tree is accepted.
    pub fn is_empty(&self) -> bool {
        self.min_cost().is_none()
    }

    /// Cost of the cheapest accepted hierarchical tree.
    pub fn min_cost(&self) -> Option<u32> {
        self.node_costs[self.h.root()]
            .hier
            .iter()
            .copied()
            .min()
            .filter(|c| *c != INF)
    }

    fn item(&mut self, key: ItemKey) -> u32 {
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let inside = match key {
            ItemKey::Root => self.min_cost().unwrap_or(INF),
            ItemKey::Hier(v, f) => self
                .final_pos(v, f)
                .map_or(INF, |p| self.node_costs[v].hier[p]),
            ItemKey::Link(v, i, q) => {
                let child = self.h.node(v).children[i as usize];
                let id = self
                    .h
                    .arg_value_id(v, self.h.node(v).fta.state(q).ctx, i as usize);
                self.node_costs[child].by_value[id as usize]
            }
            ItemKey::Prog(v, q, d) => self.tables[v].get(q, d as usize),
        };
        let id = self.items.len() as u32;
        self.items.push(Item {
            key,
            inside,
            edges: None,
            derivs: Vec::new(),
            heap: BinaryHeap::new(),
            seen: FxHashSet::default(),
            sigs: Vec::new(),
            sig_seen: FxHashSet::default(),
        });
        self.index.insert(key, id);
        id
    }

    fn final_pos(&self, v: NodeId, f: StateId) -> Option<usize> {
        self.h.finals(v).binary_search(&f).ok()
    }

    fn edges_of(&mut self, key: ItemKey) -> Vec<Edge> {
        let h = self.h;
        let mut edges = Vec::new();
        match key {
            ItemKey::Root => {
                let root = h.root();
                for (pos, &f) in h.finals(root).iter().enumerate() {
                    if self.node_costs[root].hier[pos] != INF {
                        let t = self.item(ItemKey::Hier(root, f));
                        edges.push(Edge {
                            tails: SmallVec::from_slice(&[t]),
                            weight: 0,
                            label: EdgeLabel::Plain,
                        });
                    }
                }
            }
            ItemKey::Hier(v, f) => {
                let n = h.node(v);
                let ctx = n.fta.state(f).ctx;
                let mut tails = SmallVec::new();
                tails.push(self.item(ItemKey::Prog(v, f, n.fta.depth_bound() as u8)));
                for i in 0..n.children.len() {
                    let q = n.fta.param_state(i, ctx);
                    tails.push(self.item(ItemKey::Link(v, i as u32, q)));
                }
                edges.push(Edge {
                    tails,
                    weight: 0,
                    label: EdgeLabel::Plain,
                });
            }
            ItemKey::Link(v, i, q) => {
                let child = h.node(v).children[i as usize];
                let id = h.arg_value_id(v, h.node(v).fta.state(q).ctx, i as usize);
                if self.node_costs[child].positions.is_none() {
                    let nc = &self.node_costs[child];
                    let mut lists = vec![Vec::new(); nc.by_value.len()];
                    for (pos, &g) in h.finals(child).iter().enumerate() {
                        if nc.hier[pos] != INF {
                            lists[h.value_id(child, g) as usize].push(pos as u32);
                        }
                    }
                    self.node_costs[child].positions = Some(lists);
                }
                let positions =
                    self.node_costs[child].positions.as_ref().unwrap()[id as usize].clone();
                for pos in positions {
                    let g = h.finals(child)[pos as usize];
                    let t = self.item(ItemKey::Hier(child, g));
                    edges.push(Edge {
                        tails: SmallVec::from_slice(&[t]),
                        weight: 0,
                        label: EdgeLabel::Plain,
                    });
                }
            }
            ItemKey::Prog(v, q, d) => {
                let a = &h.node(v).fta;
                for &t in a.incoming(q) {
                    let ins = a.inputs(t);
                    let ok = ins
                        .iter()
                        .all(|qi| self.tables[v].get(*qi, d as usize - 1) != INF);
                    if !ok || (!ins.is_empty() && d <= 1) {
                        continue;
                    }
                    let tails = ins
                        .iter()
                        .map(|qi| self.item(ItemKey::Prog(v, *qi, d - 1)))
                        .collect();
                    edges.push(Edge {
                        tails,
                        weight: h.weight(v, t, self.costs),
                        label: EdgeLabel::Trans(t),
                    });
                }
            }
        }
        edges
    }

    fn start(&mut self, it: u32) {
        if self.items[it as usize].edges.is_some() {
            return;
        }
        let key = self.items[it as usize].key;
        let edges = self.edges_of(key);
        for (e, edge) in edges.iter().enumerate() {
            let mut cost = edge.weight;
            for &t in &edge.tails {
                cost = add(cost, self.items[t as usize].inside);
            }
            if cost != INF {
                let ranks: SmallVec<[u32; 4]> = smallvec::smallvec![0; edge.tails.len()];
                let item = &mut self.items[it as usize];
                item.seen.insert((e as u32, ranks.clone()));
                item.heap.push(Reverse(Cand {
                    cost,
                    edge: e as u32,
                    ranks,
                }));
            }
        }
        self.items[it as usize].edges = Some(edges);
    }

    /// Cost of the `k`-th best derivation of an item, computing it if needed.
    fn kth(&mut self, it: u32, k: usize) -> Option<u32> {
        self.start(it);
        while self.items[it as usize].derivs.len() <= k {
            let Reverse(c) = self.items[it as usize].heap.pop()?;
            let tails = self.items[it as usize].edges.as_ref().unwrap()[c.edge as usize]
                .tails
                .clone();
            for (j, &t) in tails.iter().enumerate() {
                self.kth(t, c.ranks[j] as usize);
            }
            for (j, &t) in tails.iter().enumerate() {
                let mut ranks = c.ranks.clone();
                ranks[j] += 1;
                if self.items[it as usize]
                    .seen
                    .contains(&(c.edge, ranks.clone()))
                {
                    continue;
                }
                let Some(next) = self.kth(t, ranks[j] as usize) else {
                    continue;
                };
                let old = self.items[t as usize].derivs[c.ranks[j] as usize].cost;
                let cost = c.cost - old + next;
                let item = &mut self.items[it as usize];
                item.seen.insert((c.edge, ranks.clone()));
                item.heap.push(Reverse(Cand {
                    cost,
                    edge: c.edge,
                    ranks,
                }));
            }
            if self.distinct.is_some() && matches!(self.items[it as usize].key, ItemKey::Prog(..)) {
                let sig = self.signature(it, &c);
                let item = &mut self.items[it as usize];
                if !item.sig_seen.insert(sig.clone()) {
                    continue;
                }
                item.sigs.push(sig);
            }
            self.items[it as usize].derivs.push(c);
        }
        Some(self.items[it as usize].derivs[k].cost)
    }

    fn program(&self, it: u32, k: usize) -> ProgramAst {
        let d = &self.items[it as usize].derivs[k];
        let edge = &self.items[it as usize].edges.as_ref().unwrap()[d.edge as usize];
        let ItemKey::Prog(v, _, _) = self.items[it as usize].key else {
            unreachable!("program of a non-program item")
        };
        let EdgeLabel::Trans(t) = edge.label else {
            unreachable!()
        };
        let kids: Vec<ProgramAst> = edge
            .tails
            .iter()
            .zip(&d.ranks)
            .map(|(&t, &r)| self.program(t, r as usize))
            .collect();
        let g = self.h.node(v).fta.grammar();
        match self.h.node(v).fta.label(t) {
            Label::Input(i) => ProgramAst::param(i as usize, g.symbol_name(g.params[i as usize])),
            Label::Prod(p) => match &g.productions[p as usize].rhs {
                Rhs::Const(c) => ProgramAst::constant(c.clone()),
                Rhs::Op { op, .. } => ProgramAst::op(op, kids),
                Rhs::Chain(_) => kids.into_iter().next().expect("chain child"),
            },
        }
    }

    fn hierarchical(&self, it: u32, k: usize, out: &mut Vec<Option<ProgramAst>>) {
        let d = &self.items[it as usize].derivs[k];
        let edge = &self.items[it as usize].edges.as_ref().unwrap()[d.edge as usize];
        match self.items[it as usize].key {
            ItemKey::Root | ItemKey::Link(..) => {
                self.hierarchical(edge.tails[0], d.ranks[0] as usize, out)
            }
            ItemKey::Hier(v, _) => {
                out[v] = Some(self.program(edge.tails[0], d.ranks[0] as usize));
                for (&t, &r) in edge.tails.iter().zip(&d.ranks).skip(1) {
                    self.hierarchical(t, r as usize, out);
                }
            }
            ItemKey::Prog(..) => unreachable!(),
        }
    }

    fn shape_tree(&self, trees: Vec<ProgramAst>) -> HierarchicalTree {
        HierarchicalTree {
            trees,
            children: self.h.nodes().map(|(_, n)| n.children.clone()).collect(),
            root: self.h.root(),
        }
    }

    /// Programs for node `v` paired with the cost of the cheapest complete
    /// hierarchical tree containing them, in non-decreasing order.
    pub fn node_programs(&mut self, v: NodeId) -> NodePrograms<'_, 'a> {
        let d = self.h.node(v).fta.depth_bound() as u8;
        let mut heap = BinaryHeap::new();
        let finals = self.h.finals(v).to_vec();
        for (pos, &f) in finals.iter().enumerate() {
            let nc = &self.node_costs[v];
            if nc.hier[pos] == INF || nc.outside[pos] == INF {
                continue;
            }
            let (rest, prog) = (
                add(nc.outside[pos], nc.hier[pos] - nc.prog[pos]),
                nc.prog[pos],
            );
            let it = self.item(ItemKey::Prog(v, f, d));
            heap.push(Reverse((add(rest, prog), pos as u32, 0u32, it, rest)));
        }
        NodePrograms { e: self, heap }
    }
}

impl Iterator for Enumerator<'_> {
    type Item = (HierarchicalTree, u32);

    fn next(&mut self) -> Option<Self::Item> {
        let root = self.item(ItemKey::Root);
        loop {
            let k = self.yielded;
            let cost = self.kth(root, k)?;
            self.yielded += 1;
            let mut out = vec![None; self.h.node_count()];
            self.hierarchical(root, k, &mut out);
            let trees: Vec<ProgramAst> = out
                .into_iter()
                .map(|t| t.expect("every node has a tree"))
                .collect();
            if self.seen_trees.insert(trees.clone()) {
                return Some((self.shape_tree(trees), cost));
            }
        }
    }
}

/// Cost-ordered program stream for one node; see [`Enumerator::node_programs`].
pub struct NodePrograms<'e, 'a> {
    e: &'e mut Enumerator<'a>,
    heap: BinaryHeap<Reverse<(u32, u32, u32, u32, u32)>>,
}

impl Iterator for NodePrograms<'_, '_> {
    /// (program, final it reaches, priority)
    type Item = (ProgramAst, StateId, u32);

    fn next(&mut self) -> Option<Self::Item> {
        let Reverse((prio, pos, rank, it, rest)) = self.heap.pop()?;
        self.e.kth(it, rank as usize)?;
        let p = self.e.program(it, rank as usize);
        if let Some(c) = self.e.kth(it, rank as usize + 1) {
            self.heap
                .push(Reverse((add(rest, c), pos, rank + 1, it, rest)));
        }
        let ItemKey::Prog(_, f, _) = self.e.items[it as usize].key else {
            unreachable!()
        };
        Some((p, f, prio))
    }
}

/// Accepted hierarchical trees in non-decreasing cost order.
pub fn enumerate<'a>(h: &'a Hfta, costs: &'a CostModel) -> Enumerator<'a> {
    Enumerator::new(h, costs)
}

pub fn is_empty(h: &Hfta) -> bool {
    Viability::new(h, &CostModel::default()).is_empty()
}

/// Best hierarchical-subtree cost per node and value id: enough to decide
/// emptiness, and cheap to refresh when only some nodes' finals change.
#[derive(Clone)]
pub struct Viability {
    by_value: Vec<Arc<Vec<u32>>>,
    root_min: u32,
}

impl Viability {
    pub fn new(h: &Hfta, costs: &CostModel) -> Viability {
        let mut by_value = Vec::with_capacity(h.node_count());
        for v in 0..h.node_count() {
            by_value.push(Arc::new(Self::node_best(h, costs, v, &by_value)));
        }
        let root_min = Self::root_min(h, costs, &by_value);
        Viability { by_value, root_min }
    }

    /// The viability of `h`, whose finals differ from those summarized by
    /// `self` only at the `changed` nodes.
    pub fn update(&self, h: &Hfta, costs: &CostModel, changed: &[NodeId]) -> Viability {
        let mut dirty = vec![false; h.node_count()];
        for &v in changed {
            dirty[v] = true;
        }
        let mut by_value = Vec::with_capacity(h.node_count());
        for v in 0..h.node_count() {
            if h.node(v).children.iter().any(|&c| dirty[c]) {
                dirty[v] = true;
            }
            if dirty[v] {
                by_value.push(Arc::new(Self::node_best(h, costs, v, &by_value)));
            } else {
                by_value.push(self.by_value[v].clone());
            }
        }
        let root_min = Self::root_min(h, costs, &by_value);
        Viability { by_value, root_min }
    }

    fn hier_cost(
        h: &Hfta,
        table: &InsideTable,
        v: NodeId,
        f: StateId,
        by_value: &[Arc<Vec<u32>>],
    ) -> u32 {
        let n = h.node(v);
        let mut c = table.get(f, n.fta.depth_bound());
        if c != INF {
            let ctx = n.fta.state(f).ctx;
            for (i, &child) in n.children.iter().enumerate() {
                c = add(c, by_value[child][h.arg_value_id(v, ctx, i) as usize]);
            }
        }
        c
    }

    fn node_best(h: &Hfta, costs: &CostModel, v: NodeId, by_value: &[Arc<Vec<u32>>]) -> Vec<u32> {
        let table = h.table(v, costs);
        let mut best = vec![INF; h.shape.value_counts[v]];
        let mut visit = |f: StateId| {
            let c = Self::hier_cost(h, &table, v, f, by_value);
            let e = &mut best[h.value_id(v, f) as usize];
            *e = (*e).min(c);
        };
        let n = h.node(v);
        let finals = h.finals(v);
        // Only contexts whose arguments are all viable can contribute; when
        // they are few, visit just their finals.
        let viable: Vec<Vec<u32>> = n
            .children
            .iter()
            .map(|&c| {
                (0..by_value[c].len() as u32)
                    .filter(|&id| by_value[c][id as usize] != INF)
                    .collect()
            })
            .collect();
        let combos = viable
            .iter()
            .try_fold(1usize, |acc, l| acc.checked_mul(l.len()));
        if n.children.is_empty() || combos.is_none_or(|k| k >= finals.len()) {
            finals.iter().for_each(|&f| visit(f));
            return best;
        }
        let mut pick = vec![0usize; viable.len()];
        'combos: loop {
            let ctx: usize = pick
                .iter()
                .enumerate()
                .map(|(i, &j)| viable[i][j] as usize * h.shape.strides[v][i])
                .sum();
            let lo = finals.partition_point(|&f| (n.fta.state(f).ctx as usize) < ctx);
            for &f in finals[lo..]
                .iter()
                .take_while(|&&f| n.fta.state(f).ctx as usize == ctx)
            {
                visit(f);
            }
            for i in (0..pick.len()).rev() {
                pick[i] += 1;
                if pick[i] < viable[i].len() {
                    continue 'combos;
                }
                pick[i] = 0;
            }
            break;
        }
        best
    }

    fn root_min(h: &Hfta, costs: &CostModel, by_value: &[Arc<Vec<u32>>]) -> u32 {
        let root = h.root();
        let table = h.table(root, costs);
        h.finals(root)
            .iter()
            .map(|&f| Self::hier_cost(h, &table, root, f, by_value))
            .min()
            .unwrap_or(INF)
    }

    pub fn is_empty(&self) -> bool {
        self.root_min == INF
    }

    /// Cost of the cheapest accepted hierarchical tree.
    pub fn min_cost(&self) -> Option<u32> {
        (self.root_min != INF).then_some(self.root_min)
    }
}

/// Whether every node's tree has a run into its finals with the runs
/// stitched by inter-automaton transitions.
pub fn accepts_hierarchical(h: &Hfta, t: &HierarchicalTree) -> Result<bool, HftaError> {
    if t.trees.len() != h.node_count()
        || t.root != h.root()
        || h.nodes()
            .any(|(v, n)| t.children.get(v) != Some(&n.children))
    {
        return Err(HftaError::ShapeMismatch);
    }
    let mut reached: Vec<FxHashSet<Value>> = Vec::with_capacity(h.node_count());
    for (v, n) in h.nodes() {
        let mut vals = FxHashSet::default();
        for (k, ctx) in n.fta.contexts().iter().enumerate() {
            if !ctx
                .iter()
                .zip(&n.children)
                .all(|(c, &child)| reached[child].contains(c))
            {
                continue;
            }
            if let Some(run) = n.fta.run_in_context(&t.trees[v], k as u32, h.finals(v)) {
                vals.insert(n.fta.state(run).value.clone());
            }
        }
        reached.push(vals);
    }
    Ok(!reached[h.root()].is_empty())
}

/// The HFTA flattened into one weighted hypergraph: intra-automaton
/// transitions keep their constructor cost and parameter leaves fed by a
/// child are replaced by links carrying the leaf's cost.
#[derive(Clone, Debug)]
pub struct FlatHypergraph {
    /// (node, state) per vertex.
    pub vertices: Vec<(NodeId, StateId)>,
    /// (tail vertices, head vertex, weight).
    pub b_edges: Vec<(Vec<usize>, usize, u64)>,
    pub finals: Vec<usize>,
}

pub fn flatten(h: &Hfta, costs: &CostModel) -> FlatHypergraph {
    let mut base = Vec::with_capacity(h.node_count());
    let mut vertices = Vec::new();
    for (v, n) in h.nodes() {
        base.push(vertices.len());
        vertices.extend(n.fta.states().map(|(q, _)| (v, q)));
    }
    let mut b_edges = Vec::new();
    for (v, n) in h.nodes() {
        for t in n.fta.transitions() {
            if matches!(n.fta.label(t), Label::Input(_)) && !n.children.is_empty() {
                continue;
            }
            let tails = n
                .fta
                .inputs(t)
                .iter()
                .map(|q| base[v] + q.index())
                .collect();
            b_edges.push((
                tails,
                base[v] + n.fta.output(t).index(),
                h.weight(v, t, costs) as u64,
            ));
        }
        let leaf = if matches!(n.kind, HNodeKind::Func { .. }) {
            costs.param
        } else {
            0
        };
        for (i, g, q) in h.links_into(v) {
            b_edges.push((
                vec![base[n.children[i]] + g.index()],
                base[v] + q.index(),
                leaf,
            ));
        }
    }
    let finals = h
        .finals(h.root())
        .iter()
        .map(|q| base[h.root()] + q.index())
        .collect();
    FlatHypergraph {
        vertices,
        b_edges,
        finals,
    }
}

impl FlatHypergraph {
    /// Knuth's lightest derivation: minimal weight of a derivation of each
    /// vertex from the leaves.
    pub fn lightest(&self) -> Vec<Option<u64>> {
        let n = self.vertices.len();
        let mut best: Vec<Option<u64>> = vec![None; n];
        let mut by_tail: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut missing: Vec<usize> = self.b_edges.iter().map(|e| e.0.len()).collect();
        for (i, e) in self.b_edges.iter().enumerate() {
            for &t in &e.0 {
                by_tail[t].push(i);
            }
        }
        let mut heap: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
        for e in &self.b_edges {
            if e.0.is_empty() {
                heap.push(Reverse((e.2, e.1)));
            }
        }
        let mut done = vec![false; n];
        while let Some(Reverse((c, v))) = heap.pop() {
            if done[v] {
                continue;
            }
            done[v] = true;
            best[v] = Some(c);
            for &ei in &by_tail[v] {
                let e = &self.b_edges[ei];
                let mult = e.0.iter().filter(|&&t| t == v).count();
                missing[ei] -= mult;
                if missing[ei] == 0 {
                    let cost = e.2 + e.0.iter().map(|t| best[*t].unwrap()).sum::<u64>();
                    heap.push(Reverse((cost, e.1)));
                }
            }
        }
        best
    }

    /// Minimal weight of a derivation reaching a final vertex.
    pub fn min_final_cost(&self) -> Option<u64> {
        let best = self.lightest();
        self.finals.iter().filter_map(|f| best[*f]).min()
    }
}
