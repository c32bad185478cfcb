//! Bottom-up finite tree automata over (grammar symbol, value) states.
//!
//! An automaton is built for a grammar and a set of input contexts. A
//! context fixes one value per grammar parameter; states are tagged with
//! their context so that every run evaluates the program on one consistent
//! input tuple. With a single context this is exactly the example-based
//! construction; with several it is the union of the per-context automata.
//!
//! Construction proceeds in layers: layer 1 holds the parameter states and
//! the constants, and layer `L` applies every production to child states of
//! layers `< L` with at least one child from layer `L - 1`. The depth bound
//! is the number of layers, so a state exists iff some derivation of depth
//! at most the bound reaches it.

use std::fmt::{self, Write as _};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Arc;

use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::dsl::grammar::{Grammar, Rhs, SymId};
use crate::dsl::{Node, ProgramAst};
use crate::exec::ExecMode;
use crate::values::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FtaState {
    pub sym: SymId,
    pub value: Value,
    pub ctx: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    /// The parameter leaf `x_i`.
    Input(u32),
    /// A grammar production, by index.
    Prod(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransId(pub u32);

#[derive(Clone, Copy, Debug)]
pub struct BuildConfig {
    pub depth_bound: usize,
    /// Maximum number of states in one automaton.
    pub state_ceiling: usize,
    pub exec: ExecMode,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            depth_bound: 6,
            state_ceiling: 20_000_000,
            exec: ExecMode::default(),
        }
    }
}

impl BuildConfig {
    pub fn with_depth(depth_bound: usize) -> BuildConfig {
        BuildConfig {
            depth_bound,
            ..BuildConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FtaError {
    #[error("automaton for `{grammar}` exceeds {ceiling} states")]
    CapacityExceeded { grammar: String, ceiling: usize },
}

#[derive(Clone)]
pub struct Fta {
    grammar: Arc<Grammar>,
    depth_bound: usize,
    contexts: Vec<Vec<Value>>,
    states: Vec<FtaState>,
    layers: Vec<u16>,
    /// First state of each context, plus the total count.
    ctx_start: Vec<u32>,
    /// State ids sorted by (symbol, value) within each context's range.
    sorted: Vec<StateId>,
    labels: Vec<Label>,
    outputs: Vec<StateId>,
    input_start: Vec<u32>,
    inputs: Vec<StateId>,
    incoming_start: Vec<u32>,
    incoming: Vec<TransId>,
    finals: Vec<StateId>,
}

/// States and transitions of one context, with context-local ids.
struct Local {
    states: Vec<(SymId, Value, u16)>,
    trans: Vec<(Label, SmallVec<[u32; 3]>, u32)>,
}

/// `used` counts states across all contexts of the automaton being built.
fn build_local(
    g: &Grammar,
    inputs: &[Value],
    bound: usize,
    ceiling: usize,
    used: &AtomicUsize,
) -> Result<Local, FtaError> {
    let over = || FtaError::CapacityExceeded {
        grammar: g.name.clone(),
        ceiling,
    };
    let mut map: FxHashMap<(SymId, Value), u32> = FxHashMap::default();
    let mut local = Local {
        states: Vec::new(),
        trans: Vec::new(),
    };
    let mut by_sym: Vec<Vec<u32>> = vec![Vec::new(); g.symbols.len()];

    let mut intern = |local: &mut Local,
                      by_sym: &mut Vec<Vec<u32>>,
                      sym: SymId,
                      v: Value,
                      layer: u16|
     -> Result<u32, FtaError> {
        if let Some(&id) = map.get(&(sym, v.clone())) {
            return Ok(id);
        }
        if used.fetch_add(1, AtomicOrdering::Relaxed) >= ceiling {
            return Err(over());
        }
        let id = local.states.len() as u32;
        local.states.push((sym, v.clone(), layer));
        map.insert((sym, v), id);
        by_sym[sym.index()].push(id);
        Ok(id)
    };

    if bound == 0 {
        return Ok(local);
    }
    for (i, &p) in g.params.iter().enumerate() {
        let id = intern(&mut local, &mut by_sym, p, inputs[i].clone(), 1)?;
        local
            .trans
            .push((Label::Input(i as u32), SmallVec::new(), id));
    }
    for (pi, prod) in g.productions.iter().enumerate() {
        let v = match &prod.rhs {
            Rhs::Const(v) => v.clone(),
            Rhs::Op { op, args } if args.is_empty() => op.apply(&[]),
            _ => continue,
        };
        let id = intern(&mut local, &mut by_sym, prod.lhs, v, 1)?;
        local
            .trans
            .push((Label::Prod(pi as u32), SmallVec::new(), id));
    }

    // Per symbol: ids with layer < L-1 are by_sym[s][..old], layer L-1 is [old..prev].
    let mut old: Vec<usize> = vec![0; g.symbols.len()];
    for layer in 2..=bound {
        let prev: Vec<usize> = by_sym.iter().map(Vec::len).collect();
        if prev == old {
            break;
        }
        for (pi, prod) in g.productions.iter().enumerate() {
            let kids = prod.children();
            if kids.is_empty() {
                continue;
            }
            let n = kids.len();
            for first_new in 0..n {
                let range = |j: usize| -> (usize, usize) {
                    let s = kids[j].index();
                    if j < first_new {
                        (0, old[s])
                    } else if j == first_new {
                        (old[s], prev[s])
                    } else {
                        (0, prev[s])
                    }
                };
                let ranges: SmallVec<[(usize, usize); 4]> = (0..n).map(range).collect();
                if ranges.iter().any(|(a, b)| a >= b) {
                    continue;
                }
                let mut pos: SmallVec<[usize; 4]> = ranges.iter().map(|r| r.0).collect();
                loop {
                    let ids: SmallVec<[u32; 3]> =
                        (0..n).map(|j| by_sym[kids[j].index()][pos[j]]).collect();
                    let v = match &prod.rhs {
                        Rhs::Chain(_) => local.states[ids[0] as usize].1.clone(),
                        Rhs::Op { op, .. } => {
                            let vals: SmallVec<[Value; 4]> = ids
                                .iter()
                                .map(|&i| local.states[i as usize].1.clone())
                                .collect();
                            op.apply(&vals)
                        }
                        Rhs::Const(_) => unreachable!(),
                    };
                    let out = intern(&mut local, &mut by_sym, prod.lhs, v, layer as u16)?;
                    local.trans.push((Label::Prod(pi as u32), ids, out));
                    // Odometer over the child ranges.
                    let mut j = n;
                    loop {
                        if j == 0 {
                            break;
                        }
                        j -= 1;
                        pos[j] += 1;
                        if pos[j] < ranges[j].1 {
                            break;
                        }
                        pos[j] = ranges[j].0;
                        if j == 0 {
                            j = usize::MAX;
                            break;
                        }
                    }
                    if j == usize::MAX {
                        break;
                    }
                }
            }
        }
        old = prev;
    }
    Ok(local)
}

/// Cartesian product of the value sets, in lexicographic order.
fn product(sets: &[Vec<Value>]) -> Vec<Vec<Value>> {
    let mut out: Vec<Vec<Value>> = vec![Vec::new()];
    for set in sets {
        let mut next = Vec::with_capacity(out.len() * set.len());
        for prefix in &out {
            for v in set {
                let mut t = prefix.clone();
                t.push(v.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// Builds the automaton over every combination of the initial value sets.
/// Finals are all states of the start symbol.
pub fn build_fta(
    g: Arc<Grammar>,
    initial: &[Vec<Value>],
    cfg: &BuildConfig,
) -> Result<Fta, FtaError> {
    assert_eq!(
        initial.len(),
        g.params.len(),
        "one initial set per parameter"
    );
    let sets: Vec<Vec<Value>> = initial
        .iter()
        .map(|s| {
            let mut s = s.clone();
            s.sort();
            s.dedup();
            s
        })
        .collect();
    build_contexts(g, product(&sets), cfg)
}

/// Builds the automaton for one input tuple with finals restricted to the
/// start-symbol state holding `e_out`.
pub fn build_fta_for_example(
    g: Arc<Grammar>,
    e_in: &[Value],
    e_out: &Value,
    cfg: &BuildConfig,
) -> Result<Fta, FtaError> {
    let mut a = build_contexts(g, vec![e_in.to_vec()], cfg)?;
    let states = &a.states;
    a.finals.retain(|q| states[q.index()].value == *e_out);
    Ok(a)
}

pub fn build_contexts(
    g: Arc<Grammar>,
    contexts: Vec<Vec<Value>>,
    cfg: &BuildConfig,
) -> Result<Fta, FtaError> {
    let used = AtomicUsize::new(0);
    let locals = cfg.exec.map(contexts.len(), |k| {
        build_local(&g, &contexts[k], cfg.depth_bound, cfg.state_ceiling, &used)
    });
    let total: usize = locals
        .iter()
        .map(|l| l.as_ref().map_or(0, |l| l.states.len()))
        .sum();
    let contexts_len = contexts.len();
    let mut a = Fta {
        grammar: g.clone(),
        depth_bound: cfg.depth_bound,
        contexts,
        states: Vec::with_capacity(total),
        layers: Vec::with_capacity(total),
        ctx_start: Vec::with_capacity(contexts_len + 1),
        sorted: Vec::with_capacity(total),
        labels: Vec::new(),
        outputs: Vec::new(),
        input_start: Vec::new(),
        inputs: Vec::new(),
        incoming_start: Vec::new(),
        incoming: Vec::new(),
        finals: Vec::new(),
    };
    for (k, local) in locals.into_iter().enumerate() {
        let local = local?;
        let base = a.states.len() as u32;
        a.ctx_start.push(base);
        let mut order: Vec<u32> = (0..local.states.len() as u32).collect();
        order.sort_unstable_by(|&x, &y| {
            let (sx, vx, _) = &local.states[x as usize];
            let (sy, vy, _) = &local.states[y as usize];
            (sx, vx).cmp(&(sy, vy))
        });
        a.sorted
            .extend(order.into_iter().map(|i| StateId(base + i)));
        for (sym, value, layer) in local.states {
            let st = FtaState {
                sym,
                value,
                ctx: k as u32,
            };
            let id = StateId(a.states.len() as u32);
            if sym == g.start {
                a.finals.push(id);
            }
            a.states.push(st);
            a.layers.push(layer);
        }
        for (label, ins, out) in local.trans {
            a.labels.push(label);
            a.outputs.push(StateId(base + out));
            a.input_start.push(a.inputs.len() as u32);
            a.inputs.extend(ins.iter().map(|&i| StateId(base + i)));
        }
    }
    a.input_start.push(a.inputs.len() as u32);
    a.ctx_start.push(a.states.len() as u32);
    a.index_incoming();
    Ok(a)
}

impl Fta {
    fn index_incoming(&mut self) {
        let n = self.states.len();
        let mut counts = vec![0u32; n + 1];
        for o in &self.outputs {
            counts[o.index() + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut incoming = vec![TransId(0); self.outputs.len()];
        for (t, o) in self.outputs.iter().enumerate() {
            incoming[fill[o.index()] as usize] = TransId(t as u32);
            fill[o.index()] += 1;
        }
        self.incoming_start = counts;
        self.incoming = incoming;
    }

    pub fn grammar(&self) -> &Arc<Grammar> {
        &self.grammar
    }

    pub fn depth_bound(&self) -> usize {
        self.depth_bound
    }

    pub fn contexts(&self) -> &[Vec<Value>] {
        &self.contexts
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn transition_count(&self) -> usize {
        self.labels.len()
    }

    pub fn state(&self, q: StateId) -> &FtaState {
        &self.states[q.index()]
    }

    pub fn states(&self) -> impl Iterator<Item = (StateId, &FtaState)> {
        self.states
            .iter()
            .enumerate()
            .map(|(i, s)| (StateId(i as u32), s))
    }

    /// Layer in which the state was first built (its minimal derivation depth).
    pub fn layer(&self, q: StateId) -> usize {
        self.layers[q.index()] as usize
    }

    pub fn lookup(&self, sym: SymId, value: &Value, ctx: u32) -> Option<StateId> {
        let k = ctx as usize;
        if k + 1 >= self.ctx_start.len() {
            return None;
        }
        let seg = &self.sorted[self.ctx_start[k] as usize..self.ctx_start[k + 1] as usize];
        seg.binary_search_by(|q| {
            let st = &self.states[q.index()];
            (st.sym, &st.value).cmp(&(sym, value))
        })
        .ok()
        .map(|i| seg[i])
    }

    /// The state of parameter `i` in context `ctx`.
    pub fn param_state(&self, i: usize, ctx: u32) -> StateId {
        let sym = self.grammar.params[i];
        self.lookup(sym, &self.contexts[ctx as usize][i], ctx)
            .expect("parameter state exists")
    }

    pub fn finals(&self) -> &[StateId] {
        &self.finals
    }

    pub fn label(&self, t: TransId) -> Label {
        self.labels[t.0 as usize]
    }

    pub fn output(&self, t: TransId) -> StateId {
        self.outputs[t.0 as usize]
    }

    pub fn inputs(&self, t: TransId) -> &[StateId] {
        let (a, b) = (
            self.input_start[t.0 as usize] as usize,
            self.input_start[t.0 as usize + 1] as usize,
        );
        &self.inputs[a..b]
    }

    pub fn transitions(&self) -> impl Iterator<Item = TransId> {
        (0..self.labels.len() as u32).map(TransId)
    }

    /// Transitions whose output is `q`, in construction order.
    pub fn incoming(&self, q: StateId) -> &[TransId] {
        let (a, b) = (
            self.incoming_start[q.index()] as usize,
            self.incoming_start[q.index() + 1] as usize,
        );
        &self.incoming[a..b]
    }

    /// The constructor name of a transition, as printed in dumps.
    pub fn label_name(&self, label: Label) -> String {
        match label {
            Label::Input(i) => self
                .grammar
                .symbol_name(self.grammar.params[i as usize])
                .to_string(),
            Label::Prod(p) => match &self.grammar.productions[p as usize].rhs {
                Rhs::Const(v) => v.to_string(),
                Rhs::Op { op, .. } => op.name.to_string(),
                Rhs::Chain(_) => "id".to_string(),
            },
        }
    }

    /// `q_sym^value`, with `@ctx` appended when there are several contexts.
    pub fn state_name(&self, q: StateId) -> String {
        let s = self.state(q);
        let mut out = format!("q_{}^{}", self.grammar.symbol_name(s.sym), s.value);
        if self.contexts.len() > 1 {
            let _ = write!(out, "@{}", s.ctx);
        }
        out
    }

    /// One transition per line, `σ(q,...) -> q`, with final outputs marked `*`.
    pub fn dump(&self, finals: &[StateId]) -> String {
        let mut out = String::new();
        for t in self.transitions() {
            let label = self.label_name(self.label(t));
            let ins: Vec<String> = self.inputs(t).iter().map(|&q| self.state_name(q)).collect();
            let o = self.output(t);
            let mark = if finals.contains(&o) { "*" } else { "" };
            if ins.is_empty() {
                let _ = writeln!(out, "{label} -> {}{mark}", self.state_name(o));
            } else {
                let _ = writeln!(
                    out,
                    "{label}({}) -> {}{mark}",
                    ins.join(","),
                    self.state_name(o)
                );
            }
        }
        out
    }

    /// States of every symbol that `p` can be derived from, per node, in
    /// context `ctx`. Returns the root's states.
    fn run_node(
        &self,
        p: &ProgramAst,
        ctx: u32,
        trace: &mut Option<&mut Vec<SmallVec<[StateId; 2]>>>,
    ) -> (Value, SmallVec<[StateId; 2]>) {
        let g = &*self.grammar;
        let bound = self.depth_bound;
        let mut kids: SmallVec<[(Value, SmallVec<[StateId; 2]>); 4]> = SmallVec::new();
        let slot = trace.as_ref().map(|t| t.len());
        if let Some(t) = trace.as_mut() {
            t.push(SmallVec::new());
        }
        for c in &p.children {
            kids.push(self.run_node(c, ctx, trace));
        }
        let mut here: SmallVec<[StateId; 2]> = SmallVec::new();
        let value = match &p.node {
            Node::Param { index, .. } => {
                let v = self.contexts[ctx as usize]
                    .get(*index)
                    .cloned()
                    .unwrap_or(Value::Err("arity"));
                if let Some(&sym) = g.params.get(*index) {
                    if let Some(q) = self.lookup(sym, &v, ctx) {
                        here.push(q);
                    }
                }
                v
            }
            Node::Const(v) => {
                for prod in &g.productions {
                    if matches!(&prod.rhs, Rhs::Const(w) if w == v) {
                        if let Some(q) = self.lookup(prod.lhs, v, ctx) {
                            here.push(q);
                        }
                    }
                }
                v.clone()
            }
            Node::Op(op) => {
                let vals: SmallVec<[Value; 4]> = kids.iter().map(|k| k.0.clone()).collect();
                let v = op.apply(&vals);
                for prod in &g.productions {
                    let Rhs::Op { op: o, args } = &prod.rhs else {
                        continue;
                    };
                    if o != op || args.len() != kids.len() {
                        continue;
                    }
                    let mut max_layer = 0;
                    let ok = args.iter().zip(&kids).all(|(a, k)| {
                        match k.1.iter().find(|q| self.state(**q).sym == *a) {
                            Some(q) => {
                                max_layer = max_layer.max(self.layer(*q));
                                true
                            }
                            None => false,
                        }
                    });
                    if ok && max_layer < bound {
                        if let Some(q) = self.lookup(prod.lhs, &v, ctx) {
                            if !here.contains(&q) {
                                here.push(q);
                            }
                        }
                    }
                }
                v
            }
        };
        loop {
            let mut changed = false;
            for prod in &g.productions {
                let Rhs::Chain(s) = prod.rhs else { continue };
                let Some(&src) = here.iter().find(|q| self.state(**q).sym == s) else {
                    continue;
                };
                if self.layer(src) >= bound || here.iter().any(|q| self.state(*q).sym == prod.lhs) {
                    continue;
                }
                if let Some(q) = self.lookup(prod.lhs, &value, ctx) {
                    here.push(q);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if let (Some(t), Some(i)) = (trace.as_mut(), slot) {
            t[i] = here.clone();
        }
        (value, here)
    }

    /// Start-symbol states reached by `p`, over all contexts.
    pub fn root_states(&self, p: &ProgramAst) -> Vec<StateId> {
        let start = self.grammar.start;
        let mut out = Vec::new();
        for k in 0..self.contexts.len() as u32 {
            let (_, qs) = self.run_node(p, k, &mut None);
            out.extend(qs.into_iter().filter(|q| self.state(*q).sym == start));
        }
        out
    }

    /// The members of `among` (sorted) that root a run of `p`. Only contexts
    /// holding some member are evaluated.
    pub fn reached_among(&self, p: &ProgramAst, among: &[StateId]) -> Vec<StateId> {
        let mut out = Vec::new();
        let mut last_ctx = None;
        for &q in among {
            let ctx = self.state(q).ctx;
            if last_ctx == Some(ctx) {
                continue;
            }
            last_ctx = Some(ctx);
            if let Some(r) = self.root_state_in(p, ctx) {
                if among.binary_search(&r).is_ok() {
                    out.push(r);
                }
            }
        }
        out
    }

    /// Start-symbol state reached by `p` in one context.
    pub fn root_state_in(&self, p: &ProgramAst, ctx: u32) -> Option<StateId> {
        let start = self.grammar.start;
        self.run_node(p, ctx, &mut None)
            .1
            .into_iter()
            .find(|q| self.state(*q).sym == start)
    }

    /// Root state of `p` in context `ctx` if it is one of `finals`.
    pub fn run_in_context(&self, p: &ProgramAst, ctx: u32, finals: &[StateId]) -> Option<StateId> {
        self.root_state_in(p, ctx).filter(|q| finals.contains(q))
    }

    /// A run of `p` (pre-order node states) ending in one of `finals`.
    pub fn run_into(&self, p: &ProgramAst, finals: &[StateId]) -> Option<FtaRun> {
        let start = self.grammar.start;
        for k in 0..self.contexts.len() as u32 {
            let mut per_node = Vec::new();
            let (_, root) = self.run_node(p, k, &mut Some(&mut per_node));
            let Some(&q) = root
                .iter()
                .find(|q| self.state(**q).sym == start && finals.contains(q))
            else {
                continue;
            };
            return Some(FtaRun::resolve(self, p, &per_node, q));
        }
        None
    }
}

/// States assigned to the nodes of a program tree, in pre-order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FtaRun {
    pub states: Vec<StateId>,
}

impl FtaRun {
    fn resolve(
        a: &Fta,
        p: &ProgramAst,
        per_node: &[SmallVec<[StateId; 2]>],
        root: StateId,
    ) -> FtaRun {
        fn go(
            a: &Fta,
            p: &ProgramAst,
            per_node: &[SmallVec<[StateId; 2]>],
            at: &mut usize,
            want: SymId,
            out: &mut Vec<StateId>,
        ) {
            let here = &per_node[*at];
            *at += 1;
            let q = here
                .iter()
                .copied()
                .find(|q| a.state(*q).sym == want)
                .unwrap_or(here[0]);
            out.push(q);
            // The production used below `q`, after following chains down.
            let g = a.grammar();
            let mut sym = a.state(q).sym;
            let args: Vec<SymId> = loop {
                let direct = g.productions.iter().find(|prod| {
                    prod.lhs == sym
                        && match (&prod.rhs, &p.node) {
                            (Rhs::Op { op, args }, Node::Op(o)) => {
                                op == o
                                    && args
                                        .iter()
                                        .enumerate()
                                        .all(|(j, s)| per_node_has(a, per_node, p, *at, j, *s))
                            }
                            _ => false,
                        }
                });
                if let Some(prod) = direct {
                    break prod.children().to_vec();
                }
                let chain = g.productions.iter().find_map(|prod| match prod.rhs {
                    Rhs::Chain(s)
                        if prod.lhs == sym && here.iter().any(|q| a.state(*q).sym == s) =>
                    {
                        Some(s)
                    }
                    _ => None,
                });
                match chain {
                    Some(s) => sym = s,
                    None => break Vec::new(),
                }
            };
            for (j, c) in p.children.iter().enumerate() {
                let want = args.get(j).copied().unwrap_or(SymId(0));
                go(a, c, per_node, at, want, out);
            }
        }
        let mut out = Vec::new();
        let mut at = 0;
        go(a, p, per_node, &mut at, a.state(root).sym, &mut out);
        FtaRun { states: out }
    }
}

/// Whether child `j` of the node whose children start at pre-order index
/// `first_child` has a state of symbol `s`.
fn per_node_has(
    a: &Fta,
    per_node: &[SmallVec<[StateId; 2]>],
    p: &ProgramAst,
    first_child: usize,
    j: usize,
    s: SymId,
) -> bool {
    let offset: usize = p.children[..j].iter().map(ProgramAst::size).sum();
    per_node
        .get(first_child + offset)
        .is_some_and(|qs| qs.iter().any(|q| a.state(*q).sym == s))
}

/// The accepting run of `p`, if any.
pub fn accepts(a: &Fta, p: &ProgramAst) -> Option<FtaRun> {
    a.run_into(p, a.finals())
}

/// Final states that root some run of `p`.
pub fn reachable_final_states(a: &Fta, p: &ProgramAst) -> Vec<StateId> {
    a.reached_among(p, a.finals())
}

impl fmt::Debug for Fta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Fta({} states, {} transitions, {} finals)",
            self.states.len(),
            self.labels.len(),
            self.finals.len()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_program;

    fn arith() -> Arc<Grammar> {
        Arc::new(
            Grammar::parse("arith", "params x1, x2\nstart e\ne -> x1 | x2 | plus(e, e)").unwrap(),
        )
    }

    #[test]
    fn sum_example_states() {
        let g = arith();
        let a = build_fta_for_example(
            g.clone(),
            &[Value::Int(1), Value::Int(3)],
            &Value::Int(4),
            &BuildConfig::with_depth(3),
        )
        .unwrap();
        let mut names: Vec<String> = a.states().map(|(q, _)| a.state_name(q)).collect();
        names.sort();
        assert_eq!(
            names,
            ["q_e^1", "q_e^2", "q_e^3", "q_e^4", "q_e^6", "q_x1^1", "q_x2^3"]
        );
        assert_eq!(a.finals().len(), 1);
        assert_eq!(a.state_name(a.finals()[0]), "q_e^4");
        let p = parse_program("plus(x1,x2)", &g).unwrap();
        let run = accepts(&a, &p).unwrap();
        assert_eq!(a.state_name(run.states[0]), "q_e^4");
        assert_eq!(a.state_name(run.states[1]), "q_e^1");
        assert!(accepts(&a, &parse_program("plus(x1,x1)", &g).unwrap()).is_none());
        assert!(accepts(&a, &parse_program("plus(x2,x1)", &g).unwrap()).is_some());
        // Depth 4 trees are not represented.
        assert!(accepts(
            &a,
            &parse_program("plus(plus(x1,x1),plus(x1,x1))", &g).unwrap()
        )
        .is_none());
    }

    #[test]
    fn dump_format() {
        let g = arith();
        let a = build_fta_for_example(
            g,
            &[Value::Int(1), Value::Int(3)],
            &Value::Int(4),
            &BuildConfig::with_depth(3),
        )
        .unwrap();
        let d = a.dump(a.finals());
        assert!(d.contains("x1 -> q_x1^1\n"), "{d}");
        assert!(d.contains("id(q_x1^1) -> q_e^1\n"), "{d}");
        assert!(d.contains("plus(q_e^1,q_e^3) -> q_e^4*\n"), "{d}");
        assert_eq!(d.lines().count(), a.transition_count());
    }

    #[test]
    fn vacuous_bound() {
        let a = build_fta(
            arith(),
            &[vec![Value::Int(1)], vec![Value::Int(2)]],
            &BuildConfig::with_depth(1),
        )
        .unwrap();
        assert!(a.finals().is_empty());
    }

    #[test]
    fn boolean_example() {
        let g = Arc::new(
            Grammar::parse("bool", "start b\nb -> true | false | and(b, b) | not(b)").unwrap(),
        );
        let a = build_fta_for_example(
            g.clone(),
            &[],
            &Value::Bool(true),
            &BuildConfig::with_depth(3),
        )
        .unwrap();
        let p = parse_program("and(true,not(false))", &g).unwrap();
        let run = accepts(&a, &p).unwrap();
        assert_eq!(a.state(run.states[0]).value, Value::Bool(true));
    }

    #[test]
    fn capacity_ceiling() {
        let g = Arc::new(
            Grammar::parse(
                "grow",
                "params x\nstart e\ne -> x | plus(e, e) | times(e, e)",
            )
            .unwrap(),
        );
        let cfg = BuildConfig {
            depth_bound: 6,
            state_ceiling: 20,
            exec: ExecMode::Sequential,
        };
        assert!(matches!(
            build_fta(g, &[vec![Value::Int(2), Value::Int(3)]], &cfg),
            Err(FtaError::CapacityExceeded { .. })
        ));
    }

    #[test]
    fn contexts_are_separate() {
        let g = Arc::new(Grammar::parse("inc", "params x\nstart e\ne -> x | inc(e)").unwrap());
        let a = build_fta(
            g.clone(),
            &[vec![Value::Int(1), Value::Int(2)]],
            &BuildConfig::with_depth(3),
        )
        .unwrap();
        assert_eq!(a.contexts().len(), 2);
        let p = parse_program("inc(x)", &g).unwrap();
        let vals: Vec<Value> = reachable_final_states(&a, &p)
            .iter()
            .map(|q| a.state(*q).value.clone())
            .collect();
        assert_eq!(vals, vec![Value::Int(2), Value::Int(3)]);
    }
}
