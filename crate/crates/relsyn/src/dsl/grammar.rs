//! Context-free grammars with executable constructors, and the grammar-file reader.
//!
//! Grammar files are line oriented:
//!
//! ```text
//! # comment
//! params x: Str
//! start E
//! E -> padToMultiple(E, num, char)
//! E -> M
//! num -> 1 | 2 | 4
//! ```
//!
//! A right-hand side is a literal (a constant), a bare symbol (a chain
//! production, also used to lift a parameter into a nonterminal), a nullary
//! constructor such as `Number`, or `ctor(S1, ..., Sn)` over symbols.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::path::Path;

use crate::dsl::semantics::{self, Builtin};
use crate::syntax::{Cursor, Pos, SyntaxError};
use crate::values::{Sort, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymId(pub u32);

impl SymId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    Param { index: usize, sort: Option<Sort> },
    NonTerminal,
}

#[derive(Clone, Debug)]
pub struct SymbolInfo {
    pub name: String,
    pub kind: SymbolKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rhs {
    Const(Value),
    Op {
        op: &'static Builtin,
        args: Vec<SymId>,
    },
    Chain(SymId),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Production {
    pub lhs: SymId,
    pub rhs: Rhs,
}

impl Production {
    pub fn children(&self) -> &[SymId] {
        match &self.rhs {
            Rhs::Const(_) => &[],
            Rhs::Op { args, .. } => args,
            Rhs::Chain(s) => std::slice::from_ref(s),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GrammarError {
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
    #[error("{pos}: unknown constructor `{name}`")]
    UnknownConstructor { name: String, pos: Pos },
    #[error("{pos}: constructor `{name}` does not take {found} argument(s)")]
    ArityMismatch {
        name: String,
        found: usize,
        pos: Pos,
    },
    #[error("{pos}: unknown symbol `{name}`")]
    UnknownSymbol { name: String, pos: Pos },
    #[error("invalid grammar: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Clone, Debug)]
pub struct Grammar {
    pub name: String,
    pub symbols: Vec<SymbolInfo>,
    pub params: Vec<SymId>,
    pub start: SymId,
    pub productions: Vec<Production>,
    by_lhs: Vec<Vec<usize>>,
    min_depth: Vec<Option<u32>>,
}

impl Grammar {
    fn new(
        name: String,
        symbols: Vec<SymbolInfo>,
        params: Vec<SymId>,
        start: SymId,
        productions: Vec<Production>,
    ) -> Result<Grammar, GrammarError> {
        let mut by_lhs = vec![Vec::new(); symbols.len()];
        for (i, p) in productions.iter().enumerate() {
            by_lhs[p.lhs.index()].push(i);
        }
        let mut g = Grammar {
            name,
            symbols,
            params,
            start,
            productions,
            by_lhs,
            min_depth: Vec::new(),
        };
        g.min_depth = g.compute_min_depth();
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<(), GrammarError> {
        if self.is_param(self.start) {
            return Err(GrammarError::Invalid(
                "start symbol must be a nonterminal".into(),
            ));
        }
        let mut seen = vec![false; self.symbols.len()];
        let mut queue = VecDeque::from([self.start]);
        seen[self.start.index()] = true;
        while let Some(s) = queue.pop_front() {
            for &pi in &self.by_lhs[s.index()] {
                for &c in self.productions[pi].children() {
                    if !std::mem::replace(&mut seen[c.index()], true) {
                        queue.push_back(c);
                    }
                }
            }
        }
        for (i, info) in self.symbols.iter().enumerate() {
            if info.kind == SymbolKind::NonTerminal && !seen[i] {
                return Err(GrammarError::Invalid(format!(
                    "nonterminal `{}` is unreachable from the start symbol",
                    info.name
                )));
            }
        }
        Ok(())
    }

    fn compute_min_depth(&self) -> Vec<Option<u32>> {
        let mut d: Vec<Option<u32>> = self
            .symbols
            .iter()
            .map(|s| matches!(s.kind, SymbolKind::Param { .. }).then_some(1))
            .collect();
        loop {
            let mut changed = false;
            for p in &self.productions {
                let cand = p
                    .children()
                    .iter()
                    .map(|c| d[c.index()])
                    .try_fold(0u32, |acc, x| x.map(|x| acc.max(x)))
                    .map(|m| m + 1);
                if let Some(c) = cand {
                    if d[p.lhs.index()].is_none_or(|old| c < old) {
                        d[p.lhs.index()] = Some(c);
                        changed = true;
                    }
                }
            }
            if !changed {
                return d;
            }
        }
    }

    /// Grammar with a single production `s0 -> op(x1, ..., xn)`.
    pub fn single_op(op: &'static Builtin) -> Grammar {
        let mut symbols: Vec<SymbolInfo> = (0..op.arity)
            .map(|i| SymbolInfo {
                name: format!("x{}", i + 1),
                kind: SymbolKind::Param {
                    index: i,
                    sort: None,
                },
            })
            .collect();
        symbols.push(SymbolInfo {
            name: "s0".into(),
            kind: SymbolKind::NonTerminal,
        });
        let start = SymId(op.arity as u32);
        let params = (0..op.arity as u32).map(SymId).collect::<Vec<_>>();
        let prod = Production {
            lhs: start,
            rhs: Rhs::Op {
                op,
                args: params.clone(),
            },
        };
        Grammar::new(op.name.to_string(), symbols, params, start, vec![prod])
            .expect("single production grammar")
    }

    /// Grammar with the single production `s0 -> c`.
    pub fn constant(c: Value) -> Grammar {
        let symbols = vec![SymbolInfo {
            name: "s0".into(),
            kind: SymbolKind::NonTerminal,
        }];
        let prod = Production {
            lhs: SymId(0),
            rhs: Rhs::Const(c),
        };
        Grammar::new("const".into(), symbols, Vec::new(), SymId(0), vec![prod])
            .expect("constant grammar")
    }

    pub fn parse(name: &str, text: &str) -> Result<Grammar, GrammarError> {
        parse_grammar(name, text)
    }

    pub fn symbol(&self, s: SymId) -> &SymbolInfo {
        &self.symbols[s.index()]
    }

    pub fn symbol_name(&self, s: SymId) -> &str {
        &self.symbols[s.index()].name
    }

    pub fn find_symbol(&self, name: &str) -> Option<SymId> {
        self.symbols
            .iter()
            .position(|s| s.name == name)
            .map(|i| SymId(i as u32))
    }

    pub fn is_param(&self, s: SymId) -> bool {
        matches!(self.symbols[s.index()].kind, SymbolKind::Param { .. })
    }

    pub fn param_index(&self, s: SymId) -> Option<usize> {
        match self.symbols[s.index()].kind {
            SymbolKind::Param { index, .. } => Some(index),
            SymbolKind::NonTerminal => None,
        }
    }

    pub fn param_names(&self) -> Vec<&str> {
        self.params.iter().map(|p| self.symbol_name(*p)).collect()
    }

    pub fn productions_of(&self, s: SymId) -> impl Iterator<Item = (usize, &Production)> {
        self.by_lhs[s.index()]
            .iter()
            .map(move |&i| (i, &self.productions[i]))
    }

    /// Smallest derivation depth of any tree rooted at `s`, if `s` is productive.
    pub fn min_depth(&self, s: SymId) -> Option<u32> {
        self.min_depth[s.index()]
    }

    /// Constructors used by the grammar.
    pub fn constructors(&self) -> Vec<&'static Builtin> {
        let mut out: Vec<&'static Builtin> = Vec::new();
        for p in &self.productions {
            if let Rhs::Op { op, .. } = &p.rhs {
                if !out.contains(op) {
                    out.push(op);
                }
            }
        }
        out
    }
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "params {}", self.param_names().join(", "))?;
        writeln!(f, "start {}", self.symbol_name(self.start))?;
        for p in &self.productions {
            let lhs = self.symbol_name(p.lhs);
            match &p.rhs {
                Rhs::Const(v) => writeln!(f, "{lhs} -> {v}")?,
                Rhs::Chain(s) => writeln!(f, "{lhs} -> {}", self.symbol_name(*s))?,
                Rhs::Op { op, args } if args.is_empty() => writeln!(f, "{lhs} -> {}", op.name)?,
                Rhs::Op { op, args } => {
                    let args: Vec<&str> = args.iter().map(|a| self.symbol_name(*a)).collect();
                    writeln!(f, "{lhs} -> {}({})", op.name, args.join(", "))?
                }
            }
        }
        Ok(())
    }
}

pub fn load_grammar(path: &Path) -> Result<Grammar, GrammarError> {
    let text = std::fs::read_to_string(path).map_err(|source| GrammarError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path.file_stem().map_or_else(
        || "grammar".to_string(),
        |s| s.to_string_lossy().into_owned(),
    );
    parse_grammar(&name, &text)
}

enum RawRhs {
    Literal(Value),
    Name(String, Pos),
    Call(String, Vec<(String, Pos)>, Pos),
}

fn line_cursor(line: &str, lineno: usize) -> Result<Cursor, SyntaxError> {
    Cursor::new(line).map_err(|mut e| {
        e.pos.line = lineno;
        e
    })
}

fn at_line(mut e: SyntaxError, lineno: usize) -> SyntaxError {
    e.pos.line = lineno;
    e
}

pub fn parse_grammar(name: &str, text: &str) -> Result<Grammar, GrammarError> {
    let mut params: Vec<(String, Option<Sort>)> = Vec::new();
    let mut start: Option<String> = None;
    let mut raw: Vec<(String, RawRhs)> = Vec::new();
    let mut lhs_order: Vec<String> = Vec::new();

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let mut c = line_cursor(line, lineno)?;
        if c.at_end() {
            continue;
        }
        let fix = |e: SyntaxError| at_line(e, lineno);
        if c.eat_keyword("params") || c.eat_keyword("param") {
            loop {
                let p = c.expect_ident().map_err(fix)?;
                let sort = if c.eat_punct(":") {
                    let s = c.expect_ident().map_err(fix)?;
                    Some(
                        Sort::parse(&s)
                            .ok_or_else(|| fix(c.error(format!("unknown sort `{s}`"))))?,
                    )
                } else {
                    None
                };
                params.push((p, sort));
                if !c.eat_punct(",") {
                    break;
                }
            }
        } else if c.eat_keyword("start") {
            start = Some(c.expect_ident().map_err(fix)?);
        } else {
            let lhs = c.expect_ident().map_err(fix)?;
            c.expect_punct("->").map_err(fix)?;
            if !lhs_order.contains(&lhs) {
                lhs_order.push(lhs.clone());
            }
            loop {
                let pos = Pos {
                    line: lineno,
                    col: c.pos().col,
                };
                let rhs = if let Some(v) = c.literal().map_err(fix)? {
                    RawRhs::Literal(v)
                } else {
                    let n = c.expect_ident().map_err(fix)?;
                    if c.eat_punct("(") {
                        let mut args = Vec::new();
                        if !c.eat_punct(")") {
                            loop {
                                let apos = Pos {
                                    line: lineno,
                                    col: c.pos().col,
                                };
                                args.push((c.expect_ident().map_err(fix)?, apos));
                                if c.eat_punct(")") {
                                    break;
                                }
                                c.expect_punct(",").map_err(fix)?;
                            }
                        }
                        RawRhs::Call(n, args, pos)
                    } else {
                        RawRhs::Name(n, pos)
                    }
                };
                raw.push((lhs.clone(), rhs));
                if !c.eat_punct("|") {
                    break;
                }
            }
        }
        if !c.at_end() {
            return Err(at_line(c.unexpected("end of line"), lineno).into());
        }
    }

    if lhs_order.is_empty() {
        return Err(GrammarError::Invalid("no productions".into()));
    }
    let mut symbols: Vec<SymbolInfo> = params
        .iter()
        .enumerate()
        .map(|(index, (n, sort))| SymbolInfo {
            name: n.clone(),
            kind: SymbolKind::Param { index, sort: *sort },
        })
        .collect();
    for n in &lhs_order {
        if params.iter().any(|(p, _)| p == n) {
            return Err(GrammarError::Invalid(format!(
                "parameter `{n}` cannot have productions"
            )));
        }
        symbols.push(SymbolInfo {
            name: n.clone(),
            kind: SymbolKind::NonTerminal,
        });
    }
    let ids: HashMap<String, SymId> = symbols
        .iter()
        .enumerate()
        .map(|(i, s)| (s.name.clone(), SymId(i as u32)))
        .collect();
    let start_name = start.unwrap_or_else(|| lhs_order[0].clone());
    let start = *ids.get(&start_name).ok_or_else(|| {
        GrammarError::Invalid(format!("start symbol `{start_name}` has no productions"))
    })?;

    let mut productions = Vec::new();
    for (lhs, rhs) in raw {
        let lhs = ids[&lhs];
        let rhs = match rhs {
            RawRhs::Literal(v) => Rhs::Const(v),
            RawRhs::Name(n, pos) => match ids.get(&n) {
                Some(&s) => Rhs::Chain(s),
                None => Rhs::Op {
                    op: resolve(&n, 0, pos)?,
                    args: Vec::new(),
                },
            },
            RawRhs::Call(n, args, pos) => {
                let op = resolve(&n, args.len(), pos)?;
                let args = args
                    .into_iter()
                    .map(|(a, apos)| {
                        ids.get(&a)
                            .copied()
                            .ok_or(GrammarError::UnknownSymbol { name: a, pos: apos })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Rhs::Op { op, args }
            }
        };
        productions.push(Production { lhs, rhs });
    }
    let param_ids = (0..params.len() as u32).map(SymId).collect();
    Grammar::new(name.to_string(), symbols, param_ids, start, productions)
}

fn resolve(name: &str, arity: usize, pos: Pos) -> Result<&'static Builtin, GrammarError> {
    semantics::lookup(name, arity).ok_or_else(|| {
        if semantics::known_name(name) {
            GrammarError::ArityMismatch {
                name: name.to_string(),
                found: arity,
                pos,
            }
        } else {
            GrammarError::UnknownConstructor {
                name: name.to_string(),
                pos,
            }
        }
    })
}
