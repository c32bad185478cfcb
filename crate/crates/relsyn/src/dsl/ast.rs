//! Program trees: evaluation, printing, parsing and grammar conformance.

use std::fmt;
use std::sync::Arc;

use crate::dsl::grammar::{Grammar, Rhs, SymId};
use crate::dsl::semantics::{self, Builtin};
use crate::syntax::{Cursor, SyntaxError};
use crate::values::Value;

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Node {
    Param { index: usize, name: Arc<str> },
    Const(Value),
    Op(&'static Builtin),
}

/// A program tree. Chain productions leave no trace in the tree.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ProgramAst {
    pub node: Node,
    pub children: Vec<ProgramAst>,
}

impl ProgramAst {
    pub fn param(index: usize, name: &str) -> ProgramAst {
        ProgramAst {
            node: Node::Param {
                index,
                name: Arc::from(name),
            },
            children: Vec::new(),
        }
    }

    pub fn constant(v: Value) -> ProgramAst {
        ProgramAst {
            node: Node::Const(v),
            children: Vec::new(),
        }
    }

    pub fn op(op: &'static Builtin, children: Vec<ProgramAst>) -> ProgramAst {
        debug_assert_eq!(op.arity, children.len());
        ProgramAst {
            node: Node::Op(op),
            children,
        }
    }

    /// Builds `name(children)` from the constructor registry.
    pub fn call(name: &str, children: Vec<ProgramAst>) -> ProgramAst {
        let op = semantics::lookup(name, children.len())
            .unwrap_or_else(|| panic!("no constructor {name}/{}", children.len()));
        ProgramAst::op(op, children)
    }

    pub fn eval(&self, args: &[Value]) -> Value {
        match &self.node {
            Node::Param { index, .. } => args.get(*index).cloned().unwrap_or(Value::Err("arity")),
            Node::Const(v) => v.clone(),
            Node::Op(op) => {
                let vals: smallvec::SmallVec<[Value; 4]> =
                    self.children.iter().map(|c| c.eval(args)).collect();
                op.apply(&vals)
            }
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(ProgramAst::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(ProgramAst::depth)
            .max()
            .unwrap_or(0)
    }

    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a ProgramAst)) {
        f(self);
        for c in &self.children {
            c.visit(f);
        }
    }
}

impl fmt::Display for ProgramAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            Node::Param { name, .. } => f.write_str(name),
            Node::Const(v) => write!(f, "{v}"),
            Node::Op(op) if self.children.is_empty() => f.write_str(op.name),
            Node::Op(op) => {
                write!(f, "{}(", op.name)?;
                for (i, c) in self.children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Debug for ProgramAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Parses a program in constructor syntax. Identifiers resolve to the
/// grammar's parameters first, then to nullary constructors.
pub fn parse_program(text: &str, g: &Grammar) -> Result<ProgramAst, SyntaxError> {
    let mut c = Cursor::new(text)?;
    let p = parse_in(&mut c, g)?;
    if !c.at_end() {
        return Err(c.unexpected("end of program"));
    }
    Ok(p)
}

pub(crate) fn parse_in(c: &mut Cursor, g: &Grammar) -> Result<ProgramAst, SyntaxError> {
    if let Some(v) = c.literal()? {
        return Ok(ProgramAst::constant(v));
    }
    let pos = c.pos();
    let name = c.expect_ident()?;
    if c.eat_punct("(") {
        let mut children = Vec::new();
        if !c.eat_punct(")") {
            loop {
                children.push(parse_in(c, g)?);
                if c.eat_punct(")") {
                    break;
                }
                c.expect_punct(",")?;
            }
        }
        let op = semantics::lookup(&name, children.len()).ok_or_else(|| SyntaxError {
            pos,
            msg: format!("unknown constructor `{name}/{}`", children.len()),
        })?;
        return Ok(ProgramAst::op(op, children));
    }
    if let Some(i) = g.param_names().iter().position(|p| *p == name) {
        return Ok(ProgramAst::param(i, &name));
    }
    if let Some(op) = semantics::lookup(&name, 0) {
        return Ok(ProgramAst::op(op, Vec::new()));
    }
    Err(SyntaxError {
        pos,
        msg: format!("unknown name `{name}`"),
    })
}

/// Minimal derivation depth of `p` from each grammar symbol (chain
/// productions count as a level), or `None` where no derivation exists.
pub fn derivation_depths(g: &Grammar, p: &ProgramAst) -> Vec<Option<u32>> {
    let kids: Vec<Vec<Option<u32>>> = p.children.iter().map(|c| derivation_depths(g, c)).collect();
    let mut d: Vec<Option<u32>> = vec![None; g.symbols.len()];
    let set = |d: &mut Vec<Option<u32>>, s: SymId, v: u32| {
        if d[s.index()].is_none_or(|old| v < old) {
            d[s.index()] = Some(v);
        }
    };
    if let Node::Param { index, .. } = &p.node {
        if let Some(&s) = g.params.get(*index) {
            set(&mut d, s, 1);
        }
    }
    for prod in &g.productions {
        match (&prod.rhs, &p.node) {
            (Rhs::Const(v), Node::Const(w)) if v == w => set(&mut d, prod.lhs, 1),
            (Rhs::Op { op, args }, Node::Op(o)) if op == o && args.len() == kids.len() => {
                let depth = args
                    .iter()
                    .zip(&kids)
                    .try_fold(0u32, |acc, (a, k)| k[a.index()].map(|x| acc.max(x)));
                if let Some(x) = depth {
                    set(&mut d, prod.lhs, x + 1);
                }
            }
            _ => {}
        }
    }
    loop {
        let mut changed = false;
        for prod in &g.productions {
            if let Rhs::Chain(s) = prod.rhs {
                if let Some(x) = d[s.index()] {
                    if d[prod.lhs.index()].is_none_or(|old| x + 1 < old) {
                        d[prod.lhs.index()] = Some(x + 1);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return d;
        }
    }
}

/// Derivation depth of `p` from the start symbol, if `p` is in the language.
pub fn conforms(g: &Grammar, p: &ProgramAst) -> Option<u32> {
    derivation_depths(g, p)[g.start.index()]
}
