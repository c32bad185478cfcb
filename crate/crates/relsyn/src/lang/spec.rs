//! Spec files.
//!
//! ```text
//! fun encode : Str -> Str grammar "grammars/encoder.grammar" depth 7;
//! config val_len = 3;
//! example encode("Man") == "TWFu";
//! property forall x:Str. decode(encode(x)) == x;
//! ```
//!
//! The optional `depth N` suffix overrides the global depth bound for one
//! function; `config NAME = LITERAL;` sets verification and search options.

use std::path::PathBuf;
use std::sync::Arc;

use crate::lang::formula::{Conn, Formula, Rel, Symbol, Term};
use crate::syntax::{Cursor, Pos, SyntaxError, Tok};
use crate::values::{self, Sort, Value};

#[derive(Clone, Debug, PartialEq)]
pub struct FunDecl {
    pub name: Symbol,
    pub params: Vec<Sort>,
    pub ret: Sort,
    pub grammar: PathBuf,
    pub depth: Option<usize>,
}

/// One `example` (no variables) or `property` declaration.
#[derive(Clone, Debug, PartialEq)]
pub struct Clause {
    pub vars: Vec<(Arc<str>, Sort)>,
    pub body: Formula,
}

impl Clause {
    pub fn is_example(&self) -> bool {
        self.vars.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct RelationalSpec {
    pub funs: Vec<FunDecl>,
    /// Examples and properties in declaration order.
    pub clauses: Vec<Clause>,
    pub config: Vec<(String, Value)>,
}

impl RelationalSpec {
    pub fn examples(&self) -> impl Iterator<Item = &Formula> {
        self.clauses
            .iter()
            .filter(|c| c.is_example())
            .map(|c| &c.body)
    }

    pub fn properties(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter().filter(|c| !c.is_example())
    }

    pub fn fun(&self, name: &Symbol) -> Option<&FunDecl> {
        self.funs.iter().find(|f| &f.name == name)
    }

    pub fn config_value(&self, key: &str) -> Option<&Value> {
        self.config
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v)
    }
}

#[derive(Debug, PartialEq, thiserror::Error)]
pub enum SpecError {
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
    #[error("{pos}: unknown symbol `{name}`")]
    UnknownSymbol { name: String, pos: Pos },
    #[error("{pos}: `{name}` expects {expected} argument(s), found {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
        pos: Pos,
    },
    #[error("spec declares nothing")]
    EmptySpec,
}

pub fn parse_spec(text: &str) -> Result<RelationalSpec, SpecError> {
    let mut c = Cursor::new(text)?;
    let mut spec = RelationalSpec::default();
    let mut pending: Vec<(Clause, Vec<(Symbol, usize, Pos)>)> = Vec::new();
    if c.at_end() {
        return Err(SpecError::EmptySpec);
    }
    while !c.at_end() {
        if c.eat_keyword("fun") {
            spec.funs.push(fun_decl(&mut c)?);
        } else if c.eat_keyword("config") {
            let key = c.expect_ident()?;
            c.expect_punct("=")?;
            let v = c.literal()?.ok_or_else(|| c.unexpected("a literal"))?;
            spec.config.push((key, v));
        } else if c.eat_keyword("example") {
            let mut p = FormulaParser {
                c: &mut c,
                vars: Vec::new(),
                calls: Vec::new(),
            };
            let body = p.formula()?;
            let calls = std::mem::take(&mut p.calls);
            pending.push((
                Clause {
                    vars: Vec::new(),
                    body,
                },
                calls,
            ));
        } else if c.eat_keyword("property") {
            if !c.eat_keyword("forall") {
                return Err(c.unexpected("`forall`").into());
            }
            let mut vars: Vec<(Arc<str>, Sort)> = Vec::new();
            loop {
                let name = c.expect_ident()?;
                c.expect_punct(":")?;
                let s = c.expect_ident()?;
                let sort = Sort::parse(&s).ok_or_else(|| c.error(format!("unknown sort `{s}`")))?;
                vars.push((Arc::from(name.as_str()), sort));
                if !c.eat_punct(",") {
                    break;
                }
            }
            c.expect_punct(".")?;
            let mut p = FormulaParser {
                c: &mut c,
                vars: vars.iter().map(|v| v.0.clone()).collect(),
                calls: Vec::new(),
            };
            let body = p.formula()?;
            let calls = std::mem::take(&mut p.calls);
            pending.push((Clause { vars, body }, calls));
        } else {
            return Err(c
                .unexpected("`fun`, `config`, `example` or `property`")
                .into());
        }
        c.expect_punct(";")?;
    }
    for (clause, calls) in pending {
        for (sym, argc, pos) in calls {
            let expected = match (spec.fun(&sym), values::interpreted(sym.as_str())) {
                (Some(f), _) => f.params.len(),
                (None, Some(i)) => i.arity,
                (None, None) => {
                    return Err(SpecError::UnknownSymbol {
                        name: sym.to_string(),
                        pos,
                    })
                }
            };
            if expected != argc {
                return Err(SpecError::ArityMismatch {
                    name: sym.to_string(),
                    expected,
                    found: argc,
                    pos,
                });
            }
        }
        spec.clauses.push(clause);
    }
    Ok(spec)
}

fn fun_decl(c: &mut Cursor) -> Result<FunDecl, SpecError> {
    let name = c.expect_ident()?;
    c.expect_punct(":")?;
    let mut params = Vec::new();
    let sort = |c: &mut Cursor| -> Result<Sort, SyntaxError> {
        let s = c.expect_ident()?;
        Sort::parse(&s).ok_or_else(|| c.error(format!("unknown sort `{s}`")))
    };
    if !c.is_punct("->") {
        loop {
            params.push(sort(c)?);
            if !c.eat_punct(",") {
                break;
            }
        }
    }
    c.expect_punct("->")?;
    let ret = sort(c)?;
    if !c.eat_keyword("grammar") {
        return Err(c.unexpected("`grammar`").into());
    }
    let grammar = match c.next() {
        Some(Tok::Str(s)) => PathBuf::from(s),
        Some(Tok::Ident(s)) => {
            let mut path = s;
            while c.is_punct(".") && matches!(c.peek_at(1), Some(Tok::Ident(_))) {
                c.next();
                if let Some(Tok::Ident(more)) = c.next() {
                    path.push('.');
                    path.push_str(&more);
                }
            }
            PathBuf::from(path)
        }
        _ => return Err(c.error("expected a grammar path").into()),
    };
    let depth = if c.eat_keyword("depth") {
        match c.next() {
            Some(Tok::Int(n)) if n >= 1 => Some(n as usize),
            _ => return Err(c.error("expected a positive depth").into()),
        }
    } else {
        None
    };
    Ok(FunDecl {
        name: Symbol::new(&name),
        params,
        ret,
        grammar,
        depth,
    })
}

/// Parses a single formula, e.g. one written on the command line.
/// Function symbols are not checked.
pub fn parse_formula(text: &str) -> Result<Formula, SyntaxError> {
    let mut c = Cursor::new(text)?;
    let f = FormulaParser {
        c: &mut c,
        vars: Vec::new(),
        calls: Vec::new(),
    }
    .formula()?;
    if !c.at_end() {
        return Err(c.unexpected("end of formula"));
    }
    Ok(f)
}

struct FormulaParser<'a> {
    c: &'a mut Cursor,
    vars: Vec<Arc<str>>,
    calls: Vec<(Symbol, usize, Pos)>,
}

impl FormulaParser<'_> {
    fn formula(&mut self) -> Result<Formula, SyntaxError> {
        let l = self.implication()?;
        if self.c.eat_punct("<=>") {
            let r = self.formula()?;
            return Ok(Formula::Binary(Box::new(l), Conn::Iff, Box::new(r)));
        }
        Ok(l)
    }

    fn implication(&mut self) -> Result<Formula, SyntaxError> {
        let l = self.disjunction()?;
        if self.c.eat_punct("=>") {
            let r = self.implication()?;
            return Ok(Formula::Binary(Box::new(l), Conn::Implies, Box::new(r)));
        }
        Ok(l)
    }

    fn disjunction(&mut self) -> Result<Formula, SyntaxError> {
        let mut l = self.conjunction()?;
        while self.c.eat_punct("||") {
            let r = self.conjunction()?;
            l = Formula::Binary(Box::new(l), Conn::Or, Box::new(r));
        }
        Ok(l)
    }

    fn conjunction(&mut self) -> Result<Formula, SyntaxError> {
        let mut l = self.unary()?;
        while self.c.eat_punct("&&") {
            let r = self.unary()?;
            l = Formula::Binary(Box::new(l), Conn::And, Box::new(r));
        }
        Ok(l)
    }

    fn unary(&mut self) -> Result<Formula, SyntaxError> {
        if self.c.eat_punct("!") {
            return Ok(Formula::not(self.unary()?));
        }
        if self.c.eat_punct("(") {
            let f = self.formula()?;
            self.c.expect_punct(")")?;
            return Ok(f);
        }
        let l = self.term()?;
        let rel = match self.c.peek() {
            Some(Tok::Punct(p)) => Rel::from_token(p),
            _ => None,
        };
        match rel {
            Some(r) => {
                self.c.next();
                let t = self.term()?;
                Ok(Formula::Atom(l, r, t))
            }
            None => Ok(Formula::Atom(l, Rel::Eq, Term::Const(Value::Bool(true)))),
        }
    }

    fn term(&mut self) -> Result<Term, SyntaxError> {
        if let Some(v) = self.c.literal()? {
            return Ok(Term::Const(v));
        }
        let pos = self.c.pos();
        if self.c.eat_punct("-") {
            let t = self.term()?;
            self.calls.push((Symbol::new("neg"), 1, pos));
            return Ok(Term::app("neg", vec![t]));
        }
        let name = self.c.expect_ident()?;
        if self.c.eat_punct("(") {
            let mut args = Vec::new();
            if !self.c.eat_punct(")") {
                loop {
                    args.push(self.term()?);
                    if self.c.eat_punct(")") {
                        break;
                    }
                    self.c.expect_punct(",")?;
                }
            }
            self.calls.push((Symbol::new(&name), args.len(), pos));
            return Ok(Term::app(&name, args));
        }
        match self.vars.iter().find(|v| ***v == *name) {
            Some(v) => Ok(Term::Var(v.clone())),
            None => Err(SyntaxError {
                pos,
                msg: format!("unbound variable `{name}`"),
            }),
        }
    }
}
