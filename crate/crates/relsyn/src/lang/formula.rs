//! Terms and quantifier-free formulas over uninterpreted function symbols.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::dsl::semantics;
use crate::dsl::ProgramAst;
use crate::values::{self, Value};

/// Name of a function symbol. Occurrence symbols produced by relaxation are
/// written `f#k`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(s: &str) -> Symbol {
        Symbol(Arc::from(s))
    }

    pub fn occurrence(base: &Symbol, k: usize) -> Symbol {
        Symbol::new(&format!("{}#{k}", base.0))
    }

    /// The symbol with any occurrence index removed.
    pub fn erase(&self) -> Symbol {
        match self.0.split_once('#') {
            Some((base, _)) => Symbol::new(base),
            None => self.clone(),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Const(Value),
    /// A quantified variable; ground terms contain none.
    Var(Arc<str>),
    Apply(Symbol, Vec<Term>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rel {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Conn {
    And,
    Or,
    Implies,
    Iff,
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(Term, Rel, Term),
    Binary(Box<Formula>, Conn, Box<Formula>),
    Not(Box<Formula>),
}

/// A formula without quantified variables.
pub type GroundFormula = Formula;

impl Rel {
    pub const ALL: [Rel; 6] = [Rel::Eq, Rel::Ne, Rel::Lt, Rel::Le, Rel::Gt, Rel::Ge];

    pub fn token(self) -> &'static str {
        match self {
            Rel::Eq => "==",
            Rel::Ne => "!=",
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Gt => ">",
            Rel::Ge => ">=",
        }
    }

    /// Name of the constructor implementing the relation.
    pub fn builtin(self) -> &'static str {
        match self {
            Rel::Eq => "eq",
            Rel::Ne => "ne",
            Rel::Lt => "lt",
            Rel::Le => "le",
            Rel::Gt => "gt",
            Rel::Ge => "ge",
        }
    }

    pub fn from_token(t: &str) -> Option<Rel> {
        Rel::ALL.into_iter().find(|r| r.token() == t)
    }
}

impl Conn {
    pub const ALL: [Conn; 4] = [Conn::And, Conn::Or, Conn::Implies, Conn::Iff];

    pub fn token(self) -> &'static str {
        match self {
            Conn::And => "&&",
            Conn::Or => "||",
            Conn::Implies => "=>",
            Conn::Iff => "<=>",
        }
    }

    pub fn builtin(self) -> &'static str {
        match self {
            Conn::And => "and",
            Conn::Or => "or",
            Conn::Implies => "implies",
            Conn::Iff => "iff",
        }
    }
}

impl Term {
    pub fn int(i: i64) -> Term {
        Term::Const(Value::Int(i))
    }

    pub fn app(f: &str, args: Vec<Term>) -> Term {
        Term::Apply(Symbol::new(f), args)
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Const(_) => true,
            Term::Var(_) => false,
            Term::Apply(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Const(_) | Term::Var(_) => 1,
            Term::Apply(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    fn visit_symbols(&self, f: &mut impl FnMut(&Symbol)) {
        if let Term::Apply(s, args) = self {
            f(s);
            args.iter().for_each(|a| a.visit_symbols(f));
        }
    }

    pub fn substitute(&self, env: &[(Arc<str>, Value)]) -> Term {
        match self {
            Term::Var(v) => match env.iter().find(|(n, _)| n == v) {
                Some((_, val)) => Term::Const(val.clone()),
                None => self.clone(),
            },
            Term::Const(_) => self.clone(),
            Term::Apply(s, args) => {
                Term::Apply(s.clone(), args.iter().map(|a| a.substitute(env)).collect())
            }
        }
    }

    pub fn erase(&self) -> Term {
        match self {
            Term::Apply(s, args) => Term::Apply(s.erase(), args.iter().map(Term::erase).collect()),
            _ => self.clone(),
        }
    }
}

impl Formula {
    pub fn atom(l: Term, r: Rel, t: Term) -> Formula {
        Formula::Atom(l, r, t)
    }

    pub fn eq(l: Term, r: Term) -> Formula {
        Formula::Atom(l, Rel::Eq, r)
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::Binary(Box::new(l), Conn::And, Box::new(r))
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    /// Left-nested conjunction of a nonempty list.
    pub fn conjunction(parts: &[Formula]) -> Option<Formula> {
        let (first, rest) = parts.split_first()?;
        Some(
            rest.iter()
                .fold(first.clone(), |acc, f| Formula::and(acc, f.clone())),
        )
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Formula::Atom(l, _, r) => l.is_ground() && r.is_ground(),
            Formula::Binary(l, _, r) => l.is_ground() && r.is_ground(),
            Formula::Not(b) => b.is_ground(),
        }
    }

    /// Number of term and formula nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(l, _, r) => 1 + l.size() + r.size(),
            Formula::Binary(l, _, r) => 1 + l.size() + r.size(),
            Formula::Not(b) => 1 + b.size(),
        }
    }

    pub fn visit_symbols(&self, f: &mut impl FnMut(&Symbol)) {
        match self {
            Formula::Atom(l, _, r) => {
                l.visit_symbols(f);
                r.visit_symbols(f);
            }
            Formula::Binary(l, _, r) => {
                l.visit_symbols(f);
                r.visit_symbols(f);
            }
            Formula::Not(b) => b.visit_symbols(f),
        }
    }

    pub fn substitute(&self, env: &[(Arc<str>, Value)]) -> Formula {
        match self {
            Formula::Atom(l, r, t) => Formula::Atom(l.substitute(env), *r, t.substitute(env)),
            Formula::Binary(l, c, r) => {
                Formula::Binary(Box::new(l.substitute(env)), *c, Box::new(r.substitute(env)))
            }
            Formula::Not(b) => Formula::Not(Box::new(b.substitute(env))),
        }
    }

    /// Removes occurrence indices from every function symbol.
    pub fn erase(&self) -> Formula {
        match self {
            Formula::Atom(l, r, t) => Formula::Atom(l.erase(), *r, t.erase()),
            Formula::Binary(l, c, r) => {
                Formula::Binary(Box::new(l.erase()), *c, Box::new(r.erase()))
            }
            Formula::Not(b) => Formula::Not(Box::new(b.erase())),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(v) => write!(f, "{v}"),
            Term::Var(v) => f.write_str(v),
            Term::Apply(s, args) => {
                write!(f, "{s}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Fully parenthesized spec-file syntax.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(l, r, t) => write!(f, "{l} {} {t}", r.token()),
            Formula::Binary(l, c, r) => {
                let wrap = |x: &Formula| matches!(x, Formula::Binary(..));
                if wrap(l) {
                    write!(f, "({l})")?;
                } else {
                    write!(f, "{l}")?;
                }
                write!(f, " {} ", c.token())?;
                if wrap(r) {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
            Formula::Not(b) => write!(f, "!({b})"),
        }
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Maps function symbols to programs.
pub type Interpretation = BTreeMap<Symbol, ProgramAst>;

fn lookup<'a>(interp: &'a Interpretation, s: &Symbol) -> Option<&'a ProgramAst> {
    interp.get(s).or_else(|| interp.get(&s.erase()))
}

pub fn eval_term(t: &Term, interp: &Interpretation, env: &[(Arc<str>, Value)]) -> Value {
    match t {
        Term::Const(v) => v.clone(),
        Term::Var(v) => env
            .iter()
            .find(|(n, _)| n == v)
            .map_or(Value::Err("unbound"), |(_, x)| x.clone()),
        Term::Apply(s, args) => {
            let vals: Vec<Value> = args.iter().map(|a| eval_term(a, interp, env)).collect();
            if let Some(p) = lookup(interp, s) {
                p.eval(&vals)
            } else if let Some(f) = values::interpreted(s.as_str()) {
                if vals.len() != f.arity {
                    return Value::Err("arity");
                }
                (f.apply)(&vals)
            } else {
                Value::Err("unbound")
            }
        }
    }
}

pub fn eval_formula(phi: &Formula, interp: &Interpretation, env: &[(Arc<str>, Value)]) -> bool {
    match phi {
        Formula::Atom(l, r, t) => {
            let (a, b) = (eval_term(l, interp, env), eval_term(t, interp, env));
            let op = semantics::lookup(r.builtin(), 2).expect("relation constructor");
            op.apply(&[a, b]) == Value::Bool(true)
        }
        Formula::Binary(l, c, r) => {
            let a = eval_formula(l, interp, env);
            let b = eval_formula(r, interp, env);
            match c {
                Conn::And => a && b,
                Conn::Or => a || b,
                Conn::Implies => !a || b,
                Conn::Iff => a == b,
            }
        }
        Formula::Not(b) => !eval_formula(b, interp, env),
    }
}

/// Truth value of a ground formula. Symbols are looked up exactly first and
/// then with their occurrence index erased, so an interpretation of the
/// original functions also interprets a relaxed formula.
pub fn evaluate_ground(phi: &GroundFormula, interp: &Interpretation) -> bool {
    eval_formula(phi, interp, &[])
}
