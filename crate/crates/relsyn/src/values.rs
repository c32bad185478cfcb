//! Runtime values shared by DSL interpreters, automaton states and the verifier.

use std::fmt;
use std::sync::Arc;

/// A dynamic value.
///
/// The derived ordering is the canonical total order: variant order first
/// (`Bool < Int < Char < Str < Bytes < IntArray < CharArray < Err`), then
/// lexicographic within a variant.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Char(char),
    Str(Arc<str>),
    Bytes(Arc<[u8]>),
    IntArray(Arc<[i64]>),
    CharArray(Arc<[char]>),
    Err(&'static str),
}

/// Sort of a value, as written in spec files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Bool,
    Int,
    Char,
    Str,
    Bytes,
    IntArray,
    CharArray,
}

impl Sort {
    pub fn parse(name: &str) -> Option<Sort> {
        Some(match name {
            "Bool" => Sort::Bool,
            "Int" => Sort::Int,
            "Char" => Sort::Char,
            "Str" => Sort::Str,
            "Bytes" => Sort::Bytes,
            "IntArray" => Sort::IntArray,
            "CharArray" => Sort::CharArray,
            _ => return None,
        })
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Value {
    pub fn str(s: &str) -> Value {
        Value::Str(Arc::from(s))
    }

    pub fn bytes(b: &[u8]) -> Value {
        Value::Bytes(Arc::from(b))
    }

    pub fn ints(v: &[i64]) -> Value {
        Value::IntArray(Arc::from(v))
    }

    pub fn chars(v: &[char]) -> Value {
        Value::CharArray(Arc::from(v))
    }

    pub fn is_err(&self) -> bool {
        matches!(self, Value::Err(_))
    }

    pub fn sort(&self) -> Option<Sort> {
        Some(match self {
            Value::Bool(_) => Sort::Bool,
            Value::Int(_) => Sort::Int,
            Value::Char(_) => Sort::Char,
            Value::Str(_) => Sort::Str,
            Value::Bytes(_) => Sort::Bytes,
            Value::IntArray(_) => Sort::IntArray,
            Value::CharArray(_) => Sort::CharArray,
            Value::Err(_) => return None,
        })
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }
}

/// Structural equality; `Err` equals only `Err` with the same label.
pub fn value_equals(a: &Value, b: &Value) -> bool {
    a == b
}

/// Sign of an integer; `Err` propagates and other inputs give `Err("type")`.
pub fn builtin_sgn(v: &Value) -> Value {
    match v {
        Value::Int(i) => Value::Int(i.signum()),
        Value::Err(_) => v.clone(),
        _ => Value::Err("type"),
    }
}

/// Unary minus with overflow detection.
pub fn builtin_neg(v: &Value) -> Value {
    match v {
        Value::Int(i) => i.checked_neg().map_or(Value::Err("overflow"), Value::Int),
        Value::Err(_) => v.clone(),
        _ => Value::Err("type"),
    }
}

/// A function with fixed semantics that may appear in specifications
/// without being synthesized.
#[derive(Clone, Copy)]
pub struct InterpretedFn {
    pub name: &'static str,
    pub arity: usize,
    pub apply: fn(&[Value]) -> Value,
}

impl fmt::Debug for InterpretedFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

const INTERPRETED: &[InterpretedFn] = &[
    InterpretedFn {
        name: "sgn",
        arity: 1,
        apply: |a| builtin_sgn(&a[0]),
    },
    InterpretedFn {
        name: "neg",
        arity: 1,
        apply: |a| builtin_neg(&a[0]),
    },
];

pub fn interpreted(name: &str) -> Option<&'static InterpretedFn> {
    INTERPRETED.iter().find(|f| f.name == name)
}

fn write_escaped_char(f: &mut fmt::Formatter<'_>, c: char, quote: char) -> fmt::Result {
    match c {
        '\\' => f.write_str("\\\\"),
        c if c == quote => write!(f, "\\{c}"),
        c if (' '..='~').contains(&c) => write!(f, "{c}"),
        c if (c as u32) <= 0xFFFF => write!(f, "\\u{:04X}", c as u32),
        c => write!(f, "\\u{{{:X}}}", c as u32),
    }
}

/// Literal syntax, re-readable by the spec and program parsers.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Char(c) => {
                f.write_str("'")?;
                write_escaped_char(f, *c, '\'')?;
                f.write_str("'")
            }
            Value::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    write_escaped_char(f, c, '"')?;
                }
                f.write_str("\"")
            }
            Value::Bytes(b) => {
                f.write_str("[")?;
                for (i, x) in b.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "0x{x:02X}")?;
                }
                f.write_str("]")
            }
            Value::IntArray(v) => {
                f.write_str("[")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("]")
            }
            Value::CharArray(v) => {
                f.write_str("[")?;
                for (i, c) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    f.write_str("'")?;
                    write_escaped_char(f, *c, '\'')?;
                    f.write_str("'")?;
                }
                f.write_str("]")
            }
            Value::Err(label) => write!(f, "<err:{label}>"),
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::str(s)
    }
}

impl From<char> for Value {
    fn from(c: char) -> Self {
        Value::Char(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equality_examples() {
        assert!(value_equals(&Value::Int(3), &Value::Int(3)));
        assert!(value_equals(&Value::str("TWFu"), &Value::str("TWFu")));
        assert!(!value_equals(&Value::Int(5), &Value::str("5")));
        assert!(!value_equals(&Value::Err("a"), &Value::Err("b")));
        assert!(value_equals(&Value::Err("a"), &Value::Err("a")));
    }

    #[test]
    fn sgn_examples() {
        assert_eq!(builtin_sgn(&Value::Int(-7)), Value::Int(-1));
        assert_eq!(builtin_sgn(&Value::Int(0)), Value::Int(0));
        assert_eq!(builtin_sgn(&Value::Int(12)), Value::Int(1));
        assert_eq!(builtin_sgn(&Value::Err("type")), Value::Err("type"));
        assert_eq!(builtin_sgn(&Value::str("x")), Value::Err("type"));
        assert_eq!(builtin_neg(&Value::Int(i64::MIN)), Value::Err("overflow"));
    }

    #[test]
    fn tag_order() {
        let ordered = [
            Value::Bool(true),
            Value::Int(-5),
            Value::Char('a'),
            Value::str(""),
            Value::bytes(&[]),
            Value::ints(&[]),
            Value::chars(&[]),
            Value::Err("x"),
        ];
        for w in ordered.windows(2) {
            assert!(w[0] < w[1], "{:?} < {:?}", w[0], w[1]);
        }
        assert!(Value::str("ab") < Value::str("b"));
    }

    #[test]
    fn literal_display() {
        assert_eq!(Value::str("a\"\\é").to_string(), "\"a\\\"\\\\\\u00E9\"");
        assert_eq!(Value::bytes(&[0xff, 0x0e]).to_string(), "[0xFF,0x0E]");
        assert_eq!(Value::ints(&[1, 2, 3]).to_string(), "[1,2,3]");
        assert_eq!(Value::Char('=').to_string(), "'='");
    }
}
