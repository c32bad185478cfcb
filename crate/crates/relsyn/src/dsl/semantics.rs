//! Registry of constructor semantics, addressed by name and arity.

use std::fmt;

use crate::values::Value;

/// An executable constructor.
#[derive(Clone, Copy)]
pub struct Builtin {
    pub name: &'static str,
    pub arity: usize,
    /// Strict constructors yield the first `Err` argument unchanged; only the
    /// relations and connectives used in formulas look at `Err` themselves.
    pub strict: bool,
    pub run: fn(&[Value]) -> Value,
}

impl Builtin {
    pub fn apply(&self, args: &[Value]) -> Value {
        debug_assert_eq!(args.len(), self.arity, "{}", self.name);
        if self.strict {
            if let Some(e) = args.iter().find(|v| v.is_err()) {
                return e.clone();
            }
        }
        (self.run)(args)
    }
}

impl PartialEq for Builtin {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.arity == other.arity
    }
}

impl Eq for Builtin {}

impl std::hash::Hash for Builtin {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.name.hash(state);
        self.arity.hash(state);
    }
}

impl fmt::Debug for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

pub fn lookup(name: &str, arity: usize) -> Option<&'static Builtin> {
    REGISTRY.iter().find(|b| b.name == name && b.arity == arity)
}

pub fn known_name(name: &str) -> bool {
    REGISTRY.iter().any(|b| b.name == name)
}

pub fn all() -> &'static [Builtin] {
    REGISTRY
}

macro_rules! strict {
    ($name:expr, $arity:expr, $f:expr) => {
        Builtin {
            name: $name,
            arity: $arity,
            strict: true,
            run: $f,
        }
    };
}

macro_rules! lenient {
    ($name:expr, $arity:expr, $f:expr) => {
        Builtin {
            name: $name,
            arity: $arity,
            strict: false,
            run: $f,
        }
    };
}

static REGISTRY: &[Builtin] = &[
    // Arithmetic.
    strict!("plus", 2, |a| int2(a, i64::checked_add)),
    strict!("minus", 2, |a| int2(a, i64::checked_sub)),
    strict!("times", 2, |a| int2(a, i64::checked_mul)),
    strict!("inc", 1, |a| int1(a, |x| x.checked_add(1))),
    strict!("dec", 1, |a| int1(a, |x| x.checked_sub(1))),
    strict!("dbl", 1, |a| int1(a, |x| x.checked_mul(2))),
    strict!("negate", 1, |a| int1(a, i64::checked_neg)),
    // Relations and connectives.
    lenient!("eq", 2, |a| rel(a, |o| o.is_eq())),
    lenient!("ne", 2, |a| rel(a, |o| o.is_ne())),
    lenient!("lt", 2, |a| rel(a, |o| o.is_lt())),
    lenient!("le", 2, |a| rel(a, |o| o.is_le())),
    lenient!("gt", 2, |a| rel(a, |o| o.is_gt())),
    lenient!("ge", 2, |a| rel(a, |o| o.is_ge())),
    lenient!("and", 2, |a| Value::Bool(truth(&a[0]) && truth(&a[1]))),
    lenient!("or", 2, |a| Value::Bool(truth(&a[0]) || truth(&a[1]))),
    lenient!("implies", 2, |a| Value::Bool(!truth(&a[0]) || truth(&a[1]))),
    lenient!("iff", 2, |a| Value::Bool(truth(&a[0]) == truth(&a[1]))),
    lenient!("not", 1, |a| Value::Bool(!truth(&a[0]))),
    // Interpreted helpers usable in grammars as well.
    strict!("sgn", 1, |a| crate::values::builtin_sgn(&a[0])),
    strict!("neg", 1, |a| crate::values::builtin_neg(&a[0])),
    // Encoders.
    strict!("codePoint", 1, |a| super::codec::code_point(&a[0])),
    strict!("encUTF8", 1, |a| super::codec::enc_utf8(&a[0])),
    strict!("encUTF16", 1, |a| super::codec::enc_utf16(&a[0])),
    strict!("encUTF32", 1, |a| super::codec::enc_utf32(&a[0])),
    strict!("encUTF7", 1, |a| super::codec::enc_utf7(&a[0])),
    strict!("reshape", 2, |a| super::codec::reshape(&a[0], &a[1])),
    strict!("enc16", 1, |a| super::codec::enc_map(
        &a[0],
        super::codec::BASE16
    )),
    strict!("enc32", 1, |a| super::codec::enc_map(
        &a[0],
        super::codec::BASE32
    )),
    strict!("enc32Hex", 1, |a| super::codec::enc_map(
        &a[0],
        super::codec::BASE32HEX
    )),
    strict!("enc64", 1, |a| super::codec::enc_map(
        &a[0],
        super::codec::BASE64
    )),
    strict!("enc64XML", 1, |a| super::codec::enc_map(
        &a[0],
        super::codec::BASE64XML
    )),
    strict!("encUU", 1, |a| super::codec::enc_map(
        &a[0],
        super::codec::UU
    )),
    strict!("padToMultiple", 3, |a| super::codec::pad_to_multiple(
        &a[0], &a[1], &a[2]
    )),
    strict!("header", 1, |a| super::codec::header(&a[0])),
    // Decoders.
    strict!("asUnicode", 1, |a| super::codec::as_unicode(&a[0])),
    strict!("decUTF8", 1, |a| super::codec::dec_utf8(&a[0])),
    strict!("decUTF16", 1, |a| super::codec::dec_utf16(&a[0])),
    strict!("decUTF32", 1, |a| super::codec::dec_utf32(&a[0])),
    strict!("decUTF7", 1, |a| super::codec::dec_utf7(&a[0])),
    strict!("invReshape", 2, |a| super::codec::inv_reshape(&a[0], &a[1])),
    strict!("dec16", 1, |a| super::codec::dec_map(
        &a[0],
        super::codec::BASE16
    )),
    strict!("dec32", 1, |a| super::codec::dec_map(
        &a[0],
        super::codec::BASE32
    )),
    strict!("dec32Hex", 1, |a| super::codec::dec_map(
        &a[0],
        super::codec::BASE32HEX
    )),
    strict!("dec64", 1, |a| super::codec::dec_map(
        &a[0],
        super::codec::BASE64
    )),
    strict!("dec64XML", 1, |a| super::codec::dec_map(
        &a[0],
        super::codec::BASE64XML
    )),
    strict!("decUU", 1, |a| super::codec::dec_map(
        &a[0],
        super::codec::UU
    )),
    strict!("removePad", 2, |a| super::codec::remove_pad(&a[0], &a[1])),
    strict!("substr", 2, |a| super::codec::suffix(&a[0], &a[1])),
    // Comparators.
    strict!("chain", 2, |a| super::compare::chain(&a[0], &a[1])),
    strict!("intCompare", 2, |a| super::compare::int_compare(
        &a[0], &a[1]
    )),
    strict!("strCompare", 2, |a| super::compare::str_compare(
        &a[0], &a[1]
    )),
    strict!("countChar", 2, |a| super::compare::count_char(&a[0], &a[1])),
    strict!("length", 1, |a| super::compare::length(&a[0])),
    strict!("toInt", 1, |a| super::compare::to_int(&a[0])),
    strict!("substr", 3, |a| super::compare::substr(&a[0], &a[1], &a[2])),
    strict!("pos", 4, |a| super::compare::pos(
        &a[0], &a[1], &a[2], &a[3]
    )),
    strict!("constPos", 1, |a| super::compare::const_pos(&a[0])),
    strict!("Number", 0, |_| Value::str("Number")),
    strict!("Alpha", 0, |_| Value::str("Alpha")),
    strict!("Whitespace", 0, |_| Value::str("Whitespace")),
    strict!("AlphaNum", 0, |_| Value::str("AlphaNum")),
    strict!("Start", 0, |_| Value::str("Start")),
    strict!("End", 0, |_| Value::str("End")),
];

fn int1(a: &[Value], f: fn(i64) -> Option<i64>) -> Value {
    match &a[0] {
        Value::Int(x) => f(*x).map_or(Value::Err("overflow"), Value::Int),
        _ => Value::Err("type"),
    }
}

fn int2(a: &[Value], f: fn(i64, i64) -> Option<i64>) -> Value {
    match (&a[0], &a[1]) {
        (Value::Int(x), Value::Int(y)) => f(*x, *y).map_or(Value::Err("overflow"), Value::Int),
        _ => Value::Err("type"),
    }
}

fn truth(v: &Value) -> bool {
    matches!(v, Value::Bool(true))
}

/// Atoms over `Err` or over values of different sorts are false.
fn rel(a: &[Value], test: fn(std::cmp::Ordering) -> bool) -> Value {
    let (x, y) = (&a[0], &a[1]);
    if x.is_err() || y.is_err() || x.sort() != y.sort() {
        return Value::Bool(false);
    }
    Value::Bool(test(x.cmp(y)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_unique_per_arity() {
        let mut seen = std::collections::HashSet::new();
        for b in all() {
            assert!(seen.insert((b.name, b.arity)), "duplicate {:?}", b);
        }
    }

    #[test]
    fn err_absorption() {
        for b in all().iter().filter(|b| b.strict && b.arity > 0) {
            let mut args = vec![Value::Int(1); b.arity];
            args[b.arity - 1] = Value::Err("probe");
            assert_eq!(b.apply(&args), Value::Err("probe"), "{:?}", b);
        }
    }

    #[test]
    fn relations_on_err_and_mixed_sorts() {
        let eq = lookup("eq", 2).unwrap();
        assert_eq!(
            eq.apply(&[Value::Err("x"), Value::Err("x")]),
            Value::Bool(false)
        );
        assert_eq!(
            eq.apply(&[Value::Int(5), Value::str("5")]),
            Value::Bool(false)
        );
        assert_eq!(eq.apply(&[Value::Int(5), Value::Int(5)]), Value::Bool(true));
        let ne = lookup("ne", 2).unwrap();
        assert_eq!(
            ne.apply(&[Value::Int(5), Value::str("5")]),
            Value::Bool(false)
        );
        let lt = lookup("lt", 2).unwrap();
        assert_eq!(lt.apply(&[Value::Int(1), Value::Int(2)]), Value::Bool(true));
    }

    #[test]
    fn overflow_is_err() {
        let times = lookup("times", 2).unwrap();
        assert_eq!(
            times.apply(&[Value::Int(i64::MAX), Value::Int(2)]),
            Value::Err("overflow")
        );
    }
}
