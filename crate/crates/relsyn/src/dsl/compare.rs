//! Comparator semantics: comparison chaining, integer extraction and token positions.

use std::cmp::Ordering;

use crate::values::Value;

const TYPE: Value = Value::Err("type");

fn ord(o: Ordering) -> Value {
    Value::Int(o as i64)
}

/// The first argument unless it is zero, otherwise the second.
pub fn chain(a: &Value, b: &Value) -> Value {
    match (a, b) {
        (Value::Int(0), Value::Int(_)) => b.clone(),
        (Value::Int(_), Value::Int(_)) => a.clone(),
        _ => TYPE,
    }
}

pub fn int_compare(a: &Value, b: &Value) -> Value {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => ord(x.cmp(y)),
        _ => TYPE,
    }
}

pub fn str_compare(a: &Value, b: &Value) -> Value {
    match (a, b) {
        (Value::Str(x), Value::Str(y)) => ord(x.chars().cmp(y.chars())),
        _ => TYPE,
    }
}

pub fn count_char(s: &Value, c: &Value) -> Value {
    match (s, c) {
        (Value::Str(s), Value::Char(c)) => Value::Int(s.chars().filter(|x| x == c).count() as i64),
        _ => TYPE,
    }
}

pub fn length(s: &Value) -> Value {
    match s {
        Value::Str(s) => Value::Int(s.chars().count() as i64),
        _ => TYPE,
    }
}

/// Decimal integer with an optional leading `-`.
pub fn to_int(s: &Value) -> Value {
    let Value::Str(s) = s else { return TYPE };
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Value::Err("toInt");
    }
    s.parse::<i64>().map_or(Value::Err("overflow"), Value::Int)
}

/// Characters `[i, j)` of `s`.
pub fn substr(s: &Value, i: &Value, j: &Value) -> Value {
    let (Value::Str(s), Value::Int(i), Value::Int(j)) = (s, i, j) else {
        return TYPE;
    };
    let n = s.chars().count() as i64;
    if *i < 0 || i > j || *j > n {
        return Value::Err("substr");
    }
    Value::str(
        &s.chars()
            .skip(*i as usize)
            .take((j - i) as usize)
            .collect::<String>(),
    )
}

pub fn const_pos(k: &Value) -> Value {
    match k {
        Value::Int(_) => k.clone(),
        _ => TYPE,
    }
}

fn class_matches(class: &str, c: char) -> Option<bool> {
    Some(match class {
        "Number" => c.is_ascii_digit(),
        "Alpha" => c.is_alphabetic(),
        "Whitespace" => c.is_whitespace(),
        "AlphaNum" => c.is_alphanumeric(),
        _ => return None,
    })
}

/// Start/end offsets of the maximal runs of a token class, or of every
/// occurrence of a literal character token.
fn token_spans(s: &[char], token: &Value) -> Option<Vec<(usize, usize)>> {
    match token {
        Value::Char(t) => Some(
            s.iter()
                .enumerate()
                .filter(|(_, c)| *c == t)
                .map(|(i, _)| (i, i + 1))
                .collect(),
        ),
        Value::Str(class) => {
            class_matches(class, 'a')?;
            let mut spans = Vec::new();
            let mut i = 0;
            while i < s.len() {
                if class_matches(class, s[i]) == Some(true) {
                    let start = i;
                    while i < s.len() && class_matches(class, s[i]) == Some(true) {
                        i += 1;
                    }
                    spans.push((start, i));
                } else {
                    i += 1;
                }
            }
            Some(spans)
        }
        _ => None,
    }
}

/// Position of the `k`-th match of `token` in `s` (negative `k` counts from
/// the end), at its start or end depending on `dir`.
pub fn pos(s: &Value, token: &Value, k: &Value, dir: &Value) -> Value {
    let (Value::Str(s), Value::Int(k), Value::Str(dir)) = (s, k, dir) else {
        return TYPE;
    };
    let chars: Vec<char> = s.chars().collect();
    let Some(spans) = token_spans(&chars, token) else {
        return TYPE;
    };
    let idx = match *k {
        k if k > 0 => (k - 1) as usize,
        k if k < 0 && k.unsigned_abs() as usize <= spans.len() => {
            spans.len() - k.unsigned_abs() as usize
        }
        _ => return Value::Err("pos"),
    };
    let Some(&(start, end)) = spans.get(idx) else {
        return Value::Err("pos");
    };
    match &**dir {
        "Start" => Value::Int(start as i64),
        "End" => Value::Int(end as i64),
        _ => TYPE,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &str) -> Value {
        Value::str(x)
    }

    #[test]
    fn pos_examples() {
        let number = s("Number");
        assert_eq!(
            pos(&s("12ab"), &number, &Value::Int(1), &s("Start")),
            Value::Int(0)
        );
        assert_eq!(
            pos(&s("12ab"), &number, &Value::Int(1), &s("End")),
            Value::Int(2)
        );
        assert_eq!(
            pos(&s("12ab"), &number, &Value::Int(2), &s("End")),
            Value::Err("pos")
        );
        assert_eq!(
            pos(&s("a1b22c"), &number, &Value::Int(-1), &s("Start")),
            Value::Int(3)
        );
        assert_eq!(
            pos(&s("a-b-c"), &Value::Char('-'), &Value::Int(2), &s("Start")),
            Value::Int(3)
        );
        assert_eq!(
            pos(&s("ab"), &number, &Value::Int(0), &s("Start")),
            Value::Err("pos")
        );
    }

    #[test]
    fn to_int_examples() {
        assert_eq!(to_int(&s("abc")), Value::Err("toInt"));
        assert_eq!(to_int(&s("")), Value::Err("toInt"));
        assert_eq!(to_int(&s("-12")), Value::Int(-12));
        assert_eq!(to_int(&s("99999999999999999999")), Value::Err("overflow"));
    }

    #[test]
    fn chain_and_compare() {
        let c1 = int_compare(
            &count_char(&s("24"), &Value::Char('5')),
            &count_char(&s("15"), &Value::Char('5')),
        );
        assert_eq!(c1, Value::Int(-1));
        assert_eq!(chain(&Value::Int(0), &Value::Int(1)), Value::Int(1));
        assert_eq!(chain(&Value::Int(-1), &Value::Int(1)), Value::Int(-1));
        assert_eq!(str_compare(&s("ab"), &s("b")), Value::Int(-1));
        assert_eq!(substr(&s("hello"), &Value::Int(1), &Value::Int(3)), s("el"));
        assert_eq!(
            substr(&s("hello"), &Value::Int(3), &Value::Int(1)),
            Value::Err("substr")
        );
    }
}
