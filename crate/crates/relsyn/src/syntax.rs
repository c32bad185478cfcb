//! Tokenizer and literal parsing shared by the spec, grammar and program readers.

use std::fmt;

use crate::values::Value;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    /// Hex literal such as `0xFF`; kept apart so byte lists can be recognized.
    Hex(i64),
    Char(char),
    Str(String),
    Punct(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Hex(i) => write!(f, "`0x{i:X}`"),
            Tok::Char(c) => write!(f, "`{c:?}`"),
            Tok::Str(s) => write!(f, "`{s:?}`"),
            Tok::Punct(p) => write!(f, "`{p}`"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{pos}: {msg}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub msg: String,
}

// Longest first so that `<=>` wins over `<=` and `<`.
const PUNCT: &[&str] = &[
    "<=>", "==", "!=", "<=", ">=", "&&", "||", "=>", "->", "(", ")", "[", "]", ",", ";", ":", ".",
    "<", ">", "!", "-", "|", "=", "*",
];

pub fn tokenize(src: &str) -> Result<Vec<(Tok, Pos)>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: String| SyntaxError {
        pos: Pos { line, col },
        msg,
    };

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '#')
            {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            out.push((Tok::Ident(word), pos));
        } else if c.is_ascii_digit() {
            if c == '0' && matches!(chars.get(i + 1), Some('x') | Some('X')) {
                i += 2;
                let digits_start = i;
                while i < chars.len() && chars[i].is_ascii_hexdigit() {
                    i += 1;
                }
                let digits: String = chars[digits_start..i].iter().collect();
                let v = i64::from_str_radix(&digits, 16)
                    .map_err(|_| err(line, col, format!("bad hex literal `0x{digits}`")))?;
                out.push((Tok::Hex(v), pos));
            } else {
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                let v = digits.parse::<i64>().map_err(|_| {
                    err(
                        line,
                        col,
                        format!("integer literal `{digits}` out of range"),
                    )
                })?;
                out.push((Tok::Int(v), pos));
            }
        } else if c == '"' || c == '\'' {
            i += 1;
            let mut text = String::new();
            loop {
                let Some(&d) = chars.get(i) else {
                    return Err(err(line, col, "unterminated literal".into()));
                };
                if d == '\n' {
                    return Err(err(line, col, "newline in literal".into()));
                }
                i += 1;
                if d == c {
                    break;
                }
                if d != '\\' {
                    text.push(d);
                    continue;
                }
                let Some(&e) = chars.get(i) else {
                    return Err(err(line, col, "unterminated escape".into()));
                };
                i += 1;
                match e {
                    '\\' | '"' | '\'' => text.push(e),
                    'n' => text.push('\n'),
                    't' => text.push('\t'),
                    'r' => text.push('\r'),
                    '0' => text.push('\0'),
                    'u' => {
                        let hex: String = if chars.get(i) == Some(&'{') {
                            let close =
                                chars[i..].iter().position(|&x| x == '}').ok_or_else(|| {
                                    err(line, col, "unterminated \\u{...} escape".into())
                                })?;
                            let h = chars[i + 1..i + close].iter().collect();
                            i += close + 1;
                            h
                        } else {
                            let h: String = chars.iter().skip(i).take(4).collect();
                            i += 4;
                            h
                        };
                        let ch = u32::from_str_radix(&hex, 16)
                            .ok()
                            .and_then(char::from_u32)
                            .ok_or_else(|| err(line, col, format!("bad \\u escape `{hex}`")))?;
                        text.push(ch);
                    }
                    other => return Err(err(line, col, format!("unknown escape `\\{other}`"))),
                }
            }
            if c == '"' {
                out.push((Tok::Str(text), pos));
            } else {
                let mut it = text.chars();
                match (it.next(), it.next()) {
                    (Some(ch), None) => out.push((Tok::Char(ch), pos)),
                    _ => {
                        return Err(err(
                            line,
                            col,
                            "character literal must hold one character".into(),
                        ))
                    }
                }
            }
        } else {
            let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
            let Some(p) = PUNCT.iter().find(|p| rest.starts_with(**p)) else {
                return Err(err(line, col, format!("unexpected character `{c}`")));
            };
            i += p.chars().count();
            out.push((Tok::Punct(p), pos));
        }
        col += i - start;
    }
    Ok(out)
}

/// Cursor over a token stream.
pub struct Cursor {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    end: Pos,
}

impl Cursor {
    pub fn new(src: &str) -> Result<Cursor, SyntaxError> {
        let toks = tokenize(src)?;
        let lines = src.lines().count().max(1);
        let last_len = src.lines().last().map_or(0, |l| l.chars().count());
        Ok(Cursor {
            toks,
            at: 0,
            end: Pos {
                line: lines,
                col: last_len + 1,
            },
        })
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    pub fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.at + k).map(|(t, _)| t)
    }

    pub fn pos(&self) -> Pos {
        self.toks.get(self.at).map_or(self.end, |(_, p)| *p)
    }

    pub fn at_end(&self) -> bool {
        self.at >= self.toks.len()
    }

    pub fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(t, _)| t.clone());
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    pub fn error(&self, msg: impl Into<String>) -> SyntaxError {
        SyntaxError {
            pos: self.pos(),
            msg: msg.into(),
        }
    }

    pub fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    pub fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    pub fn expect_punct(&mut self, p: &str) -> Result<(), SyntaxError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    pub fn expect_ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.at += 1;
                Ok(s)
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    pub fn unexpected(&self, wanted: &str) -> SyntaxError {
        match self.peek() {
            Some(t) => self.error(format!("expected {wanted}, found {t}")),
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }

    /// Parses a literal value if one starts here. A leading `-` is accepted
    /// only directly before an integer.
    pub fn literal(&mut self) -> Result<Option<Value>, SyntaxError> {
        let v = match self.peek() {
            Some(Tok::Int(i)) | Some(Tok::Hex(i)) => Value::Int(*i),
            Some(Tok::Char(c)) => Value::Char(*c),
            Some(Tok::Str(s)) => Value::str(s),
            Some(Tok::Ident(s)) if s == "true" => Value::Bool(true),
            Some(Tok::Ident(s)) if s == "false" => Value::Bool(false),
            Some(Tok::Punct("-")) => match self.peek_at(1) {
                Some(Tok::Int(i)) => {
                    let v = Value::Int(-*i);
                    self.at += 2;
                    return Ok(Some(v));
                }
                _ => return Ok(None),
            },
            Some(Tok::Punct("[")) => return self.list_literal().map(Some),
            _ => return Ok(None),
        };
        self.at += 1;
        Ok(Some(v))
    }

    fn list_literal(&mut self) -> Result<Value, SyntaxError> {
        self.expect_punct("[")?;
        let mut items = Vec::new();
        if !self.eat_punct("]") {
            loop {
                let neg = self.eat_punct("-");
                let t = self
                    .next()
                    .ok_or_else(|| self.unexpected("a list element"))?;
                items.push(match (t, neg) {
                    (Tok::Int(i), n) => Tok::Int(if n { -i } else { i }),
                    (t @ (Tok::Hex(_) | Tok::Char(_)), false) => t,
                    _ => {
                        return Err(
                            self.error("list elements must be integers, 0x bytes or characters")
                        )
                    }
                });
                if self.eat_punct("]") {
                    break;
                }
                self.expect_punct(",")?;
            }
        }
        if items.iter().all(|t| matches!(t, Tok::Hex(_))) && !items.is_empty() {
            let bytes: Option<Vec<u8>> = items
                .iter()
                .map(|t| match t {
                    Tok::Hex(i) => u8::try_from(*i).ok(),
                    _ => None,
                })
                .collect();
            return bytes
                .map(|b| Value::bytes(&b))
                .ok_or_else(|| self.error("byte out of range"));
        }
        if items.iter().all(|t| matches!(t, Tok::Char(_))) && !items.is_empty() {
            let cs: Vec<char> = items
                .iter()
                .map(|t| match t {
                    Tok::Char(c) => *c,
                    _ => unreachable!(),
                })
                .collect();
            return Ok(Value::chars(&cs));
        }
        let ints: Option<Vec<i64>> = items
            .iter()
            .map(|t| match t {
                Tok::Int(i) | Tok::Hex(i) => Some(*i),
                _ => None,
            })
            .collect();
        ints.map(|v| Value::ints(&v))
            .ok_or_else(|| self.error("mixed list literal"))
    }
}

/// Parses a complete literal from text.
pub fn parse_value(text: &str) -> Result<Value, SyntaxError> {
    let mut c = Cursor::new(text)?;
    let v = c.literal()?.ok_or_else(|| c.unexpected("a literal"))?;
    if !c.at_end() {
        return Err(c.unexpected("end of literal"));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip() {
        for v in [
            Value::Int(-12),
            Value::Bool(true),
            Value::Char('\''),
            Value::str("a\"b\\c\u{e9}\u{1F600}"),
            Value::bytes(&[0xFF, 0x0E]),
            Value::ints(&[1, -2, 3]),
            Value::chars(&['a', 'b']),
        ] {
            assert_eq!(parse_value(&v.to_string()).unwrap(), v);
        }
    }

    #[test]
    fn punctuation_longest_match() {
        let toks: Vec<Tok> = tokenize("a <=> b <= c => d")
            .unwrap()
            .into_iter()
            .map(|t| t.0)
            .collect();
        assert_eq!(toks[1], Tok::Punct("<=>"));
        assert_eq!(toks[3], Tok::Punct("<="));
        assert_eq!(toks[5], Tok::Punct("=>"));
    }

    #[test]
    fn positions_and_comments() {
        let toks = tokenize("# note\n  foo // tail\n bar").unwrap();
        assert_eq!(toks[0].1, Pos { line: 2, col: 3 });
        assert_eq!(toks[1].1, Pos { line: 3, col: 2 });
        let e = tokenize("x\n  \"open").unwrap_err();
        assert_eq!(e.pos.line, 2);
    }
}
