//! Encoder and decoder semantics (RFC 4648 alphabets, uuencode, UTF-7/8/16/32).

use crate::values::Value;

pub const BASE16: &str = "0123456789ABCDEF";
pub const BASE32: &str = "ABCDEFGHIJKLMNOPQRSTUVWXYZ234567";
pub const BASE32HEX: &str = "0123456789ABCDEFGHIJKLMNOPQRSTUV";
pub const BASE64: &str = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
pub const BASE64XML: &str = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789.-";
pub const UU: &str = " !\"#$%&'()*+,-./0123456789:;<=>?@ABCDEFGHIJKLMNOPQRSTUVWXYZ[\\]^_";

const TYPE: Value = Value::Err("type");

fn chars_of(v: &Value) -> Option<Vec<char>> {
    v.as_str().map(|s| s.chars().collect())
}

fn code_points(cps: &[i64]) -> Option<Vec<char>> {
    cps.iter()
        .map(|&c| u32::try_from(c).ok().and_then(char::from_u32))
        .collect()
}

pub fn code_point(s: &Value) -> Value {
    match s {
        Value::Str(s) => Value::ints(&s.chars().map(|c| c as i64).collect::<Vec<_>>()),
        _ => TYPE,
    }
}

pub fn as_unicode(v: &Value) -> Value {
    match v {
        Value::IntArray(cps) => match code_points(cps) {
            Some(cs) => Value::str(&cs.into_iter().collect::<String>()),
            None => Value::Err("codepoint"),
        },
        Value::Err(e) => Value::Err(e),
        _ => TYPE,
    }
}

pub fn enc_utf8(v: &Value) -> Value {
    let Value::IntArray(cps) = v else { return TYPE };
    match code_points(cps) {
        Some(cs) => Value::bytes(cs.into_iter().collect::<String>().as_bytes()),
        None => Value::Err("codepoint"),
    }
}

pub fn dec_utf8(v: &Value) -> Value {
    let Value::Bytes(b) = v else { return TYPE };
    match std::str::from_utf8(b) {
        Ok(s) => code_point(&Value::str(s)),
        Err(_) => Value::Err("utf8"),
    }
}

pub fn enc_utf16(v: &Value) -> Value {
    let Value::IntArray(cps) = v else { return TYPE };
    let Some(cs) = code_points(cps) else {
        return Value::Err("codepoint");
    };
    let mut out = Vec::new();
    let mut buf = [0u16; 2];
    for c in cs {
        for unit in c.encode_utf16(&mut buf) {
            out.extend_from_slice(&unit.to_be_bytes());
        }
    }
    Value::bytes(&out)
}

pub fn dec_utf16(v: &Value) -> Value {
    let Value::Bytes(b) = v else { return TYPE };
    if b.len() % 2 != 0 {
        return Value::Err("utf16");
    }
    let units = b.chunks(2).map(|c| u16::from_be_bytes([c[0], c[1]]));
    match char::decode_utf16(units).collect::<Result<Vec<char>, _>>() {
        Ok(cs) => Value::ints(&cs.into_iter().map(|c| c as i64).collect::<Vec<_>>()),
        Err(_) => Value::Err("utf16"),
    }
}

pub fn enc_utf32(v: &Value) -> Value {
    let Value::IntArray(cps) = v else { return TYPE };
    let Some(cs) = code_points(cps) else {
        return Value::Err("codepoint");
    };
    Value::bytes(
        &cs.into_iter()
            .flat_map(|c| (c as u32).to_be_bytes())
            .collect::<Vec<_>>(),
    )
}

pub fn dec_utf32(v: &Value) -> Value {
    let Value::Bytes(b) = v else { return TYPE };
    if b.len() % 4 != 0 {
        return Value::Err("utf32");
    }
    let cps: Vec<i64> = b
        .chunks(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]) as i64)
        .collect();
    match code_points(&cps) {
        Some(_) => Value::ints(&cps),
        None => Value::Err("utf32"),
    }
}

fn group_width(n: &Value) -> Option<u32> {
    match n {
        Value::Int(n) if (1..=8).contains(n) => Some(*n as u32),
        _ => None,
    }
}

/// Concatenates the 8-bit bytes and regroups them into `n`-bit groups,
/// zero-padding the last group on the right.
pub fn reshape(b: &Value, n: &Value) -> Value {
    let (Value::Bytes(b), Some(n)) = (b, group_width(n)) else {
        return TYPE;
    };
    let mut out = Vec::with_capacity(b.len() * 8 / n as usize + 1);
    let (mut acc, mut bits) = (0u32, 0u32);
    for &byte in b.iter() {
        acc = (acc << 8) | byte as u32;
        bits += 8;
        while bits >= n {
            bits -= n;
            out.push(((acc >> bits) & ((1 << n) - 1)) as u8);
        }
        acc &= (1 << bits) - 1;
    }
    if bits > 0 {
        out.push(((acc << (n - bits)) & ((1 << n) - 1)) as u8);
    }
    Value::bytes(&out)
}

/// Takes the `n` low bits of every byte and regroups them into bytes;
/// leftover bits that do not fill a byte are dropped.
pub fn inv_reshape(b: &Value, n: &Value) -> Value {
    let (Value::Bytes(b), Some(n)) = (b, group_width(n)) else {
        return TYPE;
    };
    let mut out = Vec::with_capacity(b.len() * n as usize / 8);
    let (mut acc, mut bits) = (0u32, 0u32);
    for &byte in b.iter() {
        acc = (acc << n) | (byte as u32 & ((1 << n) - 1));
        bits += n;
        if bits >= 8 {
            bits -= 8;
            out.push((acc >> bits) as u8);
            acc &= (1 << bits) - 1;
        }
    }
    Value::bytes(&out)
}

pub fn enc_map(b: &Value, alphabet: &str) -> Value {
    let Value::Bytes(b) = b else { return TYPE };
    let table: Vec<char> = alphabet.chars().collect();
    let mut s = String::with_capacity(b.len());
    for &x in b.iter() {
        match table.get(x as usize) {
            Some(&c) => s.push(c),
            None => return Value::Err("alphabet"),
        }
    }
    Value::str(&s)
}

pub fn dec_map(s: &Value, alphabet: &str) -> Value {
    let Value::Str(s) = s else { return TYPE };
    let mut out = Vec::with_capacity(s.len());
    for c in s.chars() {
        match alphabet.chars().position(|a| a == c) {
            Some(i) => out.push(i as u8),
            None => return Value::Err("alphabet"),
        }
    }
    Value::bytes(&out)
}

/// Appends `c` until the length is a multiple of `n`; no padding is added
/// when it already is.
pub fn pad_to_multiple(s: &Value, n: &Value, c: &Value) -> Value {
    let (Value::Str(s), Some(n), Value::Char(c)) = (s, group_width(n), c) else {
        return TYPE;
    };
    let len = s.chars().count();
    let extra = (n as usize - len % n as usize) % n as usize;
    let mut out = String::with_capacity(s.len() + extra);
    out.push_str(s);
    out.extend(std::iter::repeat_n(*c, extra));
    Value::str(&out)
}

/// Prepends the decimal length of the text followed by `:`.
pub fn header(s: &Value) -> Value {
    let Value::Str(s) = s else { return TYPE };
    Value::str(&format!("{}:{}", s.chars().count(), s))
}

pub fn remove_pad(s: &Value, c: &Value) -> Value {
    let (Value::Str(s), Value::Char(c)) = (s, c) else {
        return TYPE;
    };
    Value::str(s.trim_end_matches(*c))
}

/// Suffix of `s` starting at character index `n`.
pub fn suffix(s: &Value, n: &Value) -> Value {
    let (Some(cs), Value::Int(n)) = (chars_of(s), n) else {
        return TYPE;
    };
    if *n < 0 || *n as usize > cs.len() {
        return Value::Err("substr");
    }
    Value::str(&cs[*n as usize..].iter().collect::<String>())
}

fn utf7_direct(c: char) -> bool {
    c.is_ascii_alphanumeric() || "'(),-./:? \t\r\n".contains(c)
}

/// UTF-7 (RFC 2152). Runs of non-direct characters are written as `+`,
/// modified base64 of their UTF-16BE form, and an explicit `-`.
pub fn enc_utf7(v: &Value) -> Value {
    let Value::IntArray(cps) = v else { return TYPE };
    let Some(cs) = code_points(cps) else {
        return Value::Err("codepoint");
    };
    let b64: Vec<char> = BASE64.chars().collect();
    let mut out = String::new();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        if c == '+' {
            out.push_str("+-");
            i += 1;
        } else if utf7_direct(c) {
            out.push(c);
            i += 1;
        } else {
            let mut units = Vec::new();
            let mut buf = [0u16; 2];
            while i < cs.len() && !utf7_direct(cs[i]) && cs[i] != '+' {
                units.extend(
                    cs[i]
                        .encode_utf16(&mut buf)
                        .iter()
                        .flat_map(|u| u.to_be_bytes()),
                );
                i += 1;
            }
            out.push('+');
            let Value::Bytes(groups) = reshape(&Value::bytes(&units), &Value::Int(6)) else {
                unreachable!()
            };
            out.extend(groups.iter().map(|&g| b64[g as usize]));
            out.push('-');
        }
    }
    Value::str(&out)
}

pub fn dec_utf7(v: &Value) -> Value {
    let Some(cs) = chars_of(v) else { return TYPE };
    let bad = Value::Err("utf7");
    let mut out: Vec<i64> = Vec::new();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        if c != '+' {
            if !c.is_ascii() {
                return bad;
            }
            out.push(c as i64);
            i += 1;
            continue;
        }
        i += 1;
        if cs.get(i) == Some(&'-') {
            out.push('+' as i64);
            i += 1;
            continue;
        }
        let mut sextets = Vec::new();
        while let Some(p) = cs.get(i).and_then(|&d| BASE64.chars().position(|a| a == d)) {
            sextets.push(p as u8);
            i += 1;
        }
        if cs.get(i) == Some(&'-') {
            i += 1;
        }
        let Value::Bytes(bytes) = inv_reshape(&Value::bytes(&sextets), &Value::Int(6)) else {
            unreachable!()
        };
        if bytes.len() % 2 != 0 || sextets.is_empty() {
            return bad;
        }
        let units = bytes.chunks(2).map(|c| u16::from_be_bytes([c[0], c[1]]));
        match char::decode_utf16(units).collect::<Result<Vec<char>, _>>() {
            Ok(run) => out.extend(run.into_iter().map(|c| c as i64)),
            Err(_) => return bad,
        }
    }
    Value::ints(&out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(x: &[u8]) -> Value {
        Value::bytes(x)
    }

    #[test]
    fn reshape_examples() {
        assert_eq!(reshape(&b(&[0xFF]), &Value::Int(4)), b(&[0x0F, 0x0F]));
        assert_eq!(
            reshape(&b(&[0xFE]), &Value::Int(2)),
            b(&[0x03, 0x03, 0x03, 0x02])
        );
        assert_eq!(reshape(&b(b"M"), &Value::Int(6)), b(&[19, 16]));
        assert_eq!(reshape(&b(&[1, 2]), &Value::Int(8)), b(&[1, 2]));
        assert_eq!(reshape(&b(&[1]), &Value::Int(9)), TYPE);
    }

    #[test]
    fn inv_reshape_examples() {
        assert_eq!(inv_reshape(&b(&[0x0E, 0x0F]), &Value::Int(4)), b(&[0xEF]));
        assert_eq!(inv_reshape(&b(&[19, 16]), &Value::Int(6)), b(b"M"));
    }

    #[test]
    fn reshape_inverse_on_bytes() {
        for n in 1..=8 {
            let data = b(&[0x00, 0x7F, 0x80, 0xFF, 0x12]);
            assert_eq!(
                inv_reshape(&reshape(&data, &Value::Int(n)), &Value::Int(n)),
                data,
                "n={n}"
            );
        }
    }

    #[test]
    fn mappers() {
        assert_eq!(enc_map(&b(&[19, 22, 5, 46]), BASE64), Value::str("TWFu"));
        assert_eq!(enc_map(&b(&[64]), BASE64), Value::Err("alphabet"));
        assert_eq!(dec_map(&Value::str("TWFu"), BASE64), b(&[19, 22, 5, 46]));
        assert_eq!(dec_map(&Value::str("TW=u"), BASE64), Value::Err("alphabet"));
        for t in [BASE16, BASE32, BASE32HEX, BASE64, BASE64XML, UU] {
            let n = t.chars().count();
            assert!(n.is_power_of_two(), "{t}");
        }
    }

    #[test]
    fn padding_and_header() {
        assert_eq!(
            pad_to_multiple(&Value::str("TWE"), &Value::Int(4), &Value::Char('=')),
            Value::str("TWE=")
        );
        assert_eq!(
            pad_to_multiple(&Value::str("TWFu"), &Value::Int(4), &Value::Char('=')),
            Value::str("TWFu")
        );
        assert_eq!(
            pad_to_multiple(&Value::str(""), &Value::Int(4), &Value::Char('=')),
            Value::str("")
        );
        assert_eq!(header(&Value::str("abc")), Value::str("3:abc"));
        assert_eq!(
            remove_pad(&Value::str("TWE="), &Value::Char('=')),
            Value::str("TWE")
        );
        assert_eq!(
            suffix(&Value::str("3:abc"), &Value::Int(2)),
            Value::str("abc")
        );
        assert_eq!(
            suffix(&Value::str("ab"), &Value::Int(3)),
            Value::Err("substr")
        );
    }

    #[test]
    fn utf_round_trips() {
        let s = Value::str("aé€\u{1F600}");
        let cps = code_point(&s);
        assert_eq!(as_unicode(&dec_utf8(&enc_utf8(&cps))), s);
        assert_eq!(as_unicode(&dec_utf16(&enc_utf16(&cps))), s);
        assert_eq!(as_unicode(&dec_utf32(&enc_utf32(&cps))), s);
        assert_eq!(
            enc_utf16(&code_point(&Value::str("\u{1F600}"))),
            b(&[0xD8, 0x3D, 0xDE, 0x00])
        );
        assert_eq!(dec_utf8(&b(&[0xFF])), Value::Err("utf8"));
        assert_eq!(enc_utf8(&Value::ints(&[0xD800])), Value::Err("codepoint"));
    }

    #[test]
    fn utf7_rfc_examples() {
        // RFC 2152 examples; optional direct characters such as `!` are always base64-encoded here.
        let cases = [
            ("A\u{2262}\u{0391}.", "A+ImIDkQ-."),
            ("Hi Mom -\u{263A}-!", "Hi Mom -+Jjo--+ACE-"),
            ("1 + 1", "1 +- 1"),
        ];
        for (plain, enc) in cases {
            let cps = code_point(&Value::str(plain));
            assert_eq!(enc_utf7(&cps), Value::str(enc), "{plain}");
            assert_eq!(as_unicode(&dec_utf7(&Value::str(enc))), Value::str(plain));
        }
        assert_eq!(
            as_unicode(&dec_utf7(&Value::str("\u{65E5}"))),
            Value::Err("utf7")
        );
    }
}
