//! Shared text grammar for case records, rule files, fact lists and scenario
//! files.
//!
//! Values are one of: a decimal literal (`-?digits[.digits]`), `true`/`false`,
//! a bare symbol, or double-quoted text with `\"` and `\\` escapes. Bare
//! tokens that contain whitespace are read as text.

use crate::error::{Error, Result};

/// Splits `s` on `delim` wherever it appears outside double quotes and
/// parentheses. Pieces are trimmed; the caller decides what to do with
/// empty ones.
pub fn split_top(s: &str, delim: char) -> Result<Vec<&str>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut in_quote = false;
    let mut escaped = false;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        if in_quote {
            if escaped {
                escaped = false;
            } else if ch == '\\' {
                escaped = true;
            } else if ch == '"' {
                in_quote = false;
            }
            continue;
        }
        match ch {
            '"' => in_quote = true,
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(Error::malformed(format!("unbalanced `)` in `{s}`")));
                }
            }
            c if c == delim && depth == 0 => {
                out.push(s[start..i].trim());
                start = i + ch.len_utf8();
            }
            _ => {}
        }
    }
    if in_quote {
        return Err(Error::malformed(format!("unterminated quote in `{s}`")));
    }
    if depth != 0 {
        return Err(Error::malformed(format!("unbalanced `(` in `{s}`")));
    }
    out.push(s[start..].trim());
    Ok(out)
}

/// Like [`split_top`] but drops empty pieces, so `"a; b;"` and `""` behave.
pub fn split_items(s: &str, delim: char) -> Result<Vec<&str>> {
    Ok(split_top(s, delim)?.into_iter().filter(|p| !p.is_empty()).collect())
}

const RESERVED: &[char] = &['(', ')', ',', ';', '|', '=', '"', ':', '&'];

pub fn is_symbol(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || RESERVED.contains(&c))
}

pub fn is_decimal(s: &str) -> bool {
    let body = s.strip_prefix('-').unwrap_or(s);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    !int.is_empty()
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.is_none_or(|f| !f.is_empty() && f.bytes().all(|b| b.is_ascii_digit()))
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        if ch == '"' || ch == '\\' {
            out.push('\\');
        }
        out.push(ch);
    }
    out.push('"');
    out
}

/// Strips surrounding quotes and resolves escapes. Returns `None` when `s`
/// is not a single quoted string.
pub fn unquote(s: &str) -> Option<String> {
    let inner = s.strip_prefix('"')?.strip_suffix('"')?;
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(ch) = chars.next() {
        match ch {
            '\\' => out.push(chars.next()?),
            '"' => return None,
            c => out.push(c),
        }
    }
    Some(out)
}

/// Splits `name<sep>value` on the first separator outside quotes.
pub fn split_pair(item: &str, sep: char) -> Option<(&str, &str)> {
    let mut in_quote = false;
    let mut escaped = false;
    for (i, ch) in item.char_indices() {
        if in_quote {
            if escaped {
                escaped = false;
            } else if ch == '\\' {
                escaped = true;
            } else if ch == '"' {
                in_quote = false;
            }
        } else if ch == '"' {
            in_quote = true;
        } else if ch == sep {
            return Some((item[..i].trim(), item[i + ch.len_utf8()..].trim()));
        }
    }
    None
}

/// Parses `head(arg, arg, ...)` into the head symbol and raw argument texts.
pub fn parse_call(s: &str) -> Result<(&str, Vec<&str>)> {
    let s = s.trim();
    let open = s.find('(').ok_or_else(|| Error::malformed(format!("expected `name(args)`, got `{s}`")))?;
    if !s.ends_with(')') {
        return Err(Error::malformed(format!("unbalanced parentheses in `{s}`")));
    }
    let head = s[..open].trim();
    if !is_symbol(head) {
        return Err(Error::malformed(format!("invalid name `{head}` in `{s}`")));
    }
    let inner = &s[open + 1..s.len() - 1];
    // reject `a(b)c(d)` style input where the first `(` closes early
    split_top(inner, ',')?;
    let args = split_items(inner, ',')?;
    Ok((head, args))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_respects_quotes_and_parens() {
        let parts = split_top(r#"a=1; b="x;y"; move(a;b)"#, ';').unwrap();
        assert_eq!(parts, vec!["a=1", r#"b="x;y""#, "move(a;b)"]);
    }

    #[test]
    fn split_rejects_unbalanced() {
        assert!(split_top("move(a", ';').is_err());
        assert!(split_top("move)a(", ';').is_err());
        assert!(split_top("\"open", ';').is_err());
    }

    #[test]
    fn decimal_literals() {
        for ok in ["0", "3", "-4", "0.25", "-10.5"] {
            assert!(is_decimal(ok), "{ok}");
        }
        for bad in ["", "-", "1.", ".5", "1e3", "+1", "1.2.3", "abc"] {
            assert!(!is_decimal(bad), "{bad}");
        }
    }

    #[test]
    fn quote_roundtrip() {
        let s = r#"say "hi" \ bye"#;
        assert_eq!(unquote(&quote(s)).unwrap(), s);
        assert!(unquote("\"a\"b\"").is_none());
    }

    #[test]
    fn call_parsing() {
        assert_eq!(parse_call("noop()").unwrap(), ("noop", vec![]));
        assert_eq!(parse_call("move(A, B)").unwrap(), ("move", vec!["A", "B"]));
        assert!(parse_call("move(A").is_err());
        assert!(parse_call("move").is_err());
        assert!(parse_call("a(b)c(d)").is_err());
    }
}
