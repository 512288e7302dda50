//! Shared lexing for the line-oriented formats: `%` comments, whitespace
//! separated words, `{ ... }` blocks that may span lines, and `a+bi`
//! complex literals.

use std::fmt;

use num_complex::Complex64;

use crate::quantum::Matrix;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ParseError {}

pub(crate) fn perr(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Word(String),
    Open,
    Close,
    /// Row separator inside blocks.
    Semi,
    Newline,
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
}

pub(crate) fn lex(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('%').next().unwrap_or("");
        let mut word = String::new();
        let flush = |w: &mut String, out: &mut Vec<Token>| {
            if !w.is_empty() {
                out.push(Token {
                    tok: Tok::Word(std::mem::take(w)),
                    line,
                });
            }
        };
        for ch in body.chars() {
            let special = match ch {
                '{' => Some(Tok::Open),
                '}' => Some(Tok::Close),
                ';' => Some(Tok::Semi),
                _ => None,
            };
            if let Some(t) = special {
                flush(&mut word, &mut out);
                out.push(Token { tok: t, line });
            } else if ch.is_whitespace() {
                flush(&mut word, &mut out);
            } else {
                word.push(ch);
            }
        }
        flush(&mut word, &mut out);
        out.push(Token {
            tok: Tok::Newline,
            line,
        });
    }
    out
}

/// One top-level statement: its words, with nested blocks kept as tokens.
#[derive(Clone, Debug)]
pub(crate) struct Statement {
    pub line: usize,
    pub tokens: Vec<Token>,
}

impl Statement {
    /// Leading words up to the first block.
    pub fn words(&self) -> Vec<&str> {
        self.tokens
            .iter()
            .map_while(|t| match &t.tok {
                Tok::Word(w) => Some(w.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Tokens from the first `{` on.
    pub fn block(&self) -> Option<&[Token]> {
        let i = self.tokens.iter().position(|t| t.tok == Tok::Open)?;
        Some(&self.tokens[i..])
    }
}

/// Groups tokens into statements ending at a newline outside any block.
pub(crate) fn statements(text: &str) -> Result<Vec<Statement>, ParseError> {
    let mut out = Vec::new();
    let mut cur: Vec<Token> = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    let mut last_line = 0;
    for t in lex(text) {
        last_line = t.line;
        match t.tok {
            Tok::Newline if depth == 0 => {
                if !cur.is_empty() {
                    out.push(Statement {
                        line: start,
                        tokens: std::mem::take(&mut cur),
                    });
                }
                continue;
            }
            Tok::Open => depth += 1,
            Tok::Close => {
                depth = depth.checked_sub(1).ok_or_else(|| perr(t.line, "unbalanced `}`"))?;
            }
            _ => {}
        }
        if cur.is_empty() {
            start = t.line;
        }
        cur.push(t);
    }
    if depth != 0 {
        return Err(perr(last_line, "unclosed `{`"));
    }
    if !cur.is_empty() {
        out.push(Statement {
            line: start,
            tokens: cur,
        });
    }
    Ok(out)
}

/// Parses `{ rows }` at the start of `toks`; rows end at newlines or `;`.
/// Returns the matrix and the number of tokens consumed.
pub(crate) fn parse_matrix(toks: &[Token]) -> Result<(Matrix, usize), ParseError> {
    let first = toks.first().ok_or_else(|| perr(0, "expected a matrix block"))?;
    if first.tok != Tok::Open {
        return Err(perr(first.line, "expected `{`"));
    }
    let mut rows: Vec<Vec<Complex64>> = vec![Vec::new()];
    for (i, t) in toks.iter().enumerate().skip(1) {
        match &t.tok {
            Tok::Word(w) => {
                let z = parse_complex(w).ok_or_else(|| perr(t.line, format!("bad complex literal `{w}`")))?;
                rows.last_mut().expect("nonempty").push(z);
            }
            Tok::Newline | Tok::Semi => {
                if !rows.last().expect("nonempty").is_empty() {
                    rows.push(Vec::new());
                }
            }
            Tok::Close => {
                if rows.last().is_some_and(|r| r.is_empty()) {
                    rows.pop();
                }
                let m = Matrix::from_rows(rows).map_err(|e| perr(t.line, e.to_string()))?;
                return Ok((m, i + 1));
            }
            Tok::Open => return Err(perr(t.line, "unexpected `{` inside a matrix")),
        }
    }
    Err(perr(first.line, "unclosed matrix block"))
}

/// Parses `{ name = {matrix} ... }` blocks of named operators.
pub(crate) fn parse_named_matrices(toks: &[Token]) -> Result<Vec<(String, Matrix)>, ParseError> {
    let first = toks.first().ok_or_else(|| perr(0, "expected a block"))?;
    if first.tok != Tok::Open {
        return Err(perr(first.line, "expected `{`"));
    }
    let mut out = Vec::new();
    let mut i = 1;
    while i < toks.len() {
        let t = &toks[i];
        match &t.tok {
            Tok::Newline | Tok::Semi => i += 1,
            Tok::Close => {
                if i + 1 != toks.len() {
                    return Err(perr(t.line, "unexpected text after block"));
                }
                return Ok(out);
            }
            Tok::Word(name) => {
                let eq = toks.get(i + 1).map(|t| &t.tok);
                if eq != Some(&Tok::Word("=".into())) {
                    return Err(perr(t.line, format!("expected `{name} = {{...}}`")));
                }
                let (m, used) = parse_matrix(&toks[i + 2..])?;
                out.push((name.clone(), m));
                i += 2 + used;
            }
            Tok::Open => return Err(perr(t.line, "expected an operator name")),
        }
    }
    Err(perr(first.line, "unclosed block"))
}

/// `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i`, optionally parenthesized.
pub fn parse_complex(s: &str) -> Option<Complex64> {
    let s = s.trim();
    let s = s.strip_prefix('(').and_then(|x| x.strip_suffix(')')).unwrap_or(s);
    if s.is_empty() {
        return None;
    }
    let Some(body) = s.strip_suffix('i') else {
        return s.parse::<f64>().ok().map(|re| Complex64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (body[..k].parse::<f64>().ok()?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse::<f64>().ok()?,
    };
    (re.is_finite() && im.is_finite()).then(|| Complex64::new(re, im))
}

/// Shortest round-tripping `a+bi` form.
pub fn render_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", z.re, sign, z.im.abs())
}

pub(crate) fn render_matrix(m: &Matrix, indent: &str) -> String {
    let mut s = String::from("{\n");
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|z| render_complex(*z)).collect();
        s.push_str(indent);
        s.push_str("  ");
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s.push_str(indent);
    s.push('}');
    s
}

/// Splits on commas outside square brackets.
pub(crate) fn split_top_level(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    out.push(cur);
    out
}

/// `key=value` header field.
pub(crate) fn field<'a>(words: &[&'a str], key: &str, line: usize) -> Result<&'a str, ParseError> {
    words
        .iter()
        .find_map(|w| w.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| perr(line, format!("missing `{key}=`")))
}
