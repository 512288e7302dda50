use std::fmt::Write as _;

use crate::compile::circuit::standard_gates;
use crate::compile::{Circuit, Pattern, PatternCommand};

use super::text::{field, parse_matrix, perr, render_matrix, statements, ParseError};

fn index(s: &str, line: usize) -> Result<usize, ParseError> {
    s.parse().map_err(|_| perr(line, format!("bad index `{s}`")))
}

pub fn parse_circuit(text: &str) -> Result<Circuit, ParseError> {
    let sts = statements(text)?;
    let header = sts.first().ok_or_else(|| perr(1, "empty circuit file"))?;
    let hw = header.words();
    if hw.first() != Some(&"circuit") {
        return Err(perr(header.line, "expected `circuit n=<qubits>`"));
    }
    let mut c = Circuit::new(index(field(&hw, "n", header.line)?, header.line)?);
    for st in &sts[1..] {
        let w = st.words();
        match w[0] {
            "defgate" if w.len() == 2 => {
                let block = st.block().ok_or_else(|| perr(st.line, "`defgate` needs a matrix block"))?;
                let (m, used) = parse_matrix(block)?;
                if used != block.len() {
                    return Err(perr(st.line, "unexpected text after the matrix"));
                }
                c.library.insert(w[1].to_string(), m);
            }
            "gate" if w.len() >= 3 => {
                let qs = w[2..].iter().map(|q| index(q, st.line)).collect::<Result<Vec<_>, _>>()?;
                c.push(w[1], &qs);
            }
            other => return Err(perr(st.line, format!("unexpected `{other}`"))),
        }
    }
    Ok(c)
}

/// Gates whose matrix differs from the standard library are written out
/// with `defgate`.
pub fn render_circuit(c: &Circuit) -> String {
    let std = standard_gates();
    let mut s = format!("circuit n={}\n", c.qubits);
    for (name, m) in &c.library {
        if std.get(name) != Some(m) {
            let _ = writeln!(s, "defgate {name} {}", render_matrix(m, ""));
        }
    }
    for g in &c.gates {
        let qs: Vec<String> = g.qubits.iter().map(|q| q.to_string()).collect();
        let _ = writeln!(s, "gate {} {}", g.name, qs.join(" "));
    }
    s
}

fn parse_set(words: &[&str], key: &str, line: usize) -> Result<Vec<usize>, ParseError> {
    let v = field(words, key, line)?;
    let inner = v
        .strip_prefix('{')
        .and_then(|x| x.strip_suffix('}'))
        .unwrap_or(v);
    inner
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| index(x, line))
        .collect()
}

fn parse_signals(s: &str, line: usize) -> Result<Vec<usize>, ParseError> {
    if s == "0" {
        return Ok(Vec::new());
    }
    s.split(['^', '+'])
        .map(|t| {
            t.strip_prefix('s')
                .ok_or_else(|| perr(line, format!("bad signal `{t}`")))
                .and_then(|i| index(i, line))
        })
        .collect()
}

/// Pattern files put sets in braces, which the shared lexer treats as
/// blocks, so the header is read line-wise with braces kept in the words.
pub fn parse_pattern(text: &str) -> Result<Pattern, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('%').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hl, header) = lines.next().ok_or_else(|| perr(1, "empty pattern file"))?;
    let compact: String = header.replace(", ", ",").replace("= ", "=").replace(" =", "=");
    let hw: Vec<&str> = compact.split_whitespace().collect();
    if hw.first() != Some(&"pattern") {
        return Err(perr(hl, "expected `pattern V={..} I={..} O={..}`"));
    }
    let mut p = Pattern {
        vertices: parse_set(&hw, "V", hl)?,
        inputs: parse_set(&hw, "I", hl)?,
        outputs: parse_set(&hw, "O", hl)?,
        commands: Vec::new(),
    };
    for (line, l) in lines {
        let w: Vec<&str> = l.split_whitespace().collect();
        let cmd = match (w[0], w.len()) {
            ("E", 3) => PatternCommand::Entangle(index(w[1], line)?, index(w[2], line)?),
            ("M", 3) => {
                let a: f64 = w[2].parse().map_err(|_| perr(line, format!("bad angle `{}`", w[2])))?;
                PatternCommand::Measure(index(w[1], line)?, a)
            }
            ("X", 3) => PatternCommand::CorrectX(index(w[1], line)?, parse_signals(w[2], line)?),
            ("Z", 3) => PatternCommand::CorrectZ(index(w[1], line)?, parse_signals(w[2], line)?),
            _ => return Err(perr(line, format!("bad command `{l}`"))),
        };
        p.commands.push(cmd);
    }
    Ok(p)
}

fn render_signals(s: &[usize]) -> String {
    if s.is_empty() {
        return "0".into();
    }
    s.iter().map(|i| format!("s{i}")).collect::<Vec<_>>().join("^")
}

pub fn render_pattern(p: &Pattern) -> String {
    let set = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
    let mut s = format!(
        "pattern V={{{}}} I={{{}}} O={{{}}}\n",
        set(&p.vertices),
        set(&p.inputs),
        set(&p.outputs)
    );
    for c in &p.commands {
        let _ = match c {
            PatternCommand::Entangle(i, j) => writeln!(s, "E {i} {j}"),
            PatternCommand::Measure(i, a) => writeln!(s, "M {i} {a}"),
            PatternCommand::CorrectX(i, sig) => writeln!(s, "X {i} {}", render_signals(sig)),
            PatternCommand::CorrectZ(i, sig) => writeln!(s, "Z {i} {}", render_signals(sig)),
        };
    }
    s
}
