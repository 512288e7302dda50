use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::machine::{Control, Embedding, Kind, MachineDescription, Move, TransformExpr};
use crate::quantum::{Alphabet, Outcome};

use super::text::{field, parse_matrix, parse_named_matrices, perr, render_matrix, split_top_level, statements, ParseError, Statement};

fn parse_kind(s: &str, line: usize) -> Result<Kind, ParseError> {
    match s {
        "cqtm" => Ok(Kind::Cqtm),
        "mqtm" => Ok(Kind::Mqtm),
        _ => Err(perr(line, format!("unknown machine kind `{s}`"))),
    }
}

fn parse_expr(st: &Statement, rhs: &[&str]) -> Result<TransformExpr, ParseError> {
    let line = st.line;
    let arg = |i: usize| {
        rhs.get(i)
            .map(|s| s.to_string())
            .ok_or_else(|| perr(line, format!("`{}` needs {} argument(s)", rhs[0], i)))
    };
    let head = *rhs.first().ok_or_else(|| perr(line, "empty transform definition"))?;
    let block = || st.block().ok_or_else(|| perr(line, format!("`{head}` needs a `{{...}}` block")));
    let named = |v: Vec<(String, crate::quantum::Matrix)>| v.into_iter().map(|(o, m)| (Outcome::new(o), m)).collect();
    let expr = match head {
        "std" => TransformExpr::Std,
        "swap" => TransformExpr::Swap,
        "identity" => TransformExpr::Identity,
        "test" => TransformExpr::Test(arg(1)?),
        "perm" => TransformExpr::Perm(arg(1)?, arg(2)?),
        "diag" => TransformExpr::Diag(arg(1)?, arg(2)?),
        "unitary" => {
            let (m, used) = parse_matrix(block()?)?;
            if used != block()?.len() {
                return Err(perr(line, "unexpected text after the matrix"));
            }
            TransformExpr::Unitary(m)
        }
        "observable" => TransformExpr::Observable(named(parse_named_matrices(block()?)?)),
        "kraus" => TransformExpr::Kraus(named(parse_named_matrices(block()?)?)),
        "place" => {
            let inner = arg(1)?;
            let tapes = rhs[2..]
                .iter()
                .map(|t| match t.parse::<usize>() {
                    Ok(k) if k >= 1 => Ok(k - 1),
                    _ => Err(perr(line, format!("bad tape number `{t}`"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            TransformExpr::Place(inner, tapes)
        }
        s if s.starts_with('[') && s.ends_with(']') && rhs.len() == 1 => {
            let parts = split_top_level(&s[1..s.len() - 1]);
            if parts.iter().any(|p| p.is_empty()) {
                return Err(perr(line, format!("bad composition `{s}`")));
            }
            TransformExpr::Composite(parts)
        }
        s => return Err(perr(line, format!("unknown transform form `{s}`"))),
    };
    let plain = matches!(
        expr,
        TransformExpr::Std | TransformExpr::Swap | TransformExpr::Identity | TransformExpr::Composite(_)
    );
    let want = match &expr {
        TransformExpr::Test(_) => 2,
        TransformExpr::Perm(..) | TransformExpr::Diag(..) => 3,
        TransformExpr::Unitary(_) | TransformExpr::Observable(_) | TransformExpr::Kraus(_) => 1,
        _ => rhs.len(),
    };
    if (plain && rhs.len() != 1) || rhs.len() != want {
        return Err(perr(line, format!("unexpected arguments to `{head}`")));
    }
    Ok(expr)
}

pub fn parse_machine(text: &str) -> Result<MachineDescription, ParseError> {
    let sts = statements(text)?;
    let mut it = sts.iter().peekable();
    let header = it.next().ok_or_else(|| perr(1, "empty machine file"))?;
    let hw = header.words();
    if hw.first() != Some(&"machine") || hw.len() < 2 {
        return Err(perr(header.line, "expected `machine <name> kind=<cqtm|mqtm> tapes=<k>`"));
    }
    let kind = parse_kind(field(&hw, "kind", header.line)?, header.line)?;
    let tapes_s = field(&hw, "tapes", header.line)?;
    let tapes: usize = tapes_s
        .parse()
        .map_err(|_| perr(header.line, format!("bad tape count `{tapes_s}`")))?;

    let mut qalpha = None;
    let mut calpha = None;
    let mut start = None;
    while let Some(st) = it.peek() {
        let w = st.words();
        match w[0] {
            "qalphabet" => qalpha = Some((w[1..].iter().map(|s| s.to_string()).collect::<Vec<_>>(), st.line)),
            "calphabet" => calpha = Some(w[1..].iter().map(|s| s.to_string()).collect::<Vec<_>>()),
            "start" if w.len() == 2 => start = Some(w[1].to_string()),
            _ => break,
        }
        it.next();
    }
    let (qs, qline) = qalpha.ok_or_else(|| perr(header.line, "missing `qalphabet`"))?;
    let qalphabet = Alphabet::new(qs).map_err(|e| perr(qline, e.to_string()))?;
    if !qalphabet.contains("#") {
        return Err(perr(qline, "Σ_Q must contain the blank #"));
    }
    let calphabet = calpha.ok_or_else(|| perr(header.line, "missing `calphabet`"))?;
    let mut m = MachineDescription::new(hw[1], kind, tapes, qalphabet, calphabet)
        .map_err(|e| perr(header.line, e.to_string()))?;
    if let Some(s) = start {
        m.start = s;
    }

    for st in it {
        let w = st.words();
        let line = st.line;
        match w[0] {
            "transform" => {
                if w.len() < 4 || w[2] != "=" {
                    return Err(perr(line, "expected `transform <name> = <definition>`"));
                }
                let expr = parse_expr(st, &w[3..])?;
                m.define(w[1], expr).map_err(|e| perr(line, e.to_string()))?;
            }
            "delta" => {
                if w.len() != 7 || w[3] != "->" {
                    return Err(perr(line, "expected `delta <q> <τ> -> <p> <directions> <transform>`"));
                }
                let moves = w[5]
                    .chars()
                    .map(|c| Move::parse(c).ok_or_else(|| perr(line, format!("bad direction `{c}`"))))
                    .collect::<Result<Vec<_>, _>>()?;
                m.add_transition(w[1], w[2], Control::parse(w[4]), moves, w[6])
                    .map_err(|e| perr(line, e.to_string()))?;
            }
            "embed" => {
                let e = m.embedding.get_or_insert_with(Embedding::default);
                match w.len() {
                    1 => {}
                    4 if w[2] == "->" => {
                        e.map.insert(w[1].to_string(), w[3].to_string());
                    }
                    _ => return Err(perr(line, "expected `embed <source> -> <target>`")),
                }
            }
            "qalphabet" | "calphabet" | "start" => {
                return Err(perr(line, format!("`{}` must precede transforms and transitions", w[0])));
            }
            other => return Err(perr(line, format!("unknown statement `{other}`"))),
        }
    }
    Ok(m)
}

fn render_named(ops: &[(Outcome, crate::quantum::Matrix)]) -> String {
    let mut s = String::from("{\n");
    for (o, m) in ops {
        let _ = writeln!(s, "  {} = {}", o.as_str(), render_matrix(m, "  "));
    }
    s.push('}');
    s
}

fn render_expr(e: &TransformExpr) -> String {
    match e {
        TransformExpr::Std => "std".into(),
        TransformExpr::Swap => "swap".into(),
        TransformExpr::Identity => "identity".into(),
        TransformExpr::Test(t) => format!("test {t}"),
        TransformExpr::Perm(a, b) => format!("perm {a} {b}"),
        TransformExpr::Diag(a, b) => format!("diag {a} {b}"),
        TransformExpr::Unitary(m) => format!("unitary {}", render_matrix(m, "")),
        TransformExpr::Observable(ps) => format!("observable {}", render_named(ps)),
        TransformExpr::Kraus(ks) => format!("kraus {}", render_named(ks)),
        TransformExpr::Composite(parts) => format!("[{}]", parts.join(",")),
        TransformExpr::Place(inner, tapes) => {
            let t: Vec<String> = tapes.iter().map(|k| (k + 1).to_string()).collect();
            format!("place {inner} {}", t.join(" "))
        }
    }
}

pub fn render_machine(m: &MachineDescription) -> String {
    let mut s = String::new();
    let kind = match m.kind {
        Kind::Cqtm => "cqtm",
        Kind::Mqtm => "mqtm",
    };
    let _ = writeln!(s, "machine {} kind={kind} tapes={}", m.name, m.tapes);
    let _ = writeln!(s, "qalphabet {}", m.qalphabet.symbols().join(" "));
    let _ = writeln!(s, "calphabet {}", m.calphabet.join(" "));
    let _ = writeln!(s, "start {}", m.start);
    if let Some(e) = &m.embedding {
        if e.map.is_empty() {
            s.push_str("embed\n");
        }
        for (a, b) in &e.map {
            let _ = writeln!(s, "embed {a} -> {b}");
        }
    }
    s.push('\n');
    for t in m.transforms() {
        let _ = writeln!(s, "transform {} = {}", t.name, render_expr(&t.expr));
    }
    s.push('\n');
    let mut by_state: BTreeMap<&str, Vec<_>> = BTreeMap::new();
    for ((q, tau), a) in &m.delta {
        by_state.entry(q.as_str()).or_default().push((tau, a));
    }
    for (q, rows) in by_state {
        for (tau, a) in rows {
            let dirs: String = a.moves.iter().map(|d| d.letter()).collect();
            let _ = writeln!(s, "delta {q} {tau} -> {} {dirs} {}", a.next.name(), a.transform);
        }
    }
    s
}
