use std::fmt::Write as _;

use crate::compile::{ClassicalTM, Decomposition};
use crate::machine::Move;
use crate::quantum::Alphabet;

use super::text::{perr, statements, ParseError};

pub fn parse_tm(text: &str) -> Result<ClassicalTM, ParseError> {
    let sts = statements(text)?;
    let header = sts.first().ok_or_else(|| perr(1, "empty TM file"))?;
    let hw = header.words();
    if hw.len() != 2 || hw[0] != "tm" {
        return Err(perr(header.line, "expected `tm <name>`"));
    }
    let al = sts.get(1).ok_or_else(|| perr(header.line, "missing `alphabet`"))?;
    let aw = al.words();
    if aw[0] != "alphabet" {
        return Err(perr(al.line, "expected `alphabet <symbols>`"));
    }
    let alphabet = Alphabet::new(aw[1..].iter().copied()).map_err(|e| perr(al.line, e.to_string()))?;
    let mut tm = ClassicalTM::new(hw[1], alphabet).map_err(|e| perr(al.line, e.to_string()))?;
    for st in &sts[2..] {
        let w = st.words();
        match w[0] {
            "start" if w.len() == 2 => tm.start = w[1].to_string(),
            "delta" if w.len() == 7 && w[3] == "->" => {
                let mut d = w[6].chars();
                let mv = match (d.next().and_then(Move::parse), d.next()) {
                    (Some(m), None) => m,
                    _ => return Err(perr(st.line, format!("bad direction `{}`", w[6]))),
                };
                tm.add(w[1], w[2], w[4], w[5], mv).map_err(|e| perr(st.line, e.to_string()))?;
            }
            _ => return Err(perr(st.line, "expected `delta <q> <τ> -> <p> <σ> <D>`")),
        }
    }
    Ok(tm)
}

pub fn render_tm(tm: &ClassicalTM) -> String {
    let mut s = format!("tm {}\nalphabet {}\nstart {}\n", tm.name, tm.alphabet.symbols().join(" "), tm.start);
    for ((q, tau), (p, sigma, d)) in &tm.delta {
        let _ = writeln!(s, "delta {q} {tau} -> {} {sigma} {}", p.name(), d.letter());
    }
    s
}

/// `decompose <T> = <piece>@<tapes> ...` with 1-based, comma-separated tape
/// lists.
pub fn parse_decomposition(text: &str) -> Result<Decomposition, ParseError> {
    let mut out = Decomposition::new();
    for st in statements(text)? {
        let w = st.words();
        if w.len() < 4 || w[0] != "decompose" || w[2] != "=" {
            return Err(perr(st.line, "expected `decompose <T> = <piece>@<tapes> ...`"));
        }
        let pieces = w[3..]
            .iter()
            .map(|p| {
                let (name, tapes) = p
                    .rsplit_once('@')
                    .ok_or_else(|| perr(st.line, format!("piece `{p}` lacks `@<tapes>`")))?;
                let tapes = tapes
                    .split(',')
                    .map(|t| match t.parse::<usize>() {
                        Ok(k) if k >= 1 => Ok(k - 1),
                        _ => Err(perr(st.line, format!("bad tape `{t}`"))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((name.to_string(), tapes))
            })
            .collect::<Result<Vec<_>, ParseError>>()?;
        if out.insert(w[1].to_string(), pieces).is_some() {
            return Err(perr(st.line, format!("`{}` decomposed twice", w[1])));
        }
    }
    Ok(out)
}

pub fn render_decomposition(d: &Decomposition) -> String {
    let mut s = String::new();
    for (t, pieces) in d {
        let ps: Vec<String> = pieces
            .iter()
            .map(|(n, tapes)| {
                let t: Vec<String> = tapes.iter().map(|k| (k + 1).to_string()).collect();
                format!("{n}@{}", t.join(","))
            })
            .collect();
        let _ = writeln!(s, "decompose {t} = {}", ps.join(" "));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tm_round_trip() {
        let text = "tm inc\nalphabet # 1\ndelta s # -> r # R\ndelta r 1 -> r 1 R\ndelta r # -> h 1 S\n";
        let tm = parse_tm(text).unwrap();
        assert_eq!(tm.delta.len(), 3);
        assert_eq!(parse_tm(&render_tm(&tm)).unwrap(), tm);
        let e = parse_tm("tm x\nalphabet # 1\ndelta s 2 -> h 1 S\n").unwrap_err();
        assert_eq!(e.line, 3);
    }

    #[test]
    fn decomposition_round_trip() {
        let d = parse_decomposition("decompose W = A@1,2 B@2,3\n").unwrap();
        assert_eq!(d["W"], vec![("A".to_string(), vec![0, 1]), ("B".to_string(), vec![1, 2])]);
        assert_eq!(parse_decomposition(&render_decomposition(&d)).unwrap(), d);
    }
}
