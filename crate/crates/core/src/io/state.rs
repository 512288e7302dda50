use crate::quantum::{Alphabet, BasisIndex, StateVector};

use super::text::{parse_complex, perr, render_complex, ParseError};

/// Tolerance on the squared norm of a state file without `--renorm`.
pub const STATE_NORM_TOL: f64 = 1e-6;

/// Splits a ket label into symbols: comma-separated when it contains a
/// comma, otherwise by longest match against the alphabet.
fn split_word(word: &str, alphabet: &Alphabet) -> Option<Vec<usize>> {
    if word.contains(',') {
        return word.split(',').map(|s| alphabet.digit(s.trim()).ok()).collect();
    }
    let mut out = Vec::new();
    let mut rest = word;
    while !rest.is_empty() {
        let (len, digit) = alphabet
            .symbols()
            .iter()
            .enumerate()
            .filter(|(_, s)| rest.starts_with(s.as_str()))
            .map(|(i, s)| (s.len(), i))
            .max()?;
        out.push(digit);
        rest = &rest[len..];
    }
    Some(out)
}

/// Parses `c₁|w₁> + c₂|w₂> ...`. A missing coefficient is 1; a coefficient
/// may carry its own sign in place of the `+`. Every word must have the same
/// length.
pub fn parse_state(text: &str, alphabet: &Alphabet, renorm: bool) -> Result<StateVector, ParseError> {
    let chars: Vec<(char, usize)> = text
        .lines()
        .enumerate()
        .flat_map(|(i, l)| l.split('%').next().unwrap_or("").chars().chain(['\n']).map(move |c| (c, i + 1)))
        .collect();
    let mut terms = Vec::new();
    let mut cells: Option<usize> = None;
    let mut i = 0;
    let last_line = chars.last().map_or(1, |c| c.1);
    while i < chars.len() {
        let Some(bar) = chars[i..].iter().position(|c| c.0 == '|').map(|k| k + i) else {
            let rest: String = chars[i..].iter().map(|c| c.0).collect();
            if !rest.trim().is_empty() {
                return Err(perr(chars[i].1, format!("trailing text `{}`", rest.trim())));
            }
            break;
        };
        let line = chars[bar].1;
        let close = chars[bar..]
            .iter()
            .position(|c| c.0 == '>')
            .map(|k| k + bar)
            .ok_or_else(|| perr(line, "unterminated ket"))?;
        let mut coeff: String = chars[i..bar].iter().map(|c| c.0).filter(|c| !c.is_whitespace()).collect();
        if !terms.is_empty() || coeff.starts_with('+') {
            if let Some(rest) = coeff.strip_prefix('+') {
                coeff = rest.to_string();
            } else if !coeff.starts_with('-') {
                return Err(perr(line, "terms must be joined by `+`"));
            }
        }
        let amp = match coeff.as_str() {
            "" => 1.0.into(),
            "-" => (-1.0).into(),
            c => parse_complex(c).ok_or_else(|| perr(line, format!("bad coefficient `{c}`")))?,
        };
        let word: String = chars[bar + 1..close].iter().map(|c| c.0).collect();
        let digits = split_word(word.trim(), alphabet).ok_or_else(|| perr(line, format!("word `{word}` is not over the alphabet")))?;
        match cells {
            None => cells = Some(digits.len()),
            Some(n) if n != digits.len() => {
                return Err(perr(line, format!("word `{word}` has {} symbols, expected {n}", digits.len())));
            }
            _ => {}
        }
        let d = alphabet.len() as BasisIndex;
        let idx = digits.iter().try_fold(0 as BasisIndex, |acc, &g| acc.checked_mul(d).map(|x| x + g as BasisIndex));
        terms.push((idx.ok_or_else(|| perr(line, "word too long"))?, amp));
        i = close + 1;
    }
    let n = cells.ok_or_else(|| perr(last_line, "no terms"))?;
    let d = alphabet.len();
    let r = if renorm {
        StateVector::normalize_terms(d, n, terms)
    } else {
        StateVector::from_terms(d, n, terms, STATE_NORM_TOL)
    };
    r.map_err(|e| perr(last_line, e.to_string()))
}

pub fn render_state(s: &StateVector, alphabet: &Alphabet) -> String {
    let compact = alphabet.symbols().iter().all(|x| x.chars().count() == 1);
    let sep = if compact { "" } else { "," };
    let mut out = String::new();
    for (k, (i, a)) in s.terms().iter().enumerate() {
        let word: Vec<&str> = s.digits(*i).into_iter().map(|g| alphabet.symbol(g)).collect();
        if k > 0 {
            out.push_str("+ ");
        }
        out.push_str(&format!("{}|{}>\n", render_complex(*a), word.join(sep)));
    }
    if s.terms().is_empty() {
        out.push_str("0|>\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn superposition_input() {
        let a = Alphabet::new(["#", "a", "b"]).unwrap();
        let s = parse_state("0.70710678+0i|aa> + 0.70710678+0i|bb>", &a, false).unwrap();
        assert_eq!(s.cells(), 2);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let want = StateVector::from_terms(3, 2, [(4, h.into()), (8, h.into())], 1e-12).unwrap();
        assert!(s.fidelity(&want).unwrap() > 1.0 - 1e-12);
        let back = parse_state(&render_state(&s, &a), &a, false).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn signs_and_multichar_symbols() {
        let a = Alphabet::new(["#", "0", "1", "!#"]).unwrap();
        let s = parse_state("% comment\n0.6|0!#>\n-0.8i|1,#>", &a, false).unwrap();
        assert_eq!(s.amplitude(7), Complex64::new(0.6, 0.0));
        assert_eq!(s.amplitude(8), Complex64::new(0.0, -0.8));
        assert_eq!(parse_state(&render_state(&s, &a), &a, false).unwrap(), s);
    }

    #[test]
    fn normalization_is_enforced() {
        let a = Alphabet::new(["#", "0"]).unwrap();
        assert!(parse_state("2|0>", &a, false).is_err());
        assert!(parse_state("2|0>", &a, true).is_ok());
        let e = parse_state("1|0>\n+ 1|00>", &a, true).unwrap_err();
        assert_eq!(e.line, 2);
    }
}
