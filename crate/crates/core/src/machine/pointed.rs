//! Text form of a configuration in the pointed-symbol style: the cell under
//! each head is written with a `^` prefix inside the basis words, so head
//! positions live in the quantum notation rather than beside it.
//!
//! `(q, τ, @lo₁,lo₂: (re,im)|a,^b/^#> + ...)` lists, per tape, the window's
//! left end and then the words of every nonzero amplitude, tapes separated
//! by `/`.

use num_complex::Complex64;

use crate::quantum::{BasisIndex, Outcome, StateVector, NORM_TOL};

use super::{Configuration, Control, MachineDescription, MachineError, Trace};

fn err(msg: impl Into<String>) -> MachineError {
    MachineError::Invalid(format!("pointed configuration: {}", msg.into()))
}

pub fn to_pointed(m: &MachineDescription, c: &Configuration) -> String {
    let los: Vec<String> = c.windows.iter().map(|(lo, _)| lo.to_string()).collect();
    let mut terms = Vec::new();
    for &(i, a) in c.state.terms() {
        let mut tapes = Vec::new();
        for t in 0..c.heads.len() {
            let (lo, hi) = c.windows[t];
            let cells: Vec<String> = (lo..=hi)
                .map(|p| {
                    let r = c.register_index(t, p).expect("in window");
                    let sym = m.qalphabet.symbol(c.state.digit(i, r));
                    if p == c.heads[t] {
                        format!("^{sym}")
                    } else {
                        sym.to_string()
                    }
                })
                .collect();
            tapes.push(cells.join(","));
        }
        terms.push(format!("({},{})|{}>", a.re, a.im, tapes.join("/")));
    }
    format!(
        "({}, {}, @{}: {})",
        c.control,
        c.last_outcome,
        los.join(","),
        terms.join(" + ")
    )
}

pub fn from_pointed(m: &MachineDescription, text: &str) -> Result<Configuration, MachineError> {
    let body = text
        .trim()
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| err("missing parentheses"))?;
    let mut parts = body.splitn(3, ", ");
    let control = Control::parse(parts.next().ok_or_else(|| err("missing control"))?);
    let outcome = Outcome::new(parts.next().ok_or_else(|| err("missing outcome"))?);
    let rest = parts.next().ok_or_else(|| err("missing state"))?;
    let rest = rest.strip_prefix('@').ok_or_else(|| err("missing window origin"))?;
    let (los, terms) = rest.split_once(": ").ok_or_else(|| err("missing `:`"))?;
    let los: Vec<i64> = los
        .split(',')
        .map(|s| s.parse().map_err(|_| err(format!("bad origin `{s}`"))))
        .collect::<Result<_, _>>()?;
    let k = los.len();
    let d = m.d();

    let mut heads: Vec<Option<i64>> = vec![None; k];
    let mut lens: Vec<Option<usize>> = vec![None; k];
    let mut entries: Vec<(Vec<usize>, Complex64)> = Vec::new();
    for term in terms.split(" + ") {
        let (amp, word) = term.split_once('|').ok_or_else(|| err(format!("bad term `{term}`")))?;
        let amp = amp
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .and_then(|s| s.split_once(','))
            .ok_or_else(|| err(format!("bad amplitude `{amp}`")))?;
        let z = Complex64::new(
            amp.0.parse().map_err(|_| err("bad real part"))?,
            amp.1.parse().map_err(|_| err("bad imaginary part"))?,
        );
        let word = word.strip_suffix('>').ok_or_else(|| err("missing `>`"))?;
        let tapes: Vec<&str> = word.split('/').collect();
        if tapes.len() != k {
            return Err(err("tape count mismatch"));
        }
        let mut digits = Vec::new();
        for (t, w) in tapes.iter().enumerate() {
            let cells: Vec<&str> = w.split(',').collect();
            if *lens[t].get_or_insert(cells.len()) != cells.len() {
                return Err(err("window length differs between terms"));
            }
            let mut head = None;
            for (j, sym) in cells.iter().enumerate() {
                let sym = match sym.strip_prefix('^') {
                    Some(s) => {
                        head = Some(los[t] + j as i64);
                        s
                    }
                    None => sym,
                };
                digits.push(m.qalphabet.digit(sym)?);
            }
            let head = head.ok_or_else(|| err("tape without pointed cell"))?;
            if *heads[t].get_or_insert(head) != head {
                return Err(err("head position differs between terms"));
            }
        }
        entries.push((digits, z));
    }
    let lens: Vec<usize> = lens.into_iter().map(|l| l.expect("at least one term")).collect();
    let n: usize = lens.iter().sum();
    let terms = entries.into_iter().map(|(digits, z)| {
        let idx = digits.iter().fold(0, |acc: BasisIndex, &g| acc * d as BasisIndex + g as BasisIndex);
        (idx, z)
    });
    let state = StateVector::from_terms(d, n, terms, NORM_TOL)?;
    Ok(Configuration {
        control,
        last_outcome: outcome,
        heads: heads.into_iter().map(|h| h.expect("set")).collect(),
        windows: los.iter().zip(&lens).map(|(&lo, &l)| (lo, lo + l as i64 - 1)).collect(),
        state,
        steps: 0,
        trace: Trace::new(),
    })
}
