//! `k`-tape CQTMs to 2-tape CQTMs.
//!
//! Tape 1 of the result holds `▷▷ seg₁ ◁ ▷ seg₂ ◁ … ▷ seg_k ◁ ◁`, where
//! `seg_t` is the stored window of source tape `t` and the cell under source
//! head `t` carries the underlined copy `_a` of its symbol. The leftmost `▷`
//! never moves; every simulated step starts and ends on it.
//!
//! Marker and underline flags are classical, so the `Look` measurement that
//! reads them never disturbs the data. Tape 2 is a one-cell buffer used to
//! bring a second cell next to the first for 2-cell transforms and to shift
//! the layout right when a segment grows. Transforms acting on more than two
//! tapes must be given as sequences of at most 2-cell pieces.

use std::collections::BTreeMap;

use crate::machine::{Control, Kind, MachineDescription, MachineError, Move, TransformExpr};
use crate::quantum::{
    compose_sequential, embed_on_cells, Alphabet, Matrix, Outcome, Transform, C1, COMPLETENESS_TOL,
};

/// Source transform name → pieces `(transform name, source tapes)`, applied
/// first to last. Each piece acts on one or two tapes.
pub type Decomposition = BTreeMap<String, Vec<(String, Vec<usize>)>>;

pub const LEFT: &str = "▷";
pub const RIGHT: &str = "◁";

fn underlined(a: &str) -> String {
    format!("_{a}")
}

fn err(msg: String) -> MachineError {
    MachineError::Invalid(msg)
}

struct Piece {
    transform: String,
    tapes: Vec<usize>,
}

/// Pieces for source transform `name`: caller-supplied, or read off a
/// placement or spatial composition of small transforms.
fn pieces_of(src: &MachineDescription, name: &str, decomp: &Decomposition) -> Result<Vec<Piece>, MachineError> {
    let t = src.transform(name).ok_or_else(|| MachineError::UnknownTransform(name.into()))?;
    let mk = |n: &str, tapes: Vec<usize>| Piece {
        transform: n.to_string(),
        tapes,
    };
    if let Some(list) = decomp.get(name) {
        return Ok(list.iter().map(|(n, tapes)| mk(n, tapes.clone())).collect());
    }
    if name == "-" {
        return Ok(Vec::new());
    }
    match &t.expr {
        TransformExpr::Place(inner, cells) if cells.len() <= 2 => return Ok(vec![mk(inner, cells.clone())]),
        TransformExpr::Composite(parts) => {
            let mut out = Vec::new();
            let mut off = 0;
            let mut ok = true;
            for p in parts {
                let a = if p == "-" {
                    1
                } else {
                    src.transform(p)
                        .ok_or_else(|| MachineError::UnknownTransform(p.clone()))?
                        .base
                        .arity_in()
                };
                if p != "-" {
                    if a > 2 {
                        ok = false;
                        break;
                    }
                    out.push(mk(p, (off..off + a).collect()));
                }
                off += a;
            }
            if ok {
                return Ok(out);
            }
        }
        _ => {}
    }
    let a = t.base.arity_in();
    if a <= 2 {
        return Ok(vec![mk(name, (0..a).collect())]);
    }
    Err(err(format!("transform `{name}` acts on {a} tapes and has no decomposition")))
}

/// Checks that the pieces compose to the source transform.
fn check_pieces(src: &MachineDescription, name: &str, pieces: &[Piece]) -> Result<(), MachineError> {
    let k = src.tapes;
    let d = src.d();
    let full = &src.transform(name).expect("known").full;
    let mut acc = crate::quantum::identity(&src.qalphabet, k);
    for p in pieces {
        let t = src
            .transform(&p.transform)
            .ok_or_else(|| MachineError::UnknownTransform(p.transform.clone()))?;
        if t.base.arity_in() != p.tapes.len() || p.tapes.len() > 2 || p.tapes.iter().any(|&x| x >= k) {
            return Err(err(format!("decomposition of `{name}`: piece `{}` does not fit tapes {:?}", p.transform, p.tapes)));
        }
        let branches = t
            .base
            .branches()
            .iter()
            .map(|(o, m)| Ok((o.clone(), embed_on_cells(m, d, &p.tapes, k)?)))
            .collect::<Result<Vec<_>, crate::quantum::QuantumError>>()?;
        let placed = Transform::new(&p.transform, d, k, k, branches)?;
        acc = compose_sequential(&acc, &placed)?;
    }
    let live = |t: &Transform| -> BTreeMap<String, Matrix> {
        t.branches()
            .iter()
            .filter(|(_, m)| !m.is_zero(COMPLETENESS_TOL))
            .map(|(o, m)| (o.as_str().to_string(), m.clone()))
            .collect()
    };
    let (want, got) = (live(full), live(&acc));
    let same = want.len() == got.len()
        && want
            .iter()
            .all(|(o, m)| got.get(o).is_some_and(|g| g.approx_eq(m, COMPLETENESS_TOL)));
    if !same {
        return Err(err(format!("decomposition of `{name}` does not reproduce it")));
    }
    Ok(())
}

type Pt = (String, String);

struct Gen<'a> {
    src: &'a MachineDescription,
    m: MachineDescription,
    d: usize,
    counter: usize,
    piece_names: BTreeMap<(String, bool), String>,
}

const S2: [Move; 2] = [Move::S, Move::S];

impl<'a> Gen<'a> {
    fn fresh(&mut self, tag: &str) -> String {
        self.counter += 1;
        format!("{tag}.{}", self.counter)
    }

    fn t(&mut self, from: &Pt, to: &str, m1: Move, tr: &str) -> Result<(), MachineError> {
        self.m
            .add_transition(&from.0, &from.1, Control::State(to.into()), vec![m1, Move::S], tr)
    }

    /// Applies `tr` in place and continues from its `_` outcome.
    fn unit(&mut self, from: &Pt, tag: &str, m1: Move, tr: &str) -> Result<Pt, MachineError> {
        let s = self.fresh(tag);
        self.t(from, &s, m1, tr)?;
        Ok((s, "_".into()))
    }

    fn hub(&self, q: &str, c: &str) -> String {
        format!("{q}|{c}")
    }

    /// From home, walks to the cell under source head `tape`.
    fn seek(&mut self, from: &Pt, tape: usize, tag: &str) -> Result<Pt, MachineError> {
        let states: Vec<String> = (0..=tape).map(|_| self.fresh(tag)).collect();
        let inside = self.fresh(tag);
        // states[n]: looking at a cell with n + 1 `▷` seen before it.
        self.t(from, &states[0], Move::R, "Look")?;
        for n in 0..=tape {
            let me = states[n].clone();
            let next = if n == tape { inside.clone() } else { states[n + 1].clone() };
            self.t(&(me.clone(), LEFT.into()), &next, Move::R, "Look")?;
            for o in [".", "^", RIGHT] {
                self.t(&(me.clone(), o.into()), &me, Move::R, "Look")?;
            }
        }
        self.t(&(inside.clone(), ".".into()), &inside, Move::R, "Look")?;
        Ok((inside, "^".into()))
    }

    /// Walks left back to the leftmost `▷`, from any of `froms`.
    fn home(&mut self, froms: &[Pt], tag: &str) -> Result<Pt, MachineError> {
        let a = self.fresh(tag);
        let b = self.fresh(tag);
        for f in froms {
            self.t(f, &a, Move::L, "Look")?;
        }
        for o in [".", "^", RIGHT] {
            self.t(&(a.clone(), o.into()), &a, Move::L, "Look")?;
        }
        self.t(&(a.clone(), LEFT.into()), &b, Move::L, "Look")?;
        self.t(&(b.clone(), RIGHT.into()), &a, Move::L, "Look")?;
        Ok((b, LEFT.into()))
    }

    /// Inserts a pointed blank `_#` at the current cell, shifting it and
    /// everything to its right one cell right.
    fn insert(&mut self, from: &Pt, tag: &str) -> Result<Pt, MachineError> {
        let p = self.unit(from, tag, Move::S, "Mark2")?;
        let sw = self.fresh(tag);
        let lk = self.fresh(tag);
        let sw2 = self.fresh(tag);
        let lk2 = self.fresh(tag);
        let fin = self.fresh(tag);
        self.t(&p, &sw, Move::S, "Swap")?;
        self.t(&(sw.clone(), "_".into()), &lk, Move::S, "Look2")?;
        for o in [".", "^", LEFT] {
            self.t(&(lk.clone(), o.into()), &sw, Move::R, "Swap")?;
        }
        self.t(&(lk.clone(), RIGHT.into()), &sw2, Move::R, "Swap")?;
        self.t(&(sw2.clone(), "_".into()), &lk2, Move::S, "Look2")?;
        self.t(&(lk2.clone(), LEFT.into()), &sw, Move::R, "Swap")?;
        self.t(&(lk2.clone(), RIGHT.into()), &fin, Move::R, "Swap")?;
        Ok((fin, "_".into()))
    }

    /// Moves source head `tape` one cell in direction `mv`, from home to home.
    fn shift_head(&mut self, from: &Pt, tape: usize, mv: Move, tag: &str) -> Result<Pt, MachineError> {
        let at = self.seek(from, tape, tag)?;
        let plain = self.unit(&at, tag, Move::S, "Mark")?;
        let look = self.fresh(tag);
        self.t(&plain, &look, mv, "Look")?;
        let marked = self.unit(&(look.clone(), ".".into()), tag, Move::S, "Mark")?;
        let grown = if mv == Move::R {
            self.insert(&(look, RIGHT.into()), tag)?
        } else {
            let back = self.unit(&(look, LEFT.into()), tag, Move::R, "-")?;
            self.insert(&back, tag)?
        };
        self.home(&[marked, grown], tag)
    }

    /// Compiled name of a piece, lifted to the layout alphabet; 2-cell pieces
    /// have their cells exchanged since the buffer holds the first one.
    fn piece_transform(&mut self, name: &str, two: bool) -> Result<String, MachineError> {
        if let Some(n) = self.piece_names.get(&(name.to_string(), two)) {
            return Ok(n.clone());
        }
        let base = self.src.transform(name).expect("checked").base.clone();
        let (d, dp) = (self.d, self.m.d());
        let a = base.arity_in();
        let dim = dp.pow(a as u32);
        let embed = |i: usize| if a == 1 { i } else { (i / d) * dp + i % d };
        let mut complement = Matrix::identity(dim);
        for i in 0..d.pow(a as u32) {
            complement[(embed(i), embed(i))] = crate::quantum::C0;
        }
        let mut branches = Vec::new();
        for (bi, (o, op)) in base.branches().iter().enumerate() {
            let mut big = if bi == 0 { complement.clone() } else { Matrix::zeros(dim, dim) };
            for r in 0..op.rows() {
                for c in 0..op.cols() {
                    big[(embed(r), embed(c))] = op[(r, c)];
                }
            }
            if two {
                big = big.permute_cells(&[dp, dp], &[1, 0]);
            }
            branches.push((o.clone(), big));
        }
        let n = format!("{name}@{}", if two { "pair" } else { "cell" });
        self.m.define(&n, TransformExpr::Kraus(branches))?;
        self.piece_names.insert((name.into(), two), n.clone());
        Ok(n)
    }

    /// Applies one piece, from home; returns one home point per outcome.
    fn piece(&mut self, from: &Pt, p: &Piece, tag: &str) -> Result<Vec<(Pt, Outcome)>, MachineError> {
        let outcomes: Vec<Outcome> = self.src.transform(&p.transform).expect("checked").base.outcomes().cloned().collect();
        let two = p.tapes.len() == 2;
        let tr = self.piece_transform(&p.transform, two)?;
        let mut cur = from.clone();
        if two {
            let at = self.seek(&cur, p.tapes[0], tag)?;
            let plain = self.unit(&at, tag, Move::S, "Mark")?;
            let swapped = self.unit(&plain, tag, Move::S, "Swap")?;
            let marked = self.unit(&swapped, tag, Move::S, "Mark")?;
            cur = self.home(&[marked], tag)?;
        }
        let target = *p.tapes.last().expect("piece has a tape");
        let at = self.seek(&cur, target, tag)?;
        let plain = self.unit(&at, tag, Move::S, "Mark")?;
        let applied = self.fresh(tag);
        self.t(&plain, &applied, Move::S, &tr)?;
        let mut out = Vec::new();
        for o in outcomes {
            let marked = self.unit(&(applied.clone(), o.as_str().into()), tag, Move::S, "Mark")?;
            let mut h = self.home(&[marked], tag)?;
            if two {
                let at = self.seek(&h, p.tapes[0], tag)?;
                let plain = self.unit(&at, tag, Move::S, "Mark")?;
                let swapped = self.unit(&plain, tag, Move::S, "Swap")?;
                let marked = self.unit(&swapped, tag, Move::S, "Mark")?;
                h = self.home(&[marked], tag)?;
            }
            out.push((h, o));
        }
        Ok(out)
    }

    /// Erases the layout: markers and underlines go, segments 2..k move to
    /// tape 2, segment 1 stays where it is. Ends halted.
    fn cleanup(&mut self, from: &Pt, tag: &str) -> Result<(), MachineError> {
        let e1 = self.unit(from, tag, Move::S, "W▷")?;
        let e2 = self.unit(&e1, tag, Move::R, "W▷")?;
        let [first, rest, after, moved] = [self.fresh(tag), self.fresh(tag), self.fresh(tag), self.fresh(tag)];
        // Segment 1: drop the underline, stop at its `◁`.
        self.t(&e2, &first, Move::R, "Look")?;
        self.t(&(first.clone(), ".".into()), &first, Move::R, "Look")?;
        let un = self.unit(&(first.clone(), "^".into()), tag, Move::S, "Mark")?;
        self.t(&un, &first, Move::R, "Look")?;
        let end = self.unit(&(first, RIGHT.into()), tag, Move::S, "W◁")?;
        self.t(&end, &after, Move::R, "Look")?;
        // Just past an erased `◁`: `▷` opens another segment, `◁` closes
        // the layout.
        let open = self.unit(&(after.clone(), LEFT.into()), tag, Move::S, "W▷")?;
        self.t(&open, &rest, Move::R, "Look")?;
        let last = self.unit(&(after.clone(), RIGHT.into()), tag, Move::S, "W◁")?;
        self.m.add_transition(&last.0, &last.1, Control::Halt, S2.to_vec(), "-")?;
        // Inside a later segment: each data cell goes to a fresh tape-2 cell.
        self.t(&(rest.clone(), ".".into()), &moved, Move::S, "Swap")?;
        let un = self.unit(&(rest.clone(), "^".into()), tag, Move::S, "Mark")?;
        self.t(&un, &moved, Move::S, "Swap")?;
        self.m
            .add_transition(&moved, "_", Control::State(rest.clone()), vec![Move::R, Move::R], "Look")?;
        let end = self.unit(&(rest, RIGHT.into()), tag, Move::S, "W◁")?;
        self.t(&end, &after, Move::R, "Look")
    }

    /// Writes the initial layout around the input and returns home.
    fn init(&mut self) -> Result<Pt, MachineError> {
        let tag = "init";
        let start: Pt = (self.src.start.clone(), "#".into());
        let p = self.unit(&start, tag, Move::S, "Mark")?;
        let p = self.unit(&p, tag, Move::L, "W▷")?;
        let p = self.unit(&p, tag, Move::L, "W▷")?;
        let scan = self.fresh(tag);
        self.t(&p, &scan, Move::R, "T#")?;
        self.t(&(scan.clone(), "!#".into()), &scan, Move::R, "T#")?;
        let mut p = self.unit(&(scan, "#".into()), tag, Move::S, "W◁")?;
        for _ in 1..self.src.tapes {
            p = self.unit(&p, tag, Move::R, "W▷")?;
            p = self.unit(&p, tag, Move::R, "W_#")?;
            p = self.unit(&p, tag, Move::R, "W◁")?;
        }
        p = self.unit(&p, tag, Move::R, "W◁")?;
        self.home(&[p], tag)
    }

    /// Hub of simulated configuration `(q, c)`: control sits at home.
    fn enter(&mut self, from: &Pt, q: &Control, c: &str) -> Result<(), MachineError> {
        match q {
            Control::Halt => self.cleanup(from, "out"),
            Control::Accept | Control::Reject => {
                self.m.add_transition(&from.0, &from.1, q.clone(), S2.to_vec(), "-")
            }
            Control::State(name) => {
                let hub = self.hub(name, c);
                self.m
                    .add_transition(&from.0, &from.1, Control::State(hub), S2.to_vec(), "-")
            }
        }
    }

    /// Body of simulated transition `δ(q, c)`, starting at its hub.
    fn transition(&mut self, q: &str, c: &str, decomp: &Decomposition) -> Result<(), MachineError> {
        let Some(action) = self.src.transition(q, c).cloned() else {
            return Ok(());
        };
        let tag = format!("{q}|{c}");
        let mut at: Pt = (self.hub(q, c), "_".into());
        for (tape, mv) in action.moves.iter().enumerate() {
            if *mv != Move::S {
                at = self.shift_head(&at, tape, *mv, &tag)?;
            }
        }
        let pieces = pieces_of(self.src, &action.transform, decomp)?;
        check_pieces(self.src, &action.transform, &pieces)?;
        let mut points = vec![(at, Outcome::lambda())];
        for p in &pieces {
            let mut next = Vec::new();
            for (pt, prefix) in points {
                for (h, o) in self.piece(&pt, p, &tag)? {
                    next.push((h, prefix.concat(&o)));
                }
            }
            points = next;
        }
        for (pt, o) in points {
            self.enter(&pt, &action.next, o.as_str())?;
        }
        Ok(())
    }
}

/// Layout alphabet: Σ_Q, underlined Σ_Q, then `▷`, `◁`.
fn layout_alphabet(a: &Alphabet) -> Result<Alphabet, MachineError> {
    let mut v: Vec<String> = a.symbols().to_vec();
    v.extend(a.symbols().iter().map(|s| underlined(s)));
    v.push(LEFT.into());
    v.push(RIGHT.into());
    Ok(Alphabet::new(v)?)
}

fn permutation_unitary(d: usize, pairs: &[(usize, usize)]) -> Matrix {
    let mut map: Vec<usize> = (0..d).collect();
    for &(x, y) in pairs {
        map.swap(x, y);
    }
    let mut m = Matrix::zeros(d, d);
    for (c, &r) in map.iter().enumerate() {
        m[(r, c)] = C1;
    }
    m
}

/// Compiles a `k`-tape CQTM to a 2-tape CQTM. Every simulated transition
/// starts from a hub state `q|c`, so the source states stay recognizable.
pub fn compile_to_two_tapes(src: &MachineDescription, decomp: &Decomposition) -> Result<MachineDescription, MachineError> {
    if src.kind != Kind::Cqtm {
        return Err(err("expected a CQTM source".into()));
    }
    let d = src.d();
    let alpha = layout_alphabet(&src.qalphabet)?;
    let mut m = MachineDescription::new(
        format!("{}_2tape", src.name),
        Kind::Cqtm,
        2,
        alpha.clone(),
        vec!["#".into(), "!#".into(), "_".into()],
    )?;
    m.start = src.start.clone();
    m.define("T#", TransformExpr::Test("#".into()))?;
    m.define("T#2", TransformExpr::Place("T#".into(), vec![1]))?;
    m.define("Swap", TransformExpr::Swap)?;
    let idx = |s: &str| alpha.digit(s).expect("layout symbol");
    let blank = idx("#");
    let marks: Vec<(usize, usize)> = (0..d).map(|i| (i, d + i)).collect();
    m.define("Mark", TransformExpr::Unitary(permutation_unitary(alpha.len(), &marks)))?;
    m.define("Mark2", TransformExpr::Place("Mark".into(), vec![1]))?;
    for (name, sym) in [("W▷", LEFT.to_string()), ("W◁", RIGHT.to_string()), ("W_#", underlined("#"))] {
        m.define(name, TransformExpr::Unitary(permutation_unitary(alpha.len(), &[(blank, idx(&sym))])))?;
    }
    let proj = |range: std::ops::Range<usize>| {
        let mut p = Matrix::zeros(alpha.len(), alpha.len());
        for i in range {
            p[(i, i)] = C1;
        }
        p
    };
    m.define(
        "Look",
        TransformExpr::Observable(vec![
            (Outcome::new("."), proj(0..d)),
            (Outcome::new("^"), proj(d..2 * d)),
            (Outcome::new(LEFT), proj(2 * d..2 * d + 1)),
            (Outcome::new(RIGHT), proj(2 * d + 1..2 * d + 2)),
        ]),
    )?;
    m.define("Look2", TransformExpr::Place("Look".into(), vec![1]))?;
    let mut g = Gen {
        src,
        m,
        d,
        counter: 0,
        piece_names: BTreeMap::new(),
    };
    let home = g.init()?;
    g.enter(&home, &Control::State(src.start.clone()), "#")?;
    for (q, c) in src.delta.keys() {
        g.transition(q, c, decomp)?;
    }
    g.m.close_calphabet();
    Ok(g.m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library;
    use crate::machine::validate_machine;

    #[test]
    fn three_tape_pieces_are_read_off() {
        let src = library::three_tape().unwrap();
        let p = pieces_of(&src, "S13", &Decomposition::new()).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].tapes, vec![0, 2]);
        check_pieces(&src, "S13", &p).unwrap();
        let p = pieces_of(&src, "S23", &Decomposition::new()).unwrap();
        assert_eq!(p[0].tapes, vec![1, 2]);
    }

    #[test]
    fn wrong_decomposition_is_rejected() {
        let src = library::three_tape().unwrap();
        let bad = Decomposition::from([("S13".to_string(), vec![("Swap".to_string(), vec![0, 1])])]);
        let e = compile_to_two_tapes(&src, &bad).unwrap_err();
        assert!(e.to_string().contains("does not reproduce"), "{e}");
    }

    #[test]
    fn compiled_machine_validates() {
        let m = compile_to_two_tapes(&library::three_tape().unwrap(), &Decomposition::new()).unwrap();
        validate_machine(&m).unwrap_or_else(|e| panic!("{e:?}"));
    }
}
