//! CQTM to MQTM. Each cell becomes a triple `data:class:ancilla`; a
//! transition's admissible transform is dilated to a unitary `V` on the data
//! and class registers, and `V` itself is applied by measuring the
//! reflection `R` and then the ancilla, repeated until the ancilla reads F.
//! The class register is then read and reset, and so is the ancilla.
//!
//! The untouched triple `#:#:T` is named `#`, so blank cells stay blank.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use crate::machine::{Action, Control, Embedding, Kind, MachineDescription, MachineError, Move, TransformExpr};
use crate::quantum::{dilate_admissible, reflection_measurement, Alphabet, Matrix, Outcome, C1};

use super::{fresh_state, RusLoop};

#[derive(Clone, Debug)]
pub struct CompiledMqtm {
    pub machine: MachineDescription,
    pub loops: Vec<RusLoop>,
    /// Class register alphabet, `#` first.
    pub class_alphabet: Alphabet,
}

struct Layout {
    dq: usize,
    dc: usize,
    /// 1 for `data:class` pairs, 2 for triples.
    dr: usize,
}

impl Layout {
    fn cell_dim(&self) -> usize {
        self.dq * self.dc * self.dr
    }

    fn alphabet(&self, q: &Alphabet, c: &Alphabet) -> Result<Alphabet, MachineError> {
        let mut names = Vec::with_capacity(self.cell_dim());
        for a in q.symbols() {
            for k in c.symbols() {
                for r in ["T", "F"].iter().take(self.dr) {
                    let blank = a == "#" && k == "#" && *r == "T";
                    names.push(if blank {
                        "#".to_string()
                    } else if self.dr == 1 {
                        format!("{a}:{k}")
                    } else {
                        format!("{a}:{k}:{r}")
                    });
                }
            }
        }
        Ok(Alphabet::new(names)?)
    }

    /// One-cell operator `D ⊗ C ⊗ R`.
    fn local(&self, data: &Matrix, class: &Matrix, anc: &Matrix) -> Matrix {
        let m = data.kron(class);
        if self.dr == 1 {
            m
        } else {
            m.kron(anc)
        }
    }

    /// Reorders a `k`-cell operator from grouped registers (all data, all
    /// class, all ancillas) to one triple per cell.
    fn interleave(&self, op: &Matrix, k: usize) -> Matrix {
        let groups = 1 + 1 + usize::from(self.dr == 2);
        let mut dims = vec![self.dq; k];
        dims.extend(vec![self.dc; k]);
        if self.dr == 2 {
            dims.extend(vec![2; k]);
        }
        let perm: Vec<usize> = (0..k).flat_map(|t| (0..groups).map(move |g| g * k + t)).collect();
        op.permute_cells(&dims, &perm)
    }
}

fn class_alphabet(m: &MachineDescription) -> Result<Alphabet, MachineError> {
    let used: BTreeSet<&str> = m.delta.values().map(|a| a.transform.as_str()).collect();
    let mut syms = vec!["#".to_string()];
    for name in used {
        let t = m.transform(name).ok_or_else(|| MachineError::UnknownTransform(name.into()))?;
        for o in t.full.outcomes() {
            if !syms.iter().any(|s| s == o.as_str()) {
                syms.push(o.as_str().to_string());
            }
        }
    }
    Ok(Alphabet::new(syms)?)
}

fn projector(dim: usize, i: usize) -> Matrix {
    Matrix::unit(dim, i, i)
}

/// Projectors on `(|x⟩ ± |y⟩)/√2` within a `dim`-level register.
fn plus_minus(dim: usize, x: usize, y: usize) -> (Matrix, Matrix) {
    let mut plus = vec![Complex64::default(); dim];
    let mut minus = plus.clone();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    plus[x] = C1 * h;
    plus[y] = C1 * h;
    minus[x] = C1 * h;
    minus[y] = -C1 * h;
    (Matrix::outer(&plus, &plus), Matrix::outer(&minus, &minus))
}

struct Builder<'a> {
    src: &'a MachineDescription,
    layout: Layout,
    class: Alphabet,
    m: MachineDescription,
    taken: BTreeSet<String>,
    loops: Vec<RusLoop>,
    /// Source transform name → compiled transform name.
    applied: BTreeMap<String, String>,
    stuck: BTreeSet<String>,
}

impl<'a> Builder<'a> {
    fn new(src: &'a MachineDescription, dr: usize) -> Result<Self, MachineError> {
        if src.kind != Kind::Cqtm {
            return Err(MachineError::Invalid("expected a CQTM source".into()));
        }
        let class = class_alphabet(src)?;
        let layout = Layout {
            dq: src.d(),
            dc: class.len(),
            dr,
        };
        let alpha = layout.alphabet(&src.qalphabet, &class)?;
        let (suffix, kind) = if dr == 2 { ("mqtm", Kind::Mqtm) } else { ("pair", Kind::Cqtm) };
        let mut m = MachineDescription::new(
            format!("{}_{suffix}", src.name),
            kind,
            src.tapes,
            alpha,
            vec!["#".into(), "!#".into()],
        )?;
        m.start = src.start.clone();
        m.define("T#", TransformExpr::Test("#".into()))?;
        for t in 1..src.tapes {
            m.define(format!("T#{}", t + 1), TransformExpr::Place("T#".into(), vec![t]))?;
        }
        let map = src
            .qalphabet
            .symbols()
            .iter()
            .map(|a| {
                let v = if a == "#" {
                    "#".to_string()
                } else if dr == 1 {
                    format!("{a}:#")
                } else {
                    format!("{a}:#:T")
                };
                (a.clone(), v)
            })
            .collect();
        m.embedding = Some(Embedding { map });
        let mut b = Builder {
            src,
            layout,
            class,
            m,
            taken: BTreeSet::new(),
            loops: Vec::new(),
            applied: BTreeMap::new(),
            stuck: BTreeSet::new(),
        };
        b.define_cell_transforms()?;
        Ok(b)
    }

    fn k(&self) -> usize {
        self.src.tapes
    }

    fn stay(&self) -> Vec<Move> {
        vec![Move::S; self.k()]
    }

    fn state(&mut self, base: String) -> String {
        let s = fresh_state(&self.taken, &base);
        self.taken.insert(s.clone());
        s
    }

    fn add(&mut self, q: &str, o: &str, next: Control, moves: Vec<Move>, t: &str) -> Result<(), MachineError> {
        self.m.add_transition(q, o, next, moves, t)
    }

    fn define_cell_transforms(&mut self) -> Result<(), MachineError> {
        let l = &self.layout;
        let (iq, ic, ir) = (Matrix::identity(l.dq), Matrix::identity(l.dc), Matrix::identity(l.dr));
        let read = (0..l.dc)
            .map(|c| (Outcome::new(self.class.symbol(c)), l.local(&iq, &projector(l.dc, c), &ir)))
            .collect();
        self.m.define("Read", TransformExpr::Observable(read))?;
        if l.dr == 2 {
            let blank = projector(l.dc, 0);
            let rest = ic.sub(&blank)?;
            self.m.define(
                "C#",
                TransformExpr::Observable(vec![
                    (Outcome::blank(), l.local(&iq, &blank, &ir)),
                    (Outcome::non_blank(), l.local(&iq, &rest, &ir)),
                ]),
            )?;
            let (p, n) = plus_minus(2, 0, 1);
            self.m.define(
                "Y",
                TransformExpr::Observable(vec![
                    (Outcome::top(), l.local(&iq, &ic, &p)),
                    (Outcome::bottom(), l.local(&iq, &ic, &n)),
                ]),
            )?;
            self.m.define(
                "A",
                TransformExpr::Observable(vec![
                    (Outcome::top(), l.local(&iq, &ic, &projector(2, 0))),
                    (Outcome::bottom(), l.local(&iq, &ic, &projector(2, 1))),
                ]),
            )?;
        }
        Ok(())
    }

    /// Class reset for a cell whose class register holds `c`.
    fn reset_transform(&mut self, c: usize) -> Result<String, MachineError> {
        let l = &self.layout;
        let sym = self.class.symbol(c).to_string();
        let (iq, ic, ir) = (Matrix::identity(l.dq), Matrix::identity(l.dc), Matrix::identity(l.dr));
        if l.dr == 1 {
            let name = format!("X[{sym}]");
            if self.m.transform(&name).is_none() {
                let mut swap = ic.clone();
                swap[(0, 0)] = Complex64::default();
                swap[(c, c)] = Complex64::default();
                swap[(0, c)] = C1;
                swap[(c, 0)] = C1;
                self.m.define(&name, TransformExpr::Unitary(l.local(&iq, &swap, &ir)))?;
            }
            return Ok(name);
        }
        let name = format!("Z[{sym}]");
        if self.m.transform(&name).is_none() {
            let (p, n) = plus_minus(l.dc, c, 0);
            let mut branches = vec![
                (Outcome::top(), l.local(&iq, &p, &ir)),
                (Outcome::bottom(), l.local(&iq, &n, &ir)),
            ];
            let rest = ic.sub(&projector(l.dc, c))?.sub(&projector(l.dc, 0))?;
            if !rest.is_zero(0.0) {
                branches.push((Outcome::new("x"), l.local(&iq, &rest, &ir)));
            }
            self.m.define(&name, TransformExpr::Observable(branches))?;
        }
        Ok(name)
    }

    /// Compiled form of source transform `name`: `U[name]` (pairs) or
    /// `R[name]` (triples).
    fn applied_transform(&mut self, name: &str) -> Result<String, MachineError> {
        if let Some(n) = self.applied.get(name) {
            return Ok(n.clone());
        }
        let t = self
            .src
            .transform(name)
            .ok_or_else(|| MachineError::UnknownTransform(name.into()))?;
        let k = self.k();
        let dil = dilate_admissible(&t.full, &self.class)?;
        let compiled = if self.layout.dr == 1 {
            let n = format!("U[{name}]");
            let v = self.layout.interleave(&dil.v, k);
            self.m.define(&n, TransformExpr::Unitary(v))?;
            n
        } else {
            let n = format!("R[{name}]");
            let r = reflection_measurement(&dil.v, k)?;
            let top = self.layout.interleave(&r.p_top, k);
            let bottom = self.layout.interleave(&r.p_bottom, k);
            self.m
                .define(&n, TransformExpr::Observable(vec![(Outcome::top(), top), (Outcome::bottom(), bottom)]))?;
            if self.m.transform("L").is_none() {
                let l = r.ancilla_measurement()?;
                let ops = l
                    .branches()
                    .iter()
                    .map(|(o, op)| (o.clone(), self.layout.interleave(op, k)))
                    .collect();
                self.m.define("L", TransformExpr::Observable(ops))?;
            }
            n
        };
        self.applied.insert(name.into(), compiled.clone());
        Ok(compiled)
    }

    /// Action that starts simulating source transition `δ(q, c)`, or keeps
    /// going after it when `q` halts or `δ(q, c)` is undefined.
    fn enter(&mut self, q: &Control, c: &str) -> Result<Action, MachineError> {
        let Control::State(qn) = q else {
            return Ok(Action {
                next: q.clone(),
                moves: self.stay(),
                transform: "-".into(),
            });
        };
        let Some(a) = self.src.transition(qn, c).cloned() else {
            let s = self.state(format!("{qn}|{c}|undefined"));
            self.stuck.insert(s.clone());
            return Ok(Action {
                next: Control::State(s),
                moves: self.stay(),
                transform: "-".into(),
            });
        };
        let t = self.applied_transform(&a.transform)?;
        let suffix = if self.layout.dr == 1 { "U" } else { "R" };
        Ok(Action {
            next: Control::State(format!("{qn}|{c}|{suffix}")),
            moves: a.moves,
            transform: t,
        })
    }

    fn add_action(&mut self, q: &str, o: &str, a: Action) -> Result<(), MachineError> {
        self.add(q, o, a.next, a.moves, &a.transform)
    }

    /// States for source transition `δ(q, c)`, entered through `enter`.
    fn transition(&mut self, q: &str, c: &str, action: &Action) -> Result<(), MachineError> {
        let t = self.applied_transform(&action.transform)?;
        let src_t = self.src.transform(&action.transform).expect("checked").full.clone();
        let read = if self.layout.dr == 1 {
            let u = format!("{q}|{c}|U");
            self.taken.insert(u.clone());
            let read = self.state(format!("{q}|{c}|O"));
            self.add(&u, "_", Control::State(read.clone()), self.stay(), "Read")?;
            read
        } else {
            let r = format!("{q}|{c}|R");
            self.taken.insert(r.clone());
            let l = self.state(format!("{q}|{c}|L"));
            let read = self.state(format!("{q}|{c}|O"));
            for o in ["T", "F"] {
                self.add(&r, o, Control::State(l.clone()), self.stay(), "L")?;
            }
            self.add(&l, "T", Control::State(r.clone()), self.stay(), &t)?;
            self.add(&l, "F", Control::State(read.clone()), self.stay(), "Read")?;
            self.loops.push(RusLoop {
                head: r,
                body: vec![l],
            });
            read
        };
        for (o, op) in src_t.branches() {
            if op.is_zero(0.0) {
                continue;
            }
            let ci = self.class.digit(o.as_str())?;
            let prefix = format!("{q}|{c}|{o}");
            let mut at = (read.clone(), o.as_str().to_string());
            if self.layout.dr == 2 {
                let ya = self.state(format!("{prefix}|a"));
                let yb = self.state(format!("{prefix}|b"));
                self.add(&at.0, &at.1, Control::State(ya.clone()), self.stay(), "Y")?;
                for x in ["T", "F"] {
                    self.add(&ya, x, Control::State(yb.clone()), self.stay(), "A")?;
                }
                self.add(&yb, "F", Control::State(ya.clone()), self.stay(), "Y")?;
                self.loops.push(RusLoop {
                    head: ya,
                    body: vec![yb.clone()],
                });
                at = (yb, "T".into());
            }
            if ci != 0 {
                let z = self.reset_transform(ci)?;
                let za = self.state(format!("{prefix}|z"));
                self.add(&at.0, &at.1, Control::State(za.clone()), self.stay(), &z)?;
                if self.layout.dr == 1 {
                    at = (za, "_".into());
                } else {
                    let zb = self.state(format!("{prefix}|y"));
                    for x in ["T", "F"] {
                        self.add(&za, x, Control::State(zb.clone()), self.stay(), "C#")?;
                    }
                    self.add(&zb, "!#", Control::State(za.clone()), self.stay(), &z)?;
                    self.loops.push(RusLoop {
                        head: za,
                        body: vec![zb.clone()],
                    });
                    at = (zb, "#".into());
                }
            }
            let next = self.enter(&action.next, o.as_str())?;
            self.add_action(&at.0, &at.1, next)?;
        }
        Ok(())
    }

    fn build(mut self) -> Result<CompiledMqtm, MachineError> {
        let rows: Vec<((String, String), Action)> =
            self.src.delta.iter().map(|(k, a)| (k.clone(), a.clone())).collect();
        self.taken.insert(self.src.start.clone());
        for ((q, c), a) in &rows {
            self.transition(q, c, a)?;
        }
        let start = Control::State(self.src.start.clone());
        let first = self.enter(&start, "#")?;
        let s = self.src.start.clone();
        self.add_action(&s, "#", first)?;
        self.m.close_calphabet();
        Ok(CompiledMqtm {
            machine: self.m,
            loops: self.loops,
            class_alphabet: self.class,
        })
    }
}

/// MQTM simulating a CQTM. Every transform in the result is a projective
/// measurement.
pub fn compile_to_mqtm(src: &MachineDescription) -> Result<CompiledMqtm, MachineError> {
    Builder::new(src, 2)?.build()
}

/// Intermediate CQTM over `data:class` pairs that applies each dilation
/// unitary directly and then reads and resets the class register. It uses
/// only unitaries and projective measurements.
pub fn compile_to_pair_cqtm(src: &MachineDescription) -> Result<CompiledMqtm, MachineError> {
    Builder::new(src, 1)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library;
    use crate::machine::validate_machine;

    #[test]
    fn palindrome0_compiles_to_valid_machines() {
        let src = library::palindrome0().unwrap();
        let c = compile_to_mqtm(&src).unwrap();
        validate_machine(&c.machine).unwrap_or_else(|e| panic!("{e:?}"));
        assert_eq!(c.machine.d(), 2 * c.class_alphabet.len() * 2);
        assert!(c.machine.transforms().all(|t| t.base.is_projective(1e-9)));
        let p = compile_to_pair_cqtm(&src).unwrap();
        validate_machine(&p.machine).unwrap_or_else(|e| panic!("{e:?}"));
    }

    #[test]
    fn blank_triple_is_named_blank() {
        let c = compile_to_mqtm(&library::palindrome0().unwrap()).unwrap();
        assert_eq!(c.machine.qalphabet.symbol(0), "#");
        assert_eq!(c.machine.embedding.unwrap().map["0"], "0:#:T");
    }
}
