//! Concrete circuits to `(w+1)`-tape CQTMs. Qubit `i` lives on tape-1 cell
//! `i + 1`; for each gate its qubits are swapped onto tapes `2..=a+1`, the
//! gate acts there, and they are swapped back. Head positions are known at
//! compile time, so the gate sequence is a straight line of control states.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::machine::{Control, Kind, MachineDescription, MachineError, Move, TransformExpr};
use crate::quantum::{embed_on_cells, Alphabet, Matrix, QuantumError, StateVector, C0, C1, COMPLETENESS_TOL};

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub name: String,
    pub qubits: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub qubits: usize,
    pub gates: Vec<Gate>,
    pub library: BTreeMap<String, Matrix>,
}

/// H, X, Z, S, T, CZ, CNOT.
pub fn standard_gates() -> BTreeMap<String, Matrix> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let t = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    let diag = |v: &[Complex64]| {
        let mut m = Matrix::zeros(v.len(), v.len());
        for (i, z) in v.iter().enumerate() {
            m[(i, i)] = *z;
        }
        m
    };
    let i = Complex64::i();
    BTreeMap::from([
        ("H".to_string(), Matrix::from_real(&[&[h, h], &[h, -h]])),
        ("X".to_string(), Matrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]])),
        ("Z".to_string(), diag(&[C1, -C1])),
        ("S".to_string(), diag(&[C1, i])),
        ("T".to_string(), diag(&[C1, t])),
        ("CZ".to_string(), diag(&[C1, C1, C1, -C1])),
        (
            "CNOT".to_string(),
            Matrix::from_real(&[
                &[1.0, 0.0, 0.0, 0.0],
                &[0.0, 1.0, 0.0, 0.0],
                &[0.0, 0.0, 0.0, 1.0],
                &[0.0, 0.0, 1.0, 0.0],
            ]),
        ),
    ])
}

fn qubit_arity(m: &Matrix) -> Option<usize> {
    let n = m.rows();
    (n.is_power_of_two() && n >= 2 && m.is_square()).then(|| n.trailing_zeros() as usize)
}

impl Circuit {
    pub fn new(qubits: usize) -> Self {
        Circuit {
            qubits,
            gates: Vec::new(),
            library: standard_gates(),
        }
    }

    pub fn push(&mut self, name: &str, qubits: &[usize]) -> &mut Self {
        self.gates.push(Gate {
            name: name.into(),
            qubits: qubits.to_vec(),
        });
        self
    }

    /// Largest gate arity.
    pub fn width(&self) -> usize {
        self.gates.iter().map(|g| g.qubits.len()).max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), MachineError> {
        let bad = |s: String| MachineError::Invalid(s);
        for (name, m) in &self.library {
            qubit_arity(m).ok_or_else(|| bad(format!("gate {name} is not a qubit operator")))?;
            if !m.is_unitary(COMPLETENESS_TOL) {
                return Err(bad(format!("gate {name} is not unitary")));
            }
        }
        for (i, g) in self.gates.iter().enumerate() {
            let m = self
                .library
                .get(&g.name)
                .ok_or_else(|| bad(format!("gate {i}: unknown gate {}", g.name)))?;
            if qubit_arity(m) != Some(g.qubits.len()) {
                return Err(bad(format!("gate {i}: {} takes {} qubits", g.name, qubit_arity(m).unwrap_or(0))));
            }
            for (j, &q) in g.qubits.iter().enumerate() {
                if q >= self.qubits {
                    return Err(bad(format!("gate {i}: qubit index {q} out of range 0..{}", self.qubits)));
                }
                if g.qubits[..j].contains(&q) {
                    return Err(bad(format!("gate {i}: qubit {q} repeated")));
                }
            }
        }
        Ok(())
    }

    /// Gate-by-gate matrix simulation on an `n`-qubit state.
    pub fn simulate(&self, psi: &StateVector) -> Result<StateVector, MachineError> {
        self.validate()?;
        if psi.d() != 2 || psi.cells() != self.qubits {
            return Err(MachineError::Invalid(format!("expected a {}-qubit state", self.qubits)));
        }
        let mut amps = psi.to_dense()?;
        for g in &self.gates {
            amps = embed_on_cells(&self.library[&g.name], 2, &g.qubits, self.qubits)?.apply(&amps);
        }
        Ok(StateVector::new(2, self.qubits, amps)?)
    }
}

/// `U` on `{0,1}^a` placed inside `{#,0,1}^a` (digits `#`=0, `0`=1, `1`=2),
/// identity on words containing `#`.
pub fn lift_qubit_operator(u: &Matrix) -> Result<Matrix, QuantumError> {
    let a = qubit_arity(u).ok_or_else(|| QuantumError::Shape("not a qubit operator".into()))?;
    let dim = 3usize.pow(a as u32);
    let to_trit = |mut b: usize| {
        let mut idx = 0;
        let mut place = 1;
        for _ in 0..a {
            idx += (b % 2 + 1) * place;
            b /= 2;
            place *= 3;
        }
        idx
    };
    let mut m = Matrix::identity(dim);
    let qubit_words: Vec<usize> = (0..1usize << a).map(to_trit).collect();
    for &r in &qubit_words {
        m[(r, r)] = C0;
    }
    for (i, &r) in qubit_words.iter().enumerate() {
        for (j, &c) in qubit_words.iter().enumerate() {
            m[(r, c)] = u[(i, j)];
        }
    }
    Ok(m)
}

/// Qubit state as a `{#,0,1}` register with the same cell order.
pub fn qubits_to_cells(psi: &StateVector) -> Result<StateVector, QuantumError> {
    psi.relabel(3, &[1, 2])
}

pub(crate) struct Line<'a> {
    pub m: &'a mut MachineDescription,
    pub state: String,
    pub outcome: String,
    pub heads: Vec<i64>,
    pub counter: usize,
    pub prefix: &'a str,
}

impl Line<'_> {
    fn fresh(&mut self) -> String {
        self.counter += 1;
        format!("{}{}", self.prefix, self.counter)
    }

    /// One transition from the current point: move by `moves`, apply `t`.
    pub fn emit(&mut self, moves: Vec<Move>, t: &str) -> Result<(), MachineError> {
        let next = self.fresh();
        for (h, mv) in self.heads.iter_mut().zip(&moves) {
            *h += mv.delta();
        }
        self.m
            .add_transition(&self.state, &self.outcome, Control::State(next.clone()), moves, t)?;
        self.state = next;
        self.outcome = "_".into();
        Ok(())
    }

    /// Walks each listed `(tape, pos)` head to its target, applying `t`
    /// together with the last move (or in place when already there).
    pub fn goto_then(&mut self, targets: &[(usize, i64)], t: &str) -> Result<(), MachineError> {
        loop {
            let mut moves = vec![Move::S; self.heads.len()];
            let mut remaining = 0;
            for &(tape, pos) in targets {
                let diff = pos - self.heads[tape];
                if diff != 0 {
                    moves[tape] = if diff > 0 { Move::R } else { Move::L };
                    remaining = remaining.max(diff.unsigned_abs());
                }
            }
            if remaining <= 1 {
                return self.emit(moves, t);
            }
            self.emit(moves, "-")?;
        }
    }

    pub fn finish(&mut self, next: Control) -> Result<(), MachineError> {
        let stay = vec![Move::S; self.heads.len()];
        self.m.add_transition(&self.state, &self.outcome, next, stay, "-")
    }
}

/// Compiles a circuit to a CQTM with one work tape per qubit of the widest
/// gate.
pub fn compile_circuit(c: &Circuit) -> Result<MachineDescription, MachineError> {
    c.validate()?;
    let w = c.width().max(1);
    let tapes = w + 1;
    let mut m = MachineDescription::new(
        "circuit",
        Kind::Cqtm,
        tapes,
        Alphabet::new(["#", "0", "1"])?,
        vec!["#".into(), "!#".into(), "_".into()],
    )?;
    m.define("T#", TransformExpr::Test("#".into()))?;
    m.define("Swap", TransformExpr::Swap)?;
    for t in 1..tapes {
        m.define(format!("T#{}", t + 1), TransformExpr::Place("T#".into(), vec![t]))?;
        m.define(format!("Swap1{}", t + 1), TransformExpr::Place("Swap".into(), vec![0, t]))?;
    }
    let mut placed = BTreeMap::new();
    for g in &c.gates {
        if placed.contains_key(&g.name) {
            continue;
        }
        let a = g.qubits.len();
        let base = format!("U[{}]", g.name);
        m.define(&base, TransformExpr::Unitary(lift_qubit_operator(&c.library[&g.name])?))?;
        let name = format!("U[{}]@work", g.name);
        m.define(&name, TransformExpr::Place(base, (1..=a).collect()))?;
        placed.insert(g.name.clone(), name);
    }
    let mut line = Line {
        m: &mut m,
        state: "s".into(),
        outcome: "#".into(),
        heads: vec![0; tapes],
        counter: 0,
        prefix: "g",
    };
    for g in &c.gates {
        for (j, &q) in g.qubits.iter().enumerate() {
            line.goto_then(&[(0, q as i64 + 1)], &format!("Swap1{}", j + 2))?;
        }
        line.emit(vec![Move::S; tapes], &placed[&g.name])?;
        for (j, &q) in g.qubits.iter().enumerate() {
            line.goto_then(&[(0, q as i64 + 1)], &format!("Swap1{}", j + 2))?;
        }
    }
    line.finish(Control::Halt)?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lifted_gate_is_unitary_and_fixes_blank_words() {
        let cz = &standard_gates()["CZ"];
        let l = lift_qubit_operator(cz).unwrap();
        assert!(l.is_unitary(1e-12));
        assert_eq!(l[(0, 0)], C1);
        // |11⟩ is digits (2,2) = index 8.
        assert_eq!(l[(8, 8)], -C1);
    }

    #[test]
    fn out_of_range_qubit_is_rejected() {
        let mut c = Circuit::new(2);
        c.push("CZ", &[0, 2]);
        assert!(compile_circuit(&c).unwrap_err().to_string().contains("out of range"));
    }
}
