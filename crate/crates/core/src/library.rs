//! Reference machines built in code. The shipped fixture files describe the
//! same machines and are checked against these builders in the tests.

use crate::machine::{Control, Kind, MachineDescription, MachineError, Move, TransformExpr};
use crate::compile::circuit::lift_qubit_operator;
use crate::quantum::{Alphabet, Complex64, Matrix, Outcome, C1};

fn moves(s: &str) -> Vec<Move> {
    s.chars().map(|c| Move::parse(c).expect("direction letter")).collect()
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Quantum palindrome recognizer over Σ_Q = {#, 0, 1}.
pub fn palindrome() -> Result<MachineDescription, MachineError> {
    let mut m = MachineDescription::new(
        "palindrome",
        Kind::Cqtm,
        1,
        Alphabet::new(["#", "0", "1"])?,
        strings(&["#", "!#", "0", "1", "_"]),
    )?;
    m.define("T#", TransformExpr::Test("#".into()))?;
    m.define("Std", TransformExpr::Std)?;
    m.define("P[0,#]", TransformExpr::Perm("0".into(), "#".into()))?;
    m.define("P[1,#]", TransformExpr::Perm("1".into(), "#".into()))?;
    let rows: [(&str, &str, &str, &str, &str); 19] = [
        ("s", "#", "q", "R", "Std"),
        ("q", "#", "yes", "S", "-"),
        ("q", "0", "q0", "S", "P[0,#]"),
        ("q", "1", "q1", "S", "P[1,#]"),
        ("q0", "_", "q0", "R", "T#"),
        ("q0", "!#", "q0", "R", "T#"),
        ("q0", "#", "q0'", "L", "Std"),
        ("q1", "_", "q1", "R", "T#"),
        ("q1", "!#", "q1", "R", "T#"),
        ("q1", "#", "q1'", "L", "Std"),
        ("q0'", "#", "yes", "S", "-"),
        ("q0'", "0", "q~", "S", "P[0,#]"),
        ("q0'", "1", "no", "S", "-"),
        ("q1'", "#", "yes", "S", "-"),
        ("q1'", "0", "no", "S", "-"),
        ("q1'", "1", "q~", "S", "P[1,#]"),
        ("q~", "_", "q~", "L", "T#"),
        ("q~", "!#", "q~", "L", "T#"),
        ("q~", "#", "q", "R", "Std"),
    ];
    for (q, t, p, d, a) in rows {
        m.add_transition(q, t, Control::parse(p), moves(d), a)?;
    }
    Ok(m)
}

/// The palindrome recognizer cut down to Σ_Q = {#, 0}.
pub fn palindrome0() -> Result<MachineDescription, MachineError> {
    let mut m = MachineDescription::new(
        "palindrome0",
        Kind::Cqtm,
        1,
        Alphabet::new(["#", "0"])?,
        strings(&["#", "!#", "0", "_"]),
    )?;
    m.define("T#", TransformExpr::Test("#".into()))?;
    m.define("Std", TransformExpr::Std)?;
    m.define("P[0,#]", TransformExpr::Perm("0".into(), "#".into()))?;
    let rows: [(&str, &str, &str, &str, &str); 10] = [
        ("s", "#", "q", "R", "Std"),
        ("q", "#", "yes", "S", "-"),
        ("q", "0", "q0", "S", "P[0,#]"),
        ("q0", "_", "q0", "R", "T#"),
        ("q0", "!#", "q0", "R", "T#"),
        ("q0", "#", "q0'", "L", "Std"),
        ("q0'", "#", "yes", "S", "-"),
        ("q0'", "0", "q~", "S", "P[0,#]"),
        ("q~", "_", "q~", "L", "T#"),
        ("q~", "!#", "q~", "L", "T#"),
    ];
    for (q, t, p, d, a) in rows {
        m.add_transition(q, t, Control::parse(p), moves(d), a)?;
    }
    m.add_transition("q~", "#", Control::parse("q"), moves("R"), "Std")?;
    Ok(m)
}

/// Two-tape blank insertion after the first input cell.
pub fn blank_insertion() -> Result<MachineDescription, MachineError> {
    let mut m = MachineDescription::new(
        "blank_insertion",
        Kind::Cqtm,
        2,
        Alphabet::new(["#", "a", "b"])?,
        strings(&["#", "!#", "_"]),
    )?;
    m.define("T#", TransformExpr::Test("#".into()))?;
    m.define("T#2", TransformExpr::Place("T#".into(), vec![1]))?;
    m.define("Swap", TransformExpr::Swap)?;
    m.add_transition("s", "#", Control::parse("q0"), moves("RS"), "Swap")?;
    m.add_transition("q0", "_", Control::parse("q1"), moves("LS"), "Swap")?;
    m.add_transition("q1", "_", Control::Halt, moves("LS"), "-")?;
    Ok(m)
}

/// The entangling two-tape unitary `V` over {#, 0}, rows normalized by 1/√2.
pub fn separation_unitary() -> Matrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Matrix::from_real(&[
        &[h, h, 0.0, 0.0],
        &[0.0, 0.0, h, h],
        &[0.0, 0.0, h, -h],
        &[h, -h, 0.0, 0.0],
    ])
}

/// One transition that leaves the two pointed cells entangled.
pub fn separation() -> Result<MachineDescription, MachineError> {
    let mut m = MachineDescription::new(
        "separation",
        Kind::Cqtm,
        2,
        Alphabet::new(["#", "0"])?,
        strings(&["_", "#", "!#"]),
    )?;
    m.define("T#", TransformExpr::Test("#".into()))?;
    m.define("T#2", TransformExpr::Place("T#".into(), vec![1]))?;
    m.define("V", TransformExpr::Unitary(separation_unitary()))?;
    m.add_transition("s", "#", Control::Halt, moves("RS"), "V")?;
    Ok(m)
}

/// Three tapes: the first input cell travels to tape 2, then tape 3, then
/// back to tape 1 one cell to the left, leaving a blank behind.
pub fn three_tape() -> Result<MachineDescription, MachineError> {
    let mut m = MachineDescription::new(
        "three_tape",
        Kind::Cqtm,
        3,
        Alphabet::new(["#", "a", "b"])?,
        strings(&["#", "!#", "_"]),
    )?;
    m.define("T#", TransformExpr::Test("#".into()))?;
    m.define("T#2", TransformExpr::Place("T#".into(), vec![1]))?;
    m.define("T#3", TransformExpr::Place("T#".into(), vec![2]))?;
    m.define("Swap", TransformExpr::Swap)?;
    m.define("S12", TransformExpr::Composite(strings(&["Swap", "-"])))?;
    m.define("S23", TransformExpr::Composite(strings(&["-", "Swap"])))?;
    m.define("S13", TransformExpr::Place("Swap".into(), vec![0, 2]))?;
    m.add_transition("s", "#", Control::parse("q1"), moves("RSS"), "S12")?;
    m.add_transition("q1", "_", Control::parse("q2"), moves("SSS"), "S23")?;
    m.add_transition("q2", "_", Control::Halt, moves("LSS"), "S13")?;
    Ok(m)
}

/// Projectors of a Pauli-product observable on `{#,0,1}^k`: the ±1
/// eigenspaces on the qubit words, with every word containing `#` put in
/// the +1 projector. Outcomes are `1` and `-1`.
pub fn pauli_observable(paulis: &[&Matrix]) -> Vec<(Outcome, Matrix)> {
    let op = paulis[1..].iter().fold(paulis[0].clone(), |acc, p| acc.kron(p));
    let n = op.rows();
    let plus = Matrix::identity(n).add(&op).expect("square").scale(C1 * 0.5);
    let plus = lift_qubit_operator(&plus).expect("qubit operator");
    let minus = Matrix::identity(plus.rows()).sub(&plus).expect("square");
    vec![(Outcome::new("1"), plus), (Outcome::new("-1"), minus)]
}

fn sign(o: &str) -> char {
    if o == "1" {
        '+'
    } else {
        '-'
    }
}

/// Two-tape MQTM applying H to a one-qubit input on tape 1 with projective
/// measurements only. Tape 2's cell is prepared in `|0⟩` by retrying
/// `O[#,0]` then Std, `H|φ⟩` is moved to tape 2 by a generalized state
/// transfer (`X` on 2, `X⊗Z`, `Z` on 1) and back to tape 1 by a plain one
/// (`X` on 1, `Z⊗Z`, `X` on 2). The Pauli frame `X^x Z^z` left by the
/// outcomes is tracked in the control states. A nontrivial frame `P` is
/// removed by measuring `P⊗Z` and then `X` on the tape-2 cell, which sits in
/// an `X` eigenstate: a flipped `X` outcome means `P` was applied, an
/// unchanged one means nothing happened and the pair is repeated.
pub fn hadamard() -> Result<MachineDescription, MachineError> {
    let mut m = MachineDescription::new(
        "hadamard",
        Kind::Mqtm,
        2,
        Alphabet::new(["#", "0", "1"])?,
        strings(&["#", "!#", "-1", "0", "1", "T", "F", "_"]),
    )?;
    let x = Matrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]);
    let z = Matrix::from_real(&[&[1.0, 0.0], &[0.0, -1.0]]);
    let y = x.mul(&z).expect("2x2").scale(Complex64::i());
    m.define("T#", TransformExpr::Test("#".into()))?;
    m.define("T#2", TransformExpr::Place("T#".into(), vec![1]))?;
    m.define("Std", TransformExpr::Std)?;
    m.define("O[#,0]", TransformExpr::Diag("#".into(), "0".into()))?;
    m.define("OX", TransformExpr::Observable(pauli_observable(&[&x])))?;
    m.define("OZ", TransformExpr::Observable(pauli_observable(&[&z])))?;
    m.define("OXZ", TransformExpr::Observable(pauli_observable(&[&x, &z])))?;
    m.define("OZZ", TransformExpr::Observable(pauli_observable(&[&z, &z])))?;
    m.define("OYZ", TransformExpr::Observable(pauli_observable(&[&y, &z])))?;
    for (name, parts) in [
        ("Std2", ["-", "Std"]),
        ("O[#,0]2", ["-", "O[#,0]"]),
        ("OX1", ["OX", "-"]),
        ("OX2", ["-", "OX"]),
        ("OZ1", ["OZ", "-"]),
    ] {
        m.define(name, TransformExpr::Composite(strings(&parts)))?;
    }
    let ss = moves("SS");
    let pm = ["1", "-1"];
    m.add_transition("s", "#", Control::parse("s'"), moves("RS"), "O[#,0]2")?;
    for o in ["T", "F"] {
        m.add_transition("s'", o, Control::parse("q'"), ss.clone(), "Std2")?;
    }
    m.add_transition("q'", "#", Control::parse("s'"), ss.clone(), "O[#,0]2")?;
    m.add_transition("q'", "0", Control::parse("q''"), ss.clone(), "OX2")?;
    // frame bits are 0/1, outcome signs are + / -
    for a in pm {
        let q1 = format!("q1({})", sign(a));
        m.add_transition("q''", a, Control::parse(&q1), ss.clone(), "OXZ")?;
        for e in pm {
            let fx = u8::from(e == "-1");
            let q2 = format!("q2({fx},{})", sign(a));
            m.add_transition(&q1, e, Control::parse(&q2), ss.clone(), "OZ1")?;
            for f in pm {
                let fz = u8::from((a == "-1") != (f == "-1"));
                let q3 = format!("q3({fx},{fz})");
                if m.transition(&q2, f).is_none() {
                    m.add_transition(&q2, f, Control::parse(&q3), ss.clone(), "OX1")?;
                }
            }
        }
    }
    for fx in 0..2u8 {
        for fz in 0..2u8 {
            let q3 = format!("q3({fx},{fz})");
            for g in pm {
                let q4 = format!("q4({fx},{fz},{})", sign(g));
                m.add_transition(&q3, g, Control::parse(&q4), ss.clone(), "OZZ")?;
                for h in pm {
                    let gx = fx ^ u8::from(h == "-1");
                    let q5 = format!("q5({gx},{fz},{})", sign(g));
                    if m.transition(&q4, h).is_some() {
                        continue;
                    }
                    m.add_transition(&q4, h, Control::parse(&q5), ss.clone(), "OX2")?;
                    for k in pm {
                        let gz = fz ^ u8::from((g == "-1") != (k == "-1"));
                        if m.transition(&q5, k).is_some() {
                            continue;
                        }
                        let fix = match (gx, gz) {
                            (0, 0) => {
                                m.add_transition(&q5, k, Control::Halt, ss.clone(), "-")?;
                                continue;
                            }
                            (1, 0) => "OXZ",
                            (0, 1) => "OZZ",
                            _ => "OYZ",
                        };
                        let c = format!("c({fix},{})", sign(k));
                        m.add_transition(&q5, k, Control::parse(&c), ss.clone(), fix)?;
                        let d = format!("d({fix},{})", sign(k));
                        for r in pm {
                            if m.transition(&c, r).is_none() {
                                m.add_transition(&c, r, Control::parse(&d), ss.clone(), "OX2")?;
                            }
                        }
                        if m.transition(&d, k).is_none() {
                            m.add_transition(&d, k, Control::parse(&c), ss.clone(), fix)?;
                            let flipped = if k == "1" { "-1" } else { "1" };
                            m.add_transition(&d, flipped, Control::Halt, ss.clone(), "-")?;
                        }
                    }
                }
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::validate_machine;

    #[test]
    fn builders_validate() {
        for m in [
            palindrome().unwrap(),
            palindrome0().unwrap(),
            blank_insertion().unwrap(),
            separation().unwrap(),
            three_tape().unwrap(),
            hadamard().unwrap(),
        ] {
            validate_machine(&m).unwrap_or_else(|e| panic!("{}: {:?}", m.name, e));
        }
    }

    #[test]
    fn palindrome_has_seven_states() {
        assert_eq!(palindrome().unwrap().states().len(), 7);
    }

    #[test]
    fn separation_unitary_is_unitary() {
        assert!(separation_unitary().is_unitary(1e-12));
    }
}
