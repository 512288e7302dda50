//! Measurement patterns to 2-tape CQTMs, and a direct interpreter used as
//! the reference semantics.
//!
//! Qubits are laid out on tape-1 cells `1..=|V|`, inputs first. Auxiliary
//! qubits start as `|#⟩` and are rotated to `|+⟩` by a unitary swapping the
//! two. Entangling shuttles one qubit to tape 2. A measured qubit is left in
//! a known state and rotated back to `|#⟩`. Measurement outcomes are kept in
//! the control state, so every signal history has its own states.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use crate::machine::{Control, Kind, MachineDescription, MachineError, Move, TransformExpr};
use crate::quantum::{Alphabet, Matrix, Outcome, StateVector, C0, C1, PRUNE_EPS};

use super::circuit::lift_qubit_operator;

#[derive(Clone, Debug, PartialEq)]
pub enum PatternCommand {
    Entangle(usize, usize),
    /// Measures in the basis `(|0⟩ ± e^{iα}|1⟩)/√2`; `+` is signal 0.
    Measure(usize, f64),
    /// Applied when the XOR of the listed signals is 1.
    CorrectX(usize, Vec<usize>),
    CorrectZ(usize, Vec<usize>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pattern {
    pub vertices: Vec<usize>,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    pub commands: Vec<PatternCommand>,
}

#[derive(Clone, Debug)]
pub struct PatternBranch {
    /// Signals in measurement order.
    pub signals: Vec<(usize, u8)>,
    pub probability: f64,
    pub output: StateVector,
}

fn bad(msg: String) -> MachineError {
    MachineError::Invalid(msg)
}

impl Pattern {
    /// Pattern size: qubits plus commands.
    pub fn size(&self) -> usize {
        self.vertices.len() + self.commands.len()
    }

    /// Qubits in tape order: inputs, then the rest of `V` in listed order.
    pub fn layout(&self) -> Vec<usize> {
        let mut v = self.inputs.clone();
        v.extend(self.vertices.iter().filter(|q| !self.inputs.contains(q)));
        v
    }

    pub fn validate(&self) -> Result<(), MachineError> {
        let vs: BTreeSet<usize> = self.vertices.iter().copied().collect();
        if vs.len() != self.vertices.len() {
            return Err(bad("pattern: V lists a qubit twice".into()));
        }
        for (set, name) in [(&self.inputs, "I"), (&self.outputs, "O")] {
            let s: BTreeSet<usize> = set.iter().copied().collect();
            if s.len() != set.len() || !s.is_subset(&vs) {
                return Err(bad(format!("pattern: {name} must be a set of qubits of V")));
            }
        }
        let mut measured = BTreeSet::new();
        let live = |q: usize, measured: &BTreeSet<usize>, i: usize| {
            if !vs.contains(&q) {
                Err(bad(format!("pattern command {i}: qubit {q} not in V")))
            } else if measured.contains(&q) {
                Err(bad(format!("pattern command {i}: qubit {q} already measured")))
            } else {
                Ok(())
            }
        };
        for (i, c) in self.commands.iter().enumerate() {
            match c {
                PatternCommand::Entangle(a, b) => {
                    live(*a, &measured, i)?;
                    live(*b, &measured, i)?;
                    if a == b {
                        return Err(bad(format!("pattern command {i}: E on a single qubit")));
                    }
                }
                PatternCommand::Measure(q, alpha) => {
                    live(*q, &measured, i)?;
                    if !alpha.is_finite() {
                        return Err(bad(format!("pattern command {i}: angle is not finite")));
                    }
                    if self.outputs.contains(q) {
                        return Err(bad(format!("pattern command {i}: output qubit {q} measured")));
                    }
                    measured.insert(*q);
                }
                PatternCommand::CorrectX(q, sig) | PatternCommand::CorrectZ(q, sig) => {
                    live(*q, &measured, i)?;
                    if let Some(s) = sig.iter().find(|s| !measured.contains(s)) {
                        return Err(bad(format!("pattern command {i}: signal s{s} is not an earlier measurement")));
                    }
                }
            }
        }
        let rest: BTreeSet<usize> = vs.difference(&self.outputs.iter().copied().collect()).copied().collect();
        if rest != measured {
            return Err(bad("pattern: every non-output qubit must be measured".into()));
        }
        Ok(())
    }
}

fn basis_pm(alpha: f64, s: u8) -> [Complex64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let sign = if s == 0 { 1.0 } else { -1.0 };
    [C1 * h, Complex64::from_polar(sign * h, alpha)]
}

fn parity(signals: &[(usize, u8)], of: &[usize]) -> u8 {
    of.iter()
        .map(|q| signals.iter().find(|(m, _)| m == q).map_or(0, |(_, s)| *s))
        .fold(0, |a, b| a ^ b)
}

struct Live {
    labels: Vec<usize>,
    amps: Vec<Complex64>,
}

impl Live {
    fn pos(&self, q: usize) -> usize {
        self.labels.iter().position(|&l| l == q).expect("live qubit")
    }

    fn bit(&self, idx: usize, p: usize) -> usize {
        (idx >> (self.labels.len() - 1 - p)) & 1
    }

    fn one_qubit(&mut self, q: usize, u: [[Complex64; 2]; 2]) {
        let p = self.pos(q);
        let stride = 1 << (self.labels.len() - 1 - p);
        for i in 0..self.amps.len() {
            if i & stride == 0 {
                let (a, b) = (self.amps[i], self.amps[i | stride]);
                self.amps[i] = u[0][0] * a + u[0][1] * b;
                self.amps[i | stride] = u[1][0] * a + u[1][1] * b;
            }
        }
    }

    fn cz(&mut self, a: usize, b: usize) {
        let (pa, pb) = (self.pos(a), self.pos(b));
        for i in 0..self.amps.len() {
            if self.bit(i, pa) == 1 && self.bit(i, pb) == 1 {
                self.amps[i] = -self.amps[i];
            }
        }
    }

    /// Contracts qubit `q` with `⟨φ|`, returning the unnormalized rest.
    fn project_out(&self, q: usize, phi: [Complex64; 2]) -> Live {
        let p = self.pos(q);
        let n = self.labels.len();
        let mut amps = vec![C0; 1 << (n - 1)];
        for (i, a) in self.amps.iter().enumerate() {
            let b = self.bit(i, p);
            let hi = i >> (n - p);
            let lo = i & ((1 << (n - 1 - p)) - 1);
            amps[(hi << (n - 1 - p)) | lo] += phi[b].conj() * a;
        }
        let mut labels = self.labels.clone();
        labels.remove(p);
        Live { labels, amps }
    }
}

/// Runs the pattern on `input` (one qubit per element of `I`, in order) and
/// returns every branch with nonzero probability.
pub fn interpret(p: &Pattern, input: &StateVector) -> Result<Vec<PatternBranch>, MachineError> {
    p.validate()?;
    if input.d() != 2 || input.cells() != p.inputs.len() {
        return Err(bad(format!("pattern input must be {} qubits", p.inputs.len())));
    }
    let layout = p.layout();
    let plus = StateVector::normalize(2, 1, vec![C1, C1])?;
    let mut psi = input.clone();
    for _ in p.inputs.len()..layout.len() {
        psi = psi.tensor(&plus)?;
    }
    let mut branches = vec![(
        Vec::new(),
        1.0,
        Live {
            labels: layout,
            amps: psi.to_dense()?,
        },
    )];
    let x = [[C0, C1], [C1, C0]];
    let z = [[C1, C0], [C0, -C1]];
    for c in &p.commands {
        let mut next = Vec::with_capacity(branches.len());
        for (signals, prob, mut live) in branches {
            match c {
                PatternCommand::Entangle(a, b) => live.cz(*a, *b),
                PatternCommand::CorrectX(q, sig) if parity(&signals, sig) == 1 => live.one_qubit(*q, x),
                PatternCommand::CorrectZ(q, sig) if parity(&signals, sig) == 1 => live.one_qubit(*q, z),
                PatternCommand::CorrectX(..) | PatternCommand::CorrectZ(..) => {}
                PatternCommand::Measure(q, alpha) => {
                    for s in [0u8, 1] {
                        let mut rest = live.project_out(*q, basis_pm(*alpha, s));
                        let w: f64 = rest.amps.iter().map(|a| a.norm_sqr()).sum();
                        if w <= PRUNE_EPS {
                            continue;
                        }
                        let k = 1.0 / w.sqrt();
                        rest.amps.iter_mut().for_each(|a| *a *= k);
                        let mut sig = signals.clone();
                        sig.push((*q, s));
                        next.push((sig, prob * w, rest));
                    }
                    continue;
                }
            }
            next.push((signals, prob, live));
        }
        branches = next;
    }
    branches
        .into_iter()
        .map(|(signals, probability, live)| {
            let order: Vec<usize> = p.outputs.iter().map(|&q| live.pos(q)).collect();
            let out = StateVector::new(2, live.labels.len(), live.amps)?.permute_cells(&order);
            Ok(PatternBranch {
                signals,
                probability,
                output: out,
            })
        })
        .collect()
}

#[derive(Clone)]
struct Point {
    state: String,
    outcome: String,
    signals: Vec<(usize, u8)>,
}

/// All signal histories advance in lockstep; head positions are shared.
struct Frontier<'a> {
    m: &'a mut MachineDescription,
    points: Vec<Point>,
    heads: [i64; 2],
    counter: usize,
    steps: usize,
}

impl Frontier<'_> {
    fn emit(&mut self, moves: [Move; 2], t: impl Fn(&Point) -> String, outcomes: &[&str]) -> Result<(), MachineError> {
        for (h, mv) in self.heads.iter_mut().zip(&moves) {
            *h += mv.delta();
        }
        let mut next = Vec::new();
        for pt in std::mem::take(&mut self.points) {
            self.counter += 1;
            let s = format!("p{}", self.counter);
            self.m
                .add_transition(&pt.state, &pt.outcome, Control::State(s.clone()), moves.to_vec(), t(&pt))?;
            for o in outcomes {
                next.push(Point {
                    state: s.clone(),
                    outcome: o.to_string(),
                    signals: pt.signals.clone(),
                });
            }
        }
        self.points = next;
        self.steps += 1;
        Ok(())
    }

    fn goto(&mut self, target: [i64; 2]) -> Result<(), MachineError> {
        while self.heads != target {
            self.step_towards(target, |_| "-".into(), &["_"])?;
        }
        Ok(())
    }

    fn step_towards(
        &mut self,
        target: [i64; 2],
        t: impl Fn(&Point) -> String,
        outcomes: &[&str],
    ) -> Result<(), MachineError> {
        let mv = |d: i64| match d.signum() {
            1 => Move::R,
            -1 => Move::L,
            _ => Move::S,
        };
        self.emit([mv(target[0] - self.heads[0]), mv(target[1] - self.heads[1])], t, outcomes)
    }

    /// Goes to `target`, applying `t` on arrival (fused with the last move).
    fn goto_then(&mut self, target: [i64; 2], t: impl Fn(&Point) -> String, outcomes: &[&str]) -> Result<(), MachineError> {
        let far = |h: [i64; 2]| (0..2).any(|i| (target[i] - h[i]).abs() > 1);
        while far(self.heads) {
            self.step_towards(target, |_| "-".into(), &["_"])?;
        }
        self.step_towards(target, t, outcomes)
    }
}

fn init_unitary() -> Matrix {
    // |#⟩ ↔ |+⟩, |−⟩ fixed, basis (#, 0, 1).
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Matrix::from_real(&[&[0.0, h, h], &[h, 0.5, -0.5], &[h, -0.5, 0.5]])
}

/// Rotation exchanging `|#⟩` with `|φ⟩ ∈ span{|0⟩,|1⟩}` and fixing the
/// orthogonal qubit state.
fn erase_unitary(phi: [Complex64; 2]) -> Matrix {
    let blank = [C1, C0, C0];
    let v = [C0, phi[0], phi[1]];
    let perp = [C0, -phi[1].conj(), phi[0].conj()];
    Matrix::outer(&blank, &v)
        .add(&Matrix::outer(&v, &blank))
        .and_then(|m| m.add(&Matrix::outer(&perp, &perp)))
        .expect("3x3")
}

fn measure_projectors(alpha: f64) -> Vec<(Outcome, Matrix)> {
    let lift = |phi: [Complex64; 2]| {
        let v = [C0, phi[0], phi[1]];
        Matrix::outer(&v, &v)
    };
    let plus = lift(basis_pm(alpha, 0)).add(&Matrix::unit(3, 0, 0)).expect("3x3");
    vec![(Outcome::new("0"), plus), (Outcome::new("1"), lift(basis_pm(alpha, 1)))]
}

#[derive(Clone, Debug)]
pub struct CompiledPattern {
    pub machine: MachineDescription,
    /// Transitions on every branch.
    pub steps: usize,
}

/// Compiles a pattern to a 2-tape CQTM whose output on tape 1 is the output
/// qubits in the order of `O`.
pub fn compile_pattern(p: &Pattern) -> Result<CompiledPattern, MachineError> {
    p.validate()?;
    let mut m = MachineDescription::new(
        "pattern",
        Kind::Cqtm,
        2,
        Alphabet::new(["#", "0", "1"])?,
        ["#", "!#", "_", "0", "1"].iter().map(|s| s.to_string()).collect(),
    )?;
    m.define("T#", TransformExpr::Test("#".into()))?;
    m.define("T#2", TransformExpr::Place("T#".into(), vec![1]))?;
    m.define("Swap", TransformExpr::Swap)?;
    m.define("Init", TransformExpr::Unitary(init_unitary()))?;
    m.define("CZ", TransformExpr::Unitary(lift_qubit_operator(&super::circuit::standard_gates()["CZ"])?))?;
    for g in ["X", "Z"] {
        m.define(g, TransformExpr::Unitary(lift_qubit_operator(&super::circuit::standard_gates()[g])?))?;
    }
    for c in &p.commands {
        if let PatternCommand::Measure(q, alpha) = c {
            m.define(format!("M{q}"), TransformExpr::Observable(measure_projectors(*alpha)))?;
            for s in [0u8, 1] {
                m.define(format!("E{q}.{s}"), TransformExpr::Unitary(erase_unitary(basis_pm(*alpha, s))))?;
            }
        }
    }
    let layout = p.layout();
    let cell = |q: usize| 1 + layout.iter().position(|&l| l == q).expect("qubit in V") as i64;
    let mut f = Frontier {
        m: &mut m,
        points: vec![Point {
            state: "s".into(),
            outcome: "#".into(),
            signals: Vec::new(),
        }],
        heads: [0, 0],
        counter: 0,
        steps: 0,
    };
    for &q in &layout[p.inputs.len()..] {
        f.goto_then([cell(q), 0], |_| "Init".into(), &["_"])?;
    }
    for c in &p.commands {
        match c {
            PatternCommand::Entangle(a, b) => {
                f.goto_then([cell(*a), 0], |_| "Swap".into(), &["_"])?;
                f.goto_then([cell(*b), 0], |_| "CZ".into(), &["_"])?;
                f.goto_then([cell(*a), 0], |_| "Swap".into(), &["_"])?;
            }
            PatternCommand::Measure(q, _) => {
                f.goto_then([cell(*q), 0], |_| format!("M{q}"), &["0", "1"])?;
                for pt in &mut f.points {
                    let s = if pt.outcome == "0" { 0 } else { 1 };
                    pt.signals.push((*q, s));
                }
                f.emit([Move::S, Move::S], |pt| format!("E{q}.{}", pt.signals.last().expect("just measured").1), &["_"])?;
            }
            PatternCommand::CorrectX(q, sig) | PatternCommand::CorrectZ(q, sig) => {
                let gate = if matches!(c, PatternCommand::CorrectX(..)) { "X" } else { "Z" };
                f.goto_then(
                    [cell(*q), 0],
                    |pt| if parity(&pt.signals, sig) == 1 { gate.into() } else { "-".into() },
                    &["_"],
                )?;
            }
        }
    }
    // Gather the outputs on tape 2 in order, then lay them back on tape 1.
    for (k, &q) in p.outputs.iter().enumerate() {
        f.goto_then([cell(q), k as i64], |_| "Swap".into(), &["_"])?;
    }
    for k in 0..p.outputs.len() {
        f.goto_then([1 + k as i64, k as i64], |_| "Swap".into(), &["_"])?;
    }
    f.goto([0, 0])?;
    for pt in std::mem::take(&mut f.points) {
        f.m
            .add_transition(&pt.state, &pt.outcome, Control::Halt, vec![Move::S, Move::S], "-")?;
    }
    let steps = f.steps + 1;
    Ok(CompiledPattern { machine: m, steps })
}

/// Signals of a compiled-pattern run, read back from its outcome trace.
pub fn trace_signals(p: &Pattern, trace: &[Outcome]) -> Vec<(usize, u8)> {
    let measured: Vec<usize> = p
        .commands
        .iter()
        .filter_map(|c| match c {
            PatternCommand::Measure(q, _) => Some(*q),
            _ => None,
        })
        .collect();
    let bits = trace.iter().filter_map(|o| match o.as_str() {
        "0" => Some(0u8),
        "1" => Some(1u8),
        _ => None,
    });
    measured.into_iter().zip(bits).collect()
}

/// Index of each signal history, for grouping branches.
pub fn signal_key(signals: &[(usize, u8)]) -> BTreeMap<usize, u8> {
    signals.iter().copied().collect()
}
