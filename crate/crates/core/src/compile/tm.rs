use std::collections::{BTreeMap, BTreeSet};

use crate::machine::{Control, Kind, MachineDescription, MachineError, Move, TransformExpr, HALTING_NAMES};
use crate::quantum::Alphabet;

use super::{fresh_state, RusLoop};

/// Deterministic classical Turing machine over an alphabet containing `#`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalTM {
    pub name: String,
    pub alphabet: Alphabet,
    pub start: String,
    /// `(q, τ) ↦ (p, σ, D)`: write σ, then move.
    pub delta: BTreeMap<(String, String), (Control, String, Move)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TmVerdict {
    Accept,
    Reject,
    Output(Vec<String>),
    NonHalt,
    Undefined(String, String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TmRun {
    pub verdict: TmVerdict,
    pub steps: usize,
    /// Transitions that changed the scanned symbol.
    pub rewrites: usize,
}

impl ClassicalTM {
    pub fn new(name: impl Into<String>, alphabet: Alphabet) -> Result<Self, MachineError> {
        if !alphabet.contains("#") {
            return Err(MachineError::Invalid("TM alphabet must contain #".into()));
        }
        Ok(ClassicalTM {
            name: name.into(),
            alphabet,
            start: "s".into(),
            delta: BTreeMap::new(),
        })
    }

    pub fn add(&mut self, q: &str, tau: &str, p: &str, sigma: &str, d: Move) -> Result<(), MachineError> {
        if HALTING_NAMES.contains(&q) {
            return Err(MachineError::ReservedState(q.into()));
        }
        self.alphabet.digit(tau)?;
        self.alphabet.digit(sigma)?;
        if self
            .delta
            .insert((q.into(), tau.into()), (Control::parse(p), sigma.into(), d))
            .is_some()
        {
            return Err(MachineError::DuplicateTransition(q.into(), tau.into()));
        }
        Ok(())
    }

    pub fn states(&self) -> BTreeSet<String> {
        let mut k = BTreeSet::from([self.start.clone()]);
        for ((q, _), (p, _, _)) in &self.delta {
            k.insert(q.clone());
            if let Control::State(p) = p {
                k.insert(p.clone());
            }
        }
        k
    }

    /// Reference interpreter with the same start protocol as the quantum
    /// machines: input on cells `1..=n`, head on cell 0.
    pub fn run(&self, input: &[&str], max_steps: usize) -> TmRun {
        let mut tape: BTreeMap<i64, String> = input
            .iter()
            .enumerate()
            .map(|(i, s)| (i as i64 + 1, s.to_string()))
            .collect();
        let mut head = 0i64;
        let mut q = Control::State(self.start.clone());
        let mut steps = 0;
        let mut rewrites = 0;
        while let Control::State(name) = &q {
            if steps >= max_steps {
                return TmRun {
                    verdict: TmVerdict::NonHalt,
                    steps,
                    rewrites,
                };
            }
            let tau = tape.get(&head).cloned().unwrap_or_else(|| "#".into());
            let Some((p, sigma, d)) = self.delta.get(&(name.clone(), tau.clone())) else {
                return TmRun {
                    verdict: TmVerdict::Undefined(name.clone(), tau),
                    steps,
                    rewrites,
                };
            };
            if *sigma != tau {
                rewrites += 1;
            }
            if sigma == "#" {
                tape.remove(&head);
            } else {
                tape.insert(head, sigma.clone());
            }
            head += d.delta();
            q = p.clone();
            steps += 1;
        }
        let verdict = match q {
            Control::Accept => TmVerdict::Accept,
            Control::Reject => TmVerdict::Reject,
            _ => match (tape.keys().next(), tape.keys().next_back()) {
                (Some(&lo), Some(&hi)) => {
                    TmVerdict::Output((lo..=hi).map(|i| tape.get(&i).cloned().unwrap_or_else(|| "#".into())).collect())
                }
                _ => TmVerdict::Output(Vec::new()),
            },
        };
        TmRun {
            verdict,
            steps,
            rewrites,
        }
    }
}

fn outcome_alphabet(tm: &ClassicalTM, extra: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = tm.alphabet.symbols().to_vec();
    for e in extra {
        if !v.iter().any(|s| s == e) {
            v.push(e.to_string());
        }
    }
    v
}

/// One-tape CQTM: each transition becomes a permutation of the scanned
/// symbol followed by a move and a standard-basis read.
pub fn compile_tm_to_cqtm(tm: &ClassicalTM) -> Result<MachineDescription, MachineError> {
    let a = &tm.alphabet;
    let mut m = MachineDescription::new(
        format!("{}_cqtm", tm.name),
        Kind::Cqtm,
        1,
        a.clone(),
        outcome_alphabet(tm, &["!#", "_"]),
    )?;
    let taken = tm.states();
    let start = fresh_state(&taken, &format!("{}'", tm.start));
    m.start = start.clone();
    m.define("Std", TransformExpr::Std)?;
    m.define("T#", TransformExpr::Test("#".into()))?;
    m.add_transition(&start, "#", Control::State(tm.start.clone()), vec![Move::S], "Std")?;
    for ((q, tau), (p, sigma, d)) in &tm.delta {
        let name = format!("P[{tau},{sigma}]");
        if m.transform(&name).is_none() {
            m.define(&name, TransformExpr::Perm(tau.clone(), sigma.clone()))?;
        }
        let mid = fresh_state(&taken, &format!("{q}|{tau}"));
        m.add_transition(q, tau, Control::State(mid.clone()), vec![Move::S], &name)?;
        m.add_transition(&mid, "_", p.clone(), vec![*d], "Std")?;
    }
    Ok(m)
}

/// One-tape MQTM: each rewrite τ → σ is a diagonal measurement followed by
/// a standard-basis read, repeated until σ is read.
pub fn compile_tm_to_mqtm(tm: &ClassicalTM) -> Result<(MachineDescription, Vec<RusLoop>), MachineError> {
    let a = &tm.alphabet;
    let mut m = MachineDescription::new(
        format!("{}_mqtm", tm.name),
        Kind::Mqtm,
        1,
        a.clone(),
        outcome_alphabet(tm, &["!#", "T", "F"]),
    )?;
    let taken = tm.states();
    let start = fresh_state(&taken, &format!("{}'", tm.start));
    m.start = start.clone();
    m.define("Std", TransformExpr::Std)?;
    m.define("T#", TransformExpr::Test("#".into()))?;
    m.add_transition(&start, "#", Control::State(tm.start.clone()), vec![Move::S], "Std")?;
    let mut loops = Vec::new();
    for ((q, tau), (p, sigma, d)) in &tm.delta {
        if tau == sigma {
            m.add_transition(q, tau, p.clone(), vec![*d], "Std")?;
            continue;
        }
        let name = format!("O[{tau},{sigma}]");
        if m.transform(&name).is_none() {
            m.define(&name, TransformExpr::Diag(tau.clone(), sigma.clone()))?;
        }
        let diag = fresh_state(&taken, &format!("{q}|{tau}|{sigma}"));
        let read = fresh_state(&taken, &format!("{q}|{tau}|{sigma}'"));
        m.add_transition(q, tau, Control::State(diag.clone()), vec![Move::S], &name)?;
        for o in ["T", "F"] {
            m.add_transition(&diag, o, Control::State(read.clone()), vec![Move::S], "Std")?;
        }
        m.add_transition(&read, sigma, p.clone(), vec![*d], "Std")?;
        m.add_transition(&read, tau, Control::State(diag.clone()), vec![Move::S], &name)?;
        loops.push(RusLoop {
            head: diag,
            body: vec![read],
        });
    }
    Ok((m, loops))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn increment() -> ClassicalTM {
        let mut tm = ClassicalTM::new("inc", Alphabet::new(["#", "1"]).unwrap()).unwrap();
        tm.add("s", "#", "r", "#", Move::R).unwrap();
        tm.add("r", "1", "r", "1", Move::R).unwrap();
        tm.add("r", "#", "h", "1", Move::S).unwrap();
        tm
    }

    #[test]
    fn interpreter_appends() {
        let r = increment().run(&["1", "1"], 100);
        assert_eq!(r.verdict, TmVerdict::Output(vec!["1".into(); 3]));
        assert_eq!(r.steps, 4);
        assert_eq!(r.rewrites, 1);
    }

    #[test]
    fn compiled_machines_validate() {
        let c = compile_tm_to_cqtm(&increment()).unwrap();
        crate::machine::validate_machine(&c).unwrap();
        let (q, loops) = compile_tm_to_mqtm(&increment()).unwrap();
        crate::machine::validate_machine(&q).unwrap();
        assert_eq!(loops.len(), 1);
    }
}
