use std::fmt;

use crate::quantum::{apply_branching, entanglement_profile, factor_out, Outcome, StateVector};

use super::{Control, MachineDescription, MachineError, Trace};

/// Non-blank mass below this is treated as float dust.
pub const BLANK_TOL: f64 = 1e-9;

const OUTPUT_PURITY_TOL: f64 = 1e-9;

/// Classical part (control, last outcome, heads, windows) plus the joint
/// state of every stored cell. The register holds tape 1's window, then
/// tape 2's, and so on; cells outside the windows are `|#⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    pub control: Control,
    pub last_outcome: Outcome,
    pub heads: Vec<i64>,
    /// Inclusive `(lo, hi)` cell interval per tape.
    pub windows: Vec<(i64, i64)>,
    pub state: StateVector,
    pub steps: usize,
    pub trace: Trace,
}

impl Configuration {
    pub fn window_len(&self, tape: usize) -> usize {
        let (lo, hi) = self.windows[tape];
        (hi - lo + 1) as usize
    }

    pub fn offset(&self, tape: usize) -> usize {
        (0..tape).map(|t| self.window_len(t)).sum()
    }

    /// Register index of tape cell `pos`, if stored.
    pub fn register_index(&self, tape: usize, pos: i64) -> Option<usize> {
        let (lo, hi) = self.windows[tape];
        (lo..=hi)
            .contains(&pos)
            .then(|| self.offset(tape) + (pos - lo) as usize)
    }

    /// Register indices of the cells under the heads, tape order.
    pub fn pointed(&self) -> Vec<usize> {
        (0..self.heads.len())
            .map(|t| self.register_index(t, self.heads[t]).expect("head inside window"))
            .collect()
    }

    /// Same classical description: control, last outcome, heads, windows.
    pub fn same_classical(&self, other: &Configuration) -> bool {
        self.control == other.control
            && self.last_outcome == other.last_outcome
            && self.heads == other.heads
            && self.windows == other.windows
    }

    fn grow(&mut self, tape: usize, pos: i64, blank: usize) -> Result<(), MachineError> {
        loop {
            let (lo, hi) = self.windows[tape];
            if pos < lo {
                self.state = self.state.insert_cell(self.offset(tape), blank)?;
                self.windows[tape].0 -= 1;
            } else if pos > hi {
                self.state = self.state.insert_cell(self.offset(tape) + self.window_len(tape), blank)?;
                self.windows[tape].1 += 1;
            } else {
                return Ok(());
            }
        }
    }
}

/// Input on tape-1 cells `1..=n`, every head on cell 0, control `s`, last
/// outcome `#`.
pub fn init_configuration(
    m: &MachineDescription,
    input: &StateVector,
    allow_blank: bool,
) -> Result<Configuration, MachineError> {
    if input.d() != m.d() {
        return Err(MachineError::InputAlphabet {
            got: input.d(),
            want: m.d(),
        });
    }
    let blank = m.blank_digit();
    if !allow_blank {
        for cell in 0..input.cells() {
            if input.digit_mass(cell, blank) > 1e-18 {
                return Err(MachineError::BlankInput);
            }
        }
    }
    let mut state = StateVector::basis(m.d(), &[blank])?.tensor(input)?;
    for _ in 1..m.tapes {
        state = state.insert_cell(state.cells(), blank)?;
    }
    let mut windows = vec![(0, 0); m.tapes];
    windows[0].1 = input.cells() as i64;
    Ok(Configuration {
        control: Control::State(m.start.clone()),
        last_outcome: Outcome::blank(),
        heads: vec![0; m.tapes],
        windows,
        state,
        steps: 0,
        trace: Trace::new(),
    })
}

#[derive(Clone, Debug)]
pub struct StepBranch {
    pub config: Configuration,
    pub probability: f64,
}

/// One transition: look up δ, move the heads (growing windows), apply the
/// transform to the pointed cells, and return one configuration per
/// surviving outcome.
pub fn step(m: &MachineDescription, c: &Configuration) -> Result<Vec<StepBranch>, MachineError> {
    let Control::State(q) = &c.control else {
        return Err(MachineError::NotRunning);
    };
    let action = m
        .transition(q, c.last_outcome.as_str())
        .ok_or_else(|| MachineError::UndefinedTransition {
            state: q.clone(),
            outcome: c.last_outcome.to_string(),
        })?;
    let t = m
        .transform(&action.transform)
        .ok_or_else(|| MachineError::UnknownTransform(action.transform.clone()))?;
    let mut moved = c.clone();
    let blank = m.blank_digit();
    for (tape, mv) in action.moves.iter().enumerate() {
        moved.heads[tape] += mv.delta();
        let pos = moved.heads[tape];
        moved.grow(tape, pos, blank)?;
    }
    let branches = apply_branching(&moved.state, &moved.pointed(), &t.full)?;
    moved.control = action.next.clone();
    moved.steps += 1;
    let n = branches.len();
    let mut proto = Some(moved);
    let mut out = Vec::with_capacity(n);
    for (i, b) in branches.into_iter().enumerate() {
        let mut cfg = if i + 1 == n {
            proto.take().expect("last branch")
        } else {
            proto.clone().expect("earlier branch")
        };
        cfg.state = b.state;
        cfg.trace.push(b.outcome.clone());
        cfg.last_outcome = b.outcome;
        out.push(StepBranch {
            config: cfg,
            probability: b.probability,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Accept,
    Reject,
    Output(StateVector),
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Accept => f.write_str("Accept"),
            Verdict::Reject => f.write_str("Reject"),
            Verdict::Output(s) => write!(f, "Output({} cells)", s.cells()),
        }
    }
}

/// Answer of a halted configuration. For `h`, the tape-1 cells from the
/// leftmost to the rightmost non-blank one, which must factor out of the
/// rest of the register.
pub fn extract_output(m: &MachineDescription, c: &Configuration) -> Result<Verdict, MachineError> {
    match c.control {
        Control::Accept => return Ok(Verdict::Accept),
        Control::Reject => return Ok(Verdict::Reject),
        Control::State(_) => return Err(MachineError::NotRunning),
        Control::Halt => {}
    }
    let blank = m.blank_digit();
    let len = c.window_len(0);
    let live: Vec<usize> = (0..len)
        .filter(|&i| 1.0 - c.state.digit_mass(i, blank) > BLANK_TOL)
        .collect();
    let (Some(&first), Some(&last)) = (live.first(), live.last()) else {
        return Ok(Verdict::Output(StateVector::scalar(m.d())));
    };
    let subset: Vec<usize> = (first..=last).collect();
    if subset.len() == c.state.cells() {
        return Ok(Verdict::Output(c.state.clone()));
    }
    let profile = entanglement_profile(&c.state, &subset)?;
    if profile.purity < 1.0 - OUTPUT_PURITY_TOL {
        return Err(MachineError::EntangledOutput(profile.purity));
    }
    let (out, _) = factor_out(&c.state, &subset, 1e-6)?.ok_or(MachineError::EntangledOutput(profile.purity))?;
    Ok(Verdict::Output(out))
}
