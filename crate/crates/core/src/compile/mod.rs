//! Machine-to-machine compilers. Every pass returns an ordinary
//! [`MachineDescription`]; compiled machines that change the cell alphabet
//! carry an [`Embedding`](crate::machine::Embedding) from source symbols.

use std::collections::BTreeSet;

use crate::machine::HALTING_NAMES;

pub mod circuit;
pub mod ktape;
pub mod mqtm;
pub mod pattern;
pub mod tm;

pub use circuit::{compile_circuit, Circuit, Gate};
pub use ktape::{compile_to_two_tapes, Decomposition};
pub use mqtm::{compile_to_mqtm, compile_to_pair_cqtm, CompiledMqtm};
pub use pattern::{compile_pattern, Pattern, PatternCommand};
pub use tm::{compile_tm_to_cqtm, compile_tm_to_mqtm, ClassicalTM, TmRun, TmVerdict};

/// A repeat-until-success loop of a compiled machine: control enters at
/// `head`, may pass through `body`, and has succeeded once it reaches any
/// state outside both.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RusLoop {
    pub head: String,
    pub body: Vec<String>,
}

impl RusLoop {
    pub fn contains(&self, state: &str) -> bool {
        self.head == state || self.body.iter().any(|s| s == state)
    }
}

/// `base` primed until it is neither taken nor a halting name.
pub(crate) fn fresh_state(taken: &BTreeSet<String>, base: &str) -> String {
    let mut s = base.to_string();
    while taken.contains(&s) || HALTING_NAMES.contains(&s.as_str()) {
        s.push('\'');
    }
    s
}
