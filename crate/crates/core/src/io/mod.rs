//! Text formats (format v1): machines, states, circuits, patterns,
//! classical TMs and transform decompositions. All are line-oriented with
//! `%` comments, and `render_*` output parses back to an equal value.

mod circuit;
mod machine;
mod state;
mod text;
mod tm;

pub use circuit::{parse_circuit, parse_pattern, render_circuit, render_pattern};
pub use machine::{parse_machine, render_machine};
pub use state::{parse_state, render_state, STATE_NORM_TOL};
pub use text::{parse_complex, render_complex, ParseError};
pub use tm::{parse_decomposition, parse_tm, render_decomposition, render_tm};

use crate::compile::{Circuit, ClassicalTM, Decomposition, Pattern};
use crate::machine::MachineDescription;

#[derive(Clone, Debug, PartialEq)]
pub enum Artifact {
    Machine(MachineDescription),
    Circuit(Circuit),
    Pattern(Pattern),
    Tm(ClassicalTM),
    Decomposition(Decomposition),
}

impl Artifact {
    pub fn kind(&self) -> &'static str {
        match self {
            Artifact::Machine(_) => "machine",
            Artifact::Circuit(_) => "circuit",
            Artifact::Pattern(_) => "pattern",
            Artifact::Tm(_) => "tm",
            Artifact::Decomposition(_) => "decomposition",
        }
    }

    pub fn render(&self) -> String {
        match self {
            Artifact::Machine(m) => render_machine(m),
            Artifact::Circuit(c) => render_circuit(c),
            Artifact::Pattern(p) => render_pattern(p),
            Artifact::Tm(t) => render_tm(t),
            Artifact::Decomposition(d) => render_decomposition(d),
        }
    }
}

/// Parses any non-state artifact, dispatching on its first keyword. State
/// files need an alphabet and go through [`parse_state`].
pub fn parse_artifact(text: &str) -> Result<Artifact, ParseError> {
    let first = text
        .lines()
        .enumerate()
        .find_map(|(i, l)| {
            let w = l.split('%').next().unwrap_or("").split_whitespace().next()?;
            Some((i + 1, w))
        });
    match first {
        Some((_, "machine")) => parse_machine(text).map(Artifact::Machine),
        Some((_, "circuit")) => parse_circuit(text).map(Artifact::Circuit),
        Some((_, "pattern")) => parse_pattern(text).map(Artifact::Pattern),
        Some((_, "tm")) => parse_tm(text).map(Artifact::Tm),
        Some((_, "decompose")) => parse_decomposition(text).map(Artifact::Decomposition),
        Some((line, w)) => Err(ParseError {
            line,
            message: format!("unknown artifact kind `{w}`"),
        }),
        None => Err(ParseError {
            line: 1,
            message: "empty file".into(),
        }),
    }
}
