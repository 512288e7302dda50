//! Machine descriptions (k-tape CQTM and MQTM), validation, configurations
//! and the single-step operational semantics.

mod config;
mod pointed;
mod trace;
mod validate;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantum::{
    blank_test, compose_spatial, diag, embed_on_cells, identity, observable, perm, std_measurement, swap, unitary,
    Alphabet, Matrix, Outcome, QuantumError, Transform,
};

pub use config::{extract_output, init_configuration, step, Configuration, StepBranch, Verdict, BLANK_TOL};
pub use pointed::{from_pointed, to_pointed};
pub use trace::Trace;
pub use validate::{validate_machine, ValidationIssue};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Cqtm,
    Mqtm,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Cqtm => "cqtm",
            Kind::Mqtm => "mqtm",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Move {
    L,
    R,
    S,
}

impl Move {
    pub fn delta(self) -> i64 {
        match self {
            Move::L => -1,
            Move::R => 1,
            Move::S => 0,
        }
    }

    pub fn parse(c: char) -> Option<Move> {
        match c {
            'L' => Some(Move::L),
            'R' => Some(Move::R),
            'S' | '-' => Some(Move::S),
            _ => None,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Move::L => 'L',
            Move::R => 'R',
            Move::S => 'S',
        }
    }
}

/// Control state of a configuration: a state of K or one of the three
/// halting states.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Control {
    State(String),
    Halt,
    Accept,
    Reject,
}

impl Control {
    pub fn parse(s: &str) -> Control {
        match s {
            "h" => Control::Halt,
            "yes" => Control::Accept,
            "no" => Control::Reject,
            _ => Control::State(s.to_string()),
        }
    }

    pub fn is_halting(&self) -> bool {
        !matches!(self, Control::State(_))
    }

    pub fn name(&self) -> &str {
        match self {
            Control::State(s) => s,
            Control::Halt => "h",
            Control::Accept => "yes",
            Control::Reject => "no",
        }
    }
}

impl fmt::Display for Control {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const HALTING_NAMES: [&str; 3] = ["h", "yes", "no"];

/// Right-hand side of a transition.
#[derive(Clone, Debug, PartialEq)]
pub struct Action {
    pub next: Control,
    pub moves: Vec<Move>,
    pub transform: String,
}

/// Source form of a named transformation, kept for rendering.
#[derive(Clone, Debug, PartialEq)]
pub enum TransformExpr {
    Std,
    Test(String),
    Perm(String, String),
    Swap,
    Diag(String, String),
    Unitary(Matrix),
    Observable(Vec<(Outcome, Matrix)>),
    Kraus(Vec<(Outcome, Matrix)>),
    /// `[A, B, ...]`: spatial composition of other named transforms.
    Composite(Vec<String>),
    /// A named transform applied on the listed tapes (0-based), identity on
    /// the others.
    Place(String, Vec<usize>),
    Identity,
}

#[derive(Clone, Debug)]
pub struct NamedTransform {
    pub name: String,
    pub expr: TransformExpr,
    /// Transform at its natural arity.
    pub base: Transform,
    /// Padded to one cell per tape; this is what the heads apply.
    pub full: Transform,
}

/// Symbol map from a source machine's cell alphabet into this machine's,
/// used to encode inputs and decode outputs of compiled machines.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Embedding {
    pub map: BTreeMap<String, String>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MachineError {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("unknown transform `{0}`")]
    UnknownTransform(String),
    #[error("transform `{name}`: {why}")]
    BadTransform { name: String, why: String },
    #[error("undefined transition δ({state}, {outcome})")]
    UndefinedTransition { state: String, outcome: String },
    #[error("direction arity {got} ≠ tapes {tapes}")]
    DirectionArity { got: usize, tapes: usize },
    #[error("duplicate transition δ({0}, {1})")]
    DuplicateTransition(String, String),
    #[error("configuration is not running")]
    NotRunning,
    #[error("entangled output: tape 1 window has purity {0:.12} against the rest of the register")]
    EntangledOutput(f64),
    #[error("input has amplitude on a word containing the blank")]
    BlankInput,
    #[error("input is over dimension {got}, the machine alphabet has {want} symbols")]
    InputAlphabet { got: usize, want: usize },
    #[error("state `{0}` is reserved for halting")]
    ReservedState(String),
    #[error("machine is invalid: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug)]
pub struct MachineDescription {
    pub name: String,
    pub kind: Kind,
    pub tapes: usize,
    pub qalphabet: Alphabet,
    pub calphabet: Vec<String>,
    pub start: String,
    transforms: Vec<NamedTransform>,
    index: HashMap<String, usize>,
    pub delta: BTreeMap<(String, String), Action>,
    pub embedding: Option<Embedding>,
}

/// Structural equality: header, alphabets, transform sources in
/// definition order, δ and embedding. Elaborated operators are derived from
/// these and not compared.
impl PartialEq for MachineDescription {
    fn eq(&self, other: &Self) -> bool {
        let src = |m: &Self| m.transforms.iter().map(|t| (t.name.clone(), t.expr.clone())).collect::<Vec<_>>();
        self.name == other.name
            && self.kind == other.kind
            && self.tapes == other.tapes
            && self.qalphabet == other.qalphabet
            && self.calphabet == other.calphabet
            && self.start == other.start
            && self.delta == other.delta
            && self.embedding == other.embedding
            && src(self) == src(other)
    }
}

impl MachineDescription {
    pub fn new(
        name: impl Into<String>,
        kind: Kind,
        tapes: usize,
        qalphabet: Alphabet,
        calphabet: Vec<String>,
    ) -> Result<Self, MachineError> {
        if tapes == 0 {
            return Err(MachineError::Invalid("a machine needs at least one tape".into()));
        }
        let mut m = MachineDescription {
            name: name.into(),
            kind,
            tapes,
            qalphabet,
            calphabet,
            start: "s".into(),
            transforms: Vec::new(),
            index: HashMap::new(),
            delta: BTreeMap::new(),
            embedding: None,
        };
        let id = identity(&m.qalphabet, tapes);
        m.insert(NamedTransform {
            name: "-".into(),
            expr: TransformExpr::Identity,
            base: id.clone(),
            full: id,
        });
        Ok(m)
    }

    fn insert(&mut self, t: NamedTransform) {
        if let Some(&i) = self.index.get(&t.name) {
            self.transforms[i] = t;
        } else {
            self.index.insert(t.name.clone(), self.transforms.len());
            self.transforms.push(t);
        }
    }

    /// Elaborates and registers a named transform. Names may be redefined.
    pub fn define(&mut self, name: impl Into<String>, expr: TransformExpr) -> Result<&NamedTransform, MachineError> {
        let name = name.into();
        let base = self.elaborate(&name, &expr)?;
        let full = self.pad(&name, &base)?;
        self.insert(NamedTransform {
            name: name.clone(),
            expr,
            base,
            full,
        });
        Ok(self.transform(&name).expect("just inserted"))
    }

    fn bad(name: &str, e: impl fmt::Display) -> MachineError {
        MachineError::BadTransform {
            name: name.to_string(),
            why: e.to_string(),
        }
    }

    fn elaborate(&self, name: &str, expr: &TransformExpr) -> Result<Transform, MachineError> {
        let a = &self.qalphabet;
        let wrap = |r: Result<Transform, QuantumError>| r.map_err(|e| Self::bad(name, e));
        let t = match expr {
            TransformExpr::Std => std_measurement(a),
            TransformExpr::Test(t) => wrap(blank_test(a, t))?,
            TransformExpr::Perm(x, y) => wrap(perm(a, x, y))?,
            TransformExpr::Swap => swap(a),
            TransformExpr::Diag(x, y) => wrap(diag(a, x, y))?,
            TransformExpr::Unitary(m) => wrap(unitary(name, a, m.clone()))?,
            TransformExpr::Observable(ps) => wrap(observable(name, a, ps.clone()))?,
            TransformExpr::Kraus(ks) => {
                let dim = ks.first().map(|(_, m)| m.cols()).ok_or_else(|| Self::bad(name, "no operators"))?;
                let k = cells_of(a.len(), dim).ok_or_else(|| Self::bad(name, "dimension is not a power of |Σ_Q|"))?;
                wrap(Transform::new(name, a.len(), k, k, ks.clone()))?
            }
            TransformExpr::Identity => identity(a, self.tapes),
            TransformExpr::Composite(parts) => {
                let mut acc: Option<Transform> = None;
                for p in parts {
                    let part = self.transform(p).ok_or_else(|| MachineError::UnknownTransform(p.clone()))?;
                    let b = if p == "-" { identity(a, 1) } else { part.base.clone() };
                    acc = Some(match acc {
                        None => b,
                        Some(x) => wrap(compose_spatial(&x, &b))?,
                    });
                }
                acc.ok_or_else(|| Self::bad(name, "empty composition"))?
            }
            TransformExpr::Place(inner, cells) => {
                let part = self.transform(inner).ok_or_else(|| MachineError::UnknownTransform(inner.clone()))?;
                if cells.len() != part.base.arity_in() {
                    return Err(Self::bad(
                        name,
                        format!("`{inner}` acts on {} cells, {} tapes listed", part.base.arity_in(), cells.len()),
                    ));
                }
                let branches = part
                    .base
                    .branches()
                    .iter()
                    .map(|(o, m)| Ok((o.clone(), embed_on_cells(m, a.len(), cells, self.tapes)?)))
                    .collect::<Result<Vec<_>, QuantumError>>()
                    .map_err(|e| Self::bad(name, e))?;
                wrap(Transform::new(name, a.len(), self.tapes, self.tapes, branches))?
            }
        };
        if !t.is_arity_preserving() {
            return Err(Self::bad(name, "tape transforms must keep the cell count"));
        }
        if t.arity_in() > self.tapes {
            return Err(Self::bad(
                name,
                format!("acts on {} cells but the machine has {} tapes", t.arity_in(), self.tapes),
            ));
        }
        Ok(t.renamed(name))
    }

    fn pad(&self, name: &str, base: &Transform) -> Result<Transform, MachineError> {
        if base.arity_in() == self.tapes {
            return Ok(base.clone());
        }
        let rest = identity(&self.qalphabet, self.tapes - base.arity_in());
        Ok(compose_spatial(base, &rest)
            .map_err(|e| Self::bad(name, e))?
            .renamed(name))
    }

    pub fn transform(&self, name: &str) -> Option<&NamedTransform> {
        self.index.get(name).map(|&i| &self.transforms[i])
    }

    /// User-visible transforms in definition order (the implicit `-` is
    /// left out).
    pub fn transforms(&self) -> impl Iterator<Item = &NamedTransform> {
        self.transforms.iter().filter(|t| t.name != "-")
    }

    pub fn add_transition(
        &mut self,
        state: impl Into<String>,
        outcome: impl Into<String>,
        next: Control,
        moves: Vec<Move>,
        transform: impl Into<String>,
    ) -> Result<(), MachineError> {
        let (state, outcome) = (state.into(), outcome.into());
        if HALTING_NAMES.contains(&state.as_str()) {
            return Err(MachineError::ReservedState(state));
        }
        if moves.len() != self.tapes {
            return Err(MachineError::DirectionArity {
                got: moves.len(),
                tapes: self.tapes,
            });
        }
        let key = (state, outcome);
        if self.delta.contains_key(&key) {
            return Err(MachineError::DuplicateTransition(key.0, key.1));
        }
        self.delta.insert(
            key,
            Action {
                next,
                moves,
                transform: transform.into(),
            },
        );
        Ok(())
    }

    pub fn transition(&self, state: &str, outcome: &str) -> Option<&Action> {
        self.delta.get(&(state.to_string(), outcome.to_string()))
    }

    /// K: the start state plus every state named in δ.
    pub fn states(&self) -> BTreeSet<String> {
        let mut k = BTreeSet::new();
        k.insert(self.start.clone());
        for ((q, _), a) in &self.delta {
            k.insert(q.clone());
            if let Control::State(p) = &a.next {
                k.insert(p.clone());
            }
        }
        k
    }

    pub fn d(&self) -> usize {
        self.qalphabet.len()
    }

    pub fn blank_digit(&self) -> usize {
        self.qalphabet.digit("#").unwrap_or(0)
    }

    /// Adds `symbol` to Σ_C if missing.
    pub fn ensure_outcome(&mut self, symbol: &str) {
        if !self.calphabet.iter().any(|s| s == symbol) {
            self.calphabet.push(symbol.to_string());
        }
    }

    /// Adds every outcome of the registered transforms to Σ_C.
    pub fn close_calphabet(&mut self) {
        let outs: Vec<String> = self
            .transforms
            .iter()
            .flat_map(|t| t.full.outcomes().map(|o| o.as_str().to_string()))
            .collect();
        for o in outs {
            self.ensure_outcome(&o);
        }
    }
}

fn cells_of(d: usize, dim: usize) -> Option<usize> {
    let mut acc = 1;
    let mut k = 0;
    while acc < dim {
        acc *= d;
        k += 1;
    }
    (acc == dim).then_some(k)
}
