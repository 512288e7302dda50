//! Sparse state vectors over qudit registers, admissible transformations
//! (finite Kraus collections with classical outcomes), the named primitives
//! used by the machines, and the dilation machinery that turns an arbitrary
//! admissible transformation into unitaries and projective measurements.

mod dilation;
mod entangle;
mod matrix;
mod primitives;
mod state;
mod transform;

use std::sync::OnceLock;

use thiserror::Error;

pub use dilation::{dilate_admissible, dilation_readout, reflection_measurement, Dilation, Reflection};
pub use entangle::{entanglement_profile, factor_out, EntanglementProfile};
pub use matrix::{cell_permutation, Matrix, C0, C1};
pub use num_complex::Complex64;
pub use primitives::{
    blank_test, destructive_measurement, diag, identity, initialization, observable, perm, std_measurement, swap,
    unitary, Alphabet,
};
pub use state::{BasisIndex, StateVector};
pub use transform::{
    apply_branching, apply_local, check_completeness, compose_sequential, compose_spatial, embed_on_cells,
    sample_branch, sample_index, Branch, CompletenessViolation, Outcome, Transform,
};

pub const NORM_TOL: f64 = 1e-9;
pub const COMPLETENESS_TOL: f64 = 1e-9;
pub const SCHMIDT_TOL: f64 = 1e-8;
pub const PRUNE_EPS: f64 = 1e-12;
pub const DEFAULT_AMPLITUDE_CAP: usize = 1 << 22;

/// Cap on stored amplitudes (nonzero terms of a state, entries of a dense
/// operator or vector), overridable through `CQTM_AMPLITUDE_CAP`.
pub fn amplitude_cap() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var("CQTM_AMPLITUDE_CAP")
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(DEFAULT_AMPLITUDE_CAP)
    })
}

/// `d^n`, or `None` past the amplitude cap.
pub fn capped_dim(d: usize, n: usize) -> Option<usize> {
    let cap = amplitude_cap();
    let mut acc: usize = 1;
    for _ in 0..n {
        acc = acc.checked_mul(d)?;
        if acc > cap {
            return None;
        }
    }
    Some(acc)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("register of {cells} cells over dimension {dim} exceeds the amplitude cap {cap}")]
    CapExceeded { dim: usize, cells: usize, cap: usize },
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("non-finite amplitude")]
    NonFinite,
    #[error("completeness violated by {0:.3e} at entry ({1}, {2})")]
    Incomplete(f64, usize, usize),
    #[error("matrix is not unitary")]
    NotUnitary,
    #[error("collection is not a projective measurement: {0}")]
    NotProjective(String),
    #[error("symbol `{0}` is not in the alphabet")]
    UnknownSymbol(String),
    #[error("duplicate outcome `{0}`")]
    DuplicateOutcome(String),
    #[error("invalid cell targets: {0}")]
    Targets(String),
    #[error("empty branch list")]
    NoBranches,
    #[error("bipartition must be a nonempty proper subset")]
    Bipartition,
}

pub(crate) fn cap_error(dim: usize, cells: usize) -> QuantumError {
    QuantumError::CapExceeded {
        dim,
        cells,
        cap: amplitude_cap(),
    }
}
