use std::collections::BTreeSet;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{cap_error, capped_dim, BasisIndex, Matrix, QuantumError, StateVector, C0, COMPLETENESS_TOL, PRUNE_EPS};

/// Classical outcome token. `_` is the void outcome λ; composite outcomes of
/// spatial or sequential compositions join their parts with `.`, with λ as
/// the unit of that concatenation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Outcome(String);

impl Outcome {
    pub const LAMBDA: &'static str = "_";
    pub const BLANK: &'static str = "#";
    pub const NON_BLANK: &'static str = "!#";
    pub const TOP: &'static str = "T";
    pub const BOTTOM: &'static str = "F";

    pub fn new(token: impl Into<String>) -> Self {
        Outcome(token.into())
    }

    pub fn lambda() -> Self {
        Outcome(Self::LAMBDA.into())
    }

    pub fn blank() -> Self {
        Outcome(Self::BLANK.into())
    }

    pub fn non_blank() -> Self {
        Outcome(Self::NON_BLANK.into())
    }

    pub fn top() -> Self {
        Outcome(Self::TOP.into())
    }

    pub fn bottom() -> Self {
        Outcome(Self::BOTTOM.into())
    }

    /// Outcome reported by the complement branch of a test for `symbol`.
    pub fn negated(symbol: &str) -> Self {
        Outcome(format!("!{symbol}"))
    }

    pub fn is_lambda(&self) -> bool {
        self.0 == Self::LAMBDA
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn concat(&self, other: &Outcome) -> Outcome {
        match (self.is_lambda(), other.is_lambda()) {
            (true, _) => other.clone(),
            (_, true) => self.clone(),
            _ => Outcome(format!("{}.{}", self.0, other.0)),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Outcome {
    fn from(s: &str) -> Self {
        Outcome::new(s)
    }
}

/// A finite collection `{M_τ}` of linear operators, keyed by classical
/// outcome, acting on `arity_in` cells of dimension `d` and producing
/// `arity_out` cells.
#[derive(Clone, Debug)]
pub struct Transform {
    name: String,
    d: usize,
    arity_in: usize,
    arity_out: usize,
    branches: Vec<(Outcome, Matrix)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompletenessViolation {
    pub deviation: f64,
    pub row: usize,
    pub col: usize,
}

impl fmt::Display for CompletenessViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "sum of M†M deviates from identity by {:.3e} at ({}, {})",
            self.deviation, self.row, self.col
        )
    }
}

impl Transform {
    /// Builds a transformation and checks shapes, outcome distinctness and
    /// completeness.
    pub fn new(
        name: impl Into<String>,
        d: usize,
        arity_in: usize,
        arity_out: usize,
        branches: Vec<(Outcome, Matrix)>,
    ) -> Result<Self, QuantumError> {
        let t = Self::unchecked(name, d, arity_in, arity_out, branches)?;
        if let Err(v) = check_completeness(&t) {
            return Err(QuantumError::Incomplete(v.deviation, v.row, v.col));
        }
        Ok(t)
    }

    /// Shape-checked but not completeness-checked, for inspecting invalid
    /// collections.
    pub fn unchecked(
        name: impl Into<String>,
        d: usize,
        arity_in: usize,
        arity_out: usize,
        branches: Vec<(Outcome, Matrix)>,
    ) -> Result<Self, QuantumError> {
        if branches.is_empty() {
            return Err(QuantumError::NoBranches);
        }
        let rows = capped_dim(d, arity_out).ok_or_else(|| cap_error(d, arity_out))?;
        let cols = capped_dim(d, arity_in).ok_or_else(|| cap_error(d, arity_in))?;
        let mut seen = BTreeSet::new();
        for (o, m) in &branches {
            if m.shape() != (rows, cols) {
                return Err(QuantumError::Shape(format!(
                    "branch {o} is {}x{}, expected {rows}x{cols}",
                    m.rows(),
                    m.cols()
                )));
            }
            if !m.is_finite() {
                return Err(QuantumError::NonFinite);
            }
            if !seen.insert(o.clone()) {
                return Err(QuantumError::DuplicateOutcome(o.to_string()));
            }
        }
        Ok(Transform {
            name: name.into(),
            d,
            arity_in,
            arity_out,
            branches,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn arity_in(&self) -> usize {
        self.arity_in
    }

    pub fn arity_out(&self) -> usize {
        self.arity_out
    }

    pub fn is_arity_preserving(&self) -> bool {
        self.arity_in == self.arity_out
    }

    pub fn branches(&self) -> &[(Outcome, Matrix)] {
        &self.branches
    }

    pub fn outcomes(&self) -> impl Iterator<Item = &Outcome> {
        self.branches.iter().map(|(o, _)| o)
    }

    pub fn operator(&self, outcome: &Outcome) -> Option<&Matrix> {
        self.branches.iter().find(|(o, _)| o == outcome).map(|(_, m)| m)
    }

    /// True when the branches are mutually orthogonal projectors summing to
    /// the identity.
    pub fn is_projective(&self, tol: f64) -> bool {
        self.projective_violation(tol).is_none()
    }

    pub fn projective_violation(&self, tol: f64) -> Option<String> {
        if !self.is_arity_preserving() {
            return Some("arity-changing".into());
        }
        for (i, (oi, pi)) in self.branches.iter().enumerate() {
            if !pi.is_hermitian(tol) {
                return Some(format!("branch {oi} is not Hermitian"));
            }
            for (oj, pj) in &self.branches[i..] {
                let prod = pi.mul(pj).expect("square branches");
                let expected = if oi == oj { pi.clone() } else { Matrix::zeros(pi.rows(), pi.cols()) };
                if !prod.approx_eq(&expected, tol) {
                    return if oi == oj {
                        Some(format!("branch {oi} is not idempotent"))
                    } else {
                        Some(format!("branches {oi} and {oj} are not orthogonal"))
                    };
                }
            }
        }
        check_completeness(self).err().map(|v| v.to_string())
    }

    /// Same operators, outcomes renamed by `f`.
    pub fn map_outcomes(&self, mut f: impl FnMut(&Outcome) -> Outcome) -> Result<Transform, QuantumError> {
        Transform::unchecked(
            self.name.clone(),
            self.d,
            self.arity_in,
            self.arity_out,
            self.branches.iter().map(|(o, m)| (f(o), m.clone())).collect(),
        )
    }

    /// Operators conjugated into another cell basis: each branch becomes
    /// `lift(M)` for a caller-supplied lifting over dimension `new_d`.
    pub fn lifted(
        &self,
        name: impl Into<String>,
        new_d: usize,
        mut lift: impl FnMut(&Matrix) -> Matrix,
    ) -> Result<Transform, QuantumError> {
        Transform::new(
            name,
            new_d,
            self.arity_in,
            self.arity_out,
            self.branches.iter().map(|(o, m)| (o.clone(), lift(m))).collect(),
        )
    }
}

/// Checks `∑ M_τ†M_τ = I` and reports the worst entry otherwise.
pub fn check_completeness(t: &Transform) -> Result<(), CompletenessViolation> {
    let cols = t.branches[0].1.cols();
    let mut sum = Matrix::zeros(cols, cols);
    for (_, m) in &t.branches {
        sum = sum.add(&m.adjoint().mul(m).expect("shape")).expect("shape");
    }
    let (deviation, row, col) = sum.max_deviation(&Matrix::identity(cols));
    if deviation <= COMPLETENESS_TOL {
        Ok(())
    } else {
        Err(CompletenessViolation { deviation, row, col })
    }
}

/// `t1` followed by `t2`: branches `(τ, γ) ↦ N_γ M_τ`.
pub fn compose_sequential(t1: &Transform, t2: &Transform) -> Result<Transform, QuantumError> {
    if t1.arity_out != t2.arity_in || t1.d != t2.d {
        return Err(QuantumError::Shape(format!(
            "sequential composition of {} (out {}) with {} (in {})",
            t1.name, t1.arity_out, t2.name, t2.arity_in
        )));
    }
    let mut branches = Vec::with_capacity(t1.branches.len() * t2.branches.len());
    for (tau, m) in &t1.branches {
        for (gamma, n) in &t2.branches {
            branches.push((tau.concat(gamma), n.mul(m)?));
        }
    }
    Transform::new(
        format!("{};{}", t1.name, t2.name),
        t1.d,
        t1.arity_in,
        t2.arity_out,
        branches,
    )
}

/// `[t1, t2]`: branches `(τ, γ) ↦ M_τ ⊗ N_γ`, `t1` on the leading cells.
pub fn compose_spatial(t1: &Transform, t2: &Transform) -> Result<Transform, QuantumError> {
    if t1.d != t2.d {
        return Err(QuantumError::Shape("spatial composition across alphabets".into()));
    }
    let ain = t1.arity_in + t2.arity_in;
    let aout = t1.arity_out + t2.arity_out;
    let din = capped_dim(t1.d, ain).ok_or_else(|| cap_error(t1.d, ain))?;
    let dout = capped_dim(t1.d, aout).ok_or_else(|| cap_error(t1.d, aout))?;
    capped_dim(din, 1)
        .and_then(|_| din.checked_mul(dout))
        .filter(|&e| e <= super::amplitude_cap().saturating_mul(64))
        .ok_or_else(|| cap_error(t1.d, ain + aout))?;
    let mut branches = Vec::with_capacity(t1.branches.len() * t2.branches.len());
    for (tau, m) in &t1.branches {
        for (gamma, n) in &t2.branches {
            branches.push((tau.concat(gamma), m.kron(n)));
        }
    }
    Transform::new(format!("[{},{}]", t1.name, t2.name), t1.d, ain, aout, branches)
}

fn check_targets(targets: &[usize], n: usize) -> Result<(), QuantumError> {
    let mut seen = BTreeSet::new();
    for &t in targets {
        if t >= n {
            return Err(QuantumError::Targets(format!("cell {t} out of range for {n} cells")));
        }
        if !seen.insert(t) {
            return Err(QuantumError::Targets(format!("cell {t} targeted twice")));
        }
    }
    Ok(())
}

/// Offsets of each local basis index within the full register, and the
/// full-register indices whose target digits are all zero.
fn local_layout(d: usize, n: usize, targets: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let stride = |cell: usize| d.pow((n - 1 - cell) as u32);
    let k = targets.len();
    let local_dim = d.pow(k as u32);
    let offsets: Vec<usize> = (0..local_dim)
        .map(|mut l| {
            let mut off = 0;
            for j in (0..k).rev() {
                off += (l % d) * stride(targets[j]);
                l /= d;
            }
            off
        })
        .collect();
    let total = d.pow(n as u32);
    let bases = (0..total)
        .filter(|&i| targets.iter().all(|&t| (i / stride(t)) % d == 0))
        .collect();
    (offsets, bases)
}

/// Lifts a `k`-cell operator to an `n`-cell register acting on `targets`
/// (in that order) and as the identity elsewhere.
pub fn embed_on_cells(op: &Matrix, d: usize, targets: &[usize], n: usize) -> Result<Matrix, QuantumError> {
    check_targets(targets, n)?;
    let k = targets.len();
    let local_dim = d.pow(k as u32);
    if op.shape() != (local_dim, local_dim) {
        return Err(QuantumError::Shape(format!(
            "operator is {}x{}, targets need {local_dim}x{local_dim}",
            op.rows(),
            op.cols()
        )));
    }
    let dim = capped_dim(d, 2 * n).ok_or_else(|| cap_error(d, 2 * n))?;
    let dim = (dim as f64).sqrt().round() as usize;
    let (offsets, bases) = local_layout(d, n, targets);
    let mut m = Matrix::zeros(dim, dim);
    for &b in &bases {
        for (r, ro) in offsets.iter().enumerate() {
            for (c, co) in offsets.iter().enumerate() {
                m[(b + ro, b + co)] = op[(r, c)];
            }
        }
    }
    Ok(m)
}

/// Applies each operator of `ops` (all `d^k × d^k`) to `targets` of the
/// register, returning the unnormalized nonzero amplitudes per operator.
pub fn apply_local(
    state: &StateVector,
    targets: &[usize],
    ops: &[&Matrix],
) -> Result<Vec<Vec<(BasisIndex, Complex64)>>, QuantumError> {
    let d = state.d();
    let n = state.cells();
    check_targets(targets, n)?;
    let local_dim = d.pow(targets.len() as u32);
    for op in ops {
        if op.shape() != (local_dim, local_dim) {
            return Err(QuantumError::Shape(format!(
                "operator is {}x{}, targets need {local_dim}x{local_dim}",
                op.rows(),
                op.cols()
            )));
        }
    }
    let strides: Vec<BasisIndex> = targets.iter().map(|&t| state.stride(t)).collect();
    let offsets: Vec<BasisIndex> = (0..local_dim)
        .map(|mut l| {
            let mut off = 0;
            for s in strides.iter().rev() {
                off += (l % d) as BasisIndex * s;
                l /= d;
            }
            off
        })
        .collect();
    // (base with target digits zeroed, local index, amplitude)
    let mut split: Vec<(BasisIndex, usize, Complex64)> = state
        .terms()
        .iter()
        .map(|&(i, a)| {
            let mut base = i;
            let mut l = 0;
            for s in &strides {
                let g = (i / s) % d as BasisIndex;
                base -= g * s;
                l = l * d + g as usize;
            }
            (base, l, a)
        })
        .collect();
    split.sort_by_key(|t| t.0);
    let mut outs: Vec<Vec<(BasisIndex, Complex64)>> = vec![Vec::new(); ops.len()];
    let mut local = vec![C0; local_dim];
    let mut start = 0;
    while start < split.len() {
        let base = split[start].0;
        let mut end = start;
        local.iter_mut().for_each(|z| *z = C0);
        while end < split.len() && split[end].0 == base {
            local[split[end].1] = split[end].2;
            end += 1;
        }
        for (op, out) in ops.iter().zip(outs.iter_mut()) {
            for (r, ro) in offsets.iter().enumerate() {
                let mut acc = C0;
                for (a, v) in op.row(r).iter().zip(&local) {
                    acc += a * v;
                }
                if acc != C0 {
                    out.push((base + ro, acc));
                }
            }
        }
        start = end;
    }
    Ok(outs)
}

/// One surviving outcome of an admissible transformation.
#[derive(Clone, Debug)]
pub struct Branch {
    pub outcome: Outcome,
    pub state: StateVector,
    pub probability: f64,
}

/// All outcomes with `p(τ) = ⟨ψ|M_τ†M_τ|ψ⟩ > PRUNE_EPS`, each with its
/// renormalized post-state, in the transformation's branch order.
pub fn apply_branching(state: &StateVector, targets: &[usize], t: &Transform) -> Result<Vec<Branch>, QuantumError> {
    if !t.is_arity_preserving() {
        return Err(QuantumError::Shape(format!(
            "{} changes the cell count; only arity-preserving transforms act on registers",
            t.name
        )));
    }
    if targets.len() != t.arity_in || state.d() != t.d {
        return Err(QuantumError::Targets(format!(
            "{} acts on {} cells of dimension {}, got {} targets over dimension {}",
            t.name,
            t.arity_in,
            t.d,
            targets.len(),
            state.d()
        )));
    }
    let ops: Vec<&Matrix> = t.branches.iter().map(|(_, m)| m).collect();
    let outs = apply_local(state, targets, &ops)?;
    let mut branches = Vec::new();
    for ((outcome, _), amps) in t.branches.iter().zip(outs) {
        let p: f64 = amps.iter().map(|(_, a)| a.norm_sqr()).sum();
        if p > PRUNE_EPS {
            branches.push(Branch {
                outcome: outcome.clone(),
                state: StateVector::normalize_terms(state.d(), state.cells(), amps)?,
                probability: p,
            });
        }
    }
    Ok(branches)
}

/// Inverse-CDF draw over the branch order, renormalizing away pruned mass.
pub fn sample_branch<'a, R: Rng + ?Sized>(branches: &'a [Branch], rng: &mut R) -> Result<&'a Branch, QuantumError> {
    let probs: Vec<f64> = branches.iter().map(|b| b.probability).collect();
    Ok(&branches[sample_index(&probs, rng)?])
}

/// Index drawn by inverse CDF from unnormalized weights.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize, QuantumError> {
    let total: f64 = weights.iter().sum();
    if weights.is_empty() || total <= 0.0 {
        return Err(QuantumError::NoBranches);
    }
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return Ok(i);
        }
    }
    Ok(weights.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{blank_test, perm, std_measurement, swap, unitary, Alphabet};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn bits() -> Alphabet {
        Alphabet::new(["0", "1"]).unwrap()
    }

    fn tri() -> Alphabet {
        Alphabet::new(["#", "0", "1"]).unwrap()
    }

    #[test]
    fn lambda_is_unit_of_concat() {
        let t = Outcome::new("0");
        assert_eq!(t.concat(&Outcome::lambda()), t);
        assert_eq!(Outcome::lambda().concat(&t), t);
        assert_eq!(t.concat(&Outcome::new("1")).as_str(), "0.1");
    }

    #[test]
    fn std_is_complete() {
        assert!(check_completeness(&std_measurement(&tri())).is_ok());
    }

    #[test]
    fn perturbed_std_reports_deviation() {
        let s = std_measurement(&tri());
        let branches = s
            .branches()
            .iter()
            .map(|(o, m)| {
                if o.as_str() == "0" {
                    (o.clone(), m.scale(c(1.01)))
                } else {
                    (o.clone(), m.clone())
                }
            })
            .collect();
        let bad = Transform::unchecked("bad", 3, 1, 1, branches).unwrap();
        let v = check_completeness(&bad).unwrap_err();
        // 1.01² − 1 on the |0⟩⟨0| diagonal entry.
        assert!((v.deviation - 0.0201).abs() < 1e-12);
        assert_eq!((v.row, v.col), (1, 1));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let r = Transform::unchecked(
            "x",
            2,
            1,
            1,
            vec![(Outcome::new("a"), Matrix::identity(2)), (Outcome::new("b"), Matrix::identity(4))],
        );
        assert!(matches!(r, Err(QuantumError::Shape(_))));
    }

    #[test]
    fn sequential_with_identity_keeps_outcomes() {
        let id = unitary("I", &bits(), Matrix::identity(2)).unwrap();
        let s = std_measurement(&bits());
        let c = compose_sequential(&id, &s).unwrap();
        let outs: Vec<_> = c.outcomes().map(|o| o.as_str().to_string()).collect();
        assert_eq!(outs, ["0", "1"]);
        for (o, m) in c.branches() {
            assert!(m.approx_eq(s.operator(o).unwrap(), 0.0));
        }
    }

    #[test]
    fn perm_is_an_involution() {
        let p = perm(&bits(), "0", "1").unwrap();
        let c = compose_sequential(&p, &p).unwrap();
        assert_eq!(c.branches().len(), 1);
        assert!(c.branches()[0].1.approx_eq(&Matrix::identity(2), 1e-15));
    }

    #[test]
    fn repeated_measurement_repeats_outcome() {
        let s = std_measurement(&bits());
        let c = compose_sequential(&s, &s).unwrap();
        for (o, m) in c.branches() {
            let parts: Vec<&str> = o.as_str().split('.').collect();
            if parts[0] == parts[1] {
                let g: usize = parts[0].parse().unwrap();
                assert!(m.approx_eq(&Matrix::unit(2, g, g), 0.0));
            } else {
                assert!(m.is_zero(0.0));
            }
        }
    }

    #[test]
    fn spatial_blank_test_with_perm_is_complete() {
        let t = compose_spatial(&blank_test(&tri(), "#").unwrap(), &perm(&tri(), "0", "1").unwrap()).unwrap();
        assert!(check_completeness(&t).is_ok());
        assert_eq!(t.arity_in(), 2);
    }

    #[test]
    fn spatial_identity_then_std_measures_second_cell() {
        let id = unitary("I", &bits(), Matrix::identity(2)).unwrap();
        let t = compose_spatial(&id, &std_measurement(&bits())).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // |+⟩|1⟩: second cell is certain, first untouched.
        let psi = StateVector::new(2, 2, vec![c(0.0), c(h), c(0.0), c(h)]).unwrap();
        let b = apply_branching(&psi, &[0, 1], &t).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].outcome.as_str(), "1");
        assert!((b[0].state.fidelity(&psi).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn embed_x_on_first_cell() {
        let x = perm(&bits(), "0", "1").unwrap();
        let m = embed_on_cells(&x.branches()[0].1, 2, &[0], 2).unwrap();
        let out = m.apply(&StateVector::basis(2, &[0, 0]).unwrap().to_dense().unwrap());
        assert_eq!(out, StateVector::basis(2, &[1, 0]).unwrap().to_dense().unwrap());
    }

    #[test]
    fn embed_reversed_swap_matches_brute_force() {
        let d = 3;
        let sw = swap(&tri()).branches()[0].1.clone();
        let m = embed_on_cells(&sw, d, &[2, 0], 3).unwrap();
        // Brute force: the permutation matrix exchanging digits 0 and 2.
        let mut want = Matrix::zeros(27, 27);
        for a in 0..3 {
            for b in 0..3 {
                for c2 in 0..3 {
                    want[(c2 * 9 + b * 3 + a, a * 9 + b * 3 + c2)] = c(1.0);
                }
            }
        }
        assert!(m.approx_eq(&want, 0.0));
    }

    #[test]
    fn embed_identity() {
        let m = embed_on_cells(&Matrix::identity(3), 3, &[1], 3).unwrap();
        assert!(m.approx_eq(&Matrix::identity(27), 0.0));
    }

    #[test]
    fn embed_rejects_bad_targets() {
        assert!(embed_on_cells(&Matrix::identity(4), 2, &[1, 1], 3).is_err());
        assert!(embed_on_cells(&Matrix::identity(2), 2, &[3], 3).is_err());
    }

    #[test]
    fn std_on_basis_state() {
        let b = apply_branching(&StateVector::basis(2, &[0]).unwrap(), &[0], &std_measurement(&bits())).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].outcome.as_str(), "0");
        assert!((b[0].probability - 1.0).abs() < 1e-15);
    }

    #[test]
    fn std_on_bell_first_cell() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = StateVector::new(2, 2, vec![c(h), c(0.0), c(0.0), c(h)]).unwrap();
        let b = apply_branching(&bell, &[0], &std_measurement(&bits())).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].state, StateVector::basis(2, &[0, 0]).unwrap());
        assert_eq!(b[1].state, StateVector::basis(2, &[1, 1]).unwrap());
        assert!((b[0].probability - 0.5).abs() < 1e-12);
        assert!((b[1].probability - 0.5).abs() < 1e-12);
    }

    #[test]
    fn blank_test_splits_mass() {
        // √0.7|0⟩ + √0.3|#⟩ over {#, 0, 1}.
        let psi = StateVector::new(3, 1, vec![c(0.3f64.sqrt()), c(0.7f64.sqrt()), c(0.0)]).unwrap();
        let b = apply_branching(&psi, &[0], &blank_test(&tri(), "#").unwrap()).unwrap();
        assert_eq!(b[0].outcome.as_str(), "#");
        assert!((b[0].probability - 0.3).abs() < 1e-12);
        assert_eq!(b[0].state, StateVector::basis(3, &[0]).unwrap());
        assert_eq!(b[1].outcome.as_str(), "!#");
        assert!((b[1].probability - 0.7).abs() < 1e-12);
        assert_eq!(b[1].state, StateVector::basis(3, &[1]).unwrap());
    }

    #[test]
    fn sampling_single_branch_and_determinism() {
        let one = vec![Branch {
            outcome: Outcome::new("x"),
            state: StateVector::scalar(2),
            probability: 1.0,
        }];
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(sample_branch(&one, &mut rng).unwrap().outcome.as_str(), "x");
        }
        let two: Vec<Branch> = ["a", "b"]
            .iter()
            .map(|o| Branch {
                outcome: Outcome::new(*o),
                state: StateVector::scalar(2),
                probability: 0.5,
            })
            .collect();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| sample_branch(&two, &mut rng).unwrap().outcome.clone())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert!(sample_branch(&[], &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn sampling_frequency_within_three_sigma() {
        let two: Vec<Branch> = ["a", "b"]
            .iter()
            .map(|o| Branch {
                outcome: Outcome::new(*o),
                state: StateVector::scalar(2),
                probability: 0.5,
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 10_000;
        let hits = (0..n)
            .filter(|_| sample_branch(&two, &mut rng).unwrap().outcome.as_str() == "a")
            .count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.5).abs() <= 3.0 * 0.005, "frequency {freq}");
    }
}
