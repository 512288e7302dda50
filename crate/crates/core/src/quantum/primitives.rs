use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Matrix, Outcome, QuantumError, Transform, C1, COMPLETENESS_TOL};

/// Ordered cell alphabet Σ_Q; a symbol's position is its basis digit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Alphabet {
    symbols: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl TryFrom<Vec<String>> for Alphabet {
    type Error = QuantumError;
    fn try_from(v: Vec<String>) -> Result<Self, Self::Error> {
        Alphabet::new(v)
    }
}

impl From<Alphabet> for Vec<String> {
    fn from(a: Alphabet) -> Self {
        a.symbols
    }
}

impl Alphabet {
    pub fn new<I, S>(symbols: I) -> Result<Self, QuantumError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(QuantumError::Shape("empty alphabet".into()));
        }
        let mut index = HashMap::new();
        for (i, s) in symbols.iter().enumerate() {
            if s.is_empty() || s.chars().any(char::is_whitespace) {
                return Err(QuantumError::UnknownSymbol(s.clone()));
            }
            if index.insert(s.clone(), i).is_some() {
                return Err(QuantumError::DuplicateOutcome(s.clone()));
            }
        }
        Ok(Alphabet { symbols, index })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, digit: usize) -> &str {
        &self.symbols[digit]
    }

    pub fn contains(&self, s: &str) -> bool {
        self.index.contains_key(s)
    }

    pub fn digit(&self, s: &str) -> Result<usize, QuantumError> {
        self.index
            .get(s)
            .copied()
            .ok_or_else(|| QuantumError::UnknownSymbol(s.to_string()))
    }

    pub fn digits(&self, word: &[&str]) -> Result<Vec<usize>, QuantumError> {
        word.iter().map(|s| self.digit(s)).collect()
    }

    /// True when every symbol is a single character, so words can be
    /// written without separators.
    pub fn is_compact(&self) -> bool {
        self.symbols.iter().all(|s| s.chars().count() == 1)
    }

    pub fn word(&self, digits: &[usize]) -> String {
        let parts: Vec<&str> = digits.iter().map(|&g| self.symbol(g)).collect();
        if self.is_compact() {
            parts.concat()
        } else {
            parts.join(",")
        }
    }

    pub fn basis_ket(&self, s: &str) -> Result<Vec<Complex64>, QuantumError> {
        let mut v = vec![Complex64::new(0.0, 0.0); self.len()];
        v[self.digit(s)?] = C1;
        Ok(v)
    }
}

fn projector(d: usize, g: usize) -> Matrix {
    Matrix::unit(d, g, g)
}

/// Std: `{|τ⟩⟨τ|}` with outcome τ for each symbol.
pub fn std_measurement(alpha: &Alphabet) -> Transform {
    let d = alpha.len();
    let branches = (0..d)
        .map(|g| (Outcome::new(alpha.symbol(g)), projector(d, g)))
        .collect();
    Transform::new("Std", d, 1, 1, branches).expect("standard basis is complete")
}

/// T_τ: outcome τ on `|τ⟩⟨τ|`, `!τ` on the complement.
pub fn blank_test(alpha: &Alphabet, tau: &str) -> Result<Transform, QuantumError> {
    let d = alpha.len();
    let g = alpha.digit(tau)?;
    let p = projector(d, g);
    let q = Matrix::identity(d).sub(&p)?;
    Transform::new(
        format!("T{tau}"),
        d,
        1,
        1,
        vec![(Outcome::new(tau), p), (Outcome::negated(tau), q)],
    )
}

/// P_[a,b]: exchanges `|a⟩` and `|b⟩`, fixes the rest. Equal symbols give
/// the identity.
pub fn perm(alpha: &Alphabet, a: &str, b: &str) -> Result<Transform, QuantumError> {
    let d = alpha.len();
    let (ga, gb) = (alpha.digit(a)?, alpha.digit(b)?);
    let mut m = Matrix::identity(d);
    if ga != gb {
        m[(ga, ga)] = Complex64::new(0.0, 0.0);
        m[(gb, gb)] = Complex64::new(0.0, 0.0);
        m[(ga, gb)] = C1;
        m[(gb, ga)] = C1;
    }
    Transform::new(format!("P[{a},{b}]"), d, 1, 1, vec![(Outcome::lambda(), m)])
}

/// Swap of two cells.
pub fn swap(alpha: &Alphabet) -> Transform {
    let d = alpha.len();
    let mut m = Matrix::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            m[(b * d + a, a * d + b)] = C1;
        }
    }
    Transform::new("Swap", d, 2, 2, vec![(Outcome::lambda(), m)]).expect("swap is unitary")
}

/// U_I on `k` cells.
pub fn identity(alpha: &Alphabet, k: usize) -> Transform {
    let d = alpha.len();
    Transform::new("-", d, k, k, vec![(Outcome::lambda(), Matrix::identity(d.pow(k as u32)))])
        .expect("identity is unitary")
}

fn cells_for(d: usize, dim: usize) -> Result<usize, QuantumError> {
    let mut k = 0;
    let mut acc = 1;
    while acc < dim {
        acc *= d;
        k += 1;
    }
    if acc != dim {
        return Err(QuantumError::Shape(format!("dimension {dim} is not a power of {d}")));
    }
    Ok(k)
}

/// U_V: single λ branch carrying the unitary `v`.
pub fn unitary(name: impl Into<String>, alpha: &Alphabet, v: Matrix) -> Result<Transform, QuantumError> {
    if !v.is_square() {
        return Err(QuantumError::Shape("unitary must be square".into()));
    }
    if !v.is_unitary(COMPLETENESS_TOL) {
        return Err(QuantumError::NotUnitary);
    }
    let k = cells_for(alpha.len(), v.rows())?;
    Transform::new(name, alpha.len(), k, k, vec![(Outcome::lambda(), v)])
}

/// O_O: a projective measurement given by its eigenprojectors.
pub fn observable(
    name: impl Into<String>,
    alpha: &Alphabet,
    projectors: Vec<(Outcome, Matrix)>,
) -> Result<Transform, QuantumError> {
    let dim = projectors
        .first()
        .map(|(_, p)| p.rows())
        .ok_or(QuantumError::NoBranches)?;
    let k = cells_for(alpha.len(), dim)?;
    let t = Transform::unchecked(name, alpha.len(), k, k, projectors)?;
    if let Some(why) = t.projective_violation(COMPLETENESS_TOL) {
        return Err(QuantumError::NotProjective(why));
    }
    Ok(t)
}

/// O_[a,b]: projects on `(|a⟩±|b⟩)/√2` with outcomes T and F, and on each
/// other symbol with that symbol as outcome.
pub fn diag(alpha: &Alphabet, a: &str, b: &str) -> Result<Transform, QuantumError> {
    let d = alpha.len();
    let (ga, gb) = (alpha.digit(a)?, alpha.digit(b)?);
    if ga == gb {
        return Err(QuantumError::Shape(format!("O[{a},{b}] needs two distinct symbols")));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut plus = vec![Complex64::new(0.0, 0.0); d];
    let mut minus = plus.clone();
    plus[ga] = Complex64::new(h, 0.0);
    plus[gb] = Complex64::new(h, 0.0);
    minus[ga] = Complex64::new(h, 0.0);
    minus[gb] = Complex64::new(-h, 0.0);
    let mut branches = vec![
        (Outcome::top(), Matrix::outer(&plus, &plus)),
        (Outcome::bottom(), Matrix::outer(&minus, &minus)),
    ];
    for g in (0..d).filter(|&g| g != ga && g != gb) {
        branches.push((Outcome::new(alpha.symbol(g)), projector(d, g)));
    }
    observable(format!("O[{a},{b}]"), alpha, branches)
}

/// `|τ₀⟩⟨|`: creates one cell in state τ₀.
pub fn initialization(alpha: &Alphabet, tau0: &str) -> Result<Transform, QuantumError> {
    let d = alpha.len();
    let mut m = Matrix::zeros(d, 1);
    m[(alpha.digit(tau0)?, 0)] = C1;
    Transform::new(format!("init({tau0})"), d, 0, 1, vec![(Outcome::lambda(), m)])
}

/// `{|⟩⟨τ|}`: measures one cell in the standard basis and discards it.
pub fn destructive_measurement(alpha: &Alphabet) -> Transform {
    let d = alpha.len();
    let branches = (0..d)
        .map(|g| {
            let mut m = Matrix::zeros(1, d);
            m[(0, g)] = C1;
            (Outcome::new(alpha.symbol(g)), m)
        })
        .collect();
    Transform::new("discard", d, 1, 0, branches).expect("complete")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{apply_branching, check_completeness, compose_sequential, StateVector};

    fn tri() -> Alphabet {
        Alphabet::new(["#", "0", "1"]).unwrap()
    }

    #[test]
    fn perm_moves_zero_to_blank() {
        let p = perm(&tri(), "0", "#").unwrap();
        let b = apply_branching(&StateVector::basis(3, &[1]).unwrap(), &[0], &p).unwrap();
        assert_eq!(b.len(), 1);
        assert!(b[0].outcome.is_lambda());
        assert_eq!(b[0].state, StateVector::basis(3, &[0]).unwrap());
        assert!((b[0].probability - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diag_on_first_symbol_is_fair() {
        let t = diag(&tri(), "0", "1").unwrap();
        let b = apply_branching(&StateVector::basis(3, &[1]).unwrap(), &[0], &t).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::new(3, 1, vec![C1 * 0.0, C1 * h, C1 * h]).unwrap();
        let minus = StateVector::new(3, 1, vec![C1 * 0.0, C1 * h, C1 * -h]).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].outcome, Outcome::top());
        assert!((b[0].probability - 0.5).abs() < 1e-12);
        assert!((b[0].state.fidelity(&plus).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(b[1].outcome, Outcome::bottom());
        assert!((b[1].probability - 0.5).abs() < 1e-12);
        assert!((b[1].state.fidelity(&minus).unwrap() - 1.0).abs() < 1e-12);
        let outs: Vec<_> = t.outcomes().map(|o| o.as_str()).collect();
        assert_eq!(outs, ["T", "F", "#"]);
    }

    #[test]
    fn blank_test_on_blank() {
        let b = apply_branching(&StateVector::basis(3, &[0]).unwrap(), &[0], &blank_test(&tri(), "#").unwrap()).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].outcome, Outcome::blank());
        assert!((b[0].probability - 1.0).abs() < 1e-15);
    }

    #[test]
    fn primitives_are_complete() {
        let a = tri();
        let all = [
            std_measurement(&a),
            blank_test(&a, "#").unwrap(),
            perm(&a, "0", "1").unwrap(),
            perm(&a, "0", "0").unwrap(),
            swap(&a),
            diag(&a, "#", "1").unwrap(),
            identity(&a, 2),
            initialization(&a, "0").unwrap(),
            destructive_measurement(&a),
        ];
        for t in &all {
            assert!(check_completeness(t).is_ok(), "{}", t.name());
        }
    }

    #[test]
    fn unitary_accepted_and_rejected() {
        let a = Alphabet::new(["0", "1"]).unwrap();
        let h = Matrix::from_real(&[&[1.0, 1.0], &[1.0, -1.0]]).scale(C1 * std::f64::consts::FRAC_1_SQRT_2);
        let u = unitary("H", &a, h).unwrap();
        assert!(check_completeness(&u).is_ok());
        assert_eq!(u.outcomes().next().unwrap(), &Outcome::lambda());
        let bad = Matrix::from_real(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert_eq!(unitary("N", &a, bad).unwrap_err(), QuantumError::NotUnitary);
    }

    #[test]
    fn observable_rejects_non_projector() {
        let a = Alphabet::new(["0", "1"]).unwrap();
        let half = Matrix::identity(2).scale(C1 * 0.5f64.sqrt());
        let r = observable("O", &a, vec![(Outcome::new("a"), half.clone()), (Outcome::new("b"), half)]);
        assert!(matches!(r, Err(QuantumError::NotProjective(_))));
    }

    #[test]
    fn unknown_symbol() {
        assert_eq!(perm(&tri(), "0", "x").unwrap_err(), QuantumError::UnknownSymbol("x".into()));
    }

    #[test]
    fn init_then_discard_is_trivial() {
        let a = tri();
        let t = compose_sequential(&initialization(&a, "1").unwrap(), &destructive_measurement(&a)).unwrap();
        let live: Vec<_> = t.branches().iter().filter(|(_, m)| !m.is_zero(0.0)).collect();
        assert_eq!(live.len(), 1);
        assert_eq!(live[0].0.as_str(), "1");
    }
}
