use num_complex::Complex64;

use super::{amplitude_cap, cap_error, capped_dim, QuantumError, C0, C1, NORM_TOL};

/// Basis index of a register: base-`d` digits, leftmost cell most
/// significant.
pub type BasisIndex = u128;

/// Amplitudes with squared modulus at or below this are dropped.
const DUST: f64 = 1e-32;

/// Normalized state over `n` cells of dimension `d`, stored as its nonzero
/// amplitudes sorted by basis index. Registers of machines that simulate
/// other machines are wide but mostly classical, so the support stays small
/// even when `d^n` is astronomically large. `n = 0` is the scalar state `|⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    d: usize,
    n: usize,
    terms: Vec<(BasisIndex, Complex64)>,
}

/// `d^n` as a basis-index bound, `None` when it does not fit.
fn index_space(d: usize, n: usize) -> Option<BasisIndex> {
    (d as BasisIndex).checked_pow(n as u32)
}

impl StateVector {
    /// Dense constructor: `amps` holds all `d^n` amplitudes.
    pub fn new(d: usize, n: usize, amps: Vec<Complex64>) -> Result<Self, QuantumError> {
        Self::with_tolerance(d, n, amps, NORM_TOL)
    }

    /// Accepts a norm within `tol` of one and rescales to unit norm.
    pub fn with_tolerance(d: usize, n: usize, amps: Vec<Complex64>, tol: f64) -> Result<Self, QuantumError> {
        Self::check_dense(d, n, &amps)?;
        Self::from_terms(d, n, dense_terms(amps), tol)
    }

    /// Rescales any nonzero vector to unit norm.
    pub fn normalize(d: usize, n: usize, amps: Vec<Complex64>) -> Result<Self, QuantumError> {
        Self::check_dense(d, n, &amps)?;
        Self::normalize_terms(d, n, dense_terms(amps))
    }

    fn check_dense(d: usize, n: usize, amps: &[Complex64]) -> Result<(), QuantumError> {
        if d == 0 {
            return Err(QuantumError::Shape("alphabet size must be positive".into()));
        }
        let dim = capped_dim(d, n).ok_or_else(|| cap_error(d, n))?;
        if amps.len() != dim {
            return Err(QuantumError::Shape(format!(
                "{} amplitudes for {n} cells of dimension {d}",
                amps.len()
            )));
        }
        Ok(())
    }

    /// Sparse constructor from `(index, amplitude)` pairs in any order;
    /// repeated indices are summed. The norm must be within `tol` of one.
    pub fn from_terms(
        d: usize,
        n: usize,
        terms: impl IntoIterator<Item = (BasisIndex, Complex64)>,
        tol: f64,
    ) -> Result<Self, QuantumError> {
        let s = Self::unchecked(d, n, terms)?;
        let ns = s.norm_sqr();
        if (ns - 1.0).abs() > tol {
            return Err(QuantumError::NotNormalized(ns));
        }
        Ok(s.rescaled(ns))
    }

    /// Sparse constructor that rescales any nonzero vector to unit norm.
    pub fn normalize_terms(
        d: usize,
        n: usize,
        terms: impl IntoIterator<Item = (BasisIndex, Complex64)>,
    ) -> Result<Self, QuantumError> {
        let s = Self::unchecked(d, n, terms)?;
        let ns = s.norm_sqr();
        if ns <= 0.0 {
            return Err(QuantumError::NotNormalized(ns));
        }
        Ok(s.rescaled(ns))
    }

    fn unchecked(
        d: usize,
        n: usize,
        terms: impl IntoIterator<Item = (BasisIndex, Complex64)>,
    ) -> Result<Self, QuantumError> {
        if d == 0 {
            return Err(QuantumError::Shape("alphabet size must be positive".into()));
        }
        let space = index_space(d, n).ok_or_else(|| cap_error(d, n))?;
        let mut v: Vec<(BasisIndex, Complex64)> = terms.into_iter().collect();
        for (i, z) in &v {
            if *i >= space {
                return Err(QuantumError::Shape(format!("basis index {i} out of range for {n} cells of dimension {d}")));
            }
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(QuantumError::NonFinite);
            }
        }
        v.sort_by_key(|t| t.0);
        let mut terms: Vec<(BasisIndex, Complex64)> = Vec::with_capacity(v.len());
        for (i, z) in v {
            match terms.last_mut() {
                Some(last) if last.0 == i => last.1 += z,
                _ => terms.push((i, z)),
            }
        }
        terms.retain(|(_, z)| z.norm_sqr() > DUST);
        if terms.len() > amplitude_cap() {
            return Err(cap_error(d, n));
        }
        Ok(StateVector { d, n, terms })
    }

    fn rescaled(mut self, ns: f64) -> Self {
        if (ns - 1.0).abs() > 4.0 * f64::EPSILON {
            let k = 1.0 / ns.sqrt();
            self.terms.iter_mut().for_each(|(_, a)| *a *= k);
        }
        self
    }

    pub fn scalar(d: usize) -> Self {
        StateVector {
            d,
            n: 0,
            terms: vec![(0, C1)],
        }
    }

    pub fn basis(d: usize, digits: &[usize]) -> Result<Self, QuantumError> {
        index_space(d, digits.len()).ok_or_else(|| cap_error(d, digits.len()))?;
        let mut idx: BasisIndex = 0;
        for &g in digits {
            if g >= d {
                return Err(QuantumError::Shape(format!("digit {g} out of range for dimension {d}")));
            }
            idx = idx * d as BasisIndex + g as BasisIndex;
        }
        Ok(StateVector {
            d,
            n: digits.len(),
            terms: vec![(idx, C1)],
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn cells(&self) -> usize {
        self.n
    }

    /// Nonzero amplitudes, ascending basis index.
    pub fn terms(&self) -> &[(BasisIndex, Complex64)] {
        &self.terms
    }

    pub fn amplitude(&self, index: BasisIndex) -> Complex64 {
        match self.terms.binary_search_by_key(&index, |t| t.0) {
            Ok(k) => self.terms[k].1,
            Err(_) => C0,
        }
    }

    /// All `d^n` amplitudes, subject to the amplitude cap.
    pub fn to_dense(&self) -> Result<Vec<Complex64>, QuantumError> {
        let dim = capped_dim(self.d, self.n).ok_or_else(|| cap_error(self.d, self.n))?;
        let mut v = vec![C0; dim];
        for (i, a) in &self.terms {
            v[*i as usize] = *a;
        }
        Ok(v)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.iter().map(|(_, a)| a.norm_sqr()).sum()
    }

    pub fn tensor(&self, other: &StateVector) -> Result<StateVector, QuantumError> {
        if self.d != other.d {
            return Err(QuantumError::Shape("tensor of states over different alphabets".into()));
        }
        let n = self.n + other.n;
        index_space(self.d, n).ok_or_else(|| cap_error(self.d, n))?;
        if self.terms.len().saturating_mul(other.terms.len()) > amplitude_cap() {
            return Err(cap_error(self.d, n));
        }
        let shift = index_space(other.d, other.n).expect("fits");
        let terms = self
            .terms
            .iter()
            .flat_map(|(i, a)| other.terms.iter().map(move |(j, b)| (i * shift + j, a * b)))
            .collect();
        Ok(StateVector { d: self.d, n, terms })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64, QuantumError> {
        if self.d != other.d || self.n != other.n {
            return Err(QuantumError::Shape(format!(
                "comparing {}-cell d={} state with {}-cell d={} state",
                self.n, self.d, other.n, other.d
            )));
        }
        let (mut i, mut j) = (0, 0);
        let mut acc = C0;
        while i < self.terms.len() && j < other.terms.len() {
            let (a, b) = (&self.terms[i], &other.terms[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a.1.conj() * b.1;
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(acc)
    }

    /// `|⟨a|b⟩|²`, equality up to global phase.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64, QuantumError> {
        Ok(self.inner(other)?.norm_sqr().min(1.0))
    }

    pub fn stride(&self, cell: usize) -> BasisIndex {
        (self.d as BasisIndex).pow((self.n - 1 - cell) as u32)
    }

    pub fn digit(&self, index: BasisIndex, cell: usize) -> usize {
        ((index / self.stride(cell)) % self.d as BasisIndex) as usize
    }

    /// Every digit of `index`, leftmost cell first.
    pub fn digits(&self, mut index: BasisIndex) -> Vec<usize> {
        let mut v = vec![0; self.n];
        for c in (0..self.n).rev() {
            v[c] = (index % self.d as BasisIndex) as usize;
            index /= self.d as BasisIndex;
        }
        v
    }

    fn index_of(&self, d: usize, digits: impl IntoIterator<Item = usize>) -> BasisIndex {
        digits.into_iter().fold(0, |acc, g| acc * d as BasisIndex + g as BasisIndex)
    }

    /// Probability that `cell` reads `digit` in the standard basis.
    pub fn digit_mass(&self, cell: usize, digit: usize) -> f64 {
        self.terms
            .iter()
            .filter(|(i, _)| self.digit(*i, cell) == digit)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Tensors a basis cell `|digit⟩` in at position `pos` (0 = leftmost).
    pub fn insert_cell(&self, pos: usize, digit: usize) -> Result<StateVector, QuantumError> {
        assert!(pos <= self.n && digit < self.d);
        let n = self.n + 1;
        index_space(self.d, n).ok_or_else(|| cap_error(self.d, n))?;
        let d = self.d as BasisIndex;
        let low = d.pow((self.n - pos) as u32);
        let terms = self
            .terms
            .iter()
            .map(|(i, a)| (((i / low) * d + digit as BasisIndex) * low + i % low, *a))
            .collect();
        Ok(StateVector { d: self.d, n, terms })
    }

    /// Reorders cells: cell `i` of the result is cell `order[i]` of `self`.
    pub fn permute_cells(&self, order: &[usize]) -> StateVector {
        assert_eq!(order.len(), self.n);
        let mut terms: Vec<(BasisIndex, Complex64)> = self
            .terms
            .iter()
            .map(|(i, a)| {
                let g = self.digits(*i);
                (self.index_of(self.d, order.iter().map(|&o| g[o])), *a)
            })
            .collect();
        terms.sort_by_key(|t| t.0);
        StateVector {
            d: self.d,
            n: self.n,
            terms,
        }
    }

    /// Reinterprets the amplitudes over another alphabet by relabeling
    /// digits through `map` (old digit -> new digit).
    pub fn relabel(&self, new_d: usize, map: &[usize]) -> Result<StateVector, QuantumError> {
        let terms: Vec<(BasisIndex, Complex64)> = self
            .terms
            .iter()
            .map(|(i, a)| (self.index_of(new_d, self.digits(*i).into_iter().map(|g| map[g])), *a))
            .collect();
        Self::unchecked(new_d, self.n, terms)
    }
}

fn dense_terms(amps: Vec<Complex64>) -> Vec<(BasisIndex, Complex64)> {
    amps.into_iter()
        .enumerate()
        .filter(|(_, a)| *a != C0)
        .map(|(i, a)| (i as BasisIndex, a))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn basis_tensor() {
        let zero = StateVector::basis(2, &[0]).unwrap();
        let one = StateVector::basis(2, &[1]).unwrap();
        assert_eq!(zero.tensor(&one).unwrap(), StateVector::basis(2, &[0, 1]).unwrap());
    }

    #[test]
    fn superposition_tensor_blank() {
        // alphabet {#, 0}: (|#⟩+|0⟩)/√2 ⊗ |#⟩ = (|##⟩+|0#⟩)/√2
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::new(2, 1, vec![c(h), c(h)]).unwrap();
        let blank = StateVector::basis(2, &[0]).unwrap();
        let t = plus.tensor(&blank).unwrap();
        let want = StateVector::new(2, 2, vec![c(h), c(0.0), c(h), c(0.0)]).unwrap();
        assert!((t.fidelity(&want).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_state() {
        let s = StateVector::scalar(3);
        assert_eq!(s.cells(), 0);
        assert_eq!(s.to_dense().unwrap(), vec![C1]);
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(matches!(
            StateVector::new(2, 1, vec![c(1.0), c(1.0)]),
            Err(QuantumError::NotNormalized(_))
        ));
    }

    #[test]
    fn fidelity_values() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let zero = StateVector::basis(2, &[0]).unwrap();
        let one = StateVector::basis(2, &[1]).unwrap();
        let plus = StateVector::new(2, 1, vec![c(h), c(h)]).unwrap();
        assert!((zero.fidelity(&zero).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(zero.fidelity(&one).unwrap(), 0.0);
        assert!((zero.fidelity(&plus).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn insert_cell_keeps_amplitudes() {
        let s = StateVector::basis(3, &[1, 2]).unwrap();
        let g = s.insert_cell(1, 0).unwrap();
        assert_eq!(g, StateVector::basis(3, &[1, 0, 2]).unwrap());
        let g0 = s.insert_cell(0, 0).unwrap();
        assert_eq!(g0, StateVector::basis(3, &[0, 1, 2]).unwrap());
    }

    #[test]
    fn wide_basis_states_are_cheap() {
        let s = StateVector::basis(8, &[3; 40]).unwrap();
        assert_eq!(s.terms().len(), 1);
        assert_eq!(s.digit(s.terms()[0].0, 17), 3);
        assert!(matches!(s.to_dense(), Err(QuantumError::CapExceeded { .. })));
    }

    #[test]
    fn index_space_is_bounded() {
        assert!(matches!(
            StateVector::basis(2, &[0; 200]),
            Err(QuantumError::CapExceeded { .. })
        ));
    }

    #[test]
    fn permute_and_relabel() {
        let s = StateVector::basis(3, &[0, 1, 2]).unwrap();
        assert_eq!(s.permute_cells(&[2, 0, 1]), StateVector::basis(3, &[2, 0, 1]).unwrap());
        assert_eq!(s.relabel(4, &[3, 2, 1]).unwrap(), StateVector::basis(4, &[3, 2, 1]).unwrap());
    }
}
