use num_complex::Complex64;

use super::{
    observable, Alphabet, Matrix, Outcome, QuantumError, Transform, C0, C1, COMPLETENESS_TOL,
};

/// Unitary dilation of a `k`-cell admissible transformation onto
/// `data^k ⊗ class^k`, data cells most significant. The input column for
/// `|j⟩|#^k⟩` is `∑_c (M_c|j⟩)|c #^{k-1}⟩`.
#[derive(Clone, Debug)]
pub struct Dilation {
    pub v: Matrix,
    pub k: usize,
    pub data_dim: usize,
    pub class_alphabet: Alphabet,
    pub class_dim: usize,
    blank: usize,
}

impl Dilation {
    /// Class-register index of `|c #^{k-1}⟩`.
    pub fn class_index(&self, c: usize) -> usize {
        let n = self.class_alphabet.len();
        let mut idx = c;
        for _ in 1..self.k {
            idx = idx * n + self.blank;
        }
        idx
    }

    pub fn blank_index(&self) -> usize {
        self.class_index(self.blank)
    }

    /// Applies `V` to `|ψ⟩|#^k⟩` and reads the class register, returning
    /// `(outcome, data post-state, probability)` for every outcome with
    /// nonzero weight.
    pub fn readout(&self, psi: &[Complex64]) -> Vec<(Outcome, Vec<Complex64>, f64)> {
        let cd = self.class_dim;
        let mut input = vec![C0; self.data_dim * cd];
        for (j, a) in psi.iter().enumerate() {
            input[j * cd + self.blank_index()] = *a;
        }
        let out = self.v.apply(&input);
        let mut res = Vec::new();
        for c in 0..self.class_alphabet.len() {
            let ci = self.class_index(c);
            let data: Vec<Complex64> = (0..self.data_dim).map(|j| out[j * cd + ci]).collect();
            let p: f64 = data.iter().map(|z| z.norm_sqr()).sum();
            if p > super::PRUNE_EPS {
                let s = 1.0 / p.sqrt();
                res.push((
                    Outcome::new(self.class_alphabet.symbol(c)),
                    data.into_iter().map(|z| z * s).collect(),
                    p,
                ));
            }
        }
        res
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn orthogonalize(v: &mut [Complex64], basis: &[Vec<Complex64>]) {
    for _ in 0..2 {
        for b in basis {
            let p = dot(b, v);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= p * y;
            }
        }
    }
}

/// Builds the dilation unitary of `t` over the classical register alphabet
/// `class_alphabet`; its blank is `#` when present, else the first symbol.
pub fn dilate_admissible(t: &Transform, class_alphabet: &Alphabet) -> Result<Dilation, QuantumError> {
    if !t.is_arity_preserving() {
        return Err(QuantumError::Shape("dilation needs an arity-preserving transform".into()));
    }
    if let Err(v) = super::check_completeness(t) {
        return Err(QuantumError::Incomplete(v.deviation, v.row, v.col));
    }
    let k = t.arity_in();
    let data_dim = t.d().pow(k as u32);
    let nc = class_alphabet.len();
    let class_dim = nc.pow(k as u32);
    let total = data_dim * class_dim;
    super::capped_dim(total, 2).ok_or_else(|| super::cap_error(total, 2))?;
    let blank = class_alphabet.digit("#").unwrap_or(0);
    let mut dil = Dilation {
        v: Matrix::zeros(total, total),
        k,
        data_dim,
        class_alphabet: class_alphabet.clone(),
        class_dim,
        blank,
    };

    let mut fixed: Vec<Option<Vec<Complex64>>> = vec![None; total];
    let hb = dil.blank_index();
    for j in 0..data_dim {
        let mut col = vec![C0; total];
        for (o, m) in t.branches() {
            let ci = dil.class_index(class_alphabet.digit(o.as_str())?);
            for r in 0..data_dim {
                col[r * class_dim + ci] += m[(r, j)];
            }
        }
        fixed[j * class_dim + hb] = Some(col);
    }

    let mut basis: Vec<Vec<Complex64>> = fixed.iter().flatten().cloned().collect();
    let mut extra = Vec::new();
    let needed = total - basis.len();
    for threshold in [0.1, 1e-6] {
        for cand in 0..total {
            if extra.len() == needed {
                break;
            }
            let mut v = vec![C0; total];
            v[cand] = C1;
            orthogonalize(&mut v, &basis);
            let norm = dot(&v, &v).re.sqrt();
            if norm > threshold {
                v.iter_mut().for_each(|x| *x /= norm);
                basis.push(v.clone());
                extra.push(v);
            }
        }
    }
    if extra.len() != needed {
        return Err(QuantumError::NotUnitary);
    }
    let mut extra = extra.into_iter();
    for (c, col) in fixed.into_iter().enumerate() {
        let col = col.unwrap_or_else(|| extra.next().expect("counted"));
        for (r, z) in col.into_iter().enumerate() {
            dil.v[(r, c)] = z;
        }
    }
    if !dil.v.is_unitary(COMPLETENESS_TOL) {
        return Err(QuantumError::NotUnitary);
    }
    Ok(dil)
}

/// Projective measurement of the class register of a dilation, viewed as a
/// single cell of dimension `data_dim · class_dim`. Class strings other than
/// `|c #^{k-1}⟩` fall into one extra `invalid` outcome.
pub fn dilation_readout(dil: &Dilation) -> Result<Transform, QuantumError> {
    let total = dil.data_dim * dil.class_dim;
    let id_data = Matrix::identity(dil.data_dim);
    let mut covered = vec![false; dil.class_dim];
    let mut branches = Vec::new();
    for c in 0..dil.class_alphabet.len() {
        let ci = dil.class_index(c);
        covered[ci] = true;
        branches.push((
            Outcome::new(dil.class_alphabet.symbol(c)),
            id_data.kron(&Matrix::unit(dil.class_dim, ci, ci)),
        ));
    }
    let mut rest = Matrix::zeros(dil.class_dim, dil.class_dim);
    for (i, _) in covered.iter().enumerate().filter(|(_, c)| !**c) {
        rest[(i, i)] = C1;
    }
    if !rest.is_zero(0.0) {
        branches.push((Outcome::new("invalid"), id_data.kron(&rest)));
    }
    let alpha = Alphabet::new((0..total).map(|i| format!("r{i}")))?;
    observable("readout", &alpha, branches)
}

/// `R = V⊗|F⟩⟨T| + V†⊗|T⟩⟨F|` on the first of `k` ancilla qubits (basis
/// order `T`, `F`) and `P_T = (I + R)/2`, `P_F = (I − R)/2`.
#[derive(Clone, Debug)]
pub struct Reflection {
    pub r: Matrix,
    pub p_top: Matrix,
    pub p_bottom: Matrix,
    pub dim: usize,
    pub k: usize,
}

pub fn reflection_measurement(v: &Matrix, k: usize) -> Result<Reflection, QuantumError> {
    if !v.is_unitary(COMPLETENESS_TOL) {
        return Err(QuantumError::NotUnitary);
    }
    assert!(k >= 1);
    let rest = Matrix::identity(1 << (k - 1));
    let down = Matrix::unit(2, 1, 0);
    let up = Matrix::unit(2, 0, 1);
    let r = v.kron(&down).kron(&rest).add(&v.adjoint().kron(&up).kron(&rest))?;
    if !r.is_hermitian(COMPLETENESS_TOL) || !r.is_unitary(COMPLETENESS_TOL) {
        return Err(QuantumError::NotUnitary);
    }
    let id = Matrix::identity(r.rows());
    let half = Complex64::new(0.5, 0.0);
    Ok(Reflection {
        p_top: id.add(&r)?.scale(half),
        p_bottom: id.sub(&r)?.scale(half),
        dim: v.rows(),
        k,
        r,
    })
}

impl Reflection {
    fn alphabet(&self) -> Result<Alphabet, QuantumError> {
        Alphabet::new((0..self.r.rows()).map(|i| format!("r{i}")))
    }

    /// `{P_T, P_F}` as a one-cell projective measurement.
    pub fn measurement(&self) -> Result<Transform, QuantumError> {
        observable(
            "reflect",
            &self.alphabet()?,
            vec![(Outcome::top(), self.p_top.clone()), (Outcome::bottom(), self.p_bottom.clone())],
        )
    }

    /// L: standard measurement of the first ancilla.
    pub fn ancilla_measurement(&self) -> Result<Transform, QuantumError> {
        let id = Matrix::identity(self.dim);
        let rest = Matrix::identity(1 << (self.k - 1));
        observable(
            "L",
            &self.alphabet()?,
            vec![
                (Outcome::top(), id.kron(&Matrix::unit(2, 0, 0)).kron(&rest)),
                (Outcome::bottom(), id.kron(&Matrix::unit(2, 1, 1)).kron(&rest)),
            ],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{apply_branching, std_measurement, unitary, StateVector};

    #[test]
    fn unitary_dilation_is_block_embedding() {
        let a = Alphabet::new(["0", "1"]).unwrap();
        let h = Matrix::from_real(&[&[1.0, 1.0], &[1.0, -1.0]]).scale(C1 * std::f64::consts::FRAC_1_SQRT_2);
        let t = unitary("H", &a, h.clone()).unwrap();
        let dil = dilate_admissible(&t, &Alphabet::new(["_"]).unwrap()).unwrap();
        assert!(dil.v.approx_eq(&h, 1e-12));
    }

    #[test]
    fn std_dilation_columns() {
        let a = Alphabet::new(["0", "1"]).unwrap();
        let sc = Alphabet::new(["#", "0", "1"]).unwrap();
        let dil = dilate_admissible(&std_measurement(&a), &sc).unwrap();
        // Column |b⟩|#⟩ is |b⟩|b'⟩; class digit of b' is b + 1.
        for b in 0..2 {
            let col = dil.v.column(b * 3);
            let mut want = vec![C0; 6];
            want[b * 3 + b + 1] = C1;
            assert_eq!(col, want);
        }
        assert!(dil.v.is_unitary(1e-12));
    }

    #[test]
    fn readout_matches_branching() {
        let a = Alphabet::new(["#", "0", "1"]).unwrap();
        let t = crate::quantum::diag(&a, "0", "1").unwrap();
        let sc = Alphabet::new(["#", "T", "F", "0", "1"]).unwrap();
        let dil = dilate_admissible(&t, &sc).unwrap();
        let psi = StateVector::new(3, 1, vec![C1 * 0.6, C1 * 0.0, C1 * 0.8]).unwrap();
        let want = apply_branching(&psi, &[0], &t).unwrap();
        let got = dil.readout(&psi.to_dense().unwrap());
        assert_eq!(got.len(), want.len());
        for w in &want {
            let g = got.iter().find(|g| g.0 == w.outcome).unwrap();
            assert!((g.2 - w.probability).abs() < 1e-12);
            let post = StateVector::new(3, 1, g.1.clone()).unwrap();
            assert!((post.fidelity(&w.state).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(dilation_readout(&dil).is_ok());
    }

    #[test]
    fn reflection_of_identity() {
        let refl = reflection_measurement(&Matrix::identity(2), 1).unwrap();
        let m = refl.measurement().unwrap();
        let r = m.branches()[0].1.mul(&m.branches()[0].1).unwrap();
        assert!(r.approx_eq(&refl.p_top, 1e-12));
        assert!(refl.r.mul(&refl.r).unwrap().approx_eq(&Matrix::identity(4), 1e-12));
        assert!(refl.ancilla_measurement().is_ok());
    }

    #[test]
    fn reflection_rejects_non_unitary() {
        assert!(reflection_measurement(&Matrix::from_real(&[&[1.0, 1.0], &[0.0, 1.0]]), 1).is_err());
    }
}
