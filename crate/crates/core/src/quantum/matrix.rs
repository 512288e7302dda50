use num_complex::Complex64;
use std::fmt;

use super::QuantumError;

pub const C0: Complex64 = Complex64::new(0.0, 0.0);
pub const C1: Complex64 = Complex64::new(1.0, 0.0);

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![C0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C1;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self, QuantumError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 {
            return Err(QuantumError::Shape("empty matrix".into()));
        }
        if rows.iter().any(|row| row.len() != c) {
            return Err(QuantumError::Shape("ragged matrix rows".into()));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Real-valued convenience constructor, mostly for tests and fixtures.
    pub fn from_real(rows: &[&[f64]]) -> Self {
        let v = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(v).expect("well-formed real matrix")
    }

    /// `|ket⟩⟨bra|` for basis indices.
    pub fn unit(n: usize, row: usize, col: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(row, col)] = C1;
        m
    }

    /// `|v⟩⟨w|`.
    pub fn outer(v: &[Complex64], w: &[Complex64]) -> Self {
        let mut m = Self::zeros(v.len(), w.len());
        for (i, a) in v.iter().enumerate() {
            for (j, b) in w.iter().enumerate() {
                m[(i, j)] = a * b.conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(c, r)] = self[(r, c)].conj();
            }
        }
        m
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix, QuantumError> {
        if self.cols != other.rows {
            return Err(QuantumError::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut m = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == C0 {
                    continue;
                }
                let orow = other.row(k);
                let out = &mut m.data[r * other.cols..(r + 1) * other.cols];
                for (o, b) in out.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        Ok(m)
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, QuantumError> {
        if self.shape() != other.shape() {
            return Err(QuantumError::Shape("adding matrices of different shape".into()));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix, QuantumError> {
        self.add(&other.scale(-C1))
    }

    pub fn scale(&self, s: Complex64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// Kronecker product, `self` on the most significant index.
    pub fn kron(&self, other: &Matrix) -> Matrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut m = Self::zeros(rows, cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let a = self[(r1, c1)];
                if a == C0 {
                    continue;
                }
                for r2 in 0..other.rows {
                    for c2 in 0..other.cols {
                        m[(r1 * other.rows + r2, c1 * other.cols + c2)] = a * other[(r2, c2)];
                    }
                }
            }
        }
        m
    }

    /// Largest entrywise modulus of `self - other`, with its location.
    pub fn max_deviation(&self, other: &Matrix) -> (f64, usize, usize) {
        let mut worst = (0.0, 0, 0);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let d = (self[(r, c)] - other[(r, c)]).norm();
                if d > worst.0 {
                    worst = (d, r, c);
                }
            }
        }
        worst
    }

    pub fn approx_eq(&self, other: &Matrix, tol: f64) -> bool {
        self.shape() == other.shape() && self.max_deviation(other).0 <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square()
            && self
                .adjoint()
                .mul(self)
                .map(|p| p.approx_eq(&Matrix::identity(self.rows), tol))
                .unwrap_or(false)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.approx_eq(&self.adjoint(), tol)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.data.iter().all(|z| z.norm() <= tol)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Rows and columns reindexed by a digit permutation of a multi-cell
    /// operator: output cell `i` of the result is input cell `perm[i]` of `self`.
    /// `dims[j]` is the local dimension of cell `j` of `self`.
    pub fn permute_cells(&self, dims: &[usize], perm: &[usize]) -> Matrix {
        let map = cell_permutation(dims, perm);
        let mut m = Self::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(r, c)] = self[(map[r], map[c])];
            }
        }
        m
    }
}

/// For an index `i` over cells laid out as `perm.map(|p| dims[p])`, the index
/// of the same basis string over cells laid out as `dims`.
pub fn cell_permutation(dims: &[usize], perm: &[usize]) -> Vec<usize> {
    let total: usize = dims.iter().product();
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut old_strides = vec![1usize; dims.len()];
    for j in (0..dims.len().saturating_sub(1)).rev() {
        old_strides[j] = old_strides[j + 1] * dims[j + 1];
    }
    (0..total)
        .map(|mut idx| {
            let mut old = 0;
            for k in (0..new_dims.len()).rev() {
                let digit = idx % new_dims[k];
                idx /= new_dims[k];
                old += digit * old_strides[perm[k]];
            }
            old
        })
        .collect()
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_of_identities_is_identity() {
        let i3 = Matrix::identity(3);
        assert!(i3.kron(&i3).approx_eq(&Matrix::identity(9), 0.0));
    }

    #[test]
    fn permute_cells_swaps_operands() {
        // |01⟩⟨01| over qubits becomes |10⟩⟨10| once operands are exchanged.
        let p = Matrix::unit(4, 1, 1);
        let q = p.permute_cells(&[2, 2], &[1, 0]);
        assert_eq!(q[(2, 2)], C1);
        assert_eq!(q[(1, 1)], C0);
    }

    #[test]
    fn unitary_check() {
        let h = Matrix::from_real(&[&[1.0, 1.0], &[1.0, -1.0]]).scale(C1 * std::f64::consts::FRAC_1_SQRT_2);
        assert!(h.is_unitary(1e-12));
        assert!(!Matrix::from_real(&[&[1.0, 1.0], &[0.0, 1.0]]).is_unitary(1e-9));
    }
}
