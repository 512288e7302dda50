use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{amplitude_cap, cap_error, BasisIndex, QuantumError, StateVector, SCHMIDT_TOL};

#[derive(Clone, Debug, PartialEq)]
pub struct EntanglementProfile {
    pub schmidt_rank: usize,
    pub purity: f64,
    pub singular_values: Vec<f64>,
}

/// Coefficient matrix across `subset | rest`, restricted to the row and
/// column labels that occur in the support (the zero rows and columns do
/// not change the singular values). Labels are basis indices of the subset
/// (in the given order) and of the remaining cells (in register order).
struct Split {
    m: DMatrix<Complex64>,
    rows: Vec<BasisIndex>,
    cols: Vec<BasisIndex>,
    rest: Vec<usize>,
}

fn split(state: &StateVector, subset: &[usize]) -> Result<Split, QuantumError> {
    let n = state.cells();
    if subset.is_empty() || subset.len() >= n {
        return Err(QuantumError::Bipartition);
    }
    let mut seen = vec![false; n];
    for &c in subset {
        if c >= n || seen[c] {
            return Err(QuantumError::Bipartition);
        }
        seen[c] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&c| !seen[c]).collect();
    let d = state.d() as BasisIndex;
    let label = |g: &[usize], cells: &[usize]| cells.iter().fold(0, |acc: BasisIndex, &c| acc * d + g[c] as BasisIndex);
    let labeled: Vec<(BasisIndex, BasisIndex, Complex64)> = state
        .terms()
        .iter()
        .map(|&(i, a)| {
            let g = state.digits(i);
            (label(&g, subset), label(&g, &rest), a)
        })
        .collect();
    let mut rows: Vec<BasisIndex> = labeled.iter().map(|t| t.0).collect();
    let mut cols: Vec<BasisIndex> = labeled.iter().map(|t| t.1).collect();
    rows.sort_unstable();
    rows.dedup();
    cols.sort_unstable();
    cols.dedup();
    if rows.len().saturating_mul(cols.len()) > amplitude_cap() {
        return Err(cap_error(state.d(), n));
    }
    let mut m = DMatrix::zeros(rows.len(), cols.len());
    for (r, c, a) in labeled {
        let r = rows.binary_search(&r).expect("present");
        let c = cols.binary_search(&c).expect("present");
        m[(r, c)] = a;
    }
    Ok(Split { m, rows, cols, rest })
}

/// Schmidt rank and reduced-state purity across `subset | rest`.
pub fn entanglement_profile(state: &StateVector, subset: &[usize]) -> Result<EntanglementProfile, QuantumError> {
    let svd = split(state, subset)?.m.svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(EntanglementProfile {
        schmidt_rank: sv.iter().filter(|&&s| s > SCHMIDT_TOL).count(),
        purity: sv.iter().map(|s| s.powi(4)).sum(),
        singular_values: sv,
    })
}

/// Leading term `λ a bᵀ` of `m` with unit `a`, `b`, returning `(a, b, λ²)`.
/// The largest entry of `a` is made real and positive.
/// Works on the Gram matrix of the smaller side, whose dimension is at most
/// the number of distinct labels there.
fn top_pair(m: &DMatrix<Complex64>) -> (DVector<Complex64>, DVector<Complex64>, f64) {
    if m.nrows() > m.ncols() {
        let (b, a, l) = top_pair(&m.transpose());
        return (a, b, l);
    }
    let gram = m * m.adjoint();
    let eig = gram.symmetric_eigen();
    let k = eig.eigenvalues.imax();
    let mut a = eig.eigenvectors.column(k).into_owned();
    let lead = a.iter().fold(Complex64::new(0.0, 0.0), |acc, z| if z.norm() > acc.norm() + 1e-12 { *z } else { acc });
    if lead.norm() > 0.0 {
        a *= lead.conj() / lead.norm();
    }
    let b = (a.adjoint() * m).transpose();
    let norm = b.norm();
    (a, b / Complex64::new(norm.max(f64::MIN_POSITIVE), 0.0), eig.eigenvalues[k])
}

/// Splits a product state into its `subset` factor and the factor on the
/// remaining cells (kept in their original order). Returns `None` when the
/// reduced purity is below `1 - tol`.
pub fn factor_out(
    state: &StateVector,
    subset: &[usize],
    tol: f64,
) -> Result<Option<(StateVector, StateVector)>, QuantumError> {
    let d = state.d();
    let n = state.cells();
    if subset.len() == n {
        let order: Vec<usize> = subset.to_vec();
        return Ok(Some((state.permute_cells(&order), StateVector::scalar(d))));
    }
    if subset.is_empty() {
        return Ok(Some((StateVector::scalar(d), state.clone())));
    }
    let Split { m, rows, cols, rest } = split(state, subset)?;
    let (ua, ub, top) = top_pair(&m);
    if top < 1.0 - tol {
        return Ok(None);
    }
    let a: Vec<_> = rows.iter().zip(ua.iter()).map(|(&i, &z)| (i, z)).collect();
    let b: Vec<_> = cols.iter().zip(ub.iter()).map(|(&i, &z)| (i, z)).collect();
    Ok(Some((
        StateVector::normalize_terms(d, subset.len(), a)?,
        StateVector::normalize_terms(d, rest.len(), b)?,
    )))
}
