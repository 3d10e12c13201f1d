//! Dense symmetric linear algebra shared by all solvers: eigendecomposition,
//! PSD square root, spectral norm, entrywise soft-thresholding, centering,
//! and the Euclidean projection onto the trace-one PSD set.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance for treating a matrix as symmetric.
const SYM_TOL: f64 = 1e-12;

/// A dense symmetric real matrix.
///
/// Construction validates symmetry (within `1e-12` relative) and finiteness.
/// Derefs to [`DMatrix<f64>`] for read access.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidInput(format!(
                "expected square nonempty matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        let scale = m.amax().max(1.0);
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                if (m[(i, j)] - m[(j, i)]).abs() > SYM_TOL * scale {
                    return Err(Error::InvalidInput(format!(
                        "matrix not symmetric at ({i},{j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        Ok(Self(m))
    }

    /// Builds from a matrix that is symmetric by construction up to roundoff,
    /// symmetrizing the entries instead of validating them.
    pub fn symmetrize(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidInput(format!(
                "expected square nonempty matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(Self(sym))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }
}

impl std::ops::Deref for SymMatrix {
    type Target = DMatrix<f64>;
    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted
/// descending and orthonormal eigenvectors in matching column order.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenPairs {
    /// Reconstructs `V diag(w) V^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = &self.vectors * DMatrix::from_diagonal(&self.values);
        scaled * self.vectors.transpose()
    }
}

/// Symmetric eigendecomposition, eigenvalues descending.
pub fn sym_eigen(m: &SymMatrix) -> Result<EigenPairs> {
    let eig = m
        .as_matrix()
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or_else(|| Error::NumericalFailure("symmetric eigendecomposition did not converge".into()))?;
    let n = m.dim();
    let mut order: Vec<usize> = (0..n).collect();
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("non-finite eigenvalues".into()));
    }
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigenPairs { values, vectors })
}

/// PSD square root via eigendecomposition. Small negative eigenvalues above
/// `-1e-6 * ||m||_2` are clamped to zero to absorb floating-point drift.
pub fn psd_sqrt(m: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eigen(m)?;
    let spectral = eig.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let floor = -1e-6 * spectral;
    for &v in eig.values.iter() {
        if v < floor {
            return Err(Error::NotPsd(format!(
                "eigenvalue {v} below tolerance {floor}"
            )));
        }
    }
    let roots = DVector::from_iterator(
        eig.values.len(),
        eig.values.iter().map(|&v| if v > 0.0 { v.sqrt() } else { 0.0 }),
    );
    let half = &eig.vectors * DMatrix::from_diagonal(&roots);
    SymMatrix::symmetrize(&half * eig.vectors.transpose())
}

/// Largest absolute eigenvalue.
pub fn spectral_norm(m: &SymMatrix) -> Result<f64> {
    let eig = sym_eigen(m)?;
    Ok(eig.values.iter().fold(0.0f64, |a, &v| a.max(v.abs())))
}

/// Entrywise soft-thresholding: `sign(x) * max(|x| - t, 0)`.
pub fn soft_threshold(m: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if t < 0.0 {
        return Err(Error::InvalidInput(format!("negative threshold {t}")));
    }
    Ok(m.map(|x| x.signum() * (x.abs() - t).max(0.0)))
}

/// The centering matrix `H = I - 11^T / n`.
pub fn centering_matrix(n: usize) -> SymMatrix {
    let mut h = DMatrix::from_element(n, n, -1.0 / n as f64);
    for i in 0..n {
        h[(i, i)] += 1.0;
    }
    SymMatrix(h)
}

/// Euclidean projection onto `{Pi PSD : tr(Pi) = 1}` by water-filling the
/// eigenvalues: keep `w_i - theta` clipped at zero with `theta` chosen so the
/// surviving eigenvalues sum to one.
pub fn project_trace_one_psd(w: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eigen(w)?;
    let p = eig.values.len();
    // m = max{ j : w_j - (1/j)(sum_{i<=j} w_i - 1) > 0 }, eigenvalues descending.
    // Tied eigenvalues share the stable sorted order, so the formula stays
    // well defined for repeated eigenvalues.
    let mut m = 1;
    let mut running = 0.0;
    for j in 1..=p {
        running += eig.values[j - 1];
        if eig.values[j - 1] - (running - 1.0) / j as f64 > 0.0 {
            m = j;
        }
    }
    let head: f64 = eig.values.iter().take(m).sum();
    let theta = (head - 1.0) / m as f64;
    let clipped = DVector::from_iterator(
        p,
        eig.values.iter().map(|&v| (v - theta).max(0.0)),
    );
    let half = &eig.vectors * DMatrix::from_diagonal(&clipped);
    SymMatrix::symmetrize(half * eig.vectors.transpose())
}

/// Max absolute entry, the convergence norm of the solvers.
pub fn max_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
}
