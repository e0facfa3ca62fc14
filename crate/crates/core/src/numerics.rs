//! Dense complex linear algebra.
//!
//! Everything here is a pure function over [`ComplexMatrix`] values. Matrices
//! are `nalgebra` dense matrices of `Complex<f64>`; operators on `n` qubits use
//! the big-endian computational basis (qubit 1 is the most significant bit).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use num_complex::Complex64;

/// Dense complex matrix carrying operators, states, unitaries and superoperators.
pub type ComplexMatrix = DMatrix<Complex64>;
/// Dense complex column vector.
pub type ComplexVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Absolute and relative tolerance pair.
///
/// A quantity `x` measured against a scale `s` counts as zero when
/// `x ≤ max(absolute, relative · s)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub absolute: f64,
    pub relative: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            absolute: 1e-10,
            relative: 1e-9,
        }
    }
}

impl Tolerance {
    pub fn new(absolute: f64, relative: f64) -> Result<Self> {
        if !(absolute.is_finite() && relative.is_finite() && absolute >= 0.0 && relative >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerances must be finite and non-negative, got abs={absolute}, rel={relative}"
            )));
        }
        Ok(Tolerance { absolute, relative })
    }

    /// Zero threshold for a quantity measured against `scale`.
    pub fn threshold(&self, scale: f64) -> f64 {
        self.absolute.max(self.relative * scale)
    }
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(rows, cols)
}

/// Builds a matrix from real row-major entries.
pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> ComplexMatrix {
    assert_eq!(entries.len(), rows * cols, "entries length must equal rows×cols");
    ComplexMatrix::from_fn(rows, cols, |i, j| c(entries[i * cols + j], 0.0))
}

/// Builds a matrix from complex row-major entries.
pub fn from_rows(rows: usize, cols: usize, entries: &[Complex64]) -> ComplexMatrix {
    assert_eq!(entries.len(), rows * cols, "entries length must equal rows×cols");
    ComplexMatrix::from_fn(rows, cols, |i, j| entries[i * cols + j])
}

pub fn diag(entries: &[Complex64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&ComplexVector::from_column_slice(entries))
}

pub fn pauli_x() -> ComplexMatrix {
    from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> ComplexMatrix {
    from_rows(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> ComplexMatrix {
    from_real(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

/// SWAP on two qudits of dimension `d`.
pub fn swap(d: usize) -> ComplexMatrix {
    let n = d * d;
    ComplexMatrix::from_fn(n, n, |r, col| {
        let (a, b) = (col / d, col % d);
        if r == b * d + a {
            ONE
        } else {
            ZERO
        }
    })
}

/// Projector `|ψ⟩⟨ψ|`.
pub fn outer(psi: &ComplexVector) -> ComplexMatrix {
    psi * psi.adjoint()
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all<'a, I>(factors: I) -> ComplexMatrix
where
    I: IntoIterator<Item = &'a ComplexMatrix>,
{
    factors
        .into_iter()
        .fold(identity(1), |acc, f| acc.kronecker(f))
}

/// `op` acting on slot `site` of `n` qudits of dimension `d`, identity elsewhere.
pub fn embed(op: &ComplexMatrix, site: usize, n: usize, d: usize) -> ComplexMatrix {
    let id = identity(d);
    kron_all((0..n).map(|j| if j == site { op } else { &id }))
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

pub fn frobenius(a: &ComplexMatrix) -> f64 {
    a.norm()
}

pub fn trace(a: &ComplexMatrix) -> Complex64 {
    a.trace()
}

pub fn hermitian_residual(a: &ComplexMatrix) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    (a - a.adjoint()).norm()
}

pub fn unitary_residual(u: &ComplexMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    (u.adjoint() * u - identity(u.nrows())).norm()
}

pub fn is_hermitian(a: &ComplexMatrix, tol: f64) -> bool {
    hermitian_residual(a) <= tol
}

pub fn is_unitary(u: &ComplexMatrix, tol: f64) -> bool {
    unitary_residual(u) <= tol
}

pub fn is_trace_one(a: &ComplexMatrix, tol: f64) -> bool {
    (a.trace() - ONE).norm() <= tol
}

/// Hermitian and with smallest eigenvalue `≥ −tol`.
pub fn is_psd(a: &ComplexMatrix, tol: f64) -> bool {
    if hermitian_residual(a) > tol {
        return false;
    }
    let h = hermitian_part(a);
    let eig = h.symmetric_eigen();
    eig.eigenvalues.iter().all(|&l| l >= -tol)
}

pub fn is_density_matrix(rho: &ComplexMatrix, tol: f64) -> bool {
    is_psd(rho, tol) && is_trace_one(rho, tol)
}

/// `(A + A†)/2`.
pub fn hermitian_part(a: &ComplexMatrix) -> ComplexMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Result of [`herm_eig`]: ascending eigenvalues and the matching unitary.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors. Within a degenerate eigenvalue the basis is
    /// whatever the backend produced and is not canonical.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V diag(f(λ)) V†`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let mut col = scaled.column_mut(j);
            col *= f(l);
        }
        scaled * self.eigenvectors.adjoint()
    }
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted ascending.
pub fn herm_eig(h: &ComplexMatrix, tol: &Tolerance) -> Result<HermitianEigen> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "herm_eig needs a square matrix, got {}×{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let residual = hermitian_residual(h);
    if residual > tol.threshold(h.norm()) {
        return Err(Error::NotHermitian { residual });
    }
    let n = h.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            eigenvalues: vec![],
            eigenvectors: zeros(0, 0),
        });
    }
    let eig = hermitian_part(h).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// `exp(−iθh)` for Hermitian `h`, via its eigendecomposition.
pub fn exp_unitary(h: &ComplexMatrix, theta: f64) -> Result<ComplexMatrix> {
    let eig = herm_eig(h, &Tolerance::default())?;
    Ok(eig.map_spectrum(|l| Complex64::from_polar(1.0, -theta * l)))
}

/// Orthonormal basis of the kernel of `m`, as columns.
///
/// Singular values below `max(tol.absolute, tol.relative · σ_max)` count as zero.
pub fn null_space(m: &ComplexMatrix, tol: &Tolerance) -> ComplexMatrix {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return zeros(0, 0);
    }
    // A thin SVD of a wide matrix does not expose the full right singular basis.
    let padded;
    let work = if rows < cols {
        padded = {
            let mut p = zeros(cols, cols);
            p.view_mut((0, 0), (rows, cols)).copy_from(m);
            p
        };
        &padded
    } else {
        m
    };
    let svd = work.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = tol.threshold(sigma_max);
    let kernel: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] < cutoff)
        .collect();
    ComplexMatrix::from_fn(cols, kernel.len(), |i, j| v_t[(kernel[j], i)].conj())
}

/// Numerical rank using the same cutoff rule as [`null_space`].
pub fn rank(m: &ComplexMatrix, tol: &Tolerance) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let sigma_max = sv.iter().cloned().fold(0.0, f64::max);
    let cutoff = tol.threshold(sigma_max);
    sv.iter().filter(|&&s| s >= cutoff).count()
}

/// Orthonormal basis (columns) of the column space of `m`.
pub fn column_space(m: &ComplexMatrix, tol: &Tolerance) -> ComplexMatrix {
    if m.ncols() == 0 || m.nrows() == 0 {
        return zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = tol.threshold(sigma_max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] >= cutoff && sigma_max > 0.0)
        .collect();
    ComplexMatrix::from_fn(m.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

/// `‖P_A − P_B‖_F` for subspaces given by orthonormal columns.
pub fn projector_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    // Formed explicitly: the trace identity ‖P−Q‖² = r_a + r_b − 2‖A†B‖² cancels down to √ε.
    (a * a.adjoint() - b * b.adjoint()).norm()
}

/// Partial trace keeping the subsystems listed in `keep`, in ascending order.
pub fn partial_trace(rho: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if !rho.is_square() || rho.nrows() != total {
        return Err(Error::DimensionMismatch(format!(
            "partial_trace: subsystem dims {dims:?} multiply to {total}, matrix is {}×{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::DimensionMismatch(format!(
            "partial_trace: subsystem {bad} out of range for {} subsystems",
            dims.len()
        )));
    }
    let mut kept = vec![false; dims.len()];
    for &k in keep {
        kept[k] = true;
    }
    let out_dim: usize = dims
        .iter()
        .zip(&kept)
        .filter(|(_, &k)| k)
        .map(|(d, _)| *d)
        .product();

    // Split a full index into (kept index, traced index), both big-endian.
    let split = |mut idx: usize| -> (usize, usize) {
        let (mut k_idx, mut k_stride) = (0, 1);
        let (mut t_idx, mut t_stride) = (0, 1);
        for (s, &d) in dims.iter().enumerate().rev() {
            let digit = idx % d;
            idx /= d;
            if kept[s] {
                k_idx += digit * k_stride;
                k_stride *= d;
            } else {
                t_idx += digit * t_stride;
                t_stride *= d;
            }
        }
        (k_idx, t_idx)
    };
    let parts: Vec<(usize, usize)> = (0..total).map(split).collect();
    let mut out = zeros(out_dim, out_dim);
    for r in 0..total {
        let (kr, tr) = parts[r];
        for col in 0..total {
            let (kc, tc) = parts[col];
            if tr == tc {
                out[(kr, kc)] += rho[(r, col)];
            }
        }
    }
    Ok(out)
}

/// Hilbert-Schmidt inner product `Tr[A†B]` (no ½ normalisation).
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Complex64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "hs_inner: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// Row-major vectorisation: `vec(A)[i·cols + j] = A[i, j]`.
pub fn vectorize(a: &ComplexMatrix) -> ComplexVector {
    let cols = a.ncols();
    ComplexVector::from_fn(a.nrows() * cols, |k, _| a[(k / cols, k % cols)])
}

/// Inverse of [`vectorize`].
pub fn devectorize(v: &ComplexVector, rows: usize, cols: usize) -> Result<ComplexMatrix> {
    if v.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "devectorize: vector of length {} into {rows}×{cols}",
            v.len()
        )));
    }
    Ok(ComplexMatrix::from_fn(rows, cols, |i, j| v[i * cols + j]))
}

/// Column `j` of `m` reshaped into a square operator.
pub fn column_as_operator(m: &ComplexMatrix, j: usize) -> ComplexMatrix {
    let d = (m.nrows() as f64).sqrt().round() as usize;
    ComplexMatrix::from_fn(d, d, |r, c| m[(r * d + c, j)])
}

/// Superoperator of `A ↦ U A U†` on row-major vectorised operators: `U ⊗ conj(U)`.
pub fn conjugation_superoperator(u: &ComplexMatrix) -> ComplexMatrix {
    u.kronecker(&u.map(|z| z.conj()))
}

/// Superoperator of `A ↦ [H, A]`: `H ⊗ 1 − 1 ⊗ Hᵀ`.
pub fn commutator_superoperator(h: &ComplexMatrix) -> ComplexMatrix {
    let n = h.nrows();
    let id = identity(n);
    h.kronecker(&id) - id.kronecker(&h.transpose())
}

/// Superoperator of `A ↦ L A R`: `L ⊗ Rᵀ`.
pub fn sandwich_superoperator(left: &ComplexMatrix, right: &ComplexMatrix) -> ComplexMatrix {
    left.kronecker(&right.transpose())
}

/// Real Gram-Schmidt over Hermitian matrices under `Re Tr[A†B]`.
///
/// Elements whose residual norm falls below `drop_below` are discarded. The
/// output is orthonormal under the complex inner product too, since `Tr[AB]`
/// is real for Hermitian `A`, `B`.
pub fn orthonormalize_hermitian(mats: &[ComplexMatrix], drop_below: f64) -> Vec<ComplexMatrix> {
    let mut basis: Vec<ComplexMatrix> = Vec::new();
    for m in mats {
        if let Some(b) = reduce_against(&basis, m, drop_below) {
            basis.push(b);
        }
    }
    basis
}

/// Residual of `m` after removing its real projection on an orthonormal
/// Hermitian `basis`, normalised; `None` if its norm is below `drop_below`.
pub(crate) fn reduce_against(
    basis: &[ComplexMatrix],
    m: &ComplexMatrix,
    drop_below: f64,
) -> Option<ComplexMatrix> {
    let mut r = hermitian_part(m);
    // Two passes of modified Gram-Schmidt.
    for _ in 0..2 {
        for b in basis {
            let coeff: f64 = b.iter().zip(r.iter()).map(|(x, y)| (x.conj() * y).re).sum();
            r -= b.scale(coeff);
        }
    }
    let n = r.norm();
    if n < drop_below {
        None
    } else {
        Some(r.unscale(n))
    }
}

/// Complex Gram-Schmidt on column vectors. Returns orthonormal columns spanning
/// the input, dropping those whose residual falls below `drop_below`.
pub fn orthonormalize_columns(m: &ComplexMatrix, drop_below: f64) -> ComplexMatrix {
    let mut cols: Vec<ComplexVector> = Vec::new();
    for j in 0..m.ncols() {
        let mut v: ComplexVector = m.column(j).into_owned();
        for _ in 0..2 {
            for q in &cols {
                let p = q.dotc(&v);
                v -= q * p;
            }
        }
        let n = v.norm();
        if n >= drop_below {
            cols.push(v.unscale(n));
        }
    }
    if cols.is_empty() {
        return zeros(m.nrows(), 0);
    }
    ComplexMatrix::from_columns(&cols)
}
