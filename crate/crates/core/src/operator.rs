//! Dense Hermitian operators and shared linear-algebra helpers.

use crate::error::{MagnusError, Result};
use crate::{C64, CMat, CVec};

/// Entrywise tolerance for the Hermiticity check in [`HermitianOperator::new`].
pub const HERMITICITY_TOL: f64 = 1e-12;

/// A dense complex square matrix certified Hermitian at construction.
///
/// Hamiltonians are dimensionless (energies in units of a reference
/// frequency), so entries carry no unit.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    mat: CMat,
}

impl HermitianOperator {
    /// Validate and wrap a matrix. Fails unless the matrix is square,
    /// non-empty, and equal to its conjugate transpose within
    /// [`HERMITICITY_TOL`] entrywise.
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(MagnusError::Validation(format!(
                "operator must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.nrows() == 0 {
            return Err(MagnusError::Validation("operator dimension must be >= 1".into()));
        }
        for i in 0..mat.nrows() {
            for j in 0..=i {
                let d = mat[(i, j)] - mat[(j, i)].conj();
                if d.norm() > HERMITICITY_TOL {
                    return Err(MagnusError::Validation(format!(
                        "operator is not Hermitian: |M[{i},{j}] - conj(M[{j},{i}])| = {:.3e}",
                        d.norm()
                    )));
                }
            }
        }
        Ok(Self { mat })
    }

    /// Wrap a matrix that is Hermitian by construction (no check).
    pub(crate) fn new_unchecked(mat: CMat) -> Self {
        debug_assert_eq!(mat.nrows(), mat.ncols());
        Self { mat }
    }

    /// Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// The underlying matrix.
    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    /// Consume into the underlying matrix.
    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    /// Hilbert–Schmidt inner product `Tr(self† other)`.
    pub fn hs_inner(&self, other: &Self) -> C64 {
        hs_inner(&self.mat, &other.mat)
    }

    /// Frobenius (Hilbert–Schmidt) norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    /// ℓ1 operator norm: maximum absolute column sum.
    pub fn l1_norm(&self) -> f64 {
        l1_norm(&self.mat)
    }

    /// Spectral norm: largest |eigenvalue|. Uses the Hermitian
    /// eigendecomposition.
    pub fn spectral_norm(&self) -> f64 {
        crate::eigen::hermitian_eigen(&self.mat)
            .map(|e| e.eigenvalues.iter().fold(0.0_f64, |m, &ev| m.max(ev.abs())))
            .unwrap_or(f64::NAN)
    }

    /// Hermitian-preserving bracket `-i [self, other]`. The result is
    /// Hermitian whenever both inputs are.
    pub fn hbracket(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(MagnusError::DimensionMismatch(format!(
                "bracket of dim {} with dim {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(Self::new_unchecked(hbracket(&self.mat, &other.mat)))
    }
}

/// `Tr(a† b)` without forming the product.
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Maximum absolute column sum.
pub fn l1_norm(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0_f64, f64::max)
}

/// `-i (a b - b a)`.
pub fn hbracket(a: &CMat, b: &CMat) -> CMat {
    let mut c = a * b;
    c -= b * a;
    c *= C64::new(0.0, -1.0);
    c
}

/// Plain commutator `a b - b a`.
pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Kronecker product in the usual big-endian qudit ordering (first factor is
/// the most significant digit).
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// 2-norm of a state vector.
pub fn state_norm(psi: &CVec) -> f64 {
    psi.norm()
}

/// Zero-based identity of size `n`.
pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}
