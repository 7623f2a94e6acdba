use crate::error::{NlaError, Result};
use crate::scalar::Real;

use super::eigh::{eigh_matrix, HermitianEigen};
use super::{CMatrix, FockVector};

/// Hermitian operator on the truncated Fock space. Construction only checks
/// Hermiticity; [`DensityOperator::validate_physical`] checks trace and
/// positivity.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator<T: Real> {
    mat: CMatrix<T>,
}

impl<T: Real> DensityOperator<T> {
    pub fn new(mat: CMatrix<T>) -> Result<Self> {
        let dev = mat.hermiticity_deviation();
        if !(dev <= T::tol(1e-12)) {
            return Err(NlaError::NonHermitianInput { deviation: dev.to_f64_lossy() });
        }
        Ok(Self { mat })
    }

    pub fn from_pure(psi: &FockVector<T>) -> Self {
        let mut mat = CMatrix::zeros(psi.dim());
        mat.add_outer(psi.amps(), T::one());
        Self { mat }
    }

    /// `sum_i w_i |psi_i><psi_i|` over equally sized states.
    pub fn mixture(terms: &[(T, &FockVector<T>)]) -> Result<Self> {
        let dim = terms.first().map(|(_, v)| v.dim()).ok_or_else(|| NlaError::InvalidInput("empty mixture".into()))?;
        let mut mat = CMatrix::zeros(dim);
        for (w, v) in terms {
            if v.dim() != dim {
                return Err(NlaError::InvalidInput("mixture of unequal dimensions".into()));
            }
            mat.add_outer(v.amps(), *w);
        }
        Ok(Self { mat })
    }

    pub(crate) fn from_hermitian_unchecked(mat: CMatrix<T>) -> Self {
        Self { mat }
    }

    pub fn mat(&self) -> &CMatrix<T> {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn trace(&self) -> T {
        self.mat.trace().re
    }

    pub fn eigh(&self) -> Result<HermitianEigen<T>> {
        eigh_matrix(&self.mat)
    }

    /// Checks unit trace (1e-10) and positivity (eigenvalues >= -1e-10),
    /// returning the eigendecomposition computed on the way.
    pub fn validate_physical(&self) -> Result<HermitianEigen<T>> {
        let tr = self.trace();
        if !((tr - T::one()).abs() <= T::tol(1e-10)) {
            return Err(NlaError::NonPhysicalState(format!("trace {tr}")));
        }
        let eig = self.eigh()?;
        if let Some(&min) = eig.values.last() {
            if min < -T::tol(1e-10) {
                return Err(NlaError::NonPhysicalState(format!("negative eigenvalue {min}")));
            }
        }
        Ok(eig)
    }

    /// Eigenvalues below `1e-12 * v_max` are treated as zero.
    pub fn rank(&self) -> Result<usize> {
        let eig = self.eigh()?;
        let vmax = eig.values.first().copied().unwrap_or_else(T::zero);
        let thresh = vmax * T::tol(1e-12);
        Ok(eig.values.iter().filter(|&&v| v > thresh).count())
    }
}
