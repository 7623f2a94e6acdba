use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{NlaError, Result};
use crate::scalar::{cplx, Real, C};

/// Pure state on a truncated Fock space, amplitudes indexed by photon number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockVector<T: Real> {
    amps: Vec<C<T>>,
}

impl<T: Real> FockVector<T> {
    pub fn new(amps: Vec<C<T>>) -> Result<Self> {
        if amps.is_empty() {
            return Err(NlaError::InvalidInput("Fock vector needs at least one level".into()));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(NlaError::InvalidInput("non-finite amplitude".into()));
        }
        Ok(Self { amps })
    }

    pub fn from_real(amps: &[T]) -> Result<Self> {
        Self::new(amps.iter().map(|&a| cplx(a)).collect())
    }

    /// Number state `|n>` on `dim` levels.
    pub fn basis(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(NlaError::InvalidInput(format!("level {n} outside dimension {dim}")));
        }
        let mut amps = vec![C::default(); dim];
        amps[n] = cplx(T::one());
        Self::new(amps)
    }

    /// Rescales to unit norm and returns the applied factor `1 / ||amps||`.
    pub fn normalize(amps: Vec<C<T>>) -> Result<(Self, T)> {
        let v = Self::new(amps)?;
        let norm = v.norm_sqr().sqrt();
        if norm == T::zero() {
            return Err(NlaError::NonPhysicalState("zero vector cannot be normalized".into()));
        }
        let factor = norm.recip();
        Ok((v.scaled(factor), factor))
    }

    pub(crate) fn from_vec_unchecked(amps: Vec<C<T>>) -> Self {
        debug_assert!(!amps.is_empty());
        Self { amps }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    #[inline]
    pub fn amps(&self) -> &[C<T>] {
        &self.amps
    }

    /// Amplitude of level `n`, zero beyond the truncation.
    pub fn amp(&self, n: usize) -> C<T> {
        self.amps.get(n).copied().unwrap_or_default()
    }

    pub fn into_amps(self) -> Vec<C<T>> {
        self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - T::one()).abs() <= T::tol(tol)
    }

    pub(crate) fn ensure_normalized(&self, what: &str) -> Result<()> {
        if self.is_normalized(1e-10) {
            Ok(())
        } else {
            Err(NlaError::NonPhysicalState(format!("{what} has squared norm {}", self.norm_sqr())))
        }
    }

    /// `<self|other>`; the shorter vector is zero-padded.
    pub fn inner(&self, other: &Self) -> C<T> {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).fold(C::default(), |acc, x| acc + x)
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { amps: self.amps.iter().map(|a| a * s).collect() }
    }

    /// Photon-number distribution `|c_n|^2`.
    pub fn populations(&self) -> Vec<T> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn mean_photon_number(&self) -> T {
        self.amps.iter().enumerate().map(|(n, a)| T::from_usize_lossy(n) * a.norm_sqr()).sum::<T>() / self.norm_sqr()
    }

    /// True when all amplitudes share one global phase (up to `tol` relative
    /// to the largest amplitude), i.e. the state is real after a phase rotation.
    pub fn is_real_up_to_phase(&self, tol: f64) -> bool {
        let Some(lead) = self.amps.iter().copied().max_by(|a, b| a.norm_sqr().partial_cmp(&b.norm_sqr()).unwrap())
        else {
            return true;
        };
        let scale = lead.norm();
        if scale == T::zero() {
            return true;
        }
        let unphase = lead.conj() / scale;
        self.amps.iter().all(|a| (a * unphase).im.abs() <= T::tol(tol) * scale)
    }

    /// Same state with every amplitude multiplied by a global phase that makes
    /// the largest amplitude real and positive.
    pub fn with_canonical_phase(&self) -> Self {
        let lead = self
            .amps
            .iter()
            .copied()
            .max_by(|a, b| a.norm_sqr().partial_cmp(&b.norm_sqr()).unwrap())
            .unwrap_or_default();
        let scale = lead.norm();
        if scale == T::zero() {
            return self.clone();
        }
        let unphase = lead.conj() / scale;
        Self { amps: self.amps.iter().map(|a| a * unphase).collect() }
    }

    /// Concatenates two blocks into one vector (used for system-meter states).
    pub fn concat(&self, other: &Self) -> Self {
        let mut amps = self.amps.clone();
        amps.extend_from_slice(&other.amps);
        Self { amps }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { amps: vec![Complex::default(); dim.max(1)] }
    }
}
