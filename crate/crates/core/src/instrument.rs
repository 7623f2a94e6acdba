//! The amplifier as a two-outcome quantum instrument.
//!
//! Both Kraus operators are diagonal in the Fock basis:
//! success `g^{n-p}` for `n <= p` and `1` above the threshold, failure
//! `sqrt(1 - g^{2(n-p)})` for `n <= p` and `0` above. Every output lives on the
//! probe's own truncation.

use serde::{Deserialize, Serialize};

use crate::error::{NlaError, Result};
use crate::fock::{CMatrix, DensityOperator, FockVector};
use crate::scalar::{Real, C};

/// Smallest admissible gain is `1 + GAIN_GUARD`.
pub const GAIN_GUARD: f64 = 1e-9;
/// Branch probabilities below this are treated as impossible outcomes.
pub const BRANCH_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Success,
    Failure,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Success, Branch::Failure];

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Success => "success",
            Branch::Failure => "failure",
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Gain `g > 1` and integer threshold `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlaParams<T: Real> {
    gain: T,
    threshold: usize,
}

impl<T: Real> NlaParams<T> {
    pub fn new(gain: T, threshold: usize) -> Result<Self> {
        if !(gain >= T::one() + T::lit(GAIN_GUARD)) || !gain.is_finite() {
            return Err(NlaError::GainDomain { gain: gain.to_f64_lossy() });
        }
        Ok(Self { gain, threshold })
    }

    pub fn gain(&self) -> T {
        self.gain
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn with_gain(&self, gain: T) -> Result<Self> {
        Self::new(gain, self.threshold)
    }

    /// `(n - p, g^{2(n-p)})` for `n <= p`.
    fn below(&self, n: usize) -> Option<(T, T)> {
        (n <= self.threshold).then(|| {
            let m = T::from_usize_lossy(n) - T::from_usize_lossy(self.threshold);
            let ln_g = (self.gain - T::one()).ln_1p();
            (m, (T::lit(2.0) * m * ln_g).exp())
        })
    }

    /// `1 - g^{2(n-p)}` without cancellation near `g = 1`.
    fn failure_weight(&self, n: usize) -> T {
        match self.below(n) {
            Some((m, _)) => {
                let ln_g = (self.gain - T::one()).ln_1p();
                -(T::lit(2.0) * m * ln_g).exp_m1()
            }
            None => T::zero(),
        }
    }

    pub fn kraus_entry(&self, branch: Branch, n: usize) -> T {
        match (branch, self.below(n)) {
            (Branch::Success, Some((_, g2))) => g2.sqrt(),
            (Branch::Success, None) => T::one(),
            (Branch::Failure, _) => self.failure_weight(n).sqrt(),
        }
    }

    /// `d/dg` of [`NlaParams::kraus_entry`]; the `n = p` failure entry is
    /// identically zero and so is its derivative.
    pub fn kraus_entry_derivative(&self, branch: Branch, n: usize) -> T {
        let Some((m, g2)) = self.below(n) else {
            return T::zero();
        };
        if m == T::zero() {
            return T::zero();
        }
        match branch {
            Branch::Success => m * g2.sqrt() / self.gain,
            Branch::Failure => -m * g2 / (self.gain * self.failure_weight(n).sqrt()),
        }
    }

    /// Squared Kraus entry, i.e. the POVM element diagonal.
    pub fn povm_entry(&self, branch: Branch, n: usize) -> T {
        match branch {
            Branch::Success => self.below(n).map_or(T::one(), |(_, g2)| g2),
            Branch::Failure => self.failure_weight(n),
        }
    }
}

pub fn kraus_diagonal<T: Real>(params: &NlaParams<T>, branch: Branch, dim: usize) -> Vec<T> {
    (0..dim).map(|n| params.kraus_entry(branch, n)).collect()
}

pub fn kraus_derivative_diagonal<T: Real>(params: &NlaParams<T>, branch: Branch, dim: usize) -> Vec<T> {
    (0..dim).map(|n| params.kraus_entry_derivative(branch, n)).collect()
}

/// `E_branch |psi>` (unnormalized).
pub fn apply_kraus<T: Real>(probe: &FockVector<T>, params: &NlaParams<T>, branch: Branch) -> Vec<C<T>> {
    probe.amps().iter().enumerate().map(|(n, c)| c * params.kraus_entry(branch, n)).collect()
}

/// `(d/dg E_branch) |psi>`.
pub fn apply_kraus_derivative<T: Real>(probe: &FockVector<T>, params: &NlaParams<T>, branch: Branch) -> Vec<C<T>> {
    probe.amps().iter().enumerate().map(|(n, c)| c * params.kraus_entry_derivative(branch, n)).collect()
}

pub fn branch_probability<T: Real>(probe: &FockVector<T>, params: &NlaParams<T>, branch: Branch) -> Result<T> {
    probe.ensure_normalized("probe")?;
    Ok(branch_probability_unchecked(probe, params, branch))
}

pub(crate) fn branch_probability_unchecked<T: Real>(probe: &FockVector<T>, params: &NlaParams<T>, branch: Branch) -> T {
    probe.amps().iter().enumerate().map(|(n, c)| params.povm_entry(branch, n) * c.norm_sqr()).sum()
}

/// `d p_s / dg = sum_{n<p} 2(n-p) g^{2(n-p)-1} |c_n|^2`, and `d p_f / dg = -d p_s / dg`.
pub fn branch_probability_derivative<T: Real>(
    probe: &FockVector<T>,
    params: &NlaParams<T>,
    branch: Branch,
) -> Result<T> {
    probe.ensure_normalized("probe")?;
    Ok(branch_probability_derivative_unchecked(probe, params, branch))
}

pub(crate) fn branch_probability_derivative_unchecked<T: Real>(
    probe: &FockVector<T>,
    params: &NlaParams<T>,
    branch: Branch,
) -> T {
    let ds: T = probe
        .amps()
        .iter()
        .enumerate()
        .take(params.threshold())
        .map(|(n, c)| {
            let (m, g2) = params.below(n).expect("n < p");
            T::lit(2.0) * m * g2 / params.gain() * c.norm_sqr()
        })
        .sum();
    match branch {
        Branch::Success => ds,
        Branch::Failure => -ds,
    }
}

/// Normalized post-measurement state of one branch.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalState<T: Real> {
    pub branch: Branch,
    pub prob: T,
    pub state: FockVector<T>,
}

pub fn conditional_state<T: Real>(
    probe: &FockVector<T>,
    params: &NlaParams<T>,
    branch: Branch,
) -> Result<ConditionalState<T>> {
    let prob = branch_probability(probe, params, branch)?;
    ensure_possible(branch, prob)?;
    let inv = prob.sqrt().recip();
    let amps = apply_kraus(probe, params, branch).into_iter().map(|a| a * inv).collect();
    Ok(ConditionalState { branch, prob, state: FockVector::from_vec_unchecked(amps) })
}

/// Analytic `d/dg` of the normalized conditional state,
/// `c_n (k_n' / sqrt(p) - k_n p' / (2 p^{3/2}))`.
pub fn conditional_state_derivative<T: Real>(
    probe: &FockVector<T>,
    params: &NlaParams<T>,
    branch: Branch,
) -> Result<FockVector<T>> {
    let prob = branch_probability(probe, params, branch)?;
    ensure_possible(branch, prob)?;
    let dprob = branch_probability_derivative_unchecked(probe, params, branch);
    let sp = prob.sqrt();
    let half_rel = dprob / (T::lit(2.0) * prob);
    let amps = probe
        .amps()
        .iter()
        .enumerate()
        .map(|(n, c)| {
            let k = params.kraus_entry(branch, n);
            let dk = params.kraus_entry_derivative(branch, n);
            c * ((dk - k * half_rel) / sp)
        })
        .collect();
    Ok(FockVector::from_vec_unchecked(amps))
}

pub(crate) fn ensure_possible<T: Real>(branch: Branch, prob: T) -> Result<()> {
    if prob > T::tiny(BRANCH_FLOOR) {
        Ok(())
    } else {
        Err(NlaError::BranchImpossible { branch: branch.as_str(), prob: prob.to_f64_lossy() })
    }
}

/// `rho_unc = p_s |psi_s><psi_s| + p_f |psi_f><psi_f| = sum_i E_i |psi><psi| E_i`.
pub fn unconditional_state<T: Real>(probe: &FockVector<T>, params: &NlaParams<T>) -> Result<DensityOperator<T>> {
    probe.ensure_normalized("probe")?;
    let mut mat = CMatrix::zeros(probe.dim());
    for b in Branch::BOTH {
        mat.add_outer(&apply_kraus(probe, params, b), T::one());
    }
    Ok(DensityOperator::from_hermitian_unchecked(mat))
}

/// Analytic `d rho_unc / dg`, assembled with the product rule.
pub fn unconditional_state_derivative<T: Real>(probe: &FockVector<T>, params: &NlaParams<T>) -> Result<CMatrix<T>> {
    probe.ensure_normalized("probe")?;
    let mut mat = CMatrix::zeros(probe.dim());
    for b in Branch::BOTH {
        let e = apply_kraus(probe, params, b);
        let de = apply_kraus_derivative(probe, params, b);
        mat.add_sym_outer(&de, &e, T::one());
    }
    // s_n^2 + f_n^2 = 1 fixes the populations; drop the rounding residue.
    for n in 0..probe.dim() {
        mat[(n, n)] = C::default();
    }
    Ok(mat)
}

/// Meter qubit `alpha |s> + beta |f>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeterState<T: Real> {
    pub alpha: C<T>,
    pub beta: C<T>,
}

impl<T: Real> MeterState<T> {
    pub fn new(alpha: C<T>, beta: C<T>) -> Result<Self> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if !((norm - T::one()).abs() <= T::tol(1e-12)) {
            return Err(NlaError::MeterNotNormalized { norm: norm.to_f64_lossy() });
        }
        Ok(Self { alpha, beta })
    }

    /// The meter prepared in `|f>`, as in the device's standard operation.
    pub fn ready() -> Self {
        Self { alpha: C::default(), beta: C::new(T::one(), T::zero()) }
    }

    /// `2 Im[alpha beta^*]`.
    pub fn coherence(&self) -> T {
        T::lit(2.0) * (self.alpha * self.beta.conj()).im
    }
}

/// System-meter pure state `|phi_s> (x) |s> + |phi_f> (x) |f>` with unnormalized blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState<T: Real> {
    pub amps_s: FockVector<T>,
    pub amps_f: FockVector<T>,
}

impl<T: Real> JointState<T> {
    pub fn total_norm(&self) -> T {
        self.amps_s.norm_sqr() + self.amps_f.norm_sqr()
    }

    /// Flattened vector, success block first.
    pub fn to_vector(&self) -> FockVector<T> {
        self.amps_s.concat(&self.amps_f)
    }

    /// Partial trace over the meter.
    pub fn reduced_state(&self) -> DensityOperator<T> {
        let mut mat = CMatrix::zeros(self.amps_s.dim());
        mat.add_outer(self.amps_s.amps(), T::one());
        mat.add_outer(self.amps_f.amps(), T::one());
        DensityOperator::from_hermitian_unchecked(mat)
    }
}

/// `U_g [|psi> (x) (alpha|s> + beta|f>)]` for the dilation
/// `U_g = E_s (x) |s><f| + E_f (x) |f><f| - E_s (x) |f><s| + E_f (x) |s><s|`.
pub fn joint_state<T: Real>(
    probe: &FockVector<T>,
    params: &NlaParams<T>,
    meter: &MeterState<T>,
) -> Result<JointState<T>> {
    probe.ensure_normalized("probe")?;
    let es = apply_kraus(probe, params, Branch::Success);
    let ef = apply_kraus(probe, params, Branch::Failure);
    Ok(combine_blocks(&es, &ef, meter))
}

/// `d/dg` of [`joint_state`]; the meter state does not depend on `g`.
pub fn joint_state_derivative<T: Real>(
    probe: &FockVector<T>,
    params: &NlaParams<T>,
    meter: &MeterState<T>,
) -> Result<JointState<T>> {
    probe.ensure_normalized("probe")?;
    let es = apply_kraus_derivative(probe, params, Branch::Success);
    let ef = apply_kraus_derivative(probe, params, Branch::Failure);
    Ok(combine_blocks(&es, &ef, meter))
}

fn combine_blocks<T: Real>(es: &[C<T>], ef: &[C<T>], meter: &MeterState<T>) -> JointState<T> {
    let (a, b) = (meter.alpha, meter.beta);
    let s = es.iter().zip(ef).map(|(s, f)| b * s + a * f).collect();
    let f = es.iter().zip(ef).map(|(s, f)| b * f - a * s).collect();
    JointState { amps_s: FockVector::from_vec_unchecked(s), amps_f: FockVector::from_vec_unchecked(f) }
}
