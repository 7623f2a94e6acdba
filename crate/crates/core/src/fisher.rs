//! Fisher-information figures of merit for the gain.
//!
//! All values are per shot. The weighted branch contributions `p_s Q_s` and
//! `p_f Q_f` are computed directly rather than as `p * Q`, so a vanishing
//! branch contributes an exact zero.

use crate::error::{NlaError, Result};
use crate::fock::{eigh, CMatrix, DensityOperator, FockVector};
use crate::instrument::{
    branch_probability_derivative_unchecked, branch_probability_unchecked, unconditional_state,
    unconditional_state_derivative, Branch, MeterState, NlaParams, BRANCH_FLOOR,
};
use crate::scalar::Real;

/// Relative eigenvalue cutoff below which a density-matrix eigenvalue is zero.
pub const EIGEN_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FisherBreakdown<T: Real> {
    pub q_eff: T,
    pub ps_qs: T,
    pub pf_qf: T,
    pub f_c: T,
    pub q_s: T,
    pub q_f: T,
    pub q_unc: T,
}

impl<T: Real> FisherBreakdown<T> {
    /// `|q_eff - (ps_qs + pf_qf + f_c)| / q_eff` (absolute when `q_eff` is zero).
    pub fn identity_residual(&self) -> T {
        let diff = (self.q_eff - (self.ps_qs + self.pf_qf + self.f_c)).abs();
        if self.q_eff > T::zero() {
            diff / self.q_eff
        } else {
            diff
        }
    }
}

/// `Q = 4 [<d psi|d psi> - |<d psi|psi>|^2]`.
pub fn qfi_pure<T: Real>(state: &FockVector<T>, dstate: &FockVector<T>) -> T {
    let q = T::lit(4.0) * (dstate.norm_sqr() - dstate.inner(state).norm_sqr());
    q.max(T::zero())
}

/// `Q = 2 sum_ij |<i|d rho|j>|^2 / (v_i + v_j)` over the eigenbasis of `rho`.
pub fn qfi_mixed<T: Real>(rho: &DensityOperator<T>, drho: &CMatrix<T>) -> Result<T> {
    if drho.dim() != rho.dim() {
        return Err(NlaError::InvalidInput(format!(
            "derivative has dimension {} but the state has {}",
            drho.dim(),
            rho.dim()
        )));
    }
    let scale = drho.data().iter().fold(T::one(), |m, z| m.max(z.norm()));
    let dev = drho.hermiticity_deviation();
    if dev > T::tol(1e-10) * scale {
        return Err(NlaError::NonHermitianDerivative { deviation: dev.to_f64_lossy() });
    }
    let eig = eigh(rho)?;
    let vmax = eig.values.first().copied().unwrap_or_else(T::zero).max(T::zero());
    let cut = T::lit(EIGEN_CUTOFF) * vmax;
    let v: Vec<T> = eig.values.iter().map(|&x| if x < cut { T::zero() } else { x }).collect();
    let d = eig.vectors.adjoint().matmul(drho).matmul(&eig.vectors);
    let n = rho.dim();
    let mut q = T::zero();
    for i in 0..n {
        for j in 0..n {
            let s = v[i] + v[j];
            if s > cut && s > T::zero() {
                q = q + T::lit(2.0) * d[(i, j)].norm_sqr() / s;
            }
        }
    }
    Ok(q.max(T::zero()))
}

/// `p_b Q_b` for one branch, together with `p_b` and `d p_b / dg`.
///
/// `p_b Q_b = 4 p_b <d psi_b|d psi_b>` is a weighted variance of the
/// logarithmic derivatives `a_n = k_n' / k_n` with weights `w_n = |c_n|^2 k_n^2`,
/// evaluated in pairwise form `sum_{n<m} w_n w_m (a_n - a_m)^2 / p_b`. This
/// equals the two-term branch formula (see [`weighted_branch_explicit`]) and is
/// exactly zero when the conditional state does not move. Levels with `k_n = 0`
/// add `|c_n|^2 k_n'^2`.
fn weighted_branch<T: Real>(probe: &FockVector<T>, params: &NlaParams<T>, branch: Branch) -> (T, T, T) {
    let prob = branch_probability_unchecked(probe, params, branch);
    let dprob = branch_probability_derivative_unchecked(probe, params, branch);
    if !(prob > T::tiny(BRANCH_FLOOR)) {
        return (prob, dprob, T::zero());
    }
    let mut support: Vec<(T, T)> = Vec::new();
    let mut dead = T::zero();
    for (n, c) in probe.amps().iter().enumerate() {
        let (k, dk, w) = (params.kraus_entry(branch, n), params.kraus_entry_derivative(branch, n), c.norm_sqr());
        if w == T::zero() {
            continue;
        }
        if k == T::zero() {
            dead = dead + w * dk * dk;
        } else {
            support.push((w * k * k, dk / k));
        }
    }
    let mut pairs = T::zero();
    for (i, &(wi, ai)) in support.iter().enumerate() {
        for &(wj, aj) in &support[i + 1..] {
            let d = ai - aj;
            pairs = pairs + wi * wj * d * d;
        }
    }
    (prob, dprob, T::lit(4.0) * (pairs / prob + dead))
}

/// `p_b Q_b = -(p_b')^2 / p_b + 4 sum_{n<p} (n-p)^2 w_n |c_n|^2 / g^2`, with
/// `w_n = g^{2(n-p)}` on success and `g^{4(n-p)} / (1 - g^{2(n-p)})` on failure.
pub fn weighted_branch_explicit<T: Real>(probe: &FockVector<T>, params: &NlaParams<T>, branch: Branch) -> T {
    let prob = branch_probability_unchecked(probe, params, branch);
    let dprob = branch_probability_derivative_unchecked(probe, params, branch);
    if !(prob > T::tiny(BRANCH_FLOOR)) {
        return T::zero();
    }
    let g = params.gain();
    let p = T::from_usize_lossy(params.threshold());
    let sum: T = probe
        .amps()
        .iter()
        .enumerate()
        .take(params.threshold())
        .map(|(n, c)| {
            let m = T::from_usize_lossy(n) - p;
            let g2 = params.povm_entry(Branch::Success, n);
            let w = match branch {
                Branch::Success => g2,
                Branch::Failure => g2 * g2 / params.povm_entry(Branch::Failure, n),
            };
            m * m * w / (g * g) * c.norm_sqr()
        })
        .sum();
    T::lit(4.0) * sum - dprob * dprob / prob
}

/// QFI of the normalized conditional state of `branch`.
pub fn qfi_branch<T: Real>(probe: &FockVector<T>, params: &NlaParams<T>, branch: Branch) -> Result<T> {
    probe.ensure_normalized("probe")?;
    let (prob, _, weighted) = weighted_branch(probe, params, branch);
    crate::instrument::ensure_possible(branch, prob)?;
    Ok(weighted / prob)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalFi<T: Real> {
    pub value: T,
    /// One branch is (numerically) impossible and the herald is deterministic.
    pub degenerate: bool,
}

/// Fisher information of the herald: `(p_s')^2 / p_s + (p_f')^2 / p_f`.
pub fn classical_fi<T: Real>(probe: &FockVector<T>, params: &NlaParams<T>) -> Result<ClassicalFi<T>> {
    probe.ensure_normalized("probe")?;
    Ok(classical_fi_unchecked(probe, params))
}

fn classical_fi_unchecked<T: Real>(probe: &FockVector<T>, params: &NlaParams<T>) -> ClassicalFi<T> {
    let floor = T::tiny(BRANCH_FLOOR);
    let ps = branch_probability_unchecked(probe, params, Branch::Success);
    let pf = branch_probability_unchecked(probe, params, Branch::Failure);
    if !(ps > floor && pf > floor) {
        return ClassicalFi { value: T::zero(), degenerate: true };
    }
    let d = branch_probability_derivative_unchecked(probe, params, Branch::Success);
    ClassicalFi { value: d * d / ps + d * d / pf, degenerate: false }
}

/// `Q_eff = 4 sum_{n<p} (n-p)^2 |c_n|^2 g^{2(n-p-1)} / (1 - g^{2(n-p)})`.
pub fn qfi_effective_closed_form<T: Real>(probe: &FockVector<T>, params: &NlaParams<T>) -> Result<T> {
    probe.ensure_normalized("probe")?;
    Ok(closed_form_unchecked(probe, params))
}

fn closed_form_unchecked<T: Real>(probe: &FockVector<T>, params: &NlaParams<T>) -> T {
    let g = params.gain();
    let p = T::from_usize_lossy(params.threshold());
    let sum: T = probe
        .amps()
        .iter()
        .enumerate()
        .take(params.threshold())
        .map(|(n, c)| {
            let m = T::from_usize_lossy(n) - p;
            let ratio = params.povm_entry(Branch::Success, n) / params.povm_entry(Branch::Failure, n);
            m * m * ratio / (g * g) * c.norm_sqr()
        })
        .sum();
    T::lit(4.0) * sum
}

/// Full breakdown; `q_eff` is the closed form and the other fields are
/// computed independently of it.
pub fn qfi_effective<T: Real>(probe: &FockVector<T>, params: &NlaParams<T>) -> Result<FisherBreakdown<T>> {
    probe.ensure_normalized("probe")?;
    let (ps, _, ps_qs) = weighted_branch(probe, params, Branch::Success);
    let (pf, _, pf_qf) = weighted_branch(probe, params, Branch::Failure);
    let floor = T::tiny(BRANCH_FLOOR);
    Ok(FisherBreakdown {
        q_eff: closed_form_unchecked(probe, params),
        ps_qs,
        pf_qf,
        f_c: classical_fi_unchecked(probe, params).value,
        q_s: if ps > floor { ps_qs / ps } else { T::zero() },
        q_f: if pf > floor { pf_qf / pf } else { T::zero() },
        q_unc: qfi_unconditional(probe, params)?,
    })
}

/// QFI of the unheralded output `rho_unc`, with the analytic derivative.
pub fn qfi_unconditional<T: Real>(probe: &FockVector<T>, params: &NlaParams<T>) -> Result<T> {
    let rho = unconditional_state(probe, params)?;
    let drho = unconditional_state_derivative(probe, params)?;
    qfi_mixed(&rho, &drho)
}

/// QFI of the system-meter pure state for a generic meter preparation:
/// `Q_eff - 4 |2 Im(alpha beta^*) X|^2` with
/// `X = <psi| E_s dE_f - E_f dE_s |psi>`.
pub fn qfi_joint_meter<T: Real>(probe: &FockVector<T>, params: &NlaParams<T>, meter: &MeterState<T>) -> Result<T> {
    probe.ensure_normalized("probe")?;
    let meter = MeterState::new(meter.alpha, meter.beta)?;
    let x: T = probe
        .amps()
        .iter()
        .enumerate()
        .take(params.threshold())
        .map(|(n, c)| {
            let s = params.kraus_entry(Branch::Success, n);
            let f = params.kraus_entry(Branch::Failure, n);
            let ds = params.kraus_entry_derivative(Branch::Success, n);
            let df = params.kraus_entry_derivative(Branch::Failure, n);
            (s * df - f * ds) * c.norm_sqr()
        })
        .sum();
    let gap = meter.coherence() * x;
    Ok((closed_form_unchecked(probe, params) - T::lit(4.0) * gap * gap).max(T::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instrument::{conditional_state, conditional_state_derivative, joint_state, joint_state_derivative};
    use crate::probes::{coherent_state, solve_amplitude_for_nbar, squeezed_vacuum, ProbeFamily};
    use crate::scalar::C;
    use proptest::prelude::*;

    fn pr(g: f64, t: usize) -> NlaParams<f64> {
        NlaParams::new(g, t).unwrap()
    }

    fn two_level() -> FockVector<f64> {
        let h = 0.5f64.sqrt();
        FockVector::from_real(&[h, h]).unwrap()
    }

    fn probe(family: ProbeFamily, nbar: f64) -> FockVector<f64> {
        let a = solve_amplitude_for_nbar(family, nbar).unwrap();
        match family {
            ProbeFamily::Coherent => coherent_state(a, 1e-14).unwrap(),
            _ => squeezed_vacuum(a, 1e-14).unwrap(),
        }
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-12)
    }

    #[test]
    fn pure_examples() {
        let psi = two_level();
        assert_eq!(qfi_pure(&psi, &FockVector::zeros(2)), 0.0);
        let vac = FockVector::basis(0, 1).unwrap();
        let s = conditional_state(&vac, &pr(2.0, 1), Branch::Success).unwrap().state;
        let ds = conditional_state_derivative(&vac, &pr(2.0, 1), Branch::Success).unwrap();
        assert_eq!(qfi_pure(&s, &ds), 0.0);
        let s = conditional_state(&psi, &pr(2.0, 1), Branch::Success).unwrap().state;
        let ds = conditional_state_derivative(&psi, &pr(2.0, 1), Branch::Success).unwrap();
        assert!(close(qfi_pure(&s, &ds), 0.16, 1e-12));
    }

    #[test]
    fn mixed_examples() {
        let rho = DensityOperator::from_pure(&two_level());
        assert_eq!(qfi_mixed(&rho, &CMatrix::zeros(2)).unwrap(), 0.0);

        let psi = probe(ProbeFamily::Coherent, 1.0);
        let params = pr(1.7, 3);
        let s = conditional_state(&psi, &params, Branch::Success).unwrap().state;
        let ds = conditional_state_derivative(&psi, &params, Branch::Success).unwrap();
        let mut drho = CMatrix::zeros(s.dim());
        drho.add_sym_outer(ds.amps(), s.amps(), 1.0);
        let q = qfi_mixed(&DensityOperator::from_pure(&s), &drho).unwrap();
        assert!(close(q, qfi_pure(&s, &ds), 1e-8), "{q} vs {}", qfi_pure(&s, &ds));

        let bad = CMatrix::from_fn(2, |i, j| if i < j { C::new(1.0, 0.0) } else { C::default() });
        assert!(matches!(qfi_mixed(&rho, &bad), Err(NlaError::NonHermitianDerivative { .. })));
    }

    #[test]
    fn branch_and_classical_examples() {
        let vac = FockVector::basis(0, 1).unwrap();
        let one = FockVector::basis(1, 2).unwrap();
        let p21 = pr(2.0, 1);
        assert!(qfi_branch(&vac, &p21, Branch::Success).unwrap().abs() < 1e-15);
        assert!(close(qfi_branch(&two_level(), &p21, Branch::Success).unwrap(), 0.16, 1e-12));
        assert!(qfi_branch(&two_level(), &p21, Branch::Failure).unwrap().abs() < 1e-12);
        assert!(matches!(qfi_branch(&one, &p21, Branch::Failure), Err(NlaError::BranchImpossible { .. })));

        let c = classical_fi(&one, &pr(2.5, 1)).unwrap();
        assert_eq!(c.value, 0.0);
        assert!(c.degenerate);
        assert!(close(classical_fi(&vac, &p21).unwrap().value, 1.0 / 3.0, 1e-12));
        let c = classical_fi(&two_level(), &p21).unwrap();
        assert!(close(c.value, 0.125f64.powi(2) / 0.625 + 0.125f64.powi(2) / 0.375, 1e-12));
        assert!(!c.degenerate);
    }

    #[test]
    fn effective_examples() {
        let vac = FockVector::basis(0, 1).unwrap();
        let p21 = pr(2.0, 1);
        let b = qfi_effective(&vac, &p21).unwrap();
        assert!(close(b.q_eff, 1.0 / 3.0, 1e-12));
        assert!(b.q_unc.abs() < 1e-12);

        let one = FockVector::basis(1, 2).unwrap();
        let b = qfi_effective(&one, &pr(3.0, 1)).unwrap();
        assert_eq!((b.q_eff, b.ps_qs, b.pf_qf, b.f_c), (0.0, 0.0, 0.0, 0.0));
        assert!(b.q_unc.abs() < 1e-12);

        let b = qfi_effective(&two_level(), &p21).unwrap();
        assert!(close(b.q_eff, 1.0 / 6.0, 1e-12));
        assert!(close(b.ps_qs, 0.1, 1e-12));
        assert!(b.pf_qf.abs() < 1e-12);
        assert!(close(b.f_c, 0.0666667, 1e-6));
        assert!(close(b.q_unc, 1.0 / 12.0, 1e-8), "{}", b.q_unc);
    }

    #[test]
    fn golden_unconditional_and_joint() {
        let psi = coherent_state(1.0f64, 1e-14).unwrap();
        let params = pr(2.0, 3);
        let b = qfi_effective(&psi, &params).unwrap();
        assert!(close(b.q_eff, 0.211968630389, 1e-10));
        assert!(close(b.q_unc, 0.0225564185270343, 1e-9), "{}", b.q_unc);

        let h = 0.5f64.sqrt();
        let meter = MeterState::new(C::new(h, 0.0), C::new(0.0, h)).unwrap();
        let q = qfi_joint_meter(&psi, &params, &meter).unwrap();
        assert!(close(q, 0.0225564185, 1e-8), "{q}");

        let j = joint_state(&psi, &params, &meter).unwrap().to_vector();
        let dj = joint_state_derivative(&psi, &params, &meter).unwrap().to_vector();
        assert!(close(qfi_pure(&j, &dj), q, 1e-10));
    }

    #[test]
    fn joint_meter_without_coherence_is_effective() {
        let psi = probe(ProbeFamily::SqueezedVacuum, 1.0);
        let params = pr(1.5, 4);
        let q_eff = qfi_effective_closed_form(&psi, &params).unwrap();
        assert_eq!(qfi_joint_meter(&psi, &params, &MeterState::ready()).unwrap(), q_eff);
        let h = 0.5f64.sqrt();
        let real = MeterState::new(C::new(h, 0.0), C::new(h, 0.0)).unwrap();
        assert_eq!(qfi_joint_meter(&psi, &params, &real).unwrap(), q_eff);
        let j = joint_state(&psi, &params, &MeterState::ready()).unwrap().to_vector();
        let dj = joint_state_derivative(&psi, &params, &MeterState::ready()).unwrap().to_vector();
        assert!(close(qfi_pure(&j, &dj), q_eff, 1e-10));
    }

    #[test]
    fn identity_over_standard_grid() {
        for family in [ProbeFamily::Coherent, ProbeFamily::SqueezedVacuum] {
            for nbar in [0.5, 1.0, 1.5, 2.0] {
                let psi = probe(family, nbar);
                for g in [1.05, 1.2, 1.5, 2.0, 3.0, 4.0, 6.0] {
                    for t in 1..=5 {
                        let b = qfi_effective(&psi, &pr(g, t)).unwrap();
                        assert!(b.identity_residual() <= 1e-9, "{family} {nbar} {g} {t}: {b:?}");
                        assert!(b.ps_qs <= b.q_eff * (1.0 + 1e-9));
                        assert!(b.q_unc <= b.q_eff * (1.0 + 1e-9) + 1e-15, "{family} {nbar} {g} {t}: {b:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn hierarchy_on_weak_probes() {
        for family in [ProbeFamily::Coherent, ProbeFamily::SqueezedVacuum] {
            for nbar in [0.5, 1.0, 1.5] {
                let psi = probe(family, nbar);
                for g in [1.2, 1.5, 2.0, 3.0, 4.0] {
                    for t in [3, 4] {
                        let b = qfi_effective(&psi, &pr(g, t)).unwrap();
                        assert!(b.q_eff > b.ps_qs, "{family} {nbar} {g} {t}: {b:?}");
                        assert!(b.ps_qs >= b.q_unc * (1.0 - 1e-9), "{family} {nbar} {g} {t}: {b:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn postselection_can_lose_to_unconditional_at_low_threshold() {
        let b = qfi_effective(&probe(ProbeFamily::Coherent, 1.0), &pr(1.2, 1)).unwrap();
        assert!(b.q_unc > b.ps_qs);
        assert!(b.q_eff > b.q_unc);
    }

    #[test]
    fn squared_deviation_form_matches_explicit_formula() {
        for family in [ProbeFamily::Coherent, ProbeFamily::SqueezedVacuum] {
            for nbar in [0.5, 2.0] {
                let psi = probe(family, nbar);
                for g in [1.05, 1.5, 3.0, 6.0] {
                    for t in 1..=5 {
                        let params = pr(g, t);
                        for branch in Branch::BOTH {
                            let (_, _, w) = weighted_branch(&psi, &params, branch);
                            let e = weighted_branch_explicit(&psi, &params, branch);
                            assert!((w - e).abs() <= 1e-10 * w + 1e-12, "{family} {nbar} {g} {t} {branch}: {w} {e}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn effective_decreases_with_gain() {
        for family in [ProbeFamily::Coherent, ProbeFamily::SqueezedVacuum] {
            let psi = probe(family, 1.0);
            let q: Vec<f64> = (0..=200)
                .map(|k| 1.05 + (6.0 - 1.05) * k as f64 / 200.0)
                .map(|g| qfi_effective_closed_form(&psi, &pr(g, 3)).unwrap())
                .collect();
            assert!(q.windows(2).all(|w| w[1] < w[0]), "{family}");
        }
    }

    #[test]
    fn diverges_at_unit_gain() {
        let psi = probe(ProbeFamily::Coherent, 0.5);
        let q = |g| qfi_effective_closed_form(&psi, &pr(g, 2)).unwrap();
        assert!(q(1.0 + 1e-3) > q(1.0 + 1e-2));
        assert!(q(1.0 + 1e-2) > q(1.1));
    }

    #[test]
    fn single_precision_agrees() {
        let psi32 = coherent_state(1.0f32, 1e-7).unwrap();
        let b32 = qfi_effective(&psi32, &NlaParams::new(2.0f32, 3).unwrap()).unwrap();
        assert!((b32.q_eff as f64 - 0.211968630389).abs() < 1e-5);
        assert!(b32.identity_residual() < 1e-4);
    }

    fn random_probe(amps: &[(f64, f64)]) -> FockVector<f64> {
        FockVector::normalize(amps.iter().map(|&(r, i)| C::new(r, i)).collect()).unwrap().0
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]
        #[test]
        fn random_probe_invariants(
            amps in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..10)
                .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-2)),
            g in 1.05f64..6.0,
            t in 1usize..=5,
            (ar, ai, br, bi) in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
        ) {
            let psi = random_probe(&amps);
            let params = pr(g, t);
            let b = qfi_effective(&psi, &params).unwrap();
            prop_assert!(b.identity_residual() <= 1e-9);
            prop_assert!(b.ps_qs <= b.q_eff * (1.0 + 1e-9) + 1e-14);
            prop_assert!(b.q_unc <= b.q_eff * (1.0 + 1e-9) + 1e-12);

            for branch in Branch::BOTH {
                if let Ok(cs) = conditional_state(&psi, &params, branch) {
                    if cs.prob > 1e-8 {
                        let d = conditional_state_derivative(&psi, &params, branch).unwrap();
                        prop_assert!(d.inner(&cs.state).norm() <= 1e-10 * (1.0 + d.norm_sqr().sqrt()));
                    }
                }
            }

            let n = (ar * ar + ai * ai + br * br + bi * bi).sqrt().max(1e-3);
            let meter = MeterState::new(C::new(ar / n, ai / n), C::new(br / n, bi / n)).unwrap();
            let qj = qfi_joint_meter(&psi, &params, &meter).unwrap();
            prop_assert!(qj <= b.q_eff * (1.0 + 1e-9) + 1e-15);
            let j = joint_state(&psi, &params, &meter).unwrap().to_vector();
            let dj = joint_state_derivative(&psi, &params, &meter).unwrap().to_vector();
            prop_assert!((qfi_pure(&j, &dj) - qj).abs() <= 1e-9 * b.q_eff.max(1e-6));
        }
    }
}
