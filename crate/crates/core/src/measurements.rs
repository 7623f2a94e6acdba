//! Feasible detectors acting on the heralded output: Fock-basis photon
//! counting and homodyne detection of `x = (a + a^dag)/sqrt(2)`.
//!
//! All derivatives are analytic. The conditional amplitudes are
//! `a_n = c_n k_n / sqrt(p)` and their derivatives follow from the product
//! rule through `1/sqrt(p)`.

use serde::{Deserialize, Serialize};

use crate::error::{NlaError, Result};
use crate::fock::{hermite::fill_hermite_functions, integrate_real_line, FockVector, QuadratureGrid};
use crate::instrument::{
    branch_probability_derivative_unchecked, conditional_state, conditional_state_derivative, Branch, NlaParams,
};
use crate::scalar::{Real, C};

/// Densities below this are treated as zero inside Fisher-information integrands.
pub const DENSITY_FLOOR: f64 = 1e-300;
/// Relative convergence target of the homodyne quadratures.
pub const HOMODYNE_REL_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Readout {
    PhotonCounting,
    Homodyne,
}

impl Readout {
    pub fn as_str(self) -> &'static str {
        match self {
            Readout::PhotonCounting => "photon-counting",
            Readout::Homodyne => "homodyne",
        }
    }
}

impl std::fmt::Display for Readout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Support<T: Real> {
    /// Photon numbers `0..len`.
    PhotonNumbers(usize),
    Quadrature(QuadratureGrid<T>),
}

/// Outcome distribution of one detector on one conditional state. For photon
/// counting `probs` are masses; for homodyne they are density values at the
/// grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution<T: Real> {
    pub kind: Readout,
    pub branch: Branch,
    pub support: Support<T>,
    pub probs: Vec<T>,
}

impl<T: Real> OutcomeDistribution<T> {
    /// Total mass (sum or quadrature integral).
    pub fn total(&self) -> T {
        match &self.support {
            Support::PhotonNumbers(_) => self.probs.iter().copied().sum(),
            Support::Quadrature(grid) => grid.sum_values(&self.probs),
        }
    }
}

/// `|<n|psi_branch>|^2`.
pub fn photon_counting_dist<T: Real>(
    probe: &FockVector<T>,
    params: &NlaParams<T>,
    branch: Branch,
) -> Result<OutcomeDistribution<T>> {
    let cs = conditional_state(probe, params, branch)?;
    Ok(OutcomeDistribution {
        kind: Readout::PhotonCounting,
        branch,
        support: Support::PhotonNumbers(probe.dim()),
        probs: cs.state.populations(),
    })
}

/// `d/dg |<n|psi_branch>|^2 = |c_n|^2 (d(k_n^2)/p - k_n^2 p'/p^2)`.
pub fn photon_counting_derivative<T: Real>(
    probe: &FockVector<T>,
    params: &NlaParams<T>,
    branch: Branch,
) -> Result<Vec<T>> {
    let prob = conditional_state(probe, params, branch)?.prob;
    let dprob = branch_probability_derivative_unchecked(probe, params, branch);
    Ok(probe
        .amps()
        .iter()
        .enumerate()
        .map(|(n, c)| {
            let w = params.povm_entry(branch, n);
            c.norm_sqr() * (povm_derivative(params, branch, n) / prob - w * dprob / (prob * prob))
        })
        .collect())
}

/// `d/dg` of the POVM diagonal entry.
fn povm_derivative<T: Real>(params: &NlaParams<T>, branch: Branch, n: usize) -> T {
    let k = params.kraus_entry(branch, n);
    T::lit(2.0) * k * params.kraus_entry_derivative(branch, n)
}

/// Classical FI of photon counting on the conditional state.
pub fn fi_photon_counting<T: Real>(probe: &FockVector<T>, params: &NlaParams<T>, branch: Branch) -> Result<T> {
    let dist = photon_counting_dist(probe, params, branch)?;
    let deriv = photon_counting_derivative(probe, params, branch)?;
    Ok(fisher_sum(&dist.probs, &deriv))
}

fn fisher_sum<T: Real>(probs: &[T], deriv: &[T]) -> T {
    probs.iter().zip(deriv).filter(|(p, _)| **p > T::tiny(DENSITY_FLOOR)).map(|(p, d)| *d * *d / *p).sum()
}

/// `sum_n a_n <x|n>` for each amplitude vector in `vectors`.
fn wavefunctions<T: Real, const K: usize>(x: T, vectors: [&[C<T>]; K], scratch: &mut Vec<T>) -> [C<T>; K] {
    let dim = vectors[0].len();
    fill_hermite_functions(x, dim, scratch);
    vectors.map(|v| v.iter().zip(scratch.iter()).map(|(a, &h)| a * h).sum())
}

/// Starting half-width for quadratures over Fock states below `dim`.
pub fn initial_half_width<T: Real>(dim: usize) -> T {
    (T::from_usize_lossy(2 * dim + 1)).sqrt() + T::lit(8.0)
}

/// `p(x | branch) = |<x|psi_branch>|^2`.
pub fn homodyne_density<T: Real>(probe: &FockVector<T>, params: &NlaParams<T>, branch: Branch, x: T) -> Result<T> {
    let cs = conditional_state(probe, params, branch)?;
    let mut scratch = Vec::new();
    let [psi] = wavefunctions(x, [cs.state.amps()], &mut scratch);
    Ok(psi.norm_sqr())
}

/// Homodyne density tabulated on an adaptive grid that integrates it to 1.
pub fn homodyne_distribution<T: Real>(
    probe: &FockVector<T>,
    params: &NlaParams<T>,
    branch: Branch,
) -> Result<OutcomeDistribution<T>> {
    let cs = conditional_state(probe, params, branch)?;
    let amps = cs.state.amps();
    let density = |x: T, scratch: &mut Vec<T>| wavefunctions(x, [amps], scratch)[0].norm_sqr();
    let fit =
        integrate_real_line(initial_half_width(probe.dim()), T::tol(HOMODYNE_REL_TOL), T::tol(1e-15), 1, |x, out| {
            let mut scratch = Vec::new();
            out[0] = density(x, &mut scratch);
        });
    let mut scratch = Vec::new();
    let probs = fit.grid.nodes.iter().map(|&x| density(x, &mut scratch)).collect();
    Ok(OutcomeDistribution { kind: Readout::Homodyne, branch, support: Support::Quadrature(fit.grid), probs })
}

/// Classical FI of x-quadrature homodyne detection on the conditional state,
/// `int (dp/dg)^2 / p dx`.
///
/// Optimality only holds for real amplitudes, so probes that are not real up
/// to a global phase are rejected unless `allow_complex` is set.
pub fn fi_homodyne<T: Real>(
    probe: &FockVector<T>,
    params: &NlaParams<T>,
    branch: Branch,
    allow_complex: bool,
) -> Result<T> {
    if !allow_complex && !probe.is_real_up_to_phase(1e-12) {
        return Err(NlaError::ComplexProbeUnsupported);
    }
    let cs = conditional_state(probe, params, branch)?;
    let dstate = conditional_state_derivative(probe, params, branch)?;
    let (a, da) = (cs.state.amps(), dstate.amps());
    let fit =
        integrate_real_line(initial_half_width(probe.dim()), T::tol(HOMODYNE_REL_TOL), T::tol(1e-15), 2, |x, out| {
            let mut scratch = Vec::new();
            let [psi, dpsi] = wavefunctions(x, [a, da], &mut scratch);
            let p = psi.norm_sqr();
            out[0] = p;
            out[1] = fisher_integrand(p, T::lit(2.0) * (psi.conj() * dpsi).re);
        });
    Ok(fit.integrals[1])
}

fn fisher_integrand<T: Real>(p: T, dp: T) -> T {
    if p > T::tiny(DENSITY_FLOOR) {
        dp * dp / p
    } else {
        T::zero()
    }
}

/// FI of the full sequential record (herald, then `readout` on the heralded
/// state), summed directly over the joint outcome distribution
/// `p_i p(o|i) = |<o| E_i |psi>|^2`.
///
/// This uses only the instrument and detector model, so it is an independent
/// check of the effective QFI.
pub fn sequential_fi<T: Real>(probe: &FockVector<T>, params: &NlaParams<T>, readout: Readout) -> Result<T> {
    probe.ensure_normalized("probe")?;
    let mut total = T::zero();
    for branch in Branch::BOTH {
        total = total
            + match readout {
                Readout::PhotonCounting => {
                    let (probs, deriv): (Vec<T>, Vec<T>) = probe
                        .amps()
                        .iter()
                        .enumerate()
                        .map(|(n, c)| {
                            let w = c.norm_sqr();
                            (params.povm_entry(branch, n) * w, povm_derivative(params, branch, n) * w)
                        })
                        .unzip();
                    fisher_sum(&probs, &deriv)
                }
                Readout::Homodyne => {
                    let e: Vec<C<T>> =
                        probe.amps().iter().enumerate().map(|(n, c)| c * params.kraus_entry(branch, n)).collect();
                    let de: Vec<C<T>> = probe
                        .amps()
                        .iter()
                        .enumerate()
                        .map(|(n, c)| c * params.kraus_entry_derivative(branch, n))
                        .collect();
                    integrate_real_line(
                        initial_half_width(probe.dim()),
                        T::tol(HOMODYNE_REL_TOL),
                        T::tol(1e-15),
                        2,
                        |x, out| {
                            let mut scratch = Vec::new();
                            let [psi, dpsi] = wavefunctions(x, [&e, &de], &mut scratch);
                            let p = psi.norm_sqr();
                            out[0] = p;
                            out[1] = fisher_integrand(p, T::lit(2.0) * (psi.conj() * dpsi).re);
                        },
                    )
                    .integrals[1]
                }
            };
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::{qfi_branch, qfi_effective};
    use crate::probes::{coherent_state, solve_amplitude_for_nbar, squeezed_vacuum, ProbeFamily};
    use std::f64::consts::PI;

    fn pr(g: f64, t: usize) -> NlaParams<f64> {
        NlaParams::new(g, t).unwrap()
    }

    fn two_level() -> FockVector<f64> {
        let h = 0.5f64.sqrt();
        FockVector::from_real(&[h, h]).unwrap()
    }

    fn vacuum() -> FockVector<f64> {
        FockVector::basis(0, 1).unwrap()
    }

    fn probe(family: ProbeFamily, nbar: f64) -> FockVector<f64> {
        let a = solve_amplitude_for_nbar(family, nbar).unwrap();
        match family {
            ProbeFamily::Coherent => coherent_state(a, 1e-14).unwrap(),
            _ => squeezed_vacuum(a, 1e-14).unwrap(),
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-12)
    }

    #[test]
    fn photon_counting_examples() {
        let p21 = pr(2.0, 1);
        let d = photon_counting_dist(&vacuum(), &p21, Branch::Success).unwrap();
        assert_eq!(d.probs, vec![1.0]);
        let d = photon_counting_dist(&two_level(), &p21, Branch::Success).unwrap();
        assert!((d.probs[0] - 0.2).abs() < 1e-15 && (d.probs[1] - 0.8).abs() < 1e-15);
        let d = photon_counting_dist(&two_level(), &p21, Branch::Failure).unwrap();
        assert!((d.probs[0] - 1.0).abs() < 1e-15 && d.probs[1] == 0.0);

        assert!(fi_photon_counting(&vacuum(), &p21, Branch::Success).unwrap().abs() < 1e-15);
        assert!(rel(fi_photon_counting(&two_level(), &p21, Branch::Success).unwrap(), 0.16) < 1e-12);

        let sq = probe(ProbeFamily::SqueezedVacuum, 1.0);
        let p = pr(1.5, 3);
        let fi = fi_photon_counting(&sq, &p, Branch::Failure).unwrap();
        assert!(rel(fi, qfi_branch(&sq, &p, Branch::Failure).unwrap()) < 1e-9);
    }

    #[test]
    fn photon_counting_derivative_matches_difference() {
        let psi = probe(ProbeFamily::Coherent, 1.5);
        for branch in Branch::BOTH {
            let h = 1e-6;
            let up = photon_counting_dist(&psi, &pr(2.0 + h, 3), branch).unwrap().probs;
            let dn = photon_counting_dist(&psi, &pr(2.0 - h, 3), branch).unwrap().probs;
            let an = photon_counting_derivative(&psi, &pr(2.0, 3), branch).unwrap();
            for ((u, d), a) in up.iter().zip(&dn).zip(&an) {
                assert!(((u - d) / (2.0 * h) - a).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn homodyne_examples() {
        let p21 = pr(2.0, 1);
        let v = homodyne_density(&vacuum(), &p21, Branch::Success, 0.0).unwrap();
        assert!((v - PI.sqrt().recip()).abs() < 1e-15);
        for x in [-2.0, -0.3, 1.7] {
            let v = homodyne_density(&vacuum(), &p21, Branch::Success, x).unwrap();
            assert!((v - (-x * x).exp() / PI.sqrt()).abs() < 1e-15);
        }
        let v = homodyne_density(&two_level(), &p21, Branch::Success, 0.0).unwrap();
        assert!((v - 0.2 / PI.sqrt()).abs() < 1e-12);
        assert!((v - 0.1128379).abs() < 1e-7);

        assert!(fi_homodyne(&vacuum(), &p21, Branch::Success, false).unwrap().abs() < 1e-15);
        let fi = fi_homodyne(&two_level(), &p21, Branch::Success, false).unwrap();
        assert!(rel(fi, 0.16) < 1e-6, "{fi}");

        let coh = probe(ProbeFamily::Coherent, 1.0);
        let p = pr(2.0, 3);
        let fi = fi_homodyne(&coh, &p, Branch::Failure, false).unwrap();
        assert!(rel(fi, qfi_branch(&coh, &p, Branch::Failure).unwrap()) < 1e-6);
    }

    #[test]
    fn complex_probe_needs_override() {
        let psi = FockVector::normalize(vec![C::new(0.6, 0.0), C::new(0.0, 0.8)]).unwrap().0;
        let p = pr(1.5, 1);
        assert_eq!(fi_homodyne(&psi, &p, Branch::Success, false), Err(NlaError::ComplexProbeUnsupported));
        let fi = fi_homodyne(&psi, &p, Branch::Success, true).unwrap();
        assert!(fi <= qfi_branch(&psi, &p, Branch::Success).unwrap() * (1.0 + 1e-9));

        let phased = FockVector::normalize(vec![C::new(0.0, 0.6), C::new(0.0, 0.8)]).unwrap().0;
        assert!(fi_homodyne(&phased, &p, Branch::Success, false).is_ok());
    }

    #[test]
    fn distributions_are_normalized() {
        let psi = probe(ProbeFamily::SqueezedVacuum, 2.0);
        for branch in Branch::BOTH {
            let d = photon_counting_dist(&psi, &pr(1.2, 4), branch).unwrap();
            assert!((d.total() - 1.0).abs() < 1e-10);
            let d = homodyne_distribution(&psi, &pr(1.2, 4), branch).unwrap();
            assert!((d.total() - 1.0).abs() < 1e-8);
            assert!(d.probs.iter().all(|&p| p >= 0.0));
            if let Support::Quadrature(g) = &d.support {
                assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn sequential_scheme_recovers_effective_qfi() {
        for (psi, g, t) in [
            (vacuum(), 2.0, 1),
            (two_level(), 2.0, 1),
            (probe(ProbeFamily::SqueezedVacuum, 1.0), 1.5, 2),
            (probe(ProbeFamily::Coherent, 2.0), 3.0, 5),
        ] {
            let b = qfi_effective(&psi, &pr(g, t)).unwrap();
            let decomposed = b.ps_qs + b.pf_qf + b.f_c;
            for readout in [Readout::PhotonCounting, Readout::Homodyne] {
                let fi = sequential_fi(&psi, &pr(g, t), readout).unwrap();
                assert!(rel(fi, decomposed) < 1e-8, "{readout} {g} {t}: {fi} vs {decomposed}");
            }
        }
        let one = FockVector::basis(1, 2).unwrap();
        assert_eq!(sequential_fi(&one, &pr(2.0, 1), Readout::PhotonCounting).unwrap(), 0.0);
    }

    #[test]
    fn saturation_over_standard_grid() {
        for family in [ProbeFamily::Coherent, ProbeFamily::SqueezedVacuum] {
            for nbar in [0.5, 2.0] {
                let psi = probe(family, nbar);
                for g in [1.05, 2.0, 6.0] {
                    for t in [1, 3, 5] {
                        let p = pr(g, t);
                        for branch in Branch::BOTH {
                            let q = qfi_branch(&psi, &p, branch).unwrap();
                            let pc = fi_photon_counting(&psi, &p, branch).unwrap();
                            let hd = fi_homodyne(&psi, &p, branch, false).unwrap();
                            assert!((pc - q).abs() <= 1e-9 * q.max(1e-12), "{family} {nbar} {g} {t} {branch}");
                            assert!(
                                (hd - q).abs() <= 1e-6 * q.max(1e-12),
                                "{family} {nbar} {g} {t} {branch}: {hd} vs {q}"
                            );
                        }
                    }
                }
            }
        }
    }
}
