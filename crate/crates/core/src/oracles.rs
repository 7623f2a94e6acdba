//! Brute-force cross-checks of the analytic Fisher informations.
//!
//! Finite-difference QFIs use the Bures identity
//! `Q = 8 (1 - sqrt F(rho_{g-dg/2}, rho_{g+dg/2})) / dg^2`, with the deficit
//! `1 - sqrt F` evaluated as a squared difference norm so that it keeps full
//! relative precision even when it is far below machine epsilon.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NlaError, Result};
use crate::fisher::{qfi_branch, qfi_effective, qfi_joint_meter};
use crate::fock::{bures_deficit, hermite_functions, DensityOperator, FockVector, QuadratureGrid};
use crate::instrument::{
    branch_probability, conditional_state, joint_state, unconditional_state, Branch, MeterState, NlaParams,
};
use crate::measurements::{fi_homodyne, fi_photon_counting, initial_half_width, sequential_fi, Readout};
use crate::probes::{ProbeFamily, ProbeSpec};
use crate::scalar::{rel_diff, Real, C};

/// Step for fidelity-based QFIs.
pub const QFI_STEP: f64 = 1e-4;
/// Step for probability derivatives.
pub const PROB_STEP: f64 = 1e-5;
/// Step used to decide whether a family is locally constant.
pub const PROBE_STEP: f64 = 1e-3;

/// Absolute floor below which relative errors are measured absolutely.
pub const ABS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub quantity: String,
    pub context: String,
    pub analytic: f64,
    pub oracle: f64,
    pub rel_error: f64,
    pub step: f64,
    pub tolerance: f64,
}

impl OracleReport {
    pub fn new(quantity: &str, context: String, analytic: f64, oracle: f64, step: f64, tolerance: f64) -> Self {
        Self {
            quantity: quantity.to_string(),
            context,
            analytic,
            oracle,
            rel_error: rel_diff(analytic, oracle, ABS_FLOOR),
            step,
            tolerance,
        }
    }

    pub fn passed(&self, scale: f64) -> bool {
        self.rel_error <= self.tolerance * scale
    }
}

fn check_step(dg: f64) -> Result<()> {
    if (1e-6..=1e-3).contains(&dg) {
        Ok(())
    } else {
        Err(NlaError::InvalidInput(format!("finite-difference step {dg} outside [1e-6, 1e-3]")))
    }
}

/// `1 - |<a|b>| / (|a| |b|)` as a difference norm after phase alignment.
pub fn pure_deficit<T: Real>(a: &FockVector<T>, b: &FockVector<T>) -> T {
    let ov = a.inner(b);
    let phase = if ov.norm() > T::zero() { ov.conj() / ov.norm() } else { C::new(T::one(), T::zero()) };
    let diff: T = a.amps().iter().zip(b.amps()).map(|(x, y)| (x - y * phase).norm_sqr()).sum();
    let (na, nb) = (a.norm_sqr().sqrt(), b.norm_sqr().sqrt());
    ((diff - (na - nb) * (na - nb)) / (T::lit(2.0) * na * nb)).max(T::zero())
}

/// Runs the symmetric-pair estimate and applies the resolution rule: a
/// deficit whose difference vector is below `100 eps` is re-probed at
/// [`PROBE_STEP`]; a family that is still unresolved there is locally
/// constant and has zero QFI.
fn fd_with_resolution<T: Real>(deficit_at: impl Fn(T) -> Result<T>, dg: f64) -> Result<T> {
    check_step(dg)?;
    let resolvable = |d: T| d.sqrt() > T::lit(100.0) * T::epsilon();
    let d = deficit_at(T::lit(dg))?;
    if resolvable(d) {
        return Ok(T::lit(8.0) * d / (T::lit(dg) * T::lit(dg)));
    }
    let coarse = deficit_at(T::lit(PROBE_STEP))?;
    if resolvable(coarse) {
        Err(NlaError::StepTooSmall { step: dg })
    } else {
        Ok(T::zero())
    }
}

/// Finite-difference QFI of a pure-state family.
pub fn qfi_fd_pure<T: Real>(state_at: impl Fn(T) -> Result<FockVector<T>>, g: T, dg: f64) -> Result<T> {
    let half = T::lit(0.5);
    fd_with_resolution(|h| Ok(pure_deficit(&state_at(g - half * h)?, &state_at(g + half * h)?)), dg)
}

/// Finite-difference QFI of a mixed-state family via the Bures deficit.
pub fn qfi_fd_mixed<T: Real>(rho_at: impl Fn(T) -> Result<DensityOperator<T>>, g: T, dg: f64) -> Result<T> {
    let half = T::lit(0.5);
    fd_with_resolution(|h| bures_deficit(&rho_at(g - half * h)?, &rho_at(g + half * h)?), dg)
}

/// FI of the sequential record from the joint distribution `p_i p(o|i)`,
/// built from branch probabilities and normalized detector distributions
/// with central-difference derivatives.
pub fn joint_fi_direct(probe: &FockVector<f64>, params: &NlaParams<f64>, readout: Readout) -> Result<f64> {
    let g = params.gain();
    let at = |gain: f64| params.with_gain(gain);
    let h = PROB_STEP;
    let mut total = 0.0;
    for branch in Branch::BOTH {
        let masses = |p: &NlaParams<f64>, grid: Option<&QuadratureGrid<f64>>| -> Result<Vec<f64>> {
            let prob = branch_probability(probe, p, branch)?;
            let state = match conditional_state(probe, p, branch) {
                Ok(cs) => cs.state,
                Err(NlaError::BranchImpossible { .. }) => return Ok(Vec::new()),
                Err(e) => return Err(e),
            };
            Ok(match grid {
                None => state.populations().into_iter().map(|q| prob * q).collect(),
                Some(grid) => grid
                    .nodes
                    .iter()
                    .zip(&grid.weights)
                    .map(|(&x, &w)| {
                        let psi: C<f64> =
                            state.amps().iter().zip(hermite_functions(state.dim(), x)).map(|(a, hf)| a * hf).sum();
                        prob * psi.norm_sqr() * w
                    })
                    .collect(),
            })
        };
        let grid = match readout {
            Readout::PhotonCounting => None,
            Readout::Homodyne => {
                let l = initial_half_width::<f64>(probe.dim()) + 4.0;
                Some(QuadratureGrid::composite(-l, l, 8 * l.ceil() as usize, 16))
            }
        };
        let mid = masses(params, grid.as_ref())?;
        let up = masses(&at(g + h)?, grid.as_ref())?;
        let dn = masses(&at(g - h)?, grid.as_ref())?;
        if mid.is_empty() || up.is_empty() || dn.is_empty() {
            continue;
        }
        // Quadrature weights are folded into the masses, so the same sum
        // approximates the integral for homodyne.
        total += mid
            .iter()
            .zip(up.iter().zip(&dn))
            .filter(|(m, _)| **m > 1e-300)
            .map(|(m, (u, d))| {
                let dp = (u - d) / (2.0 * h);
                dp * dp / m
            })
            .sum::<f64>();
    }
    Ok(total)
}

/// One point of the standard validation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub family: ProbeFamily,
    pub nbar: f64,
    pub gain: f64,
    pub threshold: usize,
}

impl GridPoint {
    pub fn probe(&self) -> Result<FockVector<f64>> {
        ProbeSpec::with_nbar(self.family, self.nbar)?.build()
    }

    pub fn params(&self) -> Result<NlaParams<f64>> {
        NlaParams::new(self.gain, self.threshold)
    }

    pub fn label(&self) -> String {
        format!("{} nbar={} g={} p={}", self.family, self.nbar, self.gain, self.threshold)
    }
}

pub const GRID_NBAR: [f64; 4] = [0.5, 1.0, 1.5, 2.0];
pub const GRID_GAIN: [f64; 7] = [1.05, 1.2, 1.5, 2.0, 3.0, 4.0, 6.0];
pub const GRID_THRESHOLD: [usize; 5] = [1, 2, 3, 4, 5];

/// {coherent, squeezed vacuum} x nbar x g x p, 280 points.
pub fn standard_grid() -> Vec<GridPoint> {
    let mut out = Vec::with_capacity(280);
    for family in [ProbeFamily::Coherent, ProbeFamily::SqueezedVacuum] {
        for nbar in GRID_NBAR {
            for gain in GRID_GAIN {
                for threshold in GRID_THRESHOLD {
                    out.push(GridPoint { family, nbar, gain, threshold });
                }
            }
        }
    }
    out
}

/// Fixed meter preparations with nonzero `Im(alpha beta^*)`.
pub fn test_meters() -> Vec<MeterState<f64>> {
    [(0.25f64, 0.5f64), (0.7, 1.1), (std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_2)]
        .iter()
        .map(|&(theta, phi)| MeterState::new(C::new(theta.cos(), 0.0), C::from_polar(theta.sin(), phi)).unwrap())
        .collect()
}

/// Worst-case outcome of one named check across the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub tolerance: f64,
    pub points: usize,
    pub worst: Option<OracleReport>,
    pub failures: Vec<OracleReport>,
}

impl CheckSummary {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn worst_error(&self) -> f64 {
        self.worst.as_ref().map_or(0.0, |r| r.rel_error)
    }
}

/// Named checks run by [`run_suite`], with their relative tolerances.
pub const CHECKS: [(&str, f64); 12] = [
    ("q_eff identity", 1e-9),
    ("q_eff closed form", 1e-9),
    ("q_eff fidelity oracle", 1e-5),
    ("q_s fidelity oracle", 1e-5),
    ("q_f fidelity oracle", 1e-5),
    ("q_unc fidelity oracle", 1e-5),
    ("joint meter fidelity oracle", 1e-5),
    ("photon counting saturation", 1e-9),
    ("homodyne saturation", 1e-6),
    ("sequential record fi", 1e-8),
    ("joint fi direct photon counting", 1e-5),
    ("joint fi direct homodyne", 1e-5),
];

/// Every oracle comparison at one grid point.
pub fn point_reports(pt: &GridPoint) -> Result<Vec<OracleReport>> {
    let probe = pt.probe()?;
    let params = pt.params()?;
    let ctx = pt.label();
    let tol = |name: &str| CHECKS.iter().find(|c| c.0 == name).map(|c| c.1).unwrap();
    let report = |name: &str, analytic: f64, oracle: f64, step: f64| {
        OracleReport::new(name, ctx.clone(), analytic, oracle, step, tol(name))
    };
    let with_gain = |g: f64| params.with_gain(g);
    let mut out = Vec::new();

    let b = qfi_effective(&probe, &params)?;
    out.push(report("q_eff identity", b.q_eff, b.ps_qs + b.pf_qf + b.f_c, 0.0));
    out.push(report("q_eff closed form", b.q_eff, crate::fisher::qfi_effective_closed_form(&probe, &params)?, 0.0));

    let ready = MeterState::ready();
    let fd = qfi_fd_pure(|g| Ok(joint_state(&probe, &with_gain(g)?, &ready)?.to_vector()), pt.gain, QFI_STEP)?;
    out.push(report("q_eff fidelity oracle", b.q_eff, fd, QFI_STEP));

    for (name, branch, q) in
        [("q_s fidelity oracle", Branch::Success, b.q_s), ("q_f fidelity oracle", Branch::Failure, b.q_f)]
    {
        if conditional_state(&probe, &params, branch).is_err() {
            continue;
        }
        let fd = qfi_fd_pure(|g| Ok(conditional_state(&probe, &with_gain(g)?, branch)?.state), pt.gain, QFI_STEP)?;
        out.push(report(name, q, fd, QFI_STEP));
    }

    let fd = qfi_fd_mixed(|g| unconditional_state(&probe, &with_gain(g)?), pt.gain, QFI_STEP)?;
    out.push(report("q_unc fidelity oracle", b.q_unc, fd, QFI_STEP));

    for meter in test_meters() {
        let q = qfi_joint_meter(&probe, &params, &meter)?;
        let fd = qfi_fd_pure(|g| Ok(joint_state(&probe, &with_gain(g)?, &meter)?.to_vector()), pt.gain, QFI_STEP)?;
        out.push(report("joint meter fidelity oracle", q, fd, QFI_STEP));
    }

    for branch in Branch::BOTH {
        let Ok(q) = qfi_branch(&probe, &params, branch) else { continue };
        out.push(report("photon counting saturation", q, fi_photon_counting(&probe, &params, branch)?, 0.0));
        out.push(report("homodyne saturation", q, fi_homodyne(&probe, &params, branch, false)?, 0.0));
    }

    let decomposed = b.ps_qs + b.pf_qf + b.f_c;
    for readout in [Readout::PhotonCounting, Readout::Homodyne] {
        out.push(report("sequential record fi", decomposed, sequential_fi(&probe, &params, readout)?, 0.0));
    }
    out.push(report(
        "joint fi direct photon counting",
        b.q_eff,
        joint_fi_direct(&probe, &params, Readout::PhotonCounting)?,
        PROB_STEP,
    ));
    out.push(report(
        "joint fi direct homodyne",
        b.q_eff,
        joint_fi_direct(&probe, &params, Readout::Homodyne)?,
        PROB_STEP,
    ));
    Ok(out)
}

/// Runs every check on `points` in parallel; `tolerance_scale` multiplies
/// every tolerance (0 makes any nonzero error a failure).
pub fn run_suite(points: &[GridPoint], tolerance_scale: f64) -> Result<Vec<CheckSummary>> {
    let reports: Vec<Vec<OracleReport>> = points.par_iter().map(point_reports).collect::<Result<_>>()?;
    Ok(summarize(reports.into_iter().flatten(), tolerance_scale))
}

pub fn summarize(reports: impl IntoIterator<Item = OracleReport>, tolerance_scale: f64) -> Vec<CheckSummary> {
    let mut out: Vec<CheckSummary> = CHECKS
        .iter()
        .map(|&(name, tolerance)| CheckSummary {
            name: name.to_string(),
            tolerance,
            points: 0,
            worst: None,
            failures: Vec::new(),
        })
        .collect();
    for r in reports {
        let Some(s) = out.iter_mut().find(|s| s.name == r.quantity) else { continue };
        s.points += 1;
        if !r.passed(tolerance_scale) {
            s.failures.push(r.clone());
        }
        if s.worst.as_ref().is_none_or(|w| r.rel_error > w.rel_error) {
            s.worst = Some(r);
        }
    }
    out
}

/// Golden values of the test fixtures, each paired with its oracle.
pub fn golden_reports() -> Result<Vec<OracleReport>> {
    let h = 0.5f64.sqrt();
    let two_level = FockVector::from_real(&[h, h])?;
    let coherent = ProbeSpec::with_nbar(ProbeFamily::Coherent, 1.0)?.build::<f64>()?;
    let p23 = NlaParams::new(2.0, 3)?;
    let p21 = NlaParams::new(2.0, 1)?;
    let meter = MeterState::new(C::new(h, 0.0), C::new(0.0, h))?;
    let mut out = Vec::new();

    let q = qfi_effective(&coherent, &p23)?;
    let fd = qfi_fd_mixed(|g| unconditional_state(&coherent, &p23.with_gain(g)?), 2.0, QFI_STEP)?;
    out.push(OracleReport::new("q_unc", "coherent nbar=1 g=2 p=3".into(), q.q_unc, fd, QFI_STEP, 1e-5));
    let fd = qfi_fd_pure(
        |g| Ok(joint_state(&coherent, &p23.with_gain(g)?, &MeterState::ready())?.to_vector()),
        2.0,
        QFI_STEP,
    )?;
    out.push(OracleReport::new("q_eff", "coherent nbar=1 g=2 p=3".into(), q.q_eff, fd, QFI_STEP, 1e-5));
    let qj = qfi_joint_meter(&coherent, &p23, &meter)?;
    let fd = qfi_fd_pure(|g| Ok(joint_state(&coherent, &p23.with_gain(g)?, &meter)?.to_vector()), 2.0, QFI_STEP)?;
    out.push(OracleReport::new(
        "q_joint_meter",
        "coherent nbar=1 g=2 p=3 alpha=1/sqrt2 beta=i/sqrt2".into(),
        qj,
        fd,
        QFI_STEP,
        1e-5,
    ));
    let q = qfi_effective(&two_level, &p21)?;
    let fd = qfi_fd_mixed(|g| unconditional_state(&two_level, &p21.with_gain(g)?), 2.0, QFI_STEP)?;
    out.push(OracleReport::new("q_unc", "two-level c0=c1=1/sqrt2 g=2 p=1".into(), q.q_unc, fd, QFI_STEP, 1e-5));
    let fd =
        qfi_fd_pure(|g| Ok(conditional_state(&two_level, &p21.with_gain(g)?, Branch::Success)?.state), 2.0, QFI_STEP)?;
    out.push(OracleReport::new("q_s", "two-level c0=c1=1/sqrt2 g=2 p=1".into(), q.q_s, fd, QFI_STEP, 1e-5));
    Ok(out)
}
