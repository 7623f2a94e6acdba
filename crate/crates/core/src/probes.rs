//! Probe states: coherent, squeezed vacuum and user-supplied pure states.

use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{NlaError, Result};
use crate::fock::FockVector;
use crate::scalar::Real;

pub const DEFAULT_TAIL_TOL: f64 = 1e-14;
pub const DEFAULT_CAP: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeFamily {
    Coherent,
    SqueezedVacuum,
    Custom,
}

impl std::fmt::Display for ProbeFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Coherent => "coherent",
            Self::SqueezedVacuum => "squeezed-vacuum",
            Self::Custom => "custom",
        })
    }
}

/// Parameters of one probe family member. Each variant carries exactly the
/// parameters of its kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProbeShape {
    Coherent { alpha: f64 },
    SqueezedVacuum { r: f64 },
    Custom { amps: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    #[serde(flatten)]
    pub shape: ProbeShape,
    pub tail_tol: f64,
}

impl ProbeSpec {
    pub fn coherent(alpha: f64) -> Self {
        Self { shape: ProbeShape::Coherent { alpha }, tail_tol: DEFAULT_TAIL_TOL }
    }

    pub fn squeezed_vacuum(r: f64) -> Self {
        Self { shape: ProbeShape::SqueezedVacuum { r }, tail_tol: DEFAULT_TAIL_TOL }
    }

    pub fn custom(amps: Vec<[f64; 2]>) -> Self {
        Self { shape: ProbeShape::Custom { amps }, tail_tol: DEFAULT_TAIL_TOL }
    }

    /// Family member with mean photon number `nbar`.
    pub fn with_nbar(family: ProbeFamily, nbar: f64) -> Result<Self> {
        let a = solve_amplitude_for_nbar(family, nbar)?;
        Ok(match family {
            ProbeFamily::Coherent => Self::coherent(a),
            ProbeFamily::SqueezedVacuum => Self::squeezed_vacuum(a),
            ProbeFamily::Custom => unreachable!(),
        })
    }

    pub fn family(&self) -> ProbeFamily {
        match self.shape {
            ProbeShape::Coherent { .. } => ProbeFamily::Coherent,
            ProbeShape::SqueezedVacuum { .. } => ProbeFamily::SqueezedVacuum,
            ProbeShape::Custom { .. } => ProbeFamily::Custom,
        }
    }

    pub fn build<T: Real>(&self) -> Result<FockVector<T>> {
        match &self.shape {
            ProbeShape::Coherent { alpha } => coherent_state(T::lit(*alpha), T::lit(self.tail_tol)),
            ProbeShape::SqueezedVacuum { r } => squeezed_vacuum(T::lit(*r), T::lit(self.tail_tol)),
            ProbeShape::Custom { amps } => custom_probe(amps).map(|(v, _)| v),
        }
    }
}

/// `c_n = e^{-alpha^2/2} alpha^n / sqrt(n!)`, truncated where the discarded
/// mass drops below `tail_tol` and renormalized.
pub fn coherent_state<T: Real>(alpha: T, tail_tol: T) -> Result<FockVector<T>> {
    coherent_state_capped(alpha, tail_tol, DEFAULT_CAP)
}

pub fn coherent_state_capped<T: Real>(alpha: T, tail_tol: T, cap: usize) -> Result<FockVector<T>> {
    if !(alpha >= T::zero()) || !alpha.is_finite() {
        return Err(NlaError::InvalidInput(format!("coherent amplitude {alpha} must be >= 0")));
    }
    if alpha == T::zero() {
        return FockVector::basis(0, 1);
    }
    let ln_a = alpha.ln();
    let a2 = alpha * alpha;
    let ln_pop = |n: usize, ln_fact: T| -a2 + T::lit(2.0) * T::from_usize_lossy(n) * ln_a - ln_fact;
    let pops = log_populations(cap, |n, lf| Some(ln_pop(n, lf)));
    truncate(pops, tail_tol, cap)
}

/// `c_{2n} = mu^{-1/2} (nu / 2mu)^n sqrt((2n)!) / n!`, `c_{2n+1} = 0`, with
/// `nu = sinh r`, `mu = cosh r`; truncated and renormalized.
pub fn squeezed_vacuum<T: Real>(r: T, tail_tol: T) -> Result<FockVector<T>> {
    squeezed_vacuum_capped(r, tail_tol, DEFAULT_CAP)
}

pub fn squeezed_vacuum_capped<T: Real>(r: T, tail_tol: T, cap: usize) -> Result<FockVector<T>> {
    if !(r >= T::zero()) || !r.is_finite() {
        return Err(NlaError::InvalidInput(format!("squeezing {r} must be >= 0")));
    }
    if r == T::zero() {
        return FockVector::basis(0, 1);
    }
    let (nu, mu) = (r.sinh(), r.cosh());
    let ln_ratio = (nu / (T::lit(2.0) * mu)).ln();
    let ln_mu = mu.ln();
    // ln |c_{2k}|^2 = -ln mu + 2k ln(nu/2mu) + ln (2k)! - 2 ln k!
    let mut half_fact = T::zero();
    let pops = log_populations(cap, |n, lf| {
        if n % 2 == 1 {
            return None;
        }
        let k = n / 2;
        if k > 0 {
            half_fact = half_fact + T::from_usize_lossy(k).ln();
        }
        Some(-ln_mu + T::lit(2.0) * T::from_usize_lossy(k) * ln_ratio + lf - T::lit(2.0) * half_fact)
    });
    truncate(pops, tail_tol, cap)
}

/// Populations `|c_n|^2` for `n` up to `4 * cap` (or until they are negligible
/// past their peak); `ln_pop(n, ln n!)` returns `None` for structurally zero levels.
fn log_populations<T: Real>(cap: usize, mut ln_pop: impl FnMut(usize, T) -> Option<T>) -> Vec<T> {
    let limit = 4 * cap + 8;
    let mut pops = Vec::new();
    let mut ln_fact = T::zero();
    let mut peak = T::zero();
    let mut last_nonzero = T::zero();
    for n in 0..limit {
        if n > 0 {
            ln_fact = ln_fact + T::from_usize_lossy(n).ln();
        }
        let p = ln_pop(n, ln_fact).map_or(T::zero(), |l| l.exp());
        peak = peak.max(p);
        if p > T::zero() {
            last_nonzero = p;
        }
        pops.push(p);
        if n > cap + 8 && last_nonzero < peak * T::lit(1e-40) {
            break;
        }
    }
    pops
}

fn truncate<T: Real>(pops: Vec<T>, tail_tol: T, cap: usize) -> Result<FockVector<T>> {
    let mut suffix = vec![T::zero(); pops.len() + 1];
    for n in (0..pops.len()).rev() {
        suffix[n] = suffix[n + 1] + pops[n];
    }
    let total = suffix[0];
    let dim = (1..=pops.len()).find(|&n| suffix[n] / total < tail_tol).unwrap_or(pops.len());
    if dim > cap {
        return Err(NlaError::TruncationOverflow { needed: dim, cap });
    }
    let amps = pops[..dim].iter().map(|p| Complex::new(p.sqrt(), T::zero())).collect();
    FockVector::normalize(amps).map(|(v, _)| v)
}

/// Amplitude that gives mean photon number `nbar`: `alpha = sqrt(nbar)` for
/// coherent probes, `r = asinh(sqrt(nbar))` for squeezed vacuum.
pub fn solve_amplitude_for_nbar(family: ProbeFamily, nbar: f64) -> Result<f64> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(NlaError::InvalidInput(format!("mean photon number {nbar} must be >= 0")));
    }
    match family {
        ProbeFamily::Coherent => Ok(nbar.sqrt()),
        ProbeFamily::SqueezedVacuum => Ok(nbar.sqrt().asinh()),
        ProbeFamily::Custom => Err(NlaError::UnsupportedKind(family.to_string())),
    }
}

/// Builds a probe from `[re, im]` pairs, normalizing it. Returns the state and
/// the correction factor that was applied to the raw amplitudes.
pub fn custom_probe<T: Real>(amps: &[[f64; 2]]) -> Result<(FockVector<T>, T)> {
    let raw = amps.iter().map(|[re, im]| Complex::new(T::lit(*re), T::lit(*im))).collect();
    FockVector::normalize(raw)
}

/// Custom probe from a JSON file holding an array of `[re, im]` pairs.
pub fn load_custom_probe(path: &Path) -> Result<(FockVector<f64>, f64, Vec<[f64; 2]>)> {
    let text = std::fs::read_to_string(path).map_err(|e| NlaError::Io(format!("{}: {e}", path.display())))?;
    let amps: Vec<[f64; 2]> =
        serde_json::from_str(&text).map_err(|e| NlaError::InvalidInput(format!("{}: {e}", path.display())))?;
    let (v, factor) = custom_probe(&amps)?;
    Ok((v, factor, amps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = DEFAULT_TAIL_TOL;

    #[test]
    fn coherent_examples() {
        let vac = coherent_state(0.0f64, TOL).unwrap();
        assert_eq!(vac.dim(), 1);
        assert_eq!(vac.amp(0).re, 1.0);

        let c = coherent_state(1.0f64, TOL).unwrap();
        let e = (-0.5f64).exp();
        assert!((c.amp(0).re - e).abs() < 1e-12);
        assert!((c.amp(1).re - e).abs() < 1e-12);
        assert!((c.mean_photon_number() - 1.0).abs() < 2e-8);
        assert!(c.is_normalized(1e-10));
    }

    #[test]
    fn squeezed_examples() {
        let vac = squeezed_vacuum(0.0f64, TOL).unwrap();
        assert_eq!(vac.dim(), 1);

        let r = 1.0f64.asinh();
        let s = squeezed_vacuum(r, TOL).unwrap();
        assert!((s.mean_photon_number() - 1.0).abs() < 2e-8);
        assert!((s.amp(0).re - 2f64.powf(-0.25)).abs() < 1e-12);
        assert!((s.amp(0).re - 0.840896).abs() < 1e-6);
        assert!((s.amp(2).re - 0.420448).abs() < 1e-6);
        assert!(s.amps().iter().skip(1).step_by(2).all(|a| a.re == 0.0 && a.im == 0.0));
    }

    #[test]
    fn solve_examples() {
        assert_eq!(solve_amplitude_for_nbar(ProbeFamily::Coherent, 1.0).unwrap(), 1.0);
        assert_eq!(solve_amplitude_for_nbar(ProbeFamily::SqueezedVacuum, 0.0).unwrap(), 0.0);
        let r = solve_amplitude_for_nbar(ProbeFamily::SqueezedVacuum, 1.5).unwrap();
        assert!((r - 1.031718).abs() < 1e-6);
        assert!((r.sinh().powi(2) - 1.5).abs() < 1e-12);
        assert!(matches!(solve_amplitude_for_nbar(ProbeFamily::Custom, 1.0), Err(NlaError::UnsupportedKind(_))));
    }

    #[test]
    fn overflow_is_reported() {
        assert!(matches!(coherent_state_capped(3.0f64, TOL, 16), Err(NlaError::TruncationOverflow { cap: 16, .. })));
        assert!(matches!(squeezed_vacuum(4.0f64, TOL), Err(NlaError::TruncationOverflow { cap: 512, .. })));
    }

    #[test]
    fn custom_probe_reports_correction() {
        let (v, f) = custom_probe::<f64>(&[[3.0, 0.0], [0.0, 4.0]]).unwrap();
        assert!((f - 0.2).abs() < 1e-15);
        assert!(v.is_normalized(1e-12));
        assert!(!v.is_real_up_to_phase(1e-12));
    }

    #[test]
    fn custom_probe_file() {
        let dir = std::env::temp_dir().join(format!("nla-probe-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("p.json");
        std::fs::write(&path, "[[1.0, 0.0], [1.0, 0.0]]").unwrap();
        let (v, f, raw) = load_custom_probe(&path).unwrap();
        assert_eq!(raw.len(), 2);
        assert!((f - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((v.amp(1).re - 0.5f64.sqrt()).abs() < 1e-15);
        std::fs::write(&path, "{not json").unwrap();
        assert!(load_custom_probe(&path).is_err());
    }

    #[test]
    fn spec_serde_shape() {
        let s = ProbeSpec::coherent(1.0);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"kind":"coherent","alpha":1.0,"tail_tol":1e-14}"#);
        assert_eq!(serde_json::from_str::<ProbeSpec>(&json).unwrap(), s);
    }

    proptest! {
        #[test]
        fn normalized_parity_and_nbar_round_trip(nbar in 0.0f64..4.0) {
            for family in [ProbeFamily::Coherent, ProbeFamily::SqueezedVacuum] {
                let v: FockVector<f64> = ProbeSpec::with_nbar(family, nbar).unwrap().build().unwrap();
                prop_assert!(v.is_normalized(1e-10));
                prop_assert!((v.mean_photon_number() - nbar).abs() < 1e-7);
                if family == ProbeFamily::SqueezedVacuum {
                    prop_assert!(v.amps().iter().skip(1).step_by(2).all(|a| a.norm() == 0.0));
                }
            }
        }
    }
}
