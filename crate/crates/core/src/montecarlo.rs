//! Simulation of the herald-then-detect calibration experiment and
//! maximum-likelihood estimation of the gain.
//!
//! Every replication draws from its own ChaCha stream (`set_stream(index)`
//! on a generator seeded from the root seed), so results do not depend on
//! scheduling or thread count.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NlaError, Result};
use crate::fisher::qfi_effective;
use crate::fock::{hermite::fill_hermite_functions, FockVector};
use crate::instrument::{branch_probability, conditional_state, Branch, NlaParams};
use crate::measurements::Support;
use crate::measurements::{homodyne_distribution, Readout};
use crate::probes::ProbeSpec;
use crate::scalar::C;

/// What is recorded on each shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Strategy {
    /// Herald and readout on every shot.
    Sequential { readout: Readout },
    /// Only the herald.
    HeraldOnly,
    /// Readout on successful shots; failed shots are discarded.
    SuccessOnly { readout: Readout },
}

impl Strategy {
    pub fn name(&self) -> String {
        match self {
            Strategy::Sequential { readout } => format!("sequential/{readout}"),
            Strategy::HeraldOnly => "herald-only".into(),
            Strategy::SuccessOnly { readout } => format!("success-only/{readout}"),
        }
    }

    fn readout(&self) -> Option<Readout> {
        match *self {
            Strategy::Sequential { readout } | Strategy::SuccessOnly { readout } => Some(readout),
            Strategy::HeraldOnly => None,
        }
    }
}

/// `points` gains linearly spaced on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl SearchGrid {
    /// `[1 + (g-1)/10, g + 2(g-1)]` with 400 points.
    pub fn around(gain: f64) -> Self {
        Self { lo: 1.0 + 0.1 * (gain - 1.0), hi: gain + 2.0 * (gain - 1.0), points: 400 }
    }

    pub fn gains(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.lo + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub probe: ProbeSpec,
    pub gain: f64,
    pub threshold: usize,
    pub strategy: Strategy,
    pub shots: usize,
    pub seed: u64,
    pub search: SearchGrid,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        NlaParams::new(self.gain, self.threshold)?;
        if self.shots == 0 {
            return Err(NlaError::InvalidInput("shots must be at least 1".into()));
        }
        let s = &self.search;
        if !(s.lo > 1.0 && s.lo < self.gain && self.gain < s.hi && s.hi.is_finite()) {
            return Err(NlaError::InvalidInput(format!(
                "search interval [{}, {}] must lie above 1 and contain the true gain {}",
                s.lo, s.hi, self.gain
            )));
        }
        if s.points < 3 {
            return Err(NlaError::InvalidInput("search grid needs at least 3 points".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Count(usize),
    Quadrature(f64),
}

/// One shot: the herald and, when recorded, the detector outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shot {
    pub branch: Branch,
    pub outcome: Option<Outcome>,
}

/// Sampler of one conditional-state detector distribution.
#[derive(Debug, Clone)]
enum Table {
    /// Cumulative photon-number masses.
    Counts(Vec<f64>),
    /// Rejection sampler for the homodyne density: a piecewise-constant
    /// envelope over consecutive grid nodes, accepted against the exact
    /// density so that its zeros are reproduced.
    Quadrature { nodes: Vec<f64>, envelope: Vec<f64>, cdf: Vec<f64>, amps: Vec<C<f64>> },
}

/// Envelope height relative to the largest sampled density on an interval.
const ENVELOPE_SAFETY: f64 = 1.25;

fn density(amps: &[C<f64>], x: f64, scratch: &mut Vec<f64>) -> f64 {
    fill_hermite_functions(x, amps.len(), scratch);
    amps.iter().zip(scratch.iter()).map(|(a, &h)| a * h).sum::<C<f64>>().norm_sqr()
}

impl Table {
    fn homodyne(amps: Vec<C<f64>>, nodes: Vec<f64>) -> Self {
        let mut scratch = Vec::new();
        let at_nodes: Vec<f64> = nodes.iter().map(|&x| density(&amps, x, &mut scratch)).collect();
        let peak = at_nodes.iter().copied().fold(0.0, f64::max);
        let envelope: Vec<f64> = nodes
            .windows(2)
            .zip(at_nodes.windows(2))
            .map(|(x, p)| {
                let mid = density(&amps, 0.5 * (x[0] + x[1]), &mut scratch);
                ENVELOPE_SAFETY * p[0].max(p[1]).max(mid) + 1e-14 * peak
            })
            .collect();
        let cdf = normalized_cumsum(envelope.iter().zip(nodes.windows(2)).map(|(m, x)| m * (x[1] - x[0])));
        Table::Quadrature { nodes, envelope, cdf, amps }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Outcome {
        match self {
            Table::Counts(cdf) => {
                let u = rng.gen::<f64>();
                Outcome::Count(cdf.partition_point(|&c| c <= u).min(cdf.len() - 1))
            }
            Table::Quadrature { nodes, envelope, cdf, amps } => {
                let mut scratch = Vec::new();
                loop {
                    let u = rng.gen::<f64>();
                    let i = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                    let x = nodes[i] + rng.gen::<f64>() * (nodes[i + 1] - nodes[i]);
                    if rng.gen::<f64>() * envelope[i] <= density(amps, x, &mut scratch) {
                        return Outcome::Quadrature(x);
                    }
                }
            }
        }
    }
}

fn normalized_cumsum(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = values
        .map(|v| {
            acc += v.max(0.0);
            acc
        })
        .collect();
    let total = acc;
    out.iter_mut().for_each(|c| *c /= total);
    out
}

/// Draws shots at the true gain.
#[derive(Debug, Clone)]
pub struct ShotSampler {
    strategy: Strategy,
    p_success: f64,
    tables: [Option<Table>; 2],
}

impl ShotSampler {
    pub fn new(probe: &FockVector<f64>, params: &NlaParams<f64>, strategy: Strategy) -> Result<Self> {
        let p_success = branch_probability(probe, params, Branch::Success)?;
        let mut tables = [None, None];
        if let Some(readout) = strategy.readout() {
            for (slot, branch) in tables.iter_mut().zip(Branch::BOTH) {
                if branch == Branch::Failure && matches!(strategy, Strategy::SuccessOnly { .. }) {
                    continue;
                }
                let state = match conditional_state(probe, params, branch) {
                    Ok(cs) => cs.state,
                    Err(NlaError::BranchImpossible { .. }) => continue,
                    Err(e) => return Err(e),
                };
                *slot = Some(match readout {
                    Readout::PhotonCounting => Table::Counts(normalized_cumsum(state.populations().into_iter())),
                    Readout::Homodyne => {
                        let dist = homodyne_distribution(probe, params, branch)?;
                        let Support::Quadrature(grid) = dist.support else { unreachable!() };
                        Table::homodyne(state.into_amps(), grid.nodes)
                    }
                });
            }
        }
        Ok(Self { strategy, p_success, tables })
    }

    pub fn p_success(&self) -> f64 {
        self.p_success
    }

    pub fn sample_shot<R: Rng + ?Sized>(&self, rng: &mut R) -> Shot {
        let branch = if rng.gen::<f64>() < self.p_success { Branch::Success } else { Branch::Failure };
        let table = match branch {
            Branch::Success => &self.tables[0],
            Branch::Failure => &self.tables[1],
        };
        let outcome = table.as_ref().map(|t| t.sample(rng));
        Shot { branch, outcome }
    }
}

/// Sufficient statistics of a block of shots.
#[derive(Debug, Clone, PartialEq)]
pub struct Records {
    pub strategy: Strategy,
    pub shots: usize,
    pub successes: usize,
    /// Photon-count histograms per branch (success, failure).
    pub counts: [Vec<u64>; 2],
    /// Homodyne outcomes per branch (success, failure).
    pub quadratures: [Vec<f64>; 2],
}

impl Records {
    pub fn new(strategy: Strategy) -> Self {
        Self {
            strategy,
            shots: 0,
            successes: 0,
            counts: [Vec::new(), Vec::new()],
            quadratures: [Vec::new(), Vec::new()],
        }
    }

    pub fn push(&mut self, shot: Shot) {
        self.shots += 1;
        let b = match shot.branch {
            Branch::Success => {
                self.successes += 1;
                0
            }
            Branch::Failure => 1,
        };
        match shot.outcome {
            Some(Outcome::Count(n)) => {
                let h = &mut self.counts[b];
                if h.len() <= n {
                    h.resize(n + 1, 0);
                }
                h[n] += 1;
            }
            Some(Outcome::Quadrature(x)) => self.quadratures[b].push(x),
            None => {}
        }
    }

    pub fn failures(&self) -> usize {
        self.shots - self.successes
    }
}

pub fn simulate<R: Rng + ?Sized>(sampler: &ShotSampler, shots: usize, rng: &mut R) -> Records {
    let mut rec = Records::new(sampler.strategy);
    for _ in 0..shots {
        rec.push(sampler.sample_shot(rng));
    }
    rec
}

/// Log-likelihood of `records` as a function of the gain.
struct Likelihood<'a> {
    records: &'a Records,
    probe: &'a FockVector<f64>,
    threshold: usize,
    /// `<x|n>` for each recorded quadrature, per branch.
    hermite: [Vec<Vec<f64>>; 2],
}

impl<'a> Likelihood<'a> {
    fn new(records: &'a Records, probe: &'a FockVector<f64>, threshold: usize) -> Self {
        let table = |xs: &[f64]| {
            xs.iter()
                .map(|&x| {
                    let mut h = Vec::new();
                    fill_hermite_functions(x, probe.dim(), &mut h);
                    h
                })
                .collect()
        };
        let hermite = [table(&records.quadratures[0]), table(&records.quadratures[1])];
        Self { records, probe, threshold, hermite }
    }

    fn eval(&self, g: f64) -> f64 {
        let Ok(params) = NlaParams::new(g, self.threshold) else { return f64::NEG_INFINITY };
        let rec = self.records;
        let ps = crate::instrument::branch_probability_unchecked(self.probe, &params, Branch::Success);
        let pf = crate::instrument::branch_probability_unchecked(self.probe, &params, Branch::Failure);
        let xlogy = |k: f64, p: f64| if k == 0.0 { 0.0 } else { k * p.ln() };
        let mut ll = 0.0;
        for (b, branch) in Branch::BOTH.into_iter().enumerate() {
            let (k, p) = if b == 0 { (rec.successes, ps) } else { (rec.failures(), pf) };
            let conditional = match rec.strategy {
                Strategy::HeraldOnly => {
                    ll += xlogy(k as f64, p);
                    continue;
                }
                Strategy::SuccessOnly { .. } if b == 1 => continue,
                Strategy::SuccessOnly { .. } => true,
                Strategy::Sequential { .. } => false,
            };
            // Unnormalized joint masses p_i p(o|i) = |<o|E_i|psi>|^2; the
            // success-only likelihood divides by p_s.
            let norm = if conditional { p } else { 1.0 };
            for (n, &count) in rec.counts[b].iter().enumerate() {
                let mass = params.povm_entry(branch, n) * self.probe.amp(n).norm_sqr() / norm;
                ll += xlogy(count as f64, mass);
            }
            if !self.hermite[b].is_empty() {
                let e: Vec<C<f64>> =
                    self.probe.amps().iter().enumerate().map(|(n, c)| c * params.kraus_entry(branch, n)).collect();
                for h in &self.hermite[b] {
                    let psi: C<f64> = e.iter().zip(h).map(|(a, hf)| a * hf).sum();
                    ll += (psi.norm_sqr() / norm).ln();
                }
            }
        }
        ll
    }
}

const GOLDEN_TOL: f64 = 1e-6;

/// Grid argmax of the log-likelihood, refined by golden-section search.
pub fn mle_estimate(records: &Records, probe: &FockVector<f64>, threshold: usize, grid: &SearchGrid) -> Result<f64> {
    if records.shots == 0 {
        return Err(NlaError::InvalidInput("no shots recorded".into()));
    }
    let lik = Likelihood::new(records, probe, threshold);
    let gains = grid.gains();
    let values: Vec<f64> = gains.iter().map(|&g| lik.eval(g)).collect();
    let (imax, vmax) =
        values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    let vmin = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !vmax.is_finite() || vmax - vmin <= 1e-12 * vmax.abs().max(1.0) {
        return Err(NlaError::DegenerateLikelihood);
    }
    let mut a = gains[imax.saturating_sub(1)];
    let mut b = gains[(imax + 1).min(gains.len() - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (lik.eval(c), lik.eval(d));
    while b - a > GOLDEN_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = lik.eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = lik.eval(d);
        }
    }
    let mid = 0.5 * (a + b);
    Ok(if lik.eval(mid) >= vmax { mid } else { gains[imax] })
}

/// One line of the per-replication JSON-lines output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub estimate: f64,
    pub shots: usize,
    pub success_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub strategy: String,
    pub replications: usize,
    pub estimates: Vec<f64>,
    pub success_counts: Vec<usize>,
    pub mean_estimate: f64,
    pub empirical_variance: f64,
    /// Per-shot Fisher information of the strategy.
    pub fisher_information: f64,
    /// `1 / (M F)`.
    pub crb: f64,
    pub ratio: f64,
    /// 95% percentile-bootstrap interval on `ratio`.
    pub ratio_ci: [f64; 2],
}

impl ExperimentResult {
    pub fn records(&self, shots: usize) -> Vec<ReplicationRecord> {
        self.estimates
            .iter()
            .zip(&self.success_counts)
            .enumerate()
            .map(|(replication, (&estimate, &success_count))| ReplicationRecord {
                replication,
                estimate,
                shots,
                success_count,
            })
            .collect()
    }
}

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Per-shot Fisher information that bounds `strategy`: `Q_eff` for the
/// sequential scheme, `F_c` for the herald alone and `p_s Q_s` when failed
/// shots are discarded.
pub fn strategy_fisher(probe: &FockVector<f64>, params: &NlaParams<f64>, strategy: Strategy) -> Result<f64> {
    let b = qfi_effective(probe, params)?;
    Ok(match strategy {
        Strategy::Sequential { .. } => b.q_eff,
        Strategy::HeraldOnly => b.f_c,
        Strategy::SuccessOnly { .. } => b.ps_qs,
    })
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

pub fn run_crb_experiment(config: &ExperimentConfig, replications: usize) -> Result<ExperimentResult> {
    config.validate()?;
    if replications < 2 {
        return Err(NlaError::InvalidInput("at least 2 replications are needed for a variance".into()));
    }
    let probe = config.probe.build::<f64>()?;
    let params = NlaParams::new(config.gain, config.threshold)?;
    let sampler = ShotSampler::new(&probe, &params, config.strategy)?;
    let runs: Vec<(f64, usize)> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
            rng.set_stream(r as u64);
            let rec = simulate(&sampler, config.shots, &mut rng);
            mle_estimate(&rec, &probe, config.threshold, &config.search).map(|g| (g, rec.successes))
        })
        .collect::<Result<_>>()?;
    let (estimates, success_counts): (Vec<f64>, Vec<usize>) = runs.into_iter().unzip();

    let fisher = strategy_fisher(&probe, &params, config.strategy)?;
    let crb = 1.0 / (config.shots as f64 * fisher);
    let empirical_variance = variance(&estimates);

    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    rng.set_stream(u64::MAX);
    let mut boot: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            let sample: Vec<f64> = (0..estimates.len()).map(|_| estimates[rng.gen_range(0..estimates.len())]).collect();
            variance(&sample) / crb
        })
        .collect();
    boot.sort_by(f64::total_cmp);
    let pick = |q: f64| boot[((q * (boot.len() - 1) as f64).round() as usize).min(boot.len() - 1)];

    Ok(ExperimentResult {
        strategy: config.strategy.name(),
        replications,
        mean_estimate: estimates.iter().sum::<f64>() / replications as f64,
        estimates,
        success_counts,
        empirical_variance,
        fisher_information: fisher,
        crb,
        ratio: empirical_variance / crb,
        ratio_ci: [pick(0.025), pick(0.975)],
    })
}

/// Writes one JSON object per replication.
pub fn write_records_jsonl(path: &Path, records: &[ReplicationRecord]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| NlaError::Io(e.to_string()))?);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| NlaError::Io(e.to_string()))?;
        writeln!(f, "{line}").map_err(|e| NlaError::Io(e.to_string()))?;
    }
    f.flush().map_err(|e| NlaError::Io(e.to_string()))
}
