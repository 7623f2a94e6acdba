//! Command-line syntax and its translation into a [`RunConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nla_core::measurements::Readout;
use nla_core::montecarlo::{SearchGrid, Strategy};
use nla_core::probes::{load_custom_probe, ProbeFamily, ProbeSpec};

use crate::config::{CurveConfig, Format, LinGrid, ProbeConfig, RunConfig, SimulateConfig, SweepConfig, Task};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "nla", version, about = "Gain estimation for heralded noiseless linear amplifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the result to PATH instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output format (csv for tables, json for everything).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Size of the worker pool.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Q_eff, p_s Q_s and Q_unc against the gain.
    Compare(CurveArgs),
    /// F_c, p_s Q_s and p_f Q_f against the gain.
    Contributions(CurveArgs),
    /// Q_eff against the mean photon number for several thresholds.
    SweepNbar(SweepArgs),
    /// Monte-Carlo estimator variance against the Cramér-Rao bound.
    Simulate(SimulateArgs),
    /// Run every oracle comparison on the standard grid.
    Selfcheck(SelfcheckArgs),
    /// Emit the golden-value fixture with its oracle provenance.
    Golden,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProbeKind {
    Coherent,
    #[value(alias = "squeezed-vacuum")]
    Squeezed,
    Vacuum,
    Custom,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(long, value_enum)]
    pub probe: ProbeKind,
    /// Mean photon number of a coherent or squeezed probe.
    #[arg(long, conflicts_with = "amplitude")]
    pub nbar: Option<f64>,
    /// Coherent amplitude alpha, or squeezing parameter r.
    #[arg(long, allow_hyphen_values = true)]
    pub amplitude: Option<f64>,
    /// Fock amplitudes of a custom probe, `re` or `re:im`, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "custom_file")]
    pub amps: Option<Vec<String>>,
    /// JSON file holding an array of `[re, im]` amplitude pairs.
    #[arg(long, value_name = "PATH")]
    pub custom_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub probe: ProbeArgs,
    /// Amplifier threshold.
    #[arg(long = "p", value_name = "P")]
    pub threshold: usize,
    /// Gain grid `start:end:points`.
    #[arg(long = "g", value_name = "START:END:N")]
    pub gains: LinGrid,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub probe: ProbeKind,
    /// Mean photon number grid `start:end:points`.
    #[arg(long, value_name = "START:END:N")]
    pub nbar: LinGrid,
    /// Gain.
    #[arg(long = "g")]
    pub gain: f64,
    /// Thresholds, comma separated.
    #[arg(long = "p", value_delimiter = ',', required = true)]
    pub thresholds: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DetectorArg {
    /// Herald, then photon counting on both branches.
    PhotonCounting,
    /// Herald, then homodyne on both branches.
    Homodyne,
    /// Herald outcome only.
    HeraldOnly,
    /// Readout of successful shots only.
    SuccessOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReadoutArg {
    PhotonCounting,
    Homodyne,
}

impl From<ReadoutArg> for Readout {
    fn from(r: ReadoutArg) -> Self {
        match r {
            ReadoutArg::PhotonCounting => Readout::PhotonCounting,
            ReadoutArg::Homodyne => Readout::Homodyne,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub probe: ProbeArgs,
    #[arg(long = "p", value_name = "P")]
    pub threshold: usize,
    /// True gain of the simulated amplifier.
    #[arg(long)]
    pub g_true: f64,
    #[arg(long, value_enum, default_value = "photon-counting")]
    pub detector: DetectorArg,
    /// Readout used with `--detector success-only` (default photon-counting).
    #[arg(long, value_enum)]
    pub readout: Option<ReadoutArg>,
    /// Shots per replication.
    #[arg(long, default_value_t = 10_000)]
    pub shots: usize,
    #[arg(long, default_value_t = 500)]
    pub replications: usize,
    /// Root seed; replication r uses stream r of this seed.
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    /// MLE search grid `start:end:points` (default 400 points around the true gain).
    #[arg(long, value_name = "START:END:N")]
    pub search: Option<LinGrid>,
    /// Also write per-replication records as JSON lines.
    #[arg(long, value_name = "PATH")]
    pub records: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelfcheckArgs {
    /// Multiplies every tolerance; 0 turns any nonzero error into a failure.
    #[arg(long, default_value_t = 1.0)]
    pub tolerance_scale: f64,
}

fn parse_amp(s: &str) -> Result<[f64; 2], CliError> {
    let num =
        |x: &str| x.trim().parse::<f64>().map_err(|_| CliError::invalid(format!("amplitude `{s}` is not a number")));
    match s.split_once(':') {
        Some((re, im)) => Ok([num(re)?, num(im)?]),
        None => Ok([num(s)?, 0.0]),
    }
}

impl ProbeArgs {
    pub fn resolve(&self) -> Result<ProbeConfig, CliError> {
        let custom_given = self.amps.is_some() || self.custom_file.is_some();
        let plain = |spec| Ok(ProbeConfig { spec, nbar: None, source: None });
        match self.probe {
            ProbeKind::Coherent | ProbeKind::Squeezed => {
                if custom_given {
                    return Err(CliError::invalid("--amps and --custom-file need --probe custom"));
                }
                let family =
                    if self.probe == ProbeKind::Coherent { ProbeFamily::Coherent } else { ProbeFamily::SqueezedVacuum };
                match (self.nbar, self.amplitude) {
                    (Some(nbar), None) => Ok(ProbeConfig {
                        spec: ProbeSpec::with_nbar(family, nbar).map_err(CliError::usage)?,
                        nbar: Some(nbar),
                        source: None,
                    }),
                    (None, Some(a)) if family == ProbeFamily::Coherent => plain(ProbeSpec::coherent(a)),
                    (None, Some(r)) => plain(ProbeSpec::squeezed_vacuum(r)),
                    _ => Err(CliError::invalid("give exactly one of --nbar and --amplitude")),
                }
            }
            ProbeKind::Vacuum => {
                if custom_given || self.amplitude.is_some() || self.nbar.is_some_and(|n| n != 0.0) {
                    return Err(CliError::invalid("--probe vacuum takes no amplitudes"));
                }
                plain(ProbeSpec::custom(vec![[1.0, 0.0]]))
            }
            ProbeKind::Custom => {
                if self.nbar.is_some() || self.amplitude.is_some() {
                    return Err(CliError::invalid("--probe custom takes --amps or --custom-file"));
                }
                match (&self.amps, &self.custom_file) {
                    (Some(list), None) => {
                        let amps = list.iter().map(|s| parse_amp(s)).collect::<Result<Vec<_>, _>>()?;
                        plain(ProbeSpec::custom(amps))
                    }
                    (None, Some(path)) => {
                        let (_, _, amps) = load_custom_probe(path).map_err(CliError::usage)?;
                        Ok(ProbeConfig { spec: ProbeSpec::custom(amps), nbar: None, source: Some(path.clone()) })
                    }
                    _ => Err(CliError::invalid("--probe custom needs --amps or --custom-file")),
                }
            }
        }
    }
}

impl Cli {
    /// Resolves the arguments into a validated configuration.
    pub fn into_config(self) -> Result<RunConfig, CliError> {
        let (task, default_format) = match self.command {
            Command::Compare(c) => (Task::Compare(c.into_curve()?), Format::Csv),
            Command::Contributions(c) => (Task::Contributions(c.into_curve()?), Format::Csv),
            Command::SweepNbar(s) => {
                let family = match s.probe {
                    ProbeKind::Coherent => ProbeFamily::Coherent,
                    ProbeKind::Squeezed => ProbeFamily::SqueezedVacuum,
                    _ => return Err(CliError::invalid("sweep-nbar needs --probe coherent or squeezed")),
                };
                (
                    Task::SweepNbar(SweepConfig { family, gain: s.gain, thresholds: s.thresholds, nbar: s.nbar }),
                    Format::Csv,
                )
            }
            Command::Simulate(s) => (Task::Simulate(s.into_simulate()?), Format::Json),
            Command::Selfcheck(s) => (Task::Selfcheck { tolerance_scale: s.tolerance_scale }, Format::Csv),
            Command::Golden => (Task::Golden, Format::Json),
        };
        let config =
            RunConfig { task, format: self.format.unwrap_or(default_format), out: self.out, threads: self.threads };
        config.validate()?;
        Ok(config)
    }
}

impl CurveArgs {
    fn into_curve(self) -> Result<CurveConfig, CliError> {
        Ok(CurveConfig { probe: self.probe.resolve()?, threshold: self.threshold, gains: self.gains })
    }
}

impl SimulateArgs {
    fn into_simulate(self) -> Result<SimulateConfig, CliError> {
        let strategy = match (self.detector, self.readout) {
            (DetectorArg::PhotonCounting, None) => Strategy::Sequential { readout: Readout::PhotonCounting },
            (DetectorArg::Homodyne, None) => Strategy::Sequential { readout: Readout::Homodyne },
            (DetectorArg::HeraldOnly, None) => Strategy::HeraldOnly,
            (DetectorArg::SuccessOnly, r) => {
                Strategy::SuccessOnly { readout: r.map_or(Readout::PhotonCounting, Readout::from) }
            }
            (_, Some(_)) => return Err(CliError::invalid("--readout applies to --detector success-only")),
        };
        let search = match self.search {
            Some(g) => SearchGrid { lo: g.start, hi: g.end, points: g.points },
            None => SearchGrid::around(self.g_true),
        };
        Ok(SimulateConfig {
            probe: self.probe.resolve()?,
            gain: self.g_true,
            threshold: self.threshold,
            strategy,
            shots: self.shots,
            replications: self.replications,
            seed: self.seed,
            search,
            records: self.records,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig, CliError> {
        let mut full = vec!["nla"];
        full.extend_from_slice(args);
        Cli::try_parse_from(full).map_err(|e| CliError::invalid(e.to_string()))?.into_config()
    }

    #[test]
    fn compare_arguments() {
        let c = parse(&["compare", "--probe", "coherent", "--nbar", "1", "--p", "3", "--g", "1.05:6:200"]).unwrap();
        assert_eq!(c.format, Format::Csv);
        let Task::Compare(curve) = &c.task else { panic!() };
        assert_eq!(curve.gains.points, 200);
        assert_eq!(curve.probe.spec, ProbeSpec::coherent(1.0));
    }

    #[test]
    fn probe_forms() {
        let c = parse(&["compare", "--probe", "custom", "--amps", "0.6,0:0.8", "--p", "1", "--g", "2:2:1"]).unwrap();
        let Task::Compare(curve) = c.task else { panic!() };
        assert_eq!(curve.probe.spec, ProbeSpec::custom(vec![[0.6, 0.0], [0.0, 0.8]]));

        let c = parse(&["compare", "--probe", "vacuum", "--p", "1", "--g", "2:2:1", "--format", "json"]).unwrap();
        assert_eq!(c.format, Format::Json);

        for bad in [
            vec!["compare", "--probe", "coherent", "--p", "1", "--g", "2:2:1"],
            vec!["compare", "--probe", "custom", "--p", "1", "--g", "2:2:1"],
            vec!["compare", "--probe", "vacuum", "--amps", "1", "--p", "1", "--g", "2:2:1"],
            vec!["compare", "--probe", "coherent", "--nbar", "-1", "--p", "1", "--g", "2:2:1"],
        ] {
            assert!(parse(&bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn gain_domain_is_a_usage_error() {
        let e = parse(&["compare", "--probe", "coherent", "--nbar", "1", "--p", "3", "--g", "0.9:2:10"]).unwrap_err();
        assert_eq!(e.kind(), "GainDomain");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn simulate_strategies() {
        let base =
            ["simulate", "--probe", "vacuum", "--p", "1", "--g-true", "2", "--shots", "100", "--replications", "4"];
        let strategy = |extra: &[&str]| {
            let mut a = base.to_vec();
            a.extend_from_slice(extra);
            parse(&a).map(|c| match c.task {
                Task::Simulate(s) => s.strategy,
                _ => panic!(),
            })
        };
        assert_eq!(strategy(&[]).unwrap(), Strategy::Sequential { readout: Readout::PhotonCounting });
        assert_eq!(strategy(&["--detector", "herald-only"]).unwrap(), Strategy::HeraldOnly);
        assert_eq!(
            strategy(&["--detector", "success-only", "--readout", "homodyne"]).unwrap(),
            Strategy::SuccessOnly { readout: Readout::Homodyne }
        );
        assert!(strategy(&["--detector", "homodyne", "--readout", "homodyne"]).is_err());
        assert!(strategy(&["--format", "csv"]).is_err());
        assert!(strategy(&["--search", "2.5:3:10"]).is_err());
    }

    #[test]
    fn sweep_requires_family() {
        assert!(parse(&["sweep-nbar", "--probe", "squeezed", "--nbar", "0:4:5", "--g", "1.5", "--p", "2,3"]).is_ok());
        assert!(parse(&["sweep-nbar", "--probe", "vacuum", "--nbar", "0:4:5", "--g", "1.5", "--p", "2"]).is_err());
        assert!(parse(&["sweep-nbar", "--probe", "coherent", "--nbar", "0:4:5", "--g", "1.5", "--p", "2,2"]).is_err());
    }
}
