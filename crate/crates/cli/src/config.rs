//! Validated run configurations. Every subcommand is reduced to a
//! [`RunConfig`] before any computation starts; the same value is echoed in
//! JSON output.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::ValueEnum;
use nla_core::montecarlo::{ExperimentConfig, SearchGrid, Strategy};
use nla_core::probes::{ProbeFamily, ProbeSpec};
use nla_core::{FockVector64, NlaParams64};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

/// `n` points linearly spaced on `[start, end]`, written `start:end:n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinGrid {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl LinGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(
                |i| {
                    if i + 1 == self.points {
                        self.end
                    } else {
                        self.start + (self.end - self.start) * i as f64 / last
                    }
                },
            )
            .collect()
    }

    pub fn min(&self) -> f64 {
        self.start.min(self.end)
    }
}

impl FromStr for LinGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts[..] else {
            return Err(format!("grid `{s}` is not of the form start:end:points"));
        };
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("grid `{s}`: `{x}` is not a number"));
        let (start, end) = (num(a)?, num(b)?);
        let points: usize = n.trim().parse().map_err(|_| format!("grid `{s}`: `{n}` is not a point count"))?;
        if !start.is_finite() || !end.is_finite() {
            return Err(format!("grid `{s}` has non-finite bounds"));
        }
        match points {
            0 => Err(format!("grid `{s}` needs at least one point")),
            1 if start != end => Err(format!("grid `{s}`: a single point needs start == end")),
            p if p > 1 && !(start < end) => Err(format!("grid `{s}`: start must be below end")),
            _ => Ok(Self { start, end, points }),
        }
    }
}

impl fmt::Display for LinGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.points)
    }
}

/// A probe together with how it was requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub spec: ProbeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<PathBuf>,
}

impl ProbeConfig {
    pub fn build(&self) -> Result<FockVector64, CliError> {
        self.spec.build::<f64>().map_err(CliError::usage)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveConfig {
    pub probe: ProbeConfig,
    pub threshold: usize,
    pub gains: LinGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub family: ProbeFamily,
    pub gain: f64,
    pub thresholds: Vec<usize>,
    pub nbar: LinGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub probe: ProbeConfig,
    pub gain: f64,
    pub threshold: usize,
    pub strategy: Strategy,
    pub shots: usize,
    pub replications: usize,
    pub seed: u64,
    pub search: SearchGrid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub records: Option<PathBuf>,
}

impl SimulateConfig {
    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            probe: self.probe.spec.clone(),
            gain: self.gain,
            threshold: self.threshold,
            strategy: self.strategy,
            shots: self.shots,
            seed: self.seed,
            search: self.search,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Task {
    Compare(CurveConfig),
    Contributions(CurveConfig),
    SweepNbar(SweepConfig),
    Simulate(SimulateConfig),
    Selfcheck { tolerance_scale: f64 },
    Golden,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Compare(_) => "compare",
            Task::Contributions(_) => "contributions",
            Task::SweepNbar(_) => "sweep-nbar",
            Task::Simulate(_) => "simulate",
            Task::Selfcheck { .. } => "selfcheck",
            Task::Golden => "golden",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub task: Task,
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl RunConfig {
    /// Rejects configurations that cannot be run.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.threads == Some(0) {
            return Err(CliError::invalid("--threads must be at least 1"));
        }
        match &self.task {
            Task::Compare(c) | Task::Contributions(c) => {
                NlaParams64::new(c.gains.min(), c.threshold).map_err(CliError::usage)?;
                c.probe.build()?;
            }
            Task::SweepNbar(s) => {
                if !matches!(s.family, ProbeFamily::Coherent | ProbeFamily::SqueezedVacuum) {
                    return Err(CliError::invalid("sweep-nbar needs --probe coherent or squeezed"));
                }
                if s.nbar.min() < 0.0 {
                    return Err(CliError::invalid("mean photon numbers must be >= 0"));
                }
                if s.thresholds.is_empty() {
                    return Err(CliError::invalid("at least one threshold is needed"));
                }
                let mut seen = s.thresholds.clone();
                seen.sort_unstable();
                seen.dedup();
                if seen.len() != s.thresholds.len() {
                    return Err(CliError::invalid("thresholds must be distinct"));
                }
                NlaParams64::new(s.gain, 0).map_err(CliError::usage)?;
            }
            Task::Simulate(s) => {
                s.probe.build()?;
                s.experiment().validate().map_err(CliError::usage)?;
                if s.replications < 2 {
                    return Err(CliError::invalid("--replications must be at least 2"));
                }
                if self.format != Format::Json {
                    return Err(CliError::invalid("simulate writes JSON only"));
                }
            }
            Task::Selfcheck { tolerance_scale } => {
                if !(*tolerance_scale >= 0.0) {
                    return Err(CliError::invalid("--tolerance-scale must be >= 0"));
                }
            }
            Task::Golden => {
                if self.format != Format::Json {
                    return Err(CliError::invalid("golden writes JSON only"));
                }
            }
        }
        Ok(())
    }
}
