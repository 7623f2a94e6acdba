use nla_core::fisher::{qfi_effective, qfi_effective_closed_form};
use nla_core::montecarlo::{run_crb_experiment, write_records_jsonl, ExperimentResult};
use nla_core::oracles::{golden_reports, run_suite, standard_grid, CheckSummary, OracleReport};
use nla_core::probes::ProbeSpec;
use nla_core::{FisherBreakdown64, NlaParams64};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{CurveConfig, Format, RunConfig, SimulateConfig, SweepConfig, Task, SCHEMA_VERSION};
use crate::error::CliError;
use crate::format::{json_document, pretty, sig9, Table};

/// What a subcommand produced. `error` is set when the body is complete but
/// the run must still end with a failure status.
#[derive(Debug)]
pub struct Report {
    pub body: String,
    pub diagnostics: Vec<String>,
    pub error: Option<CliError>,
}

impl Report {
    fn ok(body: String) -> Self {
        Self { body, diagnostics: Vec::new(), error: None }
    }
}

/// Validates and runs `config`, on a dedicated pool when `threads` is set.
pub fn execute(config: &RunConfig) -> Result<Report, CliError> {
    config.validate()?;
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Io(e.to_string()))?
            .install(|| dispatch(config)),
        None => dispatch(config),
    }
}

fn dispatch(config: &RunConfig) -> Result<Report, CliError> {
    match &config.task {
        Task::Compare(c) => Ok(Report::ok(compare_table(c)?.render(config))),
        Task::Contributions(c) => Ok(Report::ok(contributions_table(c)?.render(config))),
        Task::SweepNbar(s) => Ok(Report::ok(sweep_nbar_table(s)?.render(config))),
        Task::Simulate(s) => simulate(config, s).map(Report::ok),
        Task::Selfcheck { tolerance_scale } => selfcheck(config, *tolerance_scale),
        Task::Golden => golden().map(Report::ok),
    }
}

fn breakdowns(c: &CurveConfig) -> Result<Vec<(f64, FisherBreakdown64)>, CliError> {
    let probe = c.probe.build()?;
    c.gains.values().par_iter().map(|&g| Ok((g, qfi_effective(&probe, &NlaParams64::new(g, c.threshold)?)?))).collect()
}

pub fn compare_table(c: &CurveConfig) -> Result<Table, CliError> {
    let mut t = Table::new(&["g", "q_eff", "ps_qs", "q_unc"]);
    t.rows = breakdowns(c)?.into_iter().map(|(g, b)| vec![g, b.q_eff, b.ps_qs, b.q_unc]).collect();
    Ok(t)
}

pub fn contributions_table(c: &CurveConfig) -> Result<Table, CliError> {
    let mut t = Table::new(&["g", "f_c", "ps_qs", "pf_qf"]);
    t.rows = breakdowns(c)?.into_iter().map(|(g, b)| vec![g, b.f_c, b.ps_qs, b.pf_qf]).collect();
    Ok(t)
}

pub fn sweep_nbar_table(s: &SweepConfig) -> Result<Table, CliError> {
    let columns: Vec<String> =
        std::iter::once("nbar".to_string()).chain(s.thresholds.iter().map(|p| format!("q_eff_p{p}"))).collect();
    let rows = s
        .nbar
        .values()
        .par_iter()
        .map(|&nbar| {
            let probe = ProbeSpec::with_nbar(s.family, nbar)?.build::<f64>()?;
            let mut row = vec![nbar];
            for &p in &s.thresholds {
                row.push(qfi_effective_closed_form(&probe, &NlaParams64::new(s.gain, p)?)?);
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(Table { columns, rows })
}

fn simulate(config: &RunConfig, s: &SimulateConfig) -> Result<String, CliError> {
    let result = run_crb_experiment(&s.experiment(), s.replications)?;
    if let Some(path) = &s.records {
        write_records_jsonl(path, &result.records(s.shots))?;
    }
    #[derive(Serialize)]
    struct Body<'a> {
        seed: u64,
        result: &'a ExperimentResult,
    }
    Ok(json_document(config, Body { seed: s.seed, result: &result }))
}

fn selfcheck(config: &RunConfig, tolerance_scale: f64) -> Result<Report, CliError> {
    let grid = standard_grid();
    let checks = run_suite(&grid, tolerance_scale)?;
    let body = match config.format {
        Format::Csv => selfcheck_csv(&checks, tolerance_scale),
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                grid_points: usize,
                checks: &'a [CheckSummary],
            }
            json_document(config, Body { grid_points: grid.len(), checks: &checks })
        }
    };

    const LISTED: usize = 10;
    let mut diagnostics = Vec::new();
    for c in checks.iter().filter(|c| !c.passed()) {
        for r in c.failures.iter().take(LISTED) {
            diagnostics.push(format!(
                "FAIL {}: {} analytic={} oracle={} rel_error={} tolerance={}",
                c.name,
                r.context,
                sig9(r.analytic),
                sig9(r.oracle),
                sig9(r.rel_error),
                sig9(r.tolerance * tolerance_scale)
            ));
        }
        if c.failures.len() > LISTED {
            diagnostics.push(format!("FAIL {}: {} more", c.name, c.failures.len() - LISTED));
        }
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    diagnostics.push(format!(
        "selfcheck: {} of {} checks passed on {} grid points",
        checks.len() - failed,
        checks.len(),
        grid.len()
    ));
    let error = (failed > 0).then_some(CliError::ChecksFailed { failed, total: checks.len() });
    Ok(Report { body, diagnostics, error })
}

fn selfcheck_csv(checks: &[CheckSummary], tolerance_scale: f64) -> String {
    let mut out = String::from("check,points,worst_rel_error,tolerance,status,worst_point\n");
    for c in checks {
        let worst_point = c.worst.as_ref().map_or("", |r| r.context.as_str());
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.name,
            c.points,
            sig9(c.worst_error()),
            sig9(c.tolerance * tolerance_scale),
            if c.passed() { "pass" } else { "fail" },
            worst_point
        ));
    }
    out
}

pub const GOLDEN_COMMAND: &str =
    "cargo run --release -p nla-cli -- golden --out crates/core/tests/fixtures/golden.json";

#[derive(Serialize)]
struct GoldenFile {
    schema_version: u32,
    regenerate: &'static str,
    values: Vec<OracleReport>,
}

fn golden() -> Result<String, CliError> {
    Ok(pretty(&GoldenFile { schema_version: SCHEMA_VERSION, regenerate: GOLDEN_COMMAND, values: golden_reports()? }))
}
