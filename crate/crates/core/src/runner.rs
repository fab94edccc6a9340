//! Run orchestration behind the command-line front-end.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::dump::{energy_csv, fields_vtk, read_state, write_json, write_state, write_text};
use crate::energetics::{energy_report, EnergyReport};
use crate::error::{Error, Result};
use crate::solver::{alternate_minimize, continuation_run_with, init_state, IterationLog};
use crate::variations::{diagnose, DiagnoseOptions, DiagnosticToggles, DiagnosticsReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    NotConverged,
}

impl ExitStatus {
    /// Process exit code; configuration and I/O failures map to 1 elsewhere.
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::NotConverged => 2,
        }
    }
}

pub const DEFAULT_OUT_DIR: &str = "atcrit-out";

fn out_dir(cfg: &RunConfig, override_dir: Option<&Path>) -> PathBuf {
    override_dir
        .map(Path::to_path_buf)
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn diagnose_opts(cfg: &RunConfig) -> DiagnoseOptions {
    DiagnoseOptions {
        mu_k: cfg.mu_blocks,
        flow_t: cfg.flow_step,
        ..DiagnoseOptions::default()
    }
}

/// Writes `state.bin`, `diagnostics.json`, `log.json` and `fields.vtk`.
fn write_stage(
    dir: &Path,
    state: &crate::assembly::ATState,
    report: &EnergyReport,
    log: &IterationLog,
    cfg: &RunConfig,
) -> Result<DiagnosticsReport> {
    create_dir(dir)?;
    write_state(&dir.join("state.bin"), state, report.e_total)?;
    write_json(&dir.join("log.json"), log)?;
    write_text(&dir.join("fields.vtk"), &fields_vtk(state))?;
    let diag = diagnose(state, *report, &cfg.diagnostics, &diagnose_opts(cfg))?;
    write_json(&dir.join("diagnostics.json"), &diag)?;
    Ok(diag)
}

/// Single-ε solve. Artifacts are written even when the solver does not
/// converge.
pub fn run_solve(cfg: &RunConfig, out: Option<&Path>) -> Result<ExitStatus> {
    if cfg.eps_list.len() != 1 {
        return Err(Error::config(
            "eps_list",
            format!("solve takes exactly one eps, got {}", cfg.eps_list.len()),
        ));
    }
    let schedule = cfg.schedule()?;
    let eps = schedule.eps()[0];
    let grid = schedule.grid(cfg.domain, eps)?;
    let start = init_state(cfg.scenario, grid, schedule.params(eps), &schedule.options)?;
    let (state, log) = alternate_minimize(start, &schedule.options);
    let report = energy_report(&state, log.sweeps());

    let dir = out_dir(cfg, out);
    create_dir(&dir)?;
    write_text(&dir.join("energy.csv"), &energy_csv(&[report]))?;
    write_stage(&dir, &state, &report, &log, cfg)?;
    Ok(if log.converged {
        ExitStatus::Success
    } else {
        ExitStatus::NotConverged
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageSummary {
    pub eps: f64,
    pub eta: f64,
    pub h: f64,
    pub nodes: usize,
    pub converged: bool,
    pub sweeps: usize,
    pub e_total: f64,
    pub e_elastic: f64,
    pub phase_field: f64,
    /// `|PF − ℋ¹(J)|`.
    pub pf_error: f64,
    /// `|PF − ℋ¹(J)| / ℋ¹(J)` when the reference length is positive.
    pub pf_rel_error: Option<f64>,
    /// `discrepancy_L1 / PF` when PF is positive.
    pub discrepancy_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trends {
    /// `pf_error` non-increasing up to a factor 1.1 between stages.
    pub pf_error_nonincreasing: bool,
    pub elastic_decreasing: bool,
    /// `discrepancy_ratio` non-increasing up to a factor 1.1 between stages.
    pub discrepancy_ratio_nonincreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuationSummary {
    pub scenario: String,
    pub eta_rule: String,
    pub mesh_ratio: f64,
    pub reference_length: f64,
    pub stages: Vec<StageSummary>,
    /// `sup_k E_total` over the stages.
    pub energy_bound: f64,
    pub all_converged: bool,
    pub trends: Trends,
}

fn within_slack(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= 1.1 * w[0])
}

pub fn summarize(cfg: &RunConfig, reports: &[(EnergyReport, bool, usize)]) -> ContinuationSummary {
    let length = cfg.scenario.reference(&cfg.domain).jump_length;
    let stages: Vec<StageSummary> = reports
        .iter()
        .map(|&(r, converged, nodes)| {
            let pf = r.phase_field();
            StageSummary {
                eps: r.eps,
                eta: r.eta,
                h: r.h,
                nodes,
                converged,
                sweeps: r.sweeps,
                e_total: r.e_total,
                e_elastic: r.e_elastic,
                phase_field: pf,
                pf_error: (pf - length).abs(),
                pf_rel_error: (length > 0.0).then(|| (pf - length).abs() / length),
                discrepancy_ratio: (pf > 0.0).then(|| r.discrepancy_l1 / pf),
            }
        })
        .collect();
    let pf_err: Vec<f64> = stages.iter().map(|s| s.pf_error).collect();
    let ratios: Vec<f64> = stages.iter().map(|s| s.discrepancy_ratio.unwrap_or(0.0)).collect();
    let trends = Trends {
        pf_error_nonincreasing: within_slack(&pf_err),
        elastic_decreasing: stages.windows(2).all(|w| w[1].e_elastic < w[0].e_elastic),
        discrepancy_ratio_nonincreasing: within_slack(&ratios),
    };
    ContinuationSummary {
        scenario: cfg.scenario.to_string(),
        eta_rule: cfg.eta_rule.to_string(),
        mesh_ratio: cfg.mesh_ratio,
        reference_length: length,
        energy_bound: stages.iter().map(|s| s.e_total).fold(0.0, f64::max),
        all_converged: stages.iter().all(|s| s.converged),
        stages,
        trends,
    }
}

/// Runs the ε schedule: one `energy.csv` row per stage, `stage_k/` artifacts,
/// and `summary.json`.
pub fn run_continuation(cfg: &RunConfig, out: Option<&Path>) -> Result<ExitStatus> {
    let schedule = cfg.schedule()?;
    let dir = out_dir(cfg, out);
    create_dir(&dir)?;
    let mut reports = Vec::new();
    let mut failure = None;
    continuation_run_with(&schedule, cfg.scenario, cfg.domain, |k, stage| {
        if failure.is_some() {
            return;
        }
        reports.push((stage.report, stage.converged(), stage.state.grid().node_count()));
        let stage_dir = dir.join(format!("stage_{k}"));
        if let Err(e) = write_stage(&stage_dir, &stage.state, &stage.report, &stage.log, cfg) {
            failure = Some(e);
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let rows: Vec<EnergyReport> = reports.iter().map(|r| r.0).collect();
    write_text(&dir.join("energy.csv"), &energy_csv(&rows))?;
    let summary = summarize(cfg, &reports);
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(if summary.all_converged {
        ExitStatus::Success
    } else {
        ExitStatus::NotConverged
    })
}

/// Recomputes the energy report and diagnostics from a state dump alone.
/// Fails if the recomputed total energy differs from the recorded one.
pub fn run_diagnose(
    state_path: &Path,
    toggles: &DiagnosticToggles,
    opts: &DiagnoseOptions,
) -> Result<DiagnosticsReport> {
    let (state, header) = read_state(state_path)?;
    let report = energy_report(&state, 0);
    if (report.e_total - header.e_total).abs() > 1e-12 * header.e_total.abs().max(1.0) {
        return Err(Error::CorruptDump(format!(
            "recorded E_total {} but fields give {}",
            header.e_total, report.e_total
        )));
    }
    diagnose(&state, report, toggles, opts)
}
