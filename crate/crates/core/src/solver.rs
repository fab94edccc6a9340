//! Alternate minimization at fixed ε and ε-continuation with warm starts.

use std::fmt;

use serde::Serialize;

use crate::assembly::{
    assemble_u_system, assemble_v_system, discrete_at_energy, gather_interior, pde_residuals, scatter_interior,
    ATParams, ATState,
};
use crate::energetics::{energy_report, EnergyReport};
use crate::error::{Error, Result};
use crate::grid::{Domain, Grid, ScalarField};
use crate::linalg::cg_solve;
use crate::scenarios::Scenario;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop when `|E_k − E_{k−1}| ≤ rel_energy_tol · E_k` …
    pub rel_energy_tol: f64,
    /// … and `max(r_u, r_v) ≤ residual_tol`.
    pub residual_tol: f64,
    pub max_sweeps: usize,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rel_energy_tol: 1e-9,
            residual_tol: 1e-6,
            max_sweeps: 2000,
            cg_tol: 1e-10,
            cg_max_iter: 100_000,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !(ok(self.rel_energy_tol) && ok(self.residual_tol) && ok(self.cg_tol)) {
            return Err(Error::InvalidParams("tolerances must be positive".into()));
        }
        if self.max_sweeps == 0 || self.cg_max_iter == 0 {
            return Err(Error::InvalidParams("iteration limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRecord {
    pub sweep: usize,
    pub energy: f64,
    /// `E_{k−1} − E_k`.
    pub energy_drop: f64,
    pub r_u: f64,
    pub r_v: f64,
    pub cg_iterations_u: usize,
    pub cg_iterations_v: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationLog {
    pub initial_energy: f64,
    pub records: Vec<SweepRecord>,
    pub converged: bool,
}

impl IterationLog {
    pub fn sweeps(&self) -> usize {
        self.records.len()
    }

    /// `E_k ≤ E_{k−1} + slack` for every sweep, starting from the initial
    /// energy.
    pub fn is_monotone(&self, slack: f64) -> bool {
        let mut prev = self.initial_energy;
        self.records.iter().all(|r| {
            let ok = r.energy <= prev + slack;
            prev = r.energy;
            ok
        })
    }

    pub fn final_energy(&self) -> f64 {
        self.records.last().map_or(self.initial_energy, |r| r.energy)
    }
}

/// Range of the boundary data over the boundary nodes.
fn boundary_range(state: &ATState) -> (f64, f64) {
    let g = state.grid();
    g.boundary_nodes()
        .into_iter()
        .map(|k| state.u.values()[k])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

/// Minimizes the energy in `u` for fixed `v`, warm-started from the current
/// `u`, then projects onto `[min g, max g]`. Returns CG iterations.
pub fn solve_u(state: &mut ATState, opts: &SolverOptions) -> usize {
    let sys = assemble_u_system(&state.v, &state.params, &state.scenario);
    let sol = cg_solve(&sys, gather_interior(&state.u), opts.cg_tol, opts.cg_max_iter);
    let (lo, hi) = boundary_range(state);
    let x: Vec<f64> = sol.x.iter().map(|&x| x.clamp(lo, hi)).collect();
    scatter_interior(&mut state.u, &x);
    sol.iterations
}

/// Minimizes the energy in `v` for fixed `u`, then projects onto `[0, 1]`.
pub fn solve_v(state: &mut ATState, opts: &SolverOptions) -> usize {
    let sys = assemble_v_system(&state.u, &state.params);
    let sol = cg_solve(&sys, gather_interior(&state.v), opts.cg_tol, opts.cg_max_iter);
    let x: Vec<f64> = sol.x.iter().map(|&x| x.clamp(0.0, 1.0)).collect();
    scatter_interior(&mut state.v, &x);
    sol.iterations
}

/// `v ≡ 1` and `u` the minimizer of the energy for that `v`.
pub fn init_state(scenario: Scenario, grid: Grid, params: ATParams, opts: &SolverOptions) -> Result<ATState> {
    init_state_with_v(scenario, grid, params, ScalarField::constant(grid, 1.0), opts)
}

/// Seeds `v` from a supplied field (boundary reset to 1, values clamped to
/// `[0, 1]`), then solves for `u`.
pub fn init_state_with_v(
    scenario: Scenario,
    grid: Grid,
    params: ATParams,
    v: ScalarField,
    opts: &SolverOptions,
) -> Result<ATState> {
    scenario.validate()?;
    let v = v.map(|x| x.clamp(0.0, 1.0));
    let mut state = ATState::sampled(scenario, params, scenario.extension_field(grid), v)?;
    state.enforce_boundary();
    solve_u(&mut state, opts);
    Ok(state)
}

/// Alternates exact minimization in `u` and in `v` until the energy
/// stagnates and both residuals are small, or `max_sweeps` is reached.
pub fn alternate_minimize(mut state: ATState, opts: &SolverOptions) -> (ATState, IterationLog) {
    let initial_energy = discrete_at_energy(&state).total;
    let mut log = IterationLog {
        initial_energy,
        records: Vec::new(),
        converged: false,
    };
    let mut prev = initial_energy;
    for sweep in 1..=opts.max_sweeps {
        let cg_u = solve_u(&mut state, opts);
        let cg_v = solve_v(&mut state, opts);
        let energy = discrete_at_energy(&state).total;
        let (r_u, r_v) = pde_residuals(&state);
        let drop = prev - energy;
        log.records.push(SweepRecord {
            sweep,
            energy,
            energy_drop: drop,
            r_u,
            r_v,
            cg_iterations_u: cg_u,
            cg_iterations_v: cg_v,
        });
        prev = energy;
        if drop.abs() <= opts.rel_energy_tol * energy.abs() && r_u.max(r_v) <= opts.residual_tol {
            log.converged = true;
            break;
        }
    }
    (state, log)
}

/// `η` as a function of `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaRule {
    /// `η = ε^p`.
    Power(f64),
    Fixed(f64),
}

impl Default for EtaRule {
    fn default() -> Self {
        EtaRule::Power(2.0)
    }
}

impl EtaRule {
    pub fn eta(&self, eps: f64) -> f64 {
        match *self {
            EtaRule::Power(p) => eps.powf(p),
            EtaRule::Fixed(eta) => eta,
        }
    }

    /// Parses `eps^p` or a plain number.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::config("eta_rule", format!("expected `eps^p` or a number, got `{s}`"));
        if let Some(p) = s.strip_prefix("eps^") {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            if !(p.is_finite() && p >= 1.0) {
                return Err(Error::config("eta_rule", format!("exponent must be >= 1, got {p}")));
            }
            return Ok(EtaRule::Power(p));
        }
        let v: f64 = s.parse().map_err(|_| bad())?;
        Ok(EtaRule::Fixed(v))
    }
}

impl fmt::Display for EtaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EtaRule::Power(p) => write!(f, "eps^{p}"),
            EtaRule::Fixed(v) => write!(f, "{v}"),
        }
    }
}

pub const DEFAULT_MESH_RATIO: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationSchedule {
    eps: Vec<f64>,
    pub eta_rule: EtaRule,
    /// Stage grids use `h ≤ ε / mesh_ratio`.
    pub mesh_ratio: f64,
    pub options: SolverOptions,
}

impl ContinuationSchedule {
    pub fn new(eps: Vec<f64>, eta_rule: EtaRule, mesh_ratio: f64, options: SolverOptions) -> Result<Self> {
        if eps.is_empty() {
            return Err(Error::InvalidSchedule("empty eps list".into()));
        }
        if let Some(bad) = eps.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::InvalidSchedule(format!("eps must be positive, got {bad}")));
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidSchedule("eps must be strictly decreasing".into()));
        }
        if !(mesh_ratio >= 2.0 && mesh_ratio.is_finite()) {
            return Err(Error::InvalidSchedule(format!(
                "mesh ratio must be >= 2, got {mesh_ratio}"
            )));
        }
        for &e in &eps {
            ATParams::new(e, eta_rule.eta(e)).map_err(|err| Error::InvalidSchedule(err.to_string()))?;
        }
        options.validate()?;
        Ok(ContinuationSchedule {
            eps,
            eta_rule,
            mesh_ratio,
            options,
        })
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn params(&self, eps: f64) -> ATParams {
        ATParams::new(eps, self.eta_rule.eta(eps)).expect("validated at construction")
    }

    pub fn grid(&self, domain: Domain, eps: f64) -> Result<Grid> {
        Grid::with_max_spacing(domain, eps / self.mesh_ratio)
    }
}

/// Bilinear transfer of `(u, v)` onto `grid`, boundary values re-imposed.
pub fn transfer(state: &ATState, grid: Grid, params: ATParams) -> Result<ATState> {
    let sample = |f: &ScalarField| {
        let vals: Vec<f64> = (0..grid.node_count())
            .map(|k| {
                let (x, y) = grid.coords(k);
                f.sample(x, y).ok_or(Error::FlowLeftDomain { x, y })
            })
            .collect::<Result<_>>()?;
        ScalarField::new(grid, vals)
    };
    let mut next = ATState::sampled(state.scenario, params, sample(&state.u)?, sample(&state.v)?)?;
    next.enforce_boundary();
    Ok(next)
}

#[derive(Debug, Clone)]
pub struct StageResult {
    pub state: ATState,
    pub log: IterationLog,
    pub report: EnergyReport,
}

impl StageResult {
    pub fn converged(&self) -> bool {
        self.log.converged
    }
}

/// Runs the schedule: the first stage starts from [`init_state`], each later
/// stage from the bilinear transfer of the previous critical point.
/// Non-converged stages are kept and flagged.
pub fn continuation_run(
    schedule: &ContinuationSchedule,
    scenario: Scenario,
    domain: Domain,
) -> Result<Vec<StageResult>> {
    continuation_run_with(schedule, scenario, domain, |_, _| {})
}

/// As [`continuation_run`], calling `on_stage(index, result)` after each stage.
pub fn continuation_run_with(
    schedule: &ContinuationSchedule,
    scenario: Scenario,
    domain: Domain,
    mut on_stage: impl FnMut(usize, &StageResult),
) -> Result<Vec<StageResult>> {
    scenario.validate()?;
    let opts = &schedule.options;
    let mut stages: Vec<StageResult> = Vec::with_capacity(schedule.eps.len());
    for (k, &eps) in schedule.eps.iter().enumerate() {
        let params = schedule.params(eps);
        let grid = schedule.grid(domain, eps)?;
        let start = match stages.last() {
            None => init_state(scenario, grid, params, opts)?,
            Some(prev) => transfer(&prev.state, grid, params)?,
        };
        let (state, log) = alternate_minimize(start, opts);
        let report = energy_report(&state, log.sweeps());
        let stage = StageResult { state, log, report };
        on_stage(k, &stage);
        stages.push(stage);
    }
    Ok(stages)
}
