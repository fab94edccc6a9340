//! Flat `key = value` run configuration.
//!
//! ```text
//! # comment
//! scenario     = crack(0.1)
//! eps_list     = 0.16, 0.08, 0.04
//! mesh_ratio   = 4
//! eta_rule     = eps^2
//! diagnostics  = all
//! ```

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::Domain;
use crate::scenarios::Scenario;
use crate::solver::{ContinuationSchedule, EtaRule, SolverOptions, DEFAULT_MESH_RATIO};
use crate::variations::DiagnosticToggles;

pub const KEYS: [&str; 15] = [
    "scenario",
    "domain",
    "eps_list",
    "mesh_ratio",
    "eta_rule",
    "tol_energy",
    "tol_residual",
    "max_sweeps",
    "cg_tol",
    "cg_max_iter",
    "diagnostics",
    "out_dir",
    "threads",
    "mu_blocks",
    "flow_step",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub domain: Domain,
    pub eps_list: Vec<f64>,
    pub mesh_ratio: f64,
    pub eta_rule: EtaRule,
    pub solver: SolverOptions,
    pub diagnostics: DiagnosticToggles,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub mu_blocks: usize,
    pub flow_step: Option<f64>,
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

fn positive(key: &str, value: &str) -> Result<f64> {
    let x: f64 = number(key, value)?;
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::config(key, format!("must be positive, got {value}")))
    }
}

fn list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| number(key, s))
        .collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut scenario = None;
        let mut domain = None;
        let mut eps_list = None;
        let mut mesh_ratio = DEFAULT_MESH_RATIO;
        let mut eta_rule = EtaRule::default();
        let mut solver = SolverOptions::default();
        let mut diagnostics = DiagnosticToggles::all();
        let mut out_dir = None;
        let mut threads = None;
        let mut mu_blocks = 10;
        let mut flow_step = None;
        let mut seen = HashSet::new();

        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(line, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::UnknownConfigKey(key.to_string()));
            }
            if !seen.insert(key.to_string()) {
                return Err(Error::config(key, "given more than once"));
            }
            match key {
                "scenario" => scenario = Some(Scenario::parse(value).map_err(|e| Error::config(key, e.to_string()))?),
                "domain" => {
                    let v = list(key, value)?;
                    let d = match v[..] {
                        [x0, x1, y0, y1] if x1 > x0 && y1 > y0 => Domain { x0, x1, y0, y1 },
                        _ => return Err(Error::config(key, "expected `x0, x1, y0, y1` with x0 < x1, y0 < y1")),
                    };
                    domain = Some(d);
                }
                "eps_list" => eps_list = Some(list(key, value)?),
                "mesh_ratio" => mesh_ratio = positive(key, value)?,
                "eta_rule" => eta_rule = EtaRule::parse(value)?,
                "tol_energy" => solver.rel_energy_tol = positive(key, value)?,
                "tol_residual" => solver.residual_tol = positive(key, value)?,
                "max_sweeps" => solver.max_sweeps = number(key, value)?,
                "cg_tol" => solver.cg_tol = positive(key, value)?,
                "cg_max_iter" => solver.cg_max_iter = number(key, value)?,
                "diagnostics" => diagnostics = DiagnosticToggles::parse(value)?,
                "out_dir" => out_dir = Some(PathBuf::from(value)),
                "threads" => {
                    let n: usize = number(key, value)?;
                    if n == 0 {
                        return Err(Error::config(key, "must be at least 1"));
                    }
                    threads = Some(n);
                }
                "mu_blocks" => {
                    mu_blocks = number(key, value)?;
                    if mu_blocks == 0 {
                        return Err(Error::config(key, "must be at least 1"));
                    }
                }
                "flow_step" => flow_step = Some(positive(key, value)?),
                _ => unreachable!("key list and match arms agree"),
            }
        }

        let scenario = scenario.ok_or_else(|| Error::config("scenario", "missing"))?;
        let eps_list = eps_list.ok_or_else(|| Error::config("eps_list", "missing"))?;
        let cfg = RunConfig {
            scenario,
            domain: domain.unwrap_or_else(|| scenario.default_domain()),
            eps_list,
            mesh_ratio,
            eta_rule,
            solver,
            diagnostics,
            out_dir,
            threads,
            mu_blocks,
            flow_step,
        };
        cfg.schedule()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text)
    }

    pub fn schedule(&self) -> Result<ContinuationSchedule> {
        ContinuationSchedule::new(self.eps_list.clone(), self.eta_rule, self.mesh_ratio, self.solver)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let cfg = RunConfig::parse(
            "# crack run\nscenario = crack(0.1)\neps_list = 0.16, 0.08 # two stages\n\
             mesh_ratio = 2\neta_rule = eps^2\ntol_energy = 1e-8\nmax_sweeps = 50\n\
             diagnostics = flow, theta\nthreads = 2\n",
        )
        .unwrap();
        assert_eq!(cfg.scenario, Scenario::Crack { delta: 0.1 });
        assert_eq!(cfg.eps_list, vec![0.16, 0.08]);
        assert_eq!(cfg.eta_rule, EtaRule::Power(2.0));
        assert_eq!(cfg.solver.max_sweeps, 50);
        assert!(cfg.diagnostics.flow && cfg.diagnostics.theta && !cfg.diagnostics.varifold);
        assert_eq!(cfg.threads, Some(2));
        assert_eq!(cfg.domain, Domain::symmetric_square());
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::parse("scenario = const(1)\nepsilonn = 0.1\n").unwrap_err();
        assert!(matches!(&err, Error::UnknownConfigKey(k) if k == "epsilonn"));
        assert!(err.to_string().contains("epsilonn"));
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::parse("scenario = const(1)\neps_list =\n").is_err());
        assert!(RunConfig::parse("scenario = const(1)\n").is_err());
        assert!(RunConfig::parse("scenario = const(1)\neps_list = 0.1\ntol_energy = -1\n").is_err());
        assert!(RunConfig::parse("scenario = const(1)\neps_list = 0.1\neps_list = 0.2\n").is_err());
        assert!(RunConfig::parse("scenario = wedge\neps_list = 0.1\n").is_err());
        assert!(RunConfig::parse("scenario = const(1)\neps_list = 0.1, 0.2\n").is_err());
        assert!(RunConfig::parse("scenario = const(1)\nno equals sign\n").is_err());
    }
}
