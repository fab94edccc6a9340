//! Scalar diagnostics of a configuration: the split energy, the
//! equipartition discrepancy, the coarea mass of `w = v − v²/2`, and the
//! analytic one-dimensional transition profile used as an oracle.

use serde::Serialize;

use crate::assembly::{discrete_at_energy, pde_residuals, ATParams, ATState};
use crate::error::{Error, Result};
use crate::grid::{cell_average, cell_gradient, CellScalarField, Grid, ScalarField};
use crate::scenarios::{Scenario, Segment};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub eps: f64,
    pub eta: f64,
    pub h: f64,
    pub sweeps: usize,
    pub e_elastic: f64,
    pub e_pf_grad: f64,
    pub e_pf_pot: f64,
    pub e_total: f64,
    pub discrepancy_l1: f64,
    pub w_mass: f64,
    pub r_u: f64,
    pub r_v: f64,
}

impl EnergyReport {
    pub fn phase_field(&self) -> f64 {
        self.e_pf_grad + self.e_pf_pot
    }
}

pub fn energy_report(state: &ATState, sweeps: usize) -> EnergyReport {
    let e = discrete_at_energy(state);
    let (r_u, r_v) = pde_residuals(state);
    EnergyReport {
        eps: state.params.eps(),
        eta: state.params.eta(),
        h: state.grid().h(),
        sweeps,
        e_elastic: e.elastic,
        e_pf_grad: e.pf_grad,
        e_pf_pot: e.pf_pot,
        e_total: e.total,
        discrepancy_l1: discrepancy(state).1,
        w_mass: w_mass(state).1,
        r_u,
        r_v,
    }
}

/// `ξ = ε|∇v|² − (1 − v̄)²/(4ε)` per cell and `Σ|ξ| h²`.
pub fn discrepancy(state: &ATState) -> (CellScalarField, f64) {
    let g = *state.grid();
    let eps = state.params.eps();
    let grad = cell_gradient(&state.v);
    let vbar = cell_average(&state.v);
    let xi: Vec<f64> = crate::parallel::map_collect(g.cell_count(), |c| {
        let [a, b] = grad.at(c);
        let d = 1.0 - vbar[c];
        eps * (a * a + b * b) - d * d / (4.0 * eps)
    });
    let abs = CellScalarField::from_values(g, xi.iter().map(|x| x.abs()).collect());
    let l1 = abs.integrate();
    (CellScalarField::from_values(g, xi), l1)
}

/// `w = v − v²/2`.
pub fn w_field(v: &ScalarField) -> ScalarField {
    v.map(|x| x - 0.5 * x * x)
}

/// Per-cell `|∇w|`.
pub fn grad_w_magnitude(v: &ScalarField) -> CellScalarField {
    let grad = cell_gradient(&w_field(v));
    let g = *v.grid();
    let vals = grad.values().iter().map(|[a, b]| a.hypot(*b)).collect();
    CellScalarField::from_values(g, vals)
}

/// `w` and its mass `Σ |∇w| h²`.
pub fn w_mass(state: &ATState) -> (ScalarField, f64) {
    let mass = grad_w_magnitude(&state.v).integrate();
    (w_field(&state.v), mass)
}

/// `1 − exp(−|x|/(2ε))`.
pub fn optimal_profile(eps: f64, x: f64) -> f64 {
    1.0 - (-x.abs() / (2.0 * eps)).exp()
}

/// Phase-field energy per unit length of the optimal profile truncated to
/// `[−half_width, half_width]`, by adaptive Simpson quadrature.
pub fn profile_energy_per_length(eps: f64, half_width: f64) -> Result<f64> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidParams(format!("eps must be positive, got {eps}")));
    }
    if half_width < 5.0 * eps {
        return Err(Error::ProfileTruncated {
            half_width,
            min: 5.0 * eps,
        });
    }
    let density = |x: f64| {
        let d = (-x / (2.0 * eps)).exp() / (2.0 * eps);
        let one_minus_v = 1.0 - optimal_profile(eps, x);
        eps * d * d + one_minus_v * one_minus_v / (4.0 * eps)
    };
    Ok(2.0 * adaptive_simpson(&density, 0.0, half_width, 1e-13, 50))
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Distance from `(x, y)` to a horizontal segment.
pub fn distance_to_segment(seg: &Segment, x: f64, y: f64) -> f64 {
    let dx = if x < seg.a {
        seg.a - x
    } else if x > seg.b {
        x - seg.b
    } else {
        0.0
    };
    dx.hypot(y - seg.y)
}

/// Analytic crack configuration along `seg`: `v` is the optimal profile of
/// the distance to the segment, `u = sign(y − seg.y)` (zero on the line).
/// Boundary conditions are not imposed.
pub fn sampled_profile_state(grid: Grid, params: ATParams, scenario: Scenario, seg: Segment) -> ATState {
    let eps = params.eps();
    let v = ScalarField::from_fn(grid, |x, y| optimal_profile(eps, distance_to_segment(&seg, x, y)));
    let u = ScalarField::from_fn(grid, |_, y| {
        let s = y - seg.y;
        if s > 0.0 {
            1.0
        } else if s < 0.0 {
            -1.0
        } else {
            0.0
        }
    });
    ATState::sampled(scenario, params, u, v).expect("fields share one grid")
}
