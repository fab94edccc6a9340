//! The discrete Ambrosio–Tortorelli energy and its two partial Euler–Lagrange
//! systems.
//!
//! The energy is edge based:
//!
//! ```text
//! E_el  = Σ_e a_e (δu_e)² w_e / h²,   a_e = ½[(η + v_p²) + (η + v_q²)]
//! E_grad = ε Σ_e (δv_e)² w_e / h²
//! E_pot  = Σ_p ω_p (1 − v_p)² / (4ε)
//! ```
//!
//! with edge weights `w_e = h²` (h²/2 on ∂Ω) and trapezoid node weights
//! `ω_p`. The u-system and v-system below are exactly `½ ∇_u E = A_u u − b_u`
//! and `½ ∇_v E = A_v v − b_v` restricted to interior nodes, so each half-step
//! of alternate minimization minimizes the same functional.

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::linalg::{CsrMatrix, SparseSystem};
use crate::parallel;
use crate::scenarios::Scenario;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ATParams {
    eps: f64,
    eta: f64,
}

impl ATParams {
    /// Requires `0 < eta ≤ eps`.
    pub fn new(eps: f64, eta: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidParams(format!("eps must be positive, got {eps}")));
        }
        if !(eta.is_finite() && eta > 0.0 && eta <= eps) {
            return Err(Error::InvalidParams(format!(
                "eta must satisfy 0 < eta <= eps = {eps}, got {eta}"
            )));
        }
        Ok(ATParams { eps, eta })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// One configuration `(u, v)` with its parameters and boundary data.
#[derive(Debug, Clone, PartialEq)]
pub struct ATState {
    pub params: ATParams,
    pub scenario: Scenario,
    pub u: ScalarField,
    pub v: ScalarField,
}

impl ATState {
    /// Checks grids agree, `u = g` and `v = 1` at every boundary node.
    pub fn new(scenario: Scenario, params: ATParams, u: ScalarField, v: ScalarField) -> Result<Self> {
        let state = ATState::sampled(scenario, params, u, v)?;
        let g = state.grid();
        for k in g.boundary_nodes() {
            let (x, y) = g.coords(k);
            if state.u.values()[k] != scenario.boundary_value(x, y) {
                return Err(Error::BoundaryCondition {
                    node: k,
                    what: "u != g",
                });
            }
            if state.v.values()[k] != 1.0 {
                return Err(Error::BoundaryCondition {
                    node: k,
                    what: "v != 1",
                });
            }
        }
        Ok(state)
    }

    /// Builds a state without checking boundary conditions, for sampled
    /// analytic configurations used as oracles.
    pub fn sampled(scenario: Scenario, params: ATParams, u: ScalarField, v: ScalarField) -> Result<Self> {
        if u.grid() != v.grid() {
            return Err(Error::InvalidGrid("u and v live on different grids".into()));
        }
        Ok(ATState { params, scenario, u, v })
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    /// Overwrites boundary nodes with `u = g`, `v = 1`.
    pub fn enforce_boundary(&mut self) {
        let g = *self.grid();
        let s = self.scenario;
        for k in g.boundary_nodes() {
            let (x, y) = g.coords(k);
            self.u.values_mut()[k] = s.boundary_value(x, y);
            self.v.values_mut()[k] = 1.0;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyParts {
    pub elastic: f64,
    pub pf_grad: f64,
    pub pf_pot: f64,
    pub total: f64,
}

impl EnergyParts {
    /// `E_pf_grad + E_pf_pot`.
    pub fn phase_field(&self) -> f64 {
        self.pf_grad + self.pf_pot
    }
}

#[inline]
fn edge_factor_h(g: &Grid, j: usize) -> f64 {
    if j == 0 || j == g.ny() - 1 {
        0.5
    } else {
        1.0
    }
}

#[inline]
fn edge_factor_v(g: &Grid, i: usize) -> f64 {
    if i == 0 || i == g.nx() - 1 {
        0.5
    } else {
        1.0
    }
}

/// Discrete energy of arbitrary nodal fields (no boundary checks).
pub fn energy_of(params: &ATParams, u: &ScalarField, v: &ScalarField) -> EnergyParts {
    let g = *u.grid();
    let (uv, vv) = (u.values(), v.values());
    let (eps, eta) = (params.eps, params.eta);
    let nh = g.horizontal_edge_count();
    let nxh = g.nx() - 1;
    let nx = g.nx();
    let coeff = |p: usize, q: usize| 0.5 * ((eta + vv[p] * vv[p]) + (eta + vv[q] * vv[q]));

    let edge = |e: usize| -> (usize, usize, f64) {
        if e < nh {
            let (i, j) = (e % nxh, e / nxh);
            let p = g.node(i, j);
            (p, p + 1, edge_factor_h(&g, j))
        } else {
            let e = e - nh;
            let (i, j) = (e % nx, e / nx);
            let p = g.node(i, j);
            (p, p + nx, edge_factor_v(&g, i))
        }
    };
    let ne = g.edge_count();
    let elastic = parallel::sum_by(ne, |e| {
        let (p, q, f) = edge(e);
        let d = uv[q] - uv[p];
        coeff(p, q) * d * d * f
    });
    let pf_grad = eps
        * parallel::sum_by(ne, |e| {
            let (p, q, f) = edge(e);
            let d = vv[q] - vv[p];
            d * d * f
        });
    let pf_pot = parallel::sum_by(g.node_count(), |k| {
        let (i, j) = g.node_ij(k);
        let d = 1.0 - vv[k];
        g.node_weight(i, j) * d * d
    }) / (4.0 * eps);
    EnergyParts {
        elastic,
        pf_grad,
        pf_pot,
        total: elastic + pf_grad + pf_pot,
    }
}

pub fn discrete_at_energy(state: &ATState) -> EnergyParts {
    energy_of(&state.params, &state.u, &state.v)
}

/// Interior node `(i, j)` ↦ unknown index.
#[inline]
pub fn interior_index(g: &Grid, i: usize, j: usize) -> usize {
    (j - 1) * (g.nx() - 2) + (i - 1)
}

/// Interior values in unknown order.
pub fn gather_interior(f: &ScalarField) -> Vec<f64> {
    let g = *f.grid();
    let m = g.nx() - 2;
    parallel::map_collect(g.interior_count(), |r| f.at(r % m + 1, r / m + 1))
}

/// Writes unknowns back to interior nodes.
pub fn scatter_interior(f: &mut ScalarField, x: &[f64]) {
    let g = *f.grid();
    let m = g.nx() - 2;
    assert_eq!(x.len(), g.interior_count());
    let vals = f.values_mut();
    for (r, &xr) in x.iter().enumerate() {
        vals[g.node(r % m + 1, r / m + 1)] = xr;
    }
}

/// Five-point system over interior nodes:
/// `A_pp = Σ_e c_e + d_p`, `A_pq = −c_e`, `b_p = f_p + Σ_{q ∈ ∂Ω} c_e β_q`.
/// `cond_h(i, j)` is the conductance of horizontal edge (i,j)–(i+1,j) and
/// `cond_v(i, j)` of vertical edge (i,j)–(i,j+1).
fn assemble_five_point<CH, CV, D, F, B>(g: &Grid, cond_h: CH, cond_v: CV, diag: D, source: F, bval: B) -> SparseSystem
where
    CH: Fn(usize, usize) -> f64 + Sync,
    CV: Fn(usize, usize) -> f64 + Sync,
    D: Fn(usize) -> f64 + Sync,
    F: Fn(usize) -> f64 + Sync,
    B: Fn(usize) -> f64 + Sync,
{
    let m = g.nx() - 2;
    let (nx, ny) = (g.nx(), g.ny());
    let rows: Vec<(Vec<(usize, f64)>, f64)> = parallel::map_collect(g.interior_count(), |r| {
        let (i, j) = (r % m + 1, r / m + 1);
        let k = g.node(i, j);
        // (neighbour node, neighbour unknown if interior, conductance), in column order
        let nbrs = [
            (k - nx, (j > 1).then(|| r - m), cond_v(i, j - 1)),
            (k - 1, (i > 1).then(|| r - 1), cond_h(i - 1, j)),
            (k + 1, (i < nx - 2).then(|| r + 1), cond_h(i, j)),
            (k + nx, (j < ny - 2).then(|| r + m), cond_v(i, j)),
        ];
        let mut row = Vec::with_capacity(5);
        let mut d = 0.0;
        let mut rhs = source(k);
        for (idx, &(node, unknown, c)) in nbrs.iter().enumerate() {
            d += c;
            match unknown {
                Some(col) => row.push((col, -c)),
                None => rhs += c * bval(node),
            }
            if idx == 1 {
                row.push((r, 0.0));
            }
        }
        let diag_slot = row.iter().position(|&(c, _)| c == r).unwrap();
        row[diag_slot].1 = d + diag(k);
        (row, rhs)
    });
    let (rows, rhs): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    SparseSystem {
        matrix: CsrMatrix::from_rows(rows),
        rhs,
    }
}

/// Stationarity of the energy in `u` for fixed `v`: conductances are the edge
/// coefficients `a_e`, Dirichlet data `g` folded into the right-hand side.
pub fn assemble_u_system(v: &ScalarField, params: &ATParams, scenario: &Scenario) -> SparseSystem {
    let g = *v.grid();
    let vv = v.values();
    let eta = params.eta;
    let a = |p: usize, q: usize| 0.5 * ((eta + vv[p] * vv[p]) + (eta + vv[q] * vv[q]));
    assemble_five_point(
        &g,
        |i, j| {
            let p = g.node(i, j);
            a(p, p + 1) * edge_factor_h(&g, j)
        },
        |i, j| {
            let p = g.node(i, j);
            a(p, p + g.nx()) * edge_factor_v(&g, i)
        },
        |_| 0.0,
        |_| 0.0,
        |k| {
            let (x, y) = g.coords(k);
            scenario.boundary_value(x, y)
        },
    )
}

/// `S_p = ½ Σ_{e ∋ p} (δu_e)² w_e / h²` at every node.
pub fn elastic_node_weights(u: &ScalarField) -> Vec<f64> {
    let g = *u.grid();
    let uv = u.values();
    let (nx, ny) = (g.nx(), g.ny());
    parallel::map_collect(g.node_count(), |k| {
        let (i, j) = g.node_ij(k);
        let mut s = 0.0;
        if i > 0 {
            let d = uv[k] - uv[k - 1];
            s += d * d * edge_factor_h(&g, j);
        }
        if i + 1 < nx {
            let d = uv[k + 1] - uv[k];
            s += d * d * edge_factor_h(&g, j);
        }
        if j > 0 {
            let d = uv[k] - uv[k - nx];
            s += d * d * edge_factor_v(&g, i);
        }
        if j + 1 < ny {
            let d = uv[k + nx] - uv[k];
            s += d * d * edge_factor_v(&g, i);
        }
        0.5 * s
    })
}

/// Stationarity of the energy in `v` for fixed `u`:
/// `ε · (five-point stencil) + diag(S_p + ω_p / 4ε)`, right-hand side
/// `ω_p / 4ε` plus the fold-in of `v = 1` on ∂Ω.
pub fn assemble_v_system(u: &ScalarField, params: &ATParams) -> SparseSystem {
    let g = *u.grid();
    let s = elastic_node_weights(u);
    let eps = params.eps;
    let pot = |k: usize| {
        let (i, j) = g.node_ij(k);
        g.node_weight(i, j) / (4.0 * eps)
    };
    assemble_five_point(
        &g,
        |_, j| eps * edge_factor_h(&g, j),
        |i, _| eps * edge_factor_v(&g, i),
        |k| s[k] + pot(k),
        pot,
        |_| 1.0,
    )
}

/// Relative residuals `‖A_u u − b_u‖/‖b_u‖` and `‖A_v v − b_v‖/‖b_v‖` of the
/// current configuration (absolute when a right-hand side vanishes).
pub fn pde_residuals(state: &ATState) -> (f64, f64) {
    let su = assemble_u_system(&state.v, &state.params, &state.scenario);
    let sv = assemble_v_system(&state.u, &state.params);
    (
        su.relative_residual(&gather_interior(&state.u)),
        sv.relative_residual(&gather_interior(&state.v)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Domain, GridSpec};
    use crate::linalg::cg_solve;

    fn unit(n: usize) -> Grid {
        Grid::new(GridSpec::new(n, n, Domain::unit_square())).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ATParams::new(0.1, 0.01).is_ok());
        assert!(ATParams::new(0.1, 0.2).is_err());
        assert!(ATParams::new(0.0, 0.0).is_err());
        assert!(ATParams::new(0.1, 0.0).is_err());
    }

    #[test]
    fn energy_examples() {
        let g = unit(9);
        let p = ATParams::new(0.1, 0.01).unwrap();
        let c = Scenario::Const { c: 2.0 };
        let one = ScalarField::constant(g, 1.0);
        let e = energy_of(&p, &ScalarField::constant(g, 2.0), &one);
        assert_eq!((e.elastic, e.pf_grad, e.pf_pot, e.total), (0.0, 0.0, 0.0, 0.0));

        let b = 1.7;
        let e = energy_of(&p, &ScalarField::from_fn(g, |x, _| b * x), &one);
        assert!((e.elastic - (1.0 + 0.01) * b * b).abs() < 1e-12);
        assert_eq!(e.pf_grad + e.pf_pot, 0.0);

        let st = ATState::sampled(c, p, ScalarField::constant(g, 2.0), ScalarField::constant(g, 0.5)).unwrap();
        let e = discrete_at_energy(&st);
        assert!((e.pf_pot - 1.0 / (16.0 * 0.1)).abs() < 1e-12);
        assert_eq!(e.elastic + e.pf_grad, 0.0);
    }

    #[test]
    fn u_system_with_unit_v_is_scaled_laplacian() {
        let g = unit(6);
        let p = ATParams::new(0.1, 0.01).unwrap();
        let sys = assemble_u_system(&ScalarField::constant(g, 1.0), &p, &Scenario::Const { c: 0.0 });
        let a = &sys.matrix;
        for r in 0..a.n() {
            for (col, val) in a.row(r) {
                let expect = if col == r { 4.0 * 1.01 } else { -1.01 };
                assert!((val - expect).abs() < 1e-15);
            }
        }
        assert!(a.is_symmetric() && a.is_m_matrix());
    }

    #[test]
    fn affine_data_is_discrete_harmonic() {
        let g = unit(11);
        let p = ATParams::new(0.1, 0.01).unwrap();
        let s = Scenario::Affine { a: 0.0, b: 1.0, c: 0.0 };
        let sys = assemble_u_system(&ScalarField::constant(g, 1.0), &p, &s);
        let sol = cg_solve(&sys, vec![0.0; sys.n()], 1e-12, 1000);
        let exact = gather_interior(&ScalarField::from_fn(g, |x, _| x));
        for (a, b) in sol.x.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn degenerate_v_still_solves() {
        let g = unit(21);
        let p = ATParams::new(0.1, 1e-4).unwrap();
        let s = Scenario::Affine { a: 0.0, b: 1.0, c: 2.0 };
        let sys0 = assemble_u_system(&ScalarField::constant(g, 0.0), &p, &s);
        let sys1 = assemble_u_system(&ScalarField::constant(g, 1.0), &p, &s);
        // η Laplacian vs (1 + η) Laplacian: same solution
        let x0 = cg_solve(&sys0, vec![0.0; sys0.n()], 1e-12, 5000);
        let x1 = cg_solve(&sys1, vec![0.0; sys1.n()], 1e-12, 5000);
        assert!(x0.converged && x1.converged);
        for (a, b) in x0.x.iter().zip(&x1.x) {
            assert!((a - b).abs() < 1e-9);
        }
        let ratio = sys1.matrix.get(0, 0) / sys0.matrix.get(0, 0);
        assert!((ratio - 1.0001 / 1e-4).abs() < 1e-6);
    }

    #[test]
    fn v_system_examples() {
        let g = unit(21);
        let eps = 0.05;
        let p = ATParams::new(eps, eps * eps).unwrap();
        let sys = assemble_v_system(&ScalarField::constant(g, 3.0), &p);
        let sol = cg_solve(&sys, vec![0.5; sys.n()], 1e-14, 1000);
        assert!(sol.x.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!(sys.rhs.iter().all(|&b| b > 0.0));

        // |∇u|² ≡ 1 far from the boundary: v → 1 / (1 + 4ε)
        let far = Domain {
            x0: 0.0,
            x1: 4.0,
            y0: 0.0,
            y1: 4.0,
        };
        let g = Grid::new(GridSpec::new(201, 201, far)).unwrap();
        let sys = assemble_v_system(&ScalarField::from_fn(g, |x, _| x), &p);
        let sol = cg_solve(&sys, vec![1.0; sys.n()], 1e-12, 5000);
        let mut v = ScalarField::constant(g, 1.0);
        scatter_interior(&mut v, &sol.x);
        assert!((v.at(100, 100) - 1.0 / (1.0 + 4.0 * eps)).abs() < 1e-8);
        assert!(v.values().iter().all(|&x| x > 0.0 && x <= 1.0));
    }

    #[test]
    fn residuals_of_exact_constant_state() {
        let g = unit(9);
        let p = ATParams::new(0.1, 0.01).unwrap();
        let s = Scenario::Const { c: 1.5 };
        let mut st = ATState::new(s, p, ScalarField::constant(g, 1.5), ScalarField::constant(g, 1.0)).unwrap();
        let (ru, rv) = pde_residuals(&st);
        assert!(ru < 1e-15 && rv < 1e-15);
        let k = g.node(4, 4);
        st.u.values_mut()[k] += 0.1;
        let (ru2, _) = pde_residuals(&st);
        assert!(ru2 > ru);
    }

    #[test]
    fn state_rejects_boundary_violation() {
        let g = unit(5);
        let p = ATParams::new(0.1, 0.01).unwrap();
        let s = Scenario::Const { c: 1.0 };
        let err = ATState::new(s, p, ScalarField::constant(g, 1.0), ScalarField::constant(g, 0.5));
        assert!(matches!(err, Err(Error::BoundaryCondition { .. })));
    }
}
