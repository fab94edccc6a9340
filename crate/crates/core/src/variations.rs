//! Diagnostics built from domain deformations: the stress-energy tensor,
//! assembled and flow-based inner variations, the varifold first variation
//! and its sharp-interface reference, the Anzellotti residual, defect-measure
//! blocks and the strip estimate of Θ.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::assembly::{energy_of, ATState};
use crate::energetics::{grad_w_magnitude, w_field, EnergyReport};
use crate::error::{Error, Result};
use crate::grid::{
    cell_average, cell_gradient, integrate_boundary, normal_derivative_on_side, CellTensorField, Domain, ScalarField,
    Side, Sym2,
};
use crate::parallel;
use crate::scenarios::Segment;

/// Polynomial weight `1`, `x` or `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    One,
    X,
    Y,
}

impl Weight {
    pub const ALL: [Weight; 3] = [Weight::One, Weight::X, Weight::Y];

    #[inline]
    fn eval(self, x: f64, y: f64) -> f64 {
        match self {
            Weight::One => 1.0,
            Weight::X => x,
            Weight::Y => y,
        }
    }

    #[inline]
    fn grad(self) -> [f64; 2] {
        match self {
            Weight::One => [0.0, 0.0],
            Weight::X => [1.0, 0.0],
            Weight::Y => [0.0, 1.0],
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Weight::One => "1",
            Weight::X => "x",
            Weight::Y => "y",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "1" => Some(Weight::One),
            "x" => Some(Weight::X),
            "y" => Some(Weight::Y),
            _ => None,
        }
    }
}

/// `X = ((x1 − x)(x − x0) p, (y1 − y)(y − y0) q)` on a rectangle, tangent to
/// its boundary; or the zero field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestVectorField {
    domain: Domain,
    weights: Option<(Weight, Weight)>,
}

impl TestVectorField {
    pub fn new(domain: Domain, p: Weight, q: Weight) -> Self {
        TestVectorField {
            domain,
            weights: Some((p, q)),
        }
    }

    pub fn zero(domain: Domain) -> Self {
        TestVectorField { domain, weights: None }
    }

    /// The nine polynomial fields followed by the zero field.
    pub fn catalog(domain: Domain) -> Vec<Self> {
        let mut out: Vec<Self> = Weight::ALL
            .iter()
            .flat_map(|&p| Weight::ALL.iter().map(move |&q| TestVectorField::new(domain, p, q)))
            .collect();
        out.push(TestVectorField::zero(domain));
        out
    }

    /// Parses ids of the form `p=x,q=1` or `zero`.
    pub fn parse(id: &str, domain: Domain) -> Result<Self> {
        let bad = || Error::UnknownTestField(id.to_string());
        if id.trim() == "zero" {
            return Ok(TestVectorField::zero(domain));
        }
        let (ps, qs) = id.split_once(',').ok_or_else(bad)?;
        let p = ps.trim().strip_prefix("p=").and_then(Weight::parse).ok_or_else(bad)?;
        let q = qs.trim().strip_prefix("q=").and_then(Weight::parse).ok_or_else(bad)?;
        Ok(TestVectorField::new(domain, p, q))
    }

    pub fn id(&self) -> String {
        self.to_string()
    }

    pub fn is_zero(&self) -> bool {
        self.weights.is_none()
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        let Some((p, q)) = self.weights else {
            return [0.0, 0.0];
        };
        let d = &self.domain;
        [
            (d.x1 - x) * (x - d.x0) * p.eval(x, y),
            (d.y1 - y) * (y - d.y0) * q.eval(x, y),
        ]
    }

    /// `DX[i][j] = ∂X_i/∂x_j`.
    #[inline]
    pub fn jacobian(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        let Some((p, q)) = self.weights else {
            return [[0.0; 2]; 2];
        };
        let d = &self.domain;
        let (bx, dbx) = ((d.x1 - x) * (x - d.x0), d.x1 + d.x0 - 2.0 * x);
        let (by, dby) = ((d.y1 - y) * (y - d.y0), d.y1 + d.y0 - 2.0 * y);
        let (gp, gq) = (p.grad(), q.grad());
        [
            [dbx * p.eval(x, y) + bx * gp[0], bx * gp[1]],
            [by * gq[0], dby * q.eval(x, y) + by * gq[1]],
        ]
    }
}

impl fmt::Display for TestVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.weights {
            None => write!(f, "zero"),
            Some((p, q)) => write!(f, "p={},q={}", p.symbol(), q.symbol()),
        }
    }
}

impl Serialize for TestVectorField {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Stress-energy tensor per cell:
///
/// ```text
/// T = c (2∇u⊗∇u − |∇u|² Id) + 2ε ∇v⊗∇v − (ε|∇v|² + q/ε) Id
/// ```
///
/// with `c = η + ⟨v²⟩` and `q = ⟨(1 − v)²⟩`, `⟨·⟩` the mean over the four
/// corners. `Tr T = −2q/ε`. See [`energy_stress_tensor`] for the variant
/// paired with the energy's inner variation.
pub fn stress_tensor(state: &ATState) -> CellTensorField {
    tensor_with_potential(state, 1.0 / state.params.eps())
}

/// [`stress_tensor`] with the potential weighted `q/(4ε)` as in the energy,
/// so that `d/dt E(fields ∘ Φ_t⁻¹) = −∫ T : DX` for deformations fixing ∂Ω.
/// `Tr T = −q/(2ε)`.
pub fn energy_stress_tensor(state: &ATState) -> CellTensorField {
    tensor_with_potential(state, 0.25 / state.params.eps())
}

fn tensor_with_potential(state: &ATState, pot_weight: f64) -> CellTensorField {
    let g = *state.grid();
    let (eps, eta) = (state.params.eps(), state.params.eta());
    let gu = cell_gradient(&state.u);
    let gv = cell_gradient(&state.v);
    let v2 = cell_average(&state.v.map(|v| v * v));
    let pot = cell_average(&state.v.map(|v| (1.0 - v) * (1.0 - v)));
    let values = parallel::map_collect(g.cell_count(), |c| {
        let (du, dv) = (gu.at(c), gv.at(c));
        let nu2 = du[0] * du[0] + du[1] * du[1];
        let nv2 = dv[0] * dv[0] + dv[1] * dv[1];
        let elastic = Sym2::outer(du)
            .scale(2.0)
            .sub(&Sym2::IDENTITY.scale(nu2))
            .scale(eta + v2[c]);
        let phase = Sym2::outer(dv)
            .scale(2.0 * eps)
            .sub(&Sym2::IDENTITY.scale(eps * nv2 + pot_weight * pot[c]));
        elastic.add(&phase)
    });
    CellTensorField::from_values(g, values)
}

/// Both sides of the inner-variation identity `∫ T : DX = 2(η + 1) ∫_∂Ω ∂_ν u (X · ∇g)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InnerVariation {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl InnerVariation {
    /// First variation `d/dt E` under the flow of X: `rhs − lhs`.
    pub fn derivative(&self) -> f64 {
        self.rhs - self.lhs
    }
}

pub fn inner_variation_assembled(state: &ATState, x: &TestVectorField) -> InnerVariation {
    inner_variation_with_tensor(state, &energy_stress_tensor(state), x)
}

fn inner_variation_with_tensor(state: &ATState, t: &CellTensorField, x: &TestVectorField) -> InnerVariation {
    let g = *state.grid();
    let h2 = g.h() * g.h();
    let tv = t.values();
    let lhs = parallel::sum_by(g.cell_count(), |c| {
        let (cx, cy) = g.cell_center(c);
        tv[c].contract(&x.jacobian(cx, cy))
    }) * h2;

    let eta = state.params.eta();
    let sides: Vec<Vec<f64>> = Side::ALL
        .iter()
        .map(|&s| normal_derivative_on_side(&state.u, s))
        .collect();
    let scenario = state.scenario;
    let rhs = 2.0
        * (eta + 1.0)
        * integrate_boundary(&g, |side, k, pos| {
            let (px, py) = g.coords(k);
            let xv = x.eval(px, py);
            let dg = scenario.extension_gradient(px, py);
            let dn = sides[Side::ALL.iter().position(|&s| s == side).unwrap()][pos];
            dn * (xv[0] * dg[0] + xv[1] * dg[1])
        });
    InnerVariation {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    }
}

/// One classical Runge–Kutta step of `dΦ/dt = X(Φ)`.
fn rk4(x: &TestVectorField, p: [f64; 2], t: f64) -> [f64; 2] {
    let k1 = x.eval(p[0], p[1]);
    let k2 = x.eval(p[0] + 0.5 * t * k1[0], p[1] + 0.5 * t * k1[1]);
    let k3 = x.eval(p[0] + 0.5 * t * k2[0], p[1] + 0.5 * t * k2[1]);
    let k4 = x.eval(p[0] + t * k3[0], p[1] + t * k3[1]);
    [
        p[0] + t / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        p[1] + t / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Energy of `((u − G)∘Φ_s + G, v∘Φ_s)` with boundary values re-imposed.
fn deformed_energy(state: &ATState, x: &TestVectorField, s: f64) -> Result<f64> {
    let g = *state.grid();
    let scenario = state.scenario;
    let mut u = Vec::with_capacity(g.node_count());
    let mut v = Vec::with_capacity(g.node_count());
    for k in 0..g.node_count() {
        let (px, py) = g.coords(k);
        if g.is_boundary_node(k) {
            u.push(scenario.boundary_value(px, py));
            v.push(1.0);
            continue;
        }
        let [qx, qy] = rk4(x, [px, py], s);
        let (uq, vq) = match (state.u.sample(qx, qy), state.v.sample(qx, qy)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::FlowLeftDomain { x: qx, y: qy }),
        };
        u.push(uq - scenario.extension(qx, qy) + scenario.extension(px, py));
        v.push(vq);
    }
    let u = ScalarField::new(g, u)?;
    let v = ScalarField::new(g, v)?;
    Ok(energy_of(&state.params, &u, &v).total)
}

/// Central difference `[E(·∘Φ_{−t}) − E(·∘Φ_t)] / (2t)`: the derivative of
/// the energy along the push-forward by the flow of X.
pub fn inner_variation_flow(state: &ATState, x: &TestVectorField, t: f64) -> Result<f64> {
    if x.is_zero() {
        return Ok(0.0);
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParams(format!("flow step must be positive, got {t}")));
    }
    let minus = deformed_energy(state, x, -t)?;
    let plus = deformed_energy(state, x, t)?;
    Ok((minus - plus) / (2.0 * t))
}

/// `Σ (Id − n⊗n) : DX |∇w| h²` over cells with `|∇w| ≥ 1e−12 max|∇w|`,
/// `n = ∇w / |∇w|`, `w = v − v²/2`.
pub fn varifold_first_variation(state: &ATState, x: &TestVectorField) -> f64 {
    let g = *state.grid();
    let grad = cell_gradient(&w_field(&state.v));
    let mag = grad_w_magnitude(&state.v);
    let mags = mag.values();
    let max = mags.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    let theta = 1e-12 * max;
    parallel::sum_by(g.cell_count(), |c| {
        let m = mags[c];
        if m < theta {
            return 0.0;
        }
        let [a, b] = grad.at(c);
        let n = [a / m, b / m];
        let (cx, cy) = g.cell_center(c);
        let dx = x.jacobian(cx, cy);
        let tr = dx[0][0] + dx[1][1];
        let ndn = n[0] * (dx[0][0] * n[0] + dx[0][1] * n[1]) + n[1] * (dx[1][0] * n[0] + dx[1][1] * n[1]);
        (tr - ndn) * m
    }) * g.h()
        * g.h()
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// First inner variation of the sharp-interface energy for a piecewise
/// constant limit jumping across a horizontal segment: `∫ ∂₁X₁ dℋ¹` along it.
pub fn ms_inner_variation_reference(domain: &Domain, seg: &Segment, x: &TestVectorField) -> Result<f64> {
    let tol = 1e-12 * domain.width().max(domain.height());
    let inside = seg.a < seg.b
        && seg.a >= domain.x0 - tol
        && seg.b <= domain.x1 + tol
        && seg.y >= domain.y0 - tol
        && seg.y <= domain.y1 + tol;
    if !inside {
        return Err(Error::SegmentOutsideDomain {
            a: seg.a,
            b: seg.b,
            y: seg.y,
        });
    }
    let (mid, half) = (0.5 * (seg.a + seg.b), 0.5 * seg.length());
    Ok(half
        * GAUSS5
            .iter()
            .map(|&(s, w)| w * x.jacobian(mid + half * s, seg.y)[0][0])
            .sum::<f64>())
}

/// `I(φ) = Σ c |∇u|² φ̄ h² + Σ c ū (∇u · ∇φ) h²` with `c = η + ⟨v²⟩`; vanishes
/// at continuous critical points for every φ with zero trace.
pub fn anzellotti_residual(state: &ATState, phi: &ScalarField) -> Result<f64> {
    let g = *state.grid();
    if phi.grid() != state.grid() {
        return Err(Error::InvalidGrid("test function lives on a different grid".into()));
    }
    for k in g.boundary_nodes() {
        let value = phi.values()[k];
        if value != 0.0 {
            return Err(Error::TestFunctionNotZeroOnBoundary { node: k, value });
        }
    }
    let eta = state.params.eta();
    let gu = cell_gradient(&state.u);
    let gp = cell_gradient(phi);
    let (ubar, v2, pbar) = (
        cell_average(&state.u),
        cell_average(&state.v.map(|v| v * v)),
        cell_average(phi),
    );
    Ok(parallel::sum_by(g.cell_count(), |c| {
        let coeff = eta + v2[c];
        let du = gu.at(c);
        let dp = gp.at(c);
        coeff * ((du[0] * du[0] + du[1] * du[1]) * pbar[c] + ubar[c] * (du[0] * dp[0] + du[1] * dp[1]))
    }) * g.h()
        * g.h())
}

/// Test functions vanishing on ∂Ω: the bubble `b = Π (x − x0)(x1 − x)…`
/// normalized to 1 at the centre, and `b` times the centred `y` coordinate.
pub fn anzellotti_test_functions(grid: crate::grid::Grid) -> Vec<(&'static str, ScalarField)> {
    let d = grid.domain();
    let (cx, cy) = (0.5 * (d.x0 + d.x1), 0.5 * (d.y0 + d.y1));
    let (hx, hy) = (0.5 * d.width(), 0.5 * d.height());
    let bubble = move |x: f64, y: f64| {
        let sx = (x - cx) / hx;
        let sy = (y - cy) / hy;
        (1.0 - sx * sx) * (1.0 - sy * sy)
    };
    let mut out = vec![
        ("bubble", ScalarField::from_fn(grid, bubble)),
        (
            "bubble_y",
            ScalarField::from_fn(grid, move |x, y| bubble(x, y) * (y - cy) / hy),
        ),
    ];
    // rounding can leave ±1e−17 on the boundary
    for (_, f) in &mut out {
        for k in grid.boundary_nodes() {
            f.values_mut()[k] = 0.0;
        }
    }
    out
}

/// `K × K` block sums of the elastic measure `c ∇u⊗∇u h²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuBlocks {
    pub k: usize,
    /// Row-major, block `(i, j)` at `j K + i`.
    pub blocks: Vec<Sym2>,
    /// `Σ ∇u_ref⊗∇u_ref h²` over the same blocks.
    pub reference: Option<Vec<Sym2>>,
    /// `[x_lo, x_hi, y_lo, y_hi]` per block.
    pub bounds: Vec<[f64; 4]>,
}

impl MuBlocks {
    pub fn total_mass(&self) -> f64 {
        self.blocks.iter().map(Sym2::frobenius).sum()
    }

    /// Frobenius mass of the blocks lying entirely outside
    /// `|y − y_c| ≤ half_width`.
    pub fn mass_outside_strip(&self, y_c: f64, half_width: f64) -> f64 {
        self.blocks
            .iter()
            .zip(&self.bounds)
            .filter(|(_, b)| b[2] >= y_c + half_width - 1e-12 || b[3] <= y_c - half_width + 1e-12)
            .map(|(m, _)| m.frobenius())
            .sum()
    }
}

/// Block `(i, j)` collects cells `(ci, cj)` with `ci / ⌊cells_x / K⌋ = i`;
/// the last block row and column absorb any remainder.
pub fn mu_blocks(state: &ATState, k: usize, reference: Option<&ScalarField>) -> Result<MuBlocks> {
    if k == 0 {
        return Err(Error::InvalidBlockCount);
    }
    let g = *state.grid();
    if let Some(r) = reference {
        if r.grid() != state.grid() {
            return Err(Error::InvalidGrid("reference field lives on a different grid".into()));
        }
    }
    let (cx, cy) = (g.cells_x(), g.cells_y());
    let (bx, by) = ((cx / k).max(1), (cy / k).max(1));
    let block_of = |ci: usize, cj: usize| (cj / by).min(k - 1) * k + (ci / bx).min(k - 1);
    let h2 = g.h() * g.h();
    let eta = state.params.eta();
    let gu = cell_gradient(&state.u);
    let v2 = cell_average(&state.v.map(|v| v * v));
    let gr = reference.map(cell_gradient);

    let mut blocks = vec![Sym2::ZERO; k * k];
    let mut refs = vec![Sym2::ZERO; k * k];
    for (c, &v2c) in v2.iter().enumerate() {
        let (ci, cj) = g.cell_ij(c);
        let b = block_of(ci, cj);
        blocks[b] = blocks[b].add(&Sym2::outer(gu.at(c)).scale((eta + v2c) * h2));
        if let Some(gr) = &gr {
            refs[b] = refs[b].add(&Sym2::outer(gr.at(c)).scale(h2));
        }
    }
    let d = g.domain();
    let h = g.h();
    let edge = |n: usize, size: usize, total: usize, origin: f64| -> (f64, f64) {
        let lo = (n * size).min(total);
        let hi = if n == k - 1 { total } else { ((n + 1) * size).min(total) };
        (origin + lo as f64 * h, origin + hi as f64 * h)
    };
    let bounds = (0..k * k)
        .map(|b| {
            let (i, j) = (b % k, b / k);
            let (x_lo, x_hi) = edge(i, bx, cx, d.x0);
            let (y_lo, y_hi) = edge(j, by, cy, d.y0);
            [x_lo, x_hi, y_lo, y_hi]
        })
        .collect();
    Ok(MuBlocks {
        k,
        blocks,
        reference: gr.map(|_| refs),
        bounds,
    })
}

/// `Θ̂ = −(1/L) Σ T h²` with T from [`energy_stress_tensor`], over cells with centres in
/// `{|y − y_c| ≤ half_width, a + margin ≤ x ≤ b − margin}`, `L` the width of
/// the retained columns.
pub fn theta_strip_estimate(state: &ATState, seg: &Segment, half_width: f64, tip_margin: f64) -> Result<Sym2> {
    theta_with_tensor(state, &energy_stress_tensor(state), seg, half_width, tip_margin)
}

fn theta_with_tensor(
    state: &ATState,
    t: &CellTensorField,
    seg: &Segment,
    half_width: f64,
    tip_margin: f64,
) -> Result<Sym2> {
    let g = *state.grid();
    let d = g.domain();
    let tol = 1e-9 * g.h();
    if seg.y - half_width < d.y0 - tol || seg.y + half_width > d.y1 + tol {
        return Err(Error::StripOutsideDomain(format!(
            "|y - {}| <= {half_width} leaves [{}, {}]",
            seg.y, d.y0, d.y1
        )));
    }
    let (xa, xb) = (seg.a + tip_margin, seg.b - tip_margin);
    if xa < d.x0 - tol || xb > d.x1 + tol || xa >= xb {
        return Err(Error::StripOutsideDomain(format!(
            "x range [{xa}, {xb}] is empty or leaves [{}, {}]",
            d.x0, d.x1
        )));
    }
    let cols: Vec<usize> = (0..g.cells_x())
        .filter(|&ci| {
            let x = g.cell_center(g.cell(ci, 0)).0;
            x >= xa - tol && x <= xb + tol
        })
        .collect();
    let rows: Vec<usize> = (0..g.cells_y())
        .filter(|&cj| (g.cell_center(g.cell(0, cj)).1 - seg.y).abs() <= half_width + tol)
        .collect();
    if cols.is_empty() || rows.is_empty() {
        return Err(Error::StripOutsideDomain("strip contains no cells".into()));
    }
    let tv = t.values();
    let mut sum = Sym2::ZERO;
    for &cj in &rows {
        for &ci in &cols {
            sum = sum.add(&tv[g.cell(ci, cj)]);
        }
    }
    let h = g.h();
    let l_eff = cols.len() as f64 * h;
    Ok(sum.scale(-h * h / l_eff))
}

/// `|∂_ν u|² + ε |∂_ν v|²` at a boundary node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundarySample {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

pub fn boundary_integrand(state: &ATState) -> Vec<BoundarySample> {
    let g = *state.grid();
    let eps = state.params.eps();
    let mut out = Vec::new();
    for side in Side::ALL {
        let du = normal_derivative_on_side(&state.u, side);
        let dv = normal_derivative_on_side(&state.v, side);
        for ((k, a), b) in g.side_nodes(side).into_iter().zip(du).zip(dv) {
            let (x, y) = g.coords(k);
            out.push(BoundarySample {
                x,
                y,
                value: a * a + eps * b * b,
            });
        }
    }
    out
}

/// Which diagnostics to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagnosticToggles {
    pub inner_variation: bool,
    pub flow: bool,
    pub varifold: bool,
    pub anzellotti: bool,
    pub mu_blocks: bool,
    pub theta: bool,
    pub boundary: bool,
}

impl DiagnosticToggles {
    pub const NAMES: [&'static str; 7] = [
        "inner_variation",
        "flow",
        "varifold",
        "anzellotti",
        "mu_blocks",
        "theta",
        "boundary",
    ];

    pub fn all() -> Self {
        Self::uniform(true)
    }

    pub fn none() -> Self {
        Self::uniform(false)
    }

    fn uniform(b: bool) -> Self {
        DiagnosticToggles {
            inner_variation: b,
            flow: b,
            varifold: b,
            anzellotti: b,
            mu_blocks: b,
            theta: b,
            boundary: b,
        }
    }

    /// `all`, `none`, or a comma-separated subset of [`Self::NAMES`].
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => return Ok(Self::all()),
            "none" | "" => return Ok(Self::none()),
            _ => {}
        }
        let mut t = Self::none();
        for name in s.split(',').map(str::trim) {
            let slot = match name {
                "inner_variation" => &mut t.inner_variation,
                "flow" => &mut t.flow,
                "varifold" => &mut t.varifold,
                "anzellotti" => &mut t.anzellotti,
                "mu_blocks" => &mut t.mu_blocks,
                "theta" => &mut t.theta,
                "boundary" => &mut t.boundary,
                other => {
                    return Err(Error::config(
                        "diagnostics",
                        format!("unknown diagnostic `{other}`, expected one of {:?}", Self::NAMES),
                    ))
                }
            };
            *slot = true;
        }
        Ok(t)
    }
}

impl Default for DiagnosticToggles {
    fn default() -> Self {
        Self::all()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnoseOptions {
    pub mu_k: usize,
    /// Flow step; the grid spacing when `None`.
    pub flow_t: Option<f64>,
    /// Strip half-width and tip margin in units of ε.
    pub strip_factor: f64,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        DiagnoseOptions {
            mu_k: 10,
            flow_t: None,
            strip_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldDiagnostics {
    pub field: TestVectorField,
    pub assembled: Option<InnerVariation>,
    pub flow: Option<f64>,
    pub varifold: Option<f64>,
    pub ms_reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnzellottiEntry {
    pub phi: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub scenario: String,
    pub energy: EnergyReport,
    pub fields: Vec<FieldDiagnostics>,
    pub anzellotti: Vec<AnzellottiEntry>,
    pub boundary_integrand: Option<Vec<BoundarySample>>,
    pub mu_blocks: Option<MuBlocks>,
    pub theta: Option<Sym2>,
    /// Why Θ̂ was not computed, if toggled on.
    pub theta_skipped: Option<String>,
}

pub fn diagnose(
    state: &ATState,
    energy: EnergyReport,
    toggles: &DiagnosticToggles,
    opts: &DiagnoseOptions,
) -> Result<DiagnosticsReport> {
    let g = *state.grid();
    let domain = g.domain();
    let reference = state.scenario.reference(&domain);
    let tensor = (toggles.inner_variation || toggles.theta).then(|| energy_stress_tensor(state));
    let t = opts.flow_t.unwrap_or(g.h());

    let mut fields = Vec::new();
    if toggles.inner_variation || toggles.flow || toggles.varifold {
        for x in TestVectorField::catalog(domain) {
            fields.push(FieldDiagnostics {
                field: x,
                assembled: tensor
                    .as_ref()
                    .filter(|_| toggles.inner_variation)
                    .map(|tt| inner_variation_with_tensor(state, tt, &x)),
                flow: if toggles.flow {
                    Some(inner_variation_flow(state, &x, t)?)
                } else {
                    None
                },
                varifold: toggles.varifold.then(|| varifold_first_variation(state, &x)),
                ms_reference: match (toggles.varifold, reference.segment) {
                    (true, Some(seg)) => Some(ms_inner_variation_reference(&domain, &seg, &x)?),
                    _ => None,
                },
            });
        }
    }

    let mut anzellotti = Vec::new();
    if toggles.anzellotti {
        for (name, phi) in anzellotti_test_functions(g) {
            anzellotti.push(AnzellottiEntry {
                phi: name,
                value: anzellotti_residual(state, &phi)?,
            });
        }
    }

    let mu = if toggles.mu_blocks {
        let limit = state.scenario;
        let u_ref = ScalarField::from_fn(g, move |x, y| limit.limit_u(x, y));
        Some(mu_blocks(state, opts.mu_k, Some(&u_ref))?)
    } else {
        None
    };

    let (mut theta, mut theta_skipped) = (None, None);
    if toggles.theta {
        match (reference.segment, tensor.as_ref()) {
            (Some(seg), Some(tt)) => {
                let w = opts.strip_factor * state.params.eps();
                match theta_with_tensor(state, tt, &seg, w, w) {
                    Ok(th) => theta = Some(th),
                    Err(e) => theta_skipped = Some(e.to_string()),
                }
            }
            _ => theta_skipped = Some("scenario has no reference jump segment".into()),
        }
    }

    Ok(DiagnosticsReport {
        scenario: state.scenario.to_string(),
        energy,
        fields,
        anzellotti,
        boundary_integrand: toggles.boundary.then(|| boundary_integrand(state)),
        mu_blocks: mu,
        theta,
        theta_skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::ATParams;
    use crate::grid::{Grid, GridSpec};
    use crate::scenarios::Scenario;

    fn sq(n: usize) -> Grid {
        Grid::new(GridSpec::new(n, n, Domain::symmetric_square())).unwrap()
    }

    fn st(g: Grid, u: impl Fn(f64, f64) -> f64 + Sync, v: impl Fn(f64, f64) -> f64 + Sync) -> ATState {
        let p = ATParams::new(0.1, 1e-3).unwrap();
        ATState::sampled(
            Scenario::Const { c: 0.0 },
            p,
            ScalarField::from_fn(g, u),
            ScalarField::from_fn(g, v),
        )
        .unwrap()
    }

    #[test]
    fn catalog_is_tangent_and_jacobian_matches() {
        let d = Domain {
            x0: -1.0,
            x1: 2.0,
            y0: 0.5,
            y1: 3.5,
        };
        let cat = TestVectorField::catalog(d);
        assert_eq!(cat.len(), 10);
        for x in &cat {
            for t in [0.0, 0.3, 1.0] {
                let (px, py) = (d.x0 + t * d.width(), d.y0 + t * d.height());
                assert!(x.eval(d.x0, py)[0].abs() < 1e-12 && x.eval(d.x1, py)[0].abs() < 1e-12);
                assert!(x.eval(px, d.y0)[1].abs() < 1e-12 && x.eval(px, d.y1)[1].abs() < 1e-12);
            }
            let (px, py, e) = (0.37, 1.9, 1e-6);
            let j = x.jacobian(px, py);
            for (i, row) in j.iter().enumerate() {
                let dxf = (x.eval(px + e, py)[i] - x.eval(px - e, py)[i]) / (2.0 * e);
                let dyf = (x.eval(px, py + e)[i] - x.eval(px, py - e)[i]) / (2.0 * e);
                assert!((row[0] - dxf).abs() < 1e-7 && (row[1] - dyf).abs() < 1e-7);
            }
            assert_eq!(TestVectorField::parse(&x.id(), d).unwrap(), *x);
        }
        assert!(matches!(
            TestVectorField::parse("p=z,q=1", d),
            Err(Error::UnknownTestField(_))
        ));
    }

    #[test]
    fn stress_examples() {
        let b = 1.3;
        let s = st(sq(9), |x, _| b * x, |_, _| 1.0);
        let eta = s.params.eta();
        for t in stress_tensor(&s).values() {
            assert!((t.xx - (1.0 + eta) * b * b).abs() < 1e-12);
            assert!((t.yy + (1.0 + eta) * b * b).abs() < 1e-12);
            assert!(t.xy.abs() < 1e-12);
        }
        let s = st(sq(9), |_, _| 2.0, |_, _| 0.5);
        let eps = s.params.eps();
        for (t, expect) in [
            (stress_tensor(&s), -1.0 / (4.0 * eps)),
            (energy_stress_tensor(&s), -1.0 / (16.0 * eps)),
        ] {
            for t in t.values() {
                assert!((t.xx - expect).abs() < 1e-12 && (t.yy - expect).abs() < 1e-12 && t.xy == 0.0);
            }
        }
    }

    #[test]
    fn zero_field_gives_zero_everywhere() {
        let s = st(sq(11), |x, y| x * y, |x, _| 0.5 + 0.4 * x);
        let z = TestVectorField::zero(s.grid().domain());
        assert_eq!(inner_variation_assembled(&s, &z).lhs, 0.0);
        assert_eq!(inner_variation_flow(&s, &z, 0.1).unwrap(), 0.0);
        assert_eq!(varifold_first_variation(&s, &z), 0.0);
        let seg = Segment {
            a: -0.5,
            b: 0.5,
            y: 0.0,
        };
        assert_eq!(ms_inner_variation_reference(&s.grid().domain(), &seg, &z).unwrap(), 0.0);
    }

    #[test]
    fn ms_reference_examples() {
        let d = Domain::symmetric_square();
        let x = TestVectorField::new(d, Weight::X, Weight::One);
        let half = Segment {
            a: -0.5,
            b: 0.5,
            y: 0.0,
        };
        assert!((ms_inner_variation_reference(&d, &half, &x).unwrap() - 0.75).abs() < 1e-14);
        let full = Segment {
            a: -1.0,
            b: 1.0,
            y: 0.0,
        };
        for f in TestVectorField::catalog(d) {
            assert!(ms_inner_variation_reference(&d, &full, &f).unwrap().abs() < 1e-14);
        }
        let out = Segment {
            a: -0.5,
            b: 1.5,
            y: 0.0,
        };
        assert!(matches!(
            ms_inner_variation_reference(&d, &out, &x),
            Err(Error::SegmentOutsideDomain { .. })
        ));
    }

    #[test]
    fn anzellotti_examples() {
        let g = sq(11);
        let s = st(g, |_, _| 4.0, |x, y| 1.0 - 0.3 * x * y);
        for (_, phi) in anzellotti_test_functions(g) {
            assert_eq!(anzellotti_residual(&s, &phi).unwrap(), 0.0);
        }
        let s = st(g, |x, y| x + y * y, |_, _| 1.0);
        assert_eq!(anzellotti_residual(&s, &ScalarField::constant(g, 0.0)).unwrap(), 0.0);
        assert!(matches!(
            anzellotti_residual(&s, &ScalarField::constant(g, 1.0)),
            Err(Error::TestFunctionNotZeroOnBoundary { .. })
        ));
    }

    #[test]
    fn mu_blocks_affine() {
        let g = Grid::new(GridSpec::new(9, 9, Domain::unit_square())).unwrap();
        let (b, c) = (0.7, -1.1);
        let s = st(g, move |x, y| b * x + c * y, |_, _| 1.0);
        let m = mu_blocks(&s, 2, None).unwrap();
        let f = (1.0 + s.params.eta()) * 0.25;
        for blk in &m.blocks {
            assert!((blk.xx - f * b * b).abs() < 1e-12);
            assert!((blk.xy - f * b * c).abs() < 1e-12);
            assert!((blk.yy - f * c * c).abs() < 1e-12);
        }
        assert!(matches!(mu_blocks(&s, 0, None), Err(Error::InvalidBlockCount)));
        let zero = mu_blocks(&st(g, |_, _| 1.0, |_, _| 1.0), 3, None).unwrap();
        assert!(zero.blocks.iter().all(|b| *b == Sym2::ZERO));
        // 8 cells in 3 blocks: widths 2, 2 and 4 cells
        assert_eq!(zero.bounds[8], [0.5, 1.0, 0.5, 1.0]);
    }
}
