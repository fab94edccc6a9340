use atcrit::energetics::{optimal_profile, sampled_profile_state};
use atcrit::scenarios::Segment;
use atcrit::solver::init_state_with_v;
use atcrit::variations::{inner_variation_assembled, inner_variation_flow, theta_strip_estimate};
use atcrit::*;

/// Full-span profile across `y = 0`: the closed forms `∫ 2ε v'² dy = 1` and
/// `∫ (ε v'² + (1 − v)²/4ε) dy = 1` give `Θ̂ = diag(1, 0)`. The jump of `u`
/// sits in the two cell rows touching `v = 0` and leaks `(h/ε)/(4ε)` of
/// elastic stress, hence the large ε.
#[test]
fn theta_of_analytic_profile() {
    let eps = 1.0;
    let domain = Domain {
        x0: -1.0,
        x1: 1.0,
        y0: -13.0,
        y1: 13.0,
    };
    let grid = Grid::with_max_spacing(domain, eps / 32.0).unwrap();
    let seg = Segment {
        a: -1.0,
        b: 1.0,
        y: 0.0,
    };
    let st = sampled_profile_state(grid, ATParams::new(eps, 1e-12).unwrap(), Scenario::crack(), seg);
    let theta = theta_strip_estimate(&st, &seg, 12.0 * eps, 0.0).unwrap();
    let err = theta.sub(&Sym2::diag(1.0, 0.0)).frobenius();
    assert!(err <= 0.02, "{theta:?}");
}

#[test]
fn theta_vanishes_without_phase_field() {
    let grid = Grid::with_max_spacing(Domain::symmetric_square(), 0.05).unwrap();
    let s = Scenario::Const { c: 0.3 };
    let st = ATState::new(
        s,
        ATParams::new(0.1, 0.01).unwrap(),
        s.extension_field(grid),
        ScalarField::constant(grid, 1.0),
    )
    .unwrap();
    let seg = Segment {
        a: -1.0,
        b: 1.0,
        y: 0.0,
    };
    let theta = theta_strip_estimate(&st, &seg, 0.5, 0.1).unwrap();
    assert_eq!(theta, Sym2::ZERO);
    assert!(theta_strip_estimate(&st, &seg, 1.5, 0.1).is_err());
}

/// For `u` critical given `v`, the flow derivative and the assembled
/// `rhs − lhs` are two discretizations of the same quantity; their gap
/// shrinks with `h` (and `t = h`).
#[test]
fn flow_and_assembled_variation_agree_under_refinement() {
    let eps = 0.2;
    let params = ATParams::new(eps, eps * eps).unwrap();
    let opts = SolverOptions::default();
    let domain = Domain::symmetric_square();
    let scenario = Scenario::crack();
    let x = TestVectorField::parse("p=x,q=y", domain).unwrap();
    let gaps: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&h| {
            let grid = Grid::with_max_spacing(domain, h).unwrap();
            let v = ScalarField::from_fn(grid, |px, py| {
                optimal_profile(eps, py.abs() + 0.3 * (1.0 - px * px)).max(0.1)
            });
            let st = init_state_with_v(scenario, grid, params, v, &opts).unwrap();
            let flow = inner_variation_flow(&st, &x, h).unwrap();
            (flow - inner_variation_assembled(&st, &x).derivative()).abs()
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < 0.6 * w[0]), "{gaps:?}");
}
