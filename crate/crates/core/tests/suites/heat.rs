use nalgebra::DMatrix;
use posnet::heat::heat_semigroup_apply;
use posnet::{GridFunction, HeatNetwork, SpectralBasis};

use crate::oracles::{crank_nicolson, tridiagonal};

fn single(c: f64, q: f64) -> HeatNetwork {
    HeatNetwork::new(vec![c], vec![q], DMatrix::zeros(1, 1), DMatrix::from_element(1, 1, 1.0)).unwrap()
}

#[test]
fn modal_semigroup_matches_crank_nicolson() {
    let (c, q) = (0.7, 0.4);
    let net = single(c, q);
    let points = 201;
    let basis = SpectralBasis::new(64, points).unwrap();
    let h = GridFunction::from_fn(1, points, |_, x| (1.0 - x).powi(2) * (1.0 + 2.0 * x) + 0.3 * (3.0 * x).cos());
    for t in [0.02, 0.1, 0.4] {
        let (modal, _) = heat_semigroup_apply(&net, &basis, &h, t).unwrap();
        let fd = crank_nicolson(h.edge(0), c, q, t, 400);
        let err = modal.edge(0).iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 2e-4, "t = {t}: {err}");
    }
}

#[test]
fn lift_profile_solves_its_boundary_value_problem() {
    // xi'' = s^2 xi, xi'(0) = 0, xi'(1) = 1, by second-order finite differences.
    let net = single(2.0, 0.5);
    let mu = 1.5;
    let s2 = (mu + 0.5) / 2.0;
    let n = 2001;
    let h = 1.0 / (n - 1) as f64;
    // Ghost nodes: z_{-1} = z_1 and z_n = z_{n-2} + 2 h.
    let lower: Vec<f64> = (0..n).map(|i| if i == n - 1 { 2.0 } else { 1.0 }).collect();
    let upper: Vec<f64> = (0..n).map(|i| if i == 0 { 2.0 } else { 1.0 }).collect();
    let diag = vec![-2.0 - s2 * h * h; n];
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = -2.0 * h;
    let z = tridiagonal(&lower, &diag, &upper, &rhs);
    for p in (0..n).step_by(100) {
        let x = p as f64 * h;
        let exact = net.xi(mu, 0, x).unwrap();
        assert!((z[p] - exact).abs() < 1e-5 * exact.abs().max(1.0), "x = {x}");
    }
}

#[test]
fn lift_value_at_unit_constants() {
    let net = HeatNetwork::path([1.0; 3], [1.0; 3], 1.0).unwrap();
    let s = 2f64.sqrt();
    let xi0 = net.xi(1.0, 0, 0.0).unwrap();
    assert!((xi0 - 1.0 / (s * s.sinh())).abs() < 1e-15);
    assert!((xi0 - 0.365417).abs() < 1e-6);
}

#[test]
fn frequencies_at_or_below_the_floor_are_rejected() {
    let net = single(1.0, 0.3);
    assert!(net.xi(-0.3, 0, 0.5).is_err());
    assert!(net.xi(-0.29, 0, 0.5).is_ok());
    assert!(net.transfer(f64::NAN).is_err());
}
