use posnet::appendix::{exponential_family_density_check, mirakjan_apply, MirakjanEval, Sampler};
use posnet::GridFunction;

#[test]
fn step_dual_with_negative_part_has_positive_pairings() {
    // g = -1 on [0, 1/2), +1 on [1/2, 1]:
    // int exp(-n (1 - x)) g(x) dx = (1 - exp(-n / 2))^2 / n > 0.
    let points = 4001;
    let g = GridFunction::from_fn(1, points, |_, x| if x < 0.5 { -1.0 } else { 1.0 });
    let orders: Vec<usize> = (1..=40).collect();
    let r = &exponential_family_density_check(1.0, 2.0, &[g], &orders).unwrap()[0];
    for &(n, s) in &r.pairings {
        let exact = (1.0 - (-(n as f64) / 2.0).exp()).powi(2) / n as f64;
        // The jump sits on a node, so the trapezoid rule is off by h e^{-n/2}.
        assert!((s - exact).abs() < 2.0 / (points - 1) as f64, "n = {n}: {s} vs {exact}");
        assert!(s > 0.0);
    }
    assert!(r.flagged);
    assert!((r.negative_part - 0.5f64.sqrt()).abs() < 1e-3);
}

#[test]
fn plain_sampler_reproduces_constants_and_clamps() {
    let cfg = MirakjanEval::new(20, 2.0).unwrap();
    assert_eq!(cfg.phi_inv(10.0), 0.0);
    for x in [0.0, 0.5, 1.0] {
        let v = mirakjan_apply(&cfg, &Sampler::Plain(&|_| 3.0), x).unwrap();
        assert!((v.value - 3.0).abs() < 1e-12);
        assert!(v.tail <= cfg.tail_tol);
    }
}

#[test]
fn operator_is_monotone() {
    let cfg = MirakjanEval::new(24, 0.8).unwrap();
    let f = |x: f64| x.sin();
    let g = |x: f64| x.sin() + 0.1 * x * x;
    for p in 0..=20 {
        let x = p as f64 / 20.0;
        let a = mirakjan_apply(&cfg, &Sampler::Plain(&f), x).unwrap().value;
        let b = mirakjan_apply(&cfg, &Sampler::Plain(&g), x).unwrap().value;
        assert!(a <= b + 1e-15);
    }
}
