use nalgebra::DVector;
use posnet::controllability::{decide_theorem1, FrequencyProbe, ProbeSettings, TransportEdgeFamily};
use posnet::transport::transfer_kinetic;
use posnet::{Decision, GridFunction, KineticKernel, NetworkGraph, PositiveMatrix, TransportSystem};
use proptest::prelude::*;
use rand::Rng;

use crate::oracles::{rng, strongly_connected};

/// `max_{k, a} sum_{j into k} w_j sum_b omega_b ell_j(a, b)`.
fn kappa(g: &NetworkGraph, kernel: &KineticKernel) -> f64 {
    let w = kernel.weights();
    let q = kernel.nodes();
    let mut row = vec![vec![0.0; q]; g.n_vertices()];
    for (j, e) in g.edges().iter().enumerate() {
        for (a, slot) in row[e.head].iter_mut().enumerate() {
            *slot += e.weight * (0..q).map(|b| w[b] * kernel.ell[j][a][b]).sum::<f64>();
        }
    }
    row.iter().flatten().copied().fold(0.0, f64::max)
}

#[test]
fn kinetic_transfer_decays_at_the_fastest_velocity_rate() {
    let mut r = rng(21);
    let (v_min, v_max) = (0.5, 2.0);
    for _ in 0..10 {
        let n = r.gen_range(2..=5);
        let g = strongly_connected(&mut r, n, 2);
        let q = 16;
        let ell: Vec<Vec<Vec<f64>>> =
            (0..g.n_edges()).map(|_| (0..q).map(|_| (0..q).map(|_| r.gen_range(0.0..2.0)).collect()).collect()).collect();
        let kernel = KineticKernel::new(v_min, v_max, ell).unwrap();
        let k = kappa(&g, &kernel);
        let data: Vec<Vec<f64>> = (0..n).map(|_| (0..q).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
        let sup = data.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for mu in [1.0, 5.0, 20.0, 60.0] {
            let out = transfer_kinetic(&g, &kernel, mu, &data).unwrap();
            let norm = out.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(norm <= k * (-mu / v_max).exp() * sup * (1.0 + 1e-12));
        }
    }
    // Mass at the fastest velocity decays like exp(-mu / v_max), far above
    // exp(-mu / v_min) for large mu.
    let g = NetworkGraph::cycle(2).unwrap();
    let kernel = KineticKernel::uniform(2, v_min, v_max, 8).unwrap();
    let mut data = vec![vec![0.0; 8]; 2];
    data[0][7] = 1.0;
    let mu = 20.0;
    let out = transfer_kinetic(&g, &kernel, mu, &data).unwrap();
    let norm = out.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(norm > kappa(&g, &kernel) * (-mu / v_min).exp());
}

#[test]
fn single_node_kinetic_transfer_is_the_network_transfer() {
    let g = NetworkGraph::cycle(4).unwrap();
    let v = 0.8;
    let kernel = KineticKernel::uniform(4, v, v, 1).unwrap();
    let sys = TransportSystem::simple(g.clone(), v, PositiveMatrix::zeros(4, 1)).unwrap();
    let data: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64 + 0.5]).collect();
    for mu in [0.0, 0.3, 2.0] {
        let out = transfer_kinetic(&g, &kernel, mu, &data).unwrap();
        let a = sys.transfer(mu).unwrap();
        let d = DVector::from_iterator(4, data.iter().map(|r| r[0]));
        let expect = a.as_matrix() * d;
        for i in 0..4 {
            assert!((out[i][0] - expect[i]).abs() < 1e-14);
        }
    }
}

#[test]
fn sign_constrained_control_never_beats_the_positive_mode() {
    // A positive network driven by nonnegative controls stays in the orthant,
    // so its reachable set is never dense in the whole space.
    let mut r = rng(22);
    for _ in 0..20 {
        let n = r.gen_range(2..=5);
        let extra = r.gen_range(0..=n);
        let g = strongly_connected(&mut r, n, extra);
        let k = PositiveMatrix::new(nalgebra::DMatrix::identity(n, n)).unwrap();
        let sys = TransportSystem::simple(g, 1.0, k).unwrap();
        let family = TransportEdgeFamily(&sys);
        let probe = FrequencyProbe::auto(&family, &ProbeSettings::default()).unwrap();
        let v = decide_theorem1(&family, &probe, 1e-9).unwrap();
        assert_eq!(v.decision, Decision::NotControllable);
        assert!(v.recheck().is_ok());
    }
}

#[test]
fn impulse_travels_around_a_cycle() {
    let k = PositiveMatrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0]).unwrap();
    let sys = TransportSystem::simple(NetworkGraph::cycle(3).unwrap(), 1.0, k).unwrap();
    let points = 21;
    let dt = sys.exact_step(points).unwrap();
    let u = posnet::ControlSignal::new(0.2, vec![vec![1.0], vec![0.0]]).unwrap();
    let traj = sys.simulate_mild(&GridFunction::zeros(3, points), &u, 2.5, dt, true).unwrap();
    // Mass enters edge 1 during [0, 0.2], then moves one edge per unit time.
    let mass = |s: &GridFunction, j: usize| s.edge(j).iter().sum::<f64>();
    let at = |t: f64| &traj.states[(t / dt).round() as usize];
    assert!(mass(at(0.5), 0) > 0.0 && mass(at(0.5), 1) == 0.0);
    assert!(mass(at(1.5), 1) > 0.0 && mass(at(1.5), 0) == 0.0);
    assert!(mass(at(2.5), 2) > 0.0 && mass(at(2.5), 1) == 0.0);
    assert_eq!(traj.positivity_violations(0.0), 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kirchhoff_transfer_is_scaled_column_stochastic(seed in any::<u64>(), mu in -1.0f64..5.0, v in 0.2f64..3.0) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=6);
        let g = strongly_connected(&mut r, n, 3);
        let sys = TransportSystem::simple(g, v, PositiveMatrix::zeros(n, 1)).unwrap();
        let a = sys.transfer(mu).unwrap();
        let scale = (-mu / v).exp();
        for c in 0..n {
            let s: f64 = (0..n).map(|i| a[(i, c)]).sum();
            prop_assert!((s - scale).abs() <= 1e-12 * scale.max(1.0));
        }
    }
}
