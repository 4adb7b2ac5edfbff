use posnet::cone::{cone_member, polar_is_trivial, recheck_certificate};
use posnet::Certificate;
use proptest::prelude::*;

use crate::oracles::dot;

fn generators(d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-4i32..=4, d).prop_map(|v| v.into_iter().map(f64::from).collect()), 1..7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nonnegative_combinations_are_members(
        (gens, coeffs) in (1usize..=4).prop_flat_map(generators)
            .prop_flat_map(|g| { let k = g.len(); (Just(g), prop::collection::vec(0.0f64..3.0, k)) })
    ) {
        let d = gens[0].len();
        let t: Vec<f64> = (0..d).map(|i| gens.iter().zip(&coeffs).map(|(g, c)| c * g[i]).sum()).collect();
        let r = cone_member(&gens, &t, 1e-9).unwrap();
        prop_assert!(r.verdict);
        prop_assert!(r.coefficients[0].iter().all(|&c| c >= -1e-12));
        prop_assert!(r.residual <= 1e-8);
    }

    #[test]
    fn separating_certificates_separate(
        (gens, t) in (1usize..=4).prop_flat_map(|d| (generators(d), prop::collection::vec(-4i32..=4, d)))
    ) {
        let t: Vec<f64> = t.into_iter().map(f64::from).collect();
        let r = cone_member(&gens, &t, 1e-9).unwrap();
        if let Some(cert @ Certificate::Separating { phi, witness }) = &r.certificate {
            prop_assert!(recheck_certificate(&gens, cert, 1e-9).is_ok());
            prop_assert!((dot(&t, phi) - witness).abs() < 1e-9);
            prop_assert!(phi.iter().all(|v| v.abs() <= 1.0 + 1e-12));
        } else {
            prop_assert!(r.verdict);
        }
    }
}

#[test]
fn opposite_pairs_span_the_line_but_not_the_plane() {
    assert!(polar_is_trivial(&[vec![2.0], vec![-1.0]], 1, 1e-9).unwrap().verdict);
    let r = polar_is_trivial(&[vec![1.0, 0.0], vec![-1.0, 0.0]], 2, 1e-9).unwrap();
    assert!(!r.verdict);
    let d = r.direction.unwrap();
    assert_eq!(d.index, 1);
}

#[test]
fn dimension_mismatch_is_an_error() {
    assert!(cone_member(&[vec![1.0, 2.0]], &[1.0], 1e-9).is_err());
    assert!(cone_member(&[vec![1.0]], &[1.0], 0.0).is_err());
}
