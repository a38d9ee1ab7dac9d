//! Invariants over randomly drawn chamber points.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bcn_deform::hamiltonians::{h_k, h_k_local, h_main, lax_local};
use bcn_deform::local::{local_of_z, wrap_angle, z_of_local, CouplingParams, LocalPoint};
use bcn_deform::momentum::{admissible, constraint_residual};
use bcn_deform::sampling::{random_interior, DEFAULT_PARAMS};
use bcn_deform::verify::forms::{canonical_bracket, omega_local_form};
use bcn_deform::K_local;

fn point() -> impl Strategy<Value = (CouplingParams, LocalPoint)> {
    (1usize..=4, any::<bool>(), any::<u64>()).prop_map(|(n, flip, seed)| {
        let x = if flip { -DEFAULT_PARAMS.x } else { DEFAULT_PARAMS.x };
        let params = CouplingParams { n, x, ..DEFAULT_PARAMS };
        let pt = random_interior(x, n, &mut ChaCha8Rng::seed_from_u64(seed));
        (params, pt)
    })
}

fn vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn section_lies_on_the_constraint_surface((params, pt) in point()) {
        let k = K_local(&params, &pt).unwrap();
        prop_assert!(constraint_residual(&k, &params) < 1e-10);
    }

    #[test]
    fn chart_round_trip((params, pt) in point()) {
        let back = local_of_z(&params, &z_of_local(&params, &pt).unwrap()).unwrap();
        for (a, b) in pt.p_hat.iter().zip(&back.p_hat) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in pt.q_hat.iter().zip(&back.q_hat) {
            prop_assert!(wrap_angle(a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn interior_points_are_admissible((params, pt) in point()) {
        prop_assert!(admissible(params.x, &pt.p_hat));
    }

    #[test]
    fn lax_matrix_is_positive_and_charts_agree((params, pt) in point()) {
        let l = lax_local(&params, &pt).unwrap();
        prop_assert!(l.hermiticity_residual() < 1e-12);
        prop_assert!(l.is_positive_definite());
        let z = z_of_local(&params, &pt).unwrap();
        let h = h_main(&params, &pt).unwrap();
        prop_assert!((h - h_k_local(&params, &pt, 1).unwrap()).abs() < 1e-10 * h.abs().max(1.0));
        for k in 1..=params.n {
            let a = h_k_local(&params, &pt, k).unwrap();
            let b = h_k(&params, &z, k).unwrap();
            prop_assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
        }
    }

    #[test]
    fn symplectic_form_and_bracket_are_antisymmetric(a in vector(6), b in vector(6)) {
        prop_assert_eq!(omega_local_form(&a, &b), -omega_local_form(&b, &a));
        prop_assert_eq!(canonical_bracket(&a, &b), -canonical_bracket(&b, &a));
        prop_assert_eq!(omega_local_form(&a, &a), 0.0);
    }
}
