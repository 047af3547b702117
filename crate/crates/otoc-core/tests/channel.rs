mod common;

use common::*;
use otoc_core::channel::*;
use otoc_core::gates::*;
use otoc_core::linalg::{c, kron, max_abs_diff, trace, CMat, C64};
use otoc_core::montecarlo::sample_haar;
use otoc_core::multichain::kotoc_multichain;
use otoc_core::Gate;
use proptest::prelude::*;

fn local_unitaries(seed: u64) -> (CMat, CMat) {
    let mut r = rng(seed);
    (sample_haar(2, &mut r).unwrap(), sample_haar(3, &mut r).unwrap())
}

#[test]
fn channel_is_unital_trace_preserving_and_cp() {
    for seed in 0..5 {
        let g = haar_random(3, 2, seed).unwrap();
        let ch = build_channel(&g);
        assert!(ch.unitality_violation() < 1e-12);
        assert!(ch.trace_violation() < 1e-12);
        assert!(ch.choi_min_eigenvalue() > -1e-12);
    }
}

#[test]
fn swap_channel_projects_on_identity() {
    let g = swap(3).unwrap();
    let ch = build_channel(&g);
    let a = tuple(1, 3, 1, false).remove(0);
    let out = ch.apply(a.matrix());
    let want = CMat::identity(3, 3) * (a.trace() / 3.0);
    assert!(max_abs_diff(&out, &want) < 1e-12);
    let d = diagnose(&g, 1e-8).unwrap();
    assert_eq!(d.ergodicity_class, ErgodicityClass::MaximallyErgodic);
    assert!(d.lambda_sub.norm() < 1e-12);
    assert_eq!(d.dual_unitary, Some(true));
}

#[test]
fn product_gate_conjugates_locally() {
    let (ua, uc) = local_unitaries(3);
    let g = Gate::new(2, 3, kron(&ua, &uc)).unwrap();
    let ch = build_channel(&g);
    let a = random_hermitian(2, &mut rng(2));
    let want = &ua * &a * ua.adjoint();
    assert!(max_abs_diff(&ch.apply(&a), &want) < 1e-12);
    let d = diagnose(&g, 1e-8).unwrap();
    assert_eq!(d.ergodicity_class, ErgodicityClass::NonInteracting);
}

#[test]
fn identity_and_controlled_phase_classes() {
    let d = diagnose(&identity(2, 3).unwrap(), 1e-8).unwrap();
    assert_eq!(d.ergodicity_class, ErgodicityClass::NonInteracting);
    // diagonal-in-A coupling keeps every diagonal operator fixed
    let d = diagnose(&controlled_phase(3, 3, 1.1).unwrap(), 1e-8).unwrap();
    assert_eq!(d.ergodicity_class, ErgodicityClass::NonErgodic);
}

#[test]
fn haar_gate_is_ergodic_mixing() {
    let d = diagnose(&haar_random(3, 3, 7).unwrap(), 1e-8).unwrap();
    assert_eq!(d.ergodicity_class, ErgodicityClass::ErgodicMixing);
    assert!(d.lambda_sub.norm() > 0.0 && d.lambda_sub.norm() < 1.0);
    assert!(d.restricted_norm >= d.lambda_sub.norm() - 1e-12);
    assert!(diagnose(&haar_random(3, 3, 7).unwrap(), 0.5).is_err());
}

#[test]
fn operator_entropy_values() {
    assert!(operator_entropy(&identity(2, 2).unwrap()).abs() < 1e-12);
    assert!((operator_entropy(&swap(2).unwrap()) - 0.75).abs() < 1e-12);
    assert!((operator_entropy(&swap(3).unwrap()) - (1.0 - 1.0 / 9.0)).abs() < 1e-12);
    assert!((operator_entropy(&cnot()) - 0.5).abs() < 1e-12);
}

#[test]
fn mixing_bound_endpoints() {
    assert!(mixing_bound_from_entropy(1.0 - 1.0 / 9.0, 3, 3).unwrap() < 1e-7);
    assert_eq!(mixing_bound_from_entropy(0.5, 3, 2), None);
    assert!((mixing_bound_from_entropy(1.0 - 2.0 / 9.0, 3, 3).unwrap() - 1.0).abs() < 1e-12);
    assert!((mixing_bound_from_entropy(0.0, 3, 3).unwrap() - 8f64.sqrt()).abs() < 1e-12);
}

#[test]
fn dual_unitarity() {
    assert!(is_dual_unitary(&swap(2).unwrap(), 1e-10).unwrap());
    assert!(!is_dual_unitary(&identity(2, 2).unwrap(), 1e-10).unwrap());
    for i in 0..=10 {
        let j = -1.5 + 0.3 * i as f64;
        assert!(is_dual_unitary(&dual_unitary_qubit(j, None).unwrap(), 1e-10).unwrap());
        assert!(is_dual_unitary(&dual_unitary_qubit(j, Some(i)).unwrap(), 1e-10).unwrap());
    }
    assert!(!is_dual_unitary(&haar_random(2, 2, 1).unwrap(), 1e-10).unwrap());
    assert!(is_dual_unitary(&haar_random(2, 3, 1).unwrap(), 1e-10).is_err());
}

#[test]
fn v_j_matches_exponential() {
    // exp[−i(π/4 XX + π/4 YY + J ZZ)] through the Hermitian exponential
    let x = CMat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
    let y = CMat::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]);
    let z = CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]);
    for j in [0.0, 0.3, -1.2] {
        let h = kron(&x, &x) * c(std::f64::consts::FRAC_PI_4, 0.0)
            + kron(&y, &y) * c(std::f64::consts::FRAC_PI_4, 0.0)
            + kron(&z, &z) * c(j, 0.0);
        let want = otoc_core::linalg::expm_hermitian(&h, 1.0);
        assert!(max_abs_diff(&v_j(j), &want) < 1e-12);
    }
}

#[test]
fn library_determinism_and_shapes() {
    assert_eq!(haar_random(3, 3, 7).unwrap(), haar_random(3, 3, 7).unwrap());
    assert_ne!(haar_random(3, 3, 7).unwrap(), haar_random(3, 3, 8).unwrap());
    let s = swap(2).unwrap();
    let want = CMat::from_fn(4, 4, |r, col| if [(0, 0), (1, 2), (2, 1), (3, 3)].contains(&(r, col)) { c(1., 0.) } else { c(0., 0.) });
    assert_eq!(s.matrix(), &want);
    assert!(GateSpec::DuPerturbed { j: 0.4, eps: 0.1, seed: 2 }.build().is_ok());
    assert!(GateSpec::HaarRandom { d_a: 1, d_c: 2, seed: 0 }.build().is_err());
    assert!(!is_dual_unitary(&du_perturbed(0.4, 0.2, 3).unwrap(), 1e-6).unwrap());
}

#[test]
fn eigenoperator_relations() {
    let (g, e) = real_lambda_gate(3, 1);
    let ch = build_channel(&g);
    assert!(max_abs_diff(&ch.apply(&e.a), &(&e.a * e.lambda)) < 1e-10);
    let x = random_hermitian(3, &mut rng(5));
    let lhs = trace(&(&e.b * ch.apply(&x)));
    let rhs = trace(&(&e.b * &x)) * e.lambda;
    assert!((lhs - rhs).norm() < 1e-10);
    assert!((trace(&(&e.b * &e.a)) / 3.0 - 1.0).norm() < 1e-12);
    let (a, b) = eig_tuple(&e, 1);
    let s = kotoc_multichain(&g, &a, &b, 1, 8).unwrap();
    for t in 0..=8 {
        assert!((s.values[t] - e.lambda.powi(t as i32)).norm() < 1e-10);
    }
    let d = diagnose(&g, 1e-8).unwrap();
    let triv = eigenoperators_at(&d, &ch, d.trivial_index).unwrap();
    let id = CMat::identity(3, 3);
    let phase = triv.a[(0, 0)];
    assert!(max_abs_diff(&(&triv.a / phase), &id) < 1e-10);
}

#[test]
fn spectrum_closed_under_conjugation() {
    for seed in 0..4 {
        let d = diagnose(&haar_random(3, 3, seed).unwrap(), 1e-8).unwrap();
        for l in &d.eigenvalues {
            let best = d.eigenvalues.iter().map(|m| (m - l.conj()).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]
    #[test]
    fn lambda_obeys_entropy_bound(seed in 0u64..10_000, d in 2usize..=3) {
        let g = haar_random(d, d, seed).unwrap();
        let diag = diagnose(&g, 1e-8).unwrap();
        if let Some(b) = diag.mixing_bound {
            prop_assert!(diag.lambda_sub.norm() <= b + 1e-10);
        }
        let _: C64 = diag.lambda_sub;
    }
}
