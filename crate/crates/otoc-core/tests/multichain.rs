mod common;

use common::*;
use otoc_core::channel::diagnose;
use otoc_core::freeprob::steady_state_prediction;
use otoc_core::gates::{dual_unitary_qubit, haar_random, swap, weak_coupling};
use otoc_core::markov::kotoc_transfer;
use otoc_core::multichain::*;
use otoc_core::ncpart::{NcLattice, NcPartition};
use otoc_core::replica::{dress_bottom, dress_top, overlap, ReplicaKernel};

#[test]
fn weingarten_examples() {
    for d in [2, 3, 5] {
        let lat = NcLattice::new(3).unwrap();
        for p in lat.partitions() {
            assert_eq!(weingarten_factor(p, p, d).unwrap(), 1.0);
        }
        let w2 = weingarten_factor(&NcPartition::identity(2), &NcPartition::full(2), d).unwrap();
        assert!((w2 + 1.0 / d as f64).abs() < 1e-15);
        let w3 = weingarten_factor(&NcPartition::identity(3), &NcPartition::full(3), d).unwrap();
        assert!((w3 - 2.0 / (d * d) as f64).abs() < 1e-15);
    }
}

#[test]
fn k2_closed_form_for_eigenoperators() {
    // λ close to 1 keeps C(t) far above the cancellation floor up to t = 20
    let g = weak_coupling(3, 3, 0.15, 2).unwrap();
    let e = otoc_core::markov::subleading_eigenoperators(&g).unwrap();
    assert!(e.lambda.re > 0.8);
    let (a, b) = eig_tuple(&e, 2);
    let kernel = ReplicaKernel::new(g.clone(), 2).unwrap();
    let lat = kernel.lattice();
    let bottom = dress_bottom(&a, &NcPartition::identity(2)).unwrap();
    let top = dress_top(&b).unwrap();
    let cross = overlap(&top, &kernel.apply(lat.top(), lat.bottom(), &bottom)).unwrap();
    let zero = overlap(&top, &bottom).unwrap() / 3.0;
    let s = kotoc_multichain(&g, &a, &b, 2, 20).unwrap();
    let l = e.lambda;
    for t in 1..=20 {
        let tf = t as f64;
        let want = l.powi(2 * t as i32 - 2) * tf * 3.0 * cross / 3.0 - l.powi(2 * t as i32) * (tf - 1.0) * zero;
        assert!(close(s.values[t], want, 1e-10, 1e-14), "t={t}: {} vs {want}", s.values[t]);
    }
}

#[test]
fn chain_audit_k2_t3() {
    let g = haar_random(2, 3, 4).unwrap();
    let kernel = ReplicaKernel::new(g.clone(), 2).unwrap();
    let a = tuple(2, 2, 1, true);
    let b = tuple(2, 2, 2, true);
    let r = diagnose(&g, 1e-8).unwrap().restricted_norm;
    let chains = chain_audit(&kernel, &a, &b, 3, r).unwrap();
    assert_eq!(chains.len(), 5);
    let mut w: Vec<f64> = chains.iter().map(|c| c.weight).collect();
    w.sort_by(f64::total_cmp);
    let want = [-1.0 / 3.0, -1.0 / 3.0, 1.0, 1.0, 1.0];
    for (x, y) in w.iter().zip(want) {
        assert!((x - y).abs() < 1e-15);
    }
    // the weighted sum reproduces the series
    let sum: otoc_core::linalg::C64 = chains.iter().map(|c| c.value * c.weight).sum::<otoc_core::linalg::C64>() * (3.0 / 2.0);
    let s = kotoc_multichain(&g, &a, &b, 2, 3).unwrap();
    assert!(close(sum, s.values[3], 1e-12, 1e-14));
    assert!(chains.iter().all(|c| c.within_bound));
}

#[test]
fn chain_audit_bounds_hold_for_traceless_inputs() {
    for (d, k, t) in [(2, 2, 5), (3, 2, 4), (2, 3, 4)] {
        let g = haar_random(d, d, 8).unwrap();
        let r = diagnose(&g, 1e-8).unwrap().restricted_norm;
        let kernel = ReplicaKernel::new(g, k).unwrap();
        let chains = chain_audit(&kernel, &tuple(k, d, 3, true), &tuple(k, d, 4, true), t, r).unwrap();
        assert_eq!(chains.len() as u64, count_multichains(k, t).unwrap());
        for c in &chains {
            assert!(c.within_bound, "{:?}: {} > {}", c.chain, c.value.norm(), c.bound);
        }
    }
}

/// A constant fitted on the first few steps keeps bounding the decay
/// `t^{k−1} r^{2t}` (`r^t` for k = 1) at later times.
#[test]
fn fitted_decay_constant_is_never_exceeded() {
    for d in [2, 3] {
        for k in 1..=3 {
            for seed in [11, 12, 13] {
                let g = haar_random(d, d, seed).unwrap();
                let diag = diagnose(&g, 1e-8).unwrap();
                let r = diag.lambda_sub.norm().max(diag.restricted_norm);
                let (a, b) = (tuple(k, d, seed, true), tuple(k, d, seed + 50, true));
                let s = kotoc_transfer(&g, &a, &b, k, 14).unwrap().values;
                let rate = if k == 1 { 1 } else { 2 };
                let envelope = |t: usize| (t as f64).powi(k as i32 - 1) * r.powi((rate * t) as i32);
                let fit = (1..=4).map(|t| s[t].norm() / envelope(t)).fold(0.0, f64::max);
                // rounding leaves an absolute residue once the values are tiny
                let floor = 1e-14 * s.iter().map(|v| v.norm()).fold(0.0, f64::max);
                for t in 5..=14 {
                    assert!(s[t].norm() <= fit * envelope(t) * (1.0 + 1e-9) + floor, "d={d} k={k} seed={seed} t={t}");
                }
            }
        }
    }
}

#[test]
fn counts() {
    for t in 1..=6 {
        assert_eq!(count_multichains(1, t).unwrap(), 1);
        assert_eq!(count_multichains(2, t).unwrap(), 2 * t as u64 - 1);
    }
    assert_eq!(count_multichains(3, 2).unwrap(), 12);
}

#[test]
fn dual_unitary_zeros() {
    let gates = [swap(2).unwrap(), dual_unitary_qubit(0.3, None).unwrap(), dual_unitary_qubit(-0.7, Some(5)).unwrap()];
    for g in &gates {
        for k in 1..=3 {
            let s = kotoc_multichain(g, &tuple(k, 2, 1, true), &tuple(k, 2, 2, true), k, 5).unwrap();
            let from = if k == 1 { 1 } else { 2 };
            for t in from..=5 {
                assert!(s.values[t].norm() < 1e-12, "k={k} t={t}: {}", s.values[t]);
            }
        }
    }
}

#[test]
fn approaches_steady_state() {
    let g = haar_random(2, 2, 6).unwrap();
    let lam = diagnose(&g, 1e-8).unwrap().restricted_norm;
    let t = ((1e-10f64).ln() / lam.ln()).ceil() as usize + 2;
    for k in 1..=3 {
        let a = tuple(k, 2, 10, false);
        let b = tuple(k, 2, 11, false);
        let s = kotoc_transfer(&g, &a, &b, k, t.min(MAX_T)).unwrap();
        let want = steady_state_prediction(k, &a, &b).unwrap();
        assert!((s.values.last().unwrap() - want).norm() < 1e-8);
    }
}

#[test]
fn caps_are_enforced() {
    let g = haar_random(3, 3, 1).unwrap();
    assert!(kotoc_multichain(&g, &tuple(5, 3, 1, false), &tuple(5, 3, 2, false), 5, 2).is_err());
    assert!(kotoc_multichain(&g, &tuple(1, 3, 1, false), &tuple(1, 3, 2, false), 1, MAX_T + 1).is_err());
    assert!(kotoc_multichain(&g, &tuple(2, 3, 1, false), &tuple(1, 3, 2, false), 2, 3).is_err());
}
