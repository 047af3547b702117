mod common;

use common::*;
use otoc_core::channel::{build_channel, vectorize};
use otoc_core::gates::{haar_random, swap};
use otoc_core::linalg::{trace, C64};
use otoc_core::ncpart::{cycle_count_rel, enumerate_nc, NcLattice};
use otoc_core::replica::*;
use otoc_core::{NcPartition, Observable};
use rand_distr::{Distribution, StandardNormal};

fn random_vector(d: usize, k: usize, seed: u64) -> ReplicaVector {
    let mut r = rng(seed);
    let n = d.pow(2 * k as u32);
    let data = (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut r);
            let im: f64 = StandardNormal.sample(&mut r);
            C64::new(re, im)
        })
        .collect();
    ReplicaVector::from_data(d, k, data).unwrap()
}

fn digits(mut x: usize, d: usize, n: usize) -> Vec<usize> {
    (0..n)
        .map(|_| {
            let r = x % d;
            x /= d;
            r
        })
        .collect()
}

// d_C^{-k} Σ over C configurations in the supports of |σ) and (ν| of the
// product of U (forward legs) and U* (backward legs) blocks.
fn brute_m(nu: &NcPartition, sigma: &NcPartition, g: &Gate, v: &ReplicaVector) -> ReplicaVector {
    let (d_a, d_c, k) = (g.d_a(), g.d_c(), nu.k());
    let n = v.len();
    let pc = d_c.pow(2 * k as u32);
    let sv = permutation_vector(sigma, d_c).unwrap();
    let nv = permutation_vector(nu, d_c).unwrap();
    let cin: Vec<Vec<usize>> = (0..pc).filter(|&c| sv.data()[c].re != 0.0).map(|c| digits(c, d_c, 2 * k)).collect();
    let cout: Vec<Vec<usize>> = (0..pc).filter(|&c| nv.data()[c].re != 0.0).map(|c| digits(c, d_c, 2 * k)).collect();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (row, o) in out.iter_mut().enumerate() {
        let ro = digits(row, d_a, 2 * k);
        for col in 0..n {
            let x = v.data()[col];
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            let ci = digits(col, d_a, 2 * k);
            let mut s = C64::new(0.0, 0.0);
            for a in &cin {
                for b in &cout {
                    let mut p = C64::new(1.0, 0.0);
                    for leg in 0..2 * k {
                        let u = g.elem(ro[leg], b[leg], ci[leg], a[leg]);
                        p *= if leg % 2 == 0 { u } else { u.conj() };
                    }
                    s += p;
                }
            }
            *o += s * x;
        }
    }
    let mut r = ReplicaVector::from_data(d_a, k, out).unwrap();
    r.scale(C64::new((d_c as f64).powi(-(k as i32)), 0.0));
    r
}

#[test]
fn both_strategies_match_brute_force() {
    for (d, k) in [(2, 1), (2, 2), (3, 2), (2, 3)] {
        let g = haar_random(d, d, 40 + k as u64).unwrap();
        let lat = NcLattice::new(k).unwrap();
        let v = random_vector(d, k, 9);
        for s in 0..lat.len() {
            for &nu in lat.up_set(s) {
                let want = brute_m(lat.get(nu), lat.get(s), &g, &v);
                let dense = apply_m(lat.get(nu), lat.get(s), &g, &v, Strategy::Dense).unwrap();
                let fly = apply_m(lat.get(nu), lat.get(s), &g, &v, Strategy::OnTheFly).unwrap();
                assert!(dense.max_abs_diff(&want) < 1e-12, "d={d} k={k} {} {}", lat.get(nu), lat.get(s));
                assert!(fly.max_abs_diff(&want) < 1e-12, "d={d} k={k} {} {}", lat.get(nu), lat.get(s));
            }
        }
    }
}

#[test]
fn unequal_dimensions_match_brute_force() {
    let g = haar_random(2, 3, 77).unwrap();
    let k = 2;
    let lat = NcLattice::new(k).unwrap();
    let v = random_vector(2, k, 3);
    for s in 0..lat.len() {
        for &nu in lat.up_set(s) {
            let want = brute_m(lat.get(nu), lat.get(s), &g, &v);
            let fly = apply_m(lat.get(nu), lat.get(s), &g, &v, Strategy::OnTheFly).unwrap();
            assert!(fly.max_abs_diff(&want) < 1e-12);
        }
    }
}

#[test]
fn kernel_dense_and_on_the_fly_agree_k3() {
    let g = haar_random(2, 2, 8).unwrap();
    let dense = ReplicaKernel::with_options(g.clone(), 3, Strategy::Dense, DEFAULT_CACHE_BYTES).unwrap();
    let fly = ReplicaKernel::with_options(g, 3, Strategy::OnTheFly, 0).unwrap();
    assert!(dense.uses_dense() && !fly.uses_dense());
    let v = random_vector(2, 3, 1);
    let lat = dense.lattice();
    for s in 0..lat.len() {
        for &nu in lat.up_set(s) {
            assert!(dense.apply(nu, s, &v).max_abs_diff(&fly.apply(nu, s, &v)) < 1e-12);
        }
    }
    assert!(!dense.cache().is_empty());
}

#[test]
fn permutation_states_are_eigenvectors() {
    for (d, k) in [(2, 3), (3, 2)] {
        let g = haar_random(d, d, 3).unwrap();
        let lat = NcLattice::new(k).unwrap();
        for s in 0..lat.len() {
            let ps = permutation_vector(lat.get(s), d).unwrap();
            for &nu in lat.up_set(s) {
                let out = apply_m(lat.get(nu), lat.get(s), &g, &ps, Strategy::OnTheFly).unwrap();
                let f = (d as f64).powi(cycle_count_rel(lat.get(nu), lat.get(s)).unwrap() as i32 - k as i32);
                let mut want = ps.clone();
                want.scale(C64::new(f, 0.0));
                assert!(out.max_abs_diff(&want) < 1e-12);
            }
        }
    }
}

#[test]
fn k1_is_the_channel() {
    let g = haar_random(3, 2, 5).unwrap();
    let a = tuple(1, 3, 2, false);
    let v = dress_bottom(&a, &NcPartition::identity(1)).unwrap();
    let out = apply_m(&NcPartition::identity(1), &NcPartition::identity(1), &g, &v, Strategy::Dense).unwrap();
    let want = vectorize(&build_channel(&g).apply(a[0].matrix()));
    for (x, y) in out.data().iter().zip(want.iter()) {
        assert!((x - y).norm() < 1e-12);
    }
}

#[test]
fn overlap_law() {
    for (d, k) in [(2, 4), (3, 3)] {
        let all = enumerate_nc(k).unwrap();
        let vs: Vec<_> = all.iter().map(|p| permutation_vector(p, d).unwrap()).collect();
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate() {
                let want = (d as f64).powi(cycle_count_rel(a, b).unwrap() as i32);
                assert!((overlap(&vs[i], &vs[j]).unwrap() - want).norm() < 1e-9);
            }
        }
        let o = overlap(&vs[0], vs.last().unwrap()).unwrap();
        assert!((o.re - d as f64).abs() < 1e-12);
    }
    let v = random_vector(2, 2, 4);
    let n = overlap(&v, &v).unwrap();
    assert!(n.re >= 0.0 && n.im.abs() < 1e-12);
}

#[test]
fn k1_identity_state_is_vectorized_identity() {
    let v = permutation_vector(&NcPartition::identity(1), 3).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(v.get(&[i, j]).re, if i == j { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn boundary_contractions() {
    let a = tuple(2, 3, 1, false);
    let b = tuple(2, 3, 2, false);
    let top = dress_top(&b).unwrap();
    let bottom = dress_bottom(&a, &NcPartition::identity(2)).unwrap();
    let want = trace(&(a[0].matrix() * b[0].matrix() * a[1].matrix() * b[1].matrix()));
    assert!((overlap(&top, &bottom).unwrap() - want).norm() < 1e-10);
    // (b_□|i1,i1',i2,i2') = (b1)_{i1' i2} (b2)_{i2' i1}
    let legs = [2, 0, 1, 2];
    let want = b[0].matrix()[(0, 1)] * b[1].matrix()[(2, 2)];
    assert!((top.get(&legs).conj() - want).norm() < 1e-14);
    let ones = vec![Observable::identity(3); 2];
    let s = NcPartition::full(2);
    assert_eq!(dress_bottom(&ones, &s).unwrap(), permutation_vector(&s, 3).unwrap());
    let a1 = tuple(1, 3, 5, false);
    let b1 = tuple(1, 3, 6, false);
    let o = overlap(&dress_top(&b1).unwrap(), &dress_bottom(&a1, &NcPartition::identity(1)).unwrap()).unwrap();
    assert!((o - trace(&(a1[0].matrix() * b1[0].matrix()))).norm() < 1e-12);
}

#[test]
fn rejects_bad_inputs() {
    let m = otoc_core::CMat::from_fn(4, 4, |i, j| C64::new((i + j) as f64, 0.0));
    assert!(matches!(Gate::new(2, 2, m), Err(otoc_core::Error::NotUnitary { .. })));
    let nh = otoc_core::CMat::from_fn(2, 2, |i, j| C64::new(0.0, if i < j { 1.0 } else { 0.0 }));
    assert!(matches!(Observable::new(nh), Err(otoc_core::Error::NotHermitian { .. })));
    assert!(ReplicaVector::zeros(4, 12).is_err());
    let g = swap(2).unwrap();
    let v = random_vector(2, 2, 1);
    assert!(apply_m(&NcPartition::identity(3), &NcPartition::identity(3), &g, &v, Strategy::Auto).is_err());
    assert!(dense_m(&NcPartition::identity(7), &NcPartition::identity(7), &g).is_err());
}

#[test]
fn cache_respects_budget() {
    let g = haar_random(2, 2, 1).unwrap();
    // room for exactly two 64×64 matrices
    let budget = 2 * 64 * 64 * 16;
    let kernel = ReplicaKernel::with_options(g, 3, Strategy::Dense, budget).unwrap();
    let v = random_vector(2, 3, 2);
    for s in 0..kernel.lattice().len() {
        kernel.apply(s, s, &v);
    }
    assert_eq!(kernel.cache().len(), 2);
    assert!(kernel.cache().bytes() <= budget);
    let auto = ReplicaKernel::with_options(haar_random(2, 2, 1).unwrap(), 3, Strategy::Auto, 1024).unwrap();
    assert!(!auto.uses_dense());
}
