#![allow(dead_code)]

use otoc_core::channel::{build_channel, diagnose, eigenoperators, Eigenoperators};
use otoc_core::gates::haar_random;
use otoc_core::linalg::{c, CMat, C64};
use otoc_core::{Gate, Observable};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_hermitian(d: usize, r: &mut ChaCha8Rng) -> CMat {
    let g = CMat::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(r);
        let im: f64 = StandardNormal.sample(r);
        c(re, im)
    });
    (&g + g.adjoint()) * c(0.5, 0.0)
}

pub fn random_obs(d: usize, r: &mut ChaCha8Rng) -> Observable {
    Observable::new(random_hermitian(d, r)).unwrap()
}

pub fn random_traceless(d: usize, r: &mut ChaCha8Rng) -> Observable {
    let mut m = random_hermitian(d, r);
    let tr = m.trace() / d as f64;
    for i in 0..d {
        m[(i, i)] -= tr;
    }
    Observable::new(m).unwrap()
}

pub fn tuple(k: usize, d: usize, seed: u64, traceless: bool) -> Vec<Observable> {
    let mut r = rng(seed);
    (0..k).map(|_| if traceless { random_traceless(d, &mut r) } else { random_obs(d, &mut r) }).collect()
}

/// First Haar gate from `seed` upward whose subleading eigenvalue is real,
/// nondegenerate and at least `min_gap` away from the next one in modulus.
pub fn real_lambda_gate(d: usize, seed: u64) -> (Gate, Eigenoperators) {
    for s in seed.. {
        let g = haar_random(d, d, s).unwrap();
        let diag = diagnose(&g, 1e-8).unwrap();
        if diag.lambda_sub.im.abs() > 1e-12 {
            continue;
        }
        let rest: Vec<C64> =
            diag.eigenvalues.iter().enumerate().filter(|&(i, _)| i != diag.trivial_index).map(|(_, &l)| l).collect();
        if rest.len() > 1 && rest[1].norm() > 0.8 * rest[0].norm() {
            continue;
        }
        if let Ok(e) = eigenoperators(&diag, &build_channel(&g)) {
            return (g, e);
        }
    }
    unreachable!()
}

pub fn eig_tuple(e: &Eigenoperators, k: usize) -> (Vec<Observable>, Vec<Observable>) {
    let a = Observable::new(e.a.clone()).unwrap();
    let b = Observable::new(e.b.clone()).unwrap();
    (vec![a; k], vec![b; k])
}

pub fn rel_diff(x: C64, y: C64) -> f64 {
    (x - y).norm() / x.norm().max(y.norm()).max(1e-300)
}

/// Relative agreement with an absolute floor for values that vanish.
pub fn close(x: C64, y: C64, rel: f64, scale: f64) -> bool {
    (x - y).norm() <= rel * x.norm().max(y.norm()).max(scale)
}
