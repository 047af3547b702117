mod common;

use common::*;
use otoc_core::channel::build_channel;
use otoc_core::freeprob::moment;
use otoc_core::gates::haar_random;
use otoc_core::linalg::{trace, C64};
use otoc_core::markov::{kotoc_transfer_with, kotoc_two_step};
use otoc_core::mps::export_influence_mps;
use otoc_core::multichain::kotoc_multichain_with;
use otoc_core::{NcPartition, ReplicaKernel};

fn interleave(a: &[otoc_core::Observable], b: &[otoc_core::Observable]) -> Vec<otoc_core::Observable> {
    a.iter().zip(b).flat_map(|(x, y)| [x.clone(), y.clone()]).collect()
}

#[test]
fn t0_is_alternating_moment() {
    for k in 1..=3 {
        let g = haar_random(2, 2, 5).unwrap();
        let a = tuple(k, 2, 1, false);
        let b = tuple(k, 2, 2, false);
        let kernel = ReplicaKernel::new(g, k).unwrap();
        let s = kotoc_multichain_with(&kernel, &a, &b, 0).unwrap();
        let ab = interleave(&a, &b);
        let want = moment(&NcPartition::full(2 * k), &ab).unwrap();
        assert!(rel_diff(s.values[0], want) < 1e-12, "k={k}: {} vs {want}", s.values[0]);
    }
}

#[test]
fn k1_is_channel_power() {
    let g = haar_random(3, 3, 11).unwrap();
    let a = tuple(1, 3, 3, false);
    let b = tuple(1, 3, 4, false);
    let kernel = ReplicaKernel::new(g.clone(), 1).unwrap();
    let s = kotoc_multichain_with(&kernel, &a, &b, 6).unwrap();
    let ch = build_channel(&g);
    let mut x = a[0].matrix().clone();
    for t in 1..=6 {
        x = ch.apply(&x);
        let want = trace(&(b[0].matrix() * &x)) / 3.0;
        assert!(rel_diff(s.values[t], want) < 1e-10, "t={t}: {} vs {want}", s.values[t]);
    }
}

#[test]
fn multichain_transfer_two_step_and_mps_agree() {
    for (d, k, t) in [(2, 1, 5), (2, 2, 5), (2, 3, 4), (3, 2, 4), (3, 3, 3)] {
        let g = haar_random(d, d, 100 + d as u64).unwrap();
        let a = tuple(k, d, 7, false);
        let b = tuple(k, d, 8, true);
        let kernel = ReplicaKernel::new(g.clone(), k).unwrap();
        let m = kotoc_multichain_with(&kernel, &a, &b, t).unwrap();
        let tr = kotoc_transfer_with(&kernel, &a, &b, t).unwrap();
        let two = kotoc_two_step(&kernel, &a, &b, t).unwrap();
        let mps = export_influence_mps(k, d, d, t).unwrap().recontract(&g, &a, &b).unwrap();
        let scale = m.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for i in 0..=t {
            assert!(close(m.values[i], tr.values[i], 1e-10, scale * 1e-3), "d={d} k={k} t={i}: {} vs {}", m.values[i], tr.values[i]);
            assert!(close(tr.values[i], two.values[i], 1e-12, scale * 1e-3));
            if i > 0 {
                let v: C64 = mps[i - 1];
                assert!(close(m.values[i], v, 1e-10, scale * 1e-3), "mps d={d} k={k} t={i}: {} vs {v}", m.values[i]);
            }
        }
    }
}
