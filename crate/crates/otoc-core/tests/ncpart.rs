use otoc_core::ncpart::*;
use otoc_core::NcPartition;
use proptest::prelude::*;

fn p(k: usize, blocks: &[&[usize]]) -> NcPartition {
    NcPartition::from_one_based(k, blocks).unwrap()
}

// All set partitions of 0..k as restricted growth strings.
fn set_partitions(k: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut rgs = vec![0usize; k];
    loop {
        let nb = rgs.iter().max().unwrap() + 1;
        let mut blocks = vec![Vec::new(); nb];
        for (x, &b) in rgs.iter().enumerate() {
            blocks[b].push(x);
        }
        out.push(blocks);
        // next restricted growth string
        let mut i = k - 1;
        loop {
            if i == 0 {
                return out;
            }
            let m = rgs[..i].iter().max().unwrap() + 1;
            if rgs[i] < m {
                rgs[i] += 1;
                for r in rgs[i + 1..].iter_mut() {
                    *r = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

fn crosses(blocks: &[Vec<usize>]) -> bool {
    for (i, a) in blocks.iter().enumerate() {
        for b in &blocks[i + 1..] {
            for &w in a {
                for &y in a {
                    for &x in b {
                        for &z in b {
                            if w < x && x < y && y < z {
                                return true;
                            }
                        }
                    }
                }
            }
        }
    }
    false
}

#[test]
fn counts_match_brute_force_filter() {
    for k in 1..=7 {
        let brute = set_partitions(k).into_iter().filter(|b| !crosses(b)).count();
        assert_eq!(enumerate_nc(k).unwrap().len(), brute, "k={k}");
    }
    assert_eq!(enumerate_nc(6).unwrap().len(), 132);
    for k in 1..=8 {
        assert_eq!(enumerate_nc(k).unwrap().len() as u64, catalan(k));
    }
}

#[test]
fn crossing_blocks_rejected() {
    assert!(matches!(NcPartition::from_one_based(4, &[&[1, 3], &[2, 4]]), Err(otoc_core::Error::InvalidPartition(_))));
    assert!(NcPartition::from_one_based(3, &[&[1, 2]]).is_err());
    assert!(NcPartition::from_one_based(3, &[&[1, 2], &[2, 3]]).is_err());
    assert!(enumerate_nc(0).is_err());
    assert!(enumerate_nc(MAX_ENUM_K + 1).is_err());
}

#[test]
fn canonical_order_and_display() {
    let all = enumerate_nc(3).unwrap();
    assert!(all[0].is_identity());
    assert!(all.last().unwrap().is_full());
    assert_eq!(p(4, &[&[1, 3, 4], &[2]]).to_string(), "(134)(2)");
    assert_eq!(NcPartition::identity(1).to_string(), "(1)");
    assert_eq!(enumerate_nc(1).unwrap(), vec![NcPartition::identity(1)]);
}

#[test]
fn order_examples() {
    assert!(leq(&p(4, &[&[1], &[2], &[3, 4]]), &p(4, &[&[1, 2], &[3, 4]])).unwrap());
    assert!(!leq(&p(4, &[&[1, 2], &[3], &[4]]), &p(4, &[&[1], &[2, 3], &[4]])).unwrap());
    assert!(leq(&NcPartition::identity(3), &NcPartition::identity(2)).is_err());
}

#[test]
fn kreweras_examples() {
    assert_eq!(kreweras(&p(4, &[&[1, 3, 4], &[2]])), p(4, &[&[1, 2], &[3], &[4]]));
    assert_eq!(kreweras(&p(4, &[&[1, 2], &[3, 4]])), p(4, &[&[1], &[2, 4], &[3]]));
    for k in 1..=5 {
        assert_eq!(kreweras(&NcPartition::identity(k)), NcPartition::full(k));
        assert_eq!(kreweras(&NcPartition::full(k)), NcPartition::identity(k));
    }
}

#[test]
fn block_count_complement_rule() {
    for k in 1..=6 {
        for s in enumerate_nc(k).unwrap() {
            assert_eq!(s.num_blocks() + kreweras(&s).num_blocks(), k + 1, "{s}");
        }
    }
}

#[test]
fn mobius_values_and_sum_rule() {
    assert_eq!(mobius(&NcPartition::identity(2), &NcPartition::full(2)).unwrap(), -1);
    assert_eq!(mobius(&NcPartition::identity(3), &NcPartition::full(3)).unwrap(), 2);
    for k in 1..=5 {
        let lat = NcLattice::new(k).unwrap();
        for i in 0..lat.len() {
            assert_eq!(mobius(lat.get(i), lat.get(i)).unwrap(), 1);
            for &j in lat.up_set(i) {
                let want = if i == j { 1 } else { 0 };
                assert_eq!(mobius_sum_check(lat.get(i), lat.get(j)).unwrap(), want);
            }
        }
    }
    assert!(mobius_sum_check(&NcPartition::full(3), &NcPartition::identity(3)).is_err());
}

#[test]
fn cycle_counts_saturate_along_chains() {
    for k in 1..=5 {
        let lat = NcLattice::new(k).unwrap();
        for s in 0..lat.len() {
            assert_eq!(cycle_count_rel(lat.get(s), lat.get(s)).unwrap(), k);
            for &r in lat.up_set(s) {
                for &n in lat.up_set(r) {
                    let (a, b, c) = (lat.get(s), lat.get(r), lat.get(n));
                    assert_eq!(
                        cycle_count_rel(a, b).unwrap() + cycle_count_rel(b, c).unwrap(),
                        k + cycle_count_rel(a, c).unwrap()
                    );
                }
            }
        }
    }
    assert_eq!(cycle_count_rel(&NcPartition::identity(2), &NcPartition::full(2)).unwrap(), 1);
}

#[test]
fn singleton_counts() {
    for k in 2..=6 {
        let all = enumerate_nc(k).unwrap();
        assert_eq!(num_singletons(&NcPartition::identity(k)), k);
        assert_eq!(num_singletons(&NcPartition::full(k)), 0);
        assert_eq!(all.iter().map(combined_singletons).min().unwrap(), 2, "k={k}");
    }
    let s = p(3, &[&[1, 2], &[3]]);
    assert_eq!(num_singletons(&s), 1);
    assert_eq!(num_singletons(&kreweras(&s)), 1);
}

// Multichains by brute force over all 2t-tuples of lattice elements.
fn brute_multichains(k: usize, t: usize) -> usize {
    let lat = NcLattice::new(k).unwrap();
    let n = lat.len();
    let len = 2 * t;
    let mut count = 0;
    let mut idx = vec![0usize; len];
    loop {
        let ok = idx[0] == lat.bottom()
            && idx[len - 1] == lat.top()
            && idx.windows(2).all(|w| lat.le(w[0], w[1]));
        if ok {
            count += 1;
        }
        let mut i = 0;
        loop {
            if i == len {
                return count;
            }
            idx[i] += 1;
            if idx[i] < n {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

#[test]
fn multichain_counts() {
    let lat1 = NcLattice::new(1).unwrap();
    for t in 1..=6 {
        assert_eq!(enumerate_multichains(&lat1, t).unwrap().count(), 1);
    }
    let lat2 = NcLattice::new(2).unwrap();
    for t in 1..=6 {
        assert_eq!(enumerate_multichains(&lat2, t).unwrap().count(), 2 * t - 1);
    }
    let lat3 = NcLattice::new(3).unwrap();
    assert_eq!(enumerate_multichains(&lat3, 2).unwrap().count(), 12);
    for (k, t) in [(3, 1), (3, 2), (3, 3), (4, 2), (4, 3)] {
        let lat = NcLattice::new(k).unwrap();
        assert_eq!(enumerate_multichains(&lat, t).unwrap().count(), brute_multichains(k, t), "k={k} t={t}");
    }
    for c in enumerate_multichains(&lat3, 3).unwrap() {
        c.validate().unwrap();
    }
    assert!(enumerate_multichains(&lat3, 0).is_err());
}

fn arb_partition() -> impl Strategy<Value = NcPartition> {
    (1usize..=6).prop_flat_map(|k| {
        let n = catalan(k) as usize;
        (Just(k), 0..n)
    })
    .prop_map(|(k, i)| enumerate_nc(k).unwrap().swap_remove(i))
}

fn arb_pair() -> impl Strategy<Value = (NcPartition, NcPartition)> {
    (1usize..=5).prop_flat_map(|k| {
        let n = catalan(k) as usize;
        (Just(k), 0..n, 0..n)
    })
    .prop_map(|(k, i, j)| {
        let all = enumerate_nc(k).unwrap();
        (all[i].clone(), all[j].clone())
    })
}

proptest! {
    #[test]
    fn perm_roundtrip(s in arb_partition()) {
        prop_assert_eq!(NcPartition::from_perm(s.perm()).unwrap(), s.clone());
        prop_assert_eq!(NcPartition::from_blocks(s.k(), s.blocks()).unwrap(), s);
    }

    #[test]
    fn kreweras_reverses_order((a, b) in arb_pair()) {
        if leq(&a, &b).unwrap() {
            prop_assert!(leq(&kreweras(&b), &kreweras(&a)).unwrap());
        }
    }

    #[test]
    fn order_is_antisymmetric((a, b) in arb_pair()) {
        if leq(&a, &b).unwrap() && leq(&b, &a).unwrap() {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn geodesic_iff_comparable((a, b) in arb_pair()) {
        // |∘^{-1}a| + |a^{-1}b| = k + |∘^{-1}b| exactly when a ⊆ b
        let e = NcPartition::identity(a.k());
        let lhs = cycle_count_rel(&e, &a).unwrap() + cycle_count_rel(&a, &b).unwrap();
        let rhs = a.k() + cycle_count_rel(&e, &b).unwrap();
        prop_assert_eq!(lhs == rhs, leq(&a, &b).unwrap());
    }
}
