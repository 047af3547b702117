//! Noncrossing partitions of `{1..k}` and the lattice NC(k).
//!
//! Elements are stored zero-based; `Display` prints them one-based, e.g.
//! `(134)(2)`. Each partition keeps both its blocks and the permutation whose
//! cycles are the blocks traversed in ascending order.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Largest `k` accepted by [`enumerate_nc`].
pub const MAX_ENUM_K: usize = 10;
/// Largest `k` accepted by multichain enumeration.
pub const MAX_CHAIN_K: usize = 6;

/// Catalan number `C_n`.
pub fn catalan(n: usize) -> u64 {
    let mut c: u64 = 1;
    for i in 0..n as u64 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NcPartition {
    k: usize,
    blocks: Vec<Vec<usize>>,
    perm: Vec<usize>,
}

impl NcPartition {
    /// Builds a partition from zero-based blocks. Blocks may be given in any
    /// order and with unsorted elements.
    pub fn from_blocks(k: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidPartition("k must be positive".into()));
        }
        let mut owner = vec![usize::MAX; k];
        let mut sorted: Vec<Vec<usize>> = Vec::with_capacity(blocks.len());
        for b in blocks {
            if b.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            let mut b = b.clone();
            b.sort_unstable();
            for &x in &b {
                if x >= k {
                    return Err(Error::InvalidPartition(alloc::format!("element {} out of range", x + 1)));
                }
                if owner[x] != usize::MAX {
                    return Err(Error::InvalidPartition(alloc::format!("element {} repeated", x + 1)));
                }
                owner[x] = sorted.len();
            }
            sorted.push(b);
        }
        if owner.contains(&usize::MAX) {
            return Err(Error::InvalidPartition("blocks do not cover 1..k".into()));
        }
        if !stack_scan_noncrossing(&sorted, &owner) {
            return Err(Error::InvalidPartition("blocks cross".into()));
        }
        sorted.sort_unstable_by_key(|b| b[0]);
        let mut perm = vec![0; k];
        for b in &sorted {
            for (i, &x) in b.iter().enumerate() {
                perm[x] = b[(i + 1) % b.len()];
            }
        }
        Ok(Self { k, blocks: sorted, perm })
    }

    /// One-based convenience constructor, `from_one_based(4, &[&[1, 3, 4], &[2]])`.
    pub fn from_one_based(k: usize, blocks: &[&[usize]]) -> Result<Self> {
        let mut zb = Vec::with_capacity(blocks.len());
        for b in blocks {
            let mut v = Vec::with_capacity(b.len());
            for &x in b.iter() {
                if x == 0 {
                    return Err(Error::InvalidPartition("elements are one-based".into()));
                }
                v.push(x - 1);
            }
            zb.push(v);
        }
        Self::from_blocks(k, &zb)
    }

    /// Builds a partition from a permutation array, rejecting permutations
    /// whose cycles are not ascending noncrossing blocks.
    pub fn from_perm(perm: &[usize]) -> Result<Self> {
        let k = perm.len();
        let blocks = cycles(perm).ok_or_else(|| Error::InvalidPartition("not a permutation".into()))?;
        let p = Self::from_blocks(k, &blocks)?;
        if p.perm != perm {
            return Err(Error::InvalidPartition("cycles are not in ascending order".into()));
        }
        Ok(p)
    }

    /// The all-singletons partition ∘ (identity permutation).
    pub fn identity(k: usize) -> Self {
        let blocks: Vec<Vec<usize>> = (0..k).map(|i| vec![i]).collect();
        Self { k, blocks, perm: (0..k).collect() }
    }

    /// The one-block partition □ (cyclic shift `j -> j+1`).
    pub fn full(k: usize) -> Self {
        Self { k, blocks: vec![(0..k).collect()], perm: (0..k).map(|j| (j + 1) % k).collect() }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Number of blocks `|σ|`.
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// `k − |σ|`, the distance from ∘.
    pub fn rank(&self) -> usize {
        self.k - self.blocks.len()
    }

    pub fn is_identity(&self) -> bool {
        self.blocks.len() == self.k
    }

    pub fn is_full(&self) -> bool {
        self.blocks.len() == 1
    }

    /// Index of the block containing `x`.
    pub fn block_of(&self, x: usize) -> usize {
        self.blocks.iter().position(|b| b.contains(&x)).expect("element in range")
    }

    pub fn inverse_perm(&self) -> Vec<usize> {
        let mut inv = vec![0; self.k];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        inv
    }

    /// Blocks rendered one-based.
    pub fn blocks_one_based(&self) -> Vec<Vec<usize>> {
        self.blocks.iter().map(|b| b.iter().map(|x| x + 1).collect()).collect()
    }
}

impl fmt::Display for NcPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.blocks {
            f.write_str("(")?;
            for (i, x) in b.iter().enumerate() {
                if self.k >= 10 && i > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{}", x + 1)?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Debug for NcPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn stack_scan_noncrossing(blocks: &[Vec<usize>], owner: &[usize]) -> bool {
    let mut stack: Vec<usize> = Vec::new();
    for (x, &b) in owner.iter().enumerate() {
        let blk = &blocks[b];
        let first = blk[0] == x;
        let last = *blk.last().unwrap() == x;
        if !first && stack.last() != Some(&b) {
            return false;
        }
        if first && !last {
            stack.push(b);
        } else if !first && last {
            stack.pop();
        }
    }
    stack.is_empty()
}

/// Cycles of a permutation array, each starting at its smallest element.
fn cycles(perm: &[usize]) -> Option<Vec<Vec<usize>>> {
    let k = perm.len();
    let mut seen = vec![false; k];
    let mut out = Vec::new();
    for s in 0..k {
        if seen[s] {
            continue;
        }
        let mut c = Vec::new();
        let mut x = s;
        while !seen[x] {
            seen[x] = true;
            c.push(x);
            x = *perm.get(x)?;
            if x >= k {
                return None;
            }
        }
        if x != s {
            return None;
        }
        out.push(c);
    }
    Some(out)
}

fn count_cycles(perm: &[usize]) -> usize {
    let mut seen = vec![false; perm.len()];
    let mut n = 0;
    for s in 0..perm.len() {
        if !seen[s] {
            n += 1;
            let mut x = s;
            while !seen[x] {
                seen[x] = true;
                x = perm[x];
            }
        }
    }
    n
}

fn check_same_k(a: &NcPartition, b: &NcPartition) -> Result<()> {
    if a.k != b.k {
        return Err(Error::Dimension(alloc::format!("partitions of {} and {} elements", a.k, b.k)));
    }
    Ok(())
}

/// `(ν^{-1} σ)` as a permutation array (apply σ first).
fn rel_perm(nu: &NcPartition, sigma: &NcPartition) -> Vec<usize> {
    let inv = nu.inverse_perm();
    sigma.perm.iter().map(|&s| inv[s]).collect()
}

/// All noncrossing partitions of `k` elements, sorted by rank and then by
/// permutation array.
pub fn enumerate_nc(k: usize) -> Result<Vec<NcPartition>> {
    if k == 0 || k > MAX_ENUM_K {
        return Err(Error::SizeLimit(alloc::format!("enumerate_nc needs 1 <= k <= {MAX_ENUM_K}, got {k}")));
    }
    let mut out: Vec<NcPartition> = nc_interval(0, k)
        .into_iter()
        .map(|blocks| NcPartition::from_blocks(k, &blocks).expect("generated partitions are noncrossing"))
        .collect();
    out.sort_by(|a, b| a.rank().cmp(&b.rank()).then_with(|| a.perm.cmp(&b.perm)));
    Ok(out)
}

// Noncrossing partitions of the interval lo..hi: pick the block of `lo`, then
// partition each gap independently.
fn nc_interval(lo: usize, hi: usize) -> Vec<Vec<Vec<usize>>> {
    if lo >= hi {
        return vec![Vec::new()];
    }
    let rest = hi - lo - 1;
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << rest) {
        let mut block = vec![lo];
        for i in 0..rest {
            if mask & (1 << i) != 0 {
                block.push(lo + 1 + i);
            }
        }
        let mut partial: Vec<Vec<Vec<usize>>> = vec![vec![block.clone()]];
        let mut bounds: Vec<(usize, usize)> = block.windows(2).map(|w| (w[0] + 1, w[1])).collect();
        bounds.push((*block.last().unwrap() + 1, hi));
        for (a, b) in bounds {
            let gaps = nc_interval(a, b);
            let mut next = Vec::with_capacity(partial.len() * gaps.len());
            for p in &partial {
                for g in &gaps {
                    let mut q = p.clone();
                    q.extend(g.iter().cloned());
                    next.push(q);
                }
            }
            partial = next;
        }
        out.extend(partial);
    }
    out
}

/// Block containment `ν ⊆ σ`.
pub fn leq(nu: &NcPartition, sigma: &NcPartition) -> Result<bool> {
    check_same_k(nu, sigma)?;
    Ok(leq_unchecked(nu, sigma))
}

pub(crate) fn leq_unchecked(nu: &NcPartition, sigma: &NcPartition) -> bool {
    let mut owner = vec![0usize; sigma.k];
    for (i, b) in sigma.blocks.iter().enumerate() {
        for &x in b {
            owner[x] = i;
        }
    }
    nu.blocks.iter().all(|b| b.iter().all(|&x| owner[x] == owner[b[0]]))
}

/// Kreweras complement `σ* = σ^{-1} □`.
pub fn kreweras(sigma: &NcPartition) -> NcPartition {
    let k = sigma.k;
    let inv = sigma.inverse_perm();
    let perm: Vec<usize> = (0..k).map(|j| inv[(j + 1) % k]).collect();
    NcPartition::from_perm(&perm).expect("Kreweras complement of a noncrossing partition is noncrossing")
}

/// `|ν^{-1} σ|`, the number of cycles of the relative permutation.
pub fn cycle_count_rel(nu: &NcPartition, sigma: &NcPartition) -> Result<usize> {
    check_same_k(nu, sigma)?;
    Ok(count_cycles(&rel_perm(nu, sigma)))
}

/// Möbius function of NC(k) through the cycle type of `ν^{-1} σ`.
pub fn mobius(nu: &NcPartition, sigma: &NcPartition) -> Result<i64> {
    check_same_k(nu, sigma)?;
    let rel = rel_perm(nu, sigma);
    let mut val: i64 = 1;
    for c in cycles(&rel).expect("composition of permutations") {
        let len = c.len();
        let sign = if (len - 1) % 2 == 0 { 1 } else { -1 };
        val *= sign * catalan(len - 1) as i64;
    }
    Ok(val)
}

/// `Σ_{σ ⊆ ρ ⊆ ν} μ(ν, ρ)`; equals `δ_{σν}`.
pub fn mobius_sum_check(sigma: &NcPartition, nu: &NcPartition) -> Result<i64> {
    if !leq(sigma, nu)? {
        return Err(Error::Order(alloc::format!("{sigma} is not contained in {nu}")));
    }
    let mut sum = 0;
    for rho in enumerate_nc(sigma.k)? {
        if leq_unchecked(sigma, &rho) && leq_unchecked(&rho, nu) {
            sum += mobius(nu, &rho)?;
        }
    }
    Ok(sum)
}

/// Number of singleton blocks `n(σ)`.
pub fn num_singletons(sigma: &NcPartition) -> usize {
    sigma.blocks.iter().filter(|b| b.len() == 1).count()
}

/// `n(σ) + n(σ*)`.
pub fn combined_singletons(sigma: &NcPartition) -> usize {
    num_singletons(sigma) + num_singletons(&kreweras(sigma))
}

/// NC(k) with indices, the order relation and memoized up-sets.
#[derive(Clone, Debug)]
pub struct NcLattice {
    k: usize,
    parts: Vec<NcPartition>,
    index: BTreeMap<Vec<usize>, usize>,
    le: Vec<bool>,
    up: Vec<Vec<usize>>,
    down: Vec<Vec<usize>>,
}

impl NcLattice {
    pub fn new(k: usize) -> Result<Self> {
        let parts = enumerate_nc(k)?;
        let n = parts.len();
        let index = parts.iter().enumerate().map(|(i, p)| (p.perm.clone(), i)).collect();
        let mut le = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                le[i * n + j] = leq_unchecked(&parts[i], &parts[j]);
            }
        }
        let up = (0..n).map(|i| (0..n).filter(|&j| le[i * n + j]).collect()).collect();
        let down = (0..n).map(|j| (0..n).filter(|&i| le[i * n + j]).collect()).collect();
        Ok(Self { k, parts, index, le, up, down })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn partitions(&self) -> &[NcPartition] {
        &self.parts
    }

    pub fn get(&self, i: usize) -> &NcPartition {
        &self.parts[i]
    }

    pub fn index_of(&self, p: &NcPartition) -> Option<usize> {
        if p.k != self.k {
            return None;
        }
        self.index.get(&p.perm).copied()
    }

    /// Index of ∘ (always 0 in canonical order).
    pub fn bottom(&self) -> usize {
        0
    }

    /// Index of □ (always last in canonical order).
    pub fn top(&self) -> usize {
        self.parts.len() - 1
    }

    pub fn le(&self, i: usize, j: usize) -> bool {
        self.le[i * self.parts.len() + j]
    }

    /// Indices `j` with `i ⊆ j`, in canonical order.
    pub fn up_set(&self, i: usize) -> &[usize] {
        &self.up[i]
    }

    /// Indices `j` with `j ⊆ i`, in canonical order.
    pub fn down_set(&self, i: usize) -> &[usize] {
        &self.down[i]
    }
}

/// A nondecreasing sequence `∘ = σ1 ⊆ ν1 ⊆ … ⊆ σt ⊆ νt = □`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multichain {
    pub k: usize,
    pub t: usize,
    pub seq: Vec<NcPartition>,
}

impl Multichain {
    /// Checks the chain invariants.
    pub fn validate(&self) -> Result<()> {
        if self.seq.len() != 2 * self.t || self.t == 0 {
            return Err(Error::InvalidPartition("multichain length must be 2t".into()));
        }
        if !self.seq[0].is_identity() || !self.seq[2 * self.t - 1].is_full() {
            return Err(Error::InvalidPartition("multichain must run from ∘ to □".into()));
        }
        for w in self.seq.windows(2) {
            if !leq(&w[0], &w[1])? {
                return Err(Error::Order(alloc::format!("{} ⊄ {}", w[0], w[1])));
            }
        }
        Ok(())
    }

    pub fn sigma(&self, i: usize) -> &NcPartition {
        &self.seq[2 * i]
    }

    pub fn nu(&self, i: usize) -> &NcPartition {
        &self.seq[2 * i + 1]
    }
}

/// Depth-first iterator over multichains as lattice index sequences.
pub struct MultichainIndexIter<'a> {
    lat: &'a NcLattice,
    len: usize,
    seq: Vec<usize>,
    // cursor[d] is the next candidate position for depth d
    cursor: Vec<usize>,
    done: bool,
}

impl<'a> MultichainIndexIter<'a> {
    pub fn new(lat: &'a NcLattice, t: usize) -> Self {
        let len = 2 * t;
        let mut seq = Vec::with_capacity(len);
        seq.push(lat.bottom());
        Self { lat, len, seq, cursor: vec![0, 0], done: t == 0 }
    }
}

impl Iterator for MultichainIndexIter<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let top = [self.lat.top()];
        while !self.done {
            let d = self.seq.len();
            let cands: &[usize] =
                if d == self.len - 1 { &top } else { self.lat.up_set(self.seq[d - 1]) };
            let c = self.cursor[d];
            if c < cands.len() {
                self.cursor[d] += 1;
                self.seq.push(cands[c]);
                if self.seq.len() == self.len {
                    let out = self.seq.clone();
                    self.seq.pop();
                    return Some(out);
                }
                self.cursor.push(0);
            } else {
                self.cursor.pop();
                self.seq.pop();
                if self.seq.is_empty() {
                    self.done = true;
                }
            }
        }
        None
    }
}

/// Iterator over all multichains of `k` elements and `t` steps.
pub fn enumerate_multichains(lat: &NcLattice, t: usize) -> Result<impl Iterator<Item = Multichain> + '_> {
    check_chain_caps(lat.k(), t)?;
    let k = lat.k();
    Ok(MultichainIndexIter::new(lat, t).map(move |idx| Multichain {
        k,
        t,
        seq: idx.into_iter().map(|i| lat.get(i).clone()).collect(),
    }))
}

pub(crate) fn check_chain_caps(k: usize, t: usize) -> Result<()> {
    if k == 0 || k > MAX_CHAIN_K {
        return Err(Error::SizeLimit(alloc::format!("multichains need 1 <= k <= {MAX_CHAIN_K}, got {k}")));
    }
    if t == 0 {
        return Err(Error::SizeLimit("multichains need t >= 1".into()));
    }
    Ok(())
}
