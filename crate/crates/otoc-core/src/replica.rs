//! The 2k-fold replicated system space and the sandwiched maps `M_νσ`.
//!
//! A [`ReplicaVector`] lives on `(C^{d_A})^{⊗2k}` with index layout
//! `(i1, i1', i2, i2', …, ik, ik')`, `i1` varying fastest. Leg `2j` is the
//! forward copy of replica `j` and leg `2j+1` the backward copy (zero-based).

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::{hermiticity_violation, unitarity_violation, CMat, C64};
use crate::ncpart::{NcLattice, NcPartition};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-10;
/// Replica dimension above which no dense `M_νσ` is ever built.
pub const DENSE_MAX_DIM: usize = 4096;
/// Largest replica dimension `d_A^{2k}` accepted at all.
pub const MAX_REPLICA_DIM: usize = 1 << 22;
pub const DEFAULT_CACHE_BYTES: usize = 256 << 20;

/// A local operator on A. Usually Hermitian (checked by [`Observable::new`]);
/// channel eigenoperators enter through [`Observable::operator`].
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    d: usize,
    m: CMat,
}

impl Observable {
    pub fn new(m: CMat) -> Result<Self> {
        let o = Self::operator(m)?;
        let v = hermiticity_violation(&o.m);
        if v > HERMITIAN_TOL {
            return Err(Error::NotHermitian { violation: v });
        }
        Ok(o)
    }

    /// Any square matrix, without the Hermiticity check.
    pub fn operator(m: CMat) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::Dimension(alloc::format!("observable must be square, got {:?}", m.shape())));
        }
        Ok(Self { d: m.nrows(), m })
    }

    pub fn identity(d: usize) -> Self {
        Self { d, m: CMat::identity(d, d) }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn trace(&self) -> C64 {
        crate::linalg::trace(&self.m)
    }

    pub fn is_traceless(&self, tol: f64) -> bool {
        self.trace().norm() <= tol
    }

    /// Frobenius norm `‖a‖₂`.
    pub fn norm2(&self) -> f64 {
        crate::linalg::frobenius(&self.m)
    }
}

/// Unitary coupling between A and C; rows and columns are indexed by
/// `(a, c)` with the C index fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    d_a: usize,
    d_c: usize,
    m: CMat,
}

impl Gate {
    pub fn new(d_a: usize, d_c: usize, m: CMat) -> Result<Self> {
        let g = Self::new_unchecked(d_a, d_c, m)?;
        let v = unitarity_violation(&g.m);
        if v > UNITARY_TOL {
            return Err(Error::NotUnitary { violation: v });
        }
        Ok(g)
    }

    pub(crate) fn new_unchecked(d_a: usize, d_c: usize, m: CMat) -> Result<Self> {
        if d_a == 0 || d_c == 0 || m.nrows() != d_a * d_c || m.ncols() != d_a * d_c {
            return Err(Error::Dimension(alloc::format!(
                "gate of shape {:?} does not match d_a={d_a}, d_c={d_c}",
                m.shape()
            )));
        }
        Ok(Self { d_a, d_c, m })
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_c(&self) -> usize {
        self.d_c
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    /// `U[(ao, co), (ai, ci)]`.
    #[inline]
    pub fn elem(&self, ao: usize, co: usize, ai: usize, ci: usize) -> C64 {
        self.m[(ao * self.d_c + co, ai * self.d_c + ci)]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicaVector {
    d: usize,
    k: usize,
    data: Vec<C64>,
}

pub(crate) fn replica_dim(d: usize, k: usize) -> Result<usize> {
    let mut n: usize = 1;
    for _ in 0..2 * k {
        n = n.checked_mul(d).filter(|&n| n <= MAX_REPLICA_DIM).ok_or_else(|| {
            Error::SizeLimit(alloc::format!("replica dimension {d}^(2*{k}) exceeds {MAX_REPLICA_DIM}"))
        })?;
    }
    Ok(n)
}

impl ReplicaVector {
    pub fn zeros(d: usize, k: usize) -> Result<Self> {
        let n = replica_dim(d, k)?;
        Ok(Self { d, k, data: vec![C64::zero(); n] })
    }

    pub fn from_data(d: usize, k: usize, data: Vec<C64>) -> Result<Self> {
        let n = replica_dim(d, k)?;
        if data.len() != n {
            return Err(Error::Dimension(alloc::format!("expected {n} entries, got {}", data.len())));
        }
        Ok(Self { d, k, data })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// Flat index of `(i1, i1', …, ik, ik')`.
    pub fn index_of(&self, legs: &[usize]) -> usize {
        legs.iter().rev().fold(0, |acc, &x| acc * self.d + x)
    }

    pub fn get(&self, legs: &[usize]) -> C64 {
        self.data[self.index_of(legs)]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, s: C64) {
        for x in &mut self.data {
            *x *= s;
        }
    }

    /// `self += s · other`.
    pub fn axpy(&mut self, s: C64, other: &ReplicaVector) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += s * y;
        }
    }

    pub fn conj(&self) -> Self {
        Self { d: self.d, k: self.k, data: self.data.iter().map(|x| x.conj()).collect() }
    }

    pub fn max_abs_diff(&self, other: &ReplicaVector) -> f64 {
        self.data.iter().zip(&other.data).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn check_same(&self, other: &ReplicaVector) -> Result<()> {
        if self.d != other.d || self.k != other.k {
            return Err(Error::Dimension(alloc::format!(
                "replica vectors (d={}, k={}) and (d={}, k={})",
                self.d,
                self.k,
                other.d,
                other.k
            )));
        }
        Ok(())
    }
}

/// `(i…|σ) = ∏_j δ(i'_j = i_{σ(j)})`.
pub fn permutation_vector(sigma: &NcPartition, d: usize) -> Result<ReplicaVector> {
    let k = sigma.k();
    let mut v = ReplicaVector::zeros(d, k)?;
    let perm = sigma.perm();
    let mut legs = vec![0usize; 2 * k];
    let mut fwd = vec![0usize; k];
    let total = d.pow(k as u32);
    for mut r in 0..total {
        for f in fwd.iter_mut() {
            *f = r % d;
            r /= d;
        }
        for j in 0..k {
            legs[2 * j] = fwd[j];
            legs[2 * j + 1] = fwd[perm[j]];
        }
        let idx = v.index_of(&legs);
        v.data[idx] = C64::new(1.0, 0.0);
    }
    Ok(v)
}

/// `Σ conj(left) · right`.
pub fn overlap(left: &ReplicaVector, right: &ReplicaVector) -> Result<C64> {
    left.check_same(right)?;
    Ok(left.data.iter().zip(&right.data).map(|(l, r)| l.conj() * r).sum())
}

/// Applies the `d×d` matrix `m` to leg `leg`:
/// `out[…x…] = Σ_y m[x][y] v[…y…]`.
pub fn apply_on_leg(v: &ReplicaVector, leg: usize, m: &CMat) -> Result<ReplicaVector> {
    if m.nrows() != v.d || m.ncols() != v.d {
        return Err(Error::Dimension(alloc::format!("operator of dimension {} on d={} legs", m.nrows(), v.d)));
    }
    if leg >= 2 * v.k {
        return Err(Error::Dimension(alloc::format!("leg {leg} out of range for k={}", v.k)));
    }
    let d = v.d;
    let flat: Vec<C64> = (0..d * d).map(|i| m[(i / d, i % d)]).collect();
    let mut out = ReplicaVector { d, k: v.k, data: vec![C64::zero(); v.data.len()] };
    leg_apply_acc(&mut out.data, &v.data, d, d.pow(leg as u32), &flat, false);
    Ok(out)
}

/// `out += M ⊗_leg v` where `m` is row-major `d×d`, optionally conjugated.
pub(crate) fn leg_apply_acc(out: &mut [C64], inp: &[C64], d: usize, stride: usize, m: &[C64], conj: bool) {
    let block = d * stride;
    let outer = inp.len() / block;
    for o in 0..outer {
        let base = o * block;
        for a in 0..d {
            let orow = &mut out[base + a * stride..base + (a + 1) * stride];
            for b in 0..d {
                let mut coef = m[a * d + b];
                if conj {
                    coef = coef.conj();
                }
                if coef.is_zero() {
                    continue;
                }
                let irow = &inp[base + b * stride..base + (b + 1) * stride];
                for (x, y) in orow.iter_mut().zip(irow) {
                    *x += coef * y;
                }
            }
        }
    }
}

fn check_ops(ops: &[Observable], k: usize) -> Result<usize> {
    if ops.len() != k || k == 0 {
        return Err(Error::Dimension(alloc::format!("expected {k} observables, got {}", ops.len())));
    }
    let d = ops[0].d;
    if ops.iter().any(|o| o.d != d) {
        return Err(Error::Dimension("observables of different dimensions".into()));
    }
    Ok(d)
}

/// `|a_σ) = (a_1 ⊗ 1 ⊗ … ⊗ a_k ⊗ 1)|σ)`.
pub fn dress_bottom(ops: &[Observable], sigma: &NcPartition) -> Result<ReplicaVector> {
    let d = check_ops(ops, sigma.k())?;
    let mut v = permutation_vector(sigma, d)?;
    for (j, a) in ops.iter().enumerate() {
        v = apply_on_leg(&v, 2 * j, &a.m)?;
    }
    Ok(v)
}

/// The ket dual to the covector `(b_□| = (□|(1 ⊗ b_1 ⊗ … ⊗ 1 ⊗ b_k)`, whose
/// components are `(b_1)_{i1' i2} … (b_k)_{ik' i1}`. Stored conjugated so that
/// `overlap(dress_top(b), v) = (b_□|v)`.
pub fn dress_top(ops: &[Observable]) -> Result<ReplicaVector> {
    let k = ops.len();
    let d = check_ops(ops, k)?;
    let mut bra = permutation_vector(&NcPartition::full(k), d)?;
    for (j, b) in ops.iter().enumerate() {
        bra = apply_on_leg(&bra, 2 * j + 1, &b.m)?;
    }
    Ok(bra.conj())
}

/// Execution strategy for `M_νσ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Dense when `d_A^{2k} ≤ 4096` and the matrix fits the cache budget.
    Auto,
    Dense,
    OnTheFly,
}

// Row-major d_A×d_A blocks U_{co,ci}.
#[derive(Clone, Debug)]
struct GateBlocks {
    d_a: usize,
    d_c: usize,
    blocks: Vec<Vec<C64>>,
}

impl GateBlocks {
    fn new(g: &Gate) -> Self {
        let (d_a, d_c) = (g.d_a, g.d_c);
        let mut blocks = Vec::with_capacity(d_c * d_c);
        for co in 0..d_c {
            for ci in 0..d_c {
                let mut b = vec![C64::zero(); d_a * d_a];
                for ao in 0..d_a {
                    for ai in 0..d_a {
                        b[ao * d_a + ai] = g.elem(ao, co, ai, ci);
                    }
                }
                blocks.push(b);
            }
        }
        Self { d_a, d_c, blocks }
    }

    #[inline]
    fn get(&self, co: usize, ci: usize) -> &[C64] {
        &self.blocks[co * self.d_c + ci]
    }
}

// Cycles of ν∘σ^{-1}; each C-index ring of the folded gate follows one.
fn rings(nu: &NcPartition, sigma: &NcPartition) -> (Vec<Vec<usize>>, Vec<usize>) {
    let k = nu.k();
    let sinv = sigma.inverse_perm();
    let pi: Vec<usize> = (0..k).map(|j| nu.perm()[sinv[j]]).collect();
    let mut seen = vec![false; k];
    let mut out = Vec::new();
    for s in 0..k {
        if seen[s] {
            continue;
        }
        let mut ring = Vec::new();
        let mut j = s;
        while !seen[j] {
            seen[j] = true;
            ring.push(j);
            j = pi[j];
        }
        out.push(ring);
    }
    (out, sinv)
}

fn apply_on_the_fly(nu: &NcPartition, sigma: &NcPartition, gb: &GateBlocks, v: &[C64]) -> Vec<C64> {
    let (d_a, d_c) = (gb.d_a, gb.d_c);
    let k = nu.k();
    let n = v.len();
    let (rings, sinv) = rings(nu, sigma);
    let mut cur = v.to_vec();
    let mut s: Vec<Option<Vec<C64>>> = vec![None; d_c * d_c];
    let mut s2: Vec<Option<Vec<C64>>> = vec![None; d_c * d_c];
    for ring in &rings {
        for slot in s.iter_mut() {
            *slot = None;
        }
        for x0 in 0..d_c {
            s[x0 * d_c + x0] = Some(cur.clone());
        }
        for &j in ring {
            // forward sheet j: current index is an output C index, new one an input
            sweep(&s, &mut s2, d_c, n, |x, y| (gb.get(x, y), false), d_a, d_a.pow(2 * j as u32));
            core::mem::swap(&mut s, &mut s2);
            // backward sheet σ^{-1}(j): consumes the input index, emits the next output
            let m = sinv[j];
            sweep(&s, &mut s2, d_c, n, |y, x| (gb.get(x, y), true), d_a, d_a.pow(2 * m as u32 + 1));
            core::mem::swap(&mut s, &mut s2);
        }
        for z in cur.iter_mut() {
            *z = C64::zero();
        }
        for x0 in 0..d_c {
            if let Some(vx) = &s[x0 * d_c + x0] {
                for (z, w) in cur.iter_mut().zip(vx) {
                    *z += w;
                }
            }
        }
    }
    let scale = (d_c as f64).powi(-(k as i32));
    for z in cur.iter_mut() {
        *z *= scale;
    }
    cur
}

// dst[x0][new] = Σ_old block(old, new) · src[x0][old] on one leg.
fn sweep<'g, F>(
    src: &[Option<Vec<C64>>],
    dst: &mut [Option<Vec<C64>>],
    d_c: usize,
    n: usize,
    block: F,
    d_a: usize,
    stride: usize,
) where
    F: Fn(usize, usize) -> (&'g [C64], bool),
{
    for x0 in 0..d_c {
        for new in 0..d_c {
            let mut acc: Option<Vec<C64>> = None;
            for old in 0..d_c {
                if let Some(inp) = &src[x0 * d_c + old] {
                    let (m, conj) = block(old, new);
                    let out = acc.get_or_insert_with(|| vec![C64::zero(); n]);
                    leg_apply_acc(out, inp, d_a, stride, m, conj);
                }
            }
            dst[x0 * d_c + new] = acc;
        }
    }
}

// Dense M_νσ by ring traces: each matrix element factorizes over the rings of
// ν∘σ^{-1}, and each ring is the trace of a product of d_C×d_C matrices.
fn build_dense(nu: &NcPartition, sigma: &NcPartition, g: &Gate) -> Vec<C64> {
    let (d_a, d_c) = (g.d_a, g.d_c);
    let k = nu.k();
    let n = d_a.pow(2 * k as u32);
    let (rings, sinv) = rings(nu, sigma);
    let scale = (d_c as f64).powi(-(k as i32));
    let mut out = vec![C64::zero(); n * n];
    let mut dig_o = vec![0usize; 2 * k];
    let mut dig_i = vec![0usize; 2 * k];
    let mut acc = vec![C64::zero(); d_c * d_c];
    let mut tmp = vec![C64::zero(); d_c * d_c];
    for row in 0..n {
        decode(row, d_a, &mut dig_o);
        for col in 0..n {
            decode(col, d_a, &mut dig_i);
            let mut val = C64::new(scale, 0.0);
            for ring in &rings {
                // acc = identity, then multiply P_l (x→y) and Q_l (y→x)
                for (i, a) in acc.iter_mut().enumerate() {
                    *a = if i / d_c == i % d_c { C64::new(1.0, 0.0) } else { C64::zero() };
                }
                for &j in ring {
                    let (ao, ai) = (dig_o[2 * j], dig_i[2 * j]);
                    let m = sinv[j];
                    let (bo, bi) = (dig_o[2 * m + 1], dig_i[2 * m + 1]);
                    // tmp[x0][y] = Σ_x acc[x0][x] U[(ao,x),(ai,y)]
                    for x0 in 0..d_c {
                        for y in 0..d_c {
                            let mut s = C64::zero();
                            for x in 0..d_c {
                                s += acc[x0 * d_c + x] * g.elem(ao, x, ai, y);
                            }
                            tmp[x0 * d_c + y] = s;
                        }
                    }
                    // acc[x0][x] = Σ_y tmp[x0][y] conj U[(bo,x),(bi,y)]
                    for x0 in 0..d_c {
                        for x in 0..d_c {
                            let mut s = C64::zero();
                            for y in 0..d_c {
                                s += tmp[x0 * d_c + y] * g.elem(bo, x, bi, y).conj();
                            }
                            acc[x0 * d_c + x] = s;
                        }
                    }
                }
                let tr: C64 = (0..d_c).map(|x| acc[x * d_c + x]).sum();
                val *= tr;
                if val.is_zero() {
                    break;
                }
            }
            out[row * n + col] = val;
        }
    }
    out
}

fn decode(mut idx: usize, d: usize, digits: &mut [usize]) {
    for x in digits.iter_mut() {
        *x = idx % d;
        idx /= d;
    }
}

fn dense_matvec(m: &[C64], v: &[C64]) -> Vec<C64> {
    let n = v.len();
    (0..n).map(|r| m[r * n..(r + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn check_apply(nu: &NcPartition, sigma: &NcPartition, gate: &Gate, v: &ReplicaVector) -> Result<()> {
    if nu.k() != sigma.k() || nu.k() != v.k {
        return Err(Error::Dimension(alloc::format!(
            "partitions of {} and {} elements on a k={} vector",
            nu.k(),
            sigma.k(),
            v.k
        )));
    }
    if gate.d_a != v.d {
        return Err(Error::Dimension(alloc::format!("gate d_a={} on a d={} vector", gate.d_a, v.d)));
    }
    Ok(())
}

/// `M_νσ v = d_C^{−k} (1 ⊗ (ν|_C)(U ⊗ U*)^{⊗k}(1 ⊗ |σ)_C) v`, uncached.
pub fn apply_m(
    nu: &NcPartition,
    sigma: &NcPartition,
    gate: &Gate,
    v: &ReplicaVector,
    strategy: Strategy,
) -> Result<ReplicaVector> {
    check_apply(nu, sigma, gate, v)?;
    let dense = match strategy {
        Strategy::OnTheFly | Strategy::Auto => false,
        Strategy::Dense => {
            if v.len() > DENSE_MAX_DIM {
                return Err(Error::SizeLimit(alloc::format!(
                    "dense M needs d_A^(2k) <= {DENSE_MAX_DIM}, got {}",
                    v.len()
                )));
            }
            true
        }
    };
    let data = if dense {
        dense_matvec(&build_dense(nu, sigma, gate), &v.data)
    } else {
        apply_on_the_fly(nu, sigma, &GateBlocks::new(gate), &v.data)
    };
    Ok(ReplicaVector { d: v.d, k: v.k, data })
}

/// Dense `M_νσ` as a row-major `d_A^{2k} × d_A^{2k}` array.
pub fn dense_m(nu: &NcPartition, sigma: &NcPartition, gate: &Gate) -> Result<Vec<C64>> {
    let n = replica_dim(gate.d_a, nu.k())?;
    if n > DENSE_MAX_DIM {
        return Err(Error::SizeLimit(alloc::format!("dense M needs d_A^(2k) <= {DENSE_MAX_DIM}, got {n}")));
    }
    Ok(build_dense(nu, sigma, gate))
}

struct CacheEntry {
    key: (usize, usize),
    m: Arc<Vec<C64>>,
    last_use: u64,
}

#[derive(Default)]
struct CacheInner {
    entries: Vec<CacheEntry>,
    clock: u64,
    bytes: usize,
}

/// LRU cache of dense `M_νσ` bounded by a byte budget.
pub struct OperatorCache {
    budget: usize,
    inner: spin::Mutex<CacheInner>,
}

impl OperatorCache {
    pub fn new(budget_bytes: usize) -> Self {
        Self { budget: budget_bytes, inner: spin::Mutex::new(CacheInner::default()) }
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn bytes(&self) -> usize {
        self.inner.lock().bytes
    }

    pub fn len(&self) -> usize {
        self.inner.lock().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, key: (usize, usize)) -> Option<Arc<Vec<C64>>> {
        let mut inner = self.inner.lock();
        inner.clock += 1;
        let now = inner.clock;
        let e = inner.entries.iter_mut().find(|e| e.key == key)?;
        e.last_use = now;
        Some(e.m.clone())
    }

    fn insert(&self, key: (usize, usize), m: Arc<Vec<C64>>) {
        let size = m.len() * core::mem::size_of::<C64>();
        if size > self.budget {
            return;
        }
        let mut inner = self.inner.lock();
        if inner.entries.iter().any(|e| e.key == key) {
            return;
        }
        while inner.bytes + size > self.budget {
            let (pos, _) = inner.entries.iter().enumerate().min_by_key(|(_, e)| e.last_use).expect("non-empty");
            let old = inner.entries.swap_remove(pos);
            inner.bytes -= old.m.len() * core::mem::size_of::<C64>();
        }
        inner.clock += 1;
        let last_use = inner.clock;
        inner.bytes += size;
        inner.entries.push(CacheEntry { key, m, last_use });
    }
}

/// A gate bound to a replica order `k`: the lattice NC(k), an execution
/// strategy and the operator cache. Shared read-only across workers.
pub struct ReplicaKernel {
    gate: Gate,
    k: usize,
    lattice: NcLattice,
    strategy: Strategy,
    blocks: GateBlocks,
    cache: OperatorCache,
    dim: usize,
}

impl ReplicaKernel {
    pub fn new(gate: Gate, k: usize) -> Result<Self> {
        Self::with_options(gate, k, Strategy::Auto, DEFAULT_CACHE_BYTES)
    }

    pub fn with_options(gate: Gate, k: usize, strategy: Strategy, cache_bytes: usize) -> Result<Self> {
        let dim = replica_dim(gate.d_a, k)?;
        let lattice = NcLattice::new(k)?;
        let blocks = GateBlocks::new(&gate);
        Ok(Self { gate, k, lattice, strategy, blocks, cache: OperatorCache::new(cache_bytes), dim })
    }

    pub fn gate(&self) -> &Gate {
        &self.gate
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d_a(&self) -> usize {
        self.gate.d_a
    }

    pub fn d_c(&self) -> usize {
        self.gate.d_c
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lattice(&self) -> &NcLattice {
        &self.lattice
    }

    pub fn cache(&self) -> &OperatorCache {
        &self.cache
    }

    /// Whether `apply` goes through dense cached matrices.
    pub fn uses_dense(&self) -> bool {
        match self.strategy {
            Strategy::OnTheFly => false,
            Strategy::Dense => true,
            Strategy::Auto => {
                self.dim <= DENSE_MAX_DIM && self.dim * self.dim * core::mem::size_of::<C64>() <= self.cache.budget
            }
        }
    }

    /// `M_νσ v` for lattice indices `nu`, `sigma`.
    pub fn apply(&self, nu: usize, sigma: usize, v: &ReplicaVector) -> ReplicaVector {
        debug_assert_eq!(v.len(), self.dim);
        let (pn, ps) = (self.lattice.get(nu), self.lattice.get(sigma));
        let data = if self.uses_dense() {
            let m = match self.cache.get((nu, sigma)) {
                Some(m) => m,
                None => {
                    let m = Arc::new(build_dense(pn, ps, &self.gate));
                    self.cache.insert((nu, sigma), m.clone());
                    m
                }
            };
            dense_matvec(&m, &v.data)
        } else {
            apply_on_the_fly(pn, ps, &self.blocks, &v.data)
        };
        ReplicaVector { d: v.d, k: v.k, data }
    }

    /// `M_νσ v` for explicit partitions.
    pub fn apply_parts(&self, nu: &NcPartition, sigma: &NcPartition, v: &ReplicaVector) -> Result<ReplicaVector> {
        check_apply(nu, sigma, &self.gate, v)?;
        let i = self.lattice.index_of(nu).ok_or_else(|| Error::Dimension("partition not in lattice".into()))?;
        let j = self.lattice.index_of(sigma).ok_or_else(|| Error::Dimension("partition not in lattice".into()))?;
        Ok(self.apply(i, j, v))
    }
}
