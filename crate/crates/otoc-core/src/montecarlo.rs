//! Finite-bath Monte Carlo: single circuit realizations with Haar-random
//! environment unitaries on `A ⊗ C ⊗ E1 ⊗ … ⊗ EL`, the A index slowest.

use alloc::vec;
use alloc::vec::Vec;

use matrixmultiply::CGemmOption;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{hermiticity_violation, pairwise_sum, CMat, C64};
use crate::replica::{Gate, Observable};

pub const MAX_HAAR_DIM: usize = 4096;
pub const MAX_TOTAL_DIM: usize = 4096;

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn sample_haar<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<CMat> {
    if dim == 0 || dim > MAX_HAAR_DIM {
        return Err(Error::SizeLimit(alloc::format!("Haar dimension must be in 1..={MAX_HAAR_DIM}, got {dim}")));
    }
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let z = CMat::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * s, im * s)
    });
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let rjj = r[(j, j)];
        let n = rjj.norm();
        let ph = if n > 0.0 { rjj / n } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= ph;
        }
    }
    Ok(q)
}

/// Stream tags, so that draws for different purposes never share a key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    /// Single bath, and the even brickwork layer (so that `L = 1` reproduces
    /// the single-bath realizations exactly).
    Bath = 1,
    BrickOdd = 2,
}

/// Counter-derived generator for `(base_seed, sample, step, tag)`.
pub fn stream(base_seed: u64, sample: u64, step: u64, tag: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    for (i, w) in [base_seed, sample, step, tag].iter().enumerate() {
        seed[8 * i..8 * i + 8].copy_from_slice(&w.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BathLayout {
    Single,
    /// `L` bath sites evolved by the two-layer random brickwork.
    Brickwork(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct McConfig {
    pub d_a: usize,
    pub d_c: usize,
    pub d_e: usize,
    pub k: usize,
    pub t_max: usize,
    pub n_samples: usize,
    pub base_seed: u64,
    pub bath: BathLayout,
}

impl McConfig {
    pub fn num_bath_sites(&self) -> usize {
        match self.bath {
            BathLayout::Single => 1,
            BathLayout::Brickwork(l) => l,
        }
    }

    /// Total Hilbert-space dimension `D`, or `None` on overflow.
    pub fn total_dim(&self) -> Option<usize> {
        let mut d = self.d_a.checked_mul(self.d_c)?;
        for _ in 0..self.num_bath_sites() {
            d = d.checked_mul(self.d_e)?;
        }
        Some(d)
    }

    pub fn validate(&self) -> Result<usize> {
        if self.d_a < 2 || self.d_c < 2 || self.d_e < 1 || self.k == 0 {
            return Err(Error::InvalidParameter("need d_a, d_c >= 2, d_e >= 1 and k >= 1".into()));
        }
        if self.num_bath_sites() == 0 {
            return Err(Error::InvalidParameter("brickwork needs L >= 1".into()));
        }
        if self.n_samples < 2 {
            return Err(Error::InvalidParameter(alloc::format!("need at least 2 samples, got {}", self.n_samples)));
        }
        match self.total_dim() {
            Some(d) if d <= MAX_TOTAL_DIM => Ok(d),
            _ => Err(Error::SizeLimit(alloc::format!("total dimension exceeds {MAX_TOTAL_DIM}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct McEstimate {
    pub t_values: Vec<usize>,
    pub mean: Vec<C64>,
    /// Unbiased sample variance `Σ|c − mean|²/(n−1)`.
    pub variance: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_samples: usize,
    pub base_seed: u64,
    pub d_e: usize,
    /// Single-realization values, `samples[s][t]`.
    pub samples: Vec<Vec<C64>>,
    /// Largest Hermiticity violation of any evolved `A_i(t)`.
    pub max_hermiticity_violation: f64,
}

impl McEstimate {
    /// Fraction of realizations with `|c(t) − center| > eps`.
    pub fn tail_frequency(&self, t: usize, center: C64, eps: f64) -> f64 {
        let n = self.samples.iter().filter(|s| (s[t] - center).norm() > eps).count();
        n as f64 / self.samples.len() as f64
    }

    /// Interquartile range of `Re c(t)`.
    pub fn iqr(&self, t: usize) -> f64 {
        let mut xs: Vec<f64> = self.samples.iter().map(|s| s[t].re).collect();
        xs.sort_by(|a, b| a.total_cmp(b));
        let q = |p: f64| {
            let pos = p * (xs.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(xs.len() - 1);
            xs[lo] + (pos - lo as f64) * (xs[hi] - xs[lo])
        };
        q(0.75) - q(0.25)
    }
}

// Row-major square operator of dimension `n`.
struct Op {
    n: usize,
    data: Vec<C64>,
}

impl Op {
    fn from_obs(o: &CMat, pad: usize) -> Self {
        // o ⊗ 1_pad
        let d = o.nrows();
        let n = d * pad;
        let mut data = vec![C64::zero(); n * n];
        for i in 0..d {
            for j in 0..d {
                let v = o[(i, j)];
                if v.is_zero() {
                    continue;
                }
                for p in 0..pad {
                    data[(i * pad + p) * n + j * pad + p] = v;
                }
            }
        }
        Self { n, data }
    }

    fn to_cmat(&self) -> CMat {
        CMat::from_fn(self.n, self.n, |i, j| self.data[i * self.n + j])
    }
}

fn row_major(m: &CMat) -> Vec<C64> {
    let n = m.nrows();
    let mut out = vec![C64::zero(); n * m.ncols()];
    for i in 0..n {
        for j in 0..m.ncols() {
            out[i * m.ncols() + j] = m[(i, j)];
        }
    }
    out
}

// c = a · b for row-major blocks; `a` is m×k, `b` k×n with row stride `rsb`.
#[allow(clippy::too_many_arguments)]
fn zgemm(m: usize, k: usize, n: usize, a: &[C64], b: &[C64], rsb: usize, c: &mut [C64], rsc: usize) {
    debug_assert!(a.len() >= m * k);
    debug_assert!(k == 0 || b.len() >= (k - 1) * rsb + n);
    debug_assert!(m == 0 || c.len() >= (m - 1) * rsc + n);
    // SAFETY: Complex<f64> is repr(C) with layout [f64; 2]; the bounds above
    // cover every element the kernel touches.
    unsafe {
        matrixmultiply::zgemm(
            CGemmOption::Standard,
            CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            k as isize,
            1,
            b.as_ptr() as *const [f64; 2],
            rsb as isize,
            1,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            rsc as isize,
            1,
        );
    }
}

// x ← (1_pre ⊗ g ⊗ 1_post) x for a row-major n×n operator x.
fn left_apply(x: &[C64], out: &mut [C64], n: usize, g: &[C64], q: usize, pre: usize) {
    let cols = n * n / (pre * q);
    for p in 0..pre {
        let base = p * q * cols;
        zgemm(q, q, cols, g, &x[base..base + q * cols], cols, &mut out[base..base + q * cols], cols);
    }
}

fn adjoint_into(x: &[C64], out: &mut [C64], n: usize) {
    const B: usize = 32;
    for ib in (0..n).step_by(B) {
        for jb in (0..n).step_by(B) {
            for i in ib..(ib + B).min(n) {
                for j in jb..(jb + B).min(n) {
                    out[j * n + i] = x[i * n + j].conj();
                }
            }
        }
    }
}

// x ← G x G† with G = 1_pre ⊗ g ⊗ 1_post, using (G (G x)†)†.
fn conjugate(x: &mut [C64], scratch: &mut [C64], n: usize, g: &[C64], q: usize, pre: usize) {
    left_apply(x, scratch, n, g, q, pre);
    adjoint_into(scratch, x, n);
    left_apply(x, scratch, n, g, q, pre);
    adjoint_into(scratch, x, n);
}

struct Circuit {
    d_a: usize,
    d_c: usize,
    d_e: usize,
    sites: usize,
    n: usize,
    u: Vec<C64>,
}

impl Circuit {
    // Environment gates of one step as (matrix, local dim, prefix dim),
    // in order of application.
    fn bath_gates(&self, base_seed: u64, sample: u64, step: u64, single: bool) -> Result<Vec<(Vec<C64>, usize, usize)>> {
        let mut gates = Vec::new();
        let ce = self.d_c * self.d_e;
        if single {
            let mut rng = stream(base_seed, sample, step, StreamTag::Bath as u64);
            gates.push((row_major(&sample_haar(ce, &mut rng)?), ce, self.d_a));
            return Ok(gates);
        }
        let ee = self.d_e * self.d_e;
        // odd layer first: pairs (E1,E2), (E3,E4), …
        let mut rng = stream(base_seed, sample, step, StreamTag::BrickOdd as u64);
        let mut x = 1;
        while x < self.sites {
            let pre = self.d_a * self.d_c * self.d_e.pow(x as u32 - 1);
            gates.push((row_major(&sample_haar(ee, &mut rng)?), ee, pre));
            x += 2;
        }
        // even layer: (C,E1), (E2,E3), …
        let mut rng = stream(base_seed, sample, step, StreamTag::Bath as u64);
        gates.push((row_major(&sample_haar(ce, &mut rng)?), ce, self.d_a));
        let mut x = 2;
        while x < self.sites {
            let pre = self.d_a * self.d_c * self.d_e.pow(x as u32 - 1);
            gates.push((row_major(&sample_haar(ee, &mut rng)?), ee, pre));
            x += 2;
        }
        Ok(gates)
    }
}

fn check_inputs(cfg: &McConfig, gate: &Gate, a: &[Observable], b: &[Observable]) -> Result<usize> {
    let n = cfg.validate()?;
    if gate.d_a() != cfg.d_a || gate.d_c() != cfg.d_c {
        return Err(Error::Dimension("gate dimensions differ from the configuration".into()));
    }
    if a.len() != cfg.k || b.len() != cfg.k {
        return Err(Error::Dimension(alloc::format!("need {} observables per side", cfg.k)));
    }
    for o in a.iter().chain(b) {
        if o.d() != cfg.d_a {
            return Err(Error::Dimension(alloc::format!("observables must act on d_A={}", cfg.d_a)));
        }
        let v = hermiticity_violation(o.matrix());
        if v > crate::replica::HERMITIAN_TOL {
            return Err(Error::NotHermitian { violation: v });
        }
    }
    Ok(n)
}

fn circuit(cfg: &McConfig, gate: &Gate, n: usize) -> Circuit {
    Circuit {
        d_a: cfg.d_a,
        d_c: cfg.d_c,
        d_e: cfg.d_e,
        sites: cfg.num_bath_sites(),
        n,
        u: row_major(gate.matrix()),
    }
}

// Tr(x1 x2 ⋯ x2k)/n with the product split in two halves.
fn alternating_trace(ops: &[&Op], n: usize, tmp: &mut Vec<C64>) -> C64 {
    let half = ops.len() / 2;
    let product = |part: &[&Op], tmp: &mut Vec<C64>| -> Vec<C64> {
        let mut acc = part[0].data.clone();
        for o in &part[1..] {
            zgemm(n, n, n, &acc, &o.data, n, tmp, n);
            core::mem::swap(&mut acc, tmp);
        }
        acc
    };
    let l = product(&ops[..half], tmp);
    let r = product(&ops[half..], tmp);
    let mut s = C64::zero();
    for i in 0..n {
        for j in 0..n {
            s += l[i * n + j] * r[j * n + i];
        }
    }
    s / n as f64
}

// One realization; also returns the worst Hermiticity violation seen.
fn run_single(cfg: &McConfig, circ: &Circuit, a: &[Observable], b: &[Observable], sample: u64) -> Result<(Vec<C64>, f64)> {
    let n = circ.n;
    let pad = n / circ.d_a;
    // Evolve each distinct a_i once.
    let mut distinct: Vec<usize> = Vec::new();
    let mut which = Vec::with_capacity(a.len());
    for (i, o) in a.iter().enumerate() {
        match distinct.iter().position(|&j| a[j] == *o) {
            Some(p) => which.push(p),
            None => {
                which.push(distinct.len());
                distinct.push(i);
            }
        }
    }
    let mut evolved: Vec<Op> = distinct.iter().map(|&i| Op::from_obs(a[i].matrix(), pad)).collect();
    let bs: Vec<Op> = b.iter().map(|o| Op::from_obs(o.matrix(), pad)).collect();
    let mut scratch = vec![C64::zero(); n * n];
    let mut values = Vec::with_capacity(cfg.t_max + 1);
    let mut herm = 0.0f64;
    let single = matches!(cfg.bath, BathLayout::Single);
    let record = |evolved: &[Op], scratch: &mut Vec<C64>| {
        let seq: Vec<&Op> = (0..a.len()).flat_map(|i| [&evolved[which[i]], &bs[i]]).collect();
        alternating_trace(&seq, n, scratch)
    };
    values.push(record(&evolved, &mut scratch));
    let dac = circ.d_a * circ.d_c;
    for step in 1..=cfg.t_max {
        let bath = circ.bath_gates(cfg.base_seed, sample, step as u64, single)?;
        for x in evolved.iter_mut() {
            conjugate(&mut x.data, &mut scratch, n, &circ.u, dac, 1);
            for (g, q, pre) in &bath {
                conjugate(&mut x.data, &mut scratch, n, g, *q, *pre);
            }
        }
        values.push(record(&evolved, &mut scratch));
    }
    for x in &evolved {
        herm = herm.max(hermiticity_violation(&x.to_cmat()));
    }
    Ok((values, herm))
}

/// `c(t) = Tr[A1(t)B1 ⋯ Ak(t)Bk]/D` for `t = 0..=t_max` in realization `sample`.
pub fn finite_kotoc_single(cfg: &McConfig, gate: &Gate, a: &[Observable], b: &[Observable], sample: u64) -> Result<Vec<C64>> {
    let n = check_inputs(cfg, gate, a, b)?;
    Ok(run_single(cfg, &circuit(cfg, gate, n), a, b, sample)?.0)
}

/// Mean, variance and standard error over `n_samples` realizations.
pub fn estimate(cfg: &McConfig, gate: &Gate, a: &[Observable], b: &[Observable]) -> Result<McEstimate> {
    let n = check_inputs(cfg, gate, a, b)?;
    let circ = circuit(cfg, gate, n);
    let run = |s: u64| run_single(cfg, &circ, a, b, s);
    #[cfg(feature = "std")]
    let runs: Vec<Result<(Vec<C64>, f64)>> = {
        use rayon::prelude::*;
        (0..cfg.n_samples as u64).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "std"))]
    let runs: Vec<Result<(Vec<C64>, f64)>> = (0..cfg.n_samples as u64).map(run).collect();
    let mut samples = Vec::with_capacity(cfg.n_samples);
    let mut herm = 0.0f64;
    for r in runs {
        let (v, h) = r?;
        herm = herm.max(h);
        samples.push(v);
    }
    let ns = cfg.n_samples as f64;
    let nt = cfg.t_max + 1;
    let mut mean = Vec::with_capacity(nt);
    let mut variance = Vec::with_capacity(nt);
    let mut stderr = Vec::with_capacity(nt);
    for t in 0..nt {
        let col: Vec<C64> = samples.iter().map(|s| s[t]).collect();
        let m = pairwise_sum(&col) / ns;
        let dev: Vec<f64> = col.iter().map(|c| (c - m).norm_sqr()).collect();
        let var = pairwise_sum(&dev) / (ns - 1.0);
        mean.push(m);
        variance.push(var);
        stderr.push((var / ns).sqrt());
    }
    Ok(McEstimate {
        t_values: (0..nt).collect(),
        mean,
        variance,
        stderr,
        n_samples: cfg.n_samples,
        base_seed: cfg.base_seed,
        d_e: cfg.d_e,
        samples,
        max_hermiticity_violation: herm,
    })
}

/// [`estimate`] for a brickwork bath.
pub fn extended_bath_estimate(cfg: &McConfig, gate: &Gate, a: &[Observable], b: &[Observable]) -> Result<McEstimate> {
    if !matches!(cfg.bath, BathLayout::Brickwork(_)) {
        return Err(Error::InvalidParameter("extended bath estimate needs a brickwork layout".into()));
    }
    estimate(cfg, gate, a, b)
}
