//! k-OTOCs in the infinite-bath limit as a sum over multichains,
//!
//! `C(t) = d_A^{−1} d_C^{k−1} Σ_Σ W_Σ (b_□| M_{ν_t σ_t} ⋯ M_{ν_1 σ_1} |a_∘)`,
//!
//! evaluated depth-first so that chains sharing a prefix share its channel
//! products.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::ncpart::{check_chain_caps, combined_singletons, cycle_count_rel, mobius, Multichain, MultichainIndexIter, NcLattice, NcPartition};
use crate::replica::{dress_bottom, dress_top, overlap, Gate, Observable, ReplicaKernel, ReplicaVector};

pub const MAX_T: usize = 64;
pub const MAX_AUDIT_CHAINS: u64 = 1_000_000;

/// `W_νσ = d_C^{−k + |ν^{-1}σ|} μ(ν, σ)`.
pub fn weingarten_factor(nu: &NcPartition, sigma: &NcPartition, d_c: usize) -> Result<f64> {
    let k = nu.k() as i32;
    let cyc = cycle_count_rel(nu, sigma)? as i32;
    Ok((d_c as f64).powi(cyc - k) * mobius(nu, sigma)? as f64)
}

/// Dense table `W[ν][σ]` over lattice indices.
pub(crate) fn weingarten_table(lat: &NcLattice, d_c: usize) -> Vec<f64> {
    let n = lat.len();
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            w[i * n + j] = weingarten_factor(lat.get(i), lat.get(j), d_c).expect("same k");
        }
    }
    w
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Multichain,
    Transfer,
    MonteCarlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Multichain => "multichain",
            Method::Transfer => "transfer",
            Method::MonteCarlo => "montecarlo",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Provenance {
    pub gate_hash: Option<String>,
    pub seeds: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OtocSeries {
    pub k: usize,
    pub t_values: Vec<usize>,
    pub values: Vec<C64>,
    pub method: Method,
    /// Largest `|Im C(t)|` over the series.
    pub max_imag: f64,
    pub provenance: Provenance,
}

impl OtocSeries {
    pub(crate) fn new(k: usize, values: Vec<C64>, method: Method) -> Self {
        let max_imag = values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        Self { k, t_values: (0..values.len()).collect(), values, method, max_imag, provenance: Provenance::default() }
    }

    pub fn at(&self, t: usize) -> Option<C64> {
        self.t_values.iter().position(|&x| x == t).map(|i| self.values[i])
    }
}

/// Memory policy for thermodynamic-limit evaluation.
pub fn check_caps(d_a: usize, k: usize, t_max: usize) -> Result<()> {
    let k_max = match d_a {
        2 => 5,
        3 => 4,
        _ => 3,
    };
    if k == 0 || k > k_max {
        return Err(Error::SizeLimit(alloc::format!("k={k} exceeds the cap {k_max} for d_A={d_a}")));
    }
    if t_max > MAX_T {
        return Err(Error::SizeLimit(alloc::format!("t_max={t_max} exceeds {MAX_T}")));
    }
    Ok(())
}

pub(crate) fn boundary_vectors(kernel: &ReplicaKernel, a: &[Observable], b: &[Observable]) -> Result<(ReplicaVector, ReplicaVector)> {
    let k = kernel.k();
    if a.len() != k || b.len() != k {
        return Err(Error::Dimension(alloc::format!("need {k} observables per side")));
    }
    if a.iter().chain(b).any(|o| o.d() != kernel.d_a()) {
        return Err(Error::Dimension(alloc::format!("observables must act on d_A={}", kernel.d_a())));
    }
    let bottom = dress_bottom(a, &NcPartition::identity(k))?;
    let top = dress_top(b)?;
    Ok((bottom, top))
}

pub fn kotoc_multichain(gate: &Gate, a: &[Observable], b: &[Observable], k: usize, t_max: usize) -> Result<OtocSeries> {
    let kernel = ReplicaKernel::new(gate.clone(), k)?;
    kotoc_multichain_with(&kernel, a, b, t_max)
}

struct Walk<'a> {
    kernel: &'a ReplicaKernel,
    w: &'a [f64],
    top: &'a ReplicaVector,
    t_max: usize,
}

impl Walk<'_> {
    // `v` is the vector after `level` steps, the last one ending at `nu`.
    fn visit(&self, level: usize, nu: usize, weight: f64, v: &ReplicaVector, acc: &mut [C64]) {
        let lat = self.kernel.lattice();
        if nu == lat.top() {
            acc[level] += overlap(self.top, v).expect("same shape") * weight;
        }
        if level == self.t_max {
            return;
        }
        let n = lat.len();
        for &s in lat.up_set(nu) {
            let w2 = weight * self.w[nu * n + s];
            for &nu2 in lat.up_set(s) {
                let v2 = self.kernel.apply(nu2, s, v);
                self.visit(level + 1, nu2, w2, &v2, acc);
            }
        }
    }
}

pub fn kotoc_multichain_with(kernel: &ReplicaKernel, a: &[Observable], b: &[Observable], t_max: usize) -> Result<OtocSeries> {
    let (k, d_a, d_c) = (kernel.k(), kernel.d_a(), kernel.d_c());
    check_caps(d_a, k, t_max)?;
    let (bottom, top) = boundary_vectors(kernel, a, b)?;
    let lat = kernel.lattice();
    let w = weingarten_table(lat, d_c);
    let walk = Walk { kernel, w: &w, top: &top, t_max };

    let mut sums = vec![C64::zero(); t_max + 1];
    if t_max >= 1 {
        let branches: Vec<usize> = lat.up_set(lat.bottom()).to_vec();
        let run = |&nu1: &usize| {
            let mut acc = vec![C64::zero(); t_max + 1];
            let v1 = kernel.apply(nu1, lat.bottom(), &bottom);
            walk.visit(1, nu1, 1.0, &v1, &mut acc);
            acc
        };
        #[cfg(feature = "std")]
        let parts: Vec<Vec<C64>> = {
            use rayon::prelude::*;
            branches.par_iter().map(run).collect()
        };
        #[cfg(not(feature = "std"))]
        let parts: Vec<Vec<C64>> = branches.iter().map(run).collect();
        for p in parts {
            for (s, x) in sums.iter_mut().zip(p) {
                *s += x;
            }
        }
    }
    let pref = (d_c as f64).powi(k as i32 - 1) / d_a as f64;
    let mut values: Vec<C64> = sums.iter().map(|s| s * pref).collect();
    values[0] = overlap(&top, &bottom)? / d_a as f64;
    Ok(OtocSeries::new(k, values, Method::Multichain))
}

/// Number of multichains with `k` elements and `t` steps, by enumeration.
pub fn count_multichains(k: usize, t: usize) -> Result<u64> {
    check_chain_caps(k, t)?;
    let lat = NcLattice::new(k)?;
    Ok(MultichainIndexIter::new(&lat, t).count() as u64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainContribution {
    pub chain: Multichain,
    /// `W_Σ = ∏_{i<t} W_{ν_i σ_{i+1}}`.
    pub weight: f64,
    /// `(b_□| M_Σ |a_∘)`.
    pub value: C64,
    /// Smallest `n(σ) + n(σ*)` along the chain (1 for `k = 1`).
    pub m: usize,
    /// `r^{m(t−k+1)} ∏‖a_i‖₂ ∏‖b_i‖₂`.
    pub bound: f64,
    pub within_bound: bool,
}

/// Per-chain weights and values with the diagonal-decay audit at rate `r`.
pub fn chain_audit(kernel: &ReplicaKernel, a: &[Observable], b: &[Observable], t: usize, r: f64) -> Result<Vec<ChainContribution>> {
    let k = kernel.k();
    let n_chains = count_multichains(k, t)?;
    if n_chains > MAX_AUDIT_CHAINS {
        return Err(Error::SizeLimit(alloc::format!("{n_chains} chains exceed the audit cap {MAX_AUDIT_CHAINS}")));
    }
    let (bottom, top) = boundary_vectors(kernel, a, b)?;
    let lat = kernel.lattice();
    let w = weingarten_table(lat, kernel.d_c());
    let n = lat.len();
    let norms: f64 = a.iter().chain(b).map(|o| o.norm2()).product();
    let exponent = (t as i64 - k as i64 + 1).max(0) as i32;
    let mut out = Vec::with_capacity(n_chains as usize);
    for idx in MultichainIndexIter::new(lat, t) {
        let mut v = bottom.clone();
        let mut weight = 1.0;
        for i in 0..t {
            v = kernel.apply(idx[2 * i + 1], idx[2 * i], &v);
            if i + 1 < t {
                weight *= w[idx[2 * i + 1] * n + idx[2 * i + 2]];
            }
        }
        let value = overlap(&top, &v)?;
        let m = if k == 1 { 1 } else { idx.iter().map(|&i| combined_singletons(lat.get(i))).min().unwrap() };
        let bound = r.powi(m as i32 * exponent) * norms;
        let within_bound = value.norm() <= bound * (1.0 + 1e-9) + 1e-12;
        out.push(ChainContribution {
            chain: Multichain { k, t, seq: idx.iter().map(|&i| lat.get(i).clone()).collect() },
            weight,
            value,
            m,
            bound,
            within_bound,
        });
    }
    Ok(out)
}
