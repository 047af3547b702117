//! The averaged environment as a matrix product state on the temporal
//! lattice, with bond dimension `C_k` and physical dimension `d_C^{2k}`.
//!
//! Each time step contributes a W-site (bond `ρ → σ`, weight `W_ρσ`,
//! physical ket `|σ)_C` fed into the gate) followed by a ζ-site (bond
//! `σ → ν` for `σ ⊆ ν`, physical covector `(ν|_C` read off the gate). The
//! folded gate carries the factor `d_C^{−k}` per step.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::multichain::{boundary_vectors, weingarten_table, MAX_T};
use crate::ncpart::{check_chain_caps, MultichainIndexIter, NcLattice};
use crate::replica::{leg_apply_acc, overlap, permutation_vector, Gate, Observable, ReplicaVector};

/// Largest physical dimension `d_C^{2k}` accepted for export.
pub const MAX_PHYS_DIM: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiteKind {
    W,
    Zeta,
}

impl SiteKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SiteKind::W => "W",
            SiteKind::Zeta => "zeta",
        }
    }
}

/// Site tensor `T[in][out][c] = bond[in][out] · phys[out][c]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Site {
    pub kind: SiteKind,
    /// Row-major `C_k × C_k`.
    pub bond: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InfluenceMps {
    pub k: usize,
    pub d_a: usize,
    pub d_c: usize,
    pub t: usize,
    pub bond_dim: usize,
    pub phys_dim: usize,
    /// `|σ)_C` for every partition, canonical order, C legs laid out as the
    /// replica legs.
    pub phys: Vec<Vec<f64>>,
    pub sites: Vec<Site>,
    /// `d_C^{|ρ|}`.
    pub bottom: Vec<f64>,
    /// `(d_A d_C)^{−1} δ_{ν□}`.
    pub top: Vec<f64>,
    /// `d_C^{−k}`, applied with every gate.
    pub step_scale: f64,
}

pub fn export_influence_mps(k: usize, d_a: usize, d_c: usize, t: usize) -> Result<InfluenceMps> {
    check_chain_caps(k, t)?;
    if t > MAX_T {
        return Err(Error::SizeLimit(alloc::format!("t={t} exceeds {MAX_T}")));
    }
    let phys_dim = d_c.checked_pow(2 * k as u32).filter(|&p| p <= MAX_PHYS_DIM).ok_or_else(|| {
        Error::SizeLimit(alloc::format!("physical dimension {d_c}^(2*{k}) exceeds {MAX_PHYS_DIM}"))
    })?;
    let lat = NcLattice::new(k)?;
    let n = lat.len();
    let phys = lat
        .partitions()
        .iter()
        .map(|p| Ok(permutation_vector(p, d_c)?.data().iter().map(|z| z.re).collect()))
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let w = weingarten_table(&lat, d_c);
    let mut wbond = vec![0.0; n * n];
    let mut zbond = vec![0.0; n * n];
    for i in 0..n {
        for &j in lat.up_set(i) {
            wbond[i * n + j] = w[i * n + j];
            zbond[i * n + j] = 1.0;
        }
    }
    let mut sites = Vec::with_capacity(2 * t);
    for _ in 0..t {
        sites.push(Site { kind: SiteKind::W, bond: wbond.clone() });
        sites.push(Site { kind: SiteKind::Zeta, bond: zbond.clone() });
    }
    let bottom = lat.partitions().iter().map(|p| (d_c as f64).powi(p.num_blocks() as i32)).collect();
    let mut top = vec![0.0; n];
    top[lat.top()] = 1.0 / (d_a * d_c) as f64;
    Ok(InfluenceMps {
        k,
        d_a,
        d_c,
        t,
        bond_dim: n,
        phys_dim,
        phys,
        sites,
        bottom,
        top,
        step_scale: (d_c as f64).powi(-(k as i32)),
    })
}

impl InfluenceMps {
    /// Dense site tensor `[in][out][c]`.
    pub fn tensor(&self, site: usize) -> Vec<f64> {
        let (n, p) = (self.bond_dim, self.phys_dim);
        let s = &self.sites[site];
        let mut out = vec![0.0; n * n * p];
        for i in 0..n {
            for j in 0..n {
                let b = s.bond[i * n + j];
                if b != 0.0 {
                    for (c, &v) in self.phys[j].iter().enumerate() {
                        out[(i * n + j) * p + c] = b * v;
                    }
                }
            }
        }
        out
    }

    /// Nonzero components: the bond path `(σ_1, ν_1, …, σ_t, ν_t)` and its
    /// weight, with the boundaries folded in.
    pub fn components(&self) -> Vec<(Vec<usize>, f64)> {
        let lat = NcLattice::new(self.k).expect("validated at export");
        let n = self.bond_dim;
        let first: Vec<f64> = (0..n).map(|s| (0..n).map(|r| self.bottom[r] * self.sites[0].bond[r * n + s]).sum()).collect();
        let mut out = Vec::new();
        for path in MultichainIndexIter::new(&lat, self.t) {
            let mut w = first[path[0]] * self.top[path[2 * self.t - 1]];
            for (i, pair) in path.windows(2).enumerate() {
                w *= self.sites[i + 1].bond[pair[0] * n + pair[1]];
            }
            if w != 0.0 {
                out.push((path, w));
            }
        }
        out
    }

    /// `C(t)` by contracting the dense site tensors with the folded gate,
    /// summing over the nonzero C configurations of each site.
    pub fn recontract(&self, gate: &Gate, a: &[Observable], b: &[Observable]) -> Result<Vec<C64>> {
        if gate.d_c() != self.d_c || gate.d_a() != self.d_a {
            return Err(Error::Dimension("gate does not match the exported dimensions".into()));
        }
        let kernel = crate::replica::ReplicaKernel::with_options(gate.clone(), self.k, crate::replica::Strategy::OnTheFly, 0)?;
        let (bottom_vec, top_vec) = boundary_vectors(&kernel, a, b)?;
        let (n, p, k) = (self.bond_dim, self.phys_dim, self.k);
        let d_a = self.d_a;
        let d_c = self.d_c;
        let dim = bottom_vec.len();
        // U blocks, row-major d_A × d_A, keyed by (c_out, c_in)
        let blocks: Vec<Vec<C64>> = (0..d_c * d_c)
            .map(|x| {
                let (co, ci) = (x / d_c, x % d_c);
                (0..d_a * d_a).map(|y| gate.elem(y / d_a, co, y % d_a, ci)).collect()
            })
            .collect();
        let mut state: Vec<Option<Vec<C64>>> =
            self.bottom.iter().map(|&w| Some(bottom_vec.data().iter().map(|z| z * w).collect())).collect();
        let mut values = Vec::with_capacity(self.t);
        let digits = |mut c: usize| {
            let mut d = vec![0usize; 2 * k];
            for x in d.iter_mut() {
                *x = c % d_c;
                c /= d_c;
            }
            d
        };
        for step in 0..self.t {
            let wt = self.tensor(2 * step);
            let zt = self.tensor(2 * step + 1);
            let mut next: Vec<Option<Vec<C64>>> = vec![None; n];
            for sig in 0..n {
                // W-site: per nonzero C input, Σ_in T[in][σ][c] x_in
                let mut fed: Vec<(usize, Vec<C64>)> = Vec::new();
                for c in 0..p {
                    let mut y: Option<Vec<C64>> = None;
                    for (s_in, x) in state.iter().enumerate() {
                        let (Some(x), w) = (x, wt[(s_in * n + sig) * p + c]) else { continue };
                        if w == 0.0 {
                            continue;
                        }
                        let y = y.get_or_insert_with(|| vec![C64::zero(); dim]);
                        for (a, b) in y.iter_mut().zip(x) {
                            *a += b * w;
                        }
                    }
                    if let Some(y) = y {
                        fed.push((c, y));
                    }
                }
                if fed.is_empty() {
                    continue;
                }
                for nu in 0..n {
                    let cout: Vec<(usize, f64)> =
                        (0..p).map(|c| (c, zt[(sig * n + nu) * p + c])).filter(|e| e.1 != 0.0).collect();
                    if cout.is_empty() {
                        continue;
                    }
                    let acc = next[nu].get_or_insert_with(|| vec![C64::zero(); dim]);
                    for (ci, y) in &fed {
                        let di = digits(*ci);
                        for &(co, wo) in &cout {
                            let dout = digits(co);
                            // forward legs carry U, backward legs U*
                            let mut v = y.clone();
                            let mut o = vec![C64::zero(); dim];
                            for leg in 0..2 * k {
                                let blk = &blocks[dout[leg] * d_c + di[leg]];
                                o.iter_mut().for_each(|z| *z = C64::zero());
                                leg_apply_acc(&mut o, &v, d_a, d_a.pow(leg as u32), blk, leg % 2 == 1);
                                core::mem::swap(&mut v, &mut o);
                            }
                            let f = wo * self.step_scale;
                            for (a, y) in acc.iter_mut().zip(&v) {
                                *a += y * f;
                            }
                        }
                    }
                }
            }
            state = next;
            let mut val = C64::zero();
            for (nu, s) in state.iter().enumerate() {
                if let Some(v) = s {
                    if self.top[nu] != 0.0 {
                        let rv = ReplicaVector::from_data(d_a, k, v.clone())?;
                        val += overlap(&top_vec, &rv)? * self.top[nu];
                    }
                }
            }
            values.push(val);
        }
        Ok(values)
    }
}
