//! Moments, free cumulants and the free-probability steady state.
//!
//! `φ(x) = Tr(x)/d`. Block products are taken in ascending element order.

use alloc::vec::Vec;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::{trace, CMat, C64};
use crate::ncpart::{kreweras, leq_unchecked, mobius, NcLattice, NcPartition};
use crate::replica::Observable;

fn check(k: usize, ops: &[Observable]) -> Result<usize> {
    if ops.len() != k || k == 0 {
        return Err(Error::Dimension(alloc::format!("expected {k} operators, got {}", ops.len())));
    }
    let d = ops[0].d();
    if ops.iter().any(|o| o.d() != d) {
        return Err(Error::Dimension("operators of different dimensions".into()));
    }
    Ok(d)
}

/// `φ_ν = ∏_{V ∈ ν} φ(a_{V(1)} ⋯ a_{V(|V|)})`.
pub fn moment(nu: &NcPartition, ops: &[Observable]) -> Result<C64> {
    let d = check(nu.k(), ops)?;
    let mut val = C64::new(1.0, 0.0);
    for b in nu.blocks() {
        let mut p: CMat = ops[b[0]].matrix().clone();
        for &x in &b[1..] {
            p *= ops[x].matrix();
        }
        val *= trace(&p) / d as f64;
    }
    Ok(val)
}

/// `κ_σ = Σ_{ν ⊆ σ} φ_ν μ(ν, σ)`.
pub fn free_cumulant(sigma: &NcPartition, ops: &[Observable]) -> Result<C64> {
    check(sigma.k(), ops)?;
    let lat = NcLattice::new(sigma.k())?;
    let mut s = C64::zero();
    for nu in lat.partitions() {
        if leq_unchecked(nu, sigma) {
            s += moment(nu, ops)? * mobius(nu, sigma)? as f64;
        }
    }
    Ok(s)
}

/// `φ_ν` for every ν ∈ NC(k), in canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    pub k: usize,
    pub values: Vec<C64>,
}

/// `κ_σ` for every σ ∈ NC(k), in canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct CumulantTable {
    pub k: usize,
    pub values: Vec<C64>,
}

impl MomentTable {
    pub fn new(lat: &NcLattice, ops: &[Observable]) -> Result<Self> {
        let values = lat.partitions().iter().map(|p| moment(p, ops)).collect::<Result<Vec<_>>>()?;
        Ok(Self { k: lat.k(), values })
    }

    /// Möbius inversion to cumulants.
    pub fn to_cumulants(&self, lat: &NcLattice) -> CumulantTable {
        let values = (0..lat.len())
            .map(|s| {
                lat.down_set(s)
                    .iter()
                    .map(|&n| self.values[n] * mobius(lat.get(n), lat.get(s)).unwrap() as f64)
                    .sum()
            })
            .collect();
        CumulantTable { k: self.k, values }
    }
}

impl CumulantTable {
    pub fn new(lat: &NcLattice, ops: &[Observable]) -> Result<Self> {
        Ok(MomentTable::new(lat, ops)?.to_cumulants(lat))
    }

    /// Zeta transform back to moments, `φ_ν = Σ_{σ ⊆ ν} κ_σ`.
    pub fn to_moments(&self, lat: &NcLattice) -> MomentTable {
        let values = (0..lat.len()).map(|n| lat.down_set(n).iter().map(|&s| self.values[s]).sum()).collect();
        MomentTable { k: self.k, values }
    }
}

/// `|φ_□ − Σ_σ κ_σ|`.
pub fn roundtrip_check(k: usize, ops: &[Observable]) -> Result<f64> {
    if k > 5 {
        return Err(Error::SizeLimit(alloc::format!("roundtrip_check needs k <= 5, got {k}")));
    }
    let lat = NcLattice::new(k)?;
    let cum = CumulantTable::new(&lat, ops)?;
    let full = moment(lat.get(lat.top()), ops)?;
    let sum: C64 = cum.values.iter().sum();
    Ok((full - sum).norm())
}

/// `Σ_σ κ_σ(a) φ_{σ*}(b)`.
pub fn steady_state_prediction(k: usize, a_ops: &[Observable], b_ops: &[Observable]) -> Result<C64> {
    Ok(steady_state_terms(k, a_ops, b_ops)?.iter().map(|t| t.1 * t.2).sum())
}

/// Per-partition breakdown `(σ, κ_σ(a), φ_{σ*}(b))`.
pub fn steady_state_terms(k: usize, a_ops: &[Observable], b_ops: &[Observable]) -> Result<Vec<(NcPartition, C64, C64)>> {
    if k > 5 {
        return Err(Error::SizeLimit(alloc::format!("steady state prediction needs k <= 5, got {k}")));
    }
    let lat = NcLattice::new(k)?;
    let cum = CumulantTable::new(&lat, a_ops)?;
    check(k, b_ops)?;
    lat.partitions()
        .iter()
        .zip(&cum.values)
        .map(|(s, &kap)| Ok((s.clone(), kap, moment(&kreweras(s), b_ops)?)))
        .collect()
}
