//! Markovian evolution on NC(k) ⊗ replica space.
//!
//! A state carries one replica vector per noncrossing partition. The transfer
//! matrix `T_νρ = Σ_{ρ⊆σ⊆ν} M_νσ W_σρ` never lowers the partition, so it is
//! applied block-wise and never stored. Covectors (left states) are stored as
//! conjugated kets, so that [`MarkovState::contract`] is a plain overlap.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use num_traits::Zero;

use crate::channel::{self, ErgodicityClass, Eigenoperators};
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::multichain::{boundary_vectors, check_caps, weingarten_table, Method, OtocSeries};
use crate::ncpart::{catalan, mobius, NcLattice, NcPartition};
use crate::replica::{apply_on_leg, overlap, permutation_vector, Gate, Observable, ReplicaKernel, ReplicaVector};

#[derive(Clone, Debug, PartialEq)]
pub struct MarkovState {
    k: usize,
    d_a: usize,
    // indexed by canonical lattice position; `None` is zero
    components: Vec<Option<ReplicaVector>>,
}

impl MarkovState {
    pub fn zeros(k: usize, d_a: usize) -> Self {
        Self { k, d_a, components: vec![None; catalan(k) as usize] }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.iter().all(Option::is_none)
    }

    pub fn component(&self, i: usize) -> Option<&ReplicaVector> {
        self.components[i].as_ref()
    }

    pub fn component_of(&self, lat: &NcLattice, p: &NcPartition) -> Option<&ReplicaVector> {
        self.component(lat.index_of(p)?)
    }

    pub fn set(&mut self, i: usize, v: ReplicaVector) -> Result<()> {
        if v.d() != self.d_a || v.k() != self.k {
            return Err(Error::Dimension(alloc::format!(
                "component (d={}, k={}) in a state with (d_a={}, k={})",
                v.d(),
                v.k(),
                self.d_a,
                self.k
            )));
        }
        self.components[i] = Some(v);
        Ok(())
    }

    /// `component_i += s · v`.
    pub fn add(&mut self, i: usize, s: C64, v: &ReplicaVector) {
        match &mut self.components[i] {
            Some(x) => x.axpy(s, v),
            slot @ None => {
                let mut x = v.clone();
                x.scale(s);
                *slot = Some(x);
            }
        }
    }

    /// `self += s · other`.
    pub fn axpy(&mut self, s: C64, other: &MarkovState) {
        for (i, c) in other.components.iter().enumerate() {
            if let Some(v) = c {
                self.add(i, s, v);
            }
        }
    }

    pub fn scale(&mut self, s: C64) {
        for v in self.components.iter_mut().flatten() {
            v.scale(s);
        }
    }

    /// `((left|right))` with `left` a stored covector.
    pub fn contract(left: &MarkovState, right: &MarkovState) -> Result<C64> {
        if left.k != right.k || left.d_a != right.d_a {
            return Err(Error::Dimension("states of different shapes".into()));
        }
        let mut s = C64::zero();
        for (l, r) in left.components.iter().zip(&right.components) {
            if let (Some(l), Some(r)) = (l, r) {
                s += overlap(l, r)?;
            }
        }
        Ok(s)
    }

    pub fn max_abs_diff(&self, other: &MarkovState) -> f64 {
        let mut m = 0.0f64;
        for (a, b) in self.components.iter().zip(&other.components) {
            let d = match (a, b) {
                (Some(a), Some(b)) => a.max_abs_diff(b),
                (Some(x), None) | (None, Some(x)) => x.data().iter().map(|z| z.norm()).fold(0.0, f64::max),
                (None, None) => 0.0,
            };
            m = m.max(d);
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().flatten().flat_map(|v| v.data()).map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Applies `m` on one leg of every component.
    pub fn apply_on_leg(&self, leg: usize, m: &CMat) -> Result<MarkovState> {
        let mut out = Self::zeros(self.k, self.d_a);
        for (i, c) in self.components.iter().enumerate() {
            if let Some(v) = c {
                out.components[i] = Some(apply_on_leg(v, leg, m)?);
            }
        }
        Ok(out)
    }

    /// Right action of `m` on one leg of a stored covector.
    pub fn covector_apply_on_leg(&self, leg: usize, m: &CMat) -> Result<MarkovState> {
        let mut out = Self::zeros(self.k, self.d_a);
        for (i, c) in self.components.iter().enumerate() {
            if let Some(v) = c {
                out.components[i] = Some(apply_on_leg(&v.conj(), leg, m)?.conj());
            }
        }
        Ok(out)
    }

    fn check_kernel(&self, kernel: &ReplicaKernel) -> Result<()> {
        if self.k != kernel.k() || self.d_a != kernel.d_a() {
            return Err(Error::Dimension(alloc::format!(
                "state (k={}, d_a={}) with kernel (k={}, d_a={})",
                self.k,
                self.d_a,
                kernel.k(),
                kernel.d_a()
            )));
        }
        Ok(())
    }
}

fn par_components<F>(n: usize, f: F) -> Vec<Option<ReplicaVector>>
where
    F: Fn(usize) -> Option<ReplicaVector> + Sync + Send,
{
    #[cfg(feature = "std")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "std"))]
    {
        (0..n).map(f).collect()
    }
}

/// κ-step: `out_σ = Σ_{ρ⊆σ} W_σρ state_ρ`.
pub fn kappa_step(kernel: &ReplicaKernel, state: &MarkovState) -> Result<MarkovState> {
    state.check_kernel(kernel)?;
    let lat = kernel.lattice();
    let n = lat.len();
    let w = weingarten_table(lat, kernel.d_c());
    let mut out = MarkovState::zeros(state.k, state.d_a);
    for s in 0..n {
        for &r in lat.down_set(s) {
            if let Some(v) = &state.components[r] {
                out.add(s, C64::new(w[s * n + r], 0.0), v);
            }
        }
    }
    Ok(out)
}

/// φ-step: `out_ν = Σ_{σ⊆ν} M_νσ state_σ`.
pub fn phi_step(kernel: &ReplicaKernel, state: &MarkovState) -> Result<MarkovState> {
    state.check_kernel(kernel)?;
    let lat = kernel.lattice();
    let components = par_components(lat.len(), |nu| {
        let mut acc: Option<ReplicaVector> = None;
        for &s in lat.down_set(nu) {
            if let Some(v) = &state.components[s] {
                let mv = kernel.apply(nu, s, v);
                match &mut acc {
                    Some(a) => a.axpy(C64::new(1.0, 0.0), &mv),
                    None => acc = Some(mv),
                }
            }
        }
        acc
    });
    Ok(MarkovState { k: state.k, d_a: state.d_a, components })
}

/// One application of `T`.
pub fn transfer_apply(kernel: &ReplicaKernel, state: &MarkovState) -> Result<MarkovState> {
    phi_step(kernel, &kappa_step(kernel, state)?)
}

/// `(κ-step output, φ-step output)`; the second equals [`transfer_apply`].
pub fn two_step_evolution(kernel: &ReplicaKernel, state: &MarkovState) -> Result<(MarkovState, MarkovState)> {
    let kappa = kappa_step(kernel, state)?;
    let phi = phi_step(kernel, &kappa)?;
    Ok((kappa, phi))
}

/// `|ψ_a))` with every component `d_C^{|ρ|}|a_∘)`, and the covector
/// `((ψ_b|` supported on □ with `(d_A d_C)^{-1}(b_□|`.
pub fn boundary_states(kernel: &ReplicaKernel, a: &[Observable], b: &[Observable]) -> Result<(MarkovState, MarkovState)> {
    let (bottom, top) = boundary_vectors(kernel, a, b)?;
    let (k, d_a, d_c) = (kernel.k(), kernel.d_a(), kernel.d_c() as f64);
    let lat = kernel.lattice();
    let mut psi_a = MarkovState::zeros(k, d_a);
    for (i, p) in lat.partitions().iter().enumerate() {
        psi_a.add(i, C64::new(d_c.powi(p.num_blocks() as i32), 0.0), &bottom);
    }
    let mut psi_b = MarkovState::zeros(k, d_a);
    psi_b.add(lat.top(), C64::new(1.0 / (d_a as f64 * d_c), 0.0), &top);
    Ok((psi_a, psi_b))
}

/// Initial κ-state `d_C^k |a_∘)` on ∘, which the κ-step maps `|ψ_a))` to.
pub fn initial_kappa(kernel: &ReplicaKernel, a: &[Observable], b: &[Observable]) -> Result<MarkovState> {
    let (bottom, _) = boundary_vectors(kernel, a, b)?;
    let mut s = MarkovState::zeros(kernel.k(), kernel.d_a());
    s.add(kernel.lattice().bottom(), C64::new((kernel.d_c() as f64).powi(kernel.k() as i32), 0.0), &bottom);
    Ok(s)
}

pub fn kotoc_transfer(gate: &Gate, a: &[Observable], b: &[Observable], k: usize, t_max: usize) -> Result<OtocSeries> {
    let kernel = ReplicaKernel::new(gate.clone(), k)?;
    kotoc_transfer_with(&kernel, a, b, t_max)
}

/// `C(t) = ((ψ_b| T^t |ψ_a))` for `t = 0..=t_max`.
pub fn kotoc_transfer_with(kernel: &ReplicaKernel, a: &[Observable], b: &[Observable], t_max: usize) -> Result<OtocSeries> {
    check_caps(kernel.d_a(), kernel.k(), t_max)?;
    let (mut state, psi_b) = boundary_states(kernel, a, b)?;
    let (bottom, top) = boundary_vectors(kernel, a, b)?;
    let mut values = Vec::with_capacity(t_max + 1);
    values.push(overlap(&top, &bottom)? / kernel.d_a() as f64);
    for _ in 0..t_max {
        state = transfer_apply(kernel, &state)?;
        values.push(MarkovState::contract(&psi_b, &state)?);
    }
    Ok(OtocSeries::new(kernel.k(), values, Method::Transfer))
}

/// The same series through alternating κ- and φ-steps from [`initial_kappa`].
pub fn kotoc_two_step(kernel: &ReplicaKernel, a: &[Observable], b: &[Observable], t_max: usize) -> Result<OtocSeries> {
    check_caps(kernel.d_a(), kernel.k(), t_max)?;
    let (_, psi_b) = boundary_states(kernel, a, b)?;
    let (bottom, top) = boundary_vectors(kernel, a, b)?;
    let mut kappa = initial_kappa(kernel, a, b)?;
    let mut values = Vec::with_capacity(t_max + 1);
    values.push(overlap(&top, &bottom)? / kernel.d_a() as f64);
    for t in 0..t_max {
        let phi = phi_step(kernel, &kappa)?;
        values.push(MarkovState::contract(&psi_b, &phi)?);
        if t + 1 < t_max {
            kappa = kappa_step(kernel, &phi)?;
        }
    }
    Ok(OtocSeries::new(kernel.k(), values, Method::Transfer))
}

/// Left/right eigenstate pair labelled by a partition, optionally dressed on
/// one slot with the subleading eigenoperators.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenstatePair {
    pub label: NcPartition,
    /// Zero-based slot carrying `a_λ` (right) and `b_λ` (left).
    pub slot: Option<usize>,
    pub right: MarkovState,
    /// Stored covector.
    pub left: MarkovState,
    pub eigenvalue: C64,
}

/// `|φ_σ)) = d_A^{|σ|−k} Σ_{ρ⊇σ} d_C^{|ρ|} |σ)_ρ` and
/// `((κ_ν| = Σ_{ρ⊆ν} (d_A d_C)^{−|ρ|} μ(ν,ρ) (ρ|_ρ`, eigenvalue 1.
pub fn leading_eigenstates(k: usize, d_a: usize, d_c: usize) -> Result<Vec<EigenstatePair>> {
    let lat = NcLattice::new(k)?;
    let perms: Vec<ReplicaVector> = lat.partitions().iter().map(|p| permutation_vector(p, d_a)).collect::<Result<_>>()?;
    let (fa, fc) = (d_a as f64, d_c as f64);
    let mut out = Vec::with_capacity(lat.len());
    for (i, p) in lat.partitions().iter().enumerate() {
        let mut right = MarkovState::zeros(k, d_a);
        let pref = fa.powi(p.num_blocks() as i32 - k as i32);
        for &r in lat.up_set(i) {
            right.add(r, C64::new(pref * fc.powi(lat.get(r).num_blocks() as i32), 0.0), &perms[i]);
        }
        let mut left = MarkovState::zeros(k, d_a);
        for &r in lat.down_set(i) {
            let rho = lat.get(r);
            let w = (fa * fc).powi(-(rho.num_blocks() as i32)) * mobius(p, rho)? as f64;
            left.add(r, C64::new(w, 0.0), &perms[r]);
        }
        out.push(EigenstatePair { label: p.clone(), slot: None, right, left, eigenvalue: C64::new(1.0, 0.0) });
    }
    Ok(out)
}

/// `Σ_σ ((ψ_b|φ_σ)) ((κ_σ|ψ_a))`, the `t → ∞` value for mixing gates.
pub fn steady_state(gate: &Gate, a: &[Observable], b: &[Observable], k: usize) -> Result<C64> {
    let diag = channel::diagnose(gate, channel::DEFAULT_CLASS_TOL)?;
    if diag.ergodicity_class != ErgodicityClass::ErgodicMixing && diag.ergodicity_class != ErgodicityClass::MaximallyErgodic {
        log::warn!("gate is {}; the leading-eigenstate projector is incomplete", diag.ergodicity_class);
    }
    let kernel = ReplicaKernel::new(gate.clone(), k)?;
    steady_state_with(&kernel, a, b)
}

pub fn steady_state_with(kernel: &ReplicaKernel, a: &[Observable], b: &[Observable]) -> Result<C64> {
    let (psi_a, psi_b) = boundary_states(kernel, a, b)?;
    let mut s = C64::zero();
    for pair in leading_eigenstates(kernel.k(), kernel.d_a(), kernel.d_c())? {
        s += MarkovState::contract(&psi_b, &pair.right)? * MarkovState::contract(&pair.left, &psi_a)?;
    }
    Ok(s)
}

/// `ν̃(m, n) = ν ∘ (m n)`: the block of ν holding `m` and `n` split in two so
/// that its Kreweras complement within the block is the transposition `(m n)`.
/// Slots are zero-based.
pub fn nu_tilde(nu: &NcPartition, m: usize, n: usize) -> Result<NcPartition> {
    let k = nu.k();
    if m >= k || n >= k || m == n {
        return Err(Error::InvalidParameter(alloc::format!("slots {m}, {n} must be distinct and below {k}")));
    }
    if nu.block_of(m) != nu.block_of(n) {
        return Err(Error::Order(alloc::format!("{} and {} are in different blocks of {nu}", m + 1, n + 1)));
    }
    let perm: Vec<usize> = (0..k)
        .map(|j| {
            let x = if j == m {
                n
            } else if j == n {
                m
            } else {
                j
            };
            nu.perm()[x]
        })
        .collect();
    NcPartition::from_perm(&perm)
}

/// `|φ^m_σ)) = a_{λ,m}|φ_σ))` and `((κ^n_ν| = ((κ_ν| b_{λ,n}` for every
/// partition and slot, ordered by partition and then slot.
///
/// Slot `m` names the contraction ending on backward leg `m`: `b` sits on
/// that backward leg and `a` on the forward leg `σ(m)` paired with it.
pub fn dressed_eigenstates(kernel: &ReplicaKernel, eig: &Eigenoperators) -> Result<Vec<EigenstatePair>> {
    let (k, d_a) = (kernel.k(), kernel.d_a());
    if eig.a.nrows() != d_a || eig.b.nrows() != d_a {
        return Err(Error::Dimension("eigenoperators do not act on A".into()));
    }
    let leading = leading_eigenstates(k, d_a, kernel.d_c())?;
    let mut out = Vec::with_capacity(leading.len() * k);
    for pair in &leading {
        for slot in 0..k {
            out.push(EigenstatePair {
                label: pair.label.clone(),
                slot: Some(slot),
                right: pair.right.apply_on_leg(2 * pair.label.perm()[slot], &eig.a)?,
                left: pair.left.covector_apply_on_leg(2 * slot + 1, &eig.b)?,
                eigenvalue: eig.lambda,
            });
        }
    }
    Ok(out)
}

/// Subleading eigenoperators of the gate's channel, refusing degenerate or
/// complex `λ`.
pub fn subleading_eigenoperators(gate: &Gate) -> Result<Eigenoperators> {
    let diag = channel::diagnose(gate, channel::DEFAULT_CLASS_TOL)?;
    if diag.lambda_sub.im.abs() > 1e-10 {
        return Err(Error::Unsupported(alloc::format!("complex subleading eigenvalue {}", diag.lambda_sub)));
    }
    channel::eigenoperators(&diag, &channel::build_channel(gate))
}

/// Left states `((κ̃^n_ν| = ((κ^n_ν| − Σ_{m≠n} ((κ̃^m_{ν̃(m,n)}|` for the
/// output of [`dressed_eigenstates`], in the same order; the sum runs over
/// the other elements of the block of ν holding `n`.
pub fn biorthogonalize(lat: &NcLattice, pairs: &[EigenstatePair]) -> Result<Vec<MarkovState>> {
    let k = lat.k();
    if pairs.len() != lat.len() * k {
        return Err(Error::Dimension("expected one dressed pair per partition and slot".into()));
    }
    let pos = |nu: usize, n: usize| nu * k + n;
    let block_len = |nu: usize, n: usize| {
        let p = lat.get(nu);
        p.blocks()[p.block_of(n)].len()
    };
    let mut order: Vec<(usize, usize)> = (0..lat.len()).flat_map(|nu| (0..k).map(move |n| (nu, n))).collect();
    // a smaller block for `n` is always resolved first
    order.sort_by_key(|&(nu, n)| block_len(nu, n));
    let mut out: Vec<Option<MarkovState>> = vec![None; pairs.len()];
    for (nu, n) in order {
        let p = lat.get(nu);
        let mut left = pairs[pos(nu, n)].left.clone();
        for &m in &p.blocks()[p.block_of(n)] {
            if m == n {
                continue;
            }
            let t = lat.index_of(&nu_tilde(p, m, n)?).expect("ν̃ is noncrossing");
            let prev = out[pos(t, m)].as_ref().expect("resolved earlier");
            left.axpy(C64::new(-1.0, 0.0), prev);
        }
        out[pos(nu, n)] = Some(left);
    }
    Ok(out.into_iter().map(|s| s.expect("all resolved")).collect())
}

/// Right eigenstate dressed with `a_λ` on several slots, eigenvalue
/// `λ^{|slots|}`. Dressed slots must lie in distinct blocks of the Kreweras
/// complement `σ*`, i.e. in distinct loops closed by the top boundary.
#[cfg(feature = "multi-dressing")]
pub fn multi_dressed_right(kernel: &ReplicaKernel, eig: &Eigenoperators, sigma: &NcPartition, slots: &[usize]) -> Result<MarkovState> {
    let comp = crate::ncpart::kreweras(sigma);
    for (i, &x) in slots.iter().enumerate() {
        if x >= sigma.k() {
            return Err(Error::InvalidParameter(alloc::format!("slot {} out of range", x + 1)));
        }
        if slots[..i].iter().any(|&y| comp.block_of(y) == comp.block_of(x)) {
            return Err(Error::InvalidParameter(alloc::format!("slot {} shares a loop with another dressed slot", x + 1)));
        }
    }
    let lat = kernel.lattice();
    let idx = lat.index_of(sigma).ok_or_else(|| Error::InvalidPartition("not in NC(k)".into()))?;
    let mut s = leading_eigenstates(kernel.k(), kernel.d_a(), kernel.d_c())?.swap_remove(idx).right;
    for &x in slots {
        s = s.apply_on_leg(2 * sigma.perm()[x], &eig.a)?;
    }
    Ok(s)
}
