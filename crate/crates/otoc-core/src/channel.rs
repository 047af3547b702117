//! The single-replica channel `M(a) = Tr_C[U(a ⊗ 1)U†]/d_C` and its
//! diagnostics.
//!
//! Operators are vectorized as `vec(a)[i + d·i'] = a[i][i']`, which is the
//! `k = 1` replica layout.

use alloc::vec::Vec;
use core::fmt;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec, C64};
use crate::replica::Gate;

pub const DEFAULT_CLASS_TOL: f64 = 1e-8;

pub fn vectorize(a: &CMat) -> CVec {
    let d = a.nrows();
    CVec::from_fn(d * d, |idx, _| a[(idx % d, idx / d)])
}

pub fn unvectorize(v: &CVec, d: usize) -> CMat {
    CMat::from_fn(d, d, |i, ip| v[i + d * ip])
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelMatrix {
    d_a: usize,
    m: CMat,
}

pub fn build_channel(gate: &Gate) -> ChannelMatrix {
    let (d, d_c) = (gate.d_a(), gate.d_c());
    let n = d * d;
    let mut m = CMat::zeros(n, n);
    let inv = 1.0 / d_c as f64;
    for i in 0..d {
        for ip in 0..d {
            for j in 0..d {
                for jp in 0..d {
                    let mut s = C64::zero();
                    for cc in 0..d_c {
                        for cp in 0..d_c {
                            s += gate.elem(i, cc, j, cp) * gate.elem(ip, cc, jp, cp).conj();
                        }
                    }
                    m[(i + d * ip, j + d * jp)] = s * inv;
                }
            }
        }
    }
    ChannelMatrix { d_a: d, m }
}

impl ChannelMatrix {
    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn apply(&self, a: &CMat) -> CMat {
        unvectorize(&(&self.m * vectorize(a)), self.d_a)
    }

    /// `max |M(1) − 1|`.
    pub fn unitality_violation(&self) -> f64 {
        let id = CMat::identity(self.d_a, self.d_a);
        linalg::max_abs_diff(&self.apply(&id), &id)
    }

    /// `max |Tr M(E_{jj'}) − δ_{jj'}|`.
    pub fn trace_violation(&self) -> f64 {
        let d = self.d_a;
        let mut worst: f64 = 0.0;
        for j in 0..d {
            for jp in 0..d {
                let tr: C64 = (0..d).map(|i| self.m[(i + d * i, j + d * jp)]).sum();
                let target = if j == jp { 1.0 } else { 0.0 };
                worst = worst.max((tr - target).norm());
            }
        }
        worst
    }

    /// Choi matrix `Σ_{jj'} E_{jj'} ⊗ M(E_{jj'})`.
    pub fn choi(&self) -> CMat {
        let d = self.d_a;
        CMat::from_fn(d * d, d * d, |r, col| {
            let (j, i) = (r / d, r % d);
            let (jp, ip) = (col / d, col % d);
            self.m[(i + d * ip, j + d * jp)]
        })
    }

    pub fn choi_min_eigenvalue(&self) -> f64 {
        let eig = nalgebra::SymmetricEigen::new(self.choi());
        eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErgodicityClass {
    NonInteracting,
    NonErgodic,
    ErgodicNonMixing,
    ErgodicMixing,
    MaximallyErgodic,
}

impl ErgodicityClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::NonInteracting => "non-interacting",
            Self::NonErgodic => "non-ergodic",
            Self::ErgodicNonMixing => "ergodic-non-mixing",
            Self::ErgodicMixing => "ergodic-mixing",
            Self::MaximallyErgodic => "maximally-ergodic",
        }
    }
}

impl fmt::Display for ErgodicityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelDiagnostics {
    pub d_a: usize,
    /// All eigenvalues, modulus-descending.
    pub eigenvalues: Vec<C64>,
    /// Position of the identity mode in `eigenvalues`.
    pub trivial_index: usize,
    pub lambda_sub: C64,
    pub restricted_norm: f64,
    pub op_entropy: f64,
    pub mixing_bound: Option<f64>,
    pub ergodicity_class: ErgodicityClass,
    /// `None` when `d_A ≠ d_C`.
    pub dual_unitary: Option<bool>,
    pub tol: f64,
}

fn sort_spectrum(ev: &mut [C64]) {
    ev.sort_by(|a, b| {
        b.norm()
            .partial_cmp(&a.norm())
            .unwrap()
            .then(b.re.partial_cmp(&a.re).unwrap())
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
}

/// Squared overlap of the normalized identity with the eigenspace of `lambda`.
fn identity_weight(m: &CMat, lambda: C64, d: usize) -> f64 {
    let n = d * d;
    let shifted = m - CMat::identity(n, n) * lambda;
    let (basis, _) = linalg::null_space(&shifted, 1e-6);
    let id = vectorize(&CMat::identity(d, d)).unscale((d as f64).sqrt());
    basis.iter().map(|v| v.dotc(&id).norm_sqr()).sum()
}

pub fn diagnose(gate: &Gate, tol: f64) -> Result<ChannelDiagnostics> {
    if !(tol > 0.0 && tol <= 1e-2) {
        return Err(Error::InvalidParameter(alloc::format!("class tolerance {tol} outside (0, 1e-2]")));
    }
    let ch = build_channel(gate);
    let d = ch.d_a;
    let mut ev = linalg::eigenvalues(&ch.m)?;
    sort_spectrum(&mut ev);

    let unit_tol = tol.max(1e-8);
    let mut trivial = None;
    let mut best = 0.0;
    for (i, &l) in ev.iter().enumerate() {
        if (l.norm() - 1.0).abs() > unit_tol {
            continue;
        }
        let w = identity_weight(&ch.m, l, d);
        // prefer the candidate closest to 1 among those passing the overlap test
        if w > 0.99 && (trivial.is_none() || (l - 1.0).norm() < best) {
            best = (l - 1.0).norm();
            trivial = Some(i);
        }
    }
    let trivial_index = trivial.ok_or_else(|| {
        Error::Degenerate(alloc::format!("no unit-modulus eigenvector overlaps the identity; spectrum {ev:?}"))
    })?;
    let rest: Vec<C64> = ev.iter().enumerate().filter(|&(i, _)| i != trivial_index).map(|(_, &l)| l).collect();
    let lambda_sub = rest.first().copied().unwrap_or(C64::zero());

    let n_one = ev.iter().filter(|l| (*l - 1.0).norm() < tol).count();
    let all_unit = ev.iter().all(|l| (l.norm() - 1.0).abs() < tol);
    let class = if all_unit {
        ErgodicityClass::NonInteracting
    } else if n_one > 1 {
        ErgodicityClass::NonErgodic
    } else if rest.iter().any(|l| l.norm() > 1.0 - tol) {
        ErgodicityClass::ErgodicNonMixing
    } else if rest.iter().all(|l| l.norm() < tol) {
        ErgodicityClass::MaximallyErgodic
    } else {
        ErgodicityClass::ErgodicMixing
    };

    let dual_unitary = if gate.d_a() == gate.d_c() { Some(is_dual_unitary(gate, 1e-10)?) } else { None };
    Ok(ChannelDiagnostics {
        d_a: d,
        eigenvalues: ev,
        trivial_index,
        lambda_sub,
        restricted_norm: restricted_norm(&ch),
        op_entropy: operator_entropy(gate),
        mixing_bound: mixing_bound(gate),
        ergodicity_class: class,
        dual_unitary,
        tol,
    })
}

/// Largest singular value of `M` on the traceless subspace, `‖Q M Q‖` with
/// `Q` the projector orthogonal to the identity.
pub fn restricted_norm(ch: &ChannelMatrix) -> f64 {
    let d = ch.d_a;
    let n = d * d;
    let id = vectorize(&CMat::identity(d, d)).unscale((d as f64).sqrt());
    let q = CMat::identity(n, n) - &id * id.adjoint();
    let mq = &q * &ch.m * &q;
    linalg::singular_values(&mq)[0]
}

// R[(ao, ai), (co, ci)] = U[(ao, co), (ai, ci)]
fn operator_reshuffle(gate: &Gate) -> CMat {
    let (d_a, d_c) = (gate.d_a(), gate.d_c());
    CMat::from_fn(d_a * d_a, d_c * d_c, |r, col| gate.elem(r / d_a, col / d_c, r % d_a, col % d_c))
}

/// Linear operator entropy `E(U) = 1 − Σ γ_j² / (d_A d_C)²`.
pub fn operator_entropy(gate: &Gate) -> f64 {
    let n = (gate.d_a() * gate.d_c()) as f64;
    let s = linalg::singular_values(&operator_reshuffle(gate));
    let sum: f64 = s.iter().map(|x| (x * x) * (x * x)).sum();
    1.0 - sum / (n * n)
}

/// `sqrt(d_A²(1 − E) − 1)` given the entropy, absent when `d_A > d_C` or the
/// radicand is negative.
pub fn mixing_bound_from_entropy(e: f64, d_a: usize, d_c: usize) -> Option<f64> {
    if d_a > d_c {
        return None;
    }
    let r = (d_a * d_a) as f64 * (1.0 - e) - 1.0;
    if r < 0.0 {
        // rounding just below zero at the dual-unitary point
        if r > -1e-12 { Some(0.0) } else { None }
    } else {
        Some(r.sqrt())
    }
}

pub fn mixing_bound(gate: &Gate) -> Option<f64> {
    mixing_bound_from_entropy(operator_entropy(gate), gate.d_a(), gate.d_c())
}

/// Unitarity of the space-time reshuffle `Ũ[(k,l),(i,j)] = U[(j,l),(i,k)]`.
pub fn is_dual_unitary(gate: &Gate, tol: f64) -> Result<bool> {
    let d = gate.d_a();
    if d != gate.d_c() {
        return Err(Error::Unsupported(alloc::format!("dual unitarity needs d_A = d_C, got {d} and {}", gate.d_c())));
    }
    let dual = CMat::from_fn(d * d, d * d, |r, col| {
        let (k, l) = (r / d, r % d);
        let (i, j) = (col / d, col % d);
        gate.elem(j, l, i, k)
    });
    Ok(linalg::unitarity_violation(&dual) <= tol)
}

/// Right/left eigenoperators of `M` for `lambda`, normalized by
/// `Tr(b a)/d_A = 1`, with `M(a) = λ a` and `Tr(b M(x)) = λ Tr(b x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Eigenoperators {
    pub lambda: C64,
    pub a: CMat,
    pub b: CMat,
}

pub fn eigenoperators(diag: &ChannelDiagnostics, channel: &ChannelMatrix) -> Result<Eigenoperators> {
    let idx = if diag.trivial_index == 0 { 1 } else { 0 };
    let lambda = diag.lambda_sub;
    let near = diag
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|&(i, l)| i != diag.trivial_index && (l - lambda).norm() < diag.tol.max(1e-8))
        .count();
    if near > 1 {
        return Err(Error::Degenerate(alloc::format!("subleading eigenvalue {lambda} has multiplicity {near}")));
    }
    eigenoperators_at(diag, channel, idx)
}

/// Eigenoperators for the eigenvalue at `index` of the sorted spectrum.
pub fn eigenoperators_at(diag: &ChannelDiagnostics, channel: &ChannelMatrix, index: usize) -> Result<Eigenoperators> {
    let lambda = *diag
        .eigenvalues
        .get(index)
        .ok_or_else(|| Error::InvalidParameter(alloc::format!("eigenvalue index {index} out of range")))?;
    let d = channel.d_a;
    let n = d * d;
    let shifted = channel.m.clone() - CMat::identity(n, n) * lambda;
    let (right, _) = linalg::null_space(&shifted, 0.0);
    let (left, _) = linalg::null_space(&shifted.transpose(), 0.0);
    let mut a = unvectorize(&right[0], d);
    // r^T M = λ r^T with r[i + d i'] = b[i'][i]
    let mut b = unvectorize(&left[0], d).transpose();
    if lambda.im.abs() <= diag.tol.max(1e-8) {
        a = hermitian_phase(a);
        b = hermitian_phase(b);
    }
    if index != diag.trivial_index {
        // orthogonal to the identity; removing the residue keeps it from
        // surviving as a non-decaying offset
        a = remove_trace(a);
        b = remove_trace(b);
    }
    let overlap = linalg::trace(&(&b * &a)) / d as f64;
    if overlap.norm() < 1e-12 {
        return Err(Error::Degenerate(alloc::format!("left and right eigenoperators of {lambda} are orthogonal")));
    }
    b /= overlap;
    Ok(Eigenoperators { lambda, a, b })
}

fn remove_trace(mut x: CMat) -> CMat {
    let tr = linalg::trace(&x) / x.nrows() as f64;
    for i in 0..x.nrows() {
        x[(i, i)] -= tr;
    }
    x
}

// An eigenoperator of a real eigenvalue is Hermitian up to a phase.
fn hermitian_phase(x: CMat) -> CMat {
    let h = &x + x.adjoint();
    let out = if linalg::frobenius(&h) > 1e-8 * linalg::frobenius(&x) { h } else { (&x - x.adjoint()) * c(0.0, 1.0) };
    let norm = linalg::frobenius(&out);
    out / C64::new(norm, 0.0)
}
