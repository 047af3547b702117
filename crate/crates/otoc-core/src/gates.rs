//! Library of system–bottleneck gates.

use alloc::vec::Vec;

use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{c, expm_hermitian, kron, CMat, C64};
use crate::montecarlo::sample_haar;
use crate::replica::{Gate, Observable};

/// A named, parameterized gate; `build` is deterministic.
#[derive(Clone, Debug, PartialEq)]
pub enum GateSpec {
    HaarRandom { d_a: usize, d_c: usize, seed: u64 },
    /// `(u₊ ⊗ u₋) V[J] (v₊ ⊗ v₋)`; dressings are Haar-random single-qubit
    /// unitaries drawn from `dressing_seed`, or trivial when absent.
    DualUnitaryQubit { j: f64, dressing_seed: Option<u64> },
    /// `V[J] exp(−i ε H)` with `H` a seeded GUE matrix.
    DuPerturbed { j: f64, eps: f64, seed: u64 },
    WeakCoupling { d_a: usize, d_c: usize, eps: f64, seed: u64 },
    Swap { d: usize },
    Identity { d_a: usize, d_c: usize },
    /// `|a, c⟩ ↦ e^{i φ a c}|a, c⟩`.
    ControlledPhase { d_a: usize, d_c: usize, phi: f64 },
}

impl GateSpec {
    pub fn build(&self) -> Result<Gate> {
        match *self {
            GateSpec::HaarRandom { d_a, d_c, seed } => haar_random(d_a, d_c, seed),
            GateSpec::DualUnitaryQubit { j, dressing_seed } => dual_unitary_qubit(j, dressing_seed),
            GateSpec::DuPerturbed { j, eps, seed } => du_perturbed(j, eps, seed),
            GateSpec::WeakCoupling { d_a, d_c, eps, seed } => weak_coupling(d_a, d_c, eps, seed),
            GateSpec::Swap { d } => swap(d),
            GateSpec::Identity { d_a, d_c } => identity(d_a, d_c),
            GateSpec::ControlledPhase { d_a, d_c, phi } => controlled_phase(d_a, d_c, phi),
        }
    }
}

fn check_dims(d_a: usize, d_c: usize) -> Result<()> {
    if d_a < 2 || d_c < 2 {
        return Err(Error::InvalidParameter(alloc::format!("dimensions must be >= 2, got d_a={d_a}, d_c={d_c}")));
    }
    if d_a * d_c > 4096 {
        return Err(Error::SizeLimit(alloc::format!("gate dimension {} too large", d_a * d_c)));
    }
    Ok(())
}

pub fn haar_random(d_a: usize, d_c: usize, seed: u64) -> Result<Gate> {
    check_dims(d_a, d_c)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Gate::new(d_a, d_c, sample_haar(d_a * d_c, &mut rng)?)
}

pub fn swap(d: usize) -> Result<Gate> {
    check_dims(d, d)?;
    let n = d * d;
    let m = CMat::from_fn(n, n, |r, col| {
        let (ra, rc) = (r / d, r % d);
        let (ca, cc) = (col / d, col % d);
        if ra == cc && rc == ca { c(1.0, 0.0) } else { C64::zero() }
    });
    Gate::new(d, d, m)
}

pub fn identity(d_a: usize, d_c: usize) -> Result<Gate> {
    check_dims(d_a, d_c)?;
    Gate::new(d_a, d_c, CMat::identity(d_a * d_c, d_a * d_c))
}

pub fn controlled_phase(d_a: usize, d_c: usize, phi: f64) -> Result<Gate> {
    check_dims(d_a, d_c)?;
    let n = d_a * d_c;
    let m = CMat::from_fn(n, n, |r, col| {
        if r == col {
            c(0.0, phi * ((r / d_c) * (r % d_c)) as f64).exp()
        } else {
            C64::zero()
        }
    });
    Gate::new(d_a, d_c, m)
}

/// CNOT with A as control.
pub fn cnot() -> Gate {
    let mut m = CMat::zeros(4, 4);
    for (r, col) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        m[(r, col)] = c(1.0, 0.0);
    }
    Gate::new(2, 2, m).expect("permutation matrix")
}

/// `V[J] = exp[−i(π/4 XX + π/4 YY + J ZZ)]`, written out in closed form:
/// it swaps `|01⟩, |10⟩` with phase `−i e^{iJ}` and multiplies `|00⟩, |11⟩`
/// by `e^{−iJ}`.
pub fn v_j(j: f64) -> CMat {
    let mut m = CMat::zeros(4, 4);
    let diag = c(0.0, -j).exp();
    let off = c(0.0, -1.0) * c(0.0, j).exp();
    m[(0, 0)] = diag;
    m[(3, 3)] = diag;
    m[(1, 2)] = off;
    m[(2, 1)] = off;
    m
}

pub fn dual_unitary_qubit(j: f64, dressing_seed: Option<u64>) -> Result<Gate> {
    let v = v_j(j);
    let m = match dressing_seed {
        None => v,
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut u: Vec<CMat> = Vec::with_capacity(4);
            for _ in 0..4 {
                u.push(sample_haar(2, &mut rng)?);
            }
            kron(&u[0], &u[1]) * v * kron(&u[2], &u[3])
        }
    };
    Gate::new(2, 2, m)
}

fn gue(n: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = CMat::zeros(n, n);
    for r in 0..n {
        for col in r..n {
            let re: f64 = StandardNormal.sample(&mut rng);
            if r == col {
                h[(r, col)] = c(re, 0.0);
            } else {
                let im: f64 = StandardNormal.sample(&mut rng);
                let z = c(re, im) / core::f64::consts::SQRT_2;
                h[(r, col)] = z;
                h[(col, r)] = z.conj();
            }
        }
    }
    h
}

pub fn du_perturbed(j: f64, eps: f64, seed: u64) -> Result<Gate> {
    Gate::new(2, 2, v_j(j) * expm_hermitian(&gue(4, seed), eps))
}

/// Seeded GUE observable, shifted to zero trace when `traceless`.
pub fn random_observable(d: usize, seed: u64, traceless: bool) -> Result<Observable> {
    if d == 0 || d > 4096 {
        return Err(Error::InvalidParameter(alloc::format!("observable dimension {d} out of range")));
    }
    let mut h = gue(d, seed);
    if traceless {
        let tr = h.trace() / d as f64;
        for i in 0..d {
            h[(i, i)] -= tr;
        }
    }
    Observable::new(h)
}

/// `exp(−i ε H)` with `H` a seeded GUE matrix on A⊗C. Small `ε` gives a
/// subleading eigenvalue close to 1.
pub fn weak_coupling(d_a: usize, d_c: usize, eps: f64, seed: u64) -> Result<Gate> {
    check_dims(d_a, d_c)?;
    Gate::new(d_a, d_c, expm_hermitian(&gue(d_a * d_c, seed), eps))
}
