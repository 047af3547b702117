//! Small dense complex linear algebra on top of nalgebra.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use num_traits::{Float, Zero};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `max |U†U − 1|` over entries.
pub fn unitarity_violation(u: &CMat) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let p = u.adjoint() * u;
    max_abs_diff_identity(&p)
}

pub fn max_abs_diff_identity(p: &CMat) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            let target = if i == j { C64::new(1.0, 0.0) } else { C64::zero() };
            worst = worst.max((p[(i, j)] - target).norm());
        }
    }
    worst
}

/// `max |A − A†|` over entries.
pub fn hermiticity_violation(a: &CMat) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn trace(a: &CMat) -> C64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Eigenvalues of a general complex matrix through the complex Schur form.
pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Orthonormal basis of the approximate right null space: right singular
/// vectors with singular value below `tol`. The smallest one is always
/// returned first, even if it is above `tol`.
pub fn null_space(m: &CMat, tol: f64) -> (Vec<CVec>, f64) {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].partial_cmp(&svd.singular_values[b]).unwrap());
    let smallest = svd.singular_values[order[0]];
    let mut out = Vec::new();
    for (rank, &i) in order.iter().enumerate() {
        if rank == 0 || svd.singular_values[i] < tol {
            out.push(v_t.row(i).adjoint());
        }
    }
    (out, smallest)
}

/// `exp(−i t H)` for Hermitian `H`.
pub fn expm_hermitian(h: &CMat, t: f64) -> CMat {
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let n = h.nrows();
    let phases = CMat::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(0.0, -t * eig.eigenvalues[i]).exp()
        } else {
            C64::zero()
        }
    });
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// Absolute value helper usable without `std`.
#[inline]
pub fn fabs(x: f64) -> f64 {
    Float::abs(x)
}

/// Pairwise (fixed-tree) summation; the result does not depend on how the
/// slice was produced.
pub fn pairwise_sum<T: Copy + core::ops::Add<Output = T> + Zero>(xs: &[T]) -> T {
    match xs.len() {
        0 => T::zero(),
        1 => xs[0],
        n => {
            let (l, r) = xs.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
