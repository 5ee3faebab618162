//! Dense linear-algebra helpers used by the classical oracles.

use crate::{Error, Result, C64};
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::{Float, Zero};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// e^{i phi}
pub fn cis(phi: f64) -> C64 {
    C64::from_polar(1.0, phi)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn hermitian_deviation(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut d: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            d = d.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    d
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension("matrix is not square".into()));
    }
    let scale = m.iter().fold(1.0f64, |a, z| a.max(z.norm()));
    let dev = hermitian_deviation(m);
    if dev > 1e-10 * scale {
        return Err(Error::NotHermitian(dev));
    }
    let n = m.nrows();
    let real = m.iter().all(|z| z.im == 0.0);
    let (vals, vecs): (Vec<f64>, CMat) = if real {
        let r = DMatrix::<f64>::from_fn(n, n, |i, j| m[(i, j)].re);
        let e = r.symmetric_eigen();
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors.map(|x| c(x, 0.0)))
    } else {
        let e = m.clone().symmetric_eigen();
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
    };
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let sorted_vals = idx.iter().map(|&i| vals[i]).collect();
    let mut sorted_vecs = CMat::zeros(n, n);
    for (col, &i) in idx.iter().enumerate() {
        // fix the gauge: largest component real and positive
        let v = vecs.column(i);
        let mut best = 0;
        for r in 0..n {
            if v[r].norm() > v[best].norm() + 1e-12 {
                best = r;
            }
        }
        let ph = v[best] / v[best].norm();
        for r in 0..n {
            sorted_vecs[(r, col)] = v[r] / ph;
        }
    }
    Ok((sorted_vals, sorted_vecs))
}

/// V f(Λ) V† for a Hermitian decomposition.
pub fn spectral_function(vals: &[f64], vecs: &CMat, f: impl Fn(f64) -> C64) -> CMat {
    let n = vals.len();
    let mut scaled = vecs.clone();
    for (j, &l) in vals.iter().enumerate() {
        let fl = f(l);
        for i in 0..n {
            scaled[(i, j)] *= fl;
        }
    }
    scaled * vecs.adjoint()
}

/// exp(-i H t) for Hermitian H.
pub fn expm_hermitian(h: &CMat, t: f64) -> Result<CMat> {
    let (vals, vecs) = eigh(h)?;
    Ok(spectral_function(&vals, &vecs, |l| cis(-l * t)))
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn mat_vec(m: &CMat, v: &[C64]) -> Vec<C64> {
    let n = m.nrows();
    let mut out = alloc::vec![C64::zero(); n];
    for j in 0..m.ncols() {
        let vj = v[j];
        if vj == C64::zero() {
            continue;
        }
        for i in 0..n {
            out[i] += m[(i, j)] * vj;
        }
    }
    out
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// <v|M|v>, real part.
pub fn expectation(m: &CMat, v: &[C64]) -> f64 {
    inner(v, &mat_vec(m, v)).re
}
