//! Dense complex matrix helpers shared by the operator and analysis layers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Largest singular value by dense SVD. Exactly zero for the zero matrix.
pub fn spectral_norm(a: &CMatrix) -> f64 {
    if a.is_empty() || a.iter().all(|z| *z == ZERO) {
        return 0.0;
    }
    if a.nrows() == 1 || a.ncols() == 1 {
        return a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    }
    a.singular_values().max()
}

/// Spectral norm of a `p×p` block given row-major.
pub fn block_norm(entries: &[Complex64], p: usize) -> f64 {
    if p == 1 {
        return entries[0].norm();
    }
    spectral_norm(&CMatrix::from_row_slice(p, p, entries))
}

/// Outcome of a power-iteration norm estimate.
#[derive(Clone, Debug, Serialize)]
pub struct PowerNorm {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `‖A*A v − σ² v‖` at the final iterate.
    pub residual: f64,
}

/// Largest singular value by power iteration on `A*A`, deterministic start.
pub fn power_norm(a: &CMatrix, tol: f64, max_iter: usize, seed: u64) -> PowerNorm {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return PowerNorm { value: 0.0, iterations: 0, converged: true, residual: 0.0 };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = CVector::from_fn(n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    v /= Complex64::from(v.norm());
    let ah = a.adjoint();
    let mut sigma2 = 0.0;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let w = &ah * (a * &v);
        let lambda = v.dotc(&w).re;
        residual = (&w - &v * Complex64::from(lambda)).norm();
        let wn = w.norm();
        if wn == 0.0 {
            return PowerNorm { value: 0.0, iterations: it, converged: true, residual: 0.0 };
        }
        let done = (lambda - sigma2).abs() <= tol * lambda.abs().max(f64::MIN_POSITIVE);
        sigma2 = lambda;
        v = w / Complex64::from(wn);
        if done {
            return PowerNorm { value: sigma2.max(0.0).sqrt(), iterations: it, converged: true, residual };
        }
    }
    PowerNorm { value: sigma2.max(0.0).sqrt(), iterations: max_iter, converged: false, residual }
}

/// Rows and columns of `a` picked by position lists.
pub fn submatrix(a: &CMatrix, rows: &[usize], cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}

/// Largest entrywise modulus of `a − b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Expands scalar positions into block positions `pos·p + a`.
pub(crate) fn expand_blocks(positions: &[usize], p: usize) -> Vec<usize> {
    positions
        .iter()
        .flat_map(|&q| (0..p).map(move |a| q * p + a))
        .collect()
}
