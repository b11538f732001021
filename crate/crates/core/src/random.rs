//! Seeded test inputs: random trigonometric polynomials, finite-rank
//! perturbations, flips.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::lattice::{IndexBox, MultiIndex};
use crate::linalg::{CMatrix, CVector, ONE, ZERO};
use crate::operators::TruncatedOperator;
use crate::symbols::{FrequencyBox, TorusSymbol};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Real and imaginary parts uniform in `[-1, 1)`.
pub fn complex<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(2.0 * rng.random::<f64>() - 1.0, 2.0 * rng.random::<f64>() - 1.0)
}

pub fn matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex(rng))
}

pub fn vector<R: Rng>(rng: &mut R, len: usize) -> CVector {
    CVector::from_fn(len, |_, _| complex(rng))
}

/// Dense random coefficients on every frequency of `freqs`.
pub fn trig_poly_on<R: Rng>(rng: &mut R, freqs: &FrequencyBox, p: usize) -> TorusSymbol {
    let n = freqs.dim();
    let span = IndexBox::new(
        freqs.lo.iter().zip(&freqs.hi).map(|(l, h)| (h - l) as usize).collect::<Vec<_>>(),
    )
    .expect("non-empty frequency box");
    let entries = span.enumerate().into_iter().map(|k| {
        let f = MultiIndex((0..n).map(|i| k.0[i] + freqs.lo[i]).collect());
        (f, matrix(rng, p, p))
    });
    TorusSymbol::from_coefficients(n, p, entries.collect::<Vec<_>>()).expect("distinct frequencies")
}

/// Random symbol with `|fᵢ| ≤ span`.
pub fn trig_poly<R: Rng>(rng: &mut R, n: usize, p: usize, span: usize) -> TorusSymbol {
    trig_poly_on(rng, &FrequencyBox::symmetric(&vec![span; n]), p)
}

/// Random operator supported on rows and columns with every `kᵢ < m0`,
/// i.e. on the range of the layer projector `F_{m0}`.
pub fn layer_supported<R: Rng>(rng: &mut R, domain: &IndexBox, p: usize, m0: usize) -> TruncatedOperator {
    let mut m = CMatrix::zeros(domain.len() * p, domain.len() * p);
    let inside: Vec<usize> = (0..domain.len())
        .filter(|&pos| domain.coords(pos).iter().all(|&k| k < m0))
        .collect();
    for &c in &inside {
        for &r in &inside {
            for a in 0..p {
                for b in 0..p {
                    m[(r * p + a, c * p + b)] = complex(rng);
                }
            }
        }
    }
    TruncatedOperator::new(domain.clone(), p, m).expect("shape matches")
}

pub fn dense_operator<R: Rng>(rng: &mut R, domain: &IndexBox, p: usize) -> TruncatedOperator {
    let dim = domain.len() * p;
    TruncatedOperator::new(domain.clone(), p, matrix(rng, dim, dim)).expect("shape matches")
}

/// `J[l, k] = δ_{l, d−k}` on `{0, …, d}`, tensored with `I_p`.
pub fn flip(d: usize, p: usize) -> Result<TruncatedOperator> {
    let domain = IndexBox::new(vec![d])?;
    let dim = (d + 1) * p;
    let m = CMatrix::from_fn(dim, dim, |r, c| {
        if r / p == d - c / p && r % p == c % p {
            ONE
        } else {
            ZERO
        }
    });
    TruncatedOperator::new(domain, p, m)
}

/// Adds `delta` to one random entry.
pub fn perturb_entry<R: Rng>(rng: &mut R, op: &TruncatedOperator, delta: f64) -> (TruncatedOperator, (usize, usize)) {
    let dim = op.dim();
    let r = rng.random_range(0..dim);
    let c = rng.random_range(0..dim);
    let mut m = op.matrix().clone();
    m[(r, c)] += Complex64::new(delta, 0.0);
    (TruncatedOperator::new(op.domain().clone(), op.p(), m).expect("shape matches"), (r, c))
}
