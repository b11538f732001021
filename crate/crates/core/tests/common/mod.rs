//! Brute-force oracles: direct loops over index pairs and dense products of
//! shift matrices, independent of the production index arithmetic.

#![allow(dead_code)]

use std::collections::BTreeMap;

use num_complex::Complex64;
use polytoep::{CMatrix, MultiIndex, TorusSymbol};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// All multi-indices of the box, last coordinate fastest.
pub fn indices(caps: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut k = vec![0; caps.len()];
    loop {
        out.push(k.clone());
        let mut i = caps.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if k[i] < caps[i] {
                k[i] += 1;
                break;
            }
            k[i] = 0;
        }
    }
}

pub fn position(caps: &[usize], k: &[usize]) -> usize {
    indices(caps).iter().position(|x| x == k).expect("index in box")
}

fn lookup(caps: &[usize]) -> BTreeMap<Vec<usize>, usize> {
    indices(caps).into_iter().enumerate().map(|(i, k)| (k, i)).collect()
}

pub fn dense_norm(a: &CMatrix) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.iter().copied().fold(0.0, f64::max)
}

pub fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn toeplitz(symbol: &TorusSymbol, caps: &[usize]) -> CMatrix {
    let p = symbol.p();
    let idx = indices(caps);
    let mut m = CMatrix::zeros(idx.len() * p, idx.len() * p);
    for (r, l) in idx.iter().enumerate() {
        for (c, k) in idx.iter().enumerate() {
            let f: Vec<i64> = l.iter().zip(k).map(|(&a, &b)| a as i64 - b as i64).collect();
            if let Some(block) = symbol.coefficient(&MultiIndex(f)) {
                for a in 0..p {
                    for b in 0..p {
                        m[(r * p + a, c * p + b)] = block[(a, b)];
                    }
                }
            }
        }
    }
    m
}

/// Dense `T_{z_i}` on the box: `e_k ↦ e_{k+εᵢ}`, zero off the top.
pub fn shift(caps: &[usize], axis: usize, p: usize) -> CMatrix {
    let pos = lookup(caps);
    let n = pos.len();
    let mut s = CMatrix::zeros(n * p, n * p);
    for (k, &c) in &pos {
        let mut up = k.clone();
        up[axis] += 1;
        if let Some(&r) = pos.get(&up) {
            for a in 0..p {
                s[(r * p + a, c * p + a)] = ONE;
            }
        }
    }
    s
}

pub fn power(m: &CMatrix, e: usize) -> CMatrix {
    let mut out = CMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..e {
        out = &out * m;
    }
    out
}

/// `F_m`: diagonal, one where every `kᵢ < m`.
pub fn layer_projector(caps: &[usize], m: usize, p: usize) -> CMatrix {
    let idx = indices(caps);
    let mut f = CMatrix::zeros(idx.len() * p, idx.len() * p);
    for (i, k) in idx.iter().enumerate() {
        if k.iter().all(|&x| x < m) {
            for a in 0..p {
                f[(i * p + a, i * p + a)] = ONE;
            }
        }
    }
    f
}

/// Scalar rows/columns whose multi-index satisfies `kᵢ + offsetᵢ ≤ dᵢ`.
pub fn interior_rows(caps: &[usize], offset: &[usize], p: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for (i, k) in indices(caps).iter().enumerate() {
        if k.iter().zip(offset).zip(caps).all(|((&x, &o), &d)| x + o <= d) {
            out.extend((0..p).map(|a| i * p + a));
        }
    }
    out
}

pub fn select(a: &CMatrix, rows: &[usize], cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}

fn unit(n: usize, axis: usize, m: usize) -> Vec<usize> {
    let mut v = vec![0; n];
    v[axis] = m;
    v
}

/// `[I, S, S², …, S^m_max]` by repeated dense multiplication.
pub fn powers(s: &CMatrix, m_max: usize) -> Vec<CMatrix> {
    let mut out = vec![CMatrix::identity(s.nrows(), s.ncols())];
    for m in 0..m_max {
        out.push(&out[m] * s);
    }
    out
}

/// `T_{z_i}^{*m} X T_{z_j}^m` from dense shift powers `si = T_{z_i}^m`,
/// `sj = T_{z_j}^m`, cut to the rows and columns whose shifts stay inside
/// the box (where the product is exact).
pub fn shifted_product_with(
    x: &CMatrix,
    caps: &[usize],
    p: usize,
    (i, si): (usize, &CMatrix),
    (j, sj): (usize, &CMatrix),
    m: usize,
) -> CMatrix {
    let full = si.adjoint() * x * sj;
    let n = caps.len();
    select(&full, &interior_rows(caps, &unit(n, i, m), p), &interior_rows(caps, &unit(n, j, m), p))
}

pub fn shifted_product(x: &CMatrix, caps: &[usize], p: usize, i: usize, j: usize, m: usize) -> CMatrix {
    let si = power(&shift(caps, i, p), m);
    let sj = power(&shift(caps, j, p), m);
    shifted_product_with(x, caps, p, (i, &si), (j, &sj), m)
}

pub fn block_norm(m: &CMatrix, r: usize, c: usize, p: usize) -> f64 {
    dense_norm(&CMatrix::from_fn(p, p, |a, b| m[(r * p + a, c * p + b)]))
}

/// Per-direction `max ‖T[l+εⱼ, k+εⱼ] − T[l, k]‖` by scanning every pair.
pub fn defect(t: &CMatrix, caps: &[usize], p: usize) -> Vec<f64> {
    let pos = lookup(caps);
    (0..caps.len())
        .map(|j| {
            let mut best: f64 = 0.0;
            for (l, &r) in &pos {
                for (k, &c) in &pos {
                    let mut l2 = l.clone();
                    let mut k2 = k.clone();
                    l2[j] += 1;
                    k2[j] += 1;
                    if let (Some(&r2), Some(&c2)) = (pos.get(&l2), pos.get(&k2)) {
                        let d = CMatrix::from_fn(p, p, |a, b| t[(r2 * p + a, c2 * p + b)] - t[(r * p + a, c * p + b)]);
                        best = best.max(dense_norm(&d));
                    }
                }
            }
            best
        })
        .collect()
}

/// Diagonal means and spreads, grouping every pair by `l − k`.
pub fn recover(t: &CMatrix, caps: &[usize], p: usize) -> BTreeMap<Vec<i64>, (CMatrix, f64)> {
    let idx = indices(caps);
    let mut groups: BTreeMap<Vec<i64>, Vec<(Vec<usize>, CMatrix)>> = BTreeMap::new();
    for (r, l) in idx.iter().enumerate() {
        for (c, k) in idx.iter().enumerate() {
            let f: Vec<i64> = l.iter().zip(k).map(|(&a, &b)| a as i64 - b as i64).collect();
            let block = CMatrix::from_fn(p, p, |a, b| t[(r * p + a, c * p + b)]);
            groups.entry(f).or_default().push((k.clone(), block));
        }
    }
    groups
        .into_iter()
        .map(|(f, reps)| {
            let mut sum = CMatrix::zeros(p, p);
            for (_, b) in &reps {
                sum += b;
            }
            let mean = sum / Complex64::new(reps.len() as f64, 0.0);
            let deepest = &reps.iter().max_by(|a, b| a.0.cmp(&b.0)).expect("non-empty").1;
            let spread = reps.iter().map(|(_, b)| dense_norm(&(b - deepest))).fold(0.0, f64::max);
            (f, (mean, spread))
        })
        .collect()
}

/// `‖(I − F_m) T (I − F_m)‖` on the full matrix.
pub fn compactness(t: &CMatrix, caps: &[usize], p: usize, m: usize) -> f64 {
    let q = CMatrix::identity(t.nrows(), t.ncols()) - layer_projector(caps, m, p);
    dense_norm(&(&q * t * &q))
}

/// Signed sum over non-empty direction subsets of products of
/// `(T_{z_{i₁}}⋯T_{z_{i_l}})^m (⋯)^{*m}`.
pub fn inclusion_exclusion(caps: &[usize], m: usize, p: usize) -> CMatrix {
    let n = caps.len();
    let dim = indices(caps).len() * p;
    let mut acc = CMatrix::zeros(dim, dim);
    for mask in 1u32..(1 << n) {
        let mut prod = CMatrix::identity(dim, dim);
        for i in 0..n {
            if mask & (1 << i) != 0 {
                prod = &prod * shift(caps, i, p);
            }
        }
        let pm = power(&prod, m);
        let term = &pm * pm.adjoint();
        if mask.count_ones() % 2 == 1 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

/// Boxes with at most `max_len` points, `n` directions.
pub fn boxes(n: usize, max_len: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, budget: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for d in 0.. {
            if d + 1 > budget {
                break;
            }
            prefix.push(d);
            rec(n, budget / (d + 1), prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, max_len, &mut Vec::new(), &mut out);
    out
}
