//! Multi-indices and truncation boxes for the monomial basis `{z^k : k ∈ ℤ₊ⁿ}`.
//!
//! Basis order is row-major with the last coordinate varying fastest, so
//! the coordinate shift `T_{z_j}` is `I ⊗ … ⊗ S ⊗ … ⊗ I` in matrix layout.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer exponent vector. Negative entries are allowed so the same type
/// carries symbol frequencies.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<i64>);

impl MultiIndex {
    pub fn new(entries: impl Into<Vec<i64>>) -> Self {
        MultiIndex(entries.into())
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// `ε_j`: one in coordinate `j`, zero elsewhere.
    pub fn unit(n: usize, j: usize) -> Self {
        let mut e = vec![0; n];
        e[j] = 1;
        MultiIndex(e)
    }

    /// `(k, …, k)`.
    pub fn diagonal(n: usize, k: i64) -> Self {
        MultiIndex(vec![k; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[i64] {
        &self.0
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&k| k >= 0)
    }

    pub fn scaled(&self, m: i64) -> Self {
        MultiIndex(self.0.iter().map(|k| k * m).collect())
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<i64>> for MultiIndex {
    fn from(v: Vec<i64>) -> Self {
        MultiIndex(v)
    }
}

impl From<&[usize]> for MultiIndex {
    fn from(v: &[usize]) -> Self {
        MultiIndex(v.iter().map(|&k| k as i64).collect())
    }
}

impl Add for &MultiIndex {
    type Output = MultiIndex;
    fn add(self, rhs: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), rhs.dim());
        MultiIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &MultiIndex {
    type Output = MultiIndex;
    fn sub(self, rhs: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), rhs.dim());
        MultiIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &MultiIndex {
    type Output = MultiIndex;
    fn neg(self) -> MultiIndex {
        MultiIndex(self.0.iter().map(|a| -a).collect())
    }
}

/// Per-variable degree caps `d = (d₁,…,d_n)`; the truncated space is spanned
/// by `z^k` with `0 ≤ kᵢ ≤ dᵢ`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct IndexBox {
    caps: Vec<usize>,
}

impl TryFrom<Vec<usize>> for IndexBox {
    type Error = Error;
    fn try_from(caps: Vec<usize>) -> Result<Self> {
        IndexBox::new(caps)
    }
}

impl From<IndexBox> for Vec<usize> {
    fn from(b: IndexBox) -> Self {
        b.caps
    }
}

impl fmt::Debug for IndexBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IndexBox{:?}", self.caps)
    }
}

impl IndexBox {
    pub fn new(caps: impl Into<Vec<usize>>) -> Result<Self> {
        let caps = caps.into();
        if caps.is_empty() {
            return Err(Error::Dimension("a box needs at least one variable".into()));
        }
        Ok(IndexBox { caps })
    }

    /// Box with the same cap in each of `n` variables.
    pub fn cube(n: usize, cap: usize) -> Result<Self> {
        IndexBox::new(vec![cap; n])
    }

    pub fn caps(&self) -> &[usize] {
        &self.caps
    }

    /// Number of variables `n`.
    pub fn dim(&self) -> usize {
        self.caps.len()
    }

    /// `N = ∏(dᵢ+1)`.
    pub fn len(&self) -> usize {
        self.caps.iter().map(|d| d + 1).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min_cap(&self) -> usize {
        *self.caps.iter().min().expect("non-empty caps")
    }

    /// Row-major strides (last coordinate fastest).
    pub fn strides(&self) -> Vec<usize> {
        let n = self.dim();
        let mut s = vec![1; n];
        for i in (0..n.saturating_sub(1)).rev() {
            s[i] = s[i + 1] * (self.caps[i + 1] + 1);
        }
        s
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        k.len() == self.dim() && k.iter().zip(&self.caps).all(|(&ki, &d)| ki >= 0 && ki as usize <= d)
    }

    pub fn contains_coords(&self, k: &[usize]) -> bool {
        k.len() == self.dim() && k.iter().zip(&self.caps).all(|(&ki, &d)| ki <= d)
    }

    /// All in-box indices in row-major order.
    pub fn enumerate(&self) -> Vec<MultiIndex> {
        (0..self.len()).map(|p| MultiIndex::from(self.coords(p).as_slice())).collect()
    }

    /// Coordinates of the basis vector at ordinal `pos`.
    pub fn coords(&self, pos: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        self.coords_into(pos, &mut out);
        out
    }

    pub(crate) fn coords_into(&self, mut pos: usize, out: &mut [usize]) {
        for i in (0..self.dim()).rev() {
            let w = self.caps[i] + 1;
            out[i] = pos % w;
            pos /= w;
        }
    }

    /// Ordinal of `k` in the enumeration.
    pub fn position(&self, k: &MultiIndex) -> Result<usize> {
        if !self.contains(k.entries()) {
            return Err(Error::OutOfBox {
                index: k.0.clone(),
                caps: self.caps.clone(),
            });
        }
        Ok(self.position_of_coords(k.entries().iter().map(|&x| x as usize)))
    }

    pub(crate) fn position_of_coords(&self, k: impl IntoIterator<Item = usize>) -> usize {
        k.into_iter()
            .zip(&self.caps)
            .fold(0, |acc, (ki, &d)| acc * (d + 1) + ki)
    }

    /// Caps reduced by `m` along each listed direction (0-based).
    pub fn interior(&self, m: usize, directions: &[usize]) -> Result<IndexBox> {
        let mut caps = self.caps.clone();
        for &j in directions {
            if j >= self.dim() {
                return Err(Error::Dimension(format!(
                    "direction {j} out of range for {} variables",
                    self.dim()
                )));
            }
            if m > self.caps[j] {
                return Err(Error::EmptyInterior {
                    caps: self.caps.clone(),
                    m,
                    directions: directions.to_vec(),
                });
            }
        }
        let mut seen = vec![false; self.dim()];
        for &j in directions {
            if !seen[j] {
                caps[j] -= m;
                seen[j] = true;
            }
        }
        Ok(IndexBox { caps })
    }

    /// Interior with every direction selected; realizes the diagonal index `k_d`.
    pub fn interior_all(&self, m: usize) -> Result<IndexBox> {
        let dirs: Vec<usize> = (0..self.dim()).collect();
        self.interior(m, &dirs)
    }

    /// Positions in `parent` of `k + offset` for every `k` of `self`, in
    /// `self`'s enumeration order.
    pub fn positions_in(&self, parent: &IndexBox, offset: &[usize]) -> Result<Vec<usize>> {
        if parent.dim() != self.dim() || offset.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "sub-box {:?} with offset {:?} does not live in {:?}",
                self.caps, offset, parent.caps
            )));
        }
        for i in 0..self.dim() {
            if self.caps[i] + offset[i] > parent.caps[i] {
                return Err(Error::Dimension(format!(
                    "sub-box {:?} shifted by {:?} exceeds {:?}",
                    self.caps, offset, parent.caps
                )));
            }
        }
        let strides = parent.strides();
        let base: usize = offset.iter().zip(&strides).map(|(o, s)| o * s).sum();
        let mut coords = vec![0usize; self.dim()];
        Ok((0..self.len())
            .map(|p| {
                self.coords_into(p, &mut coords);
                base + coords.iter().zip(&strides).map(|(c, s)| c * s).sum::<usize>()
            })
            .collect())
    }
}

/// Free-function form of [`IndexBox::enumerate`].
pub fn enumerate_basis(b: &IndexBox) -> Vec<MultiIndex> {
    b.enumerate()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[i64]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn row_major_enumeration() {
        let b = IndexBox::new(vec![1, 1]).unwrap();
        assert_eq!(
            b.enumerate(),
            vec![mi(&[0, 0]), mi(&[0, 1]), mi(&[1, 0]), mi(&[1, 1])]
        );
        let b = IndexBox::new(vec![0, 0, 0]).unwrap();
        assert_eq!(b.enumerate(), vec![mi(&[0, 0, 0])]);
        let b = IndexBox::new(vec![2]).unwrap();
        assert_eq!(b.enumerate(), vec![mi(&[0]), mi(&[1]), mi(&[2])]);
    }

    #[test]
    fn positions() {
        let b = IndexBox::new(vec![1, 1]).unwrap();
        assert_eq!(b.position(&mi(&[1, 0])).unwrap(), 2);
        assert_eq!(IndexBox::new(vec![2]).unwrap().position(&mi(&[2])).unwrap(), 2);
        assert!(matches!(b.position(&mi(&[2, 0])), Err(Error::OutOfBox { .. })));
        assert!(b.position(&mi(&[-1, 0])).is_err());
    }

    #[test]
    fn interiors() {
        let b = IndexBox::new(vec![5, 5]).unwrap();
        assert_eq!(b.interior(2, &[0, 1]).unwrap().caps(), &[3, 3]);
        let b = IndexBox::new(vec![5, 3]).unwrap();
        assert_eq!(b.interior(3, &[1]).unwrap().caps(), &[5, 0]);
        let b = IndexBox::new(vec![2, 2]).unwrap();
        assert!(matches!(b.interior(3, &[0]), Err(Error::EmptyInterior { .. })));
        assert_eq!(b.interior(0, &[0]).unwrap(), b);
    }

    #[test]
    fn exhaustive_round_trip_small_boxes() {
        for caps in [vec![3], vec![2, 3], vec![1, 0, 2], vec![2, 2, 2]] {
            let b = IndexBox::new(caps).unwrap();
            let all = b.enumerate();
            assert_eq!(all.len(), b.caps().iter().map(|d| d + 1).product::<usize>());
            for (j, k) in all.iter().enumerate() {
                assert_eq!(b.position(k).unwrap(), j);
                assert_eq!(MultiIndex::from(b.coords(j).as_slice()), *k);
            }
        }
    }

    #[test]
    fn positions_in_parent() {
        let parent = IndexBox::new(vec![3, 3]).unwrap();
        let sub = IndexBox::new(vec![1, 2]).unwrap();
        let pos = sub.positions_in(&parent, &[2, 1]).unwrap();
        for (i, k) in sub.enumerate().iter().enumerate() {
            let shifted = k + &mi(&[2, 1]);
            assert_eq!(pos[i], parent.position(&shifted).unwrap());
        }
        assert!(sub.positions_in(&parent, &[3, 0]).is_err());
    }

    #[test]
    fn serde_as_integer_arrays() {
        let b = IndexBox::new(vec![7, 3]).unwrap();
        assert_eq!(serde_json::to_string(&b).unwrap(), "[7,3]");
        assert_eq!(serde_json::to_string(&mi(&[1, -2])).unwrap(), "[1,-2]");
        assert!(serde_json::from_str::<IndexBox>("[]").is_err());
    }
}
