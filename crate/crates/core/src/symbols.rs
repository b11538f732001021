//! Finitely supported (block) Fourier representations of functions on the
//! torus `𝕋ⁿ`.
//!
//! A [`TorusSymbol`] stores `p×p` coefficient blocks indexed by frequency
//! plus a sup-norm bound on whatever was truncated away. Exact
//! trigonometric polynomials carry `tail_bound = 0`; truncated Blaschke
//! expansions carry the geometric tail, and every certificate built on a
//! symbol widens its tolerance by that bound.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{Direction, FftNd};
use crate::lattice::MultiIndex;
use crate::linalg::{spectral_norm, CMatrix, ONE, ZERO};
use crate::par;

#[derive(Clone, Debug, PartialEq)]
pub struct TorusSymbol {
    n: usize,
    p: usize,
    coefficients: BTreeMap<MultiIndex, CMatrix>,
    tail_bound: f64,
}

/// Rectangular frequency range `lo ≤ f ≤ hi` (componentwise).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencyBox {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl FrequencyBox {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Dimension("frequency bounds must have equal, nonzero length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::Invalid(format!("empty frequency range {lo:?}..={hi:?}")));
        }
        Ok(FrequencyBox { lo, hi })
    }

    /// `|fᵢ| ≤ bᵢ`.
    pub fn symmetric(bounds: &[usize]) -> Self {
        FrequencyBox {
            lo: bounds.iter().map(|&b| -(b as i64)).collect(),
            hi: bounds.iter().map(|&b| b as i64).collect(),
        }
    }

    /// `0 ≤ fᵢ ≤ bᵢ`.
    pub fn analytic(bounds: &[usize]) -> Self {
        FrequencyBox {
            lo: vec![0; bounds.len()],
            hi: bounds.iter().map(|&b| b as i64).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    fn spans(&self) -> Vec<usize> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a) as usize).collect()
    }

    fn frequencies(&self) -> Vec<MultiIndex> {
        let widths: Vec<usize> = self.spans().iter().map(|s| s + 1).collect();
        let total: usize = widths.iter().product();
        (0..total)
            .map(|mut p| {
                let mut f = vec![0i64; self.dim()];
                for i in (0..self.dim()).rev() {
                    f[i] = self.lo[i] + (p % widths[i]) as i64;
                    p /= widths[i];
                }
                MultiIndex(f)
            })
            .collect()
    }
}

/// Values of a symbol on the uniform grid `θ = 2π j / G` per variable.
#[derive(Clone, Debug)]
pub struct SampleGrid {
    pub sizes: Vec<usize>,
    pub p: usize,
    /// Point-major (row-major over the grid), each point a row-major `p×p` block.
    pub values: Vec<Complex64>,
}

impl SampleGrid {
    pub fn points(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn value_at(&self, point: usize) -> CMatrix {
        let pp = self.p * self.p;
        CMatrix::from_row_slice(self.p, self.p, &self.values[point * pp..(point + 1) * pp])
    }

    /// Builds a grid by evaluating `f` at every point.
    pub fn from_fn(sizes: &[usize], p: usize, f: impl Fn(&[f64]) -> CMatrix + Sync + Send) -> Self {
        let total: usize = sizes.iter().product();
        let per_point = par::map_range(total, |pt| {
            let angles = grid_angles(sizes, pt);
            let v = f(&angles);
            row_major(&v)
        });
        SampleGrid {
            sizes: sizes.to_vec(),
            p,
            values: per_point.into_iter().flatten().collect(),
        }
    }
}

fn grid_angles(sizes: &[usize], mut pt: usize) -> Vec<f64> {
    let mut a = vec![0.0; sizes.len()];
    for i in (0..sizes.len()).rev() {
        a[i] = 2.0 * PI * (pt % sizes[i]) as f64 / sizes[i] as f64;
        pt /= sizes[i];
    }
    a
}

fn row_major(m: &CMatrix) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Result of a grid check of `|θ| = 1` (scalar) or `Θ*Θ = I` (block).
#[derive(Clone, Debug, Serialize)]
pub struct InnerCertificate {
    pub grid: Vec<usize>,
    pub max_deviation: f64,
    pub tolerance: f64,
    /// Extra slack granted by the symbol's tail bound.
    pub tail_allowance: f64,
    pub passes: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct InvertibilityReport {
    pub grid: Vec<usize>,
    pub min_abs_det: f64,
    pub delta: f64,
    pub invertible: bool,
}

impl TorusSymbol {
    pub fn from_coefficients(
        n: usize,
        p: usize,
        entries: impl IntoIterator<Item = (MultiIndex, CMatrix)>,
    ) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::Dimension("symbols need n ≥ 1 and p ≥ 1".into()));
        }
        let mut coefficients = BTreeMap::new();
        for (k, c) in entries {
            if k.dim() != n {
                return Err(Error::Dimension(format!("frequency {k:?} is not {n}-dimensional")));
            }
            if c.shape() != (p, p) {
                return Err(Error::Dimension(format!(
                    "coefficient at {k:?} has shape {:?}, expected ({p}, {p})",
                    c.shape()
                )));
            }
            if coefficients.contains_key(&k) {
                return Err(Error::DuplicateIndex(k.0));
            }
            coefficients.insert(k, c);
        }
        Ok(TorusSymbol { n, p, coefficients, tail_bound: 0.0 })
    }

    /// Scalar (`p = 1`) symbol.
    pub fn scalar(n: usize, entries: impl IntoIterator<Item = (MultiIndex, Complex64)>) -> Result<Self> {
        Self::from_coefficients(
            n,
            1,
            entries
                .into_iter()
                .map(|(k, c)| (k, CMatrix::from_element(1, 1, c))),
        )
    }

    /// The constant `I_p`.
    pub fn identity(n: usize, p: usize) -> Self {
        Self::from_coefficients(n, p, [(MultiIndex::zero(n), CMatrix::identity(p, p))])
            .expect("well-formed identity")
    }

    /// Scalar monomial `z^k`.
    pub fn monomial(k: MultiIndex) -> Self {
        let n = k.dim();
        Self::scalar(n, [(k, ONE)]).expect("well-formed monomial")
    }

    /// Coordinate function `z_j` (0-based) as a `p×p` block symbol `z_j·I_p`.
    pub fn coordinate(n: usize, p: usize, j: usize) -> Self {
        Self::from_coefficients(n, p, [(MultiIndex::unit(n, j), CMatrix::identity(p, p))])
            .expect("well-formed coordinate symbol")
    }

    pub fn with_tail_bound(mut self, tail_bound: f64) -> Self {
        self.tail_bound = tail_bound.max(0.0);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn coefficients(&self) -> &BTreeMap<MultiIndex, CMatrix> {
        &self.coefficients
    }

    pub fn coefficient(&self, k: &MultiIndex) -> Option<&CMatrix> {
        self.coefficients.get(k)
    }

    /// Scalar coefficient (zero when absent). Panics for `p > 1`.
    pub fn scalar_coefficient(&self, k: &MultiIndex) -> Complex64 {
        assert_eq!(self.p, 1, "scalar_coefficient on a block symbol");
        self.coefficients.get(k).map_or(ZERO, |c| c[(0, 0)])
    }

    pub fn is_analytic(&self) -> bool {
        self.coefficients.keys().all(MultiIndex::is_nonnegative)
    }

    /// Componentwise min and max frequency over the support, `None` if empty.
    pub fn support_bounds(&self) -> Option<(Vec<i64>, Vec<i64>)> {
        let mut iter = self.coefficients.keys();
        let first = iter.next()?;
        let (mut lo, mut hi) = (first.0.clone(), first.0.clone());
        for k in iter {
            for i in 0..self.n {
                lo[i] = lo[i].min(k.0[i]);
                hi[i] = hi[i].max(k.0[i]);
            }
        }
        Some((lo, hi))
    }

    /// `Σ‖φ̂(k)‖ + tail_bound`, an upper bound for `‖φ‖_∞`.
    pub fn sup_norm_estimate(&self) -> f64 {
        self.coefficient_mass() + self.tail_bound
    }

    fn coefficient_mass(&self) -> f64 {
        self.coefficients.values().map(spectral_norm).sum()
    }

    /// Drops coefficients whose norm is at most `threshold`.
    pub fn pruned(mut self, threshold: f64) -> Self {
        self.coefficients.retain(|_, c| spectral_norm(c) > threshold);
        self
    }

    /// `Σ_k φ̂(k) e^{i k·θ}`.
    pub fn evaluate(&self, point: &[f64]) -> CMatrix {
        assert_eq!(point.len(), self.n, "evaluation point has wrong dimension");
        let mut acc = CMatrix::zeros(self.p, self.p);
        for (k, c) in &self.coefficients {
            let phase: f64 = k.0.iter().zip(point).map(|(&ki, &t)| ki as f64 * t).sum();
            acc += c * Complex64::from_polar(1.0, phase);
        }
        acc
    }

    /// Exact grid evaluation; phases are reduced mod `G` before the
    /// trigonometric call.
    pub fn sample_grid(&self, sizes: &[usize]) -> Result<SampleGrid> {
        if sizes.len() != self.n || sizes.contains(&0) {
            return Err(Error::Dimension(format!(
                "grid {sizes:?} does not fit a {}-variable symbol",
                self.n
            )));
        }
        let p = self.p;
        let coeffs: Vec<(&MultiIndex, &CMatrix)> = self.coefficients.iter().collect();
        let total: usize = sizes.iter().product();
        let per_point = par::map_range(total, |pt| {
            let mut j = vec![0usize; sizes.len()];
            let mut rem = pt;
            for i in (0..sizes.len()).rev() {
                j[i] = rem % sizes[i];
                rem /= sizes[i];
            }
            let mut acc = vec![ZERO; p * p];
            for (k, c) in &coeffs {
                // e^{i Σ kᵢ 2π jᵢ / Gᵢ}, each term reduced to [0, Gᵢ).
                let mut phase = 0.0;
                for i in 0..sizes.len() {
                    let g = sizes[i] as i64;
                    let r = (k.0[i] * j[i] as i64).rem_euclid(g);
                    phase += 2.0 * PI * r as f64 / g as f64;
                }
                let w = Complex64::from_polar(1.0, phase);
                for a in 0..p {
                    for b in 0..p {
                        acc[a * p + b] += c[(a, b)] * w;
                    }
                }
            }
            acc
        });
        Ok(SampleGrid {
            sizes: sizes.to_vec(),
            p,
            values: per_point.into_iter().flatten().collect(),
        })
    }

    /// Default grid: twice the frequency span plus one, rounded up to a
    /// power of two, per variable.
    pub fn default_grid(&self) -> Vec<usize> {
        match self.support_bounds() {
            None => vec![1; self.n],
            Some((lo, hi)) => lo
                .iter()
                .zip(&hi)
                .map(|(a, b)| (2 * (b - a) as usize + 1).next_power_of_two())
                .collect(),
        }
    }

    /// Recovers the coefficients on `support` from grid samples by an
    /// n-dimensional inverse DFT.
    pub fn coefficients_from_samples(
        samples: &SampleGrid,
        support: &FrequencyBox,
        tail_bound: f64,
    ) -> Result<Self> {
        let n = samples.sizes.len();
        if support.dim() != n {
            return Err(Error::Dimension(format!(
                "support is {}-dimensional, grid is {n}-dimensional",
                support.dim()
            )));
        }
        let p = samples.p;
        let total = samples.points();
        if samples.values.len() != total * p * p {
            return Err(Error::Dimension("sample buffer does not match grid size".into()));
        }
        for (axis, (&g, span)) in samples.sizes.iter().zip(support.spans()).enumerate() {
            if g < span + 1 {
                return Err(Error::Aliasing { axis, grid: g, span });
            }
        }
        let plan = FftNd::new(&samples.sizes);
        let pp = p * p;
        let spectra = par::map_range(pp, |ab| {
            let mut buf: Vec<Complex64> = (0..total).map(|pt| samples.values[pt * pp + ab]).collect();
            plan.process(&mut buf, Direction::Forward);
            buf
        });
        let strides: Vec<usize> = {
            let mut s = vec![1; n];
            for i in (0..n.saturating_sub(1)).rev() {
                s[i] = s[i + 1] * samples.sizes[i + 1];
            }
            s
        };
        let scale = 1.0 / total as f64;
        let entries = support.frequencies().into_iter().map(|f| {
            let idx: usize = f
                .0
                .iter()
                .zip(&samples.sizes)
                .zip(&strides)
                .map(|((&fi, &g), &s)| fi.rem_euclid(g as i64) as usize * s)
                .sum();
            let c = CMatrix::from_fn(p, p, |a, b| spectra[a * p + b][idx] * scale);
            (f, c)
        });
        Ok(Self::from_coefficients(n, p, entries.collect::<Vec<_>>())?.with_tail_bound(tail_bound))
    }

    /// Coefficient convolution `Σ_j â(j)·b̂(k−j)`.
    pub fn multiply(&self, other: &TorusSymbol) -> Result<TorusSymbol> {
        if self.n != other.n || self.p != other.p {
            return Err(Error::Dimension(format!(
                "cannot multiply (n={}, p={}) by (n={}, p={})",
                self.n, self.p, other.n, other.p
            )));
        }
        let mut out: BTreeMap<MultiIndex, CMatrix> = BTreeMap::new();
        for (ka, ca) in &self.coefficients {
            for (kb, cb) in &other.coefficients {
                let prod = ca * cb;
                out.entry(ka + kb)
                    .and_modify(|acc| *acc += &prod)
                    .or_insert(prod);
            }
        }
        let (ma, mb) = (self.coefficient_mass(), other.coefficient_mass());
        let (ta, tb) = (self.tail_bound, other.tail_bound);
        Ok(TorusSymbol {
            n: self.n,
            p: self.p,
            coefficients: out,
            tail_bound: ta * mb + ma * tb + ta * tb,
        })
    }

    /// Pointwise adjoint `Φ(θ)*`, i.e. coefficients `Φ̂(−k)*`.
    pub fn adjoint(&self) -> TorusSymbol {
        TorusSymbol {
            n: self.n,
            p: self.p,
            coefficients: self.coefficients.iter().map(|(k, c)| (-k, c.adjoint())).collect(),
            tail_bound: self.tail_bound,
        }
    }

    /// Grid check of innerness. Errors on non-analytic support.
    pub fn is_inner(&self, grid: &[usize], tol: f64) -> Result<InnerCertificate> {
        if let Some(k) = self.coefficients.keys().find(|k| !k.is_nonnegative()) {
            return Err(Error::NotAnalytic(k.0.clone()));
        }
        let samples = self.sample_grid(grid)?;
        let p = self.p;
        let eye = CMatrix::identity(p, p);
        let devs = par::map_range(samples.points(), |pt| {
            let v = samples.value_at(pt);
            if p == 1 {
                (v[(0, 0)].norm() - 1.0).abs()
            } else {
                spectral_norm(&(v.adjoint() * &v - &eye))
            }
        });
        let max_deviation = devs.into_iter().fold(0.0, f64::max);
        let t = self.tail_bound;
        let tail_allowance = if p == 1 { t } else { 2.0 * t + t * t };
        Ok(InnerCertificate {
            grid: grid.to_vec(),
            max_deviation,
            tolerance: tol,
            tail_allowance,
            passes: max_deviation <= tol + tail_allowance,
        })
    }

    /// Grid surrogate for "invertible a.e.": `min |det Θ(point)| ≥ δ`.
    pub fn is_invertible_ae(&self, grid: &[usize], delta: f64) -> Result<InvertibilityReport> {
        let samples = self.sample_grid(grid)?;
        let dets = par::map_range(samples.points(), |pt| samples.value_at(pt).determinant().norm());
        let min_abs_det = dets.into_iter().fold(f64::INFINITY, f64::min);
        Ok(InvertibilityReport {
            grid: grid.to_vec(),
            min_abs_det,
            delta,
            invertible: min_abs_det >= delta,
        })
    }

    pub fn to_file(&self) -> SymbolFile {
        SymbolFile {
            n: self.n,
            p: self.p,
            coefficients: self
                .coefficients
                .iter()
                .map(|(k, c)| CoefficientEntry {
                    k: k.0.clone(),
                    re: (0..self.p).map(|a| (0..self.p).map(|b| c[(a, b)].re).collect()).collect(),
                    im: (0..self.p).map(|a| (0..self.p).map(|b| c[(a, b)].im).collect()).collect(),
                })
                .collect(),
            tail_bound: self.tail_bound,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("symbol serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SymbolFile = serde_json::from_str(text).map_err(|e| Error::format("symbol", e.to_string()))?;
        TorusSymbol::try_from(file)
    }
}

/// On-disk symbol layout. Scalars use `1×1` matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolFile {
    pub n: usize,
    pub p: usize,
    pub coefficients: Vec<CoefficientEntry>,
    #[serde(default)]
    pub tail_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub k: Vec<i64>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl TryFrom<SymbolFile> for TorusSymbol {
    type Error = Error;

    fn try_from(file: SymbolFile) -> Result<Self> {
        let SymbolFile { n, p, coefficients, tail_bound } = file;
        if n == 0 {
            return Err(Error::format("n", "must be at least 1"));
        }
        if p == 0 {
            return Err(Error::format("p", "must be at least 1"));
        }
        if !(tail_bound.is_finite() && tail_bound >= 0.0) {
            return Err(Error::format("tail_bound", "must be a finite nonnegative number"));
        }
        let mut entries = Vec::with_capacity(coefficients.len());
        for (idx, e) in coefficients.into_iter().enumerate() {
            if e.k.len() != n {
                return Err(Error::format(
                    format!("coefficients[{idx}].k"),
                    format!("expected {n} entries, found {}", e.k.len()),
                ));
            }
            for (name, part) in [("re", &e.re), ("im", &e.im)] {
                if part.len() != p || part.iter().any(|row| row.len() != p) {
                    return Err(Error::format(
                        format!("coefficients[{idx}].{name}"),
                        format!("expected a {p}x{p} matrix"),
                    ));
                }
            }
            let c = CMatrix::from_fn(p, p, |a, b| Complex64::new(e.re[a][b], e.im[a][b]));
            entries.push((MultiIndex(e.k), c));
        }
        Ok(TorusSymbol::from_coefficients(n, p, entries)
            .map_err(|err| match err {
                Error::DuplicateIndex(k) => Error::format("coefficients", format!("duplicate frequency {k:?}")),
                other => other,
            })?
            .with_tail_bound(tail_bound))
    }
}

/// Truncated expansion of `b_a(z) = (z − a)/(1 − ā z)` through degree `degree`.
pub fn blaschke_factor(a: Complex64, degree: usize) -> Result<TorusSymbol> {
    let r = a.norm();
    if r.is_nan() || r >= 1.0 {
        return Err(Error::BlaschkeParameter(r));
    }
    let scale = 1.0 - r * r;
    let ac = a.conj();
    let mut entries = Vec::with_capacity(degree + 1);
    if a != ZERO {
        entries.push((MultiIndex(vec![0]), -a));
    }
    for k in 1..=degree {
        let c = ac.powu(k as u32 - 1) * scale;
        if c != ZERO {
            entries.push((MultiIndex(vec![k as i64]), c));
        }
    }
    let tail = scale * r.powi(degree as i32) / (1.0 - r);
    Ok(TorusSymbol::scalar(1, entries)?.with_tail_bound(tail))
}

/// `θ(z) = ∏ᵢ θᵢ(zᵢ)` from one-variable analytic scalar factors.
pub fn product_inner(factors: &[TorusSymbol]) -> Result<TorusSymbol> {
    if factors.is_empty() {
        return Err(Error::Invalid("product_inner needs at least one factor".into()));
    }
    for (i, f) in factors.iter().enumerate() {
        if f.n != 1 || f.p != 1 {
            return Err(Error::Dimension(format!("factor {i} is not a one-variable scalar symbol")));
        }
        if let Some(k) = f.coefficients.keys().find(|k| !k.is_nonnegative()) {
            return Err(Error::NotAnalytic(k.0.clone()));
        }
    }
    let n = factors.len();
    let mut acc: Vec<(Vec<i64>, Complex64)> = vec![(Vec::new(), ONE)];
    for f in factors {
        let mut next = Vec::with_capacity(acc.len() * f.coefficients.len());
        for (k, c) in &acc {
            for (kf, cf) in &f.coefficients {
                let mut kk = k.clone();
                kk.push(kf.0[0]);
                next.push((kk, c * cf[(0, 0)]));
            }
        }
        acc = next;
    }
    let tail = factors.iter().map(|f| 1.0 + f.tail_bound).product::<f64>() - 1.0;
    Ok(TorusSymbol::scalar(n, acc.into_iter().map(|(k, c)| (MultiIndex(k), c)))?.with_tail_bound(tail))
}
