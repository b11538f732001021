//! Truncated quotient spaces `Q_θ = H² ⊖ θH²`, their compressed shifts,
//! the invariance (rigidity) test and the model compactness test.
//!
//! Inside a box, `Q_θ` is the orthogonal complement of the columns `θ·z^k`
//! that fit entirely, i.e. `k + supp(θ) ⊆ box`. Columns that would cross the
//! top of the box are dropped, so basis vectors near the boundary differ
//! from the infinite-dimensional space while interior ones are exact.

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{IndexBox, MultiIndex};
use crate::linalg::{spectral_norm, CMatrix, ZERO};
use crate::operators::{orthonormality_defect, read_matrix_body, write_matrix_body, Encoding};
use crate::par;
use crate::symbols::{SymbolFile, TorusSymbol};

/// Columns closer than this to the span already built are treated as
/// dependent during the complement construction.
const DEPENDENCE_FLOOR: f64 = 1e-8;
const ORTHONORMAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct ModelSpace {
    pub theta: TorusSymbol,
    pub domain: IndexBox,
    /// `k` with `k + supp(θ) ⊆ domain`.
    pub safe_box: IndexBox,
    /// `(N·p) × q`, orthonormal columns.
    pub basis: CMatrix,
    pub q: usize,
    /// True when columns `θz^k` crossing the box top were dropped, so
    /// accuracy degrades near the boundary.
    pub boundary_note: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelSpaceSummary {
    pub theta: SymbolFile,
    pub caps: Vec<usize>,
    pub safe_caps: Vec<usize>,
    pub p: usize,
    pub q: usize,
    pub boundary_note: bool,
    pub orthonormality_defect: f64,
    pub theta_orthogonality_defect: f64,
}

/// The columns `θ z^k e_a`, `k ∈ safe_box`, `a < p`, as exact vectors.
fn theta_columns(theta: &TorusSymbol, domain: &IndexBox, safe: &IndexBox) -> CMatrix {
    let p = theta.p();
    let n = domain.dim();
    let mut w = CMatrix::zeros(domain.len() * p, safe.len() * p);
    let mut kc = vec![0; n];
    let mut target = vec![0; n];
    for ks in 0..safe.len() {
        safe.coords_into(ks, &mut kc);
        for (f, coef) in theta.coefficients() {
            for i in 0..n {
                target[i] = kc[i] + f.0[i] as usize;
            }
            let row = domain.position_of_coords(target.iter().copied());
            for a in 0..p {
                for b in 0..p {
                    w[(row * p + b, ks * p + a)] = coef[(b, a)];
                }
            }
        }
    }
    w
}

/// Orthonormal basis of the complement of `range(u)` (`u` orthonormal).
/// Column-pivoted Gram–Schmidt on `I − uu*`: the standard basis vector with
/// the largest residual is taken next, lowest index on ties, so monomial
/// `θ` yields the monomials outside `θH²`.
fn orthogonal_complement(u: &CMatrix) -> CMatrix {
    let total = u.nrows();
    let target = total - u.ncols();
    let mut r = CMatrix::identity(total, total) - u * u.adjoint();
    let mut chosen: Vec<nalgebra::DVector<Complex64>> = Vec::with_capacity(target);
    while chosen.len() < target {
        let norms = par::map_range(total, |j| r.column(j).norm());
        let (mut best, mut arg) = (0.0, 0);
        for (j, &v) in norms.iter().enumerate() {
            if v > best {
                best = v;
                arg = j;
            }
        }
        if best < DEPENDENCE_FLOOR {
            break;
        }
        let mut v = r.column(arg) / Complex64::new(best, 0.0);
        // One more pass against everything kept, for orthogonality at
        // machine precision.
        v -= u * (u.adjoint() * &v);
        for c in &chosen {
            let proj = c.dotc(&v);
            v -= c * proj;
        }
        let norm = v.norm();
        v /= Complex64::new(norm, 0.0);
        let vr = v.adjoint() * &r;
        r -= &v * vr;
        chosen.push(v);
    }
    if chosen.is_empty() {
        CMatrix::zeros(total, 0)
    } else {
        CMatrix::from_columns(&chosen)
    }
}

/// Builds the truncated model space. `θ` must be analytic and pass the
/// inner certificate at `tol` (plus its tail allowance).
pub fn model_basis(theta: &TorusSymbol, domain: &IndexBox, tol: f64) -> Result<ModelSpace> {
    if theta.n() != domain.dim() {
        return Err(Error::Dimension(format!(
            "symbol has {} variables, box has {}",
            theta.n(),
            domain.dim()
        )));
    }
    let cert = theta.is_inner(&theta.default_grid(), tol)?;
    if !cert.passes {
        return Err(Error::NotInner {
            deviation: cert.max_deviation,
            allowed: cert.tolerance + cert.tail_allowance,
        });
    }
    let (_, hi) = theta
        .support_bounds()
        .ok_or_else(|| Error::Invalid("the zero symbol is not inner".into()))?;
    let mut safe_caps = Vec::with_capacity(domain.dim());
    for (&d, &h) in domain.caps().iter().zip(&hi) {
        if h as usize > d {
            return Err(Error::Invalid(format!(
                "no column θ·z^k fits in the box: support reaches {hi:?}, caps are {:?}",
                domain.caps()
            )));
        }
        safe_caps.push(d - h as usize);
    }
    let safe_box = IndexBox::new(safe_caps)?;
    let w = theta_columns(theta, domain, &safe_box);
    let u = if orthonormality_defect(&w) <= ORTHONORMAL_TOL {
        w
    } else {
        w.qr().q()
    };
    let basis = orthogonal_complement(&u);
    Ok(ModelSpace {
        theta: theta.clone(),
        domain: domain.clone(),
        boundary_note: safe_box.len() < domain.len(),
        safe_box,
        q: basis.ncols(),
        basis,
    })
}

#[derive(Clone, Debug)]
pub struct CompressedShift {
    pub direction: usize,
    /// `q × q`.
    pub matrix: CMatrix,
}

impl ModelSpace {
    pub fn p(&self) -> usize {
        self.theta.p()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// `max |(θz^k)* b|` over safe `k` and basis vectors `b`.
    pub fn theta_orthogonality_defect(&self) -> f64 {
        let w = theta_columns(&self.theta, &self.domain, &self.safe_box);
        (w.adjoint() * &self.basis).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn summary(&self) -> ModelSpaceSummary {
        ModelSpaceSummary {
            theta: self.theta.to_file(),
            caps: self.domain.caps().to_vec(),
            safe_caps: self.safe_box.caps().to_vec(),
            p: self.p(),
            q: self.q,
            boundary_note: self.boundary_note,
            orthonormality_defect: orthonormality_defect(&self.basis),
            theta_orthogonality_defect: self.theta_orthogonality_defect(),
        }
    }

    /// `T_{z_i}` applied to each basis column (rows moved up one step in
    /// direction `i`, the top layer falling off).
    fn shifted_basis(&self, axis: usize) -> CMatrix {
        let p = self.p();
        let caps = self.domain.caps();
        let stride = self.domain.strides()[axis];
        let mut out = CMatrix::zeros(self.basis.nrows(), self.q);
        let mut c = vec![0; self.dim()];
        for pos in 0..self.domain.len() {
            self.domain.coords_into(pos, &mut c);
            if c[axis] == caps[axis] {
                continue;
            }
            let to = pos + stride;
            for a in 0..p {
                out.row_mut(to * p + a).copy_from(&self.basis.row(pos * p + a));
            }
        }
        out
    }

    pub fn export_to<W: Write>(&self, w: &mut W, encoding: Encoding) -> Result<()> {
        let header = ModelSpaceHeader {
            theta: self.theta.to_file(),
            caps: self.domain.caps().to_vec(),
            safe_caps: self.safe_box.caps().to_vec(),
            p: self.p(),
            q: self.q,
            rows: self.basis.nrows(),
            cols: self.basis.ncols(),
            boundary_note: self.boundary_note,
            encoding,
        };
        serde_json::to_writer(&mut *w, &header)?;
        w.write_all(b"\n")?;
        write_matrix_body(w, &self.basis, encoding)
    }

    pub fn save(&self, path: &Path, encoding: Encoding) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.export_to(&mut f, encoding)?;
        f.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpaceHeader {
    pub theta: SymbolFile,
    pub caps: Vec<usize>,
    pub safe_caps: Vec<usize>,
    pub p: usize,
    pub q: usize,
    pub rows: usize,
    pub cols: usize,
    pub boundary_note: bool,
    pub encoding: Encoding,
}

/// Reads an exported model space: header plus basis matrix.
pub fn read_export<R: BufRead>(r: &mut R) -> Result<(ModelSpaceHeader, CMatrix)> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: ModelSpaceHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::format("header", e.to_string()))?;
    let n: usize = header.caps.iter().map(|d| d + 1).product();
    if header.rows != n * header.p {
        return Err(Error::format("rows", format!("expected {}, found {}", n * header.p, header.rows)));
    }
    if header.cols != header.q {
        return Err(Error::format("cols", format!("expected q = {}, found {}", header.q, header.cols)));
    }
    let basis = read_matrix_body(r, header.rows, header.cols, header.encoding)?;
    Ok((header, basis))
}

/// `C_{z_i} = basis*·T_{z_i}·basis`.
pub fn compressed_shift(ms: &ModelSpace, axis: usize) -> Result<CompressedShift> {
    if axis >= ms.dim() {
        return Err(Error::Dimension(format!("direction {axis} out of range for {} variables", ms.dim())));
    }
    Ok(CompressedShift {
        direction: axis,
        matrix: ms.basis.adjoint() * ms.shifted_basis(axis),
    })
}

fn all_shifts(ms: &ModelSpace) -> Vec<CMatrix> {
    par::map_range(ms.dim(), |i| compressed_shift(ms, i).expect("direction in range").matrix)
}

fn check_square(ms: &ModelSpace, a: &CMatrix) -> Result<()> {
    if a.nrows() != ms.q || a.ncols() != ms.q {
        return Err(Error::Dimension(format!(
            "operator is {}×{}, model space has dimension {}",
            a.nrows(),
            a.ncols(),
            ms.q
        )));
    }
    Ok(())
}

/// `‖A − C_{z_i}* A C_{z_i}‖` per direction.
pub fn invariance_residual(ms: &ModelSpace, a: &CMatrix) -> Result<Vec<f64>> {
    check_square(ms, a)?;
    Ok(all_shifts(ms)
        .iter()
        .map(|c| spectral_norm(&(a - c.adjoint() * a * c)))
        .collect())
}

#[derive(Clone, Copy, Debug)]
pub struct KernelOptions {
    /// Largest `q` handled by a dense SVD of the stacked `n·q² × q²` map.
    pub dense_limit: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions { dense_limit: 24, max_iter: 20_000, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelMethod {
    DenseSvd,
    /// Power iteration on `μI − M*M`. `kernel_dim` is then 0 or 1 (a lower
    /// bound when nonzero).
    Iterative { iterations: usize, converged: bool, residual: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceKernel {
    pub q: usize,
    pub sigma_min: f64,
    pub kernel_dim: usize,
    pub tol: f64,
    pub method: KernelMethod,
}

/// The stacked map `A ↦ (A − C_{z_i}* A C_{z_i})_i` on column-major
/// `vec(A)`: blocks `I − C_iᵀ ⊗ C_i*`.
pub fn stacked_invariance_map(shifts: &[CMatrix], q: usize) -> CMatrix {
    let qq = q * q;
    let mut m = CMatrix::zeros(shifts.len() * qq, qq);
    for (i, c) in shifts.iter().enumerate() {
        let block = CMatrix::identity(qq, qq) - c.transpose().kronecker(&c.adjoint());
        m.view_mut((i * qq, 0), (qq, qq)).copy_from(&block);
    }
    m
}

pub fn invariance_kernel(ms: &ModelSpace, tol: f64) -> Result<InvarianceKernel> {
    invariance_kernel_with(ms, tol, &KernelOptions::default())
}

/// Smallest singular value of the stacked invariance map and the number of
/// singular values at or below `tol`.
pub fn invariance_kernel_with(ms: &ModelSpace, tol: f64, opts: &KernelOptions) -> Result<InvarianceKernel> {
    let q = ms.q;
    if q == 0 {
        return Err(Error::Invalid("model space is trivial (q = 0)".into()));
    }
    let shifts = all_shifts(ms);
    if q <= opts.dense_limit {
        let m = stacked_invariance_map(&shifts, q);
        let sv = m.singular_values();
        let sigma_min = sv.iter().copied().fold(f64::INFINITY, f64::min);
        let kernel_dim = sv.iter().filter(|&&s| s <= tol).count();
        return Ok(InvarianceKernel { q, sigma_min, kernel_dim, tol, method: KernelMethod::DenseSvd });
    }

    let gram = |a: &CMatrix| -> CMatrix {
        let mut out = CMatrix::zeros(q, q);
        for c in &shifts {
            let l = a - c.adjoint() * a * c;
            out += &l - c * &l * c.adjoint();
        }
        out
    };
    let mu: f64 = shifts.iter().map(|c| (1.0 + spectral_norm(c).powi(2)).powi(2)).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v = DMatrix::from_fn(q, q, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    v /= Complex64::new(v.norm(), 0.0);
    let mut lambda = 0.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let hv = &v * Complex64::new(mu, 0.0) - gram(&v);
        let next = hv.iter().zip(v.iter()).map(|(a, b)| (b.conj() * a).re).sum::<f64>();
        let norm = hv.norm();
        if norm == 0.0 {
            break;
        }
        v = hv / Complex64::new(norm, 0.0);
        if (next - lambda).abs() <= 1e-15 * mu {
            lambda = next;
            converged = true;
            break;
        }
        lambda = next;
    }
    let sigma_sq = (mu - lambda).max(0.0);
    let residual = (gram(&v) - &v * Complex64::new(sigma_sq, 0.0)).norm();
    let sigma_min = sigma_sq.sqrt();
    Ok(InvarianceKernel {
        q,
        sigma_min,
        kernel_dim: usize::from(sigma_min <= tol),
        tol,
        method: KernelMethod::Iterative { iterations, converged, residual },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelCompactness {
    pub m_max: usize,
    pub tol: f64,
    /// Per direction, `(m, ‖C^{*m} T C^m‖)` for `m = 1..=m_max`.
    pub norms: Vec<Vec<(usize, f64)>>,
    pub verdict: bool,
}

/// Iterated compressions `C_{z_i}^{*m} T C_{z_i}^m`; the only possible
/// limit is 0, so the verdict asks for decay to `tol` in every direction.
pub fn model_compactness_test(ms: &ModelSpace, t: &CMatrix, m_max: usize, tol: f64) -> Result<ModelCompactness> {
    check_square(ms, t)?;
    if m_max == 0 {
        return Err(Error::Invalid("m_max must be at least 1".into()));
    }
    let shifts = all_shifts(ms);
    let norms: Vec<Vec<(usize, f64)>> = par::map_slice(&shifts, |c| {
        let mut power = CMatrix::identity(ms.q, ms.q);
        (1..=m_max)
            .map(|m| {
                power = &power * c;
                (m, spectral_norm(&(power.adjoint() * t * &power)))
            })
            .collect()
    });
    let verdict = norms.iter().all(|seq| seq.last().is_none_or(|&(_, v)| v <= tol));
    Ok(ModelCompactness { m_max, tol, norms, verdict })
}

/// Monomials `k` in the box outside `z^α + ℕⁿ`.
pub fn monomial_model_dimension(alpha: &[usize], caps: &[usize]) -> usize {
    let all: usize = caps.iter().map(|d| d + 1).product();
    let covered: usize = caps
        .iter()
        .zip(alpha)
        .map(|(&d, &a)| (d + 1).saturating_sub(a))
        .product();
    all - covered
}

impl CompressedShift {
    pub fn norm(&self) -> f64 {
        spectral_norm(&self.matrix)
    }
}

/// Entry `(row, col)` positions of a basis vector supported on a single
/// standard basis vector, if any.
pub fn monomial_support(basis: &CMatrix, domain: &IndexBox, p: usize) -> Vec<Option<(MultiIndex, usize)>> {
    (0..basis.ncols())
        .map(|j| {
            let nz: Vec<usize> = (0..basis.nrows()).filter(|&i| basis[(i, j)] != ZERO).collect();
            match nz.as_slice() {
                [i] => Some((MultiIndex::from(domain.coords(i / p).as_slice()), i % p)),
                _ => None,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, ONE};
    use crate::symbols::blaschke_factor;

    fn mono(k: &[i64]) -> TorusSymbol {
        TorusSymbol::monomial(MultiIndex(k.to_vec()))
    }

    fn bx(c: &[usize]) -> IndexBox {
        IndexBox::new(c.to_vec()).unwrap()
    }

    #[test]
    fn monomial_bases() {
        let ms = model_basis(&mono(&[2]), &bx(&[5]), 1e-12).unwrap();
        assert_eq!(ms.q, 2);
        assert_eq!(ms.safe_box.caps(), &[3]);
        let expected = CMatrix::from_fn(6, 2, |i, j| if i == j { ONE } else { ZERO });
        assert_eq!(ms.basis, expected);
        let c = compressed_shift(&ms, 0).unwrap();
        assert_eq!(c.matrix, CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO]));

        let ms = model_basis(&mono(&[1, 1]), &bx(&[3, 3]), 1e-12).unwrap();
        assert_eq!(ms.q, 7);
        for s in monomial_support(&ms.basis, &ms.domain, 1) {
            let (k, _) = s.expect("monomial basis vector");
            assert_eq!(k.0.iter().min(), Some(&0));
        }

        let ms = model_basis(&TorusSymbol::identity(2, 1), &bx(&[3, 3]), 1e-12).unwrap();
        assert_eq!(ms.q, 0);
        assert!(!ms.boundary_note);

        let ms = model_basis(&mono(&[1]), &bx(&[4]), 1e-12).unwrap();
        let c = compressed_shift(&ms, 0).unwrap();
        assert_eq!(c.matrix, CMatrix::zeros(1, 1));
        let k = invariance_kernel(&ms, 1e-8).unwrap();
        assert_eq!(k.sigma_min, 1.0);
        assert_eq!(k.kernel_dim, 0);
    }

    #[test]
    fn dimension_law() {
        for alpha in [[0usize, 1], [1, 0], [1, 1], [2, 1], [3, 2], [0, 3]] {
            for d1 in 3..6 {
                for d2 in 3..5 {
                    let theta = mono(&[alpha[0] as i64, alpha[1] as i64]);
                    let ms = model_basis(&theta, &bx(&[d1, d2]), 1e-12).unwrap();
                    assert_eq!(ms.q, monomial_model_dimension(&alpha, &[d1, d2]));
                    assert!(orthonormality_defect(&ms.basis) <= 1e-12);
                    assert!(ms.theta_orthogonality_defect() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let not_inner = TorusSymbol::scalar(1, [(MultiIndex(vec![0]), ONE), (MultiIndex(vec![1]), ONE)]).unwrap();
        assert!(matches!(model_basis(&not_inner, &bx(&[5]), 1e-8), Err(Error::NotInner { .. })));
        assert!(model_basis(&mono(&[-1]), &bx(&[5]), 1e-8).is_err());
        assert!(model_basis(&mono(&[6]), &bx(&[5]), 1e-8).is_err());
    }

    #[test]
    fn residual_examples() {
        let ms = model_basis(&mono(&[2]), &bx(&[5]), 1e-12).unwrap();
        assert_eq!(invariance_residual(&ms, &CMatrix::zeros(2, 2)).unwrap(), vec![0.0]);
        assert_eq!(invariance_residual(&ms, &CMatrix::identity(2, 2)).unwrap(), vec![1.0]);
        let c = compressed_shift(&ms, 0).unwrap().matrix;
        let a = c.adjoint() * &c;
        assert_eq!(invariance_residual(&ms, &a).unwrap(), vec![1.0]);
        assert!(invariance_residual(&ms, &CMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn rigidity_for_powers() {
        let expected = [0.618, 0.445, 0.347, 0.285, 0.241];
        for (n, e) in (2..=6).zip(expected) {
            let ms = model_basis(&mono(&[n]), &bx(&[12]), 1e-12).unwrap();
            let k = invariance_kernel(&ms, 1e-8).unwrap();
            assert_eq!(k.kernel_dim, 0);
            assert!((k.sigma_min - e).abs() < 1e-3, "N = {n}: {}", k.sigma_min);
        }
    }

    #[test]
    fn iterative_kernel_agrees_with_dense() {
        let ms = model_basis(&mono(&[1, 1]), &bx(&[4, 4]), 1e-12).unwrap();
        let dense = invariance_kernel(&ms, 1e-8).unwrap();
        assert_eq!(dense.kernel_dim, 0);
        let opts = KernelOptions { dense_limit: 0, ..KernelOptions::default() };
        let it = invariance_kernel_with(&ms, 1e-8, &opts).unwrap();
        assert!((it.sigma_min - dense.sigma_min).abs() < 1e-6, "{} vs {}", it.sigma_min, dense.sigma_min);
        assert_eq!(it.kernel_dim, 0);
    }

    #[test]
    fn compactness_on_models() {
        let ms = model_basis(&mono(&[3]), &bx(&[8]), 1e-12).unwrap();
        let t = CMatrix::from_fn(3, 3, |i, j| Complex64::new((i * 3 + j) as f64, 1.0));
        let r = model_compactness_test(&ms, &t, 5, 1e-12).unwrap();
        for &(m, v) in &r.norms[0] {
            if m >= 3 {
                assert_eq!(v, 0.0);
            }
        }
        assert!(r.verdict);

        let ms = model_basis(&mono(&[1, 1]), &bx(&[5, 5]), 1e-12).unwrap();
        let r = model_compactness_test(&ms, &CMatrix::identity(ms.q, ms.q), 3, 1e-6).unwrap();
        for seq in &r.norms {
            for &(_, v) in seq {
                assert!((v - 1.0).abs() < 1e-12);
            }
        }
        assert!(!r.verdict);
        assert!(model_compactness_test(&ms, &CMatrix::identity(ms.q, ms.q), 0, 1e-6).is_err());
    }

    #[test]
    fn blaschke_model_space() {
        let theta = blaschke_factor(Complex64::new(0.5, 0.0), 40).unwrap();
        let ms = model_basis(&theta, &bx(&[60]), 1e-8).unwrap();
        assert_eq!(ms.q, 40);
        assert!(orthonormality_defect(&ms.basis) <= 1e-10);
        assert!(ms.theta_orthogonality_defect() <= 1e-10);
        assert!(ms.boundary_note);
        let c = compressed_shift(&ms, 0).unwrap();
        assert!(c.norm() <= 1.0 + 1e-10);
    }

    #[test]
    fn block_model_space() {
        let theta = TorusSymbol::from_coefficients(
            1,
            2,
            [
                (MultiIndex(vec![0]), CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, ONE])),
                (MultiIndex(vec![1]), CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO])),
            ],
        )
        .unwrap();
        let ms = model_basis(&theta, &bx(&[4]), 1e-12).unwrap();
        assert_eq!(ms.q, 2);
        assert!(ms.theta_orthogonality_defect() == 0.0);
        let c = compressed_shift(&ms, 0).unwrap();
        assert!(c.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn adjoint_relation_and_export() {
        let ms = model_basis(&mono(&[1, 2]), &bx(&[3, 4]), 1e-12).unwrap();
        for i in 0..2 {
            let c = compressed_shift(&ms, i).unwrap();
            let shift = crate::operators::TruncatedOperator::shift(&ms.domain, i, 1).unwrap();
            let direct = ms.basis.adjoint() * shift.matrix().adjoint() * &ms.basis;
            assert!(max_abs_diff(&c.matrix.adjoint(), &direct) <= 1e-15);
            assert!(c.norm() <= 1.0 + 1e-10);
        }
        for enc in [Encoding::Binary, Encoding::Csv] {
            let mut buf = Vec::new();
            ms.export_to(&mut buf, enc).unwrap();
            let (header, basis) = read_export(&mut buf.as_slice()).unwrap();
            assert_eq!(header.q, ms.q);
            assert_eq!(basis, ms.basis);
        }
    }
}
