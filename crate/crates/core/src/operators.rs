//! Dense (block) operators on the truncated monomial basis.
//!
//! Block layout is block-major: row `pos(l)·p + a`, column `pos(k)·p + b`.
//! Truncated shifts are not isometries on the top layer
//! (`S*S = I − top-layer projector`), which is why the analysis layer never
//! multiplies shift matrices to realize `T_z^{*m} T T_z^m`.

use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{Direction, FftNd};
use crate::lattice::{IndexBox, MultiIndex};
use crate::linalg::{expand_blocks, power_norm, spectral_norm, submatrix, CMatrix, CVector, PowerNorm, ONE, ZERO};
use crate::par;
use crate::symbols::{SymbolFile, TorusSymbol};

#[derive(Clone, Debug, PartialEq)]
pub enum Structure {
    General,
    /// Block `(l, k)` equals `φ̂(l − k)` exactly.
    Toeplitz(Arc<TorusSymbol>),
    Projector,
    /// Truncated `T_{z_j}` (0-based direction).
    Shift(usize),
}

impl Structure {
    pub fn name(&self) -> &'static str {
        match self {
            Structure::General => "general",
            Structure::Toeplitz(_) => "toeplitz",
            Structure::Projector => "projector",
            Structure::Shift(_) => "shift",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormMethod {
    DenseSvd,
    PowerIteration { tol: f64, max_iter: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedOperator {
    domain: IndexBox,
    p: usize,
    matrix: CMatrix,
    structure: Structure,
}

impl TruncatedOperator {
    pub fn new(domain: IndexBox, p: usize, matrix: CMatrix) -> Result<Self> {
        Self::with_structure(domain, p, matrix, Structure::General)
    }

    fn with_structure(domain: IndexBox, p: usize, matrix: CMatrix, structure: Structure) -> Result<Self> {
        if p == 0 {
            return Err(Error::Dimension("block size must be at least 1".into()));
        }
        let dim = p * domain.len();
        if matrix.shape() != (dim, dim) {
            return Err(Error::Dimension(format!(
                "matrix is {:?} but box {:?} with p = {p} needs {dim}x{dim}",
                matrix.shape(),
                domain.caps()
            )));
        }
        Ok(TruncatedOperator { domain, p, matrix, structure })
    }

    pub fn identity(domain: &IndexBox, p: usize) -> Self {
        let dim = p * domain.len();
        TruncatedOperator {
            domain: domain.clone(),
            p,
            matrix: CMatrix::identity(dim, dim),
            structure: Structure::General,
        }
    }

    pub fn zeros(domain: &IndexBox, p: usize) -> Self {
        let dim = p * domain.len();
        TruncatedOperator {
            domain: domain.clone(),
            p,
            matrix: CMatrix::zeros(dim, dim),
            structure: Structure::General,
        }
    }

    /// Finite section `⟨T_φ z^k, z^l⟩ = φ̂(l − k)`.
    pub fn toeplitz(symbol: &TorusSymbol, domain: &IndexBox) -> Result<Self> {
        if symbol.n() != domain.dim() {
            return Err(Error::Dimension(format!(
                "symbol has {} variables, box has {}",
                symbol.n(),
                domain.dim()
            )));
        }
        let p = symbol.p();
        let dim = p * domain.len();
        let mut matrix = CMatrix::zeros(dim, dim);
        let caps = domain.caps();
        let strides = domain.strides();
        for (f, c) in symbol.coefficients() {
            // Columns k with k + f in the box: kᵢ ∈ [max(0, −fᵢ), dᵢ − max(0, fᵢ)].
            let mut lo = Vec::with_capacity(caps.len());
            let mut hi = Vec::with_capacity(caps.len());
            let mut empty = false;
            for (&fi, &d) in f.entries().iter().zip(caps) {
                let a = (-fi).max(0);
                let b = d as i64 - fi.max(0);
                if a > b {
                    empty = true;
                    break;
                }
                lo.push(a as usize);
                hi.push(b as usize);
            }
            if empty {
                continue;
            }
            let sub = IndexBox::new(lo.iter().zip(&hi).map(|(a, b)| b - a).collect::<Vec<_>>())?;
            let cols = sub.positions_in(domain, &lo)?;
            let shift: i64 = f.entries().iter().zip(&strides).map(|(&fi, &s)| fi * s as i64).sum();
            for col in cols {
                let row = (col as i64 + shift) as usize;
                for a in 0..p {
                    for b in 0..p {
                        matrix[(row * p + a, col * p + b)] = c[(a, b)];
                    }
                }
            }
        }
        Ok(TruncatedOperator {
            domain: domain.clone(),
            p,
            matrix,
            structure: Structure::Toeplitz(Arc::new(symbol.clone())),
        })
    }

    /// Truncated `T_{z_j} ⊗ I_p`: `e_k ↦ e_{k+ε_j}` when `k_j < d_j`, else 0.
    pub fn shift(domain: &IndexBox, axis: usize, p: usize) -> Result<Self> {
        if axis >= domain.dim() {
            return Err(Error::Dimension(format!(
                "direction {axis} out of range for {} variables",
                domain.dim()
            )));
        }
        let mut op = Self::toeplitz(&TorusSymbol::coordinate(domain.dim(), p, axis), domain)?;
        op.structure = Structure::Shift(axis);
        Ok(op)
    }

    /// Orthogonal projector onto `span{z^k ⊗ ℂᵖ : kᵢ ≤ m − 1 ∀i}`; rank `p·mⁿ`.
    pub fn layer_projector(domain: &IndexBox, m: usize, p: usize) -> Result<Self> {
        let max = domain.min_cap() + 1;
        if m > max {
            return Err(Error::LayerOutOfRange { m, max });
        }
        let dim = p * domain.len();
        let mut matrix = CMatrix::zeros(dim, dim);
        let mut coords = vec![0; domain.dim()];
        for pos in 0..domain.len() {
            domain.coords_into(pos, &mut coords);
            if coords.iter().all(|&k| k < m) {
                for a in 0..p {
                    matrix[(pos * p + a, pos * p + a)] = ONE;
                }
            }
        }
        Ok(TruncatedOperator { domain: domain.clone(), p, matrix, structure: Structure::Projector })
    }

    /// `Σ (−1)^{l+1} (S_{i₁}⋯S_{i_l})ᵐ (S_{i₁}⋯S_{i_l})^{*m}` over nonempty
    /// direction subsets, computed by multiplying truncated shift matrices.
    /// Equals `I − F_m` exactly at truncation.
    pub fn inclusion_exclusion_complement(domain: &IndexBox, m: usize, p: usize) -> Result<Self> {
        let n = domain.dim();
        let shifts: Vec<CMatrix> = (0..n)
            .map(|j| Self::shift(domain, j, p).map(|s| s.matrix))
            .collect::<Result<_>>()?;
        let dim = p * domain.len();
        let mut acc = CMatrix::zeros(dim, dim);
        for mask in 1u32..(1 << n) {
            let mut prod = CMatrix::identity(dim, dim);
            for (j, s) in shifts.iter().enumerate() {
                if mask & (1 << j) != 0 {
                    prod = &prod * s;
                }
            }
            let mut power = CMatrix::identity(dim, dim);
            for _ in 0..m {
                power = &power * &prod;
            }
            let term = &power * power.adjoint();
            if mask.count_ones() % 2 == 1 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        Self::new(domain.clone(), p, acc)
    }

    pub fn domain(&self) -> &IndexBox {
        &self.domain
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    /// `p·N`.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Forgets any structure tag.
    pub fn into_general(mut self) -> Self {
        self.structure = Structure::General;
        self
    }

    /// The `p×p` block at monomial positions `(row, col)`.
    pub fn block(&self, row: usize, col: usize) -> CMatrix {
        let p = self.p;
        self.matrix.view((row * p, col * p), (p, p)).into_owned()
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.domain != other.domain || self.p != other.p {
            return Err(Error::Dimension(format!(
                "operators live on {:?}/p={} and {:?}/p={}",
                self.domain.caps(),
                self.p,
                other.domain.caps(),
                other.p
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Self::new(self.domain.clone(), self.p, &self.matrix + &other.matrix)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Self::new(self.domain.clone(), self.p, &self.matrix - &other.matrix)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        TruncatedOperator {
            domain: self.domain.clone(),
            p: self.p,
            matrix: &self.matrix * s,
            structure: Structure::General,
        }
    }

    /// `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Self::new(self.domain.clone(), self.p, &self.matrix * &other.matrix)
    }

    pub fn adjoint(&self) -> Self {
        let structure = match &self.structure {
            Structure::Toeplitz(s) => Structure::Toeplitz(Arc::new(s.adjoint())),
            Structure::Projector => Structure::Projector,
            _ => Structure::General,
        };
        TruncatedOperator {
            domain: self.domain.clone(),
            p: self.p,
            matrix: self.matrix.adjoint(),
            structure,
        }
    }

    /// Principal sub-block indexed by `sub` (same coordinates, smaller caps).
    pub fn restrict(&self, sub: &IndexBox) -> Result<Self> {
        let pos = expand_blocks(&sub.positions_in(&self.domain, &vec![0; sub.dim()])?, self.p);
        let structure = match &self.structure {
            Structure::Toeplitz(s) => Structure::Toeplitz(s.clone()),
            Structure::Projector => Structure::Projector,
            _ => Structure::General,
        };
        Self::with_structure(sub.clone(), self.p, submatrix(&self.matrix, &pos, &pos), structure)
    }

    pub fn norm(&self) -> f64 {
        spectral_norm(&self.matrix)
    }

    pub fn operator_norm(&self, method: NormMethod) -> f64 {
        match method {
            NormMethod::DenseSvd => spectral_norm(&self.matrix),
            NormMethod::PowerIteration { tol, max_iter } => self.power_norm(tol, max_iter).value,
        }
    }

    /// Power-iteration estimate with its convergence report.
    pub fn power_norm(&self, tol: f64, max_iter: usize) -> PowerNorm {
        power_norm(&self.matrix, tol, max_iter, 0x5eed)
    }

    pub fn apply_dense(&self, v: &CVector) -> Result<CVector> {
        if v.len() != self.dim() {
            return Err(Error::Dimension(format!("vector has length {}, operator dimension {}", v.len(), self.dim())));
        }
        Ok(&self.matrix * v)
    }

    /// Matvec through the multilevel circulant embedding. Requires the
    /// Toeplitz tag.
    pub fn apply_fast(&self, v: &CVector) -> Result<CVector> {
        ToeplitzPlan::new(self)?.apply(v)
    }
}

/// `basis* · op · basis` for a column-orthonormal `basis` (checked to 1e-10).
pub fn compress(op: &CMatrix, basis: &CMatrix) -> Result<CMatrix> {
    if basis.nrows() != op.nrows() || op.nrows() != op.ncols() {
        return Err(Error::Dimension(format!(
            "basis is {:?}, operator is {:?}",
            basis.shape(),
            op.shape()
        )));
    }
    let dev = orthonormality_defect(basis);
    if dev > 1e-10 {
        return Err(Error::NotOrthonormal(dev));
    }
    Ok(basis.adjoint() * op * basis)
}

/// `max |(B*B − I)_{ij}|`.
pub fn orthonormality_defect(basis: &CMatrix) -> f64 {
    let g = basis.adjoint() * basis;
    let q = g.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..q {
        for j in 0..q {
            let target = if i == j { ONE } else { ZERO };
            dev = dev.max((g[(i, j)] - target).norm());
        }
    }
    dev
}

/// Precomputed spectrum of the embedded multilevel circulant.
pub struct ToeplitzPlan {
    domain: IndexBox,
    p: usize,
    fft: FftNd,
    /// `p²` spectra, row-major over `(a, b)`.
    spectra: Vec<Vec<Complex64>>,
    /// Position of each basis index inside the padded grid.
    embed: Vec<usize>,
}

impl ToeplitzPlan {
    pub fn new(op: &TruncatedOperator) -> Result<Self> {
        match &op.structure {
            Structure::Toeplitz(sym) => Self::from_symbol(sym, &op.domain),
            Structure::Shift(j) => Self::from_symbol(&TorusSymbol::coordinate(op.domain.dim(), op.p, *j), &op.domain),
            other => Err(Error::Structure(format!(
                "fast matvec needs a Toeplitz operator, got `{}`",
                other.name()
            ))),
        }
    }

    pub fn from_symbol(symbol: &TorusSymbol, domain: &IndexBox) -> Result<Self> {
        if symbol.n() != domain.dim() {
            return Err(Error::Dimension("symbol and box dimensions differ".into()));
        }
        let p = symbol.p();
        let shape: Vec<usize> = domain.caps().iter().map(|&d| (2 * d + 1).next_power_of_two()).collect();
        let fft = FftNd::new(&shape);
        let total = fft.len();
        let grid = IndexBox::new(shape.iter().map(|l| l - 1).collect::<Vec<_>>())?;
        let strides = grid.strides();
        let caps = domain.caps();
        let kept: Vec<(usize, &CMatrix)> = symbol
            .coefficients()
            .iter()
            .filter(|(f, _)| f.entries().iter().zip(caps).all(|(&fi, &d)| fi.unsigned_abs() as usize <= d))
            .map(|(f, c)| {
                let idx = f
                    .entries()
                    .iter()
                    .zip(&shape)
                    .zip(&strides)
                    .map(|((&fi, &l), &s)| fi.rem_euclid(l as i64) as usize * s)
                    .sum();
                (idx, c)
            })
            .collect();
        let spectra = par::map_range(p * p, |ab| {
            let (a, b) = (ab / p, ab % p);
            let mut buf = vec![ZERO; total];
            for (idx, c) in &kept {
                buf[*idx] = c[(a, b)];
            }
            fft.process(&mut buf, Direction::Forward);
            buf
        });
        let embed = domain.positions_in(&grid, &vec![0; domain.dim()])?;
        Ok(ToeplitzPlan { domain: domain.clone(), p, fft, spectra, embed })
    }

    pub fn padded_shape(&self) -> &[usize] {
        self.fft.shape()
    }

    pub fn apply(&self, v: &CVector) -> Result<CVector> {
        let p = self.p;
        let n_basis = self.domain.len();
        if v.len() != p * n_basis {
            return Err(Error::Dimension(format!(
                "vector has length {}, operator dimension {}",
                v.len(),
                p * n_basis
            )));
        }
        let total = self.fft.len();
        let inputs = par::map_range(p, |b| {
            let mut buf = vec![ZERO; total];
            for (pos, &g) in self.embed.iter().enumerate() {
                buf[g] = v[pos * p + b];
            }
            self.fft.process(&mut buf, Direction::Forward);
            buf
        });
        let outputs = par::map_range(p, |a| {
            let mut buf = vec![ZERO; total];
            for (b, x) in inputs.iter().enumerate() {
                let c = &self.spectra[a * p + b];
                for ((o, ci), xi) in buf.iter_mut().zip(c).zip(x) {
                    *o += ci * xi;
                }
            }
            self.fft.process(&mut buf, Direction::Inverse);
            buf
        });
        let scale = 1.0 / total as f64;
        let mut out = CVector::zeros(p * n_basis);
        for (a, y) in outputs.iter().enumerate() {
            for (pos, &g) in self.embed.iter().enumerate() {
                out[pos * p + a] = y[g] * scale;
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Binary,
    Csv,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum StructureHeader {
    General,
    Toeplitz { symbol: SymbolFile },
    Projector,
    Shift { direction: usize },
}

#[derive(Serialize, Deserialize)]
struct OperatorHeader {
    n: usize,
    p: usize,
    caps: Vec<usize>,
    structure: StructureHeader,
    #[serde(default = "default_encoding")]
    encoding: Encoding,
}

fn default_encoding() -> Encoding {
    Encoding::Binary
}

/// Writes `matrix` after a header line: binary little-endian `(re, im)`
/// pairs, or one CSV line per row with interleaved `re,im` columns.
pub(crate) fn write_matrix_body<W: Write + ?Sized>(w: &mut W, matrix: &CMatrix, encoding: Encoding) -> Result<()> {
    match encoding {
        Encoding::Binary => {
            let mut buf = Vec::with_capacity(matrix.len() * 16);
            for i in 0..matrix.nrows() {
                for j in 0..matrix.ncols() {
                    let z = matrix[(i, j)];
                    buf.extend_from_slice(&z.re.to_le_bytes());
                    buf.extend_from_slice(&z.im.to_le_bytes());
                }
            }
            w.write_all(&buf)?;
        }
        Encoding::Csv => {
            for i in 0..matrix.nrows() {
                let row: Vec<String> = (0..matrix.ncols())
                    .map(|j| format!("{},{}", matrix[(i, j)].re, matrix[(i, j)].im))
                    .collect();
                writeln!(w, "{}", row.join(","))?;
            }
        }
    }
    Ok(())
}

pub(crate) fn read_matrix_body<R: BufRead>(r: &mut R, rows: usize, cols: usize, encoding: Encoding) -> Result<CMatrix> {
    let mut m = CMatrix::zeros(rows, cols);
    match encoding {
        Encoding::Binary => {
            let mut bytes = Vec::new();
            r.read_to_end(&mut bytes)?;
            if bytes.len() != rows * cols * 16 {
                return Err(Error::format(
                    "body",
                    format!("expected {} bytes of matrix data, found {}", rows * cols * 16, bytes.len()),
                ));
            }
            for (idx, chunk) in bytes.chunks_exact(16).enumerate() {
                let re = f64::from_le_bytes(chunk[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(chunk[8..].try_into().expect("8 bytes"));
                m[(idx / cols, idx % cols)] = Complex64::new(re, im);
            }
        }
        Encoding::Csv => {
            let mut count = 0;
            for (i, line) in r.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                if count >= rows {
                    return Err(Error::format("body", "more CSV rows than the header declares"));
                }
                let vals: Vec<f64> = line
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::format(format!("body row {i}"), e.to_string()))?;
                if vals.len() != 2 * cols {
                    return Err(Error::format(
                        format!("body row {i}"),
                        format!("expected {} values, found {}", 2 * cols, vals.len()),
                    ));
                }
                for j in 0..cols {
                    m[(count, j)] = Complex64::new(vals[2 * j], vals[2 * j + 1]);
                }
                count += 1;
            }
            if count != rows {
                return Err(Error::format("body", format!("expected {rows} CSV rows, found {count}")));
            }
        }
    }
    Ok(m)
}

impl TruncatedOperator {
    pub fn write_to<W: Write + ?Sized>(&self, w: &mut W, encoding: Encoding) -> Result<()> {
        let structure = match &self.structure {
            Structure::General => StructureHeader::General,
            Structure::Toeplitz(s) => StructureHeader::Toeplitz { symbol: s.to_file() },
            Structure::Projector => StructureHeader::Projector,
            Structure::Shift(j) => StructureHeader::Shift { direction: *j },
        };
        let header = OperatorHeader {
            n: self.domain.dim(),
            p: self.p,
            caps: self.domain.caps().to_vec(),
            structure,
            encoding,
        };
        serde_json::to_writer(&mut *w, &header)?;
        w.write_all(b"\n")?;
        write_matrix_body(w, &self.matrix, encoding)
    }

    pub fn read_from<R: BufRead>(r: &mut R) -> Result<Self> {
        let mut line = String::new();
        r.read_line(&mut line)?;
        let header: OperatorHeader =
            serde_json::from_str(line.trim_end()).map_err(|e| Error::format("header", e.to_string()))?;
        if header.caps.len() != header.n {
            return Err(Error::format("caps", format!("expected {} caps, found {}", header.n, header.caps.len())));
        }
        if header.p == 0 {
            return Err(Error::format("p", "must be at least 1"));
        }
        let domain = IndexBox::new(header.caps).map_err(|e| Error::format("caps", e.to_string()))?;
        let structure = match header.structure {
            StructureHeader::General => Structure::General,
            StructureHeader::Projector => Structure::Projector,
            StructureHeader::Shift { direction } => {
                if direction >= header.n {
                    return Err(Error::format("structure.direction", "out of range"));
                }
                Structure::Shift(direction)
            }
            StructureHeader::Toeplitz { symbol } => {
                let s = TorusSymbol::try_from(symbol).map_err(|e| Error::format("structure.symbol", e.to_string()))?;
                if s.n() != header.n || s.p() != header.p {
                    return Err(Error::format("structure.symbol", "symbol dimensions disagree with header"));
                }
                Structure::Toeplitz(Arc::new(s))
            }
        };
        let dim = header.p * domain.len();
        let matrix = read_matrix_body(r, dim, dim, header.encoding)?;
        Self::with_structure(domain, header.p, matrix, structure)
    }

    pub fn save(&self, path: &std::path::Path, encoding: Encoding) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f, encoding)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut f)
    }
}

/// Unit operator `e_l e_k*` (scalar positions given as multi-indices).
pub fn matrix_unit(domain: &IndexBox, p: usize, row: (&MultiIndex, usize), col: (&MultiIndex, usize)) -> Result<TruncatedOperator> {
    let mut op = TruncatedOperator::zeros(domain, p);
    let r = domain.position(row.0)? * p + row.1;
    let c = domain.position(col.0)? * p + col.1;
    op.matrix[(r, c)] = ONE;
    Ok(op)
}
