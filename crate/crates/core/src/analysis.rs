//! Toeplitzness tests, symbol recovery, asymptotic sequences, compactness
//! profiles and the Toeplitz + compact split.
//!
//! Every `m`-indexed quantity is read off by shifting entry indices into an
//! interior sub-box: `T_{z_i}^{*m} T T_{z_j}^m` has entries
//! `T[l + m·εᵢ, k + m·εⱼ]`. Multiplying truncated shift matrices instead
//! would mix in the top-layer defect `S*S ≠ I`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{IndexBox, MultiIndex};
use crate::linalg::{block_norm, expand_blocks, spectral_norm, submatrix, CMatrix, ZERO};
use crate::operators::TruncatedOperator;
use crate::par;
use crate::symbols::{SymbolFile, TorusSymbol};

/// Tolerance for identities that hold exactly on polynomial inputs.
pub const EXACT_TOL: f64 = 1e-10;
/// Tolerance for limit and convergence verdicts.
pub const LIMIT_TOL: f64 = 1e-6;

/// Entries `T[l + row_offset, k + col_offset]` for `l ∈ rows`, `k ∈ cols`.
pub fn shifted_section(
    op: &TruncatedOperator,
    rows: &IndexBox,
    row_offset: &[usize],
    cols: &IndexBox,
    col_offset: &[usize],
) -> Result<CMatrix> {
    let p = op.p();
    let r = expand_blocks(&rows.positions_in(op.domain(), row_offset)?, p);
    let c = expand_blocks(&cols.positions_in(op.domain(), col_offset)?, p);
    Ok(submatrix(op.matrix(), &r, &c))
}

fn unit_offset(n: usize, axis: usize, m: usize) -> Vec<usize> {
    let mut v = vec![0; n];
    v[axis] = m;
    v
}

#[derive(Clone, Debug, Serialize)]
pub struct DefectWitness {
    pub direction: usize,
    /// `(l, k)`.
    pub entry: (MultiIndex, MultiIndex),
    /// `(l + ε_j, k + ε_j)`.
    pub shifted: (MultiIndex, MultiIndex),
    pub difference: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DefectReport {
    pub per_direction: Vec<f64>,
    pub overall: f64,
    pub tol: f64,
    pub verdict: bool,
    pub witness: Option<DefectWitness>,
}

/// Finite form of `T_{z_j}^* T T_{z_j} = T`: the largest
/// `‖T[l+ε_j, k+ε_j] − T[l, k]‖` over pairs whose shift stays in the box.
pub fn toeplitz_defect(op: &TruncatedOperator, tol: f64) -> DefectReport {
    let domain = op.domain();
    let n = domain.dim();
    let p = op.p();
    let per: Vec<(f64, Option<DefectWitness>)> = par::map_range(n, |j| {
        let Ok(inner) = domain.interior(1, &[j]) else {
            return (0.0, None);
        };
        let base = inner.positions_in(domain, &vec![0; n]).expect("interior fits");
        let shifted = inner.positions_in(domain, &unit_offset(n, j, 1)).expect("interior fits");
        let m = op.matrix();
        let mut best = 0.0;
        let mut arg: Option<(usize, usize)> = None;
        let mut diff = vec![ZERO; p * p];
        for (ci, &kc) in base.iter().enumerate() {
            let kc2 = shifted[ci];
            for (ri, &lr) in base.iter().enumerate() {
                let lr2 = shifted[ri];
                let d = if p == 1 {
                    (m[(lr2, kc2)] - m[(lr, kc)]).norm()
                } else {
                    for a in 0..p {
                        for b in 0..p {
                            diff[a * p + b] = m[(lr2 * p + a, kc2 * p + b)] - m[(lr * p + a, kc * p + b)];
                        }
                    }
                    block_norm(&diff, p)
                };
                if d > best {
                    best = d;
                    arg = Some((lr, kc));
                }
            }
        }
        let witness = arg.map(|(lr, kc)| {
            let l = MultiIndex::from(domain.coords(lr).as_slice());
            let k = MultiIndex::from(domain.coords(kc).as_slice());
            let e = MultiIndex::unit(n, j);
            DefectWitness {
                direction: j,
                shifted: (&l + &e, &k + &e),
                entry: (l, k),
                difference: best,
            }
        });
        (best, witness)
    });
    let mut overall = 0.0;
    let mut witness = None;
    let mut per_direction = Vec::with_capacity(n);
    for (d, w) in per {
        per_direction.push(d);
        if d > overall {
            overall = d;
            witness = w;
        }
    }
    DefectReport { per_direction, overall, tol, verdict: overall <= tol, witness }
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagonalDeviation {
    pub frequency: MultiIndex,
    pub representatives: usize,
    /// Largest distance of a representative from the deepest one
    /// (largest `k`); zero iff the diagonal is constant.
    pub spread: f64,
}

#[derive(Clone, Debug)]
pub struct SymbolRecovery {
    pub symbol: TorusSymbol,
    pub deviations: Vec<DiagonalDeviation>,
    pub max_deviation: f64,
}

/// Averages each multilevel diagonal `l − k = f` (`|fᵢ| ≤ dᵢ`) into `φ̂(f)`.
/// Frequencies whose average is exactly zero are left out of the support.
pub fn recover_symbol(op: &TruncatedOperator) -> SymbolRecovery {
    let domain = op.domain();
    let n = domain.dim();
    let p = op.p();
    let caps = domain.caps();
    let freq_box = IndexBox::new(caps.iter().map(|d| 2 * d).collect::<Vec<_>>()).expect("non-empty");
    let strides = domain.strides();
    let m = op.matrix();
    let per_freq = par::map_range(freq_box.len(), |fp| {
        let fc = freq_box.coords(fp);
        let f: Vec<i64> = fc.iter().zip(caps).map(|(&x, &d)| x as i64 - d as i64).collect();
        let lo: Vec<usize> = f.iter().map(|&fi| (-fi).max(0) as usize).collect();
        let sub = IndexBox::new(
            f.iter()
                .zip(caps)
                .map(|(&fi, &d)| d - fi.unsigned_abs() as usize)
                .collect::<Vec<_>>(),
        )
        .expect("non-empty");
        let cols = sub.positions_in(domain, &lo).expect("diagonal fits");
        let shift: i64 = f.iter().zip(&strides).map(|(&fi, &s)| fi * s as i64).sum();
        let block = |col: usize| {
            let row = (col as i64 + shift) as usize;
            CMatrix::from_fn(p, p, |a, b| m[(row * p + a, col * p + b)])
        };
        let mut sum = CMatrix::zeros(p, p);
        for &c in &cols {
            sum += block(c);
        }
        let mean = sum / Complex64::new(cols.len() as f64, 0.0);
        let deepest = block(*cols.last().expect("at least one representative"));
        let mut spread: f64 = 0.0;
        for &c in &cols {
            let d = block(c) - &deepest;
            spread = spread.max(if p == 1 { d[(0, 0)].norm() } else { spectral_norm(&d) });
        }
        (MultiIndex(f), mean, cols.len(), spread)
    });
    let mut entries = Vec::new();
    let mut deviations = Vec::with_capacity(per_freq.len());
    let mut max_deviation: f64 = 0.0;
    for (f, mean, reps, spread) in per_freq {
        max_deviation = max_deviation.max(spread);
        deviations.push(DiagonalDeviation { frequency: f.clone(), representatives: reps, spread });
        if mean.iter().any(|z| *z != ZERO) {
            entries.push((f, mean));
        }
    }
    let symbol = TorusSymbol::from_coefficients(n, p, entries).expect("distinct frequencies");
    SymbolRecovery { symbol, deviations, max_deviation }
}

#[derive(Clone, Debug, Serialize)]
pub struct SequenceStep {
    pub m: usize,
    /// `‖B_{m+1} − B_m‖` on the common box.
    pub step_norm: f64,
}

#[derive(Clone, Debug)]
pub struct AsymptoticSequence {
    pub direction: usize,
    pub m_max: usize,
    pub tol: f64,
    /// `B_0, …, B_{m_max}`; `B_m` lives on `interior(box, m, {i})`.
    pub sections: Vec<TruncatedOperator>,
    pub steps: Vec<SequenceStep>,
}

impl AsymptoticSequence {
    /// Cauchy surrogate: the last step is within tolerance.
    pub fn is_cauchy(&self) -> bool {
        self.steps.last().is_none_or(|s| s.step_norm <= self.tol)
    }

    /// Deepest `m` whose step is within tolerance.
    pub fn deepest_stable(&self) -> Option<usize> {
        self.steps.iter().rev().find(|s| s.step_norm <= self.tol).map(|s| s.m)
    }

    /// Smallest `m` from which every step is within tolerance.
    pub fn stabilized_from(&self) -> Option<usize> {
        let mut from = None;
        for s in self.steps.iter().rev() {
            if s.step_norm <= self.tol {
                from = Some(s.m);
            } else {
                break;
            }
        }
        from
    }

    pub fn max_step(&self) -> f64 {
        self.steps.iter().map(|s| s.step_norm).fold(0.0, f64::max)
    }

    pub fn summary(&self) -> SequenceSummary {
        SequenceSummary {
            direction: self.direction,
            m_max: self.m_max,
            steps: self.steps.clone(),
            cauchy: self.is_cauchy(),
            stabilized_from: self.stabilized_from(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SequenceSummary {
    pub direction: usize,
    pub m_max: usize,
    pub steps: Vec<SequenceStep>,
    pub cauchy: bool,
    pub stabilized_from: Option<usize>,
}

/// `B_m = T_{z_i}^{*m} T T_{z_i}^m` as exact finite sections, `m = 0..=m_max`.
pub fn asymptotic_sequence(op: &TruncatedOperator, axis: usize, m_max: usize, tol: f64) -> Result<AsymptoticSequence> {
    let domain = op.domain();
    let n = domain.dim();
    if axis >= n {
        return Err(Error::Dimension(format!("direction {axis} out of range for {n} variables")));
    }
    domain.interior(m_max, &[axis])?;
    let sections = par::map_range(m_max + 1, |m| {
        let sub = domain.interior(m, &[axis]).expect("checked above");
        let off = unit_offset(n, axis, m);
        let mat = shifted_section(op, &sub, &off, &sub, &off).expect("interior fits");
        TruncatedOperator::new(sub, op.p(), mat).expect("shape matches")
    });
    let steps = par::map_range(m_max, |m| {
        let sub = domain.interior(m + 1, &[axis]).expect("checked above");
        let next = sections[m + 1].matrix();
        let prev = sections[m].restrict(&sub).expect("nested boxes");
        SequenceStep { m, step_norm: spectral_norm(&(next - prev.matrix())) }
    });
    Ok(AsymptoticSequence { direction: axis, m_max, tol, sections, steps })
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossTermProfile {
    pub row_direction: usize,
    pub col_direction: usize,
    /// `(m, ‖T_{z_i}^{*m}(T − A)T_{z_j}^m‖)`.
    pub norms: Vec<(usize, f64)>,
}

impl CrossTermProfile {
    pub fn last(&self) -> f64 {
        self.norms.last().map_or(0.0, |&(_, v)| v)
    }
}

/// Norms of the sections `(T − A)[l + m·εᵢ, k + m·εⱼ]`, `m = 0..=m_max`.
pub fn cross_term_profile(
    t: &TruncatedOperator,
    a: &TruncatedOperator,
    i: usize,
    j: usize,
    m_max: usize,
) -> Result<CrossTermProfile> {
    let diff = t.sub(a)?;
    cross_term_profile_of(&diff, i, j, m_max)
}

fn cross_term_profile_of(diff: &TruncatedOperator, i: usize, j: usize, m_max: usize) -> Result<CrossTermProfile> {
    let domain = diff.domain();
    let n = domain.dim();
    if i >= n || j >= n {
        return Err(Error::Dimension(format!("directions ({i}, {j}) out of range for {n} variables")));
    }
    domain.interior(m_max, &[i, j])?;
    let norms = par::map_range(m_max + 1, |m| {
        let rows = domain.interior(m, &[i]).expect("checked");
        let cols = domain.interior(m, &[j]).expect("checked");
        let sec = shifted_section(diff, &rows, &unit_offset(n, i, m), &cols, &unit_offset(n, j, m)).expect("fits");
        (m, spectral_norm(&sec))
    });
    Ok(CrossTermProfile { row_direction: i, col_direction: j, norms })
}

#[derive(Clone, Debug, Serialize)]
pub struct CompactnessProfile {
    pub caps: Vec<usize>,
    /// `(m, c_m)` with `c_m = ‖(I − F_m) T (I − F_m)‖`.
    pub values: Vec<(usize, f64)>,
    pub m_max: usize,
    pub tol: f64,
    /// "Numerically compact at (box, tol)".
    pub verdict: bool,
}

/// `c_m` for `m = 0..=m_max`, read from the rows and columns with some
/// `kᵢ ≥ m` (the range of `I − F_m`).
pub fn compactness_profile(op: &TruncatedOperator, m_max: usize, tol: f64) -> Result<CompactnessProfile> {
    let domain = op.domain();
    let max = domain.min_cap() + 1;
    if m_max > max {
        return Err(Error::LayerOutOfRange { m: m_max, max });
    }
    let p = op.p();
    let values = par::map_range(m_max + 1, |m| {
        let mut coords = vec![0; domain.dim()];
        let idx: Vec<usize> = (0..domain.len())
            .filter(|&pos| {
                domain.coords_into(pos, &mut coords);
                coords.iter().any(|&k| k >= m)
            })
            .collect();
        let idx = expand_blocks(&idx, p);
        (m, spectral_norm(&submatrix(op.matrix(), &idx, &idx)))
    });
    let last = values.last().map_or(0.0, |&(_, v)| v);
    let monotone = values.windows(2).all(|w| w[1].1 <= w[0].1 + 10.0 * tol);
    Ok(CompactnessProfile {
        caps: domain.caps().to_vec(),
        values,
        m_max,
        tol,
        verdict: last <= tol && monotone,
    })
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum DecompositionFailure {
    NonCauchy { direction: usize, witness_step_norm: f64, last_step_norm: f64 },
    RemainderNotCompact { last_value: f64 },
    CrossTerm { row_direction: usize, col_direction: usize, last_value: f64 },
}

#[derive(Clone, Debug)]
pub struct DecompositionResult {
    pub tol: f64,
    pub m_max: usize,
    /// Depth of the diagonal compression the symbol was read from.
    pub depth: usize,
    pub recovery: SymbolRecovery,
    pub toeplitz_part: TruncatedOperator,
    /// `T − toeplitz_part`.
    pub remainder: TruncatedOperator,
    pub toeplitz_part_defect: f64,
    pub remainder_profile: CompactnessProfile,
    pub sequences: Vec<SequenceSummary>,
    pub cross_terms: Vec<CrossTermProfile>,
    pub verdict: bool,
    pub failure: Option<DecompositionFailure>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    pub caps: Vec<usize>,
    pub p: usize,
    pub tol: f64,
    pub m_max: usize,
    pub depth: usize,
    pub verdict: bool,
    pub failure: Option<DecompositionFailure>,
    pub recovered_symbol: SymbolFile,
    pub recovery_max_deviation: f64,
    pub toeplitz_part_defect: f64,
    pub remainder_norm: f64,
    pub remainder_profile: CompactnessProfile,
    pub sequences: Vec<SequenceSummary>,
    pub cross_terms: Vec<CrossTermProfile>,
}

impl DecompositionResult {
    pub fn report(&self) -> DecompositionReport {
        DecompositionReport {
            caps: self.toeplitz_part.domain().caps().to_vec(),
            p: self.toeplitz_part.p(),
            tol: self.tol,
            m_max: self.m_max,
            depth: self.depth,
            verdict: self.verdict,
            failure: self.failure.clone(),
            recovered_symbol: self.recovery.symbol.to_file(),
            recovery_max_deviation: self.recovery.max_deviation,
            toeplitz_part_defect: self.toeplitz_part_defect,
            remainder_norm: self.remainder.norm(),
            remainder_profile: self.remainder_profile.clone(),
            sequences: self.sequences.clone(),
            cross_terms: self.cross_terms.clone(),
        }
    }
}

/// Default depth budget `min(dᵢ)/2`.
pub fn default_m_max(domain: &IndexBox) -> usize {
    domain.min_cap() / 2
}

/// Toeplitz + compact split with the default depth budget.
pub fn asymptotic_decompose(op: &TruncatedOperator, tol: f64) -> Result<DecompositionResult> {
    asymptotic_decompose_with(op, tol, default_m_max(op.domain()))
}

/// Toeplitz + compact split:
/// 1. asymptotic sequences in every direction;
/// 2. the symbol is averaged from the compression shifted by `m*` in every
///    direction at once, `m*` the deepest stabilized step over all
///    directions (`m_max` if none stabilized);
/// 3. `A = T_φ` on the full box, `K = T − A`;
/// 4. compactness profile of `K` and cross-term profiles for all pairs.
///
/// The identity `A + K = T` holds whatever the verdict.
pub fn asymptotic_decompose_with(op: &TruncatedOperator, tol: f64, m_max: usize) -> Result<DecompositionResult> {
    let domain = op.domain();
    let n = domain.dim();
    domain.interior_all(m_max)?;
    let sequences: Vec<AsymptoticSequence> = (0..n)
        .map(|i| asymptotic_sequence(op, i, m_max, tol))
        .collect::<Result<_>>()?;
    let depth = sequences
        .iter()
        .map(|s| s.deepest_stable().unwrap_or(m_max))
        .min()
        .unwrap_or(0);
    let inner = domain.interior_all(depth)?;
    let off = vec![depth; n];
    let compressed = TruncatedOperator::new(inner.clone(), op.p(), shifted_section(op, &inner, &off, &inner, &off)?)?;
    let recovery = recover_symbol(&compressed);
    let toeplitz_part = TruncatedOperator::toeplitz(&recovery.symbol, domain)?;
    let remainder = op.sub(&toeplitz_part)?;
    let toeplitz_part_defect = toeplitz_defect(&toeplitz_part, tol).overall;
    let remainder_profile = compactness_profile(&remainder, m_max, tol)?;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let cross_terms: Vec<CrossTermProfile> = par::map_slice(&pairs, |&(i, j)| cross_term_profile_of(&remainder, i, j, m_max))
        .into_iter()
        .collect::<Result<_>>()?;

    let failure = if let Some(s) = sequences.iter().find(|s| !s.is_cauchy()) {
        Some(DecompositionFailure::NonCauchy {
            direction: s.direction,
            witness_step_norm: s.max_step(),
            last_step_norm: s.steps.last().map_or(0.0, |x| x.step_norm),
        })
    } else if !remainder_profile.verdict {
        Some(DecompositionFailure::RemainderNotCompact {
            last_value: remainder_profile.values.last().map_or(0.0, |&(_, v)| v),
        })
    } else {
        cross_terms.iter().find(|c| c.last() > tol).map(|c| DecompositionFailure::CrossTerm {
            row_direction: c.row_direction,
            col_direction: c.col_direction,
            last_value: c.last(),
        })
    };
    Ok(DecompositionResult {
        tol,
        m_max,
        depth,
        recovery,
        toeplitz_part,
        remainder,
        toeplitz_part_defect,
        remainder_profile,
        sequences: sequences.iter().map(AsymptoticSequence::summary).collect(),
        cross_terms,
        verdict: failure.is_none(),
        failure,
    })
}

/// One-variable block split `T = A + K` with `A` block Toeplitz. For
/// `n = 1` the range of `I − F_m` is the range of `R_m = S^m S^{*m}`, so the
/// remainder profile is `‖R_m (T − A) R_m‖`.
pub fn feintuch_decompose(op: &TruncatedOperator, tol: f64) -> Result<DecompositionResult> {
    feintuch_decompose_with(op, tol, default_m_max(op.domain()))
}

pub fn feintuch_decompose_with(op: &TruncatedOperator, tol: f64, m_max: usize) -> Result<DecompositionResult> {
    if op.domain().dim() != 1 {
        return Err(Error::Dimension(format!(
            "block decomposition is one-variable, operator has {} variables",
            op.domain().dim()
        )));
    }
    asymptotic_decompose_with(op, tol, m_max)
}
