//! Truncated number-basis oracle.
//!
//! Everything here lives in the span of `|0⟩, …, |D−1⟩`. Normally ordered
//! monomials `(a†)^m a^n` are represented without truncation error (the
//! annihilators act first), so [`from_symbol`] is exact on every matrix entry;
//! products such as `a a†` are not, which is why comparisons against this
//! oracle use interior blocks.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::expm::{expm, expm_hermitian, is_hermitian};
use crate::quadrature::ComplexPlaneRule;
use crate::symbol::NormalSymbol;

/// Largest coherent-state probability mass allowed outside the truncation.
pub const ADMISSIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("dimension {dim} is too small, need at least {required}")]
    DimensionTooSmall { dim: usize, required: usize },
    #[error("truncation at D = {dim} is too coarse for |α| = {magnitude:.3}: tail mass {tail:.3e}")]
    TruncationTooCoarse { magnitude: f64, dim: usize, tail: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    entries: DVector<Complex64>,
}

impl FockVector {
    pub fn new(entries: DVector<Complex64>) -> Self {
        Self { entries }
    }

    pub fn basis(n: usize, dim: usize) -> Self {
        let mut entries = DVector::zeros(dim);
        entries[n] = Complex64::new(1.0, 0.0);
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &DVector<Complex64> {
        &self.entries
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    matrix: DMatrix<Complex64>,
}

impl FockOperator {
    pub fn new(matrix: DMatrix<Complex64>) -> Self {
        assert!(matrix.is_square(), "Fock operators are square");
        Self { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.matrix.adjoint())
    }

    pub fn is_hermitian(&self) -> bool {
        is_hermitian(&self.matrix)
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn apply(&self, v: &FockVector) -> Result<FockVector, FockError> {
        self.check_dim(v.dim())?;
        Ok(FockVector::new(&self.matrix * &v.entries))
    }

    pub fn compose(&self, other: &Self) -> Result<Self, FockError> {
        self.check_dim(other.dim())?;
        Ok(Self::new(&self.matrix * &other.matrix))
    }

    pub fn add(&self, other: &Self) -> Result<Self, FockError> {
        self.check_dim(other.dim())?;
        Ok(Self::new(&self.matrix + &other.matrix))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(self.matrix.map(|z| z * c))
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::identity(self.dim());
        let mut base = self.matrix.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc.matrix = &acc.matrix * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        acc
    }

    /// Largest entry deviation over the leading `block × block` corner.
    pub fn block_distance(&self, other: &Self, block: usize) -> f64 {
        let block = block.min(self.dim()).min(other.dim());
        let mut worst: f64 = 0.0;
        for i in 0..block {
            for j in 0..block {
                worst = worst.max((self.matrix[(i, j)] - other.matrix[(i, j)]).norm());
            }
        }
        worst
    }

    fn check_dim(&self, other: usize) -> Result<(), FockError> {
        if self.dim() == other {
            Ok(())
        } else {
            Err(FockError::DimensionMismatch {
                left: self.dim(),
                right: other,
            })
        }
    }
}

fn complex_pairs(values: impl Iterator<Item = Complex64>) -> Vec<[f64; 2]> {
    values.map(|z| [z.re, z.im]).collect()
}

impl Serialize for FockOperator {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let n = self.dim();
        let row_major = (0..n).flat_map(|i| (0..n).map(move |j| (i, j)));
        let mut s = serializer.serialize_struct("FockOperator", 2)?;
        s.serialize_field("dim", &n)?;
        s.serialize_field("entries", &complex_pairs(row_major.map(|(i, j)| self.matrix[(i, j)])))?;
        s.end()
    }
}

impl Serialize for FockVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("FockVector", 2)?;
        s.serialize_field("dim", &self.dim())?;
        s.serialize_field("entries", &complex_pairs(self.entries.iter().copied()))?;
        s.end()
    }
}

fn require_dim(dim: usize, required: usize) -> Result<(), FockError> {
    if dim < required {
        Err(FockError::DimensionTooSmall { dim, required })
    } else {
        Ok(())
    }
}

/// `a` with `a|n⟩ = √n |n−1⟩`.
pub fn annihilation(dim: usize) -> Result<FockOperator, FockError> {
    require_dim(dim, 2)?;
    let mut m = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    Ok(FockOperator::new(m))
}

/// `a†`, the exact adjoint of [`annihilation`].
pub fn creation(dim: usize) -> Result<FockOperator, FockError> {
    Ok(annihilation(dim)?.adjoint())
}

pub fn number(dim: usize) -> Result<FockOperator, FockError> {
    from_symbol(&NormalSymbol::number(), dim)
}

/// `Σ b_mn (a†)^m a^n` on the first `dim` number states.
pub fn from_symbol(symbol: &NormalSymbol, dim: usize) -> Result<FockOperator, FockError> {
    require_dim(dim, symbol.degree() as usize + 2)?;
    let mut m = DMatrix::zeros(dim, dim);
    for ((pm, pn), c) in symbol.terms() {
        let (pm, pn) = (pm as usize, pn as usize);
        // (a†)^m a^n |j⟩ = √(j!/(j−n)!) √(i!/(j−n)!) |i⟩ with i = j − n + m.
        for j in pn..dim {
            let base = j - pn;
            let i = base + pm;
            if i >= dim {
                break;
            }
            let lower: f64 = ((base + 1)..=j).map(|x| x as f64).product();
            let raise: f64 = ((base + 1)..=i).map(|x| x as f64).product();
            m[(i, j)] += c * (lower * raise).sqrt();
        }
    }
    Ok(FockOperator::new(m))
}

/// Coherent-state probability mass beyond the truncation,
/// `e^{−|α|²} Σ_{n≥D} |α|^{2n}/n!`.
pub fn coherent_tail(alpha: Complex64, dim: usize) -> f64 {
    let x = alpha.norm_sqr();
    if x == 0.0 {
        return 0.0;
    }
    // log of the first omitted Poisson weight, then sum the ratios.
    let log_first = -x + dim as f64 * x.ln() - ln_factorial(dim);
    let mut term = log_first.exp();
    let mut total = 0.0;
    let mut n = dim;
    loop {
        total += term;
        n += 1;
        term *= x / n as f64;
        if term < total * 1e-17 || n > dim + 10_000 {
            break;
        }
    }
    total.min(1.0)
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Checks the truncation tail test and returns the tail mass on success.
pub fn check_admissible(alpha: Complex64, dim: usize) -> Result<f64, FockError> {
    let tail = coherent_tail(alpha, dim);
    if tail < ADMISSIBILITY_TOL {
        Ok(tail)
    } else {
        Err(FockError::TruncationTooCoarse {
            magnitude: alpha.norm(),
            dim,
            tail,
        })
    }
}

/// Default truncation `max(32, ⌈8(1 + |α|²)⌉)` for a coherent label.
pub fn default_dim(alpha: Complex64) -> usize {
    let scaled = (8.0 * (1.0 + alpha.norm_sqr())).ceil() as usize;
    scaled.max(32)
}

/// `|α⟩ = e^{−|α|²/2} Σ_n α^n/√(n!) |n⟩`, truncated.
pub fn coherent_vector(alpha: Complex64, dim: usize) -> Result<FockVector, FockError> {
    check_admissible(alpha, dim)?;
    let mut entries = DVector::zeros(dim);
    let mut amp = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            amp *= alpha / (n as f64).sqrt();
        }
        entries[n] = amp;
    }
    Ok(FockVector::new(entries))
}

/// `|ψ⟩⟨ψ|`.
pub fn projector(v: &FockVector) -> FockOperator {
    FockOperator::new(v.entries() * v.entries().adjoint())
}

/// Truncated Bose–Einstein state with weights `n̄^n / (1 + n̄)^{n+1}`.
pub fn thermal_state(mean_number: f64, dim: usize) -> FockOperator {
    let ratio = mean_number / (1.0 + mean_number);
    let weights = DVector::from_fn(dim, |n, _| Complex64::new(ratio.powi(n as i32) / (1.0 + mean_number), 0.0));
    FockOperator::new(DMatrix::from_diagonal(&weights))
}

/// Closed-form overlap `⟨β|α⟩ = exp(−|α|²/2 − |β|²/2 + β*α)`.
pub fn overlap(beta: Complex64, alpha: Complex64) -> Complex64 {
    (-(alpha.norm_sqr() + beta.norm_sqr()) / 2.0 + beta.conj() * alpha).exp()
}

/// `D(α) = exp(α a† − α* a)` exponentiated in the truncated space.
pub fn displacement(alpha: Complex64, dim: usize) -> Result<FockOperator, FockError> {
    check_admissible(alpha, dim)?;
    let a = annihilation(dim)?;
    let generator = a.adjoint().matrix.map(|z| z * alpha) - a.matrix.map(|z| z * alpha.conj());
    Ok(FockOperator::new(expm(&generator)))
}

/// Exact matrix elements `⟨m|D(β)|n⟩` of the untruncated displacement
/// operator for `m, n < dim`, from the associated Laguerre closed form.
pub fn displacement_elements(beta: Complex64, dim: usize) -> DMatrix<Complex64> {
    displacement_block(beta, dim, dim)
}

/// `⟨m|D(β)|n⟩` for `m < rows`, `n < cols`.
///
/// Each diagonal `m − n = ±k` runs the Laguerre recurrence in the smaller
/// index; the prefactor `√(j!/(j+k)!) |β|^k e^{−|β|²/2}` is kept in logs.
pub fn displacement_block(beta: Complex64, rows: usize, cols: usize) -> DMatrix<Complex64> {
    let x = beta.norm_sqr();
    let ln_abs = beta.norm().ln();
    let theta = beta.arg();
    let mut ln_fact = vec![0.0; rows.max(cols) + 1];
    for v in 1..ln_fact.len() {
        ln_fact[v] = ln_fact[v - 1] + (v as f64).ln();
    }
    let mut out = DMatrix::zeros(rows, cols);
    let diagonal = |k: usize, len: usize, phase: Complex64, place: &mut dyn FnMut(usize, Complex64)| {
        let kf = k as f64;
        let ln_power = if k == 0 { 0.0 } else { kf * ln_abs };
        let mut l_prev = 0.0;
        let mut l_cur = 1.0;
        for j in 0..len {
            if j > 0 {
                let jf = (j - 1) as f64;
                let next = ((2.0 * jf + 1.0 + kf - x) * l_cur - (jf + kf) * l_prev) / (jf + 1.0);
                l_prev = l_cur;
                l_cur = next;
            }
            let ln_pref = 0.5 * (ln_fact[j] - ln_fact[j + k]) + ln_power - x / 2.0;
            place(j, phase * (ln_pref.exp() * l_cur));
        }
    };
    // Lower part: m = n + k carries β^k; upper: n = m + k carries (−β*)^k.
    for k in 0..rows {
        let len = cols.min(rows - k);
        let phase = Complex64::from_polar(1.0, k as f64 * theta);
        diagonal(k, len, phase, &mut |j, v| out[(j + k, j)] = v);
    }
    for k in 1..cols {
        let len = rows.min(cols - k);
        let phase = Complex64::from_polar(1.0, k as f64 * (std::f64::consts::PI - theta));
        diagonal(k, len, phase, &mut |j, v| out[(j, j + k)] = v);
    }
    out
}

/// `e^{−iTH}`; Hermitian generators use an eigendecomposition, the rest a
/// scaling-and-squaring Padé exponential.
pub fn evolve(h: &FockOperator, t: f64) -> FockOperator {
    if t == 0.0 {
        return FockOperator::identity(h.dim());
    }
    if h.is_hermitian() {
        FockOperator::new(expm_hermitian(&h.matrix, t))
    } else {
        let generator = h.matrix.map(|z| z * Complex64::new(0.0, -t));
        FockOperator::new(expm(&generator))
    }
}

/// `⟨α_f|Op|α_i⟩` with both coherent states truncated to `Op`'s dimension.
pub fn matrix_element(
    alpha_f: Complex64,
    op: &FockOperator,
    alpha_i: Complex64,
) -> Result<Complex64, FockError> {
    let ket = coherent_vector(alpha_i, op.dim())?;
    let bra = coherent_vector(alpha_f, op.dim())?;
    Ok(bra.inner(&op.apply(&ket)?))
}

/// Max-norm deviation of `(1/π) ∫ d²α |α⟩⟨α|` from the identity on the
/// leading `⌊D/2⌋` block, integrated with `rule`.
pub fn completeness_residual(dim: usize, rule: &ComplexPlaneRule) -> f64 {
    let block = (dim / 2).max(1);
    let mut acc = DMatrix::<Complex64>::zeros(block, block);
    let mut column = vec![Complex64::new(0.0, 0.0); block];
    for (node, weight) in rule.gaussian_weighted() {
        // Non-Gaussian part of ⟨m|α⟩: α*^m/√m!; the rule supplies e^{−|α|²}.
        let mut amp = Complex64::new(1.0, 0.0);
        for (n, slot) in column.iter_mut().enumerate() {
            if n > 0 {
                amp *= node / (n as f64).sqrt();
            }
            *slot = amp;
        }
        for i in 0..block {
            let wi = column[i] * weight;
            for j in 0..block {
                acc[(i, j)] += wi * column[j].conj();
            }
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..block {
        for j in 0..block {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc[(i, j)] / std::f64::consts::PI - target).norm());
        }
    }
    worst
}
