//! Normal symbols and the normal star product.
//!
//! A [`NormalSymbol`] is a finite polynomial `B(α, α*) = Σ b_mn (α*)^m α^n`,
//! the phase-space image of the normally ordered operator
//! `Σ b_mn (a†)^m a^n`. The star product
//!
//! ```text
//! (B ⋆ C)(α, α*) = Σ_k (1/k!) (∂_α^k B)(∂_{α*}^k C)
//! ```
//!
//! reproduces operator composition and terminates for polynomials, so every
//! product here is exact up to floating-point rounding.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Coefficients below this fraction of the largest coefficient are dropped
/// after every arithmetic operation.
pub const CANONICAL_RELATIVE_CUTOFF: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbolError {
    #[error("malformed symbol record {index}: {reason}")]
    MalformedRecord { index: usize, reason: String },
    #[error("invalid star-exponential options: {0}")]
    InvalidOptions(String),
    #[error(
        "star exponential did not reach tolerance by order {} (tail estimate {:.3e})",
        .0.order,
        .0.tail_estimate
    )]
    NonConvergence(Box<crate::star_exp::StarSeries>),
}

/// Exponent pair `(m, n)` labelling the monomial `(α*)^m α^n`.
pub type Exponents = (u32, u32);

/// Sparse polynomial in the independent variables `α*` and `α`.
///
/// Stored coefficients are always nonzero; iteration order is the
/// lexicographic order of `(m, n)`, which keeps every reduction deterministic.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NormalSymbol {
    terms: BTreeMap<Exponents, Complex64>,
}

impl NormalSymbol {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Self::monomial(0, 0, c)
    }

    /// `c (α*)^m α^n`.
    pub fn monomial(m: u32, n: u32, c: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        if c != Complex64::new(0.0, 0.0) {
            terms.insert((m, n), c);
        }
        Self { terms }
    }

    /// The symbol `α` of the annihilation operator.
    pub fn alpha() -> Self {
        Self::monomial(0, 1, Complex64::new(1.0, 0.0))
    }

    /// The symbol `α*` of the creation operator.
    pub fn alpha_star() -> Self {
        Self::monomial(1, 0, Complex64::new(1.0, 0.0))
    }

    /// The symbol `α* α` of the number operator.
    pub fn number() -> Self {
        Self::monomial(1, 1, Complex64::new(1.0, 0.0))
    }

    /// Builds a symbol from `((m, n), c)` pairs. Duplicates are summed.
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (Exponents, Complex64)>,
    {
        let mut map: BTreeMap<Exponents, Complex64> = BTreeMap::new();
        for (key, c) in terms {
            *map.entry(key).or_default() += c;
        }
        Self::canonical(map)
    }

    fn canonical(mut terms: BTreeMap<Exponents, Complex64>) -> Self {
        let max = terms.values().map(|c| c.norm()).fold(0.0, f64::max);
        let cutoff = max * CANONICAL_RELATIVE_CUTOFF;
        terms.retain(|_, c| c.norm() > cutoff && c.is_finite());
        Self { terms }
    }

    /// Wraps a map without canonicalization, dropping only exact zeros.
    pub(crate) fn from_raw(mut terms: BTreeMap<Exponents, Complex64>) -> Self {
        terms.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        Self { terms }
    }

    pub(crate) fn into_raw(self) -> BTreeMap<Exponents, Complex64> {
        self.terms
    }

    pub fn terms(&self) -> impl Iterator<Item = (Exponents, Complex64)> + '_ {
        self.terms.iter().map(|(k, c)| (*k, *c))
    }

    pub fn coefficient(&self, m: u32, n: u32) -> Complex64 {
        self.terms.get(&(m, n)).copied().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree `max(m + n)`; zero for the zero symbol.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|(m, n)| m + n).max().unwrap_or(0)
    }

    /// Highest power of `α`.
    pub fn degree_alpha(&self) -> u32 {
        self.terms.keys().map(|&(_, n)| n).max().unwrap_or(0)
    }

    /// Highest power of `α*`.
    pub fn degree_alpha_star(&self) -> u32 {
        self.terms.keys().map(|&(m, _)| m).max().unwrap_or(0)
    }

    pub fn max_coefficient(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `Σ |b_mn| R^(m+n)`, an upper bound of `|B|` on the bidisk `|α|, |α*| ≤ R`.
    pub fn disk_norm(&self, radius: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&(m, n), c)| c.norm() * radius.powi((m + n) as i32))
            .sum()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::canonical(self.terms.iter().map(|(k, v)| (*k, v * c)).collect())
    }

    /// `∂^k/∂α^k`, computed exactly on exponents.
    pub fn derivative_alpha(&self, k: u32) -> Self {
        Self::from_raw(
            self.terms
                .iter()
                .filter(|(&(_, n), _)| n >= k)
                .map(|(&(m, n), c)| ((m, n - k), c * falling_factorial(n, k)))
                .collect(),
        )
    }

    /// `∂^k/∂α*^k`, computed exactly on exponents.
    pub fn derivative_alpha_star(&self, k: u32) -> Self {
        Self::from_raw(
            self.terms
                .iter()
                .filter(|(&(m, _), _)| m >= k)
                .map(|(&(m, n), c)| ((m - k, n), c * falling_factorial(m, k)))
                .collect(),
        )
    }

    /// Evaluates `Σ b_mn a_star^m a^n` with `a` and `a_star` independent.
    ///
    /// With `a_star = conj(a)` this is the Husimi value `⟨a|B̂|a⟩`.
    pub fn evaluate(&self, a: Complex64, a_star: Complex64) -> Complex64 {
        let pow_a = powers(a, self.degree_alpha());
        let pow_s = powers(a_star, self.degree_alpha_star());
        self.terms
            .iter()
            .map(|(&(m, n), c)| c * pow_s[m as usize] * pow_a[n as usize])
            .sum()
    }

    /// Husimi value `⟨α|B̂|α⟩`.
    pub fn q_value(&self, alpha: Complex64) -> Complex64 {
        self.evaluate(alpha, alpha.conj())
    }

    /// Normal star product `self ⋆ other`.
    pub fn star_multiply(&self, other: &Self) -> Self {
        Self::canonical(star_product_raw(&self.terms, &other.terms))
    }

    /// `self ⋆ other − other ⋆ self`.
    pub fn star_commutator(&self, other: &Self) -> Self {
        let mut map = star_product_raw(&self.terms, &other.terms);
        for (k, c) in star_product_raw(&other.terms, &self.terms) {
            *map.entry(k).or_default() -= c;
        }
        Self::canonical(map)
    }

    /// `k`-fold star power; `B^{⋆0} = 1`.
    pub fn star_power(&self, k: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..k {
            acc = acc.star_multiply(self);
        }
        acc
    }

    /// Serializes to the `[m, n, re, im]` interchange records.
    pub fn to_records(&self) -> Vec<[f64; 4]> {
        self.terms
            .iter()
            .map(|(&(m, n), c)| [f64::from(m), f64::from(n), c.re, c.im])
            .collect()
    }

    /// Parses `[m, n, re, im]` records. Order is irrelevant and duplicate
    /// exponent pairs are summed.
    pub fn from_records(records: &[[f64; 4]]) -> Result<Self, SymbolError> {
        let mut terms = Vec::with_capacity(records.len());
        for (index, &[m, n, re, im]) in records.iter().enumerate() {
            let exponent = |v: f64, name: &str| -> Result<u32, SymbolError> {
                if v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= f64::from(u16::MAX) {
                    Ok(v as u32)
                } else {
                    Err(SymbolError::MalformedRecord {
                        index,
                        reason: format!("{name} = {v} is not a nonnegative integer"),
                    })
                }
            };
            if !(re.is_finite() && im.is_finite()) {
                return Err(SymbolError::MalformedRecord {
                    index,
                    reason: "coefficient is not finite".into(),
                });
            }
            terms.push(((exponent(m, "m")?, exponent(n, "n")?), Complex64::new(re, im)));
        }
        Ok(Self::from_terms(terms))
    }
}

/// `n (n-1) ... (n-k+1)` as a float.
fn falling_factorial(n: u32, k: u32) -> f64 {
    (0..k).map(|i| f64::from(n - i)).product()
}

fn powers(x: Complex64, max: u32) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(max as usize + 1);
    let mut p = Complex64::new(1.0, 0.0);
    for _ in 0..=max {
        out.push(p);
        p *= x;
    }
    out
}

/// Exact star product on exponent maps, without any cutoff.
///
/// For `(α*)^m α^n ⋆ (α*)^p α^q` the k-th term carries
/// `k! C(n,k) C(p,k) (α*)^{m+p-k} α^{n+q-k}`; the weight is built as a running
/// ratio so large binomials never overflow on their own.
pub(crate) fn star_product_raw(
    left: &BTreeMap<Exponents, Complex64>,
    right: &BTreeMap<Exponents, Complex64>,
) -> BTreeMap<Exponents, Complex64> {
    let mut out: BTreeMap<Exponents, Complex64> = BTreeMap::new();
    for (&(m, n), b) in left {
        for (&(p, q), c) in right {
            let mut weight = b * c;
            for k in 0..=n.min(p) {
                if k > 0 {
                    weight *= f64::from(n - k + 1) * f64::from(p - k + 1) / f64::from(k);
                }
                *out.entry((m + p - k, n + q - k)).or_default() += weight;
            }
        }
    }
    out
}

impl fmt::Display for NormalSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (&(m, n), c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({}{:+}i)", c.re, c.im)?;
            match m {
                0 => {}
                1 => write!(f, "·α*")?,
                _ => write!(f, "·α*^{m}")?,
            }
            match n {
                0 => {}
                1 => write!(f, "·α")?,
                _ => write!(f, "·α^{n}")?,
            }
        }
        Ok(())
    }
}

impl Add for &NormalSymbol {
    type Output = NormalSymbol;

    fn add(self, rhs: &NormalSymbol) -> NormalSymbol {
        let mut map = self.terms.clone();
        for (k, c) in &rhs.terms {
            *map.entry(*k).or_default() += c;
        }
        NormalSymbol::canonical(map)
    }
}

impl Sub for &NormalSymbol {
    type Output = NormalSymbol;

    fn sub(self, rhs: &NormalSymbol) -> NormalSymbol {
        let mut map = self.terms.clone();
        for (k, c) in &rhs.terms {
            *map.entry(*k).or_default() -= c;
        }
        NormalSymbol::canonical(map)
    }
}

impl Add for NormalSymbol {
    type Output = NormalSymbol;

    fn add(self, rhs: NormalSymbol) -> NormalSymbol {
        &self + &rhs
    }
}

impl Sub for NormalSymbol {
    type Output = NormalSymbol;

    fn sub(self, rhs: NormalSymbol) -> NormalSymbol {
        &self - &rhs
    }
}

impl Neg for &NormalSymbol {
    type Output = NormalSymbol;

    fn neg(self) -> NormalSymbol {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul<Complex64> for &NormalSymbol {
    type Output = NormalSymbol;

    fn mul(self, rhs: Complex64) -> NormalSymbol {
        self.scale(rhs)
    }
}

impl Mul<f64> for &NormalSymbol {
    type Output = NormalSymbol;

    fn mul(self, rhs: f64) -> NormalSymbol {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

impl Serialize for NormalSymbol {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_records().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for NormalSymbol {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let records = Vec::<[f64; 4]>::deserialize(deserializer)?;
        NormalSymbol::from_records(&records).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn add_identity_and_cancellation() {
        let n = NormalSymbol::number();
        assert_eq!(&n + &NormalSymbol::zero(), n);

        let sum = &NormalSymbol::alpha() + &NormalSymbol::alpha_star();
        assert_eq!(sum.len(), 2);
        assert_eq!(sum.coefficient(0, 1), c(1.0, 0.0));
        assert_eq!(sum.coefficient(1, 0), c(1.0, 0.0));

        let two = &n * 2.0;
        let cancelled = &two - &two;
        assert!(cancelled.is_zero());
    }

    #[test]
    fn star_products_of_ladder_symbols() {
        let a = NormalSymbol::alpha();
        let ad = NormalSymbol::alpha_star();
        assert_eq!(ad.star_multiply(&a), NormalSymbol::number());

        let expected = &NormalSymbol::number() + &NormalSymbol::one();
        assert_eq!(a.star_multiply(&ad), expected);

        let n = NormalSymbol::number();
        let nn = n.star_multiply(&n);
        assert_eq!(nn.coefficient(2, 2), c(1.0, 0.0));
        assert_eq!(nn.coefficient(1, 1), c(1.0, 0.0));
        assert_eq!(nn.len(), 2);
    }

    #[test]
    fn commutators() {
        let a = NormalSymbol::alpha();
        let ad = NormalSymbol::alpha_star();
        assert_eq!(a.star_commutator(&ad), NormalSymbol::one());

        let b = NormalSymbol::from_terms([((2, 1), c(0.3, -1.0)), ((0, 3), c(1.5, 0.2))]);
        assert!(b.star_commutator(&b).is_zero());

        let n = NormalSymbol::number();
        assert_eq!(n.star_commutator(&a), &a * -1.0);
    }

    #[test]
    fn unit_is_exact() {
        let b = NormalSymbol::from_terms([((2, 1), c(0.3, -1.0)), ((0, 3), c(1.5, 0.2)), ((1, 1), c(-0.7, 0.0))]);
        assert_eq!(NormalSymbol::one().star_multiply(&b), b);
        assert_eq!(b.star_multiply(&NormalSymbol::one()), b);
    }

    #[test]
    fn evaluation_uses_independent_arguments() {
        let n = NormalSymbol::number();
        assert_eq!(n.evaluate(c(2.0, 0.0), c(2.0, 0.0)), c(4.0, 0.0));
        assert_eq!(n.evaluate(c(1.0, 0.0), c(0.0, 3.0)), c(0.0, 3.0));
        let shifted = &n + &NormalSymbol::one();
        let v = shifted.q_value(c(1.0, 1.0));
        assert!((v - c(3.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn derivatives_on_exponents() {
        let b = NormalSymbol::monomial(3, 2, c(2.0, 0.0));
        assert_eq!(b.derivative_alpha(1), NormalSymbol::monomial(3, 1, c(4.0, 0.0)));
        assert_eq!(b.derivative_alpha(2), NormalSymbol::monomial(3, 0, c(4.0, 0.0)));
        assert!(b.derivative_alpha(3).is_zero());
        assert_eq!(b.derivative_alpha_star(2), NormalSymbol::monomial(1, 2, c(12.0, 0.0)));
    }

    #[test]
    fn product_matches_differential_series() {
        // Σ_k (1/k!) ∂_α^k B ∂_{α*}^k C assembled from the derivative helpers.
        let b = NormalSymbol::from_terms([((1, 3), c(0.5, 0.1)), ((2, 2), c(-1.0, 0.4)), ((0, 1), c(0.2, 0.0))]);
        let cc = NormalSymbol::from_terms([((3, 1), c(0.9, -0.3)), ((1, 0), c(0.0, 1.0)), ((2, 2), c(0.1, 0.1))]);
        let mut series = NormalSymbol::zero();
        let mut kfact = 1.0;
        for k in 0..=4u32 {
            if k > 0 {
                kfact *= f64::from(k);
            }
            let db = b.derivative_alpha(k);
            let dc = cc.derivative_alpha_star(k);
            let pointwise = NormalSymbol::from_terms(db.terms().flat_map(|((m, n), x)| {
                dc.terms().map(move |((p, q), y)| ((m + p, n + q), x * y / kfact))
            }));
            series = &series + &pointwise;
        }
        let product = b.star_multiply(&cc);
        let diff = &product - &series;
        assert!(diff.max_coefficient() <= 1e-14 * product.max_coefficient());
    }

    #[test]
    fn records_sum_duplicates_and_reject_garbage() {
        let s = NormalSymbol::from_records(&[[1.0, 1.0, 1.0, 0.0], [1.0, 1.0, 0.5, 0.5], [0.0, 2.0, 0.0, 0.0]]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.coefficient(1, 1), c(1.5, 0.5));
        assert!(NormalSymbol::from_records(&[[1.5, 0.0, 1.0, 0.0]]).is_err());
        assert!(NormalSymbol::from_records(&[[-1.0, 0.0, 1.0, 0.0]]).is_err());
        assert!(NormalSymbol::from_records(&[[1.0, 0.0, f64::NAN, 0.0]]).is_err());

        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, "[[1.0,1.0,1.5,0.5]]");
        let back: NormalSymbol = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn canonical_cutoff_is_relative() {
        let s = NormalSymbol::from_terms([((0, 0), c(1.0, 0.0)), ((1, 0), c(1e-17, 0.0))]);
        assert_eq!(s.len(), 1);
    }
}
