//! s-ordered quasi-probability transforms, generalized deltas with complex
//! arguments, the non-diagonal P-function and the optical-equivalence
//! pairing.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::fock::{self, displacement_elements, FockError, FockOperator};
use crate::quadrature::{ComplexPlaneRule, QuadratureError};
use crate::symbol::NormalSymbol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuasiError {
    #[error("ordering parameter s = {0} is outside [-1, 1]")]
    InvalidOrder(f64),
    #[error("s = {0} > 0 has no regular grid representation for a generic state")]
    DivergentTransform(f64),
    #[error("inadmissible test function: {0}")]
    InadmissibleTestFunction(String),
    #[error("optical pairing needs a P-function (s = 1), got s = {0}")]
    NotPFunction(f64),
    #[error(transparent)]
    Truncation(#[from] FockError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Ordering parameter: `1` normal (P), `0` symmetric (Wigner), `−1`
/// antinormal (Q).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct SOrder(f64);

impl SOrder {
    pub const P: Self = Self(1.0);
    pub const WIGNER: Self = Self(0.0);
    pub const Q: Self = Self(-1.0);

    pub fn new(s: f64) -> Result<Self, QuasiError> {
        if (-1.0..=1.0).contains(&s) {
            Ok(Self(s))
        } else {
            Err(QuasiError::InvalidOrder(s))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `tr{D(β) ρ} e^{s|β|²/2}`.
///
/// Displacement elements come from their closed form, so the trace is exact
/// for the given matrix whatever `|β|` is.
pub fn characteristic_function(rho: &FockOperator, beta: Complex64, s: SOrder) -> Complex64 {
    displaced_trace(rho, beta) * (s.0 * beta.norm_sqr() / 2.0).exp()
}

fn displaced_trace(rho: &FockOperator, beta: Complex64) -> Complex64 {
    let d = displacement_elements(beta, rho.dim());
    let r = rho.matrix();
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 0..rho.dim() {
        for n in 0..rho.dim() {
            acc += d[(m, n)] * r[(n, m)];
        }
    }
    acc
}

/// Per-axis nodes below which the normalization square is under-resolved.
const NORMALIZATION_MIN_NODES: usize = 64;
/// Amplitude-space margin of the intermediate number basis.
const DISPLACED_BASIS_MARGIN: f64 = 8.0;
/// Populations below this fraction of the largest do not widen the
/// normalization square.
const POPULATION_CUTOFF: f64 = 1e-14;
/// Eigenvalues of `ρ` below this fraction of the largest are dropped.
const RANK_CUTOFF: f64 = 1e-16;

/// `F(α, s) = 2/(π(1−s)) Σ_k r^k ⟨k|D†(α) ρ D(α)|k⟩` with `r = (s+1)/(s−1)`.
///
/// The exact elements `⟨k|D(−α)|m⟩` are taken in an intermediate basis large
/// enough to hold every displaced column, so values stay accurate far from
/// the origin.
/// `ρ` enters through a factorization `Σ_j c_j |x_j⟩⟨y_j|`.
#[derive(Clone, Debug)]
pub struct QuasiTransform {
    s: SOrder,
    per_axis: usize,
    dim: usize,
    factors: Vec<(f64, Vec<Complex64>, Vec<Complex64>)>,
    /// Highest number level with non-negligible population.
    top_level: usize,
}

impl QuasiTransform {
    /// `rule` sets the per-axis node count of the normalization quadrature.
    pub fn new(rho: &FockOperator, s: SOrder, rule: &ComplexPlaneRule) -> Result<Self, QuasiError> {
        if s.0 > 0.0 {
            return Err(QuasiError::DivergentTransform(s.0));
        }
        let dim = rho.dim();
        let column = |m: &nalgebra::DMatrix<Complex64>, j: usize| m.column(j).iter().copied().collect::<Vec<_>>();
        let factors = if rho.is_hermitian() {
            let eigen = rho.matrix().clone().symmetric_eigen();
            let largest = eigen.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            (0..dim)
                .filter(|&j| eigen.eigenvalues[j].abs() > RANK_CUTOFF * largest)
                .map(|j| {
                    let v = column(&eigen.eigenvectors, j);
                    (eigen.eigenvalues[j], v.clone(), v)
                })
                .collect()
        } else {
            (0..dim)
                .map(|n| {
                    let mut e = vec![Complex64::new(0.0, 0.0); dim];
                    e[n] = Complex64::new(1.0, 0.0);
                    (1.0, column(rho.matrix(), n), e)
                })
                .collect()
        };
        let populations: Vec<f64> = (0..dim).map(|m| rho.matrix()[(m, m)].norm()).collect();
        let largest = populations.iter().fold(0.0f64, |a, &p| a.max(p));
        let top_level = populations
            .iter()
            .rposition(|&p| p > POPULATION_CUTOFF * largest)
            .unwrap_or(0);
        Ok(Self {
            s,
            per_axis: rule.per_axis(),
            dim,
            factors,
            top_level,
        })
    }

    pub fn order(&self) -> SOrder {
        self.s
    }

    pub fn value(&self, alpha: Complex64) -> Complex64 {
        let s = self.s.0;
        let r = (s + 1.0) / (s - 1.0);
        let rows = if r == 0.0 {
            1
        } else {
            let reach = alpha.norm() + (self.dim as f64).sqrt() + DISPLACED_BASIS_MARGIN;
            (reach * reach).ceil() as usize
        };
        let e = fock::displacement_block(-alpha, rows, self.dim);
        let zero = Complex64::new(0.0, 0.0);
        let image = |v: &[Complex64]| -> Vec<Complex64> {
            let mut out = vec![zero; rows];
            for (m, &vm) in v.iter().enumerate() {
                if vm != zero {
                    for (o, c) in out.iter_mut().zip(e.column(m).iter()) {
                        *o += vm * c;
                    }
                }
            }
            out
        };
        let images: Vec<(Vec<Complex64>, Vec<Complex64>)> =
            self.factors.iter().map(|(_, x, y)| (image(x), image(y))).collect();
        let mut acc = zero;
        for ((coef, _, _), (dx, dy)) in self.factors.iter().zip(&images) {
            let mut weight = 1.0;
            let mut partial = zero;
            for (a, b) in dx.iter().zip(dy) {
                partial += weight * a * b.conj();
                weight *= r;
            }
            acc += *coef * partial;
        }
        acc * 2.0 / (PI * (1.0 - s))
    }

    /// `∫ d²α F(α, s)` by Gauss–Legendre on a square reaching six decay
    /// lengths `√((1−s)/2)` past the radius `√m` of the top populated level.
    pub fn normalization(&self) -> Result<Complex64, QuasiError> {
        let half_width = (self.top_level as f64).sqrt() + 6.0 * ((1.0 - self.s.0) / 2.0).sqrt();
        let nodes = self.per_axis.max(NORMALIZATION_MIN_NODES);
        let rule = ComplexPlaneRule::gauss_legendre_square(nodes, half_width)?;
        Ok(rule.integrate(|a| self.value(a)))
    }

    /// Samples `F` on an `n × n` grid over `[lo, hi]²` (row-major in Im α).
    pub fn grid(&self, lo: f64, hi: f64, n: usize) -> QuasiGrid {
        let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
        let mut samples = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let point = Complex64::new(lo + step * i as f64, lo + step * j as f64);
                let v = self.value(point);
                samples.push(GridSample {
                    point,
                    value: v.re,
                    imag_residual: v.im.abs(),
                });
            }
        }
        QuasiGrid { s: self.s, samples }
    }
}

/// `F(α, s)` at one point; builds a [`QuasiTransform`] internally.
pub fn quasi_distribution(
    rho: &FockOperator,
    alpha: Complex64,
    s: SOrder,
    rule: &ComplexPlaneRule,
) -> Result<Complex64, QuasiError> {
    Ok(QuasiTransform::new(rho, s, rule)?.value(alpha))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSample {
    pub point: Complex64,
    pub value: f64,
    pub imag_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuasiGrid {
    pub s: SOrder,
    pub samples: Vec<GridSample>,
}

impl QuasiGrid {
    pub fn max_imag_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.imag_residual).fold(0.0, f64::max)
    }

    /// CSV with header `re_alpha,im_alpha,value,imag_residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re_alpha,im_alpha,value,imag_residual\n");
        for s in &self.samples {
            out.push_str(&format!("{:e},{:e},{:e},{:e}\n", s.point.re, s.point.im, s.value, s.imag_residual));
        }
        out
    }
}

/// Husimi–Kano value `⟨α|B|α⟩`.
pub fn q_representation(b: &NormalSymbol, alpha: Complex64) -> Complex64 {
    b.q_value(alpha)
}

/// `p(x) exp(a x² + b x + c)` with `p` given by ascending coefficients.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestFunction {
    pub poly: Vec<Complex64>,
    pub quadratic: Complex64,
    pub linear: Complex64,
    pub constant: Complex64,
}

impl TestFunction {
    pub fn polynomial(poly: Vec<Complex64>) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self {
            poly,
            quadratic: zero,
            linear: zero,
            constant: zero,
        }
    }

    pub fn gaussian(quadratic: Complex64, linear: Complex64, constant: Complex64) -> Self {
        Self {
            poly: vec![Complex64::new(1.0, 0.0)],
            quadratic,
            linear,
            constant,
        }
    }

    /// Entire, and at most polynomially growing on the real axis.
    pub fn check_admissible(&self) -> Result<(), QuasiError> {
        let finite = self.poly.iter().all(|c| c.is_finite())
            && self.quadratic.is_finite()
            && self.linear.is_finite()
            && self.constant.is_finite();
        if !finite {
            return Err(QuasiError::InadmissibleTestFunction("non-finite coefficient".into()));
        }
        if self.quadratic.re > 0.0 {
            return Err(QuasiError::InadmissibleTestFunction(
                "Gaussian factor grows along the real axis".into(),
            ));
        }
        if self.quadratic.re == 0.0 && (self.quadratic.im != 0.0 || self.linear.re != 0.0) {
            return Err(QuasiError::InadmissibleTestFunction(
                "exponential factor does not decay along the real axis".into(),
            ));
        }
        Ok(())
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        let p = self.poly.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c);
        p * (self.quadratic * x * x + self.linear * x + self.constant).exp()
    }
}

/// `∫ dx f(x) δ̃(x − z) = f(z)` for an admissible analytic `f`.
pub fn delta_sift(f: &TestFunction, z: Complex64) -> Result<Complex64, QuasiError> {
    f.check_admissible()?;
    Ok(f.eval(z))
}

/// Exponential-quadratic prefactor `exp(k α α* + c)` carried by a delta pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpQuadratic {
    pub alpha_alpha_star: Complex64,
    pub constant: Complex64,
}

impl ExpQuadratic {
    pub fn eval(&self, a: Complex64, a_star: Complex64) -> Complex64 {
        (self.alpha_alpha_star * a * a_star + self.constant).exp()
    }
}

/// Which complex point the pair of deltas reconstructs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EvaluationConvention {
    /// `im_point = −i(α_i − α_f*)/2`, giving `(α, α*) = (α_i, α_f*)`.
    #[default]
    Ket,
    /// `im_point = +i(α_i − α_f*)/2`, giving `(α, α*) = (α_f*, α_i)`.
    Swapped,
}

/// P-function of `|α_i⟩⟨α_f|` as `δ̃(x − re_point) δ̃(y − im_point)` times a
/// prefactor, where `α = x + iy`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeneralizedDeltaPair {
    pub re_point: Complex64,
    pub im_point: Complex64,
    pub prefactor: ExpQuadratic,
}

impl GeneralizedDeltaPair {
    /// `(α, α*)` reconstructed from the two delta arguments.
    pub fn point(&self) -> (Complex64, Complex64) {
        let i = Complex64::new(0.0, 1.0);
        (self.re_point + i * self.im_point, self.re_point - i * self.im_point)
    }

    /// Sifts `prefactor · f` at the pair's complex point.
    pub fn pair<F>(&self, f: F) -> Complex64
    where
        F: FnOnce(Complex64, Complex64) -> Complex64,
    {
        let (a, a_star) = self.point();
        self.prefactor.eval(a, a_star) * f(a, a_star)
    }

    pub fn pair_symbol(&self, b: &NormalSymbol) -> Complex64 {
        self.pair(|a, a_star| b.evaluate(a, a_star))
    }
}

pub fn p_nondiagonal(alpha_i: Complex64, alpha_f: Complex64) -> GeneralizedDeltaPair {
    p_nondiagonal_with(alpha_i, alpha_f, EvaluationConvention::default())
}

pub fn p_nondiagonal_with(
    alpha_i: Complex64,
    alpha_f: Complex64,
    convention: EvaluationConvention,
) -> GeneralizedDeltaPair {
    let sign = match convention {
        EvaluationConvention::Ket => -1.0,
        EvaluationConvention::Swapped => 1.0,
    };
    let f_star = alpha_f.conj();
    GeneralizedDeltaPair {
        re_point: (alpha_i + f_star) / 2.0,
        im_point: Complex64::new(0.0, sign) * (alpha_i - f_star) / 2.0,
        prefactor: ExpQuadratic {
            alpha_alpha_star: Complex64::new(1.0, 0.0),
            constant: Complex64::new(-(alpha_i.norm_sqr() + alpha_f.norm_sqr()) / 2.0, 0.0),
        },
    }
}

/// One weighted sample `w · P(α)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PSample {
    pub point: Complex64,
    pub weight: f64,
    pub value: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum QuasiDistribution {
    /// Quadrature samples of a regular distribution of order `s`.
    Sampled { s: SOrder, samples: Vec<PSample> },
    /// `δ²(α − γ)`, the P-function of `|γ⟩⟨γ|`.
    PointMass { gamma: Complex64 },
    DeltaPair(GeneralizedDeltaPair),
}

impl QuasiDistribution {
    /// P-function `e^{−|α|²/n̄}/(π n̄)` of a thermal state, sampled on a
    /// Gauss–Hermite rule of matching width.
    pub fn thermal(mean_number: f64, per_axis: usize) -> Result<Self, QuasiError> {
        let rule = ComplexPlaneRule::gauss_hermite(per_axis, mean_number.sqrt())?;
        let value = Complex64::new(1.0 / (PI * mean_number), 0.0);
        let samples = rule
            .nodes()
            .iter()
            .zip(rule.weights())
            .map(|(&point, &weight)| PSample { point, weight, value })
            .collect();
        Ok(Self::Sampled { s: SOrder::P, samples })
    }
}

/// `∫ d²α P(α) B_Q(α, α*)`, which equals `tr{B ρ}`.
pub fn optical_expectation(p: &QuasiDistribution, b: &NormalSymbol) -> Result<Complex64, QuasiError> {
    match p {
        QuasiDistribution::Sampled { s, samples } => {
            if s.0 != 1.0 {
                return Err(QuasiError::NotPFunction(s.0));
            }
            Ok(samples
                .iter()
                .map(|smp| smp.value * smp.weight * b.q_value(smp.point))
                .sum())
        }
        QuasiDistribution::PointMass { gamma } => Ok(b.q_value(*gamma)),
        QuasiDistribution::DeltaPair(pair) => Ok(pair.pair_symbol(b)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_vector, from_symbol, matrix_element, overlap, FockVector};
    use nalgebra::DMatrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn projector(v: &FockVector) -> FockOperator {
        let e = v.entries();
        FockOperator::new(e * e.adjoint())
    }

    fn vacuum(dim: usize) -> FockOperator {
        projector(&FockVector::basis(0, dim))
    }

    #[test]
    fn order_bounds() {
        assert!(SOrder::new(0.5).is_ok());
        assert!(matches!(SOrder::new(1.5), Err(QuasiError::InvalidOrder(_))));
    }

    #[test]
    fn vacuum_characteristic_function() {
        let rho = vacuum(32);
        for &s in &[-1.0, 0.0, 1.0] {
            let s = SOrder::new(s).unwrap();
            for &b in &[c(0.0, 0.0), c(0.4, -0.3), c(1.5, 2.0)] {
                let got = characteristic_function(&rho, b, s);
                let want = ((s.value() - 1.0) * b.norm_sqr() / 2.0).exp();
                assert!((got - want).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn coherent_characteristic_function_is_bounded() {
        let rho = projector(&coherent_vector(c(0.6, -0.2), 32).unwrap());
        assert!((characteristic_function(&rho, c(0.0, 0.0), SOrder::Q) - 1.0).norm() < 1e-12);
        for i in -6..=6 {
            for j in -6..=6 {
                let b = c(i as f64 * 0.5, j as f64 * 0.5);
                assert!(characteristic_function(&rho, b, SOrder::Q).norm() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn vacuum_q_and_wigner() {
        let rule = ComplexPlaneRule::gauss_hermite(48, 1.0).unwrap();
        let rho = vacuum(16);
        let q = QuasiTransform::new(&rho, SOrder::Q, &rule).unwrap();
        let w = QuasiTransform::new(&rho, SOrder::WIGNER, &rule).unwrap();
        for &a in &[c(0.0, 0.0), c(1.0, -0.5), c(2.1, 2.1)] {
            let x = a.norm_sqr();
            assert!((q.value(a) - (-x).exp() / PI).norm() < 1e-10);
            assert!((w.value(a) - 2.0 * (-2.0 * x).exp() / PI).norm() < 1e-10);
        }
        let nq = q.normalization().unwrap();
        assert!((nq - 1.0).norm() < 1e-10, "{nq}");
        assert!((w.normalization().unwrap() - 1.0).norm() < 1e-10);
    }

    #[test]
    fn positive_order_grid_is_refused() {
        let rule = ComplexPlaneRule::gauss_hermite(8, 1.0).unwrap();
        assert!(matches!(
            quasi_distribution(&vacuum(8), c(0.0, 0.0), SOrder::P, &rule),
            Err(QuasiError::DivergentTransform(_))
        ));
    }

    #[test]
    fn hermitian_state_has_real_distribution() {
        let rule = ComplexPlaneRule::gauss_hermite(40, 1.0).unwrap();
        let v = coherent_vector(c(0.5, 0.5), 32).unwrap();
        let t = QuasiTransform::new(&projector(&v), SOrder::WIGNER, &rule).unwrap();
        let grid = t.grid(-2.0, 2.0, 5);
        assert_eq!(grid.samples.len(), 25);
        assert!(grid.max_imag_residual() < 1e-12);
        assert!(grid.to_csv().starts_with("re_alpha,im_alpha,value,imag_residual\n"));
    }

    #[test]
    fn q_representation_examples() {
        let g = c(0.3, -1.1);
        assert!((q_representation(&NormalSymbol::number(), g) - g.norm_sqr()).norm() < 1e-15);
        assert_eq!(q_representation(&NormalSymbol::one(), g), c(1.0, 0.0));
        let x = &NormalSymbol::alpha() + &NormalSymbol::alpha_star();
        assert!((q_representation(&x, c(0.7, 0.0)) - 1.4).norm() < 1e-15);
    }

    #[test]
    fn sifting_examples() {
        let x2 = TestFunction::polynomial(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!((delta_sift(&x2, c(1.0, 1.0)).unwrap() - c(0.0, 2.0)).norm() < 1e-15);
        let g = TestFunction::gaussian(c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        assert!((delta_sift(&g, c(0.0, 1.0)).unwrap() - std::f64::consts::E).norm() < 1e-14);
        let bad = TestFunction::gaussian(c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        assert!(matches!(delta_sift(&bad, c(0.0, 0.0)), Err(QuasiError::InadmissibleTestFunction(_))));
    }

    /// `∫ dx x² (1/2π) ∫ dk e^{−ik(x−z)} e^{−εk²}` is `z² + 2ε`; the limit
    /// ε → 0 is taken by Richardson extrapolation.
    #[test]
    fn regularized_delta_reproduces_sifting() {
        use crate::quadrature::{gauss_hermite_1d, gauss_legendre_1d};
        let z = c(1.0, 1.0);
        let regularized = |eps: f64| -> Complex64 {
            let (kx, kw) = gauss_hermite_1d(160);
            let (xx, xw) = gauss_legendre_1d(200);
            // The regularized delta is a Gaussian of width ~√ε about Re z.
            let half = 10.0 * eps.sqrt();
            let mut total = c(0.0, 0.0);
            for (&x0, &w0) in xx.iter().zip(&xw) {
                let x = z.re + x0 * half;
                // e^{−εk²} is the Hermite weight after k = t/√ε.
                let inner: Complex64 = kx
                    .iter()
                    .zip(&kw)
                    .map(|(&t, &w)| {
                        let k = t / eps.sqrt();
                        w * (c(0.0, -k) * (x - z)).exp()
                    })
                    .sum::<Complex64>()
                    / (2.0 * PI * eps.sqrt());
                total += w0 * half * x * x * inner;
            }
            total
        };
        let (a, b, d) = (regularized(0.1), regularized(0.05), regularized(0.025));
        let r1 = 2.0 * b - a;
        let r2 = 2.0 * d - b;
        let limit = (4.0 * r2 - r1) / 3.0;
        assert!((limit - c(0.0, 2.0)).norm() < 1e-6, "{limit}");
    }

    #[test]
    fn nondiagonal_pairing_matches_oracle_for_both_conventions() {
        let d = 40;
        // Not symmetric under α ↔ α*.
        let h = NormalSymbol::from_terms([((1, 1), c(1.0, 0.0)), ((0, 2), c(0.1, 0.0)), ((1, 0), c(0.0, 0.3))]);
        let op = from_symbol(&h, d).unwrap();
        let (ai, af) = (c(0.5, 0.2), c(-0.3, 0.6));
        let want = matrix_element(af, &op, ai).unwrap();
        let ket = p_nondiagonal_with(ai, af, EvaluationConvention::Ket).pair_symbol(&h);
        let swapped = p_nondiagonal_with(ai, af, EvaluationConvention::Swapped).pair_symbol(&h);
        assert!((ket - want).norm() < 1e-12);
        assert!((swapped - want).norm() > 1e-3);
    }

    #[test]
    fn pairing_with_identity_gives_overlap() {
        let (ai, af) = (c(0.1, -0.7), c(0.4, 0.4));
        let pair = p_nondiagonal(ai, af);
        assert!((pair.pair_symbol(&NormalSymbol::one()) - overlap(af, ai)).norm() < 1e-15);
        let diag = p_nondiagonal(ai, ai);
        assert!((diag.re_point - c(ai.re, 0.0)).norm() < 1e-15);
        assert!((diag.im_point - c(ai.im, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn optical_expectations() {
        let g = c(0.8, -0.3);
        let mass = QuasiDistribution::PointMass { gamma: g };
        assert!((optical_expectation(&mass, &NormalSymbol::number()).unwrap() - g.norm_sqr()).norm() < 1e-15);
        assert_eq!(optical_expectation(&mass, &NormalSymbol::one()).unwrap(), c(1.0, 0.0));

        // Thermal state: ⟨a†²a²⟩ = 2 n̄².
        let nbar = 0.7;
        let thermal = QuasiDistribution::thermal(nbar, 16).unwrap();
        let b = NormalSymbol::monomial(2, 2, c(1.0, 0.0));
        let dim = 60;
        let rho = DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                c(nbar.powi(i as i32) / (1.0 + nbar).powi(i as i32 + 1), 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let trace = (from_symbol(&b, dim).unwrap().matrix() * rho).trace();
        let got = optical_expectation(&thermal, &b).unwrap();
        assert!((got - trace).norm() < 1e-10);
        assert!((got - 2.0 * nbar * nbar).norm() < 1e-10);

        let wigner = QuasiDistribution::Sampled { s: SOrder::WIGNER, samples: vec![] };
        assert!(matches!(optical_expectation(&wigner, &b), Err(QuasiError::NotPFunction(_))));
    }
}
