//! Time-sliced coherent-state amplitudes and the star-exponential route.
//!
//! Three routes to `⟨α_f|e^{−iTH}|α_i⟩` are provided: the star exponential
//! evaluated at `(α, α*) = (α_i, α_f*)`, the truncated Fock oracle, and the
//! sliced integral contracted slice by slice on a quadrature rule.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::{self, FockError, FockOperator};
use crate::quadrature::{ComplexPlaneRule, QuadratureError};
use crate::quasiprob::p_nondiagonal;
use crate::star_exp::{star_exponential, StarExpOptions, StarSeries};
use crate::symbol::{NormalSymbol, SymbolError};

/// Node count above which the transfer kernel is streamed row by row
/// instead of stored.
const STORED_KERNEL_LIMIT: usize = 2048;

#[derive(Debug, Error)]
pub enum PathError {
    #[error("invalid slice configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// `N` slices of width `ε = T/N` between `α_0 = α_i` and `α_N = α_f`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceConfig {
    pub n: usize,
    pub t: f64,
    pub alpha_i: Complex64,
    pub alpha_f: Complex64,
}

impl SliceConfig {
    pub fn new(n: usize, t: f64, alpha_i: Complex64, alpha_f: Complex64) -> Result<Self, PathError> {
        let cfg = Self { n, t, alpha_i, alpha_f };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PathError> {
        if self.n == 0 {
            return Err(PathError::InvalidConfig("slice count must be positive".into()));
        }
        if !self.t.is_finite() {
            return Err(PathError::InvalidConfig("T must be finite".into()));
        }
        if !(self.alpha_i.is_finite() && self.alpha_f.is_finite()) {
            return Err(PathError::InvalidConfig("coherent labels must be finite".into()));
        }
        Ok(())
    }

    pub fn epsilon(&self) -> f64 {
        self.t / self.n as f64
    }

    pub fn with_slices(&self, n: usize) -> Self {
        Self { n, ..*self }
    }
}

/// Exponent of the sliced integrand:
/// `−|α_0|²/2 − |α_N|²/2 − Σ_{j<N}|α_j|² + Σ_j α_j*α_{j−1} − iε Σ_j H(α_{j−1}, α_j*)`.
pub fn discrete_exponent(path: &[Complex64], h: &NormalSymbol, epsilon: f64) -> Complex64 {
    let n = path.len() - 1;
    let mut e = Complex64::new(-(path[0].norm_sqr() + path[n].norm_sqr()) / 2.0, 0.0);
    for p in &path[1..n] {
        e -= p.norm_sqr();
    }
    let mut action = Complex64::new(0.0, 0.0);
    for j in 1..=n {
        e += path[j].conj() * path[j - 1];
        action += h.evaluate(path[j - 1], path[j].conj());
    }
    e - Complex64::new(0.0, epsilon) * action
}

fn novikov_sides(path: &[Complex64], epsilon: f64) -> (Complex64, Complex64, f64) {
    let n = path.len() - 1;
    let mut lhs = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for j in 1..=n {
        let t = path[j].conj() * path[j - 1];
        lhs += t;
        scale += t.norm();
    }
    for p in &path[1..n] {
        lhs -= p.norm_sqr();
        scale += p.norm_sqr();
    }
    let mut rhs = (path[n].conj() * path[n - 1] + path[1].conj() * path[0]) / 2.0;
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 1..n {
        let forward = path[j] * (path[j + 1].conj() - path[j].conj()) / epsilon;
        let backward = path[j].conj() * (path[j] - path[j - 1]) / epsilon;
        sum += forward - backward;
        scale += epsilon * (forward.norm() + backward.norm()) / 2.0;
    }
    rhs += sum * (epsilon / 2.0);
    (lhs, rhs, scale)
}

/// `|LHS − RHS|` of the symmetric-difference rearrangement of the kinetic
/// terms.
pub fn novikov_identity_residual(path: &[Complex64], epsilon: f64) -> f64 {
    let (lhs, rhs, _) = novikov_sides(path, epsilon);
    (lhs - rhs).norm()
}

/// Sum of the magnitudes of the individual terms on both sides.
pub fn novikov_term_scale(path: &[Complex64], epsilon: f64) -> f64 {
    novikov_sides(path, epsilon).2
}

/// Per-slice factor multiplying the overlap `⟨α_j|α_{j−1}⟩`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SliceKernel {
    /// `1 − iεH(α_{j−1}, α_j*)`: exact for `(1 − iεH)^N`.
    #[default]
    Linear,
    /// `exp(−iεH(α_{j−1}, α_j*))`, as in the exponentiated action.
    Exponentiated,
}

impl SliceKernel {
    fn factor(self, h: &NormalSymbol, epsilon: f64, a: Complex64, a_star: Complex64) -> Complex64 {
        let x = Complex64::new(0.0, -epsilon) * h.evaluate(a, a_star);
        match self {
            Self::Linear => 1.0 + x,
            Self::Exponentiated => x.exp(),
        }
    }
}

/// Sliced amplitude with the linear kernel.
pub fn sliced_amplitude(cfg: &SliceConfig, h: &NormalSymbol, rule: &ComplexPlaneRule) -> Result<Complex64, PathError> {
    sliced_amplitude_with(cfg, h, rule, SliceKernel::Linear)
}

/// Contracts the `N − 1` intermediate integrals left to right.
///
/// The partial amplitude after `j` slices is `e^{−|β|²/2} h_j(β)` with `h_j`
/// smooth; each contraction is `h_{j+1}(β) = π⁻¹ Σ_k W_k e^{β*α_k}
/// k(α_k, β*) h_j(α_k)` with `W_k` the rule's weights against `e^{−|α|²}`.
pub fn sliced_amplitude_with(
    cfg: &SliceConfig,
    h: &NormalSymbol,
    rule: &ComplexPlaneRule,
    kernel: SliceKernel,
) -> Result<Complex64, PathError> {
    cfg.validate()?;
    let eps = cfg.epsilon();
    let (ai, af) = (cfg.alpha_i, cfg.alpha_f);
    if cfg.n == 1 {
        return Ok(fock::overlap(af, ai) * kernel.factor(h, eps, ai, af.conj()));
    }
    if !rule.gaussian_factored() {
        return Err(QuadratureError::RuleMismatch("sliced contraction needs a Gaussian rule".into()).into());
    }
    let (nodes, weights): (Vec<Complex64>, Vec<f64>) = rule.gaussian_weighted().map(|(z, w)| (z, w / PI)).unzip();
    let entry = |b: Complex64, k: usize| -> Complex64 {
        weights[k] * (b.conj() * nodes[k]).exp() * kernel.factor(h, eps, nodes[k], b.conj())
    };

    let prefactor = (-ai.norm_sqr() / 2.0).exp();
    let mut state: Vec<Complex64> = nodes
        .iter()
        .map(|&b| prefactor * (b.conj() * ai).exp() * kernel.factor(h, eps, ai, b.conj()))
        .collect();

    let steps = cfg.n - 2;
    if steps > 0 {
        let m = nodes.len();
        if m <= STORED_KERNEL_LIMIT {
            let matrix: Vec<Complex64> = (0..m)
                .flat_map(|row| (0..m).map(move |k| (row, k)))
                .map(|(row, k)| entry(nodes[row], k))
                .collect();
            for _ in 0..steps {
                state = (0..m)
                    .map(|row| {
                        matrix[row * m..(row + 1) * m]
                            .iter()
                            .zip(&state)
                            .map(|(a, b)| a * b)
                            .sum()
                    })
                    .collect();
            }
        } else {
            for _ in 0..steps {
                state = nodes
                    .iter()
                    .map(|&b| (0..m).map(|k| entry(b, k) * state[k]).sum())
                    .collect();
            }
        }
    }
    let last: Complex64 = (0..nodes.len()).map(|k| entry(af, k) * state[k]).sum();
    Ok((-af.norm_sqr() / 2.0).exp() * last)
}

/// Continuum estimate from sliced amplitudes on a ladder of slice counts,
/// each twice the previous, by repeated Richardson elimination of the
/// `ε, ε², …` error terms.
pub fn richardson_continuum(values: &[Complex64]) -> Complex64 {
    let mut table = values.to_vec();
    let mut factor = 2.0;
    while table.len() > 1 {
        table = table
            .windows(2)
            .map(|w| (factor * w[1] - w[0]) / (factor - 1.0))
            .collect();
        factor *= 2.0;
    }
    table[0]
}

/// Star-exponential amplitude with its series diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StarAmplitude {
    pub value: Complex64,
    /// Tail estimate of the series times `|⟨α_f|α_i⟩|`.
    pub error_estimate: f64,
    pub series: StarSeriesSummary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StarSeriesSummary {
    pub order: usize,
    pub steps: u64,
    pub tail_estimate: f64,
    pub reference_radius: f64,
    pub terms: usize,
    pub degree: u32,
}

impl From<&StarSeries> for StarSeriesSummary {
    fn from(s: &StarSeries) -> Self {
        Self {
            order: s.order,
            steps: s.steps,
            tail_estimate: s.tail_estimate,
            reference_radius: s.reference_radius,
            terms: s.value.len(),
            degree: s.value.degree(),
        }
    }
}

const MIN_LABEL_RADIUS: f64 = 0.5;

fn star_series(cfg: &SliceConfig, h: &NormalSymbol, options: &StarExpOptions) -> Result<StarSeries, PathError> {
    cfg.validate()?;
    let radius = cfg.alpha_i.norm().max(cfg.alpha_f.norm()).max(MIN_LABEL_RADIUS);
    let opts = StarExpOptions {
        reference_radius: radius,
        ..*options
    };
    Ok(star_exponential(h, Complex64::new(0.0, -cfg.t), &opts)?)
}

/// `⟨α_f|α_i⟩ · exp_⋆(−iTH)(α_i, α_f*)`.
///
/// Tail bounds are reported on the smallest disk holding both labels.
pub fn star_amplitude(
    cfg: &SliceConfig,
    h: &NormalSymbol,
    options: &StarExpOptions,
) -> Result<StarAmplitude, PathError> {
    let series = star_series(cfg, h, options)?;
    let overlap = fock::overlap(cfg.alpha_f, cfg.alpha_i);
    Ok(StarAmplitude {
        value: overlap * series.evaluate(cfg.alpha_i, cfg.alpha_f.conj()),
        error_estimate: overlap.norm() * series.tail_estimate,
        series: StarSeriesSummary::from(&series),
    })
}

/// Oracle amplitude with a bound on the coherent-state truncation error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleAmplitude {
    pub value: Complex64,
    pub truncation_bound: f64,
    pub dim: usize,
}

fn truncation_bound(cfg: &SliceConfig, dim: usize) -> f64 {
    fock::coherent_tail(cfg.alpha_i, dim).sqrt() + fock::coherent_tail(cfg.alpha_f, dim).sqrt()
}

/// `⟨α_f|e^{−iTH}|α_i⟩` in the Fock space truncated at `dim`.
pub fn oracle_amplitude(cfg: &SliceConfig, h: &NormalSymbol, dim: usize) -> Result<OracleAmplitude, PathError> {
    cfg.validate()?;
    let hop = fock::from_symbol(h, dim)?;
    let u = fock::evolve(&hop, cfg.t);
    Ok(OracleAmplitude {
        value: fock::matrix_element(cfg.alpha_f, &u, cfg.alpha_i)?,
        truncation_bound: truncation_bound(cfg, dim),
        dim,
    })
}

/// `⟨α_f|(1 − iεH)^N|α_i⟩` in the truncated Fock space.
pub fn oracle_product_amplitude(cfg: &SliceConfig, h: &NormalSymbol, dim: usize) -> Result<Complex64, PathError> {
    cfg.validate()?;
    let hop = fock::from_symbol(h, dim)?;
    let step = FockOperator::identity(dim).add(&hop.scale(Complex64::new(0.0, -cfg.epsilon())))?;
    Ok(fock::matrix_element(cfg.alpha_f, &step.pow(cfg.n as u32), cfg.alpha_i)?)
}

/// Which routes [`compare_all`] evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Routes {
    pub star: bool,
    pub oracle: bool,
    pub sliced: bool,
    pub optical: bool,
}

impl Routes {
    pub const ALL: Self = Self {
        star: true,
        oracle: true,
        sliced: true,
        optical: true,
    };

    pub fn any(&self) -> bool {
        self.star || self.oracle || self.sliced || self.optical
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareParams {
    pub dim: usize,
    pub star: StarExpOptions,
    pub rule_per_axis: usize,
    /// Slice counts for the continuum extrapolation, each double the last.
    pub n_ladder: Vec<usize>,
    pub routes: Routes,
}

impl Default for CompareParams {
    fn default() -> Self {
        Self {
            dim: 40,
            star: StarExpOptions::default(),
            rule_per_axis: 32,
            n_ladder: vec![10, 20, 40, 80],
            routes: Routes::ALL,
        }
    }
}

/// One amplitude by up to four routes. Pairwise errors are derived from the
/// stored values on demand.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeReport {
    pub star_value: Option<Complex64>,
    pub oracle_value: Option<Complex64>,
    pub sliced_value: Option<Complex64>,
    /// Star exponential paired with the non-diagonal P-function.
    pub optical_value: Option<Complex64>,
    pub star_error_estimate: Option<f64>,
    pub oracle_truncation_bound: Option<f64>,
    pub star_series: Option<StarSeriesSummary>,
    /// Raw sliced values along the ladder, before extrapolation.
    pub sliced_ladder: Vec<(usize, Complex64)>,
    pub dim: usize,
    pub rule_per_axis: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairError {
    pub pair: String,
    pub abs_error: f64,
    pub rel_error: f64,
}

impl AmplitudeReport {
    fn named(&self) -> Vec<(&'static str, Complex64)> {
        [
            ("star", self.star_value),
            ("oracle", self.oracle_value),
            ("sliced", self.sliced_value),
            ("optical", self.optical_value),
        ]
        .into_iter()
        .filter_map(|(name, v)| v.map(|v| (name, v)))
        .collect()
    }

    /// Relative errors are taken against the second member of each pair.
    pub fn errors(&self) -> Vec<PairError> {
        let named = self.named();
        let mut out = Vec::new();
        for i in 0..named.len() {
            for j in (i + 1)..named.len() {
                let (a, va) = named[i];
                let (b, vb) = named[j];
                let abs = (va - vb).norm();
                out.push(PairError {
                    pair: format!("{a}-{b}"),
                    abs_error: abs,
                    rel_error: abs / vb.norm().max(f64::MIN_POSITIVE),
                });
            }
        }
        out
    }

    pub fn max_rel_error(&self) -> f64 {
        self.errors().iter().map(|e| e.rel_error).fold(0.0, f64::max)
    }
}

impl Serialize for AmplitudeReport {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("AmplitudeReport", 12)?;
        s.serialize_field("star_value", &self.star_value)?;
        s.serialize_field("oracle_value", &self.oracle_value)?;
        s.serialize_field("sliced_value", &self.sliced_value)?;
        s.serialize_field("optical_value", &self.optical_value)?;
        s.serialize_field("star_error_estimate", &self.star_error_estimate)?;
        s.serialize_field("oracle_truncation_bound", &self.oracle_truncation_bound)?;
        s.serialize_field("star_series", &self.star_series)?;
        s.serialize_field("sliced_ladder", &self.sliced_ladder)?;
        s.serialize_field("dim", &self.dim)?;
        s.serialize_field("rule_per_axis", &self.rule_per_axis)?;
        s.serialize_field("errors", &self.errors())?;
        s.serialize_field("max_rel_error", &self.max_rel_error())?;
        s.end()
    }
}

pub fn compare_all(cfg: &SliceConfig, h: &NormalSymbol, params: &CompareParams) -> Result<AmplitudeReport, PathError> {
    cfg.validate()?;
    if !params.routes.any() {
        return Err(PathError::InvalidConfig("no routes requested".into()));
    }
    let mut report = AmplitudeReport {
        star_value: None,
        oracle_value: None,
        sliced_value: None,
        optical_value: None,
        star_error_estimate: None,
        oracle_truncation_bound: None,
        star_series: None,
        sliced_ladder: Vec::new(),
        dim: params.dim,
        rule_per_axis: params.rule_per_axis,
    };
    if params.routes.star || params.routes.optical {
        let series = star_series(cfg, h, &params.star)?;
        let overlap = fock::overlap(cfg.alpha_f, cfg.alpha_i);
        if params.routes.star {
            report.star_value = Some(overlap * series.evaluate(cfg.alpha_i, cfg.alpha_f.conj()));
            report.star_error_estimate = Some(overlap.norm() * series.tail_estimate);
        }
        if params.routes.optical {
            let pair = p_nondiagonal(cfg.alpha_i, cfg.alpha_f);
            report.optical_value = Some(pair.pair_symbol(&series.value));
        }
        report.star_series = Some(StarSeriesSummary::from(&series));
    }
    if params.routes.oracle {
        let oracle = oracle_amplitude(cfg, h, params.dim)?;
        report.oracle_value = Some(oracle.value);
        report.oracle_truncation_bound = Some(oracle.truncation_bound);
    }
    if params.routes.sliced {
        if params.n_ladder.is_empty() {
            return Err(PathError::InvalidConfig("sliced route needs a non-empty N ladder".into()));
        }
        for pair in params.n_ladder.windows(2) {
            if pair[1] != 2 * pair[0] {
                return Err(PathError::InvalidConfig("N ladder must double at every step".into()));
            }
        }
        let rule = ComplexPlaneRule::gauss_hermite(params.rule_per_axis, 1.0)?;
        let mut values = Vec::new();
        for &n in &params.n_ladder {
            let v = sliced_amplitude(&cfg.with_slices(n), h, &rule)?;
            report.sliced_ladder.push((n, v));
            values.push(v);
        }
        report.sliced_value = Some(richardson_continuum(&values));
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub n: usize,
    pub epsilon: f64,
    pub abs_error: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub points: Vec<ConvergencePoint>,
    /// Least-squares slope of `ln(abs_error)` against `ln(ε)`; absent when
    /// the sliced values are exact to rounding.
    pub slope: Option<f64>,
    pub exact: bool,
    pub reference: Complex64,
}

impl ConvergenceReport {
    /// CSV with header `N,epsilon,abs_error,rel_error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,epsilon,abs_error,rel_error\n");
        for p in &self.points {
            out.push_str(&format!("{},{:e},{:e},{:e}\n", p.n, p.epsilon, p.abs_error, p.rel_error));
        }
        out
    }
}

/// Relative error at or below which the sliced values count as exact.
pub const EXACT_THRESHOLD: f64 = 1e-12;

/// Sliced amplitudes for each `N` against the oracle `e^{−iTH}` amplitude.
pub fn convergence_study(
    cfg: &SliceConfig,
    h: &NormalSymbol,
    ns: &[usize],
    rule: &ComplexPlaneRule,
    dim: usize,
) -> Result<ConvergenceReport, PathError> {
    if ns.len() < 3 {
        return Err(PathError::InvalidConfig("convergence study needs at least 3 slice counts".into()));
    }
    let reference = oracle_amplitude(cfg, h, dim)?.value;
    let mut points = Vec::with_capacity(ns.len());
    for &n in ns {
        let c = cfg.with_slices(n);
        let v = sliced_amplitude(&c, h, rule)?;
        let abs = (v - reference).norm();
        points.push(ConvergencePoint {
            n,
            epsilon: c.epsilon(),
            abs_error: abs,
            rel_error: abs / reference.norm().max(f64::MIN_POSITIVE),
        });
    }
    let exact = points.iter().all(|p| p.rel_error <= EXACT_THRESHOLD);
    let slope = if exact {
        None
    } else {
        Some(log_log_slope(&points))
    };
    Ok(ConvergenceReport {
        points,
        slope,
        exact,
        reference,
    })
}

fn log_log_slope(points: &[ConvergencePoint]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.epsilon.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.abs_error.max(f64::MIN_POSITIVE).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn golden(cfg: &SliceConfig, omega: f64) -> Complex64 {
        let (ai, af) = (cfg.alpha_i, cfg.alpha_f);
        (-(ai.norm_sqr() + af.norm_sqr()) / 2.0 + af.conj() * ai * Complex64::new(0.0, -omega * cfg.t).exp()).exp()
    }

    #[test]
    fn single_slice_exponent_is_overlap() {
        let path = [c(0.3, 0.1), c(-0.2, 0.5)];
        let e = discrete_exponent(&path, &NormalSymbol::zero(), 0.1);
        assert!((e.exp() - fock::overlap(path[1], path[0])).norm() < 1e-15);
        let zeros = [c(0.0, 0.0); 5];
        assert_eq!(discrete_exponent(&zeros, &NormalSymbol::number(), 0.2), c(0.0, 0.0));
    }

    #[test]
    fn single_slice_linearization_matches_oracle() {
        let h = NormalSymbol::from_terms([((1, 1), c(1.0, 0.0)), ((0, 2), c(0.2, 0.0))]);
        let cfg = SliceConfig::new(1, 0.01, c(0.4, -0.1), c(0.1, 0.3)).unwrap();
        let oracle = oracle_product_amplitude(&cfg, &h, 32).unwrap();
        let rule = ComplexPlaneRule::gauss_hermite(4, 1.0).unwrap();
        let sliced = sliced_amplitude(&cfg, &h, &rule).unwrap();
        assert!((sliced - oracle).norm() < 1e-14);
        let exp_form = discrete_exponent(&[cfg.alpha_i, cfg.alpha_f], &h, cfg.epsilon()).exp();
        assert!((exp_form - oracle).norm() < 1e-4);
    }

    #[test]
    fn novikov_examples() {
        let constant = [c(0.7, -0.2); 6];
        assert!(novikov_identity_residual(&constant, 0.1) < 1e-15);
        let three = [c(1.0, 0.0), c(0.0, 1.0), c(0.5, 0.5)];
        assert!(novikov_identity_residual(&three, 0.25) < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let path: Vec<Complex64> = (0..9).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        assert!(novikov_identity_residual(&path, 0.125) <= 1e-13 * novikov_term_scale(&path, 0.125).max(1.0));
    }

    #[test]
    fn free_chain_telescopes() {
        let rule = ComplexPlaneRule::gauss_hermite(24, 1.0).unwrap();
        for n in [1, 2, 3, 6] {
            let cfg = SliceConfig::new(n, 1.0, c(0.5, 0.0), c(0.0, 0.3)).unwrap();
            let v = sliced_amplitude(&cfg, &NormalSymbol::zero(), &rule).unwrap();
            assert!((v - fock::overlap(cfg.alpha_f, cfg.alpha_i)).norm() < 1e-12);
        }
    }

    #[test]
    fn sliced_matches_product_oracle() {
        let rule = ComplexPlaneRule::gauss_hermite(32, 1.0).unwrap();
        let h = NormalSymbol::number();
        let cfg = SliceConfig::new(4, 0.4, c(0.5, 0.0), c(0.0, 0.3)).unwrap();
        let sliced = sliced_amplitude(&cfg, &h, &rule).unwrap();
        let oracle = oracle_product_amplitude(&cfg, &h, 40).unwrap();
        assert!((sliced - oracle).norm() < 1e-12, "{sliced} vs {oracle}");
    }

    #[test]
    fn star_route_matches_closed_form() {
        let cfg = SliceConfig::new(1, 1.0, c(0.5, 0.0), c(0.0, 0.3)).unwrap();
        let star = star_amplitude(&cfg, &NormalSymbol::number(), &StarExpOptions::with_order_and_tol(40, 1e-10)).unwrap();
        assert!((star.value - golden(&cfg, 1.0)).norm() < 1e-12);
        let zero_t = SliceConfig { t: 0.0, ..cfg };
        let s0 = star_amplitude(&zero_t, &NormalSymbol::number(), &StarExpOptions::default()).unwrap();
        assert_eq!(s0.value, fock::overlap(cfg.alpha_f, cfg.alpha_i));
    }

    #[test]
    fn richardson_removes_linear_and_quadratic_terms() {
        let f = |e: f64| c(1.0 + 0.3 * e - 0.7 * e * e, 0.2 * e);
        let vals: Vec<Complex64> = [0.1, 0.05, 0.025].iter().map(|&e| f(e)).collect();
        assert!((richardson_continuum(&vals) - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn compare_all_routes_agree() {
        let cfg = SliceConfig::new(1, 1.0, c(0.5, 0.0), c(0.0, 0.3)).unwrap();
        let report = compare_all(&cfg, &NormalSymbol::number(), &CompareParams::default()).unwrap();
        let g = golden(&cfg, 1.0);
        for v in [report.star_value, report.oracle_value, report.sliced_value, report.optical_value] {
            assert!((v.unwrap() - g).norm() / g.norm() < 1e-6, "{v:?} vs {g}");
        }
        assert_eq!(report.errors().len(), 6);
        let json = serde_json::to_value(&report).unwrap();
        assert!(json["errors"].is_array());
    }

    #[test]
    fn compare_all_rejects_empty_routes() {
        let cfg = SliceConfig::new(1, 1.0, c(0.5, 0.0), c(0.0, 0.3)).unwrap();
        let params = CompareParams {
            routes: Routes {
                star: false,
                oracle: false,
                sliced: false,
                optical: false,
            },
            ..CompareParams::default()
        };
        assert!(matches!(compare_all(&cfg, &NormalSymbol::number(), &params), Err(PathError::InvalidConfig(_))));
    }

    #[test]
    fn convergence_of_free_chain_is_exact() {
        let cfg = SliceConfig::new(1, 1.0, c(0.5, 0.0), c(0.0, 0.3)).unwrap();
        let rule = ComplexPlaneRule::gauss_hermite(16, 1.0).unwrap();
        let r = convergence_study(&cfg, &NormalSymbol::zero(), &[2, 4, 8], &rule, 32).unwrap();
        assert!(r.exact);
        assert!(r.slope.is_none());
        assert!(matches!(
            convergence_study(&cfg, &NormalSymbol::zero(), &[2, 4], &rule, 32),
            Err(PathError::InvalidConfig(_))
        ));
    }
}
