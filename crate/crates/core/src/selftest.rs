//! The acceptance suite as a library routine, shared by the test harness and
//! the `selftest` subcommand.
//!
//! All randomness flows from one seed; the only wall-clock content is the
//! separate [`Timing`] block.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fock::{self, FockVector};
use crate::path_integral::{
    convergence_study, novikov_identity_residual, novikov_term_scale, oracle_amplitude, oracle_product_amplitude,
    sliced_amplitude, star_amplitude, SliceConfig,
};
use crate::quadrature::{star_multiply_integral, ComplexPlaneRule};
use crate::quasiprob::{
    optical_expectation, p_nondiagonal_with, EvaluationConvention, QuasiDistribution, QuasiTransform, SOrder,
};
use crate::star_exp::StarExpOptions;
use crate::symbol::NormalSymbol;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelftestConfig {
    pub seed: u64,
    pub star_max_order: usize,
    pub star_tol: f64,
    pub quadratic_dim: usize,
    pub anharmonic_dim: usize,
    pub integral_rule_per_axis: usize,
    pub slice_rule_per_axis: usize,
    pub exactness_slices: Vec<usize>,
    pub convergence_slices: Vec<usize>,
    pub novikov_paths: usize,
    pub completeness_dim: usize,
    pub completeness_half_width: f64,
    pub completeness_nodes: Vec<usize>,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_601,
            star_max_order: 40,
            star_tol: 1e-10,
            quadratic_dim: 32,
            anharmonic_dim: 40,
            integral_rule_per_axis: 64,
            slice_rule_per_axis: 32,
            exactness_slices: vec![1, 2, 4, 8],
            convergence_slices: vec![10, 20, 40, 80],
            novikov_paths: 1000,
            completeness_dim: 16,
            completeness_half_width: 6.0,
            completeness_nodes: vec![16, 32, 64, 128],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the criterion's metric.
    pub metric: f64,
    pub threshold: f64,
    pub details: Vec<(String, f64)>,
    /// Set when the criterion could not be evaluated.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timing {
    pub total_ms: f64,
    pub per_criterion_ms: Vec<(u32, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelftestReport {
    pub config: SelftestConfig,
    pub criteria: Vec<CriterionOutcome>,
    pub passed: bool,
    pub timing: Timing,
}

impl SelftestReport {
    /// The report as JSON without the timing block.
    pub fn deterministic_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing");
        }
        v
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Random symbol with every monomial of total degree `≤ max_degree` and
/// coefficients uniform in the unit square.
pub fn random_symbol(rng: &mut impl Rng, max_degree: u32) -> NormalSymbol {
    let mut terms = Vec::new();
    for m in 0..=max_degree {
        for n in 0..=(max_degree - m) {
            terms.push(((m, n), c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
        }
    }
    NormalSymbol::from_terms(terms)
}

/// Uniform point in the disk of radius `r`.
pub fn random_point(rng: &mut impl Rng, r: f64) -> Complex64 {
    let radius = r * rng.gen_range(0.0f64..1.0).sqrt();
    Complex64::from_polar(radius, rng.gen_range(0.0..2.0 * PI))
}

fn golden(cfg: &SliceConfig) -> Complex64 {
    let (ai, af) = (cfg.alpha_i, cfg.alpha_f);
    (-(ai.norm_sqr() + af.norm_sqr()) / 2.0 + af.conj() * ai * c(0.0, -cfg.t).exp()).exp()
}

fn labels() -> Vec<(Complex64, Complex64)> {
    let mut out = Vec::new();
    for ai in [c(0.5, 0.0), c(0.3, 0.4)] {
        for af in [c(0.0, 0.2), c(-0.5, 0.0)] {
            out.push((ai, af));
        }
    }
    out
}

type Check = Result<(f64, Vec<(String, f64)>), String>;

struct Outcome {
    metric: f64,
    threshold: f64,
    passed: bool,
    details: Vec<(String, f64)>,
}

fn outcome(check: Check, threshold: f64) -> Result<Outcome, String> {
    let (metric, details) = check?;
    Ok(Outcome {
        metric,
        threshold,
        passed: metric <= threshold,
        details,
    })
}

fn criterion_1(cfg: &SelftestConfig) -> Result<Outcome, String> {
    let opts = StarExpOptions::with_order_and_tol(cfg.star_max_order, cfg.star_tol);
    let h = NormalSymbol::number();
    let mut worst: f64 = 0.0;
    let mut oracle_worst: f64 = 0.0;
    for t in [0.1, 1.0, PI] {
        for (ai, af) in labels() {
            let sc = SliceConfig::new(1, t, ai, af).map_err(|e| e.to_string())?;
            let g = golden(&sc);
            let star = star_amplitude(&sc, &h, &opts).map_err(|e| e.to_string())?;
            worst = worst.max((star.value - g).norm() / g.norm());
            let oracle = oracle_amplitude(&sc, &h, cfg.quadratic_dim).map_err(|e| e.to_string())?;
            oracle_worst = oracle_worst.max((oracle.value - g).norm() / g.norm());
        }
    }
    outcome(Ok((worst, vec![("oracle_vs_closed_form".into(), oracle_worst)])), 1e-8)
}

fn criterion_2(cfg: &SelftestConfig) -> Result<Outcome, String> {
    let h = NormalSymbol::from_terms([((1, 1), c(1.0, 0.0)), ((2, 2), c(0.1, 0.0))]);
    let opts = StarExpOptions {
        tol: cfg.star_tol,
        ..StarExpOptions::default()
    };
    let mut worst: f64 = 0.0;
    let mut worst_excess: f64 = 0.0;
    let mut max_tail: f64 = 0.0;
    for t in [0.1, 0.5, 1.0] {
        for (ai, af) in labels() {
            let sc = SliceConfig::new(1, t, ai, af).map_err(|e| e.to_string())?;
            let star = star_amplitude(&sc, &h, &opts).map_err(|e| e.to_string())?;
            let oracle = oracle_amplitude(&sc, &h, cfg.anharmonic_dim).map_err(|e| e.to_string())?;
            let err = (star.value - oracle.value).norm();
            worst = worst.max(err / oracle.value.norm());
            max_tail = max_tail.max(star.error_estimate);
            // Positive when the observed error exceeds the declared budget.
            worst_excess = worst_excess.max(err - (10.0 * star.error_estimate + oracle.truncation_bound));
        }
    }
    let consistent = if worst_excess <= 0.0 { 1.0 } else { 0.0 };
    let mut o = outcome(
        Ok((
            worst,
            vec![
                ("max_error_estimate".into(), max_tail),
                ("budget_excess".into(), worst_excess),
                ("tail_consistent".into(), consistent),
            ],
        )),
        1e-4,
    )?;
    o.passed &= worst_excess <= 0.0;
    Ok(o)
}

fn criterion_3(cfg: &SelftestConfig) -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 3);
    let comm = NormalSymbol::alpha().star_commutator(&NormalSymbol::alpha_star());
    let exact = comm == NormalSymbol::one();

    let mut assoc: f64 = 0.0;
    for _ in 0..100 {
        let a = random_symbol(&mut rng, 4);
        let b = random_symbol(&mut rng, 4);
        let d = random_symbol(&mut rng, 4);
        let left = a.star_multiply(&b).star_multiply(&d);
        let right = a.star_multiply(&b.star_multiply(&d));
        let scale = left.max_coefficient().max(1.0);
        assoc = assoc.max((&left - &right).max_coefficient() / scale);
    }

    let rule = ComplexPlaneRule::gauss_hermite(cfg.integral_rule_per_axis, 1.0).map_err(|e| e.to_string())?;
    let mut integral: f64 = 0.0;
    for _ in 0..50 {
        let b = random_symbol(&mut rng, 4);
        let d = random_symbol(&mut rng, 4);
        let product = b.star_multiply(&d);
        for _ in 0..20 {
            let a = random_point(&mut rng, 1.5);
            let want = product.q_value(a);
            let got = star_multiply_integral(&b, &d, a, a.conj(), &rule).map_err(|e| e.to_string())?;
            integral = integral.max((got - want).norm() / want.norm().max(1.0));
        }
    }
    let metric = assoc.max(integral / 1e4);
    let mut o = outcome(
        Ok((
            metric,
            vec![
                ("commutator_exact".into(), if exact { 1.0 } else { 0.0 }),
                ("associativity_rel".into(), assoc),
                ("integral_vs_differential_rel".into(), integral),
            ],
        )),
        1e-12,
    )?;
    o.passed = exact && assoc <= 1e-12 && integral <= 1e-8;
    Ok(o)
}

fn criterion_4(cfg: &SelftestConfig) -> Result<Outcome, String> {
    let rule = ComplexPlaneRule::gauss_hermite(cfg.slice_rule_per_axis, 1.0).map_err(|e| e.to_string())?;
    let h = NormalSymbol::number();
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    for &n in &cfg.exactness_slices {
        let mut worst_n: f64 = 0.0;
        for (ai, af) in labels() {
            let sc = SliceConfig::new(n, 1.0, ai, af).map_err(|e| e.to_string())?;
            let sliced = sliced_amplitude(&sc, &h, &rule).map_err(|e| e.to_string())?;
            let oracle = oracle_product_amplitude(&sc, &h, cfg.quadratic_dim).map_err(|e| e.to_string())?;
            worst_n = worst_n.max((sliced - oracle).norm());
        }
        details.push((format!("N={n}"), worst_n));
        worst = worst.max(worst_n);
    }
    outcome(Ok((worst, details)), 1e-10)
}

fn criterion_5(cfg: &SelftestConfig) -> Result<Outcome, String> {
    let rule = ComplexPlaneRule::gauss_hermite(cfg.slice_rule_per_axis, 1.0).map_err(|e| e.to_string())?;
    let sc = SliceConfig::new(1, 1.0, c(0.5, 0.0), c(0.0, 0.3)).map_err(|e| e.to_string())?;
    let study = convergence_study(&sc, &NormalSymbol::number(), &cfg.convergence_slices, &rule, cfg.quadratic_dim)
        .map_err(|e| e.to_string())?;
    let slope = study.slope.ok_or("sliced values unexpectedly exact")?;
    let mut details: Vec<(String, f64)> = study
        .points
        .iter()
        .map(|p| (format!("abs_error_N={}", p.n), p.abs_error))
        .collect();
    details.push(("slope".into(), slope));
    outcome(Ok(((slope - 1.0).abs(), details)), 0.1)
}

fn criterion_6(cfg: &SelftestConfig) -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 6);
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.novikov_paths {
        let n = rng.gen_range(2..=64usize);
        let eps = rng.gen_range(0.01..1.0);
        let path: Vec<Complex64> = (0..=n).map(|_| random_point(&mut rng, 2.0)).collect();
        let r = novikov_identity_residual(&path, eps) / novikov_term_scale(&path, eps);
        worst = worst.max(r);
    }
    outcome(Ok((worst, Vec::new())), 1e-12)
}

fn criterion_7(cfg: &SelftestConfig) -> Result<Outcome, String> {
    let rule = ComplexPlaneRule::gauss_hermite(cfg.integral_rule_per_axis, 1.0).map_err(|e| e.to_string())?;
    let rho = fock::projector(&FockVector::basis(0, cfg.quadratic_dim));
    let mut details = Vec::new();
    let mut worst_point: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    for (name, s, closed) in [
        ("Q", SOrder::Q, (|x: f64| (-x).exp() / PI) as fn(f64) -> f64),
        ("Wigner", SOrder::WIGNER, |x: f64| 2.0 * (-2.0 * x).exp() / PI),
    ] {
        let t = QuasiTransform::new(&rho, s, &rule).map_err(|e| e.to_string())?;
        let mut pointwise: f64 = 0.0;
        for i in -6..=6 {
            for j in -6..=6 {
                let a = c(0.5 * i as f64, 0.5 * j as f64);
                if a.norm() <= 3.0 {
                    pointwise = pointwise.max((t.value(a) - closed(a.norm_sqr())).norm());
                }
            }
        }
        let norm = (t.normalization().map_err(|e| e.to_string())? - 1.0).norm();
        details.push((format!("{name}_pointwise"), pointwise));
        details.push((format!("{name}_normalization"), norm));
        worst_point = worst_point.max(pointwise);
        worst_norm = worst_norm.max(norm);
    }
    let mut o = outcome(Ok((worst_point, details)), 1e-8)?;
    o.passed &= worst_norm <= 1e-6;
    Ok(o)
}

fn criterion_8(cfg: &SelftestConfig) -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 8);
    let dim = cfg.quadratic_dim;
    let mut diagonal: f64 = 0.0;
    for _ in 0..50 {
        let b = random_symbol(&mut rng, 4);
        let gamma = random_point(&mut rng, 1.0);
        let op = fock::from_symbol(&b, dim).map_err(|e| e.to_string())?;
        let want = fock::matrix_element(gamma, &op, gamma).map_err(|e| e.to_string())?;
        let got = optical_expectation(&QuasiDistribution::PointMass { gamma }, &b).map_err(|e| e.to_string())?;
        diagonal = diagonal.max((got - want).norm() / want.norm().max(1.0));
    }
    let mut nondiagonal: f64 = 0.0;
    let mut swapped: f64 = 0.0;
    for _ in 0..50 {
        let b = random_symbol(&mut rng, 3);
        let ai = random_point(&mut rng, 1.0);
        let af = random_point(&mut rng, 1.0);
        let op = fock::from_symbol(&b, dim).map_err(|e| e.to_string())?;
        let want = fock::matrix_element(af, &op, ai).map_err(|e| e.to_string())?;
        let scale = want.norm().max(1.0);
        let pair = QuasiDistribution::DeltaPair(p_nondiagonal_with(ai, af, EvaluationConvention::Ket));
        let got = optical_expectation(&pair, &b).map_err(|e| e.to_string())?;
        nondiagonal = nondiagonal.max((got - want).norm() / scale);
        let other = p_nondiagonal_with(ai, af, EvaluationConvention::Swapped).pair_symbol(&b);
        swapped = swapped.max((other - want).norm() / scale);
    }
    outcome(
        Ok((
            diagonal.max(nondiagonal),
            vec![
                ("diagonal_rel".into(), diagonal),
                ("nondiagonal_rel".into(), nondiagonal),
                ("swapped_convention_rel".into(), swapped),
            ],
        )),
        1e-8,
    )
}

fn criterion_9(cfg: &SelftestConfig) -> Result<Outcome, String> {
    let mut residuals = Vec::new();
    let mut details = Vec::new();
    let mut at_64 = None;
    for &n in &cfg.completeness_nodes {
        let rule = ComplexPlaneRule::gauss_legendre_square(n, cfg.completeness_half_width).map_err(|e| e.to_string())?;
        let r = fock::completeness_residual(cfg.completeness_dim, &rule);
        if n == 64 {
            at_64 = Some(r);
        }
        details.push((format!("nodes={n}"), r));
        residuals.push(r);
    }
    let at_64 = at_64.ok_or("node ladder must include 64 per axis")?;
    // Past the quadrature floor the residual plateaus at the domain cut-off.
    let monotone = residuals.windows(2).all(|w| w[1] <= w[0] * (1.0 + PLATEAU_SLACK));
    details.push(("non_increasing".into(), if monotone { 1.0 } else { 0.0 }));
    let mut o = outcome(Ok((at_64, details)), 1e-6)?;
    o.passed &= monotone;
    Ok(o)
}

type Runner = fn(&SelftestConfig) -> Result<Outcome, String>;

const PLATEAU_SLACK: f64 = 1e-4;

const NAMES: [&str; 9] = [
    "star amplitude, quadratic Hamiltonian",
    "star amplitude, anharmonic Hamiltonian",
    "star algebra",
    "sliced integral exactness",
    "continuum convergence",
    "rearrangement identity",
    "vacuum quasi-probabilities",
    "optical equivalence",
    "completeness relation",
];

/// Runs criteria 1–9.
pub fn run_selftest(cfg: &SelftestConfig) -> SelftestReport {
    let runners: [Runner; 9] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
    ];
    let start = Instant::now();
    let mut criteria = Vec::new();
    let mut per_criterion_ms = Vec::new();
    for (i, run) in runners.iter().enumerate() {
        let id = i as u32 + 1;
        let t0 = Instant::now();
        let outcome = run(cfg);
        per_criterion_ms.push((id, t0.elapsed().as_secs_f64() * 1e3));
        criteria.push(match outcome {
            Ok(o) => CriterionOutcome {
                id,
                name: NAMES[i].into(),
                passed: o.passed,
                metric: o.metric,
                threshold: o.threshold,
                details: o.details,
                error: None,
            },
            Err(e) => CriterionOutcome {
                id,
                name: NAMES[i].into(),
                passed: false,
                metric: f64::NAN,
                threshold: f64::NAN,
                details: Vec::new(),
                error: Some(e),
            },
        });
    }
    SelftestReport {
        config: cfg.clone(),
        passed: criteria.iter().all(|c| c.passed),
        criteria,
        timing: Timing {
            total_ms: start.elapsed().as_secs_f64() * 1e3,
            per_criterion_ms,
        },
    }
}
