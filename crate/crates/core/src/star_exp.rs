//! Star exponential `exp_⋆(zH) = Σ_k z^k/k! H^{⋆k}`.
//!
//! The series is summed with an a posteriori stopping rule: the k-th term is
//! bounded on the reference bidisk `|α|, |α*| ≤ R` by its [`disk_norm`], and
//! summation stops once that bound falls below the tolerance.
//!
//! For large `|z|` the argument is split into `2^s` equal steps, the series is
//! summed once for `z/2^s` and the step factor is star-multiplied onto the
//! running product `2^s − 1` times. The number of steps is chosen so that
//! `|z| ‖H‖_R / 2^s ≤ 1/2`, and is doubled further while the step series misses
//! the tolerance. After each multiplication, coefficients whose disk weight
//! `|c| R^{m+n}` is negligible against the tolerance are pruned: the normal
//! product couples a degree-`j` coefficient to the step factor with weights
//! growing like `C(j, k)`, so unpruned high-degree round-off would otherwise
//! be amplified on every step. Coefficients below the canonical relative
//! cut are round-off and are dropped regardless of their disk weight; their
//! weight enters the tail estimate, which therefore grows quickly with `R`.
//!
//! [`disk_norm`]: NormalSymbol::disk_norm

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::symbol::{star_product_raw, Exponents, NormalSymbol, SymbolError, CANONICAL_RELATIVE_CUTOFF};

/// Step sizing, step series and pruning use at least this radius, so that
/// the step factor stays accurate well beyond a small evaluation disk.
const WORK_RADIUS_FLOOR: f64 = 2.0;
/// Upper bound on `|z| ‖H‖_R` for a single step.
const STEP_SIZE_LIMIT: f64 = 0.5;
/// Pruning threshold relative to the tolerance.
const PRUNE_FRACTION: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarExpOptions {
    pub max_order: usize,
    pub tol: f64,
    /// Radius of the reference disk used for term bounds.
    pub reference_radius: f64,
    /// Terms of total degree above the cap are dropped and accounted for in
    /// [`StarSeries::degree_truncation`].
    pub degree_cap: Option<u32>,
    /// The argument is split into at most `2^max_splitting` steps.
    pub max_splitting: u32,
}

impl Default for StarExpOptions {
    fn default() -> Self {
        Self {
            max_order: 64,
            tol: 1e-10,
            reference_radius: 2.0,
            degree_cap: None,
            max_splitting: 10,
        }
    }
}

impl StarExpOptions {
    pub fn with_order_and_tol(max_order: usize, tol: f64) -> Self {
        Self {
            max_order,
            tol,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), SymbolError> {
        if self.max_order < 1 {
            return Err(SymbolError::InvalidOptions("max_order must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(SymbolError::InvalidOptions("tol must be positive".into()));
        }
        if !(self.reference_radius > 0.0 && self.reference_radius.is_finite()) {
            return Err(SymbolError::InvalidOptions("reference_radius must be positive".into()));
        }
        if self.max_splitting > 20 {
            return Err(SymbolError::InvalidOptions("max_splitting must be at most 20".into()));
        }
        Ok(())
    }
}

/// Partial sum of a star exponential together with its error bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StarSeries {
    pub value: NormalSymbol,
    /// Highest series order included (of the step series when `steps > 1`).
    pub order: usize,
    /// Number of equal steps the argument was split into.
    pub steps: u64,
    /// Propagated size of the last included term on the reference disk,
    /// including canonicalization and degree-cap losses.
    pub tail_estimate: f64,
    pub converged: bool,
    /// Disk-norm mass removed by the degree cap.
    pub degree_truncation: f64,
    pub reference_radius: f64,
}

impl StarSeries {
    pub fn evaluate(&self, a: Complex64, a_star: Complex64) -> Complex64 {
        self.value.evaluate(a, a_star)
    }

    /// Converts a flagged series into [`SymbolError::NonConvergence`].
    pub fn into_result(self) -> Result<Self, SymbolError> {
        if self.converged {
            Ok(self)
        } else {
            Err(SymbolError::NonConvergence(Box::new(self)))
        }
    }
}

struct Stage {
    sum: BTreeMap<Exponents, Complex64>,
    order: usize,
    last_term: f64,
    converged: bool,
    degree_truncation: f64,
}

/// Computes `exp_⋆(z H)`; for the evolution operator `z = -iT`.
///
/// A series that misses the tolerance is returned inside
/// [`SymbolError::NonConvergence`] so callers can still inspect it.
pub fn star_exponential(
    h: &NormalSymbol,
    z: Complex64,
    options: &StarExpOptions,
) -> Result<StarSeries, SymbolError> {
    options.validate()?;
    let radius = options.reference_radius;
    if h.is_zero() || z == Complex64::new(0.0, 0.0) {
        return Ok(StarSeries {
            value: NormalSymbol::one(),
            order: 0,
            steps: 1,
            tail_estimate: 0.0,
            converged: true,
            degree_truncation: 0.0,
            reference_radius: radius,
        });
    }

    let work_radius = radius.max(WORK_RADIUS_FLOOR);
    let size = z.norm() * h.disk_norm(work_radius);
    let mut first = 0;
    while first < options.max_splitting && size / (1u64 << first) as f64 > STEP_SIZE_LIMIT {
        first += 1;
    }
    star_exponential_from_level(h, z, options, first)
}

/// As [`star_exponential`] but with at least `2^level` steps.
pub fn star_exponential_from_level(
    h: &NormalSymbol,
    z: Complex64,
    options: &StarExpOptions,
    level: u32,
) -> Result<StarSeries, SymbolError> {
    options.validate()?;
    if h.is_zero() || z == Complex64::new(0.0, 0.0) {
        return star_exponential(h, z, options);
    }
    let work_radius = options.reference_radius.max(WORK_RADIUS_FLOOR);
    let first = level.min(options.max_splitting);
    for s in first..=options.max_splitting {
        let steps = 1u64 << s;
        let stage = series_stage(h, z / steps as f64, options, options.tol / steps as f64, work_radius);
        if stage.converged || s == options.max_splitting {
            let unitary = z.re == 0.0 && is_hermitian(h);
            return compose(stage, steps, work_radius, unitary, options).into_result();
        }
    }
    unreachable!("the last splitting level always returns")
}

fn series_stage(h: &NormalSymbol, w: Complex64, options: &StarExpOptions, tol: f64, radius: f64) -> Stage {
    let h_raw = h.clone().into_raw();
    let mut sum: BTreeMap<Exponents, Complex64> = BTreeMap::new();
    sum.insert((0, 0), Complex64::new(1.0, 0.0));
    let mut term = sum.clone();
    let mut previous = 1.0;
    let mut degree_truncation = 0.0;

    for k in 1..=options.max_order {
        let mut next = star_product_raw(&term, &h_raw);
        let scale = w / k as f64;
        for c in next.values_mut() {
            *c *= scale;
        }
        degree_truncation += apply_degree_cap(&mut next, options.degree_cap, options.reference_radius);
        next.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        if next.is_empty() {
            // Every term was removed by the degree cap.
            return Stage {
                sum,
                order: k - 1,
                last_term: 0.0,
                converged: true,
                degree_truncation,
            };
        }
        let bound = weighted_norm(&next, radius);
        for (key, c) in &next {
            *sum.entry(*key).or_default() += c;
        }
        if bound <= tol && bound <= previous {
            return Stage {
                sum,
                order: k,
                last_term: bound,
                converged: true,
                degree_truncation,
            };
        }
        previous = bound;
        term = next;
    }
    Stage {
        sum,
        order: options.max_order,
        last_term: previous,
        converged: false,
        degree_truncation,
    }
}

/// Multiplies the step factor onto the running product `steps − 1` times.
///
/// Pruning acts on the working radius; the error bookkeeping is reported on
/// the reference disk. For a unitary flow step errors add up; otherwise each
/// is amplified by the weight of the running product.
fn compose(stage: Stage, steps: u64, work_radius: f64, unitary: bool, options: &StarExpOptions) -> StarSeries {
    let radius = options.reference_radius;
    let prune_below = options.tol * PRUNE_FRACTION;
    let (step_factor, mut tail) = prune(stage.sum, work_radius, radius, 0.0);
    let step_error = stage.last_term;
    tail += step_error;
    let mut degree_truncation = stage.degree_truncation;
    let mut value = step_factor.clone();
    for _ in 1..steps {
        let norm = if unitary { 1.0 } else { weighted_norm(&value, radius) };
        let mut next = star_product_raw(&value, &step_factor);
        degree_truncation += apply_degree_cap(&mut next, options.degree_cap, radius);
        let (next, lost) = prune(next, work_radius, radius, prune_below);
        tail += norm * step_error + lost;
        value = next;
    }
    StarSeries {
        value: NormalSymbol::from_raw(value),
        order: stage.order,
        steps,
        tail_estimate: tail + degree_truncation,
        converged: stage.converged,
        degree_truncation,
        reference_radius: radius,
    }
}

/// Canonical cut plus removal of terms whose weight on `radius` is below
/// `absolute`; returns the removed mass measured on `report_radius`.
fn prune(
    mut map: BTreeMap<Exponents, Complex64>,
    radius: f64,
    report_radius: f64,
    absolute: f64,
) -> (BTreeMap<Exponents, Complex64>, f64) {
    let cutoff = map.values().map(|c| c.norm()).fold(0.0, f64::max) * CANONICAL_RELATIVE_CUTOFF;
    let mut lost = 0.0;
    map.retain(|&(m, n), c| {
        let weighted = c.norm() * radius.powi((m + n) as i32);
        if c.norm() > cutoff && weighted >= absolute {
            true
        } else {
            lost += c.norm() * report_radius.powi((m + n) as i32);
            false
        }
    });
    (map, lost)
}

fn is_hermitian(h: &NormalSymbol) -> bool {
    let scale = h.max_coefficient();
    h.terms()
        .all(|((m, n), c)| (c - h.coefficient(n, m).conj()).norm() <= 1e-14 * scale)
}

fn weighted_norm(map: &BTreeMap<Exponents, Complex64>, radius: f64) -> f64 {
    map.iter()
        .map(|(&(m, n), c)| c.norm() * radius.powi((m + n) as i32))
        .sum()
}

fn apply_degree_cap(
    map: &mut BTreeMap<Exponents, Complex64>,
    cap: Option<u32>,
    radius: f64,
) -> f64 {
    let Some(cap) = cap else { return 0.0 };
    let mut dropped = 0.0;
    map.retain(|&(m, n), c| {
        if m + n > cap {
            dropped += c.norm() * radius.powi((m + n) as i32);
            false
        } else {
            true
        }
    });
    dropped
}
