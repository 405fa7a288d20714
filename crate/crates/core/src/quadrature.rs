//! Quadrature over the complex plane, `d²β = dRe(β) dIm(β)`.
//!
//! Rules are tensor products of one-dimensional Gauss rules. A Gauss–Hermite
//! rule carries its Gaussian weight `e^{−|β−c|²/s²}` in the weights, so the
//! integrand handed to [`ComplexPlaneRule::integrate`] is only the
//! non-Gaussian factor; a Gauss–Legendre square rule integrates plain
//! functions on `[−L, L]²`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::symbol::NormalSymbol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("a quadrature rule needs at least 2 nodes per axis, got {0}")]
    TooFewNodes(usize),
    #[error("rule scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("rule does not fit this integral: {0}")]
    RuleMismatch(String),
}

/// Weight function absorbed into a rule's weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum PlaneWeight {
    /// Plain Lebesgue measure.
    Lebesgue,
    /// `e^{−|β − center|²/scale²}`.
    Gaussian { scale: f64, center: Complex64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexPlaneRule {
    nodes: Vec<Complex64>,
    weights: Vec<f64>,
    weight: PlaneWeight,
    per_axis: usize,
}

/// Nodes and weights of the `n`-point Gauss–Hermite rule for `e^{−x²}`,
/// ascending.
pub fn gauss_hermite_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PI_M4: f64 = 0.751_125_544_464_942_5;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let m = n.div_ceil(2);
    let mut z: f64 = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            // Orthonormal Hermite recurrence.
            let mut p1 = PI_M4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let step = p1 / pp;
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    x.reverse();
    w.reverse();
    (x, w)
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`,
/// ascending.
pub fn gauss_legendre_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let step = p1 / pp;
            z -= step;
            if step.abs() <= 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn tensor(xs: &[f64], ws: &[f64], shift: Complex64) -> (Vec<Complex64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(xs.len() * xs.len());
    let mut weights = Vec::with_capacity(xs.len() * xs.len());
    for (i, (&xr, &wr)) in xs.iter().zip(ws).enumerate() {
        for (&xi, &wi) in xs.iter().zip(ws) {
            nodes.push(Complex64::new(xr, xi) + shift);
            weights.push(wr * wi);
        }
        debug_assert!(i < xs.len());
    }
    (nodes, weights)
}

impl ComplexPlaneRule {
    /// Tensor Gauss–Hermite rule with weight `e^{−|β|²/scale²}` factored out;
    /// exact for that Gaussian times bivariate polynomials of degree
    /// `≤ 2n − 1` in each real coordinate.
    pub fn gauss_hermite(n: usize, scale: f64) -> Result<Self, QuadratureError> {
        if n < 2 {
            return Err(QuadratureError::TooFewNodes(n));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(QuadratureError::InvalidScale(scale));
        }
        let (x, w) = gauss_hermite_1d(n);
        let xs: Vec<f64> = x.iter().map(|v| v * scale).collect();
        let ws: Vec<f64> = w.iter().map(|v| v * scale).collect();
        let (nodes, weights) = tensor(&xs, &ws, Complex64::new(0.0, 0.0));
        Ok(Self {
            nodes,
            weights,
            weight: PlaneWeight::Gaussian {
                scale,
                center: Complex64::new(0.0, 0.0),
            },
            per_axis: n,
        })
    }

    /// Tensor Gauss–Legendre rule on the square `[−L, L]²` (plain measure).
    pub fn gauss_legendre_square(n: usize, half_width: f64) -> Result<Self, QuadratureError> {
        if n < 2 {
            return Err(QuadratureError::TooFewNodes(n));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(QuadratureError::InvalidScale(half_width));
        }
        let (x, w) = gauss_legendre_1d(n);
        let xs: Vec<f64> = x.iter().map(|v| v * half_width).collect();
        let ws: Vec<f64> = w.iter().map(|v| v * half_width).collect();
        let (nodes, weights) = tensor(&xs, &ws, Complex64::new(0.0, 0.0));
        Ok(Self {
            nodes,
            weights,
            weight: PlaneWeight::Lebesgue,
            per_axis: n,
        })
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn weight(&self) -> PlaneWeight {
        self.weight
    }

    pub fn gaussian_factored(&self) -> bool {
        matches!(self.weight, PlaneWeight::Gaussian { .. })
    }

    /// Largest node modulus.
    pub fn coverage_radius(&self) -> f64 {
        self.nodes.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Value of the absorbed weight function at `beta`.
    pub fn weight_at(&self, beta: Complex64) -> f64 {
        match self.weight {
            PlaneWeight::Lebesgue => 1.0,
            PlaneWeight::Gaussian { scale, center } => (-(beta - center).norm_sqr() / (scale * scale)).exp(),
        }
    }

    /// The same rule translated by `shift`, weight function included.
    pub fn recentered(&self, shift: Complex64) -> Self {
        let weight = match self.weight {
            PlaneWeight::Lebesgue => PlaneWeight::Lebesgue,
            PlaneWeight::Gaussian { scale, center } => PlaneWeight::Gaussian {
                scale,
                center: center + shift,
            },
        };
        Self {
            nodes: self.nodes.iter().map(|z| z + shift).collect(),
            weights: self.weights.clone(),
            weight,
            per_axis: self.per_axis,
        }
    }

    /// `Σ w_k f(β_k)`; for Gaussian rules `f` is the non-Gaussian factor.
    pub fn integrate<F>(&self, mut f: F) -> Complex64
    where
        F: FnMut(Complex64) -> Complex64,
    {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| f(z) * w)
            .sum()
    }

    /// Like [`integrate`](Self::integrate) but stops at the first failing
    /// evaluation.
    pub fn try_integrate<F, E>(&self, mut f: F) -> Result<Complex64, E>
    where
        F: FnMut(Complex64) -> Result<Complex64, E>,
    {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&z, &w) in self.nodes.iter().zip(&self.weights) {
            acc += f(z)? * w;
        }
        Ok(acc)
    }

    /// Effective `(node, weight)` pairs for integrals `∫ d²β e^{−|β|²} f(β)`,
    /// whatever weight the rule itself carries.
    pub fn gaussian_weighted(&self) -> impl Iterator<Item = (Complex64, f64)> + '_ {
        let exact = matches!(
            self.weight,
            PlaneWeight::Gaussian { scale, center } if scale == 1.0 && center == Complex64::new(0.0, 0.0)
        );
        self.nodes.iter().zip(&self.weights).map(move |(&z, &w)| {
            if exact {
                (z, w)
            } else {
                (z, w * (-z.norm_sqr()).exp() / self.weight_at(z))
            }
        })
    }

    /// `∫ d²β e^{−|β|²} f(β)`.
    pub fn integrate_against_gaussian<F>(&self, mut f: F) -> Complex64
    where
        F: FnMut(Complex64) -> Complex64,
    {
        self.gaussian_weighted().map(|(z, w)| f(z) * w).sum()
    }

    /// `∫ d²β F(β)` for an integrand given in full, dividing out the rule's
    /// weight where one is absorbed.
    pub fn integrate_full<F>(&self, mut f: F) -> Complex64
    where
        F: FnMut(Complex64) -> Complex64,
    {
        self.integrate(|z| f(z) / self.weight_at(z))
    }
}

/// `(1/π) ∫ d²β B(β, α*) C(α, β*) e^{−(β−α)(β*−α*)}`, the integral form of
/// the normal star product.
///
/// `rule` must be a unit-scale Gauss–Hermite rule centred at the origin; its
/// nodes are moved to `α` so the Gaussian overlap is carried exactly by the
/// weights. When `a_star ≠ conj(a)` the residual factor
/// `e^{−γ(conj(a) − a_star)}` (with `β = a + γ`) is kept in the integrand.
pub fn star_multiply_integral(
    b: &NormalSymbol,
    c: &NormalSymbol,
    a: Complex64,
    a_star: Complex64,
    rule: &ComplexPlaneRule,
) -> Result<Complex64, QuadratureError> {
    match rule.weight {
        PlaneWeight::Gaussian { scale, center } if scale == 1.0 && center == Complex64::new(0.0, 0.0) => {}
        other => {
            return Err(QuadratureError::RuleMismatch(format!(
                "star-product integral needs a unit Gaussian rule at the origin, got {other:?}"
            )))
        }
    }
    let skew = a.conj() - a_star;
    let value = rule.integrate(|gamma| {
        let beta = a + gamma;
        let mut integrand = b.evaluate(beta, a_star) * c.evaluate(a, beta.conj());
        if skew != Complex64::new(0.0, 0.0) {
            integrand *= (-gamma * skew).exp();
        }
        integrand
    });
    Ok(value / PI)
}
