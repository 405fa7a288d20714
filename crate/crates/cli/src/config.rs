use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use starpath::fock::{self, FockOperator};
use starpath::path_integral::{CompareParams, Routes, SliceConfig};
use starpath::star_exp::StarExpOptions;
use starpath::symbol::NormalSymbol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Star,
    Oracle,
    Sliced,
    Optical,
}

/// Density operator for `qdist`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StateSpec {
    Vacuum,
    Coherent { alpha: [f64; 2] },
    Number { n: usize },
    Thermal { mean_number: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Records `[m, n, re, im]` for `c (α*)^m α^n`.
    pub hamiltonian: Vec<[f64; 4]>,
    pub alpha_i: [f64; 2],
    pub alpha_f: [f64; 2],
    #[serde(rename = "T")]
    pub t: f64,
    pub routes: Vec<Route>,
    /// Fock truncation.
    #[serde(rename = "D")]
    pub dim: usize,
    /// Maximum star-series order per step.
    #[serde(rename = "K")]
    pub max_order: usize,
    /// Star-series tolerance.
    pub tol: f64,
    /// Largest relative disagreement accepted between routes, and largest
    /// normalization residual accepted by `qdist`.
    pub agreement_tol: f64,
    /// Quadrature nodes per axis for the sliced route.
    pub rule_nodes: usize,
    /// Quadrature nodes per axis for quasi-probability transforms.
    pub quasi_rule_nodes: usize,
    pub n_list: Vec<usize>,
    pub s: f64,
    pub state: StateSpec,
    pub window: [f64; 2],
    pub grid_points: usize,
    pub left: Vec<[f64; 4]>,
    pub right: Vec<[f64; 4]>,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            hamiltonian: vec![[1.0, 1.0, 1.0, 0.0]],
            alpha_i: [0.5, 0.0],
            alpha_f: [0.0, 0.2],
            t: 1.0,
            routes: vec![Route::Star, Route::Oracle, Route::Sliced, Route::Optical],
            dim: 40,
            max_order: 64,
            tol: 1e-10,
            agreement_tol: 1e-6,
            rule_nodes: 32,
            quasi_rule_nodes: 96,
            n_list: vec![10, 20, 40, 80],
            s: -1.0,
            state: StateSpec::Vacuum,
            window: [-3.0, 3.0],
            grid_points: 61,
            left: vec![[0.0, 1.0, 1.0, 0.0]],
            right: vec![[1.0, 0.0, 1.0, 0.0]],
            seed: starpath::selftest::SelftestConfig::default().seed,
            output_dir: PathBuf::from("out"),
        }
    }
}

pub fn complex(pair: [f64; 2]) -> Complex64 {
    Complex64::new(pair[0], pair[1])
}

fn positive(name: &str, v: f64) -> Result<(), String> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("{name} must be positive and finite, got {v}"))
    }
}

fn finite(name: &str, values: &[f64]) -> Result<(), String> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(format!("{name} must be finite"))
    }
}

impl ExperimentConfig {
    /// Checks shared by every subcommand.
    pub fn validate(&self) -> Result<(), String> {
        if self.routes.is_empty() {
            return Err("routes must not be empty".into());
        }
        for (name, v) in [
            ("D", self.dim),
            ("K", self.max_order),
            ("rule_nodes", self.rule_nodes),
            ("quasi_rule_nodes", self.quasi_rule_nodes),
            ("grid_points", self.grid_points),
        ] {
            if v == 0 {
                return Err(format!("{name} must be positive"));
            }
        }
        positive("tol", self.tol)?;
        positive("agreement_tol", self.agreement_tol)?;
        if self.n_list.contains(&0) {
            return Err("n_list entries must be positive".into());
        }
        finite("alpha_i", &self.alpha_i)?;
        finite("alpha_f", &self.alpha_f)?;
        finite("T", &[self.t])?;
        finite("s", &[self.s])?;
        finite("window", &self.window)?;
        if self.window[0] >= self.window[1] {
            return Err("window must satisfy lo < hi".into());
        }
        match self.state {
            StateSpec::Coherent { alpha } => finite("state.alpha", &alpha)?,
            StateSpec::Thermal { mean_number } => positive("state.mean_number", mean_number)?,
            StateSpec::Vacuum | StateSpec::Number { .. } => {}
        }
        Ok(())
    }

    fn symbol(name: &str, records: &[[f64; 4]]) -> Result<NormalSymbol, String> {
        NormalSymbol::from_records(records).map_err(|e| format!("{name}: {e}"))
    }

    pub fn hamiltonian(&self) -> Result<NormalSymbol, String> {
        Self::symbol("hamiltonian", &self.hamiltonian)
    }

    pub fn left(&self) -> Result<NormalSymbol, String> {
        Self::symbol("left", &self.left)
    }

    pub fn right(&self) -> Result<NormalSymbol, String> {
        Self::symbol("right", &self.right)
    }

    pub fn slice_config(&self) -> Result<SliceConfig, String> {
        SliceConfig::new(1, self.t, complex(self.alpha_i), complex(self.alpha_f)).map_err(|e| e.to_string())
    }

    pub fn star_options(&self) -> StarExpOptions {
        StarExpOptions::with_order_and_tol(self.max_order, self.tol)
    }

    pub fn routes(&self) -> Routes {
        Routes {
            star: self.routes.contains(&Route::Star),
            oracle: self.routes.contains(&Route::Oracle),
            sliced: self.routes.contains(&Route::Sliced),
            optical: self.routes.contains(&Route::Optical),
        }
    }

    pub fn compare_params(&self) -> CompareParams {
        CompareParams {
            dim: self.dim,
            star: self.star_options(),
            rule_per_axis: self.rule_nodes,
            n_ladder: self.n_list.clone(),
            routes: self.routes(),
        }
    }

    pub fn density(&self) -> Result<FockOperator, fock::FockError> {
        Ok(match self.state {
            StateSpec::Vacuum => fock::projector(&fock::FockVector::basis(0, self.dim)),
            StateSpec::Coherent { alpha } => fock::projector(&fock::coherent_vector(complex(alpha), self.dim)?),
            StateSpec::Number { n } => {
                if n >= self.dim {
                    return Err(fock::FockError::DimensionTooSmall {
                        dim: self.dim,
                        required: n + 1,
                    });
                }
                fock::projector(&fock::FockVector::basis(n, self.dim))
            }
            StateSpec::Thermal { mean_number } => fock::thermal_state(mean_number, self.dim),
        })
    }
}
