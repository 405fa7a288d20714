//! Normal-symbol star calculus for a single bosonic mode.

pub mod expm;
pub mod fock;
pub mod path_integral;
pub mod quadrature;
pub mod quasiprob;
pub mod selftest;
pub mod star_exp;
pub mod symbol;

pub use num_complex::Complex64;
