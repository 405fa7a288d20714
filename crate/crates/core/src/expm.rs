//! Matrix exponential by scaling and squaring with diagonal Padé approximants.
//!
//! Degrees and switching thresholds `θ_m` follow Higham's 2005 analysis, which
//! bounds the backward error of `[m/m]` Padé on `‖2^-s A‖₁ ≤ θ_m` by the unit
//! roundoff. Hermitian generators take an eigendecomposition path instead.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

type CMatrix = DMatrix<Complex64>;

const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
];
const THETA_13: f64 = 5.371_920_351_148_152;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const PADE_9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

pub(crate) fn one_norm(a: &CMatrix) -> f64 {
    a.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub(crate) fn is_hermitian(a: &CMatrix) -> bool {
    if !a.is_square() {
        return false;
    }
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let n = a.nrows();
    for i in 0..n {
        for j in i..n {
            if (a[(i, j)] - a[(j, i)].conj()).norm() > 1e-14 * scale {
                return false;
            }
        }
    }
    true
}

/// `exp(A)` for a general complex square matrix.
pub fn expm(a: &CMatrix) -> CMatrix {
    assert!(a.is_square(), "matrix exponential needs a square matrix");
    let n = a.nrows();
    let identity = CMatrix::identity(n, n);
    let norm = one_norm(a);
    if norm == 0.0 {
        return identity;
    }
    for &(m, theta) in &THETA {
        if norm <= theta {
            let coeffs: &[f64] = match m {
                3 => &PADE_3,
                5 => &PADE_5,
                7 => &PADE_7,
                _ => &PADE_9,
            };
            return pade_low(a, coeffs);
        }
    }
    let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
    let scaled = a.scale(f64::powi(2.0, -s));
    let mut result = pade_13(&scaled);
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

/// `exp(-i t H)` for Hermitian `H` through `H = V Λ V†`.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let eig = SymmetricEigen::new(h.clone());
    let phases = eig
        .eigenvalues
        .map(|lambda| Complex64::new(0.0, -t * lambda).exp());
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    scaled * v.adjoint()
}

fn pade_low(a: &CMatrix, b: &[f64]) -> CMatrix {
    let n = a.nrows();
    let identity = CMatrix::identity(n, n);
    let a2 = a * a;
    let mut even_power = identity.clone();
    let mut u_inner = CMatrix::zeros(n, n);
    let mut v = CMatrix::zeros(n, n);
    for j in 0..b.len() / 2 {
        if j > 0 {
            even_power = &even_power * &a2;
        }
        v += even_power.scale(b[2 * j]);
        u_inner += even_power.scale(b[2 * j + 1]);
    }
    let u = a * u_inner;
    solve_pade(u, v)
}

fn pade_13(a: &CMatrix) -> CMatrix {
    let b = &PADE_13;
    let n = a.nrows();
    let identity = CMatrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_high = &a6 * (a6.scale(b[13]) + a4.scale(b[11]) + a2.scale(b[9]));
    let u = a * (u_high + a6.scale(b[7]) + a4.scale(b[5]) + a2.scale(b[3]) + identity.scale(b[1]));
    let v_high = &a6 * (a6.scale(b[12]) + a4.scale(b[10]) + a2.scale(b[8]));
    let v = v_high + a6.scale(b[6]) + a4.scale(b[4]) + a2.scale(b[2]) + identity.scale(b[0]);
    solve_pade(u, v)
}

fn solve_pade(u: CMatrix, v: CMatrix) -> CMatrix {
    let p = &v + &u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .expect("Padé denominator is nonsingular inside the θ bounds")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn diagonal_matches_scalar_exponentials() {
        for &scale in &[1e-3, 0.1, 1.0, 7.0, 40.0] {
            let d = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(6, |i, _| c(0.0, -scale * i as f64)));
            let e = expm(&d);
            for i in 0..6 {
                let want = c(0.0, -scale * i as f64).exp();
                assert!((e[(i, i)] - want).norm() < 1e-13, "scale {scale}");
            }
        }
    }

    #[test]
    fn nilpotent_is_exact_taylor() {
        // exp of a strictly upper-triangular 3x3 is I + N + N²/2.
        let mut nmat = CMatrix::zeros(3, 3);
        nmat[(0, 1)] = c(2.0, 0.0);
        nmat[(1, 2)] = c(0.0, 3.0);
        let want = CMatrix::identity(3, 3) + &nmat + (&nmat * &nmat).scale(0.5);
        assert!(max_diff(&expm(&nmat), &want) < 1e-13);
    }

    #[test]
    fn hermitian_path_agrees_with_pade() {
        let mut h = CMatrix::zeros(5, 5);
        for i in 0..5 {
            h[(i, i)] = c(i as f64 * 0.7, 0.0);
            if i + 1 < 5 {
                h[(i, i + 1)] = c(0.3, 0.2 * i as f64);
                h[(i + 1, i)] = h[(i, i + 1)].conj();
            }
        }
        assert!(is_hermitian(&h));
        let t = 2.3;
        let u = expm_hermitian(&h, t);
        let p = expm(&h.scale(-t).map(|z| z * c(0.0, 1.0)));
        assert!(max_diff(&u, &p) < 1e-12);
        let unitarity = &u.adjoint() * &u;
        assert!(max_diff(&unitarity, &CMatrix::identity(5, 5)) < 1e-13);
    }

    #[test]
    fn zero_matrix_gives_identity() {
        assert_eq!(expm(&CMatrix::zeros(4, 4)), CMatrix::identity(4, 4));
    }
}
