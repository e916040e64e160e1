//! Dense complex matrix helpers shared by the operator modules.
//!
//! Identities between truncated operators are compared on a leading block
//! (`interior_deviation`). Exponentials of unbounded generators are only
//! trustworthy on the columns whose amplitude never reached the truncation
//! edge; `leakage_block` measures that directly from the computed matrix.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{CsError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

const PADE_THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
];
const THETA_13: f64 = 5.371_920_351_148_152;
const MAX_SQUARINGS: i32 = 60;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const B9: [f64; 10] = [
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
const B13: [f64; 14] = [
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

/// Maximum absolute column sum.
pub fn norm1(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaled(m: &CMatrix, s: f64) -> CMatrix {
    m * Complex64::new(s, 0.0)
}

fn pade_low(a: &CMatrix, b: &[f64]) -> (CMatrix, CMatrix) {
    let n = a.nrows();
    let a2 = a * a;
    let mut powers = vec![CMatrix::identity(n, n)];
    for k in 1..b.len() / 2 {
        let next = &powers[k - 1] * &a2;
        powers.push(next);
    }
    let mut u = CMatrix::zeros(n, n);
    let mut v = CMatrix::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        u += scaled(p, b[2 * k + 1]);
        v += scaled(p, b[2 * k]);
    }
    (a * u, v)
}

fn pade_13(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.nrows();
    let id = CMatrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &B13;
    let inner_u = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    let u = a
        * (&a6 * inner_u
            + scaled(&a6, b[7])
            + scaled(&a4, b[5])
            + scaled(&a2, b[3])
            + scaled(&id, b[1]));
    let inner_v = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    let v = &a6 * inner_v
        + scaled(&a6, b[6])
        + scaled(&a4, b[4])
        + scaled(&a2, b[2])
        + scaled(&id, b[0]);
    (u, v)
}

/// Matrix exponential by scaling and squaring with diagonal Padé approximants
/// (orders 3 through 13, chosen from the 1-norm).
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(CsError::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    let norm = norm1(a);
    if !norm.is_finite() || a.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(CsError::IllConditioned {
            cond: norm,
            limit: f64::MAX,
        });
    }
    for (m, theta) in PADE_THETA {
        if norm <= theta {
            let b: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            let (u, v) = pade_low(a, b);
            return solve_pade(u, v);
        }
    }
    let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
    if s > MAX_SQUARINGS {
        return Err(CsError::IllConditioned {
            cond: norm,
            limit: THETA_13 * 2f64.powi(MAX_SQUARINGS),
        });
    }
    let a_scaled = scaled(a, 2f64.powi(-s));
    let (u, v) = pade_13(&a_scaled);
    let mut r = solve_pade(u, v)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

fn solve_pade(u: CMatrix, v: CMatrix) -> Result<CMatrix> {
    let p = &v + &u;
    let q = v - u;
    q.lu().solve(&p).ok_or(CsError::IllConditioned {
        cond: f64::INFINITY,
        limit: 1.0 / f64::EPSILON,
    })
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Frobenius norm of the leading `k x k` block.
pub fn interior_deviation(m: &CMatrix, k: usize) -> f64 {
    let k = k.min(m.nrows()).min(m.ncols());
    m.view((0, 0), (k, k)).norm()
}

/// Frobenius norm of `a - b` on the leading `k x k` block.
pub fn interior_distance(a: &CMatrix, b: &CMatrix, k: usize) -> f64 {
    interior_deviation(&(a - b), k)
}

/// Largest `k` such that every column and every row with index `< k` carries
/// amplitude at most `tol` in its last `edge_rows` entries.
pub fn leakage_block(m: &CMatrix, edge_rows: usize, tol: f64) -> usize {
    let n = m.nrows();
    let edge_rows = edge_rows.clamp(1, n);
    let start = n - edge_rows;
    for j in 0..start {
        let col = m.view((start, j), (edge_rows, 1)).norm();
        let row = m.view((j, start), (1, edge_rows)).norm();
        if col > tol || row > tol {
            return j;
        }
    }
    start
}

/// Relative residual `|x - c y| / |x|` of the best scalar fit `x ~ c y`.
pub fn collinearity_residual(x: &[Complex64], y: &[Complex64]) -> f64 {
    let xx: f64 = x.iter().map(|v| v.norm_sqr()).sum();
    let yy: f64 = y.iter().map(|v| v.norm_sqr()).sum();
    if xx == 0.0 {
        return if yy == 0.0 { 0.0 } else { 1.0 };
    }
    if yy == 0.0 {
        return 1.0;
    }
    let c: Complex64 = y.iter().zip(x).map(|(a, b)| a.conj() * b).sum::<Complex64>() / yy;
    let resid: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a - c * b).norm_sqr())
        .sum();
    (resid / xx).sqrt()
}

/// Ratio of extreme singular values; infinite for singular input.
pub fn condition_number(m: &CMatrix) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real_diag(v: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(
            v.len(),
            v.iter().map(|&x| Complex64::new(x, 0.0)),
        ))
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = CMatrix::zeros(5, 5);
        let e = expm(&z).unwrap();
        assert_eq!(e, CMatrix::identity(5, 5));
    }

    #[test]
    fn exp_of_diagonal_matches_scalar_exponentials() {
        for scale in [1e-3, 0.5, 3.0, 40.0] {
            let d: Vec<f64> = (0..6).map(|k| scale * (k as f64 - 2.5)).collect();
            let e = expm(&real_diag(&d)).unwrap();
            for (k, x) in d.iter().enumerate() {
                let rel = (e[(k, k)].re - x.exp()).abs() / x.exp();
                assert!(rel < 1e-13, "scale {scale} k {k}: {rel}");
            }
        }
    }

    #[test]
    fn exp_of_nilpotent_shift_is_truncated_series() {
        // exp(c J) for the 4x4 shift J is sum c^k J^k / k!
        let n = 4;
        let c = Complex64::new(0.7, -1.3);
        let mut j = CMatrix::zeros(n, n);
        for k in 0..n - 1 {
            j[(k + 1, k)] = c;
        }
        let e = expm(&j).unwrap();
        let fact = [1.0, 1.0, 2.0, 6.0];
        for r in 0..n {
            for col in 0..=r {
                let expect = c.powu((r - col) as u32) / fact[r - col];
                assert!((e[(r, col)] - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn exp_of_rotation_generator() {
        // exp([[0, -t], [t, 0]]) is the rotation by t, also after many squarings
        for t in [0.1, 2.0, 25.0] {
            let mut g = CMatrix::zeros(2, 2);
            g[(0, 1)] = Complex64::new(-t, 0.0);
            g[(1, 0)] = Complex64::new(t, 0.0);
            let e = expm(&g).unwrap();
            assert!((e[(0, 0)].re - t.cos()).abs() < 1e-12);
            assert!((e[(1, 0)].re - t.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn exp_rejects_non_finite() {
        let mut g = CMatrix::zeros(2, 2);
        g[(0, 0)] = Complex64::new(f64::NAN, 0.0);
        assert!(expm(&g).is_err());
    }

    #[test]
    fn collinearity_of_scaled_vector_is_zero() {
        let y: Vec<Complex64> = (0..5).map(|k| Complex64::new(k as f64, 1.0)).collect();
        let c = Complex64::new(-2.0, 0.5);
        let x: Vec<Complex64> = y.iter().map(|v| c * v).collect();
        assert!(collinearity_residual(&x, &y) < 1e-15);
        let mut bent = x.clone();
        bent[0] += Complex64::new(1.0, 0.0);
        assert!(collinearity_residual(&bent, &y) > 1e-3);
    }

    #[test]
    fn leakage_block_stops_at_first_leaking_column() {
        let mut m = CMatrix::identity(6, 6);
        m[(5, 3)] = Complex64::new(1e-3, 0.0);
        assert_eq!(leakage_block(&m, 1, 1e-6), 3);
        assert_eq!(leakage_block(&CMatrix::identity(6, 6), 2, 1e-6), 4);
    }
}
