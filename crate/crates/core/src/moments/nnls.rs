//! Lawson–Hanson active-set nonnegative least squares.

use nalgebra::{DMatrix, DVector};

/// Solves `min ‖A x - b‖₂` subject to `x ≥ 0`. Each unconstrained
/// subproblem is solved through the SVD of the passive columns.
pub(crate) fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let (m, n) = a.shape();
    let scale = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = 10.0 * f64::EPSILON * scale * m.max(n) as f64;
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let max_outer = 3 * n.max(1);
    for _ in 0..max_outer {
        let grad = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        let j = match candidate {
            Some(j) if grad[j] > tol => j,
            _ => break,
        };
        passive[j] = true;
        loop {
            let s = solve_passive(a, b, &passive);
            let blocking: Vec<usize> = (0..n).filter(|&i| passive[i] && s[i] <= 0.0).collect();
            if blocking.is_empty() {
                x = s;
                break;
            }
            let alpha = blocking
                .iter()
                .map(|&i| x[i] / (x[i] - s[i]))
                .fold(f64::INFINITY, f64::min);
            x += (s - &x) * alpha;
            for i in 0..n {
                if passive[i] && x[i] <= tol {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    x
}

fn solve_passive(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let cols: Vec<usize> = (0..passive.len()).filter(|&i| passive[i]).collect();
    let sub = a.select_columns(&cols);
    let svd = sub.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * f64::EPSILON * a.nrows().max(cols.len()) as f64;
    let sol = svd.solve(b, eps).expect("U and V were computed");
    let mut full = DVector::zeros(passive.len());
    for (k, &c) in cols.iter().enumerate() {
        full[c] = sol[k];
    }
    full
}
