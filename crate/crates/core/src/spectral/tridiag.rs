//! Thomas algorithm for complex tridiagonal systems.

use num_complex::Complex64;

/// Solves `sub[i]·x[i−1] + diag[i]·x[i] + sup[i]·x[i+1] = rhs[i]`.
///
/// `sub[0]` and `sup[n−1]` are ignored. No pivoting: intended for the diagonally
/// dominant Crank–Nicolson and mass matrices of the y-discretization.
pub fn solve(sub: &[Complex64], diag: &[Complex64], sup: &[Complex64], rhs: &[Complex64]) -> Vec<Complex64> {
    let n = diag.len();
    let mut c = vec![Complex64::default(); n];
    let mut x = vec![Complex64::default(); n];
    solve_into(sub, diag, sup, rhs, &mut c, &mut x);
    x
}

/// Allocation-free variant; `scratch` and `out` must have the system length.
pub fn solve_into(
    sub: &[Complex64],
    diag: &[Complex64],
    sup: &[Complex64],
    rhs: &[Complex64],
    scratch: &mut [Complex64],
    out: &mut [Complex64],
) {
    let n = diag.len();
    let mut beta = diag[0];
    out[0] = rhs[0] / beta;
    for i in 1..n {
        scratch[i] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * scratch[i];
        out[i] = (rhs[i] - sub[i] * out[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        let next = out[i + 1];
        out[i] -= scratch[i + 1] * next;
    }
}
