//! Small dense symmetric solves used by the Gibbs updates.
//!
//! The conditional precision matrices here are K x K with K rarely above
//! ten, so a plain Cholesky with triangular substitution is all that is
//! needed. Factorization failures are escalated with diagonal jitter
//! before an ill-conditioning error is raised.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
///
/// On failure returns the offending pivot (the Schur-complement diagonal
/// entry that was not positive), which estimates the smallest eigenvalue.
pub fn cholesky(a: &Array2<f64>) -> std::result::Result<Array2<f64>, f64> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(d);
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / dj;
        }
    }
    Ok(l)
}

/// Cholesky with jitter escalation: retry with `1e-10 * trace / n` added to
/// the diagonal, doubling at most three times, before giving up.
pub fn cholesky_jittered(a: &Array2<f64>, context: &'static str) -> Result<Array2<f64>> {
    if let Ok(l) = cholesky(a) {
        return Ok(l);
    }
    let n = a.nrows();
    let trace: f64 = (0..n).map(|i| a[(i, i)]).sum();
    let mut jitter = 1e-10 * trace.abs().max(f64::MIN_POSITIVE) / n as f64;
    let mut last_pivot = f64::NAN;
    for _ in 0..4 {
        let mut aj = a.clone();
        for i in 0..n {
            aj[(i, i)] += jitter;
        }
        match cholesky(&aj) {
            Ok(l) => return Ok(l),
            Err(p) => last_pivot = p,
        }
        jitter *= 2.0;
    }
    Err(Error::IllConditioned {
        context,
        min_eigenvalue: last_pivot,
        iteration: None,
    })
}

/// Solve L x = b by forward substitution.
pub fn solve_lower(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solve L^T x = b by backward substitution, with L lower triangular.
pub fn solve_lower_transpose(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solve (L L^T) x = b given the Cholesky factor L.
pub fn cholesky_solve(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let y = solve_lower(l, b);
    solve_lower_transpose(l, &y)
}
