//! Scoring: windowed precision/recall for detected change points and
//! recovery errors for the mixing matrix, sources and noise variances.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Windowed precision and recall.
///
/// An estimate can match at most one true location (and vice versa) and
/// only within distance `w`; the match count is that of a maximum
/// bipartite matching, so neither side is penalized by an unlucky pairing
/// order. Empty estimates give precision 1, empty truth gives recall 1.
pub fn precision_recall(truth: &[usize], est: &[usize], w: usize) -> (f64, f64) {
    let matches = max_matching(truth, est, w);
    let precision = if est.is_empty() {
        1.0
    } else {
        matches as f64 / est.len() as f64
    };
    let recall = if truth.is_empty() {
        1.0
    } else {
        matches as f64 / truth.len() as f64
    };
    (precision, recall)
}

/// Maximum bipartite matching size between two location lists with edges
/// |t - e| <= w, by augmenting paths.
fn max_matching(truth: &[usize], est: &[usize], w: usize) -> usize {
    let edge = |t: usize, e: usize| truth[t].abs_diff(est[e]) <= w;
    let mut match_of_est: Vec<Option<usize>> = vec![None; est.len()];

    fn augment(
        t: usize,
        truth: &[usize],
        est: &[usize],
        w: usize,
        visited: &mut [bool],
        match_of_est: &mut [Option<usize>],
    ) -> bool {
        for e in 0..est.len() {
            if truth[t].abs_diff(est[e]) <= w && !visited[e] {
                visited[e] = true;
                let free = match match_of_est[e] {
                    None => true,
                    Some(t2) => augment(t2, truth, est, w, visited, match_of_est),
                };
                if free {
                    match_of_est[e] = Some(t);
                    return true;
                }
            }
        }
        false
    }

    let mut count = 0;
    for t in 0..truth.len() {
        if !(0..est.len()).any(|e| edge(t, e)) {
            continue;
        }
        let mut visited = vec![false; est.len()];
        if augment(t, truth, est, w, &mut visited, &mut match_of_est) {
            count += 1;
        }
    }
    count
}

/// Mixing-matrix recovery error: rows of both matrices are centered and
/// scaled to unit norm, then the trace of `M M^T - Mhat Mhat^T` is
/// averaged over P^2. Supports differing column counts. The printed form
/// is a trace of a difference, so the value can be negative.
pub fn epsilon_m(m: &Array2<f64>, m_hat: &Array2<f64>) -> Result<f64> {
    let p = m.nrows();
    if m_hat.nrows() != p {
        return Err(Error::ShapeMismatch(format!(
            "row counts differ: {} vs {}",
            p,
            m_hat.nrows()
        )));
    }
    let a = standardize_rows(m);
    let b = standardize_rows(m_hat);
    // Tr(A A^T) is the squared Frobenius norm.
    let ta: f64 = a.iter().map(|x| x * x).sum();
    let tb: f64 = b.iter().map(|x| x * x).sum();
    Ok((ta - tb) / (p * p) as f64)
}

/// Center each row; scale to unit Euclidean norm unless the row has
/// (numerically) zero variance, in which case it is left centered only.
fn standardize_rows(m: &Array2<f64>) -> Array2<f64> {
    let (p, k) = m.dim();
    let mut out = m.clone();
    for i in 0..p {
        let mean = out.row(i).sum() / k as f64;
        let mut max_abs = 0.0_f64;
        for j in 0..k {
            out[(i, j)] -= mean;
            max_abs = max_abs.max(m[(i, j)].abs());
        }
        let norm: f64 = out.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 * max_abs.max(1e-300) {
            for j in 0..k {
                out[(i, j)] /= norm;
            }
        }
    }
    out
}

/// Source recovery error: greedy pairing of true rows with estimated rows
/// by descending |Pearson correlation| without replacement, averaging
/// 1 - |rho| over the true rows. Requires at least as many estimated rows
/// as true rows. Constant rows correlate as zero by convention.
pub fn epsilon_s(s: &Array2<f64>, s_hat: &Array2<f64>) -> Result<f64> {
    let (r, n) = s.dim();
    let (k, n2) = s_hat.dim();
    if n != n2 {
        return Err(Error::ShapeMismatch(format!("lengths differ: {n} vs {n2}")));
    }
    if k < r {
        return Err(Error::InvalidArgument(format!(
            "need at least r={r} estimated sources, got {k}"
        )));
    }
    let mut corr = Array2::zeros((r, k));
    for i in 0..r {
        for j in 0..k {
            corr[(i, j)] = pearson(
                s.row(i).as_slice().unwrap(),
                s_hat.row(j).as_slice().unwrap(),
            );
        }
    }
    let mut used_true = vec![false; r];
    let mut used_est = vec![false; k];
    let mut total = 0.0;
    for _ in 0..r {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for i in 0..r {
            if used_true[i] {
                continue;
            }
            for j in 0..k {
                if used_est[j] {
                    continue;
                }
                if corr[(i, j)].abs() > best.2 {
                    best = (i, j, corr[(i, j)].abs());
                }
            }
        }
        used_true[best.0] = true;
        used_est[best.1] = true;
        total += 1.0 - best.2;
    }
    Ok(total / r as f64)
}

/// Pearson correlation with the zero-by-convention rule for constant
/// sequences.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let dx = x - ma;
        let dy = y - mb;
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    let scale_a = a
        .iter()
        .fold(0.0_f64, |acc, x| acc.max(x.abs()))
        .max(1e-300);
    let scale_b = b
        .iter()
        .fold(0.0_f64, |acc, x| acc.max(x.abs()))
        .max(1e-300);
    if va.sqrt() <= 1e-12 * scale_a || vb.sqrt() <= 1e-12 * scale_b {
        return 0.0;
    }
    cov / (va.sqrt() * vb.sqrt())
}

/// Noise recovery error: mean squared difference of the variance vectors.
pub fn epsilon_e(psi: &Array1<f64>, psi_hat: &Array1<f64>) -> Result<f64> {
    if psi.len() != psi_hat.len() {
        return Err(Error::ShapeMismatch(format!(
            "lengths differ: {} vs {}",
            psi.len(),
            psi_hat.len()
        )));
    }
    let p = psi.len() as f64;
    Ok(psi
        .iter()
        .zip(psi_hat.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / p)
}
