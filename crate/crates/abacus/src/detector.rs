//! From posterior draws to change locations.
//!
//! Per draw, the largest-magnitude entry of each `V^(d)` column is the
//! change signal `f^(d)_n`; its posterior median `g^(d)_n` is thresholded
//! by a cutoff placed at the first near-zero minimum of a rectangular
//! kernel density over `|g|`. The partial model's mixed detections are
//! split into the two change types by the consecutive-opposite-signs
//! rule, and level shifts can optionally be pruned by dynamic
//! programming over the recovered sources.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::{median_in_place, ChangeKind, PosteriorDraws};

/// Default density threshold for the cutoff search.
pub const DEFAULT_DELTA: f64 = 1e-10;

/// Number of grid points for the kernel density scan.
const KDE_GRID: usize = 512;

/// A density valley only counts as the null/signal boundary when the
/// magnitudes it separates differ by at least this factor. Shrunk-to-zero
/// and genuine values must be clearly apart; the sparse upper tail of a
/// pure-null magnitude blob also leaves empty-density gaps, but only with
/// ratios close to one.
const MIN_SEPARATION_RATIO: f64 = 3.0;

/// Posterior change-magnitude series for one change type.
#[derive(Debug, Clone)]
pub struct GSeries {
    pub values: Vec<f64>,
    pub kind: ChangeKind,
}

/// The signed largest-magnitude entry of each column. Ties go to the
/// smallest row index.
pub fn extract_f(v: &Array2<f64>) -> Vec<f64> {
    let (k, n) = v.dim();
    debug_assert!(k >= 1);
    (0..n)
        .map(|t| {
            let mut best = v[(0, t)];
            for h in 1..k {
                if v[(h, t)].abs() > best.abs() {
                    best = v[(h, t)];
                }
            }
            best
        })
        .collect()
}

/// Per-index median over draws of `extract_f` applied to V^(d).
pub fn posterior_g(draws: &PosteriorDraws, kind: ChangeKind) -> Result<GSeries> {
    if draws.is_empty() {
        return Err(Error::EmptyInput("no posterior draws".into()));
    }
    let per_draw: Vec<Vec<f64>> = draws.iter().map(|d| extract_f(d.v(kind))).collect();
    let n = per_draw[0].len();
    let mut values = Vec::with_capacity(n);
    let mut buf = Vec::with_capacity(per_draw.len());
    for t in 0..n {
        buf.clear();
        buf.extend(per_draw.iter().map(|f| f[t]));
        values.push(median_in_place(&mut buf));
    }
    Ok(GSeries { values, kind })
}

/// Rule-of-thumb rectangular-kernel bandwidth over `|g|`, floored so a
/// degenerate spread cannot collapse it to zero.
fn bandwidth(abs: &[f64]) -> f64 {
    let n = abs.len() as f64;
    let mean = abs.iter().sum::<f64>() / n;
    let var = abs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    let mut sorted = abs.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let iqr = quantile_type7(&sorted, 0.75) - quantile_type7(&sorted, 0.25);
    let spread = sd.min(iqr / 1.34);
    (0.9 * spread * n.powf(-0.2)).max(1e-12)
}

/// Linear-interpolation quantile of a sorted slice.
fn quantile_type7(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Cutoff between shrunk-to-zero and genuine change magnitudes.
///
/// Evaluates the rectangular-kernel density of `|g|` on a uniform
/// 512-point grid over `[0, max|g|]` and returns the abscissa of the
/// first interior density minimum below `delta`, scanning left to right.
/// A minimum here is a maximal flat run strictly below both of its
/// neighbors (rectangular kernels produce exactly-flat valleys, so a
/// strictly-lower single point is just the width-one case).
///
/// A minimum additionally qualifies only when the magnitudes on its two
/// sides are at least [`MIN_SEPARATION_RATIO`] apart, so the thin upper
/// tail of an all-null series cannot pass as a boundary. Returns +inf
/// when no minimum qualifies, meaning no detections of this type.
pub fn kde_cutoff(g: &GSeries, delta: f64) -> f64 {
    let n = g.values.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let abs: Vec<f64> = g.values.iter().map(|v| v.abs()).collect();
    let max = abs.iter().cloned().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return f64::INFINITY;
    }
    let step = max / (KDE_GRID - 1) as f64;
    // Floor the bandwidth at one grid step so every observation touches
    // at least one grid point; otherwise a lone large magnitude can fall
    // between grid points and leave the valley below it without the
    // ascent that marks a minimum.
    let h = bandwidth(&abs).max(step);
    let norm = 1.0 / (2.0 * n as f64 * h);
    let density: Vec<f64> = (0..KDE_GRID)
        .map(|j| {
            let x = j as f64 * step;
            let count = abs.iter().filter(|&&a| (a - x).abs() <= h).count();
            count as f64 * norm
        })
        .collect();
    let separation_ok = |cutoff: f64| -> bool {
        let below = abs
            .iter()
            .filter(|&&a| a <= cutoff)
            .cloned()
            .fold(0.0_f64, f64::max);
        let above = abs
            .iter()
            .filter(|&&a| a > cutoff)
            .cloned()
            .fold(f64::INFINITY, f64::min);
        above >= MIN_SEPARATION_RATIO * below
    };
    // Scan for descent-plateau-ascent patterns; the plateau must sit
    // strictly below the level it descended from and the level it rises
    // to, and its first grid point is the reported cutoff.
    let mut plateau_start: Option<usize> = None;
    for j in 1..KDE_GRID {
        if density[j] < density[j - 1] {
            plateau_start = Some(j);
        } else if density[j] > density[j - 1] {
            if let Some(a) = plateau_start {
                let cutoff = a as f64 * step;
                if density[a] < delta && separation_ok(cutoff) {
                    return cutoff;
                }
                plateau_start = None;
            }
        }
    }
    f64::INFINITY
}

/// Indices (1-based) whose magnitude exceeds the cutoff.
pub fn detect_changes(g: &GSeries, cutoff: f64) -> Vec<usize> {
    g.values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > cutoff)
        .map(|(i, _)| i + 1)
        .collect()
}

/// Split mixed detections into additive outliers and level shifts.
///
/// Two consecutive indices whose `g` values have opposite signs are one
/// additive outlier at the first index (both are consumed); every other
/// index, including a final unpaired one, is a level shift.
pub fn separate_ao_ls(g: &GSeries, cpt: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    if !cpt.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(
            "change indices must be sorted ascending".into(),
        ));
    }
    if let Some(&last) = cpt.last() {
        if last > g.values.len() || cpt[0] < 1 {
            return Err(Error::InvalidArgument(
                "change index outside the series".into(),
            ));
        }
    }
    let mut cpt0 = Vec::new();
    let mut cpt1 = Vec::new();
    let mut i = 0;
    while i < cpt.len() {
        let consecutive = i + 1 < cpt.len() && cpt[i + 1] - cpt[i] == 1;
        let opposite = consecutive && g.values[cpt[i] - 1] * g.values[cpt[i + 1] - 1] < 0.0;
        if consecutive && opposite {
            cpt0.push(cpt[i]);
            i += 2;
        } else {
            cpt1.push(cpt[i]);
            i += 1;
        }
    }
    Ok((cpt0, cpt1))
}

/// Prune level-shift candidates by dynamic programming.
///
/// For each budget m the DP selects the m candidates minimizing the total
/// within-segment squared error of the rows of `s_hat`, and the returned
/// subset is the one at the elbow of the error-versus-m curve (the
/// largest second difference of the error curve, with the gain beyond
/// the last candidate taken as zero). `max_keep` overrides the elbow.
pub fn prune_ls_dp(s_hat: &Array2<f64>, cpt1: &[usize], max_keep: Option<usize>) -> Vec<usize> {
    let q = cpt1.len();
    if q == 0 {
        return Vec::new();
    }
    debug_assert!(cpt1.windows(2).all(|w| w[0] < w[1]));
    let (_, n) = s_hat.dim();
    let errors_by_budget = segmentation_errors(s_hat, cpt1, n);
    let chosen_m = match max_keep {
        Some(m) => m.min(q),
        None => {
            // Gains below rounding noise in the prefix-sum costs do not
            // count; the noise scale is set by the total sum of squares.
            let noise_floor = 1e-12 * (1.0 + s_hat.iter().map(|x| x * x).sum::<f64>());
            elbow_budget(&errors_by_budget.costs, noise_floor)
        }
    };
    errors_by_budget.subsets[chosen_m].clone()
}

struct BudgetTable {
    /// costs[m]: optimal total squared error with exactly m selected.
    costs: Vec<f64>,
    /// subsets[m]: the selected candidate indices (1-based positions).
    subsets: Vec<Vec<usize>>,
}

/// Optimal segmentations over the candidate breakpoints for every budget.
fn segmentation_errors(s_hat: &Array2<f64>, cands: &[usize], n: usize) -> BudgetTable {
    let q = cands.len();
    // Prefix sums per row for O(1) segment costs.
    let (k, _) = s_hat.dim();
    let mut sum = vec![vec![0.0; n + 1]; k];
    let mut sumsq = vec![vec![0.0; n + 1]; k];
    for h in 0..k {
        for t in 0..n {
            sum[h][t + 1] = sum[h][t] + s_hat[(h, t)];
            sumsq[h][t + 1] = sumsq[h][t] + s_hat[(h, t)] * s_hat[(h, t)];
        }
    }
    // Squared error of columns a..=b (1-based, inclusive) around the
    // per-row segment means; empty segments cost zero.
    let seg_cost = |a: usize, b: usize| -> f64 {
        if a > b {
            return 0.0;
        }
        let len = (b - a + 1) as f64;
        (0..k)
            .map(|h| {
                let s = sum[h][b] - sum[h][a - 1];
                let ss = sumsq[h][b] - sumsq[h][a - 1];
                ss - s * s / len
            })
            .sum()
    };

    // dp[j][m]: best cost of columns 1..cands[j]-1 with m breakpoints
    // selected, the last one at cands[j].
    let mut dp = vec![vec![f64::INFINITY; q + 1]; q];
    let mut prev = vec![vec![usize::MAX; q + 1]; q];
    for j in 0..q {
        dp[j][1] = seg_cost(1, cands[j] - 1);
        for m in 2..=j + 1 {
            for jp in 0..j {
                let c = dp[jp][m - 1] + seg_cost(cands[jp], cands[j] - 1);
                if c < dp[j][m] {
                    dp[j][m] = c;
                    prev[j][m] = jp;
                }
            }
        }
    }
    let mut costs = vec![0.0; q + 1];
    let mut subsets = vec![Vec::new(); q + 1];
    costs[0] = seg_cost(1, n);
    for m in 1..=q {
        let mut best = f64::INFINITY;
        let mut best_j = usize::MAX;
        for j in 0..q {
            if dp[j][m].is_finite() {
                let c = dp[j][m] + seg_cost(cands[j], n);
                if c < best {
                    best = c;
                    best_j = j;
                }
            }
        }
        costs[m] = best;
        let mut picks = Vec::with_capacity(m);
        let mut j = best_j;
        let mut mm = m;
        while j != usize::MAX {
            picks.push(cands[j]);
            j = prev[j][mm];
            mm -= 1;
        }
        picks.reverse();
        subsets[m] = picks;
    }
    BudgetTable { costs, subsets }
}

/// Budget at the largest second difference of the error curve. Gains at
/// or below `noise_floor` are dropped first; if nothing remains the
/// elbow is m = 0.
fn elbow_budget(costs: &[f64], noise_floor: f64) -> usize {
    let q = costs.len() - 1;
    if q == 0 {
        return 0;
    }
    let gain = |m: usize| -> f64 {
        let g = costs[m - 1] - costs[m];
        if g <= noise_floor {
            0.0
        } else {
            g
        }
    };
    if (1..=q).all(|m| gain(m) == 0.0) {
        return 0;
    }
    let mut best_m = 1;
    let mut best = f64::NEG_INFINITY;
    for m in 1..=q {
        let next = if m == q { 0.0 } else { gain(m + 1) };
        let second_diff = gain(m) - next;
        if second_diff > best {
            best = second_diff;
            best_m = m;
        }
    }
    best_m
}
