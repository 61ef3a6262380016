//! Naive dense oracles for the full conditionals.
//!
//! Everything here is computed the slow way on purpose: difference
//! operators are materialized and inverted numerically, conditional
//! parameters come from the printed formulas with explicit summation,
//! and linear systems are solved by Gauss-Jordan elimination. None of
//! the production shortcuts (cumulative sums, suffix sums, Cholesky
//! reuse) appear here.

#![allow(dead_code)]

use abacus::{ChangeKind, Mode, ModelState, ObservationMatrix, ShrinkageSet};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn test_rng(seed: u64) -> ChaCha8Rng {
    abacus::rng::derive_rng(seed, 0xFEED)
}

/// The dense difference operator D^(d): the identity for additive
/// outliers, the first-difference matrix for level shifts.
pub fn dense_diff_matrix(kind: ChangeKind, n: usize) -> Array2<f64> {
    let mut d = Array2::eye(n);
    if kind == ChangeKind::LevelShift {
        for i in 1..n {
            d[(i, i - 1)] = -1.0;
        }
    }
    d
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(a: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let mut aug = Array2::zeros((n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            aug[(i, j)] = a[(i, j)];
        }
        aug[(i, n + i)] = 1.0;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                aug[(i, col)]
                    .abs()
                    .partial_cmp(&aug[(j, col)].abs())
                    .unwrap()
            })
            .unwrap();
        if pivot != col {
            for j in 0..2 * n {
                let tmp = aug[(col, j)];
                aug[(col, j)] = aug[(pivot, j)];
                aug[(pivot, j)] = tmp;
            }
        }
        let diag = aug[(col, col)];
        assert!(diag.abs() > 1e-300, "singular matrix in oracle inverse");
        for j in 0..2 * n {
            aug[(col, j)] /= diag;
        }
        for i in 0..n {
            if i != col {
                let f = aug[(i, col)];
                for j in 0..2 * n {
                    aug[(i, j)] -= f * aug[(col, j)];
                }
            }
        }
    }
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = aug[(i, n + j)];
        }
    }
    out
}

/// Solve A x = b through the dense inverse.
pub fn solve(a: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    invert(a).dot(b)
}

/// S built densely: V^(0) [D^(0)]^-T + V^(1) [D^(1)]^-T with numeric
/// inverses (partial mode drops the V^(0) term).
pub fn dense_sources(state: &ModelState) -> Array2<f64> {
    let n = state.n();
    let d1_inv_t = invert(&dense_diff_matrix(ChangeKind::LevelShift, n))
        .t()
        .to_owned();
    let mut s = state.v1.dot(&d1_inv_t);
    if state.mode == Mode::Full {
        let d0_inv_t = invert(&dense_diff_matrix(ChangeKind::AdditiveOutlier, n))
            .t()
            .to_owned();
        s = s + state.v0.dot(&d0_inv_t);
    }
    s
}

/// F and the per-row conditional means of the mixing matrix.
pub fn oracle_mixing(state: &ModelState, y: &ObservationMatrix) -> (Array2<f64>, Array2<f64>) {
    let s = dense_sources(state);
    let (p, k) = state.m.dim();
    let mut f = Array2::zeros((k, k));
    for a in 0..k {
        for b in 0..k {
            for t in 0..state.n() {
                f[(a, b)] += s[(a, t)] * s[(b, t)];
            }
        }
    }
    for h in 0..k {
        let prior = match state.mode {
            Mode::Full => {
                state.shrink0.tau
                    * state.shrink1.tau
                    * state.shrink0.lambda[h]
                    * state.shrink1.lambda[h]
            }
            Mode::Partial => state.shrink1.tau * state.shrink1.lambda[h],
        };
        f[(h, h)] += 1.0 / prior;
    }
    let mut means = Array2::zeros((p, k));
    for i in 0..p {
        let mut sy = Array1::zeros(k);
        for h in 0..k {
            for t in 0..state.n() {
                sy[h] += s[(h, t)] * y.values()[(i, t)];
            }
        }
        means.row_mut(i).assign(&solve(&f, &sy));
    }
    (f, means)
}

/// Inverse-gamma parameters of each noise variance.
pub fn oracle_noise(state: &ModelState, y: &ObservationMatrix) -> Vec<(f64, f64)> {
    let s = dense_sources(state);
    let (p, n) = y.values().dim();
    (0..p)
        .map(|i| {
            let mut sumsq = 0.0;
            for t in 0..n {
                let mut fit = 0.0;
                for h in 0..state.k() {
                    fit += state.m[(i, h)] * s[(h, t)];
                }
                let r = y.values()[(i, t)] - fit;
                sumsq += r * r;
            }
            (1.0 + n as f64 / 2.0, 1.0 + 0.5 * sumsq)
        })
        .collect()
}

/// B^(n) and the conditional mean of V^(d)_{.n}, built from the printed
/// formulas with the materialized difference operator (n is 1-based).
pub fn oracle_v_column(
    state: &ModelState,
    y: &ObservationMatrix,
    kind: ChangeKind,
    n: usize,
) -> (Array2<f64>, Array1<f64>) {
    let n_cols = state.n();
    let (p, k) = state.m.dim();
    let d_inv = invert(&dense_diff_matrix(kind, n_cols));
    let shrink = match kind {
        ChangeKind::AdditiveOutlier => &state.shrink0,
        ChangeKind::LevelShift => &state.shrink1,
    };
    let v = match kind {
        ChangeKind::AdditiveOutlier => &state.v0,
        ChangeKind::LevelShift => &state.v1,
    };
    // The quadratic form [D]^-T_{n.} [D]^-1_{.n} from the numeric inverse.
    let mut quad = 0.0;
    for t in 0..n_cols {
        quad += d_inv[(t, n - 1)] * d_inv[(t, n - 1)];
    }
    let mut b = Array2::zeros((k, k));
    for a in 0..k {
        for c in 0..k {
            let mut g = 0.0;
            for i in 0..p {
                g += state.m[(i, a)] * state.m[(i, c)] / state.psi[i];
            }
            b[(a, c)] = g * quad;
        }
    }
    for h in 0..k {
        b[(h, h)] +=
            1.0 / (shrink.phi[n - 1] * shrink.lambda[h] * shrink.gamma[(h, n - 1)] * shrink.tau);
    }
    // C^(n) = Y - M S + M V_{.n} [D]^-T_{n.}.
    let s = dense_sources(state);
    let mut c_mat = y.values() - &state.m.dot(&s);
    for i in 0..p {
        let mut mv = 0.0;
        for h in 0..k {
            mv += state.m[(i, h)] * v[(h, n - 1)];
        }
        for t in 0..n_cols {
            c_mat[(i, t)] += mv * d_inv[(t, n - 1)];
        }
    }
    // rhs = M^T Psi^-1 C^(n) [D]^-1_{.n}.
    let mut rhs = Array1::zeros(k);
    for h in 0..k {
        for i in 0..p {
            let mut cd = 0.0;
            for t in 0..n_cols {
                cd += c_mat[(i, t)] * d_inv[(t, n - 1)];
            }
            rhs[h] += state.m[(i, h)] * cd / state.psi[i];
        }
    }
    let mean = solve(&b, &rhs);
    (b, mean)
}

fn other_factor(state: &ModelState, kind: ChangeKind, h: usize) -> f64 {
    match state.mode {
        Mode::Partial => 1.0,
        Mode::Full => {
            let other = match kind {
                ChangeKind::AdditiveOutlier => &state.shrink1,
                ChangeKind::LevelShift => &state.shrink0,
            };
            other.lambda[h] * other.tau
        }
    }
}

/// Inverse-gamma parameters of tau^(d) by direct summation.
pub fn oracle_tau(state: &ModelState, kind: ChangeKind) -> (f64, f64) {
    let (p, k, n) = (state.p(), state.k(), state.n());
    let shrink = state.shrink(kind);
    let v = state.v(kind);
    let mut g = 0.0;
    for i in 0..p {
        for h in 0..k {
            g += state.m[(i, h)] * state.m[(i, h)]
                / (2.0 * shrink.lambda[h] * other_factor(state, kind, h) * state.psi[i]);
        }
    }
    for t in 0..n {
        for h in 0..k {
            g += v[(h, t)] * v[(h, t)]
                / (2.0 * shrink.phi[t] * shrink.lambda[h] * shrink.gamma[(h, t)]);
        }
    }
    ((1.0 + (k * (p + n)) as f64) / 2.0, 1.0 / shrink.xi + g)
}

/// Inverse-gamma parameters of lambda^(d)_h (h is 0-based).
pub fn oracle_lambda(state: &ModelState, kind: ChangeKind, h: usize) -> (f64, f64) {
    let (p, n) = (state.p(), state.n());
    let shrink = state.shrink(kind);
    let v = state.v(kind);
    let mut sum = 0.0;
    for i in 0..p {
        sum += state.m[(i, h)] * state.m[(i, h)]
            / (2.0 * shrink.tau * other_factor(state, kind, h) * state.psi[i]);
    }
    for t in 0..n {
        sum += v[(h, t)] * v[(h, t)] / (2.0 * shrink.phi[t] * shrink.gamma[(h, t)] * shrink.tau);
    }
    ((1.0 + (p + n) as f64) / 2.0, 1.0 / shrink.eta[h] + sum)
}

/// Inverse-gamma parameters of phi^(d)_n (n is 1-based).
pub fn oracle_phi(state: &ModelState, kind: ChangeKind, n: usize) -> (f64, f64) {
    let shrink = state.shrink(kind);
    let v = state.v(kind);
    let k = state.k();
    let mut sum = 0.0;
    for h in 0..k {
        sum += v[(h, n - 1)] * v[(h, n - 1)]
            / (2.0 * shrink.lambda[h] * shrink.gamma[(h, n - 1)] * shrink.tau);
    }
    ((1.0 + k as f64) / 2.0, 1.0 / shrink.omega[n - 1] + sum)
}

/// Inverse-gamma parameters of gamma^(d)_hn (h 0-based, n 1-based).
pub fn oracle_gamma(state: &ModelState, kind: ChangeKind, h: usize, n: usize) -> (f64, f64) {
    let shrink = state.shrink(kind);
    let v = state.v(kind)[(h, n - 1)];
    (
        1.0,
        1.0 / shrink.zeta[(h, n - 1)]
            + v * v / (2.0 * shrink.lambda[h] * shrink.phi[n - 1] * shrink.tau),
    )
}

/// A state with every parameter drawn from moderate ranges; valid in
/// either mode.
pub fn random_state(p: usize, k: usize, n: usize, mode: Mode, rng: &mut ChaCha8Rng) -> ModelState {
    let mut state = ModelState {
        m: Array2::zeros((p, k)),
        v0: Array2::zeros((k, n)),
        v1: Array2::zeros((k, n)),
        psi: Array1::ones(p),
        shrink0: ShrinkageSet::inert(k, n),
        shrink1: ShrinkageSet::inert(k, n),
        mode,
    };
    for x in state.m.iter_mut() {
        *x = rng.random::<f64>() * 2.0 - 1.0;
    }
    for x in state.v1.iter_mut() {
        *x = rng.random::<f64>() * 2.0 - 1.0;
    }
    if mode == Mode::Full {
        for x in state.v0.iter_mut() {
            *x = rng.random::<f64>() * 2.0 - 1.0;
        }
    }
    for x in state.psi.iter_mut() {
        *x = 0.2 + rng.random::<f64>() * 2.0;
    }
    let mut fill = |s: &mut ShrinkageSet| {
        s.tau = 0.2 + rng.random::<f64>();
        s.xi = 0.2 + rng.random::<f64>();
        for v in s
            .lambda
            .iter_mut()
            .chain(s.eta.iter_mut())
            .chain(s.phi.iter_mut())
            .chain(s.omega.iter_mut())
            .chain(s.gamma.iter_mut())
            .chain(s.zeta.iter_mut())
        {
            *v = 0.2 + rng.random::<f64>();
        }
    };
    fill(&mut state.shrink1);
    if mode == Mode::Full {
        fill(&mut state.shrink0);
    }
    state.validate().unwrap();
    state
}

pub fn random_obs(p: usize, n: usize, rng: &mut ChaCha8Rng) -> ObservationMatrix {
    let mut y = Array2::zeros((p, n));
    for x in y.iter_mut() {
        *x = rng.random::<f64>() * 4.0 - 2.0;
    }
    ObservationMatrix::new(y).unwrap()
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    let scale = a.abs().max(b.abs()).max(1.0);
    assert!(
        (a - b).abs() <= tol * scale,
        "{what}: {a} vs {b} (tol {tol})"
    );
}
