//! Full-conditional updates and Gibbs sweeps.
//!
//! Each parameter block has a function that assembles its conditional
//! parameters and a companion `update_*` that draws from it and writes
//! the result into the state. [`gibbs_sweep`] composes the updates in
//! the fixed order of [`sweep_plan`]; [`run_chain`] iterates sweeps and
//! collects post-burn-in draws.
//!
//! Everywhere the inverse difference operator appears it is replaced by
//! cumulative-sum identities: the quadratic form `[D]^-T_{n.} [D]^-1_{.n}`
//! is the scalar N - n + 1 (or 1 for the identity), and the data vector
//! `C^(n) [D]^-1_{.n}` is a suffix sum of residual columns.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_jittered, cholesky_solve, solve_lower_transpose};
use crate::model::{
    compose_sources, init_state, ChangeKind, Mode, ModelState, ObservationMatrix, PosteriorDraws,
};
use crate::rng::{derive_rng, streams};

/// Numerical rails for inverse-gamma draws. Wide enough that no draw a
/// simulation can plausibly produce is affected, tight enough that
/// reciprocals and four-factor products stay finite.
const INV_GAMMA_MIN: f64 = 1e-100;
const INV_GAMMA_MAX: f64 = 1e100;

/// Draw from InverseGamma(shape, scale): `scale / Gamma(shape, 1)`.
pub fn draw_inv_gamma(shape: f64, scale: f64, rng: &mut impl Rng) -> f64 {
    debug_assert!(shape > 0.0 && scale > 0.0, "inverse-gamma parameters");
    let gamma = Gamma::new(shape, 1.0).expect("valid gamma shape");
    loop {
        let g: f64 = gamma.sample(rng);
        let x = scale / g;
        if x.is_finite() && x > 0.0 {
            return x.clamp(INV_GAMMA_MIN, INV_GAMMA_MAX);
        }
    }
}

/// Shape/scale pair of an inverse-gamma full conditional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvGammaParams {
    pub shape: f64,
    pub scale: f64,
}

impl InvGammaParams {
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        draw_inv_gamma(self.shape, self.scale, rng)
    }
}

/// Mean and precision of a multivariate Gaussian full conditional.
#[derive(Debug, Clone)]
pub struct GaussianConditional {
    pub mean: Array1<f64>,
    pub precision: Array2<f64>,
}

/// Conditional for all mixing-matrix rows: row i is Gaussian with mean
/// `means` row i and covariance `psi_i * precision^-1`.
#[derive(Debug, Clone)]
pub struct MixingConditional {
    /// The matrix F shared by every row.
    pub precision: Array2<f64>,
    /// Per-row conditional means, P x K.
    pub means: Array2<f64>,
}

/// The shared expressions of the shrinkage conditionals: F plus the
/// global and row sums G and H for each change type. For a partial-mode
/// state the additive-outlier entries are zero.
#[derive(Debug, Clone)]
pub struct CommonTerms {
    pub f: Array2<f64>,
    pub g: [f64; 2],
    pub h: [Array1<f64>; 2],
}

pub fn common_terms(state: &ModelState) -> CommonTerms {
    let k = state.k();
    let mut g = [0.0; 2];
    let mut h = [Array1::zeros(k), Array1::zeros(k)];
    for kind in ChangeKind::BOTH {
        if state.mode == Mode::Partial && kind == ChangeKind::AdditiveOutlier {
            continue;
        }
        g[kind.index()] = global_sum(state, kind);
        for (row, slot) in h[kind.index()].iter_mut().enumerate() {
            *slot = row_sum(state, kind, row);
        }
    }
    CommonTerms {
        f: mixing_precision(state, &compose_sources(state)),
        g,
        h,
    }
}

/// Prior variance multiplier of M column h (the part shared by all rows;
/// the full per-entry variance is this times psi_i).
fn mixing_prior_product(state: &ModelState, h: usize) -> f64 {
    match state.mode {
        Mode::Full => {
            state.shrink0.lambda[h]
                * state.shrink1.lambda[h]
                * state.shrink0.tau
                * state.shrink1.tau
        }
        Mode::Partial => state.shrink1.lambda[h] * state.shrink1.tau,
    }
}

/// F = S S^T + diag(mixing prior products)^-1.
fn mixing_precision(state: &ModelState, sources: &Array2<f64>) -> Array2<f64> {
    let k = state.k();
    let mut f = sources.dot(&sources.t());
    for h in 0..k {
        f[(h, h)] += 1.0 / mixing_prior_product(state, h);
    }
    f
}

/// Sum over channels of M_ih^2 / psi_i for each column h.
fn m_column_weighted_sumsq(state: &ModelState) -> Array1<f64> {
    let (p, k) = state.m.dim();
    let mut out = Array1::zeros(k);
    for i in 0..p {
        let w = 1.0 / state.psi[i];
        for h in 0..k {
            out[h] += state.m[(i, h)] * state.m[(i, h)] * w;
        }
    }
    out
}

/// The factor of the M prior variance that is neither the global scale
/// nor the row scale of `kind`: the other hierarchy's lambda_h * tau in
/// full mode, 1 in partial mode.
fn other_hierarchy_factor(state: &ModelState, kind: ChangeKind, h: usize) -> f64 {
    match state.mode {
        Mode::Full => {
            let other = match kind {
                ChangeKind::AdditiveOutlier => &state.shrink1,
                ChangeKind::LevelShift => &state.shrink0,
            };
            other.lambda[h] * other.tau
        }
        Mode::Partial => 1.0,
    }
}

/// G^(d): the tau conditional's data sum.
fn global_sum(state: &ModelState, kind: ChangeKind) -> f64 {
    let shrink = state.shrink(kind);
    let v = state.v(kind);
    let (k, n) = v.dim();
    let m_sumsq = m_column_weighted_sumsq(state);
    let mut g = 0.0;
    for h in 0..k {
        g += m_sumsq[h] / (2.0 * shrink.lambda[h] * other_hierarchy_factor(state, kind, h));
    }
    for h in 0..k {
        for t in 0..n {
            g += v[(h, t)] * v[(h, t)]
                / (2.0 * shrink.phi[t] * shrink.lambda[h] * shrink.gamma[(h, t)]);
        }
    }
    g
}

/// H^(d)_h: the lambda_h conditional's data sum.
fn row_sum(state: &ModelState, kind: ChangeKind, h: usize) -> f64 {
    let shrink = state.shrink(kind);
    let v = state.v(kind);
    let n = v.ncols();
    let p = state.p();
    let mut m_sumsq = 0.0;
    for i in 0..p {
        m_sumsq += state.m[(i, h)] * state.m[(i, h)] / state.psi[i];
    }
    let mut s = m_sumsq / (2.0 * shrink.tau * other_hierarchy_factor(state, kind, h));
    for t in 0..n {
        s += v[(h, t)] * v[(h, t)] / (2.0 * shrink.phi[t] * shrink.gamma[(h, t)] * shrink.tau);
    }
    s
}

/// M^T Psi^-1 M.
fn m_weighted_gram(state: &ModelState) -> Array2<f64> {
    let (p, k) = state.m.dim();
    let mut gram = Array2::zeros((k, k));
    for i in 0..p {
        let w = 1.0 / state.psi[i];
        for a in 0..k {
            let ma = state.m[(i, a)] * w;
            for b in a..k {
                gram[(a, b)] += ma * state.m[(i, b)];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    gram
}

/// Conditional parameters of every mixing-matrix row.
pub fn mixing_conditional(state: &ModelState, y: &ObservationMatrix) -> Result<MixingConditional> {
    let sources = compose_sources(state);
    let f = mixing_precision(state, &sources);
    let l = cholesky_jittered(&f, "mixing precision F")?;
    let sy = sources.dot(&y.values().t()); // K x P
    let (p, k) = state.m.dim();
    let mut means = Array2::zeros((p, k));
    for i in 0..p {
        let mean = cholesky_solve(&l, &sy.column(i).to_owned());
        means.row_mut(i).assign(&mean);
    }
    Ok(MixingConditional {
        precision: f,
        means,
    })
}

/// Redraw every row of M from its conditional. F is factorized once and
/// reused for all rows.
pub fn update_mixing(
    state: &mut ModelState,
    y: &ObservationMatrix,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let cond = mixing_conditional(state, y)?;
    let l = cholesky_jittered(&cond.precision, "mixing precision F")?;
    let (p, k) = state.m.dim();
    for i in 0..p {
        let z = standard_normal_vector(k, rng);
        let perturb = solve_lower_transpose(&l, &z);
        let sd = state.psi[i].sqrt();
        for h in 0..k {
            state.m[(i, h)] = cond.means[(i, h)] + sd * perturb[h];
        }
    }
    Ok(())
}

/// Inverse-gamma parameters of each noise variance.
pub fn noise_conditional(state: &ModelState, y: &ObservationMatrix) -> Vec<InvGammaParams> {
    let sources = compose_sources(state);
    let residual = y.values() - &state.m.dot(&sources);
    let (p, n) = residual.dim();
    (0..p)
        .map(|i| {
            let sumsq: f64 = (0..n).map(|t| residual[(i, t)] * residual[(i, t)]).sum();
            InvGammaParams {
                shape: 1.0 + n as f64 / 2.0,
                scale: 1.0 + 0.5 * sumsq,
            }
        })
        .collect()
}

/// Redraw every noise variance.
pub fn update_noise(state: &mut ModelState, y: &ObservationMatrix, rng: &mut ChaCha8Rng) {
    for (i, params) in noise_conditional(state, y).into_iter().enumerate() {
        state.psi[i] = params.sample(rng);
    }
}

/// Conditional of the column V^(d)_{.n} (n is 1-based).
///
/// The precision is `B^(n) = a_n M^T Psi^-1 M + diag(phi_n lambda
/// gamma_{.n} tau)^-1` with `a_n` the squared norm of inverse-operator
/// column n, and the mean solves `B^(n) mean = M^T Psi^-1 u` where `u`
/// is the suffix sum over columns n..N of the residual with this
/// column's own effect restored (plain column n for the identity).
pub fn v_column_conditional(
    state: &ModelState,
    y: &ObservationMatrix,
    kind: ChangeKind,
    n: usize,
) -> Result<GaussianConditional> {
    if kind == ChangeKind::AdditiveOutlier && state.mode == Mode::Partial {
        return Err(Error::InvalidArgument(
            "partial mode has no additive-outlier component".into(),
        ));
    }
    let n_cols = state.n();
    if n < 1 || n > n_cols {
        return Err(Error::InvalidArgument(format!(
            "column index {n} out of 1..={n_cols}"
        )));
    }
    let sources = compose_sources(state);
    let residual = y.values() - &state.m.dot(&sources);
    let v_old = state.v(kind).column(n - 1).to_owned();
    let scale_a = match kind {
        ChangeKind::AdditiveOutlier => 1.0,
        ChangeKind::LevelShift => (n_cols - n + 1) as f64,
    };
    let p = state.p();
    let mut u = Array1::zeros(p);
    match kind {
        ChangeKind::AdditiveOutlier => u.assign(&residual.column(n - 1)),
        ChangeKind::LevelShift => {
            for t in (n - 1)..n_cols {
                u += &residual.column(t);
            }
        }
    }
    let mv = state.m.dot(&v_old);
    u.scaled_add(scale_a, &mv);
    let (b, rhs) = column_precision_and_rhs(state, kind, n, scale_a, &u);
    let l = cholesky_jittered(&b, "V column precision B")?;
    let mean = cholesky_solve(&l, &rhs);
    Ok(GaussianConditional { mean, precision: b })
}

/// Assemble B^(n) and M^T Psi^-1 u for a column update.
fn column_precision_and_rhs(
    state: &ModelState,
    kind: ChangeKind,
    n: usize,
    scale_a: f64,
    u: &Array1<f64>,
) -> (Array2<f64>, Array1<f64>) {
    let shrink = state.shrink(kind);
    let (p, k) = state.m.dim();
    let mut b = m_weighted_gram(state);
    b.mapv_inplace(|x| x * scale_a);
    for h in 0..k {
        b[(h, h)] +=
            1.0 / (shrink.phi[n - 1] * shrink.lambda[h] * shrink.gamma[(h, n - 1)] * shrink.tau);
    }
    let mut rhs = Array1::zeros(k);
    for i in 0..p {
        let w = u[i] / state.psi[i];
        for h in 0..k {
            rhs[h] += state.m[(i, h)] * w;
        }
    }
    (b, rhs)
}

/// Redraw one column of V^(d) and refresh the derived sources.
pub fn update_v_column(
    state: &mut ModelState,
    y: &ObservationMatrix,
    kind: ChangeKind,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let cond = v_column_conditional(state, y, kind, n)?;
    let l = cholesky_jittered(&cond.precision, "V column precision B")?;
    let z = standard_normal_vector(state.k(), rng);
    let draw = &cond.mean + &solve_lower_transpose(&l, &z);
    state.v_mut(kind).column_mut(n - 1).assign(&draw);
    Ok(())
}

/// Every column of V^(d) in descending index order.
///
/// The level-shift scan maintains the suffix sum of residual columns
/// incrementally: a draw at column n shifts the true residual on all
/// columns >= n by the same -M delta, which folds into the suffix as a
/// single -a_n M delta correction while the stored residual is left
/// stale there (it is never re-read). An additive-outlier draw only
/// affects its own residual column, which no later column reads, so the
/// residual needs no maintenance at all. Either way the scan is O(N P K).
fn v_scan(
    state: &mut ModelState,
    y: &ObservationMatrix,
    kind: ChangeKind,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let sources = compose_sources(state);
    let residual = y.values() - &state.m.dot(&sources);
    let p = state.p();
    let k = state.k();
    let n_cols = state.n();
    let mut suffix = Array1::<f64>::zeros(p);
    for n in (1..=n_cols).rev() {
        let scale_a;
        let mut u;
        match kind {
            ChangeKind::LevelShift => {
                suffix += &residual.column(n - 1);
                scale_a = (n_cols - n + 1) as f64;
                u = suffix.clone();
            }
            ChangeKind::AdditiveOutlier => {
                scale_a = 1.0;
                u = residual.column(n - 1).to_owned();
            }
        }
        let v_old = state.v(kind).column(n - 1).to_owned();
        let mv = state.m.dot(&v_old);
        u.scaled_add(scale_a, &mv);
        let (b, rhs) = column_precision_and_rhs(state, kind, n, scale_a, &u);
        let l = cholesky_jittered(&b, "V column precision B")?;
        let mean = cholesky_solve(&l, &rhs);
        let z = standard_normal_vector(k, rng);
        let draw = &mean + &solve_lower_transpose(&l, &z);
        if kind == ChangeKind::LevelShift {
            let delta = &draw - &v_old;
            let mdelta = state.m.dot(&delta);
            suffix.scaled_add(-scale_a, &mdelta);
        }
        state.v_mut(kind).column_mut(n - 1).assign(&draw);
    }
    Ok(())
}

/// Conditional of the global scale tau^(d).
pub fn global_shrinkage_conditional(state: &ModelState, kind: ChangeKind) -> InvGammaParams {
    debug_assert!(
        state.mode == Mode::Full || kind == ChangeKind::LevelShift,
        "additive-outlier shrinkage is inert in partial mode"
    );
    let (p, k, n) = (state.p(), state.k(), state.n());
    InvGammaParams {
        shape: (1.0 + (k * (p + n)) as f64) / 2.0,
        scale: 1.0 / state.shrink(kind).xi + global_sum(state, kind),
    }
}

/// Conditional of a row scale lambda^(d)_h (h is 0-based).
pub fn row_shrinkage_conditional(state: &ModelState, kind: ChangeKind, h: usize) -> InvGammaParams {
    debug_assert!(state.mode == Mode::Full || kind == ChangeKind::LevelShift);
    let (p, n) = (state.p(), state.n());
    InvGammaParams {
        shape: (1.0 + (p + n) as f64) / 2.0,
        scale: 1.0 / state.shrink(kind).eta[h] + row_sum(state, kind, h),
    }
}

/// Conditional of a column scale phi^(d)_n (n is 1-based).
pub fn column_shrinkage_conditional(
    state: &ModelState,
    kind: ChangeKind,
    n: usize,
) -> InvGammaParams {
    debug_assert!(state.mode == Mode::Full || kind == ChangeKind::LevelShift);
    let shrink = state.shrink(kind);
    let v = state.v(kind);
    let k = state.k();
    let mut data = 0.0;
    for h in 0..k {
        data += v[(h, n - 1)] * v[(h, n - 1)]
            / (2.0 * shrink.lambda[h] * shrink.gamma[(h, n - 1)] * shrink.tau);
    }
    InvGammaParams {
        shape: (1.0 + k as f64) / 2.0,
        scale: 1.0 / shrink.omega[n - 1] + data,
    }
}

/// Conditional of an element scale gamma^(d)_hn (h 0-based, n 1-based).
pub fn element_shrinkage_conditional(
    state: &ModelState,
    kind: ChangeKind,
    h: usize,
    n: usize,
) -> InvGammaParams {
    debug_assert!(state.mode == Mode::Full || kind == ChangeKind::LevelShift);
    let shrink = state.shrink(kind);
    let v = state.v(kind)[(h, n - 1)];
    InvGammaParams {
        shape: 1.0,
        scale: 1.0 / shrink.zeta[(h, n - 1)]
            + v * v / (2.0 * shrink.lambda[h] * shrink.phi[n - 1] * shrink.tau),
    }
}

/// Conditional of any auxiliary given its scale: InverseGamma(1, 1 + 1/scale).
pub fn aux_conditional(scale_value: f64) -> InvGammaParams {
    InvGammaParams {
        shape: 1.0,
        scale: 1.0 + 1.0 / scale_value,
    }
}

/// Redraw tau^(d) then its auxiliary xi^(d). No-op for the inert set of
/// a partial-mode state.
pub fn update_global_shrinkage(state: &mut ModelState, kind: ChangeKind, rng: &mut ChaCha8Rng) {
    if state.mode == Mode::Partial && kind == ChangeKind::AdditiveOutlier {
        return;
    }
    let tau = global_shrinkage_conditional(state, kind).sample(rng);
    let shrink = state.shrink_mut(kind);
    shrink.tau = tau;
    shrink.xi = aux_conditional(tau).sample(rng);
}

/// Redraw every lambda^(d)_h then its auxiliary eta^(d)_h.
pub fn update_row_shrinkage(state: &mut ModelState, kind: ChangeKind, rng: &mut ChaCha8Rng) {
    if state.mode == Mode::Partial && kind == ChangeKind::AdditiveOutlier {
        return;
    }
    for h in 0..state.k() {
        let lambda = row_shrinkage_conditional(state, kind, h).sample(rng);
        let shrink = state.shrink_mut(kind);
        shrink.lambda[h] = lambda;
        shrink.eta[h] = aux_conditional(lambda).sample(rng);
    }
}

/// Redraw every phi^(d)_n then its auxiliary omega^(d)_n.
pub fn update_column_shrinkage(state: &mut ModelState, kind: ChangeKind, rng: &mut ChaCha8Rng) {
    if state.mode == Mode::Partial && kind == ChangeKind::AdditiveOutlier {
        return;
    }
    for n in 1..=state.n() {
        let phi = column_shrinkage_conditional(state, kind, n).sample(rng);
        let shrink = state.shrink_mut(kind);
        shrink.phi[n - 1] = phi;
        shrink.omega[n - 1] = aux_conditional(phi).sample(rng);
    }
}

/// Redraw every gamma^(d)_hn then its auxiliary zeta^(d)_hn.
pub fn update_element_shrinkage(state: &mut ModelState, kind: ChangeKind, rng: &mut ChaCha8Rng) {
    if state.mode == Mode::Partial && kind == ChangeKind::AdditiveOutlier {
        return;
    }
    for h in 0..state.k() {
        for n in 1..=state.n() {
            let gamma = element_shrinkage_conditional(state, kind, h, n).sample(rng);
            let shrink = state.shrink_mut(kind);
            shrink.gamma[(h, n - 1)] = gamma;
            shrink.zeta[(h, n - 1)] = aux_conditional(gamma).sample(rng);
        }
    }
}

/// One step of the fixed sweep order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepStep {
    MixingRows,
    NoiseVariances,
    VColumns(ChangeKind),
    ShrinkageSet(ChangeKind),
}

/// The fixed scan order of a sweep: mixing rows, noise variances, the
/// level-shift columns, the additive-outlier columns (full mode only),
/// then the shrinkage sets for d = 1 and d = 0, each followed by its
/// auxiliaries. Every parameter of the state appears exactly once.
pub fn sweep_plan(mode: Mode) -> Vec<SweepStep> {
    let mut plan = vec![
        SweepStep::MixingRows,
        SweepStep::NoiseVariances,
        SweepStep::VColumns(ChangeKind::LevelShift),
    ];
    if mode == Mode::Full {
        plan.push(SweepStep::VColumns(ChangeKind::AdditiveOutlier));
    }
    plan.push(SweepStep::ShrinkageSet(ChangeKind::LevelShift));
    if mode == Mode::Full {
        plan.push(SweepStep::ShrinkageSet(ChangeKind::AdditiveOutlier));
    }
    plan
}

/// Run one Gibbs sweep over every parameter block.
pub fn gibbs_sweep(
    state: &mut ModelState,
    y: &ObservationMatrix,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    for step in sweep_plan(state.mode) {
        match step {
            SweepStep::MixingRows => update_mixing(state, y, rng)?,
            SweepStep::NoiseVariances => update_noise(state, y, rng),
            SweepStep::VColumns(kind) => v_scan(state, y, kind, rng)?,
            SweepStep::ShrinkageSet(kind) => {
                update_global_shrinkage(state, kind, rng);
                update_row_shrinkage(state, kind, rng);
                update_column_shrinkage(state, kind, rng);
                update_element_shrinkage(state, kind, rng);
            }
        }
    }
    Ok(())
}

/// Chain settings. Defaults match the reference configuration: 3000
/// iterations with a burn-in of 500.
#[derive(Debug, Clone)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub chain_id: u64,
    /// Report progress to stderr every this many iterations.
    pub progress_every: Option<usize>,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            iterations: 3000,
            burn_in: 500,
            seed: 0,
            chain_id: 0,
            progress_every: None,
        }
    }
}

/// A finished chain: the retained draws plus the final state (the warm
/// start of a follow-up chain needs the shrinkage scales, which draws do
/// not carry).
#[derive(Debug, Clone)]
pub struct ChainRun {
    pub draws: PosteriorDraws,
    pub final_state: ModelState,
}

/// Run a single chain: initialize (cold from the priors, or from `warm`),
/// sweep `iterations` times and retain every post-burn-in state.
pub fn run_chain(
    y: &ObservationMatrix,
    k: usize,
    mode: Mode,
    cfg: &ChainConfig,
    warm: Option<&ModelState>,
) -> Result<ChainRun> {
    if cfg.burn_in >= cfg.iterations {
        return Err(Error::InvalidArgument(format!(
            "burn-in ({}) must be below the iteration count ({})",
            cfg.burn_in, cfg.iterations
        )));
    }
    let mut state = init_state(y, k, mode, cfg.seed, warm)?;
    let mut rng = derive_rng(cfg.seed, streams::CHAIN_BASE + cfg.chain_id);
    let mut draws = PosteriorDraws::new(cfg.chain_id, mode);
    for iter in 1..=cfg.iterations {
        gibbs_sweep(&mut state, y, &mut rng).map_err(|e| e.with_iteration(iter))?;
        if iter > cfg.burn_in {
            draws.push(iter, &state);
        }
        if let Some(every) = cfg.progress_every {
            if every > 0 && iter % every == 0 {
                eprintln!(
                    "chain {}: iteration {}/{}",
                    cfg.chain_id, iter, cfg.iterations
                );
            }
        }
    }
    Ok(ChainRun {
        draws,
        final_state: state,
    })
}

/// Draw observations from the likelihood given a state: Y = M S + E with
/// independent N(0, psi_i) noise per channel.
pub fn sample_observations(state: &ModelState, rng: &mut ChaCha8Rng) -> ObservationMatrix {
    let sources = compose_sources(state);
    let mut y = state.m.dot(&sources);
    let (p, n) = y.dim();
    for i in 0..p {
        let sd = state.psi[i].sqrt();
        for t in 0..n {
            let z: f64 = StandardNormal.sample(rng);
            y[(i, t)] += sd * z;
        }
    }
    ObservationMatrix::new(y).expect("sampled observations are finite")
}

fn standard_normal_vector(k: usize, rng: &mut impl Rng) -> Array1<f64> {
    let mut z = Array1::zeros(k);
    for h in 0..k {
        z[h] = StandardNormal.sample(rng);
    }
    z
}
