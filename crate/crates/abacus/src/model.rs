//! Model quantities for the sparse source-separation model.
//!
//! The observed P x N matrix `Y` is modeled as `Y = M S + E` with a
//! P x K mixing matrix `M`, K x N latent sources `S` and independent
//! Gaussian noise with per-channel variances `psi`. Sources decompose
//! into an additive-outlier component `S0 = V0` and a level-shift
//! component `S1` whose first differences are `V1`, so that changes of
//! either kind appear as sparse columns of `V0` / `V1` under the
//! horseshoe hierarchy held in [`ShrinkageSet`].

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::{derive_rng, streams};
use crate::sampler::draw_inv_gamma;

/// The two change types handled by the model.
///
/// Additive outliers (`d = 0`) last exactly one index; level shifts
/// (`d = 1`) persist until the next change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChangeKind {
    AdditiveOutlier,
    LevelShift,
}

impl ChangeKind {
    pub const BOTH: [ChangeKind; 2] = [ChangeKind::AdditiveOutlier, ChangeKind::LevelShift];

    /// Canonical index: 0 for additive outliers, 1 for level shifts.
    pub fn index(self) -> usize {
        match self {
            ChangeKind::AdditiveOutlier => 0,
            ChangeKind::LevelShift => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ChangeKind::AdditiveOutlier => "AO",
            ChangeKind::LevelShift => "LS",
        }
    }
}

/// Whether a state carries both components or only the level-shift one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Level-shift component only; `V0` is pinned at zero and its
    /// shrinkage set is inert.
    Partial,
    /// Both components.
    Full,
}

/// Observed data: P channels (rows) by N sequential indices (columns).
#[derive(Debug, Clone)]
pub struct ObservationMatrix {
    values: Array2<f64>,
}

impl ObservationMatrix {
    /// Requires P >= 1, N >= 3 and all entries finite.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (p, n) = values.dim();
        if p < 1 {
            return Err(Error::InvalidArgument("need at least one channel".into()));
        }
        if n < 3 {
            return Err(Error::InvalidArgument(format!(
                "need at least 3 observations per channel, got {n}"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "observation matrix contains non-finite entries".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn p(&self) -> usize {
        self.values.nrows()
    }

    pub fn n(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }
}

/// The differencing operator `D^(d)` of a given length, in the two forms
/// used by the model: the identity (`d = 0`) and the first difference
/// (`d = 1`). The inverse of the first difference is the cumulative sum;
/// it is never materialized as a matrix outside of test oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiffOperator {
    kind: ChangeKind,
    length: usize,
}

impl DiffOperator {
    pub fn new(kind: ChangeKind, length: usize) -> Self {
        Self { kind, length }
    }

    pub fn kind(&self) -> ChangeKind {
        self.kind
    }

    pub fn length(&self) -> usize {
        self.length
    }

    /// Apply the operator to a sequence.
    pub fn apply(&self, seq: &[f64]) -> Vec<f64> {
        match self.kind {
            ChangeKind::AdditiveOutlier => seq.to_vec(),
            ChangeKind::LevelShift => {
                let mut out = Vec::with_capacity(seq.len());
                let mut prev = 0.0;
                for &x in seq {
                    out.push(x - prev);
                    prev = x;
                }
                out
            }
        }
    }

    /// Apply the inverse operator (the identity, or the running
    /// cumulative sum).
    pub fn invert(&self, seq: &[f64]) -> Vec<f64> {
        match self.kind {
            ChangeKind::AdditiveOutlier => seq.to_vec(),
            ChangeKind::LevelShift => {
                let mut out = Vec::with_capacity(seq.len());
                let mut acc = 0.0;
                for &x in seq {
                    acc += x;
                    out.push(acc);
                }
                out
            }
        }
    }

    /// The scalar `[D^(d)]^{-T}_{n.} [D^(d)]^{-1}_{.n}`, i.e. the squared
    /// norm of column `n` (1-based) of the inverse operator. Equals 1 for
    /// the identity and N - n + 1 for the first difference, since that
    /// inverse column is the 0/1 indicator of positions >= n.
    pub fn inverse_column_norm_sq(&self, n: usize) -> f64 {
        debug_assert!(n >= 1 && n <= self.length);
        match self.kind {
            ChangeKind::AdditiveOutlier => 1.0,
            ChangeKind::LevelShift => (self.length - n + 1) as f64,
        }
    }
}

/// One horseshoe hierarchy for a change type: a global scale, row and
/// column scales, element scales, and their inverse-gamma auxiliaries.
#[derive(Debug, Clone)]
pub struct ShrinkageSet {
    /// Global scale tau.
    pub tau: f64,
    /// Auxiliary for tau.
    pub xi: f64,
    /// Row (latent-signal) scales, length K.
    pub lambda: Array1<f64>,
    /// Auxiliaries for lambda, length K.
    pub eta: Array1<f64>,
    /// Column (index) scales, length N.
    pub phi: Array1<f64>,
    /// Auxiliaries for phi, length N.
    pub omega: Array1<f64>,
    /// Element scales, K x N.
    pub gamma: Array2<f64>,
    /// Auxiliaries for gamma, K x N.
    pub zeta: Array2<f64>,
}

impl ShrinkageSet {
    /// All scales and auxiliaries set to one. Used for the inert d = 0
    /// set of a partial-mode state.
    pub fn inert(k: usize, n: usize) -> Self {
        Self {
            tau: 1.0,
            xi: 1.0,
            lambda: Array1::ones(k),
            eta: Array1::ones(k),
            phi: Array1::ones(n),
            omega: Array1::ones(n),
            gamma: Array2::ones((k, n)),
            zeta: Array2::ones((k, n)),
        }
    }

    /// Draw every auxiliary from its InverseGamma(1/2, 1) prior and every
    /// scale from its conditional InverseGamma(1/2, 1/auxiliary) prior.
    pub fn draw_from_prior(k: usize, n: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut pair = || {
            let aux = draw_inv_gamma(0.5, 1.0, rng);
            let scale = draw_inv_gamma(0.5, 1.0 / aux, rng);
            (scale, aux)
        };
        let (tau, xi) = pair();
        let mut lambda = Array1::zeros(k);
        let mut eta = Array1::zeros(k);
        for h in 0..k {
            let (s, a) = pair();
            lambda[h] = s;
            eta[h] = a;
        }
        let mut phi = Array1::zeros(n);
        let mut omega = Array1::zeros(n);
        for t in 0..n {
            let (s, a) = pair();
            phi[t] = s;
            omega[t] = a;
        }
        let mut gamma = Array2::zeros((k, n));
        let mut zeta = Array2::zeros((k, n));
        for h in 0..k {
            for t in 0..n {
                let (s, a) = pair();
                gamma[(h, t)] = s;
                zeta[(h, t)] = a;
            }
        }
        Self {
            tau,
            xi,
            lambda,
            eta,
            phi,
            omega,
            gamma,
            zeta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.tau) || !ok(self.xi) {
            return Err(Error::InvalidArgument(
                "shrinkage global scale must be finite and positive".into(),
            ));
        }
        let all = self
            .lambda
            .iter()
            .chain(self.eta.iter())
            .chain(self.phi.iter())
            .chain(self.omega.iter())
            .chain(self.gamma.iter())
            .chain(self.zeta.iter());
        for &v in all {
            if !ok(v) {
                return Err(Error::InvalidArgument(
                    "shrinkage scales must be finite and positive".into(),
                ));
            }
        }
        Ok(())
    }
}

/// One complete parameter assignment: the unit a Gibbs sweep mutates.
#[derive(Debug, Clone)]
pub struct ModelState {
    /// Mixing matrix, P x K.
    pub m: Array2<f64>,
    /// Additive-outlier component V^(0), K x N. Identically zero in
    /// partial mode.
    pub v0: Array2<f64>,
    /// Differenced level-shift component V^(1), K x N.
    pub v1: Array2<f64>,
    /// Noise variances, length P.
    pub psi: Array1<f64>,
    /// Horseshoe hierarchy for the additive-outlier component. Inert in
    /// partial mode.
    pub shrink0: ShrinkageSet,
    /// Horseshoe hierarchy for the level-shift component.
    pub shrink1: ShrinkageSet,
    pub mode: Mode,
}

impl ModelState {
    pub fn p(&self) -> usize {
        self.m.nrows()
    }

    pub fn k(&self) -> usize {
        self.m.ncols()
    }

    pub fn n(&self) -> usize {
        self.v1.ncols()
    }

    pub fn v(&self, kind: ChangeKind) -> &Array2<f64> {
        match kind {
            ChangeKind::AdditiveOutlier => &self.v0,
            ChangeKind::LevelShift => &self.v1,
        }
    }

    pub fn v_mut(&mut self, kind: ChangeKind) -> &mut Array2<f64> {
        match kind {
            ChangeKind::AdditiveOutlier => &mut self.v0,
            ChangeKind::LevelShift => &mut self.v1,
        }
    }

    pub fn shrink(&self, kind: ChangeKind) -> &ShrinkageSet {
        match kind {
            ChangeKind::AdditiveOutlier => &self.shrink0,
            ChangeKind::LevelShift => &self.shrink1,
        }
    }

    pub fn shrink_mut(&mut self, kind: ChangeKind) -> &mut ShrinkageSet {
        match kind {
            ChangeKind::AdditiveOutlier => &mut self.shrink0,
            ChangeKind::LevelShift => &mut self.shrink1,
        }
    }

    /// The derived sources S: the row-wise cumulative sum of V^(1), plus
    /// V^(0) in full mode.
    pub fn compose_sources(&self) -> Array2<f64> {
        compose_sources(self)
    }

    pub fn validate(&self) -> Result<()> {
        let (k, n) = self.v1.dim();
        if self.m.ncols() != k || self.v0.dim() != (k, n) || self.psi.len() != self.m.nrows() {
            return Err(Error::ShapeMismatch(
                "model state components disagree on (P, K, N)".into(),
            ));
        }
        if self.psi.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "noise variances must be finite and positive".into(),
            ));
        }
        if self.mode == Mode::Partial && self.v0.iter().any(|&v| v != 0.0) {
            return Err(Error::InvalidArgument(
                "partial-mode state must keep V0 at zero".into(),
            ));
        }
        self.shrink0.validate()?;
        self.shrink1.validate()
    }
}

/// Build a starting state.
///
/// A cold start (no `warm`) draws every parameter from its prior, with
/// `M` and `V` drawn from the Gaussians induced by the drawn scales, so
/// the state is an exact prior sample. A warm start deep-copies the
/// provided state; a partial-mode warm state may seed a full-mode one, in
/// which case the missing additive-outlier component is drawn from its
/// prior.
pub fn init_state(
    y: &ObservationMatrix,
    k: usize,
    mode: Mode,
    rng_seed: u64,
    warm: Option<&ModelState>,
) -> Result<ModelState> {
    let p = y.p();
    let n = y.n();
    if k < 1 || k >= p {
        return Err(Error::InvalidArgument(format!(
            "latent dimension K must satisfy 1 <= K < P, got K={k}, P={p}"
        )));
    }
    let mut rng = derive_rng(rng_seed, streams::INIT);

    if let Some(w) = warm {
        if w.p() != p || w.k() != k || w.n() != n {
            return Err(Error::ShapeMismatch(format!(
                "warm state is ({}, {}, {}), expected ({p}, {k}, {n})",
                w.p(),
                w.k(),
                w.n()
            )));
        }
        let state = match (w.mode, mode) {
            (a, b) if a == b => w.clone(),
            (Mode::Partial, Mode::Full) => {
                let shrink0 = ShrinkageSet::draw_from_prior(k, n, &mut rng);
                let v0 = draw_v_prior(&shrink0, &mut rng);
                ModelState {
                    m: w.m.clone(),
                    v0,
                    v1: w.v1.clone(),
                    psi: w.psi.clone(),
                    shrink0,
                    shrink1: w.shrink1.clone(),
                    mode: Mode::Full,
                }
            }
            (Mode::Full, Mode::Partial) => {
                return Err(Error::InvalidArgument(
                    "cannot warm-start a partial model from a full-model state".into(),
                ))
            }
            _ => unreachable!(),
        };
        state.validate()?;
        return Ok(state);
    }

    let mut psi = Array1::zeros(p);
    for i in 0..p {
        psi[i] = draw_inv_gamma(1.0, 1.0, &mut rng);
    }
    let shrink1 = ShrinkageSet::draw_from_prior(k, n, &mut rng);
    let (shrink0, v0) = match mode {
        Mode::Partial => (ShrinkageSet::inert(k, n), Array2::zeros((k, n))),
        Mode::Full => {
            let s0 = ShrinkageSet::draw_from_prior(k, n, &mut rng);
            let v0 = draw_v_prior(&s0, &mut rng);
            (s0, v0)
        }
    };
    let v1 = draw_v_prior(&shrink1, &mut rng);
    let mut m = Array2::zeros((p, k));
    for h in 0..k {
        let scale = match mode {
            Mode::Full => shrink0.lambda[h] * shrink1.lambda[h] * shrink0.tau * shrink1.tau,
            Mode::Partial => shrink1.lambda[h] * shrink1.tau,
        };
        for i in 0..p {
            m[(i, h)] = draw_normal(0.0, scale * psi[i], &mut rng);
        }
    }
    let state = ModelState {
        m,
        v0,
        v1,
        psi,
        shrink0,
        shrink1,
        mode,
    };
    state.validate()?;
    Ok(state)
}

fn draw_v_prior(shrink: &ShrinkageSet, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let (k, n) = shrink.gamma.dim();
    let mut v = Array2::zeros((k, n));
    for h in 0..k {
        for t in 0..n {
            let var = shrink.phi[t] * shrink.lambda[h] * shrink.gamma[(h, t)] * shrink.tau;
            v[(h, t)] = draw_normal(0.0, var, rng);
        }
    }
    v
}

fn draw_normal(mean: f64, variance: f64, rng: &mut impl Rng) -> f64 {
    loop {
        let x = Normal::new(mean, variance.sqrt()).unwrap().sample(rng);
        if x.is_finite() {
            return x;
        }
    }
}

/// S = V^(0) + rowCumSum(V^(1)) in full mode, rowCumSum(V^(1)) in
/// partial mode.
pub fn compose_sources(state: &ModelState) -> Array2<f64> {
    let (k, n) = state.v1.dim();
    let mut s = Array2::zeros((k, n));
    for h in 0..k {
        let mut acc = 0.0;
        for t in 0..n {
            acc += state.v1[(h, t)];
            s[(h, t)] = acc;
        }
    }
    if state.mode == Mode::Full {
        s += &state.v0;
    }
    s
}

/// Posterior samples retained after burn-in. Append-only; written by
/// exactly one chain.
#[derive(Debug, Clone)]
pub struct PosteriorDraws {
    chain_id: u64,
    mode: Mode,
    draws: Vec<Draw>,
}

/// One retained iteration: deep copies of the sampled components plus the
/// iteration index it came from.
#[derive(Debug, Clone)]
pub struct Draw {
    pub iteration: usize,
    pub m: Array2<f64>,
    pub v0: Array2<f64>,
    pub v1: Array2<f64>,
    pub psi: Array1<f64>,
}

impl Draw {
    pub fn v(&self, kind: ChangeKind) -> &Array2<f64> {
        match kind {
            ChangeKind::AdditiveOutlier => &self.v0,
            ChangeKind::LevelShift => &self.v1,
        }
    }
}

impl PosteriorDraws {
    pub fn new(chain_id: u64, mode: Mode) -> Self {
        Self {
            chain_id,
            mode,
            draws: Vec::new(),
        }
    }

    pub fn chain_id(&self) -> u64 {
        self.chain_id
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn push(&mut self, iteration: usize, state: &ModelState) {
        self.draws.push(Draw {
            iteration,
            m: state.m.clone(),
            v0: state.v0.clone(),
            v1: state.v1.clone(),
            psi: state.psi.clone(),
        });
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Draw> {
        self.draws.iter()
    }

    /// Elementwise posterior median of the mixing matrix.
    pub fn median_m(&self) -> Array2<f64> {
        elementwise_median(self.draws.iter().map(|d| &d.m))
    }

    /// Elementwise posterior median of V^(d).
    pub fn median_v(&self, kind: ChangeKind) -> Array2<f64> {
        elementwise_median(self.draws.iter().map(move |d| d.v(kind)))
    }

    /// Elementwise posterior median of the noise variances.
    pub fn median_psi(&self) -> Array1<f64> {
        let p = self.draws[0].psi.len();
        let mut out = Array1::zeros(p);
        let mut buf = Vec::with_capacity(self.draws.len());
        for i in 0..p {
            buf.clear();
            buf.extend(self.draws.iter().map(|d| d.psi[i]));
            out[i] = median_in_place(&mut buf);
        }
        out
    }

    /// Elementwise posterior median of the composed sources S, taken over
    /// the per-draw compositions.
    pub fn median_sources(&self) -> Array2<f64> {
        let (k, n) = self.draws[0].v1.dim();
        let composed: Vec<Array2<f64>> = self
            .draws
            .iter()
            .map(|d| {
                let mut s = Array2::zeros((k, n));
                for h in 0..k {
                    let mut acc = 0.0;
                    for t in 0..n {
                        acc += d.v1[(h, t)];
                        s[(h, t)] = acc;
                    }
                }
                if self.mode == Mode::Full {
                    s += &d.v0;
                }
                s
            })
            .collect();
        elementwise_median(composed.iter())
    }
}

fn elementwise_median<'a, I>(mats: I) -> Array2<f64>
where
    I: Iterator<Item = &'a Array2<f64>> + Clone,
{
    let first = mats.clone().next().expect("at least one draw");
    let (r, c) = first.dim();
    let mut out = Array2::zeros((r, c));
    let mut buf = Vec::new();
    for i in 0..r {
        for j in 0..c {
            buf.clear();
            buf.extend(mats.clone().map(|m| m[(i, j)]));
            out[(i, j)] = median_in_place(&mut buf);
        }
    }
    out
}

/// Median with the even-count convention: midpoint of the two central
/// order statistics.
pub(crate) fn median_in_place(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Detected changes and recovered model components, 1-based indices.
#[derive(Debug, Clone)]
pub struct ChangeReport {
    /// Additive-outlier indices, sorted ascending.
    pub cpt0: Vec<usize>,
    /// Level-shift indices, sorted ascending.
    pub cpt1: Vec<usize>,
    /// Recovered sources, K x N.
    pub s_hat: Array2<f64>,
    /// Recovered mixing matrix, P x K.
    pub m_hat: Array2<f64>,
    /// Recovered noise variances, length P.
    pub psi_hat: Array1<f64>,
    /// Posterior median change magnitudes for the additive-outlier
    /// component, length N.
    pub g0_hat: Vec<f64>,
    /// Same for the level-shift component.
    pub g1_hat: Vec<f64>,
    /// Density cutoffs used for detection; +inf means no detections of
    /// that type.
    pub cutoff0: f64,
    pub cutoff1: f64,
}

impl ChangeReport {
    pub fn validate(&self) -> Result<()> {
        let n = self.g1_hat.len();
        for (name, list, g, cutoff) in [
            ("cpt0", &self.cpt0, &self.g0_hat, self.cutoff0),
            ("cpt1", &self.cpt1, &self.g1_hat, self.cutoff1),
        ] {
            if !list.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be strictly increasing"
                )));
            }
            for &idx in list.iter() {
                if idx < 1 || idx > n {
                    return Err(Error::InvalidArgument(format!(
                        "{name} index {idx} out of 1..={n}"
                    )));
                }
                if g[idx - 1].abs() <= cutoff {
                    return Err(Error::InvalidArgument(format!(
                        "{name} index {idx} does not exceed its cutoff"
                    )));
                }
            }
        }
        if self.cpt0.iter().any(|i| self.cpt1.binary_search(i).is_ok()) {
            return Err(Error::InvalidArgument(
                "cpt0 and cpt1 must be disjoint".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy_y(p: usize, n: usize) -> ObservationMatrix {
        let mut v = Array2::zeros((p, n));
        for i in 0..p {
            for j in 0..n {
                v[(i, j)] = (i * n + j) as f64 * 0.1 - 1.0;
            }
        }
        ObservationMatrix::new(v).unwrap()
    }

    #[test]
    fn observation_matrix_rejects_bad_input() {
        assert!(ObservationMatrix::new(Array2::zeros((3, 2))).is_err());
        let mut v = Array2::zeros((2, 4));
        v[(1, 2)] = f64::NAN;
        assert!(ObservationMatrix::new(v).is_err());
    }

    #[test]
    fn diff_round_trips() {
        let op = DiffOperator::new(ChangeKind::LevelShift, 6);
        let seq = [0.3, -1.2, 4.0, 4.0, 0.0, 2.5];
        let back = op.invert(&op.apply(&seq));
        for (a, b) in seq.iter().zip(back.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        let fwd = op.apply(&op.invert(&seq));
        for (a, b) in seq.iter().zip(fwd.iter()) {
            assert!((a - b).abs() < 1e-12);
        }

        let id = DiffOperator::new(ChangeKind::AdditiveOutlier, 6);
        assert_eq!(id.invert(&id.apply(&seq)), seq.to_vec());
    }

    #[test]
    fn inverse_column_norms_match_dense_inverse() {
        // Dense check of the N - n + 1 identity: column n of the inverse
        // first-difference matrix is the indicator of positions >= n.
        let n = 9;
        let op = DiffOperator::new(ChangeKind::LevelShift, n);
        for col in 1..=n {
            let mut e = vec![0.0; n];
            e[col - 1] = 1.0;
            let inv_col = op.invert(&e);
            let norm_sq: f64 = inv_col.iter().map(|x| x * x).sum();
            assert_eq!(norm_sq, (n - col + 1) as f64);
            assert_eq!(op.inverse_column_norm_sq(col), norm_sq);
        }
        let id = DiffOperator::new(ChangeKind::AdditiveOutlier, n);
        for col in 1..=n {
            assert_eq!(id.inverse_column_norm_sq(col), 1.0);
        }
    }

    #[test]
    fn compose_zero_difference_is_v0() {
        let a = array![[1.0, -2.0, 0.5], [0.0, 3.0, -1.0]];
        let state = ModelState {
            m: Array2::zeros((3, 2)),
            v0: a.clone(),
            v1: Array2::zeros((2, 3)),
            psi: Array1::ones(3),
            shrink0: ShrinkageSet::inert(2, 3),
            shrink1: ShrinkageSet::inert(2, 3),
            mode: Mode::Full,
        };
        assert_eq!(compose_sources(&state), a);
    }

    #[test]
    fn compose_single_impulse_is_step() {
        let mut v1 = Array2::zeros((1, 6));
        v1[(0, 2)] = 2.5;
        let state = ModelState {
            m: Array2::zeros((2, 1)),
            v0: Array2::zeros((1, 6)),
            v1,
            psi: Array1::ones(2),
            shrink0: ShrinkageSet::inert(1, 6),
            shrink1: ShrinkageSet::inert(1, 6),
            mode: Mode::Full,
        };
        let s = compose_sources(&state);
        assert_eq!(s.row(0).to_vec(), vec![0.0, 0.0, 2.5, 2.5, 2.5, 2.5]);
    }

    #[test]
    fn compose_matches_dense_reconstruction() {
        // Oracle: S = V0 + V1 * inv(D1)^T with the inverse built densely.
        let mut rng = derive_rng(11, 0);
        let (k, n) = (2, 6);
        let mut v0 = Array2::zeros((k, n));
        let mut v1 = Array2::zeros((k, n));
        for h in 0..k {
            for t in 0..n {
                v0[(h, t)] = rng.random::<f64>() - 0.5;
                v1[(h, t)] = rng.random::<f64>() - 0.5;
            }
        }
        // inv(D1) is lower-triangular all ones, so inv(D1)^T is upper ones.
        let mut dinv_t = Array2::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                dinv_t[(i, j)] = 1.0;
            }
        }
        let dense = &v0 + &v1.dot(&dinv_t);
        let state = ModelState {
            m: Array2::zeros((3, k)),
            v0,
            v1,
            psi: Array1::ones(3),
            shrink0: ShrinkageSet::inert(k, n),
            shrink1: ShrinkageSet::inert(k, n),
            mode: Mode::Full,
        };
        let s = compose_sources(&state);
        for h in 0..k {
            for t in 0..n {
                assert!((s[(h, t)] - dense[(h, t)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn compose_is_linear() {
        let mut rng = derive_rng(5, 0);
        let (k, n) = (3, 7);
        let mut mk = |scale: f64| {
            let mut a = Array2::zeros((k, n));
            for x in a.iter_mut() {
                *x = (rng.random::<f64>() - 0.5) * scale;
            }
            a
        };
        let (v0a, v1a, v0b, v1b) = (mk(1.0), mk(2.0), mk(0.5), mk(3.0));
        let base = |v0: &Array2<f64>, v1: &Array2<f64>| ModelState {
            m: Array2::zeros((4, k)),
            v0: v0.clone(),
            v1: v1.clone(),
            psi: Array1::ones(4),
            shrink0: ShrinkageSet::inert(k, n),
            shrink1: ShrinkageSet::inert(k, n),
            mode: Mode::Full,
        };
        let sum_state = base(&(&v0a + &v0b), &(&v1a + &v1b));
        let lhs = compose_sources(&sum_state);
        let rhs = compose_sources(&base(&v0a, &v1a)) + compose_sources(&base(&v0b, &v1b));
        for (a, b) in lhs.iter().zip(rhs.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn cold_start_partial_keeps_v0_zero() {
        let y = toy_y(5, 10);
        let state = init_state(&y, 2, Mode::Partial, 7, None).unwrap();
        assert!(state.v0.iter().all(|&v| v == 0.0));
        state.shrink1.validate().unwrap();
        assert!(state.psi.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn warm_start_copies_mixing_exactly() {
        let y = toy_y(5, 10);
        let partial = init_state(&y, 2, Mode::Partial, 7, None).unwrap();
        let full = init_state(&y, 2, Mode::Full, 7, Some(&partial)).unwrap();
        assert_eq!(full.m, partial.m);
        assert_eq!(full.v1, partial.v1);
        assert_eq!(full.mode, Mode::Full);
    }

    #[test]
    fn same_seed_same_state() {
        let y = toy_y(5, 10);
        let a = init_state(&y, 2, Mode::Full, 42, None).unwrap();
        let b = init_state(&y, 2, Mode::Full, 42, None).unwrap();
        assert_eq!(a.m, b.m);
        assert_eq!(a.v0, b.v0);
        assert_eq!(a.v1, b.v1);
        assert_eq!(a.psi, b.psi);
        assert_eq!(a.shrink1.gamma, b.shrink1.gamma);
    }

    #[test]
    fn init_rejects_k_not_below_p() {
        let y = toy_y(3, 8);
        assert!(init_state(&y, 3, Mode::Full, 1, None).is_err());
        assert!(init_state(&y, 0, Mode::Full, 1, None).is_err());
    }

    #[test]
    fn init_rejects_warm_shape_mismatch() {
        let y = toy_y(5, 10);
        let other = toy_y(5, 9);
        let warm = init_state(&other, 2, Mode::Partial, 7, None).unwrap();
        assert!(init_state(&y, 2, Mode::Full, 7, Some(&warm)).is_err());
    }

    #[test]
    fn median_conventions() {
        let mut odd = vec![3.0, 1.0, 2.0];
        assert_eq!(median_in_place(&mut odd), 2.0);
        let mut even = vec![4.0, 1.0, 3.0, 2.0];
        assert_eq!(median_in_place(&mut even), 2.5);
    }

    #[test]
    fn change_report_invariants() {
        let report = ChangeReport {
            cpt0: vec![2],
            cpt1: vec![4],
            s_hat: Array2::zeros((1, 5)),
            m_hat: Array2::zeros((2, 1)),
            psi_hat: Array1::ones(2),
            g0_hat: vec![0.0, 3.0, 0.0, 0.0, 0.0],
            g1_hat: vec![0.0, 0.0, 0.0, -2.0, 0.0],
            cutoff0: 1.0,
            cutoff1: 1.0,
        };
        report.validate().unwrap();

        let mut overlapping = report.clone();
        overlapping.cpt1 = vec![2];
        overlapping.g1_hat = vec![0.0, 3.0, 0.0, 0.0, 0.0];
        assert!(overlapping.validate().is_err());

        let mut below_cutoff = report;
        below_cutoff.cutoff0 = 5.0;
        assert!(below_cutoff.validate().is_err());
    }
}
