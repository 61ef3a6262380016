//! End-to-end detection pipeline.
//!
//! A partial model (level-shift component only) is fit first; its
//! detections, split into the two change types, seed a full model whose
//! own components then separate additive outliers from level shifts
//! structurally. Final estimates are posterior medians.

use ndarray::{Array1, Array2};

use crate::detector::{detect_changes, kde_cutoff, posterior_g, prune_ls_dp, separate_ao_ls};
use crate::error::{Error, Result};
use crate::model::{
    ChangeKind, ChangeReport, Mode, ModelState, ObservationMatrix, PosteriorDraws, ShrinkageSet,
};
use crate::rng::{derive_rng, split_seed, streams};
use crate::sampler::{aux_conditional, run_chain, ChainConfig};

/// Pipeline settings. The defaults are the reference configuration:
/// K = 5, 3000 iterations, burn-in 500, delta = 1e-10, no pruning.
#[derive(Debug, Clone)]
pub struct AbacusConfig {
    pub k: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub delta: f64,
    pub seed: u64,
    /// Prune detected level shifts by dynamic programming.
    pub prune: bool,
    /// Report chain progress to stderr every this many iterations.
    pub progress_every: Option<usize>,
}

impl Default for AbacusConfig {
    fn default() -> Self {
        Self {
            k: 5,
            iterations: 3000,
            burn_in: 500,
            delta: 1e-10,
            seed: 0,
            prune: false,
            progress_every: None,
        }
    }
}

/// Posterior medians of a partial fit plus the final chain state, whose
/// shrinkage scales seed the full model.
#[derive(Debug, Clone)]
pub struct PartialFit {
    pub m_hat: Array2<f64>,
    pub v_hat: Array2<f64>,
    pub psi_hat: Array1<f64>,
    pub final_state: ModelState,
}

/// Fit the partial model and summarize it.
pub fn fit_partial(
    y: &ObservationMatrix,
    k: usize,
    iterations: usize,
    burn_in: usize,
    seed: u64,
    progress_every: Option<usize>,
) -> Result<(PosteriorDraws, PartialFit)> {
    let cfg = ChainConfig {
        iterations,
        burn_in,
        seed,
        chain_id: 0,
        progress_every,
    };
    let run = run_chain(y, k, Mode::Partial, &cfg, None)?;
    let fit = PartialFit {
        m_hat: run.draws.median_m(),
        v_hat: run.draws.median_v(ChangeKind::LevelShift),
        psi_hat: run.draws.median_psi(),
        final_state: run.final_state,
    };
    Ok((run.draws, fit))
}

/// Build the warm start of the full model from a partial fit.
///
/// `V^(0)` receives the median V columns at the additive-outlier indices
/// and `V^(1)` those at the level-shift indices (zero elsewhere); the
/// mixing matrix and noise variances are copied, and the partial model's
/// single shrinkage set is duplicated for both change types with the
/// auxiliaries refreshed by one conditional draw.
pub fn init_full_from_partial(
    fit: &PartialFit,
    cpt0: &[usize],
    cpt1: &[usize],
    seed: u64,
) -> Result<ModelState> {
    let (k, n) = fit.v_hat.dim();
    for &idx in cpt0.iter().chain(cpt1) {
        if idx < 1 || idx > n {
            return Err(Error::InvalidArgument(format!(
                "change index {idx} out of 1..={n}"
            )));
        }
    }
    if cpt0.iter().any(|i| cpt1.contains(i)) {
        return Err(Error::InvalidArgument(
            "additive-outlier and level-shift indices overlap".into(),
        ));
    }
    let mut rng = derive_rng(seed, streams::WARM_AUX);
    let mut refresh = |set: &ShrinkageSet| -> ShrinkageSet {
        let mut out = set.clone();
        out.xi = aux_conditional(out.tau).sample(&mut rng);
        for h in 0..k {
            out.eta[h] = aux_conditional(out.lambda[h]).sample(&mut rng);
        }
        for t in 0..n {
            out.omega[t] = aux_conditional(out.phi[t]).sample(&mut rng);
        }
        for h in 0..k {
            for t in 0..n {
                out.zeta[(h, t)] = aux_conditional(out.gamma[(h, t)]).sample(&mut rng);
            }
        }
        out
    };
    let partial_set = &fit.final_state.shrink1;
    let shrink0 = refresh(partial_set);
    let shrink1 = refresh(partial_set);

    let mut v0 = Array2::zeros((k, n));
    for &idx in cpt0 {
        for h in 0..k {
            v0[(h, idx - 1)] = fit.v_hat[(h, idx - 1)];
        }
    }
    let mut v1 = Array2::zeros((k, n));
    for &idx in cpt1 {
        for h in 0..k {
            v1[(h, idx - 1)] = fit.v_hat[(h, idx - 1)];
        }
    }
    let state = ModelState {
        m: fit.m_hat.clone(),
        v0,
        v1,
        psi: fit.psi_hat.clone(),
        shrink0,
        shrink1,
        mode: Mode::Full,
    };
    state.validate()?;
    Ok(state)
}

/// Run the whole pipeline and assemble a [`ChangeReport`].
pub fn run_abacus(y: &ObservationMatrix, cfg: &AbacusConfig) -> Result<ChangeReport> {
    let (partial_draws, partial_fit) = fit_partial(
        y,
        cfg.k,
        cfg.iterations,
        cfg.burn_in,
        cfg.seed,
        cfg.progress_every,
    )?;

    // Mixed detections from the partial model, split by Algorithm-style
    // sign inspection of consecutive indices.
    let g_partial = posterior_g(&partial_draws, ChangeKind::LevelShift)?;
    let cutoff_partial = kde_cutoff(&g_partial, cfg.delta);
    let mixed = detect_changes(&g_partial, cutoff_partial);
    let (seed_cpt0, seed_cpt1) = separate_ao_ls(&g_partial, &mixed)?;
    drop(partial_draws);

    let warm = init_full_from_partial(&partial_fit, &seed_cpt0, &seed_cpt1, cfg.seed)?;
    let full_cfg = ChainConfig {
        iterations: cfg.iterations,
        burn_in: cfg.burn_in,
        seed: split_seed(cfg.seed, 1),
        chain_id: 1,
        progress_every: cfg.progress_every,
    };
    let full = run_chain(y, cfg.k, Mode::Full, &full_cfg, Some(&warm))?;

    // In the full model the components already separate the change
    // types; each gets its own cutoff.
    let g0 = posterior_g(&full.draws, ChangeKind::AdditiveOutlier)?;
    let g1 = posterior_g(&full.draws, ChangeKind::LevelShift)?;
    let cutoff0 = kde_cutoff(&g0, cfg.delta);
    let cutoff1 = kde_cutoff(&g1, cfg.delta);
    let mut cpt0 = detect_changes(&g0, cutoff0);
    let mut cpt1 = detect_changes(&g1, cutoff1);

    // An index flagged by both components is assigned to the one with
    // the larger posterior magnitude; ties go to the level shift.
    let overlap: Vec<usize> = cpt0
        .iter()
        .copied()
        .filter(|i| cpt1.binary_search(i).is_ok())
        .collect();
    for idx in overlap {
        if g0.values[idx - 1].abs() > g1.values[idx - 1].abs() {
            cpt1.retain(|&i| i != idx);
        } else {
            cpt0.retain(|&i| i != idx);
        }
    }

    let s_hat = full.draws.median_sources();
    let m_hat = full.draws.median_m();
    let psi_hat = full.draws.median_psi();

    if cfg.prune {
        cpt1 = prune_ls_dp(&s_hat, &cpt1, None);
    }

    let report = ChangeReport {
        cpt0,
        cpt1,
        s_hat,
        m_hat,
        psi_hat,
        g0_hat: g0.values,
        g1_hat: g1.values,
        cutoff0,
        cutoff1,
    };
    report.validate()?;
    Ok(report)
}
