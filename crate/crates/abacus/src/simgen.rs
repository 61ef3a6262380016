//! Synthetic data with known changes.
//!
//! Sources are piecewise constant starting from zero. Change locations
//! are drawn without replacement from the even indices {2, 4, ..., <= N-1},
//! which keeps level shifts at least two indices long and prevents two
//! adjacent additive outliers from faking a level shift. At each change a
//! uniformly-sized random subset of sources moves by a magnitude drawn
//! from `mag_range` with a random sign; additive outliers revert after
//! one index, level shifts persist.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{ChangeKind, ObservationMatrix};
use crate::rng::{derive_rng, streams};

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub p: usize,
    pub n: usize,
    /// True latent dimension.
    pub r: usize,
    pub n_ao: usize,
    pub n_ls: usize,
    /// Uniform range for mixing-matrix entries.
    pub m_range: (f64, f64),
    /// Uniform range for noise variances.
    pub psi_range: (f64, f64),
    /// Uniform range for change magnitudes (absolute value).
    pub mag_range: (f64, f64),
    pub seed: u64,
}

impl SimConfig {
    pub fn new(p: usize, n: usize, r: usize, n_ao: usize, n_ls: usize, seed: u64) -> Self {
        Self {
            p,
            n,
            r,
            n_ao,
            n_ls,
            m_range: (-1.0, 1.0),
            psi_range: (0.1, 5.0),
            mag_range: (1.0, 5.0),
            seed,
        }
    }

    /// Even indices 2, 4, ... up to N - 1 (1-based).
    pub fn admissible_locations(&self) -> Vec<usize> {
        (1..)
            .map(|j| 2 * j)
            .take_while(|&loc| loc <= self.n.saturating_sub(1))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.r < 1 || self.r > self.p {
            return Err(Error::InvalidArgument(format!(
                "latent dimension r={} must be in 1..=P={}",
                self.r, self.p
            )));
        }
        if self.n < 3 {
            return Err(Error::InvalidArgument("need N >= 3".into()));
        }
        let slots = self.admissible_locations().len();
        if self.n_ao + self.n_ls > slots {
            return Err(Error::InvalidArgument(format!(
                "{} changes requested but only {} admissible locations",
                self.n_ao + self.n_ls,
                slots
            )));
        }
        for (name, (lo, hi)) in [
            ("m_range", self.m_range),
            ("psi_range", self.psi_range),
            ("mag_range", self.mag_range),
        ] {
            if lo >= hi || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidArgument(format!("bad {name}: ({lo}, {hi})")));
            }
        }
        if self.psi_range.0 <= 0.0 || self.mag_range.0 <= 0.0 {
            return Err(Error::InvalidArgument(
                "noise variances and magnitudes must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One planted change: where, what kind, and which sources moved by how
/// much.
#[derive(Debug, Clone)]
pub struct ChangeEvent {
    pub location: usize,
    pub kind: ChangeKind,
    /// (source row, signed magnitude) pairs.
    pub affected: Vec<(usize, f64)>,
}

/// Everything needed to score a detector against a generated dataset.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub m: Array2<f64>,
    pub s: Array2<f64>,
    pub psi: Array1<f64>,
    pub ao_locs: Vec<usize>,
    pub ls_locs: Vec<usize>,
    pub changes: Vec<ChangeEvent>,
}

/// Generate observations `Y = M S + E` with planted changes.
pub fn generate(cfg: &SimConfig) -> Result<(ObservationMatrix, GroundTruth)> {
    cfg.validate()?;
    let mut rng = derive_rng(cfg.seed, streams::SIMGEN);
    let (p, n, r) = (cfg.p, cfg.n, cfg.r);

    let mut m = Array2::zeros((p, r));
    for x in m.iter_mut() {
        *x = rng.random_range(cfg.m_range.0..cfg.m_range.1);
    }
    let mut psi = Array1::zeros(p);
    for x in psi.iter_mut() {
        *x = rng.random_range(cfg.psi_range.0..cfg.psi_range.1);
    }

    // Draw locations without replacement, then label the shuffled list:
    // the first n_ao become additive outliers, the rest level shifts.
    let mut slots = cfg.admissible_locations();
    slots.shuffle(&mut rng);
    let chosen: Vec<usize> = slots.into_iter().take(cfg.n_ao + cfg.n_ls).collect();

    // Affected-source subsets: a uniform count in 1..=r, then a uniform
    // subset. The sources matrix must have full row rank, so when there
    // are enough changes to cover every source the subsets are redrawn
    // until none is left untouched.
    let need_cover = chosen.len() >= r;
    let subsets: Vec<Vec<usize>> = loop {
        let drawn: Vec<Vec<usize>> = chosen
            .iter()
            .map(|_| {
                let count = rng.random_range(1..=r);
                let mut rows: Vec<usize> = (0..r).collect();
                rows.shuffle(&mut rng);
                rows.truncate(count);
                rows.sort_unstable();
                rows
            })
            .collect();
        if !need_cover {
            break drawn;
        }
        let mut covered = vec![false; r];
        for rows in &drawn {
            for &row in rows {
                covered[row] = true;
            }
        }
        if covered.iter().all(|&c| c) {
            break drawn;
        }
    };

    let mut s = Array2::zeros((r, n));
    let mut changes = Vec::with_capacity(chosen.len());
    for (idx, (&loc, rows)) in chosen.iter().zip(&subsets).enumerate() {
        let kind = if idx < cfg.n_ao {
            ChangeKind::AdditiveOutlier
        } else {
            ChangeKind::LevelShift
        };
        let mut affected = Vec::with_capacity(rows.len());
        for &row in rows {
            let mag = rng.random_range(cfg.mag_range.0..cfg.mag_range.1);
            let signed = if rng.random::<bool>() { mag } else { -mag };
            match kind {
                ChangeKind::AdditiveOutlier => s[(row, loc - 1)] += signed,
                ChangeKind::LevelShift => {
                    for t in (loc - 1)..n {
                        s[(row, t)] += signed;
                    }
                }
            }
            affected.push((row, signed));
        }
        changes.push(ChangeEvent {
            location: loc,
            kind,
            affected,
        });
    }

    let mut y = m.dot(&s);
    for i in 0..p {
        let noise = Normal::new(0.0, psi[i].sqrt()).expect("positive noise sd");
        for t in 0..n {
            y[(i, t)] += noise.sample(&mut rng);
        }
    }

    let mut ao_locs: Vec<usize> = changes
        .iter()
        .filter(|c| c.kind == ChangeKind::AdditiveOutlier)
        .map(|c| c.location)
        .collect();
    let mut ls_locs: Vec<usize> = changes
        .iter()
        .filter(|c| c.kind == ChangeKind::LevelShift)
        .map(|c| c.location)
        .collect();
    ao_locs.sort_unstable();
    ls_locs.sort_unstable();

    Ok((
        ObservationMatrix::new(y)?,
        GroundTruth {
            m,
            s,
            psi,
            ao_locs,
            ls_locs,
            changes,
        },
    ))
}
