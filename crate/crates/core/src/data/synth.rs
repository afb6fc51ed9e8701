//! Planted-community synthetic data.
//!
//! Each community drives a latent AR(1) signal (coefficient 0.8, unit
//! stationary variance). ROI `r` observes `sum_k M[r,k] * a_k * s_k(t)`
//! plus white noise, where `M` is a non-negative membership matrix and
//! `a_k = 1 + coupling_diff` for the discriminative communities of
//! positive-class subjects (1 otherwise).

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{standardize, SubjectRecord};
use crate::communities::{Community, CommunitySet, Source};
use crate::error::{Error, Result};
use crate::numeric::matrix::Matrix;
use crate::numeric::rng::derived_rng;

pub const AR_COEFFICIENT: f64 = 0.8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub rois: usize,
    pub length: usize,
    pub communities: usize,
    /// Probability that an ROI joins a second community.
    pub overlap: f64,
    /// Relative amplitude increase of the discriminative communities in
    /// positive-class subjects.
    pub coupling_diff: f64,
    pub noise_sd: f64,
    /// How many communities (the first ones) carry the class difference.
    /// Defaults to half of them, at least one.
    pub discriminative: Option<usize>,
    pub site: String,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_subjects: 200,
            rois: 20,
            length: 120,
            communities: 4,
            overlap: 0.2,
            coupling_diff: 0.5,
            noise_sd: 0.5,
            discriminative: None,
            site: "SYN".into(),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn discriminative_count(&self) -> usize {
        self.discriminative.unwrap_or((self.communities / 2).max(1))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.communities == 0 || self.communities > self.rois {
            return fail(format!("need 1 <= communities <= rois (got {} and {})", self.communities, self.rois));
        }
        if self.n_subjects == 0 {
            return fail("need at least one subject".into());
        }
        if self.length < 2 {
            return fail(format!("series length {} is too short", self.length));
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return fail(format!("overlap {} outside [0, 1]", self.overlap));
        }
        if !(self.coupling_diff > -1.0) || !self.coupling_diff.is_finite() {
            return fail(format!("coupling difference {} must exceed -1", self.coupling_diff));
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return fail(format!("noise sd {} must be non-negative", self.noise_sd));
        }
        if self.discriminative_count() > self.communities {
            return fail(format!(
                "{} discriminative communities requested, only {} exist",
                self.discriminative_count(),
                self.communities
            ));
        }
        Ok(())
    }
}

/// Ground truth written next to a synthetic dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub communities: CommunitySet,
    /// `R x K*` membership matrix, row-major.
    pub membership: Vec<Vec<f64>>,
    pub discriminative_communities: Vec<usize>,
    pub config: SynthConfig,
}

/// Generates standardized subjects (labels alternate 0/1) and the planted
/// communities.
pub fn synth_generate(cfg: &SynthConfig) -> Result<(Vec<SubjectRecord>, PlantedTruth)> {
    cfg.validate()?;
    let (r, k) = (cfg.rois, cfg.communities);

    let mut rng = derived_rng(cfg.seed, &[0]);
    let mut membership = Matrix::zeros(r, k);
    let mut order: Vec<usize> = (0..r).collect();
    order.shuffle(&mut rng);
    for (i, &roi) in order.iter().enumerate() {
        membership.set(roi, i % k, rng.random_range(0.6..1.0));
    }
    if k > 1 {
        for roi in 0..r {
            if rng.random::<f64>() < cfg.overlap {
                let primary = (0..k).find(|&c| membership.get(roi, c) > 0.0).expect("every ROI has one");
                let other = (primary + rng.random_range(1..k)) % k;
                membership.set(roi, other, rng.random_range(0.3..0.6));
            }
        }
    }

    let n_disc = cfg.discriminative_count();
    let innovation_sd = (1.0 - AR_COEFFICIENT * AR_COEFFICIENT).sqrt();
    let mut subjects = Vec::with_capacity(cfg.n_subjects);
    for s in 0..cfg.n_subjects {
        let label = (s % 2) as u8;
        let mut rng = derived_rng(cfg.seed, &[1, s as u64]);
        let amp: Vec<f64> =
            (0..k).map(|c| if label == 1 && c < n_disc { 1.0 + cfg.coupling_diff } else { 1.0 }).collect();
        let mut latent = vec![0.0; k];
        for v in latent.iter_mut() {
            *v = rng.sample::<f64, _>(StandardNormal);
        }
        let mut series = Matrix::zeros(cfg.length, r);
        for t in 0..cfg.length {
            if t > 0 {
                for v in latent.iter_mut() {
                    *v = AR_COEFFICIENT * *v + innovation_sd * rng.sample::<f64, _>(StandardNormal);
                }
            }
            for roi in 0..r {
                let signal: f64 = (0..k).map(|c| membership.get(roi, c) * amp[c] * latent[c]).sum();
                let noise = if cfg.noise_sd > 0.0 { cfg.noise_sd * rng.sample::<f64, _>(StandardNormal) } else { 0.0 };
                series.set(t, roi, signal + noise);
            }
        }
        subjects.push(SubjectRecord {
            subject_id: format!("sub-{s:04}"),
            site: cfg.site.clone(),
            label,
            series: standardize(&series)?,
        });
    }

    let communities = CommunitySet {
        source: Source::Planted,
        rois: r,
        communities: (0..k)
            .map(|c| {
                let weights = membership.col(c);
                let members = (0..r).filter(|&roi| weights[roi] > 0.0).collect();
                Community { weights, members, degenerate: false }
            })
            .collect(),
    };
    let truth = PlantedTruth {
        communities,
        membership: (0..r).map(|roi| membership.row(roi).to_vec()).collect(),
        discriminative_communities: (0..n_disc).collect(),
        config: cfg.clone(),
    };
    Ok((subjects, truth))
}
