//! Functional communities: extraction from generative weights, the tensor
//! decomposition baseline, and cross-run robustness.
//!
//! ROI indices are 0-based everywhere, including serialized output.

pub mod kmeans;
pub mod tensor;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::matrix::Matrix;

pub use kmeans::{two_means_exact, two_means_lloyd, Split};
pub use tensor::{build_tensor, correlation_matrix, nn_parafac_symmetric, ParafacConfig, ParafacResult, Tensor3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Lstm,
    Cd,
    Planted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Community {
    /// Membership weight of every ROI.
    pub weights: Vec<f64>,
    /// Hard members, ascending.
    pub members: Vec<usize>,
    /// The weights could not be split (all equal); `members` is empty.
    #[serde(default)]
    pub degenerate: bool,
}

impl Community {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommunitySet {
    pub source: Source,
    pub rois: usize,
    pub communities: Vec<Community>,
}

impl CommunitySet {
    pub fn len(&self) -> usize {
        self.communities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.communities.iter().map(Community::size).collect()
    }

    pub fn validate(&self) -> Result<()> {
        for (k, c) in self.communities.iter().enumerate() {
            if c.weights.len() != self.rois {
                return Err(Error::Data(format!(
                    "community {k} has {} weights for {} ROIs",
                    c.weights.len(),
                    self.rois
                )));
            }
            if let Some(m) = c.members.iter().find(|&&m| m >= self.rois) {
                return Err(Error::Data(format!("community {k} lists ROI {m} of {}", self.rois)));
            }
            if c.weights.iter().any(|w| !w.is_finite()) {
                return Err(Error::Data(format!("community {k} has non-finite weights")));
            }
        }
        Ok(())
    }
}

/// One community per column of a non-negative `R x K` membership matrix.
/// Hard members are the ROIs in the upper cluster of an optimal 1-D
/// 2-means split of the column.
pub fn extract_communities(weights: &Matrix, source: Source) -> Result<CommunitySet> {
    if weights.min() < 0.0 {
        return Err(Error::Data("membership weights must be non-negative".into()));
    }
    weights.ensure_finite("membership weights")?;
    let communities = (0..weights.cols())
        .map(|k| {
            let col = weights.col(k);
            match two_means_exact(&col) {
                Some(split) => Community { weights: col, members: split.upper, degenerate: false },
                None => {
                    log::warn!("community {k}: all membership weights equal, no split possible");
                    Community { weights: col, members: Vec::new(), degenerate: true }
                }
            }
        })
        .collect();
    Ok(CommunitySet { source, rois: weights.rows(), communities })
}

/// Dice similarity `2|A n B| / (|A| + |B|)`; 0 when both are empty.
pub fn dsc(a: &[usize], b: &[usize]) -> f64 {
    let sa: BTreeSet<_> = a.iter().collect();
    let sb: BTreeSet<_> = b.iter().collect();
    if sa.is_empty() && sb.is_empty() {
        log::warn!("Dice coefficient of two empty sets taken as 0");
        return 0.0;
    }
    2.0 * sa.intersection(&sb).count() as f64 / (sa.len() + sb.len()) as f64
}

/// Pearson correlation; `None` when either vector is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommunityMatch {
    pub community: usize,
    pub size: usize,
    /// Best weight correlation over all communities of the other set
    /// (`None` if no pair has a defined correlation).
    pub best_correlation: Option<f64>,
    pub correlation_match: Option<usize>,
    pub best_dsc: f64,
    pub dsc_match: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub per_community: Vec<CommunityMatch>,
    pub mean_correlation: Option<f64>,
    pub mean_dsc: f64,
    pub reference_sizes: Vec<usize>,
    pub other_sizes: Vec<usize>,
    /// How best matches were chosen.
    pub matching: String,
}

impl RobustnessReport {
    /// Long-format table with one row per community of either set:
    /// `set,community,size,best_correlation,best_dsc`. Match columns are
    /// empty for the other set's rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("set,community,size,best_correlation,best_dsc\n");
        for m in &self.per_community {
            let corr = m.best_correlation.map(|v| format!("{v:?}")).unwrap_or_default();
            let _ = writeln!(out, "reference,{},{},{},{:?}", m.community, m.size, corr, m.best_dsc);
        }
        for (k, s) in self.other_sizes.iter().enumerate() {
            let _ = writeln!(out, "other,{k},{s},,");
        }
        out
    }
}

/// Best-match correlation and Dice score of every reference community
/// against all communities of `other`. Matches are chosen independently per
/// metric and with replacement.
pub fn robustness(reference: &CommunitySet, other: &CommunitySet) -> Result<RobustnessReport> {
    if reference.rois != other.rois {
        return Err(Error::Data(format!(
            "community sets cover {} and {} ROIs",
            reference.rois, other.rois
        )));
    }
    reference.validate()?;
    other.validate()?;

    let per_community: Vec<CommunityMatch> = reference
        .communities
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let mut best_corr: Option<(f64, usize)> = None;
            let mut best_dsc: Option<(f64, usize)> = None;
            for (j, o) in other.communities.iter().enumerate() {
                if let Some(r) = pearson(&c.weights, &o.weights) {
                    if best_corr.is_none_or(|(b, _)| r > b) {
                        best_corr = Some((r, j));
                    }
                }
                let d = dsc(&c.members, &o.members);
                if best_dsc.is_none_or(|(b, _)| d > b) {
                    best_dsc = Some((d, j));
                }
            }
            CommunityMatch {
                community: k,
                size: c.size(),
                best_correlation: best_corr.map(|b| b.0),
                correlation_match: best_corr.map(|b| b.1),
                best_dsc: best_dsc.map_or(0.0, |b| b.0),
                dsc_match: best_dsc.map(|b| b.1),
            }
        })
        .collect();

    let defined: Vec<f64> = per_community.iter().filter_map(|m| m.best_correlation).collect();
    let mean_correlation = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    let mean_dsc = if per_community.is_empty() {
        0.0
    } else {
        per_community.iter().map(|m| m.best_dsc).sum::<f64>() / per_community.len() as f64
    };
    Ok(RobustnessReport {
        per_community,
        mean_correlation,
        mean_dsc,
        reference_sizes: reference.sizes(),
        other_sizes: other.sizes(),
        matching: "maximum over all communities of the other set, with replacement".into(),
    })
}

#[cfg(test)]
mod tests;
