//! Threshold-free evaluation of confidence scores.
//!
//! ID samples are positives. A sample is accepted as ID when its score is
//! `>= threshold`.

use alloc::vec::Vec;

use crate::{CoreError, Result};

/// AUROC and FAR95 for one ID/OOD pair, or a macro average of several.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub auroc: f64,
    pub far95: f64,
    pub id_count: usize,
    pub ood_count: usize,
    /// Threshold realizing FAR95. `None` for macro averages.
    pub threshold_used: Option<f64>,
}

fn check(id: &[f64], ood: &[f64]) -> Result<()> {
    if id.is_empty() {
        return Err(CoreError::Empty("ID scores"));
    }
    if ood.is_empty() {
        return Err(CoreError::Empty("OOD scores"));
    }
    if id.iter().chain(ood).any(|s| !s.is_finite()) {
        return Err(CoreError::NonFinite("scores"));
    }
    Ok(())
}

/// Probability that a random ID score beats a random OOD score, ties counting half.
///
/// One sort over the pooled scores; each tie group contributes
/// `2 * id_in_group * ood_below + id_in_group * ood_in_group` half-wins,
/// accumulated as an exact integer.
pub fn auroc(id_scores: &[f64], ood_scores: &[f64]) -> Result<f64> {
    check(id_scores, ood_scores)?;
    let mut all: Vec<(f64, bool)> = id_scores
        .iter()
        .map(|&s| (s, true))
        .chain(ood_scores.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut half_wins: u128 = 0;
    let mut ood_below: u128 = 0;
    let mut i = 0;
    while i < all.len() {
        let value = all[i].0;
        let (mut id_here, mut ood_here) = (0u128, 0u128);
        while i < all.len() && all[i].0 == value {
            if all[i].1 {
                id_here += 1;
            } else {
                ood_here += 1;
            }
            i += 1;
        }
        half_wins += 2 * id_here * ood_below + id_here * ood_here;
        ood_below += ood_here;
    }
    let pairs = 2 * id_scores.len() as u128 * ood_scores.len() as u128;
    Ok(half_wins as f64 / pairs as f64)
}

/// Index (1-based) of the ID score used as threshold: `ceil(0.95 * m)`.
pub fn tpr95_rank(id_count: usize) -> usize {
    (95 * id_count).div_ceil(100)
}

/// Fraction of OOD samples accepted at the largest threshold keeping TPR >= 95%.
///
/// Returns `(far95, threshold)`, where the threshold is the `ceil(0.95 m)`-th
/// largest ID score.
pub fn far95(id_scores: &[f64], ood_scores: &[f64]) -> Result<(f64, f64)> {
    check(id_scores, ood_scores)?;
    let mut sorted = id_scores.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let threshold = sorted[tpr95_rank(sorted.len()) - 1];
    let accepted = ood_scores.iter().filter(|&&s| s >= threshold).count();
    Ok((accepted as f64 / ood_scores.len() as f64, threshold))
}

/// Both metrics for one ID/OOD pair.
pub fn evaluate(id_scores: &[f64], ood_scores: &[f64]) -> Result<MetricReport> {
    let auroc = auroc(id_scores, ood_scores)?;
    let (far95, threshold) = far95(id_scores, ood_scores)?;
    Ok(MetricReport {
        auroc,
        far95,
        id_count: id_scores.len(),
        ood_count: ood_scores.len(),
        threshold_used: Some(threshold),
    })
}

/// Unweighted mean over OOD sets, regardless of their sizes.
///
/// `id_count` is taken from the first report; `ood_count` is the total.
pub fn macro_average(reports: &[MetricReport]) -> Result<MetricReport> {
    let first = reports.first().ok_or(CoreError::Empty("metric reports"))?;
    if reports.len() == 1 {
        return Ok(*first);
    }
    let n = reports.len() as f64;
    Ok(MetricReport {
        auroc: reports.iter().map(|r| r.auroc).sum::<f64>() / n,
        far95: reports.iter().map(|r| r.far95).sum::<f64>() / n,
        id_count: first.id_count,
        ood_count: reports.iter().map(|r| r.ood_count).sum(),
        threshold_used: None,
    })
}
