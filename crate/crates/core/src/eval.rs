//! Frame-level ranking metrics.
//!
//! Both metrics sweep the scores in descending order and treat equal scores
//! as one block: ROC-AUC gives tied positive/negative pairs half credit, AP
//! adds one precision step per block.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("degenerate labels")]
    DegenerateLabels,
    #[error("scores and labels differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("non-finite score at position {0}")]
    NonFinite(usize),
}

/// Scores and binary ground truth for one video.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LabeledSeries {
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
}

impl LabeledSeries {
    pub fn new(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self, MetricError> {
        check(&scores, &labels)?;
        Ok(LabeledSeries { scores, labels })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub auc: f64,
    pub ap: f64,
}

fn check(scores: &[f64], labels: &[bool]) -> Result<(), MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::LengthMismatch(scores.len(), labels.len()));
    }
    match scores.iter().position(|s| !s.is_finite()) {
        Some(i) => Err(MetricError::NonFinite(i)),
        None => Ok(()),
    }
}

/// `(positives, negatives)` per block of equal scores, highest score first.
fn tie_blocks(scores: &[f64], labels: &[bool]) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut blocks: Vec<(usize, usize)> = Vec::new();
    let mut prev: Option<f64> = None;
    for i in order {
        if prev != Some(scores[i]) {
            blocks.push((0, 0));
            prev = Some(scores[i]);
        }
        let last = blocks.last_mut().expect("block pushed above");
        if labels[i] {
            last.0 += 1;
        } else {
            last.1 += 1;
        }
    }
    blocks
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, MetricError> {
    check(scores, labels)?;
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(MetricError::DegenerateLabels);
    }
    // counts stay exact in f64 up to 2^53 pairs
    let mut wins = 0.0f64;
    let mut negatives_above = 0usize;
    for (pos, neg) in tie_blocks(scores, labels) {
        // each positive beats every negative strictly below it
        let below = negatives - negatives_above - neg;
        wins += pos as f64 * below as f64 + 0.5 * pos as f64 * neg as f64;
        negatives_above += neg;
    }
    Ok(wins / (positives as f64 * negatives as f64))
}

/// Step-wise `sum (R_k - R_{k-1}) * P_k` over the descending tie blocks.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64, MetricError> {
    check(scores, labels)?;
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Err(MetricError::DegenerateLabels);
    }
    let mut ap = 0.0;
    let (mut tp, mut seen) = (0usize, 0usize);
    for (pos, neg) in tie_blocks(scores, labels) {
        tp += pos;
        seen += pos + neg;
        if pos > 0 {
            ap += (pos as f64 / positives as f64) * (tp as f64 / seen as f64);
        }
    }
    Ok(ap)
}

pub fn metrics(series: &LabeledSeries) -> Result<Metrics, MetricError> {
    Ok(Metrics {
        auc: roc_auc(&series.scores, &series.labels)?,
        ap: average_precision(&series.scores, &series.labels)?,
    })
}

/// Metrics over all frames of all videos concatenated.
pub fn micro_average(per_video: &[LabeledSeries]) -> Result<Metrics, MetricError> {
    let mut all = LabeledSeries::default();
    for s in per_video {
        all.scores.extend_from_slice(&s.scores);
        all.labels.extend_from_slice(&s.labels);
    }
    metrics(&all)
}

/// Unweighted mean of the per-video metrics. Each metric averages only the
/// videos where it is defined; `None` when no video qualifies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacroAverage {
    pub auc: Option<f64>,
    pub auc_videos: usize,
    pub ap: Option<f64>,
    pub ap_videos: usize,
}

pub fn macro_average(per_video: &[LabeledSeries]) -> MacroAverage {
    let mean =
        |vals: &[f64]| (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
    let aucs: Vec<f64> = per_video
        .iter()
        .filter_map(|s| roc_auc(&s.scores, &s.labels).ok())
        .collect();
    let aps: Vec<f64> = per_video
        .iter()
        .filter_map(|s| average_precision(&s.scores, &s.labels).ok())
        .collect();
    MacroAverage {
        auc: mean(&aucs),
        auc_videos: aucs.len(),
        ap: mean(&aps),
        ap_videos: aps.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if labels[i] && !labels[j] {
                    den += 1.0;
                    if scores[i] > scores[j] {
                        num += 1.0;
                    } else if scores[i] == scores[j] {
                        num += 0.5;
                    }
                }
            }
        }
        num / den
    }

    /// Thresholds at every distinct score; precision and recall are counted
    /// from scratch at each one.
    fn brute_ap(scores: &[f64], labels: &[bool]) -> f64 {
        let mut thresholds: Vec<f64> = scores.to_vec();
        thresholds.sort_by(|a, b| b.total_cmp(a));
        thresholds.dedup();
        let positives = labels.iter().filter(|&&l| l).count() as f64;
        let mut ap = 0.0;
        let mut prev_recall = 0.0;
        for t in thresholds {
            let kept: Vec<bool> = scores
                .iter()
                .zip(labels)
                .filter(|(s, _)| **s >= t)
                .map(|(_, &l)| l)
                .collect();
            let tp = kept.iter().filter(|&&l| l).count() as f64;
            let recall = tp / positives;
            ap += (recall - prev_recall) * tp / kept.len() as f64;
            prev_recall = recall;
        }
        ap
    }

    fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<bool>) {
        let n = rng.random_range(2..120);
        // few distinct levels so ties are common
        let levels = rng.random_range(1..12);
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        labels[0] = true;
        labels[1] = false;
        let scores = (0..n)
            .map(|_| rng.random_range(0..levels) as f64 / levels as f64)
            .collect();
        (scores, labels)
    }

    #[test]
    fn trivial_rankings() {
        assert_eq!(roc_auc(&[0.1, 0.9], &[false, true]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.9, 0.1], &[false, true]).unwrap(), 0.0);
        assert_eq!(roc_auc(&[0.5, 0.5], &[false, true]).unwrap(), 0.5);
        assert_eq!(
            average_precision(&[0.9, 0.8, 0.1], &[true, true, false]).unwrap(),
            1.0
        );
    }

    #[test]
    fn hand_computed_ap() {
        let ap = average_precision(&[0.9, 0.8, 0.7], &[true, false, true]).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_scores_give_prevalence() {
        let labels: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
        assert_eq!(average_precision(&[0.3; 10], &labels).unwrap(), 0.5);
        let labels: Vec<bool> = (0..8).map(|i| i < 2).collect();
        assert_eq!(average_precision(&[0.3; 8], &labels).unwrap(), 0.25);
    }

    #[test]
    fn degenerate_labels() {
        assert_eq!(
            roc_auc(&[0.1, 0.2], &[true, true]),
            Err(MetricError::DegenerateLabels)
        );
        assert_eq!(
            roc_auc(&[0.1, 0.2], &[false, false]),
            Err(MetricError::DegenerateLabels)
        );
        assert_eq!(
            average_precision(&[0.1], &[false]),
            Err(MetricError::DegenerateLabels)
        );
        assert_eq!(
            MetricError::DegenerateLabels.to_string(),
            "degenerate labels"
        );
        assert!(matches!(
            roc_auc(&[0.1], &[true, false]),
            Err(MetricError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn auc_matches_pairwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..200 {
            let (s, l) = random_instance(&mut rng);
            assert!((roc_auc(&s, &l).unwrap() - pairwise_auc(&s, &l)).abs() < 1e-12);
        }
    }

    #[test]
    fn ap_matches_brute_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let (s, l) = random_instance(&mut rng);
            assert!((average_precision(&s, &l).unwrap() - brute_ap(&s, &l)).abs() < 1e-12);
        }
    }

    #[test]
    fn micro_average_is_concatenation() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let videos: Vec<LabeledSeries> = (0..10)
            .map(|_| {
                let (s, l) = random_instance(&mut rng);
                LabeledSeries::new(s, l).unwrap()
            })
            .collect();
        let m = micro_average(&videos).unwrap();
        let scores: Vec<f64> = videos.iter().flat_map(|v| v.scores.clone()).collect();
        let labels: Vec<bool> = videos.iter().flat_map(|v| v.labels.clone()).collect();
        assert!((m.auc - pairwise_auc(&scores, &labels)).abs() < 1e-12);
        assert!((m.ap - brute_ap(&scores, &labels)).abs() < 1e-12);

        let single = micro_average(&videos[..1]).unwrap();
        assert_eq!(single, metrics(&videos[0]).unwrap());
    }

    #[test]
    fn macro_skips_undefined_videos() {
        let a = LabeledSeries::new(vec![0.1, 0.9], vec![false, true]).unwrap();
        let b = LabeledSeries::new(vec![0.9, 0.1], vec![false, true]).unwrap();
        let normal_only = LabeledSeries::new(vec![0.2, 0.3], vec![false, false]).unwrap();
        let m = macro_average(&[a, b, normal_only]);
        assert_eq!(m.auc, Some(0.5));
        assert_eq!(m.auc_videos, 2);
        assert_eq!(m.ap_videos, 2);
        assert_eq!(macro_average(&[]).auc, None);
    }

    proptest! {
        #[test]
        fn monotone_transform_keeps_auc(
            raw in proptest::collection::vec((0u8..20, any::<bool>()), 2..60)
        ) {
            let labels: Vec<bool> = raw.iter().map(|r| r.1).collect();
            prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
            let scores: Vec<f64> = raw.iter().map(|r| r.0 as f64 / 20.0).collect();
            let mapped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
            prop_assert_eq!(roc_auc(&scores, &labels).unwrap(), roc_auc(&mapped, &labels).unwrap());
        }

        #[test]
        fn complement_sums_to_one(
            labels in proptest::collection::vec(any::<bool>(), 2..60),
            seed in any::<u64>(),
        ) {
            prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // distinct scores
            let mut scores: Vec<f64> = (0..labels.len()).map(|i| i as f64).collect();
            for i in (1..scores.len()).rev() {
                scores.swap(i, rng.random_range(0..=i));
            }
            let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
            let total = roc_auc(&scores, &labels).unwrap() + roc_auc(&neg, &labels).unwrap();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        /// Prevalence is not a lower bound for every ranking (two negatives
        /// above two positives give 5/12 < 1/2); the all-positives-last
        /// ranking is.
        #[test]
        fn ap_bounded_by_worst_ranking(
            raw in proptest::collection::vec((0u8..10, any::<bool>()), 1..60)
        ) {
            let labels: Vec<bool> = raw.iter().map(|r| r.1).collect();
            let positives = labels.iter().filter(|&&l| l).count();
            prop_assume!(positives > 0);
            let negatives = labels.len() - positives;
            let scores: Vec<f64> = raw.iter().map(|r| r.0 as f64).collect();
            let worst: f64 = (1..=positives).map(|j| j as f64 / (negatives + j) as f64).sum::<f64>()
                / positives as f64;
            let ap = average_precision(&scores, &labels).unwrap();
            prop_assert!(ap >= worst - 1e-12 && ap <= 1.0 + 1e-12);
        }

        #[test]
        fn ap_reaches_prevalence_when_all_tied(
            labels in proptest::collection::vec(any::<bool>(), 1..60)
        ) {
            let positives = labels.iter().filter(|&&l| l).count();
            prop_assume!(positives > 0);
            let ap = average_precision(&vec![0.5; labels.len()], &labels).unwrap();
            prop_assert!((ap - positives as f64 / labels.len() as f64).abs() < 1e-12);
        }
    }
}
