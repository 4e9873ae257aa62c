//! Threshold-free detection metrics and accuracy-retention curves.
//!
//! Scores are uncertainties: higher means "more likely positive"
//! (misclassified, out-of-distribution, ...). `+inf` is a legal score that
//! sorts above every finite value and ties with other `+inf` scores.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Scores with binary flags; `true` marks the class expected to score higher.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSet {
    scores: Vec<f64>,
    flags: Vec<bool>,
    positives: usize,
}

impl DetectionSet {
    pub fn new(scores: Vec<f64>, flags: Vec<bool>) -> Result<Self> {
        if scores.len() != flags.len() {
            return Err(Error::LengthMismatch {
                scores: scores.len(),
                flags: flags.len(),
            });
        }
        if scores.iter().any(|s| s.is_nan()) {
            return Err(Error::NanScore);
        }
        let positives = flags.iter().filter(|&&f| f).count();
        if positives == 0 || positives == flags.len() {
            return Err(Error::OneClassOnly);
        }
        Ok(DetectionSet {
            scores,
            flags,
            positives,
        })
    }

    /// Builds a set from separate positive and negative score lists.
    pub fn from_groups(pos: &[f64], neg: &[f64]) -> Result<Self> {
        let scores = pos.iter().chain(neg).copied().collect();
        let flags = std::iter::repeat_n(true, pos.len())
            .chain(std::iter::repeat_n(false, neg.len()))
            .collect();
        Self::new(scores, flags)
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.positives
    }

    pub fn negatives(&self) -> usize {
        self.scores.len() - self.positives
    }

    /// Groups of tied scores as `(positives, negatives)`, highest score first.
    fn tie_groups_descending(&self) -> Vec<(u64, u64)> {
        let mut idx: Vec<usize> = (0..self.scores.len()).collect();
        idx.sort_unstable_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]));
        let mut groups: Vec<(u64, u64)> = Vec::new();
        let mut prev: Option<f64> = None;
        for i in idx {
            let s = self.scores[i];
            if prev != Some(s) {
                groups.push((0, 0));
                prev = Some(s);
            }
            let g = groups.last_mut().expect("group pushed above");
            if self.flags[i] {
                g.0 += 1;
            } else {
                g.1 += 1;
            }
        }
        groups
    }
}

/// Exact Mann-Whitney counts behind [`auroc`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MannWhitney {
    /// `2 * (#pos>neg pairs) + #tied pairs`.
    pub twice_u: u64,
    /// `#positives * #negatives`.
    pub pairs: u64,
}

impl MannWhitney {
    pub fn auroc(&self) -> f64 {
        self.twice_u as f64 / (2 * self.pairs) as f64
    }
}

/// Mann-Whitney pair counts with ties counted as half a win.
pub fn mann_whitney(d: &DetectionSet) -> MannWhitney {
    let groups = d.tie_groups_descending();
    let mut twice_u = 0u64;
    let mut neg_below = d.negatives() as u64;
    for (pos, neg) in groups {
        neg_below -= neg;
        twice_u += 2 * pos * neg_below + pos * neg;
    }
    MannWhitney {
        twice_u,
        pairs: (d.positives() * d.negatives()) as u64,
    }
}

/// Area under the ROC curve with midrank tie handling.
pub fn auroc(d: &DetectionSet) -> f64 {
    mann_whitney(d).auroc()
}

/// Average precision: `sum_k (R_k - R_{k-1}) P_k` over distinct thresholds,
/// with tied scores entering at the same cutoff.
pub fn aupr(d: &DetectionSet) -> f64 {
    let total_pos = d.positives() as f64;
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for (pos, neg) in d.tie_groups_descending() {
        tp += pos;
        fp += neg;
        let recall = tp as f64 / total_pos;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    ap
}

/// Smallest false-positive rate among thresholds `t` (predict positive when
/// `score >= t`) whose true-positive rate reaches `level`.
pub fn fpr_at_tpr(d: &DetectionSet, level: f64) -> Result<f64> {
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "TPR level {level} outside (0, 1]"
        )));
    }
    let (total_pos, total_neg) = (d.positives() as f64, d.negatives() as f64);
    let (mut tp, mut fp) = (0u64, 0u64);
    for (pos, neg) in d.tie_groups_descending() {
        tp += pos;
        fp += neg;
        // FPR only grows as the threshold drops, so the first hit is minimal
        if tp as f64 / total_pos >= level {
            return Ok(fp as f64 / total_neg);
        }
    }
    Ok(1.0)
}

/// Uncertainty scores paired with prediction correctness.
#[derive(Debug, Clone, PartialEq)]
pub struct RetentionSet {
    scores: Vec<f64>,
    correct: Vec<bool>,
}

impl RetentionSet {
    pub fn new(scores: Vec<f64>, correct: Vec<bool>) -> Result<Self> {
        if scores.len() != correct.len() {
            return Err(Error::LengthMismatch {
                scores: scores.len(),
                flags: correct.len(),
            });
        }
        if scores.is_empty() {
            return Err(Error::Empty);
        }
        if scores.iter().any(|s| s.is_nan()) {
            return Err(Error::NanScore);
        }
        Ok(RetentionSet { scores, correct })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn accuracy(&self) -> f64 {
        self.correct.iter().filter(|&&c| c).count() as f64 / self.len() as f64
    }
}

/// Accuracy on the `m` most certain items for `m = 1..=n`, as
/// `(m/n, accuracy)`. Ties keep input order.
pub fn retention_curve(r: &RetentionSet) -> Vec<(f64, f64)> {
    let mut idx: Vec<usize> = (0..r.len()).collect();
    idx.sort_by(|&a, &b| {
        r.scores[a]
            .partial_cmp(&r.scores[b])
            .unwrap_or(Ordering::Equal)
    });
    let n = r.len() as f64;
    let mut hits = 0usize;
    idx.iter()
        .enumerate()
        .map(|(m, &i)| {
            hits += r.correct[i] as usize;
            let m = (m + 1) as f64;
            (m / n, hits as f64 / m)
        })
        .collect()
}

/// Normalized area under the retention curve over fractions `[f_min, 1]`.
///
/// Uses the trapezoid rule on the achievable fractions `m/n >= f_min`; when
/// the smallest of those exceeds `f_min` the curve is extended to `f_min`
/// with its first accuracy.
pub fn auarc(r: &RetentionSet, f_min: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&f_min) {
        return Err(Error::InvalidArgument(format!(
            "f_min {f_min} outside [0, 1)"
        )));
    }
    let curve = retention_curve(r);
    let n = r.len();
    // guard against f_min * n landing an ulp above an integer
    let m_min = ((f_min * n as f64 - 1e-9).ceil() as usize).max(1);
    let mut pts: Vec<(f64, f64)> = curve[m_min - 1..].to_vec();
    if pts[0].0 > f_min {
        pts.insert(0, (f_min, pts[0].1));
    }
    let area: f64 = pts
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum();
    Ok(area / (1.0 - f_min))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auroc_examples() {
        let d = DetectionSet::from_groups(&[0.3, 0.4], &[0.1, 0.2]).unwrap();
        assert_eq!(auroc(&d), 1.0);
        let d = DetectionSet::from_groups(&[0.5; 3], &[0.5; 4]).unwrap();
        assert_eq!(auroc(&d), 0.5);
        let d = DetectionSet::from_groups(&[0.4, 0.6], &[0.2, 0.5]).unwrap();
        assert_eq!(auroc(&d), 0.75);
    }

    #[test]
    fn infinite_scores_rank_highest() {
        let d = DetectionSet::from_groups(&[f64::INFINITY, 1.0], &[1e300, f64::INFINITY]).unwrap();
        // inf vs 1e300 win, inf vs inf tie, 1 vs both loss
        assert_eq!(auroc(&d), 1.5 / 4.0);
    }

    #[test]
    fn one_class_is_rejected() {
        assert_eq!(
            DetectionSet::from_groups(&[1.0], &[]),
            Err(Error::OneClassOnly)
        );
        assert_eq!(
            DetectionSet::from_groups(&[], &[1.0]),
            Err(Error::OneClassOnly)
        );
        assert!(matches!(
            DetectionSet::new(vec![1.0], vec![true, false]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn aupr_examples() {
        assert_eq!(
            aupr(&DetectionSet::from_groups(&[0.9], &[0.1]).unwrap()),
            1.0
        );
        assert_eq!(
            aupr(&DetectionSet::from_groups(&[0.1], &[0.9]).unwrap()),
            0.5
        );
        let ap = aupr(&DetectionSet::from_groups(&[0.8, 0.6], &[0.7]).unwrap());
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn aupr_tied_group_enters_at_once() {
        // one cutoff containing everything: precision 1/2 at recall 1
        let ap = aupr(&DetectionSet::from_groups(&[0.5], &[0.5]).unwrap());
        assert_eq!(ap, 0.5);
    }

    #[test]
    fn fpr_examples() {
        let sep = DetectionSet::from_groups(&[0.3, 0.4], &[0.1, 0.2]).unwrap();
        assert_eq!(fpr_at_tpr(&sep, 0.95).unwrap(), 0.0);
        let tied = DetectionSet::from_groups(&[1.0; 5], &[1.0; 5]).unwrap();
        assert_eq!(fpr_at_tpr(&tied, 0.95).unwrap(), 1.0);
        let hand = DetectionSet::from_groups(&[2.0, 1.0], &[1.5]).unwrap();
        assert_eq!(fpr_at_tpr(&hand, 0.95).unwrap(), 1.0);
        assert_eq!(fpr_at_tpr(&hand, 0.5).unwrap(), 0.0);
        assert!(fpr_at_tpr(&hand, 0.0).is_err());
    }

    #[test]
    fn retention_examples() {
        let all = RetentionSet::new(vec![3.0, 1.0, 2.0], vec![true; 3]).unwrap();
        assert!(retention_curve(&all).iter().all(|&(_, a)| a == 1.0));

        let r = RetentionSet::new(vec![1.0, 2.0, 3.0, 4.0], vec![true, true, true, false]).unwrap();
        assert_eq!(
            retention_curve(&r),
            vec![(0.25, 1.0), (0.5, 1.0), (0.75, 1.0), (1.0, 0.75)]
        );

        let one = RetentionSet::new(vec![0.1], vec![true]).unwrap();
        assert_eq!(retention_curve(&one), vec![(1.0, 1.0)]);
        assert_eq!(RetentionSet::new(vec![], vec![]), Err(Error::Empty));
    }

    #[test]
    fn retention_ties_keep_input_order() {
        let r = RetentionSet::new(vec![1.0, 1.0], vec![false, true]).unwrap();
        assert_eq!(retention_curve(&r), vec![(0.5, 0.0), (1.0, 0.5)]);
    }

    #[test]
    fn auarc_examples() {
        let all = RetentionSet::new(vec![1.0, 2.0, 3.0], vec![true; 3]).unwrap();
        assert_eq!(auarc(&all, 0.5).unwrap(), 1.0);
        let r = RetentionSet::new(vec![1.0, 2.0, 3.0, 4.0], vec![true, true, true, false]).unwrap();
        assert_eq!(auarc(&r, 0.5).unwrap(), 0.9375);
        let none = RetentionSet::new(vec![1.0, 2.0], vec![false; 2]).unwrap();
        assert_eq!(auarc(&none, 0.5).unwrap(), 0.0);
        assert!(auarc(&r, 1.0).is_err());
    }

    #[test]
    fn auarc_left_extension() {
        // n = 3, f_min = 0.5: fractions 2/3 and 1, extended back to 0.5
        let r = RetentionSet::new(vec![1.0, 2.0, 3.0], vec![true, false, true]).unwrap();
        let (a, b) = (0.5, 2.0 / 3.0);
        let want = ((2.0 / 3.0 - 0.5) * a + (1.0 / 3.0) * (a + b) / 2.0) / 0.5;
        assert!((auarc(&r, 0.5).unwrap() - want).abs() < 1e-15);
        // single item: constant curve
        let one = RetentionSet::new(vec![0.0], vec![true]).unwrap();
        assert_eq!(auarc(&one, 0.5).unwrap(), 1.0);
    }
}
