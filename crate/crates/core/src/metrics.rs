//! Classification assessment: confusion matrix, accuracy (E1), sensitivity
//! (E2), specificity (E3) and area under the ROC curve (E4).
//!
//! A metric whose denominator is empty is [`MetricValue::Unavailable`] with a
//! reason, never NaN, so that cross-validation can skip the fold explicitly.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("labels ({labels}) and scores ({scores}) differ in length")]
    LengthMismatch { labels: usize, scores: usize },
    #[error("no observations")]
    Empty,
    #[error("classification threshold must lie in (0, 1)")]
    InvalidThreshold,
    #[error("label at {0} is not 0 or 1")]
    NonBinaryLabel(usize),
    #[error("score at {0} is not finite")]
    NonFiniteScore(usize),
    #[error("unknown metric `{0}` (expected E1, E2, E3 or E4)")]
    UnknownMetric(String),
}

/// The four assessment metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    /// Accuracy.
    E1,
    /// Sensitivity (true-positive rate).
    E2,
    /// Specificity (true-negative rate).
    E3,
    /// Area under the ROC curve.
    E4,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::E1, Metric::E2, Metric::E3, Metric::E4];

    pub fn description(self) -> &'static str {
        match self {
            Metric::E1 => "accuracy",
            Metric::E2 => "sensitivity",
            Metric::E3 => "specificity",
            Metric::E4 => "AUC",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Metric {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "E1" | "ACCURACY" => Ok(Metric::E1),
            "E2" | "SENSITIVITY" => Ok(Metric::E2),
            "E3" | "SPECIFICITY" => Ok(Metric::E3),
            "E4" | "AUC" => Ok(Metric::E4),
            _ => Err(MetricsError::UnknownMetric(s.to_string())),
        }
    }
}

/// Why a metric has no value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnavailableReason {
    /// Leave-one-out test sets hold a single label, so only E1 is defined.
    SingleObservationTestSet,
    /// No positive observations (P = 0).
    NoPositives,
    /// No negative observations (N = 0).
    NoNegatives,
    /// No observations at all.
    Empty,
    /// No fold produced a value for this metric.
    NoFoldAvailable,
    /// Read from a table that printed no value.
    NotReported,
    /// The whole (link, routine) evaluation failed.
    EvaluationFailed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricValue {
    Value(f64),
    Unavailable(UnavailableReason),
}

impl MetricValue {
    pub fn value(self) -> Option<f64> {
        match self {
            MetricValue::Value(v) => Some(v),
            MetricValue::Unavailable(_) => None,
        }
    }

    pub fn is_available(self) -> bool {
        matches!(self, MetricValue::Value(_))
    }
}

/// E1–E4 for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub e1: MetricValue,
    pub e2: MetricValue,
    pub e3: MetricValue,
    pub e4: MetricValue,
}

impl MetricSet {
    pub fn get(&self, metric: Metric) -> MetricValue {
        match metric {
            Metric::E1 => self.e1,
            Metric::E2 => self.e2,
            Metric::E3 => self.e3,
            Metric::E4 => self.e4,
        }
    }

    pub fn set(&mut self, metric: Metric, value: MetricValue) {
        match metric {
            Metric::E1 => self.e1 = value,
            Metric::E2 => self.e2 = value,
            Metric::E3 => self.e3 = value,
            Metric::E4 => self.e4 = value,
        }
    }

    pub fn unavailable(reason: UnavailableReason) -> Self {
        let u = MetricValue::Unavailable(reason);
        Self { e1: u, e2: u, e3: u, e4: u }
    }

    /// All four metrics for one set of labels and scores.
    pub fn compute(labels: &[u8], scores: &[f64], threshold: f64) -> Result<Self, MetricsError> {
        let cm = confusion_matrix(labels, scores, threshold)?;
        Ok(Self {
            e1: accuracy(&cm),
            e2: sensitivity(&cm),
            e3: specificity(&cm),
            e4: auc(labels, scores)?,
        })
    }
}

/// Counts of a thresholded classifier against the true labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn new(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        Self { tp, fp, fn_, tn }
    }

    /// Actual positives `P = TP + FN`.
    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    /// Actual negatives `N = FP + TN`.
    pub fn negatives(&self) -> usize {
        self.fp + self.tn
    }

    pub fn total(&self) -> usize {
        self.positives() + self.negatives()
    }
}

fn check_inputs(labels: &[u8], scores: &[f64]) -> Result<(), MetricsError> {
    if labels.len() != scores.len() {
        return Err(MetricsError::LengthMismatch {
            labels: labels.len(),
            scores: scores.len(),
        });
    }
    if let Some(i) = labels.iter().position(|&y| y > 1) {
        return Err(MetricsError::NonBinaryLabel(i));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(MetricsError::NonFiniteScore(i));
    }
    Ok(())
}

/// Tabulates predictions `score ≥ threshold → 1` against `labels`.
pub fn confusion_matrix(labels: &[u8], scores: &[f64], threshold: f64) -> Result<ConfusionMatrix, MetricsError> {
    check_inputs(labels, scores)?;
    if labels.is_empty() {
        return Err(MetricsError::Empty);
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(MetricsError::InvalidThreshold);
    }
    let mut cm = ConfusionMatrix::default();
    for (&y, &s) in labels.iter().zip(scores) {
        match (y == 1, s >= threshold) {
            (true, true) => cm.tp += 1,
            (false, true) => cm.fp += 1,
            (true, false) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

fn ratio(num: usize, den: usize, reason: UnavailableReason) -> MetricValue {
    if den == 0 {
        MetricValue::Unavailable(reason)
    } else {
        MetricValue::Value(num as f64 / den as f64)
    }
}

/// E1: `(TP + TN) / (P + N)`.
pub fn accuracy(cm: &ConfusionMatrix) -> MetricValue {
    ratio(cm.tp + cm.tn, cm.total(), UnavailableReason::Empty)
}

/// E2: `TP / P`.
pub fn sensitivity(cm: &ConfusionMatrix) -> MetricValue {
    ratio(cm.tp, cm.positives(), UnavailableReason::NoPositives)
}

/// E3: `TN / N`.
pub fn specificity(cm: &ConfusionMatrix) -> MetricValue {
    ratio(cm.tn, cm.negatives(), UnavailableReason::NoNegatives)
}

/// Mann–Whitney counts behind the AUC.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankSum {
    /// `2U`: twice the number of positive–negative pairs won by the positive,
    /// ties counting one half. Kept doubled so it stays an integer.
    pub twice_u: u64,
    pub positives: u64,
    pub negatives: u64,
}

impl RankSum {
    pub fn auc(&self) -> f64 {
        self.twice_u as f64 / (2 * self.positives * self.negatives) as f64
    }
}

/// Rank-sum form of the Mann–Whitney statistic in `O(m log m)`.
///
/// Scores are sorted once; each run of tied scores occupying 1-based sorted
/// positions `i..=j` gets mid-rank `(i + j)/2`, tracked doubled as `i + j`.
/// Then `2U = 2·R₊ − P(P + 1)` where `R₊` is the positives' rank sum.
pub fn rank_sum(labels: &[u8], scores: &[f64]) -> Result<RankSum, MetricsError> {
    check_inputs(labels, scores)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));

    let mut twice_rank_sum: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[start]] {
            end += 1;
        }
        let twice_mid = (start + 1 + end + 1) as u64;
        let tied_pos = order[start..=end].iter().filter(|&&i| labels[i] == 1).count() as u64;
        twice_rank_sum += twice_mid * tied_pos;
        start = end + 1;
    }

    let positives = labels.iter().filter(|&&y| y == 1).count() as u64;
    let negatives = labels.len() as u64 - positives;
    Ok(RankSum {
        twice_u: twice_rank_sum - positives * (positives + 1),
        positives,
        negatives,
    })
}

/// E4: probability that a random positive outscores a random negative, ties
/// counting one half. Unavailable when either class is absent.
pub fn auc(labels: &[u8], scores: &[f64]) -> Result<MetricValue, MetricsError> {
    let rs = rank_sum(labels, scores)?;
    Ok(if rs.positives == 0 {
        MetricValue::Unavailable(UnavailableReason::NoPositives)
    } else if rs.negatives == 0 {
        MetricValue::Unavailable(UnavailableReason::NoNegatives)
    } else {
        MetricValue::Value(rs.auc())
    })
}
