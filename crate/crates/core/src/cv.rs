//! Train/validation partitions for the cross-validation routines and
//! aggregation of per-fold metrics.
//!
//! Leave-p-out is realized as repeated random hold-out splits: exhaustive
//! enumeration of all `C(n, p)` splits is infeasible at any useful `n`.
//! All randomness flows from one `ChaCha8` stream seeded by the caller, so a
//! `(scheme, n, seed)` triple always yields the same partitions.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError};
use crate::glm::{fit_irls, predict_probabilities, FitConfig, FitError};
use crate::link::LinkSpec;
use crate::metrics::{Metric, MetricSet, MetricValue, MetricsError, UnavailableReason};

/// Repeats used for the two leave-p-out routines unless overridden.
pub const DEFAULT_REPEATS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvScheme {
    Loocv,
    Holdout { train_fraction: f64, repeats: usize },
    KFold { k: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CvError {
    #[error("invalid scheme {scheme}: {reason}")]
    InvalidScheme { scheme: String, reason: String },
    #[error("unknown scheme `{0}` (expected loocv, lpocv50, lpocv75, kfold5, kfold10, holdout:<frac>:<repeats> or kfold:<k>)")]
    UnknownScheme(String),
    #[error("{scheme} needs more observations than n = {n}")]
    TooFewObservations { scheme: String, n: usize },
    #[error("every fold was skipped ({0})")]
    AllFoldsSkipped(SkipCounts),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

impl CvScheme {
    /// Hold 50%, leave 50%.
    pub fn lpocv50(repeats: usize) -> Self {
        CvScheme::Holdout {
            train_fraction: 0.5,
            repeats,
        }
    }

    /// Hold 75%, leave 25%.
    pub fn lpocv75(repeats: usize) -> Self {
        CvScheme::Holdout {
            train_fraction: 0.75,
            repeats,
        }
    }

    /// The five standard routines in report order.
    pub fn standard(repeats: usize) -> [CvScheme; 5] {
        [
            CvScheme::Loocv,
            CvScheme::lpocv50(repeats),
            CvScheme::lpocv75(repeats),
            CvScheme::KFold { k: 5 },
            CvScheme::KFold { k: 10 },
        ]
    }

    /// Parses a scheme name; `repeats` fills in the leave-p-out shorthands.
    pub fn parse_with_repeats(s: &str, repeats: usize) -> Result<Self, CvError> {
        let lower = s.trim().to_ascii_lowercase();
        let scheme = match lower.as_str() {
            "loocv" => CvScheme::Loocv,
            "lpocv50" => CvScheme::lpocv50(repeats),
            "lpocv75" => CvScheme::lpocv75(repeats),
            "kfold5" => CvScheme::KFold { k: 5 },
            "kfold10" => CvScheme::KFold { k: 10 },
            other => {
                let parts: Vec<&str> = other.split(':').collect();
                let bad = || CvError::UnknownScheme(s.to_string());
                match parts.as_slice() {
                    ["kfold", k] => CvScheme::KFold {
                        k: k.parse().map_err(|_| bad())?,
                    },
                    ["holdout", frac, reps] => CvScheme::Holdout {
                        train_fraction: frac.parse().map_err(|_| bad())?,
                        repeats: reps.parse().map_err(|_| bad())?,
                    },
                    _ => return Err(bad()),
                }
            }
        };
        scheme.validate()?;
        Ok(scheme)
    }

    /// Short machine name, the inverse of [`CvScheme::parse_with_repeats`].
    pub fn name(&self) -> String {
        match *self {
            CvScheme::Loocv => "loocv".into(),
            CvScheme::Holdout { train_fraction, .. } if train_fraction == 0.5 => "lpocv50".into(),
            CvScheme::Holdout { train_fraction, .. } if train_fraction == 0.75 => "lpocv75".into(),
            CvScheme::Holdout {
                train_fraction,
                repeats,
            } => format!("holdout:{train_fraction}:{repeats}"),
            CvScheme::KFold { k: 5 } => "kfold5".into(),
            CvScheme::KFold { k: 10 } => "kfold10".into(),
            CvScheme::KFold { k } => format!("kfold:{k}"),
        }
    }

    /// Block heading used in rendered tables.
    pub fn heading(&self) -> String {
        match *self {
            CvScheme::Loocv => "LOOCV".into(),
            CvScheme::Holdout { train_fraction, .. } => {
                let hold = (train_fraction * 100.0).round();
                format!("LPOCV {hold}-{}", 100.0 - hold)
            }
            CvScheme::KFold { k } => format!("{k} Fold CV"),
        }
    }

    pub fn validate(&self) -> Result<(), CvError> {
        let invalid = |reason: &str| {
            Err(CvError::InvalidScheme {
                scheme: self.name(),
                reason: reason.into(),
            })
        };
        match *self {
            CvScheme::Loocv => Ok(()),
            CvScheme::Holdout {
                train_fraction,
                repeats,
            } => {
                if !(train_fraction > 0.0 && train_fraction < 1.0) {
                    invalid("train fraction must lie in (0, 1)")
                } else if repeats == 0 {
                    invalid("repeats must be at least 1")
                } else {
                    Ok(())
                }
            }
            CvScheme::KFold { k } if k < 2 => invalid("k must be at least 2"),
            CvScheme::KFold { .. } => Ok(()),
        }
    }
}

impl fmt::Display for CvScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for CvScheme {
    type Err = CvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CvScheme::parse_with_repeats(s, DEFAULT_REPEATS)
    }
}

/// One train/validation split. Both index lists are sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Training-set size for a hold-out split: `train_fraction · n` rounded half up.
pub fn holdout_train_size(train_fraction: f64, n: usize) -> usize {
    (train_fraction * n as f64 + 0.5).floor() as usize
}

/// Generates the partitions for `scheme` over `n` observations.
pub fn make_partitions(scheme: CvScheme, n: usize, seed: u64) -> Result<Vec<Partition>, CvError> {
    make_partitions_impl(scheme, n, seed, None)
}

/// Like [`make_partitions`] but keeps the class ratio of `labels` in every
/// fold (k-fold) or in the training set (hold-out). Leave-one-out is unchanged.
pub fn make_stratified_partitions(scheme: CvScheme, labels: &[u8], seed: u64) -> Result<Vec<Partition>, CvError> {
    make_partitions_impl(scheme, labels.len(), seed, Some(labels))
}

fn make_partitions_impl(scheme: CvScheme, n: usize, seed: u64, labels: Option<&[u8]>) -> Result<Vec<Partition>, CvError> {
    scheme.validate()?;
    let too_small = || CvError::TooFewObservations {
        scheme: scheme.name(),
        n,
    };
    if n < 3 {
        return Err(too_small());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let partitions = match scheme {
        CvScheme::Loocv => (0..n)
            .map(|i| Partition {
                train: (0..n).filter(|&j| j != i).collect(),
                test: vec![i],
            })
            .collect(),
        CvScheme::KFold { k } => {
            if k > n {
                return Err(too_small());
            }
            let mut folds = vec![Vec::new(); k];
            match labels {
                None => {
                    let mut perm: Vec<usize> = (0..n).collect();
                    perm.shuffle(&mut rng);
                    // first n % k folds take one extra element
                    let base = n / k;
                    let extra = n % k;
                    let mut at = 0;
                    for (j, fold) in folds.iter_mut().enumerate() {
                        let size = base + usize::from(j < extra);
                        fold.extend_from_slice(&perm[at..at + size]);
                        at += size;
                    }
                }
                Some(labels) => {
                    let (mut pos, mut neg) = split_by_class(labels);
                    pos.shuffle(&mut rng);
                    neg.shuffle(&mut rng);
                    for (i, idx) in pos.into_iter().chain(neg).enumerate() {
                        folds[i % k].push(idx);
                    }
                }
            }
            folds
                .into_iter()
                .map(|mut test| {
                    test.sort_unstable();
                    Partition {
                        train: complement(&test, n),
                        test,
                    }
                })
                .collect()
        }
        CvScheme::Holdout {
            train_fraction,
            repeats,
        } => {
            let train_size = holdout_train_size(train_fraction, n);
            if train_size == 0 || train_size >= n {
                return Err(too_small());
            }
            let mut out = Vec::with_capacity(repeats);
            for _ in 0..repeats {
                let mut train = match labels {
                    None => {
                        let mut perm: Vec<usize> = (0..n).collect();
                        perm.shuffle(&mut rng);
                        perm.truncate(train_size);
                        perm
                    }
                    Some(labels) => {
                        let (mut pos, mut neg) = split_by_class(labels);
                        pos.shuffle(&mut rng);
                        neg.shuffle(&mut rng);
                        pos.truncate(holdout_train_size(train_fraction, pos.len()));
                        neg.truncate(holdout_train_size(train_fraction, neg.len()));
                        pos.extend(neg);
                        pos
                    }
                };
                train.sort_unstable();
                out.push(Partition {
                    test: complement(&train, n),
                    train,
                });
            }
            out
        }
    };
    Ok(partitions)
}

fn split_by_class(labels: &[u8]) -> (Vec<usize>, Vec<usize>) {
    (0..labels.len()).partition(|&i| labels[i] == 1)
}

/// Sorted indices of `0..n` not in the sorted list `taken`.
fn complement(taken: &[usize], n: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - taken.len());
    let mut it = taken.iter().peekable();
    for i in 0..n {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    out
}

/// Options for [`evaluate`] beyond the scheme itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub fit: FitConfig,
    /// Classification threshold on the predicted probability.
    pub threshold: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            fit: FitConfig::default(),
            threshold: 0.5,
            seed: 0,
            stratified: false,
        }
    }
}

/// Folds dropped before scoring, by cause.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SkipCounts {
    pub separation: usize,
    pub rank_deficient: usize,
    /// Training subset had only one class.
    pub single_class_train: usize,
}

impl SkipCounts {
    pub fn total(&self) -> usize {
        self.separation + self.rank_deficient + self.single_class_train
    }
}

impl fmt::Display for SkipCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "separation: {}, rank deficient: {}, single-class training set: {}",
            self.separation, self.rank_deficient, self.single_class_train
        )
    }
}

/// Aggregated metrics for one (link, scheme) cell plus fold bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvEvaluation {
    pub link: LinkSpec,
    pub scheme: CvScheme,
    pub metrics: MetricSet,
    pub folds: usize,
    pub skipped: SkipCounts,
    /// Scored folds whose fit hit `max_iterations` without converging.
    pub nonconverged: usize,
    /// For each of E1..E4, scored folds where that metric was unavailable.
    pub unavailable_folds: [usize; 4],
    /// For each of E1..E4, folds contributing to the mean.
    pub contributing_folds: [usize; 4],
}

/// Per-fold outcome, in partition order.
#[derive(Debug, Clone, PartialEq)]
pub enum FoldOutcome {
    Scored { metrics: MetricSet, converged: bool },
    Skipped(SkipReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    Separation,
    RankDeficient,
    SingleClassTrain,
}

/// Fits on each training split, scores the validation split and averages.
pub fn evaluate(data: &Dataset, link: LinkSpec, scheme: CvScheme, options: &EvalOptions) -> Result<CvEvaluation, CvError> {
    let partitions = if options.stratified {
        make_stratified_partitions(scheme, data.response(), options.seed)?
    } else {
        make_partitions(scheme, data.n(), options.seed)?
    };
    let outcomes = partitions
        .iter()
        .map(|p| score_fold(data, link, p, options))
        .collect::<Result<Vec<_>, _>>()?;
    aggregate(link, scheme, &outcomes)
}

/// Fits and scores one partition.
pub fn score_fold(data: &Dataset, link: LinkSpec, partition: &Partition, options: &EvalOptions) -> Result<FoldOutcome, CvError> {
    let train = match data.subset(&partition.train) {
        Ok(train) => train,
        Err(DatasetError::SingleClass(_)) | Err(DatasetError::TooFewObservations { .. }) => {
            return Ok(FoldOutcome::Skipped(SkipReason::SingleClassTrain))
        }
        Err(e) => return Err(e.into()),
    };
    let fit = match fit_irls(&train, link, &options.fit) {
        Ok(fit) => fit,
        Err(FitError::Separation { .. }) => return Ok(FoldOutcome::Skipped(SkipReason::Separation)),
        Err(FitError::RankDeficient { .. }) => return Ok(FoldOutcome::Skipped(SkipReason::RankDeficient)),
        Err(e) => return Err(e.into()),
    };
    let scores = predict_probabilities(&fit, &data.rows(&partition.test)?)?;
    let labels = data.labels(&partition.test);
    Ok(FoldOutcome::Scored {
        metrics: MetricSet::compute(&labels, &scores, options.threshold)?,
        converged: fit.converged,
    })
}

/// Unweighted mean over folds of each available metric, in fold order.
pub fn aggregate(link: LinkSpec, scheme: CvScheme, outcomes: &[FoldOutcome]) -> Result<CvEvaluation, CvError> {
    let mut skipped = SkipCounts::default();
    let mut nonconverged = 0;
    let mut sums = [0.0; 4];
    let mut contributing = [0usize; 4];
    let mut unavailable = [0usize; 4];

    for outcome in outcomes {
        match outcome {
            FoldOutcome::Skipped(SkipReason::Separation) => skipped.separation += 1,
            FoldOutcome::Skipped(SkipReason::RankDeficient) => skipped.rank_deficient += 1,
            FoldOutcome::Skipped(SkipReason::SingleClassTrain) => skipped.single_class_train += 1,
            FoldOutcome::Scored { metrics, converged } => {
                nonconverged += usize::from(!converged);
                for (j, metric) in Metric::ALL.into_iter().enumerate() {
                    if scheme == CvScheme::Loocv && metric != Metric::E1 {
                        continue;
                    }
                    match metrics.get(metric) {
                        MetricValue::Value(v) => {
                            sums[j] += v;
                            contributing[j] += 1;
                        }
                        MetricValue::Unavailable(_) => unavailable[j] += 1,
                    }
                }
            }
        }
    }

    if skipped.total() == outcomes.len() {
        return Err(CvError::AllFoldsSkipped(skipped));
    }

    let mut metrics = MetricSet::unavailable(UnavailableReason::NoFoldAvailable);
    for (j, metric) in Metric::ALL.into_iter().enumerate() {
        let value = if scheme == CvScheme::Loocv && metric != Metric::E1 {
            MetricValue::Unavailable(UnavailableReason::SingleObservationTestSet)
        } else if contributing[j] == 0 {
            MetricValue::Unavailable(UnavailableReason::NoFoldAvailable)
        } else {
            MetricValue::Value(sums[j] / contributing[j] as f64)
        };
        metrics.set(metric, value);
    }

    Ok(CvEvaluation {
        link,
        scheme,
        metrics,
        folds: outcomes.len(),
        skipped,
        nonconverged,
        unavailable_folds: unavailable,
        contributing_folds: contributing,
    })
}
