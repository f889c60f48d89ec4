//! Data-driven choice of link function for binary regression.
//!
//! The crate fits binary GLMs under four latent distributions (probit, logit,
//! cauchit, complementary log-log) by IRLS, scores each fit under several
//! cross-validation routines with accuracy, sensitivity, specificity and AUC,
//! and picks a link per metric by counting rank-1 finishes across routines.
//!
//! ```
//! use linkselect::{fit_irls, FitConfig, LinkSpec, SyntheticModel};
//!
//! let data = SyntheticModel::new(200, vec![0.3, 1.2, -0.8], LinkSpec::Logit, 7)
//!     .generate()
//!     .unwrap();
//! let fit = fit_irls(&data, LinkSpec::Logit, &FitConfig::default()).unwrap();
//! assert!(fit.converged);
//! assert_eq!(fit.coefficients.len(), 3);
//! ```

pub mod cv;
pub mod dataset;
pub mod glm;
pub mod ingest;
pub mod link;
pub mod metrics;
pub mod report;
pub mod selection;
pub mod synth;

pub use cv::{evaluate, make_partitions, CvError, CvEvaluation, CvScheme, EvalOptions, Partition};
pub use dataset::{CovariateRole, Dataset, DatasetError};
pub use glm::{fit_irls, log_likelihood, predict_probabilities, FitConfig, FitError, FitResult};
pub use ingest::{binarize_response, load_csv, IngestConfig, IngestError};
pub use link::{LinkError, LinkSpec};
pub use metrics::{auc, confusion_matrix, ConfusionMatrix, Metric, MetricSet, MetricValue};
pub use selection::{rank_links, select_best, EvaluationTable, SelectionReport};
pub use synth::SyntheticModel;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/links.md")]
    mod links {}
    #[doc = include_str!("../../../book/src/fitting.md")]
    mod fitting {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/cross-validation.md")]
    mod cross_validation {}
    #[doc = include_str!("../../../book/src/selection.md")]
    mod selection {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    mod reproducibility {}
}
