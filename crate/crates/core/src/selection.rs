//! Ranking links within each routine and choosing the best link per metric.
//!
//! Within a routine, links get competition ("min") ranks: tied values share
//! the smallest rank and the next value's rank counts every strictly better
//! link. Across routines, the best link has the most rank-1 finishes; ties go
//! to the most rank-2 finishes, then rank-3, and so on. A tie that survives
//! every stage is reported as a tie set.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::link::LinkSpec;
use crate::metrics::{Metric, MetricSet, MetricValue};

/// Equality tolerance for freshly computed tables.
pub const LIVE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectionError {
    #[error("{0} is unavailable in every routine")]
    MetricUnavailable(Metric),
    #[error("table has no links")]
    NoLinks,
    #[error("need at least two values to rank, got {0}")]
    TooFewValues(usize),
    #[error("routine `{routine}` has {actual} entries for {expected} links")]
    RaggedTable {
        routine: String,
        expected: usize,
        actual: usize,
    },
    #[error("value {value} for {link} in routine `{routine}` lies outside [0, 1]")]
    OutOfRange {
        routine: String,
        link: LinkSpec,
        value: f64,
    },
    #[error("link {0} appears twice")]
    DuplicateLink(LinkSpec),
}

/// How two metric values are judged equal when ranking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// Exact comparison, for tables transcribed from printed decimals: equal
    /// decimal strings parse to equal doubles and distinct ones stay ordered.
    Exact,
    /// Values within the tolerance count as tied.
    Tolerance(f64),
}

impl Comparison {
    fn tolerance(self) -> f64 {
        match self {
            Comparison::Exact => 0.0,
            Comparison::Tolerance(t) => t,
        }
    }
}

impl Default for Comparison {
    fn default() -> Self {
        Comparison::Tolerance(LIVE_TOLERANCE)
    }
}

/// One routine's column block: a metric set per link, aligned with
/// [`EvaluationTable::links`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutineResults {
    pub routine: String,
    /// Display heading, e.g. `LPOCV 75-25`.
    pub heading: String,
    pub metrics: Vec<MetricSet>,
}

/// E1–E4 per (routine, link).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationTable {
    pub links: Vec<LinkSpec>,
    pub routines: Vec<RoutineResults>,
    #[serde(default)]
    pub comparison: Comparison,
}

impl EvaluationTable {
    pub fn validate(&self) -> Result<(), SelectionError> {
        if self.links.is_empty() {
            return Err(SelectionError::NoLinks);
        }
        let mut seen = BTreeSet::new();
        for &link in &self.links {
            if !seen.insert(link) {
                return Err(SelectionError::DuplicateLink(link));
            }
        }
        for r in &self.routines {
            if r.metrics.len() != self.links.len() {
                return Err(SelectionError::RaggedTable {
                    routine: r.routine.clone(),
                    expected: self.links.len(),
                    actual: r.metrics.len(),
                });
            }
            for (set, &link) in r.metrics.iter().zip(&self.links) {
                for metric in Metric::ALL {
                    if let MetricValue::Value(v) = set.get(metric) {
                        if !(0.0..=1.0).contains(&v) {
                            return Err(SelectionError::OutOfRange {
                                routine: r.routine.clone(),
                                link,
                                value: v,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Values of `metric` in `routine` for every link, if all are available.
    fn complete_row(&self, routine: &RoutineResults, metric: Metric) -> Option<Vec<f64>> {
        routine.metrics.iter().map(|m| m.get(metric).value()).collect()
    }
}

/// Competition ranks (1 = best) of `values`.
pub fn rank_links(values: &[f64], higher_is_better: bool, comparison: Comparison) -> Result<Vec<usize>, SelectionError> {
    if values.len() < 2 {
        return Err(SelectionError::TooFewValues(values.len()));
    }
    let tol = comparison.tolerance();
    Ok(values
        .iter()
        .map(|&v| {
            let better = values
                .iter()
                .filter(|&&other| {
                    if higher_is_better {
                        other - v > tol
                    } else {
                        v - other > tol
                    }
                })
                .count();
            better + 1
        })
        .collect())
}

/// Rank-count evidence for one link.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkStanding {
    pub link: LinkSpec,
    /// `rank_counts[r]` = number of routines in which the link had rank `r + 1`.
    pub rank_counts: Vec<usize>,
}

/// Selection outcome for one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSelection {
    pub metric: Metric,
    /// Routines that contributed ranks.
    pub routines_used: Vec<String>,
    /// Routines skipped because some link had no value.
    pub routines_skipped: Vec<String>,
    /// Ranks per contributing routine, aligned with the table's links.
    pub ranks: Vec<Vec<usize>>,
    /// Standings in table link order.
    pub standings: Vec<LinkStanding>,
    /// Links grouped into tie classes, best first.
    pub ordering: Vec<Vec<LinkSpec>>,
    pub best: Vec<LinkSpec>,
    pub runner_up: Vec<LinkSpec>,
}

/// Picks the best and runner-up links for `metric`.
pub fn select_best(table: &EvaluationTable, metric: Metric) -> Result<MetricSelection, SelectionError> {
    table.validate()?;
    let n_links = table.links.len();
    let mut routines_used = Vec::new();
    let mut routines_skipped = Vec::new();
    let mut ranks = Vec::new();
    let mut counts = vec![vec![0usize; n_links]; n_links];

    for routine in &table.routines {
        let Some(row) = table.complete_row(routine, metric) else {
            routines_skipped.push(routine.routine.clone());
            continue;
        };
        let r = if n_links == 1 {
            vec![1]
        } else {
            rank_links(&row, true, table.comparison)?
        };
        for (link_idx, &rank) in r.iter().enumerate() {
            counts[link_idx][rank - 1] += 1;
        }
        routines_used.push(routine.routine.clone());
        ranks.push(r);
    }
    if routines_used.is_empty() {
        return Err(SelectionError::MetricUnavailable(metric));
    }

    // Lexicographic comparison of count vectors (rank-1 first) is exactly the
    // staged tie-break; the sort is stable, and equal vectors form tie classes.
    let mut order: Vec<usize> = (0..n_links).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]));
    let mut ordering: Vec<Vec<LinkSpec>> = Vec::new();
    let mut prev: Option<&Vec<usize>> = None;
    for &i in &order {
        if prev == Some(&counts[i]) {
            ordering.last_mut().unwrap().push(table.links[i]);
        } else {
            ordering.push(vec![table.links[i]]);
        }
        prev = Some(&counts[i]);
    }
    for group in &mut ordering {
        group.sort();
    }

    Ok(MetricSelection {
        metric,
        routines_used,
        routines_skipped,
        ranks,
        standings: table
            .links
            .iter()
            .zip(counts)
            .map(|(&link, rank_counts)| LinkStanding { link, rank_counts })
            .collect(),
        best: ordering[0].clone(),
        runner_up: ordering.get(1).cloned().unwrap_or_default(),
        ordering,
    })
}

/// Selections for every metric that has at least one usable routine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub selections: Vec<MetricSelection>,
    /// Metrics that could not be ranked in any routine.
    pub unavailable: Vec<Metric>,
}

pub fn select_all(table: &EvaluationTable) -> Result<SelectionReport, SelectionError> {
    let mut selections = Vec::new();
    let mut unavailable = Vec::new();
    for metric in Metric::ALL {
        match select_best(table, metric) {
            Ok(s) => selections.push(s),
            Err(SelectionError::MetricUnavailable(m)) => unavailable.push(m),
            Err(e) => return Err(e),
        }
    }
    Ok(SelectionReport {
        selections,
        unavailable,
    })
}

/// A conclusion to check a report against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedConclusion {
    pub metric: Metric,
    pub best: Vec<LinkSpec>,
    /// Omitted when the conclusion names only a best (tie) set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runner_up: Option<Vec<LinkSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// A conclusion the counting rule does not reproduce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub metric: Metric,
    pub expected: ExpectedConclusion,
    pub actual_best: Vec<LinkSpec>,
    pub actual_runner_up: Vec<LinkSpec>,
    pub message: String,
}

fn link_set(links: &[LinkSpec]) -> BTreeSet<LinkSpec> {
    links.iter().copied().collect()
}

fn join(links: &[LinkSpec]) -> String {
    if links.is_empty() {
        return "(none)".into();
    }
    links.iter().map(|l| l.name()).collect::<Vec<_>>().join(" = ")
}

/// Compares `report` with `expected`; one entry per conclusion that differs.
pub fn discrepancies(report: &SelectionReport, expected: &[ExpectedConclusion]) -> Vec<Discrepancy> {
    let mut out = Vec::new();
    for exp in expected {
        let Some(sel) = report.selections.iter().find(|s| s.metric == exp.metric) else {
            out.push(Discrepancy {
                metric: exp.metric,
                expected: exp.clone(),
                actual_best: vec![],
                actual_runner_up: vec![],
                message: format!("{}: metric unavailable, expected best {}", exp.metric, join(&exp.best)),
            });
            continue;
        };
        let best_ok = link_set(&sel.best) == link_set(&exp.best);
        let runner_ok = exp
            .runner_up
            .as_ref()
            .is_none_or(|r| link_set(r) == link_set(&sel.runner_up));
        if best_ok && runner_ok {
            continue;
        }
        let expected_runner = exp
            .runner_up
            .as_ref()
            .map(|r| format!(", runner-up {}", join(r)))
            .unwrap_or_default();
        out.push(Discrepancy {
            metric: exp.metric,
            expected: exp.clone(),
            actual_best: sel.best.clone(),
            actual_runner_up: sel.runner_up.clone(),
            message: format!(
                "{}: expected best {}{}; rank-count rule gives best {}, runner-up {}",
                exp.metric,
                join(&exp.best),
                expected_runner,
                join(&sel.best),
                join(&sel.runner_up)
            ),
        });
    }
    out
}
