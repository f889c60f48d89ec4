//! Evaluation grids, run manifests, serialized documents and text rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cv::{evaluate, CvEvaluation, CvScheme, EvalOptions};
use crate::dataset::Dataset;
use crate::ingest::IngestConfig;
use crate::link::LinkSpec;
use crate::metrics::{Metric, MetricSet, MetricValue, UnavailableReason};
use crate::selection::{Comparison, Discrepancy, EvaluationTable, RoutineResults, SelectionReport};

pub const EVALUATION_FORMAT: &str = "linkselect-evaluation/1";
pub const SELECTION_FORMAT: &str = "linkselect-selection/1";

/// Everything that determines the numbers in an evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub input: String,
    pub ingest: IngestConfig,
    pub links: Vec<LinkSpec>,
    pub schemes: Vec<CvScheme>,
    pub options: EvalOptions,
    pub tool_version: String,
}

/// Result of one (link, scheme) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellOutcome {
    Evaluated(CvEvaluation),
    Failed {
        link: LinkSpec,
        scheme: CvScheme,
        error: String,
    },
}

impl CellOutcome {
    pub fn is_failed(&self) -> bool {
        matches!(self, CellOutcome::Failed { .. })
    }
}

/// The (link, scheme) cells of a grid in scheme-major order.
pub fn grid_cells(links: &[LinkSpec], schemes: &[CvScheme]) -> Vec<(LinkSpec, CvScheme)> {
    schemes
        .iter()
        .flat_map(|&s| links.iter().map(move |&l| (l, s)))
        .collect()
}

/// Evaluates one cell; errors become [`CellOutcome::Failed`].
pub fn evaluate_cell(data: &Dataset, link: LinkSpec, scheme: CvScheme, options: &EvalOptions) -> CellOutcome {
    match evaluate(data, link, scheme, options) {
        Ok(e) => CellOutcome::Evaluated(e),
        Err(e) => CellOutcome::Failed {
            link,
            scheme,
            error: e.to_string(),
        },
    }
}

/// Evaluates every cell sequentially, in [`grid_cells`] order.
pub fn evaluate_grid(data: &Dataset, links: &[LinkSpec], schemes: &[CvScheme], options: &EvalOptions) -> Vec<CellOutcome> {
    grid_cells(links, schemes)
        .into_iter()
        .map(|(l, s)| evaluate_cell(data, l, s, options))
        .collect()
}

/// Builds the table from outcomes in [`grid_cells`] order.
pub fn assemble_table(links: &[LinkSpec], schemes: &[CvScheme], outcomes: &[CellOutcome]) -> EvaluationTable {
    assert_eq!(outcomes.len(), links.len() * schemes.len(), "one outcome per cell");
    let routines = schemes
        .iter()
        .zip(outcomes.chunks(links.len()))
        .map(|(scheme, chunk)| RoutineResults {
            routine: scheme.name(),
            heading: scheme.heading(),
            metrics: chunk
                .iter()
                .map(|o| match o {
                    CellOutcome::Evaluated(e) => e.metrics,
                    CellOutcome::Failed { .. } => MetricSet::unavailable(UnavailableReason::EvaluationFailed),
                })
                .collect(),
        })
        .collect();
    EvaluationTable {
        links: links.to_vec(),
        routines,
        comparison: Comparison::default(),
    }
}

/// Serialized output of an evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationDocument {
    pub format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
    pub table: EvaluationTable,
    #[serde(default)]
    pub cells: Vec<CellOutcome>,
}

impl EvaluationDocument {
    pub fn new(manifest: Option<RunManifest>, table: EvaluationTable, cells: Vec<CellOutcome>) -> Self {
        Self {
            format: EVALUATION_FORMAT.into(),
            manifest,
            table,
            cells,
        }
    }

    /// Schemes with at least one failed cell.
    pub fn failed_schemes(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for cell in &self.cells {
            if let CellOutcome::Failed { scheme, .. } = cell {
                let name = scheme.name();
                if !out.contains(&name) {
                    out.push(name);
                }
            }
        }
        out
    }
}

/// Serialized output of a selection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionDocument {
    pub format: String,
    /// Evaluation file the table came from, when not evaluated in-process.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
    pub report: SelectionReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discrepancies: Option<Vec<Discrepancy>>,
}

/// Pretty JSON with a trailing newline. Field order is fixed by the types,
/// so equal documents serialize to identical bytes.
pub fn to_json<T: Serialize>(doc: &T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(doc)?;
    s.push('\n');
    Ok(s)
}

/// Table cell text: five decimals, `-` when unavailable.
pub fn format_cell(value: MetricValue) -> String {
    match value {
        MetricValue::Value(v) => format!("{v:.5}"),
        MetricValue::Unavailable(_) => "-".into(),
    }
}

/// Renders one block per routine, rows E1–E4, one column per link.
pub fn render_table(table: &EvaluationTable, failed: &[String]) -> String {
    const FIRST: usize = 18;
    const COL: usize = 11;
    let mut out = String::new();
    for routine in &table.routines {
        let mut title = routine.heading.clone();
        if failed.contains(&routine.routine) {
            title.push_str("  [FAILED]");
        }
        let width = FIRST + COL * table.links.len();
        let _ = writeln!(out, "{title:^width$}");
        let _ = writeln!(out, "{}", "-".repeat(width));
        let _ = write!(out, "{:<FIRST$}", "Efficiency Measure");
        for link in &table.links {
            let _ = write!(out, "{:>COL$}", link.heading());
        }
        out.push('\n');
        for metric in Metric::ALL {
            let _ = write!(out, "{:<FIRST$}", metric.to_string());
            for set in &routine.metrics {
                let _ = write!(out, "{:>COL$}", format_cell(set.get(metric)));
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

fn names(links: &[LinkSpec]) -> String {
    if links.is_empty() {
        return "-".into();
    }
    links.iter().map(|l| l.name()).collect::<Vec<_>>().join(" = ")
}

/// Human-readable selection report with rank-count evidence.
pub fn render_selection(report: &SelectionReport, discrepancies: Option<&[Discrepancy]>) -> String {
    let mut out = String::new();
    for sel in &report.selections {
        let _ = writeln!(
            out,
            "{} ({}): best {}, runner-up {}",
            sel.metric,
            sel.metric.description(),
            names(&sel.best),
            names(&sel.runner_up)
        );
        let _ = writeln!(out, "  routines: {}", sel.routines_used.join(", "));
        if !sel.routines_skipped.is_empty() {
            let _ = writeln!(out, "  skipped:  {}", sel.routines_skipped.join(", "));
        }
        for group in &sel.ordering {
            for link in group {
                let st = sel.standings.iter().find(|s| s.link == *link).expect("standing per link");
                let counts: Vec<String> = st
                    .rank_counts
                    .iter()
                    .enumerate()
                    .map(|(r, c)| format!("#{}:{c}", r + 1))
                    .collect();
                let _ = writeln!(out, "  {:<10}{}", link.name(), counts.join(" "));
            }
        }
    }
    for m in &report.unavailable {
        let _ = writeln!(out, "{m} ({}): unavailable in every routine", m.description());
    }
    if let Some(d) = discrepancies {
        out.push('\n');
        if d.is_empty() {
            out.push_str("All expected conclusions reproduced.\n");
        } else {
            let _ = writeln!(out, "Discrepancies ({}):", d.len());
            for item in d {
                let _ = writeln!(out, "  {}", item.message);
                if let Some(note) = &item.expected.note {
                    let _ = writeln!(out, "    note: {note}");
                }
            }
        }
    }
    out
}
